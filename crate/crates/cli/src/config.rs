//! Flat key=value run configuration: '#' comments, dotted namespaces,
//! fail-closed on unknown keys, duplicate keys rejected with both lines.

use std::collections::HashSet;
use std::path::PathBuf;

use twolevel::bloch::CanonicalPoint;
use twolevel::fields::{Axis, FieldSpec, QpComponent};
use twolevel::propagator::StepControl;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

type CResult<T> = Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Strobe,
    FitGamma,
    RwaScan,
    Lyapunov,
    NotDetect,
    NotSearch,
}

impl Command {
    pub fn parse(s: &str) -> CResult<Self> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "strobe" => Command::Strobe,
            "fit-gamma" => Command::FitGamma,
            "rwa-scan" => Command::RwaScan,
            "lyapunov" => Command::Lyapunov,
            "not-detect" => Command::NotDetect,
            "not-search" => Command::NotSearch,
            other => return Err(ConfigError(format!("unknown command '{other}'"))),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Strobe => "strobe",
            Command::FitGamma => "fit-gamma",
            Command::RwaScan => "rwa-scan",
            Command::Lyapunov => "lyapunov",
            Command::NotDetect => "not-detect",
            Command::NotSearch => "not-search",
        }
    }
}

#[derive(Clone, Debug)]
pub enum Params {
    Simulate { c0: CanonicalPoint<f64>, t_end: f64, samples: usize },
    Strobe { periods: u64, grid: GridSpec },
    FitGamma { periods: u64, c0: CanonicalPoint<f64> },
    RwaScan { b3: f64, omega: f64, ladder: Vec<f64>, horizon_factor: f64, samples: usize },
    Lyapunov { c0: CanonicalPoint<f64>, d0: f64, horizon_periods: f64, renorm_periods: f64 },
    NotDetect { p0: f64, q0_list: Vec<f64>, horizon_periods: f64, threshold: f64 },
    NotSearch { omega: f64, b1: f64, b0_min: f64, b0_max: f64, periods: u64, c0: CanonicalPoint<f64> },
}

#[derive(Clone, Debug)]
pub enum GridSpec {
    Single(CanonicalPoint<f64>),
    /// n initial conditions, uniform in q0 on the p0 line.
    Uniform { n: usize, p0: f64 },
    /// n random (q0, p0) draws from the run seed.
    Random { n: usize },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub field: Option<FieldSpec<f64>>,
    pub ctrl: StepControl<f64>,
    pub out: Option<PathBuf>,
    pub threads: usize,
    pub seed: u64,
    pub params: Params,
}

#[derive(Clone, Debug)]
pub struct RawPair {
    pub key: String,
    pub value: String,
    pub line: usize,
}

/// Parse key=value lines; rejects malformed lines and duplicate keys.
pub fn parse_pairs(text: &str) -> CResult<Vec<RawPair>> {
    let mut pairs: Vec<RawPair> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {line_no}: expected key=value, got '{line}'")))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError(format!("line {line_no}: empty key")));
        }
        if let Some(prev) = pairs.iter().find(|p| p.key == key) {
            return Err(ConfigError(format!(
                "duplicate key '{}' on lines {} and {}",
                key, prev.line, line_no
            )));
        }
        pairs.push(RawPair { key, value, line: line_no });
    }
    Ok(pairs)
}

/// Command-line `--key=value` override: replaces an existing pair or appends.
pub fn apply_override(pairs: &mut Vec<RawPair>, key: &str, value: &str) {
    if let Some(p) = pairs.iter_mut().find(|p| p.key == key) {
        p.value = value.to_string();
    } else {
        pairs.push(RawPair { key: key.to_string(), value: value.to_string(), line: 0 });
    }
}

struct Reader {
    pairs: Vec<RawPair>,
    used: HashSet<String>,
}

impl Reader {
    fn get(&mut self, key: &str) -> Option<(String, usize)> {
        let found = self.pairs.iter().find(|p| p.key == key)?;
        self.used.insert(key.to_string());
        Some((found.value.clone(), found.line))
    }

    fn f64(&mut self, key: &str) -> CResult<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("line {line}: key '{key}' needs a number, got '{v}'"))),
        }
    }

    fn f64_req(&mut self, key: &str) -> CResult<f64> {
        self.f64(key)?
            .ok_or_else(|| ConfigError(format!("missing required key '{key}'")))
    }

    fn u64(&mut self, key: &str) -> CResult<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ConfigError(format!("line {line}: key '{key}' needs an integer, got '{v}'"))),
        }
    }

    fn f64_list(&mut self, key: &str) -> CResult<Option<Vec<f64>>> {
        match self.get(key) {
            None => Ok(None),
            Some((v, line)) => {
                let mut out = Vec::new();
                for item in v.split(',') {
                    out.push(item.trim().parse::<f64>().map_err(|_| {
                        ConfigError(format!("line {line}: key '{key}' needs comma-separated numbers, got '{v}'"))
                    })?);
                }
                Ok(Some(out))
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        self.get(key).map(|(v, _)| v)
    }

    fn reject_unused(&self) -> CResult<()> {
        for p in &self.pairs {
            if !self.used.contains(&p.key) {
                return Err(ConfigError(format!("line {}: unknown key '{}'", p.line, p.key)));
            }
        }
        Ok(())
    }
}

fn parse_field(r: &mut Reader) -> CResult<FieldSpec<f64>> {
    let kind = r
        .string("field.kind")
        .ok_or_else(|| ConfigError("missing required key 'field.kind'".into()))?;
    let spec = match kind.as_str() {
        "Rotating" => FieldSpec::Rotating {
            b0: r.f64_req("field.B0")?,
            b1: r.f64_req("field.B1")?,
            omega: r.f64_req("field.omega")?,
        },
        "NRxDrive" => FieldSpec::NRxDrive {
            b2: r.f64_req("field.B2")?,
            b3: r.f64_req("field.B3")?,
            omega: r.f64_req("field.omega")?,
        },
        "NRzDrive" => FieldSpec::NRzDrive {
            b0: r.f64_req("field.B0")?,
            b1: r.f64_req("field.B1")?,
            omega: r.f64_req("field.omega")?,
        },
        "Constant" => FieldSpec::Constant {
            bx: r.f64_req("field.Bx")?,
            by: r.f64_req("field.By")?,
            bz: r.f64_req("field.Bz")?,
        },
        "Quasiperiodic" => {
            let mut components = Vec::new();
            for n in 1..=8 {
                let axis_key = format!("field.qp.{n}.axis");
                let Some(axis) = r.string(&axis_key) else { continue };
                let axis = match axis.as_str() {
                    "x" => Axis::X,
                    "y" => Axis::Y,
                    "z" => Axis::Z,
                    other => return Err(ConfigError(format!("'{axis_key}' must be x, y or z, got '{other}'"))),
                };
                components.push(QpComponent {
                    axis,
                    amplitude: r.f64_req(&format!("field.qp.{n}.amplitude"))?,
                    frequency: r.f64_req(&format!("field.qp.{n}.frequency"))?,
                    phase: r.f64(&format!("field.qp.{n}.phase"))?.unwrap_or(0.0),
                });
            }
            FieldSpec::Quasiperiodic { components }
        }
        other => return Err(ConfigError(format!("unknown field.kind '{other}'"))),
    };
    spec.validate()
        .map_err(|e| ConfigError(format!("invalid field: {e}")))?;
    Ok(spec)
}

fn parse_ctrl(r: &mut Reader) -> CResult<StepControl<f64>> {
    let mut ctrl = StepControl::<f64>::default();
    if let Some(s) = r.u64("integrator.steps_per_period")? {
        ctrl.steps_per_period = s as u32;
    }
    if let Some(t) = r.f64("integrator.tolerance")? {
        ctrl.tolerance = t;
    }
    if let Some(m) = r.u64("integrator.max_refinements")? {
        ctrl.max_refinements = m as u32;
    }
    ctrl.validate()
        .map_err(|e| ConfigError(format!("invalid integrator settings: {e}")))?;
    Ok(ctrl)
}

/// Build and fully validate a RunConfig from parsed pairs.
pub fn build(command: Command, pairs: Vec<RawPair>) -> CResult<RunConfig> {
    let mut r = Reader { pairs, used: HashSet::new() };

    if let Some((cmd, line)) = r.get("command") {
        let from_cfg = Command::parse(&cmd)
            .map_err(|e| ConfigError(format!("line {line}: {e}")))?;
        if from_cfg != command {
            return Err(ConfigError(format!(
                "line {line}: config command '{}' does not match CLI subcommand '{}'",
                from_cfg.name(),
                command.name()
            )));
        }
    }

    let ctrl = parse_ctrl(&mut r)?;
    let out = r.string("output").map(PathBuf::from);
    let seed = r.u64("seed")?.unwrap_or(0);

    let needs_field = matches!(
        command,
        Command::Simulate | Command::Strobe | Command::FitGamma | Command::Lyapunov | Command::NotDetect
    );
    let field = if needs_field { Some(parse_field(&mut r)?) } else { None };

    let params = match command {
        Command::Simulate => {
            let samples = r.u64("sim.samples")?.unwrap_or(1000) as usize;
            let t_end = r.f64_req("sim.t_end")?;
            if !(t_end > 0.0) {
                return Err(ConfigError("sim.t_end must be positive".into()));
            }
            if samples < 2 {
                return Err(ConfigError("sim.samples must be >= 2".into()));
            }
            Params::Simulate {
                c0: CanonicalPoint::new(r.f64_req("sim.q0")?, r.f64_req("sim.p0")?),
                t_end,
                samples,
            }
        }
        Command::Strobe => {
            let periods = r.u64("strobe.periods")?.unwrap_or(500);
            if periods < 1 {
                return Err(ConfigError("strobe.periods must be >= 1".into()));
            }
            let grid = if let Some(n) = r.u64("strobe.grid_n")? {
                let kind = r.string("strobe.grid_kind").unwrap_or_else(|| "uniform".into());
                match kind.as_str() {
                    "uniform" => GridSpec::Uniform {
                        n: n as usize,
                        p0: r.f64("strobe.grid_p0")?.unwrap_or(0.0),
                    },
                    "random" => GridSpec::Random { n: n as usize },
                    other => return Err(ConfigError(format!("strobe.grid_kind must be uniform or random, got '{other}'"))),
                }
            } else {
                GridSpec::Single(CanonicalPoint::new(
                    r.f64_req("strobe.q0")?,
                    r.f64("strobe.p0")?.unwrap_or(0.0),
                ))
            };
            Params::Strobe { periods, grid }
        }
        Command::FitGamma => {
            let periods = r.u64("strobe.periods")?.unwrap_or(500);
            if periods < 10 {
                return Err(ConfigError("strobe.periods must be >= 10 for a gamma fit".into()));
            }
            Params::FitGamma {
                periods,
                c0: CanonicalPoint::new(
                    r.f64("strobe.q0")?.unwrap_or(0.5),
                    r.f64("strobe.p0")?.unwrap_or(0.0),
                ),
            }
        }
        Command::RwaScan => {
            let omega = r.f64_req("rwa.omega")?;
            if !(omega > 0.0) {
                return Err(ConfigError("rwa.omega must be positive".into()));
            }
            let ladder = r
                .f64_list("rwa.ladder")?
                .unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]);
            if ladder.len() < 2 {
                return Err(ConfigError("rwa.ladder needs at least two B2T values".into()));
            }
            let samples = r.u64("rwa.samples")?.unwrap_or(200) as usize;
            if samples < 2 {
                return Err(ConfigError("rwa.samples must be >= 2".into()));
            }
            Params::RwaScan {
                b3: r.f64("rwa.B3")?.unwrap_or(omega / 2.0),
                omega,
                ladder,
                horizon_factor: r.f64("rwa.horizon_factor")?.unwrap_or(1.0),
                samples,
            }
        }
        Command::Lyapunov => {
            let d0 = r.f64("lyap.d0")?.unwrap_or(1e-8);
            if !(1e-9..=1e-4).contains(&d0) {
                return Err(ConfigError("lyap.d0 must be in [1e-9, 1e-4]".into()));
            }
            let horizon_periods = r.f64("lyap.horizon_periods")?.unwrap_or(10_000.0);
            let renorm_periods = r.f64("lyap.renorm_periods")?.unwrap_or(1.0);
            if !(horizon_periods > renorm_periods && renorm_periods > 0.0) {
                return Err(ConfigError("lyap horizon must exceed the renormalization interval".into()));
            }
            Params::Lyapunov {
                c0: CanonicalPoint::new(
                    r.f64("lyap.q0")?.unwrap_or(0.5),
                    r.f64("lyap.p0")?.unwrap_or(0.0),
                ),
                d0,
                horizon_periods,
                renorm_periods,
            }
        }
        Command::NotDetect => {
            let threshold = r.f64("not.threshold")?.unwrap_or(1e-3);
            if !(threshold > 0.0 && threshold <= 0.05) {
                return Err(ConfigError("not.threshold must be in (0, 0.05]".into()));
            }
            Params::NotDetect {
                p0: r.f64("not.p0")?.unwrap_or(0.0),
                q0_list: r.f64_list("not.q0")?.unwrap_or_else(|| vec![0.0]),
                horizon_periods: r.f64("not.horizon_periods")?.unwrap_or(4.0),
                threshold,
            }
        }
        Command::NotSearch => {
            let b0_min = r.f64("search.B0_min")?.unwrap_or(0.5);
            let b0_max = r.f64("search.B0_max")?.unwrap_or(2.0);
            if !(b0_min < b0_max) {
                return Err(ConfigError("search.B0_min must be below search.B0_max".into()));
            }
            let omega = r.f64_req("search.omega")?;
            if !(omega > 0.0) {
                return Err(ConfigError("search.omega must be positive".into()));
            }
            let periods = r.u64("search.periods")?.unwrap_or(300);
            if periods < 10 {
                return Err(ConfigError("search.periods must be >= 10".into()));
            }
            Params::NotSearch {
                omega,
                b1: r.f64_req("search.B1")?,
                b0_min,
                b0_max,
                periods,
                c0: CanonicalPoint::new(
                    r.f64("search.q0")?.unwrap_or(0.5),
                    r.f64("search.p0")?.unwrap_or(0.0),
                ),
            }
        }
    };

    r.reject_unused()?;

    Ok(RunConfig {
        command,
        field,
        ctrl,
        out,
        threads: 1,
        seed,
        params,
    })
}
