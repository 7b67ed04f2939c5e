//! Pipeline execution: one function per subcommand, all writing CSV/report
//! output atomically and returning a one-line summary for stdout.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twolevel::analysis::{loglog_slope, lyapunov_estimate, rwa_error_scan, HorizonMode};
use twolevel::bloch::{bloch_from_canonical, CanonicalPoint};
use twolevel::fields::classical_energy;
use twolevel::notgate::{detect_not, nr_not_search, state_from_canonical, GammaProtocol};
use twolevel::propagator::propagate;
use twolevel::stroboscope::{default_grid, fit_gamma, strobe_trajectory};
use twolevel::Error as CoreError;

use crate::config::{Command, GridSpec, Params, RunConfig};
use crate::output::{fmt_f64, write_atomic};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numeric(m) | CliError::Io(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::Domain(_) => CliError::Config(e.to_string()),
            CoreError::Accuracy { .. }
            | CoreError::DegenerateFit { .. }
            | CoreError::ResonanceViolation { .. }
            | CoreError::Bracketing { .. } => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(format!("I/O error: {e}"))
    }
}

fn default_out(cfg: &RunConfig) -> PathBuf {
    let name = match cfg.command {
        Command::Simulate => "trajectory.csv",
        Command::Strobe => "strobe_map.csv",
        Command::FitGamma => "gamma_fit.txt",
        Command::RwaScan => "rwa_scan.csv",
        Command::Lyapunov => "lyapunov.csv",
        Command::NotDetect => "not_events.csv",
        Command::NotSearch => "not_search.csv",
    };
    PathBuf::from(name)
}

/// Execute a validated run configuration; returns the one-line summary.
pub fn execute(cfg: &RunConfig) -> Result<String, CliError> {
    let out = cfg.out.clone().unwrap_or_else(|| default_out(cfg));
    match &cfg.params {
        Params::Simulate { c0, t_end, samples } => {
            let spec = cfg.field.as_ref().expect("validated");
            let mut psi = state_from_canonical(c0)?;
            let mut csv = String::from(
                "t,re_c_plus,im_c_plus,re_c_minus,im_c_minus,sx,sy,sz,energy\n",
            );
            let dt = t_end / (*samples as f64 - 1.0);
            let mut max_drift: f64 = 0.0;
            for j in 0..*samples {
                let t = dt * j as f64;
                if j > 0 {
                    psi = propagate(spec, &psi, dt * (j as f64 - 1.0), t, &cfg.ctrl)?;
                }
                let s = psi.bloch();
                let energy = classical_energy(spec, t, &s.projected())?;
                max_drift = max_drift.max((psi.norm() - 1.0).abs());
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    fmt_f64(t),
                    fmt_f64(psi.c_plus.re),
                    fmt_f64(psi.c_plus.im),
                    fmt_f64(psi.c_minus.re),
                    fmt_f64(psi.c_minus.im),
                    fmt_f64(s.sx),
                    fmt_f64(s.sy),
                    fmt_f64(s.sz),
                    fmt_f64(energy),
                ));
            }
            write_atomic(&out, &csv)?;
            Ok(format!(
                "simulate: {} samples to t={} written to {}; max norm drift {:.2e}",
                samples,
                t_end,
                out.display(),
                max_drift
            ))
        }

        Params::Strobe { periods, grid } => {
            let spec = cfg.field.as_ref().expect("validated");
            let grid_points: Vec<CanonicalPoint<f64>> = match grid {
                GridSpec::Single(c0) => vec![*c0],
                GridSpec::Uniform { n, p0 } => default_grid(*n, *p0),
                GridSpec::Random { n } => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                    (0..*n)
                        .map(|_| {
                            CanonicalPoint::new(
                                rng.gen_range(-0.95..0.95),
                                rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
                            )
                        })
                        .collect()
                }
            };
            let series = parallel_map(cfg.threads, &grid_points, |c0| {
                strobe_trajectory(spec, c0, *periods, &cfg.ctrl)
            })?;
            let mut csv = String::from("series_id,k,q,p,H\n");
            let mut n_points = 0usize;
            for (id, s) in series.iter().enumerate() {
                for smp in &s.samples {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        id,
                        smp.k,
                        fmt_f64(smp.q),
                        fmt_f64(smp.p),
                        fmt_f64(smp.energy),
                    ));
                    n_points += 1;
                }
            }
            write_atomic(&out, &csv)?;
            Ok(format!(
                "strobe: {} series, {} points written to {}",
                series.len(),
                n_points,
                out.display()
            ))
        }

        Params::FitGamma { periods, c0 } => {
            let spec = cfg.field.as_ref().expect("validated");
            let series = strobe_trajectory(spec, c0, *periods, &cfg.ctrl)?;
            let fit = fit_gamma(&series)?;
            let report = format!(
                "gamma fit over {} strobe points\n\
                 initial (q0, p0) = ({}, {})\n\
                 gamma        = {}\n\
                 intercept    = {}\n\
                 r_squared    = {}\n\
                 residual_rms = {}\n",
                fit.n_points,
                fmt_f64(c0.q),
                fmt_f64(c0.p),
                fmt_f64(fit.gamma),
                fmt_f64(fit.intercept),
                fmt_f64(fit.r_squared),
                fmt_f64(fit.residual_rms),
            );
            write_atomic(&out, &report)?;
            Ok(format!(
                "fit-gamma: gamma={:.6} r2={:.6} written to {}",
                fit.gamma,
                fit.r_squared,
                out.display()
            ))
        }

        Params::RwaScan { b3, omega, ladder, horizon_factor, samples } => {
            let psi0 = twolevel::propagator::Spinor::up();
            let t_per = 2.0 * std::f64::consts::PI / omega;
            let mut csv = String::from("B2T,t,err,err_phase_insensitive\n");
            let mut pts = Vec::new();
            for &b2t in ladder {
                let b2 = b2t / t_per;
                let scan = rwa_error_scan(
                    b2,
                    *b3,
                    *omega,
                    &psi0,
                    HorizonMode::ScaledT(*horizon_factor),
                    *samples,
                    &cfg.ctrl,
                    false,
                )?;
                for row in &scan.rows {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt_f64(row.b2t),
                        fmt_f64(row.t),
                        fmt_f64(row.err),
                        fmt_f64(row.err_phase_insensitive),
                    ));
                }
                pts.push((b2t, scan.max_err));
            }
            let alpha = loglog_slope(&pts);
            write_atomic(&out, &csv)?;
            Ok(format!(
                "rwa-scan: {} ladder points, fitted exponent alpha={:.4}, written to {}",
                ladder.len(),
                alpha,
                out.display()
            ))
        }

        Params::Lyapunov { c0, d0, horizon_periods, renorm_periods } => {
            let spec = cfg.field.as_ref().expect("validated");
            let scale = spec.time_scale();
            let s0 = bloch_from_canonical(c0);
            let est = lyapunov_estimate(
                spec,
                &s0,
                *d0,
                horizon_periods * scale,
                renorm_periods * scale,
                &cfg.ctrl,
            )?;
            let csv = format!(
                "horizon,d0,lambda\n{},{},{}\n",
                fmt_f64(est.horizon),
                fmt_f64(est.initial_separation),
                fmt_f64(est.lambda),
            );
            write_atomic(&out, &csv)?;
            let warn = if est.short_horizon { " (warning: short horizon)" } else { "" };
            Ok(format!(
                "lyapunov: lambda={:.3e} over horizon {:.1}{}; written to {}",
                est.lambda,
                est.horizon,
                warn,
                out.display()
            ))
        }

        Params::NotDetect { p0, q0_list, horizon_periods, threshold } => {
            let spec = cfg.field.as_ref().expect("validated");
            let horizon = horizon_periods * spec.time_scale();
            let inits: Vec<CanonicalPoint<f64>> =
                q0_list.iter().map(|&q0| CanonicalPoint::new(q0, *p0)).collect();
            let per_init = parallel_map(cfg.threads, &inits, |c0| {
                detect_not(spec, c0, horizon, *threshold, &cfg.ctrl)
            })?;
            let mut csv = String::from("q0,p0,t_not,min_overlap\n");
            let mut first: Option<f64> = None;
            let mut n_events = 0;
            for events in &per_init {
                for e in events {
                    csv.push_str(&format!(
                        "{},{},{},{}\n",
                        fmt_f64(e.initial.q),
                        fmt_f64(e.initial.p),
                        fmt_f64(e.t_not),
                        fmt_f64(e.min_overlap_sq()),
                    ));
                    n_events += 1;
                    first = Some(match first {
                        Some(f) => f.min(e.t_not),
                        None => e.t_not,
                    });
                }
            }
            write_atomic(&out, &csv)?;
            match first {
                Some(t) => Ok(format!(
                    "not-detect: {} events, first t_not={:.6}; written to {}",
                    n_events,
                    t,
                    out.display()
                )),
                None => Ok(format!("not-detect: no events within horizon; written to {}", out.display())),
            }
        }

        Params::NotSearch { omega, b1, b0_min, b0_max, periods, c0 } => {
            let protocol = GammaProtocol { c0: *c0, n_periods: *periods };
            let (sol, log) = nr_not_search(*omega, *b1, (*b0_min, *b0_max), &protocol, &cfg.ctrl)?;
            let mut csv = String::from("iter,B0,gamma,residual\n");
            for (i, it) in log.iter().enumerate() {
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    i,
                    fmt_f64(it.b0),
                    fmt_f64(it.gamma),
                    fmt_f64(it.residual),
                ));
            }
            write_atomic(&out, &csv)?;
            Ok(format!(
                "not-search: B0={:.4} gamma={:.4} (first predicted t_not={:.6}); iterations written to {}",
                sol.b0,
                sol.gamma,
                sol.predicted_t_not[0],
                out.display()
            ))
        }
    }
}

/// Map a pure fallible function over items on up to `threads` OS threads,
/// preserving input order.
fn parallel_map<I, O, F>(threads: usize, items: &[I], f: F) -> Result<Vec<O>, CliError>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> twolevel::Result<O> + Sync,
{
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(|i| f(i).map_err(CliError::from)).collect();
    }
    let n = items.len();
    let mut results: Vec<Option<twolevel::Result<O>>> = (0..n).map(|_| None).collect();
    let counter = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut results);
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let idx = counter.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if idx >= n {
                    break;
                }
                let r = f(&items[idx]);
                slots.lock().unwrap()[idx] = Some(r);
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("worker filled slot").map_err(CliError::from))
        .collect()
}
