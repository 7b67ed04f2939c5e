//! Stroboscopic maps at t_k = 2πk/ω, the R-map contour law, and the linear
//! energy–coordinate fit that produces the effective NR frequency γ.
//!
//! One period propagator is computed per spec and iterated: the strobe
//! dynamics is exactly the monodromy map, and re-deriving (q, p) each period
//! keeps samples structurally on the sphere.

use crate::bloch::{bloch_from_canonical, canonical_energy, canonical_from_bloch, rotate_bloch, CanonicalPoint};
use crate::fields::FieldSpec;
use crate::propagator::{propagate_unitary, StepControl};
use crate::{as_f64, lit, Error, Result, Scalar};

/// One stroboscopic sample.
#[derive(Clone, Copy, Debug)]
pub struct StrobeSample<T> {
    pub k: u64,
    pub t: T,
    pub q: T,
    pub p: T,
    pub energy: T,
    /// True when the sample sits at a chart pole; p is gauge there.
    pub pole: bool,
}

/// Stroboscopic samples for one initial condition.
#[derive(Clone, Debug)]
pub struct StrobeSeries<T> {
    pub spec: FieldSpec<T>,
    pub initial: CanonicalPoint<T>,
    pub samples: Vec<StrobeSample<T>>,
}

impl<T: Scalar> StrobeSeries<T> {
    /// Number of distinct (q, p) points at the given tolerance; a count far
    /// below the sample count flags a rational resonance (finite orbit).
    pub fn distinct_points(&self, tol: T) -> usize {
        let mut pts: Vec<(T, T)> = Vec::with_capacity(self.samples.len());
        'outer: for s in &self.samples {
            for (q, p) in &pts {
                if (s.q - *q).abs() < tol && (s.p - *p).abs() < tol {
                    continue 'outer;
                }
            }
            pts.push((s.q, s.p));
        }
        pts.len()
    }

    /// Heuristic flag for a finite (periodic) orbit.
    pub fn suspected_periodic(&self, tol: T) -> bool {
        self.samples.len() >= 16 && self.distinct_points(tol) * 2 < self.samples.len()
    }
}

/// Result of the ordinary least-squares fit of H_k against q_k.
#[derive(Clone, Copy, Debug)]
pub struct GammaFit<T> {
    pub gamma: T,
    pub intercept: T,
    pub residual_rms: T,
    pub r_squared: T,
    pub n_points: usize,
}

/// Contour law in the (q, p) chart: the conserved R-map Hamiltonian of the
/// rotating field, or the empirical NR analogue with γ in place of ω.
#[derive(Clone, Copy, Debug)]
pub enum ContourLaw<T> {
    R { b0: T, b1: T, omega: T },
    Nr { b0: T, b1: T, gamma: T },
}

impl<T: Scalar> ContourLaw<T> {
    /// 2B0√(1−q²)cos p − 2(B1 − ν/2)q with ν = ω (R) or γ (NR).
    pub fn eval(&self, q: T, p: T) -> T {
        let (b0, b1, nu) = match *self {
            ContourLaw::R { b0, b1, omega } => (b0, b1, omega),
            ContourLaw::Nr { b0, b1, gamma } => (b0, b1, gamma),
        };
        let two = lit::<T>(2.0);
        let root = (T::one() - q * q).max(T::zero()).sqrt();
        two * b0 * root * p.cos() - two * (b1 - nu / two) * q
    }
}

/// Evolve one initial condition stroboscopically for `n_periods` drive
/// periods, attaching the chart energy at each strobe instant (where
/// B(t_k) = B(0)).
pub fn strobe_trajectory<T: Scalar>(
    spec: &FieldSpec<T>,
    c0: &CanonicalPoint<T>,
    n_periods: u64,
    ctrl: &StepControl<T>,
) -> Result<StrobeSeries<T>> {
    let t_per = spec
        .period()
        .ok_or_else(|| Error::Config("stroboscopic map needs a periodic field".into()))?;
    if n_periods < 1 {
        return Err(Error::Config("n_periods must be >= 1".into()));
    }
    if c0.q.abs() > T::one() {
        return Err(Error::Domain(format!("q0 must be in [-1, 1], got {}", as_f64(c0.q))));
    }
    let u_period = propagate_unitary(spec, T::zero(), t_per, ctrl)?;
    let mut s = bloch_from_canonical(c0);
    let mut samples = Vec::with_capacity(n_periods as usize + 1);
    for k in 0..=n_periods {
        let c = canonical_from_bloch(&s);
        samples.push(StrobeSample {
            k,
            // exact multiple of T, never an accumulated sum
            t: t_per * lit::<T>(k as f64),
            q: c.q,
            p: c.p,
            energy: canonical_energy(spec, T::zero(), &c),
            pole: c.at_pole(),
        });
        if k < n_periods {
            s = rotate_bloch(&u_period, &s);
        }
    }
    Ok(StrobeSeries { spec: spec.clone(), initial: *c0, samples })
}

/// Batch of strobe trajectories over a grid of initial conditions.
pub fn strobe_map<T: Scalar>(
    spec: &FieldSpec<T>,
    grid: &[CanonicalPoint<T>],
    n_periods: u64,
    ctrl: &StepControl<T>,
) -> Result<Vec<StrobeSeries<T>>> {
    grid.iter().map(|c0| strobe_trajectory(spec, c0, n_periods, ctrl)).collect()
}

/// Default map grid: q0 uniformly spaced on the p0 = 0 line.
pub fn default_grid<T: Scalar>(n: usize, p0: T) -> Vec<CanonicalPoint<T>> {
    let mut g = Vec::with_capacity(n);
    for i in 0..n {
        let frac = (lit::<T>(i as f64) + lit::<T>(0.5)) / lit::<T>(n as f64);
        let q0 = lit::<T>(-1.0) + lit::<T>(2.0) * frac;
        g.push(CanonicalPoint::new(q0, p0));
    }
    g
}

/// Ordinary least squares of H_k against q_k; gamma = −slope.
pub fn fit_gamma<T: Scalar>(series: &StrobeSeries<T>) -> Result<GammaFit<T>> {
    let n = series.samples.len();
    if n < 10 {
        return Err(Error::Config(format!("gamma fit needs at least 10 points, got {}", n)));
    }
    let nt = lit::<T>(n as f64);
    let mut mq = T::zero();
    let mut mh = T::zero();
    for s in &series.samples {
        mq = mq + s.q;
        mh = mh + s.energy;
    }
    mq = mq / nt;
    mh = mh / nt;
    let mut sqq = T::zero();
    let mut sqh = T::zero();
    let mut shh = T::zero();
    for s in &series.samples {
        let dq = s.q - mq;
        let dh = s.energy - mh;
        sqq = sqq + dq * dq;
        sqh = sqh + dq * dh;
        shh = shh + dh * dh;
    }
    let var_q = sqq / nt;
    if var_q < lit::<T>(1e-12) {
        return Err(Error::DegenerateFit { var_q: as_f64(var_q) });
    }
    let slope = sqh / sqq;
    let gamma = -slope;
    let intercept = mh - slope * mq;
    let mut ss_res = T::zero();
    for s in &series.samples {
        let r = s.energy - (intercept + slope * s.q);
        ss_res = ss_res + r * r;
    }
    let r_squared = if shh > T::zero() {
        (T::one() - ss_res / shh).max(T::zero()).min(T::one())
    } else {
        T::one()
    };
    Ok(GammaFit {
        gamma,
        intercept,
        residual_rms: (ss_res / nt).sqrt(),
        r_squared,
        n_points: n,
    })
}

/// RMS deviation of the strobe points from the contour through (q0, p0).
pub fn contour_residual<T: Scalar>(law: &ContourLaw<T>, series: &StrobeSeries<T>) -> T {
    let level = law.eval(series.initial.q, series.initial.p);
    if series.samples.is_empty() {
        return T::zero();
    }
    let mut ss = T::zero();
    for s in &series.samples {
        let d = law.eval(s.q, s.p) - level;
        ss = ss + d * d;
    }
    (ss / lit::<T>(series.samples.len() as f64)).sqrt()
}
