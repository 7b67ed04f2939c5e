//! Detection and design of unitary NOT operations: overlap machinery, the
//! rotating-field resonance schedule, and the nested numerical search for
//! nonrotating-field NOT parameters.

use crate::bloch::CanonicalPoint;
use crate::fields::FieldSpec;
use crate::propagator::{propagate, propagate_unitary, su2_exponential, Spinor, StepControl};
use crate::stroboscope::{fit_gamma, strobe_trajectory};
use crate::{as_f64, lit, Error, Result, Scalar};

use num_complex::Complex;

/// One detected NOT event: ψ(t_not) orthogonal to ψ0 within the detection
/// threshold.
#[derive(Clone, Copy, Debug)]
pub struct NotEvent<T> {
    pub t_not: T,
    /// 1 − |⟨ψ0|ψ(t_not)⟩|².
    pub fidelity_to_orthogonal: T,
    pub initial: CanonicalPoint<T>,
}

impl<T: Scalar> NotEvent<T> {
    /// Residual overlap |⟨ψ0|ψ(t_not)⟩|² at the event.
    pub fn min_overlap_sq(&self) -> T {
        (T::one() - self.fidelity_to_orthogonal).max(T::zero())
    }
}

/// Parameters satisfying the resonance condition ν² = B0² + (B1 − ν/2)²
/// with ν = ω (rotating field) or ν = γ (nonrotating field).
#[derive(Clone, Debug)]
pub struct ResonanceSolution<T> {
    pub omega_drive: T,
    pub b0: T,
    pub b1: T,
    pub gamma: T,
    pub predicted_t_not: Vec<T>,
}

/// One outer iteration of the NR design search.
#[derive(Clone, Copy, Debug)]
pub struct SearchIteration<T> {
    pub b0: T,
    pub gamma: T,
    pub residual: T,
}

/// Fixed γ-fit protocol used inside the root-finder, so the outer residual
/// is a deterministic function of B0.
#[derive(Clone, Copy, Debug)]
pub struct GammaProtocol<T> {
    pub c0: CanonicalPoint<T>,
    pub n_periods: u64,
}

impl<T: Scalar> Default for GammaProtocol<T> {
    fn default() -> Self {
        Self { c0: CanonicalPoint::new(lit(0.5), T::zero()), n_periods: 300 }
    }
}

/// Both sides of the identity 2|⟨ψ1|ψ2⟩|² = 1 + S1·S2.
pub fn overlap_identity<T: Scalar>(psi1: &Spinor<T>, psi2: &Spinor<T>) -> (T, T) {
    let lhs = lit::<T>(2.0) * psi1.inner(psi2).norm_sqr();
    let rhs = T::one() + psi1.bloch().dot(&psi2.bloch());
    (lhs, rhs)
}

/// The chart state ψ = √((1−q)/2)|+⟩ + √((1+q)/2) e^{ip}|−⟩.
pub fn state_from_canonical<T: Scalar>(c: &CanonicalPoint<T>) -> Result<Spinor<T>> {
    if c.q.abs() > T::one() {
        return Err(Error::Domain(format!("q must be in [-1, 1], got {}", as_f64(c.q))));
    }
    let half = lit::<T>(0.5);
    let a = ((T::one() - c.q) * half).max(T::zero()).sqrt();
    let b = ((T::one() + c.q) * half).max(T::zero()).sqrt();
    Ok(Spinor::new(
        Complex::new(a, T::zero()),
        Complex::new(T::zero(), c.p).exp() * Complex::new(b, T::zero()),
    ))
}

fn resonance_residual<T: Scalar>(nu: T, b0: T, b1: T) -> T {
    let half = lit::<T>(0.5);
    nu * nu - b0 * b0 - (b1 - nu * half) * (b1 - nu * half)
}

/// NOT schedule for the rotating field at resonance ω² = B0² + (B1 − ω/2)²:
/// events at t_not = (2n+1)π/ω for the class {q0 = 0, p0 arbitrary}.
pub fn r_not_schedule<T: Scalar>(b0: T, b1: T, omega: T, n_events: usize) -> Result<ResonanceSolution<T>> {
    let r = resonance_residual(omega, b0, b1);
    if r.abs() > lit::<T>(1e-9) {
        return Err(Error::ResonanceViolation { residual: as_f64(r) });
    }
    Ok(ResonanceSolution {
        omega_drive: omega,
        b0,
        b1,
        gamma: omega,
        predicted_t_not: predicted_times(omega, n_events),
    })
}

fn predicted_times<T: Scalar>(omega: T, n_events: usize) -> Vec<T> {
    (0..n_events)
        .map(|n| lit::<T>((2 * n + 1) as f64) * T::PI() / omega)
        .collect()
}

/// Scan |⟨ψ0|ψ(t)⟩|² on a dense grid and refine every local minimum below
/// the threshold by golden-section search; events come back sorted in time.
pub fn detect_not<T: Scalar>(
    spec: &FieldSpec<T>,
    c0: &CanonicalPoint<T>,
    horizon: T,
    threshold: T,
    ctrl: &StepControl<T>,
) -> Result<Vec<NotEvent<T>>> {
    if !(threshold > T::zero() && threshold <= lit::<T>(0.05)) {
        return Err(Error::Domain(format!(
            "detection threshold must be in (0, 0.05], got {}",
            as_f64(threshold)
        )));
    }
    let psi0 = state_from_canonical(c0)?;
    let scale = spec.time_scale();
    // >= 200 samples per characteristic period
    let n_samples = ((as_f64(horizon / scale) * 200.0).ceil() as usize).max(200);
    let dt = horizon / lit::<T>(n_samples as f64);

    // incremental fixed-step sweep to locate candidate minima
    let sub = 4u64;
    let mut overlaps = Vec::with_capacity(n_samples + 1);
    let mut psi = psi0;
    overlaps.push(T::one());
    for j in 0..n_samples {
        let t0 = dt * lit::<T>(j as f64);
        let h = dt / lit::<T>(sub as f64);
        for m in 0..sub {
            let tm = t0 + h * (lit::<T>(m as f64) + lit::<T>(0.5));
            let b = crate::fields::evaluate_field(spec, tm);
            psi = psi.apply(&su2_exponential(&b, h));
        }
        overlaps.push(psi0.inner(&psi).norm_sqr());
    }

    let mut events = Vec::new();
    for j in 1..n_samples {
        if overlaps[j] <= threshold && overlaps[j] <= overlaps[j - 1] && overlaps[j] <= overlaps[j + 1] {
            let a = dt * lit::<T>((j - 1) as f64);
            let b = dt * lit::<T>((j + 1) as f64);
            // one full-accuracy propagation to the bracket start; the golden
            // search then only spans the (tiny) bracket per evaluation
            let psi_a = propagate(spec, &psi0, T::zero(), a, ctrl)?;
            let overlap_at = |t: T| -> Result<T> {
                let u = propagate_unitary(spec, a, t, ctrl)?;
                Ok(psi0.inner(&psi_a.apply(&u)).norm_sqr())
            };
            let (t_min, f_min) = golden_minimize(&overlap_at, a, b, lit::<T>(1e-10))?;
            if f_min <= threshold {
                // drop duplicates from adjacent grid triples refining to the
                // same minimum
                let dup = events
                    .iter()
                    .any(|e: &NotEvent<T>| (e.t_not - t_min).abs() < dt);
                if !dup {
                    events.push(NotEvent {
                        t_not: t_min,
                        fidelity_to_orthogonal: T::one() - f_min,
                        initial: *c0,
                    });
                }
            }
        }
    }
    Ok(events)
}

fn golden_minimize<T: Scalar, F: Fn(T) -> Result<T>>(
    f: &F,
    mut a: T,
    mut b: T,
    tol: T,
) -> Result<(T, T)> {
    let inv_phi = (lit::<T>(5.0).sqrt() - T::one()) / lit::<T>(2.0);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d)?;
        }
    }
    let t = (a + b) / lit::<T>(2.0);
    Ok((t, f(t)?))
}

/// Root-find the residual r(ν(B0)) = ν² − B0² − (B1 − ν/2)² over B0 by
/// bisection, with ν supplied per candidate B0.
pub fn resonance_search<T: Scalar, F: FnMut(T) -> Result<T>>(
    omega: T,
    b1: T,
    bracket: (T, T),
    mut nu_of_b0: F,
    log: &mut Vec<SearchIteration<T>>,
) -> Result<ResonanceSolution<T>> {
    let (mut lo, mut hi) = bracket;
    if !(hi > lo) {
        return Err(Error::Config("bracket must satisfy lo < hi".into()));
    }
    let r_tol = lit::<T>(1e-4);
    let w_tol = lit::<T>(1e-4);
    let mut eval = |b0: T, log: &mut Vec<SearchIteration<T>>| -> Result<(T, T)> {
        let nu = nu_of_b0(b0)?;
        let r = resonance_residual(nu, b0, b1);
        log.push(SearchIteration { b0, gamma: nu, residual: r });
        Ok((nu, r))
    };
    let (nu_lo, mut r_lo) = eval(lo, log)?;
    let (nu_hi, r_hi) = eval(hi, log)?;
    if r_lo == T::zero() {
        return Ok(solution(omega, lo, b1, nu_lo));
    }
    if r_hi == T::zero() {
        return Ok(solution(omega, hi, b1, nu_hi));
    }
    if (r_lo > T::zero()) == (r_hi > T::zero()) {
        return Err(Error::Bracketing {
            lo: as_f64(lo),
            hi: as_f64(hi),
            r_lo: as_f64(r_lo),
            r_hi: as_f64(r_hi),
        });
    }
    for _ in 0..200 {
        let mid = (lo + hi) / lit::<T>(2.0);
        let (nu_mid, r_mid) = eval(mid, log)?;
        if r_mid.abs() <= r_tol && (hi - lo) <= w_tol {
            return Ok(solution(omega, mid, b1, nu_mid));
        }
        if (r_mid > T::zero()) == (r_lo > T::zero()) {
            lo = mid;
            r_lo = r_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Accuracy { achieved: as_f64(hi - lo), requested: as_f64(w_tol) })
}

fn solution<T: Scalar>(omega: T, b0: T, b1: T, gamma: T) -> ResonanceSolution<T> {
    ResonanceSolution { omega_drive: omega, b0, b1, gamma, predicted_t_not: predicted_times(omega, 5) }
}

/// Numerically determine B0 for the nonrotating field NRzDrive(B0, B1, ω) so
/// that the fitted γ satisfies the resonance condition
/// γ² = B0² + (B1 − γ/2)².
pub fn nr_not_search<T: Scalar>(
    omega: T,
    b1: T,
    b0_bracket: (T, T),
    protocol: &GammaProtocol<T>,
    ctrl: &StepControl<T>,
) -> Result<(ResonanceSolution<T>, Vec<SearchIteration<T>>)> {
    let mut log = Vec::new();
    let sol = resonance_search(
        omega,
        b1,
        b0_bracket,
        |b0| {
            let spec = FieldSpec::NRzDrive { b0, b1, omega };
            let series = strobe_trajectory(&spec, &protocol.c0, protocol.n_periods, ctrl)?;
            Ok(fit_gamma(&series)?.gamma)
        },
        &mut log,
    )?;
    Ok((sol, log))
}
