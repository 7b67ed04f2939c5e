//! Integrability diagnostics: the Bloch-sphere distance function, Benettin
//! Lyapunov estimates and the RWA validity scans.

use crate::bloch::{rotate_bloch, BlochVector};
use crate::fields::FieldSpec;
use crate::math::Mat2;
use crate::propagator::{
    propagate_unitary, refine_span_counted, rwa_solution, unitary_fixed_steps, Spinor, StepControl,
};
use crate::{as_f64, lit, Error, Result, Scalar};

/// Sampled distance D(t) between two trajectories evolved under the same field.
#[derive(Clone, Debug)]
pub struct DistanceSeries<T> {
    pub samples: Vec<(T, T)>,
    pub max_drift: T,
}

/// Finite-time, finite-separation approximant of the Lyapunov exponent.
#[derive(Clone, Debug)]
pub struct LyapunovEstimate<T> {
    pub lambda: T,
    pub horizon: T,
    pub initial_separation: T,
    pub renormalization_interval: T,
    /// Set when the horizon is too short (< 100 characteristic periods) for
    /// the estimate to mean much.
    pub short_horizon: bool,
}

/// One row of an RWA error scan.
#[derive(Clone, Copy, Debug)]
pub struct RwaScanRow<T> {
    pub b2t: T,
    pub t: T,
    /// ‖ψ_R(t) − ψ_NR(t)‖, phase sensitive.
    pub err: T,
    /// min_φ ‖e^{iφ}ψ_R − ψ_NR‖ = √(2 − 2|⟨ψ_R|ψ_NR⟩|).
    pub err_phase_insensitive: T,
}

#[derive(Clone, Debug)]
pub struct RwaErrorScan<T> {
    pub rows: Vec<RwaScanRow<T>>,
    pub max_err: T,
}

/// How far in time an RWA scan runs.
#[derive(Clone, Copy, Debug)]
pub enum HorizonMode<T> {
    /// Up to the given absolute time.
    FixedT(T),
    /// Up to c/B2, i.e. c times the averaging-theorem scale (1/(B2T))·T.
    ScaledT(T),
}

/// Per-interval propagators for a long run of equal-length spans of an
/// aperiodic field. The step-halving ladder runs on the first interval and
/// again every `REVERIFY_EVERY` intervals to track the required resolution;
/// in between the learned step count is reused directly. This is what makes
/// 10⁴-interval quasiperiodic scans affordable.
struct IntervalStepper<'a, T: Scalar> {
    spec: &'a FieldSpec<T>,
    ctrl: &'a StepControl<T>,
    n: u64,
    since_refine: u64,
}

impl<'a, T: Scalar> IntervalStepper<'a, T> {
    const REVERIFY_EVERY: u64 = 256;

    fn new(spec: &'a FieldSpec<T>, ctrl: &'a StepControl<T>) -> Self {
        Self { spec, ctrl, n: 0, since_refine: 0 }
    }

    fn unitary(&mut self, t0: T, t1: T) -> Result<Mat2<T>> {
        if self.n == 0 || self.since_refine >= Self::REVERIFY_EVERY {
            let (u, n) =
                refine_span_counted(self.spec, t0, t1, self.ctrl, as_f64(self.ctrl.tolerance))?;
            self.n = self.n.max(n);
            self.since_refine = 0;
            Ok(u)
        } else {
            self.since_refine += 1;
            Ok(unitary_fixed_steps(self.spec, t0, t1, self.n))
        }
    }
}

/// Euclidean distance on the Bloch sphere, D = ‖S1 − S2‖.
pub fn distance<T: Scalar>(s1: &BlochVector<T>, s2: &BlochVector<T>) -> T {
    s1.dist(s2)
}

/// Density-matrix form √(2 Tr(ρ1 − ρ2)²); equals `distance` for pure states.
pub fn distance_trace_form<T: Scalar>(rho1: &Mat2<T>, rho2: &Mat2<T>) -> T {
    let d = rho1.sub(rho2);
    let sq = d.mul(&d);
    (lit::<T>(2.0) * sq.trace().re).max(T::zero()).sqrt()
}

/// Evolve two states under the same field and sample D(t) once per
/// characteristic period. D(t) = D(0) is exact under unitary conjugation,
/// so `max_drift` is a roundoff budget.
pub fn distance_conservation_run<T: Scalar>(
    spec: &FieldSpec<T>,
    s1: &BlochVector<T>,
    s2: &BlochVector<T>,
    n_periods: u64,
    ctrl: &StepControl<T>,
) -> Result<DistanceSeries<T>> {
    s1.check_unit()?;
    s2.check_unit()?;
    let dt = spec.time_scale();
    let d0 = distance(s1, s2);
    let mut a = *s1;
    let mut b = *s2;
    let mut samples = Vec::with_capacity(n_periods as usize + 1);
    let mut max_drift = T::zero();
    samples.push((T::zero(), d0));
    let cached = if spec.is_periodic() {
        Some(propagate_unitary(spec, T::zero(), dt, ctrl)?)
    } else {
        None
    };
    let mut stepper = IntervalStepper::new(spec, ctrl);
    for k in 0..n_periods {
        let t0 = dt * lit::<T>(k as f64);
        let u = match &cached {
            Some(u) => *u,
            None => stepper.unitary(t0, t0 + dt)?,
        };
        a = rotate_bloch(&u, &a);
        b = rotate_bloch(&u, &b);
        let d = distance(&a, &b);
        let drift = (d - d0).abs();
        if drift > max_drift {
            max_drift = drift;
        }
        samples.push((t0 + dt, d));
    }
    Ok(DistanceSeries { samples, max_drift })
}

/// Benettin-style Lyapunov estimate: evolve a fiducial and a displaced
/// trajectory, accumulate ln(D/d0) at every renormalization and rescale the
/// displaced state back to separation d0 along the current difference
/// direction, re-projected onto the sphere.
///
/// For periodic fields the renormalization interval is snapped to the nearest
/// positive multiple of the drive period so the interval propagator can be
/// reused.
pub fn lyapunov_estimate<T: Scalar>(
    spec: &FieldSpec<T>,
    s0: &BlochVector<T>,
    d0: T,
    horizon: T,
    renorm_dt: T,
    ctrl: &StepControl<T>,
) -> Result<LyapunovEstimate<T>> {
    s0.check_unit()?;
    if d0 < lit::<T>(1e-9) || d0 > lit::<T>(1e-4) {
        return Err(Error::Domain(format!(
            "initial separation must be in [1e-9, 1e-4], got {}",
            as_f64(d0)
        )));
    }
    if !(horizon > renorm_dt) {
        return Err(Error::Domain("horizon must exceed the renormalization interval".into()));
    }
    let scale = spec.time_scale();
    let dt = match spec.period() {
        Some(t_per) => {
            let m = (renorm_dt / t_per).round().max(T::one());
            t_per * m
        }
        None => renorm_dt,
    };
    let short_horizon = horizon < lit::<T>(100.0) * scale;

    // deterministic tangent displacement: pick the coordinate axis least
    // aligned with S0, orthogonalize, push along it and re-project
    let v = s0.as_vec3();
    let axes = [
        crate::math::Vec3::new(T::one(), T::zero(), T::zero()),
        crate::math::Vec3::new(T::zero(), T::one(), T::zero()),
        crate::math::Vec3::new(T::zero(), T::zero(), T::one()),
    ];
    let mut best = axes[0];
    let mut best_dot = T::infinity();
    for ax in axes {
        let d = ax.dot(&v).abs();
        if d < best_dot {
            best_dot = d;
            best = ax;
        }
    }
    let tangent = best.sub(&v.scale(best.dot(&v))).normalized();
    let mut fiducial = *s0;
    let mut displaced = BlochVector::from_vec3(v.add(&tangent.scale(d0))).projected();
    let d_start = distance(&fiducial, &displaced);

    let cached = if spec.is_periodic() {
        Some(propagate_unitary(spec, T::zero(), dt, ctrl)?)
    } else {
        None
    };
    let n_intervals = as_f64(horizon / dt).floor() as u64;
    let mut stepper = IntervalStepper::new(spec, ctrl);
    let mut sum_log = T::zero();
    for k in 0..n_intervals {
        let t0 = dt * lit::<T>(k as f64);
        let u = match &cached {
            Some(u) => *u,
            None => stepper.unitary(t0, t0 + dt)?,
        };
        fiducial = rotate_bloch(&u, &fiducial);
        displaced = rotate_bloch(&u, &displaced);
        let d = distance(&fiducial, &displaced);
        sum_log = sum_log + (d / d_start).ln();
        // rescale back to separation d_start along the difference direction
        let diff = displaced.as_vec3().sub(&fiducial.as_vec3()).scale(d_start / d);
        displaced = BlochVector::from_vec3(fiducial.as_vec3().add(&diff)).projected();
    }
    let elapsed = dt * lit::<T>(n_intervals as f64);
    Ok(LyapunovEstimate {
        lambda: sum_log / elapsed,
        horizon: elapsed,
        initial_separation: d_start,
        renormalization_interval: dt,
        short_horizon,
    })
}

/// Scan ‖ψ_R(t) − ψ_NR(t)‖ over a time grid for the plane-polarized drive
/// NRxDrive(B2, B3, ω) against the RWA reference solution.
///
/// Intended at resonance ω = 2B3; off-resonance input needs
/// `allow_off_resonance`.
pub fn rwa_error_scan<T: Scalar>(
    b2: T,
    b3: T,
    omega: T,
    psi0: &Spinor<T>,
    mode: HorizonMode<T>,
    n_samples: usize,
    ctrl: &StepControl<T>,
    allow_off_resonance: bool,
) -> Result<RwaErrorScan<T>> {
    let resonance_residual = (omega - lit::<T>(2.0) * b3).abs();
    if resonance_residual > lit::<T>(1e-9) && !allow_off_resonance {
        return Err(Error::Config(format!(
            "off resonance (|omega - 2 B3| = {}); pass the override flag to scan anyway",
            as_f64(resonance_residual)
        )));
    }
    if n_samples < 2 {
        return Err(Error::Config("rwa scan needs at least 2 samples".into()));
    }
    let t_per = lit::<T>(2.0) * T::PI() / omega;
    let b2t = b2 * t_per;
    let t_max = match mode {
        HorizonMode::FixedT(t) => t,
        HorizonMode::ScaledT(c) => {
            if b2 == T::zero() {
                c * t_per
            } else {
                c / b2.abs()
            }
        }
    };
    let spec = FieldSpec::NRxDrive { b2, b3, omega };
    let dt = t_max / lit::<T>((n_samples - 1) as f64);
    // one fixed sub-step budget per sample segment, refined globally until the
    // final state stabilizes
    let mut rows = Vec::with_capacity(n_samples);
    let mut per_segment = ((as_f64(dt) / as_f64(spec.time_scale())) * ctrl.steps_per_period as f64)
        .ceil()
        .max(1.0) as u64;
    let mut prev_final: Option<Spinor<T>> = None;
    let mut refinements = 0;
    let mut achieved = f64::INFINITY;
    loop {
        rows.clear();
        let mut psi = *psi0;
        rows.push(eval_row(b2t, T::zero(), &rwa_solution(b2, omega, psi0, T::zero()), &psi));
        for j in 1..n_samples {
            let t0 = dt * lit::<T>((j - 1) as f64);
            let t1 = dt * lit::<T>(j as f64);
            let u = fixed_step_unitary(&spec, t0, t1, per_segment);
            psi = psi.apply(&u);
            rows.push(eval_row(b2t, t1, &rwa_solution(b2, omega, psi0, t1), &psi));
        }
        if let Some(prev) = prev_final {
            let diff = prev.dist(&psi);
            if diff <= ctrl.tolerance {
                break;
            }
            achieved = as_f64(diff);
        }
        prev_final = Some(psi);
        per_segment *= 2;
        refinements += 1;
        if refinements > ctrl.max_refinements {
            return Err(Error::Accuracy { achieved, requested: as_f64(ctrl.tolerance) });
        }
    }
    let mut max_err = T::zero();
    for r in &rows {
        if r.err > max_err {
            max_err = r.err;
        }
    }
    Ok(RwaErrorScan { rows, max_err })
}

fn eval_row<T: Scalar>(b2t: T, t: T, psi_r: &Spinor<T>, psi_nr: &Spinor<T>) -> RwaScanRow<T> {
    let err = psi_r.dist(psi_nr);
    let ov = psi_r.inner(psi_nr).norm();
    let err_pi = (lit::<T>(2.0) * (T::one() - ov)).max(T::zero()).sqrt();
    RwaScanRow { b2t, t, err, err_phase_insensitive: err_pi }
}

fn fixed_step_unitary<T: Scalar>(spec: &FieldSpec<T>, t0: T, t1: T, n: u64) -> Mat2<T> {
    let h = (t1 - t0) / lit::<T>(n as f64);
    let half = lit::<T>(0.5);
    let mut u = Mat2::identity();
    for j in 0..n {
        let tm = t0 + h * (lit::<T>(j as f64) + half);
        u = crate::propagator::su2_exponential(&crate::fields::evaluate_field(spec, tm), h).mul(&u);
    }
    u
}

/// Run the scan over a ladder of B2T values at fixed resonance ω = 2B3 and
/// fit the scaling exponent α of max-err against B2T in log-log.
pub fn rwa_scaling_exponent<T: Scalar>(
    b3: T,
    omega: T,
    ladder_b2t: &[T],
    psi0: &Spinor<T>,
    horizon_factor: T,
    n_samples: usize,
    ctrl: &StepControl<T>,
) -> Result<(Vec<(T, T)>, T)> {
    if ladder_b2t.len() < 2 {
        return Err(Error::Config("scaling fit needs at least two ladder points".into()));
    }
    let t_per = lit::<T>(2.0) * T::PI() / omega;
    let mut pts = Vec::with_capacity(ladder_b2t.len());
    for &b2t in ladder_b2t {
        let b2 = b2t / t_per;
        let scan = rwa_error_scan(
            b2,
            b3,
            omega,
            psi0,
            HorizonMode::ScaledT(horizon_factor),
            n_samples,
            ctrl,
            false,
        )?;
        pts.push((b2t, scan.max_err));
    }
    let slope = loglog_slope(&pts);
    Ok((pts, slope))
}

/// OLS slope of ln y against ln x.
pub fn loglog_slope<T: Scalar>(pts: &[(T, T)]) -> T {
    let n = lit::<T>(pts.len() as f64);
    let mut mx = T::zero();
    let mut my = T::zero();
    for (x, y) in pts {
        mx = mx + x.ln();
        my = my + y.ln();
    }
    mx = mx / n;
    my = my / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (x, y) in pts {
        let dx = x.ln() - mx;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * (y.ln() - my);
    }
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::bloch_from_canonical;
    use crate::bloch::CanonicalPoint;
    use crate::propagator::density_from_spinor;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut impl Rng) -> BlochVector<f64> {
        let q = rng.gen_range(-1.0..1.0);
        let p = rng.gen_range(-3.14..3.14);
        bloch_from_canonical(&CanonicalPoint::new(q, p))
    }

    fn random_spinor(rng: &mut impl Rng) -> Spinor<f64> {
        Spinor::new(
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        )
        .normalized()
    }

    #[test]
    fn distance_endpoints() {
        let s = BlochVector::new(0.0, 0.6, 0.8);
        assert_abs_diff_eq!(distance(&s, &s), 0.0, epsilon = 1e-15);
        let anti = BlochVector::new(0.0, -0.6, -0.8);
        assert_abs_diff_eq!(distance(&s, &anti), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn vector_and_trace_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let p1 = random_spinor(&mut rng);
            let p2 = random_spinor(&mut rng);
            let dv = distance(&p1.bloch(), &p2.bloch());
            let dt = distance_trace_form(&density_from_spinor(&p1), &density_from_spinor(&p2));
            assert!((dv - dt).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_conserved_periodic_and_quasiperiodic() {
        let specs: Vec<FieldSpec<f64>> = vec![
            FieldSpec::NRzDrive { b0: 1.0, b1: 1.5, omega: 3.0 },
            FieldSpec::Rotating { b0: 1.0, b1: 1.5, omega: 3.0 },
            FieldSpec::quasiperiodic_golden(1.0, 0.8, 0.5, 2.0),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for spec in &specs {
            let s1 = random_unit(&mut rng);
            let s2 = random_unit(&mut rng);
            let run = distance_conservation_run(spec, &s1, &s2, 100, &StepControl::default()).unwrap();
            assert!(run.max_drift < 1e-10, "drift {} for {spec:?}", run.max_drift);
        }
    }

    #[test]
    fn zero_distance_stays_zero() {
        let spec = FieldSpec::NRzDrive { b0: 1.0, b1: 1.5, omega: 3.0 };
        let s = BlochVector::new(0.6, 0.0, 0.8);
        let run = distance_conservation_run(&spec, &s, &s, 50, &StepControl::default()).unwrap();
        for (_, d) in run.samples {
            assert!(d < 1e-13);
        }
    }

    #[test]
    fn lyapunov_vanishes_for_constant_field() {
        let spec = FieldSpec::<f64>::Constant { bx: 0.0, by: 0.0, bz: 2.0 };
        let s0 = BlochVector::new(1.0, 0.0, 0.0);
        let est = lyapunov_estimate(&spec, &s0, 1e-8, 4000.0, 3.0, &StepControl::default()).unwrap();
        assert!(est.lambda.abs() < 1e-6, "lambda = {}", est.lambda);
        assert!(!est.short_horizon);
    }

    #[test]
    fn lyapunov_short_horizon_flagged() {
        let spec = FieldSpec::NRzDrive { b0: 1.0, b1: 1.5, omega: 3.0 };
        let s0 = BlochVector::new(0.6, 0.0, 0.8);
        let est = lyapunov_estimate(&spec, &s0, 1e-7, 20.0, 2.0, &StepControl::default()).unwrap();
        assert!(est.short_horizon);
    }

    #[test]
    fn lyapunov_rejects_bad_separation() {
        let spec = FieldSpec::Constant { bx: 0.0, by: 0.0, bz: 1.0 };
        let s0 = BlochVector::new(1.0, 0.0, 0.0);
        assert!(lyapunov_estimate(&spec, &s0, 1e-2, 100.0, 1.0, &StepControl::default()).is_err());
    }

    #[test]
    fn rwa_error_zero_at_zero_coupling() {
        let scan = rwa_error_scan(
            0.0,
            1.0,
            2.0,
            &Spinor::up(),
            HorizonMode::FixedT(20.0),
            50,
            &StepControl::default(),
            false,
        )
        .unwrap();
        assert!(scan.max_err < 1e-10, "max err {}", scan.max_err);
    }

    #[test]
    fn rwa_error_zero_at_t0() {
        let scan = rwa_error_scan(
            0.05,
            1.0,
            2.0,
            &Spinor::up(),
            HorizonMode::ScaledT(1.0),
            40,
            &StepControl::default(),
            false,
        )
        .unwrap();
        assert_abs_diff_eq!(scan.rows[0].err, 0.0, epsilon = 1e-15);
        for r in &scan.rows {
            assert!(r.err >= 0.0 && r.err <= 2.0 + 1e-12);
            assert!(r.err_phase_insensitive <= r.err + 1e-12);
        }
    }

    #[test]
    fn rwa_off_resonance_needs_override() {
        let r = rwa_error_scan(
            0.1,
            1.0,
            2.5,
            &Spinor::up(),
            HorizonMode::FixedT(5.0),
            10,
            &StepControl::default(),
            false,
        );
        assert!(r.is_err());
        let r = rwa_error_scan(
            0.1,
            1.0,
            2.5,
            &Spinor::up(),
            HorizonMode::FixedT(5.0),
            10,
            &StepControl::default(),
            true,
        );
        assert!(r.is_ok());
    }

    #[test]
    fn rwa_scaling_exponent_near_one() {
        let ladder = [0.2, 0.1, 0.05, 0.025];
        let (_pts, alpha) = rwa_scaling_exponent(
            1.0,
            2.0,
            &ladder,
            &Spinor::up(),
            1.0,
            200,
            &StepControl::default(),
        )
        .unwrap();
        assert!((0.8..1.2).contains(&alpha), "alpha = {alpha}");
    }
}
