//! Time-dependent drive fields B(t), the quantum Hamiltonian H(t) = −½ B·Σ
//! and the classical energy 𝓗(t) = −B·S.
//!
//! Amplitudes are in angular-frequency units (ħ = 1).

use crate::bloch::BlochVector;
use crate::math::{reduce_angle, Mat2, Vec3};
use crate::{as_f64, lit, Error, Result, Scalar};

/// Field axis a quasiperiodic component acts along.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// One cosine term of a quasiperiodic field: `amplitude · cos(frequency·t + phase)`
/// added directly to the component of B along `axis`. A zero frequency gives a
/// constant contribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QpComponent<T> {
    pub axis: Axis,
    pub amplitude: T,
    pub frequency: T,
    pub phase: T,
}

/// Declarative description of the drive field B(t).
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec<T> {
    /// B(t) = −2(B0 cos ωt, B0 sin ωt, B1): circularly polarized drive.
    Rotating { b0: T, b1: T, omega: T },
    /// B(t) = −2(B2 cos ωt, 0, B3): plane-polarized drive along x.
    NRxDrive { b2: T, b3: T, omega: T },
    /// B(t) = −2(B0, 0, B1 cos ωt): the x-drive rotated by π/2 about y,
    /// with the relabeling B3→B0, B2→−B1. Used for stroboscopic maps and
    /// NOT-gate design.
    NRzDrive { b0: T, b1: T, omega: T },
    /// Static field (Bx, By, Bz).
    Constant { bx: T, by: T, bz: T },
    /// Finite sum of cosine terms with independent frequencies and phases.
    Quasiperiodic { components: Vec<QpComponent<T>> },
}

impl<T: Scalar> FieldSpec<T> {
    /// Two-frequency quasiperiodic test instance: a constant x component and
    /// two z cosines with frequency ratio (1+√5)/2.
    pub fn quasiperiodic_golden(b0: T, b1a: T, b1b: T, omega: T) -> Self {
        let golden = (T::one() + lit::<T>(5.0).sqrt()) / lit::<T>(2.0);
        let m2 = lit::<T>(-2.0);
        FieldSpec::Quasiperiodic {
            components: vec![
                QpComponent { axis: Axis::X, amplitude: m2 * b0, frequency: T::zero(), phase: T::zero() },
                QpComponent { axis: Axis::Z, amplitude: m2 * b1a, frequency: omega, phase: T::zero() },
                QpComponent { axis: Axis::Z, amplitude: m2 * b1b, frequency: omega * golden, phase: T::zero() },
            ],
        }
    }

    /// Reject malformed parameter sets before any evaluation.
    pub fn validate(&self) -> Result<()> {
        let check_omega = |w: T| -> Result<()> {
            if w <= T::zero() || !w.is_finite() {
                return Err(Error::Config(format!("drive frequency must be positive, got {}", w)));
            }
            Ok(())
        };
        match self {
            FieldSpec::Rotating { omega, .. }
            | FieldSpec::NRxDrive { omega, .. }
            | FieldSpec::NRzDrive { omega, .. } => check_omega(*omega),
            FieldSpec::Constant { .. } => Ok(()),
            FieldSpec::Quasiperiodic { components } => {
                if components.is_empty() {
                    return Err(Error::Config("quasiperiodic field needs at least one component".into()));
                }
                for c in components {
                    if c.frequency < T::zero() || !c.frequency.is_finite() {
                        return Err(Error::Config(format!(
                            "quasiperiodic component frequency must be >= 0, got {}",
                            c.frequency
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Drive period T = 2π/ω for strictly periodic kinds.
    pub fn period(&self) -> Option<T> {
        match self {
            FieldSpec::Rotating { omega, .. }
            | FieldSpec::NRxDrive { omega, .. }
            | FieldSpec::NRzDrive { omega, .. } => Some(lit::<T>(2.0) * T::PI() / *omega),
            _ => None,
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.period().is_some()
    }

    /// Characteristic time scale used to pick integrator base steps:
    /// the drive period when one exists, 2π over the fastest component
    /// frequency for quasiperiodic fields, 2π/max(|B|, 1) for constants.
    pub fn time_scale(&self) -> T {
        let two_pi = lit::<T>(2.0) * T::PI();
        if let Some(t) = self.period() {
            return t;
        }
        match self {
            FieldSpec::Quasiperiodic { components } => {
                let mut wmax = T::zero();
                for c in components {
                    if c.frequency > wmax {
                        wmax = c.frequency;
                    }
                }
                if wmax > T::zero() {
                    two_pi / wmax
                } else {
                    two_pi
                }
            }
            FieldSpec::Constant { bx, by, bz } => {
                let b = Vec3::new(*bx, *by, *bz).norm();
                two_pi / b.max(T::one())
            }
            _ => unreachable!(),
        }
    }
}

/// Evaluate B(t). Pure; periodic kinds reduce the drive phase mod 2π first.
pub fn evaluate_field<T: Scalar>(spec: &FieldSpec<T>, t: T) -> Vec3<T> {
    let m2 = lit::<T>(-2.0);
    match spec {
        FieldSpec::Rotating { b0, b1, omega } => {
            let ph = reduce_angle(*omega * t);
            Vec3::new(m2 * *b0 * ph.cos(), m2 * *b0 * ph.sin(), m2 * *b1)
        }
        FieldSpec::NRxDrive { b2, b3, omega } => {
            let ph = reduce_angle(*omega * t);
            Vec3::new(m2 * *b2 * ph.cos(), T::zero(), m2 * *b3)
        }
        FieldSpec::NRzDrive { b0, b1, omega } => {
            let ph = reduce_angle(*omega * t);
            Vec3::new(m2 * *b0, T::zero(), m2 * *b1 * ph.cos())
        }
        FieldSpec::Constant { bx, by, bz } => Vec3::new(*bx, *by, *bz),
        FieldSpec::Quasiperiodic { components } => {
            let mut b = Vec3::zero();
            for c in components {
                let v = c.amplitude * reduce_angle(c.frequency * t + c.phase).cos();
                match c.axis {
                    Axis::X => b.x = b.x + v,
                    Axis::Y => b.y = b.y + v,
                    Axis::Z => b.z = b.z + v,
                }
            }
            b
        }
    }
}

/// H(t) = −½ B(t)·Σ as an explicit Hermitian traceless 2×2 matrix.
pub fn hamiltonian_matrix<T: Scalar>(spec: &FieldSpec<T>, t: T) -> Mat2<T> {
    let b = evaluate_field(spec, t);
    Mat2::pauli_dot(&b.scale(lit::<T>(-0.5)))
}

/// Classical energy 𝓗(t) = −B(t)·S of a unit Bloch vector.
pub fn classical_energy<T: Scalar>(spec: &FieldSpec<T>, t: T, s: &BlochVector<T>) -> Result<T> {
    let v = s.as_vec3();
    let n = v.norm();
    if (n - T::one()).abs() > lit::<T>(1e-8) {
        return Err(Error::Domain(format!(
            "classical_energy needs a unit Bloch vector, |S| = {}",
            as_f64(n)
        )));
    }
    Ok(-evaluate_field(spec, t).dot(&v))
}
