//! Classical gyromagnet picture: Bloch-vector evolution, the canonical
//! (q, p) chart and its energy function.
//!
//! The primary evolution path is unitary conjugation of the density matrix,
//! which conserves |S| exactly and agrees with the quantum dynamics by
//! construction. The chart is display/map machinery only: its equations of
//! motion lose the Lipschitz property at q = ±1, so nothing integrates them
//! directly.

use crate::fields::{evaluate_field, FieldSpec};
use crate::math::Vec3;
use crate::propagator::{bloch_from_density, propagate_unitary, Spinor, StepControl};
use crate::{as_f64, lit, Error, Result, Scalar};

/// Unit vector on the Bloch sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector<T> {
    pub sx: T,
    pub sy: T,
    pub sz: T,
}

impl<T: Scalar> BlochVector<T> {
    pub fn new(sx: T, sy: T, sz: T) -> Self {
        Self { sx, sy, sz }
    }

    pub fn from_vec3(v: Vec3<T>) -> Self {
        Self::new(v.x, v.y, v.z)
    }

    pub fn as_vec3(&self) -> Vec3<T> {
        Vec3::new(self.sx, self.sy, self.sz)
    }

    pub fn norm(&self) -> T {
        self.as_vec3().norm()
    }

    pub fn dot(&self, o: &Self) -> T {
        self.as_vec3().dot(&o.as_vec3())
    }

    /// Euclidean distance to another Bloch vector.
    pub fn dist(&self, o: &Self) -> T {
        self.as_vec3().sub(&o.as_vec3()).norm()
    }

    /// Nearest point on the unit sphere.
    pub fn projected(&self) -> Self {
        Self::from_vec3(self.as_vec3().normalized())
    }

    pub fn check_unit(&self) -> Result<()> {
        let n = self.norm();
        if (n - T::one()).abs() > lit::<T>(1e-8) {
            return Err(Error::Domain(format!("Bloch vector not on the sphere: |S| = {}", as_f64(n))));
        }
        Ok(())
    }
}

/// Chart coordinates with q ∈ [−1, 1], p ∈ (−π, π]:
/// S = (√(1−q²) cos p, √(1−q²) sin p, −q). At the poles q = ±1 the angle is
/// gauge; this crate fixes p = 0 there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalPoint<T> {
    pub q: T,
    pub p: T,
}

impl<T: Scalar> CanonicalPoint<T> {
    pub fn new(q: T, p: T) -> Self {
        Self { q, p }
    }

    /// True when the point sits at a chart pole (|q| = 1 within tolerance).
    pub fn at_pole(&self) -> bool {
        (T::one() - self.q * self.q) < lit::<T>(1e-12)
    }
}

/// Chart map S → (q, p); p := 0 at the poles.
pub fn canonical_from_bloch<T: Scalar>(s: &BlochVector<T>) -> CanonicalPoint<T> {
    let q = -s.sz;
    let planar = s.sx * s.sx + s.sy * s.sy;
    let p = if planar < lit::<T>(1e-24) {
        T::zero()
    } else {
        let mut p = s.sy.atan2(s.sx);
        if p <= -T::PI() {
            p = p + lit::<T>(2.0) * T::PI();
        }
        p
    };
    CanonicalPoint::new(q, p)
}

/// Inverse chart map (q, p) → S.
pub fn bloch_from_canonical<T: Scalar>(c: &CanonicalPoint<T>) -> BlochVector<T> {
    let r = (T::one() - c.q * c.q).max(T::zero()).sqrt();
    BlochVector::new(r * c.p.cos(), r * c.p.sin(), -c.q)
}

/// Chart energy 𝓗 = −(Bx cos p + By sin p)√(1−q²) + Bz q; identical to
/// `fields::classical_energy` through the chart (Sz = −q, so the −B·S
/// z-term comes out with a plus sign).
pub fn canonical_energy<T: Scalar>(spec: &FieldSpec<T>, t: T, c: &CanonicalPoint<T>) -> T {
    let b = evaluate_field(spec, t);
    let r = (T::one() - c.q * c.q).max(T::zero()).sqrt();
    -(b.x * c.p.cos() + b.y * c.p.sin()) * r + b.z * c.q
}

/// Evolve S by conjugating ρ = ½(1 + S·Σ) with the spinor propagator.
pub fn evolve_bloch<T: Scalar>(
    spec: &FieldSpec<T>,
    s0: &BlochVector<T>,
    t0: T,
    t1: T,
    ctrl: &StepControl<T>,
) -> Result<BlochVector<T>> {
    s0.check_unit()?;
    let u = propagate_unitary(spec, t0, t1, ctrl)?;
    Ok(rotate_bloch(&u, s0))
}

/// Apply a one-step (or one-period) unitary to a Bloch vector:
/// S_i ↦ Tr(U ρ U† σ_i) with ρ = ½(1 + S·Σ).
pub fn rotate_bloch<T: Scalar>(u: &crate::math::Mat2<T>, s: &BlochVector<T>) -> BlochVector<T> {
    let half = lit::<T>(0.5);
    let rho = crate::math::Mat2::identity()
        .add(&crate::math::Mat2::pauli_dot(&s.as_vec3()))
        .scale(num_complex::Complex::new(half, T::zero()));
    let rho_t = u.mul(&rho).mul(&u.adjoint());
    bloch_from_density(&rho_t)
}

/// Bloch vector of a spinor (convenience re-statement of ⟨Σ⟩).
pub fn bloch_of<T: Scalar>(psi: &Spinor<T>) -> BlochVector<T> {
    psi.bloch()
}

/// Reference RK4 integration of dS/dt = S × B at a fixed step.
///
/// Test oracle only: not structure preserving, so its accuracy reflects
/// plain truncation error rather than the conjugation engine's.
pub fn rk4_reference<T: Scalar>(
    spec: &FieldSpec<T>,
    s0: &BlochVector<T>,
    t0: T,
    t1: T,
    n_steps: u64,
) -> BlochVector<T> {
    let h = (t1 - t0) / lit::<T>(n_steps as f64);
    let half = lit::<T>(0.5);
    let sixth = T::one() / lit::<T>(6.0);
    let two = lit::<T>(2.0);
    let f = |t: T, s: &Vec3<T>| s.cross(&evaluate_field(spec, t));
    let mut s = s0.as_vec3();
    for j in 0..n_steps {
        let t = t0 + h * lit::<T>(j as f64);
        let k1 = f(t, &s);
        let k2 = f(t + h * half, &s.add(&k1.scale(h * half)));
        let k3 = f(t + h * half, &s.add(&k2.scale(h * half)));
        let k4 = f(t + h, &s.add(&k3.scale(h)));
        let incr = k1.add(&k2.scale(two)).add(&k3.scale(two)).add(&k4).scale(h * sixth);
        s = s.add(&incr);
    }
    BlochVector::from_vec3(s)
}
