//! Small fixed-size linear algebra: real 3-vectors and complex 2×2 matrices.

use num_complex::Complex;

use crate::{lit, Scalar};

/// Real 3-vector (magnetic fields, Bloch vectors).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Scalar> Vec3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn dot(&self, o: &Self) -> T {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn normalized(&self) -> Self {
        self.scale(T::one() / self.norm())
    }
}

/// Complex 2×2 matrix in row-major layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub e: [[Complex<T>; 2]; 2],
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Self { e: [[a, b], [c, d]] }
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        let o = Complex::new(T::one(), T::zero());
        Self::new(o, z, z, o)
    }

    /// a·Σ for a real vector a (linear combination of Pauli matrices).
    pub fn pauli_dot(a: &Vec3<T>) -> Self {
        let zr = T::zero();
        Self::new(
            Complex::new(a.z, zr),
            Complex::new(a.x, -a.y),
            Complex::new(a.x, a.y),
            Complex::new(-a.z, zr),
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut r = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                r.e[i][j] = self.e[i][0] * o.e[0][j] + self.e[i][1] * o.e[1][j];
            }
        }
        r
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.e[i][j] = r.e[i][j] + o.e[i][j];
            }
        }
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.e[i][j] = r.e[i][j] - o.e[i][j];
            }
        }
        r
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.e[i][j] = r.e[i][j] * s;
            }
        }
        r
    }

    pub fn adjoint(&self) -> Self {
        Self::new(
            self.e[0][0].conj(),
            self.e[1][0].conj(),
            self.e[0][1].conj(),
            self.e[1][1].conj(),
        )
    }

    pub fn trace(&self) -> Complex<T> {
        self.e[0][0] + self.e[1][1]
    }

    pub fn det(&self) -> Complex<T> {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    pub fn frobenius_norm(&self) -> T {
        let mut s = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                s = s + self.e[i][j].norm_sqr();
            }
        }
        s.sqrt()
    }

    /// ‖U†U − 1‖_F, zero for a unitary matrix.
    pub fn unitarity_defect(&self) -> T {
        self.adjoint().mul(self).sub(&Self::identity()).frobenius_norm()
    }
}

/// Pauli σx.
pub fn sigma_x<T: Scalar>() -> Mat2<T> {
    Mat2::pauli_dot(&Vec3::new(T::one(), T::zero(), T::zero()))
}

/// Pauli σy.
pub fn sigma_y<T: Scalar>() -> Mat2<T> {
    Mat2::pauli_dot(&Vec3::new(T::zero(), T::one(), T::zero()))
}

/// Pauli σz.
pub fn sigma_z<T: Scalar>() -> Mat2<T> {
    Mat2::pauli_dot(&Vec3::new(T::zero(), T::zero(), T::one()))
}

/// Reduce an angle to [0, 2π) before trig evaluation; keeps long-horizon
/// runs from losing accuracy to a growing phase argument.
pub fn reduce_angle<T: Scalar>(phase: T) -> T {
    let two_pi = lit::<T>(2.0) * T::PI();
    let r = phase - (phase / two_pi).floor() * two_pi;
    if r >= two_pi {
        r - two_pi
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_algebra() {
        let sx = sigma_x::<f64>();
        let sy = sigma_y::<f64>();
        let sz = sigma_z::<f64>();
        // σx σy = i σz
        let i = Complex::new(0.0, 1.0);
        let lhs = sx.mul(&sy);
        let rhs = sz.scale(i);
        assert!(lhs.sub(&rhs).frobenius_norm() < 1e-15);
        // σi² = 1
        for s in [sx, sy, sz] {
            assert!(s.mul(&s).sub(&Mat2::identity()).frobenius_norm() < 1e-15);
        }
    }

    #[test]
    fn cross_product_orientation() {
        let x = Vec3::new(1.0, 0.0, 0.0);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert_eq!(x.cross(&y), Vec3::new(0.0, 0.0, 1.0));
    }

    #[test]
    fn angle_reduction_range() {
        for k in 0..200 {
            let phase = 13.7 * k as f64;
            let r = reduce_angle(phase);
            assert!((0.0..2.0 * std::f64::consts::PI).contains(&r));
            assert!((r.cos() - phase.cos()).abs() < 1e-11);
        }
    }
}
