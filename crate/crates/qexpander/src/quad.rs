//! 2x2 complex matrices acting on two-photon quadrature vectors.
//!
//! A field at sideband frequency Omega is the column (cosine, sine)^T of
//! quadrature amplitudes. Rotations are real orthogonal with det = 1, the
//! squeeze matrix is diag(e^q, e^{-q}), and inverses use the closed-form
//! adjugate so no pivoting is involved.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

/// Quadrature-space column vector.
pub type QuadVector = [Complex64; 2];

/// 2x2 complex matrix on (cosine, sine) quadrature vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadMatrix {
    pub m: [[Complex64; 2]; 2],
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

impl QuadMatrix {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self { m }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self {
            m: [
                [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
                [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
            ],
        }
    }

    pub const fn identity() -> Self {
        Self::new([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn zero() -> Self {
        Self::new([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::new([
            [self.m[0][0].conj(), self.m[1][0].conj()],
            [self.m[0][1].conj(), self.m[1][1].conj()],
        ])
    }

    pub fn transpose(&self) -> Self {
        Self::new([
            [self.m[0][0], self.m[1][0]],
            [self.m[0][1], self.m[1][1]],
        ])
    }

    /// Closed-form inverse via the adjugate. Returns `None` when the
    /// determinant underflows relative to the matrix scale.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        let scale: f64 = self
            .m
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        if d.norm_sqr() <= scale * scale * 1e-280 {
            return None;
        }
        Some(Self::new([
            [self.m[1][1] / d, -self.m[0][1] / d],
            [-self.m[1][0] / d, self.m[0][0] / d],
        ]))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = *self;
        for row in &mut out.m {
            for v in row {
                *v *= s;
            }
        }
        out
    }

    /// Largest absolute entry of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.m[i][j] - other.m[i][j]).norm());
            }
        }
        worst
    }
}

impl Mul for QuadMatrix {
    type Output = QuadMatrix;
    fn mul(self, rhs: QuadMatrix) -> QuadMatrix {
        let mut out = QuadMatrix::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j] + self.m[i][1] * rhs.m[1][j];
            }
        }
        out
    }
}

impl Mul<QuadVector> for QuadMatrix {
    type Output = QuadVector;
    fn mul(self, v: QuadVector) -> QuadVector {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

impl Add for QuadMatrix {
    type Output = QuadMatrix;
    fn add(self, rhs: QuadMatrix) -> QuadMatrix {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] += rhs.m[i][j];
            }
        }
        out
    }
}

impl Sub for QuadMatrix {
    type Output = QuadMatrix;
    fn sub(self, rhs: QuadMatrix) -> QuadMatrix {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.m[i][j] -= rhs.m[i][j];
            }
        }
        out
    }
}

impl Neg for QuadMatrix {
    type Output = QuadMatrix;
    fn neg(self) -> QuadMatrix {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// Quadrature rotation O(phi) = {{cos, -sin}, {sin, cos}}.
pub fn rot(phi: f64) -> QuadMatrix {
    let (s, c) = phi.sin_cos();
    QuadMatrix::from_real([[c, -s], [s, c]])
}

/// Squeezing matrix diag(e^q, e^{-q}).
pub fn sqz(q: f64) -> QuadMatrix {
    QuadMatrix::new([
        [Complex64::new(q.exp(), 0.0), ZERO],
        [ZERO, Complex64::new((-q).exp(), 0.0)],
    ])
}

/// The quarter rotation O(pi/2) = {{0, -1}, {1, 0}}.
pub fn ymat() -> QuadMatrix {
    QuadMatrix::from_real([[0.0, -1.0], [1.0, 0.0]])
}

/// Crystal operator in a rotated frame: O(theta) S(q) O(-theta).
pub fn crystal(theta: f64, q: f64) -> QuadMatrix {
    rot(theta) * sqz(q) * rot(-theta)
}

/// One pass through the SE cavity: O(phi) O(theta) S O(-theta) O(psi) e^{i Omega tau}.
pub fn prop(phi: f64, psi: f64, theta: f64, q: f64, omega: f64, tau: f64) -> QuadMatrix {
    (rot(phi) * crystal(theta, q) * rot(psi)).scale(Complex64::from_polar(1.0, omega * tau))
}

/// Row . column contraction.
pub fn dot(row: &QuadVector, col: &QuadVector) -> Complex64 {
    row[0] * col[0] + row[1] * col[1]
}

/// Row vector times matrix.
pub fn row_mul(row: &QuadVector, m: &QuadMatrix) -> QuadVector {
    [
        row[0] * m.m[0][0] + row[1] * m.m[1][0],
        row[0] * m.m[0][1] + row[1] * m.m[1][1],
    ]
}

/// Squared Hermitian norm of a vector.
pub fn norm_sqr(v: &QuadVector) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

/// Hermitian inner product `a . conj(b)` of two row vectors.
pub fn dot_conj(a: &QuadVector, b: &QuadVector) -> Complex64 {
    a[0] * b[0].conj() + a[1] * b[1].conj()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn rot_zero_and_sqz_zero_are_identity() {
        assert_eq!(rot(0.0), QuadMatrix::identity());
        assert_eq!(sqz(0.0), QuadMatrix::identity());
    }

    #[test]
    fn quarter_rotation_matches_y() {
        assert!(rot(FRAC_PI_2).max_abs_diff(&ymat()) < 1e-15);
    }

    #[test]
    fn adjugate_inverse_roundtrip() {
        let m = prop(0.3, 1.1, 0.7, 0.2, 2.0e4, 1.9e-7);
        let inv = m.inverse().unwrap();
        assert!((m * inv).max_abs_diff(&QuadMatrix::identity()) < 1e-14);
    }

    proptest! {
        // det(prop) = e^{2 i Omega tau} for any arguments: rotations and the
        // squeeze matrix are unimodular, the scalar phase enters twice.
        #[test]
        fn prop_determinant_is_pure_phase(
            phi in -3.2f64..3.2,
            psi in -3.2f64..3.2,
            theta in -3.2f64..3.2,
            q in -0.5f64..0.5,
            omega in 1.0f64..1e5,
        ) {
            let tau = 1.868e-7;
            let d = prop(phi, psi, theta, q, omega, tau).det();
            let expect = Complex64::from_polar(1.0, 2.0 * omega * tau);
            prop_assert!((d - expect).norm() < 1e-12);
        }

        #[test]
        fn rotation_preserves_norm(phi in -6.3f64..6.3) {
            let o = rot(phi);
            prop_assert!((o * o.adjoint()).max_abs_diff(&QuadMatrix::identity()) < 1e-14);
        }
    }
}
