//! Small fixed-size matrices for the 2D design equations.
//!
//! Everything here is 2×2, so the types are plain arrays with the handful of
//! operations the design pipeline needs. The anticommutator equation
//! `X·S + S·X = B` is solved by flattening it into a 4×4 linear system.

use std::f64::consts::FRAC_PI_2;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real symmetric 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymMat2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

/// Eigen-decomposition of a [`SymMat2`]: `lo ≤ hi`, with the `lo` eigenvector
/// at polar angle `angle_lo` in `(-π/2, π/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen {
    pub lo: f64,
    pub hi: f64,
    pub angle_lo: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 {
        a11: 0.0,
        a12: 0.0,
        a22: 0.0,
    };
    pub const IDENTITY: SymMat2 = SymMat2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Self { a11, a12, a22 }
    }

    pub fn diag(d1: f64, d2: f64) -> Self {
        Self::new(d1, 0.0, d2)
    }

    /// `[[0, v], [v, 0]]`
    pub fn offdiag(v: f64) -> Self {
        Self::new(0.0, v, 0.0)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn is_finite(&self) -> bool {
        self.a11.is_finite() && self.a12.is_finite() && self.a22.is_finite()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a11 > 0.0 && self.det() > 0.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a11 * s, self.a12 * s, self.a22 * s)
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Self::new(self.a22 / det, -self.a12 / det, self.a11 / det))
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2::new(self.a11, self.a12, self.a12, self.a22)
    }

    pub fn eigen(&self) -> SymEigen {
        let mean = 0.5 * (self.a11 + self.a22);
        let half_diff = 0.5 * (self.a11 - self.a22);
        let radius = half_diff.hypot(self.a12);
        // Principal-axis angle of the larger eigenvalue is atan2(2a12, a11 - a22)/2;
        // the smaller one sits a quarter turn away.
        let angle_hi = 0.5 * (2.0 * self.a12).atan2(self.a11 - self.a22);
        let mut angle_lo = angle_hi + FRAC_PI_2;
        if angle_lo > FRAC_PI_2 {
            angle_lo -= std::f64::consts::PI;
        }
        SymEigen {
            lo: mean - radius,
            hi: mean + radius,
            angle_lo,
        }
    }

    /// Real power of a positive-definite matrix via its spectral decomposition.
    pub fn spectral_power(&self, p: f64) -> Option<Self> {
        if !self.is_positive_definite() {
            return None;
        }
        let e = self.eigen();
        let (c, s) = (e.angle_lo.cos(), e.angle_lo.sin());
        let (l, h) = (e.lo.powf(p), e.hi.powf(p));
        // lo eigenvector (c, s), hi eigenvector (-s, c)
        Some(Self::new(
            l * c * c + h * s * s,
            (l - h) * c * s,
            l * s * s + h * c * c,
        ))
    }

    /// `Wᵀ · self · W`
    pub fn congruence(&self, w: &Mat2) -> Self {
        Self::from_mat(&(w.transpose() * self.to_mat() * *w))
    }

    /// Symmetric part of a general matrix.
    pub fn from_mat(m: &Mat2) -> Self {
        Self::new(m.m[0][0], 0.5 * (m.m[0][1] + m.m[1][0]), m.m[1][1])
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.a11 - other.a11)
            .abs()
            .max((self.a12 - other.a12).abs())
            .max((self.a22 - other.a22).abs())
    }
}

impl Add for SymMat2 {
    type Output = SymMat2;
    fn add(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }
}

impl Sub for SymMat2 {
    type Output = SymMat2;
    fn sub(self, o: SymMat2) -> SymMat2 {
        SymMat2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }
}

impl Mul<SymMat2> for f64 {
    type Output = SymMat2;
    fn mul(self, m: SymMat2) -> SymMat2 {
        m.scale(self)
    }
}

/// General real 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    /// Frame rotation `W(θ) = [[cos θ, sin θ], [−sin θ, cos θ]]`, mapping lab
    /// coordinates onto principal-axis coordinates.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c, s, -s, c)
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.abs()))
    }
}

impl From<SymMat2> for Mat2 {
    fn from(s: SymMat2) -> Mat2 {
        s.to_mat()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let mut r = [[0.0; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        Mat2 { m: r }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale(-1.0)
    }
}

/// Complex 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2 {
    pub m: [[Complex64; 2]; 2],
}

impl CMat2 {
    pub fn new(a11: Complex64, a12: Complex64, a21: Complex64, a22: Complex64) -> Self {
        Self {
            m: [[a11, a12], [a21, a22]],
        }
    }

    pub fn identity() -> Self {
        Self::from(Mat2::IDENTITY)
    }

    pub fn zero() -> Self {
        Self::from(Mat2::new(0.0, 0.0, 0.0, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn re(&self) -> Mat2 {
        Mat2::new(
            self.m[0][0].re,
            self.m[0][1].re,
            self.m[1][0].re,
            self.m[1][1].re,
        )
    }

    pub fn im(&self) -> Mat2 {
        Mat2::new(
            self.m[0][0].im,
            self.m[0][1].im,
            self.m[1][0].im,
            self.m[1][1].im,
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0_f64, |a, x| a.max(x.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.is_finite())
    }
}

impl From<Mat2> for CMat2 {
    fn from(r: Mat2) -> CMat2 {
        let c = |x: f64| Complex64::new(x, 0.0);
        CMat2::new(c(r.m[0][0]), c(r.m[0][1]), c(r.m[1][0]), c(r.m[1][1]))
    }
}

impl From<SymMat2> for CMat2 {
    fn from(s: SymMat2) -> CMat2 {
        CMat2::from(s.to_mat())
    }
}

impl Mul for CMat2 {
    type Output = CMat2;
    fn mul(self, o: CMat2) -> CMat2 {
        let z = Complex64::new(0.0, 0.0);
        let mut r = [[z; 2]; 2];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.m[i][0] * o.m[0][j] + self.m[i][1] * o.m[1][j];
            }
        }
        CMat2 { m: r }
    }
}

impl Add for CMat2 {
    type Output = CMat2;
    fn add(self, o: CMat2) -> CMat2 {
        CMat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl Sub for CMat2 {
    type Output = CMat2;
    fn sub(self, o: CMat2) -> CMat2 {
        self + (-o)
    }
}

impl Neg for CMat2 {
    type Output = CMat2;
    fn neg(self) -> CMat2 {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// `{X, Y} = XY + YX`
pub fn anticommutator(x: CMat2, y: CMat2) -> CMat2 {
    x * y + y * x
}

/// `[X, Y] = XY − YX`
pub fn commutator(x: CMat2, y: CMat2) -> CMat2 {
    x * y - y * x
}

/// `[X, Y]_Z = XZY − YZX`
pub fn twisted_commutator(x: CMat2, y: CMat2, z: CMat2) -> CMat2 {
    x * z * y - y * z * x
}

/// Solves `X·S + S·X = B` for `X`.
///
/// With row-major vectorisation, `vec(XS) = (I ⊗ Sᵀ) vec(X)` and
/// `vec(SX) = (S ⊗ I) vec(X)`. The operator is real, so the real and
/// imaginary parts of `B` are solved against the same LU factorisation.
/// Returns `None` when the 4×4 operator is singular.
pub fn solve_anticommutator(s: &Mat2, b: &CMat2) -> Option<CMat2> {
    let mut op = Matrix4::<f64>::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let row = 2 * i + j;
            for k in 0..2 {
                // (XS)_ij = Σ_k X_ik S_kj
                op[(row, 2 * i + k)] += s.m[k][j];
                // (SX)_ij = Σ_k S_ik X_kj
                op[(row, 2 * k + j)] += s.m[i][k];
            }
        }
    }
    let lu = op.lu();
    let flat = |f: fn(&Complex64) -> f64| {
        Vector4::new(f(&b.m[0][0]), f(&b.m[0][1]), f(&b.m[1][0]), f(&b.m[1][1]))
    };
    let re = lu.solve(&flat(|z| z.re))?;
    let im = lu.solve(&flat(|z| z.im))?;
    if re.iter().chain(im.iter()).any(|x| !x.is_finite()) {
        return None;
    }
    let c = |k: usize| Complex64::new(re[k], im[k]);
    Some(CMat2::new(c(0), c(1), c(2), c(3)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eigen_of_diagonal_and_rotated() {
        let e = SymMat2::diag(1.0, 25.0).eigen();
        assert!(close(e.lo, 1.0, 1e-14) && close(e.hi, 25.0, 1e-14));
        assert!(close(e.angle_lo, 0.0, 1e-14));

        let e = SymMat2::diag(25.0, 1.0).eigen();
        assert!(close(e.lo, 1.0, 1e-14));
        assert!(close(e.angle_lo, FRAC_PI_2, 1e-14));

        let e = SymMat2::new(13.0, 12.0, 13.0).eigen();
        assert!(close(e.lo, 1.0, 1e-12) && close(e.hi, 25.0, 1e-12));
        assert!(close(e.angle_lo.abs(), std::f64::consts::FRAC_PI_4, 1e-12));
    }

    #[test]
    fn spectral_power_inverts_quarter_root() {
        let m = SymMat2::new(7.7, -6.2, 7.7);
        let r = m.spectral_power(-0.25).unwrap();
        let back = r.spectral_power(-4.0).unwrap();
        assert!(back.max_abs_diff(&m) < 1e-12);
        assert!(SymMat2::new(1.0, 2.0, 1.0).spectral_power(0.5).is_none());
    }

    #[test]
    fn anticommutator_solve_residual() {
        let s = Mat2::new(1.3, 0.4, 0.4, 0.7);
        let b = CMat2::new(
            Complex64::new(0.2, 1.0),
            Complex64::new(-0.5, 0.1),
            Complex64::new(0.3, -0.2),
            Complex64::new(1.1, 0.0),
        );
        let x = solve_anticommutator(&s, &b).unwrap();
        let res = anticommutator(x, CMat2::from(s)) - b;
        assert!(res.max_abs() < 1e-13);
    }

    #[test]
    fn anticommutator_singular_operator() {
        // eigenvalues ±1 make {X, S} singular
        let s = Mat2::new(1.0, 0.0, 0.0, -1.0);
        assert!(solve_anticommutator(&s, &CMat2::identity()).is_none());
    }
}
