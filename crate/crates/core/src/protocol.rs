//! Inverse engineering of the time-dependent potential matrix `M(t)`.
//!
//! The schedule `R(t)` is a polynomial interpolation between the boundary
//! values `M(t_b)^{-1/4}` plus a coupling term `s(t)·R_c` whose strength is
//! the control parameter λ. From `R`, `Ṙ`, `R̈` the coupling `J`, the
//! anti-Hermitian generator `A = U†U̇`, and finally `M` are obtained by
//! solving 2×2 anticommutator equations.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    anticommutator, commutator, solve_anticommutator, twisted_commutator, CMat2, Mat2, SymMat2,
};
use crate::ode;

/// Tolerance on the imaginary/antisymmetric part of the solved `M`, relative to `max(1, |M|)`.
pub const REALITY_TOL: f64 = 1e-10;

/// Anything that supplies a potential matrix over `[0, duration]`.
pub trait PotentialSchedule: Sync {
    fn duration(&self) -> f64;
    fn potential(&self, t: f64) -> Result<SymMat2>;
}

/// A time-independent trap held for a fixed duration.
#[derive(Debug, Clone, Copy)]
pub struct StaticTrap {
    pub m: SymMat2,
    pub duration: f64,
}

impl PotentialSchedule for StaticTrap {
    fn duration(&self) -> f64 {
        self.duration
    }

    fn potential(&self, _t: f64) -> Result<SymMat2> {
        Ok(self.m)
    }
}

/// Design input: boundary frequencies, duration, λ and the final rotation angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub w1: f64,
    pub w2: f64,
    pub tf: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub r0: SymMat2,
    pub rf: SymMat2,
    pub rc: SymMat2,
}

/// `R(t)` together with its first two time derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSchedule {
    pub r: SymMat2,
    pub dr: SymMat2,
    pub ddr: SymMat2,
}

/// Every intermediate of the design pipeline at one instant.
#[derive(Debug, Clone, Copy)]
pub struct DesignPoint {
    pub t: f64,
    pub r: RSchedule,
    pub j: Mat2,
    pub a: CMat2,
    pub m: SymMat2,
    /// Imaginary/antisymmetric residual of `M` before projection.
    pub reality_residual: f64,
}

/// Failure of one algebraic step; turned into an [`Error`] once the time is known.
#[derive(Debug, Clone, PartialEq)]
pub enum DesignFault {
    Singular(&'static str),
    NotRealSymmetric(f64),
}

impl DesignFault {
    pub fn at(self, t: f64) -> Error {
        match self {
            DesignFault::Singular(reason) => Error::DesignSingularity {
                t,
                reason: reason.to_string(),
            },
            DesignFault::NotRealSymmetric(residual) => Error::DesignViolation { t, residual },
        }
    }
}

impl ProtocolSpec {
    pub fn new(w1: f64, w2: f64, tf: f64, lambda: f64, gamma: f64) -> Result<Self> {
        for (name, v) in [("w1", w1), ("w2", w2), ("tf", tf)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidInput(format!("lambda must be finite, got {lambda}")));
        }
        if !(gamma > 0.0 && gamma <= PI) {
            return Err(Error::InvalidInput(format!("gamma must lie in (0, pi], got {gamma}")));
        }
        let r0 = SymMat2::diag(w1.powf(-0.5), w2.powf(-0.5));
        let rf = if gamma == FRAC_PI_2 {
            SymMat2::diag(w2.powf(-0.5), w1.powf(-0.5))
        } else {
            r0.congruence(&Mat2::rotation(gamma))
        };
        let rc = SymMat2::offdiag(lambda * (w1 * w2).powf(-0.25));
        Ok(Self {
            w1,
            w2,
            tf,
            lambda,
            gamma,
            r0,
            rf,
            rc,
        })
    }

    /// The quantum-number swap protocol (`γ = π/2`).
    pub fn swap(w1: f64, w2: f64, tf: f64, lambda: f64) -> Result<Self> {
        Self::new(w1, w2, tf, lambda, FRAC_PI_2)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.w1, self.w2, self.tf, lambda, self.gamma)
    }

    pub fn initial_potential(&self) -> SymMat2 {
        SymMat2::diag(self.w1 * self.w1, self.w2 * self.w2)
    }

    /// `W(γ)ᵀ · diag(w1², w2²) · W(γ)`
    pub fn final_potential(&self) -> SymMat2 {
        if self.gamma == FRAC_PI_2 {
            SymMat2::diag(self.w2 * self.w2, self.w1 * self.w1)
        } else {
            self.initial_potential().congruence(&Mat2::rotation(self.gamma))
        }
    }

    pub fn eval_r(&self, t: f64) -> Result<RSchedule> {
        let tf = self.tf;
        let slack = 1e-12 * tf;
        if !(t >= -slack && t <= tf + slack) {
            return Err(Error::OutOfRange { t, tf });
        }
        let x = (t / tf).clamp(0.0, 1.0);
        let (x2, x3) = (x * x, x * x * x);
        let p = x3 * (10.0 - 15.0 * x + 6.0 * x2);
        let dp = 30.0 * x2 * (1.0 - x) * (1.0 - x) / tf;
        let ddp = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (tf * tf);
        // s = x³(1-x)³
        let y = 1.0 - x;
        let s = x3 * y * y * y;
        let ds = 3.0 * x2 * y * y * (1.0 - 2.0 * x) / tf;
        let dds = 6.0 * x * y * (1.0 - 5.0 * x + 5.0 * x2) / (tf * tf);

        let delta = self.rf - self.r0;
        Ok(RSchedule {
            r: (1.0 - p) * self.r0 + p * self.rf + s * self.rc,
            dr: dp * delta + ds * self.rc,
            ddr: ddp * delta + dds * self.rc,
        })
    }

    /// Full design pipeline at time `t`.
    pub fn design_point(&self, t: f64) -> Result<DesignPoint> {
        let r = self.eval_r(t)?;
        if !r.r.is_positive_definite() {
            return Err(DesignFault::Singular("R(t) is not positive-definite").at(t));
        }
        let j = solve_coupling_j(&r.r, &r.dr).map_err(|e| e.at(t))?;
        let a = compute_a(&r.r, &r.dr, &j).map_err(|e| e.at(t))?;
        let (m, reality_residual) = compute_m(&r.r, &r.dr, &r.ddr, &a).map_err(|e| e.at(t))?;
        Ok(DesignPoint {
            t,
            r,
            j,
            a,
            m,
            reality_residual,
        })
    }

    pub fn frame_at(&self, t: f64, theta_prev: f64) -> Result<FrameDecomposition> {
        Ok(decompose_potential(&self.potential(t)?, theta_prev))
    }
}

impl PotentialSchedule for ProtocolSpec {
    fn duration(&self) -> f64 {
        self.tf
    }

    fn potential(&self, t: f64) -> Result<SymMat2> {
        Ok(self.design_point(t)?.m)
    }
}

/// Solves `{J, R⁻²} = [Ṙ, R⁻¹] + [R, R⁻²]_Ṙ` for the real matrix `J`.
pub fn solve_coupling_j(r: &SymMat2, dr: &SymMat2) -> std::result::Result<Mat2, DesignFault> {
    let r_inv = r.inverse().ok_or(DesignFault::Singular("R(t) is singular"))?;
    let q = r_inv.to_mat() * r_inv.to_mat();
    let (rc, drc, ric, qc) = (
        CMat2::from(*r),
        CMat2::from(*dr),
        CMat2::from(r_inv),
        CMat2::from(q),
    );
    let rhs = commutator(drc, ric) + twisted_commutator(rc, qc, drc);
    let j = solve_anticommutator(&q, &rhs)
        .ok_or(DesignFault::Singular("anticommutator with R^-2 is singular"))?;
    Ok(j.re())
}

/// `A = iR⁻² + ½[R⁻¹, Ṙ] + ½R⁻¹JR⁻¹`
pub fn compute_a(r: &SymMat2, dr: &SymMat2, j: &Mat2) -> std::result::Result<CMat2, DesignFault> {
    let r_inv = r.inverse().ok_or(DesignFault::Singular("R(t) is singular"))?;
    let ric = CMat2::from(r_inv);
    let half = Complex64::new(0.5, 0.0);
    let q = ric * ric;
    Ok(q.scale(Complex64::i())
        + commutator(ric, CMat2::from(*dr)).scale(half)
        + (ric * CMat2::from(*j) * ric).scale(half))
}

/// Solves `{R̈, R} + {R², M} = 2[Ṙ, R]_A − 2RA²R` for `M` and projects it onto
/// the real-symmetric matrices. Returns the projected matrix and the size of
/// the discarded imaginary/antisymmetric part (relative to `max(1, |M|)`).
pub fn compute_m(
    r: &SymMat2,
    dr: &SymMat2,
    ddr: &SymMat2,
    a: &CMat2,
) -> std::result::Result<(SymMat2, f64), DesignFault> {
    let (rc, drc, ddrc) = (CMat2::from(*r), CMat2::from(*dr), CMat2::from(*ddr));
    let two = Complex64::new(2.0, 0.0);
    let rhs = twisted_commutator(drc, rc, *a).scale(two)
        - (rc * *a * *a * rc).scale(two)
        - anticommutator(ddrc, rc);
    let r2 = r.to_mat() * r.to_mat();
    let m = solve_anticommutator(&r2, &rhs)
        .ok_or(DesignFault::Singular("anticommutator with R^2 is singular"))?;
    if !m.is_finite() {
        return Err(DesignFault::Singular("non-finite potential matrix"));
    }
    let re = m.re();
    let scale = re.max_abs().max(1.0);
    let residual = m.im().max_abs().max((re.m[0][1] - re.m[1][0]).abs()) / scale;
    if residual > REALITY_TOL {
        return Err(DesignFault::NotRealSymmetric(residual));
    }
    Ok((SymMat2::from_mat(&re), residual))
}

/// Rotation angle and signed squared principal frequencies of `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameDecomposition {
    pub theta: f64,
    pub omega1_sq: f64,
    pub omega2_sq: f64,
}

impl FrameDecomposition {
    pub fn reconstruct(&self) -> SymMat2 {
        let (s, c) = self.theta.sin_cos();
        SymMat2::new(
            self.omega1_sq * c * c + self.omega2_sq * s * s,
            (self.omega1_sq - self.omega2_sq) * s * c,
            self.omega1_sq * s * s + self.omega2_sq * c * c,
        )
    }

    pub fn omega1(&self) -> Option<f64> {
        (self.omega1_sq >= 0.0).then(|| self.omega1_sq.sqrt())
    }

    pub fn omega2(&self) -> Option<f64> {
        (self.omega2_sq >= 0.0).then(|| self.omega2_sq.sqrt())
    }

    /// `ℰ_nk = ω1(n+½) + ω2(k+½)`, undefined while either direction is a repeller.
    pub fn level_energy(&self, n: u32, k: u32) -> Option<f64> {
        Some(self.omega1()? * (n as f64 + 0.5) + self.omega2()? * (k as f64 + 0.5))
    }
}

/// Decomposes `M` into `(θ, ω1², ω2²)`, choosing the branch closest to `theta_prev`.
///
/// The eigenvector of the lower eigenvalue sits at angle α, so every valid
/// angle is `α + kπ/2`; odd `k` swaps which eigenvalue is called `ω1²`.
pub fn decompose_potential(m: &SymMat2, theta_prev: f64) -> FrameDecomposition {
    let e = m.eigen();
    let scale = e.lo.abs().max(e.hi.abs()).max(f64::MIN_POSITIVE);
    if (e.hi - e.lo) <= 1e-12 * scale {
        let mean = 0.5 * (e.lo + e.hi);
        return FrameDecomposition {
            theta: theta_prev,
            omega1_sq: mean,
            omega2_sq: mean,
        };
    }
    let k = ((theta_prev - e.angle_lo) / FRAC_PI_2).round();
    let theta = e.angle_lo + k * FRAC_PI_2;
    let (omega1_sq, omega2_sq) = if (k as i64).rem_euclid(2) == 0 {
        (e.lo, e.hi)
    } else {
        (e.hi, e.lo)
    };
    FrameDecomposition {
        theta,
        omega1_sq,
        omega2_sq,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSample {
    pub t: f64,
    pub m: SymMat2,
    pub frame: FrameDecomposition,
}

impl ProtocolSample {
    pub fn level_energy(&self, n: u32, k: u32) -> Option<f64> {
        self.frame.level_energy(n, k)
    }

    /// True while one principal direction is inverted.
    pub fn is_repeller(&self) -> bool {
        self.frame.omega1_sq < 0.0 || self.frame.omega2_sq < 0.0
    }
}

/// Uniformly sampled protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolTable {
    pub spec: ProtocolSpec,
    pub samples: Vec<ProtocolSample>,
}

pub const DEFAULT_SAMPLES: usize = 2001;

/// Largest θ change accepted between neighbouring evaluations before the
/// interval is bisected.
const MAX_THETA_STEP: f64 = PI / 16.0;
const MAX_BISECTIONS: u32 = 48;

/// Decomposes `m_b = M(t_b)` on the branch continuous with `theta_a` at
/// `t_a`, bisecting while θ moves too fast to be followed (sharp avoided
/// crossings at small λ).
fn track_frame(
    spec: &ProtocolSpec,
    t_a: f64,
    theta_a: f64,
    t_b: f64,
    m_b: &SymMat2,
    depth: u32,
) -> Result<FrameDecomposition> {
    let direct = decompose_potential(m_b, theta_a);
    if (direct.theta - theta_a).abs() <= MAX_THETA_STEP || depth >= MAX_BISECTIONS {
        return Ok(direct);
    }
    let t_mid = 0.5 * (t_a + t_b);
    let m_mid = spec.potential(t_mid)?;
    let mid = track_frame(spec, t_a, theta_a, t_mid, &m_mid, depth + 1)?;
    track_frame(spec, t_mid, mid.theta, t_b, m_b, depth + 1)
}

pub fn tabulate_protocol(spec: &ProtocolSpec, n_samples: usize) -> Result<ProtocolTable> {
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    let last = (n_samples - 1) as f64;
    let times: Vec<f64> = (0..n_samples)
        .map(|i| if i + 1 == n_samples { spec.tf } else { spec.tf * i as f64 / last })
        .collect();
    let mut samples: Vec<ProtocolSample> = Vec::with_capacity(n_samples);
    for t in times {
        let m = spec.potential(t)?;
        let frame = match samples.last() {
            Some(prev) => track_frame(spec, prev.t, prev.frame.theta, t, &m, 0)?,
            None => decompose_potential(&m, 0.0),
        };
        samples.push(ProtocolSample { t, m, frame });
    }
    Ok(ProtocolTable {
        spec: *spec,
        samples,
    })
}

impl ProtocolTable {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `θ̇` by centred differences (one-sided at the ends).
    pub fn theta_dot(&self) -> Vec<f64> {
        let s = &self.samples;
        let n = s.len();
        (0..n)
            .map(|i| {
                let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (s[b].frame.theta - s[a].frame.theta) / (s[b].t - s[a].t)
            })
            .collect()
    }

    /// Smallest gap `|ω1² − ω2²|` over the samples.
    pub fn min_frequency_gap(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| (s.frame.omega1_sq - s.frame.omega2_sq).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Integrates `U̇ = U·A`, `U(0) = 1` with classical RK4 on the given grid.
pub fn integrate_unitary(spec: &ProtocolSpec, t_grid: &[f64]) -> Result<Vec<CMat2>> {
    let Some(&t0) = t_grid.first() else {
        return Ok(Vec::new());
    };
    if t0 != 0.0 {
        return Err(Error::InvalidInput("time grid must start at t = 0".into()));
    }
    let a_at = |t: f64| -> Result<CMat2> { Ok(spec.design_point(t)?.a) };
    let mut u = CMat2::identity();
    let mut out = Vec::with_capacity(t_grid.len());
    out.push(u);
    let mut a_left = a_at(t0)?;
    for w in t_grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let a_mid = a_at(t + 0.5 * h)?;
        let a_right = a_at(w[1])?;
        let hc = |x: f64| Complex64::new(x, 0.0);
        let k1 = u * a_left;
        let k2 = (u + k1.scale(hc(0.5 * h))) * a_mid;
        let k3 = (u + k2.scale(hc(0.5 * h))) * a_mid;
        let k4 = (u + k3.scale(hc(h))) * a_right;
        u = u + (k1 + k2.scale(hc(2.0)) + k3.scale(hc(2.0)) + k4).scale(hc(h / 6.0));
        out.push(u);
        a_left = a_right;
    }
    Ok(out)
}

/// `‖U†U − 1‖_max`
pub fn unitarity_residual(u: &CMat2) -> f64 {
    (u.adjoint() * *u - CMat2::identity()).max_abs()
}

/// `Γ = Re[[Ṗ†Ṗ, −Ṗ†P], [−P†Ṗ, P†P]]` with `P = UR`, `Ṗ = U(AR + Ṙ)`.
pub fn assemble_invariant_matrix(r: &SymMat2, dr: &SymMat2, a: &CMat2, u: &CMat2) -> Matrix4<f64> {
    let rc = CMat2::from(*r);
    let p = *u * rc;
    let pd = *u * (*a * rc + CMat2::from(*dr));
    let blocks = [
        [(pd.adjoint() * pd).re(), (pd.adjoint() * p).re().scale(-1.0)],
        [(p.adjoint() * pd).re().scale(-1.0), (p.adjoint() * p).re()],
    ];
    let mut g = Matrix4::zeros();
    for (bi, brow) in blocks.iter().enumerate() {
        for (bj, block) in brow.iter().enumerate() {
            for i in 0..2 {
                for j in 0..2 {
                    g[(2 * bi + i, 2 * bj + j)] = block.m[i][j];
                }
            }
        }
    }
    // exact symmetrisation; the blocks are symmetric up to rounding
    (g + g.transpose()) * 0.5
}

/// `Ω = blockdiag(M, 1)`
pub fn hamiltonian_matrix(m: &SymMat2) -> Matrix4<f64> {
    let mut o = Matrix4::identity();
    o[(0, 0)] = m.a11;
    o[(0, 1)] = m.a12;
    o[(1, 0)] = m.a12;
    o[(1, 1)] = m.a22;
    o
}

/// `S = [[0, 1], [−1, 0]]` in 2×2 blocks.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut s = Matrix4::zeros();
    s[(0, 2)] = 1.0;
    s[(1, 3)] = 1.0;
    s[(2, 0)] = -1.0;
    s[(3, 1)] = -1.0;
    s
}

/// Invariant matrices sampled on a uniform grid of `n_steps` intervals.
#[derive(Debug, Clone)]
pub struct InvariantTrack {
    pub times: Vec<f64>,
    pub gammas: Vec<Matrix4<f64>>,
    pub potentials: Vec<SymMat2>,
}

impl InvariantTrack {
    pub fn compute(spec: &ProtocolSpec, n_steps: usize) -> Result<Self> {
        let times = ode::uniform_grid(spec.tf, n_steps);
        let us = integrate_unitary(spec, &times)?;
        let mut gammas = Vec::with_capacity(times.len());
        let mut potentials = Vec::with_capacity(times.len());
        for (&t, u) in times.iter().zip(&us) {
            let d = spec.design_point(t)?;
            gammas.push(assemble_invariant_matrix(&d.r.r, &d.r.dr, &d.a, u));
            potentials.push(d.m);
        }
        Ok(Self {
            times,
            gammas,
            potentials,
        })
    }

    /// Largest entry of `dΓ/dt − (ΩSΓ − ΓSΩ)` over interior points, with a
    /// fourth-order centred difference for `dΓ/dt`.
    pub fn max_invariance_residual(&self) -> f64 {
        let s = symplectic_form();
        let g = &self.gammas;
        let n = g.len();
        let mut worst = 0.0_f64;
        for i in 2..n.saturating_sub(2) {
            let h = self.times[i + 1] - self.times[i];
            let dg = (g[i - 2] - g[i - 1] * 8.0 + g[i + 1] * 8.0 - g[i + 2]) / (12.0 * h);
            let o = hamiltonian_matrix(&self.potentials[i]);
            let rhs = o * s * g[i] - g[i] * s * o;
            worst = worst.max((dg - rhs).abs().max());
        }
        worst
    }

    /// Largest entry of `(SΓ)² + 1`; zero exactly when the spectrum of `SΓ`
    /// stays at its boundary value `{±i}`.
    pub fn max_spectrum_residual(&self) -> f64 {
        let s = symplectic_form();
        self.gammas
            .iter()
            .map(|g| {
                let sg = s * g;
                (sg * sg + Matrix4::identity()).abs().max()
            })
            .fold(0.0, f64::max)
    }
}
