//! Linear invariants built from complex classical trajectories.
//!
//! A trajectory `u(t)` solving `ü = −M(t)u` defines the invariant
//! `G = u_x p_x − u̇_x x + u_y p_y − u̇_y y`. Starting `G1` and `G2` as the
//! initial annihilation operators and reading their endpoints off in the
//! final normal-mode basis gives the transfer coefficients, from which the
//! final state and energy of any initial Fock state follow in closed form.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{self, Newton};
use crate::protocol::{PotentialSchedule, ProtocolSpec};

/// Below this `b`, the phases φ and φ' are reported.
pub const TOL_PERFECT: f64 = 1e-6;
/// Coefficient-relation residual above which integration is deemed too coarse.
pub const RELATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InvariantMode {
    G1,
    G2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryState {
    pub ux: Complex64,
    pub uy: Complex64,
    pub vx: Complex64,
    pub vy: Complex64,
}

impl TrajectoryState {
    pub fn to_array(self) -> Newton<Complex64> {
        [self.ux, self.uy, self.vx, self.vy]
    }

    pub fn from_array(a: Newton<Complex64>) -> Self {
        Self {
            ux: a[0],
            uy: a[1],
            vx: a[2],
            vy: a[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|z| z.is_finite())
    }

    /// Position and velocity components along `axis`.
    pub fn along(&self, axis: [f64; 2]) -> (Complex64, Complex64) {
        (
            self.ux * axis[0] + self.uy * axis[1],
            self.vx * axis[0] + self.vy * axis[1],
        )
    }
}

pub fn initial_conditions(mode: InvariantMode, w1: f64, w2: f64) -> Result<TrajectoryState> {
    if !(w1 > 0.0 && w2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "frequencies must be positive, got ({w1}, {w2})"
        )));
    }
    let zero = Complex64::new(0.0, 0.0);
    let u = |w: f64| Complex64::new(0.0, 1.0 / (2.0 * w).sqrt());
    let v = |w: f64| Complex64::new(-(w / 2.0).sqrt(), 0.0);
    Ok(match mode {
        InvariantMode::G1 => TrajectoryState {
            ux: u(w1),
            uy: zero,
            vx: v(w1),
            vy: zero,
        },
        InvariantMode::G2 => TrajectoryState {
            ux: zero,
            uy: u(w2),
            vx: zero,
            vy: v(w2),
        },
    })
}

/// Endpoint of a complex trajectory at the end of `schedule`.
pub fn propagate_trajectory(
    schedule: &dyn PotentialSchedule,
    state0: TrajectoryState,
    steps: usize,
) -> Result<TrajectoryState> {
    if steps < 100 {
        return Err(Error::InvalidInput(format!(
            "trajectory needs at least 100 steps, got {steps}"
        )));
    }
    if !state0.is_finite() {
        return Err(Error::InvalidInput("initial state is not finite".into()));
    }
    let mut s = [state0.to_array()];
    ode::propagate_newton(schedule, &mut s, steps)?;
    Ok(TrajectoryState::from_array(s[0]))
}

/// Both linear-invariant trajectories of a protocol, propagated together.
pub fn propagate_pair(spec: &ProtocolSpec, steps: usize) -> Result<(TrajectoryState, TrajectoryState)> {
    let g1 = initial_conditions(InvariantMode::G1, spec.w1, spec.w2)?;
    let g2 = initial_conditions(InvariantMode::G2, spec.w1, spec.w2)?;
    if steps < 100 {
        return Err(Error::InvalidInput(format!(
            "trajectory needs at least 100 steps, got {steps}"
        )));
    }
    let mut s = [g1.to_array(), g2.to_array()];
    ode::propagate_newton(spec, &mut s, steps)?;
    Ok((TrajectoryState::from_array(s[0]), TrajectoryState::from_array(s[1])))
}

/// Uncoupled final axes and their frequencies.
///
/// For a rotation by γ the final trap has its `w1` axis along
/// `(cos γ, sin γ)` and its `w2` axis perpendicular. The axes are labelled so
/// that γ = π/2 reproduces the laboratory `x` (frequency `w2`) and `y`
/// (frequency `w1`) exactly; a final state `|m, l⟩_f` then carries `m`
/// quanta along `x_axis` and `l` along `y_axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalFrame {
    pub x_axis: [f64; 2],
    pub y_axis: [f64; 2],
    pub wx: f64,
    pub wy: f64,
}

impl FinalFrame {
    /// Laboratory axes with the given frequencies.
    pub fn lab(wx: f64, wy: f64) -> Self {
        Self {
            x_axis: [1.0, 0.0],
            y_axis: [0.0, 1.0],
            wx,
            wy,
        }
    }

    pub fn rotated(w1: f64, w2: f64, gamma: f64) -> Self {
        if gamma == FRAC_PI_2 {
            return Self::lab(w2, w1);
        }
        let (s, c) = gamma.sin_cos();
        Self {
            x_axis: [s, -c],
            y_axis: [c, s],
            wx: w2,
            wy: w1,
        }
    }

    pub fn of(spec: &ProtocolSpec) -> Self {
        Self::rotated(spec.w1, spec.w2, spec.gamma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferCoeffs {
    pub cx: Complex64,
    pub cy: Complex64,
    pub cpx: Complex64,
    pub cpy: Complex64,
    pub b: f64,
    /// `arg c_y`, set when `b < TOL_PERFECT`.
    pub phi: Option<f64>,
    /// `arg c'_x`, set when `b < TOL_PERFECT`.
    pub phi_prime: Option<f64>,
    /// `|u̇ − iωu|` for (G1 x, G1 y, G2 x, G2 y) in the final frame.
    pub final_value_residuals: [f64; 4],
}

/// Residuals of the relations between the transfer coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationResiduals {
    /// `|c_x|² + |c'_x|² − 1`
    pub norm_x: f64,
    /// `|c_y|² + |c'_y|² − 1`
    pub norm_y: f64,
    /// `|c_x* c_y + c'_x* c'_y|`
    pub orthogonality: f64,
    /// `|c_x|² + |c_y|² − 1`
    pub norm_g1: f64,
    /// `|c'_x|² + |c'_y|² − 1`
    pub norm_g2: f64,
    /// `|c_x|² − |c'_y|²`
    pub cross_xy: f64,
    /// `|c_y|² − |c'_x|²`
    pub cross_yx: f64,
    pub final_value: [f64; 4],
}

impl RelationResiduals {
    pub fn max_relation(&self) -> f64 {
        [
            self.norm_x,
            self.norm_y,
            self.orthogonality,
            self.norm_g1,
            self.norm_g2,
            self.cross_xy,
            self.cross_yx,
        ]
        .iter()
        .fold(0.0_f64, |a, x| a.max(x.abs()))
    }

    pub fn max_all(&self) -> f64 {
        self.final_value
            .iter()
            .fold(self.max_relation(), |a, x| a.max(x.abs()))
    }
}

fn coefficient(w: f64, u: Complex64) -> Complex64 {
    Complex64::new(0.0, -(2.0 * w).sqrt()) * u
}

impl TransferCoeffs {
    /// Reads the coefficients off the G1/G2 endpoints without checking the relations.
    pub fn from_endpoints_unchecked(end1: &TrajectoryState, end2: &TrajectoryState, frame: &FinalFrame) -> Self {
        let (ux, vx) = end1.along(frame.x_axis);
        let (uy, vy) = end1.along(frame.y_axis);
        let (upx, vpx) = end2.along(frame.x_axis);
        let (upy, vpy) = end2.along(frame.y_axis);
        let i = Complex64::i();
        let cx = coefficient(frame.wx, ux);
        let cy = coefficient(frame.wy, uy);
        let cpx = coefficient(frame.wx, upx);
        let cpy = coefficient(frame.wy, upy);
        let b = cx.norm_sqr();
        let perfect = b < TOL_PERFECT;
        Self {
            cx,
            cy,
            cpx,
            cpy,
            b,
            phi: perfect.then(|| cy.arg()),
            phi_prime: perfect.then(|| cpx.arg()),
            final_value_residuals: [
                (vx - i * frame.wx * ux).norm(),
                (vy - i * frame.wy * uy).norm(),
                (vpx - i * frame.wx * upx).norm(),
                (vpy - i * frame.wy * upy).norm(),
            ],
        }
    }

    /// Transfer coefficients; fails when the coefficient relations are violated
    /// beyond [`RELATION_TOL`].
    pub fn from_endpoints(end1: &TrajectoryState, end2: &TrajectoryState, frame: &FinalFrame) -> Result<Self> {
        let c = Self::from_endpoints_unchecked(end1, end2, frame);
        let worst = c.residuals().max_relation();
        if !(worst <= RELATION_TOL) {
            return Err(Error::IntegrationAccuracy {
                residual: worst,
                tolerance: RELATION_TOL,
            });
        }
        Ok(c)
    }

    pub fn residuals(&self) -> RelationResiduals {
        let n = |z: Complex64| z.norm_sqr();
        RelationResiduals {
            norm_x: n(self.cx) + n(self.cpx) - 1.0,
            norm_y: n(self.cy) + n(self.cpy) - 1.0,
            orthogonality: (self.cx.conj() * self.cy + self.cpx.conj() * self.cpy).norm(),
            norm_g1: n(self.cx) + n(self.cy) - 1.0,
            norm_g2: n(self.cpx) + n(self.cpy) - 1.0,
            cross_xy: n(self.cx) - n(self.cpy),
            cross_yx: n(self.cy) - n(self.cpx),
            final_value: self.final_value_residuals,
        }
    }

    /// Coefficients of a protocol at `steps` RK4 steps.
    pub fn of_protocol(spec: &ProtocolSpec, steps: usize) -> Result<Self> {
        let (e1, e2) = propagate_pair(spec, steps)?;
        Self::from_endpoints(&e1, &e2, &FinalFrame::of(spec))
    }
}

/// `b = |c_x|²` from the G1 trajectory alone.
pub fn b_from_g1(end1: &TrajectoryState, frame: &FinalFrame) -> f64 {
    coefficient(frame.wx, end1.along(frame.x_axis).0).norm_sqr()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FockLabel {
    pub n: u32,
    pub k: u32,
}

impl FockLabel {
    pub fn new(n: u32, k: u32) -> Self {
        Self { n, k }
    }

    pub fn total(&self) -> u32 {
        self.n + self.k
    }

    /// The labels of Table-style reports, in column order.
    pub fn table_labels() -> Vec<FockLabel> {
        [(0, 0), (1, 1), (1, 0), (0, 1), (2, 0), (0, 2), (3, 0), (0, 3), (2, 1), (1, 2), (5, 2), (2, 5)]
            .into_iter()
            .map(|(n, k)| FockLabel::new(n, k))
            .collect()
    }
}

impl std::fmt::Display for FockLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.n, self.k)
    }
}

impl std::str::FromStr for FockLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("expected a label like `2,1`, got `{s}`"));
        let (n, k) = s.split_once(',').ok_or_else(bad)?;
        Ok(FockLabel::new(
            n.trim().parse().map_err(|_| bad())?,
            k.trim().parse().map_err(|_| bad())?,
        ))
    }
}

/// `E_nk(0) = (n + ½)w1 + (k + ½)w2`
pub fn initial_energy(label: FockLabel, w1: f64, w2: f64) -> f64 {
    (label.n as f64 + 0.5) * w1 + (label.k as f64 + 0.5) * w2
}

/// `⟨H(t_f)⟩ − E_nk(0) = b(n − k)(w2 − w1)`
pub fn predicted_energy_increment(coeffs: &TransferCoeffs, label: FockLabel, w1: f64, w2: f64) -> f64 {
    coeffs.b * (label.n as f64 - label.k as f64) * (w2 - w1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinalAmplitude {
    /// Quanta along the final `x` axis.
    pub m: u32,
    /// Quanta along the final `y` axis.
    pub l: u32,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalStatePrediction {
    pub initial: FockLabel,
    /// Ordered by increasing `l`; every entry has `m + l = n + k`.
    pub amplitudes: Vec<FinalAmplitude>,
    /// Norm before renormalisation.
    pub raw_norm: f64,
}

impl FinalStatePrediction {
    pub fn amplitude(&self, m: u32, l: u32) -> Complex64 {
        self.amplitudes
            .iter()
            .find(|a| a.m == m && a.l == l)
            .map_or(Complex64::new(0.0, 0.0), |a| a.amplitude)
    }

    pub fn population(&self, m: u32, l: u32) -> f64 {
        self.amplitude(m, l).norm_sqr()
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// `C(n, k)`; exact integer arithmetic while it fits comfortably, log-space above.
pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    if n < 20 {
        let k = k.min(n - k) as u64;
        let mut c: u64 = 1;
        for i in 0..k {
            c = c * (n as u64 - i) / (i + 1);
        }
        return c as f64;
    }
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp()
}

/// Final state of `|n, k⟩_i` as an expansion over `|n+k−i−j, i+j⟩_f`.
pub fn predicted_final_state(coeffs: &TransferCoeffs, label: FockLabel) -> FinalStatePrediction {
    let (n, k) = (label.n, label.k);
    let total = n + k;
    let zero = Complex64::new(0.0, 0.0);
    let mut amps = vec![zero; total as usize + 1];
    let (cx, cy, cpx, cpy) = (coeffs.cx.conj(), coeffs.cy.conj(), coeffs.cpx.conj(), coeffs.cpy.conj());
    for i in 0..=n {
        for j in 0..=k {
            let l = i + j;
            let m = total - l;
            let weight = (binomial(n, i) * binomial(k, j) * binomial(m, k - j) * binomial(l, i)).sqrt();
            amps[l as usize] += cx.powu(n - i) * cy.powu(i) * cpx.powu(k - j) * cpy.powu(j) * weight;
        }
    }
    let raw_norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let scale = if raw_norm > 0.0 { 1.0 / raw_norm } else { 1.0 };
    FinalStatePrediction {
        initial: label,
        amplitudes: amps
            .into_iter()
            .enumerate()
            .map(|(l, a)| FinalAmplitude {
                m: total - l as u32,
                l: l as u32,
                amplitude: a * scale,
            })
            .collect(),
        raw_norm,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMat2;
    use crate::protocol::StaticTrap;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn initial_conditions_examples() {
        let g1 = initial_conditions(InvariantMode::G1, 1.0, 5.0).unwrap();
        assert!((g1.ux - c(0.0, FRAC_1_SQRT_2)).norm() < 1e-12);
        assert!((g1.vx - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-12);
        assert_eq!(g1.uy, c(0.0, 0.0));
        let g2 = initial_conditions(InvariantMode::G2, 1.0, 5.0).unwrap();
        assert!((g2.uy - c(0.0, 0.31623)).norm() < 1e-5);
        assert!((g2.vy - c(-1.58114, 0.0)).norm() < 1e-5);
        assert_eq!(g2.ux, c(0.0, 0.0));
        let iso = initial_conditions(InvariantMode::G1, 1.0, 1.0).unwrap();
        assert!((iso.ux - c(0.0, 0.5f64.sqrt())).norm() < 1e-15);
        assert!(initial_conditions(InvariantMode::G1, 0.0, 1.0).is_err());
    }

    #[test]
    fn static_trap_trajectory_is_a_phase() {
        let big_t = 3.3;
        let trap = StaticTrap {
            m: SymMat2::diag(1.0, 25.0),
            duration: big_t,
        };
        let g1 = initial_conditions(InvariantMode::G1, 1.0, 5.0).unwrap();
        let g2 = initial_conditions(InvariantMode::G2, 1.0, 5.0).unwrap();
        let e1 = propagate_trajectory(&trap, g1, 4000).unwrap();
        let e2 = propagate_trajectory(&trap, g2, 4000).unwrap();
        let phase = c(0.0, big_t).exp();
        assert!((e1.ux - c(0.0, 0.5f64.sqrt()) * phase).norm() < 1e-10);
        assert!((e1.vx + phase * 0.5f64.sqrt()).norm() < 1e-10);
        let coeffs = TransferCoeffs::from_endpoints(&e1, &e2, &FinalFrame::lab(1.0, 5.0)).unwrap();
        assert!((coeffs.cx - phase).norm() < 1e-10);
        assert!((coeffs.b - 1.0).abs() < 1e-10);
        assert!(coeffs.phi.is_none());
    }

    #[test]
    fn too_few_steps_rejected() {
        let trap = StaticTrap {
            m: SymMat2::diag(1.0, 1.0),
            duration: 1.0,
        };
        let g1 = initial_conditions(InvariantMode::G1, 1.0, 1.0).unwrap();
        assert!(propagate_trajectory(&trap, g1, 99).is_err());
    }

    #[test]
    fn exact_unitary_coefficients_have_zero_residuals() {
        let s = 0.5f64.sqrt();
        let coeffs = TransferCoeffs {
            cx: c(s, 0.0),
            cy: c(0.0, s),
            cpx: c(0.0, s),
            cpy: c(s, 0.0),
            b: 0.5,
            phi: None,
            phi_prime: None,
            final_value_residuals: [0.0; 4],
        };
        assert!(coeffs.residuals().max_all() < 1e-15);
    }

    #[test]
    fn energy_increment_table_values() {
        let coeffs = TransferCoeffs {
            cx: c(0.65335f64.sqrt(), 0.0),
            cy: c(0.0, 0.0),
            cpx: c(0.0, 0.0),
            cpy: c(0.0, 0.0),
            b: 0.65335,
            phi: None,
            phi_prime: None,
            final_value_residuals: [0.0; 4],
        };
        let d = |n, k| predicted_energy_increment(&coeffs, FockLabel::new(n, k), 1.0, 5.0);
        assert!((d(2, 1) - 2.6134).abs() < 1e-4);
        assert!((d(0, 3) + 7.8402).abs() < 1e-4);
        assert_eq!(d(1, 1), 0.0);
        assert_eq!(initial_energy(FockLabel::new(5, 2), 1.0, 5.0), 18.0);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(19, 9), 92378.0);
        assert!((binomial(40, 20) / 137846528820.0 - 1.0).abs() < 1e-12);
        assert_eq!(binomial(3, 4), 0.0);
    }

    #[test]
    fn ground_state_maps_to_ground_state() {
        let coeffs = TransferCoeffs {
            cx: c(0.3, 0.1),
            cy: c(0.5, -0.2),
            cpx: c(0.1, 0.4),
            cpy: c(-0.2, 0.3),
            b: 0.1,
            phi: None,
            phi_prime: None,
            final_value_residuals: [0.0; 4],
        };
        let p = predicted_final_state(&coeffs, FockLabel::new(0, 0));
        assert_eq!(p.amplitudes.len(), 1);
        assert_eq!(p.amplitude(0, 0), c(1.0, 0.0));
    }

    #[test]
    fn perfect_transfer_is_single_swapped_state() {
        let phi: f64 = 0.7;
        let phi_p: f64 = -1.9;
        let coeffs = TransferCoeffs {
            cx: c(0.0, 0.0),
            cy: c(0.0, phi).exp(),
            cpx: c(0.0, phi_p).exp(),
            cpy: c(0.0, 0.0),
            b: 0.0,
            phi: Some(phi),
            phi_prime: Some(phi_p),
            final_value_residuals: [0.0; 4],
        };
        let p = predicted_final_state(&coeffs, FockLabel::new(1, 0));
        assert!((p.amplitude(0, 1) - c(0.0, -phi).exp()).norm() < 1e-15);
        assert!(p.population(1, 0) < 1e-30);
        let p = predicted_final_state(&coeffs, FockLabel::new(2, 1));
        assert!((p.amplitude(1, 2) - c(0.0, -(2.0 * phi + phi_p)).exp()).norm() < 1e-14);
    }

    #[test]
    fn label_parsing() {
        assert_eq!("2,1".parse::<FockLabel>().unwrap(), FockLabel::new(2, 1));
        assert!("2".parse::<FockLabel>().is_err());
        assert_eq!(FockLabel::table_labels().len(), 12);
    }
}
