//! Fixed-step classical RK4 for Newton's equations `ü = −M(t)·u` in 2D.

use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::SymMat2;
use crate::protocol::PotentialSchedule;

/// Default number of RK4 steps for trajectories and unitaries.
pub const DEFAULT_STEPS: usize = 10_000;

pub trait Scalar: Copy + Add<Output = Self> + Mul<f64, Output = Self> + Send + Sync {}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// `n_steps + 1` uniformly spaced times with exact endpoints `0` and `tf`.
pub fn uniform_grid(tf: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps.max(1);
    (0..=n)
        .map(|i| if i == n { tf } else { tf * i as f64 / n as f64 })
        .collect()
}

/// Phase-space point `(u_x, u_y, u̇_x, u̇_y)`.
pub type Newton<T> = [T; 4];

#[inline]
pub fn newton_rhs<T: Scalar>(m: &SymMat2, y: &Newton<T>) -> Newton<T> {
    [
        y[2],
        y[3],
        (y[0] * m.a11 + y[1] * m.a12) * -1.0,
        (y[0] * m.a12 + y[1] * m.a22) * -1.0,
    ]
}

#[inline]
fn axpy<T: Scalar>(y: &Newton<T>, h: f64, k: &Newton<T>) -> Newton<T> {
    [y[0] + k[0] * h, y[1] + k[1] * h, y[2] + k[2] * h, y[3] + k[3] * h]
}

/// Advances every state in `states` from `0` to `schedule.duration()` in
/// `steps` RK4 steps. The potential is evaluated once per stage time and
/// shared across the batch.
pub fn propagate_newton<T: Scalar>(
    schedule: &dyn PotentialSchedule,
    states: &mut [Newton<T>],
    steps: usize,
) -> Result<()> {
    propagate_newton_observed(schedule, states, steps, |_, _| {})
}

/// Like [`propagate_newton`], calling `observe(t, states)` at every grid time
/// (including `t = 0`).
pub fn propagate_newton_observed<T: Scalar>(
    schedule: &dyn PotentialSchedule,
    states: &mut [Newton<T>],
    steps: usize,
    mut observe: impl FnMut(f64, &[Newton<T>]),
) -> Result<()> {
    if steps == 0 {
        return Err(Error::InvalidInput("step count must be positive".into()));
    }
    let grid = uniform_grid(schedule.duration(), steps);
    observe(0.0, states);
    let mut m_left = schedule.potential(grid[0])?;
    for w in grid.windows(2) {
        let (t, h) = (w[0], w[1] - w[0]);
        let m_mid = schedule.potential(t + 0.5 * h)?;
        let m_right = schedule.potential(w[1])?;
        for y in states.iter_mut() {
            let k1 = newton_rhs(&m_left, y);
            let k2 = newton_rhs(&m_mid, &axpy(y, 0.5 * h, &k1));
            let k3 = newton_rhs(&m_mid, &axpy(y, 0.5 * h, &k2));
            let k4 = newton_rhs(&m_right, &axpy(y, h, &k3));
            for i in 0..4 {
                y[i] = y[i] + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        observe(w[1], states);
        m_left = m_right;
    }
    Ok(())
}

/// Numerical flow map `Φ` with `X(t_f) = Φ·X(0)` for `X = (x, y, p_x, p_y)`.
pub fn fundamental_matrix(schedule: &dyn PotentialSchedule, steps: usize) -> Result<[[f64; 4]; 4]> {
    let mut cols: Vec<Newton<f64>> = (0..4)
        .map(|c| {
            let mut e = [0.0; 4];
            e[c] = 1.0;
            e
        })
        .collect();
    propagate_newton(schedule, &mut cols, steps)?;
    let mut phi = [[0.0; 4]; 4];
    for (c, col) in cols.iter().enumerate() {
        for r in 0..4 {
            phi[r][c] = col[r];
        }
    }
    Ok(phi)
}
