//! Harmonic-oscillator eigenfunctions and Fock-state Wigner functions.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `φ_0, …, φ_nmax` at a single point, by the normalised three-term recurrence
/// `φ_{n+1} = √(2/(n+1)) ξ φ_n − √(n/(n+1)) φ_{n−1}` with `ξ = √ω x`.
pub fn hermite_functions_at(n_max: usize, omega: f64, x: f64, out: &mut [f64]) {
    debug_assert!(out.len() > n_max);
    let xi = omega.sqrt() * x;
    let mut prev = 0.0;
    let mut cur = (omega / PI).powf(0.25) * (-0.5 * xi * xi).exp();
    out[0] = cur;
    for n in 0..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * xi * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        out[n + 1] = cur;
    }
}

pub fn hermite_function(n: usize, omega: f64, x: f64) -> f64 {
    let mut buf = vec![0.0; n + 1];
    hermite_functions_at(n, omega, x, &mut buf);
    buf[n]
}

/// Smallest number of grid points per local wavelength accepted.
pub const MIN_POINTS_PER_WAVELENGTH: f64 = 4.0;

/// Checks that spacing `dx` resolves `φ_n` of frequency `omega`: the local
/// wavelength at the centre is `2π/√((2n+1)ω)`.
pub fn check_resolution(n: usize, omega: f64, dx: f64) -> Result<()> {
    let wavelength = 2.0 * PI / ((2 * n + 1) as f64 * omega).sqrt();
    let per = wavelength / dx;
    if per < MIN_POINTS_PER_WAVELENGTH {
        return Err(Error::Resolution(format!(
            "n = {n} at omega = {omega} has {per:.2} points per oscillation (need {MIN_POINTS_PER_WAVELENGTH})"
        )));
    }
    Ok(())
}

/// Normalised `φ_n` of frequency `omega` at `x_nodes` (assumed uniformly spaced).
pub fn ho_eigenfunction(n: usize, omega: f64, x_nodes: &[f64]) -> Result<Vec<f64>> {
    if !(omega > 0.0) {
        return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    if x_nodes.len() >= 2 {
        check_resolution(n, omega, (x_nodes[1] - x_nodes[0]).abs())?;
    }
    let mut buf = vec![0.0; n + 1];
    Ok(x_nodes
        .iter()
        .map(|&x| {
            hermite_functions_at(n, omega, x, &mut buf);
            buf[n]
        })
        .collect())
}

/// Laguerre polynomial `L_n(x)`.
pub fn laguerre(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, 1.0 - x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 - x) * cur - kf * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Wigner function of `|n⟩` in scaled variables, without the Gaussian:
/// `((−1)ⁿ/π) L_n(2r²)` where `r² = ωx² + p²/ω`.
pub fn wigner_fock_reduced(n: usize, r2: f64) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign / PI * laguerre(n, 2.0 * r2)
}

/// `W_n(x, p) = ((−1)ⁿ/π) e^{−r²} L_n(2r²)`, `r² = ωx² + p²/ω`.
pub fn wigner_fock(n: usize, omega: f64, x: f64, p: f64) -> f64 {
    let r2 = omega * x * x + p * p / omega;
    (-r2).exp() * wigner_fock_reduced(n, r2)
}
