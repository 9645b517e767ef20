//! Projection of a final wavefunction onto the eigenbasis of the final trap.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::FinalFrame;
use crate::error::{Error, Result};
use crate::linalg::SymMat2;
use crate::protocol::ProtocolSpec;
use crate::quantum::grid::{energy, Fft2, WavefunctionGrid};
use crate::quantum::hermite;

/// Leakage above which the analysis carries a warning.
pub const LEAKAGE_WARN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlap {
    pub m: u32,
    pub l: u32,
    /// `⟨m, l|ψ⟩` in the final frame.
    pub amplitude: Complex64,
    pub population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalAnalysis {
    pub cutoff: u32,
    /// All `(m, l)` with `m + l ≤ cutoff`, ordered by total then `l`.
    pub overlaps: Vec<Overlap>,
    /// `⟨H(t_f)⟩`
    pub energy: f64,
    /// `1 − Σ populations`
    pub leakage: f64,
    pub warning: Option<String>,
}

impl FinalAnalysis {
    pub fn amplitude(&self, m: u32, l: u32) -> Complex64 {
        self.overlaps
            .iter()
            .find(|o| o.m == m && o.l == l)
            .map_or(Complex64::new(0.0, 0.0), |o| o.amplitude)
    }

    pub fn population(&self, m: u32, l: u32) -> f64 {
        self.amplitude(m, l).norm_sqr()
    }

    /// Population outside the subspace `m + l = total`.
    pub fn outside_subspace(&self, total: u32) -> f64 {
        self.overlaps
            .iter()
            .filter(|o| o.m + o.l != total)
            .map(|o| o.population)
            .sum::<f64>()
            + self.leakage.max(0.0)
    }

    /// Populations on `m + l = total`, ordered by `l`.
    pub fn subspace_populations(&self, total: u32) -> Vec<f64> {
        (0..=total).map(|l| self.population(total - l, l)).collect()
    }
}

/// Overlaps of `psi` with the product eigenstates `φ_m(q_x) φ_l(q_y)` of the
/// final frame, `q_x = x_axis·r`, and `⟨H⟩` under the potential `m_final`.
pub fn analyze_final(psi: &WavefunctionGrid, frame: &FinalFrame, m_final: &SymMat2, cutoff: u32) -> Result<FinalAnalysis> {
    if !(frame.wx > 0.0 && frame.wy > 0.0) {
        return Err(Error::InvalidInput("final frame frequencies must be positive".into()));
    }
    let g = psi.grid;
    let c = cutoff as usize;
    let spacing = g.dx().max(g.dy());
    hermite::check_resolution(c, frame.wx.max(frame.wy), spacing)?;

    let (xs, ys) = (g.xs(), g.ys());
    let mut acc = vec![Complex64::new(0.0, 0.0); (c + 1) * (c + 1)];
    let mut hx = vec![0.0; c + 1];
    let mut hy = vec![0.0; c + 1];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let v = psi.psi[i * g.ny + j];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            let qx = frame.x_axis[0] * x + frame.x_axis[1] * y;
            let qy = frame.y_axis[0] * x + frame.y_axis[1] * y;
            hermite::hermite_functions_at(c, frame.wx, qx, &mut hx);
            hermite::hermite_functions_at(c, frame.wy, qy, &mut hy);
            for m in 0..=c {
                let a = v * hx[m];
                for l in 0..=(c - m) {
                    acc[m * (c + 1) + l] += a * hy[l];
                }
            }
        }
    }
    let cell = g.cell();
    let mut overlaps = Vec::new();
    for total in 0..=cutoff {
        for l in 0..=total {
            let m = total - l;
            let amplitude = acc[m as usize * (c + 1) + l as usize] * cell;
            overlaps.push(Overlap {
                m,
                l,
                amplitude,
                population: amplitude.norm_sqr(),
            });
        }
    }
    let norm = psi.norm_sqr();
    let leakage = norm - overlaps.iter().map(|o| o.population).sum::<f64>();
    let mut fft = Fft2::new(&g);
    let energy = energy(psi, m_final, &mut fft);
    let warning = (leakage > LEAKAGE_WARN).then(|| {
        format!("leakage {leakage:.3e} beyond cutoff {cutoff}; raise the cutoff or refine the grid")
    });
    Ok(FinalAnalysis {
        cutoff,
        overlaps,
        energy,
        leakage,
        warning,
    })
}

/// [`analyze_final`] in the final frame of a designed protocol.
pub fn analyze_protocol_final(psi: &WavefunctionGrid, spec: &ProtocolSpec, cutoff: u32) -> Result<FinalAnalysis> {
    analyze_final(psi, &FinalFrame::of(spec), &spec.final_potential(), cutoff)
}
