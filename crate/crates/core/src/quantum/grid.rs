use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::classical::FockLabel;
use crate::error::{Error, Result};
use crate::ode;
use crate::protocol::PotentialSchedule;
use crate::quantum::hermite;

/// Uniform periodic mesh on `[−lx, lx) × [−ly, ly)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

/// Floor on `|ω²|` when sizing grids through repeller windows.
pub const OMEGA_SQ_FLOOR: f64 = 0.1;
/// Grid half-width in units of the widest oscillator length.
pub const WIDTHS_PER_HALF_WIDTH: f64 = 8.0;

impl SpatialGrid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        for n in [nx, ny] {
            if n < 64 || !n.is_power_of_two() {
                return Err(Error::InvalidInput(format!(
                    "grid sizes must be powers of two >= 64, got {n}"
                )));
            }
        }
        if !(lx > 0.0 && ly > 0.0) {
            return Err(Error::InvalidInput("grid half-widths must be positive".into()));
        }
        Ok(Self { nx, ny, lx, ly })
    }

    pub fn square(n: usize, half_width: f64) -> Result<Self> {
        Self::new(n, n, half_width, half_width)
    }

    /// Square `n × n` grid whose half-width is eight oscillator lengths of the
    /// loosest direction met along the protocol, `|ω²|^{-1/4}` with `|ω²|`
    /// floored at [`OMEGA_SQ_FLOOR`].
    pub fn auto(schedule: &dyn PotentialSchedule, n: usize) -> Result<Self> {
        let mut min_abs = f64::INFINITY;
        let mut prev_lo: Option<f64> = None;
        for t in ode::uniform_grid(schedule.duration(), 400) {
            let e = schedule.potential(t)?.eigen();
            min_abs = min_abs.min(e.lo.abs()).min(e.hi.abs());
            // a sign change between samples passes through ω² = 0
            if prev_lo.is_some_and(|p| p * e.lo <= 0.0) {
                min_abs = 0.0;
            }
            prev_lo = Some(e.lo);
        }
        let width = min_abs.max(OMEGA_SQ_FLOOR).powf(-0.25);
        Self::square(n, WIDTHS_PER_HALF_WIDTH * width)
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.lx / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.ly / self.ny as f64
    }

    pub fn cell(&self) -> f64 {
        self.dx() * self.dy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| -self.lx + self.dx() * i as f64).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.ny).map(|j| -self.ly + self.dy() * j as f64).collect()
    }

    /// FFT-ordered wavenumbers.
    fn wavenumbers(n: usize, half_width: f64) -> Vec<f64> {
        let dk = PI / half_width;
        (0..n)
            .map(|i| if i < n / 2 { i as f64 } else { i as f64 - n as f64 } * dk)
            .collect()
    }

    pub fn kxs(&self) -> Vec<f64> {
        Self::wavenumbers(self.nx, self.lx)
    }

    pub fn kys(&self) -> Vec<f64> {
        Self::wavenumbers(self.ny, self.ly)
    }
}

/// Complex amplitudes stored x-major: `psi[i * ny + j] = ψ(x_i, y_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionGrid {
    pub grid: SpatialGrid,
    pub psi: Vec<Complex64>,
}

impl WavefunctionGrid {
    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            psi: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.cell()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        if n > 0.0 {
            let s = 1.0 / n;
            self.psi.iter_mut().for_each(|z| *z *= s);
        }
    }

    /// Largest `|ψ|` on the outermost rows and columns.
    pub fn boundary_max(&self) -> f64 {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        let mut worst = 0.0_f64;
        for i in 0..nx {
            for j in 0..ny {
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    worst = worst.max(self.psi[i * ny + j].norm());
                }
            }
        }
        worst
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &WavefunctionGrid) -> Complex64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell()
    }

    pub fn linear_combination(terms: &[(Complex64, &WavefunctionGrid)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("empty combination".into()))?;
        let mut out = WavefunctionGrid::zeros(first.1.grid);
        for (c, w) in terms {
            if w.grid != out.grid {
                return Err(Error::InvalidInput("mismatched grids".into()));
            }
            for (o, v) in out.psi.iter_mut().zip(&w.psi) {
                *o += c * v;
            }
        }
        Ok(out)
    }
}

/// Product eigenstate `φ_n^{(w1)}(x) φ_k^{(w2)}(y)` of the initial trap.
pub fn initial_state(label: FockLabel, w1: f64, w2: f64, grid: &SpatialGrid) -> Result<WavefunctionGrid> {
    let fx = hermite::ho_eigenfunction(label.n as usize, w1, &grid.xs())?;
    let fy = hermite::ho_eigenfunction(label.k as usize, w2, &grid.ys())?;
    let mut w = WavefunctionGrid::zeros(*grid);
    for (i, &a) in fx.iter().enumerate() {
        for (j, &b) in fy.iter().enumerate() {
            w.psi[i * grid.ny + j] = Complex64::new(a * b, 0.0);
        }
    }
    w.normalize();
    Ok(w)
}

/// 2D FFT by rows–transpose–rows. The spectral layout is transposed:
/// `spec[j * nx + i]` holds wavenumber `(kx_i, ky_j)`.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_y: Arc<dyn Fft<f64>>,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    buffer: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(grid: &SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_y = planner.plan_fft_forward(grid.ny);
        let fwd_x = planner.plan_fft_forward(grid.nx);
        let inv_y = planner.plan_fft_inverse(grid.ny);
        let inv_x = planner.plan_fft_inverse(grid.nx);
        let scratch_len = [&fwd_y, &fwd_x, &inv_y, &inv_x]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            nx: grid.nx,
            ny: grid.ny,
            fwd_y,
            fwd_x,
            inv_y,
            inv_x,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            buffer: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    fn transpose(src: &[Complex64], dst: &mut [Complex64], rows: usize, cols: usize) {
        const BLOCK: usize = 32;
        for rb in (0..rows).step_by(BLOCK) {
            for cb in (0..cols).step_by(BLOCK) {
                for r in rb..(rb + BLOCK).min(rows) {
                    for c in cb..(cb + BLOCK).min(cols) {
                        dst[c * rows + r] = src[r * cols + c];
                    }
                }
            }
        }
    }

    /// Position layout in, transposed spectral layout out (unnormalised).
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.fwd_y.process_with_scratch(data, &mut self.scratch);
        Self::transpose(data, &mut self.buffer, self.nx, self.ny);
        self.fwd_x.process_with_scratch(&mut self.buffer, &mut self.scratch);
        data.copy_from_slice(&self.buffer);
    }

    /// Transposed spectral layout in, position layout out, normalised so that
    /// `inverse(forward(ψ)) = ψ`.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inv_x.process_with_scratch(data, &mut self.scratch);
        Self::transpose(data, &mut self.buffer, self.ny, self.nx);
        self.inv_y.process_with_scratch(&mut self.buffer, &mut self.scratch);
        let s = 1.0 / (self.nx * self.ny) as f64;
        for (d, b) in data.iter_mut().zip(&self.buffer) {
            *d = b * s;
        }
    }
}

/// `⟨p_x² + p_y²⟩/2` of a normalised state by spectral differentiation.
pub fn kinetic_energy(w: &WavefunctionGrid, fft: &mut Fft2) -> f64 {
    let mut spec = w.psi.clone();
    fft.forward(&mut spec);
    kinetic_from_spectrum(&spec, &w.grid)
}

pub(crate) fn kinetic_from_spectrum(spec: &[Complex64], grid: &SpatialGrid) -> f64 {
    let (kx, ky) = (grid.kxs(), grid.kys());
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, kyj) in ky.iter().enumerate() {
        for (i, kxi) in kx.iter().enumerate() {
            let p = spec[j * grid.nx + i].norm_sqr();
            num += p * 0.5 * (kxi * kxi + kyj * kyj);
            den += p;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// `⟨½ XᵀMX⟩` of a state (divided by its norm).
pub fn potential_energy(w: &WavefunctionGrid, m: &crate::linalg::SymMat2) -> f64 {
    let (xs, ys) = (w.grid.xs(), w.grid.ys());
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let p = w.psi[i * w.grid.ny + j].norm_sqr();
            num += p * 0.5 * (m.a11 * x * x + 2.0 * m.a12 * x * y + m.a22 * y * y);
            den += p;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn energy(w: &WavefunctionGrid, m: &crate::linalg::SymMat2, fft: &mut Fft2) -> f64 {
    kinetic_energy(w, fft) + potential_energy(w, m)
}
