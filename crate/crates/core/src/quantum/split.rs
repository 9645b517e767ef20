//! Strang-split spectral propagation of the 2D Schrödinger equation.
//!
//! One step is `e^{−iT dt/2} e^{−iV(t+dt/2) dt} e^{−iT dt/2}`. Consecutive
//! half kinetic steps are merged, so a step costs one forward and one
//! inverse FFT. States in a batch share the potential phase of each step.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMat2;
use crate::protocol::PotentialSchedule;
use crate::quantum::grid::{kinetic_from_spectrum, potential_energy, Fft2, SpatialGrid, WavefunctionGrid};

/// Default step count: `dt = t_f / 2¹⁴`.
pub const DEFAULT_SPLIT_STEPS: usize = 1 << 14;
pub const NORM_DRIFT_TOL: f64 = 1e-6;
pub const BOUNDARY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub n_steps: usize,
    pub dt: f64,
    /// `|‖ψ(t_f)‖² − ‖ψ(0)‖²|` per state.
    pub norm_drift: Vec<f64>,
    /// Largest boundary amplitude seen per state.
    pub boundary: Vec<f64>,
}

impl EvolutionReport {
    /// Quality gate for state `i`.
    pub fn check(&self, i: usize) -> Result<()> {
        let (drift, edge) = (self.norm_drift[i], self.boundary[i]);
        if drift > NORM_DRIFT_TOL {
            return Err(Error::PropagationQuality(format!(
                "norm drift {drift:e} exceeds {NORM_DRIFT_TOL:e}"
            )));
        }
        if edge > BOUNDARY_TOL {
            return Err(Error::PropagationQuality(format!(
                "boundary amplitude {edge:e} exceeds {BOUNDARY_TOL:e}; enlarge the grid"
            )));
        }
        Ok(())
    }

    pub fn check_all(&self) -> Result<()> {
        (0..self.norm_drift.len()).try_for_each(|i| self.check(i))
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_boundary(&self) -> f64 {
        self.boundary.iter().copied().fold(0.0, f64::max)
    }
}

/// Snapshot handed to an observer at a step boundary.
pub struct Snapshot<'a> {
    pub t: f64,
    pub m: SymMat2,
    pub states: &'a [WavefunctionGrid],
    /// `⟨H(t)⟩` of each state.
    pub energies: &'a [f64],
}

fn phase(angle: f64) -> Complex64 {
    let (s, c) = angle.sin_cos();
    Complex64::new(c, -s)
}

fn kinetic_phases(grid: &SpatialGrid, tau: f64) -> Vec<Complex64> {
    let (kx, ky) = (grid.kxs(), grid.kys());
    let mut out = Vec::with_capacity(grid.len());
    for kyj in &ky {
        for kxi in &kx {
            out.push(phase(0.5 * (kxi * kxi + kyj * kyj) * tau));
        }
    }
    out
}

fn potential_phases(grid: &SpatialGrid, m: &SymMat2, dt: f64, out: &mut [Complex64]) {
    let (xs, ys) = (grid.xs(), grid.ys());
    let ay: Vec<Complex64> = ys.iter().map(|y| phase(0.5 * m.a22 * y * y * dt)).collect();
    let dy = grid.dy();
    for (i, &x) in xs.iter().enumerate() {
        let ax = phase(0.5 * m.a11 * x * x * dt);
        let row = &mut out[i * grid.ny..(i + 1) * grid.ny];
        if m.a12 == 0.0 {
            for (o, a) in row.iter_mut().zip(&ay) {
                *o = ax * a;
            }
        } else {
            // the cross term e^{−i M12 x y dt} is geometric along the row
            let c = m.a12 * x * dt;
            let ratio = phase(c * dy);
            let mut cross = ax * phase(c * ys[0]);
            for (o, a) in row.iter_mut().zip(&ay) {
                *o = cross * a;
                cross *= ratio;
            }
        }
    }
}

fn multiply(data: &mut [Complex64], factors: &[Complex64]) {
    for (d, f) in data.iter_mut().zip(factors) {
        *d *= f;
    }
}

fn multiply_all(states: &mut [WavefunctionGrid], factors: &[Complex64]) {
    for s in states.iter_mut() {
        multiply(&mut s.psi, factors);
    }
}

/// Converts spectral states to position space for an observer.
fn emit(
    t: f64,
    m: SymMat2,
    spectral: &[WavefunctionGrid],
    fft: &mut Fft2,
    boundary: &mut [f64],
    observer: &mut dyn FnMut(&Snapshot<'_>),
) {
    let mut pos = Vec::with_capacity(spectral.len());
    let mut energies = Vec::with_capacity(spectral.len());
    for (s, edge) in spectral.iter().zip(boundary.iter_mut()) {
        let kin = kinetic_from_spectrum(&s.psi, &s.grid);
        let mut w = s.clone();
        fft.inverse(&mut w.psi);
        energies.push(kin + potential_energy(&w, &m));
        *edge = edge.max(w.boundary_max());
        pos.push(w);
    }
    observer(&Snapshot {
        t,
        m,
        states: &pos,
        energies: &energies,
    });
}

/// Sequential propagation of one batch; returns per-state boundary maxima.
fn run(
    states: &mut [WavefunctionGrid],
    schedule: &dyn PotentialSchedule,
    n_steps: usize,
    observe_every: Option<usize>,
    observer: &mut dyn FnMut(&Snapshot<'_>),
) -> Result<Vec<f64>> {
    let grid = states[0].grid;
    let tf = schedule.duration();
    let dt = tf / n_steps as f64;
    let mut fft = Fft2::new(&grid);
    let half_kin = kinetic_phases(&grid, 0.5 * dt);
    let full_kin = kinetic_phases(&grid, dt);
    let mut pot = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut boundary = vec![0.0; states.len()];

    for s in states.iter_mut() {
        fft.forward(&mut s.psi);
    }
    if observe_every.is_some() {
        emit(0.0, schedule.potential(0.0)?, states, &mut fft, &mut boundary, observer);
    }
    multiply_all(states, &half_kin);
    for step in 0..n_steps {
        let t_mid = (step as f64 + 0.5) * dt;
        potential_phases(&grid, &schedule.potential(t_mid)?, dt, &mut pot);
        for s in states.iter_mut() {
            fft.inverse(&mut s.psi);
            multiply(&mut s.psi, &pot);
            fft.forward(&mut s.psi);
        }
        let last = step + 1 == n_steps;
        let observe = observe_every.is_some_and(|k| last || (k > 0 && (step + 1) % k == 0));
        if last || observe {
            multiply_all(states, &half_kin);
            if observe {
                let t = if last { tf } else { (step + 1) as f64 * dt };
                emit(t, schedule.potential(t)?, states, &mut fft, &mut boundary, observer);
            }
            if !last {
                multiply_all(states, &half_kin);
            }
        } else {
            multiply_all(states, &full_kin);
        }
    }
    for (s, edge) in states.iter_mut().zip(boundary.iter_mut()) {
        fft.inverse(&mut s.psi);
        *edge = edge.max(s.boundary_max());
    }
    Ok(boundary)
}

/// Propagates every state in `states` over `[0, schedule.duration()]`.
///
/// `observe_every = Some(k)` calls `observer` at `t = 0`, after every `k`-th
/// step and at the final step. Without an observer the batch is split across
/// the rayon pool. Quality limits are not enforced here; see
/// [`EvolutionReport::check`].
pub fn evolve_batch(
    states: &mut [WavefunctionGrid],
    schedule: &dyn PotentialSchedule,
    n_steps: usize,
    observe_every: Option<usize>,
    mut observer: impl FnMut(&Snapshot<'_>),
) -> Result<EvolutionReport> {
    let Some(first) = states.first() else {
        return Err(Error::InvalidInput("no states to propagate".into()));
    };
    let grid = first.grid;
    if states.iter().any(|s| s.grid != grid) {
        return Err(Error::InvalidInput("states live on different grids".into()));
    }
    if n_steps == 0 {
        return Err(Error::InvalidInput("step count must be positive".into()));
    }
    let norms0: Vec<f64> = states.iter().map(|s| s.norm_sqr()).collect();
    let threads = rayon::current_num_threads().max(1);
    let boundary = if observe_every.is_none() && threads > 1 && states.len() > 1 {
        let chunk = states.len().div_ceil(threads);
        let parts: Vec<Result<Vec<f64>>> = states
            .par_chunks_mut(chunk)
            .map(|c| run(c, schedule, n_steps, None, &mut |_| {}))
            .collect();
        let mut all = Vec::with_capacity(states.len());
        for p in parts {
            all.extend(p?);
        }
        all
    } else {
        run(states, schedule, n_steps, observe_every, &mut observer)?
    };
    let norm_drift = states.iter().zip(&norms0).map(|(s, n0)| (s.norm_sqr() - n0).abs()).collect();
    Ok(EvolutionReport {
        n_steps,
        dt: schedule.duration() / n_steps as f64,
        norm_drift,
        boundary,
    })
}

/// Propagates a single state, enforcing the quality limits.
pub fn split_operator_evolve(
    psi0: &WavefunctionGrid,
    schedule: &dyn PotentialSchedule,
    n_steps: usize,
) -> Result<WavefunctionGrid> {
    let mut states = vec![psi0.clone()];
    evolve_batch(&mut states, schedule, n_steps, None, |_| {})?.check(0)?;
    Ok(states.pop().expect("one state"))
}
