//! Final energies from the initial Wigner function carried along classical
//! trajectories.
//!
//! For a quadratic Hamiltonian the Wigner function is transported by the
//! classical flow, so `⟨H(t_f)⟩ = ∫ W(z, 0) H_cl(Φ z, t_f) dz` where `Φ` is
//! the flow map. Each mesh node is mapped by `Φ`, which the RK4 integrator
//! produces once from four basis trajectories; by linearity this equals
//! integrating every node separately with the same steps.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::FockLabel;
use crate::error::{Error, Result};
use crate::ode;
use crate::protocol::PotentialSchedule;
use crate::quantum::hermite::wigner_fock_reduced;

pub const DEFAULT_NODES_PER_AXIS: usize = 64;
/// Largest tolerated `|1 − ∫ W|` on the mesh.
pub const TAIL_MASS_TOL: f64 = 1e-4;

/// Gauss–Hermite rule for `∫ e^{−ξ²} f(ξ) dξ` by the Golub–Welsch eigenvalue method.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidInput("quadrature needs at least one node".into()));
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        let b = (i as f64 / 2.0).sqrt();
        jacobi[(i, i - 1)] = b;
        jacobi[(i - 1, i)] = b;
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], std::f64::consts::PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    // symmetrise against rounding in the eigensolver
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let node = 0.5 * (pairs[j].0 - pairs[i].0);
        let weight = 0.5 * (pairs[i].1 + pairs[j].1);
        pairs[i] = (-node, weight);
        pairs[j] = (node, weight);
    }
    if n % 2 == 1 {
        pairs[n / 2].0 = 0.0;
    }
    Ok(pairs.into_iter().unzip())
}

/// One `(q, p)` plane of the tensor mesh, in units matched to an oscillator
/// of frequency `omega`: `q = ξ/√ω`, `p = η√ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisMesh {
    pub omega: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    /// Gauss–Hermite weights in the scaled variables (shared by `q` and `p`).
    pub weights: Vec<f64>,
}

impl AxisMesh {
    pub fn new(omega: f64, nodes: usize) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        let (xi, weights) = gauss_hermite(nodes)?;
        let s = omega.sqrt();
        Ok(Self {
            omega,
            q: xi.iter().map(|v| v / s).collect(),
            p: xi.iter().map(|v| v * s).collect(),
            weights,
        })
    }

    /// Largest scaled radius covered, in units of the ground-state width.
    pub fn reach(&self) -> f64 {
        self.q.last().map_or(0.0, |q| q * self.omega.sqrt())
    }

    /// `(q, p, weight·W_n(q,p))` for every node of the plane. The Gaussian
    /// factor of `W_n` is the quadrature weight function.
    fn weighted_nodes(&self, n: u32) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.q.len() * self.p.len());
        let s = self.omega.sqrt();
        for (a, &q) in self.q.iter().enumerate() {
            for (b, &p) in self.p.iter().enumerate() {
                let (xi, eta) = (q * s, p / s);
                let w = self.weights[a] * self.weights[b] * wigner_fock_reduced(n as usize, xi * xi + eta * eta);
                out.push((q, p, w));
            }
        }
        out
    }
}

/// Tensor-product mesh over `(x, p_x) × (y, p_y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceMesh {
    pub x: AxisMesh,
    pub y: AxisMesh,
}

impl PhaseSpaceMesh {
    pub fn new(w1: f64, w2: f64, nodes_per_axis: usize) -> Result<Self> {
        Ok(Self {
            x: AxisMesh::new(w1, nodes_per_axis)?,
            y: AxisMesh::new(w2, nodes_per_axis)?,
        })
    }

    pub fn default_for(w1: f64, w2: f64) -> Result<Self> {
        Self::new(w1, w2, DEFAULT_NODES_PER_AXIS)
    }

    pub fn node_count(&self) -> usize {
        self.x.q.len() * self.x.p.len() * self.y.q.len() * self.y.p.len()
    }

    /// `∫∫ W_n dq dp` on one plane.
    pub fn plane_mass(axis: &AxisMesh, n: u32) -> f64 {
        axis.weighted_nodes(n).iter().map(|t| t.2).sum()
    }

    /// `|1 − ∫ W|` for the product state `label`.
    pub fn tail_mass(&self, label: FockLabel) -> f64 {
        (1.0 - Self::plane_mass(&self.x, label.n) * Self::plane_mass(&self.y, label.k)).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerEnergy {
    pub energy: f64,
    pub tail_mass: f64,
    pub nodes: usize,
}

/// `⟨H(t_f)⟩` for the initial product state `label` by the phase-space quadrature.
pub fn wigner_final_energy(
    label: FockLabel,
    schedule: &dyn PotentialSchedule,
    mesh: &PhaseSpaceMesh,
    steps: usize,
) -> Result<WignerEnergy> {
    let tail_mass = mesh.tail_mass(label);
    if tail_mass > TAIL_MASS_TOL {
        return Err(Error::MeshCoverage { tail_mass });
    }
    let phi = ode::fundamental_matrix(schedule, steps)?;
    let m = schedule.potential(schedule.duration())?;
    let xs = mesh.x.weighted_nodes(label.n);
    let ys = mesh.y.weighted_nodes(label.k);

    // partial sums per x-plane node, reduced in a fixed order
    let partial: Vec<f64> = xs
        .par_iter()
        .map(|&(x, px, wx)| {
            if wx == 0.0 {
                return 0.0;
            }
            let mut sum = 0.0;
            for &(y, py, wy) in &ys {
                let z = [x, y, px, py];
                let mut f = [0.0; 4];
                for (r, row) in phi.iter().enumerate() {
                    f[r] = row[0] * z[0] + row[1] * z[1] + row[2] * z[2] + row[3] * z[3];
                }
                let h = 0.5 * (f[2] * f[2] + f[3] * f[3])
                    + 0.5 * (m.a11 * f[0] * f[0] + 2.0 * m.a12 * f[0] * f[1] + m.a22 * f[1] * f[1]);
                sum += wy * h;
            }
            wx * sum
        })
        .collect();
    Ok(WignerEnergy {
        energy: partial.iter().sum(),
        tail_mass,
        nodes: mesh.node_count(),
    })
}
