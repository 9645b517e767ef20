//! Faster-than-adiabatic quantum-number swap protocols for a particle in a
//! rotating, anisotropic 2D harmonic trap.
//!
//! The pipeline runs from [`protocol`] (inverse engineering of `M(t)`)
//! through [`classical`] (transfer coefficients from complex trajectories)
//! and [`tuner`] (choosing λ for perfect transfer) to [`quantum`], which
//! checks the result by wavefunction and phase-space propagation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classical;
pub mod error;
pub mod linalg;
pub mod ode;
pub mod protocol;
pub mod quantum;
pub mod report;
pub mod tuner;

pub use classical::{
    predicted_energy_increment, predicted_final_state, FinalFrame, FinalStatePrediction, FockLabel, TransferCoeffs,
};
pub use error::{Error, Result};
pub use linalg::{CMat2, Mat2, SymMat2};
pub use protocol::{
    tabulate_protocol, DesignPoint, FrameDecomposition, PotentialSchedule, ProtocolSample, ProtocolSpec, ProtocolTable,
    StaticTrap,
};
pub use tuner::{find_perfect_lambda, scan_b, PerfectLambda, SweepCurve, TuneTarget, TunerConfig};
