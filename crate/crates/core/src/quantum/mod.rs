//! Independent checks of designed protocols: spectral wavefunction
//! propagation and phase-space (Wigner) energy transport.

pub mod analysis;
pub mod grid;
pub mod hermite;
pub mod split;
pub mod verify;
pub mod wigner;

pub use analysis::{analyze_final, analyze_protocol_final, FinalAnalysis, Overlap};
pub use grid::{initial_state, Fft2, SpatialGrid, WavefunctionGrid};
pub use hermite::{ho_eigenfunction, wigner_fock};
pub use split::{evolve_batch, split_operator_evolve, EvolutionReport, Snapshot, DEFAULT_SPLIT_STEPS};
pub use wigner::{wigner_final_energy, PhaseSpaceMesh, WignerEnergy};
pub use verify::{verify_protocol, LabelVerification, VerificationReport, VerifyConfig};
