//! Exact two-qubit objects: polarization labels, pure states, density
//! matrices, waveplates, entanglement metrics and entropies.
//!
//! Basis ordering is `(HH, HV, VH, VV)`; the first qubit is the biexciton
//! photon, the second the exciton photon. Circular states follow
//! `R = (H + iV)/√2`, `L = (H − iV)/√2` everywhere in the crate.

mod density;
mod entropy;
pub mod linalg;
mod pol;
mod state;
mod waveplate;

pub use density::{
    concurrence, fidelity_pure, max_entangled_fidelity, projector, trace_distance, DensityMatrix,
};
pub use entropy::{binary_entropy, quantum_rel_entropy, shannon_entropy, von_neumann_entropy};
pub use linalg::{Mat2, Mat4, C64};
pub use pol::PolLabel;
pub use state::{
    bell_state, cascade_phase, cascade_state, fss_frequency_mhz, fss_period_ns, BellKind,
    TwoQubitState, HBAR_UEV_NS, PLANCK_UEV_NS,
};
pub use waveplate::{
    general_waveplate, local_rotate, local_unitary, waveplate_unitary, LocalUnitaryParams,
    WaveplateKind,
};
