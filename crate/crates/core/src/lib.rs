//! Desk-scale statevector quantum simulator and algorithm library.
//!
//! Everything here runs on a classical machine: states are dense vectors of
//! `Complex64` amplitudes over computational basis indices, gates are applied
//! with stride kernels, and each algorithm family ships with an independent
//! dense linear-algebra oracle that its tests compare against.

pub mod amplitude;
pub mod encoding;
pub mod error;
pub mod fourier;
pub mod gates;
pub mod ham_sim;
pub mod linalg;
pub mod qlinalg;
pub mod qsp;
pub mod rng;
pub mod state;
pub mod variational;
pub mod walks;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rng::{rng_from_seed, rng_stream, SimRng};
pub use state::{random_state, StateVector};

/// Hard cap on simulator width, overridable via `QSTAT_MAX_QUBITS`.
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Effective qubit cap: `QSTAT_MAX_QUBITS` if set and parseable, else 24.
pub fn max_qubits() -> usize {
    std::env::var("QSTAT_MAX_QUBITS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(DEFAULT_MAX_QUBITS)
}
