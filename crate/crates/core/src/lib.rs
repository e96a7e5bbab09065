//! Dual-rail conclusive quantum state transfer over pairs of randomly coupled
//! Heisenberg spin chains.
//!
//! Everything here is pure computation over value types and only needs `alloc`.
//! File formats, parallel sweeps and the command line live in the `dualrail`
//! companion crate.
//!
//! Units throughout: ħ = 1 and J = 1, so energies are in J and times in ħ/J.

#![no_std]
#![deny(unsafe_code)]
// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod dynamics;
pub mod eigen;
mod error;
pub mod fit;
pub mod hamiltonians;
pub mod protocol;
pub mod scheduler;
pub mod sweep;
pub mod tomography;

pub use error::{Error, Result};

/// Complex amplitude type used across the crate.
pub type C64 = num_complex::Complex64;

pub use dynamics::{appendix_identities, projected_trace, AppendixReport, ProjectedTrace, SpectralPropagator};
pub use fit::{fit_scaling, ScalingFit, ScalingPoint};
pub use hamiltonians::{
    build_chain, sample_disorder, single_excitation_matrix, ChainSpec, Convention, DisorderConfig,
    SingleExcitationHamiltonian,
};
pub use protocol::{
    encode, run_round, run_transfer, ExcitationState, LogicalQubit, RoundOutcome, RoundPlan, RoundReport,
    TransferRecord,
};
pub use scheduler::{build_schedule, find_next_time, MeasurementSchedule, SchedulerConfig};
pub use sweep::{run_sweep, CellSummary, SweepConfig, SweepRecord};
pub use tomography::{
    certify, estimate_endpoints, reconstruct_f_g, CapabilityReport, EndpointFunctions, Shots, TimeGrid,
};
