//! Multi-threaded sweeps and transfer batches with deterministic ordering.

use dualrail_core::sweep::run_sample;
use dualrail_core::{
    run_transfer, LogicalQubit, MeasurementSchedule, SpectralPropagator, SweepConfig, SweepRecord, TransferRecord,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;

/// Same records, in the same order, as [`dualrail_core::run_sweep`].
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRecord>> {
    config.validate()?;
    let jobs: Vec<_> = config
        .cells()
        .into_iter()
        .enumerate()
        .flat_map(|(index, cell)| (0..config.samples).map(move |sample| (index, cell, sample)))
        .collect();
    let records = jobs
        .into_par_iter()
        .map(|(index, cell, sample)| run_sample(config, index, cell, sample))
        .collect::<dualrail_core::Result<Vec<_>>>()?;
    Ok(records)
}

/// Generator for trial `trial`: one ChaCha stream per trial under a shared seed.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `trials` independent transfers of `qubit`.
pub fn run_transfers(
    qubit: LogicalQubit,
    schedule: &MeasurementSchedule,
    tolerance: f64,
    prop1: &SpectralPropagator,
    prop2: &SpectralPropagator,
    trials: u64,
    seed: u64,
) -> Result<Vec<TransferRecord>> {
    let records = (0..trials)
        .into_par_iter()
        .map(|trial| run_transfer(qubit, schedule, tolerance, prop1, prop2, &mut trial_rng(seed, trial)))
        .collect::<dualrail_core::Result<Vec<_>>>()?;
    Ok(records)
}
