//! End-to-end helpers shared by the command line, the examples and the tests:
//! simulate the aging matrix, prepare it, and fit the surrogate.

use serde::{Deserialize, Serialize};

use crate::aging::{self, AgingTestResult, AgingTestSpec, OracleParams, RunOptions};
use crate::dataprep::{self, Mode, PrepConfig};
use crate::error::Result;
use crate::nnbd::{self, DegradationModel, TrainConfig, TrainReport};

pub const DEFAULT_SEED: u64 = 42;
/// Training share of the aging tests.
pub const DEFAULT_SPLIT: f64 = 0.8;

/// Run options used for training datasets: noisy, strided recording.
pub fn training_run_options() -> RunOptions {
    RunOptions {
        max_rows: Some(aging::DEFAULT_MAX_ROWS),
        ..RunOptions::default()
    }
}

/// The default 261-test matrix, simulated with the default oracle.
pub fn default_aging_results(seed: u64) -> Result<Vec<AgingTestResult>> {
    let specs = aging::generate_test_matrix(&aging::DEFAULT_TEMPS, &aging::DEFAULT_C_RATES, seed)?;
    aging::run_matrix(&specs, &OracleParams::default(), &training_run_options())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateFit {
    pub model: DegradationModel,
    pub report: TrainReport,
    pub mode: Mode,
    /// Share of held-out rows predicted within the default tolerance.
    pub val_accuracy: f64,
    pub train_rows: usize,
    pub val_rows: usize,
    pub train_tests: Vec<u32>,
    pub val_tests: Vec<u32>,
}

/// Prepares `results` in `mode`, holds out whole tests and trains.
pub fn fit_surrogate(
    results: &[AgingTestResult],
    mode: Mode,
    config: &TrainConfig,
    split_seed: u64,
    split_ratio: f64,
) -> Result<SurrogateFit> {
    let ds = dataprep::build_dataset(results, &PrepConfig::new(mode))?;
    let (train, val) = dataprep::split_by_test(&ds, split_ratio, split_seed)?;
    let (train_s, rest, stats) = dataprep::standardize(&train, &[&val])?;
    let (model, report) = nnbd::train(&train_s, &rest[0], &stats, config)?;
    let val_accuracy = nnbd::accuracy(&model, &rest[0], nnbd::DEFAULT_TOLERANCE)?;
    Ok(SurrogateFit {
        model,
        report,
        mode,
        val_accuracy,
        train_rows: train.len(),
        val_rows: val.len(),
        train_tests: train.groups.iter().map(|g| g.test_id).collect(),
        val_tests: val.groups.iter().map(|g| g.test_id).collect(),
    })
}

/// The surrogate used throughout the examples: default matrix, regressed
/// mode, default training settings.
pub fn default_surrogate(seed: u64) -> Result<SurrogateFit> {
    let results = default_aging_results(seed)?;
    let config = TrainConfig {
        seed,
        ..TrainConfig::default()
    };
    fit_surrogate(&results, Mode::Regressed, &config, seed, DEFAULT_SPLIT)
}

/// Cycle counts at which cumulative degradation is compared.
pub const PRESERVATION_CHECKPOINTS: [usize; 5] = [500, 1000, 1500, 2000, 2500];

/// A deep, full-charge test at room temperature, recorded cycle by cycle.
pub fn reference_aging_spec(noise_seed: u64) -> AgingTestSpec {
    AgingTestSpec {
        test_id: 0,
        initial_soc: 1.0,
        dod: 0.8,
        c_rate: 0.5,
        ambient_temp: 25.0,
        noise_seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreservationRow {
    pub checkpoint: usize,
    /// Relative cumulative difference of the smoothed series from the raw one.
    pub smoothed: f64,
    pub regressed: f64,
}

/// Runs `spec` without striding and compares the processed series with the
/// raw one at each checkpoint.
pub fn preservation_table(
    spec: &AgingTestSpec,
    params: &OracleParams,
    checkpoints: &[usize],
) -> Result<Vec<PreservationRow>> {
    let result = aging::run_aging_test(spec, params)?;
    let report = |mode| -> Result<Vec<(usize, f64)>> {
        let processed = dataprep::process_test(&result, &PrepConfig::new(mode))?;
        dataprep::cumulative_preservation_report(&result.raw_delta, &processed, checkpoints)
    };
    let smoothed = report(Mode::Smoothed)?;
    let regressed = report(Mode::Regressed)?;
    Ok(smoothed
        .iter()
        .zip(&regressed)
        .map(|(&(checkpoint, s), &(_, r))| PreservationRow {
            checkpoint,
            smoothed: s,
            regressed: r,
        })
        .collect())
}
