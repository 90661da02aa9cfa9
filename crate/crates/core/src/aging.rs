//! Synthetic battery aging tests.
//!
//! Each test cycles a cell at fixed depth of discharge, C-rate and ambient
//! temperature from a fixed starting SOC until its state of health falls to
//! the end-of-test threshold. Per-cycle capacity loss comes from a
//! semi-empirical stress-factor model ([`oracle_cycle_loss`]), which acts as
//! the ground truth the neural surrogate is trained against.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients of the stress-factor degradation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    /// Capacity-loss fraction of one reference cycle (full depth, 0.5C, 25 °C, mid SOC, new cell).
    pub k_ref: f64,
    pub dod_exp: f64,
    pub c_coeff: f64,
    pub t_coeff: f64,
    pub t_ref: f64,
    pub soc_coeff: f64,
    pub soh_coeff: f64,
    /// End-of-test state of health.
    pub eol_soh: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self {
            k_ref: 2.0e-5,
            dod_exp: 1.6,
            c_coeff: 0.3,
            t_coeff: 0.035,
            t_ref: 25.0,
            soc_coeff: 0.5,
            soh_coeff: 1.2,
            eol_soh: 0.8,
        }
    }
}

impl OracleParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.k_ref,
            self.dod_exp,
            self.c_coeff,
            self.t_coeff,
            self.t_ref,
            self.soc_coeff,
            self.soh_coeff,
            self.eol_soh,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("oracle coefficients must be finite"));
        }
        if self.k_ref <= 0.0 {
            return Err(Error::param("k_ref must be positive"));
        }
        if self.dod_exp < 1.0 {
            return Err(Error::param("dod_exp must be >= 1"));
        }
        if !(self.eol_soh > 0.0 && self.eol_soh < 1.0) {
            return Err(Error::param("eol_soh must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// The five degradation factors of one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleFeatures {
    pub temp: f64,
    pub c_rate: f64,
    pub soc: f64,
    pub dod: f64,
    pub soh: f64,
}

impl CycleFeatures {
    /// Feature vector in network input order: temperature, C-rate, SOC, DOD, SOH.
    pub fn to_array(&self) -> [f64; 5] {
        [self.temp, self.c_rate, self.soc, self.dod, self.soh]
    }
}

/// Capacity loss (fraction of rated capacity) of one cycle.
pub fn oracle_cycle_loss(f: &CycleFeatures, p: &OracleParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&f.dod) {
        return Err(Error::domain("dod", format!("{} outside [0, 1]", f.dod)));
    }
    if !(f.c_rate > 0.0) || !f.c_rate.is_finite() {
        return Err(Error::domain("c_rate", format!("{} must be positive", f.c_rate)));
    }
    if !f.temp.is_finite() {
        return Err(Error::domain("temp", "non-finite temperature"));
    }
    if !f.soc.is_finite() {
        return Err(Error::domain("soc", "non-finite SOC"));
    }
    if !(f.soh > p.eol_soh - 0.05 && f.soh <= 1.0) {
        return Err(Error::domain(
            "soh",
            format!("{} outside ({}, 1]", f.soh, p.eol_soh - 0.05),
        ));
    }
    let loss = p.k_ref
        * f.dod.powf(p.dod_exp)
        * (p.c_coeff * (f.c_rate - 0.5)).exp()
        * (p.t_coeff * (f.temp - p.t_ref)).exp()
        * (1.0 + p.soc_coeff * (f.soc - 0.5))
        * (1.0 + p.soh_coeff * (1.0 - f.soh));
    Ok(loss.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingTestSpec {
    pub test_id: u32,
    pub initial_soc: f64,
    pub dod: f64,
    pub c_rate: f64,
    pub ambient_temp: f64,
    pub noise_seed: u64,
}

impl AgingTestSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.initial_soc) {
            return Err(Error::domain("initial_soc", "outside [0, 1]"));
        }
        if !(self.dod > 0.0 && self.dod <= 1.0) {
            return Err(Error::domain("dod", format!("{} outside (0, 1]", self.dod)));
        }
        if !(self.c_rate > 0.0) {
            return Err(Error::domain("c_rate", "must be positive"));
        }
        if self.initial_soc - self.dod < -1e-12 {
            return Err(Error::domain(
                "dod",
                format!(
                    "cycle would discharge below empty (soc {} - dod {})",
                    self.initial_soc, self.dod
                ),
            ));
        }
        Ok(())
    }
}

/// One cycle of an aging test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub test_id: u32,
    pub cycle_index: u64,
    pub temp: f64,
    pub c_rate: f64,
    pub soc: f64,
    pub dod: f64,
    /// Start-of-cycle state of health.
    pub soh: f64,
    /// Absolute capacity loss of this cycle.
    pub delta_soh: f64,
    /// `delta_soh / soh`, the surrogate's label.
    pub target_rel: f64,
}

impl CycleRecord {
    pub fn features(&self) -> CycleFeatures {
        CycleFeatures {
            temp: self.temp,
            c_rate: self.c_rate,
            soc: self.soc,
            dod: self.dod,
            soh: self.soh,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgingTestResult {
    pub spec: AgingTestSpec,
    /// Recorded cycles (every cycle, or a strided subset ending with the last one).
    pub cycles: Vec<CycleRecord>,
    /// Noisy measured loss aligned with `cycles`.
    pub raw_delta: Vec<f64>,
    /// Total number of simulated cycles.
    pub total_cycles: u64,
}

/// Controls how an aging test is simulated and recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Abort with a divergence error once this many cycles have run.
    pub cycle_cap: u64,
    /// Record at most about this many rows per test; `None` records every cycle.
    pub max_rows: Option<usize>,
    /// Relative standard deviation of the Gaussian measurement factor.
    pub noise_sd: f64,
    pub outlier_prob: f64,
    pub outlier_factor: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            cycle_cap: 1_000_000,
            max_rows: None,
            noise_sd: 0.1,
            outlier_prob: 0.01,
            outlier_factor: 5.0,
        }
    }
}

/// Runs one aging test recording every cycle.
pub fn run_aging_test(spec: &AgingTestSpec, params: &OracleParams) -> Result<AgingTestResult> {
    run_aging_test_with(spec, params, &RunOptions::default())
}

pub fn run_aging_test_with(
    spec: &AgingTestSpec,
    params: &OracleParams,
    opts: &RunOptions,
) -> Result<AgingTestResult> {
    spec.validate()?;
    params.validate()?;

    let features = |soh: f64| CycleFeatures {
        temp: spec.ambient_temp,
        c_rate: spec.c_rate,
        soc: spec.initial_soc,
        dod: spec.dod,
        soh,
    };

    let stride = match opts.max_rows {
        None => 1,
        Some(rows) => {
            let first = oracle_cycle_loss(&features(1.0), params)?;
            if first <= 0.0 {
                1
            } else {
                let est = ((1.0 - params.eol_soh) / first).ceil() as u64;
                est.div_ceil(rows.max(1) as u64).max(1)
            }
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    let mut cycles = Vec::new();
    let mut raw_delta = Vec::new();
    let mut soh = 1.0_f64;
    let mut carry = 0.0_f64;
    let mut n: u64 = 0;

    loop {
        n += 1;
        if n > opts.cycle_cap {
            return Err(Error::Divergence {
                test_id: spec.test_id.to_string(),
                cap: opts.cycle_cap as usize,
            });
        }
        let loss = oracle_cycle_loss(&features(soh), params)?;
        if loss <= 0.0 {
            return Err(Error::Divergence {
                test_id: spec.test_id.to_string(),
                cap: opts.cycle_cap as usize,
            });
        }

        // Measurement noise. An outlier reading overstates the loss and the
        // excess shows up as an understated reading on the next cycle, so the
        // cumulative measured fade stays unbiased.
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let mut raw = loss * (1.0 + opts.noise_sd * z) - carry;
        carry = 0.0;
        if u < opts.outlier_prob {
            carry = (opts.outlier_factor - 1.0) * loss;
            raw += carry;
        }

        let next = soh - loss;
        let last = next <= params.eol_soh;
        if last || (n - 1).is_multiple_of(stride) {
            cycles.push(CycleRecord {
                test_id: spec.test_id,
                cycle_index: n,
                temp: spec.ambient_temp,
                c_rate: spec.c_rate,
                soc: spec.initial_soc,
                dod: spec.dod,
                soh,
                delta_soh: loss,
                target_rel: loss / soh,
            });
            raw_delta.push(raw);
        }
        soh = next;
        if last {
            break;
        }
    }

    Ok(AgingTestResult {
        spec: spec.clone(),
        cycles,
        raw_delta,
        total_cycles: n,
    })
}

/// Initial SOC levels (columns) of the aging-test matrix.
pub const MATRIX_SOCS: [f64; 6] = [1.0, 0.8, 0.6, 0.5, 0.4, 0.2];
/// DOD levels (rows) of the aging-test matrix.
pub const MATRIX_DODS: [f64; 9] = [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
/// Number of tests per (DOD row, SOC column); zero marks an infeasible cell.
pub const MATRIX_COUNTS: [[u32; 6]; 9] = [
    [4, 5, 17, 23, 22, 23],
    [20, 34, 36, 32, 37, 0],
    [36, 41, 41, 40, 44, 0],
    [38, 41, 36, 42, 0, 0],
    [37, 37, 37, 0, 0, 0],
    [41, 36, 0, 0, 0, 0],
    [39, 35, 0, 0, 0, 0],
    [35, 0, 0, 0, 0, 0],
    [36, 0, 0, 0, 0, 0],
];

/// Feasible `(initial_soc, dod, full_count)` cells in row-major order.
pub fn feasible_cells() -> Vec<(f64, f64, u32)> {
    let mut out = Vec::new();
    for (r, &dod) in MATRIX_DODS.iter().enumerate() {
        for (c, &soc) in MATRIX_SOCS.iter().enumerate() {
            let count = MATRIX_COUNTS[r][c];
            if count > 0 {
                out.push((soc, dod, count));
            }
        }
    }
    out
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

/// One spec per feasible cell crossed with every (temperature, C-rate) pair.
pub fn generate_test_matrix(temps: &[f64], c_rates: &[f64], seed: u64) -> Result<Vec<AgingTestSpec>> {
    check_grid(temps, c_rates)?;
    let mut specs = Vec::new();
    for (soc, dod, _) in feasible_cells() {
        for &t in temps {
            for &c in c_rates {
                let id = specs.len() as u32;
                specs.push(AgingTestSpec {
                    test_id: id,
                    initial_soc: soc,
                    dod,
                    c_rate: c,
                    ambient_temp: t,
                    noise_seed: derive_seed(seed, id as u64),
                });
            }
        }
    }
    Ok(specs)
}

/// The full replication: each feasible cell gets its tabulated number of
/// tests, cycling through the (temperature, C-rate) grid.
pub fn generate_full_matrix(temps: &[f64], c_rates: &[f64], seed: u64) -> Result<Vec<AgingTestSpec>> {
    check_grid(temps, c_rates)?;
    let combos: Vec<(f64, f64)> = temps
        .iter()
        .flat_map(|&t| c_rates.iter().map(move |&c| (t, c)))
        .collect();
    let mut specs = Vec::new();
    for (soc, dod, count) in feasible_cells() {
        for k in 0..count as usize {
            let (t, c) = combos[k % combos.len()];
            let id = specs.len() as u32;
            specs.push(AgingTestSpec {
                test_id: id,
                initial_soc: soc,
                dod,
                c_rate: c,
                ambient_temp: t,
                noise_seed: derive_seed(seed, id as u64),
            });
        }
    }
    Ok(specs)
}

fn check_grid(temps: &[f64], c_rates: &[f64]) -> Result<()> {
    if temps.is_empty() || c_rates.is_empty() {
        return Err(Error::param("temperature and C-rate lists must be non-empty"));
    }
    if temps.iter().any(|t| !t.is_finite()) {
        return Err(Error::param("temperatures must be finite"));
    }
    if c_rates.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
        return Err(Error::param("C-rates must be positive"));
    }
    Ok(())
}

/// Runs many tests in parallel; output order follows `specs`.
pub fn run_matrix(
    specs: &[AgingTestSpec],
    params: &OracleParams,
    opts: &RunOptions,
) -> Result<Vec<AgingTestResult>> {
    specs
        .par_iter()
        .map(|s| run_aging_test_with(s, params, opts))
        .collect()
}

/// Default desk-scale temperature grid (°C).
pub const DEFAULT_TEMPS: [f64; 3] = [15.0, 25.0, 35.0];
/// Default desk-scale C-rate grid (1/h).
pub const DEFAULT_C_RATES: [f64; 3] = [0.25, 0.5, 1.0];
/// Default cap on recorded rows per test for training datasets.
pub const DEFAULT_MAX_ROWS: usize = 1000;

/// Sidecar metadata written next to an aging dataset.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub oracle: OracleParams,
    pub options: RunOptions,
    pub master_seed: u64,
    pub tests: Vec<AgingTestSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    test_id: u32,
    cycle_index: u64,
    temp_c: f64,
    c_rate: f64,
    soc: f64,
    dod: f64,
    soh: f64,
    delta_soh_raw: f64,
    delta_soh_true: f64,
}

/// Writes the cycle table as CSV.
pub fn write_dataset_csv(path: &Path, results: &[AgingTestResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in results {
        for (c, raw) in r.cycles.iter().zip(&r.raw_delta) {
            w.serialize(CsvRow {
                test_id: c.test_id,
                cycle_index: c.cycle_index,
                temp_c: c.temp,
                c_rate: c.c_rate,
                soc: c.soc,
                dod: c.dod,
                soh: c.soh,
                delta_soh_raw: *raw,
                delta_soh_true: c.delta_soh,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a cycle table back into per-test results (specs are rebuilt from the rows).
pub fn read_dataset_csv(path: &Path) -> Result<Vec<AgingTestResult>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out: Vec<AgingTestResult> = Vec::new();
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        let needs_new = out.last().is_none_or(|r| r.spec.test_id != row.test_id);
        if needs_new {
            out.push(AgingTestResult {
                spec: AgingTestSpec {
                    test_id: row.test_id,
                    initial_soc: row.soc,
                    dod: row.dod,
                    c_rate: row.c_rate,
                    ambient_temp: row.temp_c,
                    noise_seed: 0,
                },
                cycles: Vec::new(),
                raw_delta: Vec::new(),
                total_cycles: 0,
            });
        }
        let r = out.last_mut().expect("pushed above");
        r.total_cycles = row.cycle_index;
        r.cycles.push(CycleRecord {
            test_id: row.test_id,
            cycle_index: row.cycle_index,
            temp: row.temp_c,
            c_rate: row.c_rate,
            soc: row.soc,
            dod: row.dod,
            soh: row.soh,
            delta_soh: row.delta_soh_true,
            target_rel: row.delta_soh_true / row.soh,
        });
        r.raw_delta.push(row.delta_soh_raw);
    }
    Ok(out)
}
