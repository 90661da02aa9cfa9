//! Pre-processing of aging-test data: outlier smoothing, per-test linear
//! regression, z-score standardization and the train/validation split.

use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aging::AgingTestResult;
use crate::error::{Error, Result};

pub const FEATURE_NAMES: [&str; 5] = ["temp", "c_rate", "soc", "dod", "soh"];
pub const VARIANCE_FLOOR: f64 = 1e-12;

pub const DEFAULT_WINDOW: usize = 21;
pub const DEFAULT_MAD_K: f64 = 3.0;
const MAD_SCALE: f64 = 1.4826;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Raw,
    Smoothed,
    Regressed,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Mode::Raw),
            "smoothed" => Ok(Mode::Smoothed),
            "regressed" => Ok(Mode::Regressed),
            other => Err(Error::param(format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Raw => "raw",
            Mode::Smoothed => "smoothed",
            Mode::Regressed => "regressed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// temp, c_rate, soc, dod, soh
    pub x: [f64; 5],
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub test_id: u32,
    pub rows: Range<usize>,
}

/// Feature/target rows grouped by aging test, in cycle order within each group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub rows: Vec<Row>,
    pub groups: Vec<Group>,
    pub mode: Mode,
    pub standardized: bool,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.y).collect()
    }

    /// Keeps the given groups (by position), preserving their relative order.
    fn select(&self, keep: &[usize]) -> Dataset {
        let mut rows = Vec::new();
        let mut groups = Vec::new();
        for &g in keep {
            let grp = &self.groups[g];
            let start = rows.len();
            rows.extend_from_slice(&self.rows[grp.rows.clone()]);
            groups.push(Group {
                test_id: grp.test_id,
                rows: start..rows.len(),
            });
        }
        Dataset {
            rows,
            groups,
            mode: self.mode,
            standardized: self.standardized,
        }
    }
}

/// Per-column statistics of the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub feature_means: [f64; 5],
    pub feature_vars: [f64; 5],
    pub target_mean: f64,
    pub target_var: f64,
}

impl NormStats {
    pub fn identity() -> Self {
        Self {
            feature_means: [0.0; 5],
            feature_vars: [1.0; 5],
            target_mean: 0.0,
            target_var: 1.0,
        }
    }

    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        if ds.is_empty() {
            return Err(Error::param("cannot compute statistics of an empty dataset"));
        }
        let n = ds.len() as f64;
        let mut mean = [0.0; 5];
        let mut tmean = 0.0;
        for r in &ds.rows {
            for k in 0..5 {
                mean[k] += r.x[k];
            }
            tmean += r.y;
        }
        mean.iter_mut().for_each(|m| *m /= n);
        tmean /= n;
        let mut var = [0.0; 5];
        let mut tvar = 0.0;
        for r in &ds.rows {
            for k in 0..5 {
                var[k] += (r.x[k] - mean[k]).powi(2);
            }
            tvar += (r.y - tmean).powi(2);
        }
        var.iter_mut().for_each(|v| *v /= n);
        tvar /= n;
        for k in 0..5 {
            if !(var[k] > VARIANCE_FLOOR) {
                return Err(Error::DegenerateFeature(FEATURE_NAMES[k].to_string()));
            }
        }
        if !(tvar > VARIANCE_FLOOR * VARIANCE_FLOOR) {
            return Err(Error::DegenerateFeature("target".to_string()));
        }
        Ok(Self {
            feature_means: mean,
            feature_vars: var,
            target_mean: tmean,
            target_var: tvar,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for k in 0..5 {
            if !(self.feature_vars[k] > VARIANCE_FLOOR) {
                return Err(Error::DegenerateFeature(FEATURE_NAMES[k].to_string()));
            }
        }
        if !(self.target_var > 0.0) {
            return Err(Error::DegenerateFeature("target".to_string()));
        }
        Ok(())
    }

    pub fn scale_features(&self, x: &[f64; 5]) -> [f64; 5] {
        let mut out = [0.0; 5];
        for k in 0..5 {
            out[k] = (x[k] - self.feature_means[k]) / self.feature_vars[k].sqrt();
        }
        out
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_var.sqrt()
    }

    pub fn unscale_target(&self, z: f64) -> f64 {
        z * self.target_var.sqrt() + self.target_mean
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        let rows = ds
            .rows
            .iter()
            .map(|r| Row {
                x: self.scale_features(&r.x),
                y: self.scale_target(r.y),
            })
            .collect();
        Dataset {
            rows,
            groups: ds.groups.clone(),
            mode: ds.mode,
            standardized: true,
        }
    }
}

fn median(buf: &mut [f64]) -> f64 {
    buf.sort_by(|a, b| a.total_cmp(b));
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

/// Hampel outlier replacement followed by a centred moving average.
///
/// Both passes use symmetric windows that shrink near the ends of the
/// series, so affine series pass through unchanged.
pub fn smooth_series(series: &[f64], window: usize, mad_k: f64) -> Result<Vec<f64>> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::param(format!("window must be odd and >= 1, got {window}")));
    }
    if series.is_empty() {
        return Err(Error::param("series must be non-empty"));
    }
    let n = series.len();
    let half = window / 2;
    let reach = |i: usize| half.min(i).min(n - 1 - i);

    let mut buf = Vec::with_capacity(window);
    let mut dev = Vec::with_capacity(window);
    let mut cleaned = series.to_vec();
    for i in 0..n {
        let h = reach(i);
        if h == 0 {
            continue;
        }
        buf.clear();
        buf.extend_from_slice(&series[i - h..=i + h]);
        let med = median(&mut buf);
        dev.clear();
        dev.extend(buf.iter().map(|v| (v - med).abs()));
        let mad = MAD_SCALE * median(&mut dev);
        if (series[i] - med).abs() > mad_k * mad {
            cleaned[i] = med;
        }
    }

    let out = (0..n)
        .map(|i| {
            let h = reach(i);
            if h == 0 {
                cleaned[i]
            } else {
                cleaned[i - h..=i + h].iter().sum::<f64>() / (2 * h + 1) as f64
            }
        })
        .collect();
    Ok(out)
}

/// Ordinary least-squares line over `x`, evaluated at `x`, clamped at zero.
pub fn regress_series_at(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if x.len() != y.len() {
        return Err(Error::param("x and y lengths differ"));
    }
    if y.len() < 2 {
        return Err(Error::param("regression needs at least two points"));
    }
    let n = y.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    Ok(x.iter().map(|v| (intercept + slope * v).max(0.0)).collect())
}

/// Least-squares line over the positions 0, 1, 2, ...
pub fn regress_series(series: &[f64]) -> Result<Vec<f64>> {
    let x: Vec<f64> = (0..series.len()).map(|i| i as f64).collect();
    regress_series_at(&x, series)
}

/// Settings for turning aging results into a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrepConfig {
    pub mode: Mode,
    pub window: usize,
    pub mad_k: f64,
}

impl PrepConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            window: DEFAULT_WINDOW,
            mad_k: DEFAULT_MAD_K,
        }
    }
}

/// Processed per-cycle loss series of one test.
pub fn process_test(result: &AgingTestResult, cfg: &PrepConfig) -> Result<Vec<f64>> {
    let raw = &result.raw_delta;
    match cfg.mode {
        Mode::Raw => Ok(raw.clone()),
        Mode::Smoothed => smooth_series(raw, cfg.window, cfg.mad_k),
        Mode::Regressed => {
            let smoothed = smooth_series(raw, cfg.window, cfg.mad_k)?;
            if smoothed.len() < 2 {
                return Ok(smoothed.into_iter().map(|v| v.max(0.0)).collect());
            }
            let x: Vec<f64> = result.cycles.iter().map(|c| c.cycle_index as f64).collect();
            regress_series_at(&x, &smoothed)
        }
    }
}

/// Builds the (unstandardized) dataset for one processing mode.
pub fn build_dataset(results: &[AgingTestResult], cfg: &PrepConfig) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    for r in results {
        let series = process_test(r, cfg)?;
        let start = rows.len();
        for (c, d) in r.cycles.iter().zip(series) {
            rows.push(Row {
                x: [c.temp, c.c_rate, c.soc, c.dod, c.soh],
                y: d / c.soh,
            });
        }
        groups.push(Group {
            test_id: r.spec.test_id,
            rows: start..rows.len(),
        });
    }
    Ok(Dataset {
        rows,
        groups,
        mode: cfg.mode,
        standardized: false,
    })
}

/// Standardizes `train` and every dataset in `others` with statistics of `train`.
pub fn standardize(train: &Dataset, others: &[&Dataset]) -> Result<(Dataset, Vec<Dataset>, NormStats)> {
    if train.is_empty() {
        return Err(Error::param("training dataset is empty"));
    }
    let stats = NormStats::from_dataset(train)?;
    let t = stats.apply(train);
    let rest = others.iter().map(|d| stats.apply(d)).collect();
    Ok((t, rest, stats))
}

/// Splits whole aging tests into training and validation sets.
///
/// The training share is `round(groups * ratio)`, kept within `[1, groups - 1]`.
pub fn split_by_test(ds: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::param(format!("split ratio {ratio} outside (0, 1)")));
    }
    let g = ds.groups.len();
    if g < 2 {
        return Err(Error::param("need at least two aging tests to split"));
    }
    let n_train = ((g as f64 * ratio).round() as usize).clamp(1, g - 1);
    let mut order: Vec<usize> = (0..g).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut train_idx = order[..n_train].to_vec();
    let mut val_idx = order[n_train..].to_vec();
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    Ok((ds.select(&train_idx), ds.select(&val_idx)))
}

/// `|sum(processed[..N]) - sum(raw[..N])| / sum(raw[..N])` at each checkpoint.
pub fn cumulative_preservation_report(
    raw: &[f64],
    processed: &[f64],
    checkpoints: &[usize],
) -> Result<Vec<(usize, f64)>> {
    if raw.len() != processed.len() {
        return Err(Error::param("raw and processed series differ in length"));
    }
    checkpoints
        .iter()
        .map(|&n| {
            if n == 0 || n > raw.len() {
                return Err(Error::param(format!("checkpoint {n} out of range")));
            }
            let r: f64 = raw[..n].iter().sum();
            let p: f64 = processed[..n].iter().sum();
            let rel = if r == 0.0 {
                if p == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                ((p - r) / r).abs()
            };
            Ok((n, rel))
        })
        .collect()
}

#[derive(Serialize)]
struct ProcessedRow {
    test_id: u32,
    temp_c: f64,
    c_rate: f64,
    soc: f64,
    dod: f64,
    soh: f64,
    target_rel: f64,
    mode: Mode,
}

pub fn write_processed_csv(path: &Path, ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for g in &ds.groups {
        for r in &ds.rows[g.rows.clone()] {
            w.serialize(ProcessedRow {
                test_id: g.test_id,
                temp_c: r.x[0],
                c_rate: r.x[1],
                soc: r.x[2],
                dod: r.x[3],
                soh: r.x[4],
                target_rel: r.y,
                mode: ds.mode,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}
