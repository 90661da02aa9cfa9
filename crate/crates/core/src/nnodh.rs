//! Decoupled schedule/evaluate/tighten loop.
//!
//! Each iteration solves the scheduling MILP, prices the resulting battery
//! usage with the degradation surrogate, and derives tighter battery
//! restrictions for the next solve. The surrogate never enters the MILP.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aging::OracleParams;
use crate::cbup::{self, DegradationCostParams};
use crate::error::{Error, Result};
use crate::mds::{self, ExtraConstraints, MicrogridConfig, ScheduleSolution, SolveOptions, TopThree};
use crate::milp::{Backend, BranchAndBound};
use crate::nnbd::DegradationModel;

pub const DEFAULT_MAX_ITERATIONS: usize = 200;
pub const DEFAULT_STOP_WINDOW: usize = 11;
/// Throughput at or below this is treated as an idle battery, kWh.
pub const ZERO_THROUGHPUT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Total throughput cap.
    Bcl,
    /// Cap on the three busiest intervals of the previous schedule.
    Pbcl,
    /// Shrinking power cap.
    Brl,
    All,
}

impl Strategy {
    pub const EVERY: [Strategy; 4] = [Strategy::Bcl, Strategy::Pbcl, Strategy::Brl, Strategy::All];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Bcl => "bcl",
            Strategy::Pbcl => "pbcl",
            Strategy::Brl => "brl",
            Strategy::All => "all",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::EVERY
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::param(format!("unknown strategy {s:?}; expected bcl, pbcl, brl or all")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnodhConfig {
    pub strategy: Strategy,
    /// Restriction factor per iteration, in (0, 1).
    pub alpha: f64,
    pub max_iterations: usize,
    /// Number of trailing total costs inspected by the stop rule.
    pub stop_window: usize,
}

impl NnodhConfig {
    pub fn new(strategy: Strategy, alpha: f64) -> Self {
        Self {
            strategy,
            alpha,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            stop_window: DEFAULT_STOP_WINDOW,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::param("alpha must lie in (0, 1)"));
        }
        if self.stop_window < 3 || self.stop_window.is_multiple_of(2) {
            return Err(Error::param("stop_window must be odd and at least 3"));
        }
        if self.max_iterations < self.stop_window {
            return Err(Error::param("max_iterations must be at least stop_window"));
        }
        Ok(())
    }
}

/// Restrictions for iteration `iteration` (1-based, at least 2) derived from
/// the schedule of the previous iteration.
pub fn next_constraints(
    config: &MicrogridConfig,
    strategy: Strategy,
    alpha: f64,
    prev: &ScheduleSolution,
    iteration: usize,
) -> Result<ExtraConstraints> {
    if iteration < 2 {
        return Err(Error::param("restrictions start at iteration 2"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha must lie in (0, 1)"));
    }
    if prev.intervals.len() < 3 && matches!(strategy, Strategy::Pbcl | Strategy::All) {
        return Err(Error::param("the top-three restriction needs at least three intervals"));
    }
    let keep = 1.0 - alpha;
    let mut extra = ExtraConstraints::default();
    if matches!(strategy, Strategy::Bcl | Strategy::All) {
        extra.throughput_cap = Some(keep * prev.throughput(config.dt));
    }
    if matches!(strategy, Strategy::Pbcl | Strategy::All) {
        extra.top3 = Some(top_three(prev, config.dt, keep));
    }
    if matches!(strategy, Strategy::Brl | Strategy::All) {
        extra.power_cap = Some(config.bess.p_max * keep.powi(iteration as i32 - 1));
    }
    Ok(extra)
}

fn top_three(prev: &ScheduleSolution, dt: f64, keep: f64) -> TopThree {
    let power: Vec<f64> = prev.intervals.iter().map(|iv| iv.charge + iv.discharge).collect();
    let mut order: Vec<usize> = (0..power.len()).collect();
    // stable sort keeps the lower index first among equal powers
    order.sort_by(|&a, &b| power[b].total_cmp(&power[a]));
    let intervals = [order[0], order[1], order[2]];
    let used: f64 = intervals.iter().map(|&t| dt * power[t]).sum();
    TopThree {
        intervals,
        cap: keep * used,
    }
}

/// Whether the trailing window of total costs is a valley: the first half of
/// the differences strictly negative and the second half strictly positive.
pub fn window_condition(totals: &[f64], window: usize) -> bool {
    if window < 3 || totals.len() < window {
        return false;
    }
    let tail = &totals[totals.len() - window..];
    let diffs: Vec<f64> = tail.windows(2).map(|w| w[1] - w[0]).collect();
    let half = diffs.len() / 2;
    diffs[..half].iter().all(|&d| d < 0.0) && diffs[diffs.len() - half..].iter().all(|&d| d > 0.0)
}

/// 1-based index of the lowest total; the earliest wins ties.
pub fn best_index(totals: &[f64]) -> Option<usize> {
    totals
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, &v)| match best {
            Some((_, b)) if b <= v => best,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// The trailing totals form a valley.
    Window,
    MaxIterations,
    /// The battery was left idle.
    ZeroThroughput,
    /// The tightened problem had no feasible schedule.
    RestrictionInfeasible,
}

impl StopReason {
    pub fn name(self) -> &'static str {
        match self {
            StopReason::Window => "window",
            StopReason::MaxIterations => "max_iterations",
            StopReason::ZeroThroughput => "zero_throughput",
            StopReason::RestrictionInfeasible => "restriction_infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop { reason: StopReason, best_index: usize },
}

/// Applies the stop rules to the totals recorded so far.
pub fn check_stop(totals: &[f64], last_throughput: f64, config: &NnodhConfig) -> StopDecision {
    let Some(best) = best_index(totals) else {
        return StopDecision::Continue;
    };
    let reason = if window_condition(totals, config.stop_window) {
        StopReason::Window
    } else if last_throughput <= ZERO_THROUGHPUT {
        StopReason::ZeroThroughput
    } else if totals.len() >= config.max_iterations {
        StopReason::MaxIterations
    } else {
        return StopDecision::Continue;
    };
    StopDecision::Stop { reason, best_index: best }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based.
    pub index: usize,
    pub throughput: f64,
    /// Predicted capacity loss over the day, fraction of rated capacity.
    pub bd: f64,
    pub operation_cost: f64,
    pub degradation_cost: f64,
    pub total_cost: f64,
    pub cycles: usize,
    pub constraints: ExtraConstraints,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Percent; `None` when the first iteration has no degradation cost.
    pub dcr: Option<f64>,
    pub tcr: f64,
    /// Percent; `None` when the first iteration has no operation cost.
    pub oci: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnodhResult {
    pub config: NnodhConfig,
    pub trace: Vec<IterationRecord>,
    /// 1-based index into `trace`.
    pub best_index: usize,
    pub metrics: Metrics,
    pub stop_reason: StopReason,
    pub best_solution: ScheduleSolution,
}

impl NnodhResult {
    pub fn best(&self) -> &IterationRecord {
        &self.trace[self.best_index - 1]
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

/// Reductions at `best` (1-based) relative to the first, unrestricted iteration.
pub fn compute_metrics(trace: &[IterationRecord], best: usize) -> Result<Metrics> {
    if trace.is_empty() || best == 0 || best > trace.len() {
        return Err(Error::param("best index outside the trace"));
    }
    let first = &trace[0];
    let at = &trace[best - 1];
    let pct = |num: f64, den: f64| if den != 0.0 { Some(100.0 * num / den) } else { None };
    Ok(Metrics {
        dcr: pct(first.degradation_cost - at.degradation_cost, first.degradation_cost),
        tcr: pct(first.total_cost - at.total_cost, first.total_cost).unwrap_or(0.0),
        oci: pct(at.operation_cost - first.operation_cost, first.operation_cost),
    })
}

/// Recovers the first-iteration degradation cost, total cost and operation
/// cost from the values at the best iteration and the three percentages.
pub fn back_derive_baseline(total: f64, degradation: f64, tcr: f64, dcr: f64, oci: f64) -> Result<(f64, f64, f64)> {
    if tcr >= 100.0 || dcr >= 100.0 || oci <= -100.0 {
        return Err(Error::param("percentages out of range"));
    }
    let bdc_max = degradation / (1.0 - dcr / 100.0);
    let tc_max = total / (1.0 - tcr / 100.0);
    let oc_min = (total - degradation) / (1.0 + oci / 100.0);
    Ok((bdc_max, tc_max, oc_min))
}

struct Evaluated {
    bd: f64,
    cost: f64,
    cycles: usize,
}

fn evaluate(
    config: &MicrogridConfig,
    sol: &ScheduleSolution,
    model: &DegradationModel,
    cost: &DegradationCostParams,
) -> Result<Evaluated> {
    let e = cbup::evaluate_schedule(config, sol, model, cost)?;
    Ok(Evaluated {
        bd: e.bd,
        cost: e.cost,
        cycles: e.cycles.len(),
    })
}

pub fn run(
    config: &MicrogridConfig,
    model: &DegradationModel,
    nnodh: &NnodhConfig,
    cost: &DegradationCostParams,
) -> Result<NnodhResult> {
    run_with(config, model, nnodh, cost, &SolveOptions::default(), &BranchAndBound)
}

pub fn run_with(
    config: &MicrogridConfig,
    model: &DegradationModel,
    nnodh: &NnodhConfig,
    cost: &DegradationCostParams,
    options: &SolveOptions,
    backend: &dyn Backend,
) -> Result<NnodhResult> {
    nnodh.validate()?;
    cost.validate()?;
    config.validate()?;
    if !model.is_trained() {
        return Err(Error::State("degradation model has not been trained".into()));
    }
    let annotate = |iteration: usize| move |e: Error| Error::Iteration {
        iteration,
        source: Box::new(e),
    };

    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut totals: Vec<f64> = Vec::new();
    let mut best_solution: Option<ScheduleSolution> = None;
    let mut extra = ExtraConstraints::default();
    let mut iteration = 1;
    let (stop_reason, best) = loop {
        let sol = match mds::solve_mds_with(config, &extra, options, backend) {
            Ok(s) => s,
            Err(Error::Infeasible(_)) if iteration > 1 => {
                let best = best_index(&totals).expect("trace is non-empty after the first iteration");
                break (StopReason::RestrictionInfeasible, best);
            }
            Err(e) => return Err(annotate(iteration)(e)),
        };
        let ev = evaluate(config, &sol, model, cost).map_err(annotate(iteration))?;
        let throughput = sol.throughput(config.dt);
        let total = sol.operation_cost + ev.cost;
        trace.push(IterationRecord {
            index: iteration,
            throughput,
            bd: ev.bd,
            operation_cost: sol.operation_cost,
            degradation_cost: ev.cost,
            total_cost: total,
            cycles: ev.cycles,
            constraints: extra.clone(),
        });
        if totals.iter().all(|&t| total < t) {
            best_solution = Some(sol.clone());
        }
        totals.push(total);
        if let StopDecision::Stop { reason, best_index } = check_stop(&totals, throughput, nnodh) {
            break (reason, best_index);
        }
        iteration += 1;
        extra = next_constraints(config, nnodh.strategy, nnodh.alpha, &sol, iteration).map_err(annotate(iteration))?;
    };
    Ok(NnodhResult {
        config: nnodh.clone(),
        metrics: compute_metrics(&trace, best)?,
        trace,
        best_index: best,
        stop_reason,
        best_solution: best_solution.expect("the first iteration always sets a best schedule"),
    })
}

pub fn write_trace_csv(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "iteration",
        "op_cost",
        "bd",
        "deg_cost",
        "total_cost",
        "throughput_kwh",
        "cycles",
        "throughput_cap",
        "top3_intervals",
        "top3_cap",
        "power_cap",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in trace {
        let c = &r.constraints;
        w.write_record([
            r.index.to_string(),
            r.operation_cost.to_string(),
            r.bd.to_string(),
            r.degradation_cost.to_string(),
            r.total_cost.to_string(),
            r.throughput.to_string(),
            r.cycles.to_string(),
            opt(c.throughput_cap),
            c.top3
                .as_ref()
                .map(|t| t.intervals.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" "))
                .unwrap_or_default(),
            opt(c.top3.as_ref().map(|t| t.cap)),
            opt(c.power_cap),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The cycle-limit benchmark allows this many status changes per indicator.
pub const DEFAULT_CYCLE_LIMIT: u32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Benchmark {
    Mds,
    CycleLimit,
    LinearBdc,
    Nnodh,
}

impl Benchmark {
    pub fn name(self) -> &'static str {
        match self {
            Benchmark::Mds => "mds",
            Benchmark::CycleLimit => "cycle-limit",
            Benchmark::LinearBdc => "linear-bdc",
            Benchmark::Nnodh => "nnodh",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub model: Benchmark,
    pub operation_cost: f64,
    pub throughput: f64,
    /// Predicted daily capacity loss.
    pub daily_bd: f64,
    /// Oracle capacity loss of the same cycles.
    pub oracle_bd: f64,
    pub daily_degradation_cost: f64,
    pub annual_degradation_cost: f64,
    /// Annual degradation cost saved relative to the plain schedule.
    pub annual_saving: f64,
    /// Years; `None` for an idle battery.
    pub lifetime_years: Option<f64>,
    pub total_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSettings {
    pub nnodh: NnodhConfig,
    pub cycle_limit: u32,
    /// Linear degradation price, $/kWh; defaults to the degradation cost per
    /// kWh of the plain schedule.
    pub linear_rate: Option<f64>,
    pub oracle: OracleParams,
}

impl Default for BenchmarkSettings {
    fn default() -> Self {
        Self {
            nnodh: NnodhConfig::new(Strategy::Bcl, 0.03),
            cycle_limit: DEFAULT_CYCLE_LIMIT,
            linear_rate: None,
            oracle: OracleParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<BenchmarkRow>,
    pub linear_rate: f64,
    pub nnodh: NnodhResult,
}

impl Comparison {
    pub fn row(&self, model: Benchmark) -> &BenchmarkRow {
        self.rows.iter().find(|r| r.model == model).expect("every benchmark has a row")
    }
}

/// Solves the plain, cycle-limit, linear-cost and decoupled schedules and
/// prices each one ex post with the same surrogate and the oracle.
pub fn compare_benchmarks(
    config: &MicrogridConfig,
    model: &DegradationModel,
    cost: &DegradationCostParams,
    settings: &BenchmarkSettings,
) -> Result<Comparison> {
    let nnodh = run(config, model, &settings.nnodh, cost)?;
    let plain = mds::solve_mds(config, &ExtraConstraints::default())?;
    let plain_eval = evaluate(config, &plain, model, cost)?;
    let plain_thr = plain.throughput(config.dt);
    let linear_rate = settings.linear_rate.unwrap_or(if plain_thr > ZERO_THROUGHPUT {
        plain_eval.cost / plain_thr
    } else {
        0.0
    });
    let cycle_limited = mds::solve_mds(
        config,
        &ExtraConstraints {
            cycle_transition_limit: Some(settings.cycle_limit),
            ..Default::default()
        },
    )?;
    let linear = mds::solve_mds(
        config,
        &ExtraConstraints {
            linear_bdc_rate: Some(linear_rate),
            ..Default::default()
        },
    )?;

    let mut rows = Vec::new();
    for (kind, sol) in [
        (Benchmark::Mds, &plain),
        (Benchmark::CycleLimit, &cycle_limited),
        (Benchmark::LinearBdc, &linear),
        (Benchmark::Nnodh, &nnodh.best_solution),
    ] {
        let e = cbup::evaluate_schedule(config, sol, model, cost)?;
        let soh = config.bess.soh;
        let features: Vec<_> = e.cycles.iter().map(|c| c.features(soh)).collect();
        let oracle_bd = cbup::oracle_degradation(&settings.oracle, &features)?;
        let lifetime = if e.bd > 0.0 {
            Some(cbup::expected_lifetime(e.bd, soh, cost.soh_eol)?)
        } else {
            None
        };
        rows.push(BenchmarkRow {
            model: kind,
            operation_cost: sol.operation_cost,
            throughput: sol.throughput(config.dt),
            daily_bd: e.bd,
            oracle_bd,
            daily_degradation_cost: e.cost,
            annual_degradation_cost: 365.0 * e.cost,
            annual_saving: 0.0,
            lifetime_years: lifetime,
            total_cost: sol.operation_cost + e.cost,
        });
    }
    let base = rows[0].annual_degradation_cost;
    for r in &mut rows {
        r.annual_saving = base - r.annual_degradation_cost;
    }
    Ok(Comparison {
        rows,
        linear_rate,
        nnodh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mds::{IntervalDispatch, SolveStatus};
    use crate::scenario;

    fn with_powers(powers: &[f64]) -> ScheduleSolution {
        ScheduleSolution {
            intervals: powers
                .iter()
                .map(|&p| IntervalDispatch {
                    gen_power: vec![],
                    gen_on: vec![],
                    gen_startup: vec![],
                    buy: 0.0,
                    sell: 0.0,
                    buy_on: false,
                    sell_on: false,
                    charge: (-p).max(0.0),
                    discharge: p.max(0.0),
                    charge_on: p < 0.0,
                    discharge_on: p > 0.0,
                    energy: 0.0,
                    soc: 0.0,
                })
                .collect(),
            operation_cost: 0.0,
            objective: 0.0,
            status: SolveStatus::Optimal,
            gap: 0.0,
            nodes: 0,
        }
    }

    fn record(index: usize, op: f64, deg: f64) -> IterationRecord {
        IterationRecord {
            index,
            throughput: 1.0,
            bd: 0.0,
            operation_cost: op,
            degradation_cost: deg,
            total_cost: op + deg,
            cycles: 0,
            constraints: ExtraConstraints::default(),
        }
    }

    #[test]
    fn throughput_cap_scales_previous_use() {
        let c = scenario::bundled();
        let prev = with_powers(&[50.0, -30.0, 20.0]);
        let e = next_constraints(&c, Strategy::Bcl, 0.05, &prev, 2).unwrap();
        assert!((e.throughput_cap.unwrap() - 95.0).abs() < 1e-12);
        assert!(e.top3.is_none() && e.power_cap.is_none());
    }

    #[test]
    fn power_cap_decays_geometrically() {
        let c = scenario::bundled();
        assert_eq!(c.bess.p_max, 150.0);
        let prev = with_powers(&[0.0; 24]);
        let e = next_constraints(&c, Strategy::Brl, 0.1, &prev, 3).unwrap();
        assert!((e.power_cap.unwrap() - 121.5).abs() < 1e-9);
    }

    #[test]
    fn busiest_three_intervals() {
        let c = scenario::bundled();
        let mut p = vec![0.0; 24];
        p[..6].copy_from_slice(&[0.0, 80.0, 0.0, -120.0, 50.0, 150.0]);
        let e = next_constraints(&c, Strategy::Pbcl, 0.03, &with_powers(&p), 2).unwrap();
        let top = e.top3.unwrap();
        assert_eq!(top.intervals, [5, 3, 1]);
        assert!((top.cap - 339.5).abs() < 1e-9);

        // ties go to the lower index
        let flat = with_powers(&[10.0; 24]);
        let e = next_constraints(&c, Strategy::Pbcl, 0.5, &flat, 2).unwrap();
        assert_eq!(e.top3.unwrap().intervals, [0, 1, 2]);
    }

    #[test]
    fn all_combines_every_family() {
        let c = scenario::bundled();
        let e = next_constraints(&c, Strategy::All, 0.1, &with_powers(&[10.0; 24]), 2).unwrap();
        assert!(e.throughput_cap.is_some() && e.top3.is_some() && e.power_cap.is_some());
        assert!(next_constraints(&c, Strategy::All, 0.1, &with_powers(&[10.0; 24]), 1).is_err());
    }

    #[test]
    fn idle_previous_schedule_pins_the_battery() {
        let c = scenario::bundled();
        let e = next_constraints(&c, Strategy::Bcl, 0.1, &with_powers(&[0.0; 24]), 2).unwrap();
        assert_eq!(e.throughput_cap, Some(0.0));
    }

    #[test]
    fn valley_window() {
        let cfg = NnodhConfig::new(Strategy::Bcl, 0.1);
        let totals = [100.0, 99.0, 98.0, 97.0, 96.0, 95.0, 96.0, 97.0, 98.0, 99.0, 100.0];
        assert_eq!(
            check_stop(&totals, 1.0, &cfg),
            StopDecision::Stop {
                reason: StopReason::Window,
                best_index: 6
            }
        );
        assert_eq!(check_stop(&totals[..10], 1.0, &cfg), StopDecision::Continue);
        let mut flat = totals;
        flat[1] = 100.0;
        assert!(!window_condition(&flat, 11));
    }

    #[test]
    fn monotone_trace_hits_the_cap() {
        let cfg = NnodhConfig::new(Strategy::Bcl, 0.1);
        let totals: Vec<f64> = (0..200).map(|i| 1000.0 - i as f64).collect();
        assert_eq!(check_stop(&totals[..199], 1.0, &cfg), StopDecision::Continue);
        assert_eq!(
            check_stop(&totals, 1.0, &cfg),
            StopDecision::Stop {
                reason: StopReason::MaxIterations,
                best_index: 200
            }
        );
        assert!(matches!(
            check_stop(&totals[..5], 0.0, &cfg),
            StopDecision::Stop {
                reason: StopReason::ZeroThroughput,
                best_index: 5
            }
        ));
    }

    #[test]
    fn config_guards() {
        assert!(NnodhConfig::new(Strategy::Bcl, 0.0).validate().is_err());
        assert!(NnodhConfig::new(Strategy::Bcl, 1.0).validate().is_err());
        let mut c = NnodhConfig::new(Strategy::Bcl, 0.1);
        c.max_iterations = 5;
        assert!(c.validate().is_err());
        assert_eq!("PBCL".parse::<Strategy>().unwrap(), Strategy::Pbcl);
        assert!("rainflow".parse::<Strategy>().is_err());
    }

    #[test]
    fn metrics_at_baseline_are_zero() {
        let trace = [record(1, 400.0, 50.0), record(2, 410.0, 20.0)];
        let m = compute_metrics(&trace, 1).unwrap();
        assert_eq!((m.dcr, m.tcr, m.oci), (Some(0.0), 0.0, Some(0.0)));
        let m = compute_metrics(&trace, 2).unwrap();
        assert!((m.dcr.unwrap() - 60.0).abs() < 1e-12);
        assert!((m.tcr - 100.0 * 20.0 / 450.0).abs() < 1e-12);
        assert!((m.oci.unwrap() - 2.5).abs() < 1e-12);
        let idle = [record(1, 400.0, 0.0)];
        assert_eq!(compute_metrics(&idle, 1).unwrap().dcr, None);
    }

    #[test]
    fn reduction_percentages() {
        let trace = [record(1, 474.88, 50.12), record(2, 483.62, 10.74)];
        let m = compute_metrics(&trace, 2).unwrap();
        assert!((m.dcr.unwrap() - 78.57).abs() < 0.1);
        let trace = [record(1, 475.0, 50.0), record(2, 483.62, 10.74)];
        assert!((compute_metrics(&trace, 2).unwrap().tcr - 5.83).abs() < 0.05);
    }

    #[test]
    fn baseline_recovery_is_consistent() {
        let (bdc, tc, oc) = back_derive_baseline(494.36, 10.74, 5.82, 78.57, 1.83).unwrap();
        assert!(((oc + bdc) - tc).abs() / tc < 0.002);
    }

    #[test]
    fn best_is_earliest_minimum() {
        assert_eq!(best_index(&[3.0, 1.0, 1.0, 2.0]), Some(2));
        assert_eq!(best_index(&[]), None);
    }
}
