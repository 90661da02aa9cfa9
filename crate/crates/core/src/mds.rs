//! Microgrid day-ahead scheduling.
//!
//! The traditional model dispatches controllable generators, the tie-line
//! and one battery over a horizon of equal intervals at minimum operation
//! cost. [`ExtraConstraints`] turns it into the conserved variants used by
//! the iterative heuristic and the cycle-limit / linear-cost benchmarks.
//!
//! Energy `E_t` is the stored energy at the end of interval `t`; the
//! battery starts from `e_initial` and must return to it after the last
//! interval.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{self, Backend, BranchAndBound, Problem, Sense};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub p_max: f64,
    pub p_min: f64,
    /// kW per hour.
    pub ramp: f64,
    /// $/kWh.
    pub cost_linear: f64,
    /// $/h while committed.
    pub cost_noload: f64,
    /// $ per start.
    pub cost_startup: f64,
    pub initial_on: bool,
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let all = [self.p_max, self.p_min, self.ramp, self.cost_linear, self.cost_noload, self.cost_startup];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("generator parameters must be finite"));
        }
        if !(0.0 <= self.p_min && self.p_min <= self.p_max) {
            return Err(Error::param("generator needs 0 <= p_min <= p_max"));
        }
        if self.ramp <= 0.0 {
            return Err(Error::param("generator ramp must be positive"));
        }
        if self.cost_linear < 0.0 || self.cost_noload < 0.0 || self.cost_startup < 0.0 {
            return Err(Error::param("generator costs must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessSpec {
    pub e_max: f64,
    pub e_min: f64,
    pub p_max: f64,
    pub p_min: f64,
    pub eff_char: f64,
    pub eff_disc: f64,
    pub e_initial: f64,
    pub soh: f64,
}

impl BessSpec {
    /// A battery with zero energy capacity is allowed and never operates.
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.e_max,
            self.e_min,
            self.p_max,
            self.p_min,
            self.eff_char,
            self.eff_disc,
            self.e_initial,
            self.soh,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("battery parameters must be finite"));
        }
        let empty = self.e_max == 0.0 && self.e_min == 0.0;
        if !(0.0 <= self.e_min && (self.e_min < self.e_max || empty)) {
            return Err(Error::param("battery needs 0 <= e_min < e_max"));
        }
        if !(0.0 <= self.p_min && self.p_min <= self.p_max) {
            return Err(Error::param("battery needs 0 <= p_min <= p_max"));
        }
        if !(self.eff_char > 0.0 && self.eff_char <= 1.0 && self.eff_disc > 0.0 && self.eff_disc <= 1.0) {
            return Err(Error::param("battery efficiencies must lie in (0, 1]"));
        }
        if !(self.e_min <= self.e_initial && self.e_initial <= self.e_max) {
            return Err(Error::param("battery needs e_min <= e_initial <= e_max"));
        }
        if !(self.soh > 0.0 && self.soh <= 1.0) {
            return Err(Error::param("battery soh must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn soc(&self, energy: f64) -> f64 {
        if self.e_max > 0.0 {
            energy / self.e_max
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    pub load: Vec<f64>,
    pub wind: Vec<f64>,
    pub pv: Vec<f64>,
    /// $/kWh.
    pub buy_price: Vec<f64>,
    /// Ambient temperature, °C.
    pub temp: Vec<f64>,
    /// Sell price as a fraction of the buy price.
    pub sell_factor: f64,
}

impl Profiles {
    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    pub fn sell_price(&self, t: usize) -> f64 {
        self.sell_factor * self.buy_price[t]
    }

    pub fn renewable(&self, t: usize) -> f64 {
        self.wind[t] + self.pv[t]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.load.len();
        if n == 0 {
            return Err(Error::param("profiles are empty"));
        }
        if [&self.wind, &self.pv, &self.buy_price, &self.temp].iter().any(|p| p.len() != n) {
            return Err(Error::param("profiles must have equal lengths"));
        }
        let series = [&self.load, &self.wind, &self.pv, &self.buy_price, &self.temp];
        if series.iter().any(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::param("profiles must be finite"));
        }
        if self.load.iter().chain(&self.wind).chain(&self.pv).any(|&v| v < 0.0) {
            return Err(Error::param("load and renewable profiles must be non-negative"));
        }
        if self.buy_price.iter().any(|&v| v < 0.0) {
            return Err(Error::param("prices must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.sell_factor) {
            return Err(Error::param("sell factor must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicrogridConfig {
    pub generators: Vec<GeneratorSpec>,
    pub bess: BessSpec,
    pub tie_max: f64,
    pub reserve_frac: f64,
    /// Interval length in hours.
    pub dt: f64,
    pub profiles: Profiles,
}

/// Horizon length accepted by default.
pub const MAX_INTERVALS: usize = 96;

impl MicrogridConfig {
    pub fn horizon(&self) -> usize {
        self.profiles.len()
    }

    pub fn validate(&self) -> Result<()> {
        for g in &self.generators {
            g.validate()?;
        }
        self.bess.validate()?;
        self.profiles.validate()?;
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::param("dt must be positive"));
        }
        if !(self.tie_max >= 0.0) || !self.tie_max.is_finite() {
            return Err(Error::param("tie_max must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.reserve_frac) {
            return Err(Error::param("reserve_frac must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Three intervals whose combined battery throughput is capped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopThree {
    /// Zero-based interval indices.
    pub intervals: [usize; 3],
    /// kWh.
    pub cap: f64,
}

/// Optional battery-usage restrictions and benchmark terms.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtraConstraints {
    /// Cap on total throughput `Σ dt·(P_char + P_disc)`, kWh.
    pub throughput_cap: Option<f64>,
    pub top3: Option<TopThree>,
    /// Cap on charge and discharge power, kW.
    pub power_cap: Option<f64>,
    /// Maximum number of status changes of each of the charge and
    /// discharge indicators; no change is counted at the first interval.
    pub cycle_transition_limit: Option<u32>,
    /// Linear degradation price, $/kWh of throughput.
    pub linear_bdc_rate: Option<f64>,
}

impl ExtraConstraints {
    pub fn is_empty(&self) -> bool {
        *self == Self::default()
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        for (name, v) in [
            ("throughput_cap", self.throughput_cap),
            ("power_cap", self.power_cap),
            ("linear_bdc_rate", self.linear_bdc_rate),
        ] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::param(format!("{name} must be a non-negative number")));
                }
            }
        }
        if let Some(top) = &self.top3 {
            let [a, b, c] = top.intervals;
            if a == b || b == c || a == c || a.max(b).max(c) >= horizon {
                return Err(Error::param("top3 intervals must be distinct and in range"));
            }
            if !(top.cap >= 0.0) || !top.cap.is_finite() {
                return Err(Error::param("top3 cap must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalDispatch {
    pub gen_power: Vec<f64>,
    pub gen_on: Vec<bool>,
    pub gen_startup: Vec<bool>,
    pub buy: f64,
    pub sell: f64,
    pub buy_on: bool,
    pub sell_on: bool,
    pub charge: f64,
    pub discharge: f64,
    pub charge_on: bool,
    pub discharge_on: bool,
    /// End-of-interval stored energy, kWh.
    pub energy: f64,
    /// End-of-interval state of charge.
    pub soc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSolution {
    pub intervals: Vec<IntervalDispatch>,
    /// Microgrid operation cost, $ (excludes any linear degradation term).
    pub operation_cost: f64,
    /// Value of the solved objective, including any linear degradation term.
    pub objective: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub nodes: usize,
}

impl ScheduleSolution {
    /// Battery throughput `Σ dt·(P_char + P_disc)`, kWh.
    pub fn throughput(&self, dt: f64) -> f64 {
        self.intervals.iter().map(|iv| dt * (iv.charge + iv.discharge)).sum()
    }

    /// Signed battery power per interval: positive discharges.
    pub fn battery_power(&self) -> Vec<f64> {
        self.intervals.iter().map(|iv| iv.discharge - iv.charge).collect()
    }

    /// Start-of-interval energies, `e_initial` first.
    pub fn start_energies(&self, e_initial: f64) -> Vec<f64> {
        std::iter::once(e_initial)
            .chain(self.intervals.iter().map(|iv| iv.energy))
            .take(self.intervals.len())
            .collect()
    }
}

/// Microgrid operation cost of a dispatch.
pub fn operation_cost(config: &MicrogridConfig, intervals: &[IntervalDispatch]) -> f64 {
    let p = &config.profiles;
    let dt = config.dt;
    intervals
        .iter()
        .enumerate()
        .map(|(t, iv)| {
            let gens: f64 = config
                .generators
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    dt * iv.gen_power[i] * g.cost_linear
                        + if iv.gen_on[i] { dt * g.cost_noload } else { 0.0 }
                        + if iv.gen_startup[i] { g.cost_startup } else { 0.0 }
                })
                .sum();
            gens + dt * (iv.buy * p.buy_price[t] - iv.sell * p.sell_price(t))
        })
        .sum()
}

fn linear_bdc_cost(config: &MicrogridConfig, extra: &ExtraConstraints, intervals: &[IntervalDispatch]) -> f64 {
    extra.linear_bdc_rate.map_or(0.0, |rate| {
        rate * intervals.iter().map(|iv| config.dt * (iv.charge + iv.discharge)).sum::<f64>()
    })
}

/// Solver settings for [`solve_mds_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub milp: milp::Options,
    pub max_intervals: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            milp: milp::Options::default(),
            max_intervals: MAX_INTERVALS,
        }
    }
}

struct Layout {
    pg: Vec<Vec<usize>>,
    ug: Vec<Vec<usize>>,
    buy: Vec<usize>,
    sell: Vec<usize>,
    ubuy: Vec<usize>,
    usell: Vec<usize>,
    ch: Vec<usize>,
    dis: Vec<usize>,
    uch: Vec<usize>,
    udis: Vec<usize>,
}

fn build(config: &MicrogridConfig, extra: &ExtraConstraints) -> (Problem, Layout) {
    let p = &config.profiles;
    let b = &config.bess;
    let dt = config.dt;
    let horizon = config.horizon();
    let ng = config.generators.len();
    let bdc = extra.linear_bdc_rate.unwrap_or(0.0);
    let p_batt = extra.power_cap.map_or(b.p_max, |c| c.min(b.p_max));

    let mut prob = Problem::new();
    let mut lay = Layout {
        pg: vec![Vec::new(); ng],
        ug: vec![Vec::new(); ng],
        buy: Vec::new(),
        sell: Vec::new(),
        ubuy: Vec::new(),
        usell: Vec::new(),
        ch: Vec::new(),
        dis: Vec::new(),
        uch: Vec::new(),
        udis: Vec::new(),
    };
    let mut vg = vec![Vec::new(); ng];
    let mut e = Vec::new();

    for t in 0..horizon {
        for (i, g) in config.generators.iter().enumerate() {
            lay.pg[i].push(prob.add_var(dt * g.cost_linear, 0.0, g.p_max, false));
            lay.ug[i].push(prob.add_var(dt * g.cost_noload, 0.0, 1.0, true));
            vg[i].push(prob.add_var(g.cost_startup, 0.0, 1.0, false));
        }
        lay.buy.push(prob.add_var(dt * p.buy_price[t], 0.0, config.tie_max, false));
        lay.sell.push(prob.add_var(-dt * p.sell_price(t), 0.0, config.tie_max, false));
        lay.ubuy.push(prob.add_var(0.0, 0.0, 1.0, true));
        lay.usell.push(prob.add_var(0.0, 0.0, 1.0, true));
        lay.ch.push(prob.add_var(dt * bdc, 0.0, p_batt, false));
        lay.dis.push(prob.add_var(dt * bdc, 0.0, p_batt, false));
        lay.uch.push(prob.add_var(0.0, 0.0, 1.0, true));
        lay.udis.push(prob.add_var(0.0, 0.0, 1.0, true));
        let (lo, hi) = if t + 1 == horizon {
            (b.e_initial, b.e_initial)
        } else {
            (b.e_min, b.e_max)
        };
        e.push(prob.add_var(0.0, lo, hi, false));
    }

    for t in 0..horizon {
        let mut bal: Vec<(usize, f64)> = (0..ng).map(|i| (lay.pg[i][t], 1.0)).collect();
        bal.extend([(lay.buy[t], 1.0), (lay.sell[t], -1.0), (lay.dis[t], 1.0), (lay.ch[t], -1.0)]);
        prob.add_row(bal, Sense::Eq, p.load[t] - p.renewable(t), format!("power_balance[{t}]"));

        for (i, g) in config.generators.iter().enumerate() {
            let (pg, ug) = (lay.pg[i][t], lay.ug[i][t]);
            prob.add_row(vec![(pg, 1.0), (ug, -g.p_max)], Sense::Le, 0.0, format!("generator_max[{i},{t}]"));
            if g.p_min > 0.0 {
                prob.add_row(vec![(pg, 1.0), (ug, -g.p_min)], Sense::Ge, 0.0, format!("generator_min[{i},{t}]"));
            }
            if t > 0 {
                let prev = lay.pg[i][t - 1];
                prob.add_row(vec![(pg, 1.0), (prev, -1.0)], Sense::Le, dt * g.ramp, format!("ramp_up[{i},{t}]"));
                prob.add_row(vec![(prev, 1.0), (pg, -1.0)], Sense::Le, dt * g.ramp, format!("ramp_down[{i},{t}]"));
                prob.add_row(
                    vec![(vg[i][t], 1.0), (ug, -1.0), (lay.ug[i][t - 1], 1.0)],
                    Sense::Ge,
                    0.0,
                    format!("startup[{i},{t}]"),
                );
            } else {
                let was_on = if g.initial_on { 1.0 } else { 0.0 };
                prob.add_row(vec![(vg[i][t], 1.0), (ug, -1.0)], Sense::Ge, -was_on, format!("startup[{i},{t}]"));
            }
        }

        prob.add_row(vec![(lay.ubuy[t], 1.0), (lay.usell[t], 1.0)], Sense::Le, 1.0, format!("buy_sell_exclusive[{t}]"));
        prob.add_row(vec![(lay.buy[t], 1.0), (lay.ubuy[t], -config.tie_max)], Sense::Le, 0.0, format!("tie_import[{t}]"));
        prob.add_row(vec![(lay.sell[t], 1.0), (lay.usell[t], -config.tie_max)], Sense::Le, 0.0, format!("tie_export[{t}]"));

        prob.add_row(vec![(lay.uch[t], 1.0), (lay.udis[t], 1.0)], Sense::Le, 1.0, format!("charge_discharge_exclusive[{t}]"));
        prob.add_row(vec![(lay.ch[t], 1.0), (lay.uch[t], -p_batt)], Sense::Le, 0.0, format!("charge_max[{t}]"));
        prob.add_row(vec![(lay.dis[t], 1.0), (lay.udis[t], -p_batt)], Sense::Le, 0.0, format!("discharge_max[{t}]"));
        if b.p_min > 0.0 {
            prob.add_row(vec![(lay.ch[t], 1.0), (lay.uch[t], -b.p_min)], Sense::Ge, 0.0, format!("charge_min[{t}]"));
            prob.add_row(vec![(lay.dis[t], 1.0), (lay.udis[t], -b.p_min)], Sense::Ge, 0.0, format!("discharge_min[{t}]"));
        }

        let mut energy = vec![(e[t], 1.0), (lay.ch[t], -dt * b.eff_char), (lay.dis[t], dt / b.eff_disc)];
        let rhs = if t == 0 {
            b.e_initial
        } else {
            energy.push((e[t - 1], -1.0));
            0.0
        };
        prob.add_row(energy, Sense::Eq, rhs, format!("energy[{t}]"));

        let mut reserve: Vec<(usize, f64)> = (0..ng).map(|i| (lay.pg[i][t], -1.0)).collect();
        reserve.extend([(lay.buy[t], -1.0), (lay.sell[t], 1.0)]);
        let headroom = config.tie_max + config.generators.iter().map(|g| g.p_max).sum::<f64>();
        prob.add_row(reserve, Sense::Ge, config.reserve_frac * p.load[t] - headroom, format!("reserve[{t}]"));
    }

    let usage = |ts: &mut dyn Iterator<Item = usize>| -> Vec<(usize, f64)> {
        ts.flat_map(|t| [(lay.ch[t], dt), (lay.dis[t], dt)]).collect()
    };
    if let Some(cap) = extra.throughput_cap {
        prob.add_row(usage(&mut (0..horizon)), Sense::Le, cap, "throughput_cap");
    }
    if let Some(top) = &extra.top3 {
        prob.add_row(usage(&mut top.intervals.iter().copied()), Sense::Le, top.cap, "top3_cap");
    }
    if let Some(limit) = extra.cycle_transition_limit {
        for (name, u) in [("charge", &lay.uch), ("discharge", &lay.udis)] {
            let mut sum = Vec::new();
            for t in 1..horizon {
                let v = prob.add_var(0.0, 0.0, 1.0, false);
                let (cur, prev) = (u[t], u[t - 1]);
                prob.add_row(vec![(v, 1.0), (cur, -1.0), (prev, -1.0)], Sense::Le, 0.0, format!("{name}_xor_a[{t}]"));
                prob.add_row(vec![(v, 1.0), (cur, -1.0), (prev, 1.0)], Sense::Ge, 0.0, format!("{name}_xor_b[{t}]"));
                prob.add_row(vec![(v, 1.0), (prev, -1.0), (cur, 1.0)], Sense::Ge, 0.0, format!("{name}_xor_c[{t}]"));
                prob.add_row(vec![(v, 1.0), (cur, 1.0), (prev, 1.0)], Sense::Le, 2.0, format!("{name}_xor_d[{t}]"));
                sum.push((v, 1.0));
            }
            if !sum.is_empty() {
                prob.add_row(sum, Sense::Le, limit as f64, format!("{name}_transitions"));
            }
        }
    }
    (prob, lay)
}

/// Explains an infeasible instance by the first aggregate that cannot hold.
fn diagnose(config: &MicrogridConfig, extra: &ExtraConstraints) -> String {
    let p = &config.profiles;
    let b = &config.bess;
    let gen_max: f64 = config.generators.iter().map(|g| g.p_max).sum();
    let p_batt = extra.power_cap.map_or(b.p_max, |c| c.min(b.p_max));
    for t in 0..config.horizon() {
        let net = p.load[t] - p.renewable(t);
        if net > config.tie_max + gen_max + p_batt {
            return format!(
                "peak net load {net:.3} kW at interval {t} exceeds tie-line + generation + storage ({:.3} kW)",
                config.tie_max + gen_max + p_batt
            );
        }
        if -net > config.tie_max + p_batt {
            return format!(
                "renewable surplus {:.3} kW at interval {t} exceeds tie-line export + charging ({:.3} kW)",
                -net,
                config.tie_max + p_batt
            );
        }
        if config.reserve_frac * p.load[t] > 2.0 * config.tie_max + gen_max {
            return format!("reserve requirement at interval {t} exceeds available headroom");
        }
    }
    "no schedule satisfies the energy, ramp and battery-restriction constraints together".into()
}

/// Solves the scheduling problem to proven optimality with default options.
pub fn solve_mds(config: &MicrogridConfig, extra: &ExtraConstraints) -> Result<ScheduleSolution> {
    solve_mds_with(config, extra, &SolveOptions::default(), &BranchAndBound)
}

pub fn solve_mds_with(
    config: &MicrogridConfig,
    extra: &ExtraConstraints,
    options: &SolveOptions,
    backend: &dyn Backend,
) -> Result<ScheduleSolution> {
    config.validate()?;
    extra.validate(config.horizon())?;
    if config.horizon() > options.max_intervals {
        return Err(Error::param(format!(
            "horizon of {} intervals exceeds the size guard of {}",
            config.horizon(),
            options.max_intervals
        )));
    }
    let (prob, lay) = build(config, extra);
    let sol = match backend.solve(&prob, &options.milp) {
        Ok(s) => s,
        Err(Error::Infeasible(_)) => return Err(Error::Infeasible(diagnose(config, extra))),
        Err(e) => return Err(e),
    };
    let x = &sol.x;
    let b = &config.bess;
    let dt = config.dt;
    let clean = |v: f64| if v.abs() < 1e-9 { 0.0 } else { v };
    let mut intervals = Vec::with_capacity(config.horizon());
    let mut energy = b.e_initial;
    let mut prev_on: Vec<bool> = config.generators.iter().map(|g| g.initial_on).collect();
    for t in 0..config.horizon() {
        let gen_on: Vec<bool> = lay.ug.iter().map(|u| x[u[t]] > 0.5).collect();
        let gen_power: Vec<f64> = lay
            .pg
            .iter()
            .zip(&gen_on)
            .map(|(p, &on)| if on { clean(x[p[t]]) } else { 0.0 })
            .collect();
        let gen_startup: Vec<bool> = gen_on.iter().zip(&prev_on).map(|(&on, &was)| on && !was).collect();
        prev_on = gen_on.clone();
        let (buy_on, sell_on) = (x[lay.ubuy[t]] > 0.5, x[lay.usell[t]] > 0.5);
        let (charge_on, discharge_on) = (x[lay.uch[t]] > 0.5, x[lay.udis[t]] > 0.5);
        let buy = if buy_on { clean(x[lay.buy[t]]) } else { 0.0 };
        let sell = if sell_on { clean(x[lay.sell[t]]) } else { 0.0 };
        let charge = if charge_on { clean(x[lay.ch[t]]) } else { 0.0 };
        let discharge = if discharge_on { clean(x[lay.dis[t]]) } else { 0.0 };
        energy += dt * (b.eff_char * charge - discharge / b.eff_disc);
        intervals.push(IntervalDispatch {
            gen_power,
            gen_on,
            gen_startup,
            buy,
            sell,
            buy_on,
            sell_on,
            charge,
            discharge,
            charge_on,
            discharge_on,
            energy,
            soc: b.soc(energy),
        });
    }
    let operation_cost = operation_cost(config, &intervals);
    let objective = operation_cost + linear_bdc_cost(config, extra, &intervals);
    Ok(ScheduleSolution {
        intervals,
        operation_cost,
        objective,
        status: SolveStatus::Optimal,
        gap: sol.gap,
        nodes: sol.nodes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub constraint: String,
    pub interval: Option<usize>,
    /// Amount of violation; zero when satisfied.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residuals: Vec<Residual>,
    pub recomputed_cost: f64,
    /// `|recomputed - reported| / max(1, |reported|)`.
    pub cost_error: f64,
}

/// Residuals above this are flagged.
pub const RESIDUAL_TOL: f64 = 1e-6;

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.value).fold(0.0, f64::max)
    }

    pub fn violations(&self) -> Vec<&Residual> {
        self.residuals.iter().filter(|r| r.value > RESIDUAL_TOL).collect()
    }

    pub fn is_flagged(&self, constraint: &str) -> bool {
        self.violations().iter().any(|r| r.constraint == constraint)
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty() && self.cost_error <= RESIDUAL_TOL
    }
}

/// Recomputes every constraint of the model (with `extra`) on a solution.
pub fn validate_solution(
    config: &MicrogridConfig,
    extra: &ExtraConstraints,
    sol: &ScheduleSolution,
) -> Result<ResidualReport> {
    let horizon = config.horizon();
    if sol.intervals.len() != horizon
        || sol.intervals.iter().any(|iv| iv.gen_power.len() != config.generators.len())
    {
        return Err(Error::param("solution dimensions do not match the configuration"));
    }
    let p = &config.profiles;
    let b = &config.bess;
    let dt = config.dt;
    let pos = |v: f64| v.max(0.0);
    let ind = |on: bool| if on { 1.0 } else { 0.0 };
    let mut out = Vec::new();
    let mut push = |name: &str, t: Option<usize>, v: f64| {
        out.push(Residual {
            constraint: name.to_string(),
            interval: t,
            value: if v.is_nan() { f64::INFINITY } else { pos(v) },
        })
    };
    let p_batt = extra.power_cap.map_or(b.p_max, |c| c.min(b.p_max));
    let mut energy = b.e_initial;
    for (t, iv) in sol.intervals.iter().enumerate() {
        let gen: f64 = iv.gen_power.iter().sum();
        let supply = gen + iv.buy - iv.sell + iv.discharge - iv.charge + p.renewable(t);
        push("power_balance", Some(t), (supply - p.load[t]).abs());
        for (i, g) in config.generators.iter().enumerate() {
            let pg = iv.gen_power[i];
            let u = ind(iv.gen_on[i]);
            push("generator_limits", Some(t), pos(pg - g.p_max * u).max(g.p_min * u - pg).max(-pg));
            if t > 0 {
                let prev = sol.intervals[t - 1].gen_power[i];
                push("ramp_up", Some(t), pg - prev - dt * g.ramp);
                push("ramp_down", Some(t), prev - pg - dt * g.ramp);
            }
            let was_on = if t == 0 { g.initial_on } else { sol.intervals[t - 1].gen_on[i] };
            push("startup_linking", Some(t), u - ind(was_on) - ind(iv.gen_startup[i]));
        }
        push(
            "buy_sell_exclusivity",
            Some(t),
            (ind(iv.buy_on) + ind(iv.sell_on) - 1.0).max(iv.buy.min(iv.sell)),
        );
        push("tie_import", Some(t), (iv.buy - config.tie_max * ind(iv.buy_on)).max(-iv.buy));
        push("tie_export", Some(t), (iv.sell - config.tie_max * ind(iv.sell_on)).max(-iv.sell));
        push(
            "charge_discharge_exclusivity",
            Some(t),
            (ind(iv.charge_on) + ind(iv.discharge_on) - 1.0).max(iv.charge.min(iv.discharge)),
        );
        let uc = ind(iv.charge_on);
        let ud = ind(iv.discharge_on);
        push("charge_limits", Some(t), (iv.charge - p_batt * uc).max(b.p_min * uc - iv.charge).max(-iv.charge));
        push(
            "discharge_limits",
            Some(t),
            (iv.discharge - p_batt * ud).max(b.p_min * ud - iv.discharge).max(-iv.discharge),
        );
        energy += dt * (b.eff_char * iv.charge - iv.discharge / b.eff_disc);
        push("energy_recursion", Some(t), (energy - iv.energy).abs());
        push("soc_definition", Some(t), (b.soc(iv.energy) - iv.soc).abs());
        push("energy_bounds", Some(t), (b.e_min - iv.energy).max(iv.energy - b.e_max));
        let headroom: f64 = config.generators.iter().zip(&iv.gen_power).map(|(g, pg)| g.p_max - pg).sum();
        let lhs = config.tie_max - iv.buy + iv.sell + headroom;
        push("reserve", Some(t), config.reserve_frac * p.load[t] - lhs);
    }
    let final_energy = sol.intervals.last().map_or(b.e_initial, |iv| iv.energy);
    push("final_energy", None, (final_energy - b.e_initial).abs());
    let usage = |ts: &mut dyn Iterator<Item = usize>| -> f64 {
        ts.map(|t| dt * (sol.intervals[t].charge + sol.intervals[t].discharge)).sum()
    };
    if let Some(cap) = extra.throughput_cap {
        push("throughput_cap", None, usage(&mut (0..horizon)) - cap);
    }
    if let Some(top) = &extra.top3 {
        push("top3_cap", None, usage(&mut top.intervals.iter().copied()) - top.cap);
    }
    if let Some(limit) = extra.cycle_transition_limit {
        let changes = |f: fn(&IntervalDispatch) -> bool| {
            sol.intervals.windows(2).filter(|w| f(&w[0]) != f(&w[1])).count() as f64
        };
        push("charge_transitions", None, changes(|iv| iv.charge_on) - limit as f64);
        push("discharge_transitions", None, changes(|iv| iv.discharge_on) - limit as f64);
    }
    let recomputed_cost = operation_cost(config, &sol.intervals);
    let cost_error = (recomputed_cost - sol.operation_cost).abs() / sol.operation_cost.abs().max(1.0);
    Ok(ResidualReport {
        residuals: out,
        recomputed_cost,
        cost_error,
    })
}

/// Optimum found by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct BruteForceResult {
    /// Objective including any linear degradation term.
    pub objective: f64,
    /// Signed battery power per interval (positive discharges).
    pub battery: Vec<f64>,
    /// Output per interval per generator.
    pub generators: Vec<Vec<f64>>,
}

/// Upper limit on the number of enumerated combinations.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

struct Enumeration<'a> {
    config: &'a MicrogridConfig,
    extra: &'a ExtraConstraints,
    battery_levels: &'a [Vec<f64>],
    gen_options: Vec<Vec<Vec<(bool, f64)>>>,
    best: Option<BruteForceResult>,
    battery: Vec<f64>,
    gens: Vec<Vec<f64>>,
    on: Vec<Vec<bool>>,
}

impl Enumeration<'_> {
    fn search(&mut self, t: usize, energy: f64, cost: f64, usage: f64) {
        let c = self.config;
        let b = &c.bess;
        let dt = c.dt;
        let horizon = c.horizon();
        if t == horizon {
            if (energy - b.e_initial).abs() > 1e-9 * (1.0 + b.e_initial) {
                return;
            }
            if let Some(cap) = self.extra.throughput_cap {
                if usage > cap + 1e-9 {
                    return;
                }
            }
            if let Some(top) = &self.extra.top3 {
                let u: f64 = top.intervals.iter().map(|&k| dt * self.battery[k].abs()).sum();
                if u > top.cap + 1e-9 {
                    return;
                }
            }
            if let Some(limit) = self.extra.cycle_transition_limit {
                if !transitions_fit(&self.battery, b.p_min == 0.0, limit as usize) {
                    return;
                }
            }
            let objective = cost + self.extra.linear_bdc_rate.unwrap_or(0.0) * usage;
            if self.best.as_ref().is_none_or(|bst| objective < bst.objective) {
                self.best = Some(BruteForceResult {
                    objective,
                    battery: self.battery.clone(),
                    generators: self.gens.clone(),
                });
            }
            return;
        }
        let p = &c.profiles;
        let p_batt = self.extra.power_cap.map_or(b.p_max, |cap| cap.min(b.p_max));
        let n_combo: usize = self.gen_options[t].iter().map(|o| o.len()).product();
        for &pb in &self.battery_levels[t] {
            if pb.abs() > p_batt + 1e-9 || (pb != 0.0 && pb.abs() < b.p_min - 1e-9) {
                continue;
            }
            let (charge, discharge) = if pb < 0.0 { (-pb, 0.0) } else { (0.0, pb) };
            let next_e = energy + dt * (b.eff_char * charge - discharge / b.eff_disc);
            if next_e < b.e_min - 1e-9 || next_e > b.e_max + 1e-9 {
                continue;
            }
            for combo in 0..n_combo {
                let mut k = combo;
                let mut gen_cost = 0.0;
                let mut gen_total = 0.0;
                let mut headroom = 0.0;
                let mut ok = true;
                let mut choice = Vec::with_capacity(c.generators.len());
                for (i, g) in c.generators.iter().enumerate() {
                    let opts = &self.gen_options[t][i];
                    let (on, pg) = opts[k % opts.len()];
                    k /= opts.len();
                    if t > 0 {
                        let prev = self.gens[t - 1][i];
                        if (pg - prev).abs() > dt * g.ramp + 1e-9 {
                            ok = false;
                            break;
                        }
                    }
                    let was_on = if t == 0 { g.initial_on } else { self.on[t - 1][i] };
                    gen_cost += dt * pg * g.cost_linear
                        + if on { dt * g.cost_noload } else { 0.0 }
                        + if on && !was_on { g.cost_startup } else { 0.0 };
                    gen_total += pg;
                    headroom += g.p_max - pg;
                    choice.push((on, pg));
                }
                if !ok {
                    continue;
                }
                let net = p.load[t] - p.renewable(t) - gen_total - discharge + charge;
                let (buy, sell) = if net > 0.0 { (net, 0.0) } else { (0.0, -net) };
                if buy > c.tie_max + 1e-9 || sell > c.tie_max + 1e-9 {
                    continue;
                }
                if c.tie_max - buy + sell + headroom < c.reserve_frac * p.load[t] - 1e-9 {
                    continue;
                }
                let step_cost = gen_cost + dt * (buy * p.buy_price[t] - sell * p.sell_price(t));
                self.battery.push(pb);
                self.gens.push(choice.iter().map(|&(_, pg)| pg).collect());
                self.on.push(choice.iter().map(|&(on, _)| on).collect());
                self.search(t + 1, next_e, cost + step_cost, usage + dt * pb.abs());
                self.battery.pop();
                self.gens.pop();
                self.on.pop();
            }
        }
    }
}

/// Whether some status labelling of `battery` keeps both the charge and the
/// discharge indicator within `limit` changes. Idle intervals may carry
/// either status when the battery has no minimum power.
fn transitions_fit(battery: &[f64], idle_may_be_on: bool, limit: usize) -> bool {
    // status: 0 off, 1 charging, 2 discharging
    let allowed = |p: f64| -> &'static [u8] {
        if p < 0.0 {
            &[1]
        } else if p > 0.0 {
            &[2]
        } else if idle_may_be_on {
            &[0, 1, 2]
        } else {
            &[0]
        }
    };
    let mut states: Vec<(u8, usize, usize)> = match battery.first() {
        Some(&p) => allowed(p).iter().map(|&s| (s, 0, 0)).collect(),
        None => return true,
    };
    for &p in &battery[1..] {
        let mut next = Vec::new();
        for &(prev, cc, dc) in &states {
            for &s in allowed(p) {
                let cc = cc + usize::from((prev == 1) != (s == 1));
                let dc = dc + usize::from((prev == 2) != (s == 2));
                if cc <= limit && dc <= limit && !next.contains(&(s, cc, dc)) {
                    next.push((s, cc, dc));
                }
            }
        }
        states = next;
    }
    !states.is_empty()
}

/// Exhaustively searches discrete battery and generator levels.
///
/// `battery_levels[t]` lists signed battery powers (positive discharges);
/// `generator_levels[t]` lists outputs tried for every generator, where a
/// level of zero means "off" (and, when `p_min` is zero, also "on at zero").
/// Exchange with the grid follows from the power balance.
pub fn brute_force_schedule(
    config: &MicrogridConfig,
    extra: &ExtraConstraints,
    battery_levels: &[Vec<f64>],
    generator_levels: &[Vec<f64>],
) -> Result<BruteForceResult> {
    config.validate()?;
    extra.validate(config.horizon())?;
    let horizon = config.horizon();
    if battery_levels.len() != horizon || generator_levels.len() != horizon {
        return Err(Error::param("one level list per interval is required"));
    }
    let gen_options: Vec<Vec<Vec<(bool, f64)>>> = generator_levels
        .iter()
        .map(|levels| {
            config
                .generators
                .iter()
                .map(|g| {
                    let mut opts = Vec::new();
                    for &l in levels {
                        if l == 0.0 {
                            opts.push((false, 0.0));
                            if g.p_min == 0.0 {
                                opts.push((true, 0.0));
                            }
                        } else if l >= g.p_min - 1e-9 && l <= g.p_max + 1e-9 {
                            opts.push((true, l));
                        }
                    }
                    opts
                })
                .collect()
        })
        .collect();
    let size: f64 = (0..horizon)
        .map(|t| {
            battery_levels[t].len() as f64 * gen_options[t].iter().map(|o| o.len() as f64).product::<f64>()
        })
        .product();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::param(format!("enumeration of {size:.0} combinations exceeds the limit")));
    }
    let mut en = Enumeration {
        config,
        extra,
        battery_levels,
        gen_options,
        best: None,
        battery: Vec::new(),
        gens: Vec::new(),
        on: Vec::new(),
    };
    en.search(0, config.bess.e_initial, 0.0, 0.0);
    en.best
        .ok_or_else(|| Error::Infeasible("no enumerated schedule satisfies the constraints".into()))
}

/// Scenario file: the configuration with profiles stored in a CSV next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub generators: Vec<GeneratorSpec>,
    pub bess: BessSpec,
    pub tie_max: f64,
    pub reserve_frac: f64,
    pub dt: f64,
    pub sell_factor: f64,
    /// Profile CSV, relative to the scenario file.
    pub profiles: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProfileRow {
    hour: usize,
    load_kw: f64,
    wind_kw: f64,
    pv_kw: f64,
    buy_price: f64,
    temp_c: f64,
}

pub fn write_profiles_csv(path: &Path, p: &Profiles) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in 0..p.len() {
        w.serialize(ProfileRow {
            hour: t + 1,
            load_kw: p.load[t],
            wind_kw: p.wind[t],
            pv_kw: p.pv[t],
            buy_price: p.buy_price[t],
            temp_c: p.temp[t],
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_profiles_csv(path: &Path, sell_factor: f64) -> Result<Profiles> {
    let mut r = csv::Reader::from_path(path)?;
    let mut p = Profiles {
        load: Vec::new(),
        wind: Vec::new(),
        pv: Vec::new(),
        buy_price: Vec::new(),
        temp: Vec::new(),
        sell_factor,
    };
    for row in r.deserialize() {
        let row: ProfileRow = row?;
        p.load.push(row.load_kw);
        p.wind.push(row.wind_kw);
        p.pv.push(row.pv_kw);
        p.buy_price.push(row.buy_price);
        p.temp.push(row.temp_c);
    }
    p.validate()?;
    Ok(p)
}

/// Writes `<dir>/<stem>.json` and `<dir>/<stem>_profiles.csv`.
pub fn write_scenario(dir: &Path, stem: &str, config: &MicrogridConfig) -> Result<PathBuf> {
    let csv_name = PathBuf::from(format!("{stem}_profiles.csv"));
    write_profiles_csv(&dir.join(&csv_name), &config.profiles)?;
    let file = ScenarioFile {
        generators: config.generators.clone(),
        bess: config.bess.clone(),
        tie_max: config.tie_max,
        reserve_frac: config.reserve_frac,
        dt: config.dt,
        sell_factor: config.profiles.sell_factor,
        profiles: csv_name,
    };
    let path = dir.join(format!("{stem}.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&file)? + "\n")?;
    Ok(path)
}

pub fn read_scenario(path: &Path) -> Result<MicrogridConfig> {
    let file: ScenarioFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let profiles = read_profiles_csv(&base.join(&file.profiles), file.sell_factor)?;
    let config = MicrogridConfig {
        generators: file.generators,
        bess: file.bess,
        tie_max: file.tie_max,
        reserve_frac: file.reserve_frac,
        dt: file.dt,
        profiles,
    };
    config.validate()?;
    Ok(config)
}

/// Per-interval dispatch CSV.
pub fn write_solution_csv(path: &Path, config: &MicrogridConfig, sol: &ScheduleSolution) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["interval".to_string()];
    for i in 0..config.generators.len() {
        header.push(format!("gen{i}_kw"));
        header.push(format!("gen{i}_on"));
    }
    header.extend(
        ["buy_kw", "sell_kw", "charge_kw", "discharge_kw", "energy_kwh", "soc"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    for (t, iv) in sol.intervals.iter().enumerate() {
        let mut rec = vec![(t + 1).to_string()];
        for (pg, on) in iv.gen_power.iter().zip(&iv.gen_on) {
            rec.push(pg.to_string());
            rec.push(u8::from(*on).to_string());
        }
        for v in [iv.buy, iv.sell, iv.charge, iv.discharge, iv.energy, iv.soc] {
            rec.push(v.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_gen_config(load: Vec<f64>, price: Vec<f64>) -> MicrogridConfig {
        let n = load.len();
        MicrogridConfig {
            generators: vec![],
            bess: BessSpec {
                e_max: 300.0,
                e_min: 0.0,
                p_max: 150.0,
                p_min: 0.0,
                eff_char: 0.9,
                eff_disc: 0.9,
                e_initial: 150.0,
                soh: 1.0,
            },
            tie_max: 500.0,
            reserve_frac: 0.1,
            dt: 1.0,
            profiles: Profiles {
                load,
                wind: vec![0.0; n],
                pv: vec![0.0; n],
                buy_price: price,
                temp: vec![25.0; n],
                sell_factor: 0.8,
            },
        }
    }

    #[test]
    fn null_schedule_costs_nothing() {
        let mut c = no_gen_config(vec![0.0; 3], vec![0.1, 0.2, 0.3]);
        c.generators.push(GeneratorSpec {
            p_max: 180.0,
            p_min: 30.0,
            ramp: 90.0,
            cost_linear: 0.3,
            cost_noload: 3.0,
            cost_startup: 15.0,
            initial_on: false,
        });
        c.profiles.sell_factor = 0.0;
        let s = solve_mds(&c, &ExtraConstraints::default()).unwrap();
        assert!(s.operation_cost.abs() < 1e-9);
        assert!(s.intervals.iter().all(|iv| !iv.gen_on[0] && iv.charge == 0.0 && iv.discharge == 0.0));
    }

    #[test]
    fn single_interval_buys_the_load() {
        let mut c = no_gen_config(vec![100.0], vec![0.10]);
        c.generators.push(GeneratorSpec {
            p_max: 180.0,
            p_min: 0.0,
            ramp: 200.0,
            cost_linear: 0.25,
            cost_noload: 0.0,
            cost_startup: 0.0,
            initial_on: false,
        });
        c.bess.p_max = 0.0;
        let s = solve_mds(&c, &ExtraConstraints::default()).unwrap();
        assert!((s.operation_cost - 10.0).abs() < 1e-9);
        assert!((s.intervals[0].buy - 100.0).abs() < 1e-9);
    }

    #[test]
    fn two_interval_arbitrage() {
        let mut c = no_gen_config(vec![0.0, 0.0], vec![0.05, 0.50]);
        c.tie_max = 100.0;
        let s = solve_mds(&c, &ExtraConstraints::default()).unwrap();
        assert!((s.objective + 27.4).abs() < 1e-6, "{}", s.objective);
        assert!((s.intervals[0].charge - 100.0).abs() < 1e-6);
        assert!((s.intervals[1].discharge - 81.0).abs() < 1e-6);
        let levels: Vec<Vec<f64>> = vec![(-150..=150).map(f64::from).collect(); 2];
        let bf = brute_force_schedule(&c, &ExtraConstraints::default(), &levels, &[vec![0.0], vec![0.0]]).unwrap();
        assert!((bf.objective + 27.4).abs() < 1e-9);
    }

    #[test]
    fn validation_flags_corruption() {
        let mut c = no_gen_config(vec![50.0, 80.0, 20.0], vec![0.05, 0.5, 0.1]);
        c.tie_max = 300.0;
        let extra = ExtraConstraints::default();
        let s = solve_mds(&c, &extra).unwrap();
        let rep = validate_solution(&c, &extra, &s).unwrap();
        assert!(rep.is_valid(), "{:?}", rep.violations());

        let mut both = s.clone();
        both.intervals[0].charge = 10.0;
        both.intervals[0].discharge = 10.0;
        let rep = validate_solution(&c, &extra, &both).unwrap();
        assert!(rep.is_flagged("charge_discharge_exclusivity"));

        let mut drift = s.clone();
        drift.intervals[2].energy += 5.0;
        let rep = validate_solution(&c, &extra, &drift).unwrap();
        assert!(rep.is_flagged("final_energy"));
    }

    #[test]
    fn infeasible_peak_is_named() {
        let mut c = no_gen_config(vec![1000.0], vec![0.1]);
        c.bess.p_max = 0.0;
        match solve_mds(&c, &ExtraConstraints::default()) {
            Err(Error::Infeasible(msg)) => assert!(msg.contains("peak net load"), "{msg}"),
            other => panic!("{other:?}"),
        }
        let levels = [vec![0.0]];
        assert!(matches!(
            brute_force_schedule(&c, &ExtraConstraints::default(), &levels, &[vec![0.0]]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn size_guard() {
        let c = no_gen_config(vec![0.0; 97], vec![0.1; 97]);
        assert!(matches!(solve_mds(&c, &ExtraConstraints::default()), Err(Error::Parameter(_))));
    }

    #[test]
    fn xor_rows_force_exclusive_or() {
        // fix both statuses and check the transition variable is pinned to their xor
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
            for sign in [1.0, -1.0] {
                let mut p = Problem::new();
                let prev = p.add_var(0.0, a, a, true);
                let cur = p.add_var(0.0, b, b, true);
                let v = p.add_var(sign, 0.0, 1.0, false);
                p.add_row(vec![(v, 1.0), (cur, -1.0), (prev, -1.0)], Sense::Le, 0.0, "a");
                p.add_row(vec![(v, 1.0), (cur, -1.0), (prev, 1.0)], Sense::Ge, 0.0, "b");
                p.add_row(vec![(v, 1.0), (prev, -1.0), (cur, 1.0)], Sense::Ge, 0.0, "c");
                p.add_row(vec![(v, 1.0), (cur, 1.0), (prev, 1.0)], Sense::Le, 2.0, "d");
                let s = milp::solve(&p, &milp::Options::default()).unwrap();
                let xor = if a != b { 1.0 } else { 0.0 };
                assert!((s.x[v] - xor).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn extras_never_lower_the_optimum() {
        let c = no_gen_config(vec![40.0, 60.0, 100.0, 30.0], vec![0.05, 0.2, 0.5, 0.1]);
        let base = solve_mds(&c, &ExtraConstraints::default()).unwrap();
        let tp = base.throughput(1.0);
        for extra in [
            ExtraConstraints {
                throughput_cap: Some(0.5 * tp),
                ..Default::default()
            },
            ExtraConstraints {
                power_cap: Some(40.0),
                ..Default::default()
            },
            ExtraConstraints {
                cycle_transition_limit: Some(1),
                ..Default::default()
            },
            ExtraConstraints {
                top3: Some(TopThree {
                    intervals: [0, 2, 3],
                    cap: 10.0,
                }),
                ..Default::default()
            },
        ] {
            let s = solve_mds(&c, &extra).unwrap();
            assert!(s.operation_cost >= base.operation_cost - 1e-9);
            assert!(validate_solution(&c, &extra, &s).unwrap().is_valid());
        }
    }
}
