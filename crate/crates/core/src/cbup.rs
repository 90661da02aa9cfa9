//! Cycle-based battery usage processing.
//!
//! A schedule is cut into cycles: maximal runs of consecutive intervals in
//! which the battery keeps charging (or keeps discharging). Idle intervals
//! and direction changes end a run. Each run becomes one feature vector for
//! the degradation surrogate.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::aging::{self, CycleFeatures, OracleParams};
use crate::error::{Error, Result};
use crate::mds::{MicrogridConfig, ScheduleSolution};
use crate::nnbd::{self, DegradationModel};

/// Battery power below this magnitude counts as idle, kW.
pub const DEFAULT_POWER_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Charge,
    Discharge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedCycle {
    pub start_t: usize,
    /// One past the last interval of the run.
    pub end_t: usize,
    pub direction: Direction,
    /// Mean battery power over the run, kW.
    pub avg_power: f64,
    pub c_rate: f64,
    pub soc_start: f64,
    pub dod: f64,
    /// Mean ambient temperature over the run, °C.
    pub temp: f64,
}

impl AggregatedCycle {
    pub fn features(&self, soh: f64) -> CycleFeatures {
        CycleFeatures {
            temp: self.temp,
            c_rate: self.c_rate,
            soc: self.soc_start,
            dod: self.dod,
            soh,
        }
    }
}

fn direction_at(sol: &ScheduleSolution, t: usize, floor: f64) -> Option<Direction> {
    let iv = &sol.intervals[t];
    if iv.charge > floor {
        Some(Direction::Charge)
    } else if iv.discharge > floor {
        Some(Direction::Discharge)
    } else {
        None
    }
}

/// Start-of-interval SOC for every interval plus the final SOC.
fn soc_path(config: &MicrogridConfig, sol: &ScheduleSolution) -> Vec<f64> {
    let b = &config.bess;
    std::iter::once(b.soc(b.e_initial))
        .chain(sol.intervals.iter().map(|iv| iv.soc))
        .collect()
}

pub fn aggregate_cycles(config: &MicrogridConfig, sol: &ScheduleSolution, power_floor: f64) -> Vec<AggregatedCycle> {
    let soc = soc_path(config, sol);
    let temps = &config.profiles.temp;
    let n = sol.intervals.len();
    let mut out = Vec::new();
    let mut t = 0;
    while t < n {
        let Some(dir) = direction_at(sol, t, power_floor) else {
            t += 1;
            continue;
        };
        let start = t;
        while t < n && direction_at(sol, t, power_floor) == Some(dir) {
            t += 1;
        }
        let power = |iv: &crate::mds::IntervalDispatch| match dir {
            Direction::Charge => iv.charge,
            Direction::Discharge => iv.discharge,
        };
        let len = (t - start) as f64;
        let avg_power = sol.intervals[start..t].iter().map(power).sum::<f64>() / len;
        let c_rate = if config.bess.e_max > 0.0 { avg_power / config.bess.e_max } else { 0.0 };
        out.push(AggregatedCycle {
            start_t: start,
            end_t: t,
            direction: dir,
            avg_power,
            c_rate,
            soc_start: soc[start],
            dod: (soc[t] - soc[start]).abs(),
            temp: temps[start..t].iter().sum::<f64>() / len,
        });
    }
    out
}

/// One feature vector per non-idle interval, treating every interval as its
/// own cycle: `dod = |ΔSOC|` and `c_rate = dod / dt`.
pub fn per_interval_features(config: &MicrogridConfig, sol: &ScheduleSolution, power_floor: f64) -> Vec<CycleFeatures> {
    let soc = soc_path(config, sol);
    (0..sol.intervals.len())
        .filter(|&t| direction_at(sol, t, power_floor).is_some())
        .map(|t| {
            let dod = (soc[t + 1] - soc[t]).abs();
            CycleFeatures {
                temp: config.profiles.temp[t],
                c_rate: dod / config.dt,
                soc: soc[t],
                dod,
                soh: config.bess.soh,
            }
        })
        .collect()
}

/// Predicted capacity loss of a set of cycles: `Σ f(x_c) · soh`.
pub fn estimate_degradation(model: &DegradationModel, cycles: &[CycleFeatures], soh: f64) -> Result<f64> {
    if !model.is_trained() {
        return Err(Error::State("degradation model has not been trained".into()));
    }
    per_cycle_degradation(model, cycles, soh).map(|v| v.iter().sum())
}

pub fn per_cycle_degradation(model: &DegradationModel, cycles: &[CycleFeatures], soh: f64) -> Result<Vec<f64>> {
    if !model.is_trained() {
        return Err(Error::State("degradation model has not been trained".into()));
    }
    cycles
        .iter()
        .map(|c| nnbd::forward(model, &c.to_array()).map(|y| y * soh))
        .collect()
}

/// Capacity loss of the same cycles under the aging oracle.
pub fn oracle_degradation(params: &OracleParams, cycles: &[CycleFeatures]) -> Result<f64> {
    cycles.iter().map(|c| aging::oracle_cycle_loss(c, params)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegradationCostParams {
    pub capital: f64,
    pub salvage: f64,
    pub soh_eol: f64,
}

/// Battery unit price, $/kWh.
pub const DEFAULT_UNIT_PRICE: f64 = 400.0;
/// End-of-life state of health for lifetime accounting.
pub const DEFAULT_SOH_EOL: f64 = 0.7;

impl DegradationCostParams {
    pub fn for_battery(unit_price: f64, e_max: f64) -> Self {
        Self {
            capital: unit_price * e_max,
            salvage: 0.0,
            soh_eol: DEFAULT_SOH_EOL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.soh_eol > 0.0 && self.soh_eol < 1.0) {
            return Err(Error::param("soh_eol must lie in (0, 1)"));
        }
        if !(self.capital >= self.salvage && self.salvage >= 0.0) {
            return Err(Error::param("need capital >= salvage >= 0"));
        }
        Ok(())
    }

    /// Dollars per unit of capacity loss.
    pub fn slope(&self) -> f64 {
        (self.capital - self.salvage) / (1.0 - self.soh_eol)
    }
}

pub fn degradation_cost(params: &DegradationCostParams, bd: f64) -> Result<f64> {
    params.validate()?;
    if !(bd >= 0.0) {
        return Err(Error::domain("bd", "degradation must be non-negative"));
    }
    Ok(params.slope() * bd)
}

/// Years until `soh_eol` at a constant daily capacity loss.
pub fn expected_lifetime(daily_bd: f64, soh_now: f64, soh_eol: f64) -> Result<f64> {
    if !(daily_bd > 0.0) {
        return Err(Error::param("daily degradation must be positive"));
    }
    Ok((soh_now - soh_eol) / daily_bd / 365.0)
}

/// Degradation of one schedule under the surrogate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDegradation {
    pub cycles: Vec<AggregatedCycle>,
    pub predicted: Vec<f64>,
    pub bd: f64,
    pub cost: f64,
}

pub fn evaluate_schedule(
    config: &MicrogridConfig,
    sol: &ScheduleSolution,
    model: &DegradationModel,
    cost: &DegradationCostParams,
) -> Result<ScheduleDegradation> {
    let cycles = aggregate_cycles(config, sol, DEFAULT_POWER_FLOOR);
    let soh = config.bess.soh;
    let features: Vec<CycleFeatures> = cycles.iter().map(|c| c.features(soh)).collect();
    let predicted = per_cycle_degradation(model, &features, soh)?;
    let bd = predicted.iter().sum();
    Ok(ScheduleDegradation {
        cycles,
        predicted,
        bd,
        cost: degradation_cost(cost, bd)?,
    })
}

/// Interval indices are zero-based with an exclusive end, as in [`AggregatedCycle`].
pub fn write_cycles_csv(path: &Path, cycles: &[AggregatedCycle], predicted: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["start_t", "end_t", "direction", "avg_power_kw", "c_rate", "soc_start", "dod", "predicted_bd"])?;
    for (c, bd) in cycles.iter().zip(predicted) {
        let dir = match c.direction {
            Direction::Charge => "charge",
            Direction::Discharge => "discharge",
        };
        w.write_record([
            c.start_t.to_string(),
            c.end_t.to_string(),
            dir.to_string(),
            c.avg_power.to_string(),
            c.c_rate.to_string(),
            c.soc_start.to_string(),
            c.dod.to_string(),
            bd.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mds::{IntervalDispatch, SolveStatus};
    use crate::scenario;

    fn schedule(config: &MicrogridConfig, powers: &[f64]) -> ScheduleSolution {
        let b = &config.bess;
        let mut e = b.e_initial;
        let intervals = powers
            .iter()
            .map(|&p| {
                let (charge, discharge) = if p < 0.0 { (-p, 0.0) } else { (0.0, p) };
                e += config.dt * (b.eff_char * charge - discharge / b.eff_disc);
                IntervalDispatch {
                    gen_power: vec![0.0; config.generators.len()],
                    gen_on: vec![false; config.generators.len()],
                    gen_startup: vec![false; config.generators.len()],
                    buy: 0.0,
                    sell: 0.0,
                    buy_on: false,
                    sell_on: false,
                    charge,
                    discharge,
                    charge_on: charge > 0.0,
                    discharge_on: discharge > 0.0,
                    energy: e,
                    soc: b.soc(e),
                }
            })
            .collect();
        ScheduleSolution {
            intervals,
            operation_cost: 0.0,
            objective: 0.0,
            status: SolveStatus::Optimal,
            gap: 0.0,
            nodes: 0,
        }
    }

    fn config_with_soc(soc: f64) -> MicrogridConfig {
        let mut c = scenario::bundled();
        c.bess.e_initial = soc * c.bess.e_max;
        c
    }

    #[test]
    fn idle_schedule_has_no_cycles() {
        let c = scenario::bundled();
        let s = schedule(&c, &[0.0; 24]);
        assert!(aggregate_cycles(&c, &s, DEFAULT_POWER_FLOOR).is_empty());
        assert!(per_interval_features(&c, &s, DEFAULT_POWER_FLOOR).is_empty());
    }

    #[test]
    fn two_interval_discharge_is_one_cycle() {
        let c = config_with_soc(0.9);
        let mut p = vec![0.0; 24];
        p[0] = 54.0;
        p[1] = 54.0;
        let s = schedule(&c, &p);
        let cycles = aggregate_cycles(&c, &s, DEFAULT_POWER_FLOOR);
        assert_eq!(cycles.len(), 1);
        let cy = &cycles[0];
        assert_eq!((cy.start_t, cy.end_t, cy.direction), (0, 2, Direction::Discharge));
        assert!((cy.avg_power - 54.0).abs() < 1e-12);
        assert!((cy.c_rate - 0.18).abs() < 1e-12);
        assert!((cy.soc_start - 0.9).abs() < 1e-12);
        assert!((cy.dod - 0.4).abs() < 1e-12);

        let per = per_interval_features(&c, &s, DEFAULT_POWER_FLOOR);
        assert_eq!(per.len(), 2);
        for f in &per {
            assert!((f.dod - 0.2).abs() < 1e-12 && (f.c_rate - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn direction_change_splits() {
        let c = scenario::bundled();
        let mut p = vec![0.0; 24];
        p[3] = -50.0;
        p[4] = 50.0;
        let cycles = aggregate_cycles(&c, &schedule(&c, &p), DEFAULT_POWER_FLOOR);
        assert_eq!(cycles.len(), 2);
        assert_eq!(cycles[0].direction, Direction::Charge);
        assert_eq!(cycles[1].direction, Direction::Discharge);
    }

    #[test]
    fn half_hour_interval_rate() {
        let mut c = scenario::bundled();
        c.dt = 0.5;
        let mut p = vec![0.0; 24];
        // 0.1 of 300 kWh drawn in half an hour, through 0.9 efficiency
        p[0] = 0.1 * 300.0 * 0.9 / 0.5;
        let per = per_interval_features(&c, &schedule(&c, &p), DEFAULT_POWER_FLOOR);
        assert!((per[0].dod - 0.1).abs() < 1e-12);
        assert!((per[0].c_rate - 0.2).abs() < 1e-12);
    }

    #[test]
    fn cost_and_lifetime_arithmetic() {
        let params = DegradationCostParams::for_battery(400.0, 300.0);
        assert_eq!(degradation_cost(&params, 0.0).unwrap(), 0.0);
        assert!((degradation_cost(&params, 4.5e-5).unwrap() - 18.0).abs() < 1e-9);
        let flat = DegradationCostParams {
            capital: 5.0,
            salvage: 5.0,
            soh_eol: 0.7,
        };
        assert_eq!(degradation_cost(&flat, 0.3).unwrap(), 0.0);
        let bad = DegradationCostParams { soh_eol: 1.0, ..params };
        assert!(degradation_cost(&bad, 0.1).is_err());
        assert!((expected_lifetime(0.0002, 1.0, 0.7).unwrap() - 4.1).abs() < 0.05);
        assert!((expected_lifetime(0.000045, 1.0, 0.7).unwrap() - 18.3).abs() < 0.05);
        assert!((expected_lifetime(0.3 / 365.0, 1.0, 0.7).unwrap() - 1.0).abs() < 1e-12);
        assert!(expected_lifetime(0.0, 1.0, 0.7).is_err());
    }

    #[test]
    fn untrained_model_is_rejected() {
        let m = nnbd::init_network(&nnbd::NetworkSpec::default(), 0).unwrap();
        assert!(matches!(estimate_degradation(&m, &[], 1.0), Err(Error::State(_))));
    }

    #[test]
    fn stub_model_sum() {
        // a zero network returns the target mean; set it to 2e-5
        let mut m = nnbd::init_network(&nnbd::NetworkSpec::default(), 0).unwrap();
        let zeros = vec![0.0; m.parameter_count()];
        m.set_parameters(&zeros);
        m.stats.target_mean = 2e-5;
        m.fingerprint = Some(nnbd::Fingerprint {
            seed: 0,
            epochs: 0,
            best_epoch: 0,
            final_train_mse: 0.0,
            final_val_mse: 0.0,
        });
        assert_eq!(estimate_degradation(&m, &[], 0.95).unwrap(), 0.0);
        let f = CycleFeatures {
            temp: 25.0,
            c_rate: 0.5,
            soc: 0.5,
            dod: 0.5,
            soh: 0.95,
        };
        assert!((estimate_degradation(&m, &[f], 0.95).unwrap() - 1.9e-5).abs() < 1e-15);
    }
}
