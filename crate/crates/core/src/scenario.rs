//! Synthetic microgrid testbed.
//!
//! One 180 kW diesel generator, a 300 kWh / 150 kW battery, a 500 kW
//! tie-line and seeded day profiles: a residential load with morning and
//! evening peaks, solar following the daylight bell, wind with a slow
//! random drift, a wholesale-like price curve and ambient temperature.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mds::{
    self, BessSpec, ExtraConstraints, GeneratorSpec, IntervalDispatch, MicrogridConfig, Profiles, ScheduleSolution,
    SolveStatus,
};

pub const DEFAULT_SEED: u64 = 7;
/// Mean renewable output over mean load.
pub const DEFAULT_PENETRATION: f64 = 0.8;
pub const HORIZON: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub seed: u64,
    pub penetration: f64,
    /// Battery energy capacity, kWh; power capacity scales as half of it per hour.
    pub bess_kwh: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            penetration: DEFAULT_PENETRATION,
            bess_kwh: 300.0,
        }
    }
}

pub fn default_generator() -> GeneratorSpec {
    GeneratorSpec {
        p_max: 180.0,
        p_min: 30.0,
        ramp: 90.0,
        cost_linear: 0.30,
        cost_noload: 3.0,
        cost_startup: 15.0,
        initial_on: false,
    }
}

pub fn default_bess(e_max: f64) -> BessSpec {
    BessSpec {
        e_max,
        e_min: 0.1 * e_max,
        p_max: 0.5 * e_max,
        p_min: 0.0,
        eff_char: 0.9,
        eff_disc: 0.9,
        e_initial: 0.5 * e_max,
        soh: 1.0,
    }
}

fn bell(t: f64, center: f64, width: f64) -> f64 {
    (-((t - center) / width).powi(2) / 2.0).exp()
}

/// Builds the seeded testbed.
pub fn make_scenario(params: &ScenarioParams) -> Result<MicrogridConfig> {
    if !(params.penetration >= 0.0) || !params.penetration.is_finite() {
        return Err(Error::param("penetration must be non-negative"));
    }
    if !(params.bess_kwh >= 0.0) || !params.bess_kwh.is_finite() {
        return Err(Error::param("battery size must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut eps = |sd: f64| sd * noise.sample(&mut rng);

    let hours: Vec<f64> = (0..HORIZON).map(|t| t as f64 + 0.5).collect();
    let load: Vec<f64> = hours
        .iter()
        .map(|&h| {
            let shape = 0.55 + 0.35 * bell(h, 8.0, 1.8) + 0.75 * bell(h, 19.0, 2.2) + 0.15 * bell(h, 13.0, 3.0);
            (400.0 * shape * (1.0 + eps(0.03))).max(0.0)
        })
        .collect();
    let pv_shape: Vec<f64> = hours
        .iter()
        .map(|&h| if (6.0..19.0).contains(&h) { bell(h, 12.5, 2.6) * (1.0 + eps(0.05)).max(0.0) } else { 0.0 })
        .collect();
    let mut level = 1.0;
    let wind_shape: Vec<f64> = hours
        .iter()
        .map(|&h| {
            level = (level + eps(0.08)).clamp(0.5, 1.5);
            level * (1.0 + 0.3 * ((h - 3.0) * std::f64::consts::PI / 12.0).cos())
        })
        .collect();
    let buy_price: Vec<f64> = hours
        .iter()
        .map(|&h| {
            let p = 0.045 + 0.035 * bell(h, 8.5, 1.5) + 0.08 * bell(h, 19.0, 1.6) + 0.02 * bell(h, 14.0, 2.5);
            (p * (1.0 + eps(0.04))).max(0.005)
        })
        .collect();
    let temp: Vec<f64> = hours
        .iter()
        .map(|&h| 24.0 + 6.0 * ((h - 15.0) * std::f64::consts::PI / 12.0).cos() + eps(0.5))
        .collect();

    // scale wind and solar together to the requested penetration; solar carries
    // half of the renewable energy
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let target = params.penetration * mean(&load);
    let (pv_mean, wind_mean) = (mean(&pv_shape), mean(&wind_shape));
    let pv: Vec<f64> = pv_shape.iter().map(|v| v * 0.5 * target / pv_mean).collect();
    let wind: Vec<f64> = wind_shape.iter().map(|v| v * 0.5 * target / wind_mean).collect();

    let config = MicrogridConfig {
        generators: vec![default_generator()],
        bess: default_bess(params.bess_kwh),
        tie_max: 500.0,
        reserve_frac: 0.1,
        dt: 1.0,
        profiles: Profiles {
            load,
            wind,
            pv,
            buy_price,
            temp,
            sell_factor: 0.8,
        },
    };
    config.validate()?;
    Ok(config)
}

/// The bundled scenario used throughout the examples and tests.
pub fn bundled() -> MicrogridConfig {
    make_scenario(&ScenarioParams::default()).expect("default scenario parameters are valid")
}

/// Achieved mean renewable output over mean load.
pub fn penetration(config: &MicrogridConfig) -> f64 {
    let p = &config.profiles;
    let ren: f64 = (0..p.len()).map(|t| p.renewable(t)).sum();
    ren / p.load.iter().sum::<f64>()
}

/// Rescales wind and solar together so that mean renewable output over mean
/// load equals `target`.
pub fn with_penetration(config: &MicrogridConfig, target: f64) -> Result<MicrogridConfig> {
    if !(target >= 0.0) || !target.is_finite() {
        return Err(Error::param("penetration must be non-negative"));
    }
    let now = penetration(config);
    if now == 0.0 && target > 0.0 {
        return Err(Error::param("the scenario has no renewable output to scale"));
    }
    let k = if now == 0.0 { 0.0 } else { target / now };
    let mut out = config.clone();
    out.profiles.wind.iter_mut().for_each(|v| *v *= k);
    out.profiles.pv.iter_mut().for_each(|v| *v *= k);
    out.validate()?;
    Ok(out)
}

/// Resizes the battery to `e_max` kWh keeping every energy and power limit
/// in proportion.
pub fn with_battery_size(config: &MicrogridConfig, e_max: f64) -> Result<MicrogridConfig> {
    if !(e_max >= 0.0) || !e_max.is_finite() {
        return Err(Error::param("battery size must be non-negative"));
    }
    let mut out = config.clone();
    let b = &mut out.bess;
    if b.e_max > 0.0 {
        let k = e_max / b.e_max;
        b.e_min *= k;
        b.p_max *= k;
        b.p_min *= k;
        b.e_initial *= k;
        b.e_max = e_max;
    } else {
        out.bess = BessSpec {
            soh: b.soh,
            ..default_bess(e_max)
        };
    }
    out.validate()?;
    Ok(out)
}

/// Depth range of the phases drawn by [`random_battery_schedule`].
pub const RANDOM_DOD: (f64, f64) = (0.2, 0.8);
/// C-rate range of the phases drawn by [`random_battery_schedule`].
pub const RANDOM_C_RATE: (f64, f64) = (0.2, 0.5);

/// Signed battery powers (positive discharges) made of alternating
/// constant-power phases separated by idle gaps. Every phase has a depth in
/// [`RANDOM_DOD`] and a C-rate in [`RANDOM_C_RATE`]; the last phase returns
/// the battery to its initial energy. `None` when the draw does not fit the
/// horizon.
fn draw_battery_powers(config: &MicrogridConfig, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    let b = &config.bess;
    let horizon = config.horizon();
    let dt = config.dt;
    let (lo, hi) = (b.soc(b.e_min), 1.0);
    let soc0 = b.soc(b.e_initial);
    let mut powers = vec![0.0; horizon];
    let mut t = rng.random_range(0..3);
    let mut soc = soc0;
    let mut discharge = rng.random_bool(0.5);
    let phases = 2 * rng.random_range(1..=3);
    for k in 0..phases {
        let last = k + 1 == phases;
        let target = if last {
            soc0
        } else {
            let dod = rng.random_range(RANDOM_DOD.0..RANDOM_DOD.1);
            if discharge { soc - dod } else { soc + dod }
        };
        if target < lo || target > hi || (target - soc).abs() < 1e-9 {
            return None;
        }
        let dod = (target - soc).abs();
        let c = rng.random_range(RANDOM_C_RATE.0..RANDOM_C_RATE.1);
        let steps = ((dod / (c * dt)).round() as usize).max(1);
        let de = dod * b.e_max / steps as f64;
        let p = if discharge { de * b.eff_disc / dt } else { de / (b.eff_char * dt) };
        if p > b.p_max || t + steps > horizon {
            return None;
        }
        for slot in &mut powers[t..t + steps] {
            *slot = if discharge { p } else { -p };
        }
        t += steps + rng.random_range(1..4);
        soc = target;
        discharge = !discharge;
    }
    Some(powers)
}

fn dispatch_with_grid(config: &MicrogridConfig, powers: &[f64]) -> ScheduleSolution {
    let b = &config.bess;
    let p = &config.profiles;
    let mut energy = b.e_initial;
    let intervals: Vec<IntervalDispatch> = powers
        .iter()
        .enumerate()
        .map(|(t, &pb)| {
            let (charge, discharge) = if pb < 0.0 { (-pb, 0.0) } else { (0.0, pb) };
            energy += config.dt * (b.eff_char * charge - discharge / b.eff_disc);
            let net = p.load[t] - p.renewable(t) + charge - discharge;
            let n = config.generators.len();
            IntervalDispatch {
                gen_power: vec![0.0; n],
                gen_on: vec![false; n],
                gen_startup: vec![false; n],
                buy: net.max(0.0),
                sell: (-net).max(0.0),
                buy_on: net > 0.0,
                sell_on: net < 0.0,
                charge,
                discharge,
                charge_on: charge > 0.0,
                discharge_on: discharge > 0.0,
                energy,
                soc: b.soc(energy),
            }
        })
        .collect();
    let cost = mds::operation_cost(config, &intervals);
    ScheduleSolution {
        intervals,
        operation_cost: cost,
        objective: cost,
        status: SolveStatus::Optimal,
        gap: 0.0,
        nodes: 0,
    }
}

/// A random battery schedule, with the grid covering the rest, that passes
/// every constraint of the plain scheduling model.
pub fn random_battery_schedule(config: &MicrogridConfig, seed: u64) -> Result<ScheduleSolution> {
    config.validate()?;
    if !(config.bess.e_max > 0.0) {
        return Err(Error::param("random schedules need a battery"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10_000 {
        let Some(powers) = draw_battery_powers(config, &mut rng) else {
            continue;
        };
        let sol = dispatch_with_grid(config, &powers);
        if mds::validate_solution(config, &ExtraConstraints::default(), &sol)?.is_valid() {
            return Ok(sol);
        }
    }
    Err(Error::param("no feasible random battery schedule found"))
}

/// A tiny instance with discrete levels on which the exact optimum lies.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallInstance {
    pub name: &'static str,
    pub config: MicrogridConfig,
    pub extra: ExtraConstraints,
    /// Signed battery powers per interval, positive discharges.
    pub battery_levels: Vec<Vec<f64>>,
    pub generator_levels: Vec<Vec<f64>>,
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as i64;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

fn small_config(load: &[f64], renewable: &[f64], price: &[f64], generators: Vec<GeneratorSpec>, bess: BessSpec) -> MicrogridConfig {
    let n = load.len();
    MicrogridConfig {
        generators,
        bess,
        tie_max: 100.0,
        reserve_frac: 0.1,
        dt: 1.0,
        profiles: Profiles {
            load: load.to_vec(),
            wind: vec![0.0; n],
            pv: renewable.to_vec(),
            buy_price: price.to_vec(),
            temp: vec![25.0; n],
            sell_factor: 0.8,
        },
    }
}

fn lossless(e_max: f64, p_max: f64, e_initial: f64) -> BessSpec {
    BessSpec {
        e_max,
        e_min: 0.0,
        p_max,
        p_min: 0.0,
        eff_char: 1.0,
        eff_disc: 1.0,
        e_initial,
        soh: 1.0,
    }
}

fn small_generator() -> GeneratorSpec {
    GeneratorSpec {
        p_max: 100.0,
        p_min: 20.0,
        ramp: 40.0,
        cost_linear: 0.2,
        cost_noload: 2.0,
        cost_startup: 5.0,
        initial_on: false,
    }
}

/// Instances of at most four intervals whose data put every vertex of the
/// feasible region on the enumerated levels, so exhaustive search over the
/// levels finds the true optimum.
pub fn small_instances() -> Vec<SmallInstance> {
    let lossy = BessSpec {
        eff_char: 0.9,
        eff_disc: 0.9,
        ..lossless(300.0, 150.0, 150.0)
    };
    let arbitrage = small_config(&[0.0, 0.0], &[0.0, 0.0], &[0.05, 0.5], vec![], lossy);
    let peak = small_config(
        &[50.0, 150.0, 80.0],
        &[0.0; 3],
        &[0.1, 0.4, 0.1],
        vec![small_generator()],
        lossless(100.0, 50.0, 50.0),
    );
    let ramp = small_config(
        &[40.0, 160.0, 180.0, 60.0],
        &[0.0; 4],
        &[0.1, 0.3, 0.35, 0.1],
        vec![small_generator()],
        lossless(80.0, 40.0, 40.0),
    );
    let surplus = small_config(
        &[60.0, 40.0, 120.0, 100.0],
        &[20.0, 120.0, 0.0, 0.0],
        &[0.15, 0.05, 0.3, 0.2],
        vec![],
        lossless(100.0, 50.0, 50.0),
    );
    let battery_grid = |c: &MicrogridConfig, step: f64| vec![grid(-c.bess.p_max, c.bess.p_max, step); c.horizon()];
    let gen_grid = |c: &MicrogridConfig, levels: Vec<f64>| vec![levels; c.horizon()];
    let mut out = vec![
        SmallInstance {
            name: "arbitrage",
            battery_levels: battery_grid(&arbitrage, 1.0),
            generator_levels: gen_grid(&arbitrage, vec![0.0]),
            config: arbitrage,
            extra: ExtraConstraints::default(),
        },
        SmallInstance {
            name: "peak",
            battery_levels: battery_grid(&peak, 10.0),
            generator_levels: gen_grid(&peak, std::iter::once(0.0).chain(grid(20.0, 100.0, 10.0)).collect()),
            config: peak,
            extra: ExtraConstraints::default(),
        },
        SmallInstance {
            name: "ramp",
            battery_levels: battery_grid(&ramp, 20.0),
            generator_levels: gen_grid(&ramp, std::iter::once(0.0).chain(grid(20.0, 100.0, 20.0)).collect()),
            config: ramp,
            extra: ExtraConstraints::default(),
        },
    ];
    let surplus_levels = battery_grid(&surplus, 10.0);
    for (name, extra) in [
        ("surplus", ExtraConstraints::default()),
        (
            "surplus_throughput_cap",
            ExtraConstraints {
                throughput_cap: Some(100.0),
                ..Default::default()
            },
        ),
        (
            "surplus_power_cap",
            ExtraConstraints {
                power_cap: Some(40.0),
                ..Default::default()
            },
        ),
        (
            "surplus_cycle_limit",
            ExtraConstraints {
                cycle_transition_limit: Some(1),
                ..Default::default()
            },
        ),
        (
            "surplus_linear_cost",
            ExtraConstraints {
                linear_bdc_rate: Some(0.02),
                ..Default::default()
            },
        ),
        (
            "surplus_top3",
            ExtraConstraints {
                top3: Some(crate::mds::TopThree {
                    intervals: [0, 2, 3],
                    cap: 60.0,
                }),
                ..Default::default()
            },
        ),
    ] {
        out.push(SmallInstance {
            name,
            config: surplus.clone(),
            extra,
            battery_levels: surplus_levels.clone(),
            generator_levels: vec![vec![0.0]; 4],
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_profiles() {
        let a = make_scenario(&ScenarioParams::default()).unwrap();
        let b = make_scenario(&ScenarioParams::default()).unwrap();
        assert_eq!(a, b);
        let c = make_scenario(&ScenarioParams {
            seed: 8,
            ..ScenarioParams::default()
        })
        .unwrap();
        assert_ne!(a.profiles, c.profiles);
    }

    #[test]
    fn penetration_is_hit() {
        for target in [0.2, 0.4, 0.6, 0.8] {
            let c = make_scenario(&ScenarioParams {
                penetration: target,
                ..ScenarioParams::default()
            })
            .unwrap();
            assert!((penetration(&c) - target).abs() < 1e-9);
        }
    }

    #[test]
    fn random_schedules_are_feasible_and_distinct() {
        let c = bundled();
        let a = random_battery_schedule(&c, 1).unwrap();
        let b = random_battery_schedule(&c, 2).unwrap();
        assert_ne!(a.battery_power(), b.battery_power());
        assert_eq!(a, random_battery_schedule(&c, 1).unwrap());
        let last = a.intervals.last().unwrap().energy;
        assert!((last - c.bess.e_initial).abs() < 1e-9);
        assert!(a.throughput(c.dt) > 0.0);
    }

    #[test]
    fn rescaling_helpers() {
        let c = bundled();
        let p = with_penetration(&c, 0.4).unwrap();
        assert!((penetration(&p) - 0.4).abs() < 1e-9);
        assert_eq!(p.profiles.load, c.profiles.load);
        let b = with_battery_size(&c, 200.0).unwrap();
        assert_eq!((b.bess.e_max, b.bess.p_max, b.bess.e_initial), (200.0, 100.0, 100.0));
        assert!(with_battery_size(&c, -1.0).is_err());
    }

    #[test]
    fn surplus_fits_the_tie_line() {
        let c = bundled();
        let p = &c.profiles;
        for t in 0..p.len() {
            assert!(p.renewable(t) - p.load[t] <= c.tie_max);
        }
    }
}
