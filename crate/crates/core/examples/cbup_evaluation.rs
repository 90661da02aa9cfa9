//! Prices random feasible battery schedules with the surrogate, once with the
//! schedule aggregated into equivalent cycles and once interval by interval,
//! and compares both with the oracle. Pass a model JSON to skip training.

use nnodh::aging::OracleParams;
use nnodh::nnbd::{self, DegradationModel};
use nnodh::{cbup, pipeline, scenario};

fn surrogate() -> nnodh::Result<DegradationModel> {
    match std::env::args().nth(1) {
        Some(path) => nnbd::load_model(path.as_ref()),
        None => Ok(pipeline::default_surrogate(42)?.model),
    }
}

fn main() -> nnodh::Result<()> {
    let model = surrogate()?;
    let config = scenario::bundled();
    let oracle = OracleParams::default();
    let mut aggregated = Vec::new();
    let mut per_interval = Vec::new();
    println!("{:>4} {:>6} {:>10} {:>10} {:>8} {:>10} {:>8}", "seed", "cycles", "oracle", "cbup", "err", "interval", "err");
    for seed in 0..20 {
        let sol = scenario::random_battery_schedule(&config, seed)?;
        let cycles: Vec<_> = cbup::aggregate_cycles(&config, &sol, cbup::DEFAULT_POWER_FLOOR)
            .iter()
            .map(|c| c.features(1.0))
            .collect();
        let slices = cbup::per_interval_features(&config, &sol, cbup::DEFAULT_POWER_FLOOR);
        let truth = cbup::oracle_degradation(&oracle, &cycles)?;
        let a = cbup::estimate_degradation(&model, &cycles, 1.0)?;
        let b = cbup::estimate_degradation(&model, &slices, 1.0)?;
        let (ea, eb) = ((a - truth).abs() / truth, (b - truth).abs() / truth);
        println!("{seed:>4} {:>6} {truth:>10.3e} {a:>10.3e} {:>7.1}% {b:>10.3e} {:>7.1}%", cycles.len(), 100.0 * ea, 100.0 * eb);
        aggregated.push(ea);
        per_interval.push(eb);
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    };
    println!(
        "\nmedian relative error: aggregated {:.1}%, per interval {:.1}%",
        100.0 * median(&mut aggregated),
        100.0 * median(&mut per_interval)
    );
    Ok(())
}
