//! Compares the plain schedule, a cycle-limited one, a linear degradation
//! price and the decoupled heuristic, all priced with the same surrogate.

use nnodh::cbup::DegradationCostParams;
use nnodh::nnbd;
use nnodh::nnodh::{self as heuristic, BenchmarkSettings};
use nnodh::{pipeline, scenario};

fn main() -> nnodh::Result<()> {
    let model = match std::env::args().nth(1) {
        Some(path) => nnbd::load_model(path.as_ref())?,
        None => pipeline::default_surrogate(42)?.model,
    };
    let config = scenario::bundled();
    let cost = DegradationCostParams::for_battery(400.0, config.bess.e_max);
    let cmp = heuristic::compare_benchmarks(&config, &model, &cost, &BenchmarkSettings::default())?;
    println!("linear degradation price ${:.4}/kWh\n", cmp.linear_rate);
    println!(
        "{:<12} {:>10} {:>9} {:>11} {:>11} {:>10} {:>9}",
        "model", "operation", "kWh", "bd", "oracle bd", "annual $", "life (y)"
    );
    for r in &cmp.rows {
        println!(
            "{:<12} {:>10.2} {:>9.1} {:>11.3e} {:>11.3e} {:>10.0} {:>9}",
            r.model.name(),
            r.operation_cost,
            r.throughput,
            r.daily_bd,
            r.oracle_bd,
            r.annual_degradation_cost,
            r.lifetime_years.map_or("-".into(), |y| format!("{y:.1}"))
        );
    }
    Ok(())
}
