//! Runs the decoupled heuristic on the bundled scenario and prints the cost
//! trace. Arguments: `[model.json] [strategy] [alpha]`.

use nnodh::cbup::DegradationCostParams;
use nnodh::nnbd;
use nnodh::nnodh::{self as heuristic, NnodhConfig, Strategy};
use nnodh::{pipeline, scenario};

fn main() -> nnodh::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let model = match args.get(1) {
        Some(path) => nnbd::load_model(path.as_ref())?,
        None => pipeline::default_surrogate(42)?.model,
    };
    let strategy: Strategy = args.get(2).map_or(Ok(Strategy::Bcl), |s| s.parse())?;
    let alpha: f64 = args
        .get(3)
        .map_or(Ok(0.03), |s| s.parse().map_err(|_| nnodh::Error::Parameter("alpha must be a number".into())))?;

    let config = scenario::bundled();
    let cost = DegradationCostParams::for_battery(400.0, config.bess.e_max);
    let r = heuristic::run(&config, &model, &NnodhConfig::new(strategy, alpha), &cost)?;
    println!("{:>4} {:>10} {:>10} {:>10} {:>10} {:>10}", "it", "kWh", "bd", "operation", "degrade", "total");
    for rec in &r.trace {
        let mark = if rec.index == r.best_index { " <" } else { "" };
        println!(
            "{:>4} {:>10.1} {:>10.3e} {:>10.2} {:>10.2} {:>10.2}{mark}",
            rec.index, rec.throughput, rec.bd, rec.operation_cost, rec.degradation_cost, rec.total_cost
        );
    }
    let fmt = |v: Option<f64>| v.map_or("n/a".into(), |v| format!("{v:.2}%"));
    println!(
        "\n{strategy} alpha {alpha}: stopped by {}, best iteration {}, TCR {:.2}%, DCR {}, OCI {}",
        r.stop_reason.name(),
        r.best_index,
        r.metrics.tcr,
        fmt(r.metrics.dcr),
        fmt(r.metrics.oci)
    );
    Ok(())
}
