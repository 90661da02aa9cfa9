//! Sweeps the battery-operation reduction fraction and shows that a larger
//! step reaches the cost minimum in fewer iterations at nearly the same cost.

use rayon::prelude::*;

use nnodh::cbup::DegradationCostParams;
use nnodh::nnbd;
use nnodh::nnodh::{self as heuristic, NnodhConfig, Strategy};
use nnodh::{pipeline, scenario};

fn main() -> nnodh::Result<()> {
    let model = match std::env::args().nth(1) {
        Some(path) => nnbd::load_model(path.as_ref())?,
        None => pipeline::default_surrogate(42)?.model,
    };
    let config = scenario::bundled();
    let cost = DegradationCostParams::for_battery(400.0, config.bess.e_max);
    let alphas = [0.01, 0.02, 0.03, 0.05, 0.1, 0.2];
    let runs: Vec<_> = alphas
        .par_iter()
        .map(|&a| heuristic::run(&config, &model, &NnodhConfig::new(Strategy::Bcl, a), &cost))
        .collect();
    println!("{:>6} {:>6} {:>6} {:>10} {:>8} {:>15}", "alpha", "best", "ran", "total", "TCR", "stop");
    for (a, r) in alphas.iter().zip(runs) {
        let r = r?;
        println!(
            "{a:>6} {:>6} {:>6} {:>10.3} {:>7.2}% {:>15}",
            r.best_index,
            r.iterations(),
            r.best().total_cost,
            r.metrics.tcr,
            r.stop_reason.name()
        );
    }
    Ok(())
}
