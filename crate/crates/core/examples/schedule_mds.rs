//! Solves the bundled day-ahead scenario without any degradation term, then
//! again with at most two charge/discharge transitions, and checks both
//! solutions against every model constraint.

use nnodh::mds::{self, ExtraConstraints};
use nnodh::scenario;

fn main() -> nnodh::Result<()> {
    let config = scenario::bundled();
    println!(
        "{} intervals, renewable penetration {:.0}%, battery {} kWh",
        config.horizon(),
        100.0 * scenario::penetration(&config),
        config.bess.e_max
    );

    for (label, extra) in [
        ("plain", ExtraConstraints::default()),
        (
            "cycle limit 2",
            ExtraConstraints {
                cycle_transition_limit: Some(2),
                ..Default::default()
            },
        ),
    ] {
        let sol = mds::solve_mds(&config, &extra)?;
        let check = mds::validate_solution(&config, &extra, &sol)?;
        println!(
            "\n{label}: operation cost ${:.2}, throughput {:.1} kWh, {} nodes, max residual {:.1e}",
            sol.operation_cost,
            sol.throughput(config.dt),
            sol.nodes,
            check.max_residual()
        );
        println!("{:>3} {:>7} {:>7} {:>6} {:>7} {:>7} {:>7} {:>5}", "t", "load", "ren", "price", "gen", "grid", "bess", "soc");
        for (t, iv) in sol.intervals.iter().enumerate() {
            println!(
                "{:>3} {:>7.1} {:>7.1} {:>6.3} {:>7.1} {:>7.1} {:>7.1} {:>5.2}",
                t + 1,
                config.profiles.load[t],
                config.profiles.renewable(t),
                config.profiles.buy_price[t],
                iv.gen_power.iter().sum::<f64>(),
                iv.buy - iv.sell,
                iv.discharge - iv.charge,
                iv.soc
            );
        }
    }
    Ok(())
}
