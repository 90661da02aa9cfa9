//! Runs the default aging-test matrix, summarizes end-of-test capacity per
//! temperature and C-rate, and shows how much of the cumulative degradation
//! each pre-processing mode keeps.

use std::collections::BTreeMap;

use nnodh::aging::{self, OracleParams};
use nnodh::pipeline;

fn main() -> nnodh::Result<()> {
    let results = pipeline::default_aging_results(42)?;
    println!("{} tests simulated", results.len());

    // cycles until end of test, per (temperature, C-rate) cell
    let mut cells: BTreeMap<(i64, i64), Vec<u64>> = BTreeMap::new();
    for r in &results {
        let key = ((r.spec.ambient_temp * 10.0) as i64, (r.spec.c_rate * 100.0) as i64);
        cells.entry(key).or_default().push(r.total_cycles);
    }
    println!("{:>6} {:>6} {:>6} {:>9} {:>9} {:>9}", "temp", "c_rate", "tests", "min cyc", "mean cyc", "max cyc");
    for ((t, c), cycles) in cells {
        let mean = cycles.iter().sum::<u64>() as f64 / cycles.len() as f64;
        println!(
            "{:>6.1} {:>6.2} {:>6} {:>9} {:>9.0} {:>9}",
            t as f64 / 10.0,
            c as f64 / 100.0,
            cycles.len(),
            cycles.iter().min().unwrap(),
            mean,
            cycles.iter().max().unwrap()
        );
    }

    let spec = pipeline::reference_aging_spec(42);
    let table = pipeline::preservation_table(&spec, &OracleParams::default(), &pipeline::PRESERVATION_CHECKPOINTS)?;
    println!("\nrelative cumulative difference from the raw series");
    println!("{:>10} {:>10} {:>10}", "cycle", "smoothed", "regressed");
    for row in table {
        println!("{:>10} {:>9.3}% {:>9.3}%", row.checkpoint, 100.0 * row.smoothed, 100.0 * row.regressed);
    }
    let fresh = aging::CycleFeatures {
        temp: spec.ambient_temp,
        c_rate: spec.c_rate,
        soc: spec.initial_soc,
        dod: spec.dod,
        soh: 1.0,
    };
    let loss = aging::oracle_cycle_loss(&fresh, &OracleParams::default())?;
    println!("\none fresh cycle at the reference conditions loses {loss:.3e} of capacity");
    Ok(())
}
