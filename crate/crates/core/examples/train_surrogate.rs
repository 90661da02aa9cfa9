//! Simulates the default aging matrix, prepares it in every mode and trains
//! the degradation surrogate on each. Pass a path to save the regressed model.

use std::time::Instant;

use nnodh::aging::{self, OracleParams, RunOptions};
use nnodh::dataprep::{self, Mode, PrepConfig};
use nnodh::nnbd::{self, TrainConfig};

fn main() -> nnodh::Result<()> {
    let specs = aging::generate_test_matrix(&aging::DEFAULT_TEMPS, &aging::DEFAULT_C_RATES, 42)?;
    let opts = RunOptions {
        max_rows: Some(aging::DEFAULT_MAX_ROWS),
        ..RunOptions::default()
    };
    let t0 = Instant::now();
    let results = aging::run_matrix(&specs, &OracleParams::default(), &opts)?;
    println!("{} tests simulated in {:.1?}", results.len(), t0.elapsed());

    for mode in [Mode::Raw, Mode::Smoothed, Mode::Regressed] {
        let ds = dataprep::build_dataset(&results, &PrepConfig::new(mode))?;
        let (train, val) = dataprep::split_by_test(&ds, 0.8, 42)?;
        let (train, rest, stats) = dataprep::standardize(&train, &[&val])?;
        let t0 = Instant::now();
        let (model, report) = nnbd::train(&train, &rest[0], &stats, &TrainConfig::default())?;
        let acc = nnbd::accuracy(&model, &val, nnbd::DEFAULT_TOLERANCE)?;
        println!(
            "{:>9}: {} train rows, best epoch {}, validation accuracy {:.3} ({:.1?})",
            mode.to_string(),
            train.len(),
            report.best_epoch,
            acc,
            t0.elapsed()
        );
        if let (Mode::Regressed, Some(path)) = (mode, std::env::args().nth(1)) {
            nnbd::save_model(path.as_ref(), &model)?;
            println!("saved {path}");
        }
    }
    Ok(())
}
