//! Runs the default 8-environment study and prints the correlation table.

use std::time::Instant;

use reward_lab::harness::{run_experiment, ExperimentConfig};

fn main() -> reward_lab::Result<()> {
    let seed = std::env::args().nth(1).map_or(Ok(0), |s| s.parse()).unwrap_or(0);
    let config = ExperimentConfig {
        master_seed: seed,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let (records, summary) = run_experiment(&config)?;
    println!("{} comparisons in {:.1?}", records.len(), start.elapsed());
    for row in &summary.rows {
        println!(
            "{:<28} {:>8.4} n={}",
            row.spec,
            row.correlation.unwrap_or(f64::NAN),
            row.n_samples
        );
    }
    Ok(())
}
