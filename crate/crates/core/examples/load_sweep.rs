//! A short load sweep over all three modes, printed as CSV.

use hetbid::sim::{run_experiment, sweep_report, ExperimentConfig};

fn main() -> hetbid::Result<()> {
    let cfg = ExperimentConfig {
        loads: vec![100, 300, 500],
        ..ExperimentConfig::default()
    };
    let rows = run_experiment(&cfg, None)?;
    print!("{}", sweep_report(&rows)?);
    Ok(())
}
