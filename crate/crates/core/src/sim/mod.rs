//! Scenarios, the training-data bootstrap, load sweeps and their report.

pub mod config;
pub mod experiment;
pub mod scenario;

pub use config::{BootstrapConfig, ClassifierScope, ExperimentConfig, GridConfig, Mode, ScenarioConfig};
pub use experiment::{
    bid_grid, bootstrap_history, bootstrap_seed, learned_bid, link_history, run_experiment, run_scenario,
    train_for_load, user_history, Acceptance, ClassifierSource, MetricsRow,
};
pub use scenario::{derive_seed, generate_scenario, Scenario, UserView};

/// Column header of [`sweep_report`].
pub const REPORT_HEADER: &str = "mode,users,alpha,seed,sum_sp_utility,sum_user_utility,acceptance_rate,\
connected_users,offered_bids,accepted_bids,median_guarantee,mean_dpob_iterations";

/// Renders rows as CSV, sorted by mode (`eut`, `pt_deviation`, `dpob`)
/// and then by user count. Empty optional fields are left blank.
pub fn sweep_report(rows: &[MetricsRow]) -> crate::Result<String> {
    let mut sorted: Vec<&MetricsRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.mode, r.users));
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(REPORT_HEADER.split(','))?;
    for r in sorted {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::InvalidData(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| crate::Error::InvalidData(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(sweep_report(&[]).unwrap(), format!("{REPORT_HEADER}\n"));
    }

    #[test]
    fn report_is_sorted_and_complete() {
        let cfg = ExperimentConfig {
            modes: vec![Mode::PtDeviation, Mode::Eut],
            loads: vec![80, 40],
            ..ExperimentConfig::default()
        };
        let rows = run_experiment(&cfg, None).unwrap();
        let text = sweep_report(&rows).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4);
        let keys: Vec<String> = lines[1..]
            .iter()
            .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
            .collect();
        assert_eq!(keys, ["eut,40", "eut,80", "pt_deviation,40", "pt_deviation,80"]);
        // objective rows leave alpha and the search column blank
        assert!(lines[1].starts_with("eut,40,,"));
        assert!(lines[1].ends_with(','));
        assert_eq!(text, sweep_report(&run_experiment(&cfg, None).unwrap()).unwrap());
    }
}
