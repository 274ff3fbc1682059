//! Dominance-pruned search against a known acceptance rule, compared with
//! exhaustive search. Writes the search trace to stdout as CSV.

use hetbid::dpob::write_trace_csv;
use hetbid::{brute_force_best_bid, dpob, BidGrid, CostParams, MdpConfig, PricingParams};

fn main() -> hetbid::Result<()> {
    let grid = BidGrid::uniform(1.0, 9.0, 16, 8.0, 16)?;
    // accepted when the bandwidth is generous for the rate
    let classifier = |rate: f64, _price: f64, bw: f64| bw >= 0.6 * rate;
    let pricing = PricingParams::new(1.0, 2.0)?;
    let cost = CostParams::new(0.5, 2.0)?;

    let found = dpob(&grid, grid.state(0), &classifier, &pricing, &cost, &MdpConfig::new(42))?;
    let (best, utility) = brute_force_best_bid(&grid, &classifier, &pricing, &cost);
    eprintln!(
        "search: {:?} utility {:.3} after {} of {} states; exhaustive: ({}, {}) utility {utility:.3}",
        found.best_bid(),
        found.utility,
        found.iterations,
        grid.len(),
        best.rate,
        best.bandwidth
    );
    write_trace_csv(&found.trace, std::io::stdout())
}
