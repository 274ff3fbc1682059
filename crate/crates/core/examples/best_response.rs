//! Provider best responses and one Stackelberg round per user.

use hetbid::market::{best_response_bid, solve_sp_best_response, stackelberg_round};
use hetbid::sim::{generate_scenario, ScenarioConfig};
use hetbid::WeightingFn;

fn main() -> hetbid::Result<()> {
    let scenario = generate_scenario(
        &ScenarioConfig {
            users: 300,
            ..ScenarioConfig::default()
        },
        5,
    )?;
    let weighting = WeightingFn::prelec(0.5)?;
    for view in scenario.market_views().iter().take(8) {
        if let Some(ctx) = &view.cellular {
            if let Some(br) = solve_sp_best_response(ctx, 200) {
                println!(
                    "user {:3}: macro offers b = {:.2} on {:.3} MHz (b_max {:.2}), margin {:.2}",
                    view.user.id, br.rate, br.bandwidth, ctx.b_max, br.utility
                );
            }
        }
        let outcome = stackelberg_round(&view.user, view.cellular.as_ref(), &view.wifi, weighting, |c| {
            best_response_bid(c, 200)
        });
        println!(
            "          strategy {:?}, provider sum {:.2}, user {:.2}",
            outcome.strategy,
            outcome.sum_sp_utility(),
            outcome.user_utility
        );
    }
    Ok(())
}
