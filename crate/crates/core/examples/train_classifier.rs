//! Learns a user's accept/reject behaviour from offers on one link and
//! checks it on fresh offers.

use hetbid::learn::{accuracy, collect_samples, train_svm_with_report};
use hetbid::sim::{generate_scenario, link_history, ExperimentConfig};
use hetbid::WeightingFn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hetbid::Result<()> {
    let cfg = ExperimentConfig::default();
    let scenario = generate_scenario(&cfg.scenario, 3)?;
    let weighting = WeightingFn::prelec(cfg.alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let views = scenario.market_views();
    for view in views.iter().take(6) {
        for ctx in view.contexts() {
            let train = link_history(view, ctx, weighting, 500, &cfg.grid, &mut rng)?;
            let test = link_history(view, ctx, weighting, 500, &cfg.grid, &mut rng)?;
            let accepted = train.iter().filter(|h| h.1).count();
            if accepted == 0 || accepted == train.len() {
                println!(
                    "user {} station {}: all {} offers answered alike",
                    view.user.id,
                    ctx.sp_id,
                    train.len()
                );
                continue;
            }
            let (model, report) = train_svm_with_report(&collect_samples(&train), &cfg.svm)?;
            println!(
                "user {} station {}: {accepted}/{} accepted, train {:.3}, held out {:.3}",
                view.user.id,
                ctx.sp_id,
                train.len(),
                report.training_accuracy,
                accuracy(&model, &collect_samples(&test))
            );
        }
    }
    Ok(())
}
