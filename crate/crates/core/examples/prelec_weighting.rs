//! How probability weighting changes what a user accepts.

use hetbid::{decide, prelec, Bid, Position, UserNode, WeightingFn};

fn main() -> hetbid::Result<()> {
    for p in [0.05, 0.2, 1.0 / std::f64::consts::E, 0.6, 0.9, 0.99] {
        println!(
            "p = {p:.3}: w = {:.3} (alpha 0.5), {:.3} (alpha 0.8)",
            prelec(p, 0.5)?,
            prelec(p, 0.8)?
        );
    }

    let user = UserNode {
        id: 0,
        position: Position::default(),
        active: true,
        min_rate: 2.0,
        benefit_scale: 16.0,
        benefit_curvature: 2.0,
        antenna_height_m: 1.5,
    };
    let pt = WeightingFn::prelec(0.5)?;
    for guarantee in [0.15, 0.3, 0.5, 0.8] {
        let bid = Bid {
            sp_id: 0,
            rate: 5.0,
            price: 20.0,
            bandwidth: 1.0,
            guarantee,
        };
        let objective = decide(&user, Some(&bid), None, WeightingFn::Identity);
        let weighted = decide(&user, Some(&bid), None, pt);
        println!(
            "guarantee {guarantee:.2}: objective user accepts {}, weighting user accepts {}",
            objective.cellular, weighted.cellular
        );
    }
    Ok(())
}
