//! Reference values computed outside this crate (30-digit arithmetic) and
//! small exhaustive oracles.

use std::f64::consts::{E, LN_2};

use hetbid::behavior::perceive;
use hetbid::market::{solve_max1, solve_sp_best_response};
use hetbid::radio::hata_path_loss;
use hetbid::{
    brute_force_best_bid, decide, dpob, prelec, train_svm, BidGrid, CostParams, GuaranteeCurve, GuaranteeModel,
    MdpConfig, Position, PricingParams, Sample, SpContext, StationKind, SvmConfig, UserNode, UserStrategy, WeightingFn,
};
use proptest::prelude::*;

fn user(min_rate: f64, benefit_scale: f64) -> UserNode {
    UserNode {
        id: 0,
        position: Position::default(),
        active: true,
        min_rate,
        benefit_scale,
        benefit_curvature: 2.0,
        antenna_height_m: 1.5,
    }
}

#[test]
fn hata_reference() {
    let at_1km = hata_path_loss(900.0, 30.0, 1.5, 1.0).unwrap();
    assert!((at_1km - 126.403_286_480_857).abs() < 1e-9);
    let slope = hata_path_loss(900.0, 30.0, 1.5, 10.0).unwrap() - at_1km;
    assert!((slope - 35.224_855_781_586_21).abs() < 1e-9);
}

#[test]
fn guarantee_reference() {
    let g = GuaranteeModel::new(1.0).service_guarantee(3.0, 3.0).unwrap();
    assert!((g - 0.367_879_441_171_442_3).abs() < 1e-15);
    let bw = GuaranteeModel::new(1.0 / LN_2)
        .min_bw_for_rate_constraint(2.0, 1.0)
        .unwrap();
    assert!((bw - 2.0).abs() < 1e-12);
}

#[test]
fn prelec_reference() {
    let w = prelec(0.9, 0.5).unwrap();
    assert!((w - 0.722_821_593_459_038_7).abs() < 1e-14);
    let bid = hetbid::Bid {
        sp_id: 0,
        rate: 10.0,
        price: 0.0,
        bandwidth: 1.0,
        guarantee: 0.9,
    };
    let seen = perceive(&bid, WeightingFn::prelec(0.5).unwrap());
    assert!((seen.expected_rate() - 7.228_215_934_590_387).abs() < 1e-12);
}

#[test]
fn tiny_best_response_matches_grid_search() {
    let ctx = SpContext {
        sp_id: 0,
        kind: StationKind::Macro,
        pricing: PricingParams::new(1.0, 2.0).unwrap(),
        cost: CostParams::new(0.1, 0.1).unwrap(),
        guarantee: GuaranteeModel::new(1.0 / LN_2),
        bw_max: 10.0,
        b_max: 5.0,
        min_rate: 1.0,
    };
    let br = solve_sp_best_response(&ctx, 200).unwrap();
    assert!((br.rate - 5.0).abs() < 1e-12);
    assert!((br.bandwidth - 2.886_801_283_352_402).abs() < 1e-9);
    assert!((br.utility - 24.211_319_871_664_76).abs() < 1e-9);
    let expected = br.rate * ctx.guarantee.service_guarantee(br.rate, br.bandwidth).unwrap();
    assert!((expected - 1.0).abs() < 1e-6);
}

#[test]
fn overpriced_bid_is_refused() {
    let u = user(1.0, 10.0);
    let good = hetbid::Bid {
        sp_id: 0,
        rate: 4.0,
        price: 2.0,
        bandwidth: 1.0,
        guarantee: 0.9,
    };
    let dear = hetbid::Bid {
        sp_id: 1,
        price: 500.0,
        ..good
    };
    let s = solve_max1(Some(&good), Some(&dear), &u, WeightingFn::Identity);
    assert_eq!(s, UserStrategy::new(true, false));
}

#[test]
fn two_point_svm() {
    let data = [
        Sample {
            x: [-1.0, 0.0, 0.0],
            y: -1,
        },
        Sample {
            x: [1.0, 0.0, 0.0],
            y: 1,
        },
    ];
    let m = train_svm(
        &data,
        &SvmConfig {
            c: 1e6,
            ..SvmConfig::default()
        },
    )
    .unwrap();
    assert!(m.score(&[-1.0, 0.0, 0.0]) <= -1.0 + 1e-6);
    assert!(m.score(&[1.0, 0.0, 0.0]) >= 1.0 - 1e-6);
    assert!(hetbid::classify(&m, &[0.5, 0.0, 0.0]).1);
}

#[test]
fn toy_search_instance() {
    let grid = BidGrid::new(vec![1.0, 2.0], vec![1.0, 2.0]).unwrap();
    let clf = |rate: f64, _p: f64, bw: f64| bw >= rate;
    let pricing = PricingParams::new(1.0, 2.0).unwrap();
    let cost = CostParams::new(0.5, 0.5).unwrap();
    let (best, u) = brute_force_best_bid(&grid, &clf, &pricing, &cost);
    assert_eq!((best.rate, best.bandwidth, u), (2.0, 2.0, 2.0));
    for seed in 0..20 {
        for start in 0..4 {
            let r = dpob(&grid, grid.state(start), &clf, &pricing, &cost, &MdpConfig::new(seed)).unwrap();
            assert_eq!(r.best_bid(), (2.0, 2.0));
            assert_eq!(r.utility, 2.0);
        }
    }
}

fn bid_strategy() -> impl Strategy<Value = hetbid::Bid> {
    (1.0f64..20.0, 0.0f64..40.0, 0.01f64..1.0).prop_map(|(rate, price, guarantee)| hetbid::Bid {
        sp_id: 0,
        rate,
        price,
        bandwidth: 1.0,
        guarantee,
    })
}

proptest! {
    // With every guarantee above 1/e the weighted user sees less rate, so
    // whatever it takes an objective user would also take at least as much.
    #[test]
    fn weighting_shrinks_acceptance_above_inverse_e(
        c in bid_strategy(), w in bid_strategy(), alpha in 0.1f64..0.95, min_rate in 0.5f64..5.0,
    ) {
        let lift = |b: hetbid::Bid| hetbid::Bid { guarantee: 1.0 / E + (1.0 - 1.0 / E) * b.guarantee, ..b };
        let (c, w) = (lift(c), lift(w));
        let u = user(min_rate, 12.0);
        let pt = decide(&u, Some(&c), Some(&w), WeightingFn::prelec(alpha).unwrap());
        let eut = decide(&u, Some(&c), Some(&w), WeightingFn::Identity);
        if pt.accepted_count() > 0 {
            prop_assert!(eut.accepted_count() > 0);
        }
    }

    #[test]
    fn weighting_grows_acceptance_below_inverse_e(
        c in bid_strategy(), alpha in 0.1f64..0.95, min_rate in 0.5f64..5.0,
    ) {
        let c = hetbid::Bid { guarantee: c.guarantee / E, ..c };
        let u = user(min_rate, 12.0);
        let pt = decide(&u, Some(&c), None, WeightingFn::prelec(alpha).unwrap());
        let eut = decide(&u, Some(&c), None, WeightingFn::Identity);
        if eut.cellular {
            prop_assert!(pt.cellular);
        }
    }
}
