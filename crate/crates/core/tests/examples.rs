//! Worked examples end to end through the public API.

use gftlab::bilateral::{profit_max_quantile, DEFAULT_LAMBDA};
use gftlab::distributions::Distribution;
use gftlab::instances::{bilateral_example, two_seller_star, two_seller_star_reports};
use gftlab::market::{load_instance, save_instance, save_report};
use gftlab::mechanisms::{run_gbom_bic, run_gsom, run_gsom_bic, Market, MechanismConfig, MechanismId};
use gftlab::verify::identities::IdentityConfig;
use gftlab::verify::reference::reference_checks;
use gftlab::verify::{
    check_identities, expected_metrics, first_best_gft, ratio, single_edge_bound, Report, ReportMetrics, Tolerance,
    APPROX,
};

#[test]
fn two_seller_star_payments_and_thresholds() {
    let mk = Market::new(two_seller_star()).unwrap();
    let (b, s) = two_seller_star_reports();
    let o = run_gsom_bic(&mk, &b, &s);
    assert_eq!(o.matching, vec![(0, 0)]);
    assert!((o.buyer_payments[0] - 0.5).abs() <= 1e-9);
    assert!((o.seller_payments[0] - 0.375).abs() <= 1e-9);
    assert!(o.budget > 0.0);
    let g = run_gsom(&mk, &b, &s);
    assert_eq!(g.buyer_payments[0], 0.5);
    let cap = mk.feasible.critical_cost(&[mk.instance.buyers[0].ironed_virtual_value(0.6)], &s, (0, 0));
    assert!((cap.value() - 0.2).abs() < 1e-15);
}

#[test]
fn unmatched_sellers_receive_nothing_under_gsom_bic() {
    let mk = Market::new(two_seller_star()).unwrap();
    let o = run_gsom_bic(&mk, &[1.0], &[0.0, 0.5]);
    assert_eq!(o.seller_payments[1], 0.0);
    let o = run_gsom_bic(&mk, &[0.25], &[0.0, 0.5]);
    assert!(o.matching.is_empty());
    assert_eq!(o.seller_payments, vec![0.0, 0.0]);
}

#[test]
fn gbom_bic_with_a_known_buyer_value() {
    let mut inst = bilateral_example();
    inst.buyers[0] = Distribution::point_mass(3.0).unwrap();
    let mk = Market::new(inst).unwrap();
    let o = run_gbom_bic(&mk, &[3.0], &[0.0]);
    assert_eq!(o.matching, vec![(0, 0)]);
    assert_eq!(o.buyer_payments[0], 0.0);
}

#[test]
fn bilateral_example_metrics_and_identities() {
    let mk = Market::new(bilateral_example()).unwrap();
    let star = first_best_gft(&mk).unwrap();
    assert_eq!(star, 1.25);
    let gsom = expected_metrics(&mk, &MechanismConfig::new(MechanismId::Gsom)).unwrap();
    let gbom = expected_metrics(&mk, &MechanismConfig::new(MechanismId::Gbom)).unwrap();
    assert_eq!(ratio(star, gsom.seller_profit(), gbom.buyer_profit()), Some(0.8));
    assert!(1.0 >= star / APPROX);
    for r in check_identities(&mk, &IdentityConfig::default()).unwrap() {
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn reference_checks_all_pass() {
    for r in reference_checks(Tolerance::default()).unwrap() {
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("star.json");
    save_instance(&path, &two_seller_star()).unwrap();
    assert_eq!(load_instance(&path).unwrap(), two_seller_star());

    let mk = Market::new(bilateral_example()).unwrap();
    let report = Report {
        instance_hash: mk.instance.hash(),
        metrics: ReportMetrics { gft_star: 1.25, pi_s_gsom: 1.0, pi_b_gbom: 1.0, ratio: Some(0.8) },
        checks: check_identities(&mk, &IdentityConfig::default()).unwrap(),
    };
    let rpath = dir.path().join("report.json");
    save_report(&rpath, &report).unwrap();
    let back: Report = serde_json::from_str(&std::fs::read_to_string(&rpath).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn multi_quantile_misses_the_single_edge_bound_on_an_off_grid_seller() {
    // Known finding: with the seller law below and a buyer known to value
    // the good at 2.5, the multi-quantile price is 4.5 for every cost, so
    // the seller side earns nothing and the average profit falls short of
    // GFT_BT / 3.15.
    let mut inst = bilateral_example();
    inst.buyers[0] = Distribution::point_mass(2.5).unwrap();
    inst.sellers[0] = Distribution::discrete(&[(1.0, 0.297), (1.5, 0.148), (2.0, 0.43), (4.5, 0.125)]).unwrap();
    let b = single_edge_bound(&inst, DEFAULT_LAMBDA, profit_max_quantile).unwrap();
    assert!((b.gft - 0.8085).abs() < 1e-12);
    assert!((b.profit - 0.22275).abs() < 1e-12);
    assert!(b.ratio().unwrap() < 1.0 / APPROX);
    assert!(!b.holds(Tolerance::default()));
}
