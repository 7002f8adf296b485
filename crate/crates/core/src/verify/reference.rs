//! Checks pinned to hand-derived values on the built-in instances.

use std::time::Instant;

use super::exact::decomposition;
use super::incentives::{check_incentives, CheckKind};
use super::metrics::{expected_metrics, first_best_gft};
use super::report::{CheckReport, Tolerance, Witness};
use crate::error::Result;
use crate::instances::{bilateral_example, two_seller_star, two_seller_star_reports};
use crate::mechanisms::{run_gsom, run_gsom_bic, Market, MechanismConfig, MechanismId};

fn equal(name: &str, got: f64, want: f64, tol: f64) -> CheckReport {
    let ok = (got - want).abs() <= tol;
    CheckReport::from_witness(name, tol, 1, (!ok).then(|| Witness::aggregate(got, want)))
}

/// Payments of the two-seller star under GSOM-BIC. Also returns the
/// wall-clock time of the run, in seconds.
pub fn star_payments() -> Result<(Vec<CheckReport>, f64)> {
    let start = Instant::now();
    let mk = Market::new(two_seller_star())?;
    let (b, s) = two_seller_star_reports();
    let o = run_gsom_bic(&mk, &b, &s);
    let g = run_gsom(&mk, &b, &s);
    let secs = start.elapsed().as_secs_f64();
    let mut out = vec![
        equal("star/gsom_bic/buyer_payment", o.buyer_payments[0], 0.5, 1e-9),
        equal("star/gsom_bic/seller_payment", o.seller_payments[0], 0.375, 1e-9),
        equal("star/gsom/seller_payment", g.seller_payments[0], 0.5, 1e-9),
    ];
    let strict = o.budget > 0.0 && o.matching == [(0, 0)];
    out.push(CheckReport::from_witness(
        "star/gsom_bic/strict_weak_budget_balance",
        0.0,
        1,
        (!strict).then(|| Witness { values: b, costs: s, agent: None, deviation: None, lhs: o.budget, rhs: 0.0 }),
    ));
    Ok((out, secs))
}

/// Every pinned check on the built-in instances.
pub fn reference_checks(tol: Tolerance) -> Result<Vec<CheckReport>> {
    let (mut out, _) = star_payments()?;
    let mk = Market::new(bilateral_example())?;
    out.push(equal("bilateral/gft_star", first_best_gft(&mk)?, 1.25, 0.0));
    let d = decomposition(&mk)?;
    out.push(equal("bilateral/decomposition", d.edge_sum, 1.25, 0.0));
    let gsom = expected_metrics(&mk, &MechanismConfig::new(MechanismId::Gsom))?;
    let gbom = expected_metrics(&mk, &MechanismConfig::new(MechanismId::Gbom))?;
    out.push(equal("bilateral/gsom/seller_profit", gsom.seller_profit(), 1.0, tol.abs));
    out.push(equal("bilateral/gbom/buyer_profit", gbom.buyer_profit(), 1.0, tol.abs));
    let o = run_gsom(&mk, &[3.0], &[0.0]);
    out.push(equal("bilateral/gsom/buyer_payment", o.buyer_payments[0], 3.0, 0.0));
    out.push(equal("bilateral/gsom/seller_payment", o.seller_payments[0], 3.0, 0.0));
    for id in [MechanismId::Gsom, MechanismId::Gbom] {
        let mech = MechanismConfig::new(id);
        for kind in [CheckKind::DsicB, CheckKind::DsicS, CheckKind::Ir, CheckKind::WbbExAnte] {
            out.push(check_incentives(&mk, &mech, kind, tol)?);
        }
    }
    Ok(out)
}
