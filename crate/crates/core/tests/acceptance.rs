//! One pass/fail line per acceptance criterion.

use std::process::ExitCode;
use std::time::Instant;

use gftlab::bilateral::DEFAULT_LAMBDA;
use gftlab::generate::{single_edge_suite, suite};
use gftlab::mechanisms::{Market, MechanismConfig, MechanismId};
use gftlab::verify::identities::IdentityConfig;
use gftlab::verify::oracle::oracle_agreement;
use gftlab::verify::reference::star_payments;
use gftlab::verify::structural::structural_suite;
use gftlab::verify::suite::{incentive_checks, map_suite};
use gftlab::verify::{
    check_identities, decomposition, expected_metrics, first_best_gft, single_edge_bound, CheckReport, Tolerance, APPROX,
};

const SUITE_SEED: u64 = 7;
const SUITE_SIZE: usize = 500;
const SINGLE_EDGE_SEED: u64 = 11;
const STRUCTURAL_TRIALS: usize = 10_000;
const STRUCTURAL_SEED: u64 = 13;
const ORACLE_SEED: u64 = 9;
const ORACLE_COUNT: usize = 200;

struct Line {
    pass: bool,
    text: String,
}

fn line(n: usize, pass: bool, text: String) -> Line {
    println!("criterion {n}: {} {text}", if pass { "PASS" } else { "FAIL" });
    Line { pass, text }
}

fn first_failure<'a>(reports: impl IntoIterator<Item = &'a CheckReport>) -> Option<&'a CheckReport> {
    reports.into_iter().find(|r| !r.pass)
}

fn describe(r: Option<&CheckReport>) -> String {
    match r {
        None => "no violations".into(),
        Some(r) => format!("first failure {} witness {:?}", r.name, r.witness),
    }
}

struct PerInstance {
    decomposition_ok: bool,
    decomposition_certified: bool,
    decomposition_secs: f64,
    bound: (f64, f64),
    incentives: Vec<CheckReport>,
    identities: Vec<CheckReport>,
}

fn main() -> ExitCode {
    let tol = Tolerance::default();
    let cfg = IdentityConfig::default();
    let mut lines = Vec::new();

    let (star, secs) = star_payments().expect("built-in instance");
    let ok = star.iter().all(|r| r.pass) && secs < 1.0;
    let text = format!("two-seller star under GSOM-BIC, {} ({secs:.4} s)", describe(first_failure(&star)));
    lines.push(line(1, ok, text));

    let instances = suite(SUITE_SEED, SUITE_SIZE);
    let results = map_suite(&instances, |_, mk: &Market| {
        let t = Instant::now();
        let d = decomposition(mk)?;
        let decomposition_secs = t.elapsed().as_secs_f64();
        let star = first_best_gft(mk)?;
        let gsom = expected_metrics(mk, &MechanismConfig::new(MechanismId::Gsom))?;
        let gbom = expected_metrics(mk, &MechanismConfig::new(MechanismId::Gbom))?;
        Ok(PerInstance {
            decomposition_ok: d.holds(),
            decomposition_certified: d.certified,
            decomposition_secs,
            bound: (0.5 * (gsom.seller_profit() + gbom.buyer_profit()), star / APPROX),
            incentives: incentive_checks(mk, &cfg)?,
            identities: check_identities(mk, &cfg)?,
        })
    })
    .expect("suite instances are enumerable");

    let dec_secs: f64 = results.iter().map(|r| r.decomposition_secs).sum();
    let bad = results.iter().filter(|r| !r.decomposition_ok).count();
    let certified = results.iter().filter(|r| r.decomposition_certified).count();
    let text = format!("{bad} of {SUITE_SIZE} instances off, {certified} certified exact in rationals ({dec_secs:.2} s)");
    lines.push(line(2, bad == 0 && dec_secs < 120.0, text));

    let bad: Vec<_> = results.iter().filter(|r| !tol.geq(r.bound.0, r.bound.1)).collect();
    let worst = results
        .iter()
        .filter(|r| r.bound.1 > 0.0)
        .map(|r| r.bound.0 / (r.bound.1 * APPROX))
        .fold(f64::INFINITY, f64::min);
    let text = format!("{} of {SUITE_SIZE} instances below GFT*/3.15, worst ratio {worst:.4}", bad.len());
    lines.push(line(3, bad.is_empty(), text));

    let mut worst = (f64::INFINITY, 0usize);
    let mut violations = 0;
    for (k, inst) in single_edge_suite(SINGLE_EDGE_SEED, SUITE_SIZE).iter().enumerate() {
        let b = single_edge_bound(inst, DEFAULT_LAMBDA, cfg.q_rule).expect("single-edge instance");
        if !b.holds(tol) {
            violations += 1;
        }
        if let Some(r) = b.ratio() {
            if r < worst.0 {
                worst = (r, k);
            }
        }
    }
    let text = format!(
        "{violations} of {SUITE_SIZE} single-edge instances below GFT_BT/3.15, worst ratio {:.4} at instance {} (bound {:.4})",
        worst.0,
        worst.1,
        1.0 / APPROX
    );
    lines.push(line(4, violations == 0, text));

    let text = describe(first_failure(results.iter().flat_map(|r| &r.incentives)));
    let cases: u64 = results.iter().flat_map(|r| &r.incentives).map(|r| r.cases).sum();
    lines.push(line(5, first_failure(results.iter().flat_map(|r| &r.incentives)).is_none(), format!("{text} over {cases} comparisons")));

    let interim = |r: &CheckReport| r.name.contains("/interim_");
    let f = first_failure(results.iter().flat_map(|r| r.identities.iter().filter(|c| interim(c))));
    lines.push(line(6, f.is_none(), describe(f)));

    let dom = |r: &CheckReport| r.name.ends_with("_profit_dominance");
    let f = first_failure(results.iter().flat_map(|r| r.identities.iter().filter(|c| dom(c))));
    lines.push(line(7, f.is_none(), describe(f)));

    let s = structural_suite(STRUCTURAL_TRIALS, STRUCTURAL_SEED);
    let text = format!("{} properties x {STRUCTURAL_TRIALS} trials, {}", s.len(), describe(first_failure(&s)));
    lines.push(line(8, first_failure(&s).is_none(), text));

    let o = oracle_agreement(ORACLE_COUNT, ORACLE_SEED, 1e-9);
    lines.push(line(9, o.pass, format!("{ORACLE_COUNT} instances, {}", describe(if o.pass { None } else { Some(&o) }))));

    let other = first_failure(
        results.iter().flat_map(|r| r.identities.iter().filter(|c| !interim(c) && !dom(c) && c.name != "gft_decomposition")),
    );
    println!("additional identities: {}", describe(other));

    let failed: Vec<&Line> = lines.iter().filter(|l| !l.pass).collect();
    println!("{} of {} criteria pass", lines.len() - failed.len(), lines.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        for l in failed {
            eprintln!("failed: {}", l.text);
        }
        ExitCode::FAILURE
    }
}
