//! Bisection over the membership indicator, as an independent check on
//! critical costs and threshold payments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{CheckReport, Witness};
use crate::distributions::Bound;
use crate::generate::suite;
use crate::matching::Agent;
use crate::mechanisms::{Market, Mechanism, MechanismConfig, MechanismId};

/// Far enough outside every generated support to be a sure loss.
const REACH: f64 = 1e3;

/// Boundary of a monotone predicate with `pred(lo) != pred(hi)`.
pub fn bisect(mut lo: f64, mut hi: f64, pred: impl Fn(f64) -> bool) -> f64 {
    let at_lo = pred(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if at_lo {
        lo
    } else {
        hi
    }
}

/// Differences between closed forms and bisection above `tol`.
fn mismatch(name: &str, b: &[f64], s: &[f64], agent: Agent, got: f64, want: f64, tol: f64) -> Option<(String, Witness)> {
    let ok = got == want || (got - want).abs() <= tol;
    (!ok).then(|| {
        (name.to_string(), Witness { values: b.to_vec(), costs: s.to_vec(), agent: Some(agent), deviation: None, lhs: got, rhs: want })
    })
}

/// Critical cost of every edge against bisection on the raw-weight
/// matching.
pub fn critical_cost_mismatch(mk: &Market, b: &[f64], s: &[f64], tol: f64) -> Option<(String, Witness)> {
    for &(i, j) in &mk.instance.edges {
        let cap = mk.feasible.critical_cost(b, s, (i, j));
        let member = |z: f64| {
            let mut s2 = s.to_vec();
            s2[j] = z;
            mk.feasible.matchings()[mk.feasible.mwm(b, &s2)].contains(&(i, j))
        };
        let found = match cap {
            Bound::NegInf | Bound::PosInf => {
                let expect = cap == Bound::PosInf;
                if member(-REACH) == expect && member(REACH) == expect {
                    continue;
                }
                f64::NAN
            }
            Bound::At { value, .. } => {
                if member(value - REACH) && !member(value + REACH) {
                    bisect(value - REACH, value + REACH, member)
                } else {
                    f64::NAN
                }
            }
        };
        if let Some(m) = mismatch("critical_cost", b, s, Agent::Seller(j), cap.value(), found, tol) {
            return Some(m);
        }
    }
    None
}

fn matched(mech: &dyn Mechanism, mk: &Market, b: &[f64], s: &[f64], agent: Agent) -> bool {
    let o = mech.run(mk, b, s);
    match agent {
        Agent::Buyer(i) => o.partner_of_buyer(i).is_some(),
        Agent::Seller(j) => o.partner_of_seller(j).is_some(),
    }
}

/// Threshold payments of the deterministic threshold mechanisms against
/// bisection on their own allocation rule. Posted-price legs of the
/// Meta-Auction are not thresholds and are skipped.
pub fn threshold_mismatch(mk: &Market, b: &[f64], s: &[f64], tol: f64) -> Option<(String, Witness)> {
    let cases = [
        (MechanismId::Gsom, true, true),
        (MechanismId::Gbom, true, true),
        (MechanismId::MaS, true, false),
        (MechanismId::MaB, false, true),
    ];
    for (id, buyers, sellers) in cases {
        let mech = MechanismConfig::new(id);
        let o = mech.run(mk, b, s);
        for &(i, j) in &o.matching {
            if buyers {
                let agent = Agent::Buyer(i);
                let wins = |z: f64| {
                    let mut b2 = b.to_vec();
                    b2[i] = z;
                    matched(&mech, mk, &b2, s, agent)
                };
                let found = if wins(-REACH) { f64::NEG_INFINITY } else { bisect(-REACH, b[i], wins) };
                let name = format!("{id}/buyer_threshold");
                if let Some(m) = mismatch(&name, b, s, agent, o.buyer_payments[i], found, tol) {
                    return Some(m);
                }
            }
            if sellers {
                let agent = Agent::Seller(j);
                let wins = |z: f64| {
                    let mut s2 = s.to_vec();
                    s2[j] = z;
                    matched(&mech, mk, b, &s2, agent)
                };
                let found = if wins(REACH) { f64::INFINITY } else { bisect(s[j], REACH, wins) };
                let name = format!("{id}/seller_threshold");
                if let Some(m) = mismatch(&name, b, s, agent, o.seller_payments[j], found, tol) {
                    return Some(m);
                }
            }
        }
    }
    None
}

/// Closed forms against bisection on one random profile of each of
/// `count` random instances.
pub fn oracle_agreement(count: usize, seed: u64, tol: f64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 5);
    let mut cases = 0;
    for inst in suite(seed, count) {
        let mk = Market::new(inst).expect("suite instances are valid");
        let b: Vec<f64> = mk.instance.buyers.iter().map(|d| d.sample(&mut rng)).collect();
        let s: Vec<f64> = mk.instance.sellers.iter().map(|d| d.sample(&mut rng)).collect();
        cases += 1;
        let bad = critical_cost_mismatch(&mk, &b, &s, tol).or_else(|| threshold_mismatch(&mk, &b, &s, tol));
        if let Some((name, w)) = bad {
            return CheckReport::failed(format!("oracle/{name}"), tol, cases, w);
        }
    }
    CheckReport::passed("oracle/bisection_agreement", tol, cases)
}
