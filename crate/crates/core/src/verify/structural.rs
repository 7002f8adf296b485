//! Randomized trials of the matching and bilateral structure lemmas.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::incentives::deviation_grid;
use super::report::{CheckReport, Witness};
use crate::bilateral::{check_cap_monotone, multi_quantile_price, MultiQuantile, DEFAULT_LAMBDA};
use crate::distributions::{Bound, Distribution};
use crate::generate::{random_discrete, suite};
use crate::matching::{Agent, TieBreak};
use crate::mechanisms::Market;

fn random_profile<R: Rng>(rng: &mut R, market: &Market) -> (Vec<f64>, Vec<f64>) {
    let inst = &market.instance;
    (inst.buyers.iter().map(|d| d.sample(rng)).collect(), inst.sellers.iter().map(|d| d.sample(rng)).collect())
}

/// Pool of markets with at least one edge.
fn pool(seed: u64) -> Vec<Market> {
    suite(seed, 64)
        .into_iter()
        .filter(|i| !i.edges.is_empty())
        .map(|i| Market::new(i).expect("suite instances are valid"))
        .collect()
}

/// Membership of an edge is an up-set in the buyer's report and a
/// down-set in the seller's, and the varying agent keeps one partner.
/// Odd trials use virtual-value weights.
pub fn mwm_monotonicity(trials: usize, seed: u64) -> CheckReport {
    let markets = pool(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    for t in 0..trials {
        let mk = &markets[rng.random_range(0..markets.len())];
        let (b, s) = random_profile(&mut rng, mk);
        let virt = t % 2 == 1;
        let beta: Vec<f64> = if virt {
            mk.instance.buyers.iter().zip(&b).map(|(d, &z)| d.ironed_virtual_value(z)).collect()
        } else {
            b.clone()
        };
        let edge = mk.instance.edges[rng.random_range(0..mk.instance.edges.len())];
        let grid = deviation_grid(mk);
        let agent = if rng.random_bool(0.5) { Agent::Buyer(edge.0) } else { Agent::Seller(edge.1) };
        let law = mk.instance.buyers[edge.0].clone();
        let ok = match agent {
            Agent::Buyer(_) if virt => {
                mk.feasible.membership_monotone_scan(&beta, &s, edge, agent, &grid, |z| law.ironed_virtual_value(z), TieBreak::Canonical)
            }
            _ => mk.feasible.membership_monotone_scan(&beta, &s, edge, agent, &grid, |z| z, TieBreak::Canonical),
        };
        if !ok {
            let w = Witness { values: b, costs: s, agent: Some(agent), deviation: None, lhs: 0.0, rhs: 1.0 };
            return CheckReport::failed("structure/mwm_monotonicity", 0.0, t as u64 + 1, w);
        }
    }
    CheckReport::passed("structure/mwm_monotonicity", 0.0, trials as u64)
}

/// `(i, j)` is in the matching iff the seller term is admitted by the
/// critical cost, and iff the buyer term is admitted by the buyer floor.
pub fn membership_equivalence(trials: usize, seed: u64) -> CheckReport {
    let markets = pool(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    let mut cases = 0;
    for _ in 0..trials {
        let mk = &markets[rng.random_range(0..markets.len())];
        let (b, s) = random_profile(&mut rng, mk);
        let grid = deviation_grid(mk);
        for &(i, j) in &mk.instance.edges {
            let cap = mk.feasible.critical_cost(&b, &s, (i, j));
            let floor = mk.feasible.buyer_threshold(&b, &s, (i, j));
            for &z in &grid {
                cases += 2;
                let mut s2 = s.clone();
                s2[j] = z;
                let member = mk.feasible.matchings()[mk.feasible.mwm(&b, &s2)].contains(&(i, j));
                let mut b2 = b.clone();
                b2[i] = z;
                let member_b = mk.feasible.matchings()[mk.feasible.mwm(&b2, &s)].contains(&(i, j));
                if member != cap.admits_below(z) {
                    let w = Witness { values: b, costs: s2, agent: Some(Agent::Seller(j)), deviation: Some(z), lhs: member as u8 as f64, rhs: cap.value() };
                    return CheckReport::failed("structure/membership_equivalence", 0.0, cases, w);
                }
                if member_b != floor.admits_above(z) {
                    let w = Witness { values: b2, costs: s, agent: Some(Agent::Buyer(i)), deviation: Some(z), lhs: member_b as u8 as f64, rhs: floor.value() };
                    return CheckReport::failed("structure/membership_equivalence", 0.0, cases, w);
                }
            }
        }
    }
    CheckReport::passed("structure/membership_equivalence", 0.0, cases)
}

fn random_law<R: Rng>(rng: &mut R) -> Distribution {
    if rng.random_bool(0.2) {
        let lo = rng.random_range(0..5) as f64 * 0.5;
        Distribution::uniform(lo, lo + rng.random_range(1..6) as f64 * 0.5).expect("valid law")
    } else {
        let k = rng.random_range(1..=4);
        random_discrete(rng, k, 0.5, 11, 1.0)
    }
}

/// Ordered pair of caps `k1 <= k2`, including sentinels and both flags.
fn random_caps<R: Rng>(rng: &mut R) -> (Bound, Bound) {
    let draw = |rng: &mut R| match rng.random_range(0..12) {
        0 => Bound::NegInf,
        1 => Bound::PosInf,
        _ => Bound::at(rng.random_range(0..12) as f64 * 0.5 - 0.25 * rng.random_range(0..2) as f64, rng.random_bool(0.5)),
    };
    let (a, b) = (draw(rng), draw(rng));
    (a.min(b), a.max(b))
}

/// Loosening the cap never cancels a multi-quantile trade.
pub fn cap_monotonicity(trials: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
    let rule = MultiQuantile { lambda: DEFAULT_LAMBDA };
    for t in 0..trials {
        let f = random_law(&mut rng);
        let (k1, k2) = random_caps(&mut rng);
        let b = rng.random_range(0..14) as f64 * 0.5 - 0.25;
        let c = rng.random_range(0..12) as f64 * 0.25;
        if !check_cap_monotone(&rule, &f, k1, k2, b, c) {
            let w = Witness { values: vec![b], costs: vec![c], agent: None, deviation: None, lhs: k1.value(), rhs: k2.value() };
            return CheckReport::failed("structure/cap_monotonicity", 0.0, t as u64 + 1, w);
        }
    }
    CheckReport::passed("structure/cap_monotonicity", 0.0, trials as u64)
}

/// The buyer's lowest winning bid under multi-quantile, which is its
/// posted price, does not rise when the cap is loosened.
pub fn threshold_monotonicity(trials: usize, seed: u64) -> CheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
    for t in 0..trials {
        let f = random_law(&mut rng);
        let (k1, k2) = random_caps(&mut rng);
        let c = rng.random_range(0..12) as f64 * 0.25;
        let p1 = multi_quantile_price(&f.censor_at(k1), DEFAULT_LAMBDA, c);
        let p2 = multi_quantile_price(&f.censor_at(k2), DEFAULT_LAMBDA, c);
        if p1 < p2 {
            let w = Witness { values: vec![], costs: vec![c], agent: None, deviation: None, lhs: p1, rhs: p2 };
            return CheckReport::failed("structure/threshold_monotonicity", 0.0, t as u64 + 1, w);
        }
    }
    CheckReport::passed("structure/threshold_monotonicity", 0.0, trials as u64)
}

pub fn structural_suite(trials: usize, seed: u64) -> Vec<CheckReport> {
    vec![
        mwm_monotonicity(trials, seed),
        membership_equivalence(trials, seed),
        cap_monotonicity(trials, seed),
        threshold_monotonicity(trials, seed),
    ]
}
