//! Two-phase Meta-Auction: a welfare-maximizing matching on raw reports,
//! then a bilateral rule on each matched pair with the seller's law
//! censored at the pair's critical cost.

use serde::{Deserialize, Serialize};

use super::Market;
use crate::bilateral::{multi_quantile, multi_quantile_price, post_quantile_with, BTResult, QRule};
use crate::distributions::{Bound, Distribution};
use crate::market::{Edge, Outcome};
use crate::matching::PairDecomposition;

/// Which side collects the profit, and so which side is strategic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Buyer-run: sellers are strategic, buyer-proposing subroutine.
    Buyers,
    /// Seller-run: buyers are strategic, seller-proposing subroutine.
    Sellers,
}

/// One pair of the phase-one matching.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaEdge {
    pub edge: Edge,
    /// Critical cost of the pair at the realized reports.
    pub cap: Bound,
    /// The bilateral rule on the censored law.
    pub bt: BTResult,
    /// Threshold of the whole two-phase rule for the strategic agent:
    /// the buyer's lowest winning bid (seller-run) or the seller's highest
    /// winning cost (buyer-run). `NaN` when the pair does not trade.
    pub threshold: f64,
}

/// Buyer `i`'s two-phase allocation on `(i, j)` at report `z`.
fn ma_s_wins(d: &PairDecomposition, law: &Distribution, lambda: f64, s_j: f64, z: f64) -> bool {
    if !d.contains_edge(z, s_j) {
        return false;
    }
    multi_quantile(&law.censor_at(d.seller_cap(z)), lambda, s_j, z).trade
}

/// Lowest winning bid for the seller-run auction. The cap `κ(z)` is
/// `min(a + z - b0, a - b1)` once the pair can win at all, so the
/// allocation only changes where `z` hits the membership floor, the kink,
/// the validity point, the posted price, or a value that sends `κ(z)`
/// across the seller's cost, an atom, or the price.
fn ma_s_threshold(d: &PairDecomposition, law: &Distribution, lambda: f64, s_j: f64) -> f64 {
    let Some(pair) = d.pair else { return f64::INFINITY };
    let a = pair.value;
    let b0 = d.neither.value;
    let full = law.censor(f64::INFINITY);
    let price = multi_quantile_price(&full, lambda, s_j);
    let mut cand = vec![d.buyer_floor(s_j).value(), price];
    if let Some(o) = d.buyer_elsewhere {
        cand.push(b0 - o.value);
    }
    if let Some(o) = d.seller_elsewhere {
        cand.push(o.value - a);
    }
    let mut levels = vec![s_j, price, law.min_support(), law.max_support()];
    levels.extend_from_slice(law.support());
    cand.extend(levels.into_iter().map(|k| k - a + b0));
    cand.retain(|x| x.is_finite());
    cand.sort_by(f64::total_cmp);
    cand.dedup();
    for (k, &c) in cand.iter().enumerate() {
        if ma_s_wins(d, law, lambda, s_j, c) {
            return c;
        }
        let next = cand.get(k + 1).copied().unwrap_or(c + 1.0);
        if ma_s_wins(d, law, lambda, s_j, 0.5 * (c + next)) {
            return c;
        }
    }
    f64::INFINITY
}

/// Per-pair detail of the Meta-Auction on reports `(b, s)`.
pub fn ma_edges(market: &Market, b: &[f64], s: &[f64], side: Side, lambda: f64, q_rule: QRule) -> Vec<MaEdge> {
    let fs = &market.feasible;
    let idx = fs.mwm(b, s);
    fs.matchings()[idx]
        .iter()
        .map(|&(i, j)| {
            let d = fs.decompose(b, s, i, j);
            let cap = d.seller_cap(b[i]);
            let law = &market.instance.sellers[j];
            let censored = law.censor_at(cap);
            match side {
                Side::Sellers => {
                    let bt = multi_quantile(&censored, lambda, s[j], b[i]);
                    let threshold = if bt.trade { ma_s_threshold(&d, law, lambda, s[j]) } else { f64::NAN };
                    MaEdge { edge: (i, j), cap, bt, threshold }
                }
                Side::Buyers => {
                    let bt = post_quantile_with(&censored, b[i], s[j], q_rule);
                    let threshold = if bt.trade { cap.value().min(bt.seller_price) } else { f64::NAN };
                    MaEdge { edge: (i, j), cap, bt, threshold }
                }
            }
        })
        .collect()
}

/// Seller-run: the buyer pays the two-phase threshold and the seller is
/// paid the posted price. Buyer-run: the seller is paid the two-phase
/// threshold and the buyer pays the posted price.
pub fn run_meta_auction(market: &Market, b: &[f64], s: &[f64], side: Side, lambda: f64, q_rule: QRule) -> Outcome {
    let mut pb = vec![0.0; market.m()];
    let mut ps = vec![0.0; market.n()];
    let mut matching = Vec::new();
    for e in ma_edges(market, b, s, side, lambda, q_rule) {
        if !e.bt.trade {
            continue;
        }
        let (i, j) = e.edge;
        matching.push((i, j));
        match side {
            Side::Sellers => {
                pb[i] = e.threshold;
                ps[j] = e.bt.buyer_price;
            }
            Side::Buyers => {
                pb[i] = e.bt.seller_price;
                ps[j] = e.threshold;
            }
        }
    }
    Outcome::new(matching, pb, ps, b, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilateral::{profit_max_quantile, DEFAULT_LAMBDA};
    use crate::market::{FeasibilityFamily, MarketInstance};

    fn bilateral(seller: Distribution) -> Market {
        Market::new(MarketInstance {
            buyers: vec![Distribution::discrete(&[(1.0, 0.5), (3.0, 0.5)]).unwrap()],
            sellers: vec![seller],
            edges: vec![(0, 0)],
            family: FeasibilityFamily::AllMatchings,
        })
        .unwrap()
    }

    #[test]
    fn single_edge_reduces_to_the_standalone_rule() {
        let law = Distribution::discrete(&[(0.0, 0.25), (0.5, 0.25), (2.0, 0.5)]).unwrap();
        let mk = bilateral(law.clone());
        for b in [0.25, 1.0, 2.5, 3.0] {
            for c in [0.0, 0.5, 2.0] {
                let e = ma_edges(&mk, &[b], &[c], Side::Sellers, DEFAULT_LAMBDA, profit_max_quantile);
                let standalone = multi_quantile(&law.censor_at(Bound::at(b, false)), DEFAULT_LAMBDA, c, b);
                if b > c {
                    assert_eq!(e.len(), 1);
                    assert_eq!(e[0].cap, Bound::At { value: b, inclusive: false });
                    assert_eq!(e[0].bt, standalone);
                } else {
                    assert!(e.is_empty());
                }
            }
        }
    }

    #[test]
    fn seller_run_threshold_is_at_least_the_posted_price() {
        let law = Distribution::discrete(&[(0.0, 0.25), (0.5, 0.25), (2.0, 0.5)]).unwrap();
        let mk = bilateral(law);
        let o = run_meta_auction(&mk, &[3.0], &[0.0], Side::Sellers, DEFAULT_LAMBDA, profit_max_quantile);
        assert_eq!(o.matching, vec![(0, 0)]);
        assert!(o.buyer_payments[0] >= o.seller_payments[0]);
        assert!(o.buyer_payments[0] <= 3.0);
    }

    #[test]
    fn buyer_run_pays_the_seller_its_threshold() {
        let law = Distribution::discrete(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let mk = bilateral(law);
        let o = run_meta_auction(&mk, &[3.0], &[0.0], Side::Buyers, DEFAULT_LAMBDA, profit_max_quantile);
        assert_eq!(o.matching, vec![(0, 0)]);
        assert_eq!(o.seller_payments[0], 0.0);
        assert_eq!(o.buyer_payments[0], 0.0);
    }
}
