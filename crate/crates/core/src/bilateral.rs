//! Single-edge trade rules on a possibly censored seller law.
//!
//! `multi_quantile` is seller-proposing: the buyer sees a posted price and
//! trades iff `b >= price`. `post_quantile` is buyer-proposing: the seller
//! sees a posted price and trades iff `s <= price`. Both settle at the
//! posted price.

use serde::{Deserialize, Serialize};

use crate::distributions::{Bound, CensoredDistribution, Distribution};
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 0.317844;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BTResult {
    pub trade: bool,
    pub buyer_price: f64,
    pub seller_price: f64,
}

/// Chooses the seller quantile for `post_quantile` from the censored law
/// and the buyer's value. A level of 0 means no offer.
pub type QRule = fn(&CensoredDistribution<'_>, f64) -> f64;

/// Price posted to the buyer: `F̄⁻¹(min{1, F̄(c)/λ})`.
pub fn multi_quantile_price(f: &CensoredDistribution<'_>, lambda: f64, c: f64) -> f64 {
    let q = (f.cdf(c) / lambda).min(1.0);
    f.inv(q)
}

pub fn multi_quantile(f: &CensoredDistribution<'_>, lambda: f64, c: f64, b: f64) -> BTResult {
    let price = multi_quantile_price(f, lambda, c);
    BTResult { trade: price.is_finite() && b >= price, buyer_price: price, seller_price: price }
}

/// Level in `[0, F̄(v)]` maximizing `q (v - F̄⁻¹(q))`, smallest on ties,
/// and 0 when no level earns a positive profit.
pub fn profit_max_quantile(f: &CensoredDistribution<'_>, v: f64) -> f64 {
    match f.base() {
        Distribution::Discrete(_) => {
            let base = f.base();
            let mut best_q = 0.0;
            let mut best = 0.0;
            for &x in base.support() {
                if x > v || !f.within(x) {
                    break;
                }
                let q = base.cdf(x);
                let profit = q * (v - x);
                if profit > best {
                    best = profit;
                    best_q = q;
                }
            }
            best_q
        }
        Distribution::Uniform(_) => {
            let (lo, hi) = (f.base().min_support(), f.base().max_support());
            if v <= lo || f.mass() <= 0.0 {
                return 0.0;
            }
            ((v - lo) / (2.0 * (hi - lo))).min(f.cdf(v))
        }
    }
}

pub fn post_quantile(f: &CensoredDistribution<'_>, v: f64, s: f64) -> BTResult {
    post_quantile_with(f, v, s, profit_max_quantile)
}

pub fn post_quantile_with(f: &CensoredDistribution<'_>, v: f64, s: f64, rule: QRule) -> BTResult {
    let q = rule(f, v);
    if q <= 0.0 {
        let price = f.inv(0.0);
        return BTResult { trade: false, buyer_price: price, seller_price: price };
    }
    let price = f.inv(q);
    BTResult { trade: price.is_finite() && s <= price, buyer_price: price, seller_price: price }
}

/// `∫₀¹ (v - F̄⁻¹(q))⁺ dq`. Censored mass contributes nothing.
pub fn bt_gft(f: &CensoredDistribution<'_>, v: f64) -> f64 {
    match f.base() {
        Distribution::Discrete(_) => f
            .base()
            .atoms()
            .into_iter()
            .filter(|&(x, _)| f.within(x))
            .map(|(x, p)| p * (v - x).max(0.0))
            .sum(),
        Distribution::Uniform(_) => {
            let (lo, hi) = (f.base().min_support(), f.base().max_support());
            let upper = hi.min(f.cap().value()).min(v);
            if upper <= lo {
                return 0.0;
            }
            ((v - lo).powi(2) - (v - upper).powi(2)) / (2.0 * (hi - lo))
        }
    }
}

/// A trade/no-trade rule on a censored seller law.
pub trait BtRule {
    fn trade(&self, f: &CensoredDistribution<'_>, b: f64, c: f64) -> bool;
}

#[derive(Clone, Copy, Debug)]
pub struct MultiQuantile {
    pub lambda: f64,
}

impl BtRule for MultiQuantile {
    fn trade(&self, f: &CensoredDistribution<'_>, b: f64, c: f64) -> bool {
        multi_quantile(f, self.lambda, c, b).trade
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PostQuantile {
    pub rule: QRule,
}

impl Default for PostQuantile {
    fn default() -> Self {
        PostQuantile { rule: profit_max_quantile }
    }
}

impl BtRule for PostQuantile {
    fn trade(&self, f: &CensoredDistribution<'_>, b: f64, c: f64) -> bool {
        post_quantile_with(f, b, c, self.rule).trade
    }
}

/// Does loosening the cap from `kappa1` to `kappa2` keep a trade?
pub fn check_cap_monotone(rule: &dyn BtRule, base: &Distribution, kappa1: Bound, kappa2: Bound, b: f64, c: f64) -> bool {
    !rule.trade(&base.censor_at(kappa1), b, c) || rule.trade(&base.censor_at(kappa2), b, c)
}

/// Expected one-sided profits of the two rules on one edge, with the
/// buyer's value fixed and the cost drawn from the censored law.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilateralProfits {
    /// `E[π_s]` under `multi_quantile`, the seller keeping the price.
    pub seller: f64,
    /// `E[π_b]` under `post_quantile`, the buyer paying the price.
    pub buyer: f64,
    pub gft: f64,
}

pub fn bilateral_profits(f: &CensoredDistribution<'_>, v: f64, lambda: f64, rule: QRule) -> Result<BilateralProfits> {
    if !f.base().enumerable() {
        return Err(Error::Capability("bilateral profits need a discrete seller law".into()));
    }
    let mut seller = 0.0;
    let mut buyer = 0.0;
    for (c, p) in f.base().atoms() {
        let s = multi_quantile(f, lambda, c, v);
        if s.trade {
            seller += p * (s.buyer_price - c);
        }
        let b = post_quantile_with(f, v, c, rule);
        if b.trade {
            buyer += p * (v - b.seller_price);
        }
    }
    Ok(BilateralProfits { seller, buyer, gft: bt_gft(f, v) })
}
