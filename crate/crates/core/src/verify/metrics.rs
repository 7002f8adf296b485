//! Expected welfare, profit and budget of a mechanism.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{Market, Mechanism};

/// Expectations over the type distribution under truthful reports.
/// `pi_sellers`/`pi_buyers` are total utilities; the side profits that
/// include the budget are [`Metrics::seller_profit`] and
/// [`Metrics::buyer_profit`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub gft_star: f64,
    pub gft: f64,
    pub pi_sellers: f64,
    pub pi_buyers: f64,
    pub budget: f64,
}

impl Metrics {
    /// Sellers' profit when the mechanism's surplus goes to the sellers.
    pub fn seller_profit(&self) -> f64 {
        self.pi_sellers + self.budget
    }

    pub fn buyer_profit(&self) -> f64 {
        self.pi_buyers + self.budget
    }

    fn add_scaled(&mut self, w: f64, o: &Metrics) {
        self.gft_star += w * o.gft_star;
        self.gft += w * o.gft;
        self.pi_sellers += w * o.pi_sellers;
        self.pi_buyers += w * o.pi_buyers;
        self.budget += w * o.budget;
    }
}

/// `E[max_M Σ(v_i - c_j)]` over enumerated profiles.
pub fn first_best_gft(market: &Market) -> Result<f64> {
    let mut total = 0.0;
    for p in market.instance.enumerate_profiles()? {
        let k = market.feasible.mwm(&p.values, &p.costs);
        total += p.prob * market.feasible.value(k, &p.values, &p.costs);
    }
    Ok(total)
}

/// Per-profile metrics, averaged over the mechanism's branches.
fn profile_metrics(market: &Market, mech: &dyn Mechanism, b: &[f64], s: &[f64]) -> Metrics {
    let k = market.feasible.mwm(b, s);
    let mut out = Metrics { gft_star: market.feasible.value(k, b, s), ..Metrics::default() };
    for (w, o) in mech.branches(market, b, s) {
        let gft: f64 = o.matching.iter().map(|&(i, j)| b[i] - s[j]).sum();
        out.gft += w * gft;
        out.pi_sellers += w * o.seller_utilities.iter().sum::<f64>();
        out.pi_buyers += w * o.buyer_utilities.iter().sum::<f64>();
        out.budget += w * o.budget;
    }
    out
}

pub fn expected_metrics(market: &Market, mech: &dyn Mechanism) -> Result<Metrics> {
    let mut total = Metrics::default();
    for p in market.instance.enumerate_profiles()? {
        total.add_scaled(p.prob, &profile_metrics(market, mech, &p.values, &p.costs));
    }
    Ok(total)
}

/// `(Π_S(GSOM) + Π_B(GBOM)) / 2 / GFT*`, or `None` when `GFT* = 0`.
pub fn ratio(gft_star: f64, pi_s_gsom: f64, pi_b_gbom: f64) -> Option<f64> {
    (gft_star != 0.0).then(|| 0.5 * (pi_s_gsom + pi_b_gbom) / gft_star)
}

/// Sample means with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub samples: usize,
    pub mean: Metrics,
    pub stderr: Metrics,
}

/// Monte Carlo metrics. Randomized mechanisms use their sampled coin.
pub fn monte_carlo_metrics(market: &Market, mech: &dyn Mechanism, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::Contract("Monte Carlo needs at least 2 samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = &market.instance;
    let mut sum = Metrics::default();
    let mut sq = Metrics::default();
    for _ in 0..samples {
        let b: Vec<f64> = inst.buyers.iter().map(|d| d.sample(&mut rng)).collect();
        let s: Vec<f64> = inst.sellers.iter().map(|d| d.sample(&mut rng)).collect();
        let k = market.feasible.mwm(&b, &s);
        let o = mech.run(market, &b, &s);
        let x = Metrics {
            gft_star: market.feasible.value(k, &b, &s),
            gft: o.matching.iter().map(|&(i, j)| b[i] - s[j]).sum(),
            pi_sellers: o.seller_utilities.iter().sum(),
            pi_buyers: o.buyer_utilities.iter().sum(),
            budget: o.budget,
        };
        sum.add_scaled(1.0, &x);
        let x2 = Metrics {
            gft_star: x.gft_star * x.gft_star,
            gft: x.gft * x.gft,
            pi_sellers: x.pi_sellers * x.pi_sellers,
            pi_buyers: x.pi_buyers * x.pi_buyers,
            budget: x.budget * x.budget,
        };
        sq.add_scaled(1.0, &x2);
    }
    let n = samples as f64;
    let se = |s: f64, q: f64| {
        let mean = s / n;
        ((q / n - mean * mean).max(0.0) * n / (n - 1.0) / n).sqrt()
    };
    let mut mean = Metrics::default();
    mean.add_scaled(1.0 / n, &sum);
    let stderr = Metrics {
        gft_star: se(sum.gft_star, sq.gft_star),
        gft: se(sum.gft, sq.gft),
        pi_sellers: se(sum.pi_sellers, sq.pi_sellers),
        pi_buyers: se(sum.pi_buyers, sq.pi_buyers),
        budget: se(sum.budget, sq.budget),
    };
    Ok(McEstimate { samples, mean, stderr })
}
