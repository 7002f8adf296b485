use super::{Market, Mechanism};
use crate::distributions::{Bound, Distribution};
use crate::market::Outcome;
use crate::matching::PairDecomposition;

pub(crate) fn gsom_weights(market: &Market, b: &[f64], s: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let beta = market.instance.buyers.iter().zip(b).map(|(d, &z)| d.ironed_virtual_value(z)).collect();
    (beta, s.to_vec())
}

pub(crate) fn gbom_weights(market: &Market, b: &[f64], s: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let sigma = market.instance.sellers.iter().zip(s).map(|(d, &z)| d.ironed_virtual_cost(z)).collect();
    (b.to_vec(), sigma)
}

/// Lowest winning buyer report for a floor on `φ̃`.
fn floor_to_report(d: &Distribution, floor: Bound) -> f64 {
    match floor {
        Bound::NegInf => f64::NEG_INFINITY,
        Bound::PosInf => f64::INFINITY,
        Bound::At { value, inclusive } => d.buyer_virtual_inverse(value, !inclusive),
    }
}

/// Highest winning seller report for a cap on `ψ̃`.
fn cap_to_report(d: &Distribution, cap: Bound) -> f64 {
    match cap {
        Bound::NegInf => f64::NEG_INFINITY,
        Bound::PosInf => f64::INFINITY,
        Bound::At { value, inclusive } => d.seller_virtual_inverse(value, !inclusive),
    }
}

struct Matched {
    decomps: Vec<PairDecomposition>,
    beta: Vec<f64>,
    sigma: Vec<f64>,
}

fn solve(market: &Market, beta: Vec<f64>, sigma: Vec<f64>) -> Matched {
    let idx = market.feasible.mwm(&beta, &sigma);
    let decomps = market.feasible.matchings()[idx]
        .iter()
        .map(|&(i, j)| market.feasible.decompose(&beta, &sigma, i, j))
        .collect();
    Matched { decomps, beta, sigma }
}

fn gsom_solve(market: &Market, b: &[f64], s: &[f64]) -> (Matched, Vec<f64>, Vec<f64>) {
    let (beta, sigma) = gsom_weights(market, b, s);
    let sol = solve(market, beta, sigma);
    let mut pb = vec![0.0; market.m()];
    let mut ps = vec![0.0; market.n()];
    for d in &sol.decomps {
        pb[d.i] = floor_to_report(&market.instance.buyers[d.i], d.buyer_floor(sol.sigma[d.j]));
        ps[d.j] = d.seller_cap(sol.beta[d.i]).value();
    }
    (sol, pb, ps)
}

fn gbom_solve(market: &Market, b: &[f64], s: &[f64]) -> (Matched, Vec<f64>, Vec<f64>) {
    let (beta, sigma) = gbom_weights(market, b, s);
    let sol = solve(market, beta, sigma);
    let mut pb = vec![0.0; market.m()];
    let mut ps = vec![0.0; market.n()];
    for d in &sol.decomps {
        pb[d.i] = d.buyer_floor(sol.sigma[d.j]).value();
        ps[d.j] = cap_to_report(&market.instance.sellers[d.j], d.seller_cap(sol.beta[d.i]));
    }
    (sol, pb, ps)
}

fn edges(sol: &Matched) -> Vec<(usize, usize)> {
    sol.decomps.iter().map(|d| (d.i, d.j)).collect()
}

/// Virtual-surplus matching on `φ̃(b) - s` with threshold payments.
pub fn run_gsom(market: &Market, b: &[f64], s: &[f64]) -> Outcome {
    let (sol, pb, ps) = gsom_solve(market, b, s);
    Outcome::new(edges(&sol), pb, ps, b, s)
}

/// Virtual-surplus matching on `b - ψ̃(s)` with threshold payments.
pub fn run_gbom(market: &Market, b: &[f64], s: &[f64]) -> Outcome {
    let (sol, pb, ps) = gbom_solve(market, b, s);
    Outcome::new(edges(&sol), pb, ps, b, s)
}

/// Conditional mean of a piecewise-affine integrand over `U(lo, hi)`.
/// `f` returns `None` off the conditioning event; `breaks` must contain
/// every point where `f` changes formula or the event changes. `None`
/// when the event has zero probability.
fn affine_mean(lo: f64, hi: f64, breaks: &[f64], f: impl Fn(f64) -> Option<f64>) -> Option<f64> {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite() && *x > lo && *x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut num = 0.0;
    let mut den = 0.0;
    for w in pts.windows(2) {
        let len = w[1] - w[0];
        if let Some(v) = f(0.5 * (w[0] + w[1])) {
            num += len * v;
            den += len;
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Seller payment under GSOM-BIC: the GSOM seller threshold averaged over
/// the partner's report law, given that the pair is still chosen.
fn gsom_bic_seller_payment(market: &Market, d: &PairDecomposition, s_j: f64, fallback: f64) -> f64 {
    let law = &market.instance.buyers[d.i];
    let mean = match law {
        Distribution::Discrete(_) => {
            let mut num = 0.0;
            let mut den = 0.0;
            for (x, p) in law.atoms() {
                let cap = d.seller_cap(law.ironed_virtual_value(x));
                if cap.admits_below(s_j) {
                    num += p * cap.value();
                    den += p;
                }
            }
            (den > 0.0).then(|| num / den)
        }
        // φ̃(B) = 2B - hi is uniform on [2lo - hi, hi].
        Distribution::Uniform(_) => {
            let (lo, hi) = (2.0 * law.min_support() - law.max_support(), law.max_support());
            let a = d.pair.map_or(f64::NEG_INFINITY, |p| p.value);
            let mut breaks = vec![s_j + d.neither.value - a];
            breaks.extend(d.seller_elsewhere.map(|o| o.value - a));
            breaks.extend(d.buyer_elsewhere.map(|o| d.neither.value - o.value));
            affine_mean(lo, hi, &breaks, |beta| {
                let cap = d.seller_cap(beta);
                cap.admits_below(s_j).then(|| cap.value())
            })
        }
    };
    mean.unwrap_or(fallback)
}

/// Buyer payment under GBOM-BIC: the GBOM buyer threshold averaged over
/// the partner's cost law, given that the pair is still chosen.
fn gbom_bic_buyer_payment(market: &Market, d: &PairDecomposition, beta_i: f64, fallback: f64) -> f64 {
    let law = &market.instance.sellers[d.j];
    let mean = match law {
        Distribution::Discrete(_) => {
            let mut num = 0.0;
            let mut den = 0.0;
            for (x, p) in law.atoms() {
                let sigma = law.ironed_virtual_cost(x);
                if d.contains_edge(beta_i, sigma) {
                    num += p * d.buyer_floor(sigma).value();
                    den += p;
                }
            }
            (den > 0.0).then(|| num / den)
        }
        // ψ̃(S) = 2S - lo is uniform on [lo, 2hi - lo].
        Distribution::Uniform(_) => {
            let (lo, hi) = (law.min_support(), 2.0 * law.max_support() - law.min_support());
            let a = d.pair.map_or(f64::NEG_INFINITY, |p| p.value);
            let mut breaks = vec![a + beta_i - d.neither.value];
            breaks.extend(d.buyer_elsewhere.map(|o| a - o.value));
            breaks.extend(d.seller_elsewhere.map(|o| o.value - d.neither.value));
            affine_mean(lo, hi, &breaks, |sigma| {
                d.contains_edge(beta_i, sigma).then(|| d.buyer_floor(sigma).value())
            })
        }
    };
    mean.unwrap_or(fallback)
}

/// GSOM allocation and buyer payments; matched sellers receive the
/// conditional expectation of their GSOM threshold.
pub fn run_gsom_bic(market: &Market, b: &[f64], s: &[f64]) -> Outcome {
    let (sol, pb, mut ps) = gsom_solve(market, b, s);
    for d in &sol.decomps {
        ps[d.j] = gsom_bic_seller_payment(market, d, s[d.j], ps[d.j]);
    }
    Outcome::new(edges(&sol), pb, ps, b, s)
}

/// GBOM allocation and seller payments; matched buyers pay the
/// conditional expectation of their GBOM threshold.
pub fn run_gbom_bic(market: &Market, b: &[f64], s: &[f64]) -> Outcome {
    let (sol, mut pb, ps) = gbom_solve(market, b, s);
    for d in &sol.decomps {
        pb[d.i] = gbom_bic_buyer_payment(market, d, b[d.i], pb[d.i]);
    }
    Outcome::new(edges(&sol), pb, ps, b, s)
}

/// GSOM allocation with pay-your-bid buyers. Not truthful; kept as a
/// negative control for the incentive checks.
#[derive(Clone, Copy, Debug, Default)]
pub struct FirstPriceGsom;

impl Mechanism for FirstPriceGsom {
    fn name(&self) -> String {
        "gsom_first_price".into()
    }

    fn run(&self, market: &Market, b: &[f64], s: &[f64]) -> Outcome {
        let (sol, mut pb, ps) = gsom_solve(market, b, s);
        for d in &sol.decomps {
            pb[d.i] = b[d.i];
        }
        Outcome::new(edges(&sol), pb, ps, b, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{FeasibilityFamily, MarketInstance};

    fn bilateral(buyer: Distribution, seller: Distribution) -> Market {
        Market::new(MarketInstance {
            buyers: vec![buyer],
            sellers: vec![seller],
            edges: vec![(0, 0)],
            family: FeasibilityFamily::AllMatchings,
        })
        .unwrap()
    }

    fn example() -> Market {
        bilateral(
            Distribution::discrete(&[(1.0, 0.5), (3.0, 0.5)]).unwrap(),
            Distribution::discrete(&[(0.0, 0.5), (2.0, 0.5)]).unwrap(),
        )
    }

    #[test]
    fn gsom_examples() {
        let mk = example();
        let o = run_gsom(&mk, &[3.0], &[0.0]);
        assert_eq!(o.matching, vec![(0, 0)]);
        assert_eq!((o.buyer_payments[0], o.seller_payments[0]), (3.0, 3.0));
        let o = run_gsom(&mk, &[1.0], &[0.0]);
        assert!(o.matching.is_empty());
        assert_eq!((o.buyer_payments[0], o.seller_payments[0]), (0.0, 0.0));
    }

    #[test]
    fn gbom_examples() {
        let mk = example();
        let o = run_gbom(&mk, &[3.0], &[0.0]);
        assert_eq!(o.matching, vec![(0, 0)]);
        // The highest winning cost report is the atom 0: every report in
        // (0, 2] carries ψ̃ = 4.
        assert_eq!((o.buyer_payments[0], o.seller_payments[0]), (0.0, 0.0));
        assert!(run_gbom(&mk, &[3.0], &[2.0]).matching.is_empty());
        let o = run_gbom(&mk, &[1.0], &[0.0]);
        assert_eq!(o.matching, vec![(0, 0)]);
        assert_eq!((o.buyer_payments[0], o.seller_payments[0]), (0.0, 0.0));
    }

    #[test]
    fn gsom_bic_bilateral_uniform() {
        let mk = bilateral(Distribution::uniform(0.0, 1.0).unwrap(), Distribution::point_mass(0.0).unwrap());
        let o = run_gsom_bic(&mk, &[0.8], &[0.0]);
        assert_eq!(o.matching, vec![(0, 0)]);
        assert!((o.buyer_payments[0] - 0.5).abs() < 1e-12);
        assert!((o.seller_payments[0] - 0.5).abs() < 1e-12);
        let o = run_gsom_bic(&mk, &[0.3], &[0.0]);
        assert!(o.matching.is_empty());
        assert_eq!(o.seller_payments[0], 0.0);
    }

    #[test]
    fn gbom_bic_point_mass_buyer() {
        let mk = bilateral(
            Distribution::point_mass(3.0).unwrap(),
            Distribution::discrete(&[(0.0, 0.5), (2.0, 0.5)]).unwrap(),
        );
        let o = run_gbom_bic(&mk, &[3.0], &[0.0]);
        assert_eq!(o.matching, vec![(0, 0)]);
        assert_eq!(o.buyer_payments[0], 0.0);
        assert!(run_gbom_bic(&mk, &[3.0], &[2.0]).matching.is_empty());
    }

    #[test]
    fn affine_mean_matches_hand_integral() {
        // E[min(x, 1/2) | x >= 0] for x ~ U(-1, 1) is 3/8.
        let m = affine_mean(-1.0, 1.0, &[0.0, 0.5], |x| (x >= 0.0).then(|| x.min(0.5))).unwrap();
        assert!((m - 0.375).abs() < 1e-15);
        assert_eq!(affine_mean(0.0, 1.0, &[], |_| None), None);
    }
}
