//! Tie-broken maximum-weight matching over an enumerated family, and
//! exact membership thresholds for one agent's weight term.
//!
//! Weights are separable: edge `(k, l)` weighs `beta[k] - sigma[l]`. The
//! buyer term is a value or virtual value, the seller term a cost or
//! virtual cost. Every threshold follows from one pass over the family
//! that files each matching into one of five classes relative to a pair
//! `(i, j)`.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::Bound;
use crate::error::Result;
use crate::market::{Edge, MarketInstance, Matching};

/// The feasible matchings of an instance in canonical order, with partner
/// tables for fast classification.
#[derive(Clone, Debug)]
pub struct FeasibleSet {
    matchings: Vec<Matching>,
    m: usize,
    n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "side", content = "index", rename_all = "snake_case")]
pub enum Agent {
    Buyer(usize),
    Seller(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TieBreak {
    /// First maximizer in canonical order.
    #[default]
    Canonical,
    /// Uniformly random maximizer. Breaks monotonicity; test use only.
    Randomized { seed: u64 },
}

fn weight(m: &Matching, beta: &[f64], sigma: &[f64]) -> f64 {
    m.iter().map(|&(k, l)| beta[k] - sigma[l]).sum()
}

/// Best member of one class: its weight and canonical index.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Best {
    pub value: f64,
    pub rep: usize,
}

fn offer(slot: &mut Option<Best>, value: f64, rep: usize) {
    match slot {
        Some(b) if b.value >= value => {}
        _ => *slot = Some(Best { value, rep }),
    }
}

/// Best weights per class for a pair `(i, j)`, with the two varying terms
/// `beta[i]` and `sigma[j]` left out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairDecomposition {
    pub i: usize,
    pub j: usize,
    /// Matchings containing `(i, j)`.
    pub pair: Option<Best>,
    /// `i` matched elsewhere, `j` unmatched.
    pub buyer_elsewhere: Option<Best>,
    /// Neither matched. Always present through the empty matching.
    pub neither: Best,
    /// `j` matched elsewhere, `i` unmatched.
    pub seller_elsewhere: Option<Best>,
    /// Both matched, to other partners.
    pub both_elsewhere: Option<Best>,
}

fn beats(a: f64, a_rep: usize, other: Option<Best>) -> bool {
    match other {
        None => true,
        Some(o) => a > o.value || (a == o.value && a_rep < o.rep),
    }
}

impl PairDecomposition {
    /// Membership cap on `sigma[j]`: `(i, j)` is chosen iff the seller
    /// term is admitted below this bound.
    pub fn seller_cap(&self, beta_i: f64) -> Bound {
        let Some(p) = self.pair else { return Bound::NegInf };
        let a = p.value;
        if !beats(a + beta_i, p.rep, self.seller_elsewhere) || !beats(a, p.rep, self.both_elsewhere) {
            return Bound::NegInf;
        }
        let mut cap = Bound::at(a + beta_i - self.neither.value, p.rep < self.neither.rep);
        if let Some(o) = self.buyer_elsewhere {
            cap = cap.min(Bound::at(a - o.value, p.rep < o.rep));
        }
        cap
    }

    /// Membership floor on `beta[i]`: `(i, j)` is chosen iff the buyer
    /// term is admitted above this bound.
    pub fn buyer_floor(&self, sigma_j: f64) -> Bound {
        let Some(p) = self.pair else { return Bound::PosInf };
        let a = p.value;
        if !beats(a - sigma_j, p.rep, self.buyer_elsewhere) || !beats(a, p.rep, self.both_elsewhere) {
            return Bound::PosInf;
        }
        let mut floor = Bound::at(self.neither.value - a + sigma_j, p.rep < self.neither.rep);
        if let Some(o) = self.seller_elsewhere {
            floor = floor.max(Bound::at(o.value - a, p.rep < o.rep));
        }
        floor
    }

    pub fn contains_edge(&self, beta_i: f64, sigma_j: f64) -> bool {
        self.seller_cap(beta_i).admits_below(sigma_j)
    }

    /// The single-agent decomposition for seller `j` varying.
    pub fn seller_side(&self, beta_i: f64) -> ParametricDecomposition {
        let best = |x: Option<Best>, y: Option<Best>| match (x, y) {
            (Some(a), Some(b)) => Some(if b.value > a.value { b.value } else { a.value }),
            (a, b) => a.or(b).map(|v| v.value),
        };
        let shift = |x: Option<Best>| x.map(|b| Best { value: b.value + beta_i, rep: b.rep });
        ParametricDecomposition {
            a: self.pair.map(|p| p.value + beta_i),
            b: best(Some(self.neither), shift(self.buyer_elsewhere)),
            c: best(self.seller_elsewhere, shift(self.both_elsewhere)),
        }
    }

    /// The single-agent decomposition for buyer `i` varying.
    pub fn buyer_side(&self, sigma_j: f64) -> ParametricDecomposition {
        let best = |x: Option<Best>, y: Option<Best>| match (x, y) {
            (Some(a), Some(b)) => Some(if b.value > a.value { b.value } else { a.value }),
            (a, b) => a.or(b).map(|v| v.value),
        };
        let shift = |x: Option<Best>| x.map(|b| Best { value: b.value - sigma_j, rep: b.rep });
        ParametricDecomposition {
            a: self.pair.map(|p| p.value - sigma_j),
            b: best(Some(self.neither), shift(self.seller_elsewhere)),
            c: best(self.buyer_elsewhere, shift(self.both_elsewhere)),
        }
    }
}

/// Constrained optima for one varying agent on edge `(i, j)`:
/// `a` over matchings with the edge (own term removed), `b` over matchings
/// that leave the agent out, `c` over matchings that give the agent a
/// different partner (own term removed). `None` marks an empty class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParametricDecomposition {
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
}

impl FeasibleSet {
    pub fn new(instance: &MarketInstance) -> Result<FeasibleSet> {
        Ok(FeasibleSet { matchings: instance.enumerate_feasible()?, m: instance.m(), n: instance.n() })
    }

    pub fn from_matchings(matchings: Vec<Matching>, m: usize, n: usize) -> FeasibleSet {
        FeasibleSet { matchings, m, n }
    }

    pub fn matchings(&self) -> &[Matching] {
        &self.matchings
    }

    pub fn len(&self) -> usize {
        self.matchings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matchings.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn value(&self, idx: usize, beta: &[f64], sigma: &[f64]) -> f64 {
        weight(&self.matchings[idx], beta, sigma)
    }

    /// Index of the canonical maximizer. Index 0 is the empty matching.
    pub fn mwm(&self, beta: &[f64], sigma: &[f64]) -> usize {
        let mut best = 0;
        let mut best_w = f64::NEG_INFINITY;
        for (k, mm) in self.matchings.iter().enumerate() {
            let w = weight(mm, beta, sigma);
            if w > best_w {
                best = k;
                best_w = w;
            }
        }
        best
    }

    /// Maximizer under an explicit tie rule. `salt` diversifies the
    /// random rule between calls.
    pub fn mwm_with(&self, beta: &[f64], sigma: &[f64], tie: TieBreak, salt: u64) -> usize {
        match tie {
            TieBreak::Canonical => self.mwm(beta, sigma),
            TieBreak::Randomized { seed } => {
                let ws: Vec<f64> = self.matchings.iter().map(|mm| weight(mm, beta, sigma)).collect();
                let top = ws.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let ties: Vec<usize> = (0..ws.len()).filter(|&k| ws[k] == top).collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                *ties.choose(&mut rng).expect("the empty matching is always feasible")
            }
        }
    }

    /// Maximizer for an arbitrary per-edge weight function.
    pub fn mwm_by(&self, w: impl Fn(Edge) -> f64) -> usize {
        let mut best = 0;
        let mut best_w = f64::NEG_INFINITY;
        for (k, mm) in self.matchings.iter().enumerate() {
            let total: f64 = mm.iter().map(|&e| w(e)).sum();
            if total > best_w {
                best = k;
                best_w = total;
            }
        }
        best
    }

    pub fn decompose(&self, beta: &[f64], sigma: &[f64], i: usize, j: usize) -> PairDecomposition {
        let mut pair = None;
        let mut buyer_elsewhere = None;
        let mut neither = None;
        let mut seller_elsewhere = None;
        let mut both_elsewhere = None;
        for (k, mm) in self.matchings.iter().enumerate() {
            let mut pi = None;
            let mut pj = None;
            let mut w = 0.0;
            for &(b, s) in mm {
                if b == i {
                    pi = Some(s);
                } else {
                    w += beta[b];
                }
                if s == j {
                    pj = Some(b);
                } else {
                    w -= sigma[s];
                }
            }
            let slot = match (pi, pj) {
                (Some(s), _) if s == j => &mut pair,
                (Some(_), None) => &mut buyer_elsewhere,
                (None, None) => &mut neither,
                (None, Some(_)) => &mut seller_elsewhere,
                (Some(_), Some(_)) => &mut both_elsewhere,
            };
            offer(slot, w, k);
        }
        PairDecomposition {
            i,
            j,
            pair,
            buyer_elsewhere,
            neither: neither.expect("the empty matching is always feasible"),
            seller_elsewhere,
            both_elsewhere,
        }
    }

    /// Critical cost of `(i, j)` as a cap on the seller term.
    pub fn critical_cost(&self, beta: &[f64], sigma: &[f64], edge: Edge) -> Bound {
        self.decompose(beta, sigma, edge.0, edge.1).seller_cap(beta[edge.0])
    }

    /// Buyer threshold of `(i, j)` as a floor on the buyer term.
    pub fn buyer_threshold(&self, beta: &[f64], sigma: &[f64], edge: Edge) -> Bound {
        self.decompose(beta, sigma, edge.0, edge.1).buyer_floor(sigma[edge.1])
    }

    /// Scans `agent`'s report over `grid` (increasing), mapping each report
    /// to its weight term with `transform`. True iff membership of `edge`
    /// is an up-set for a buyer (down-set for a seller) and the agent
    /// never changes partner while matched.
    #[allow(clippy::too_many_arguments)]
    pub fn membership_monotone_scan(
        &self,
        beta: &[f64],
        sigma: &[f64],
        edge: Edge,
        agent: Agent,
        grid: &[f64],
        transform: impl Fn(f64) -> f64,
        tie: TieBreak,
    ) -> bool {
        let mut beta = beta.to_vec();
        let mut sigma = sigma.to_vec();
        let mut member = Vec::with_capacity(grid.len());
        let mut partner = None;
        for (step, &z) in grid.iter().enumerate() {
            let p = match agent {
                Agent::Buyer(i) => {
                    beta[i] = transform(z);
                    let idx = self.mwm_with(&beta, &sigma, tie, step as u64);
                    self.matchings[idx].iter().find(|e| e.0 == i).map(|e| e.1)
                }
                Agent::Seller(j) => {
                    sigma[j] = transform(z);
                    let idx = self.mwm_with(&beta, &sigma, tie, step as u64);
                    self.matchings[idx].iter().find(|e| e.1 == j).map(|e| e.0)
                }
            };
            if let Some(p) = p {
                if partner.is_some_and(|q| q != p) {
                    return false;
                }
                partner = Some(p);
            }
            let on = match agent {
                Agent::Buyer(_) => p == Some(edge.1),
                Agent::Seller(_) => p == Some(edge.0),
            };
            member.push(on);
        }
        match agent {
            Agent::Buyer(_) => member.windows(2).all(|w| !w[0] || w[1]),
            Agent::Seller(_) => member.windows(2).all(|w| w[0] || !w[1]),
        }
    }
}
