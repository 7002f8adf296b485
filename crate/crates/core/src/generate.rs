//! Seeded random instances on a rational grid.
//!
//! Atom locations are grid points `step * k` for `k` in `0..=points-1`;
//! probabilities come from a symmetric Dirichlet and are quantized to
//! multiples of `1/128`, so every input is dyadic.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Gamma};
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::market::{FeasibilityFamily, MarketInstance, Matching};

const QUANTUM: usize = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    All,
    MaxTrades,
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub buyers: usize,
    pub sellers: usize,
    /// Atoms per agent.
    pub atoms: usize,
    /// Probability that each buyer-seller pair is a trade edge.
    pub density: f64,
    pub family: FamilyKind,
    /// Trade limit for `MaxTrades`.
    pub k: usize,
    pub grid_step: f64,
    pub grid_points: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            buyers: 2,
            sellers: 2,
            atoms: 3,
            density: 1.0,
            family: FamilyKind::All,
            k: 1,
            grid_step: 0.5,
            grid_points: 11,
            alpha: 1.0,
            seed: 0,
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if self.atoms == 0 {
            return bad("atoms must be at least 1");
        }
        if self.atoms > self.grid_points || self.atoms > QUANTUM {
            return bad("more atoms than grid points");
        }
        if !(0.0..=1.0).contains(&self.density) {
            return bad("density must lie in [0, 1]");
        }
        if !(self.grid_step > 0.0 && self.grid_step.is_finite()) {
            return bad("grid step must be positive");
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        Ok(())
    }
}

/// Symmetric Dirichlet weights as counts out of `QUANTUM`, each at least 1.
fn quantized_weights<R: Rng>(rng: &mut R, k: usize, alpha: f64) -> Vec<usize> {
    let gamma = Gamma::new(alpha, 1.0).expect("alpha validated");
    let g: Vec<f64> = (0..k).map(|_| gamma.sample(rng).max(f64::MIN_POSITIVE)).collect();
    let total: f64 = g.iter().sum();
    let free = (QUANTUM - k) as f64;
    let raw: Vec<f64> = g.iter().map(|x| x / total * free).collect();
    let mut counts: Vec<usize> = raw.iter().map(|x| 1 + x.floor() as usize).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    let mut left = QUANTUM - counts.iter().sum::<usize>();
    for &idx in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[idx] += 1;
        left -= 1;
    }
    counts
}

pub fn random_discrete<R: Rng>(rng: &mut R, atoms: usize, step: f64, points: usize, alpha: f64) -> Distribution {
    let mut idx = sample(rng, points, atoms).into_vec();
    idx.sort_unstable();
    let counts = quantized_weights(rng, atoms, alpha);
    let pairs: Vec<(f64, f64)> =
        idx.iter().zip(&counts).map(|(&k, &c)| (k as f64 * step, c as f64 / QUANTUM as f64)).collect();
    Distribution::discrete(&pairs).expect("generated laws are valid")
}

/// Random members of the full family, closed under subsets.
fn random_explicit<R: Rng>(rng: &mut R, edges: &[(usize, usize)], m: usize, n: usize) -> Result<FeasibilityFamily> {
    let pm = Distribution::point_mass(0.0)?;
    let all = MarketInstance {
        buyers: vec![pm.clone(); m],
        sellers: vec![pm; n],
        edges: edges.to_vec(),
        family: FeasibilityFamily::AllMatchings,
    }
    .enumerate_feasible()?;
    let nonempty: Vec<&Matching> = all.iter().filter(|x| !x.is_empty()).collect();
    if nonempty.is_empty() {
        return Ok(FeasibilityFamily::Explicit { matchings: Vec::new(), auto_close: false });
    }
    let picks: Vec<&Matching> = (0..rng.random_range(1..=3)).map(|_| nonempty[rng.random_range(0..nonempty.len())]).collect();
    let matchings = nonempty
        .into_iter()
        .filter(|x| picks.iter().any(|p| x.iter().all(|e| p.contains(e))))
        .cloned()
        .collect();
    Ok(FeasibilityFamily::Explicit { matchings, auto_close: false })
}

fn build<R: Rng>(rng: &mut R, spec: &GenSpec, atoms: impl Fn(&mut R) -> usize) -> Result<MarketInstance> {
    let law = |rng: &mut R| {
        let k = atoms(rng);
        random_discrete(rng, k, spec.grid_step, spec.grid_points, spec.alpha)
    };
    let buyers: Vec<Distribution> = (0..spec.buyers).map(|_| law(rng)).collect();
    let sellers: Vec<Distribution> = (0..spec.sellers).map(|_| law(rng)).collect();
    let mut edges = Vec::new();
    for i in 0..spec.buyers {
        for j in 0..spec.sellers {
            if rng.random_bool(spec.density) {
                edges.push((i, j));
            }
        }
    }
    let family = match spec.family {
        FamilyKind::All => FeasibilityFamily::AllMatchings,
        FamilyKind::MaxTrades => FeasibilityFamily::MaxTrades { k: spec.k },
        FamilyKind::Explicit => random_explicit(rng, &edges, spec.buyers, spec.sellers)?,
    };
    let inst = MarketInstance { buyers, sellers, edges, family };
    inst.validate()?;
    Ok(inst)
}

/// One instance, fully determined by the generator settings.
pub fn generate(spec: &GenSpec) -> Result<MarketInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    build(&mut rng, spec, |_| spec.atoms)
}

/// Most feasible matchings a suite instance may have.
pub const SUITE_MATCHING_LIMIT: usize = 20;

/// Random shapes with `m, n` in `1..=3`, 1 to 4 atoms per agent, and a
/// mix of family kinds, redrawn until the family has at most 20 members.
pub fn suite(seed: u64, count: usize) -> Vec<MarketInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let m = rng.random_range(1..=3);
            let n = rng.random_range(1..=3);
            let family = [FamilyKind::All, FamilyKind::MaxTrades, FamilyKind::Explicit][rng.random_range(0..3)];
            let spec = GenSpec {
                buyers: m,
                sellers: n,
                density: 0.8,
                family,
                k: rng.random_range(1..=m.min(n)),
                ..GenSpec::default()
            };
            let inst = build(&mut rng, &spec, |r| r.random_range(1..=4)).expect("suite settings are valid");
            if inst.enumerate_feasible().is_ok_and(|f| f.len() <= SUITE_MATCHING_LIMIT) {
                break inst;
            }
        })
        .collect()
}

/// One buyer, one seller, their edge, 1 to 4 atoms each.
pub fn single_edge_suite(seed: u64, count: usize) -> Vec<MarketInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = GenSpec { buyers: 1, sellers: 1, density: 1.0, ..GenSpec::default() };
    (0..count).map(|_| build(&mut rng, &spec, |r| r.random_range(1..=4)).expect("valid settings")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_and_valid() {
        let spec = GenSpec { seed: 7, ..GenSpec::default() };
        let a = generate(&spec).unwrap();
        assert_eq!(a, generate(&spec).unwrap());
        a.validate().unwrap();
        assert!(a.buyers.iter().all(|d| d.support().len() == 3));
    }

    #[test]
    fn probabilities_are_multiples_of_the_quantum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for k in 1..=6 {
            let d = random_discrete(&mut rng, k, 0.5, 11, 1.0);
            let total: usize = d.probs().iter().map(|p| (p * 128.0) as usize).sum();
            assert_eq!(total, 128);
            assert!(d.probs().iter().all(|p| (p * 128.0).fract() == 0.0 && *p >= 1.0 / 128.0));
        }
    }

    #[test]
    fn zero_atoms_is_rejected() {
        assert!(generate(&GenSpec { atoms: 0, ..GenSpec::default() }).is_err());
    }

    #[test]
    fn suites_respect_their_shape() {
        for inst in suite(3, 40) {
            assert!((1..=3).contains(&inst.m()) && (1..=3).contains(&inst.n()));
            assert!(inst.enumerate_feasible().unwrap().len() <= SUITE_MATCHING_LIMIT);
            assert!(inst.buyers.iter().chain(&inst.sellers).all(|d| (1..=4).contains(&d.support().len())));
        }
        assert!(single_edge_suite(3, 10).iter().all(|i| i.edges == [(0, 0)]));
    }
}
