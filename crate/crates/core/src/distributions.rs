//! Value and cost laws: CDF, generalized-inverse quantile, censoring at a
//! cap, sampling, and ironed virtual values for discrete supports.
//!
//! Virtual values are defined on every real report. For a discrete buyer
//! law, `φ̃(z)` is the ironed value of the largest atom `≤ z` and `-∞`
//! below the support. For a discrete seller law, `ψ̃(z)` is the ironed
//! cost of the smallest atom `≥ z` and `+∞` above the support. Both
//! choices make every threshold land on an atom.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;

/// A one-sided limit on a real line, with explicit infinite sentinels.
///
/// Used both as a censoring cap (admitting values below it) and as a
/// winning floor (admitting values above it).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    NegInf,
    At { value: f64, inclusive: bool },
    PosInf,
}

impl Bound {
    /// Builds a bound, mapping infinite values to the sentinels.
    pub fn at(value: f64, inclusive: bool) -> Bound {
        if value == f64::INFINITY {
            Bound::PosInf
        } else if value == f64::NEG_INFINITY {
            Bound::NegInf
        } else {
            Bound::At { value, inclusive }
        }
    }

    pub fn value(&self) -> f64 {
        match *self {
            Bound::NegInf => f64::NEG_INFINITY,
            Bound::At { value, .. } => value,
            Bound::PosInf => f64::INFINITY,
        }
    }

    pub fn inclusive(&self) -> bool {
        matches!(self, Bound::At { inclusive: true, .. })
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Bound::At { .. })
    }

    /// Read as a cap: is `x` at or under it?
    pub fn admits_below(&self, x: f64) -> bool {
        match *self {
            Bound::NegInf => false,
            Bound::PosInf => true,
            Bound::At { value, inclusive } => x < value || (inclusive && x == value),
        }
    }

    /// Read as a floor: is `x` at or over it?
    pub fn admits_above(&self, x: f64) -> bool {
        match *self {
            Bound::NegInf => true,
            Bound::PosInf => false,
            Bound::At { value, inclusive } => x > value || (inclusive && x == value),
        }
    }

    /// The tighter of two caps.
    pub fn min(self, other: Bound) -> Bound {
        match (self, other) {
            (Bound::NegInf, _) | (_, Bound::NegInf) => Bound::NegInf,
            (Bound::PosInf, b) | (b, Bound::PosInf) => b,
            (Bound::At { value: a, inclusive: ia }, Bound::At { value: b, inclusive: ib }) => {
                if a < b {
                    self
                } else if b < a {
                    other
                } else {
                    Bound::At { value: a, inclusive: ia && ib }
                }
            }
        }
    }

    /// The tighter of two floors.
    pub fn max(self, other: Bound) -> Bound {
        match (self, other) {
            (Bound::PosInf, _) | (_, Bound::PosInf) => Bound::PosInf,
            (Bound::NegInf, b) | (b, Bound::NegInf) => b,
            (Bound::At { value: a, inclusive: ia }, Bound::At { value: b, inclusive: ib }) => {
                if a > b {
                    self
                } else if b > a {
                    other
                } else {
                    Bound::At { value: a, inclusive: ia && ib }
                }
            }
        }
    }
}

/// Finite law with strictly increasing non-negative support.
#[derive(Clone, Debug, PartialEq)]
pub struct Discrete {
    support: Vec<f64>,
    probs: Vec<f64>,
    cum: Vec<f64>,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

/// Uniform law on `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Uniform {
    lo: f64,
    hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub enum Distribution {
    Discrete(Discrete),
    Uniform(Uniform),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DistributionRepr {
    Discrete { atoms: Vec<(f64, f64)> },
    Uniform { lo: f64, hi: f64 },
}

impl TryFrom<DistributionRepr> for Distribution {
    type Error = Error;

    fn try_from(r: DistributionRepr) -> Result<Self> {
        match r {
            DistributionRepr::Discrete { atoms } => Distribution::discrete(&atoms),
            DistributionRepr::Uniform { lo, hi } => Distribution::uniform(lo, hi),
        }
    }
}

impl From<Distribution> for DistributionRepr {
    fn from(d: Distribution) -> Self {
        match d {
            Distribution::Discrete(d) => DistributionRepr::Discrete {
                atoms: d.support.iter().copied().zip(d.probs.iter().copied()).collect(),
            },
            Distribution::Uniform(u) => DistributionRepr::Uniform { lo: u.lo, hi: u.hi },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    BuyerConcave,
    SellerConvex,
}

/// Hull of a revenue or cost curve in quantile space.
#[derive(Clone, Debug, PartialEq)]
pub struct IronedCurve {
    pub breakpoints: Vec<(f64, f64)>,
    pub slopes: Vec<f64>,
    pub orientation: Orientation,
}

/// Virtual-value lattice: multiples of 2^-36 below 2^12 in magnitude.
const LATTICE: f64 = (1u64 << 36) as f64;
const LATTICE_MAX: f64 = 4096.0;

fn on_lattice(x: f64) -> bool {
    x.abs() < LATTICE_MAX && (x * LATTICE).fract() == 0.0
}

fn snap(x: f64) -> f64 {
    if x.abs() < LATTICE_MAX {
        (x * LATTICE).round() / LATTICE
    } else {
        x
    }
}

fn cross(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Hull vertex indices of `pts` (sorted by x). `upper` keeps the concave
/// envelope, otherwise the convex one.
fn hull(pts: &[(f64, f64)], upper: bool) -> Vec<usize> {
    let mut h: Vec<usize> = Vec::with_capacity(pts.len());
    for k in 0..pts.len() {
        while h.len() >= 2 {
            let c = cross(pts[h[h.len() - 2]], pts[h[h.len() - 1]], pts[k]);
            if (upper && c >= 0.0) || (!upper && c <= 0.0) {
                h.pop();
            } else {
                break;
            }
        }
        h.push(k);
    }
    h
}

/// Per-point slopes of the hull segment covering each point `1..pts.len()`.
fn hull_slopes(pts: &[(f64, f64)], h: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; pts.len() - 1];
    for w in h.windows(2) {
        let (a, b) = (pts[w[0]], pts[w[1]]);
        let slope = (b.1 - a.1) / (b.0 - a.0);
        for p in (w[0] + 1)..=w[1] {
            out[p - 1] = slope;
        }
    }
    out
}

impl Discrete {
    fn new(atoms: &[(f64, f64)]) -> Result<Discrete> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        let mut total = 0.0;
        for (k, &(x, p)) in atoms.iter().enumerate() {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidDistribution(format!(
                    "support value {x} is not a finite non-negative real"
                )));
            }
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidDistribution(format!("probability {p} is not positive")));
            }
            if k > 0 && atoms[k - 1].0 >= x {
                return Err(Error::InvalidDistribution("support not strictly increasing".into()));
            }
            total += p;
        }
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        let support: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let probs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        let k = support.len();
        let mut cum = Vec::with_capacity(k);
        let mut run = 0.0;
        for &p in &probs {
            run += p;
            cum.push(run);
        }
        cum[k - 1] = 1.0;

        // Buyer revenue curve: support descending, q = P[v >= v_k].
        let mut rev = vec![(0.0, 0.0)];
        let mut tail = 0.0;
        for d in (0..k).rev() {
            tail += probs[d];
            let q = if d == 0 { 1.0 } else { tail };
            rev.push((q, q * support[d]));
        }
        let rs = hull_slopes(&rev, &hull(&rev, true));
        let phi: Vec<f64> = (0..k).map(|a| rs[k - 1 - a]).collect();

        // Seller cost curve: support ascending, q = F(c_k).
        let mut cost = vec![(0.0, 0.0)];
        for a in 0..k {
            cost.push((cum[a], cum[a] * support[a]));
        }
        let mut psi = hull_slopes(&cost, &hull(&cost, false));

        // On a lattice support, keep virtual values on the lattice too so
        // that weight sums are exact and tie decisions are consistent.
        let mut phi = phi;
        if support.iter().all(|&x| on_lattice(x)) {
            phi.iter_mut().chain(psi.iter_mut()).for_each(|v| *v = snap(*v));
        }

        Ok(Discrete { support, probs, cum, phi, psi })
    }

    fn curve(&self, orientation: Orientation) -> IronedCurve {
        let k = self.support.len();
        let pts: Vec<(f64, f64)> = match orientation {
            Orientation::BuyerConcave => {
                let mut v = vec![(0.0, 0.0)];
                for d in (0..k).rev() {
                    let q = if d == 0 { 1.0 } else { 1.0 - self.cum[d - 1] };
                    v.push((q, q * self.support[d]));
                }
                v
            }
            Orientation::SellerConvex => {
                let mut v = vec![(0.0, 0.0)];
                for a in 0..k {
                    v.push((self.cum[a], self.cum[a] * self.support[a]));
                }
                v
            }
        };
        let h = hull(&pts, orientation == Orientation::BuyerConcave);
        let breakpoints: Vec<(f64, f64)> = h.iter().map(|&i| pts[i]).collect();
        let slopes = breakpoints
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        IronedCurve { breakpoints, slopes, orientation }
    }
}

impl Distribution {
    /// Discrete law from `(value, probability)` atoms in increasing order.
    pub fn discrete(atoms: &[(f64, f64)]) -> Result<Distribution> {
        Discrete::new(atoms).map(Distribution::Discrete)
    }

    pub fn point_mass(x: f64) -> Result<Distribution> {
        Distribution::discrete(&[(x, 1.0)])
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Distribution> {
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo < hi) {
            return Err(Error::InvalidDistribution(format!("uniform needs 0 <= lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Distribution::Uniform(Uniform { lo, hi }))
    }

    pub fn enumerable(&self) -> bool {
        matches!(self, Distribution::Discrete(_))
    }

    /// Atoms as `(value, probability)` pairs; empty for continuous laws.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Distribution::Discrete(d) => d.support.iter().copied().zip(d.probs.iter().copied()).collect(),
            Distribution::Uniform(_) => Vec::new(),
        }
    }

    pub fn support(&self) -> &[f64] {
        match self {
            Distribution::Discrete(d) => &d.support,
            Distribution::Uniform(_) => &[],
        }
    }

    pub fn probs(&self) -> &[f64] {
        match self {
            Distribution::Discrete(d) => &d.probs,
            Distribution::Uniform(_) => &[],
        }
    }

    /// Ironed virtual values per atom, ascending support order.
    pub fn phi_atoms(&self) -> &[f64] {
        match self {
            Distribution::Discrete(d) => &d.phi,
            Distribution::Uniform(_) => &[],
        }
    }

    /// Ironed virtual costs per atom, ascending support order.
    pub fn psi_atoms(&self) -> &[f64] {
        match self {
            Distribution::Discrete(d) => &d.psi,
            Distribution::Uniform(_) => &[],
        }
    }

    pub fn min_support(&self) -> f64 {
        match self {
            Distribution::Discrete(d) => d.support[0],
            Distribution::Uniform(u) => u.lo,
        }
    }

    pub fn max_support(&self) -> f64 {
        match self {
            Distribution::Discrete(d) => d.support[d.support.len() - 1],
            Distribution::Uniform(u) => u.hi,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Discrete(d) => {
                let idx = d.support.partition_point(|&s| s <= x);
                if idx == 0 {
                    0.0
                } else {
                    d.cum[idx - 1]
                }
            }
            Distribution::Uniform(u) => ((x - u.lo) / (u.hi - u.lo)).clamp(0.0, 1.0),
        }
    }

    /// `P[X < x]`.
    pub fn cdf_lt(&self, x: f64) -> f64 {
        match self {
            Distribution::Discrete(d) => {
                let idx = d.support.partition_point(|&s| s < x);
                if idx == 0 {
                    0.0
                } else {
                    d.cum[idx - 1]
                }
            }
            Distribution::Uniform(_) => self.cdf(x),
        }
    }

    /// Generalized inverse `min{x : F(x) >= q}`.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("quantile level {q} outside [0, 1]")));
        }
        Ok(self.inv(q))
    }

    pub(crate) fn inv(&self, q: f64) -> f64 {
        match self {
            Distribution::Discrete(d) => {
                if q <= 0.0 {
                    return d.support[0];
                }
                let idx = d.cum.partition_point(|&c| c < q);
                d.support[idx.min(d.support.len() - 1)]
            }
            Distribution::Uniform(u) => u.lo + q.clamp(0.0, 1.0) * (u.hi - u.lo),
        }
    }

    /// Censor at a finite or infinite cap, admitting values `<= cap`.
    pub fn censor(&self, cap: f64) -> CensoredDistribution<'_> {
        self.censor_at(Bound::at(cap, true))
    }

    pub fn censor_at(&self, cap: Bound) -> CensoredDistribution<'_> {
        CensoredDistribution { base: self, cap }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Discrete(_) => {
                let u: f64 = rng.random();
                let q = if u <= 0.0 { f64::MIN_POSITIVE } else { u };
                self.inv(q)
            }
            Distribution::Uniform(u) => rng.random_range(u.lo..u.hi),
        }
    }

    /// Ironed buyer virtual value `φ̃(z)` at any real report.
    pub fn ironed_virtual_value(&self, z: f64) -> f64 {
        match self {
            Distribution::Discrete(d) => {
                let idx = d.support.partition_point(|&s| s <= z);
                if idx == 0 {
                    f64::NEG_INFINITY
                } else {
                    d.phi[idx - 1]
                }
            }
            Distribution::Uniform(u) => {
                if z < u.lo {
                    f64::NEG_INFINITY
                } else {
                    2.0 * z - u.hi
                }
            }
        }
    }

    /// Ironed seller virtual cost `ψ̃(z)` at any real report.
    pub fn ironed_virtual_cost(&self, z: f64) -> f64 {
        match self {
            Distribution::Discrete(d) => {
                let idx = d.support.partition_point(|&s| s < z);
                if idx == d.support.len() {
                    f64::INFINITY
                } else {
                    d.psi[idx]
                }
            }
            Distribution::Uniform(u) => {
                if z > u.hi {
                    f64::INFINITY
                } else {
                    2.0 * z - u.lo
                }
            }
        }
    }

    /// `inf{z : φ̃(z) >= t}`, or with `>` when `strict`. `+∞` when no
    /// report reaches `t`.
    pub fn buyer_virtual_inverse(&self, t: f64, strict: bool) -> f64 {
        if t == f64::INFINITY {
            return f64::INFINITY;
        }
        match self {
            Distribution::Discrete(d) => {
                let idx = if strict {
                    d.phi.partition_point(|&p| p <= t)
                } else {
                    d.phi.partition_point(|&p| p < t)
                };
                d.support.get(idx).copied().unwrap_or(f64::INFINITY)
            }
            Distribution::Uniform(u) => ((t + u.hi) / 2.0).max(u.lo),
        }
    }

    /// `sup{z : ψ̃(z) <= t}`, or with `<` when `strict`. `-∞` when no
    /// report gets under `t`.
    pub fn seller_virtual_inverse(&self, t: f64, strict: bool) -> f64 {
        if t == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match self {
            Distribution::Discrete(d) => {
                let idx = if strict {
                    d.psi.partition_point(|&p| p < t)
                } else {
                    d.psi.partition_point(|&p| p <= t)
                };
                if idx == 0 {
                    f64::NEG_INFINITY
                } else {
                    d.support[idx - 1]
                }
            }
            Distribution::Uniform(u) => ((t + u.lo) / 2.0).min(u.hi),
        }
    }

    /// Hull of the revenue (buyer) or cost (seller) curve. Only discrete
    /// laws have a piecewise-linear curve; uniform laws use closed forms.
    pub fn ironed_curve(&self, orientation: Orientation) -> Result<IronedCurve> {
        match self {
            Distribution::Discrete(d) => Ok(d.curve(orientation)),
            Distribution::Uniform(_) => Err(Error::Capability(
                "uniform laws have closed-form virtual values, not a hull".into(),
            )),
        }
    }
}

/// Generalized inverse of the virtual value (buyer curves) or virtual cost
/// (seller curves) at target `t`.
pub fn virtual_inverse(curve: &IronedCurve, dist: &Distribution, t: f64) -> f64 {
    match curve.orientation {
        Orientation::BuyerConcave => dist.buyer_virtual_inverse(t, false),
        Orientation::SellerConvex => dist.seller_virtual_inverse(t, false),
    }
}

/// A law whose mass beyond `cap` is treated as non-tradeable.
#[derive(Clone, Copy, Debug)]
pub struct CensoredDistribution<'a> {
    base: &'a Distribution,
    cap: Bound,
}

impl<'a> CensoredDistribution<'a> {
    pub fn new(base: &'a Distribution, cap: Bound) -> Self {
        CensoredDistribution { base, cap }
    }

    pub fn base(&self) -> &'a Distribution {
        self.base
    }

    pub fn cap(&self) -> Bound {
        self.cap
    }

    /// Probability of the uncensored region.
    pub fn mass(&self) -> f64 {
        match self.cap {
            Bound::NegInf => 0.0,
            Bound::PosInf => 1.0,
            Bound::At { value, inclusive: true } => self.base.cdf(value),
            Bound::At { value, inclusive: false } => self.base.cdf_lt(value),
        }
    }

    pub fn within(&self, x: f64) -> bool {
        self.cap.admits_below(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.cap {
            Bound::NegInf => 0.0,
            Bound::PosInf => self.base.cdf(x),
            Bound::At { value, .. } => {
                if x < value {
                    self.base.cdf(x)
                } else {
                    self.mass()
                }
            }
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!("quantile level {q} outside [0, 1]")));
        }
        Ok(self.inv(q))
    }

    pub(crate) fn inv(&self, q: f64) -> f64 {
        let mass = self.mass();
        if mass <= 0.0 || q > mass {
            f64::INFINITY
        } else {
            self.base.inv(q)
        }
    }

    pub fn censor(&self, cap: Bound) -> CensoredDistribution<'a> {
        CensoredDistribution { base: self.base, cap: self.cap.min(cap) }
    }
}
