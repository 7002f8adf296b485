//! Market instances: agents, trade graph, downward-closed feasibility
//! families, profile enumeration and JSON files.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::Distribution;
use crate::error::{Error, Result};

/// `(buyer, seller)`.
pub type Edge = (usize, usize);

/// Edge list sorted by `(buyer, seller)`.
pub type Matching = Vec<Edge>;

pub const DEFAULT_MATCHING_LIMIT: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibilityFamily {
    /// Every matching of the trade graph.
    #[serde(rename = "all")]
    AllMatchings,
    /// Matchings with at most `k` trades.
    MaxTrades { k: usize },
    /// The listed matchings. The empty matching is always a member.
    Explicit {
        matchings: Vec<Matching>,
        #[serde(default)]
        auto_close: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    pub buyers: Vec<Distribution>,
    pub sellers: Vec<Distribution>,
    pub edges: Vec<Edge>,
    pub family: FeasibilityFamily,
}

/// One realization of every value and cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub values: Vec<f64>,
    pub costs: Vec<f64>,
    pub prob: f64,
}

/// A mechanism's result on one report profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub matching: Matching,
    pub buyer_payments: Vec<f64>,
    pub seller_payments: Vec<f64>,
    pub buyer_utilities: Vec<f64>,
    pub seller_utilities: Vec<f64>,
    pub budget: f64,
}

impl Outcome {
    /// Assembles an outcome, reading reports as true types for utilities.
    pub fn new(matching: Matching, buyer_payments: Vec<f64>, seller_payments: Vec<f64>, b: &[f64], s: &[f64]) -> Outcome {
        let mut buyer_utilities = vec![0.0; b.len()];
        let mut seller_utilities = vec![0.0; s.len()];
        for &(i, j) in &matching {
            buyer_utilities[i] = b[i] - buyer_payments[i];
            seller_utilities[j] = seller_payments[j] - s[j];
        }
        let budget = buyer_payments.iter().sum::<f64>() - seller_payments.iter().sum::<f64>();
        Outcome { matching, buyer_payments, seller_payments, buyer_utilities, seller_utilities, budget }
    }

    pub fn empty(m: usize, n: usize) -> Outcome {
        Outcome::new(Vec::new(), vec![0.0; m], vec![0.0; n], &vec![0.0; m], &vec![0.0; n])
    }

    pub fn partner_of_buyer(&self, i: usize) -> Option<usize> {
        self.matching.iter().find(|e| e.0 == i).map(|e| e.1)
    }

    pub fn partner_of_seller(&self, j: usize) -> Option<usize> {
        self.matching.iter().find(|e| e.1 == j).map(|e| e.0)
    }
}

fn sorted(m: &[Edge]) -> Matching {
    let mut v = m.to_vec();
    v.sort_unstable();
    v
}

fn is_matching(m: &[Edge]) -> bool {
    let mut bs = HashSet::new();
    let mut ss = HashSet::new();
    m.iter().all(|&(i, j)| bs.insert(i) && ss.insert(j))
}

fn fmt_matching(m: &[Edge]) -> String {
    let parts: Vec<String> = m.iter().map(|(i, j)| format!("({i},{j})")).collect();
    format!("{{{}}}", parts.join(","))
}

impl MarketInstance {
    pub fn m(&self) -> usize {
        self.buyers.len()
    }

    pub fn n(&self) -> usize {
        self.sellers.len()
    }

    pub fn enumerable(&self) -> bool {
        self.buyers.iter().chain(&self.sellers).all(Distribution::enumerable)
    }

    /// Checks every structural invariant, naming the first that fails.
    pub fn validate(&self) -> Result<()> {
        let (m, n) = (self.m(), self.n());
        let mut seen = HashSet::new();
        for &(i, j) in &self.edges {
            if i >= m || j >= n {
                return Err(Error::Validation(format!("edge ({i},{j}) references a missing agent")));
            }
            if !seen.insert((i, j)) {
                return Err(Error::Validation(format!("duplicate edge ({i},{j})")));
            }
        }
        if let FeasibilityFamily::Explicit { matchings, auto_close } = &self.family {
            let mut members: HashSet<Matching> = HashSet::new();
            members.insert(Vec::new());
            for raw in matchings {
                let mm = sorted(raw);
                if mm.windows(2).any(|w| w[0] == w[1]) || !is_matching(&mm) {
                    return Err(Error::Validation(format!("{} is not a matching", fmt_matching(&mm))));
                }
                if let Some(e) = mm.iter().find(|e| !seen.contains(*e)) {
                    return Err(Error::Validation(format!(
                        "{} uses ({},{}) which is not a trade edge",
                        fmt_matching(&mm),
                        e.0,
                        e.1
                    )));
                }
                members.insert(mm);
            }
            if !auto_close {
                for mm in &members {
                    for k in 0..mm.len() {
                        let mut sub = mm.clone();
                        sub.remove(k);
                        if !members.contains(&sub) {
                            return Err(Error::Validation(format!(
                                "family is not downward-closed: {} is listed but {} is not",
                                fmt_matching(mm),
                                fmt_matching(&sub)
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    fn explicit_members(&self) -> Option<HashSet<Matching>> {
        let FeasibilityFamily::Explicit { matchings, auto_close } = &self.family else {
            return None;
        };
        let mut members: HashSet<Matching> = HashSet::new();
        members.insert(Vec::new());
        for raw in matchings {
            let mm = sorted(raw);
            if *auto_close {
                for mask in 0u64..(1u64 << mm.len()) {
                    let sub: Matching = (0..mm.len()).filter(|k| mask >> k & 1 == 1).map(|k| mm[k]).collect();
                    members.insert(sub);
                }
            } else {
                members.insert(mm);
            }
        }
        Some(members)
    }

    /// Feasible matchings in canonical order: sorted edge lists compared
    /// lexicographically, prefixes first, so the empty matching leads.
    pub fn enumerate_feasible(&self) -> Result<Vec<Matching>> {
        self.enumerate_feasible_with_limit(DEFAULT_MATCHING_LIMIT)
    }

    pub fn enumerate_feasible_with_limit(&self, limit: usize) -> Result<Vec<Matching>> {
        self.validate()?;
        let edges: Vec<Edge> = self.edges.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let members = self.explicit_members();
        let cap = match self.family {
            FeasibilityFamily::MaxTrades { k } => k,
            _ => usize::MAX,
        };
        let mut out = Vec::new();
        let mut cur = Vec::new();
        let mut used_b = vec![false; self.m()];
        let mut used_s = vec![false; self.n()];
        struct Dfs<'a> {
            edges: &'a [Edge],
            members: &'a Option<HashSet<Matching>>,
            cap: usize,
            limit: usize,
        }
        fn rec(
            d: &Dfs,
            start: usize,
            cur: &mut Matching,
            used_b: &mut [bool],
            used_s: &mut [bool],
            out: &mut Vec<Matching>,
        ) -> Result<()> {
            if out.len() >= d.limit {
                return Err(Error::Capacity { limit: d.limit });
            }
            out.push(cur.clone());
            if cur.len() >= d.cap {
                return Ok(());
            }
            for k in start..d.edges.len() {
                let (i, j) = d.edges[k];
                if used_b[i] || used_s[j] {
                    continue;
                }
                cur.push((i, j));
                if d.members.as_ref().is_none_or(|s| s.contains(cur)) {
                    used_b[i] = true;
                    used_s[j] = true;
                    rec(d, k + 1, cur, used_b, used_s, out)?;
                    used_b[i] = false;
                    used_s[j] = false;
                }
                cur.pop();
            }
            Ok(())
        }
        let d = Dfs { edges: &edges, members: &members, cap, limit };
        rec(&d, 0, &mut cur, &mut used_b, &mut used_s, &mut out)?;
        Ok(out)
    }

    /// Every point of the product support with its probability. Buyers'
    /// values come first, then sellers' costs.
    pub fn enumerate_profiles(&self) -> Result<impl Iterator<Item = Profile> + '_> {
        if !self.enumerable() {
            return Err(Error::Capability("profile enumeration needs discrete laws".into()));
        }
        let m = self.m();
        let axes: Vec<Vec<(f64, f64)>> = self.buyers.iter().chain(&self.sellers).map(Distribution::atoms).collect();
        Ok(ProductSpace::new(axes).into_iter().map(move |(pt, prob)| Profile {
            values: pt[..m].to_vec(),
            costs: pt[m..].to_vec(),
            prob,
        }))
    }

    pub fn profile_count(&self) -> usize {
        self.buyers.iter().chain(&self.sellers).map(|d| d.support().len().max(1)).product()
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instances always serialize");
        hex::encode(Sha256::digest(&bytes))
    }
}

/// Cartesian product of finite weighted axes.
#[derive(Clone, Debug)]
pub struct ProductSpace {
    axes: Vec<Vec<(f64, f64)>>,
}

impl ProductSpace {
    pub fn new(axes: Vec<Vec<(f64, f64)>>) -> Self {
        ProductSpace { axes }
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl IntoIterator for ProductSpace {
    type Item = (Vec<f64>, f64);
    type IntoIter = ProductIter;

    fn into_iter(self) -> ProductIter {
        let done = self.axes.iter().any(Vec::is_empty);
        let idx = vec![0; self.axes.len()];
        ProductIter { axes: self.axes, idx, done }
    }
}

pub struct ProductIter {
    axes: Vec<Vec<(f64, f64)>>,
    idx: Vec<usize>,
    done: bool,
}

impl Iterator for ProductIter {
    type Item = (Vec<f64>, f64);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut pt = Vec::with_capacity(self.axes.len());
        let mut prob = 1.0;
        for (a, &k) in self.axes.iter().zip(&self.idx) {
            pt.push(a[k].0);
            prob *= a[k].1;
        }
        // Odometer, last axis fastest.
        let mut pos = self.axes.len();
        loop {
            if pos == 0 {
                self.done = true;
                break;
            }
            pos -= 1;
            self.idx[pos] += 1;
            if self.idx[pos] < self.axes[pos].len() {
                break;
            }
            self.idx[pos] = 0;
        }
        Some((pt, prob))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

/// Parses and validates an instance file.
pub fn load_instance(path: impl AsRef<Path>) -> Result<MarketInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_instance(&text)
}

pub fn parse_instance(text: &str) -> Result<MarketInstance> {
    let inst: MarketInstance = serde_json::from_str(text)?;
    inst.validate()?;
    Ok(inst)
}

pub fn save_instance(path: impl AsRef<Path>, instance: &MarketInstance) -> Result<()> {
    save_json(path, instance)
}

pub fn save_report<T: Serialize>(path: impl AsRef<Path>, report: &T) -> Result<()> {
    save_json(path, report)
}

fn save_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(x: f64) -> Distribution {
        Distribution::point_mass(x).unwrap()
    }

    fn inst(m: usize, n: usize, edges: Vec<Edge>, family: FeasibilityFamily) -> MarketInstance {
        MarketInstance { buyers: vec![pm(1.0); m], sellers: vec![pm(0.0); n], edges, family }
    }

    #[test]
    fn validate_examples() {
        assert!(inst(1, 1, vec![(0, 0)], FeasibilityFamily::AllMatchings).validate().is_ok());

        let bad = inst(
            1,
            2,
            vec![(0, 0), (0, 1)],
            FeasibilityFamily::Explicit { matchings: vec![vec![(0, 0), (0, 1)]], auto_close: false },
        );
        let msg = bad.validate().unwrap_err().to_string();
        assert!(msg.contains("not a matching"), "{msg}");

        let open = FeasibilityFamily::Explicit { matchings: vec![vec![(0, 0), (1, 1)], vec![(1, 1)]], auto_close: false };
        let msg = inst(2, 2, vec![(0, 0), (1, 1)], open).validate().unwrap_err().to_string();
        assert!(msg.contains("not downward-closed"), "{msg}");

        let closed = FeasibilityFamily::Explicit { matchings: vec![vec![(0, 0), (1, 1)]], auto_close: true };
        let i = inst(2, 2, vec![(0, 0), (1, 1)], closed);
        assert!(i.validate().is_ok());
        assert_eq!(i.enumerate_feasible().unwrap(), vec![vec![], vec![(0, 0)], vec![(0, 0), (1, 1)], vec![(1, 1)]]);
    }

    #[test]
    fn rejects_out_of_range_edges() {
        let i = inst(1, 1, vec![(0, 1)], FeasibilityFamily::AllMatchings);
        assert!(matches!(i.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn feasible_order_examples() {
        let one = inst(1, 1, vec![(0, 0)], FeasibilityFamily::AllMatchings);
        assert_eq!(one.enumerate_feasible().unwrap(), vec![vec![], vec![(0, 0)]]);

        let star = inst(1, 2, vec![(0, 1), (0, 0)], FeasibilityFamily::AllMatchings);
        assert_eq!(star.enumerate_feasible().unwrap(), vec![vec![], vec![(0, 0)], vec![(0, 1)]]);

        let full = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
        let k1 = inst(2, 2, full.clone(), FeasibilityFamily::MaxTrades { k: 1 });
        assert_eq!(
            k1.enumerate_feasible().unwrap(),
            vec![vec![], vec![(0, 0)], vec![(0, 1)], vec![(1, 0)], vec![(1, 1)]]
        );
        let all = inst(2, 2, full, FeasibilityFamily::AllMatchings);
        assert_eq!(all.enumerate_feasible().unwrap().len(), 7);
        assert!(matches!(all.enumerate_feasible_with_limit(3), Err(Error::Capacity { limit: 3 })));
    }

    #[test]
    fn profile_examples() {
        let b = Distribution::discrete(&[(1.0, 0.5), (3.0, 0.5)]).unwrap();
        let s = Distribution::discrete(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let i = MarketInstance { buyers: vec![b], sellers: vec![s], edges: vec![(0, 0)], family: FeasibilityFamily::AllMatchings };
        let ps: Vec<Profile> = i.enumerate_profiles().unwrap().collect();
        assert_eq!(ps.len(), 4);
        assert!(ps.iter().all(|p| p.prob == 0.25));

        let b3 = Distribution::discrete(&[(0.0, 0.25), (1.0, 0.25), (2.0, 0.5)]).unwrap();
        let b2 = Distribution::discrete(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let i2 = MarketInstance { buyers: vec![b2.clone(), b3], sellers: vec![b2], edges: vec![], family: FeasibilityFamily::AllMatchings };
        let ps: Vec<Profile> = i2.enumerate_profiles().unwrap().collect();
        assert_eq!(ps.len(), 12);
        assert_eq!(ps.iter().map(|p| p.prob).sum::<f64>(), 1.0);
    }

    #[test]
    fn profiles_need_discrete_laws() {
        let mut i = inst(1, 1, vec![(0, 0)], FeasibilityFamily::AllMatchings);
        i.buyers[0] = Distribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(i.enumerate_profiles(), Err(Error::Capability(_))));
    }

    #[test]
    fn unknown_kind_is_a_schema_error() {
        let text = r#"{"buyers":[{"kind":"beta","a":1}],"sellers":[],"edges":[],"family":{"kind":"all"}}"#;
        assert!(matches!(parse_instance(text), Err(Error::Parse(_))));
        let text = r#"{"buyers":[],"sellers":[],"edges":[],"family":{"kind":"everything"}}"#;
        assert!(matches!(parse_instance(text), Err(Error::Parse(_))));
    }
}
