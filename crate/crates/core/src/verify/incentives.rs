//! Truthfulness, participation and budget checks by exhaustive search
//! over a deviation grid.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{CheckReport, Tolerance, Witness};
use crate::error::{Error, Result};
use crate::market::ProductSpace;
use crate::matching::Agent;
use crate::mechanisms::{Market, Mechanism};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    DsicB,
    DsicS,
    BicB,
    BicS,
    Ir,
    WbbExPost,
    WbbExAnte,
}

impl CheckKind {
    pub const ALL: [CheckKind; 7] = [
        CheckKind::DsicB,
        CheckKind::DsicS,
        CheckKind::BicB,
        CheckKind::BicS,
        CheckKind::Ir,
        CheckKind::WbbExPost,
        CheckKind::WbbExAnte,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CheckKind::DsicB => "dsic_b",
            CheckKind::DsicS => "dsic_s",
            CheckKind::BicB => "bic_b",
            CheckKind::BicS => "bic_s",
            CheckKind::Ir => "ir",
            CheckKind::WbbExPost => "wbb_expost",
            CheckKind::WbbExAnte => "wbb_exante",
        }
    }
}

impl fmt::Display for CheckKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CheckKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CheckKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Contract(format!("unknown check {s:?}")))
    }
}

/// Every support point, the midpoints between consecutive ones, and the
/// probes 0 and `max + 1`.
pub fn deviation_grid(market: &Market) -> Vec<f64> {
    let inst = &market.instance;
    let mut pts: Vec<f64> = inst.buyers.iter().chain(&inst.sellers).flat_map(|d| d.support().to_vec()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mids: Vec<f64> = pts.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let top = pts.last().copied().unwrap_or(0.0);
    pts.extend(mids);
    pts.push(0.0);
    pts.push(top + 1.0);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Allocation probability and expected transfer of one agent.
/// The transfer is the payment for a buyer and the receipt for a seller.
fn response(market: &Market, mech: &dyn Mechanism, b: &[f64], s: &[f64], agent: Agent) -> (f64, f64) {
    let mut x = 0.0;
    let mut t = 0.0;
    for (w, o) in mech.branches(market, b, s) {
        match agent {
            Agent::Buyer(i) => {
                if o.partner_of_buyer(i).is_some() {
                    x += w;
                }
                t += w * o.buyer_payments[i];
            }
            Agent::Seller(j) => {
                if o.partner_of_seller(j).is_some() {
                    x += w;
                }
                t += w * o.seller_payments[j];
            }
        }
    }
    (x, t)
}

fn utility(agent: Agent, ty: f64, (x, t): (f64, f64)) -> f64 {
    match agent {
        Agent::Buyer(_) => x * ty - t,
        Agent::Seller(_) => t - x * ty,
    }
}

fn agents(market: &Market, kind: CheckKind) -> Vec<Agent> {
    match kind {
        CheckKind::DsicB | CheckKind::BicB => (0..market.m()).map(Agent::Buyer).collect(),
        CheckKind::DsicS | CheckKind::BicS => (0..market.n()).map(Agent::Seller).collect(),
        _ => Vec::new(),
    }
}

fn slot(market: &Market, agent: Agent) -> usize {
    match agent {
        Agent::Buyer(i) => i,
        Agent::Seller(j) => market.m() + j,
    }
}

fn law(market: &Market, agent: Agent) -> &crate::distributions::Distribution {
    match agent {
        Agent::Buyer(i) => &market.instance.buyers[i],
        Agent::Seller(j) => &market.instance.sellers[j],
    }
}

fn axes(market: &Market) -> Vec<Vec<(f64, f64)>> {
    let inst = &market.instance;
    inst.buyers.iter().chain(&inst.sellers).map(|d| d.atoms()).collect()
}

fn split(market: &Market, pt: &[f64]) -> (Vec<f64>, Vec<f64>) {
    (pt[..market.m()].to_vec(), pt[market.m()..].to_vec())
}

/// Responses at every grid report, for one profile of the other agents.
fn responses_at(market: &Market, mech: &dyn Mechanism, pt: &[f64], agent: Agent, grid: &[f64]) -> Vec<(f64, f64)> {
    let k = slot(market, agent);
    let mut pt = pt.to_vec();
    grid.iter()
        .map(|&z| {
            pt[k] = z;
            let (b, s) = split(market, &pt);
            response(market, mech, &b, &s, agent)
        })
        .collect()
}

/// Interim responses at every grid report, others truthful.
fn interim_responses(market: &Market, mech: &dyn Mechanism, agent: Agent, grid: &[f64]) -> Vec<(f64, f64)> {
    let mut ax = axes(market);
    ax[slot(market, agent)] = vec![(0.0, 1.0)];
    let mut acc = vec![(0.0, 0.0); grid.len()];
    for (pt, prob) in ProductSpace::new(ax) {
        for (a, r) in acc.iter_mut().zip(responses_at(market, mech, &pt, agent, grid)) {
            a.0 += prob * r.0;
            a.1 += prob * r.1;
        }
    }
    acc
}

/// Interim expected transfer at each support report of `agent`.
pub fn interim_transfers(market: &Market, mech: &dyn Mechanism, agent: Agent) -> Result<Vec<(f64, f64)>> {
    if !market.instance.enumerable() {
        return Err(Error::Capability("interim transfers need discrete laws".into()));
    }
    let grid = law(market, agent).support().to_vec();
    let r = interim_responses(market, mech, agent, &grid);
    Ok(grid.into_iter().zip(r).map(|(z, (_, t))| (z, t)).collect())
}

fn grid_index(grid: &[f64], z: f64) -> usize {
    grid.iter().position(|&g| g == z).expect("support points are on the grid")
}

/// Runs one incentive, participation or budget check. Deterministic
/// mechanisms are checked per profile; randomized ones in expectation over
/// their branches.
pub fn check_incentives(market: &Market, mech: &dyn Mechanism, kind: CheckKind, tol: Tolerance) -> Result<CheckReport> {
    if !market.instance.enumerable() {
        return Err(Error::Capability("incentive checks need discrete laws".into()));
    }
    let name = format!("{}/{}", mech.name(), kind);
    let tv = tol.abs;
    let grid = deviation_grid(market);
    let mut cases = 0u64;
    match kind {
        CheckKind::DsicB | CheckKind::DsicS => {
            for agent in agents(market, kind) {
                let mut ax = axes(market);
                ax[slot(market, agent)] = vec![(0.0, 1.0)];
                let types = law(market, agent).support().to_vec();
                for (pt, _) in ProductSpace::new(ax) {
                    let r = responses_at(market, mech, &pt, agent, &grid);
                    for &ty in &types {
                        let truth = utility(agent, ty, r[grid_index(&grid, ty)]);
                        for (&z, &rz) in grid.iter().zip(&r) {
                            cases += 1;
                            let dev = utility(agent, ty, rz);
                            if !tol.geq(truth, dev) {
                                let mut full = pt.clone();
                                full[slot(market, agent)] = ty;
                                let (values, costs) = split(market, &full);
                                let w = Witness { values, costs, agent: Some(agent), deviation: Some(z), lhs: truth, rhs: dev };
                                return Ok(CheckReport::failed(name, tv, cases, w));
                            }
                        }
                    }
                }
            }
        }
        CheckKind::BicB | CheckKind::BicS => {
            for agent in agents(market, kind) {
                let r = interim_responses(market, mech, agent, &grid);
                for ty in law(market, agent).support().to_vec() {
                    let truth = utility(agent, ty, r[grid_index(&grid, ty)]);
                    for (&z, &rz) in grid.iter().zip(&r) {
                        cases += 1;
                        let dev = utility(agent, ty, rz);
                        if !tol.geq(truth, dev) {
                            let mut full = vec![0.0; market.m() + market.n()];
                            full[slot(market, agent)] = ty;
                            let (values, costs) = split(market, &full);
                            let w = Witness { values, costs, agent: Some(agent), deviation: Some(z), lhs: truth, rhs: dev };
                            return Ok(CheckReport::failed(name, tv, cases, w));
                        }
                    }
                }
            }
        }
        CheckKind::Ir => {
            for p in market.instance.enumerate_profiles()? {
                let every = (0..market.m()).map(Agent::Buyer).chain((0..market.n()).map(Agent::Seller));
                for agent in every {
                    cases += 1;
                    let ty = match agent {
                        Agent::Buyer(i) => p.values[i],
                        Agent::Seller(j) => p.costs[j],
                    };
                    let u = utility(agent, ty, response(market, mech, &p.values, &p.costs, agent));
                    if !tol.geq(u, 0.0) {
                        let w = Witness { values: p.values, costs: p.costs, agent: Some(agent), deviation: None, lhs: u, rhs: 0.0 };
                        return Ok(CheckReport::failed(name, tv, cases, w));
                    }
                }
            }
        }
        CheckKind::WbbExPost => {
            for p in market.instance.enumerate_profiles()? {
                cases += 1;
                let worst = worst_budget(market, mech, &p.values, &p.costs);
                if !tol.geq(worst, 0.0) {
                    let w = Witness { values: p.values, costs: p.costs, agent: None, deviation: None, lhs: worst, rhs: 0.0 };
                    return Ok(CheckReport::failed(name, tv, cases, w));
                }
            }
        }
        CheckKind::WbbExAnte => {
            let e = expected_budget(market, mech)?;
            cases += 1;
            if !tol.geq(e, 0.0) {
                return Ok(CheckReport::failed(name, tv, cases, Witness::aggregate(e, 0.0)));
            }
        }
    }
    Ok(CheckReport::passed(name, tv, cases))
}

fn worst_budget(market: &Market, mech: &dyn Mechanism, b: &[f64], s: &[f64]) -> f64 {
    mech.branches(market, b, s).iter().map(|(_, o)| o.budget).fold(f64::INFINITY, f64::min)
}

fn expected_budget(market: &Market, mech: &dyn Mechanism) -> Result<f64> {
    let mut e = 0.0;
    for p in market.instance.enumerate_profiles()? {
        e += p.prob * mech.branches(market, &p.values, &p.costs).iter().map(|(w, o)| w * o.budget).sum::<f64>();
    }
    Ok(e)
}

/// Recomputes `(lhs, rhs)` of a witness produced by [`check_incentives`].
pub fn replay(market: &Market, mech: &dyn Mechanism, kind: CheckKind, w: &Witness) -> Result<(f64, f64)> {
    let need = |x: Option<f64>| x.ok_or_else(|| Error::Contract("witness lacks a field".into()));
    let mut full: Vec<f64> = w.values.iter().chain(&w.costs).copied().collect();
    match kind {
        CheckKind::DsicB | CheckKind::DsicS => {
            let agent = w.agent.ok_or_else(|| Error::Contract("witness lacks an agent".into()))?;
            let k = slot(market, agent);
            let ty = full[k];
            let truth = responses_at(market, mech, &full, agent, &[ty])[0];
            full[k] = need(w.deviation)?;
            let dev = responses_at(market, mech, &full, agent, &[full[k]])[0];
            Ok((utility(agent, ty, truth), utility(agent, ty, dev)))
        }
        CheckKind::BicB | CheckKind::BicS => {
            let agent = w.agent.ok_or_else(|| Error::Contract("witness lacks an agent".into()))?;
            let ty = full[slot(market, agent)];
            let grid = deviation_grid(market);
            let r = interim_responses(market, mech, agent, &grid);
            let z = grid_index(&grid, need(w.deviation)?);
            Ok((utility(agent, ty, r[grid_index(&grid, ty)]), utility(agent, ty, r[z])))
        }
        CheckKind::Ir => {
            let agent = w.agent.ok_or_else(|| Error::Contract("witness lacks an agent".into()))?;
            let ty = full[slot(market, agent)];
            Ok((utility(agent, ty, response(market, mech, &w.values, &w.costs, agent)), 0.0))
        }
        CheckKind::WbbExPost => Ok((worst_budget(market, mech, &w.values, &w.costs), 0.0)),
        CheckKind::WbbExAnte => Ok((expected_budget(market, mech)?, 0.0)),
    }
}
