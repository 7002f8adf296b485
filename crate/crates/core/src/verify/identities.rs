//! Welfare, profit and payment identities that hold on every instance.

use serde::{Deserialize, Serialize};

use super::exact::decomposition;
use super::incentives::interim_transfers;
use super::metrics::{expected_metrics, first_best_gft};
use super::report::{CheckReport, Tolerance, Witness};
use super::APPROX;
use crate::bilateral::{bilateral_profits, bt_gft, QRule};
use crate::error::{Error, Result};
use crate::market::MarketInstance;
use crate::matching::Agent;
use crate::mechanisms::{ma_edges, Market, MechanismConfig, MechanismId, Side};

#[derive(Clone, Copy, Debug)]
pub struct IdentityConfig {
    pub lambda: f64,
    pub q_rule: QRule,
    pub tol: Tolerance,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        let c = MechanismConfig::new(MechanismId::MaS);
        IdentityConfig { lambda: c.lambda, q_rule: c.q_rule, tol: Tolerance::default() }
    }
}

impl IdentityConfig {
    fn mech(&self, id: MechanismId) -> MechanismConfig {
        MechanismConfig { q_rule: self.q_rule, ..MechanismConfig::new(id).with_lambda(self.lambda) }
    }
}

fn bound_check(name: &str, lhs: f64, rhs: f64, tol: Tolerance) -> CheckReport {
    let w = (!tol.geq(lhs, rhs)).then(|| Witness::aggregate(lhs, rhs));
    CheckReport::from_witness(name, tol.abs, 1, w)
}

/// Per-profile profit of the Meta-Auction's collecting side against the
/// standalone censored rule, on every pair of the raw-weight matching.
fn ma_dominance(market: &Market, side: Side, cfg: &IdentityConfig) -> Result<CheckReport> {
    let name = match side {
        Side::Sellers => "ma_s/seller_profit_dominance",
        Side::Buyers => "ma_b/buyer_profit_dominance",
    };
    let mut cases = 0;
    for p in market.instance.enumerate_profiles()? {
        let (v, c) = (&p.values, &p.costs);
        for e in ma_edges(market, v, c, side, cfg.lambda, cfg.q_rule) {
            let (i, j) = e.edge;
            cases += 1;
            let (ma, bt) = match (side, e.bt.trade) {
                (_, false) => (0.0, 0.0),
                (Side::Sellers, true) => (e.threshold - c[j], e.bt.buyer_price - c[j]),
                (Side::Buyers, true) => (v[i] - e.threshold, v[i] - e.bt.seller_price),
            };
            if !cfg.tol.geq(ma, bt) {
                let agent = Some(match side {
                    Side::Sellers => Agent::Seller(j),
                    Side::Buyers => Agent::Buyer(i),
                });
                let w = Witness { values: p.values, costs: p.costs, agent, deviation: None, lhs: ma, rhs: bt };
                return Ok(CheckReport::failed(name, cfg.tol.abs, cases, w));
            }
        }
    }
    Ok(CheckReport::passed(name, cfg.tol.abs, cases))
}

/// Interim transfers of one side agree between a mechanism and its
/// conditional-expectation variant.
fn interim_equality(market: &Market, a: MechanismId, b: MechanismId, side: Side, cfg: &IdentityConfig) -> Result<CheckReport> {
    let (ma, mb) = (cfg.mech(a), cfg.mech(b));
    let name = format!("{}~{}/interim_{}_transfer", a, b, if side == Side::Sellers { "seller" } else { "buyer" });
    let list: Vec<Agent> = match side {
        Side::Sellers => (0..market.n()).map(Agent::Seller).collect(),
        Side::Buyers => (0..market.m()).map(Agent::Buyer).collect(),
    };
    let mut cases = 0;
    for agent in list {
        let ta = interim_transfers(market, &ma, agent)?;
        let tb = interim_transfers(market, &mb, agent)?;
        for (&(z, x), &(_, y)) in ta.iter().zip(&tb) {
            cases += 1;
            if !cfg.tol.close(x, y) {
                let n = market.m() + market.n();
                let mut full = vec![0.0; n];
                full[match agent {
                    Agent::Buyer(i) => i,
                    Agent::Seller(j) => market.m() + j,
                }] = z;
                let (values, costs) = (full[..market.m()].to_vec(), full[market.m()..].to_vec());
                let w = Witness { values, costs, agent: Some(agent), deviation: None, lhs: x, rhs: y };
                return Ok(CheckReport::failed(name, cfg.tol.abs, cases, w));
            }
        }
    }
    Ok(CheckReport::passed(name, cfg.tol.abs, cases))
}

/// Both sides of the bilateral bound on a single-edge instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingleEdgeBound {
    /// `½ E[π_s(MultiQuantile) + π_b(PostQuantile)]`.
    pub profit: f64,
    /// `E_v[∫ (v - F⁻¹(q))⁺ dq]`.
    pub gft: f64,
}

impl SingleEdgeBound {
    pub fn ratio(&self) -> Option<f64> {
        (self.gft > 0.0).then(|| self.profit / self.gft)
    }

    pub fn holds(&self, tol: Tolerance) -> bool {
        tol.geq(self.profit, self.gft / APPROX)
    }
}

pub fn is_single_edge(inst: &MarketInstance) -> bool {
    inst.m() == 1 && inst.n() == 1 && inst.edges == [(0, 0)]
}

/// The bilateral rules on the seller's uncensored law, averaged over the
/// buyer's value.
pub fn single_edge_bound(inst: &MarketInstance, lambda: f64, q_rule: QRule) -> Result<SingleEdgeBound> {
    if !is_single_edge(inst) {
        return Err(Error::Contract("the single-edge bound needs one buyer, one seller and their edge".into()));
    }
    if !inst.enumerable() {
        return Err(Error::Capability("the single-edge bound needs discrete laws".into()));
    }
    let f = inst.sellers[0].censor(f64::INFINITY);
    let mut profit = 0.0;
    let mut gft = 0.0;
    for (v, p) in inst.buyers[0].atoms() {
        let bp = bilateral_profits(&f, v, lambda, q_rule)?;
        profit += p * 0.5 * (bp.seller + bp.buyer);
        gft += p * bt_gft(&f, v);
    }
    Ok(SingleEdgeBound { profit, gft })
}

/// The welfare decomposition, the approximation bound with its
/// Meta-Auction chain, profit dominance, interim equalities and, on
/// single-edge instances, the bilateral bound.
pub fn check_identities(market: &Market, cfg: &IdentityConfig) -> Result<Vec<CheckReport>> {
    let tol = cfg.tol;
    let mut out = Vec::new();

    let d = decomposition(market)?;
    let dw = (!d.holds()).then(|| Witness::aggregate(d.gft_star, d.edge_sum));
    out.push(CheckReport::from_witness("gft_decomposition", if d.certified { 0.0 } else { 1e-12 }, 1, dw));

    let star = first_best_gft(market)?;
    let gsom = expected_metrics(market, &cfg.mech(MechanismId::Gsom))?;
    let gbom = expected_metrics(market, &cfg.mech(MechanismId::Gbom))?;
    let ma_s = expected_metrics(market, &cfg.mech(MechanismId::MaS))?;
    let ma_b = expected_metrics(market, &cfg.mech(MechanismId::MaB))?;
    let main = 0.5 * (gsom.seller_profit() + gbom.buyer_profit());
    out.push(bound_check("approximation_bound", main, star / APPROX, tol));
    let chain = 0.5 * (ma_s.seller_profit() + ma_b.buyer_profit());
    out.push(bound_check("approximation_bound/meta_auction_chain", chain, star / APPROX, tol));
    out.push(bound_check("gsom_dominates_ma_s", gsom.seller_profit(), ma_s.seller_profit(), tol));
    out.push(bound_check("gbom_dominates_ma_b", gbom.buyer_profit(), ma_b.buyer_profit(), tol));

    out.push(ma_dominance(market, Side::Sellers, cfg)?);
    out.push(ma_dominance(market, Side::Buyers, cfg)?);

    out.push(interim_equality(market, MechanismId::Gsom, MechanismId::GsomBic, Side::Sellers, cfg)?);
    out.push(interim_equality(market, MechanismId::Gbom, MechanismId::GbomBic, Side::Buyers, cfg)?);

    if is_single_edge(&market.instance) {
        let b = single_edge_bound(&market.instance, cfg.lambda, cfg.q_rule)?;
        out.push(bound_check("single_edge_bound", b.profit, b.gft / APPROX, tol));
    }
    Ok(out)
}
