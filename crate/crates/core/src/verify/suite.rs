//! The full property suite on one instance or many.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::identities::{check_identities, IdentityConfig};
use super::incentives::{check_incentives, CheckKind};
use super::report::CheckReport;
use crate::error::Result;
use crate::market::MarketInstance;
use crate::mechanisms::{Market, MechanismConfig, MechanismId};

/// The incentive properties each mechanism is expected to satisfy.
pub fn incentive_plan() -> Vec<(MechanismId, Vec<CheckKind>)> {
    use CheckKind::*;
    vec![
        (MechanismId::Gsom, vec![DsicB, DsicS, Ir, WbbExAnte]),
        (MechanismId::Gbom, vec![DsicB, DsicS, Ir, WbbExAnte]),
        (MechanismId::GsomBic, vec![DsicB, BicS, Ir, WbbExPost]),
        (MechanismId::GbomBic, vec![DsicS, BicB, Ir, WbbExPost]),
        (MechanismId::MaS, vec![DsicB, Ir]),
        (MechanismId::MaB, vec![DsicS, Ir]),
    ]
}

pub fn incentive_checks(market: &Market, cfg: &IdentityConfig) -> Result<Vec<CheckReport>> {
    let mut out = Vec::new();
    for (id, kinds) in incentive_plan() {
        let mech = MechanismConfig { q_rule: cfg.q_rule, ..MechanismConfig::new(id).with_lambda(cfg.lambda) };
        for k in kinds {
            out.push(check_incentives(market, &mech, k, cfg.tol)?);
        }
    }
    Ok(out)
}

pub fn check_market(market: &Market, cfg: &IdentityConfig) -> Result<Vec<CheckReport>> {
    let mut out = incentive_checks(market, cfg)?;
    out.extend(check_identities(market, cfg)?);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub index: usize,
    pub instance_hash: String,
    pub checks: Vec<CheckReport>,
}

impl InstanceResult {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs `f` on every instance in parallel; results keep input order.
pub fn map_suite<T: Send>(
    instances: &[MarketInstance],
    f: impl Fn(usize, &Market) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    instances
        .par_iter()
        .enumerate()
        .map(|(k, inst)| f(k, &Market::new(inst.clone())?))
        .collect()
}

pub fn run_suite(instances: &[MarketInstance], cfg: &IdentityConfig) -> Result<Vec<InstanceResult>> {
    map_suite(instances, |index, mk| {
        Ok(InstanceResult { index, instance_hash: mk.instance.hash(), checks: check_market(mk, cfg)? })
    })
}
