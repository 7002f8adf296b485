//! The mechanisms: GSOM, GBOM, their BIC variants, the two Meta-Auction
//! sides, and the fair coin between GSOM and GBOM.

mod meta;
mod randomized;
mod virtual_surplus;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use meta::{ma_edges, run_meta_auction, MaEdge, Side};
pub use randomized::{run_randomized, CoinSource};
pub use virtual_surplus::{run_gbom, run_gbom_bic, run_gsom, run_gsom_bic, FirstPriceGsom};

use crate::bilateral::{profit_max_quantile, QRule, DEFAULT_LAMBDA};
use crate::error::{Error, Result};
use crate::market::{MarketInstance, Outcome};
use crate::matching::FeasibleSet;

/// An instance with its feasible family enumerated once.
#[derive(Clone, Debug)]
pub struct Market {
    pub instance: MarketInstance,
    pub feasible: FeasibleSet,
}

impl Market {
    pub fn new(instance: MarketInstance) -> Result<Market> {
        let feasible = FeasibleSet::new(&instance)?;
        Ok(Market { instance, feasible })
    }

    pub fn m(&self) -> usize {
        self.instance.m()
    }

    pub fn n(&self) -> usize {
        self.instance.n()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MechanismId {
    Gsom,
    Gbom,
    GsomBic,
    GbomBic,
    MaB,
    MaS,
    Randomized,
}

impl MechanismId {
    pub const ALL: [MechanismId; 7] = [
        MechanismId::Gsom,
        MechanismId::Gbom,
        MechanismId::GsomBic,
        MechanismId::GbomBic,
        MechanismId::MaB,
        MechanismId::MaS,
        MechanismId::Randomized,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            MechanismId::Gsom => "gsom",
            MechanismId::Gbom => "gbom",
            MechanismId::GsomBic => "gsom_bic",
            MechanismId::GbomBic => "gbom_bic",
            MechanismId::MaB => "ma_b",
            MechanismId::MaS => "ma_s",
            MechanismId::Randomized => "randomized",
        }
    }
}

impl fmt::Display for MechanismId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MechanismId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MechanismId::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Contract(format!("unknown mechanism {s:?}")))
    }
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_rule() -> QRule {
    profit_max_quantile
}

/// Mechanism selection plus parameters.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub mechanism: MechanismId,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
    /// Seller-quantile rule for the buyer-proposing subroutine.
    #[serde(skip, default = "default_rule")]
    pub q_rule: QRule,
}

impl MechanismConfig {
    pub fn new(mechanism: MechanismId) -> Self {
        MechanismConfig { mechanism, lambda: DEFAULT_LAMBDA, seed: 0, q_rule: profit_max_quantile }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::Contract(format!("lambda {} outside (0, 1)", self.lambda)));
        }
        Ok(())
    }
}

/// A direct mechanism on a prepared market.
pub trait Mechanism: Sync {
    fn name(&self) -> String;

    fn run(&self, market: &Market, b: &[f64], s: &[f64]) -> Outcome;

    /// Outcomes with their probabilities. Deterministic mechanisms have a
    /// single branch.
    fn branches(&self, market: &Market, b: &[f64], s: &[f64]) -> Vec<(f64, Outcome)> {
        vec![(1.0, self.run(market, b, s))]
    }
}

impl Mechanism for MechanismConfig {
    fn name(&self) -> String {
        self.mechanism.to_string()
    }

    fn run(&self, market: &Market, b: &[f64], s: &[f64]) -> Outcome {
        match self.mechanism {
            MechanismId::Gsom => run_gsom(market, b, s),
            MechanismId::Gbom => run_gbom(market, b, s),
            MechanismId::GsomBic => run_gsom_bic(market, b, s),
            MechanismId::GbomBic => run_gbom_bic(market, b, s),
            MechanismId::MaB => run_meta_auction(market, b, s, Side::Buyers, self.lambda, self.q_rule),
            MechanismId::MaS => run_meta_auction(market, b, s, Side::Sellers, self.lambda, self.q_rule),
            MechanismId::Randomized => run_randomized(market, b, s, &CoinSource::new(self.seed)),
        }
    }

    fn branches(&self, market: &Market, b: &[f64], s: &[f64]) -> Vec<(f64, Outcome)> {
        match self.mechanism {
            MechanismId::Randomized => vec![(0.5, run_gsom(market, b, s)), (0.5, run_gbom(market, b, s))],
            _ => vec![(1.0, self.run(market, b, s))],
        }
    }
}
