//! Built-in reference instances.

use crate::distributions::Distribution;
use crate::market::{FeasibilityFamily, MarketInstance};

/// Buyer `{1, 3}` and seller `{0, 2}`, all atoms equally likely, one edge.
pub fn bilateral_example() -> MarketInstance {
    MarketInstance {
        buyers: vec![Distribution::discrete(&[(1.0, 0.5), (3.0, 0.5)]).expect("valid law")],
        sellers: vec![Distribution::discrete(&[(0.0, 0.5), (2.0, 0.5)]).expect("valid law")],
        edges: vec![(0, 0)],
        family: FeasibilityFamily::AllMatchings,
    }
}

/// Buyer `{2, 3}` and seller `{0, 2}`, equally likely atoms, one edge. The
/// buyer always trades, so pay-your-bid payments are visibly manipulable.
pub fn high_buyer_example() -> MarketInstance {
    MarketInstance {
        buyers: vec![Distribution::discrete(&[(2.0, 0.5), (3.0, 0.5)]).expect("valid law")],
        ..bilateral_example()
    }
}

/// One `U(0, 1)` buyer facing sellers with known costs 0 and 1/2, at most
/// one trade.
pub fn two_seller_star() -> MarketInstance {
    MarketInstance {
        buyers: vec![Distribution::uniform(0.0, 1.0).expect("valid law")],
        sellers: vec![Distribution::point_mass(0.0).expect("valid law"), Distribution::point_mass(0.5).expect("valid law")],
        edges: vec![(0, 0), (0, 1)],
        family: FeasibilityFamily::Explicit { matchings: vec![vec![(0, 0)], vec![(0, 1)]], auto_close: false },
    }
}

/// The reports used with [`two_seller_star`]: bid 1, costs 0 and 1/2.
pub fn two_seller_star_reports() -> (Vec<f64>, Vec<f64>) {
    (vec![1.0], vec![0.0, 0.5])
}
