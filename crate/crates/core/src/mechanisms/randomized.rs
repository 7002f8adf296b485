//! Fair coin between GSOM and GBOM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{run_gbom, run_gsom, Market};
use crate::market::Outcome;

/// Deterministic coin keyed by a seed and the report profile, so reruns
/// reproduce the same outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CoinSource {
    pub seed: u64,
}

impl CoinSource {
    pub fn new(seed: u64) -> Self {
        CoinSource { seed }
    }

    /// `true` selects GSOM.
    pub fn flip(&self, b: &[f64], s: &[f64]) -> bool {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for x in b.iter().chain(s) {
            for byte in x.to_bits().to_le_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        ChaCha8Rng::seed_from_u64(self.seed ^ h).random_bool(0.5)
    }
}

pub fn run_randomized(market: &Market, b: &[f64], s: &[f64], coin: &CoinSource) -> Outcome {
    if coin.flip(b, s) {
        run_gsom(market, b, s)
    } else {
        run_gbom(market, b, s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coin_is_reproducible_and_not_constant() {
        let c = CoinSource::new(3);
        assert_eq!(c.flip(&[1.0], &[0.0]), c.flip(&[1.0], &[0.0]));
        let heads = (0..200).filter(|&k| c.flip(&[k as f64], &[0.0])).count();
        assert!(heads > 60 && heads < 140);
    }
}
