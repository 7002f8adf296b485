use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use gftlab::distributions::{Bound, Distribution};
use gftlab::generate::{random_discrete, suite};
use gftlab::mechanisms::{Market, Mechanism, MechanismConfig, MechanismId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn law(seed: u64, atoms: usize) -> Distribution {
    random_discrete(&mut ChaCha8Rng::seed_from_u64(seed), atoms, 0.5, 11, 1.0)
}

fn market(seed: u64) -> Market {
    Market::new(suite(seed, 1).pop().unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantile_and_cdf_form_a_galois_connection(seed in any::<u64>(), atoms in 1usize..=5, q in 0.001f64..=1.0) {
        let d = law(seed, atoms);
        let x = d.quantile(q).unwrap();
        prop_assert!(d.cdf(x) >= q);
        for &s in d.support() {
            prop_assert!(d.quantile(d.cdf(s)).unwrap() <= s);
        }
    }

    #[test]
    fn censoring_twice_takes_the_tighter_cap(seed in any::<u64>(), a in -1.0f64..6.0, b in -1.0f64..6.0) {
        let d = law(seed, 4);
        let twice = d.censor(a).censor(Bound::at(b, true));
        let once = d.censor(a.min(b));
        for k in 0..=24 {
            let x = k as f64 * 0.25;
            prop_assert_eq!(twice.cdf(x), once.cdf(x));
        }
    }

    #[test]
    fn virtual_values_are_monotone(seed in any::<u64>(), atoms in 1usize..=6) {
        let d = law(seed, atoms);
        prop_assert!(d.phi_atoms().windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(d.psi_atoms().windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(d.psi_atoms()[0], d.min_support());
        prop_assert_eq!(*d.phi_atoms().last().unwrap(), d.max_support());
    }

    #[test]
    fn families_are_downward_closed(seed in any::<u64>()) {
        let mk = market(seed);
        let all = mk.feasible.matchings();
        prop_assert!(all[0].is_empty());
        prop_assert!(all.windows(2).all(|w| w[0] < w[1]), "canonical order is lexicographic, prefixes first");
        for m in all {
            for drop in 0..m.len() {
                let mut sub = m.clone();
                sub.remove(drop);
                prop_assert!(all.contains(&sub));
            }
        }
    }

    #[test]
    fn profile_probabilities_sum_to_one_exactly(seed in any::<u64>()) {
        let mk = market(seed);
        let mut total = BigRational::zero();
        for p in mk.instance.enumerate_profiles().unwrap() {
            let mut prob = BigRational::one();
            for (d, x) in mk.instance.buyers.iter().chain(&mk.instance.sellers).zip(p.values.iter().chain(&p.costs)) {
                let k = d.support().iter().position(|s| s == x).unwrap();
                prob *= BigRational::from_float(d.probs()[k]).unwrap();
            }
            total += prob;
        }
        prop_assert_eq!(total, BigRational::from_integer(BigInt::from(1)));
    }

    #[test]
    fn mwm_matches_brute_force(seed in any::<u64>()) {
        let mk = market(seed);
        for p in mk.instance.enumerate_profiles().unwrap().take(50) {
            let k = mk.feasible.mwm(&p.values, &p.costs);
            let best = (0..mk.feasible.len()).map(|x| mk.feasible.value(x, &p.values, &p.costs)).fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(mk.feasible.value(k, &p.values, &p.costs), best);
            let first = (0..mk.feasible.len()).find(|&x| mk.feasible.value(x, &p.values, &p.costs) == best).unwrap();
            prop_assert_eq!(k, first);
        }
    }

    #[test]
    fn outcomes_respect_accounting(seed in any::<u64>()) {
        let mk = market(seed);
        for id in MechanismId::ALL {
            let mech = MechanismConfig::new(id).with_seed(seed);
            for p in mk.instance.enumerate_profiles().unwrap().take(30) {
                let o = mech.run(&mk, &p.values, &p.costs);
                prop_assert!(mk.feasible.matchings().contains(&o.matching));
                let gft: f64 = o.matching.iter().map(|&(i, j)| p.values[i] - p.costs[j]).sum();
                let sum = o.buyer_utilities.iter().sum::<f64>() + o.seller_utilities.iter().sum::<f64>() + o.budget;
                prop_assert!((gft - sum).abs() <= 1e-9 * (1.0 + gft.abs()));
                for i in 0..mk.m() {
                    if o.partner_of_buyer(i).is_none() {
                        prop_assert_eq!(o.buyer_payments[i], 0.0);
                    }
                }
                for j in 0..mk.n() {
                    if o.partner_of_seller(j).is_none() {
                        prop_assert_eq!(o.seller_payments[j], 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn randomized_coin_is_reproducible(seed in any::<u64>()) {
        let mk = market(seed);
        let mech = MechanismConfig::new(MechanismId::Randomized).with_seed(seed);
        for p in mk.instance.enumerate_profiles().unwrap().take(10) {
            prop_assert_eq!(mech.run(&mk, &p.values, &p.costs), mech.run(&mk, &p.values, &p.costs));
        }
    }
}
