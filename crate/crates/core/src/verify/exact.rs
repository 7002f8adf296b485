//! The welfare decomposition in rational arithmetic.
//!
//! Matching decisions are made in `f64`; every accounted quantity is the
//! exact rational value of its `f64` inputs. When all inputs are dyadic
//! and small the `f64` decisions are themselves exact, and the identity is
//! certified with tolerance 0.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::mechanisms::Market;

fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite input")
}

/// Multiples of 2^-10 below 2^20 add exactly in `f64` at desk scale.
fn dyadic(x: f64) -> bool {
    x.abs() <= (1u64 << 20) as f64 && (x * 1024.0).fract() == 0.0
}

fn rational_axes(laws: &[&Distribution]) -> Vec<Vec<(f64, BigRational)>> {
    laws.iter().map(|d| d.atoms().into_iter().map(|(x, p)| (x, rat(p))).collect()).collect()
}

/// Odometer over rational-weighted axes.
fn for_each_point(axes: &[Vec<(f64, BigRational)>], mut f: impl FnMut(&[f64], &BigRational)) {
    if axes.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0; axes.len()];
    let mut pt: Vec<f64> = axes.iter().map(|a| a[0].0).collect();
    loop {
        let mut prob = BigRational::from_integer(BigInt::from(1));
        for (a, &k) in axes.iter().zip(&idx) {
            prob *= &a[k].1;
        }
        f(&pt, &prob);
        let mut pos = axes.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < axes[pos].len() {
                pt[pos] = axes[pos][idx[pos]].0;
                break;
            }
            idx[pos] = 0;
            pt[pos] = axes[pos][0].0;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub gft_star: f64,
    pub edge_sum: f64,
    /// `|GFT* - Σ E[GFT_ij]|`, computed in rationals.
    pub gap: f64,
    /// True when the `f64` decisions are provably exact, so `gap` must be 0.
    pub certified: bool,
}

impl Decomposition {
    pub fn holds(&self) -> bool {
        if self.certified {
            self.gap == 0.0
        } else {
            self.gap <= 1e-12
        }
    }
}

/// `GFT*` against `Σ_{(i,j)∈E} E[GFT_ij]`, where `GFT_ij` averages the
/// bilateral surplus of buyer `i` against seller `j`'s law censored at the
/// raw-weight critical cost.
pub fn decomposition(market: &Market) -> Result<Decomposition> {
    let inst = &market.instance;
    if !inst.enumerable() {
        return Err(Error::Capability("the decomposition check needs discrete laws".into()));
    }
    let m = inst.m();
    let laws: Vec<&Distribution> = inst.buyers.iter().chain(&inst.sellers).collect();
    let certified = laws.iter().all(|d| d.atoms().iter().all(|&(x, p)| dyadic(x) && dyadic(p * 1024.0)));
    let fs = &market.feasible;

    let mut star = BigRational::zero();
    for_each_point(&rational_axes(&laws), |pt, prob| {
        let (b, s) = pt.split_at(m);
        let k = fs.mwm(b, s);
        let mut v = BigRational::zero();
        for &(i, j) in &fs.matchings()[k] {
            v += rat(b[i]) - rat(s[j]);
        }
        star += v * prob;
    });

    let mut sum = BigRational::zero();
    for &(i, j) in &inst.edges {
        let mut axes = rational_axes(&laws);
        axes[m + j] = vec![(0.0, BigRational::from_integer(BigInt::from(1)))];
        let seller = &inst.sellers[j];
        for_each_point(&axes, |pt, prob| {
            let (b, s) = pt.split_at(m);
            let cap = fs.decompose(b, s, i, j).seller_cap(b[i]);
            let mut g = BigRational::zero();
            for (x, p) in seller.atoms() {
                if cap.admits_below(x) && b[i] > x {
                    g += rat(p) * (rat(b[i]) - rat(x));
                }
            }
            sum += g * prob;
        });
    }
    let gap = (&star - &sum).abs();
    Ok(Decomposition {
        gft_star: star.to_f64().unwrap_or(f64::NAN),
        edge_sum: sum.to_f64().unwrap_or(f64::NAN),
        gap: gap.to_f64().unwrap_or(f64::INFINITY),
        certified,
    })
}
