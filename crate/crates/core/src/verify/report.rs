//! Check results and report files.

use serde::{Deserialize, Serialize};

use crate::matching::Agent;

/// Evidence for a failed check. For per-profile checks `values`/`costs`
/// hold the true types; for interim checks only the agent's own slot is
/// meaningful; for expectation checks both are empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub values: Vec<f64>,
    pub costs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<Agent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

impl Witness {
    pub fn aggregate(lhs: f64, rhs: f64) -> Witness {
        Witness { values: Vec::new(), costs: Vec::new(), agent: None, deviation: None, lhs, rhs }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub tolerance: f64,
    /// Number of elementary comparisons behind the verdict.
    #[serde(default)]
    pub cases: u64,
}

impl CheckReport {
    pub fn passed(name: impl Into<String>, tolerance: f64, cases: u64) -> Self {
        CheckReport { name: name.into(), pass: true, witness: None, tolerance, cases }
    }

    pub fn failed(name: impl Into<String>, tolerance: f64, cases: u64, witness: Witness) -> Self {
        CheckReport { name: name.into(), pass: false, witness: Some(witness), tolerance, cases }
    }

    /// Pass/fail from an optional first counterexample.
    pub fn from_witness(name: impl Into<String>, tolerance: f64, cases: u64, witness: Option<Witness>) -> Self {
        match witness {
            None => Self::passed(name, tolerance, cases),
            Some(w) => Self::failed(name, tolerance, cases, w),
        }
    }
}

/// Absolute plus relative slack for inequality checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-9, rel: 1e-9 }
    }
}

impl Tolerance {
    pub fn uniform(t: f64) -> Self {
        Tolerance { abs: t, rel: t }
    }

    pub fn slack(&self, a: f64, b: f64) -> f64 {
        let scale = [a.abs(), b.abs()].into_iter().filter(|x| x.is_finite()).fold(0.0, f64::max);
        self.abs + self.rel * scale
    }

    /// `a >= b` up to slack.
    pub fn geq(&self, a: f64, b: f64) -> bool {
        a >= b - self.slack(a, b)
    }

    pub fn close(&self, a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= self.slack(a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMetrics {
    pub gft_star: f64,
    pub pi_s_gsom: f64,
    pub pi_b_gbom: f64,
    /// `(Π_S(GSOM) + Π_B(GBOM)) / 2 / gft_star`, null when `gft_star = 0`.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub instance_hash: String,
    pub metrics: ReportMetrics,
    pub checks: Vec<CheckReport>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}
