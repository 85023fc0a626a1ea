//! Structured pass/fail reports shared by every verification routine.
//!
//! A report never carries a witness when it passes, and child reports
//! (sub-checks) fold their verdicts into the parent.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Version stamp on every serialized report document.
pub const REPORT_SCHEMA: u32 = 1;

pub(crate) fn document_schema() -> u32 {
    REPORT_SCHEMA
}

/// One named index into whatever structure a check walks (basis, vector,
/// lattice point, ...), keeping witnesses self-describing in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedIndex {
    pub name: String,
    pub value: u64,
}

/// Concrete counterexample attached to a failing check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub indices: Vec<NamedIndex>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub observed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub expected: Option<f64>,
    pub detail: String,
}

impl Witness {
    pub fn new(indices: &[(&str, u64)], detail: impl Into<String>) -> Self {
        Witness {
            indices: indices
                .iter()
                .map(|(name, value)| NamedIndex {
                    name: (*name).to_owned(),
                    value: *value,
                })
                .collect(),
            observed: None,
            expected: None,
            detail: detail.into(),
        }
    }

    pub fn with_values(mut self, observed: f64, expected: f64) -> Self {
        self.observed = Some(observed);
        self.expected = Some(expected);
        self
    }

    pub fn index(&self, name: &str) -> Option<u64> {
        self.indices.iter().find(|ix| ix.name == name).map(|ix| ix.value)
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, ix) in self.indices.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}={}", ix.name, ix.value)?;
        }
        write!(f, ")")?;
        if let (Some(obs), Some(exp)) = (self.observed, self.expected) {
            write!(f, " observed {obs} expected {exp}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

/// Outcome of one verification pass, possibly aggregating sub-checks.
///
/// Exact combinatorial checks leave `tolerance` unset and report integer
/// deviations; numerical checks record the tolerance they were run at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    #[serde(default = "document_schema")]
    pub schema: u32,
    pub check: String,
    pub d: usize,
    pub pass: bool,
    pub max_deviation: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Witness>,
    /// Set by multi-route checks: whether all routes agreed in pass/fail.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub consistent: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rng: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub success_count: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub analytic_success: Option<f64>,
    /// Flagged when the simulator had to re-orthonormalize the measurement set.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reorthonormalized: Option<bool>,
    /// Records how composite-dimension bases were paired up, when relevant.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub basis_pairing: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub children: Vec<ProtocolReport>,
}

impl ProtocolReport {
    pub fn new(check: impl Into<String>, d: usize) -> Self {
        ProtocolReport {
            schema: REPORT_SCHEMA,
            check: check.into(),
            d,
            pass: true,
            max_deviation: 0.0,
            tolerance: None,
            witness: None,
            consistent: None,
            seed: None,
            rng: None,
            trials: None,
            success_count: None,
            analytic_success: None,
            reorthonormalized: None,
            basis_pairing: None,
            children: Vec::new(),
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    /// Fold one observed deviation into the report. The witness closure is
    /// only invoked for the first out-of-tolerance observation, so scanning
    /// in lexicographic order yields the lexicographically first witness.
    pub fn observe<F>(&mut self, deviation: f64, tol: f64, witness: F)
    where
        F: FnOnce() -> Witness,
    {
        if deviation > self.max_deviation {
            self.max_deviation = deviation;
        }
        if deviation > tol && self.pass {
            self.pass = false;
            self.witness = Some(witness());
        }
    }

    /// Attach a sub-check, folding its verdict into this report.
    pub fn push_child(&mut self, child: ProtocolReport) {
        if child.max_deviation > self.max_deviation {
            self.max_deviation = child.max_deviation;
        }
        if !child.pass && self.pass {
            self.pass = false;
            self.witness = child.witness.clone();
        }
        self.children.push(child);
    }

    pub fn child(&self, check: &str) -> Option<&ProtocolReport> {
        self.children.iter().find(|c| c.check == check)
    }
}

impl fmt::Display for ProtocolReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} d={} {}: max deviation {:e}",
            self.check,
            self.d,
            if self.pass { "PASS" } else { "FAIL" },
            self.max_deviation
        )?;
        if let Some(w) = &self.witness {
            write!(f, " at {w}")?;
        }
        Ok(())
    }
}
