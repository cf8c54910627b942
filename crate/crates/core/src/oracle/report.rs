use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

/// A concrete point at which a claimed bound fails.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "rational::serde_fraction")]
    pub x: Rational,
    /// Exact probability of the event at `x`.
    #[serde(with = "rational::serde_fraction")]
    pub probability: Rational,
    /// The bound it exceeds.
    #[serde(with = "rational::serde_fraction")]
    pub bound: Rational,
    /// Paths realizing the event, as `+1,-1,...` strings (at most 16).
    pub paths: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateVerdict {
    pub holds: bool,
    /// Tail comparisons made (jump points and grid, over every rule).
    pub points_checked: usize,
    pub rules_checked: usize,
    pub witness: Option<Witness>,
}

/// One line of check output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub params: serde_json::Value,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, params: serde_json::Value, passed: bool) -> Self {
        CheckReport { check: check.into(), params, passed, witness: None, seed: None, detail: String::new() }
    }

    pub fn with_witness<T: Serialize>(mut self, witness: &T) -> Self {
        self.witness = Some(serde_json::to_value(witness).expect("witness serializes"));
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
