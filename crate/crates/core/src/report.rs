//! Structured outcome of an audit or verification sweep.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Version of the report layout, bumped on incompatible changes.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Outcome {
    Pass,
    Fail,
    /// The input did not satisfy the hypothesis being tested, so the conclusion
    /// was not examined.
    HypothesisFail,
    /// The hypothesis held but the conclusion failed somewhere.
    ConclusionFail,
}

/// One failing site or sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    /// Coordinates of the site, or the sample index for abstract audits.
    pub site: Vec<f64>,
    pub kind: String,
    /// Signed membership margin; negative means outside by that amount.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub jet: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

impl Violation {
    pub fn new(site: Vec<f64>, kind: impl Into<String>) -> Self {
        Self {
            site,
            kind: kind.into(),
            margin: None,
            jet: None,
            detail: None,
        }
    }

    pub fn margin(mut self, m: f64) -> Self {
        self.margin = Some(m);
        self
    }

    pub fn margin_opt(mut self, m: Option<f64>) -> Self {
        self.margin = m;
        self
    }

    pub fn jet_doc(mut self, doc: impl Serialize) -> Self {
        self.jet = serde_json::to_value(doc).ok();
        self
    }

    pub fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

/// Result of an audit. `passed` holds exactly when `violations` is empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub name: String,
    pub passed: bool,
    pub outcome: Outcome,
    pub checked_sites: usize,
    pub violations: Vec<Violation>,
    pub metadata: BTreeMap<String, Value>,
}

impl VerificationReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            name: name.into(),
            passed: true,
            outcome: Outcome::Pass,
            checked_sites: 0,
            violations: Vec::new(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
        self.passed = false;
        if self.outcome == Outcome::Pass {
            self.outcome = Outcome::Fail;
        }
    }

    pub fn meta(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.metadata.insert(key.to_string(), v);
    }

    /// Overrides the failure label while keeping `passed` tied to the violations.
    pub fn set_outcome(&mut self, outcome: Outcome) {
        self.outcome = if self.violations.is_empty() {
            Outcome::Pass
        } else {
            outcome
        };
        self.passed = self.violations.is_empty();
    }

    /// Folds another report into this one, keeping site order.
    pub fn absorb(&mut self, other: VerificationReport) {
        self.checked_sites += other.checked_sites;
        for v in other.violations {
            self.push(v);
        }
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn passed_tracks_violations() {
        let mut r = VerificationReport::new("demo");
        assert!(r.passed);
        r.push(Violation::new(vec![0.5], "psd").margin(-1.0));
        assert!(!r.passed);
        assert_eq!(r.outcome, Outcome::Fail);
        r.set_outcome(Outcome::HypothesisFail);
        assert_eq!(r.outcome, Outcome::HypothesisFail);
    }

    #[test]
    fn outcome_labels() {
        let s = serde_json::to_string(&Outcome::ConclusionFail).unwrap();
        assert_eq!(s, "\"CONCLUSION_FAIL\"");
    }
}
