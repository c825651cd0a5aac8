use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Raw output of a target-domain test before a level is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

impl TestOutcome {
    pub fn new(statistic: f64, p_value: f64) -> Self {
        Self {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
        }
    }

    pub fn decide(self, alpha: f64, m_used: usize) -> Result<TestResult> {
        TestResult::new(self.statistic, self.p_value, alpha, m_used)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub m_used: usize,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TestResult {
    pub fn new(statistic: f64, p_value: f64, alpha: f64, m_used: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if p_value.is_nan() {
            return Err(invalid("p-value is NaN"));
        }
        let p_value = p_value.clamp(0.0, 1.0);
        Ok(Self {
            statistic,
            p_value,
            reject: p_value <= alpha,
            alpha,
            m_used,
            diagnostics: BTreeMap::new(),
            warnings: Vec::new(),
        })
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }
}
