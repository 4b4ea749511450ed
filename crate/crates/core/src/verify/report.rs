use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

/// One failing sample, with the seed that reproduces it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub seed: u64,
    pub inputs: Value,
    pub observed: Value,
    pub bound: Value,
}

/// Outcome of a randomized check. Serializes as
/// `{check, samples, failures: [{seed, inputs, observed, bound}]}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub check: String,
    pub samples: usize,
    pub failures: Vec<Failure>,
    /// Summary numbers for logs (worst slack, timings); not part of the JSON.
    #[serde(skip)]
    pub metrics: BTreeMap<String, f64>,
}

impl Report {
    pub fn new(check: impl Into<String>) -> Self {
        Report { check: check.into(), samples: 0, failures: Vec::new(), metrics: BTreeMap::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn fail(&mut self, seed: u64, inputs: Value, observed: Value, bound: Value) {
        self.failures.push(Failure { seed, inputs, observed, bound });
    }

    /// Keep the largest value seen for `name`.
    pub fn record_max(&mut self, name: &str, v: f64) {
        let e = self.metrics.entry(name.to_string()).or_insert(f64::NEG_INFINITY);
        if v > *e {
            *e = v;
        }
    }

    pub fn record_min(&mut self, name: &str, v: f64) {
        let e = self.metrics.entry(name.to_string()).or_insert(f64::INFINITY);
        if v < *e {
            *e = v;
        }
    }

    /// Fold another report for the same check into this one. Metrics whose
    /// name starts with `min_` keep the minimum, all others the maximum.
    pub fn merge(&mut self, other: Report) {
        self.samples += other.samples;
        self.failures.extend(other.failures);
        for (k, v) in other.metrics {
            if k.starts_with("min_") {
                self.record_min(&k, v);
            } else {
                self.record_max(&k, v);
            }
        }
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("report serializes")
    }
}
