//! Pool configuration files.
//!
//! ```json
//! {"kind": "mean", "reserves": [4, 1], "weights": [0.5, 0.5], "gamma": 0.997}
//! ```
//!
//! `gamma` defaults to 1. `weights` is only accepted for mean pools and
//! `alpha`/`beta` only for Curve pools. Unknown fields are rejected. Every
//! problem found is reported, not just the first.

use std::path::Path;

use serde_json::{json, Map, Value};

use crate::error::{CfmmError, Result};
use crate::pool::{PoolKind, PoolSpec};

const FIELDS: [&str; 6] = ["kind", "reserves", "gamma", "weights", "alpha", "beta"];

pub fn pool_from_path(path: impl AsRef<Path>) -> Result<PoolSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CfmmError::Io(format!("{}: {e}", path.display())))?;
    pool_from_json(&text)
}

pub fn pool_from_json(text: &str) -> Result<PoolSpec> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| CfmmError::Config(vec![format!("not valid JSON: {e}")]))?;
    let Value::Object(obj) = value else {
        return Err(CfmmError::Config(vec!["top level must be a JSON object".into()]));
    };
    pool_from_map(&obj)
}

fn number(obj: &Map<String, Value>, key: &str, problems: &mut Vec<String>) -> Option<f64> {
    match obj.get(key)? {
        Value::Number(n) => n.as_f64(),
        other => {
            problems.push(format!("{key}: expected a number, got {other}"));
            None
        }
    }
}

fn numbers(obj: &Map<String, Value>, key: &str, problems: &mut Vec<String>) -> Option<Vec<f64>> {
    match obj.get(key)? {
        Value::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, v) in items.iter().enumerate() {
                match v.as_f64() {
                    Some(x) => out.push(x),
                    None => problems.push(format!("{key}[{i}]: expected a number, got {v}")),
                }
            }
            Some(out)
        }
        other => {
            problems.push(format!("{key}: expected an array of numbers, got {other}"));
            None
        }
    }
}

fn pool_from_map(obj: &Map<String, Value>) -> Result<PoolSpec> {
    let mut problems = Vec::new();
    for key in obj.keys() {
        if !FIELDS.contains(&key.as_str()) {
            problems.push(format!("{key}: unknown field"));
        }
    }

    let kind = match obj.get("kind") {
        None => {
            problems.push("kind: missing (expected \"product\", \"mean\" or \"curve\")".into());
            None
        }
        Some(Value::String(s)) => match s.as_str() {
            "product" => Some(PoolKind::Product),
            "mean" => Some(PoolKind::Mean),
            "curve" => Some(PoolKind::Curve),
            other => {
                problems.push(format!("kind: unknown pool kind {other:?}"));
                None
            }
        },
        Some(other) => {
            problems.push(format!("kind: expected a string, got {other}"));
            None
        }
    };

    let reserves = numbers(obj, "reserves", &mut problems);
    if !obj.contains_key("reserves") {
        problems.push("reserves: missing".into());
    }
    let gamma = number(obj, "gamma", &mut problems).unwrap_or(1.0);
    let weights = numbers(obj, "weights", &mut problems);
    let alpha = number(obj, "alpha", &mut problems);
    let beta = number(obj, "beta", &mut problems);

    if let Some(kind) = kind {
        if kind != PoolKind::Mean && obj.contains_key("weights") {
            problems.push(format!("weights: only valid for mean pools, not {}", kind.as_str()));
        }
        if kind == PoolKind::Mean && !obj.contains_key("weights") {
            problems.push("weights: required for mean pools".into());
        }
        for key in ["alpha", "beta"] {
            if kind != PoolKind::Curve && obj.contains_key(key) {
                problems.push(format!("{key}: only valid for curve pools, not {}", kind.as_str()));
            }
            if kind == PoolKind::Curve && !obj.contains_key(key) {
                problems.push(format!("{key}: required for curve pools"));
            }
        }
    }

    // Parameter checks live in the constructors; run them even when other
    // fields are broken so that all problems surface together.
    let reserves = reserves.unwrap_or_default();
    // Without kind-specific parameters, still check reserves and gamma.
    let shared = PoolSpec::product(reserves.clone(), gamma);
    let built = match kind {
        Some(PoolKind::Product) => Some(PoolSpec::product(reserves, gamma)),
        Some(PoolKind::Mean) => weights.map(|w| PoolSpec::mean(reserves, w, gamma)),
        Some(PoolKind::Curve) => match (alpha, beta) {
            (Some(a), Some(b)) => Some(PoolSpec::curve(reserves, a, b, gamma)),
            _ => None,
        },
        None => None,
    };
    match built {
        Some(Ok(spec)) if problems.is_empty() => Ok(spec),
        Some(Err(CfmmError::Config(more))) => {
            for p in more {
                if !problems.contains(&p) {
                    problems.push(p);
                }
            }
            Err(CfmmError::Config(problems))
        }
        Some(Err(other)) => Err(other),
        _ => {
            if let Err(CfmmError::Config(more)) = shared {
                for p in more {
                    if !problems.contains(&p) {
                        problems.push(p);
                    }
                }
            }
            Err(CfmmError::Config(problems))
        }
    }
}

/// The configuration object that reproduces `spec`.
pub fn pool_to_json(spec: &PoolSpec) -> Value {
    let mut v = json!({
        "kind": spec.kind().as_str(),
        "reserves": spec.reserves().as_slice(),
        "gamma": spec.gamma(),
    });
    if spec.kind() == PoolKind::Mean {
        v["weights"] = json!(spec.weights().unwrap_or_default());
    }
    if let Some((alpha, beta)) = spec.curve_params() {
        v["alpha"] = json!(alpha);
        v["beta"] = json!(beta);
    }
    v
}
