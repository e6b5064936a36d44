//! Run reports and their comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = ">")]
    Above,
    #[serde(rename = "==")]
    Equal,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
            Relation::Above => ">",
            Relation::Equal => "==",
        }
    }
}

/// One pass/fail decision and the tolerance it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, relation: Relation, tolerance: f64) -> Self {
        let passed = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
            Relation::Above => value > tolerance,
            Relation::Equal => value == tolerance,
        };
        Check { name: name.into(), value, relation, tolerance, passed, detail: String::new() }
    }

    /// Label equality, recorded as 1 (match) or 0 against 1.
    pub fn label(name: impl Into<String>, got: &str, want: &str) -> Self {
        let mut c = Check::new(name, f64::from(u8::from(got == want)), Relation::Equal, 1.0);
        c.detail = format!("got {got}, want {want}");
        c
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub seed: u64,
    pub version: String,
    /// The configuration with defaults filled in.
    pub config: Value,
    pub payloads: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub timings: Vec<Timing>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Flat `key = value` lines. Timings come last.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "scenario = {}\nseed = {}\nversion = {}\npassed = {}\n",
            self.scenario,
            self.seed,
            self.version,
            self.passed()
        );
        let mut lines = Vec::new();
        flatten("config", &self.config, &mut lines);
        for (k, v) in &self.payloads {
            flatten(&format!("payload.{k}"), v, &mut lines);
        }
        for (k, v) in lines {
            out += &format!("{k} = {v}\n");
        }
        for c in &self.checks {
            let k = format!("check.{}", c.name);
            out += &format!(
                "{k}.value = {}\n{k}.relation = {}\n{k}.tolerance = {}\n{k}.passed = {}\n",
                c.value,
                c.relation.symbol(),
                c.tolerance,
                c.passed
            );
            if !c.detail.is_empty() {
                out += &format!("{k}.detail = {}\n", c.detail);
            }
        }
        for a in &self.artifacts {
            out += &format!("artifact = {a}\n");
        }
        for t in &self.timings {
            out += &format!("timing.{}_seconds = {}\n", t.stage, t.seconds);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Dotted-path leaves of a JSON value; array elements are indexed.
pub fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&format!("{prefix}.{k}"), x, out);
            }
        }
        Value::Array(a) if !a.is_empty() => {
            for (i, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}.{i}"), x, out);
            }
        }
        other => out.push((prefix.to_string(), scalar_text(other))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub key: String,
    pub a: Option<String>,
    pub b: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ReportDiff {
    pub config: Vec<DiffEntry>,
    pub payloads: Vec<DiffEntry>,
    pub checks: Vec<DiffEntry>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.config.is_empty() && self.payloads.is_empty() && self.checks.is_empty()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (section, entries) in [("config", &self.config), ("payload", &self.payloads), ("check", &self.checks)] {
            for e in entries {
                s += &format!(
                    "{section} {}: {} -> {}\n",
                    e.key,
                    e.a.as_deref().unwrap_or("<absent>"),
                    e.b.as_deref().unwrap_or("<absent>")
                );
            }
        }
        s
    }
}

fn same(a: &str, b: &str, rel: f64) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= rel * x.abs().max(y.abs()),
        _ => false,
    }
}

fn diff_leaves(a: Vec<(String, String)>, b: Vec<(String, String)>, rel: f64) -> Vec<DiffEntry> {
    let a: BTreeMap<_, _> = a.into_iter().collect();
    let b: BTreeMap<_, _> = b.into_iter().collect();
    let keys: std::collections::BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    keys.into_iter()
        .filter_map(|k| match (a.get(k), b.get(k)) {
            (Some(x), Some(y)) if same(x, y, rel) => None,
            (x, y) => Some(DiffEntry { key: k.clone(), a: x.cloned(), b: y.cloned() }),
        })
        .collect()
}

/// Field-by-field differences, numbers compared with relative tolerance
/// `rel`. Timings and the artifact list are ignored.
pub fn diff_reports(a: &RunReport, b: &RunReport, rel: f64) -> Result<ReportDiff> {
    if a.scenario != b.scenario {
        return Err(Error::Incompatible(format!("scenario {} vs {}", a.scenario, b.scenario)));
    }
    let leaves = |prefix: &str, v: &Value| {
        let mut out = Vec::new();
        flatten(prefix, v, &mut out);
        out
    };
    let payload_leaves = |r: &RunReport| {
        let mut out = Vec::new();
        for (k, v) in &r.payloads {
            flatten(k, v, &mut out);
        }
        out
    };
    let check_leaves = |r: &RunReport| -> Vec<(String, String)> {
        r.checks
            .iter()
            .flat_map(|c| {
                [
                    (format!("{}.value", c.name), c.value.to_string()),
                    (format!("{}.tolerance", c.name), c.tolerance.to_string()),
                    (format!("{}.passed", c.name), c.passed.to_string()),
                ]
            })
            .collect()
    };
    let mut seed_a = leaves("config", &a.config);
    let mut seed_b = leaves("config", &b.config);
    seed_a.push(("seed".into(), a.seed.to_string()));
    seed_b.push(("seed".into(), b.seed.to_string()));
    Ok(ReportDiff {
        config: diff_leaves(seed_a, seed_b, rel),
        payloads: diff_leaves(payload_leaves(a), payload_leaves(b), rel),
        checks: diff_leaves(check_leaves(a), check_leaves(b), rel),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn report(seed: u64, x: f64) -> RunReport {
        RunReport {
            scenario: "s".into(),
            seed,
            version: "0".into(),
            config: json!({"scenario": {"seed": seed}, "stepper": {"dt_time": 0.01}}),
            payloads: [("m".to_string(), json!({"tv": x, "list": [1, 2]}))].into_iter().collect(),
            checks: vec![Check::new("tv", x, Relation::AtMost, 0.05)],
            artifacts: vec![],
            timings: vec![Timing { stage: "run".into(), seconds: seed as f64 }],
        }
    }

    #[test]
    fn identical_reports_have_no_diff() {
        assert!(diff_reports(&report(1, 0.01), &report(1, 0.01), 1e-12).unwrap().is_empty());
    }

    #[test]
    fn diffs_are_sectioned() {
        let d = diff_reports(&report(1, 0.01), &report(2, 0.02), 1e-12).unwrap();
        assert!(d.config.iter().any(|e| e.key == "config.scenario.seed"));
        assert_eq!(d.payloads.len(), 1);
        assert_eq!(d.checks.len(), 1);
        let mut other = report(1, 0.01);
        other.scenario = "t".into();
        assert!(diff_reports(&report(1, 0.01), &other, 0.0).is_err());
    }

    #[test]
    fn text_and_json_round_trip() {
        let r = report(3, 0.2);
        let text = r.to_text();
        assert!(text.contains("payload.m.tv = 0.2\n"), "{text}");
        assert!(text.contains("check.tv.passed = false\n"));
        assert_eq!(RunReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}
