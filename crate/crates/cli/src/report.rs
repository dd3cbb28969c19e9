use serde::Serialize;

use crate::{to_value, RunConfig, VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    ToleranceFailure,
}

/// One numerical tolerance check of a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `"<="` or `">="`.
    pub relation: &'static str,
    pub limit: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: "<=",
            limit,
            pass: value <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            relation: ">=",
            limit,
            pass: value >= limit,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    /// Flags as parsed, defaults filled in.
    pub config: serde_json::Value,
    /// Inputs after loading files and presets.
    pub resolved: serde_json::Value,
    pub status: Status,
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
}

impl Report {
    pub fn new(
        config: &RunConfig,
        resolved: serde_json::Value,
        result: serde_json::Value,
        checks: Vec<Check>,
    ) -> Self {
        let status = if checks.iter().all(|c| c.pass) {
            Status::Ok
        } else {
            Status::ToleranceFailure
        };
        Self {
            tool: "lawless",
            version: VERSION,
            command: config.command.name(),
            seed: config.seed,
            config: to_value(config),
            resolved,
            status,
            checks,
            result,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nan_never_passes() {
        assert!(!Check::at_most("x", f64::NAN, 1.0).pass);
        assert!(!Check::at_least("x", f64::NAN, 1.0).pass);
        assert!(Check::at_most("x", 1.0, 1.0).pass);
    }
}
