use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::Args;
use lawless_core::phenomenon::{
    analyze_log, builtin, run_phenomenon, time_direction_verdict, BUILTIN_NAMES,
};
use lawless_core::{Scenario, TrialLog};
use serde::Serialize;
use serde_json::json;

use crate::{invalid, read_file, schema, to_value, Artifact, Check, CliError};

/// Largest tolerated `|p̂ − p| / sqrt(p(1 − p)/n)` over final labels.
pub const MAX_Z: f64 = 5.0;

#[derive(Debug, Clone, Args, Serialize)]
pub struct PhenomenonArgs {
    /// Built-in scenario name or path to a scenario JSON file.
    #[arg(long, default_value = "penrose")]
    pub scenario: String,
    /// Initial label to prepare; the scenario's first initial when absent.
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    /// Analyse an existing trial-log CSV instead of simulating.
    #[arg(long)]
    pub analyze: Option<PathBuf>,
    /// Read the log backwards (final, initial) before analysing.
    #[arg(long)]
    pub reverse: bool,
    /// Also write the trial log CSV here.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

fn load_scenario(name: &str) -> Result<Scenario, CliError> {
    if let Some(sc) = builtin(name) {
        return Ok(sc);
    }
    let path = Path::new(name);
    if !path.exists() && !name.contains('.') && !name.contains('/') {
        return Err(CliError::BadFlag(format!(
            "unknown scenario `{name}`; built-ins are {}",
            BUILTIN_NAMES.join(", ")
        )));
    }
    let text = read_file(path)?;
    Scenario::from_json(&text).map_err(|e| schema(path, e))
}

/// `|p̂ − p| / sqrt(p(1 − p)/n)` for each final label of one initial.
fn z_scores(
    sc: &Scenario,
    log: &TrialLog,
    initial: &str,
) -> Result<BTreeMap<String, f64>, CliError> {
    let probs = sc.born_probabilities(initial).map_err(invalid)?;
    let n = log.trials.iter().filter(|(a, _)| a == initial).count() as f64;
    let mut out = BTreeMap::new();
    for (f, p) in sc.finals().iter().zip(probs) {
        let k = log
            .trials
            .iter()
            .filter(|(a, b)| a == initial && *b == f.label)
            .count() as f64;
        let dev = (k / n - p).abs();
        let sd = (p * (1.0 - p) / n).sqrt();
        let z = if sd > 0.0 {
            dev / sd
        } else if dev <= 1e-12 {
            0.0
        } else {
            f64::INFINITY
        };
        out.insert(f.label.clone(), z);
    }
    Ok(out)
}

pub fn run(args: &PhenomenonArgs, seed: u64) -> Result<Artifact, CliError> {
    let sc = load_scenario(&args.scenario)?;
    let initial = match &args.initial {
        Some(l) => {
            sc.initial(l)
                .ok_or_else(|| CliError::BadFlag(format!("scenario has no initial `{l}`")))?;
            l.clone()
        }
        None => sc.initials()[0].label.clone(),
    };

    let (log, simulated) = match &args.analyze {
        Some(path) => {
            let text = read_file(path)?;
            let log = TrialLog::read_csv(text.as_bytes(), sc.label(), seed)
                .map_err(|e| schema(path, e))?;
            (log, false)
        }
        None => {
            if args.trials == 0 {
                return Err(CliError::BadFlag("--trials must be at least 1".into()));
            }
            (
                run_phenomenon(&sc, &initial, args.trials, seed).map_err(invalid)?,
                true,
            )
        }
    };
    let log = if args.reverse { log.reversed() } else { log };
    let analysis = analyze_log(&log).map_err(invalid)?;
    let verdict = time_direction_verdict(&log, &sc).map_err(invalid)?;

    let mut checks = Vec::new();
    let mut zs = None;
    if simulated && !args.reverse {
        let z = z_scores(&sc, &log, &initial)?;
        let worst = z.values().copied().fold(0.0, f64::max);
        checks.push(Check::at_most("max_z_score", worst, MAX_Z));
        zs = Some(z);
    }
    let model: BTreeMap<&str, f64> = sc
        .finals()
        .iter()
        .map(|f| f.label.as_str())
        .zip(sc.born_probabilities(&initial).map_err(invalid)?)
        .collect();

    let mut buf = Vec::new();
    log.write_csv(&mut buf).map_err(invalid)?;
    let csv = String::from_utf8(buf).expect("utf-8 csv");
    if let Some(path) = &args.log {
        std::fs::write(path, &csv).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }

    Ok(Artifact {
        resolved: json!({
            "scenario": to_value(&sc.to_file()),
            "initial": initial,
        }),
        result: json!({
            "trials": log.len(),
            "model": model,
            "analysis": to_value(&analysis),
            "time_direction": to_value(&verdict),
            "z_scores": zs,
        }),
        csv,
        checks,
    })
}
