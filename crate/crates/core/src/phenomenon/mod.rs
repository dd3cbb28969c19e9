//! Seeded phenomena: repeated trials from one prepared state under fixed
//! conditions, their conditional-frequency tables, a statistical arrow of
//! time and protective versus projective read-outs.

mod measure;
mod scenario;

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::factorial::ln_factorial;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::state::StateError;

pub use measure::{
    alternating_protocol, pauli, projective_measure, protective_measure, MeasurementMode,
    ProtocolOutcome,
};
pub use scenario::{
    beam_splitter, builtin, deterministic, penrose, penrose_rotated, penrose_rotation,
    stern_gerlach, three_outcome, InitialEntry, LabeledState, Scenario, ScenarioFile,
    BUILTIN_NAMES, SPAN_TOL, UNITARY_TOL,
};

/// Probabilities at or below this count as impossible in the classifier.
pub const IMPOSSIBLE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhenomenonError {
    #[error("unknown state label `{0}`")]
    UnknownLabel(String),
    #[error("duplicate state label `{0}`")]
    DuplicateLabel(String),
    #[error(
        "evolved state `{label}` is not spanned by the final states (captured weight {captured})"
    )]
    SpanViolation { label: String, captured: f64 },
    #[error("matrix is not unitary (defect {0:e})")]
    NotUnitary(f64),
    #[error("final states are not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error("observable is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("trial log is empty")]
    EmptyLog,
    #[error("trial count must be at least 1")]
    InvalidTrialCount,
    #[error("protocol needs at least 2 repetitions, got {0}")]
    InvalidRepetitions(usize),
    #[error("scenario schema: {0}")]
    Schema(String),
    #[error("log i/o: {0}")]
    Io(String),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Ordered `(initial, final)` pairs of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialLog {
    pub scenario: String,
    pub seed: u64,
    pub trials: Vec<(String, String)>,
}

impl TrialLog {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Every pair with its components swapped, as the run would look played
    /// backwards.
    pub fn reversed(&self) -> TrialLog {
        TrialLog {
            scenario: self.scenario.clone(),
            seed: self.seed,
            trials: self
                .trials
                .iter()
                .map(|(a, b)| (b.clone(), a.clone()))
                .collect(),
        }
    }

    /// CSV with header `trial_index,initial,final`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), PhenomenonError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| PhenomenonError::Io(e.to_string());
        w.write_record(["trial_index", "initial", "final"])
            .map_err(io)?;
        for (i, (a, b)) in self.trials.iter().enumerate() {
            w.write_record([i.to_string().as_str(), a, b]).map_err(io)?;
        }
        w.flush().map_err(|e| PhenomenonError::Io(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R, scenario: &str, seed: u64) -> Result<Self, PhenomenonError> {
        let mut r = csv::Reader::from_reader(input);
        let mut trials = Vec::new();
        for (expected, record) in r.records().enumerate() {
            let record = record.map_err(|e| PhenomenonError::Io(e.to_string()))?;
            if record.len() != 3 {
                return Err(PhenomenonError::Io(format!(
                    "row {expected}: expected 3 columns, got {}",
                    record.len()
                )));
            }
            let index: usize = record[0]
                .parse()
                .map_err(|_| PhenomenonError::Io(format!("bad trial index `{}`", &record[0])))?;
            if index != expected {
                return Err(PhenomenonError::Io(format!(
                    "trial index {index} out of order (expected {expected})"
                )));
            }
            trials.push((record[1].to_string(), record[2].to_string()));
        }
        Ok(Self {
            scenario: scenario.to_string(),
            seed,
            trials,
        })
    }
}

/// Per-trial generator: the ChaCha keystream for `seed` on stream `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Runs `n` independent trials from `initial`, each sampling a final state
/// with probability `|<β_i|Uα>|²`.
///
/// Trial `t` draws from its own keystream ([`trial_rng`]), so the log depends
/// only on `(scenario, initial, n, seed)` regardless of scheduling.
pub fn run_phenomenon(
    sc: &Scenario,
    initial: &str,
    n: usize,
    seed: u64,
) -> Result<TrialLog, PhenomenonError> {
    if n == 0 {
        return Err(PhenomenonError::InvalidTrialCount);
    }
    let probs = sc.born_probabilities(initial)?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > SPAN_TOL {
        return Err(PhenomenonError::SpanViolation {
            label: initial.to_string(),
            captured: total,
        });
    }
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p / total;
        cumulative.push(acc);
    }
    let fallback = probs
        .iter()
        .rposition(|&p| p > IMPOSSIBLE)
        .expect("span check guarantees a possible outcome");

    let labels: Vec<&str> = sc.finals().iter().map(|f| f.label.as_str()).collect();
    let picks: Vec<usize> = (0..n as u64)
        .into_par_iter()
        .map(|t| {
            let u: f64 = trial_rng(seed, t).random();
            cumulative.iter().position(|&c| u < c).unwrap_or(fallback)
        })
        .collect();
    Ok(TrialLog {
        scenario: sc.label().to_string(),
        seed,
        trials: picks
            .into_iter()
            .map(|k| (initial.to_string(), labels[k].to_string()))
            .collect(),
    })
}

/// Conditional relative-frequency tables of a log in both directions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogAnalysis {
    pub trials: usize,
    /// `forward[initial][final] = P(final | initial)`.
    pub forward: BTreeMap<String, BTreeMap<String, f64>>,
    /// `backward[final][initial] = P(initial | final)`.
    pub backward: BTreeMap<String, BTreeMap<String, f64>>,
    /// Empirical frequency of each final label.
    pub final_distribution: BTreeMap<String, f64>,
    /// Shannon entropy of `final_distribution` in bits.
    pub final_entropy_bits: f64,
}

fn conditional_table<'a>(
    pairs: impl Iterator<Item = (&'a str, &'a str)>,
) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut counts: BTreeMap<String, BTreeMap<String, u64>> = BTreeMap::new();
    for (given, outcome) in pairs {
        *counts
            .entry(given.to_string())
            .or_default()
            .entry(outcome.to_string())
            .or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(given, row)| {
            let total: u64 = row.values().sum();
            let row = row
                .into_iter()
                .map(|(k, c)| (k, c as f64 / total as f64))
                .collect();
            (given, row)
        })
        .collect()
}

/// Entropy in bits with `0 · log 0 = 0`.
pub fn entropy_bits(probs: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    // -0.0 for a single certain outcome
    h.max(0.0)
}

pub fn analyze_log(log: &TrialLog) -> Result<LogAnalysis, PhenomenonError> {
    if log.is_empty() {
        return Err(PhenomenonError::EmptyLog);
    }
    let forward = conditional_table(log.trials.iter().map(|(a, b)| (a.as_str(), b.as_str())));
    let backward = conditional_table(log.trials.iter().map(|(a, b)| (b.as_str(), a.as_str())));
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    for (_, b) in &log.trials {
        *counts.entry(b.clone()).or_default() += 1;
    }
    let n = log.len() as f64;
    let final_distribution: BTreeMap<String, f64> =
        counts.into_iter().map(|(k, c)| (k, c as f64 / n)).collect();
    let final_entropy_bits = entropy_bits(final_distribution.values().copied());
    Ok(LogAnalysis {
        trials: log.len(),
        forward,
        backward,
        final_distribution,
        final_entropy_bits,
    })
}

/// Maps every state through `v` and conjugates the evolution to `V U V†`.
pub fn apply_symmetry(sc: &Scenario, v: &CMatrix) -> Result<Scenario, PhenomenonError> {
    scenario::assert_square_unitary(v, sc.dim())?;
    let map = |s: &LabeledState| -> Result<LabeledState, PhenomenonError> {
        Ok(LabeledState::new(s.label.clone(), s.state.apply(v)?))
    };
    let initials = sc
        .initials()
        .iter()
        .map(map)
        .collect::<Result<Vec<_>, _>>()?;
    let finals = sc.finals().iter().map(map).collect::<Result<Vec<_>, _>>()?;
    let evolution = v * sc.evolution() * v.adjoint();
    Scenario::new(sc.label(), initials, evolution, finals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeDirection {
    Forward,
    Backward,
    Undecidable,
}

/// Log-likelihoods behind a time-direction verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeVerdict {
    pub direction: TimeDirection,
    pub forward_log_likelihood: f64,
    pub backward_log_likelihood: f64,
}

/// Log-likelihood of the pairs read as `(prepared, observed)`.
///
/// Pairs are grouped by their first component and each group's outcome counts
/// are scored with the multinomial law of the model conditionals. The
/// per-pair probabilities alone cannot separate the two readings, because
/// `|<β|Uα>|² = |<α|U†β>|²`; what separates them is that the counts of a
/// genuine phenomenon are typical for its conditionals while the counts of a
/// reversed one are not.
fn reading_log_likelihood<'a>(
    sc: &Scenario,
    pairs: impl Iterator<Item = (&'a str, &'a str)>,
) -> Result<f64, PhenomenonError> {
    let mut groups: BTreeMap<&str, BTreeMap<&str, u64>> = BTreeMap::new();
    for (first, second) in pairs {
        *groups.entry(first).or_default().entry(second).or_default() += 1;
    }
    let mut total = 0.0;
    for (first, outcomes) in groups {
        let size: u64 = outcomes.values().sum();
        total += ln_factorial(size);
        for (second, count) in outcomes {
            let p = sc.pair_probability(first, second)?;
            if p <= IMPOSSIBLE {
                return Ok(f64::NEG_INFINITY);
            }
            total += count as f64 * p.ln() - ln_factorial(count);
        }
    }
    Ok(total)
}

/// Likelihood comparison of the log as recorded against the log played
/// backwards.
pub fn time_direction_verdict(
    log: &TrialLog,
    sc: &Scenario,
) -> Result<TimeVerdict, PhenomenonError> {
    if log.is_empty() {
        return Err(PhenomenonError::EmptyLog);
    }
    let fwd = reading_log_likelihood(sc, log.trials.iter().map(|(a, b)| (a.as_str(), b.as_str())))?;
    let bwd = reading_log_likelihood(sc, log.trials.iter().map(|(a, b)| (b.as_str(), a.as_str())))?;
    let scale = 1.0f64.max(fwd.abs()).max(bwd.abs());
    let direction = if fwd == bwd
        || (fwd.is_finite() && bwd.is_finite() && (fwd - bwd).abs() <= 1e-9 * scale)
    {
        TimeDirection::Undecidable
    } else if fwd > bwd {
        TimeDirection::Forward
    } else {
        TimeDirection::Backward
    };
    Ok(TimeVerdict {
        direction,
        forward_log_likelihood: fwd,
        backward_log_likelihood: bwd,
    })
}

pub fn classify_time_direction(
    log: &TrialLog,
    sc: &Scenario,
) -> Result<TimeDirection, PhenomenonError> {
    Ok(time_direction_verdict(log, sc)?.direction)
}
