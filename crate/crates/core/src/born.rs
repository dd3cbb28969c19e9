//! Transition probabilities from equidistance.
//!
//! A state `|ψ> = Σ c_i |ψ_i>` over an orthonormal final set is tensored with
//! an auxiliary state `|φ> = Σ_j n_i^{-1/2} |φ_ij>`. When `c_i² = n_i / M`
//! every product branch `|ψ_i>|φ_ij>` carries the same coefficient
//! `M^{-1/2}`, so all `M` branches sit at the same Fubini–Study distance from
//! the combined state and are taken to be equally likely. Summing the `n_i`
//! branches of each `i` gives `p_i = n_i / M`, which approaches `c_i²` as the
//! rational approximation tightens.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::state::PureState;

/// Default cap on the common denominator searched by [`rational_partition`].
pub const DEFAULT_MAX_DENOMINATOR: u64 = 100_000_000;

/// Tolerance on `Σ c_i² = 1` and `Σ p_i = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Rational-approximation tolerance used when re-deriving probabilities in
/// [`phase_invariance_check`].
pub const PHASE_CHECK_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BornError {
    #[error("invalid coefficients: {0}")]
    InvalidCoefficients(String),
    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("no denominator up to {cap} approximates the probabilities within {eps:e}")]
    TooTight { eps: f64, cap: u64 },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Real positive coefficients of the initial state over the final basis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BornInstance {
    coefficients: Vec<f64>,
}

impl BornInstance {
    pub fn new(coefficients: Vec<f64>) -> Result<Self, BornError> {
        if coefficients.is_empty() {
            return Err(BornError::InvalidCoefficients("no coefficients".into()));
        }
        if let Some(c) = coefficients.iter().find(|c| !(**c > 0.0) || !c.is_finite()) {
            return Err(BornError::InvalidCoefficients(format!(
                "coefficient {c} is not a finite positive number"
            )));
        }
        let norm: f64 = coefficients.iter().map(|c| c * c).sum();
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(BornError::InvalidCoefficients(format!(
                "sum of squares is {norm}, expected 1"
            )));
        }
        Ok(Self { coefficients })
    }

    /// Instance with `c_i = sqrt(p_i)`.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self, BornError> {
        validate_probabilities(probs)?;
        Self::new(probs.iter().map(|p| p.sqrt()).collect())
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    /// `c_i²`, the quantities the derivation must reproduce.
    pub fn weights(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    /// The initial state `|ψ>` in the final basis.
    pub fn state(&self) -> PureState {
        PureState::from_real(&self.coefficients).expect("coefficients are normalised")
    }
}

/// Integers `n_i ≥ 1` with `Σ n_i = M` approximating `p_i` by `n_i / M`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RationalPartition {
    pub counts: Vec<u64>,
    pub denominator: u64,
    /// `max_i |p_i − n_i / M|` for the probabilities it was built from.
    pub residual: f64,
}

impl RationalPartition {
    pub fn probabilities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|&n| n as f64 / self.denominator as f64)
            .collect()
    }
}

fn validate_probabilities(probs: &[f64]) -> Result<(), BornError> {
    if probs.is_empty() {
        return Err(BornError::InvalidProbabilities("empty".into()));
    }
    if let Some(p) = probs.iter().find(|p| !(**p > 0.0) || !p.is_finite()) {
        return Err(BornError::InvalidProbabilities(format!(
            "{p} is not a finite positive probability"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(BornError::InvalidProbabilities(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    Ok(())
}

/// Rounds `p_i · M` to integers summing to `M` with every count at least one.
///
/// Surplus or deficit left by rounding is moved onto the entries whose
/// rounding error points the right way (largest remainders first).
fn partition_at(probs: &[f64], m: u64) -> Option<Vec<u64>> {
    let targets: Vec<f64> = probs.iter().map(|p| p * m as f64).collect();
    let mut counts: Vec<i64> = targets.iter().map(|t| t.round() as i64).collect();

    let pick = |counts: &[i64], up: bool| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, (&n, &t)) in counts.iter().zip(&targets).enumerate() {
            if !up && n <= 1 {
                continue;
            }
            let remainder = t - n as f64;
            let better = match best {
                None => true,
                Some((_, r)) => {
                    if up {
                        remainder > r
                    } else {
                        remainder < r
                    }
                }
            };
            if better {
                best = Some((i, remainder));
            }
        }
        best.map(|(i, _)| i)
    };

    for i in 0..counts.len() {
        if counts[i] < 1 {
            counts[i] = 1;
        }
    }
    let mut diff = m as i64 - counts.iter().sum::<i64>();
    while diff != 0 {
        let i = pick(&counts, diff > 0)?;
        if diff > 0 {
            counts[i] += 1;
            diff -= 1;
        } else {
            counts[i] -= 1;
            diff += 1;
        }
    }
    Some(counts.into_iter().map(|n| n as u64).collect())
}

fn residual_of(probs: &[f64], counts: &[u64], m: u64) -> f64 {
    probs
        .iter()
        .zip(counts)
        .map(|(p, &n)| (p - n as f64 / m as f64).abs())
        .fold(0.0, f64::max)
}

/// Smallest denominator `M ≥ len(probs)` whose rounded partition lies within
/// `eps` of every probability.
pub fn rational_partition(probs: &[f64], eps: f64) -> Result<RationalPartition, BornError> {
    rational_partition_with_cap(probs, eps, DEFAULT_MAX_DENOMINATOR)
}

pub fn rational_partition_with_cap(
    probs: &[f64],
    eps: f64,
    cap: u64,
) -> Result<RationalPartition, BornError> {
    validate_probabilities(probs)?;
    if !(eps > 0.0) {
        return Err(BornError::InvalidTolerance(eps));
    }
    let start = probs.len() as u64;
    for m in start..=cap.max(start) {
        // No partition at `m` can beat the per-entry nearest fractions.
        let mf = m as f64;
        let hopeless = probs.iter().any(|p| {
            let t = p * mf;
            (t - t.round().max(1.0)).abs() > eps * mf
        });
        if hopeless {
            continue;
        }
        let Some(counts) = partition_at(probs, m) else {
            continue;
        };
        let residual = residual_of(probs, &counts, m);
        if residual <= eps {
            return Ok(RationalPartition {
                counts,
                denominator: m,
                residual,
            });
        }
    }
    Err(BornError::TooTight { eps, cap })
}

/// Branch coefficients `c_i / sqrt(n_i)` of the combined system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxiliaryExpansion {
    /// `branches[i][j]` is the coefficient of `|ψ_i>|φ_ij>`.
    pub branches: Vec<Vec<f64>>,
    /// Reported bound on `|c_i/√n_i − c_j/√n_j|` over all pairs.
    pub bound: f64,
}

impl AuxiliaryExpansion {
    pub fn total_branches(&self) -> usize {
        self.branches.iter().map(Vec::len).sum()
    }

    /// All branch coefficients in `(i, j)` lexicographic order.
    pub fn flattened(&self) -> Vec<f64> {
        self.branches.iter().flatten().copied().collect()
    }

    /// Largest pairwise gap between branch coefficients.
    pub fn max_gap(&self) -> f64 {
        let flat = self.flattened();
        let lo = flat.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = flat.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Splits each branch `i` into `n_i` equal sub-branches.
///
/// With `c_i² = n_i/M + δ_i`, `|δ_i| ≤ r`, each coefficient differs from
/// `M^{-1/2}` by at most `r·√M / n_i`, so the pairwise gap is bounded by
/// `2 r √M / min n_i`. A few ulps are added for the square roots themselves.
pub fn auxiliary_expansion(
    inst: &BornInstance,
    part: &RationalPartition,
) -> Result<AuxiliaryExpansion, BornError> {
    if inst.dim() != part.counts.len() {
        return Err(BornError::LengthMismatch(inst.dim(), part.counts.len()));
    }
    let branches: Vec<Vec<f64>> = inst
        .coefficients()
        .iter()
        .zip(&part.counts)
        .map(|(&c, &n)| vec![c / (n as f64).sqrt(); n as usize])
        .collect();
    let min_n = *part.counts.iter().min().expect("non-empty") as f64;
    let m = part.denominator as f64;
    let residual = residual_of(&inst.weights(), &part.counts, part.denominator);
    let rounding = 4.0 * f64::EPSILON / m.sqrt();
    let bound = 2.0 * residual * m.sqrt() / min_n + rounding;
    Ok(AuxiliaryExpansion { branches, bound })
}

/// Mean distance from the combined state to the branch states, and the
/// spread (max − min) of those distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equidistance {
    pub theta: f64,
    pub spread: f64,
}

/// Embeds the combined state in a space of dimension `Σ n_i`, where branch
/// `(i, j)` is a basis vector, and measures its distance to every branch.
pub fn check_equidistance(exp: &AuxiliaryExpansion) -> Equidistance {
    let flat = exp.flattened();
    let total = flat.len();
    let norm = flat.iter().map(|x| x * x).sum::<f64>().sqrt();
    // overlap with basis vector k is the k-th normalised amplitude
    let distances: Vec<f64> = flat
        .iter()
        .map(|x| 2.0 * (x.abs() / norm).clamp(0.0, 1.0).acos())
        .collect();
    let lo = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Equidistance {
        theta: distances.iter().sum::<f64>() / total as f64,
        spread: hi - lo,
    }
}

/// Result of the full derivation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BornDerivation {
    pub probabilities: Vec<f64>,
    /// `max_i |p_i − c_i²|`.
    pub bound: f64,
    pub partition: RationalPartition,
    /// Probability assigned to each of the `M` equidistant branches.
    pub branch_probability: f64,
    pub equidistance: Equidistance,
    pub expansion_bound: f64,
}

/// Partition → auxiliary expansion → equal weight `1/M` per branch →
/// `p_i = n_i / M`.
pub fn derive_probabilities(inst: &BornInstance, eps: f64) -> Result<BornDerivation, BornError> {
    derive_probabilities_with_cap(inst, eps, DEFAULT_MAX_DENOMINATOR)
}

pub fn derive_probabilities_with_cap(
    inst: &BornInstance,
    eps: f64,
    cap: u64,
) -> Result<BornDerivation, BornError> {
    let weights = inst.weights();
    let partition = rational_partition_with_cap(&weights, eps, cap)?;
    let expansion = auxiliary_expansion(inst, &partition)?;
    let equidistance = check_equidistance(&expansion);

    let m = partition.denominator;
    let branch_probability = 1.0 / m as f64;
    let probabilities = partition.probabilities();
    let bound = probabilities
        .iter()
        .zip(&weights)
        .map(|(p, w)| (p - w).abs())
        .fold(0.0, f64::max);
    Ok(BornDerivation {
        probabilities,
        bound,
        partition,
        branch_probability,
        equidistance,
        expansion_bound: expansion.bound,
    })
}

/// `cos(s/2) = |<u|v>|`. Compared instead of `s` itself because `acos`
/// amplifies rounding near coincident rays.
fn ray_closeness(u: &[Complex64], v: &[Complex64]) -> f64 {
    let overlap: Complex64 = u.iter().zip(v).map(|(a, b)| a.conj() * b).sum();
    overlap.norm().clamp(0.0, 1.0)
}

fn distance_table(states: &[Vec<Complex64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(states.len() * states.len());
    for u in states {
        for v in states {
            out.push(ray_closeness(u, v));
        }
    }
    out
}

/// Replaces each final state `|ψ_i>` by `e^{iφ_i}|ψ_i>` (and the initial state
/// by `Σ c_i e^{iφ_i}|ψ_i>`) and checks that nothing observable moves:
/// every pairwise distance (as `cos(s/2)`) among the initial and final states agrees within
/// `1e-12`, and re-deriving the probabilities from the overlaps in the new
/// frame yields the same partition and bit-identical `p`.
pub fn phase_invariance_check(inst: &BornInstance, phases: &[f64]) -> Result<bool, BornError> {
    let n = inst.dim();
    if phases.len() != n {
        return Err(BornError::LengthMismatch(n, phases.len()));
    }
    let basis_vec = |k: usize, phase: f64| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[k] = Complex64::from_polar(1.0, phase);
        v
    };
    let original: Vec<Vec<Complex64>> = std::iter::once(
        inst.coefficients()
            .iter()
            .map(|&c| Complex64::new(c, 0.0))
            .collect(),
    )
    .chain((0..n).map(|k| basis_vec(k, 0.0)))
    .collect();
    let rotated_initial: Vec<Complex64> = inst
        .coefficients()
        .iter()
        .zip(phases)
        .map(|(&c, &p)| Complex64::from_polar(c, p))
        .collect();
    let rotated: Vec<Vec<Complex64>> = std::iter::once(rotated_initial.clone())
        .chain((0..n).map(|k| basis_vec(k, phases[k])))
        .collect();

    let distances_match = distance_table(&original)
        .iter()
        .zip(distance_table(&rotated))
        .all(|(a, b)| (a - b).abs() <= 1e-12);

    // Coefficients as seen from the rephased final states.
    let recovered: Vec<f64> = rotated[1..]
        .iter()
        .map(|b| {
            b.iter()
                .zip(&rotated_initial)
                .map(|(x, y)| x.conj() * y)
                .sum::<Complex64>()
                .norm()
        })
        .collect();
    let rephased = BornInstance::new(recovered)?;
    let before = derive_probabilities(inst, PHASE_CHECK_EPS)?;
    let after = derive_probabilities(&rephased, PHASE_CHECK_EPS)?;
    let identical = before.partition.counts == after.partition.counts
        && before.partition.denominator == after.partition.denominator
        && before
            .probabilities
            .iter()
            .zip(&after.probabilities)
            .all(|(a, b)| a.to_bits() == b.to_bits());

    Ok(distances_match && identical)
}
