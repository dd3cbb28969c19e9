use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::scenario::{hermitian_defect, UNITARY_TOL};
use super::PhenomenonError;
use crate::linalg::{CMatrix, CVector};
use crate::state::PureState;

/// Eigenvalues closer than this are treated as one degenerate eigenspace.
const DEGENERACY_TOL: f64 = 1e-9;
/// Eigenspace weights at or below this are never sampled.
const NEGLIGIBLE_WEIGHT: f64 = 1e-14;

fn check_observable(s: &PureState, a: &CMatrix) -> Result<(), PhenomenonError> {
    if a.nrows() != a.ncols() || a.nrows() != s.dim() {
        return Err(PhenomenonError::DimensionMismatch(a.nrows(), s.dim()));
    }
    let defect = hermitian_defect(a);
    if defect > UNITARY_TOL {
        return Err(PhenomenonError::NotHermitian(defect));
    }
    Ok(())
}

/// Expectation value `<ψ|A|ψ>` read out without touching the state.
pub fn protective_measure(s: &PureState, a: &CMatrix) -> Result<f64, PhenomenonError> {
    check_observable(s, a)?;
    let v = s.to_vector();
    Ok((v.adjoint() * a * &v)[(0, 0)].re)
}

/// Eigenspaces of a Hermitian matrix as `(eigenvalue, orthonormal columns)`.
fn eigenspaces(a: &CMatrix) -> Vec<(f64, Vec<CVector>)> {
    let eig = a.clone().symmetric_eigen();
    let mut pairs: Vec<(f64, CVector)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&l, v)| (l, v.into_owned()))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut spaces: Vec<(f64, Vec<CVector>)> = Vec::new();
    for (l, v) in pairs {
        match spaces.last_mut() {
            Some((l0, vs)) if (l - *l0).abs() <= DEGENERACY_TOL => vs.push(v),
            _ => spaces.push((l, vec![v])),
        }
    }
    spaces
}

/// Samples an eigenvalue with the Born weight of its eigenspace and returns
/// the normalised projection of the state onto that eigenspace.
pub fn projective_measure<R: Rng + ?Sized>(
    s: &PureState,
    a: &CMatrix,
    rng: &mut R,
) -> Result<(f64, PureState), PhenomenonError> {
    check_observable(s, a)?;
    let psi = s.to_vector();
    let projections: Vec<(f64, CVector)> = eigenspaces(a)
        .into_iter()
        .map(|(l, vs)| {
            let mut proj = CVector::zeros(psi.len());
            for v in &vs {
                proj += v * v.dotc(&psi);
            }
            (l, proj)
        })
        .collect();
    let weights: Vec<f64> = projections
        .iter()
        .map(|(_, p)| {
            let w = p.norm_squared();
            if w <= NEGLIGIBLE_WEIGHT {
                0.0
            } else {
                w
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("state is non-zero");
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if *w > 0.0 && u < acc {
            chosen = k;
            break;
        }
    }
    let (value, proj) = &projections[chosen];
    Ok((*value, PureState::from_vector(proj)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementMode {
    Protective,
    Projective,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolOutcome {
    /// `A, B, A, B, ...`, length `2k`.
    pub values: Vec<f64>,
    /// Every `A` reading equals the first `A` reading and likewise for `B`.
    pub constant: bool,
}

/// Measures `A` and `B` alternately `k` times each.
///
/// Protective read-outs leave the state alone. Projective read-outs replace
/// the state by its post-measurement projection before the next observable.
pub fn alternating_protocol(
    s: &PureState,
    a: &CMatrix,
    b: &CMatrix,
    k: usize,
    mode: MeasurementMode,
    seed: u64,
) -> Result<ProtocolOutcome, PhenomenonError> {
    if k < 2 {
        return Err(PhenomenonError::InvalidRepetitions(k));
    }
    check_observable(s, a)?;
    check_observable(s, b)?;
    let mut values = Vec::with_capacity(2 * k);
    match mode {
        MeasurementMode::Protective => {
            for _ in 0..k {
                values.push(protective_measure(s, a)?);
                values.push(protective_measure(s, b)?);
            }
        }
        MeasurementMode::Projective => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut state = s.clone();
            for _ in 0..k {
                for obs in [a, b] {
                    let (value, post) = projective_measure(&state, obs, &mut rng)?;
                    values.push(value);
                    state = post;
                }
            }
        }
    }
    let constant = values.iter().step_by(2).all(|v| *v == values[0])
        && values.iter().skip(1).step_by(2).all(|v| *v == values[1]);
    Ok(ProtocolOutcome { values, constant })
}

/// Pauli matrices `σ_x, σ_y, σ_z`.
pub fn pauli() -> [CMatrix; 3] {
    use crate::linalg::c;
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    [
        CMatrix::from_row_slice(2, 2, &[z, one, one, z]),
        CMatrix::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        CMatrix::from_row_slice(2, 2, &[one, z, z, -one]),
    ]
}
