use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PhenomenonError;
use crate::linalg::{max_abs, unitarity_defect, CMatrix};
use crate::state::PureState;

/// Tolerance on `U†U = I` and on orthonormality of the final basis.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on `Σ_i |<β_i|Uα>|² = 1`.
pub const SPAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledState {
    pub label: String,
    pub state: PureState,
}

impl LabeledState {
    pub fn new(label: impl Into<String>, state: PureState) -> Self {
        Self {
            label: label.into(),
            state,
        }
    }
}

/// Fixed experimental conditions: named initial states, the evolution `U` and
/// an orthonormal set of possible final states.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    label: String,
    initials: Vec<LabeledState>,
    evolution: CMatrix,
    finals: Vec<LabeledState>,
}

impl Scenario {
    pub fn new(
        label: impl Into<String>,
        initials: Vec<LabeledState>,
        evolution: CMatrix,
        finals: Vec<LabeledState>,
    ) -> Result<Self, PhenomenonError> {
        let dim = evolution.nrows();
        if evolution.ncols() != dim {
            return Err(PhenomenonError::DimensionMismatch(evolution.ncols(), dim));
        }
        for s in initials.iter().chain(&finals) {
            if s.state.dim() != dim {
                return Err(PhenomenonError::DimensionMismatch(s.state.dim(), dim));
            }
        }
        if initials.is_empty() || finals.is_empty() {
            return Err(PhenomenonError::Schema(
                "scenario needs at least one initial and one final state".into(),
            ));
        }
        let defect = unitarity_defect(&evolution);
        if defect > UNITARY_TOL {
            return Err(PhenomenonError::NotUnitary(defect));
        }
        check_unique(&initials)?;
        check_unique(&finals)?;
        // A label may name both an initial and a final state only if it is the
        // same ray in both roles.
        for i in &initials {
            if let Some(f) = finals.iter().find(|f| f.label == i.label) {
                if !i.state.ray_eq(&f.state, 1e-12) {
                    return Err(PhenomenonError::DuplicateLabel(i.label.clone()));
                }
            }
        }
        let mut worst = 0.0f64;
        for (a, fa) in finals.iter().enumerate() {
            for (b, fb) in finals.iter().enumerate() {
                let overlap = fa.state.inner(&fb.state)?;
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((overlap - Complex64::new(target, 0.0)).norm());
            }
        }
        if worst > UNITARY_TOL {
            return Err(PhenomenonError::NotOrthonormal(worst));
        }
        let scenario = Self {
            label: label.into(),
            initials,
            evolution,
            finals,
        };
        for init in &scenario.initials {
            let captured: f64 = scenario.born_probabilities_for(&init.state)?.iter().sum();
            if (captured - 1.0).abs() > SPAN_TOL {
                return Err(PhenomenonError::SpanViolation {
                    label: init.label.clone(),
                    captured,
                });
            }
        }
        Ok(scenario)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.evolution.nrows()
    }

    pub fn initials(&self) -> &[LabeledState] {
        &self.initials
    }

    pub fn finals(&self) -> &[LabeledState] {
        &self.finals
    }

    pub fn evolution(&self) -> &CMatrix {
        &self.evolution
    }

    pub fn initial(&self, label: &str) -> Option<&PureState> {
        self.initials
            .iter()
            .find(|s| s.label == label)
            .map(|s| &s.state)
    }

    pub fn final_state(&self, label: &str) -> Option<&PureState> {
        self.finals
            .iter()
            .find(|s| s.label == label)
            .map(|s| &s.state)
    }

    /// `|<β_i|U α>|²` for every final state, in declaration order.
    pub fn born_probabilities(&self, initial: &str) -> Result<Vec<f64>, PhenomenonError> {
        let state = self
            .initial(initial)
            .ok_or_else(|| PhenomenonError::UnknownLabel(initial.to_string()))?;
        self.born_probabilities_for(state)
    }

    fn born_probabilities_for(&self, state: &PureState) -> Result<Vec<f64>, PhenomenonError> {
        let evolved = self.evolution.clone() * state.to_vector();
        Ok(self
            .finals
            .iter()
            .map(|f| {
                f.state
                    .amplitudes()
                    .iter()
                    .zip(evolved.iter())
                    .map(|(b, a)| b.conj() * a)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .collect())
    }

    /// Transition probability for a pair read as `(prepared, observed)`.
    ///
    /// An `(initial, final)` pair uses `|<β|Uα>|²`. A `(final, initial)` pair
    /// is the time-reversed process, whose probability is the same number
    /// `|<α|U†β>|² = |<β|Uα>|²`. Any other combination cannot occur and gets
    /// probability zero.
    pub fn pair_probability(&self, first: &str, second: &str) -> Result<f64, PhenomenonError> {
        let known = |l: &str| self.initial(l).is_some() || self.final_state(l).is_some();
        for l in [first, second] {
            if !known(l) {
                return Err(PhenomenonError::UnknownLabel(l.to_string()));
            }
        }
        let amplitude = |alpha: &PureState, beta: &PureState| -> f64 {
            let evolved = self.evolution.clone() * alpha.to_vector();
            beta.amplitudes()
                .iter()
                .zip(evolved.iter())
                .map(|(b, a)| b.conj() * a)
                .sum::<Complex64>()
                .norm_sqr()
        };
        if let (Some(a), Some(b)) = (self.initial(first), self.final_state(second)) {
            return Ok(amplitude(a, b));
        }
        if let (Some(b), Some(a)) = (self.final_state(first), self.initial(second)) {
            return Ok(amplitude(a, b));
        }
        Ok(0.0)
    }

    /// Same scenario with states renamed through `map`; unmapped labels are
    /// kept.
    pub fn relabeled(
        &self,
        label: impl Into<String>,
        map: &[(&str, &str)],
    ) -> Result<Self, PhenomenonError> {
        let rename = |s: &LabeledState| {
            let label = map
                .iter()
                .find(|(from, _)| *from == s.label)
                .map(|(_, to)| to.to_string())
                .unwrap_or_else(|| s.label.clone());
            LabeledState::new(label, s.state.clone())
        };
        Scenario::new(
            label,
            self.initials.iter().map(rename).collect(),
            self.evolution.clone(),
            self.finals.iter().map(rename).collect(),
        )
    }

    pub fn to_file(&self) -> ScenarioFile {
        let pairs = |s: &PureState| s.amplitudes().iter().map(|z| [z.re, z.im]).collect();
        let mut unitary = Vec::with_capacity(self.dim() * self.dim());
        for r in 0..self.dim() {
            for c in 0..self.dim() {
                let z = self.evolution[(r, c)];
                unitary.push([z.re, z.im]);
            }
        }
        ScenarioFile {
            label: self.label.clone(),
            dim: self.dim(),
            initials: self
                .initials
                .iter()
                .map(|s| InitialEntry {
                    label: s.label.clone(),
                    amplitudes: pairs(&s.state),
                })
                .collect(),
            unitary,
            finals: self.finals.iter().map(|s| pairs(&s.state)).collect(),
            labels: self.finals.iter().map(|s| s.label.clone()).collect(),
        }
    }

    pub fn from_file(file: &ScenarioFile) -> Result<Self, PhenomenonError> {
        let dim = file.dim;
        if file.unitary.len() != dim * dim {
            return Err(PhenomenonError::Schema(format!(
                "unitary has {} entries, expected {}",
                file.unitary.len(),
                dim * dim
            )));
        }
        if file.finals.len() != file.labels.len() {
            return Err(PhenomenonError::Schema(format!(
                "{} final states but {} labels",
                file.finals.len(),
                file.labels.len()
            )));
        }
        let to_state = |amps: &[[f64; 2]]| -> Result<PureState, PhenomenonError> {
            if amps.len() != dim {
                return Err(PhenomenonError::DimensionMismatch(amps.len(), dim));
            }
            Ok(PureState::new(
                amps.iter()
                    .map(|[re, im]| Complex64::new(*re, *im))
                    .collect(),
            )?)
        };
        let evolution = DMatrix::from_row_iterator(
            dim,
            dim,
            file.unitary.iter().map(|[re, im]| Complex64::new(*re, *im)),
        );
        let initials = file
            .initials
            .iter()
            .map(|e| Ok(LabeledState::new(e.label.clone(), to_state(&e.amplitudes)?)))
            .collect::<Result<Vec<_>, PhenomenonError>>()?;
        let finals = file
            .finals
            .iter()
            .zip(&file.labels)
            .map(|(a, l)| Ok(LabeledState::new(l.clone(), to_state(a)?)))
            .collect::<Result<Vec<_>, PhenomenonError>>()?;
        Scenario::new(file.label.clone(), initials, evolution, finals)
    }

    pub fn from_json(text: &str) -> Result<Self, PhenomenonError> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| PhenomenonError::Schema(e.to_string()))?;
        Self::from_file(&file)
    }
}

fn check_unique(states: &[LabeledState]) -> Result<(), PhenomenonError> {
    for (i, s) in states.iter().enumerate() {
        if states[..i].iter().any(|t| t.label == s.label) {
            return Err(PhenomenonError::DuplicateLabel(s.label.clone()));
        }
    }
    Ok(())
}

/// On-disk scenario description. Complex numbers are `[re, im]` pairs and the
/// unitary is stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub label: String,
    pub dim: usize,
    pub initials: Vec<InitialEntry>,
    pub unitary: Vec<[f64; 2]>,
    pub finals: Vec<Vec<[f64; 2]>>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialEntry {
    pub label: String,
    pub amplitudes: Vec<[f64; 2]>,
}

/// Half-silvered mirror at 45°: transmission keeps the amplitude, reflection
/// picks up a factor `i`.
pub fn beam_splitter() -> CMatrix {
    let t = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let r = Complex64::new(0.0, FRAC_1_SQRT_2);
    CMatrix::from_row_slice(2, 2, &[t, r, r, t])
}

/// 180° rotation of the mirror apparatus, exchanging the lamp and detector
/// ports.
pub fn penrose_rotation() -> CMatrix {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    CMatrix::from_row_slice(2, 2, &[o, l, l, o])
}

/// Spin prepared along `+x`, analysed along `z`.
pub fn stern_gerlach() -> Scenario {
    Scenario::new(
        "stern-gerlach",
        vec![LabeledState::new(
            "x+",
            PureState::from_real(&[1.0, 1.0]).expect("valid"),
        )],
        CMatrix::identity(2, 2),
        vec![
            LabeledState::new("up", PureState::basis(2, 0)),
            LabeledState::new("down", PureState::basis(2, 1)),
        ],
    )
    .expect("built-in scenario is valid")
}

/// Lamp photon `alpha1` either transmitted to the detector (`beta1`) or
/// reflected onto the wall (`beta2`).
pub fn penrose() -> Scenario {
    Scenario::new(
        "penrose",
        vec![LabeledState::new("alpha1", PureState::basis(2, 0))],
        beam_splitter(),
        vec![
            LabeledState::new("beta1", PureState::basis(2, 0)),
            LabeledState::new("beta2", PureState::basis(2, 1)),
        ],
    )
    .expect("built-in scenario is valid")
}

/// The mirror experiment after the 180° rotation: emission from the detector
/// position ends at the lamp (`alpha1*`) or at the opposite wall (`alpha2*`).
pub fn penrose_rotated() -> Scenario {
    super::apply_symmetry(&penrose(), &penrose_rotation())
        .and_then(|s| {
            s.relabeled(
                "penrose-rotated",
                &[
                    ("alpha1", "beta1*"),
                    ("beta1", "alpha1*"),
                    ("beta2", "alpha2*"),
                ],
            )
        })
        .expect("built-in scenario is valid")
}

/// No evolution and an initial state equal to one of the finals: every trial
/// ends where it started.
pub fn deterministic() -> Scenario {
    Scenario::new(
        "deterministic",
        vec![LabeledState::new("beta1", PureState::basis(2, 0))],
        CMatrix::identity(2, 2),
        vec![
            LabeledState::new("beta1", PureState::basis(2, 0)),
            LabeledState::new("beta2", PureState::basis(2, 1)),
        ],
    )
    .expect("built-in scenario is valid")
}

/// Qutrit with final weights `(1/2, 1/4, 1/4)`.
pub fn three_outcome() -> Scenario {
    Scenario::new(
        "three-outcome",
        vec![LabeledState::new(
            "psi",
            PureState::from_real(&[0.5f64.sqrt(), 0.5, 0.5]).expect("valid"),
        )],
        CMatrix::identity(3, 3),
        (0..3)
            .map(|k| LabeledState::new(format!("b{}", k + 1), PureState::basis(3, k)))
            .collect(),
    )
    .expect("built-in scenario is valid")
}

/// Built-in scenarios by name.
pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "stern-gerlach" => Some(stern_gerlach()),
        "penrose" => Some(penrose()),
        "penrose-rotated" => Some(penrose_rotated()),
        "deterministic" => Some(deterministic()),
        "three-outcome" => Some(three_outcome()),
        _ => None,
    }
}

pub const BUILTIN_NAMES: &[&str] = &[
    "stern-gerlach",
    "penrose",
    "penrose-rotated",
    "deterministic",
    "three-outcome",
];

pub(crate) fn assert_square_unitary(v: &CMatrix, dim: usize) -> Result<(), PhenomenonError> {
    if v.nrows() != dim || v.ncols() != dim {
        return Err(PhenomenonError::DimensionMismatch(v.nrows(), dim));
    }
    let defect = unitarity_defect(v);
    if defect > UNITARY_TOL {
        return Err(PhenomenonError::NotUnitary(defect));
    }
    Ok(())
}

pub(crate) fn hermitian_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - a.adjoint()))
}
