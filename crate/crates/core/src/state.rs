//! Rays in a finite-dimensional Hilbert space and the Fubini–Study distance.
//!
//! The distance is scaled so that the projective line through two states is a
//! unit sphere: `cos(s/2) = |<ψ|ψ'>|`, `s ∈ [0, π]`, and orthogonal states sit
//! at antipodal points.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{CMatrix, CVector};

/// Norms at or below this are treated as the zero vector.
pub const ZERO_NORM: f64 = 1e-12;

/// Overlaps below this make the geodesic midpoint ill-defined.
pub const ORTHOGONAL_OVERLAP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("empty amplitude list")]
    EmptyInput,
    #[error("amplitude vector has norm {0:e}, cannot normalise")]
    ZeroVector(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("states are orthogonal; every great circle through them is a geodesic")]
    AmbiguousMidpoint,
}

/// A normalised state vector with its global phase fixed.
///
/// The representative is chosen so the first amplitude with modulus above
/// [`ZERO_NORM`] is real and positive; two vectors differing by a global phase
/// therefore produce the same `PureState`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Normalises `amplitudes` and fixes the ray gauge.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        if amplitudes.is_empty() {
            return Err(StateError::EmptyInput);
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > ZERO_NORM) {
            return Err(StateError::ZeroVector(norm));
        }
        let lead = amplitudes
            .iter()
            .position(|z| z.norm() / norm > ZERO_NORM)
            .unwrap_or(0);
        let phase = amplitudes[lead].conj() / amplitudes[lead].norm();
        // already-normalised input is left alone so that `new` is idempotent
        let scale = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
            phase
        } else {
            phase / norm
        };
        let mut amplitudes: Vec<Complex64> = amplitudes.into_iter().map(|z| z * scale).collect();
        // the rotation leaves round-off in the imaginary part of the lead
        amplitudes[lead] = Complex64::new(amplitudes[lead].norm(), 0.0);
        Ok(Self { amplitudes })
    }

    /// Convenience constructor from real amplitudes.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self, StateError> {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// The `k`-th computational basis vector of a `dim`-dimensional space.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes: amps }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn to_vector(&self) -> CVector {
        CVector::from_column_slice(&self.amplitudes)
    }

    pub fn from_vector(v: &CVector) -> Result<Self, StateError> {
        Self::new(v.iter().copied().collect())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<Complex64, StateError> {
        self.check_dim(other)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Image of the state under a matrix, renormalised.
    pub fn apply(&self, m: &CMatrix) -> Result<PureState, StateError> {
        if m.ncols() != self.dim() {
            return Err(StateError::DimensionMismatch(m.ncols(), self.dim()));
        }
        Self::from_vector(&(m * self.to_vector()))
    }

    /// Ray equality: `|<ψ|ψ'>| = 1` within `tol`.
    pub fn ray_eq(&self, other: &PureState, tol: f64) -> bool {
        match self.inner(other) {
            Ok(z) => (1.0 - z.norm()).abs() <= tol,
            Err(_) => false,
        }
    }

    fn check_dim(&self, other: &PureState) -> Result<(), StateError> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

/// Normalised ray representative of `amplitudes`.
pub fn make_state(amplitudes: Vec<Complex64>) -> Result<PureState, StateError> {
    PureState::new(amplitudes)
}

/// Fubini–Study distance in `[0, π]`.
pub fn fs_distance(s1: &PureState, s2: &PureState) -> Result<f64, StateError> {
    let overlap = s1.inner(s2)?.norm().clamp(0.0, 1.0);
    Ok(2.0 * overlap.acos())
}

/// `|<ψ|ψ'>|²`, which equals `cos²(s/2)` of the distance.
pub fn transition_probability(s1: &PureState, s2: &PureState) -> Result<f64, StateError> {
    Ok(s1.inner(s2)?.norm_sqr().min(1.0))
}

/// Point halfway along the unique shortest geodesic between two rays.
///
/// The second state is phase-aligned so `<ψ1|ψ2>` is real positive; the
/// midpoint is then the normalised sum of the two representatives.
pub fn geodesic_midpoint(s1: &PureState, s2: &PureState) -> Result<PureState, StateError> {
    let overlap = s1.inner(s2)?;
    if overlap.norm() <= ORTHOGONAL_OVERLAP {
        return Err(StateError::AmbiguousMidpoint);
    }
    let align = overlap.conj() / overlap.norm();
    let sum: Vec<Complex64> = s1
        .amplitudes
        .iter()
        .zip(&s2.amplitudes)
        .map(|(a, b)| a + b * align)
        .collect();
    PureState::new(sum)
}

/// Largest possible distance, attained by orthogonal states.
pub const MAX_DISTANCE: f64 = PI;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, expm};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

    fn spin_x_plus() -> PureState {
        PureState::from_real(&[1.0, 1.0]).unwrap()
    }

    #[test]
    fn normalising_twice_changes_nothing() {
        let s = PureState::from_real(&[1.0, 1.0]).unwrap();
        assert_eq!(PureState::new(s.amplitudes().to_vec()).unwrap(), s);
        let t = PureState::new(vec![c(0.3, 0.4), c(-1.2, 0.5), c(0.0, 2.0)]).unwrap();
        assert_eq!(PureState::new(t.amplitudes().to_vec()).unwrap(), t);
    }

    #[test]
    fn make_state_scales_and_fixes_phase() {
        let s = PureState::from_real(&[2.0, 0.0]).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);

        let s = PureState::new(vec![c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        assert!((s.amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-15);

        let s = spin_x_plus();
        for z in s.amplitudes() {
            assert!((z.re - FRAC_1_SQRT_2).abs() < 1e-15 && z.im == 0.0);
        }
    }

    #[test]
    fn make_state_rejects_degenerate_input() {
        assert_eq!(PureState::new(vec![]), Err(StateError::EmptyInput));
        assert!(matches!(
            PureState::from_real(&[0.0, 1e-14]),
            Err(StateError::ZeroVector(_))
        ));
    }

    #[test]
    fn global_phase_gives_the_same_representative() {
        let a = PureState::new(vec![c(0.3, 0.4), c(-0.1, 0.7)]).unwrap();
        let phase = Complex64::from_polar(1.0, 1.234);
        let b = PureState::new(a.amplitudes().iter().map(|z| z * phase).collect()).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-15);
        }
        assert!(a.ray_eq(&b, 1e-12));
    }

    #[test]
    fn distance_examples() {
        let up = PureState::basis(2, 0);
        let down = PureState::basis(2, 1);
        assert_eq!(fs_distance(&up, &up).unwrap(), 0.0);
        assert!((fs_distance(&up, &down).unwrap() - PI).abs() < 1e-15);
        assert!((fs_distance(&up, &spin_x_plus()).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(
            fs_distance(&up, &PureState::basis(3, 0)),
            Err(StateError::DimensionMismatch(2, 3))
        );
    }

    #[test]
    fn transition_probability_examples() {
        let up = PureState::basis(2, 0);
        assert_eq!(transition_probability(&up, &up).unwrap(), 1.0);
        assert_eq!(
            transition_probability(&up, &PureState::basis(2, 1)).unwrap(),
            0.0
        );
        assert!((transition_probability(&spin_x_plus(), &up).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn midpoint_examples() {
        let up = PureState::basis(2, 0);
        let down = PureState::basis(2, 1);
        assert_eq!(
            geodesic_midpoint(&up, &down),
            Err(StateError::AmbiguousMidpoint)
        );
        assert!(geodesic_midpoint(&up, &up).unwrap().ray_eq(&up, 1e-15));

        let theta: f64 = 0.9;
        let rotated = PureState::from_real(&[theta.cos(), theta.sin()]).unwrap();
        let mid = geodesic_midpoint(&up, &rotated).unwrap();
        let want = PureState::from_real(&[(theta / 2.0).cos(), (theta / 2.0).sin()]).unwrap();
        assert!(mid.ray_eq(&want, 1e-14));
        let d1 = fs_distance(&mid, &up).unwrap();
        let d2 = fs_distance(&mid, &rotated).unwrap();
        let full = fs_distance(&up, &rotated).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
        assert!((d1 - full / 2.0).abs() < 1e-12);
    }

    fn arb_state(dim: usize) -> impl Strategy<Value = PureState> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_filter_map("non-zero", |v| {
                PureState::new(v.into_iter().map(|(r, i)| c(r, i)).collect()).ok()
            })
    }

    fn arb_hermitian(dim: usize) -> impl Strategy<Value = CMatrix> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
            let m = CMatrix::from_iterator(dim, dim, v.into_iter().map(|(r, i)| c(r, i)));
            (&m + m.adjoint()) * c(0.5, 0.0)
        })
    }

    proptest! {
        #[test]
        fn distance_is_a_symmetric_bounded_semimetric(a in arb_state(4), b in arb_state(4)) {
            let dab = fs_distance(&a, &b).unwrap();
            let dba = fs_distance(&b, &a).unwrap();
            prop_assert!((dab - dba).abs() < 1e-12);
            prop_assert!((0.0..=PI).contains(&dab));
            prop_assert!(fs_distance(&a, &a).unwrap() < 1e-6);
            prop_assert_eq!(dab < 1e-6, a.ray_eq(&b, 1e-12));
        }

        #[test]
        fn distance_invariant_under_common_unitary(
            a in arb_state(3), b in arb_state(3), h in arb_hermitian(3)
        ) {
            let u = expm(&(h * c(0.0, -1.0)));
            let before = fs_distance(&a, &b).unwrap();
            let after = fs_distance(&a.apply(&u).unwrap(), &b.apply(&u).unwrap()).unwrap();
            // arccos amplifies rounding near s = 0; compare overlaps there.
            let pa = transition_probability(&a, &b).unwrap();
            let pb = transition_probability(&a.apply(&u).unwrap(), &b.apply(&u).unwrap()).unwrap();
            prop_assert!((pa - pb).abs() < 1e-12);
            prop_assert!((before - after).abs() < 1e-10 || before < 1e-5);
        }

        #[test]
        fn probabilities_complete_in_two_dimensions(s in arb_state(2), t in arb_state(2)) {
            let a = t.amplitudes();
            let perp = PureState::new(vec![-a[1].conj(), a[0].conj()]).unwrap();
            let total = transition_probability(&s, &t).unwrap()
                + transition_probability(&s, &perp).unwrap();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }

        #[test]
        fn per_branch_phases_leave_distances_unchanged(
            s in arb_state(3), phases in proptest::collection::vec(0.0f64..6.3, 3)
        ) {
            let basis: Vec<PureState> = (0..3).map(|k| PureState::basis(3, k)).collect();
            let phased: Vec<PureState> = basis
                .iter()
                .zip(&phases)
                .map(|(b, &p)| {
                    PureState::new(b.amplitudes().iter().map(|z| z * Complex64::from_polar(1.0, p)).collect()).unwrap()
                })
                .collect();
            for (b, pb) in basis.iter().zip(&phased) {
                let d0 = fs_distance(&s, b).unwrap();
                let d1 = fs_distance(&s, pb).unwrap();
                prop_assert!((d0 - d1).abs() < 1e-12);
            }
        }
    }
}
