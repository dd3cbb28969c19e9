//! Numerics for rays, branch counting, seeded trial logs, modular momentum and gauge holonomy.
//!
//! The crate is organised around five subsystems:
//!
//! * [`state`]: rays in a finite-dimensional Hilbert space and the
//!   Fubini–Study distance `cos(s/2) = |<ψ|ψ'>|`.
//! * [`born`]: transition probabilities obtained from equidistance by
//!   splitting every branch into equal-weight sub-branches of an auxiliary
//!   system.
//! * [`phenomenon`]: seeded Monte-Carlo runs of trials `(initial, final)`,
//!   forward/backward conditional tables, a time-direction classifier and
//!   protective versus projective measurement protocols.
//! * [`modular`]: the translation operator `exp(ipℓ)` on a periodic grid and
//!   the Aharonov–Bohm style exchange of modular momentum.
//! * [`holonomy`]: Lie-algebra catalogs, path-ordered exponentials of the
//!   Poincaré × gauge connection, small-loop field strengths and the U(1)
//!   phase factor.
//!
//! Conventions: `ħ = 1`; complex matrices are `nalgebra::DMatrix<Complex64>`.

#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN; index loops mirror the tensor formulas
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod born;
pub mod holonomy;
pub mod linalg;
pub mod modular;
pub mod phenomenon;
pub mod state;

pub use num_complex::Complex64;

pub use born::{
    auxiliary_expansion, check_equidistance, derive_probabilities, phase_invariance_check,
    rational_partition, AuxiliaryExpansion, BornDerivation, BornError, BornInstance, Equidistance,
    RationalPartition,
};
pub use holonomy::{
    Curve, Factor, FieldValues, GaugeFunction, GroupElement, GroupSpec, HolonomyError, LieAlgebra,
    Preset,
};
pub use linalg::CMatrix;
pub use modular::{ModularError, PacketSpec, WavePacketGrid};
pub use phenomenon::{PhenomenonError, Scenario, TimeDirection, TrialLog};
pub use state::{PureState, StateError};
