use serde::{Deserialize, Serialize};

use super::HolonomyError;
use crate::linalg::{c, commutator, direct_sum, frobenius, CMatrix, I};

/// Tolerance for generator brackets against the declared constants.
pub const BRACKET_TOL: f64 = 1e-12;

/// Minkowski metric `diag(−1, 1, 1, 1)`.
pub const ETA: [f64; 4] = [-1.0, 1.0, 1.0, 1.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    U1 { charge: f64 },
    Su2,
    Su3,
    Lorentz,
    Poincare,
}

impl Factor {
    /// Representation dimension.
    pub fn dim(&self) -> usize {
        match self {
            Factor::U1 { .. } => 1,
            Factor::Su2 => 2,
            Factor::Su3 => 3,
            Factor::Lorentz => 4,
            Factor::Poincare => 5,
        }
    }

    pub fn is_spacetime(&self) -> bool {
        matches!(self, Factor::Lorentz | Factor::Poincare)
    }

    /// Whether group elements of this factor are unitary matrices.
    pub fn is_unitary(&self) -> bool {
        !self.is_spacetime()
    }

    pub fn name(&self) -> String {
        match self {
            Factor::U1 { charge } => format!("u1(e={charge})"),
            Factor::Su2 => "su2".into(),
            Factor::Su3 => "su3".into(),
            Factor::Lorentz => "lorentz".into(),
            Factor::Poincare => "poincare".into(),
        }
    }
}

/// A product group, represented block-diagonally in factor order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub factors: Vec<Factor>,
}

impl GroupSpec {
    pub fn new(factors: Vec<Factor>) -> Self {
        Self { factors }
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(Factor::dim).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().sum()
    }
}

/// Position of one factor inside the block-diagonal representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    pub factor: Factor,
    pub offset: usize,
    pub dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    /// Index into the factor list.
    pub factor: usize,
    /// Embedded in the full representation.
    pub matrix: CMatrix,
}

/// Generator catalog with `[T_m, T_n] = i C^k_mn T_k` checked at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlgebra {
    spec: GroupSpec,
    dim: usize,
    blocks: Vec<Block>,
    generators: Vec<Generator>,
    structure: Vec<f64>,
    gauge: Vec<usize>,
    translations: Option<Vec<CMatrix>>,
    rotations: Option<Vec<CMatrix>>,
    spacetime_block: Option<usize>,
}

/// Per-factor generators with declared structure constants
/// (`c[(k * n + m) * n + p]` for `[T_m, T_p] = i c^k T_k`).
struct FactorAlgebra {
    names: Vec<String>,
    matrices: Vec<CMatrix>,
    structure: Vec<f64>,
}

fn unit(dim: usize, r: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(r, col)] = c(1.0, 0.0);
    m
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Totally antisymmetric su(3) constants, 0-based indices.
fn su3_f(a: usize, b: usize, k: usize) -> f64 {
    const H: f64 = 0.5;
    const R: f64 = 0.866_025_403_784_438_6;
    let table: [((usize, usize, usize), f64); 9] = [
        ((0, 1, 2), 1.0),
        ((0, 3, 6), H),
        ((0, 4, 5), -H),
        ((1, 3, 5), H),
        ((1, 4, 6), H),
        ((2, 3, 4), H),
        ((2, 5, 6), -H),
        ((3, 4, 7), R),
        ((5, 6, 7), R),
    ];
    for ((x, y, z), v) in table {
        let perms = [
            ((x, y, z), v),
            ((y, z, x), v),
            ((z, x, y), v),
            ((y, x, z), -v),
            ((x, z, y), -v),
            ((z, y, x), -v),
        ];
        for (p, s) in perms {
            if p == (a, b, k) {
                return s;
            }
        }
    }
    0.0
}

fn u1_algebra(charge: f64) -> FactorAlgebra {
    FactorAlgebra {
        names: vec!["T".into()],
        matrices: vec![CMatrix::from_element(1, 1, c(-charge, 0.0))],
        structure: vec![0.0],
    }
}

fn su2_algebra() -> FactorAlgebra {
    let [sx, sy, sz] = crate::phenomenon::pauli();
    let matrices: Vec<CMatrix> = [sx, sy, sz].into_iter().map(|s| s * c(0.5, 0.0)).collect();
    let mut structure = vec![0.0; 27];
    for k in 0..3 {
        for m in 0..3 {
            for p in 0..3 {
                structure[(k * 3 + m) * 3 + p] = levi_civita(m, p, k);
            }
        }
    }
    FactorAlgebra {
        names: (1..=3).map(|i| format!("J{i}")).collect(),
        matrices,
        structure,
    }
}

/// Gell-Mann matrices over 2.
fn su3_algebra() -> FactorAlgebra {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    let i = I;
    let r = c(1.0 / 3f64.sqrt(), 0.0);
    let lambdas: [[crate::Complex64; 9]; 8] = [
        [z, o, z, o, z, z, z, z, z],
        [z, -i, z, i, z, z, z, z, z],
        [o, z, z, z, -o, z, z, z, z],
        [z, z, o, z, z, z, o, z, z],
        [z, z, -i, z, z, z, i, z, z],
        [z, z, z, z, z, o, z, o, z],
        [z, z, z, z, z, -i, z, i, z],
        [r, z, z, z, r, z, z, z, -r * 2.0],
    ];
    let matrices = lambdas
        .iter()
        .map(|l| CMatrix::from_row_slice(3, 3, l) * c(0.5, 0.0))
        .collect();
    let mut structure = vec![0.0; 512];
    for k in 0..8 {
        for m in 0..8 {
            for p in 0..8 {
                structure[(k * 8 + m) * 8 + p] = su3_f(m, p, k);
            }
        }
    }
    FactorAlgebra {
        names: (1..=8).map(|i| format!("T{i}")).collect(),
        matrices,
        structure,
    }
}

/// `M^b_a = −i (E_ab − η_aa η_bb E_ba)` in dimension `dim ≥ 4`.
pub(crate) fn lorentz_m(dim: usize, a: usize, b: usize) -> CMatrix {
    (unit(dim, a, b) - unit(dim, b, a) * c(ETA[a] * ETA[b], 0.0)) * c(0.0, -1.0)
}

/// `P_a = i E_a4` in the 5×5 affine representation.
pub(crate) fn translation_p(a: usize) -> CMatrix {
    unit(5, a, 4) * I
}

/// Independent rotation/boost pairs `a < b`.
const LORENTZ_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// Lorentz generators `L_ab = M^b_a` (`a < b`), optionally preceded by
/// `P_0..P_3`.
///
/// With `J_ab = η_bb E_ab − η_aa E_ba` one has `L_ab = −i η_bb J_ab`,
/// `[J_ab, J_cd] = η_bc J_ad − η_ac J_bd − η_bd J_ac + η_ad J_bc` and
/// `[J_ab, E_c4] = η_bc E_a4 − η_ac E_b4`; the constants below follow from
/// these identities.
fn spacetime_algebra(with_translations: bool) -> FactorAlgebra {
    let dim = if with_translations { 5 } else { 4 };
    let offset = if with_translations { 4 } else { 0 };
    let n = offset + LORENTZ_PAIRS.len();
    let mut names = Vec::with_capacity(n);
    let mut matrices = Vec::with_capacity(n);
    if with_translations {
        for a in 0..4 {
            names.push(format!("P{a}"));
            matrices.push(translation_p(a));
        }
    }
    for &(a, b) in &LORENTZ_PAIRS {
        names.push(format!("M{a}{b}"));
        matrices.push(lorentz_m(dim, a, b));
    }

    // J_xy in terms of the L basis: J_xy = i η_yy L_xy for x < y.
    let j_index = |x: usize, y: usize| -> Option<(usize, f64)> {
        if x == y {
            return None;
        }
        let (lo, hi, sign) = if x < y { (x, y, 1.0) } else { (y, x, -1.0) };
        let pos = LORENTZ_PAIRS.iter().position(|&p| p == (lo, hi))?;
        // i η_hh L, with the result divided by i below
        Some((offset + pos, sign * ETA[hi]))
    };
    let eta = |x: usize, y: usize| if x == y { ETA[x] } else { 0.0 };

    let mut structure = vec![0.0; n * n * n];
    let mut set = |k: usize, m: usize, p: usize, v: f64| structure[(k * n + m) * n + p] += v;
    for (i1, &(a, b)) in LORENTZ_PAIRS.iter().enumerate() {
        for (i2, &(cc, d)) in LORENTZ_PAIRS.iter().enumerate() {
            // [L_ab, L_cd] = −η_bb η_dd [J_ab, J_cd]
            let pre = -ETA[b] * ETA[d];
            let terms = [
                (eta(b, cc), a, d),
                (-eta(a, cc), b, d),
                (-eta(b, d), a, cc),
                (eta(a, d), b, cc),
            ];
            for (coef, x, y) in terms {
                if coef == 0.0 {
                    continue;
                }
                if let Some((k, s)) = j_index(x, y) {
                    // pre · coef · i s L_k = i C L_k
                    set(k, offset + i1, offset + i2, pre * coef * s);
                }
            }
        }
        if with_translations {
            for cc in 0..4 {
                // [L_ab, P_c] = −i η_bb · i [J_ab, E_c4]
                //            = η_bb (η_bc E_a4 − η_ac E_b4), and E_x4 = −i P_x
                let pre = ETA[b];
                for (coef, x) in [(eta(b, cc), a), (-eta(a, cc), b)] {
                    if coef == 0.0 {
                        continue;
                    }
                    // pre · coef · (−i) P_x = i C P_x
                    set(x, offset + i1, cc, -pre * coef);
                    set(x, cc, offset + i1, pre * coef);
                }
            }
        }
    }
    FactorAlgebra {
        names,
        matrices,
        structure,
    }
}

fn factor_algebra(f: &Factor) -> Result<FactorAlgebra, HolonomyError> {
    match f {
        Factor::U1 { charge } => {
            if !charge.is_finite() {
                return Err(HolonomyError::UnsupportedFactor(format!(
                    "u1 charge {charge}"
                )));
            }
            Ok(u1_algebra(*charge))
        }
        Factor::Su2 => Ok(su2_algebra()),
        Factor::Su3 => Ok(su3_algebra()),
        Factor::Lorentz => Ok(spacetime_algebra(false)),
        Factor::Poincare => Ok(spacetime_algebra(true)),
    }
}

fn embed(block: &CMatrix, offset: usize, total: usize) -> CMatrix {
    let mut m = CMatrix::zeros(total, total);
    m.view_mut((offset, offset), block.shape()).copy_from(block);
    m
}

/// Largest `‖[T_m, T_n] − i Σ_k C^k_mn T_k‖_F` over all pairs.
pub fn bracket_defect(generators: &[CMatrix], structure: &[f64]) -> f64 {
    let n = generators.len();
    let mut worst: f64 = 0.0;
    for m in 0..n {
        for p in 0..n {
            let mut rhs = CMatrix::zeros(generators[0].nrows(), generators[0].ncols());
            for (k, t) in generators.iter().enumerate() {
                let ck = structure[(k * n + m) * n + p];
                if ck != 0.0 {
                    rhs += t * c(0.0, ck);
                }
            }
            worst = worst.max(frobenius(
                &(commutator(&generators[m], &generators[p]) - rhs),
            ));
        }
    }
    worst
}

/// Concrete generators of every factor, embedded block-diagonally.
pub fn build_group(spec: &GroupSpec) -> Result<LieAlgebra, HolonomyError> {
    if spec.factors.is_empty() {
        return Err(HolonomyError::InvalidGroup("no factors".into()));
    }
    if spec.factors.iter().filter(|f| f.is_spacetime()).count() > 1 {
        return Err(HolonomyError::InvalidGroup(
            "at most one lorentz or poincare factor".into(),
        ));
    }
    let dim = spec.dim();
    let mut blocks = Vec::new();
    let mut generators = Vec::new();
    let mut gauge = Vec::new();
    let mut per_factor: Vec<(usize, FactorAlgebra)> = Vec::new();
    let mut offset = 0;
    for (fi, f) in spec.factors.iter().enumerate() {
        let alg = factor_algebra(f)?;
        let defect = bracket_defect(&alg.matrices, &alg.structure);
        if defect > BRACKET_TOL {
            return Err(HolonomyError::BracketViolation(defect));
        }
        blocks.push(Block {
            factor: *f,
            offset,
            dim: f.dim(),
        });
        per_factor.push((generators.len(), alg));
        let (_, alg) = per_factor.last().expect("just pushed");
        for (name, m) in alg.names.iter().zip(&alg.matrices) {
            if !f.is_spacetime() {
                gauge.push(generators.len());
            }
            generators.push(Generator {
                name: format!("{}:{name}", f.name()),
                factor: fi,
                matrix: embed(m, offset, dim),
            });
        }
        offset += f.dim();
    }

    let n = generators.len();
    let mut structure = vec![0.0; n * n * n];
    for (start, alg) in &per_factor {
        let nf = alg.matrices.len();
        for k in 0..nf {
            for m in 0..nf {
                for p in 0..nf {
                    structure[((start + k) * n + start + m) * n + start + p] =
                        alg.structure[(k * nf + m) * nf + p];
                }
            }
        }
    }

    let spacetime_block = blocks.iter().position(|b| b.factor.is_spacetime());
    let (translations, rotations) = match spacetime_block.map(|i| blocks[i]) {
        Some(b) => {
            let local = b.dim;
            let rot = (0..16)
                .map(|ab| embed(&lorentz_m(local, ab / 4, ab % 4), b.offset, dim))
                .collect();
            let tr = (b.factor == Factor::Poincare).then(|| {
                (0..4)
                    .map(|a| embed(&translation_p(a), b.offset, dim))
                    .collect()
            });
            (tr, Some(rot))
        }
        None => (None, None),
    };

    Ok(LieAlgebra {
        spec: spec.clone(),
        dim,
        blocks,
        generators,
        structure,
        gauge,
        translations,
        rotations,
        spacetime_block,
    })
}

impl LieAlgebra {
    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    /// Dimension of the full representation.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// `C^k_mn` for indices into [`LieAlgebra::generators`].
    pub fn structure_constant(&self, k: usize, m: usize, n: usize) -> f64 {
        let g = self.generators.len();
        self.structure[(k * g + m) * g + n]
    }

    /// Indices of the internal (gauge) generators `T_k`, in order.
    pub fn gauge_indices(&self) -> &[usize] {
        &self.gauge
    }

    pub fn gauge_count(&self) -> usize {
        self.gauge.len()
    }

    /// `T_k` for the `k`-th gauge generator.
    pub fn gauge_generator(&self, k: usize) -> &CMatrix {
        &self.generators[self.gauge[k]].matrix
    }

    /// `C^k_mn` restricted to gauge generators.
    pub fn gauge_structure(&self, k: usize, m: usize, n: usize) -> f64 {
        self.structure_constant(self.gauge[k], self.gauge[m], self.gauge[n])
    }

    /// `P_a`, present for a Poincaré factor.
    pub fn translation(&self, a: usize) -> Option<&CMatrix> {
        self.translations.as_ref().map(|t| &t[a])
    }

    /// `M^b_a` for all frame indices, present for a spacetime factor.
    pub fn rotation(&self, a: usize, b: usize) -> Option<&CMatrix> {
        self.rotations.as_ref().map(|m| &m[a * 4 + b])
    }

    pub fn spacetime_block(&self) -> Option<Block> {
        self.spacetime_block.map(|i| self.blocks[i])
    }

    pub fn has_translations(&self) -> bool {
        self.translations.is_some()
    }

    /// Largest bracket defect over the full catalog.
    pub fn bracket_defect(&self) -> f64 {
        let mats: Vec<CMatrix> = self.generators.iter().map(|g| g.matrix.clone()).collect();
        bracket_defect(&mats, &self.structure)
    }

    /// Block-diagonal identity of the representation.
    pub fn identity(&self) -> CMatrix {
        CMatrix::identity(self.dim, self.dim)
    }

    /// Direct sum of per-factor blocks, in factor order.
    pub fn assemble(&self, blocks: &[CMatrix]) -> CMatrix {
        direct_sum(blocks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hs_inner, max_abs};

    fn group(f: Vec<Factor>) -> LieAlgebra {
        build_group(&GroupSpec::new(f)).unwrap()
    }

    #[test]
    fn su2_defining_relation() {
        let g = group(vec![Factor::Su2]);
        let j: Vec<&CMatrix> = g.generators().iter().map(|t| &t.matrix).collect();
        let lhs = commutator(j[0], j[1]);
        assert!(max_abs(&(lhs - j[2] * I)) < 1e-14);
        assert_eq!(g.gauge_count(), 3);
    }

    #[test]
    fn translations_commute() {
        let g = group(vec![Factor::Poincare]);
        for a in 0..4 {
            for b in 0..4 {
                let t = commutator(g.translation(a).unwrap(), g.translation(b).unwrap());
                assert!(max_abs(&t) < 1e-14);
            }
        }
        assert_eq!(g.generators().len(), 10);
        assert_eq!(g.gauge_count(), 0);
    }

    #[test]
    fn su3_constants_match_trace_formula() {
        // f_abc = −2i tr([T_a, T_b] T_c) for tr(T_a T_b) = δ_ab / 2
        let g = group(vec![Factor::Su3]);
        let t: Vec<&CMatrix> = g.generators().iter().map(|x| &x.matrix).collect();
        for a in 0..8 {
            for b in 0..8 {
                let norm = (t[a] * t[b]).trace();
                let want = if a == b { 0.5 } else { 0.0 };
                assert!((norm - want).norm() < 1e-15);
                for k in 0..8 {
                    let f = (commutator(t[a], t[b]) * t[k]).trace() * c(0.0, -2.0);
                    assert!(f.im.abs() < 1e-15);
                    assert!((f.re - g.structure_constant(k, a, b)).abs() < 1e-14);
                }
            }
        }
        assert_eq!(g.structure_constant(2, 0, 1), 1.0);
        assert_eq!(g.structure_constant(6, 0, 3), 0.5);
    }

    #[test]
    fn every_catalog_satisfies_its_brackets() {
        let all = vec![
            vec![Factor::U1 { charge: 1.3 }],
            vec![Factor::Su2],
            vec![Factor::Su3],
            vec![Factor::Lorentz],
            vec![Factor::Poincare],
            vec![
                Factor::Poincare,
                Factor::U1 { charge: -1.0 },
                Factor::Su2,
                Factor::Su3,
            ],
        ];
        for spec in all {
            let g = group(spec);
            assert!(g.bracket_defect() <= BRACKET_TOL);
        }
    }

    #[test]
    fn generators_are_independent() {
        let g = group(vec![Factor::Poincare, Factor::Su2]);
        let n = g.generators().len();
        let gram = CMatrix::from_fn(n, n, |r, col| {
            hs_inner(&g.generators()[r].matrix, &g.generators()[col].matrix)
        });
        assert!(gram.determinant().norm() > 1e-6);
    }

    #[test]
    fn lorentz_rotation_generator_is_antisymmetric_in_lowered_indices() {
        // i M^b_a has entries η-antisymmetric: (E_ab − η_aa η_bb E_ba)
        let g = group(vec![Factor::Lorentz]);
        for a in 0..4 {
            for b in 0..4 {
                let m = g.rotation(a, b).unwrap() * I;
                for r in 0..4 {
                    for s in 0..4 {
                        let lowered = ETA[r] * m[(r, s)].re;
                        let swapped = ETA[s] * m[(s, r)].re;
                        assert!((lowered + swapped).abs() < 1e-15);
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_groups() {
        assert!(matches!(
            build_group(&GroupSpec::new(vec![])),
            Err(HolonomyError::InvalidGroup(_))
        ));
        assert!(matches!(
            build_group(&GroupSpec::new(vec![Factor::Lorentz, Factor::Poincare])),
            Err(HolonomyError::InvalidGroup(_))
        ));
        assert!(matches!(
            build_group(&GroupSpec::new(vec![Factor::U1 { charge: f64::NAN }])),
            Err(HolonomyError::UnsupportedFactor(_))
        ));
    }

    #[test]
    fn factor_json() {
        let spec: GroupSpec =
            serde_json::from_str(r#"{"factors":[{"u1":{"charge":2.0}},"su2","poincare"]}"#)
                .unwrap();
        assert_eq!(
            spec.factors,
            vec![Factor::U1 { charge: 2.0 }, Factor::Su2, Factor::Poincare]
        );
        assert_eq!(spec.dim(), 8);
        assert!(serde_json::from_str::<GroupSpec>(r#"{"factors":["so10"]}"#).is_err());
    }
}
