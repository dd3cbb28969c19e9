use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::algebra::{Block, LieAlgebra};
use super::field::{field_strengths, gamma_from_values, ConnectionField, FieldStrengths};
use super::HolonomyError;
use crate::linalg::{c, expm, expm_frechet, frobenius, unitarity_defect, CMatrix, I};

/// Endpoints closer than this make a curve closed.
pub const CLOSED_TOL: f64 = 1e-12;
/// Step cap for [`converged_holonomy`].
pub const MAX_STEPS: usize = 1 << 16;

/// Polyline `x(t)` through at least two finite vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    vertices: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self, HolonomyError> {
        if vertices.len() < 2 {
            return Err(HolonomyError::CurveTooShort(vertices.len()));
        }
        let d = vertices[0].len();
        if d == 0 {
            return Err(HolonomyError::BadCurve(
                "vertices have no coordinates".into(),
            ));
        }
        for v in &vertices {
            if v.len() != d {
                return Err(HolonomyError::DimensionMismatch(v.len(), d));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(HolonomyError::BadCurve("non-finite coordinate".into()));
            }
        }
        Ok(Self { vertices })
    }

    pub fn segment(from: &[f64], to: &[f64]) -> Result<Self, HolonomyError> {
        Self::new(vec![from.to_vec(), to.to_vec()])
    }

    /// Counter-clockwise square of side `a` in the `(μ, ν)` plane based at `x`.
    pub fn square_loop(x: &[f64], mu: usize, nu: usize, a: f64) -> Result<Self, HolonomyError> {
        if mu == nu || mu >= x.len() || nu >= x.len() {
            return Err(HolonomyError::BadPlane(mu, nu));
        }
        let mut v1 = x.to_vec();
        v1[mu] += a;
        let mut v2 = v1.clone();
        v2[nu] += a;
        let mut v3 = x.to_vec();
        v3[nu] += a;
        Self::new(vec![x.to_vec(), v1, v2, v3, x.to_vec()])
    }

    /// Regular polygon with `sides` edges around `center` in the first two
    /// coordinates, counter-clockwise from angle `phase`.
    pub fn polygon(
        center: [f64; 2],
        radius: f64,
        sides: usize,
        phase: f64,
    ) -> Result<Self, HolonomyError> {
        let mut v: Vec<Vec<f64>> = (0..sides)
            .map(|k| {
                let t = phase + 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
                vec![center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        if let Some(first) = v.first().cloned() {
            v.push(first);
        }
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn start(&self) -> &[f64] {
        &self.vertices[0]
    }

    pub fn end(&self) -> &[f64] {
        self.vertices.last().expect("at least two vertices")
    }

    /// Largest coordinate gap between start and end.
    pub fn closure_gap(&self) -> f64 {
        self.start()
            .iter()
            .zip(self.end())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_closed(&self) -> bool {
        self.closure_gap() <= CLOSED_TOL
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        Self { vertices: v }
    }

    /// `other ∘ self`: runs `self` first, then `other`.
    pub fn then(&self, other: &Curve) -> Result<Self, HolonomyError> {
        if self.dim() != other.dim() {
            return Err(HolonomyError::DimensionMismatch(other.dim(), self.dim()));
        }
        let gap = self
            .end()
            .iter()
            .zip(other.start())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > CLOSED_TOL {
            return Err(HolonomyError::BadCurve(format!(
                "curves do not meet (gap {gap:e})"
            )));
        }
        let mut v = self.vertices.clone();
        v.extend(other.vertices[1..].iter().cloned());
        Ok(Self { vertices: v })
    }

    /// One vertex per row; a non-numeric first row is taken as a header.
    pub fn read_csv<R: Read>(input: R) -> Result<Self, HolonomyError> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(input);
        let mut vertices = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| HolonomyError::BadCurve(e.to_string()))?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
            match parsed {
                Ok(v) => vertices.push(v),
                Err(_) if row == 0 => continue,
                Err(_) => {
                    return Err(HolonomyError::BadCurve(format!(
                        "row {}: cannot parse `{}`",
                        row + 1,
                        rec.iter().collect::<Vec<_>>().join(",")
                    )))
                }
            }
        }
        Self::new(vertices)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HolonomyError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| HolonomyError::BadCurve(e.to_string());
        for v in &self.vertices {
            w.write_record(v.iter().map(|x| x.to_string()))
                .map_err(io)?;
        }
        w.flush()
            .map_err(|e| HolonomyError::BadCurve(e.to_string()))
    }
}

/// Anything that yields `Γ_μ(x)` in a fixed representation.
pub trait ConnectionSource {
    fn chart_dim(&self) -> usize;
    fn algebra(&self) -> &LieAlgebra;
    fn gamma(&self, x: &[f64]) -> Result<Vec<CMatrix>, HolonomyError>;
}

/// A field checked against a catalog.
#[derive(Debug, Clone, Copy)]
pub struct BoundField<'a> {
    field: &'a ConnectionField,
    alg: &'a LieAlgebra,
}

impl<'a> BoundField<'a> {
    pub fn new(field: &'a ConnectionField, alg: &'a LieAlgebra) -> Result<Self, HolonomyError> {
        field.check_compatible(alg)?;
        Ok(Self { field, alg })
    }

    pub fn field(&self) -> &ConnectionField {
        self.field
    }
}

impl ConnectionSource for BoundField<'_> {
    fn chart_dim(&self) -> usize {
        self.field.chart_dim
    }

    fn algebra(&self) -> &LieAlgebra {
        self.alg
    }

    fn gamma(&self, x: &[f64]) -> Result<Vec<CMatrix>, HolonomyError> {
        Ok(gamma_from_values(
            self.alg,
            &self.field.values(self.alg, x)?,
        ))
    }
}

/// A matrix in the block-diagonal representation of a product group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupElement {
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub matrix: CMatrix,
    pub blocks: Vec<Block>,
}

impl GroupElement {
    pub fn identity(alg: &LieAlgebra) -> Self {
        Self {
            matrix: alg.identity(),
            blocks: alg.blocks().to_vec(),
        }
    }

    fn block(&self, b: &Block) -> CMatrix {
        self.matrix
            .view((b.offset, b.offset), (b.dim, b.dim))
            .into_owned()
    }

    /// Largest `‖g†g − I‖` over the unitary factors.
    pub fn unitarity_defect(&self) -> f64 {
        self.blocks
            .iter()
            .filter(|b| b.factor.is_unitary())
            .map(|b| unitarity_defect(&self.block(b)))
            .fold(0.0, f64::max)
    }

    /// Whether every Poincaré block ends in the row `(0, 0, 0, 0, 1)` exactly.
    pub fn affine_row_exact(&self) -> bool {
        self.blocks
            .iter()
            .filter(|b| b.factor == super::Factor::Poincare)
            .all(|b| {
                let m = self.block(b);
                (0..5).all(|j| m[(4, j)] == c(if j == 4 { 1.0 } else { 0.0 }, 0.0))
            })
    }

    pub fn inverse(&self) -> Option<Self> {
        Some(Self {
            matrix: self.matrix.clone().try_inverse()?,
            blocks: self.blocks.clone(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyResult {
    /// `g_n`.
    pub element: GroupElement,
    /// Sub-steps per polyline edge.
    pub steps: usize,
    /// `(4/3) ‖g_n − g_2n‖_F`.
    pub error_estimate: f64,
    /// Richardson combination `(4 g_2n − g_n) / 3`.
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub extrapolated: CMatrix,
}

/// Midpoint product `∏ exp(−i Γ_μ(x_mid) Δx^μ)` with `steps` sub-steps per
/// edge, later steps multiplying on the left.
pub fn path_ordered<S: ConnectionSource + ?Sized>(
    src: &S,
    curve: &Curve,
    steps: usize,
) -> Result<CMatrix, HolonomyError> {
    if steps == 0 {
        return Err(HolonomyError::InvalidSteps);
    }
    if curve.dim() != src.chart_dim() {
        return Err(HolonomyError::DimensionMismatch(
            curve.dim(),
            src.chart_dim(),
        ));
    }
    let d = curve.dim();
    let mut g = src.algebra().identity();
    let mut mid = vec![0.0; d];
    for edge in curve.vertices().windows(2) {
        let (a, b) = (&edge[0], &edge[1]);
        let dx: Vec<f64> = a
            .iter()
            .zip(b)
            .map(|(p, q)| (q - p) / steps as f64)
            .collect();
        if dx.iter().all(|v| *v == 0.0) {
            continue;
        }
        for j in 0..steps {
            let t = (j as f64 + 0.5) / steps as f64;
            for i in 0..d {
                mid[i] = a[i] + t * (b[i] - a[i]);
            }
            let gamma = src.gamma(&mid)?;
            let mut gen = CMatrix::zeros(g.nrows(), g.ncols());
            for (gm, &step) in gamma.iter().zip(&dx) {
                if step != 0.0 {
                    gen += gm * c(0.0, -step);
                }
            }
            g = expm(&gen) * g;
        }
    }
    Ok(g)
}

fn element(src: &(impl ConnectionSource + ?Sized), matrix: CMatrix) -> GroupElement {
    GroupElement {
        matrix,
        blocks: src.algebra().blocks().to_vec(),
    }
}

/// Holonomy at `steps` sub-steps per edge with a Richardson error estimate
/// from a second run at `2 · steps`.
pub fn holonomy_of<S: ConnectionSource + ?Sized>(
    src: &S,
    curve: &Curve,
    steps: usize,
) -> Result<HolonomyResult, HolonomyError> {
    let gn = path_ordered(src, curve, steps)?;
    let g2n = path_ordered(src, curve, 2 * steps)?;
    let error_estimate = frobenius(&(&gn - &g2n)) * 4.0 / 3.0;
    let extrapolated = (&g2n * c(4.0, 0.0) - &gn) / c(3.0, 0.0);
    Ok(HolonomyResult {
        element: element(src, gn),
        steps,
        error_estimate,
        extrapolated,
    })
}

pub fn holonomy(
    field: &ConnectionField,
    alg: &LieAlgebra,
    curve: &Curve,
    steps: usize,
) -> Result<HolonomyResult, HolonomyError> {
    holonomy_of(&BoundField::new(field, alg)?, curve, steps)
}

/// Doubles the step count from 8 until the Richardson estimate is at most
/// `tol`, or [`MAX_STEPS`] is reached.
pub fn converged_holonomy<S: ConnectionSource + ?Sized>(
    src: &S,
    curve: &Curve,
    tol: f64,
) -> Result<HolonomyResult, HolonomyError> {
    let mut n = 8;
    let mut gn = path_ordered(src, curve, n)?;
    loop {
        let g2n = path_ordered(src, curve, 2 * n)?;
        let error_estimate = frobenius(&(&gn - &g2n)) * 4.0 / 3.0;
        if error_estimate <= tol || 2 * n >= MAX_STEPS {
            let extrapolated = (&g2n * c(4.0, 0.0) - &gn) / c(3.0, 0.0);
            return Ok(HolonomyResult {
                element: element(src, gn),
                steps: n,
                error_estimate,
                extrapolated,
            });
        }
        n *= 2;
        gn = g2n;
    }
}

/// `𝔽_μν` with `g_loop ≈ I + 𝔽 a²` for a counter-clockwise square:
/// `−i(Q^a P_a + ½ R^a_b M^b_a) + i F^k T_k`.
pub fn loop_generator(
    alg: &LieAlgebra,
    fs: &FieldStrengths,
    mu: usize,
    nu: usize,
) -> Option<CMatrix> {
    let p = fs.plane(mu, nu)?;
    let mut m = CMatrix::zeros(alg.dim(), alg.dim());
    for a in 0..4 {
        if let Some(pa) = alg.translation(a) {
            m -= pa * (I * p.torsion[a]);
        }
        for b in 0..4 {
            if let Some(mba) = alg.rotation(a, b) {
                m -= mba * (I * (0.5 * p.curvature[a][b]));
            }
        }
    }
    for (k, f) in p.gauge.iter().enumerate() {
        m += alg.gauge_generator(k) * (I * *f);
    }
    Some(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallLoopReport {
    pub side: f64,
    pub plane: (usize, usize),
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub g_loop: CMatrix,
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub predicted: CMatrix,
    /// `‖g_loop − predicted‖_F`.
    pub residual: f64,
    /// Integration error estimate of `g_loop`.
    pub integration_error: f64,
}

/// Tolerance for the loop holonomy inside [`small_loop_check`].
pub const SMALL_LOOP_TOL: f64 = 1e-12;

/// Compares the holonomy of a counter-clockwise square of side `a` with its
/// linearisation `I + 𝔽_μν a²` built from [`field_strengths`] at the base point.
pub fn small_loop_check(
    field: &ConnectionField,
    alg: &LieAlgebra,
    x: &[f64],
    plane: (usize, usize),
    a: f64,
) -> Result<SmallLoopReport, HolonomyError> {
    let src = BoundField::new(field, alg)?;
    let (mu, nu) = plane;
    if mu == nu || mu >= field.chart_dim || nu >= field.chart_dim {
        return Err(HolonomyError::BadPlane(mu, nu));
    }
    let curve = Curve::square_loop(x, mu, nu, a)?;
    let fs = field_strengths(field, alg, x)?;
    let gen = loop_generator(alg, &fs, mu, nu).ok_or(HolonomyError::BadPlane(mu, nu))?;
    let predicted = alg.identity() + gen * c(a * a, 0.0);
    let h = converged_holonomy(&src, &curve, SMALL_LOOP_TOL)?;
    let g_loop = h.element.matrix;
    Ok(SmallLoopReport {
        side: a,
        plane,
        residual: frobenius(&(&g_loop - &predicted)),
        g_loop,
        predicted,
        integration_error: h.error_estimate,
    })
}

/// `h(x) = exp(−i χ(x))` with
/// `χ = Σ_k (c_k + Σ_μ x^μ l_μk + Σ_μ sin(x^μ) s_μk) T_k` over gauge generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeFunction {
    pub constant: Vec<f64>,
    /// `linear[μ][k]`.
    pub linear: Vec<Vec<f64>>,
    /// `periodic[μ][k]`.
    pub periodic: Vec<Vec<f64>>,
}

impl GaugeFunction {
    pub fn identity(chart_dim: usize, gauge_count: usize) -> Self {
        Self {
            constant: vec![0.0; gauge_count],
            linear: vec![vec![0.0; gauge_count]; chart_dim],
            periodic: vec![vec![0.0; gauge_count]; chart_dim],
        }
    }

    fn check(&self, chart_dim: usize, gauge_count: usize) -> Result<(), HolonomyError> {
        let ok = self.constant.len() == gauge_count
            && self.linear.len() == chart_dim
            && self.periodic.len() == chart_dim
            && self
                .linear
                .iter()
                .chain(&self.periodic)
                .all(|r| r.len() == gauge_count)
            && self
                .constant
                .iter()
                .chain(self.linear.iter().flatten())
                .chain(self.periodic.iter().flatten())
                .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(HolonomyError::InvalidParameter(format!(
                "gauge function needs {gauge_count} coefficients per term over a {chart_dim}-dimensional chart"
            )))
        }
    }

    fn combine(alg: &LieAlgebra, coeffs: impl Iterator<Item = f64>) -> CMatrix {
        let mut m = CMatrix::zeros(alg.dim(), alg.dim());
        for (k, v) in coeffs.enumerate() {
            if v != 0.0 {
                m += alg.gauge_generator(k) * c(v, 0.0);
            }
        }
        m
    }

    /// `χ(x)`.
    pub fn chi(&self, alg: &LieAlgebra, x: &[f64]) -> CMatrix {
        let k = self.constant.len();
        Self::combine(
            alg,
            (0..k).map(|i| {
                self.constant[i]
                    + x.iter()
                        .enumerate()
                        .map(|(mu, xm)| xm * self.linear[mu][i] + xm.sin() * self.periodic[mu][i])
                        .sum::<f64>()
            }),
        )
    }

    /// `∂_μ χ(x)`.
    pub fn dchi(&self, alg: &LieAlgebra, x: &[f64], mu: usize) -> CMatrix {
        let k = self.constant.len();
        Self::combine(
            alg,
            (0..k).map(|i| self.linear[mu][i] + x[mu].cos() * self.periodic[mu][i]),
        )
    }

    pub fn value(&self, alg: &LieAlgebra, x: &[f64]) -> CMatrix {
        expm(&(self.chi(alg, x) * c(0.0, -1.0)))
    }

    /// `∂_μ h` via the Fréchet derivative of the exponential.
    pub fn derivative(&self, alg: &LieAlgebra, x: &[f64], mu: usize) -> CMatrix {
        let mi = c(0.0, -1.0);
        expm_frechet(&(self.chi(alg, x) * mi), &(self.dchi(alg, x, mu) * mi))
    }
}

/// `Γ' = h Γ h⁻¹ − i h ∂(h⁻¹)` for a unitary gauge function `h`.
pub struct GaugeTransformed<'a, S: ConnectionSource + ?Sized> {
    inner: &'a S,
    h: &'a GaugeFunction,
}

impl<'a, S: ConnectionSource + ?Sized> GaugeTransformed<'a, S> {
    pub fn new(inner: &'a S, h: &'a GaugeFunction) -> Result<Self, HolonomyError> {
        h.check(inner.chart_dim(), inner.algebra().gauge_count())?;
        Ok(Self { inner, h })
    }
}

impl<S: ConnectionSource + ?Sized> ConnectionSource for GaugeTransformed<'_, S> {
    fn chart_dim(&self) -> usize {
        self.inner.chart_dim()
    }

    fn algebra(&self) -> &LieAlgebra {
        self.inner.algebra()
    }

    fn gamma(&self, x: &[f64]) -> Result<Vec<CMatrix>, HolonomyError> {
        let alg = self.inner.algebra();
        let h = self.h.value(alg, x);
        let h_inv = h.adjoint();
        self.inner
            .gamma(x)?
            .into_iter()
            .enumerate()
            .map(|(mu, g)| {
                // ∂(h⁻¹) = (∂h)† for unitary h
                let dh_inv = self.h.derivative(alg, x, mu).adjoint();
                Ok(&h * g * &h_inv - &h * dh_inv * I)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeCovarianceReport {
    pub steps: usize,
    /// `‖g' − h(end) g h(start)⁻¹‖_F` on Richardson-extrapolated holonomies.
    pub residual: f64,
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub g: CMatrix,
    #[serde(serialize_with = "crate::linalg::serialize_rows")]
    pub g_transformed: CMatrix,
}

/// Recomputes the holonomy in the transformed gauge and compares it with
/// `h(end) · g · h(start)⁻¹`.
pub fn gauge_covariance_check(
    field: &ConnectionField,
    alg: &LieAlgebra,
    h: &GaugeFunction,
    curve: &Curve,
    steps: usize,
) -> Result<GaugeCovarianceReport, HolonomyError> {
    let src = BoundField::new(field, alg)?;
    let moved = GaugeTransformed::new(&src, h)?;
    let g = holonomy_of(&src, curve, steps)?.extrapolated;
    let g_t = holonomy_of(&moved, curve, steps)?.extrapolated;
    let expected = h.value(alg, curve.end()) * &g * h.value(alg, curve.start()).adjoint();
    Ok(GaugeCovarianceReport {
        steps,
        residual: frobenius(&(&g_t - expected)),
        g,
        g_transformed: g_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::algebra::{build_group, Factor, GroupSpec};
    use crate::holonomy::field::Preset;
    use crate::holonomy::phase::u1_phase_factor;
    use crate::linalg::{loglog_slope, max_abs};
    use crate::Complex64;

    fn alg(f: Vec<Factor>) -> LieAlgebra {
        build_group(&GroupSpec::new(f)).unwrap()
    }

    fn field(d: usize, p: Preset) -> ConnectionField {
        ConnectionField::new(d, p)
    }

    fn triangle() -> Curve {
        Curve::new(vec![
            vec![0.3, 0.2],
            vec![1.4, 0.5],
            vec![0.7, 1.6],
            vec![0.3, 0.2],
        ])
        .unwrap()
    }

    #[test]
    fn zero_connection_gives_identity_exactly() {
        let g = alg(vec![
            Factor::Poincare,
            Factor::Su2,
            Factor::U1 { charge: 1.0 },
        ]);
        let h = holonomy(&field(2, Preset::Zero), &g, &triangle(), 16).unwrap();
        assert_eq!(h.element.matrix, g.identity());
        assert_eq!(h.error_estimate, 0.0);
    }

    #[test]
    fn constant_u1_segment_matches_closed_form() {
        let e = 1.7;
        let g = alg(vec![Factor::U1 { charge: e }]);
        let f = field(
            2,
            Preset::U1Constant {
                potential: vec![0.6, 0.0],
            },
        );
        let seg = Curve::segment(&[0.0, 0.0], &[2.5, 0.0]).unwrap();
        let h = holonomy(&f, &g, &seg, 7).unwrap();
        let want = Complex64::from_polar(1.0, -e * 0.6 * 2.5);
        assert!((h.element.matrix[(0, 0)] - want).norm() < 1e-10);
    }

    #[test]
    fn su2_paths_do_not_commute() {
        let g = alg(vec![Factor::Su2]);
        let f = field(
            2,
            Preset::Su2Constant {
                ax: [1.0, 0.0, 0.0],
                ay: [0.0, 1.0, 0.0],
            },
        );
        let right_up = Curve::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap();
        let up_right = Curve::new(vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let g1 = path_ordered(&BoundField::new(&f, &g).unwrap(), &right_up, 100_000).unwrap();
        let g2 = path_ordered(&BoundField::new(&f, &g).unwrap(), &up_right, 100_000).unwrap();
        assert!(frobenius(&(&g1 - &g2)) > 0.01);
        // constant fields: each leg is a single exponential
        let jx = g.gauge_generator(0);
        let jy = g.gauge_generator(1);
        let exact = expm(&(jy * I)) * expm(&(jx * I));
        assert!(frobenius(&(&g1 - exact)) < 1e-9);
    }

    #[test]
    fn midpoint_rule_is_second_order() {
        let g = alg(vec![Factor::U1 { charge: 1.0 }]);
        let f = field(
            2,
            Preset::Solenoid {
                flux: 1.3,
                center: [0.0, 0.0],
                core_radius: 0.0,
            },
        );
        let seg = Curve::segment(&[0.5, -1.0], &[0.8, 1.2]).unwrap();
        let exact = u1_phase_factor(
            &f.preset,
            1.0,
            &seg.then(&Curve::segment(&[0.8, 1.2], &[0.5, -1.0]).unwrap())
                .unwrap(),
        );
        assert!((exact.unwrap() - 1.0).norm() < 1e-12);
        let phi = |p: &[f64]| p[1].atan2(p[0]);
        let dphi = phi(&[0.8, 1.2]) - phi(&[0.5, -1.0]);
        let want = Complex64::from_polar(1.0, -1.3 / (2.0 * std::f64::consts::PI) * dphi);
        let src = BoundField::new(&f, &g).unwrap();
        let ns = [8usize, 16, 32, 64, 128];
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| (path_ordered(&src, &seg, n).unwrap()[(0, 0)] - want).norm())
            .collect();
        let slope = loglog_slope(&ns.map(|n| n as f64), &errs);
        assert!((-2.2..=-1.8).contains(&slope), "slope {slope}");
        let r = holonomy_of(&src, &seg, 64).unwrap();
        assert!(r.error_estimate > 0.5 * errs[3] && r.error_estimate < 2.0 * errs[3]);
        assert!((r.extrapolated[(0, 0)] - want).norm() < 1e-3 * errs[3]);
    }

    #[test]
    fn reversal_and_concatenation() {
        let g = alg(vec![Factor::Su2]);
        let f = field(
            2,
            Preset::Su2Bump {
                amplitude: 1.2,
                width: 0.8,
                center: [0.5, 0.5],
            },
        );
        let src = BoundField::new(&f, &g).unwrap();
        let c1 = Curve::new(vec![vec![0.0, 0.0], vec![1.0, 0.3], vec![0.8, 1.1]]).unwrap();
        let c2 = Curve::new(vec![vec![0.8, 1.1], vec![-0.2, 0.9]]).unwrap();
        let n = 512;
        let g1 = path_ordered(&src, &c1, n).unwrap();
        let g2 = path_ordered(&src, &c2, n).unwrap();
        let g12 = path_ordered(&src, &c1.then(&c2).unwrap(), n).unwrap();
        assert!(frobenius(&(&g12 - &g2 * &g1)) < 1e-12);
        let back = path_ordered(&src, &c1.reversed(), n).unwrap();
        assert!(frobenius(&(&back * &g1 - g.identity())) < 1e-8);
    }

    #[test]
    fn unitarity_and_affine_row_are_preserved() {
        let g = alg(vec![Factor::Poincare, Factor::Su2]);
        let f = field(
            2,
            Preset::Torsion {
                rotation: 0.7,
                boost: 0.4,
            },
        );
        let src = BoundField::new(&f, &g).unwrap();
        let h = holonomy_of(&src, &triangle(), 10_000).unwrap();
        assert!(h.element.affine_row_exact());
        assert!(h.element.unitarity_defect() <= 1e-9);

        let su2 = alg(vec![Factor::Su2]);
        let bump = field(
            2,
            Preset::Su2Bump {
                amplitude: 2.0,
                width: 0.5,
                center: [0.6, 0.6],
            },
        );
        let h = holonomy(&bump, &su2, &triangle(), 10_000).unwrap();
        assert!(h.element.unitarity_defect() <= 1e-9);
    }

    #[test]
    fn flat_solder_translates_by_displacement() {
        let g = alg(vec![Factor::Poincare]);
        let f = field(3, Preset::FlatSolder);
        let seg = Curve::new(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 2.0, -0.5],
            vec![1.5, 2.0, 0.0],
        ])
        .unwrap();
        let h = holonomy(&f, &g, &seg, 4).unwrap().element.matrix;
        for (a, want) in [1.5, 2.0, 0.0, 0.0].into_iter().enumerate() {
            assert!((h[(a, 4)] - c(want, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn small_loop_examples() {
        let g = alg(vec![Factor::Su2]);
        let z = small_loop_check(&field(2, Preset::Zero), &g, &[0.1, 0.2], (0, 1), 0.1).unwrap();
        assert_eq!(z.residual, 0.0);

        let u1 = alg(vec![Factor::U1 { charge: 1.3 }]);
        let f = field(2, Preset::U1Linear { b: 0.9 });
        let r1 = small_loop_check(&f, &u1, &[0.2, 0.1], (0, 1), 0.2).unwrap();
        let r2 = small_loop_check(&f, &u1, &[0.2, 0.1], (0, 1), 0.1).unwrap();
        assert!(r1.residual / r2.residual >= 7.0);
        // exact abelian loop: exp(−i e B a²)
        let want = Complex64::from_polar(1.0, -1.3 * 0.9 * 0.04);
        assert!((r1.g_loop[(0, 0)] - want).norm() < 1e-12);
    }

    fn loop_slope(f: &ConnectionField, g: &LieAlgebra, x: &[f64]) -> f64 {
        let sides = [0.1, 0.05, 0.025];
        let res: Vec<f64> = sides
            .iter()
            .map(|&a| small_loop_check(f, g, x, (0, 1), a).unwrap().residual)
            .collect();
        loglog_slope(&sides, &res)
    }

    #[test]
    fn small_loop_residual_is_third_order() {
        let su2 = alg(vec![Factor::Su2]);
        let bump = field(
            2,
            Preset::Su2Bump {
                amplitude: 1.0,
                width: 0.7,
                center: [0.0, 0.0],
            },
        );
        assert!(loop_slope(&bump, &su2, &[0.15, -0.1]) >= 2.7);

        let p = alg(vec![Factor::Poincare]);
        let tor = field(
            2,
            Preset::Torsion {
                rotation: 0.8,
                boost: 0.3,
            },
        );
        assert!(loop_slope(&tor, &p, &[0.0, 0.0]) >= 2.7);

        let u1 = alg(vec![Factor::U1 { charge: 1.0 }]);
        let sol = field(
            2,
            Preset::Solenoid {
                flux: 2.0,
                center: [0.0, 0.0],
                core_radius: 1.0,
            },
        );
        assert!(loop_slope(&sol, &u1, &[0.3, 0.2]) >= 2.7);
    }

    #[test]
    fn gauge_covariance_examples() {
        let su2 = alg(vec![Factor::Su2]);
        let f = field(
            2,
            Preset::Su2Bump {
                amplitude: 1.0,
                width: 0.9,
                center: [0.2, 0.1],
            },
        );
        let open = Curve::new(vec![vec![0.0, 0.0], vec![1.0, 0.4], vec![0.6, 1.2]]).unwrap();

        let id = GaugeFunction::identity(2, 3);
        let r = gauge_covariance_check(&f, &su2, &id, &open, 64).unwrap();
        assert_eq!(r.residual, 0.0);

        let h = GaugeFunction {
            constant: vec![0.3, -0.2, 0.5],
            linear: vec![vec![0.4, 0.1, -0.3], vec![-0.2, 0.6, 0.1]],
            periodic: vec![vec![0.2, 0.0, 0.1], vec![0.0, -0.3, 0.2]],
        };
        let r = gauge_covariance_check(&f, &su2, &h, &open, 4096).unwrap();
        assert!(r.residual <= 1e-6, "residual {}", r.residual);

        let u1 = alg(vec![Factor::U1 { charge: 1.0 }]);
        let lin = field(2, Preset::U1Linear { b: 0.7 });
        let shift = GaugeFunction {
            constant: vec![0.4],
            linear: vec![vec![0.3], vec![-0.8]],
            periodic: vec![vec![0.5], vec![0.9]],
        };
        let src = BoundField::new(&lin, &u1).unwrap();
        let moved = GaugeTransformed::new(&src, &shift).unwrap();
        let a = holonomy_of(&src, &triangle(), 1024).unwrap().extrapolated;
        let b = holonomy_of(&moved, &triangle(), 1024).unwrap().extrapolated;
        assert!(max_abs(&(a - b)) <= 1e-9);
    }

    #[test]
    fn gauge_transform_of_zero_is_pure_gauge() {
        // Γ' = −i h ∂(h⁻¹) has zero field strength: any closed loop is trivial
        let su2 = alg(vec![Factor::Su2]);
        let zero = field(2, Preset::Zero);
        let h = GaugeFunction {
            constant: vec![0.1, 0.2, 0.3],
            linear: vec![vec![0.5, -0.4, 0.2], vec![0.3, 0.2, -0.6]],
            periodic: vec![vec![0.0; 3], vec![0.0; 3]],
        };
        let src = BoundField::new(&zero, &su2).unwrap();
        let moved = GaugeTransformed::new(&src, &h).unwrap();
        let g = converged_holonomy(&moved, &triangle(), 1e-10).unwrap();
        assert!(frobenius(&(g.extrapolated - su2.identity())) < 1e-9);
    }

    #[test]
    fn curve_validation_and_csv() {
        assert!(matches!(
            Curve::new(vec![vec![0.0, 0.0]]),
            Err(HolonomyError::CurveTooShort(1))
        ));
        assert!(matches!(
            Curve::new(vec![vec![0.0, 0.0], vec![f64::NAN, 0.0]]),
            Err(HolonomyError::BadCurve(_))
        ));
        let text = "x,y\n0,0\n1,0\n1,1\n0,1\n0,0\n";
        let c = Curve::read_csv(text.as_bytes()).unwrap();
        assert_eq!(c.vertices().len(), 5);
        assert!(c.is_closed());
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        assert_eq!(Curve::read_csv(&buf[..]).unwrap(), c);
        assert!(matches!(
            Curve::read_csv("0,0\n1,zz\n".as_bytes()),
            Err(HolonomyError::BadCurve(_))
        ));
        let g = alg(vec![Factor::U1 { charge: 1.0 }]);
        assert!(matches!(
            holonomy(&field(2, Preset::Zero), &g, &c, 0),
            Err(HolonomyError::InvalidSteps)
        ));
        assert!(matches!(
            holonomy(&field(3, Preset::Zero), &g, &c, 4),
            Err(HolonomyError::DimensionMismatch(2, 3))
        ));
    }
}
