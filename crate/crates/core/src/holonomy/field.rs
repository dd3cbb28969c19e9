use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::algebra::{build_group, Factor, GroupSpec, LieAlgebra, ETA};
use super::HolonomyError;
use crate::linalg::{c, CMatrix};

/// Tolerance for the η-antisymmetry of ω.
pub const OMEGA_TOL: f64 = 1e-12;

/// Connection components at one chart point: `θ_μ^a`, `ω_μ^a_b`, `A^k_μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldValues {
    /// `theta[μ][a]`.
    #[serde(default)]
    pub theta: Vec<[f64; 4]>,
    /// `omega[μ][a][b] = ω_μ^a_b`.
    #[serde(default)]
    pub omega: Vec<[[f64; 4]; 4]>,
    /// `gauge[μ][k] = A^k_μ`.
    #[serde(default)]
    pub gauge: Vec<Vec<f64>>,
}

impl FieldValues {
    pub fn zeros(chart_dim: usize, gauge_count: usize) -> Self {
        Self {
            theta: vec![[0.0; 4]; chart_dim],
            omega: vec![[[0.0; 4]; 4]; chart_dim],
            gauge: vec![vec![0.0; gauge_count]; chart_dim],
        }
    }

    /// Pads empty components with zeros and checks shapes.
    fn normalized(mut self, chart_dim: usize, gauge_count: usize) -> Result<Self, HolonomyError> {
        if self.theta.is_empty() {
            self.theta = vec![[0.0; 4]; chart_dim];
        }
        if self.omega.is_empty() {
            self.omega = vec![[[0.0; 4]; 4]; chart_dim];
        }
        if self.gauge.is_empty() {
            self.gauge = vec![vec![0.0; gauge_count]; chart_dim];
        }
        let ok = self.theta.len() == chart_dim
            && self.omega.len() == chart_dim
            && self.gauge.len() == chart_dim
            && self.gauge.iter().all(|g| g.len() == gauge_count);
        if !ok {
            return Err(HolonomyError::InvalidParameter(format!(
                "field sample shape does not match chart_dim {chart_dim} and {gauge_count} gauge generators"
            )));
        }
        Ok(self)
    }

    fn axpy(&mut self, s: f64, other: &FieldValues) {
        for (a, b) in self.theta.iter_mut().zip(&other.theta) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
        for (a, b) in self.omega.iter_mut().zip(&other.omega) {
            for (ra, rb) in a.iter_mut().zip(b) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += s * y;
                }
            }
        }
        for (a, b) in self.gauge.iter_mut().zip(&other.gauge) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += s * y;
            }
        }
    }

    fn scaled(mut self, s: f64) -> Self {
        let zero = Self::zeros(self.theta.len(), self.gauge.first().map_or(0, Vec::len));
        let copy = std::mem::replace(&mut self, zero);
        self.axpy(s, &copy);
        self
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        let t = self.theta.iter().flatten();
        let o = self.omega.iter().flatten().flatten();
        let g = self.gauge.iter().flatten();
        t.chain(o).chain(g).fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|ω_ab + ω_ba|` with `ω_ab = η_aa ω^a_b`.
    pub fn omega_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for w in &self.omega {
            for a in 0..4 {
                for b in 0..4 {
                    worst = worst.max((ETA[a] * w[a][b] + ETA[b] * w[b][a]).abs());
                }
            }
        }
        worst
    }
}

/// Regular grid of field samples with multilinear interpolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub origin: Vec<f64>,
    /// Grid spacing, also the central-difference step.
    pub spacing: f64,
    pub shape: Vec<usize>,
    /// Row-major samples, last chart index fastest.
    pub samples: Vec<FieldValues>,
}

impl SampledField {
    /// Samples `f` on the grid `origin + spacing · index`.
    pub fn from_fn(
        origin: Vec<f64>,
        spacing: f64,
        shape: Vec<usize>,
        mut f: impl FnMut(&[f64]) -> FieldValues,
    ) -> Self {
        let total: usize = shape.iter().product();
        let mut samples = Vec::with_capacity(total);
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..total {
            let x: Vec<f64> = idx
                .iter()
                .zip(&origin)
                .map(|(&i, &o)| o + spacing * i as f64)
                .collect();
            samples.push(f(&x));
            for d in (0..shape.len()).rev() {
                idx[d] += 1;
                if idx[d] < shape[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
        Self {
            origin,
            spacing,
            shape,
            samples,
        }
    }

    fn validate(&mut self, chart_dim: usize, gauge_count: usize) -> Result<(), HolonomyError> {
        if self.origin.len() != chart_dim || self.shape.len() != chart_dim {
            return Err(HolonomyError::InvalidParameter(
                "grid rank must equal chart_dim".into(),
            ));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(HolonomyError::InvalidParameter(format!(
                "grid spacing {}",
                self.spacing
            )));
        }
        if self.shape.iter().any(|&s| s < 2) {
            return Err(HolonomyError::InvalidParameter(
                "each grid axis needs >= 2 points".into(),
            ));
        }
        let total: usize = self.shape.iter().product();
        if self.samples.len() != total {
            return Err(HolonomyError::InvalidParameter(format!(
                "expected {total} samples, got {}",
                self.samples.len()
            )));
        }
        let samples = std::mem::take(&mut self.samples);
        self.samples = samples
            .into_iter()
            .map(|s| s.normalized(chart_dim, gauge_count))
            .collect::<Result<_, _>>()?;
        Ok(())
    }

    fn inside(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.origin)
            .zip(&self.shape)
            .all(|((&xi, &o), &n)| {
                let hi = o + self.spacing * (n - 1) as f64;
                xi >= o && xi <= hi
            })
    }

    /// Missing components of a sample count as zero.
    fn interpolate(&self, x: &[f64], gauge_count: usize) -> Result<FieldValues, HolonomyError> {
        if self.shape.len() != x.len() || self.samples.len() != self.shape.iter().product::<usize>()
        {
            return Err(HolonomyError::InvalidParameter("sampled grid shape".into()));
        }
        if !self.inside(x) {
            return Err(HolonomyError::OutOfChart(x.to_vec()));
        }
        let d = x.len();
        let mut base = vec![0usize; d];
        let mut frac = vec![0.0; d];
        for i in 0..d {
            let t = (x[i] - self.origin[i]) / self.spacing;
            let cell = (t.floor() as usize).min(self.shape[i] - 2);
            base[i] = cell;
            frac[i] = t - cell as f64;
        }
        let mut out = FieldValues::zeros(d, gauge_count);
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for i in 0..d {
                let bit = (corner >> i) & 1;
                w *= if bit == 1 { frac[i] } else { 1.0 - frac[i] };
                flat = flat * self.shape[i] + base[i] + bit;
            }
            if w != 0.0 {
                out.axpy(w, &self.samples[flat]);
            }
        }
        Ok(out)
    }
}

/// Closed-form connection presets; `parameters` are preset specific.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", content = "parameters", rename_all = "kebab-case")]
pub enum Preset {
    Zero,
    /// `A_μ = potential[μ]` on every U(1) generator.
    U1Constant {
        potential: Vec<f64>,
    },
    /// `A_1 = b · x^0` on every U(1) generator, so `F_01 = b`.
    U1Linear {
        b: f64,
    },
    /// `A = (Φ/2π) dφ` around `center` in the `(x^0, x^1)` plane; uniform
    /// field inside `core_radius`.
    Solenoid {
        flux: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        core_radius: f64,
    },
    /// Constant `A^k_0 = ax[k]`, `A^k_1 = ay[k]` on the first SU(2) factor.
    Su2Constant {
        ax: [f64; 3],
        ay: [f64; 3],
    },
    /// Smooth non-abelian bump on the first SU(2) factor.
    Su2Bump {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// `θ_μ^a = δ_μ^a`, `ω = 0`.
    FlatSolder,
    /// `θ_μ^a = δ_μ^a` with constant `ω_0 = rotation · J_12 + boost · K_01`
    /// and `ω_1 = rotation · J_23`.
    Torsion {
        rotation: f64,
        #[serde(default)]
        boost: f64,
    },
    Sampled(SampledField),
}

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::Zero => "zero",
            Preset::U1Constant { .. } => "u1-constant",
            Preset::U1Linear { .. } => "u1-linear",
            Preset::Solenoid { .. } => "solenoid",
            Preset::Su2Constant { .. } => "su2-constant",
            Preset::Su2Bump { .. } => "su2-bump",
            Preset::FlatSolder => "flat-solder",
            Preset::Torsion { .. } => "torsion",
            Preset::Sampled(_) => "sampled",
        }
    }

    /// The abelian potential `A_μ(x)` of a U(1) preset.
    pub fn u1_potential(&self, x: &[f64]) -> Result<Vec<f64>, HolonomyError> {
        check_point(x)?;
        let d = x.len();
        match self {
            Preset::Zero => Ok(vec![0.0; d]),
            Preset::U1Constant { potential } => {
                if potential.len() != d {
                    return Err(HolonomyError::DimensionMismatch(potential.len(), d));
                }
                Ok(potential.clone())
            }
            Preset::U1Linear { b } => {
                let mut a = vec![0.0; d];
                a[1] = b * x[0];
                Ok(a)
            }
            Preset::Solenoid {
                flux,
                center,
                core_radius,
            } => {
                let (ax, ay) = solenoid_potential(*flux, *center, *core_radius, x)?;
                let mut a = vec![0.0; d];
                a[0] = ax;
                a[1] = ay;
                Ok(a)
            }
            other => Err(HolonomyError::PresetMismatch(format!(
                "`{}` is not a U(1) potential",
                other.name()
            ))),
        }
    }
}

fn check_point(x: &[f64]) -> Result<(), HolonomyError> {
    if x.len() < 2 || x.iter().any(|v| !v.is_finite()) {
        return Err(HolonomyError::OutOfChart(x.to_vec()));
    }
    Ok(())
}

/// Below this radius a coreless solenoid is singular.
const SOLENOID_AXIS: f64 = 1e-12;

fn solenoid_potential(
    flux: f64,
    center: [f64; 2],
    core: f64,
    x: &[f64],
) -> Result<(f64, f64), HolonomyError> {
    let k = flux / (2.0 * PI);
    let (u, v) = (x[0] - center[0], x[1] - center[1]);
    let r2 = u * u + v * v;
    if r2 < core * core {
        let s = k / (core * core);
        return Ok((-s * v, s * u));
    }
    if r2.sqrt() < SOLENOID_AXIS {
        return Err(HolonomyError::OutOfChart(x.to_vec()));
    }
    Ok((-k * v / r2, k * u / r2))
}

/// `∂_0 A` and `∂_1 A` of the solenoid potential as `[[∂_0A_0, ∂_0A_1], [∂_1A_0, ∂_1A_1]]`.
fn solenoid_jacobian(
    flux: f64,
    center: [f64; 2],
    core: f64,
    x: &[f64],
) -> Result<[[f64; 2]; 2], HolonomyError> {
    let k = flux / (2.0 * PI);
    let (u, v) = (x[0] - center[0], x[1] - center[1]);
    let r2 = u * u + v * v;
    if core > 0.0 && (r2.sqrt() - core).abs() < 1e-12 {
        return Err(HolonomyError::NonDifferentiable(x.to_vec()));
    }
    if r2 < core * core {
        let s = k / (core * core);
        return Ok([[0.0, s], [-s, 0.0]]);
    }
    if r2.sqrt() < SOLENOID_AXIS {
        return Err(HolonomyError::OutOfChart(x.to_vec()));
    }
    let r4 = r2 * r2;
    Ok([
        [2.0 * k * u * v / r4, k * (v * v - u * u) / r4],
        [k * (v * v - u * u) / r4, -2.0 * k * u * v / r4],
    ])
}

/// Polynomial weights `p_kμ(x)` of the SU(2) bump and their derivatives.
fn bump_weights(x: &[f64]) -> [[(f64, [f64; 2]); 2]; 3] {
    // (value, [∂_0, ∂_1]) for k = 1..3, μ = 0..1
    [
        [(1.0, [0.0, 0.0]), (0.0, [0.0, 0.0])],
        [(0.0, [0.0, 0.0]), (1.0 + x[0], [1.0, 0.0])],
        [(0.5 * x[1], [0.0, 0.5]), (0.5, [0.0, 0.0])],
    ]
}

fn rotation_12(s: f64) -> [[f64; 4]; 4] {
    let mut w = [[0.0; 4]; 4];
    w[1][2] = s;
    w[2][1] = -s;
    w
}

fn rotation_23(s: f64) -> [[f64; 4]; 4] {
    let mut w = [[0.0; 4]; 4];
    w[2][3] = s;
    w[3][2] = -s;
    w
}

fn boost_01(s: f64) -> [[f64; 4]; 4] {
    let mut w = [[0.0; 4]; 4];
    w[0][1] = s;
    w[1][0] = s;
    w
}

/// A preset bound to a chart dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionField {
    pub chart_dim: usize,
    #[serde(flatten)]
    pub preset: Preset,
}

/// Field preset file: `{chart_dim, factors, preset, parameters}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub chart_dim: usize,
    pub factors: Vec<Factor>,
    #[serde(flatten)]
    pub preset: Preset,
}

impl FieldFile {
    pub fn from_json(text: &str) -> Result<Self, HolonomyError> {
        serde_json::from_str(text).map_err(|e| HolonomyError::Schema(e.to_string()))
    }

    pub fn group(&self) -> GroupSpec {
        GroupSpec::new(self.factors.clone())
    }

    pub fn field(&self) -> ConnectionField {
        ConnectionField {
            chart_dim: self.chart_dim,
            preset: self.preset.clone(),
        }
    }

    /// Builds the catalog and binds the field to it.
    pub fn bind(&self) -> Result<(LieAlgebra, ConnectionField), HolonomyError> {
        let alg = build_group(&self.group())?;
        let field = self.field();
        field.check_compatible(&alg)?;
        Ok((alg, field))
    }
}

impl ConnectionField {
    pub fn new(chart_dim: usize, preset: Preset) -> Self {
        Self { chart_dim, preset }
    }

    /// Verifies that the preset can live on `alg` over this chart.
    pub fn check_compatible(&self, alg: &LieAlgebra) -> Result<(), HolonomyError> {
        if !(2..=4).contains(&self.chart_dim) {
            return Err(HolonomyError::ChartDim(self.chart_dim));
        }
        let has = |pred: fn(&Factor) -> bool| alg.spec().factors.iter().any(pred);
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(HolonomyError::PresetMismatch(format!(
                    "preset `{}` needs a {what} factor",
                    self.preset.name()
                )))
            }
        };
        match &self.preset {
            Preset::Zero => Ok(()),
            Preset::U1Constant { potential } => {
                if potential.len() != self.chart_dim {
                    return Err(HolonomyError::DimensionMismatch(
                        potential.len(),
                        self.chart_dim,
                    ));
                }
                need(has(|f| matches!(f, Factor::U1 { .. })), "u1")
            }
            Preset::U1Linear { b } => {
                finite(&[*b])?;
                need(has(|f| matches!(f, Factor::U1 { .. })), "u1")
            }
            Preset::Solenoid {
                flux,
                center,
                core_radius,
            } => {
                finite(&[*flux, center[0], center[1], *core_radius])?;
                if *core_radius < 0.0 {
                    return Err(HolonomyError::InvalidParameter(
                        "core_radius must be >= 0".into(),
                    ));
                }
                need(has(|f| matches!(f, Factor::U1 { .. })), "u1")
            }
            Preset::Su2Constant { ax, ay } => {
                finite(ax)?;
                finite(ay)?;
                need(has(|f| matches!(f, Factor::Su2)), "su2")
            }
            Preset::Su2Bump {
                amplitude,
                width,
                center,
            } => {
                finite(&[*amplitude, *width, center[0], center[1]])?;
                if *width <= 0.0 {
                    return Err(HolonomyError::InvalidParameter("width must be > 0".into()));
                }
                need(has(|f| matches!(f, Factor::Su2)), "su2")
            }
            Preset::FlatSolder => need(alg.has_translations(), "poincare"),
            Preset::Torsion { rotation, boost } => {
                finite(&[*rotation, *boost])?;
                need(alg.spacetime_block().is_some(), "lorentz or poincare")
            }
            Preset::Sampled(s) => {
                let mut s = s.clone();
                s.validate(self.chart_dim, alg.gauge_count())?;
                let worst = s
                    .samples
                    .iter()
                    .map(FieldValues::omega_asymmetry)
                    .fold(0.0, f64::max);
                if worst > OMEGA_TOL {
                    return Err(HolonomyError::OmegaNotAntisymmetric(worst));
                }
                Ok(())
            }
        }
    }

    /// Indices of gauge generators belonging to U(1) factors.
    fn u1_generators(alg: &LieAlgebra) -> Vec<usize> {
        (0..alg.gauge_count())
            .filter(|&k| {
                let g = &alg.generators()[alg.gauge_indices()[k]];
                matches!(alg.spec().factors[g.factor], Factor::U1 { .. })
            })
            .collect()
    }

    /// Indices of the three generators of the first SU(2) factor.
    fn su2_generators(alg: &LieAlgebra) -> Vec<usize> {
        let first = alg.spec().factors.iter().position(|f| *f == Factor::Su2);
        (0..alg.gauge_count())
            .filter(|&k| Some(alg.generators()[alg.gauge_indices()[k]].factor) == first)
            .collect()
    }

    fn check_x(&self, x: &[f64]) -> Result<(), HolonomyError> {
        if x.len() != self.chart_dim {
            return Err(HolonomyError::DimensionMismatch(x.len(), self.chart_dim));
        }
        check_point(x)
    }

    /// Component values at `x`.
    pub fn values(&self, alg: &LieAlgebra, x: &[f64]) -> Result<FieldValues, HolonomyError> {
        self.check_x(x)?;
        let d = self.chart_dim;
        let mut v = FieldValues::zeros(d, alg.gauge_count());
        match &self.preset {
            Preset::Zero => {}
            Preset::U1Constant { .. } | Preset::U1Linear { .. } | Preset::Solenoid { .. } => {
                let a = self.preset.u1_potential(x)?;
                for k in Self::u1_generators(alg) {
                    for mu in 0..d {
                        v.gauge[mu][k] = a[mu];
                    }
                }
            }
            Preset::Su2Constant { ax, ay } => {
                for (i, k) in Self::su2_generators(alg).into_iter().enumerate() {
                    v.gauge[0][k] = ax[i];
                    v.gauge[1][k] = ay[i];
                }
            }
            Preset::Su2Bump {
                amplitude,
                width,
                center,
            } => {
                let g = bump_envelope(*width, *center, x);
                let w = bump_weights(x);
                for (i, k) in Self::su2_generators(alg).into_iter().enumerate() {
                    for mu in 0..2 {
                        v.gauge[mu][k] = amplitude * g * w[i][mu].0;
                    }
                }
            }
            Preset::FlatSolder => {
                for mu in 0..d {
                    v.theta[mu][mu] = 1.0;
                }
            }
            Preset::Torsion { rotation, boost } => {
                for mu in 0..d {
                    v.theta[mu][mu] = 1.0;
                }
                let r12 = rotation_12(*rotation);
                let b01 = boost_01(*boost);
                for a in 0..4 {
                    for b in 0..4 {
                        v.omega[0][a][b] = r12[a][b] + b01[a][b];
                    }
                }
                v.omega[1] = rotation_23(*rotation);
            }
            Preset::Sampled(s) => v = s.interpolate(x, alg.gauge_count())?,
        }
        Ok(v)
    }

    /// `∂_ν` of every component at `x`, with an error estimate (zero for
    /// closed forms, `|D_h − D_2h| / 3` for sampled fields).
    pub fn derivative(
        &self,
        alg: &LieAlgebra,
        x: &[f64],
        nu: usize,
    ) -> Result<(FieldValues, f64), HolonomyError> {
        self.check_x(x)?;
        let d = self.chart_dim;
        let mut v = FieldValues::zeros(d, alg.gauge_count());
        match &self.preset {
            Preset::Zero
            | Preset::U1Constant { .. }
            | Preset::Su2Constant { .. }
            | Preset::FlatSolder
            | Preset::Torsion { .. } => {}
            Preset::U1Linear { b } => {
                if nu == 0 {
                    for k in Self::u1_generators(alg) {
                        v.gauge[1][k] = *b;
                    }
                }
            }
            Preset::Solenoid {
                flux,
                center,
                core_radius,
            } => {
                let jac = solenoid_jacobian(*flux, *center, *core_radius, x)?;
                if nu < 2 {
                    for k in Self::u1_generators(alg) {
                        v.gauge[0][k] = jac[nu][0];
                        v.gauge[1][k] = jac[nu][1];
                    }
                }
            }
            Preset::Su2Bump {
                amplitude,
                width,
                center,
            } => {
                if nu < 2 {
                    let g = bump_envelope(*width, *center, x);
                    let dg = -(x[nu] - center[nu]) / (width * width) * g;
                    let w = bump_weights(x);
                    for (i, k) in Self::su2_generators(alg).into_iter().enumerate() {
                        for mu in 0..2 {
                            let (p, dp) = w[i][mu];
                            v.gauge[mu][k] = amplitude * (dg * p + g * dp[nu]);
                        }
                    }
                }
            }
            Preset::Sampled(s) => {
                let k = alg.gauge_count();
                let h = s.spacing;
                let diff = |step: f64| -> Result<FieldValues, HolonomyError> {
                    let mut xp = x.to_vec();
                    let mut xm = x.to_vec();
                    xp[nu] += step;
                    xm[nu] -= step;
                    let mut out = s.interpolate(&xp, k)?;
                    out.axpy(-1.0, &s.interpolate(&xm, k)?);
                    Ok(out.scaled(1.0 / (2.0 * step)))
                };
                let d1 = diff(h)?;
                let err = match diff(2.0 * h) {
                    Ok(d2) => {
                        let mut e = d1.clone();
                        e.axpy(-1.0, &d2);
                        e.max_abs() / 3.0
                    }
                    Err(_) => f64::NAN,
                };
                return Ok((d1, err));
            }
        }
        Ok((v, 0.0))
    }
}

fn finite(v: &[f64]) -> Result<(), HolonomyError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(HolonomyError::InvalidParameter(
            "non-finite preset parameter".into(),
        ))
    }
}

fn bump_envelope(width: f64, center: [f64; 2], x: &[f64]) -> f64 {
    let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
    (-r2 / (2.0 * width * width)).exp()
}

/// `Γ_μ = θ_μ^a P_a + ½ ω_μ^a_b M^b_a − A^k_μ T_k` for every chart direction.
pub fn gamma_from_values(alg: &LieAlgebra, v: &FieldValues) -> Vec<CMatrix> {
    let dim = alg.dim();
    v.theta
        .iter()
        .zip(&v.omega)
        .zip(&v.gauge)
        .map(|((theta, omega), gauge)| {
            let mut g = CMatrix::zeros(dim, dim);
            for a in 0..4 {
                if let Some(p) = alg.translation(a) {
                    if theta[a] != 0.0 {
                        g += p * c(theta[a], 0.0);
                    }
                }
                for b in 0..4 {
                    if let Some(m) = alg.rotation(a, b) {
                        if omega[a][b] != 0.0 {
                            g += m * c(0.5 * omega[a][b], 0.0);
                        }
                    }
                }
            }
            for (k, &ak) in gauge.iter().enumerate() {
                if ak != 0.0 {
                    g -= alg.gauge_generator(k) * c(ak, 0.0);
                }
            }
            g
        })
        .collect()
}

/// The connection matrices `Γ_μ(x)`.
pub fn connection_at(
    field: &ConnectionField,
    alg: &LieAlgebra,
    x: &[f64],
) -> Result<Vec<CMatrix>, HolonomyError> {
    Ok(gamma_from_values(alg, &field.values(alg, x)?))
}

/// Torsion, linear curvature and gauge field strength in the `(μ, ν)` plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneStrength {
    pub mu: usize,
    pub nu: usize,
    /// `Q_μν^a`.
    pub torsion: [f64; 4],
    /// `R_μν^a_b`.
    pub curvature: [[f64; 4]; 4],
    /// `F_μν^k`.
    pub gauge: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldStrengths {
    pub planes: Vec<PlaneStrength>,
    /// Estimated derivative error (zero for closed forms).
    pub error_estimate: f64,
}

impl FieldStrengths {
    /// Components for `μ < ν`, sign-flipped for `μ > ν`, zero for `μ = ν`.
    pub fn plane(&self, mu: usize, nu: usize) -> Option<PlaneStrength> {
        if mu == nu {
            let k = self.planes.first().map_or(0, |p| p.gauge.len());
            return Some(PlaneStrength {
                mu,
                nu,
                torsion: [0.0; 4],
                curvature: [[0.0; 4]; 4],
                gauge: vec![0.0; k],
            });
        }
        let (lo, hi) = (mu.min(nu), mu.max(nu));
        let p = self
            .planes
            .iter()
            .find(|p| p.mu == lo && p.nu == hi)?
            .clone();
        if mu < nu {
            return Some(p);
        }
        let neg = |x: f64| -x;
        Some(PlaneStrength {
            mu,
            nu,
            torsion: p.torsion.map(neg),
            curvature: p.curvature.map(|r| r.map(neg)),
            gauge: p.gauge.iter().map(|x| -x).collect(),
        })
    }
}

/// `Q^a = dθ^a + ω^a_b ∧ θ^b`, `R^a_b = dω^a_b + ω^a_c ∧ ω^c_b` and
/// `F^k = dA^k + C^k_mn A^m ∧ A^n`, component-wise at `x`.
pub fn field_strengths(
    field: &ConnectionField,
    alg: &LieAlgebra,
    x: &[f64],
) -> Result<FieldStrengths, HolonomyError> {
    let v = field.values(alg, x)?;
    let d = field.chart_dim;
    let mut derivs = Vec::with_capacity(d);
    let mut error_estimate: f64 = 0.0;
    for nu in 0..d {
        let (dv, err) = field.derivative(alg, x, nu)?;
        error_estimate = error_estimate.max(err);
        derivs.push(dv);
    }
    let kcount = alg.gauge_count();
    let mut planes = Vec::new();
    for mu in 0..d {
        for nu in (mu + 1)..d {
            let mut torsion = [0.0; 4];
            for (a, q) in torsion.iter_mut().enumerate() {
                *q = derivs[mu].theta[nu][a] - derivs[nu].theta[mu][a];
                for b in 0..4 {
                    *q += v.omega[mu][a][b] * v.theta[nu][b] - v.omega[nu][a][b] * v.theta[mu][b];
                }
            }
            let mut curvature = [[0.0; 4]; 4];
            for a in 0..4 {
                for b in 0..4 {
                    let mut r = derivs[mu].omega[nu][a][b] - derivs[nu].omega[mu][a][b];
                    for cc in 0..4 {
                        r += v.omega[mu][a][cc] * v.omega[nu][cc][b]
                            - v.omega[nu][a][cc] * v.omega[mu][cc][b];
                    }
                    curvature[a][b] = r;
                }
            }
            let gauge = (0..kcount)
                .map(|k| {
                    let mut f = derivs[mu].gauge[nu][k] - derivs[nu].gauge[mu][k];
                    for m in 0..kcount {
                        for n in 0..kcount {
                            let ck = alg.gauge_structure(k, m, n);
                            if ck != 0.0 {
                                f += ck * v.gauge[mu][m] * v.gauge[nu][n];
                            }
                        }
                    }
                    f
                })
                .collect();
            planes.push(PlaneStrength {
                mu,
                nu,
                torsion,
                curvature,
                gauge,
            });
        }
    }
    Ok(FieldStrengths {
        planes,
        error_estimate,
    })
}
