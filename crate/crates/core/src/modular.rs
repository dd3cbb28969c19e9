//! One-dimensional periodic wave mechanics for the translation operator
//! `exp(ipℓ)`, with `p = −i d/dx` so that `exp(ipℓ)ψ(x) = ψ(x + ℓ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gaussian support half-width in units of σ.
pub const SUPPORT_SIGMAS: f64 = 6.0;
/// Largest admissible `|∫ f*(x) f(x − ℓ) dx|`.
pub const OVERLAP_LIMIT: f64 = 1e-8;
/// Highest supported momentum moment.
pub const MAX_MOMENT: u32 = 6;
/// Largest admissible imaginary part of a momentum moment.
pub const MOMENT_IMAG_LIMIT: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModularError {
    #[error("invalid packet spec: {0}")]
    InvalidSpec(String),
    #[error("grid size {0} is not a power of two >= 2")]
    GridNotPowerOfTwo(usize),
    #[error("packets need [{needed_lo}, {needed_hi}] inside the domain [0, {length}]")]
    DomainTooSmall {
        needed_lo: f64,
        needed_hi: f64,
        length: f64,
    },
    #[error("packets overlap: |<f|T f>| = {0:e} exceeds 1e-8")]
    OverlapViolation(f64),
    #[error("moment order must be at least 1")]
    ZeroMoment,
    #[error("moment order {0} exceeds the supported maximum 6")]
    MomentTooHigh(u32),
    #[error("moment {n} has imaginary part {imag:e}")]
    ImaginaryMoment { n: u32, imag: f64 },
    #[error("grid does not hold a two-packet state")]
    NotTwoPacket,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Gaussian,
}

/// Two-packet preparation `{shape, sigma, center, sep, alpha, grid, length}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub shape: Shape,
    pub sigma: f64,
    /// Centre of the undisplaced packet.
    pub center: f64,
    /// Separation `ℓ`.
    pub sep: f64,
    /// Relative phase of the displaced packet.
    pub alpha: f64,
    /// Number of grid points `G`.
    pub grid: usize,
    /// Domain length `L`.
    pub length: f64,
}

impl Default for PacketSpec {
    fn default() -> Self {
        Self {
            shape: Shape::Gaussian,
            sigma: 1.0,
            center: 24.0,
            sep: 16.0,
            alpha: 0.0,
            grid: 1024,
            length: 64.0,
        }
    }
}

impl PacketSpec {
    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    fn validate(&self) -> Result<(), ModularError> {
        let finite = [self.sigma, self.center, self.sep, self.alpha, self.length];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(ModularError::InvalidSpec("non-finite parameter".into()));
        }
        if self.sigma <= 0.0 {
            return Err(ModularError::InvalidSpec(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if self.sep <= 0.0 {
            return Err(ModularError::InvalidSpec(format!(
                "sep must be > 0, got {}",
                self.sep
            )));
        }
        if self.length <= 0.0 {
            return Err(ModularError::InvalidSpec(format!(
                "length must be > 0, got {}",
                self.length
            )));
        }
        if self.grid < 2 || !self.grid.is_power_of_two() {
            return Err(ModularError::GridNotPowerOfTwo(self.grid));
        }
        Ok(())
    }

    /// Grid samples of the profile `f` centred at `center + shift`, using the
    /// minimum-image distance so the periodic extension is smooth.
    fn profile(&self, shift: f64) -> Vec<Complex64> {
        let dx = self.length / self.grid as f64;
        let norm = (2.0 * PI * self.sigma * self.sigma).powf(-0.25);
        let c = self.center + shift;
        (0..self.grid)
            .map(|k| {
                let d = k as f64 * dx - c;
                let d = d - self.length * (d / self.length).round();
                Complex64::new(norm * (-d * d / (4.0 * self.sigma * self.sigma)).exp(), 0.0)
            })
            .collect()
    }
}

/// Two-packet bookkeeping kept alongside the samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoPacketInfo {
    pub spec: PacketSpec,
    /// `max(|<f|T_ℓ f>|, |<f|T_2ℓ f>|)` on the grid.
    pub overlap: f64,
}

/// Samples on `x_k = kΔx`, `k = 0..G`, with periodic semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePacketGrid {
    samples: Vec<Complex64>,
    length: f64,
    two_packet: Option<TwoPacketInfo>,
}

impl WavePacketGrid {
    /// Normalises `samples` so that `Σ|ψ_k|² Δx = 1`.
    pub fn new(mut samples: Vec<Complex64>, length: f64) -> Result<Self, ModularError> {
        if samples.len() < 2 || !samples.len().is_power_of_two() {
            return Err(ModularError::GridNotPowerOfTwo(samples.len()));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(ModularError::InvalidSpec(format!(
                "length must be > 0, got {length}"
            )));
        }
        let dx = length / samples.len() as f64;
        let norm = (samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(ModularError::InvalidSpec("state has zero norm".into()));
        }
        for z in &mut samples {
            *z /= norm;
        }
        Ok(Self {
            samples,
            length,
            two_packet: None,
        })
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.samples.len() as f64
    }

    pub fn norm_sqr(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx()
    }

    pub fn two_packet(&self) -> Option<&TwoPacketInfo> {
        self.two_packet.as_ref()
    }
}

fn check_support(spec: &PacketSpec, shift: f64) -> Result<(), ModularError> {
    let lo = spec.center - SUPPORT_SIGMAS * spec.sigma;
    let hi = spec.center + shift + SUPPORT_SIGMAS * spec.sigma;
    if lo < 0.0 || hi > spec.length {
        return Err(ModularError::DomainTooSmall {
            needed_lo: lo,
            needed_hi: hi,
            length: spec.length,
        });
    }
    Ok(())
}

/// A single packet `f` centred at `spec.center`; `sep` and `alpha` are ignored.
pub fn make_single_packet(spec: &PacketSpec) -> Result<WavePacketGrid, ModularError> {
    spec.validate()?;
    check_support(spec, 0.0)?;
    WavePacketGrid::new(spec.profile(0.0), spec.length)
}

/// `ψ_α = (f(x) + e^{iα} f(x − ℓ)) / √2`, renormalised on the grid.
pub fn make_two_packet(spec: &PacketSpec) -> Result<WavePacketGrid, ModularError> {
    spec.validate()?;
    let f = spec.profile(0.0);
    let dx = spec.length / spec.grid as f64;
    let shift_overlap = |ell: f64| {
        let s = (ell / dx).round() as i64;
        periodic_overlap(&f, &f, s).norm() * dx
    };
    let overlap_1 = shift_overlap(spec.sep);
    if overlap_1 > OVERLAP_LIMIT {
        return Err(ModularError::OverlapViolation(overlap_1));
    }
    check_support(spec, spec.sep)?;
    let overlap = overlap_1.max(shift_overlap(2.0 * spec.sep));
    let g = spec.profile(spec.sep);
    let phase = Complex64::from_polar(1.0, spec.alpha);
    let samples = f
        .iter()
        .zip(&g)
        .map(|(a, b)| (a + phase * b) * std::f64::consts::FRAC_1_SQRT_2)
        .collect();
    let mut grid = WavePacketGrid::new(samples, spec.length)?;
    grid.two_packet = Some(TwoPacketInfo {
        spec: spec.clone(),
        overlap,
    });
    Ok(grid)
}

/// `Σ conj(a_k) b_{(k+s) mod G}`.
fn periodic_overlap(a: &[Complex64], b: &[Complex64], s: i64) -> Complex64 {
    let g = a.len() as i64;
    a.iter()
        .enumerate()
        .map(|(k, z)| z.conj() * b[(k as i64 + s).rem_euclid(g) as usize])
        .sum()
}

/// Result of a translation with `ℓ` snapped to the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Translation {
    pub value: Complex64,
    /// Grid shift `s = round(ℓ/Δx)`.
    pub shift: i64,
    /// `|ℓ − sΔx|`, at most `Δx/2`.
    pub snap_distance: f64,
}

/// `<ψ|exp(ipℓ)|ψ> = Σ ψ*(x) ψ(x + ℓ) Δx` by exact periodic index shift.
pub fn translation(psi: &WavePacketGrid, ell: f64) -> Translation {
    let dx = psi.dx();
    let shift = (ell / dx).round() as i64;
    Translation {
        value: periodic_overlap(&psi.samples, &psi.samples, shift) * dx,
        shift,
        snap_distance: (ell - shift as f64 * dx).abs(),
    }
}

pub fn translation_expectation(psi: &WavePacketGrid, ell: f64) -> Complex64 {
    translation(psi, ell).value
}

/// Angular wavenumbers in FFT order.
fn wavenumbers(g: usize, length: f64) -> Vec<f64> {
    let dk = 2.0 * PI / length;
    (0..g)
        .map(|j| {
            let j = if j < g / 2 {
                j as f64
            } else {
                j as f64 - g as f64
            };
            j * dk
        })
        .collect()
}

/// `<ψ|pⁿ|ψ>` by spectral differentiation.
///
/// For odd `n` the Nyquist mode is dropped, since `kⁿ` there has no
/// consistent sign.
pub fn momentum_moment(psi: &WavePacketGrid, n: u32) -> Result<f64, ModularError> {
    if n == 0 {
        return Err(ModularError::ZeroMoment);
    }
    if n > MAX_MOMENT {
        return Err(ModularError::MomentTooHigh(n));
    }
    let g = psi.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = psi.samples.clone();
    planner.plan_fft_forward(g).process(&mut buf);
    for (z, k) in buf.iter_mut().zip(wavenumbers(g, psi.length)) {
        *z *= k.powi(n as i32);
    }
    if n % 2 == 1 {
        buf[g / 2] = Complex64::new(0.0, 0.0);
    }
    planner.plan_fft_inverse(g).process(&mut buf);
    let scale = psi.dx() / g as f64;
    let value: Complex64 = psi
        .samples
        .iter()
        .zip(&buf)
        .map(|(a, b)| a.conj() * b)
        .sum::<Complex64>()
        * scale;
    if value.im.abs() >= MOMENT_IMAG_LIMIT {
        return Err(ModularError::ImaginaryMoment { n, imag: value.im });
    }
    Ok(value.re)
}

/// Change of a moment under the relative phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentChange {
    pub n: u32,
    pub before: f64,
    pub after: f64,
    pub delta: f64,
    /// `|delta| / max(1, |before|)`.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModularExchangeReport {
    pub alpha: f64,
    pub sep: f64,
    pub overlap: f64,
    pub snap_distance: f64,
    pub translation_before: Complex64,
    pub translation_after: Complex64,
    pub delta_translation: Complex64,
    /// `(e^{iα} − 1) / 2`.
    pub expected_delta: Complex64,
    pub moments: Vec<MomentChange>,
}

impl ModularExchangeReport {
    pub fn max_relative_moment_change(&self) -> f64 {
        self.moments.iter().map(|m| m.relative).fold(0.0, f64::max)
    }

    pub fn translation_error(&self) -> f64 {
        (self.delta_translation - self.expected_delta).norm()
    }
}

/// Applies `e^{iα}` to the displaced packet of `psi0` and records how the
/// modular expectation and the moments `n = 1..=nmax` respond.
pub fn modular_exchange_report(
    psi0: &WavePacketGrid,
    alpha: f64,
    nmax: u32,
) -> Result<ModularExchangeReport, ModularError> {
    let info = psi0.two_packet().ok_or(ModularError::NotTwoPacket)?;
    let spec = &info.spec;
    let after = make_two_packet(&spec.with_alpha(spec.alpha + alpha))?;
    let t0 = translation(psi0, spec.sep);
    let t1 = translation(&after, spec.sep);
    let moments = (1..=nmax)
        .map(|n| {
            let before = momentum_moment(psi0, n)?;
            let a = momentum_moment(&after, n)?;
            let delta = a - before;
            Ok(MomentChange {
                n,
                before,
                after: a,
                delta,
                relative: delta.abs() / before.abs().max(1.0),
            })
        })
        .collect::<Result<Vec<_>, ModularError>>()?;
    Ok(ModularExchangeReport {
        alpha,
        sep: spec.sep,
        overlap: info.overlap,
        snap_distance: t0.snap_distance,
        translation_before: t0.value,
        translation_after: t1.value,
        delta_translation: t1.value - t0.value,
        expected_delta: (Complex64::from_polar(1.0, alpha) - 1.0) * 0.5,
        moments,
    })
}
