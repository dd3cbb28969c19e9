//! Small dense complex linear-algebra helpers shared by the other modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Lifts a real matrix into the complex matrix type.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Builds a complex matrix from row-major `(re, im)` pairs.
pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> CMatrix {
    DMatrix::from_row_slice(rows, cols, entries)
}

/// Largest absolute entry; used as a cheap matrix norm for tolerance checks.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Frobenius norm.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖A†A − I‖` measured entrywise.
pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    max_abs(&(m.adjoint() * m - CMatrix::identity(n, n)))
}

/// `‖A − A†‖` measured entrywise.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Hilbert–Schmidt inner product `tr(A† B)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Matrix exponential by scaling and squaring with a truncated Taylor series.
///
/// Only sums and products of the argument are formed, so any sparsity
/// pattern closed under multiplication (zero bottom row of an affine
/// generator, block-diagonal direct sums) is preserved exactly.
pub fn expm(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let norm = a
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    if norm > 0.5 {
        squarings = (norm / 0.5).log2().ceil() as u32;
    }
    let scaled = a * Complex64::new(0.5f64.powi(squarings as i32), 0.0);

    // ‖scaled‖ ≤ 0.5, so 20 terms put the truncation error far below 1 ulp.
    let mut result = CMatrix::identity(n, n);
    let mut term = CMatrix::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled * Complex64::new(1.0 / k as f64, 0.0);
        result += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Fréchet derivative of the exponential at `a` in direction `e`,
/// `d/dt exp(a + t e)|_{t=0}`, read off the upper-right block of
/// `exp([[a, e], [0, a]])`.
pub fn expm_frechet(a: &CMatrix, e: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let mut block = CMatrix::zeros(2 * n, 2 * n);
    block.view_mut((0, 0), (n, n)).copy_from(a);
    block.view_mut((n, n), (n, n)).copy_from(a);
    block.view_mut((0, n), (n, n)).copy_from(e);
    expm(&block).view((0, n), (n, n)).into_owned()
}

/// Direct sum of square blocks along the diagonal.
pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(n, n);
    let mut offset = 0;
    for b in blocks {
        let k = b.nrows();
        out.view_mut((offset, offset), (k, k)).copy_from(b);
        offset += k;
    }
    out
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Row-major `[[ [re, im], ... ], ...]` form used in JSON reports.
pub fn to_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.row_iter()
        .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

/// Serializes a complex matrix field as [`to_rows`].
pub fn serialize_rows<S: serde::Serializer>(m: &CMatrix, s: S) -> Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&to_rows(m), s)
}
