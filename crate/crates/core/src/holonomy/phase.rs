use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::field::Preset;
use super::transport::Curve;
use super::HolonomyError;
use crate::linalg::{c, complexify, CMatrix, CVector};
use crate::Complex64;

/// Tolerance for `X² = −I` and `[X, g] = 0`.
pub const STRUCTURE_TOL: f64 = 1e-10;

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Sub-intervals per edge for quadrature of non-solenoid potentials.
const QUAD_PIECES: usize = 32;
const QUAD_ORDER: usize = 16;

fn quadrature(
    preset: &Preset,
    a: &[f64],
    b: &[f64],
    rule: &[(f64, f64)],
) -> Result<f64, HolonomyError> {
    let d = a.len();
    let mut total = 0.0;
    let mut x = vec![0.0; d];
    for piece in 0..QUAD_PIECES {
        let t0 = piece as f64 / QUAD_PIECES as f64;
        let h = 1.0 / QUAD_PIECES as f64;
        for &(node, w) in rule {
            let t = t0 + h * (node + 1.0) / 2.0;
            for i in 0..d {
                x[i] = a[i] + t * (b[i] - a[i]);
            }
            let pot = preset.u1_potential(&x)?;
            let along: f64 = pot
                .iter()
                .zip(a.iter().zip(b))
                .map(|(p, (s, e))| p * (e - s))
                .sum();
            total += w * h / 2.0 * along;
        }
    }
    Ok(total)
}

/// Distance from `p` to the segment `[a, b]` in the plane.
fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    ((a[0] + t * dx - p[0]).powi(2) + (a[1] + t * dy - p[1]).powi(2)).sqrt()
}

/// `∮ A_μ dx^μ` around a closed curve. Edges of a solenoid that stay outside
/// the core use the exact angle increment, so the result is `Φ · w` with `w`
/// the winding number; everything else uses Gauss–Legendre quadrature.
pub fn u1_loop_integral(preset: &Preset, curve: &Curve) -> Result<f64, HolonomyError> {
    if !curve.is_closed() {
        return Err(HolonomyError::NotClosed(curve.closure_gap()));
    }
    let rule = gauss_legendre(QUAD_ORDER);
    let mut total = 0.0;
    for edge in curve.vertices().windows(2) {
        let (a, b) = (&edge[0], &edge[1]);
        if let Preset::Solenoid {
            flux,
            center,
            core_radius,
        } = preset
        {
            let pa = [a[0], a[1]];
            let pb = [b[0], b[1]];
            let dist = segment_distance(*center, pa, pb);
            if *core_radius == 0.0 && dist < 1e-12 {
                return Err(HolonomyError::OutOfChart(center.to_vec()));
            }
            if dist >= *core_radius {
                let (ux, uy) = (pa[0] - center[0], pa[1] - center[1]);
                let (vx, vy) = (pb[0] - center[0], pb[1] - center[1]);
                let dphi = (ux * vy - uy * vx).atan2(ux * vx + uy * vy);
                total += flux / (2.0 * PI) * dphi;
                continue;
            }
        }
        total += quadrature(preset, a, b, &rule)?;
    }
    Ok(total)
}

/// `exp(−i e ∮ A)` for a closed curve.
pub fn u1_phase_factor(preset: &Preset, e: f64, curve: &Curve) -> Result<Complex64, HolonomyError> {
    Ok(Complex64::from_polar(
        1.0,
        -e * u1_loop_integral(preset, curve)?,
    ))
}

/// Number of turns of a closed curve around `center` in the first two
/// coordinates.
pub fn winding_number(center: [f64; 2], curve: &Curve) -> Result<i64, HolonomyError> {
    let unit = Preset::Solenoid {
        flux: 2.0 * PI,
        center,
        core_radius: 0.0,
    };
    Ok((u1_loop_integral(&unit, curve)? / (2.0 * PI)).round() as i64)
}

fn real_max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Orthonormal basis of the column space of `p`, by modified Gram–Schmidt.
fn column_basis(p: &CMatrix, tol: f64) -> Vec<CVector> {
    let mut basis: Vec<CVector> = Vec::new();
    for col in p.column_iter() {
        let mut v = col.into_owned();
        for b in &basis {
            let proj = b.dotc(&v);
            v -= b * proj;
        }
        let n = v.norm();
        if n > tol {
            basis.push(v / c(n, 0.0));
        }
    }
    basis
}

/// Integer charges of a one-parameter family `g(φ)` commuting with a complex
/// structure `X`.
///
/// Each sample is `(φ, g(φ))`. The family is restricted to the `+i`
/// eigenspace of `X`, where `g(φ)` acts with eigenvalues `e^{i q φ}`; the
/// charges `q` are read off the sample with the smallest non-zero `|φ|` and
/// confirmed against all others. Returned in ascending order.
pub fn complex_structure_decompose(
    samples: &[(f64, DMatrix<f64>)],
    x: &DMatrix<f64>,
) -> Result<Vec<i64>, HolonomyError> {
    let n = x.nrows();
    if x.ncols() != n || !n.is_multiple_of(2) {
        return Err(HolonomyError::NotComplexStructure(f64::INFINITY));
    }
    let square = x * x + DMatrix::<f64>::identity(n, n);
    let defect = real_max_abs(&square);
    if defect > STRUCTURE_TOL {
        return Err(HolonomyError::NotComplexStructure(defect));
    }
    for (i, (_, g)) in samples.iter().enumerate() {
        if g.shape() != (n, n) {
            return Err(HolonomyError::DimensionMismatch(g.nrows(), n));
        }
        let comm = real_max_abs(&(x * g - g * x));
        if comm > STRUCTURE_TOL {
            return Err(HolonomyError::DoesNotCommute {
                index: i,
                defect: comm,
            });
        }
    }
    let reference = samples
        .iter()
        .filter(|(phi, _)| *phi != 0.0 && phi.is_finite())
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .ok_or(HolonomyError::NoSamples)?;

    // (I − iX)/2 projects onto X v = i v
    let xc = complexify(x);
    let projector = (CMatrix::identity(n, n) - &xc * c(0.0, 1.0)) * c(0.5, 0.0);
    let basis = column_basis(&projector, 1e-8);
    if basis.len() != n / 2 {
        return Err(HolonomyError::NotComplexStructure(defect));
    }
    let b = CMatrix::from_columns(&basis);
    let restrict = |g: &DMatrix<f64>| b.adjoint() * complexify(g) * &b;

    let (phi0, g0) = reference;
    let eig = restrict(g0)
        .schur()
        .eigenvalues()
        .ok_or(HolonomyError::NoSamples)?;
    let mut charges: Vec<i64> = eig
        .iter()
        .map(|l| (l.arg() / phi0).round() as i64)
        .collect();
    charges.sort_unstable();

    for (i, (phi, g)) in samples.iter().enumerate() {
        let mut got: Vec<Complex64> = restrict(g)
            .schur()
            .eigenvalues()
            .ok_or(HolonomyError::NoSamples)?
            .iter()
            .copied()
            .collect();
        for q in &charges {
            let want = Complex64::from_polar(1.0, *q as f64 * phi);
            let pos = got
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - want).norm().total_cmp(&(b.1 - want).norm()))
                .map(|(j, _)| j)
                .expect("eigenvalue count matches charges");
            if (got[pos] - want).norm() > 1e-8 {
                return Err(HolonomyError::NonIntegerCharge { index: i });
            }
            got.swap_remove(pos);
        }
    }
    Ok(charges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(phi: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[phi.cos(), -phi.sin(), phi.sin(), phi.cos()])
    }

    fn j() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])
    }

    fn block(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (2, 2)).copy_from(a);
        m.view_mut((2, 2), (2, 2)).copy_from(b);
        m
    }

    fn solenoid(flux: f64) -> Preset {
        Preset::Solenoid {
            flux,
            center: [0.0, 0.0],
            core_radius: 0.0,
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(16);
        let s: f64 = rule.iter().map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        assert!((rule.iter().map(|p| p.1).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn aharonov_bohm_examples() {
        let around = Curve::polygon([0.0, 0.0], 1.0, 7, 0.3).unwrap();
        let z = u1_phase_factor(&solenoid(PI), 1.0, &around).unwrap();
        assert!((z + 1.0).norm() < 1e-9);
        let z = u1_phase_factor(&solenoid(2.0 * PI), 1.0, &around).unwrap();
        assert!((z - 1.0).norm() < 1e-9);
        let away = Curve::polygon([3.0, 0.5], 1.0, 5, 0.0).unwrap();
        let z = u1_phase_factor(&solenoid(PI), 1.0, &away).unwrap();
        assert!((z - 1.0).norm() < 1e-9);

        let twice = around.then(&around).unwrap();
        assert_eq!(winding_number([0.0, 0.0], &twice).unwrap(), 2);
        assert_eq!(winding_number([0.0, 0.0], &around.reversed()).unwrap(), -1);
        let z = u1_phase_factor(&solenoid(0.4), 2.5, &twice).unwrap();
        assert!((z - Complex64::from_polar(1.0, -2.5 * 0.4 * 2.0)).norm() < 1e-12);

        let open = Curve::segment(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!(matches!(
            u1_phase_factor(&solenoid(PI), 1.0, &open),
            Err(HolonomyError::NotClosed(_))
        ));
    }

    #[test]
    fn cored_solenoid_uses_quadrature_inside() {
        // Loop inside a uniform core of radius R encloses flux Φ r²/R².
        let p = Preset::Solenoid {
            flux: 2.0,
            center: [0.0, 0.0],
            core_radius: 2.0,
        };
        let square = Curve::new(vec![
            vec![-0.5, -0.5],
            vec![0.5, -0.5],
            vec![0.5, 0.5],
            vec![-0.5, 0.5],
            vec![-0.5, -0.5],
        ])
        .unwrap();
        let flux = u1_loop_integral(&p, &square).unwrap();
        // B = Φ / (π R²), area 1
        assert!((flux - 2.0 / (PI * 4.0)).abs() < 1e-13);
        let outside = Curve::polygon([0.0, 0.0], 3.0, 9, 0.1).unwrap();
        assert!((u1_loop_integral(&p, &outside).unwrap() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn abelian_presets_follow_stokes() {
        let tri = Curve::new(vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 0.0],
        ])
        .unwrap();
        let lin = Preset::U1Linear { b: 0.75 };
        assert!((u1_loop_integral(&lin, &tri).unwrap() - 0.75).abs() < 1e-14);
        let cst = Preset::U1Constant {
            potential: vec![0.4, -1.1],
        };
        assert!(u1_loop_integral(&cst, &tri).unwrap().abs() < 1e-14);
        assert!(matches!(
            u1_loop_integral(&Preset::FlatSolder, &tri),
            Err(HolonomyError::PresetMismatch(_))
        ));
    }

    #[test]
    fn charge_examples() {
        let samples: Vec<_> = [0.3, 1.1, -2.0].iter().map(|&p| (p, rot(p))).collect();
        assert_eq!(
            complex_structure_decompose(&samples, &j()).unwrap(),
            vec![1]
        );

        let x4 = block(&j(), &j());
        let samples: Vec<_> = [0.2, 0.9, 2.4]
            .iter()
            .map(|&p| (p, block(&rot(p), &rot(3.0 * p))))
            .collect();
        assert_eq!(
            complex_structure_decompose(&samples, &x4).unwrap(),
            vec![1, 3]
        );

        let samples: Vec<_> = [0.25, 0.7]
            .iter()
            .map(|&p| (p, block(&rot(-2.0 * p), &rot(p))))
            .collect();
        assert_eq!(
            complex_structure_decompose(&samples, &x4).unwrap(),
            vec![-2, 1]
        );

        let swap = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert!(matches!(
            complex_structure_decompose(&[(0.1, rot(0.1))], &swap),
            Err(HolonomyError::NotComplexStructure(_))
        ));
        let diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            complex_structure_decompose(&[(0.1, diag)], &j()),
            Err(HolonomyError::DoesNotCommute { index: 0, .. })
        ));
        assert!(matches!(
            complex_structure_decompose(&[], &j()),
            Err(HolonomyError::NoSamples)
        ));
    }

    #[test]
    fn charges_survive_a_change_of_basis() {
        // S X S⁻¹ with g ↦ S g S⁻¹ is the same structure in another frame
        let s = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.5, 0.0, 0.2, 0.0, 1.0, 0.3, 0.0, 0.1, 0.0, 1.0, 0.4, 0.0, 0.2, 0.0, 1.0,
            ],
        );
        let si = s.clone().try_inverse().unwrap();
        let x = &s * block(&j(), &j()) * &si;
        let samples: Vec<_> = [0.15, 0.8]
            .iter()
            .map(|&p| (p, &s * block(&rot(2.0 * p), &rot(5.0 * p)) * &si))
            .collect();
        assert_eq!(
            complex_structure_decompose(&samples, &x).unwrap(),
            vec![2, 5]
        );
    }
}
