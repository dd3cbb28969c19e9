use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use lawless_core::holonomy::{
    converged_holonomy, gauge_covariance_check, holonomy, small_loop_check, u1_phase_factor,
    winding_number, BoundField, ConnectionField, FieldFile,
};
use lawless_core::linalg::{loglog_slope, to_rows, CMatrix};
use lawless_core::phenomenon::trial_rng;
use lawless_core::{Curve, Factor, GaugeFunction, Preset};
use rand::Rng;
use serde::Serialize;
use serde_json::json;

use crate::{csv_text, invalid, read_file, schema, to_value, Artifact, Check, CliError, NumList};

pub const SMALL_LOOP_MIN_SLOPE: f64 = 2.7;
pub const GAUGE_TOL: f64 = 1e-6;
pub const UNITARITY_TOL: f64 = 1e-9;
/// Residuals below this are rounding only and carry no slope.
const FLAT_RESIDUAL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Holonomy of the curve.
    Transport,
    /// Residual of `I + 𝔽a²` over shrinking squares.
    SmallLoop,
    /// `g' = h(end) g h(start)⁻¹` under a gauge transformation.
    Gauge,
    /// `exp(−ie∮A)` of a closed curve.
    Phase,
}

#[derive(Debug, Clone, Args, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true))]
pub struct HolonomyArgs {
    /// Field preset file `{chart_dim, factors, preset, parameters}`.
    #[arg(long, group = "source")]
    pub field: Option<PathBuf>,
    /// Preset name: zero, u1-constant, u1-linear, solenoid, su2-constant,
    /// su2-bump, flat-solder, torsion.
    #[arg(long, group = "source")]
    pub preset: Option<String>,
    /// Preset parameters as a JSON object.
    #[arg(long, requires = "preset")]
    pub params: Option<String>,
    /// Group factors, e.g. `u1:2,su2`.
    #[arg(long, requires = "preset")]
    pub factors: Option<String>,
    #[arg(long, requires = "preset")]
    pub chart_dim: Option<usize>,
    /// Vertex-list CSV; a unit square around the origin when absent.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Transport)]
    pub mode: Mode,
    /// Fixed sub-steps per edge; otherwise steps double until `--tol`.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Base point of the small loops.
    #[arg(long)]
    pub point: Option<NumList>,
    #[arg(long, default_value = "0,1")]
    pub plane: NumList,
    #[arg(long, default_value = "0.1,0.05,0.025")]
    pub sides: NumList,
    /// Gauge function JSON; drawn from the seed when absent.
    #[arg(long)]
    pub gauge: Option<PathBuf>,
    /// Coefficient scale of a seeded gauge function.
    #[arg(long, default_value_t = 0.5)]
    pub gauge_scale: f64,
}

fn parse_factors(s: &str) -> Result<Vec<Factor>, CliError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            let (name, arg) = t.split_once(':').unwrap_or((t, ""));
            match (name, arg) {
                ("u1", "") => Ok(Factor::U1 { charge: 1.0 }),
                ("u1", e) => e
                    .parse()
                    .map(|charge| Factor::U1 { charge })
                    .map_err(|_| CliError::BadFlag(format!("bad u1 charge `{e}`"))),
                ("su2", "") => Ok(Factor::Su2),
                ("su3", "") => Ok(Factor::Su3),
                ("lorentz", "") => Ok(Factor::Lorentz),
                ("poincare", "") => Ok(Factor::Poincare),
                _ => Err(CliError::BadFlag(format!("unknown factor `{t}`"))),
            }
        })
        .collect()
}

fn default_preset(name: &str, chart_dim: usize) -> Result<Preset, CliError> {
    Ok(match name {
        "zero" => Preset::Zero,
        "u1-constant" => Preset::U1Constant {
            potential: (0..chart_dim)
                .map(|m| if m % 2 == 0 { 0.5 } else { -0.25 })
                .collect(),
        },
        "u1-linear" => Preset::U1Linear { b: 1.0 },
        "solenoid" => Preset::Solenoid {
            flux: std::f64::consts::PI,
            center: [0.0, 0.0],
            core_radius: 0.0,
        },
        "su2-constant" => Preset::Su2Constant {
            ax: [0.3, 0.1, 0.0],
            ay: [0.0, 0.2, 0.4],
        },
        "su2-bump" => Preset::Su2Bump {
            amplitude: 1.0,
            width: 1.0,
            center: [0.0, 0.0],
        },
        "flat-solder" => Preset::FlatSolder,
        "torsion" => Preset::Torsion {
            rotation: 0.3,
            boost: 0.1,
        },
        other => return Err(CliError::BadFlag(format!("unknown preset `{other}`"))),
    })
}

fn is_spacetime_preset(name: &str) -> bool {
    matches!(name, "flat-solder" | "torsion")
}

fn resolve_field(args: &HolonomyArgs) -> Result<FieldFile, CliError> {
    if let Some(path) = &args.field {
        return FieldFile::from_json(&read_file(path)?).map_err(|e| schema(path, e));
    }
    let name = args.preset.as_deref().expect("clap requires a source");
    let spacetime = is_spacetime_preset(name);
    let chart_dim = args.chart_dim.unwrap_or(if spacetime { 4 } else { 2 });
    let preset = match &args.params {
        Some(p) => {
            let params: serde_json::Value =
                serde_json::from_str(p).map_err(|e| CliError::BadFlag(format!("--params: {e}")))?;
            serde_json::from_value(json!({ "preset": name, "parameters": params }))
                .map_err(|e| CliError::BadFlag(format!("--params for `{name}`: {e}")))?
        }
        None => default_preset(name, chart_dim)?,
    };
    let factors = match &args.factors {
        Some(f) => parse_factors(f)?,
        None if spacetime => vec![Factor::Poincare],
        None if name.starts_with("su2") => vec![Factor::Su2],
        None => vec![Factor::U1 { charge: 1.0 }],
    };
    Ok(FieldFile {
        chart_dim,
        factors,
        preset,
    })
}

fn pad(v: &[f64], dim: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(dim.max(v.len()), 0.0);
    out
}

fn resolve_curve(path: Option<&Path>, chart_dim: usize) -> Result<Curve, CliError> {
    let curve = match path {
        Some(p) => Curve::read_csv(read_file(p)?.as_bytes()).map_err(|e| schema(p, e))?,
        None => Curve::square_loop(&[-0.5, -0.5], 0, 1, 1.0).expect("valid square"),
    };
    if curve.dim() > chart_dim {
        return Err(CliError::Invalid(format!(
            "curve has {} coordinates but the chart has {chart_dim}",
            curve.dim()
        )));
    }
    // lower-dimensional curves sit in the leading coordinate plane
    Curve::new(curve.vertices().iter().map(|v| pad(v, chart_dim)).collect()).map_err(invalid)
}

fn seeded_gauge(seed: u64, chart_dim: usize, gauge_count: usize, scale: f64) -> GaugeFunction {
    let mut rng = trial_rng(seed, 0);
    let mut draw = |n: usize| -> Vec<f64> {
        (0..n)
            .map(|_| scale * (2.0 * rng.random::<f64>() - 1.0))
            .collect()
    };
    GaugeFunction {
        constant: draw(gauge_count),
        linear: (0..chart_dim).map(|_| draw(gauge_count)).collect(),
        periodic: (0..chart_dim).map(|_| draw(gauge_count)).collect(),
    }
}

fn matrix_rows(m: &CMatrix) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for (i, r) in m.row_iter().enumerate() {
        for (j, z) in r.iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                j.to_string(),
                z.re.to_string(),
                z.im.to_string(),
            ]);
        }
    }
    rows
}

pub fn run(args: &HolonomyArgs, seed: u64) -> Result<Artifact, CliError> {
    let file = resolve_field(args)?;
    let (alg, field) = file.bind().map_err(invalid)?;
    let curve = resolve_curve(args.curve.as_deref(), field.chart_dim)?;
    if args.steps == Some(0) {
        return Err(CliError::BadFlag("--steps must be at least 1".into()));
    }
    if !(args.tol > 0.0) {
        return Err(CliError::BadFlag("--tol must be positive".into()));
    }
    let mut resolved = json!({
        "field": to_value(&file),
        "curve": curve.vertices(),
    });

    let (result, csv, checks) = match args.mode {
        Mode::Transport => transport(args, &alg, &field, &curve)?,
        Mode::SmallLoop => {
            let point = pad(args.point.as_deref().unwrap_or(&[]), field.chart_dim);
            resolved["point"] = json!(point);
            small_loops(args, &alg, &field, &point)?
        }
        Mode::Gauge => {
            let h = match &args.gauge {
                Some(p) => serde_json::from_str(&read_file(p)?).map_err(|e| schema(p, e))?,
                None => seeded_gauge(seed, field.chart_dim, alg.gauge_count(), args.gauge_scale),
            };
            resolved["gauge"] = to_value(&h);
            let steps = args.steps.unwrap_or(4096);
            let r = gauge_covariance_check(&field, &alg, &h, &curve, steps).map_err(invalid)?;
            let n = r.g.nrows();
            let rows = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let (a, b) = (r.g[(i, j)], r.g_transformed[(i, j)]);
                    vec![
                        i.to_string(),
                        j.to_string(),
                        a.re.to_string(),
                        a.im.to_string(),
                        b.re.to_string(),
                        b.im.to_string(),
                    ]
                });
            let csv = csv_text(
                &[
                    "row",
                    "col",
                    "g_re",
                    "g_im",
                    "g_transformed_re",
                    "g_transformed_im",
                ],
                rows,
            );
            let checks = vec![Check::at_most("gauge_residual", r.residual, GAUGE_TOL)];
            (to_value(&r), csv, checks)
        }
        Mode::Phase => {
            let e = file
                .factors
                .iter()
                .find_map(|f| match f {
                    Factor::U1 { charge } => Some(*charge),
                    _ => None,
                })
                .ok_or_else(|| CliError::Invalid("phase mode needs a u1 factor".into()))?;
            let z = u1_phase_factor(&field.preset, e, &curve).map_err(invalid)?;
            let winding = match &field.preset {
                Preset::Solenoid { center, .. } => {
                    Some(winding_number(*center, &curve).map_err(invalid)?)
                }
                _ => None,
            };
            let csv = csv_text(&["re", "im"], [vec![z.re.to_string(), z.im.to_string()]]);
            (
                json!({ "charge": e, "phase": z, "winding": winding }),
                csv,
                Vec::new(),
            )
        }
    };
    Ok(Artifact {
        resolved,
        result,
        csv,
        checks,
    })
}

type Outcome = (serde_json::Value, String, Vec<Check>);

fn transport(
    args: &HolonomyArgs,
    alg: &lawless_core::LieAlgebra,
    field: &ConnectionField,
    curve: &Curve,
) -> Result<Outcome, CliError> {
    let r = match args.steps {
        Some(n) => holonomy(field, alg, curve, n).map_err(invalid)?,
        None => converged_holonomy(
            &BoundField::new(field, alg).map_err(invalid)?,
            curve,
            args.tol,
        )
        .map_err(invalid)?,
    };
    let mut checks = Vec::new();
    if args.steps.is_none() {
        checks.push(Check::at_most("error_estimate", r.error_estimate, args.tol));
    }
    let unitarity = r.element.unitarity_defect();
    checks.push(Check::at_most("unitarity_defect", unitarity, UNITARITY_TOL));
    let csv = csv_text(&["row", "col", "re", "im"], matrix_rows(&r.element.matrix));
    let result = json!({
        "matrix": to_rows(&r.element.matrix),
        "extrapolated": to_rows(&r.extrapolated),
        "steps": r.steps,
        "error_estimate": r.error_estimate,
        "unitarity_defect": unitarity,
        "blocks": to_value(&r.element.blocks),
        "closed": curve.is_closed(),
    });
    Ok((result, csv, checks))
}

fn small_loops(
    args: &HolonomyArgs,
    alg: &lawless_core::LieAlgebra,
    field: &ConnectionField,
    point: &[f64],
) -> Result<Outcome, CliError> {
    let plane = match &args.plane[..] {
        [a, b] if a.fract() == 0.0 && b.fract() == 0.0 && *a >= 0.0 && *b >= 0.0 => {
            (*a as usize, *b as usize)
        }
        _ => {
            return Err(CliError::BadFlag(
                "--plane takes two coordinate indices, e.g. 0,1".into(),
            ))
        }
    };
    if args.sides.len() < 2 || args.sides.iter().any(|a| !(*a > 0.0)) {
        return Err(CliError::BadFlag(
            "--sides needs at least two positive lengths".into(),
        ));
    }
    let reports = args
        .sides
        .iter()
        .map(|&a| small_loop_check(field, alg, point, plane, a))
        .collect::<Result<Vec<_>, _>>()
        .map_err(invalid)?;
    let residuals: Vec<f64> = reports.iter().map(|r| r.residual).collect();
    let worst = residuals.iter().copied().fold(0.0, f64::max);
    let (slope, checks) = if worst <= FLAT_RESIDUAL {
        (
            None,
            vec![Check::at_most("max_residual", worst, FLAT_RESIDUAL)],
        )
    } else {
        let s = loglog_slope(&args.sides, &residuals);
        (
            Some(s),
            vec![Check::at_least("residual_order", s, SMALL_LOOP_MIN_SLOPE)],
        )
    };
    let rows = reports.iter().map(|r| {
        vec![
            r.side.to_string(),
            r.residual.to_string(),
            r.integration_error.to_string(),
        ]
    });
    let csv = csv_text(&["side", "residual", "integration_error"], rows);
    Ok((
        json!({ "loops": to_value(&reports), "slope": slope }),
        csv,
        checks,
    ))
}
