use std::path::PathBuf;

use clap::Args;
use lawless_core::modular::{make_two_packet, modular_exchange_report, MAX_MOMENT};
use lawless_core::{Complex64, PacketSpec};
use serde::Serialize;
use serde_json::json;

use crate::{csv_text, invalid, read_file, schema, to_value, Artifact, Check, CliError, NumList};

pub const TRANSLATION_TOL: f64 = 1e-6;
pub const MOMENT_TOL: f64 = 1e-9;

const DEFAULT_ALPHAS: &str = "0,1.5707963267948966,3.141592653589793,2.3";

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModularArgs {
    /// Packet spec JSON; the flags below override its fields.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub center: Option<f64>,
    /// Separation `ℓ` of the two packets.
    #[arg(long)]
    pub sep: Option<f64>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub length: Option<f64>,
    /// Relative phases applied to the displaced packet, comma separated.
    #[arg(long, default_value = DEFAULT_ALPHAS)]
    pub alpha: NumList,
    /// Highest momentum moment compared.
    #[arg(long, default_value_t = 4)]
    pub nmax: u32,
}

pub fn run(args: &ModularArgs) -> Result<Artifact, CliError> {
    let mut spec = match &args.spec {
        Some(path) => {
            serde_json::from_str::<PacketSpec>(&read_file(path)?).map_err(|e| schema(path, e))?
        }
        None => PacketSpec::default(),
    };
    if let Some(v) = args.sigma {
        spec.sigma = v;
    }
    if let Some(v) = args.center {
        spec.center = v;
    }
    if let Some(v) = args.sep {
        spec.sep = v;
    }
    if let Some(v) = args.grid {
        spec.grid = v;
    }
    if let Some(v) = args.length {
        spec.length = v;
    }
    if args.nmax == 0 || args.nmax > MAX_MOMENT {
        return Err(CliError::BadFlag(format!(
            "--nmax must be in 1..={MAX_MOMENT}"
        )));
    }
    let psi0 = make_two_packet(&spec).map_err(invalid)?;
    let overlap = psi0.two_packet().map(|i| i.overlap).unwrap_or(0.0);

    let mut reports = Vec::new();
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for &alpha in args.alpha.iter() {
        let r = modular_exchange_report(&psi0, alpha, args.nmax).map_err(invalid)?;
        // with the base phase at zero this is `|<T_ℓ> − e^{iα}/2|`
        let expected = Complex64::from_polar(0.5, spec.alpha + alpha);
        let err = (r.translation_after - expected).norm();
        checks.push(Check::at_most(
            format!("translation[alpha={alpha}]"),
            err,
            TRANSLATION_TOL,
        ));
        checks.push(Check::at_most(
            format!("moments[alpha={alpha}]"),
            r.max_relative_moment_change(),
            MOMENT_TOL,
        ));
        rows.push(vec![
            alpha.to_string(),
            r.translation_after.re.to_string(),
            r.translation_after.im.to_string(),
            expected.re.to_string(),
            expected.im.to_string(),
            err.to_string(),
            r.max_relative_moment_change().to_string(),
        ]);
        reports.push(json!({
            "alpha": alpha,
            "expected_translation": expected,
            "translation_error": err,
            "report": to_value(&r),
        }));
    }
    let csv = csv_text(
        &[
            "alpha",
            "translation_re",
            "translation_im",
            "expected_re",
            "expected_im",
            "error",
            "max_moment_change",
        ],
        rows,
    );
    Ok(Artifact {
        resolved: json!({ "spec": to_value(&spec) }),
        result: json!({
            "overlap": overlap,
            "dx": psi0.dx(),
            "exchanges": reports,
        }),
        csv,
        checks,
    })
}
