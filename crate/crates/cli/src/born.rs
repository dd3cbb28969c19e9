use clap::Args;
use lawless_core::born::{
    derive_probabilities_with_cap, phase_invariance_check, DEFAULT_MAX_DENOMINATOR,
};
use lawless_core::{BornError, BornInstance};
use serde::Serialize;
use serde_json::json;

use crate::{csv_text, invalid, to_value, Artifact, Check, CliError, NumList};

#[derive(Debug, Clone, Args, Serialize)]
#[command(group = clap::ArgGroup::new("input").required(true))]
pub struct BornArgs {
    /// Target probabilities `p_i`, comma separated; `c_i = sqrt(p_i)`.
    #[arg(long, group = "input")]
    pub probs: Option<NumList>,
    /// Real positive coefficients `c_i`, comma separated.
    #[arg(long, group = "input")]
    pub coeffs: Option<NumList>,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    /// Largest branch count `M` tried.
    #[arg(long, default_value_t = DEFAULT_MAX_DENOMINATOR)]
    pub max_denominator: u64,
    /// Phases `φ_i` for the rephasing check, comma separated.
    #[arg(long)]
    pub phases: Option<NumList>,
}

pub fn run(args: &BornArgs) -> Result<Artifact, CliError> {
    let (inst, targets) = match (&args.probs, &args.coeffs) {
        (Some(p), _) => (
            BornInstance::from_probabilities(p).map_err(invalid)?,
            p.0.clone(),
        ),
        (None, Some(c)) => {
            let inst = BornInstance::new(c.0.clone()).map_err(invalid)?;
            let w = inst.weights();
            (inst, w)
        }
        (None, None) => {
            return Err(CliError::BadFlag(
                "one of --probs or --coeffs is required".into(),
            ))
        }
    };
    if !(args.eps > 0.0) {
        return Err(CliError::BadFlag(format!(
            "--eps must be positive, got {}",
            args.eps
        )));
    }
    let d =
        derive_probabilities_with_cap(&inst, args.eps, args.max_denominator).map_err(
            |e| match e {
                BornError::TooTight { .. } => CliError::Tolerance(e.to_string()),
                e => invalid(e),
            },
        )?;
    // measured against what was asked for, so `--probs` that are already
    // rational come back with a zero bound
    let bound = d
        .probabilities
        .iter()
        .zip(&targets)
        .map(|(p, t)| (p - t).abs())
        .fold(0.0, f64::max);

    let mut checks = vec![Check::at_most("bound", bound, args.eps)];
    let phase_ok = match &args.phases {
        Some(ph) => {
            let ok = phase_invariance_check(&inst, ph).map_err(invalid)?;
            checks.push(Check::at_least(
                "phase_invariance",
                f64::from(u8::from(ok)),
                1.0,
            ));
            Some(ok)
        }
        None => None,
    };

    let rows = (0..inst.dim()).map(|i| {
        vec![
            i.to_string(),
            inst.coefficients()[i].to_string(),
            targets[i].to_string(),
            d.partition.counts[i].to_string(),
            d.probabilities[i].to_string(),
            (d.probabilities[i] - targets[i]).abs().to_string(),
        ]
    });
    let csv = csv_text(
        &[
            "index",
            "coefficient",
            "target",
            "count",
            "probability",
            "error",
        ],
        rows,
    );

    Ok(Artifact {
        resolved: json!({
            "coefficients": inst.coefficients(),
            "targets": targets,
        }),
        result: json!({
            "probabilities": d.probabilities,
            "bound": bound,
            "weight_bound": d.bound,
            "partition": to_value(&d.partition),
            "branch_probability": d.branch_probability,
            "equidistance": to_value(&d.equidistance),
            "expansion_bound": d.expansion_bound,
            "phase_invariant": phase_ok,
        }),
        csv,
        checks,
    })
}
