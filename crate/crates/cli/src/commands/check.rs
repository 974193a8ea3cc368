//! `check`: validate a model file against the drift/jump regularity and
//! confinement conditions and the unit-noise reducibility identity.
//!
//! The input is either a standard model JSON file (as written by
//! `sample-prior` or `JumpDiffusionModel::to_json`) or a synthetic-field
//! document for exercising the checker on hand-built drifts:
//!
//! ```json
//! {"synthetic_drift": {"form": "linear", "scale": 1.0, "d": 1, "r": 2.0}}
//! ```
//!
//! Forms: `zero` (no drift — flagged, since nothing pulls the state back),
//! `linear` (`scale * x`, outward for positive scale — flagged with a
//! witness), `cubic` (`-scale * x^3`, a confining pull).
//!
//! The combined report is printed to stdout and written next to the other
//! outputs as `<stem>.check.json`. Exit code 0 only if no condition is
//! violated and the reducibility identity holds.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::{Deserialize, Serialize};

use jumpdiff::error::Error;
use jumpdiff::model::{
    check_conditions, check_conditions_field, check_lamperti, ConditionReport, FnDrift,
    FnMatrixField, LampertiReport, MatrixField,
};
use jumpdiff::{DomainSpec, JumpDiffusionModel, LevyAtom, LevyMixture};

use crate::artifacts::{to_pretty_json, write_file};
use crate::{CliError, Global, StageExt};

#[derive(Args)]
pub struct CheckArgs {
    /// Model JSON file, or a synthetic-field document
    pub model: PathBuf,

    /// Grid resolution per axis for sup-norm estimates
    #[arg(long, default_value_t = 41)]
    pub grid: usize,

    /// Random probe pairs for Lipschitz and confinement estimates
    #[arg(long, default_value_t = 10_000)]
    pub pairs: usize,

    /// Grid resolution per axis for the reducibility identity
    #[arg(long, default_value_t = 9)]
    pub lamperti_grid: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SyntheticDoc {
    synthetic_drift: SyntheticDrift,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SyntheticDrift {
    form: String,
    scale: f64,
    d: usize,
    r: f64,
}

#[derive(Clone, Copy)]
enum Form {
    Zero,
    Linear,
    Cubic,
}

#[derive(Serialize)]
struct CheckOut<'a> {
    input: String,
    passed: bool,
    conditions: &'a ConditionReport,
    lamperti: &'a LampertiReport,
}

/// The simulator's diffusion is the identity everywhere; the reducibility
/// check confirms that assumption is coherent for the model's dimension.
fn identity_field(d: usize) -> impl MatrixField {
    FnMatrixField {
        d,
        f: move |_: &[f64]| {
            let mut m = vec![0.0; d * d];
            for i in 0..d {
                m[i * d + i] = 1.0;
            }
            m
        },
        partials: Some(move |_: &[f64], _: usize| vec![0.0; d * d]),
    }
}

pub fn run(args: &CheckArgs, global: &Global) -> Result<ExitCode, CliError> {
    let seed = global.seed.unwrap_or(0);
    let text = std::fs::read_to_string(&args.model)
        .map_err(Error::from)
        .stage("read model file")?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(Error::from).stage("parse model file")?;

    let (conditions, domain) = if value.get("synthetic_drift").is_some() {
        let doc: SyntheticDoc =
            serde_json::from_str(&text).map_err(Error::from).stage("parse model file")?;
        let syn = doc.synthetic_drift;
        let form = match syn.form.as_str() {
            "zero" => Form::Zero,
            "linear" => Form::Linear,
            "cubic" => Form::Cubic,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown synthetic drift form '{other}' (expected zero, linear or cubic)"
                ))
                .into())
            }
        };
        let domain = DomainSpec::new(syn.d, syn.r).stage("parse model file")?;
        let scale = syn.scale;
        let field = FnDrift::new(syn.d, move |x: &[f64], out: &mut [f64]| {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = match form {
                    Form::Zero => 0.0,
                    Form::Linear => scale * xi,
                    Form::Cubic => -scale * xi.powi(3),
                };
            }
        });
        let levy = LevyMixture::new(
            domain,
            0.0,
            vec![LevyAtom::new(&domain, 1.0, vec![0.0; syn.d], 1.0).stage("build jump measure")?],
            0.01,
        )
        .stage("build jump measure")?;
        let report =
            check_conditions_field(&field, &levy, &domain, args.grid, args.pairs, seed)
                .stage("condition check")?;
        (report, domain)
    } else {
        let model = JumpDiffusionModel::from_json(&text).stage("parse model file")?;
        let domain = *model.domain();
        let report =
            check_conditions(&model, args.grid, args.pairs, seed).stage("condition check")?;
        (report, domain)
    };

    let sigma = identity_field(domain.d);
    let lamperti =
        check_lamperti(&sigma, &domain, args.lamperti_grid).stage("reducibility check")?;

    let passed = conditions.no_violations() && lamperti.satisfied;
    let out = CheckOut {
        input: args.model.display().to_string(),
        passed,
        conditions: &conditions,
        lamperti: &lamperti,
    };
    let json = to_pretty_json(&out).stage("write report")?;
    print!("{json}");

    let stem = args.model.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let path = global.out_dir(None).join(format!("{stem}.check.json"));
    write_file(&path, json.as_bytes()).stage("write report")?;
    eprintln!("report written to {}", path.display());

    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
