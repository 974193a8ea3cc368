//! `klbound`: computable upper bound on the per-unit-time divergence of one
//! model's path law from another's.
//!
//! The drift part averages the squared drift gap over a uniform grid on the
//! core box (plus the small-jump compensator gap); the jump part is an
//! f-divergence of the intensity measures by quadrature. Identical inputs
//! give exactly zero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;
use serde::Serialize;

use jumpdiff::error::Error;
use jumpdiff::likelihood::kl_upper_bound;
use jumpdiff::quad::QuadratureConfig;
use jumpdiff::JumpDiffusionModel;

use crate::artifacts::{to_pretty_json, write_file};
use crate::{CliError, Global, StageExt};

#[derive(Args)]
pub struct KlboundArgs {
    /// Model whose path law is the numerator (the truth side)
    pub truth: PathBuf,

    /// Comparison model
    pub other: PathBuf,

    /// Grid points per axis for the drift L2 norm
    #[arg(long, default_value_t = 33)]
    pub points: usize,

    /// Quadrature nodes per axis for the jump divergence
    #[arg(long, default_value_t = 48)]
    pub quad_order: usize,
}

#[derive(Serialize)]
struct KlOut {
    truth: String,
    other: String,
    drift_term: f64,
    jump_term: f64,
    total: f64,
    /// Quadrature nodes whose density ratio hit the clip bounds.
    clipped: usize,
}

fn load_model(path: &PathBuf) -> Result<JumpDiffusionModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(Error::from).stage("read model file")?;
    JumpDiffusionModel::from_json(&text).stage("parse model file")
}

/// Uniform inclusive grid on the core box, `per_axis` points per axis.
fn box_grid(d: usize, r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..per_axis)
        .map(|i| -r + 2.0 * r * i as f64 / (per_axis - 1) as f64)
        .collect();
    let mut points = Vec::with_capacity(per_axis.pow(d as u32));
    let mut idx = vec![0usize; d];
    'outer: loop {
        points.push(idx.iter().map(|&i| axis[i]).collect());
        let mut a = 0;
        loop {
            if a == d {
                break 'outer;
            }
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
    points
}

pub fn run(args: &KlboundArgs, global: &Global) -> Result<ExitCode, CliError> {
    if args.points < 2 {
        return Err(Error::InvalidInput("--points must be at least 2".into()).into());
    }
    let truth = load_model(&args.truth)?;
    let other = load_model(&args.other)?;
    let domain = *truth.domain();
    let pi_points = box_grid(domain.d, domain.r, args.points);

    let terms = kl_upper_bound(
        &truth,
        &other,
        &pi_points,
        QuadratureConfig { order: args.quad_order },
    )
    .stage("divergence bound")?;

    let out = KlOut {
        truth: args.truth.display().to_string(),
        other: args.other.display().to_string(),
        drift_term: terms.drift_term,
        jump_term: terms.jump_term,
        total: terms.total,
        clipped: terms.clipped,
    };
    let json = to_pretty_json(&out).stage("write report")?;
    print!("{json}");
    let path = global.out_dir(None).join("klbound.json");
    write_file(&path, json.as_bytes()).stage("write report")?;
    eprintln!("report written to {}", path.display());
    Ok(ExitCode::SUCCESS)
}
