//! `simulate`: observe one trajectory of a model at fixed spacing and write
//! the states as CSV.
//!
//! The model comes from `--model FILE` or from the config's `[truth]`
//! section; spacing, integration step and the initial condition come from
//! flags with the `[data]` section as fallback. Observation segments are
//! seeded independently per index, so rerunning with a larger `--n` and the
//! same seed extends the shorter series: the first rows coincide exactly.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Args;

use jumpdiff::error::Error;
use jumpdiff::sim::{sample_observations, Init};
use jumpdiff::JumpDiffusionModel;

use crate::artifacts::{observations_csv, sha256_hex, RunDir};
use crate::config::require;
use crate::{CliError, Global, StageExt};

#[derive(Args)]
pub struct SimulateArgs {
    /// Model JSON file [default: the config's [truth] section]
    #[arg(long)]
    pub model: Option<PathBuf>,

    /// Number of observed transitions (the CSV holds n + 1 states)
    #[arg(long)]
    pub n: usize,

    /// Observation spacing [default: data.delta from the config]
    #[arg(long)]
    pub delta: Option<f64>,

    /// Integration step [default: data.dt from the config]
    #[arg(long)]
    pub dt: Option<f64>,

    /// Fixed initial state, comma-separated [default: data.x0 / data.burn_in]
    #[arg(long, value_delimiter = ',', num_args = 1.., allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,

    /// Warm-start horizon before the first observation; exclusive with --x0
    #[arg(long)]
    pub burn_in: Option<f64>,
}

pub fn run(args: &SimulateArgs, global: &Global) -> Result<ExitCode, CliError> {
    let loaded = match &global.config {
        Some(path) => Some(crate::config::load(path).stage("load config")?),
        None => None,
    };
    let doc = loaded.as_ref().map(|l| &l.doc);

    let (model, input_bytes) = match &args.model {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(Error::from).stage("read model file")?;
            let model = JumpDiffusionModel::from_json(&text).stage("parse model file")?;
            (model, text.into_bytes())
        }
        None => {
            let doc = doc.ok_or_else(|| {
                CliError::from(Error::InvalidInput(
                    "'simulate' needs --model FILE or --config with a [truth] section".into(),
                ))
            })?;
            let domain = require(&doc.domain, "domain")?.to_domain().stage("build model")?;
            let model =
                require(&doc.truth, "truth")?.to_model(domain).stage("build model")?;
            (model, loaded.as_ref().map(|l| l.raw.clone()).unwrap_or_default())
        }
    };

    let data = doc.and_then(|d| d.data.as_ref());
    let delta = args
        .delta
        .or(data.map(|d| d.delta))
        .ok_or_else(|| CliError::from(Error::InvalidInput("give --delta or data.delta".into())))?;
    let dt = args
        .dt
        .or(data.map(|d| d.dt))
        .ok_or_else(|| CliError::from(Error::InvalidInput("give --dt or data.dt".into())))?;

    let init = match (&args.x0, args.burn_in) {
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput("give either --x0 or --burn-in, not both".into()).into())
        }
        (Some(x0), None) => Init::Point(x0.clone()),
        (None, Some(b)) => Init::Stationary { burn_in: b },
        (None, None) => match data {
            Some(d) => d.to_init().stage("resolve initial state")?,
            None => {
                return Err(Error::InvalidInput(
                    "give --x0 or --burn-in, or a [data] section with one of them".into(),
                )
                .into())
            }
        },
    };

    let seed = global.seed.unwrap_or(0);
    let series =
        sample_observations(&model, &init, args.n, delta, dt, seed).stage("simulate")?;

    let default_out = doc
        .and_then(|d| d.experiment.as_ref())
        .and_then(|e| e.output_dir.clone());
    let mut run_dir = RunDir::new(global.out_dir(default_out.as_deref())).stage("create output dir")?;
    let csv = observations_csv(&series);
    let path = run_dir.write("observations.csv", csv.as_bytes()).stage("write observations")?;
    run_dir
        .finish("simulate", sha256_hex(&input_bytes), vec![seed])
        .stage("write manifest")?;

    println!(
        "wrote {} states (n = {}, delta = {delta}) to {} [model {}]",
        series.states.len(),
        args.n,
        path.display(),
        &model.hash()[..16]
    );
    Ok(ExitCode::SUCCESS)
}
