//! `sample-prior`: draw models from the configured prior and write each as a
//! standalone JSON file.
//!
//! Draw `i` uses seed `base + i` (base from `--seed`, default 0), so any
//! subset can be reproduced independently. Draws run in parallel; outputs
//! are independent of the thread count.

use std::process::ExitCode;

use clap::Args;
use rayon::prelude::*;

use jumpdiff::priors::sample_model_prior;

use crate::artifacts::{sha256_hex, RunDir};
use crate::config::require;
use crate::{CliError, Global, StageExt};

#[derive(Args)]
pub struct SamplePriorArgs {
    /// Number of models to draw
    #[arg(long)]
    pub count: usize,
}

pub fn run(args: &SamplePriorArgs, global: &Global) -> Result<ExitCode, CliError> {
    let loaded = global.load_config("sample-prior")?;
    let doc = &loaded.doc;
    let domain = require(&doc.domain, "domain")?.to_domain().stage("build prior")?;
    let prior = require(&doc.prior, "prior")?.to_prior(domain).stage("build prior")?;
    let base = global.seed.unwrap_or(0);

    let drawn: Result<Vec<String>, jumpdiff::Error> = (0..args.count)
        .into_par_iter()
        .map(|i| {
            let model = sample_model_prior(&prior, base.wrapping_add(i as u64))?;
            let mut json = model.to_json_pretty()?;
            json.push('\n');
            Ok(json)
        })
        .collect();
    let drawn = drawn.stage("sample prior")?;

    let default_out = doc.experiment.as_ref().and_then(|e| e.output_dir.clone());
    let mut run_dir =
        RunDir::new(global.out_dir(default_out.as_deref())).stage("create output dir")?;
    for (i, json) in drawn.iter().enumerate() {
        run_dir
            .write(&format!("model_{i:05}.json"), json.as_bytes())
            .stage("write models")?;
    }
    let root = run_dir.root().to_path_buf();
    run_dir
        .finish("sample-prior", sha256_hex(&loaded.raw), vec![base])
        .stage("write manifest")?;

    println!("wrote {} model files to {}", args.count, root.display());
    Ok(ExitCode::SUCCESS)
}
