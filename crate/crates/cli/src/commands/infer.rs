//! `infer`: one posterior chain on one simulated dataset.
//!
//! Data is generated from the config's `[truth]` at the requested size, then
//! the pseudo-marginal sampler runs with the `[prior]` and `[sampler]`
//! settings. Outputs: the dataset, the retained samples as CSV, a chain
//! diagnostics JSON, and a manifest.

use std::process::ExitCode;

use clap::Args;

use jumpdiff::error::Error;
use jumpdiff::inference::run_chain;
use jumpdiff::sim::sample_observations;

use crate::artifacts::{observations_csv, samples_csv, sha256_hex, ChainSummaryOut, RunDir};
use crate::config::require;
use crate::{CliError, Global, StageExt};

#[derive(Args)]
pub struct InferArgs {
    /// Observed transitions [default: last entry of experiment.n_schedule]
    #[arg(long)]
    pub n: Option<usize>,

    /// Data-generation seed [default: experiment.data_seed_base, then 0]
    #[arg(long)]
    pub data_seed: Option<u64>,
}

pub fn run(args: &InferArgs, global: &Global) -> Result<ExitCode, CliError> {
    let loaded = global.load_config("infer")?;
    let doc = &loaded.doc;
    let domain = require(&doc.domain, "domain")?.to_domain().stage("build model")?;
    let truth = require(&doc.truth, "truth")?.to_model(domain).stage("build model")?;
    let prior = require(&doc.prior, "prior")?.to_prior(domain).stage("build prior")?;
    let data = require(&doc.data, "data")?;
    let sampler = require(&doc.sampler, "sampler")?.to_sampler().stage("build sampler")?;

    let exp = doc.experiment.as_ref();
    let n = args
        .n
        .or_else(|| exp.and_then(|e| e.n_schedule.last().copied()))
        .ok_or_else(|| {
            CliError::from(Error::InvalidInput(
                "give --n or an [experiment] section with n_schedule".into(),
            ))
        })?;
    let data_seed = args
        .data_seed
        .or_else(|| exp.map(|e| e.data_seed_base))
        .unwrap_or(0);
    let chain_seed = global
        .seed
        .or_else(|| exp.map(|e| e.chain_seed_base))
        .unwrap_or(1);

    let init = data.to_init().stage("resolve initial state")?;
    let series = sample_observations(&truth, &init, n, data.delta, data.dt, data_seed)
        .stage("simulate data")?;

    eprintln!("running chain: n = {n}, data seed {data_seed}, chain seed {chain_seed}");
    let chain = run_chain(&prior, &sampler, Some(&series), chain_seed).stage("run chain")?;

    let default_out = exp.and_then(|e| e.output_dir.clone());
    let mut run_dir =
        RunDir::new(global.out_dir(default_out.as_deref())).stage("create output dir")?;
    run_dir
        .write("data.csv", observations_csv(&series).as_bytes())
        .stage("write data")?;
    run_dir
        .write("samples.csv", samples_csv(&chain, &prior).as_bytes())
        .stage("write samples")?;
    run_dir
        .write(
            "chain.json",
            crate::artifacts::to_pretty_json(&ChainSummaryOut::new(&chain))
                .stage("write chain summary")?
                .as_bytes(),
        )
        .stage("write chain summary")?;
    let root = run_dir.root().to_path_buf();
    run_dir
        .finish("infer", sha256_hex(&loaded.raw), vec![data_seed, chain_seed])
        .stage("write manifest")?;

    println!(
        "chain done: {} retained samples, acceptance drift {:.3} / mixture {:.3} / aux {:.3}, \
         outputs in {}",
        chain.samples.len(),
        chain.acceptance.drift,
        chain.acceptance.mixture,
        chain.acceptance.aux,
        root.display()
    );
    Ok(ExitCode::SUCCESS)
}
