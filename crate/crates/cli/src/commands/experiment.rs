//! `experiment`: the full posterior-contraction pipeline.
//!
//! For each repetition seed: generate one trajectory at the largest sample
//! size (smaller sizes are strict prefixes of it — same path, just observed
//! for less time), run one posterior chain per sample size, and score the
//! thinned posterior draws by their weak distance from the truth. Emits every
//! intermediate artifact, a `curve.csv` of median distances per (n, seed), an
//! optional posterior-mass table over the configured neighborhood radii, and
//! a manifest hashing all of it.
//!
//! Repetitions run in parallel; every artifact is a deterministic function
//! of the configuration, so reruns are byte-identical regardless of the
//! thread count. If a stage fails, the error names it and artifacts from
//! completed stages stay on disk; the manifest is only written on success.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;

use jumpdiff::inference::{
    contraction_metric, run_chain, ContractionConfig, ContractionCurve, CurvePoint, SamplerConfig,
};
use jumpdiff::priors::PriorConfig;
use jumpdiff::sim::{sample_observations, Init, ObservationSeries};
use jumpdiff::JumpDiffusionModel;

use crate::artifacts::{
    observations_csv, samples_csv, sha256_hex, to_pretty_json, write_file, ChainSummaryOut,
    FileEntry, MetricOut, RunDir,
};
use crate::config::{require, ExperimentSection};
use crate::{CliError, Global, StageExt};

#[derive(Args)]
pub struct ExperimentArgs {}

struct RepCtx<'a> {
    truth: &'a JumpDiffusionModel,
    prior: &'a PriorConfig,
    delta: f64,
    dt: f64,
    init: &'a Init,
    sampler: &'a SamplerConfig,
    metric: &'a ContractionConfig,
    exp: &'a ExperimentSection,
    root: &'a Path,
    t0: Instant,
}

struct RepOutput {
    files: Vec<FileEntry>,
    points: Vec<CurvePoint>,
    /// (n, seed, epsilon, fraction of scored draws farther than epsilon).
    mass_rows: Vec<(usize, u64, f64, f64)>,
}

fn write_artifact(
    root: &Path,
    name: String,
    bytes: &[u8],
    files: &mut Vec<FileEntry>,
    stage: &str,
) -> Result<(), CliError> {
    write_file(&root.join(&name), bytes).stage(stage)?;
    files.push(FileEntry { path: name, sha256: sha256_hex(bytes) });
    Ok(())
}

fn run_rep(ctx: &RepCtx, rep: u64) -> Result<RepOutput, CliError> {
    let mut out = RepOutput { files: Vec::new(), points: Vec::new(), mass_rows: Vec::new() };
    let n_max = *ctx.exp.n_schedule.last().expect("validated nonempty");

    let full = sample_observations(
        ctx.truth,
        ctx.init,
        n_max,
        ctx.delta,
        ctx.dt,
        ctx.exp.data_seed(rep),
    )
    .stage(&format!("data (rep {rep})"))?;
    write_artifact(
        ctx.root,
        format!("data_s{rep}.csv"),
        observations_csv(&full).as_bytes(),
        &mut out.files,
        &format!("data (rep {rep})"),
    )?;

    for (ni, &n) in ctx.exp.n_schedule.iter().enumerate() {
        let stage_chain = format!("chain (rep {rep}, n {n})");
        let series =
            ObservationSeries { delta: ctx.delta, states: full.states[..=n].to_vec() };
        let chain = run_chain(ctx.prior, ctx.sampler, Some(&series), ctx.exp.chain_seed(rep, ni))
            .stage(&stage_chain)?;
        write_artifact(
            ctx.root,
            format!("samples_s{rep}_n{n}.csv"),
            samples_csv(&chain, ctx.prior).as_bytes(),
            &mut out.files,
            &stage_chain,
        )?;
        write_artifact(
            ctx.root,
            format!("chain_s{rep}_n{n}.json"),
            to_pretty_json(&ChainSummaryOut::new(&chain)).stage(&stage_chain)?.as_bytes(),
            &mut out.files,
            &stage_chain,
        )?;

        let stage_metric = format!("metric (rep {rep}, n {n})");
        let summary =
            contraction_metric(&chain, ctx.prior, ctx.truth, ctx.metric, ctx.exp.metric_seed)
                .stage(&stage_metric)?;
        write_artifact(
            ctx.root,
            format!("metric_s{rep}_n{n}.json"),
            to_pretty_json(&MetricOut::new(n, rep, &summary)).stage(&stage_metric)?.as_bytes(),
            &mut out.files,
            &stage_metric,
        )?;

        eprintln!(
            "[experiment] rep {rep} n {n}: median {:.4} (acc drift {:.2} / mix {:.2} / aux \
             {:.2}, {:.0} s)",
            summary.median,
            chain.acceptance.drift,
            chain.acceptance.mixture,
            chain.acceptance.aux,
            ctx.t0.elapsed().as_secs_f64()
        );

        out.points.push(CurvePoint {
            n,
            seed: rep,
            median: summary.median,
            median_se: summary.median_se,
        });
        let total = summary.distances.len() as f64;
        for &eps in &ctx.exp.epsilons {
            let exceed =
                summary.distances.iter().filter(|d| **d > eps).count() as f64 / total;
            out.mass_rows.push((n, rep, eps, exceed));
        }
    }
    Ok(out)
}

pub fn run(_args: &ExperimentArgs, global: &Global) -> Result<ExitCode, CliError> {
    let loaded = global.load_config("experiment")?;
    let doc = &loaded.doc;
    let domain = require(&doc.domain, "domain")?.to_domain().stage("configure")?;
    let truth = require(&doc.truth, "truth")?.to_model(domain).stage("configure")?;
    let prior = require(&doc.prior, "prior")?.to_prior(domain).stage("configure")?;
    let data = require(&doc.data, "data")?;
    let init = data.to_init().stage("configure")?;
    let sampler = require(&doc.sampler, "sampler")?.to_sampler().stage("configure")?;
    let metric = require(&doc.metric, "metric")?.to_metric();
    let exp = require(&doc.experiment, "experiment")?;
    exp.validate().stage("configure")?;

    let out_dir = global.out_dir(exp.output_dir.as_deref());
    let mut run_dir = RunDir::new(out_dir.clone()).stage("create output dir")?;
    run_dir.write("config.toml", &loaded.raw).stage("archive config")?;

    let t0 = Instant::now();
    let root = run_dir.root().to_path_buf();
    let ctx = RepCtx {
        truth: &truth,
        prior: &prior,
        delta: data.delta,
        dt: data.dt,
        init: &init,
        sampler: &sampler,
        metric: &metric,
        exp,
        root: &root,
        t0,
    };

    let reps: Vec<Result<RepOutput, CliError>> =
        exp.seeds.par_iter().map(|&rep| run_rep(&ctx, rep)).collect();

    let mut points = Vec::new();
    let mut mass_rows = Vec::new();
    let mut first_err = None;
    for rep in reps {
        match rep {
            Ok(out) => {
                run_dir.absorb(out.files);
                points.extend(out.points);
                mass_rows.extend(out.mass_rows);
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    if let Some(e) = first_err {
        // Artifacts from completed stages stay in place for inspection.
        return Err(e);
    }

    points.sort_by(|a, b| (a.n, a.seed).cmp(&(b.n, b.seed)));
    let curve = ContractionCurve { points };
    run_dir.write("curve.csv", curve.to_csv().as_bytes()).stage("write curve")?;

    if !exp.epsilons.is_empty() {
        mass_rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut csv = String::from("n,seed,epsilon,exceedance\n");
        for (n, seed, eps, frac) in &mass_rows {
            csv.push_str(&format!("{n},{seed},{eps},{frac}\n"));
        }
        run_dir.write("mass.csv", csv.as_bytes()).stage("write posterior mass table")?;
    }

    let manifest_path = run_dir
        .finish("experiment", sha256_hex(&loaded.raw), exp.seeds.clone())
        .stage("write manifest")?;

    println!("median posterior distance by repetition:");
    for (seed, rows) in curve.medians_by_seed() {
        let cells: Vec<String> =
            rows.iter().map(|(n, m)| format!("n={n}: {m:.4}")).collect();
        let decreasing = rows.windows(2).all(|w| w[1].1 < w[0].1);
        println!(
            "  seed {seed}: {} ({})",
            cells.join(", "),
            if decreasing { "strictly decreasing" } else { "not monotone" }
        );
    }
    println!(
        "outputs in {} (manifest {}), {:.0} s",
        out_dir.display(),
        manifest_path.display(),
        t0.elapsed().as_secs_f64()
    );
    Ok(ExitCode::SUCCESS)
}
