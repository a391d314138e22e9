//! `radstab` command-line driver.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use radstab_core::phantom::PhantomSpec;
use radstab_core::pipeline::{self, PipelineConfig, StageOutcome};

#[derive(Parser)]
#[command(name = "radstab", version, about = "Radiomics stability and survival-prediction harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline configuration (JSON). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset manifest; overrides `manifest`.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Overrides every seed: CV folds, classifiers, stochastic reducers, or the phantom spec.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a NIfTI-1 or raw volume to the internal `.vol` + `.json` format.
    Convert { input: PathBuf, output_stem: PathBuf },
    /// Generate a synthetic cohort and its manifest into `--out`.
    Phantom {
        /// Phantom spec (JSON); defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Resample, binarize, crop and normalize every case.
    Preprocess,
    /// Dice, IoU and Hausdorff of each model mask against the ground truth.
    Segmetrics,
    /// Extract the feature registry from the preprocessed store.
    Radiomics,
    /// Feature stability of each model mask against the ground truth.
    Stability,
    /// SL and SSL survival classification grid.
    Predict,
    /// Friedman tests on a `rater,model,question,score` CSV.
    Ratings { csv: PathBuf },
    /// Print the feature registry as JSON.
    Registry,
    /// Check that every report embeds the current config hash.
    Verify,
}

fn absolute(p: &Path) -> Result<PathBuf> {
    Ok(if p.is_absolute() { p.to_path_buf() } else { std::env::current_dir()?.join(p) })
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => pipeline::load_config(p).with_context(|| format!("loading {}", p.display()))?,
        None => PipelineConfig { base_dir: std::env::current_dir()?, ..PipelineConfig::default() },
    };
    if let Some(o) = &cli.out {
        cfg.output_dir = absolute(o)?;
    }
    if let Some(m) = &cli.manifest {
        cfg.manifest = absolute(m)?;
    }
    if let Some(s) = cli.seed {
        cfg.experiment.cv_seed = s;
        cfg.classifiers.iter_mut().for_each(|c| c.seed = s);
        for r in &mut cfg.reducers {
            if r.method.is_stochastic() {
                r.seed = Some(s);
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_stage(name: &str, outcome: StageOutcome) {
    match outcome {
        StageOutcome::Success => log::info!("{name}: success"),
        StageOutcome::Partial { failed, total } => eprintln!("warning: {name}: {failed} of {total} items failed; see logs/{name}_run.json"),
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Convert { input, output_stem } => pipeline::cmd_convert(input, output_stem)?,
        Command::Phantom { spec } => {
            let mut spec: PhantomSpec = match spec {
                Some(p) => serde_json::from_slice(&std::fs::read(p).with_context(|| format!("reading {}", p.display()))?)
                    .with_context(|| format!("parsing {}", p.display()))?,
                None => PhantomSpec::default(),
            };
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let Some(out) = &cli.out else { bail!("phantom needs --out") };
            let manifest = pipeline::cmd_phantom(&spec, out)?;
            println!("{}", manifest.display());
        }
        Command::Preprocess => report_stage("preprocess", pipeline::cmd_preprocess(&effective_config(cli)?)?),
        Command::Segmetrics => report_stage("segmetrics", pipeline::cmd_segmetrics(&effective_config(cli)?)?),
        Command::Radiomics => report_stage("radiomics", pipeline::cmd_radiomics(&effective_config(cli)?)?),
        Command::Stability => report_stage("stability", pipeline::cmd_stability(&effective_config(cli)?)?),
        Command::Predict => report_stage("predict", pipeline::cmd_predict(&effective_config(cli)?)?),
        Command::Ratings { csv } => {
            let report = pipeline::cmd_ratings(&effective_config(cli)?, csv)?;
            for q in &report.questions {
                println!("{}: chi2 = {:.3}, p = {:.3}", q.question, q.friedman.chi2, q.friedman.p);
            }
            println!("overall: chi2 = {:.3}, p = {:.3}", report.overall.chi2, report.overall.p);
        }
        Command::Registry => println!("{}", serde_json::to_string_pretty(&pipeline::cmd_registry())?),
        Command::Verify => {
            let report = pipeline::cmd_verify(&effective_config(cli)?)?;
            for (path, why) in &report.mismatches {
                eprintln!("mismatch: {}: {why}", path.display());
            }
            if !report.ok() {
                bail!("verification failed: {} of {} reports", report.mismatches.len(), report.checked.len());
            }
            println!("verified {} reports against config hash {}", report.checked.len(), report.config_hash);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = std::env::var("RADSTAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()).filter(|&n| n > 0) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("RADSTAB_THREADS ignored: {e}");
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
