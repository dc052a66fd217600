//! Batch command-line front end: synth, train, eval, ablate, plots.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use avfbel::dataset::{generate_synthetic, save_dir};
use avfbel::pipeline::{self, ablation_text, RunConfig, Variant};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "avfbel", version, about = "Audio-visual emotion learning pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "runs/default")]
    out: PathBuf,
    /// Dataset directory with samples.csv and pairs.csv (default: synthetic).
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into --out.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Train and evaluate one variant.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "AVF-BEL")]
        variant: String,
    },
    /// Re-evaluate a trained variant from its checkpoint in --out.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "AVF-BEL")]
        variant: String,
    },
    /// Train and evaluate every configured variant and write the comparison table.
    Ablate {
        #[command(flatten)]
        common: Common,
    },
    /// Render SVGs for the plot CSVs in --out.
    Plots {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(d) = &c.data {
        cfg.data = Some(d.display().to_string());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn summary(out: &Path, written: usize) {
    println!("wrote {} plot files under {}", written, out.display());
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { common } => {
            let cfg = load_config(&common)?;
            let ds = generate_synthetic(&cfg.synthetic_config())?;
            save_dir(&ds, &common.out)?;
            println!("wrote {} pairs to {}", ds.len(), common.out.display());
        }
        Command::Train { common, variant } => {
            let cfg = load_config(&common)?;
            let v: Variant = variant.parse()?;
            let out = pipeline::run_variant(v, &cfg)?;
            let plots = out.write(&common.out)?;
            print!("{}", ablation_text(&out.table()));
            summary(&common.out, plots.len());
        }
        Command::Eval { common, variant } => {
            let cfg = load_config(&common)?;
            let v: Variant = variant.parse()?;
            let report = pipeline::evaluate_saved(v, &cfg, &common.out)?;
            let path = common.out.join(v.tag()).join("eval_report.json");
            std::fs::write(&path, report.to_json()?).with_context(|| format!("writing {}", path.display()))?;
            println!(
                "{}: similarity {:.2}%  precision {:.4}  recall {:.4}  F1 {:.4}",
                report.variant, report.similarity, report.precision, report.recall, report.f1
            );
        }
        Command::Ablate { common } => {
            let cfg = load_config(&common)?;
            let out = pipeline::run_all(&cfg)?;
            let plots = out.write(&common.out)?;
            print!("{}", ablation_text(&out.table()));
            summary(&common.out, plots.len());
        }
        Command::Plots { common } => {
            let written = pipeline::render_plots(&common.out)?;
            summary(&common.out, written.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
