use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use falsikit::config::parse_config;
use falsikit::pipeline::{emit_report, run_pipeline};
use falsikit::scenario::IsolatedScenario;
use falsikit::study::Stage;

#[derive(Parser)]
#[command(name = "falsikit", version, about = "Likelihood-bound model falsification and ensemble prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Simulate,
    Falsify,
    Predict,
    All,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::Simulate => Stage::Simulate,
            StageArg::Falsify => Stage::Falsify,
            StageArg::Predict | StageArg::All => Stage::Predict,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for the ensemble simulations (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Replaces `master_seed` from the config.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Last stage to run; earlier stages are rerun deterministically.
        #[arg(long, value_enum, default_value = "all")]
        stage: StageArg,
    },
    /// Write the synthetic base-isolated building study (records,
    /// noisy measurements, reference response and run.toml) to a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            threads,
            seed_override,
            stage,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .context("configuring the worker pool")?;
            }
            let mut cfg = parse_config(&config)?;
            if let Some(seed) = seed_override {
                cfg.master_seed = seed;
            }
            let manifest = run_pipeline(&cfg, stage.into())
                .with_context(|| format!("run failed; see {}", cfg.output_dir.join("manifest.json").display()))?;
            print!("{}", emit_report(&manifest));
            println!("\nartifacts in {}", cfg.output_dir.display());
        }
        Command::Synth { out, samples, seed } => {
            let mut scenario = IsolatedScenario {
                samples_per_class: samples,
                ..IsolatedScenario::default()
            };
            if let Some(s) = seed {
                scenario.master_seed = s;
            }
            let path = scenario.write_files(&out)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
