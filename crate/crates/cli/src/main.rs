use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use marvel_core::data::load_dataset;
use marvel_core::noise::corrupt;
use marvel_core::runner::{emit, run_experiment, tune_wait};
use marvel_core::{ExperimentConfig, Generator, NoiseSpec};

#[derive(Parser)]
#[command(name = "marvel", version, about = "Margin-history instance filtering under label noise")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write epochs.csv, ledger.csv, retained.csv and config.echo.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick the wait period by k-fold cross validation on the noisy labels.
    TuneWait {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "3,4,5,6,7")]
        grid: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a synthetic dataset with clean labels.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        /// Dimension (gaussians).
        #[arg(long, default_value_t = 2)]
        d: usize,
        /// Distance between class means (gaussians).
        #[arg(long, default_value_t = 3.0)]
        delta: f64,
        /// Radial jitter of the ring (ring).
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Inject label noise into a dataset file.
    Corrupt {
        #[arg(long = "in")]
        input: PathBuf,
        /// e.g. `binary:0.4,0.1`, `symmetric:0.2`, `circular:0.3`, `pair:0.4:9>1,2>0`
        #[arg(long)]
        noise: NoiseSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gaussians,
    Ring,
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)
        .with_context(|| format!("loading config {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = load_config(&config, seed)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            let run = run_experiment(&cfg)?;
            emit(&run, &cfg.out_dir)?;
            let last = run.last();
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
            println!(
                "epochs={} train_acc={:.4} test_acc={} mem_ratio={} retained={}/{}",
                last.epoch,
                last.train_acc,
                fmt(last.test_acc),
                fmt(last.mem_ratio),
                run.retained.len(),
                run.ledger.len(),
            );
            println!("wrote {}", cfg.out_dir.display());
        }
        Command::TuneWait {
            config,
            grid,
            folds,
            seed,
        } => {
            let cfg = load_config(&config, seed)?;
            let sel = tune_wait(&cfg, &grid, folds)?;
            println!("wait,mean_cv_acc,fold_scores");
            for row in &sel.table {
                let scores: Vec<String> = row
                    .folds
                    .iter()
                    .map(|f| match f {
                        Ok(a) => format!("{a:.4}"),
                        Err(e) => format!("error({e})"),
                    })
                    .collect();
                let mean = row.mean.map_or(String::new(), |m| format!("{m:.4}"));
                println!("{},{},{}", row.wait, mean, scores.join(" "));
            }
            println!("best wait = {}", sel.best);
        }
        Command::Gen {
            kind,
            out,
            n,
            d,
            delta,
            sigma,
            seed,
        } => {
            let g = match kind {
                Kind::Gaussians => Generator::Gaussians { n, d, delta },
                Kind::Ring => Generator::Ring { n, sigma },
            };
            g.generate(seed, 0)?.write(&out)?;
            println!("wrote {n} instances to {}", out.display());
        }
        Command::Corrupt {
            input,
            noise,
            seed,
            out,
        } => {
            let mut data = load_dataset(&input)?;
            if data.truth.iter().zip(&data.labels).any(|(t, y)| t.is_some_and(|t| t != *y)) {
                bail!("{} already carries noisy labels", input.display());
            }
            let c = corrupt(&data.labels, data.classes, &noise, seed)?;
            for (t, &y) in data.truth.iter_mut().zip(&data.labels) {
                t.get_or_insert(y);
            }
            data.labels = c.observed;
            data.write(&out)?;
            let flipped = c.noisy.iter().filter(|&&f| f).count();
            println!("flipped {flipped}/{} labels, wrote {}", data.len(), out.display());
        }
    }
    Ok(())
}
