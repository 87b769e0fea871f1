use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use mguard_core::config::RunConfig;
use mguard_core::evaluation::render_report;
use mguard_core::pipeline::{self, Layout, PlotOptions};
use mguard_core::{Error, Result};

#[derive(Parser)]
#[command(name = "mguard", version, about = "Smart-meter anomaly detection with adversarially trained LSTMs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Common {
    /// INI configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Global seed (overrides the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory shared by all stages.
    #[arg(long, global = true, default_value = "mguard-run")]
    out: PathBuf,
    /// Extra `section.key=value` overrides, applied last.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic labelled corpus.
    Synth,
    /// Ingest, normalize and window the data; split into train/validation/test.
    Preprocess,
    /// Train generator and discriminator.
    Train {
        /// Continue from the latest checkpoint in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Score validation windows and choose the threshold.
    Calibrate {
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Score test windows and apply the threshold.
    Detect {
        #[arg(long)]
        restarts: Option<usize>,
    },
    /// Compute metrics from the scored test windows.
    Evaluate,
    /// Write SVG plots of series, detections and training losses.
    Plot {
        /// Restrict to these building ids (repeatable).
        #[arg(long = "building")]
        buildings: Vec<String>,
        /// First sample of a zoomed view.
        #[arg(long, requires = "to")]
        from: Option<usize>,
        /// Last sample of a zoomed view.
        #[arg(long, requires = "from")]
        to: Option<usize>,
    },
    /// Every stage in order.
    All,
}

fn threads() -> Result<usize> {
    match std::env::var("MGUARD_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("MGUARD_THREADS={v:?} is not a non-negative integer"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn resolve(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    for s in &common.set {
        cfg.apply_override(s)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = resolve(&cli.common)?;
    let layout = Layout::new(&cli.common.out);
    match cli.cmd {
        Command::Synth => {
            let path = pipeline::run_synth(&cfg, &layout)?;
            println!("wrote {}", path.display());
        }
        Command::Preprocess => {
            let s = pipeline::run_preprocess(&cfg, &layout)?;
            println!(
                "buildings: {} train, {} test; windows: {} train, {} validation normal, {} validation anomalous, {} test",
                s.train_buildings,
                s.test_buildings,
                s.train_windows,
                s.validation_normal,
                s.validation_anomalous,
                s.test_windows
            );
        }
        Command::Train { resume } => {
            let s = pipeline::run_train(&cfg, &layout, resume)?;
            println!("trained {} epochs, {} iterations", s.epochs, s.iterations);
            print!("{}", s.stability.render());
        }
        Command::Calibrate { restarts } => {
            if let Some(r) = restarts {
                cfg.detect.inversion.restarts = r;
            }
            let t = pipeline::run_calibrate(&cfg, &layout, threads()?)?;
            println!(
                "tau={} validation_f1={:.4} candidates={}{}",
                t.tau,
                t.f1,
                t.candidates,
                if t.degenerate { " (degenerate)" } else { "" }
            );
        }
        Command::Detect { restarts } => {
            if let Some(r) = restarts {
                cfg.detect.inversion.restarts = r;
            }
            let rows = pipeline::run_detect(&cfg, &layout, threads()?)?;
            let flagged = rows.iter().filter(|r| r.anomalous == Some(true)).count();
            println!("scored {} windows, {flagged} flagged", rows.len());
        }
        Command::Evaluate => {
            let r = pipeline::run_evaluate(&cfg, &layout)?;
            print!("{}", render_report(&r).0);
        }
        Command::Plot { buildings, from, to } => {
            let range = match (from, to) {
                (Some(a), Some(b)) if a < b => Some((a, b)),
                (Some(a), Some(b)) => {
                    return Err(Error::Config(format!("--from {a} must be below --to {b}")))
                }
                _ => None,
            };
            let written = pipeline::run_plot(&cfg, &layout, &PlotOptions { buildings, range })?;
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::All => {
            let r = pipeline::run_all(&cfg, &layout, threads()?)?;
            print!("{}", render_report(&r).0);
        }
    }
    info!("outputs in {}", layout.root.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
