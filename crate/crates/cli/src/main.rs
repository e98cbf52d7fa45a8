use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use clothforge::config::PipelineConfig;
use clothforge::io::write_atomic;
use clothforge::metrics::{evaluate, read_predictions, MetricsConfig};
use clothforge::par::Exec;
use clothforge::pipeline::{bench, generate, Stage};
use clothforge::{annotate::read_coco, Error};

#[derive(Parser)]
#[command(name = "clothforge", version, about = "Synthetic almost-flattened cloth images with keypoint annotations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate meshes, deformed meshes and annotated images.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value_t = StageArg::All)]
        stage: StageArg,
        /// Worker threads; 0 uses every core. Overrides the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Score keypoint predictions against COCO ground truth.
    Evaluate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time each stage per sample, single-threaded and in parallel.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        /// Threads of the parallel run.
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum StageArg {
    Meshes,
    Deform,
    Render,
    All,
}

impl From<StageArg> for Stage {
    fn from(s: StageArg) -> Stage {
        match s {
            StageArg::Meshes => Stage::Meshes,
            StageArg::Deform => Stage::Deform,
            StageArg::Render => Stage::Render,
            StageArg::All => Stage::All,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } | Error::Parse { .. } => 2,
        Error::StageOrder(_) => 3,
        Error::Io { .. } => 4,
        _ => 1,
    }
}

fn run_generate(config: &Path, stage: Stage, workers: Option<usize>) -> clothforge::Result<()> {
    let cfg = PipelineConfig::load(config)?;
    let exec = Exec::with_workers(workers.unwrap_or(cfg.workers));
    let summary = generate(&cfg, stage, &exec)?;
    eprintln!(
        "{}: {} samples in {}",
        summary.stage,
        summary.samples,
        cfg.output_dir.display()
    );
    Ok(())
}

fn run_evaluate(gt: &Path, pred: &Path, out: &Path) -> clothforge::Result<()> {
    let gt = read_coco(gt)?;
    let pred = read_predictions(pred)?;
    let report = evaluate(&gt, &pred, &MetricsConfig::default().thresholds)?;
    write_atomic(out, report.to_json().as_bytes())?;
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    eprintln!("mAP {}  AKD {} px", fmt(report.map), fmt(report.akd));
    Ok(())
}

fn run_bench(config: &Path, samples: usize, workers: usize) -> clothforge::Result<()> {
    let cfg = PipelineConfig::load(config)?;
    let report = bench(&cfg, samples, workers)?;
    let json = report.to_json();
    write_atomic(&cfg.output_dir.join("bench.json"), json.as_bytes())?;
    print!("{json}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate { config, stage, workers } => run_generate(&config, stage.into(), workers),
        Command::Evaluate { gt, pred, out } => run_evaluate(&gt, &pred, &out),
        Command::Bench {
            config,
            samples,
            workers,
        } => run_bench(&config, samples, workers),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
