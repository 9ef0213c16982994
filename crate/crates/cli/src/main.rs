//! `alsc` command line: synthesize, run, and evaluate heterogeneous
//! change-detection pipelines.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use alsc_core::synth::SceneSpec;

use commands::{cmd_di, cmd_evaluate, cmd_run, cmd_segment, cmd_synth, StageError};
use commands::{EvaluateConfig, SegmentConfig, SynthConfig};
use config::{parse_method, FileConfig, Merge};

#[derive(Parser)]
#[command(
    name = "alsc",
    version,
    about = "Adaptive local structure consistency change detection for heterogeneous image pairs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: difference images, change map, metrics, manifest.
    Run(PipelineArgs),
    /// Difference images only.
    Di(PipelineArgs),
    /// Segment a stored fused difference image into a change map.
    Segment(SegmentArgs),
    /// Score a change map and/or difference image against ground truth.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic coregistered optical/SAR pair with ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON config file; command-line flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// First-epoch image (PGM/PPM or flat binary with JSON sidecar).
    #[arg(long)]
    image_x: Option<PathBuf>,
    /// Second-epoch image.
    #[arg(long)]
    image_y: Option<PathBuf>,
    /// Modality of image X: optical | sar.
    #[arg(long)]
    modality_x: Option<String>,
    /// Modality of image Y: optical | sar.
    #[arg(long)]
    modality_y: Option<String>,
    /// Ground-truth mask (P5 PGM, >=128 means changed).
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Patch half-width p (patch side 2p+1). Required.
    #[arg(long)]
    p: Option<usize>,
    /// Search window side in pixels; default 75p.
    #[arg(long)]
    omega: Option<usize>,
    /// Target-patch stride; default p.
    #[arg(long = "delta-p")]
    delta_p: Option<usize>,
    /// Neighbor search stride inside the window; default 2p+1.
    #[arg(long = "delta-s")]
    delta_s: Option<usize>,
    /// Neighbors kept with nonzero probability; default 35.
    #[arg(long)]
    k: Option<usize>,
    /// Segmentation method: otsu | pcakm.
    #[arg(long)]
    method: Option<String>,
    /// PCAKM block size; default 4.
    #[arg(long)]
    block: Option<usize>,
    /// PCAKM feature dimensions; default 3.
    #[arg(long)]
    dims: Option<usize>,
    /// Worker threads; default = available parallelism. 1 is bit-exact.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct SegmentArgs {
    /// Fused difference image (flat binary + JSON sidecar).
    #[arg(long)]
    di: PathBuf,
    /// Segmentation method: otsu | pcakm.
    #[arg(long, default_value = "otsu")]
    method: String,
    #[arg(long, default_value_t = 4)]
    block: usize,
    #[arg(long, default_value_t = 3)]
    dims: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Predicted change map (P5 PGM).
    #[arg(long)]
    map: Option<PathBuf>,
    /// Fused difference image for ROC/AUC.
    #[arg(long)]
    di: Option<PathBuf>,
    /// Ground-truth mask (P5 PGM).
    #[arg(long)]
    truth: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 128)]
    width: usize,
    #[arg(long, default_value_t = 128)]
    height: usize,
    /// Number of surface classes, background included.
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 0.08)]
    change_fraction: f64,
    /// Gamma speckle looks of the SAR epoch.
    #[arg(long, default_value_t = 4)]
    looks: u32,
}

fn load_file_config(path: &Option<PathBuf>) -> Result<FileConfig, StageError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| StageError {
                stage: "config",
                message: format!("{}: {e}", path.display()),
            })?;
            serde_json::from_str(&text).map_err(|e| StageError {
                stage: "config",
                message: format!("{}: {e}", path.display()),
            })
        }
    }
}

fn resolve(args: PipelineArgs) -> Result<config::RunConfig, StageError> {
    let file = load_file_config(&args.config)?;
    Merge {
        file,
        image_x: args.image_x,
        image_y: args.image_y,
        modality_x: args.modality_x,
        modality_y: args.modality_y,
        truth: args.truth,
        out: args.out,
        p: args.p,
        omega: args.omega,
        delta_p: args.delta_p,
        delta_s: args.delta_s,
        k: args.k,
        method: args.method,
        block: args.block,
        dims: args.dims,
        workers: args.workers,
    }
    .resolve()
    .map_err(|message| StageError {
        stage: "config",
        message,
    })
}

fn dispatch(cli: Cli) -> Result<(), StageError> {
    match cli.command {
        Command::Run(args) => cmd_run(resolve(args)?),
        Command::Di(args) => cmd_di(resolve(args)?),
        Command::Segment(args) => cmd_segment(SegmentConfig {
            di: args.di,
            method: parse_method(&args.method).map_err(|message| StageError {
                stage: "config",
                message,
            })?,
            block: args.block,
            dims: args.dims,
            out: args.out,
        }),
        Command::Evaluate(args) => cmd_evaluate(EvaluateConfig {
            map: args.map,
            di: args.di,
            truth: args.truth,
            out: args.out,
        }),
        Command::Synth(args) => cmd_synth(SynthConfig {
            out: args.out,
            spec: SceneSpec {
                width: args.width,
                height: args.height,
                seed: args.seed,
                n_classes: args.classes,
                change_fraction: args.change_fraction,
                speckle_looks: args.looks,
            },
        }),
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(1);
    }
}
