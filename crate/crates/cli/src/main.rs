//! `layoutbench` command-line interface.
//!
//! Exit codes: 0 on success, 2 for bad input (flags, unreadable or
//! malformed files, `--strict` violations), 3 for internal errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INTERNAL: u8 = 3;

/// Environment variable naming the default dataset root.
pub const DATA_ROOT_ENV: &str = "LAYOUTBENCH_DATA_ROOT";

#[derive(Parser)]
#[command(name = "layoutbench", version, about = "Design sequences and metrics for content-aware poster layouts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score layouts with the graphic and content-aware metrics
    Eval {
        #[command(flatten)]
        input: InputArgs,
        /// Comma-separated metrics (val,ove,ali,und_l,und_s,uti,occ,rea) or all/graphic/content
        #[arg(long, default_value = "all")]
        metrics: String,
        /// Output directory for per_layout.csv and report.json
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Order layouts into design sequences
    Dsf {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, value_enum, default_value_t = StrategyArg::Dsf)]
        strategy: StrategyArg,
        /// Seed for the random strategy
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fixed sequence length (truncate or pad)
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        length: Option<u64>,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare metrics of full-length and truncated sequences per strategy
    Ablation {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value = "all")]
        metrics: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Truncated sequence length
        #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
        length: u64,
        /// Output directory for ablation.json and ablation.csv
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Dataset statistics: counts and element-count histogram
    Stats {
        #[command(flatten)]
        input: InputArgs,
        /// Output file for the JSON statistics
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Draw layouts as wireframes over their canvases
    Render {
        #[command(flatten)]
        input: InputArgs,
        /// Output directory for PNG files
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate baseline layouts
    Gen {
        /// TOML generator settings (defaults when omitted)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = BaselineArg::Random)]
        baseline: BaselineArg,
        /// Number of layouts
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// First seed; layout i uses seed + i (overrides the config seed)
        #[arg(long)]
        seed: Option<u64>,
        /// Saliency map for the grid baseline
        #[arg(long)]
        saliency: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Inputs shared by the dataset commands.
#[derive(Args, Clone, Debug)]
struct InputArgs {
    /// Annotation file (.jsonl native, .csv/.tsv published tabular)
    #[arg(long)]
    annotations: Option<PathBuf>,
    /// TOML settings for the tabular adapter (columns, class-id map, canvas size)
    #[arg(long)]
    tabular_config: Option<PathBuf>,
    /// Directory of canvas images, `<canvas_id>.png|jpg`
    #[arg(long)]
    canvas_dir: Option<PathBuf>,
    /// One or two saliency directories; two are combined by pixel-wise maximum
    #[arg(long, num_args = 1..=2)]
    saliency_dirs: Vec<PathBuf>,
    /// Directory of poster images used as render backgrounds
    #[arg(long)]
    image_dir: Option<PathBuf>,
    /// Worker threads (default: all cores); never changes output
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    jobs: Option<u64>,
    /// Fail on the first bad record or missing raster
    #[arg(long)]
    strict: bool,
    /// Dataset root holding annotations.jsonl|csv, canvases/, saliency_1/, saliency_2/
    #[arg(long, env = DATA_ROOT_ENV)]
    data_root: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Dsf,
    Geometric,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BaselineArg {
    Random,
    Grid,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval { input, metrics, out, format } => commands::eval(&input, &metrics, out.as_deref(), format),
        Command::Dsf { input, strategy, seed, length, out } => {
            commands::dsf(&input, strategy, seed, length.map(|k| k as usize), out.as_deref())
        }
        Command::Ablation { input, metrics, seed, length, out, format } => {
            commands::ablation(&input, &metrics, seed, length as usize, out.as_deref(), format)
        }
        Command::Stats { input, out, format } => commands::stats(&input, out.as_deref(), format),
        Command::Render { input, out } => commands::render(&input, &out),
        Command::Gen { config, baseline, count, seed, saliency, out } => {
            commands::generate(config.as_deref(), baseline, count, seed, saliency.as_deref(), out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(commands::Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
