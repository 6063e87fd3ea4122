//! Command-line front end over `foveaq::pipeline`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use foveaq::io::load_manifest;
use foveaq::metrics::MetricId;
use foveaq::pipeline::{self, Command, GroupBy, RunOptions};

#[derive(Parser)]
#[command(name = "foveaq", version, about = "Foveation-aware quality assessment of omnidirectional images")]
struct Cli {
    /// Manifest JSON; defaults to ./manifest.json.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Overrides the manifest seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the manifest output directory.
    #[arg(long, global = true, env = "FOVEAQ_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Comma-separated metric names (e.g. VPSNR,FPSNR).
    #[arg(long, global = true, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    #[arg(long, global = true, value_enum, default_value_t = Grouping::Image)]
    group_by: Grouping,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Grouping {
    Image,
    All,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Print the derived virtual-viewport geometry and write the maps.
    Geometry,
    /// Extract source viewports.
    Extract,
    /// Generate the stimulus database.
    MakeStimuli,
    /// Score every stimulus with the selected metrics.
    Score,
    /// Fit zone weights per group.
    FitWeights,
    /// Logistic PCC/RMSE per metric and group.
    Evaluate,
    /// Wide CSV and metric-vs-MOS scatter plots.
    Report,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Geometry => Command::Geometry,
        Cmd::Extract => Command::Extract,
        Cmd::MakeStimuli => Command::MakeStimuli,
        Cmd::Score => Command::Score,
        Cmd::FitWeights => Command::FitWeights,
        Cmd::Evaluate => Command::Evaluate,
        Cmd::Report => Command::Report,
    };
    let metrics = match cli
        .metrics
        .map(|list| list.iter().map(|m| m.parse::<MetricId>()).collect::<Result<Vec<_>, _>>())
        .transpose()
    {
        Ok(m) => m,
        Err(e) => {
            eprintln!("foveaq: {e}");
            return ExitCode::from(2);
        }
    };
    let opts = RunOptions {
        seed: cli.seed,
        jobs: cli.jobs,
        out_dir: cli.out_dir,
        metrics,
        group_by: match cli.group_by {
            Grouping::Image => GroupBy::Image,
            Grouping::All => GroupBy::All,
        },
    };
    let path = pipeline::manifest_path(cli.manifest.as_deref());
    let result = load_manifest(&path)
        .map_err(|e| e.in_stage("manifest"))
        .and_then(|m| pipeline::run(&m, command, &opts));
    match result {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("foveaq: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
