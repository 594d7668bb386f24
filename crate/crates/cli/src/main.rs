use std::env;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use geotopic::config::PipelineConfig;
use geotopic::pipeline::{self, Manifest, PipelineError, Stage};

/// Topic analysis of geo-located posts, one subcommand per pipeline stage.
#[derive(Debug, Parser)]
#[command(name = "geotopic", version)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true, default_value = "geotopic.toml")]
    config: PathBuf,
    /// Override the LDA seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Override the output directory from the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Report format; `svg` additionally renders the heatmap as SVG.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Count records by language and location kind.
    Scan {
        /// Record files (JSON lines, optionally gzip); defaults to ingest.inputs.
        inputs: Vec<PathBuf>,
    },
    /// Keep posts in the configured language located inside a city.
    Filter {
        #[arg(long)]
        city: String,
        inputs: Vec<PathBuf>,
    },
    /// Normalize accepted posts into token documents.
    Prep {
        #[arg(long)]
        city: String,
    },
    /// Build the pruned vocabulary and bag-of-words corpus.
    Vocab {
        #[arg(long)]
        city: String,
    },
    /// Train the LDA model.
    Train {
        #[arg(long)]
        city: String,
    },
    /// Export each document's dominant topic.
    Assign {
        #[arg(long)]
        city: String,
    },
    /// Count documents per topic group.
    Aggregate {
        #[arg(long)]
        city: String,
    },
    /// Compare group percentages of two cities.
    Compare { a: String, b: String },
    /// Entity, weekday, hourly and user-activity statistics.
    Stats {
        #[arg(long)]
        city: String,
    },
    /// Row-normalized group by weekday heatmap.
    Heatmap {
        #[arg(long)]
        city: String,
    },
    /// Run every stage for every city, then compare each pair of cities.
    RunAll,
    /// Re-run a stage from its manifest and verify the outputs match.
    Replay { manifest: PathBuf },
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    if !cli.config.is_file() {
        return Err(PipelineError::Io {
            path: cli.config.clone(),
            source: std::io::ErrorKind::NotFound.into(),
        });
    }
    let mut cfg = PipelineConfig::load(&cli.config).map_err(PipelineError::Config)?;
    if let Some(seed) = cli.seed {
        cfg.lda.seed = seed;
    }
    if let Some(dir) = &cli.output_dir {
        cfg.output.dir = absolute(dir);
    }
    Ok(cfg)
}

fn absolute(p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        env::current_dir().map(|d| d.join(p)).unwrap_or_else(|_| p.to_path_buf())
    }
}

fn inputs_or_config(given: &[PathBuf], cfg: &PipelineConfig) -> Vec<PathBuf> {
    if given.is_empty() {
        cfg.ingest.inputs.clone()
    } else {
        given.iter().map(|p| absolute(p)).collect()
    }
}

fn report(m: &Manifest) {
    let summary: Vec<String> = m.summary.iter().map(|(k, v)| format!("{k}={v}")).collect();
    println!("{}: {}", m.primary_output().display(), summary.join(" "));
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| PipelineError::Config(format!("--threads: {e}")))?;
    }
    if let Command::Replay { manifest } = &cli.command {
        let m = pipeline::replay(manifest)?;
        report(&m);
        println!("replay matches {}", manifest.display());
        return Ok(());
    }
    let cfg = load_config(cli)?;
    let svg = cli.format == Format::Svg;
    let stage = match &cli.command {
        Command::Scan { inputs } => Stage::Scan { inputs: inputs_or_config(inputs, &cfg) },
        Command::Filter { city, inputs } => Stage::Filter {
            city: city.clone(),
            inputs: inputs_or_config(inputs, &cfg),
        },
        Command::Prep { city } => Stage::Prep { city: city.clone() },
        Command::Vocab { city } => Stage::Vocab { city: city.clone() },
        Command::Train { city } => Stage::Train { city: city.clone() },
        Command::Assign { city } => Stage::Assign { city: city.clone() },
        Command::Aggregate { city } => Stage::Aggregate { city: city.clone() },
        Command::Compare { a, b } => Stage::Compare { a: a.clone(), b: b.clone() },
        Command::Stats { city } => Stage::Stats { city: city.clone() },
        Command::Heatmap { city } => Stage::Heatmap { city: city.clone(), svg },
        Command::RunAll => {
            for m in pipeline::run_all(&cfg, svg)? {
                report(&m);
            }
            return Ok(());
        }
        Command::Replay { .. } => unreachable!("handled above"),
    };
    report(&pipeline::run_stage(&cfg, &stage)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("geotopic: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
