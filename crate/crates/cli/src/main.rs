//! `tda` — run the topological time-series pipeline from a config file,
//! render artifacts as SVG, and generate synthetic datasets.
//!
//! Exit codes: 0 success, 2 configuration/usage error, 3 data error,
//! 4 internal invariant violation.

mod plot;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tda_core::ingest::{self, CsvLayout};
use tda_core::{Error, PersistenceDiagram};

#[derive(Parser)]
#[command(name = "tda", version, about = "Topological analysis of time series")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the full pipeline described by a config file.
    Run {
        /// Flat key/value config file.
        #[arg(long)]
        config: PathBuf,
        /// Output root; the run writes into `<out>/run-<confighash>/`.
        /// Env override: TDA_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the config's rng_seed. Env override: TDA_SEED.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for per-window computations (default: CPU
        /// count). Env override: TDA_THREADS.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Render a pipeline artifact as a standalone SVG.
    Plot {
        /// What to draw.
        kind: PlotKind,
        /// Input artifact (diagram JSON, landscape/betti CSV, or
        /// indicators JSON depending on the kind).
        #[arg(long)]
        input: PathBuf,
        /// Output SVG path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a deterministic synthetic dataset as wide CSV.
    Synth {
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Point/sample count (circle, noisy-sine).
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Jitter amplitude (circle, noisy-sine).
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Points per blob (two-clusters).
        #[arg(long, default_value_t = 6)]
        per_cluster: usize,
        /// Blob separation (two-clusters).
        #[arg(long, default_value_t = 10.0)]
        separation: f64,
        /// Blob radius (two-clusters).
        #[arg(long, default_value_t = 0.04)]
        spread: f64,
        /// Series count (regime-shift).
        #[arg(long, default_value_t = 8)]
        series: usize,
        /// Block length (regime-shift).
        #[arg(long, default_value_t = 12)]
        window_length: usize,
        /// Uniform-phase blocks (regime-shift).
        #[arg(long, default_value_t = 5)]
        phase1: usize,
        /// Fan-out-phase blocks (regime-shift).
        #[arg(long, default_value_t = 5)]
        phase2: usize,
        /// Base level gap (regime-shift).
        #[arg(long, default_value_t = 1.0)]
        gap: f64,
        /// Final relative gap dispersion (regime-shift).
        #[arg(long, default_value_t = 0.5)]
        max_spread: f64,
        /// Sine period in samples (noisy-sine).
        #[arg(long, default_value_t = 40.0)]
        period: f64,
    },
    /// Parse a config file, check it against its data, and print the
    /// resolved settings.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    Diagram,
    Barcode,
    Landscape,
    Betti,
    Tsi,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Circle,
    TwoClusters,
    RegimeShift,
    NoisySine,
}

fn exit_code_of(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Internal(_) => 4,
        _ => 3,
    }
}

fn env_parse<T: std::str::FromStr>(key: &str) -> Option<T> {
    std::env::var(key).ok().and_then(|v| v.parse().ok())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((stage, err)) => {
            eprintln!("error [stage {stage}]: {err}");
            ExitCode::from(exit_code_of(&err))
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), (String, Error)> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            threads,
        } => {
            let out = out
                .or_else(|| env_parse::<PathBuf>("TDA_OUT"))
                .unwrap_or_else(|| PathBuf::from("tda-out"));
            let seed = seed.or_else(|| env_parse("TDA_SEED"));
            let threads = threads.or_else(|| env_parse("TDA_THREADS"));
            let summary = run::run(&config, &out, seed, threads)?;
            println!("run complete: {}", summary.run_dir.display());
            for line in summary.headline {
                println!("  {line}");
            }
            Ok(())
        }
        Command::Plot { kind, input, out } => {
            plot_command(kind, &input, &out).map_err(|e| ("plot".to_string(), e))
        }
        Command::Synth {
            kind,
            out,
            seed,
            points,
            noise,
            per_cluster,
            separation,
            spread,
            series,
            window_length,
            phase1,
            phase2,
            gap,
            max_spread,
            period,
        } => {
            let data = match kind {
                SynthKind::Circle => tda_core::synth::circle(points, noise, seed),
                SynthKind::TwoClusters => {
                    tda_core::synth::two_clusters(per_cluster, separation, spread, seed)
                }
                SynthKind::RegimeShift => tda_core::synth::regime_shift(
                    series,
                    window_length,
                    phase1,
                    phase2,
                    gap,
                    max_spread,
                ),
                SynthKind::NoisySine => tda_core::synth::noisy_sine(points, period, noise, seed),
            }
            .map_err(|e| ("synth".to_string(), e))?;
            ingest::write_csv(&out, &data, CsvLayout::Wide)
                .map_err(|e| ("synth".to_string(), e))?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::ValidateConfig { config } => {
            validate_config_command(&config).map_err(|e| ("config".to_string(), e))
        }
    }
}

fn plot_command(kind: PlotKind, input: &PathBuf, out: &PathBuf) -> Result<(), Error> {
    let text = std::fs::read_to_string(input)?;
    let svg = match kind {
        PlotKind::Diagram => plot::diagram_svg(&PersistenceDiagram::from_json(&text)?),
        PlotKind::Barcode => plot::barcode_svg(&PersistenceDiagram::from_json(&text)?),
        PlotKind::Landscape => plot::landscape_svg(&plot::parse_level_csv(&text)?),
        PlotKind::Betti => plot::betti_svg(&plot::parse_level_csv(&text)?),
        PlotKind::Tsi => plot::tsi_svg(&plot::parse_indicators(&text)?),
    };
    std::fs::write(out, svg)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn validate_config_command(config_path: &PathBuf) -> Result<(), Error> {
    let text = std::fs::read_to_string(config_path)?;
    let cfg = ingest::parse_config(&text)?;
    let data_path = run::resolve_data_path(config_path, &cfg.data);
    let series = ingest::load_csv(&data_path, cfg.layout)?;
    let cfg = ingest::validate_config(cfg, &series)?;
    print!("{}", run::canonical_config_text(&cfg));
    println!("ok: {} series validated", series.len());
    Ok(())
}
