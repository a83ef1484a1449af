//! `baton`: command-line front end for capture import, reference building,
//! classification, session replay and the live streaming service.

mod commands;
mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use baton_core::capture::Config;
use baton_core::MovementClass;

#[derive(Parser)]
#[command(name = "baton", version, about = "Conducting-baton motion reconstruction and analysis")]
struct Cli {
    /// Session settings file (`key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

/// Overrides for the bar layout; unset values come from the config file.
#[derive(Args, Clone, Copy, Debug, Default)]
struct BarArgs {
    /// Tempo in beats per minute.
    #[arg(long)]
    tempo: Option<f64>,
    /// Beats per bar.
    #[arg(long)]
    beats: Option<usize>,
    /// Points per resampled bar.
    #[arg(long = "points")]
    n_points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the control orientation from a still capture.
    Calibrate {
        #[arg(long)]
        source: String,
        #[arg(long)]
        palm: Option<String>,
        #[arg(long)]
        rate: Option<f64>,
        /// Seconds of samples to use.
        #[arg(long, default_value_t = 2.0)]
        seconds: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic labeled capture as CSV.
    Generate {
        #[arg(long)]
        class: MovementClass,
        #[arg(long)]
        bars: usize,
        #[arg(long)]
        tempo: Option<f64>,
        #[arg(long)]
        beats: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        frequency: Option<f64>,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        rate: Option<f64>,
        /// Length unit of the written file: m or mm.
        #[arg(long, default_value = "m")]
        unit: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a capture CSV and summarize its bars.
    Import {
        csv: PathBuf,
        #[command(flatten)]
        bars: BarArgs,
    },
    /// Average every complete bar of the given captures into a reference.
    Average {
        #[arg(long = "in", num_args = 1.., required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        label: MovementClass,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        bars: BarArgs,
    },
    /// Deviation of a bar from one reference.
    Compare {
        /// Capture CSV holding the bar.
        #[arg(long)]
        bar: PathBuf,
        /// Bar number within the capture; every bar when omitted.
        #[arg(long)]
        index: Option<usize>,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[command(flatten)]
        bars: BarArgs,
    },
    /// Rank every reference in a directory against a bar.
    Classify {
        #[arg(long)]
        bar: PathBuf,
        #[arg(long)]
        index: Option<usize>,
        /// Directory of reference `.json` files.
        #[arg(long)]
        refs: PathBuf,
        #[command(flatten)]
        bars: BarArgs,
    },
    /// Rerun a recorded session and check it reproduces the recorded output.
    Replay { session: PathBuf },
    /// Stream live reconstruction to WebSocket clients.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        palm: Option<String>,
        #[arg(long)]
        rate: Option<f64>,
        /// Directory of reference `.json` files loaded at start.
        #[arg(long)]
        refs: Option<PathBuf>,
        /// Control orientation written by `calibrate`; identity when omitted.
        #[arg(long)]
        control: Option<PathBuf>,
        /// Record the session to this file.
        #[arg(long)]
        record: Option<PathBuf>,
        /// Start the session immediately instead of on the first subscriber.
        #[arg(long)]
        autostart: bool,
        /// Deliver mock and replay samples as fast as possible.
        #[arg(long)]
        unpaced: bool,
    },
}

/// A failure and the exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn validation(e: impl Into<anyhow::Error>) -> Self {
        Self { code: 2, error: e.into() }
    }

    pub fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Self { code: 1, error: e.into() }
    }
}

impl<E: Into<baton_core::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e: baton_core::Error = e.into();
        if e.is_validation() {
            Self::validation(e)
        } else {
            Self::runtime(e)
        }
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

fn load_config(path: Option<&PathBuf>) -> CliResult<Config> {
    match path {
        Some(p) => Ok(Config::load(p)?),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> CliResult {
    let config = load_config(cli.config.as_ref())?;
    match cli.command {
        Command::Calibrate {
            source,
            palm,
            rate,
            seconds,
            out,
        } => commands::calibrate(&config, &source, palm.as_deref(), rate, seconds, &out),
        Command::Generate {
            class,
            bars,
            tempo,
            beats,
            seed,
            amplitude,
            frequency,
            noise,
            rate,
            unit,
            out,
        } => commands::generate(
            &config,
            commands::GenerateArgs {
                class,
                bars,
                tempo,
                beats,
                seed,
                amplitude,
                frequency,
                noise,
                rate,
                unit,
            },
            &out,
        ),
        Command::Import { csv, bars } => commands::import(&commands::layout(&config, bars)?, &csv),
        Command::Average {
            inputs,
            label,
            out,
            bars,
        } => commands::average(&commands::layout(&config, bars)?, &inputs, label, &out),
        Command::Compare {
            bar,
            index,
            reference,
            bars,
        } => commands::compare(&commands::layout(&config, bars)?, &bar, index, &reference),
        Command::Classify { bar, index, refs, bars } => {
            commands::classify(&commands::layout(&config, bars)?, &bar, index, &refs)
        }
        Command::Replay { session } => commands::replay(&session),
        Command::Serve {
            port,
            host,
            source,
            palm,
            rate,
            refs,
            control,
            record,
            autostart,
            unpaced,
        } => serve::serve(serve::ServeOptions {
            config,
            host,
            port,
            source,
            palm,
            rate,
            refs,
            control,
            record,
            autostart,
            paced: !unpaced,
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
