//! `dynseg`: segment moving objects in an image pair, evaluate on synthetic
//! scenes, and render synthetic scenes.

mod eval;
mod overlay;
mod run;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynseg_core::{Error, PipelineConfig};

#[derive(Parser)]
#[command(name = "dynseg", version, about = "Segment moving objects from two images of a scene")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment the moving objects of an image pair.
    Run(run::RunArgs),
    /// Score the pipeline on seeded synthetic scenes.
    Eval(eval::EvalArgs),
    /// Render a synthetic scene and its ground truth.
    Synth(eval::SynthArgs),
}

/// Config file plus per-key overrides, shared by `run` and `eval`.
#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override any config key, e.g. --set grabcut.gamma=30 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

impl ConfigArgs {
    pub fn load(&self) -> Result<PipelineConfig, Failure> {
        let mut cfg = PipelineConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            cfg.apply_config_str(&text)?;
        }
        for kv in &self.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Io(String),
    Pipeline(String),
}

impl Failure {
    pub fn io(path: &Path, e: std::io::Error) -> Failure {
        Failure::Io(format!("{}: {e}", path.display()))
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Io(_) => 2,
            Failure::Pipeline(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Pipeline(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let msg = e.to_string();
        match e {
            _ if e.is_io() => Failure::Io(msg),
            Error::Format { .. } => Failure::Io(msg),
            Error::Config(_) | Error::Spec(_) => Failure::Usage(msg),
            _ => Failure::Pipeline(msg),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(args) => run::run(&args),
        Command::Eval(args) => eval::eval(&args),
        Command::Synth(args) => eval::synth(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
