// Negated comparisons are how NaN is rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod config;
mod error;
mod output;
mod run;

use config::{Format, RunConfig};
use error::CliError;

/// Exceptional-point and coherent-perfect-absorption sweeps for a cavity
/// with two emitters.
#[derive(Parser)]
#[command(name = "epcavity", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configuration and write data plus a metadata sidecar.
    Run {
        config: PathBuf,
        /// Output directory, overriding [output] path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Output format, overriding [output] format.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Parse and validate a configuration without running it.
    Validate { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn load(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    RunConfig::parse(&text)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into())
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("EPCAVITY_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::config(format!("EPCAVITY_THREADS must be a positive integer, got '{raw}'")))?;
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot size thread pool: {e}")))?;
    #[cfg(not(feature = "parallel"))]
    let _ = n;
    Ok(())
}

fn run(path: &Path, out: Option<PathBuf>, format: Option<FormatArg>) -> Result<(), CliError> {
    configure_threads()?;
    let mut config = load(path)?;
    if let Some(dir) = out {
        config.out_dir = dir;
    }
    if let Some(f) = format {
        config.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    let tables = run::execute(&config)?;

    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let base = stem(path);
    let mut files = Vec::with_capacity(tables.len());
    for (suffix, table) in &tables {
        let name = format!("{base}{suffix}.{}", config.format.as_str());
        let body = match config.format {
            Format::Csv => table.to_csv(),
            Format::Json => table.to_json(),
        };
        let target = dir.join(&name);
        fs::write(&target, body).map_err(|e| CliError::io(&target, e))?;
        println!("{}", target.display());
        files.push(name);
    }

    let mut meta = config.render();
    meta.push_str(&format!(
        "\n[meta]\nversion = {}\nfiles = {}\n",
        epcavity::VERSION,
        files.join(", ")
    ));
    let target = dir.join(format!("{base}.meta"));
    fs::write(&target, meta).map_err(|e| CliError::io(&target, e))?;
    println!("{}", target.display());
    Ok(())
}

fn validate(path: &Path) -> Result<(), CliError> {
    let config = load(path)?;
    println!("ok: {} ({})", path.display(), config.mode.as_str());
    Ok(())
}

fn report(err: &CliError) {
    let body = serde_json::json!({
        "error": err.kind(),
        "message": err.to_string(),
        "exit_code": err.exit_code(),
    });
    eprintln!("{body}");
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
    let result = match cli.command {
        Command::Run { config, out, format } => run(&config, out, format),
        Command::Validate { config } => validate(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(&e);
            ExitCode::from(e.exit_code())
        }
    }
}
