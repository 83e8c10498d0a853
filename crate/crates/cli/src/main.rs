mod commands;
mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use log::{error, info};
use serde::Serialize;

use config::Config;

#[derive(Parser)]
#[command(name = "sek", version, about = "Spacetime event kinematics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides every seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `out` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Aggregate finished runs.
    Report {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        /// Where report.json and summary.txt go.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

/// Configuration, I/O or missing inputs.
const EXIT_USAGE: u8 = 2;
/// Numerical failure inside the core.
const EXIT_NUMERIC: u8 = 3;

#[derive(Serialize)]
struct ErrorFile<'a> {
    code: &'a str,
    message: String,
}

fn fail(msg: impl std::fmt::Display, code: u8) -> ExitCode {
    error!("{msg}");
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

fn run(config: &Path, seed: Option<u64>, out: Option<PathBuf>, threads: Option<usize>) -> ExitCode {
    let text = match std::fs::read_to_string(config) {
        Ok(t) => t,
        Err(e) => return fail(format!("{}: {e}", config.display()), EXIT_USAGE),
    };
    let mut cfg = match Config::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(format!("{}: {e}", config.display()), EXIT_USAGE),
    };
    if let Some(s) = seed {
        cfg.experiment.override_seed(s);
    }
    cfg.threads = threads;
    let dir = match out.or_else(|| cfg.out.clone().map(PathBuf::from)) {
        Some(d) => d,
        None => return fail("no output directory: pass --out or set `out`", EXIT_USAGE),
    };
    cfg.out = Some(dir.display().to_string());
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return fail(format!("thread pool: {e}"), EXIT_USAGE);
        }
    }
    if let Err(e) = std::fs::create_dir_all(&dir).and_then(|_| write_json(&dir.join("config.resolved.json"), &cfg)) {
        return fail(format!("{}: {e}", dir.display()), EXIT_USAGE);
    }
    info!("running {} into {}", cfg.experiment.name(), dir.display());
    match commands::run(&cfg.experiment, &dir) {
        Ok(result) => {
            if let Err(e) = write_json(&dir.join("result.json"), &result) {
                return fail(format!("{}: {e}", dir.display()), EXIT_USAGE);
            }
            for c in &result.claims {
                info!("{}: {:?} ({:e} vs {:e})", c.name, c.status, c.value, c.tolerance);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = match e {
                sek_core::Error::Io(_) => EXIT_USAGE,
                _ => EXIT_NUMERIC,
            };
            let _ = write_json(&dir.join("error.json"), &ErrorFile { code: e.code(), message: e.to_string() });
            fail(e, code)
        }
    }
}

fn report(dirs: &[PathBuf], dir: PathBuf) -> ExitCode {
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let r = match report::build(dirs, format!("unix:{stamp}")) {
        Ok(r) => r,
        Err(e) => return fail(e, EXIT_USAGE),
    };
    let text = report::summary_text(&r);
    print!("{text}");
    let res = std::fs::create_dir_all(&dir)
        .and_then(|_| write_json(&dir.join("report.json"), &r))
        .and_then(|_| std::fs::write(dir.join("summary.txt"), &text));
    if let Err(e) = res {
        return fail(format!("{}: {e}", dir.display()), EXIT_USAGE);
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SEK_LOG", "warn")).init();
    match Cli::parse().command {
        Command::Run { config, seed, out, threads } => run(&config, seed, out, threads),
        Command::Report { dirs, out } => report(&dirs, out),
    }
}
