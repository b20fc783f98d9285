//! `spineplan`: validate box files, run planning scripts, serve the API.
//!
//! Exit codes:
//!
//! | command | 0 | 1 | 2 | 3 |
//! |---|---|---|---|---|
//! | `validate-bbox` | all files parse | a file could not be read | a file did not parse | |
//! | `plan` | plan written | script or plan file I/O | script syntax | a command failed |
//! | `serve` | clean shutdown | bad config or bind failure | | |

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use spineplan_core::script::{parse_script, run_script, LocalTarget};
use spineplan_core::{parse_bbox_file, Session, ViewKind};
use spineplan_service::Config;

#[derive(Debug, Parser)]
#[command(name = "spineplan", version, about = "Biplanar pedicle-screw planning")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check detection box files.
    ValidateBbox {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Run a planning script and write the resulting plan.
    Plan {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the planning API until interrupted.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Cmd::ValidateBbox { files } => validate_bbox(&files),
        Cmd::Plan { script, out } => plan(&script, &out),
        Cmd::Serve { config } => serve(config.as_deref()),
    }
}

fn validate_bbox(files: &[PathBuf]) -> ExitCode {
    let (mut io_failed, mut parse_failed) = (false, false);
    for path in files {
        match std::fs::read_to_string(path) {
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                io_failed = true;
            }
            Ok(text) => match parse_bbox_file(&text) {
                Ok(boxes) => println!("{}: {} boxes", path.display(), boxes.len()),
                Err(e) => {
                    eprintln!("{}:{}: {}", path.display(), e.line, e.reason);
                    parse_failed = true;
                }
            },
        }
    }
    if io_failed {
        ExitCode::from(1)
    } else if parse_failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn summary(s: &Session) {
    println!("session {}", s.id());
    for v in ViewKind::ALL {
        let view = s.view(v);
        let o = view.orientation();
        let flip = if o.flip { ", mirrored" } else { "" };
        println!("  {v}: {} boxes, rotated {}{flip}", view.boxes().len(), o.rotation.degrees());
    }
    for (view, label, _) in s.labels().iter() {
        println!("  label {label} in {view}");
    }
    for screw in s.screws() {
        println!(
            "  screw {} {}: {} d={} mm, length {:.3} mm",
            screw.vertebra_label,
            screw.side,
            screw.screw_type,
            screw.diameter,
            screw.length()
        );
    }
}

fn plan(script_path: &Path, out: &Path) -> ExitCode {
    let text = match std::fs::read_to_string(script_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", script_path.display());
            return ExitCode::from(1);
        }
    };
    let script = match parse_script(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{}:{}: {}", script_path.display(), e.line, e.message);
            return ExitCode::from(2);
        }
    };
    let base = script_path.parent().unwrap_or(Path::new("."));
    let mut target = LocalTarget::new();
    let result = run_script(&script, &mut target, base);
    if let Some(s) = &target.session {
        summary(s);
    }
    match result {
        Ok(plan) => {
            if let Err(e) = std::fs::write(out, plan) {
                eprintln!("{}: {e}", out.display());
                return ExitCode::from(1);
            }
            println!("plan written to {}", out.display());
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("{}: {failure}", script_path.display());
            ExitCode::from(3)
        }
    }
}

fn serve(config_path: Option<&Path>) -> ExitCode {
    let config = match Config::load(config_path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config: {e}");
            return ExitCode::from(1);
        }
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("cannot start runtime: {e}");
            return ExitCode::from(1);
        }
    };
    runtime.block_on(async move {
        let listener = match spineplan_service::bind(&config).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("cannot bind {}: {e}", config.listen);
                return ExitCode::from(1);
            }
        };
        match listener.local_addr() {
            Ok(addr) => println!("listening on http://{addr}"),
            Err(_) => println!("listening on http://{}", config.listen),
        }
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match spineplan_service::serve(listener, config, shutdown).await {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("server error: {e}");
                ExitCode::from(1)
            }
        }
    })
}
