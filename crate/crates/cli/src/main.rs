//! Command-line driver: run optimizations, verify against the oracles, list
//! the problem catalog, and export plot-ready data.

mod export;

use clap::{Parser, Subcommand};
use shapeopt_core::driver::{run_optimization, RunConfig, RunStatus, RunSummary};
use shapeopt_core::driver::runlog::write_run_outputs;
use shapeopt_core::problems::{make_problem, ProblemOptions, PRESET_NAMES};
use std::path::PathBuf;
use std::process::ExitCode;

pub(crate) const EXIT_OK: u8 = 0;
pub(crate) const EXIT_GEOMETRY: u8 = 2;
const EXIT_CONFIG: u8 = 3;
pub(crate) const EXIT_MISSING: u8 = 4;

#[derive(Parser)]
#[command(name = "shapeopt", version, about = "Mesh-free PDE-constrained shape optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an optimization run described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's [output] dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dotted-path config overrides, e.g. --set loop.K=10.
        #[arg(long = "set", value_parser = parse_kv)]
        set: Vec<(String, String)>,
        /// Shorthand for --set sampling.seed=N.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the independent verification battery and write a JSON report.
    Verify {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Include the flow-problem shape-derivative checks (slow).
        #[arg(long)]
        extended: bool,
    },
    /// Print one line per problem preset.
    ListProblems,
    /// Export field-on-grid and objective-history CSVs from a run directory.
    Export {
        /// Completed run directory (contains runlog.jsonl).
        #[arg(long)]
        run: PathBuf,
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
        /// Output directory (defaults to the run directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_kv(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got `{s}`"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run { config, out, set, seed } => cmd_run(config, out, set, seed),
        Command::Verify { out, extended } => cmd_verify(out, extended),
        Command::ListProblems => cmd_list(),
        Command::Export { run, grid, out } => export::cmd_export(&run, grid, out.as_deref()),
    };
    ExitCode::from(code)
}

fn cmd_run(
    config: PathBuf,
    out: Option<PathBuf>,
    mut set: Vec<(String, String)>,
    seed: Option<u64>,
) -> u8 {
    if let Some(s) = seed {
        set.push(("sampling.seed".into(), s.to_string()));
    }
    if let Some(dir) = &out {
        set.push(("output.dir".into(), dir.display().to_string()));
    }
    let (cfg, problem) = match RunConfig::load(&config, &set) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let started = std::time::Instant::now();
    let art = match run_optimization(&cfg, &problem) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("run failed: {e}");
            return EXIT_GEOMETRY;
        }
    };
    let wall = started.elapsed().as_secs_f64();
    let records = &art.log.records;
    let v0 = records.first().map(|r| r.volume).unwrap_or(0.0);
    let max_drift = records
        .iter()
        .map(|r| ((r.volume - v0) / v0).abs())
        .fold(0.0f64, f64::max);
    let status_str = match art.status {
        RunStatus::Completed => "completed".to_string(),
        RunStatus::GeometryAbort { iteration } => format!("geometry_abort@{iteration}"),
    };
    let summary = RunSummary {
        status: status_str,
        initial_objective: records.first().map(|r| r.objective).unwrap_or(f64::NAN),
        final_objective: records.last().map(|r| r.objective).unwrap_or(f64::NAN),
        initial_volume: v0,
        final_volume: records.last().map(|r| r.volume).unwrap_or(f64::NAN),
        max_volume_drift: max_drift,
        iterations: records.len().saturating_sub(1),
        wall_time_seconds: wall,
    };
    let named: Vec<(String, shapeopt_core::net::FieldNetwork)> = problem
        .fields
        .iter()
        .zip(&art.nets)
        .map(|(f, n)| (f.name.to_string(), n.clone()))
        .collect();
    if let Err(e) = write_run_outputs(
        &cfg.out_dir,
        &art.log,
        &named,
        art.final_colloc.as_ref(),
        &summary,
        cfg.trace,
    ) {
        eprintln!("failed to write outputs: {e}");
        return EXIT_GEOMETRY;
    }
    println!(
        "{}: J {:.6} -> {:.6}, volume drift {:.2e}, {:.1}s, outputs in {}",
        summary.status,
        summary.initial_objective,
        summary.final_objective,
        summary.max_volume_drift,
        wall,
        cfg.out_dir.display()
    );
    match art.status {
        RunStatus::Completed => EXIT_OK,
        RunStatus::GeometryAbort { .. } => EXIT_GEOMETRY,
    }
}

fn cmd_verify(out: Option<PathBuf>, extended: bool) -> u8 {
    let checks = match shapeopt_core::oracle::verify_suite(extended) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("verification failed to execute: {e}");
            return EXIT_GEOMETRY;
        }
    };
    let mut all_ok = true;
    for c in &checks {
        println!(
            "[{}] {} computed={:.6e} reference={:.6e} tol={:.1e}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.computed,
            c.reference,
            c.tolerance
        );
        all_ok &= c.pass;
    }
    if let Some(path) = out {
        let report = serde_json::to_string_pretty(&checks).expect("serializable");
        if let Err(e) = std::fs::write(&path, report) {
            eprintln!("failed to write report: {e}");
            return EXIT_GEOMETRY;
        }
    }
    if all_ok {
        EXIT_OK
    } else {
        1
    }
}

fn cmd_list() -> u8 {
    for name in PRESET_NAMES {
        match make_problem(name, &ProblemOptions::default()) {
            Ok(p) => println!("{}", p.catalog_line()),
            Err(e) => {
                eprintln!("{name}: {e}");
                return EXIT_CONFIG;
            }
        }
    }
    EXIT_OK
}

