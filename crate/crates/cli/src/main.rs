use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use folflow_cli::{
    catalog, config_error_json, output_dir, parse_config, run, RunConfig, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK,
};

#[derive(Parser)]
#[command(name = "folflow", version, about = "Leafwise geometric flows: surfaces, twisted products, normalized flow")]
struct Cli {
    /// Output directory (overrides `output.dir`; per-config subdirectories in a sweep).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the eigensolver's start block (overrides `seed`); TOML integers cap it at 2^63 - 1.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration.
    Run { config: PathBuf },
    /// List the scenarios with their equations and required fields.
    List,
    /// Run every `*.toml` in a directory concurrently (FOLFLOW_THREADS caps the workers).
    Sweep { dir: PathBuf },
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig, (i32, Value)> {
    let mut cfg = parse_config(path).map_err(|e| (EXIT_CONFIG, config_error_json(&path.display().to_string(), &e)))?;
    if seed.is_some() {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// Exit code and the JSON line describing one run.
fn run_one(path: &Path, cfg: &RunConfig, dir: &Path) -> (i32, Value) {
    let shown = path.display().to_string();
    match run(cfg, dir) {
        Ok(outcome) => match &outcome.report.failure {
            None => (EXIT_OK, json!({"status": "ok", "config": shown, "output": dir})),
            Some(f) => (
                EXIT_NUMERICAL,
                json!({"status": "failed", "kind": "numerical", "config": shown, "output": dir,
                       "error": f.kind, "t": f.t, "message": f.message}),
            ),
        },
        Err(e) => (
            EXIT_NUMERICAL,
            json!({"status": "failed", "kind": "io", "config": shown, "output": dir, "message": e.to_string()}),
        ),
    }
}

fn report(code: i32, line: &Value, quiet: bool) {
    if code == EXIT_OK {
        if !quiet {
            println!("{line}");
        }
    } else {
        eprintln!("{line}");
    }
}

/// A loaded config and its output directory, or the exit code and error object.
type Job = Result<(RunConfig, PathBuf), (i32, Value)>;

fn sweep(dir: &Path, out: Option<&Path>, seed: Option<u64>, quiet: bool) -> i32 {
    let mut configs: Vec<PathBuf> = match std::fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect(),
        Err(e) => {
            let err = json!({"status": "failed", "kind": "io", "config": dir, "message": e.to_string()});
            eprintln!("{err}");
            return EXIT_CONFIG;
        }
    };
    configs.sort();
    let threads = std::env::var("FOLFLOW_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool");
    // Resolve every output directory first; two runs must never share one.
    let jobs: Vec<(PathBuf, Job)> = configs
        .into_iter()
        .map(|p| {
            let job = load(&p, seed).map(|cfg| {
                let sub = out.map(|o| o.join(p.file_stem().unwrap_or_default()));
                let dir = output_dir(&cfg, sub.as_deref());
                (cfg, dir)
            });
            (p, job)
        })
        .collect();
    let mut seen = std::collections::BTreeMap::new();
    for (p, job) in &jobs {
        if let Ok((_, dir)) = job {
            if let Some(other) = seen.insert(dir.clone(), p.clone()) {
                let err = json!({"status": "failed", "kind": "validation", "config": p,
                    "message": format!("output directory {} is also used by {}", dir.display(), other.display())});
                eprintln!("{err}");
                return EXIT_CONFIG;
            }
        }
    }
    let results: Vec<(i32, Value)> = pool.install(|| {
        jobs.par_iter()
            .map(|(p, job)| match job {
                Ok((cfg, dir)) => run_one(p, cfg, dir),
                Err(e) => e.clone(),
            })
            .collect()
    });
    let mut worst = EXIT_OK;
    for (code, line) in &results {
        report(*code, line, quiet);
        worst = worst.max(*code);
    }
    worst
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::List => {
            print!("{}", catalog::render());
            EXIT_OK
        }
        Command::Run { config } => {
            let (code, line) = match load(config, cli.seed) {
                Ok(cfg) => run_one(config, &cfg, &output_dir(&cfg, cli.out.as_deref())),
                Err(e) => e,
            };
            report(code, &line, cli.quiet);
            code
        }
        Command::Sweep { dir } => sweep(dir, cli.out.as_deref(), cli.seed, cli.quiet),
    };
    ExitCode::from(code as u8)
}
