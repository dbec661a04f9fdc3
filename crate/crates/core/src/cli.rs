//! Command-line front end. `run` returns the process exit code.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};

use crate::driver::{c_comsat_solve, comsat_solve, Limits, Outcome};
use crate::generate::{generate, GenParams, GenerateError};
use crate::instance::Instance;
use crate::schedule::{OutcomeTag, ScheduleFile, Subproblem};
use crate::validate::validate_schedule;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATIONS: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GENERATION: i32 = 3;
pub const EXIT_INFEASIBLE: i32 = 10;
pub const EXIT_ABORTED: i32 = 20;

#[derive(Debug, Parser)]
#[command(name = "cfevrp", version, about = "Conflict-free electric vehicle routing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and print the schedule file.
    Solve(SolveArgs),
    /// Check a schedule file against an instance.
    Validate {
        instance: PathBuf,
        schedule: PathBuf,
    },
    /// Write a seeded random instance.
    Generate(GenerateArgs),
    /// Solve every instance in a directory and write a CSV summary.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// Ignore node and segment capacities.
    #[arg(long)]
    pub relaxed: bool,
    /// Alternative path sets tried per assignment.
    #[arg(long, default_value_t = 50)]
    pub max_path_sets: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Also print the event log to stderr, one JSON object per line.
    #[arg(long)]
    pub log_json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 15)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2)]
    pub vehicles: usize,
    #[arg(long, default_value_t = 2)]
    pub jobs: usize,
    #[arg(long, default_value_t = 20.0)]
    pub horizon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub edge_reduction: f64,
    #[arg(long, default_value_t = 1)]
    pub types: usize,
    #[arg(long, default_value_t = 2)]
    pub max_tasks: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub dir: PathBuf,
    /// Per-instance time limit in seconds.
    #[arg(long, default_value_t = 1200.0)]
    pub timeout: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long, default_value_t = 50)]
    pub max_path_sets: usize,
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Validate { instance, schedule } => cmd_validate(&instance, &schedule),
        Command::Generate(a) => cmd_generate(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Instance::parse(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn exit_code(tag: OutcomeTag) -> i32 {
    match tag {
        OutcomeTag::Feasible => EXIT_OK,
        OutcomeTag::Infeasible => EXIT_INFEASIBLE,
        OutcomeTag::Aborted => EXIT_ABORTED,
    }
}

fn timeout(secs: f64) -> Result<Duration, String> {
    Duration::try_from_secs_f64(secs).map_err(|e| format!("bad timeout {secs}: {e}"))
}

pub fn cmd_solve(a: &SolveArgs) -> i32 {
    let inst = match load_instance(&a.instance) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let time_limit = match a.timeout.map(timeout).transpose() {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let limits = Limits {
        max_path_sets: Some(a.max_path_sets),
        time_limit,
        seed: a.seed,
        ..Limits::default()
    };
    let out = if a.relaxed {
        c_comsat_solve(&inst, &limits)
    } else {
        comsat_solve(&inst, &limits)
    };
    if a.log_json {
        for ev in &out.log {
            eprintln!("{}", serde_json::to_string(ev).expect("event serializes"));
        }
    }
    if let Err(e) = emit(&out.to_file().to_json(), a.out.as_deref()) {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    exit_code(out.tag())
}

pub fn cmd_validate(instance: &Path, schedule: &Path) -> i32 {
    let inst = match load_instance(instance) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let file = match fs::read_to_string(schedule)
        .map_err(|e| e.to_string())
        .and_then(|t| ScheduleFile::parse(&t).map_err(|e| e.to_string()))
    {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {}: {e}", schedule.display());
            return EXIT_INPUT;
        }
    };
    match validate_schedule(&file.schedule(), &inst) {
        Ok(rep) => {
            print!("{rep}");
            if rep.ok {
                EXIT_OK
            } else {
                EXIT_VIOLATIONS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> i32 {
    let p = GenParams {
        nodes: a.nodes,
        vehicles: a.vehicles,
        jobs: a.jobs,
        horizon: a.horizon,
        edge_reduction: a.edge_reduction,
        types: a.types,
        max_tasks_per_job: a.max_tasks,
        ..GenParams::default()
    };
    match generate(a.seed, &p) {
        Ok(inst) => match emit(&inst.to_json(), a.out.as_deref()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_INPUT
            }
        },
        Err(e @ GenerateError::GenerationFailed) => {
            eprintln!("error: {e}");
            EXIT_GENERATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

/// Columns of the bench CSV, in order.
pub const BENCH_COLUMNS: [&str; 14] = [
    "instance",
    "outcome",
    "seconds",
    "total_distance",
    "router_calls",
    "assign_calls",
    "capacity_calls",
    "paths_calls",
    "routes_verifier_calls",
    "router_seconds",
    "assign_seconds",
    "capacity_seconds",
    "paths_seconds",
    "routes_verifier_seconds",
];

fn bench_row(name: &str, out: &Outcome, secs: f64) -> Vec<String> {
    let spent = |s: Subproblem| -> String {
        let t: f64 = out.log.iter().filter(|e| e.subproblem == s).map(|e| e.seconds).sum();
        format!("{t:.6}")
    };
    let outcome = match out.tag() {
        OutcomeTag::Feasible => "feasible",
        OutcomeTag::Infeasible => "infeasible",
        OutcomeTag::Aborted => "aborted",
    };
    let st = &out.stats;
    vec![
        name.to_string(),
        outcome.to_string(),
        format!("{secs:.6}"),
        out.total_distance().map_or(String::new(), |d| d.to_string()),
        st.router_calls.to_string(),
        st.assign_calls.to_string(),
        st.capacity_calls.to_string(),
        st.paths_calls.to_string(),
        st.routes_verifier_calls.to_string(),
        spent(Subproblem::Router),
        spent(Subproblem::Assign),
        spent(Subproblem::CapacityVerifier),
        spent(Subproblem::PathsChanger),
        spent(Subproblem::RoutesVerifier),
    ]
}

fn bench_one(path: &Path, limits: &Limits) -> Vec<String> {
    let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
    match load_instance(path) {
        Ok(inst) => {
            let t0 = Instant::now();
            let out = comsat_solve(&inst, limits);
            bench_row(&name, &out, t0.elapsed().as_secs_f64())
        }
        Err(e) => {
            eprintln!("warning: {e}");
            let mut row = vec![String::new(); BENCH_COLUMNS.len()];
            row[0] = name;
            row[1] = "error".into();
            row
        }
    }
}

pub fn cmd_bench(a: &BenchArgs) -> i32 {
    let mut files: Vec<PathBuf> = match fs::read_dir(&a.dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) => {
            eprintln!("error: {}: {e}", a.dir.display());
            return EXIT_INPUT;
        }
    };
    files.sort();
    let limits = match timeout(a.timeout) {
        Ok(t) => Limits {
            time_limit: Some(t),
            max_path_sets: Some(a.max_path_sets),
            ..Limits::default()
        },
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let threads = a.threads.max(1);
    let mut rows: Vec<Option<Vec<String>>> = vec![None; files.len()];
    let chunk = files.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        for (chunk_files, chunk_rows) in files.chunks(chunk).zip(rows.chunks_mut(chunk)) {
            let limits = &limits;
            s.spawn(move || {
                for (f, slot) in chunk_files.iter().zip(chunk_rows.iter_mut()) {
                    *slot = Some(bench_one(f, limits));
                }
            });
        }
    });
    let sink: Box<dyn Write> = match &a.csv {
        Some(p) => match fs::File::create(p) {
            Ok(f) => Box::new(f),
            Err(e) => {
                eprintln!("error: {}: {e}", p.display());
                return EXIT_INPUT;
            }
        },
        None => Box::new(std::io::stdout()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let res = w
        .write_record(BENCH_COLUMNS)
        .and_then(|_| rows.iter().flatten().try_for_each(|r| w.write_record(r)))
        .and_then(|_| w.flush().map_err(csv::Error::from));
    if let Err(e) = res {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    EXIT_OK
}
