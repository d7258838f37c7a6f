//! Command-line interface.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fmp_core::neighbors::NeighborStrategy;
use fmp_core::scenarios::{
    formation_scenario, formation_tunables, grid_swap_scenario, obstacle_passage_scenario, obstacle_passage_tunables,
    SwapKind,
};
use fmp_core::{Scenario, Tunables, VelocityLimit};

use crate::config::ScenarioFile;
use crate::output;
use crate::parallel::{max_threads, THREADS_ENV};
use crate::runner::{replay_check, run_to_dir, ReplayVerdict, RunError, RunSpec};
use crate::suites::{self, BenchOptions, Suite, Summary};

const EXIT_HELP: &str = "\
Exit status of `run`:
  0  every agent reached its goal
  1  fault during the run, or a bad scenario, flag or output path
  2  the run hit max_sim_time without converging";

#[derive(Parser, Debug)]
#[command(name = "fmp", version, about = "Force-based multi-agent motion planning", after_help = EXIT_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one scenario file and write trajectory.jsonl, trajectory.csv and metrics.json.
    #[command(after_help = EXIT_HELP)]
    Run(RunArgs),
    /// Run a built-in benchmark suite and print its table as CSV.
    Bench(BenchArgs),
    /// Write the scenario JSON of a built-in generator.
    Gen(GenArgs),
    /// Re-run a finished run and check that its trajectory.jsonl is reproduced byte for byte.
    ReplayCheck(ReplayArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Neighbors {
    Auto,
    Grid,
    Brute,
}

impl From<Neighbors> for NeighborStrategy {
    fn from(n: Neighbors) -> Self {
        match n {
            Neighbors::Auto => NeighborStrategy::Auto,
            Neighbors::Grid => NeighborStrategy::Grid,
            Neighbors::Brute => NeighborStrategy::BruteForce,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Mirror,
    Diagonal,
}

impl From<Kind> for SwapKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Mirror => SwapKind::Mirror,
            Kind::Diagonal => SwapKind::Diagonal,
        }
    }
}

#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    /// Integration step (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Goal attraction gain.
    #[arg(long)]
    pub c1: Option<f64>,
    /// Damping gain (default derived from c1).
    #[arg(long)]
    pub c2: Option<f64>,
    /// Simulated time budget (s).
    #[arg(long)]
    pub max_sim_time: Option<f64>,
}

#[derive(Args, Debug)]
pub struct Execution {
    /// Evaluation threads per run [default: available cores].
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Neighbour search.
    #[arg(long, value_enum, default_value_t = Neighbors::Auto)]
    pub neighbors: Neighbors,
}

impl Execution {
    fn threads(&self) -> usize {
        self.threads.filter(|&n| n > 0).unwrap_or_else(max_threads)
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Seed of the start-position jitter [default: from the file, else 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Jitter amplitude (m) [default: from the file, else 1e-3].
    #[arg(long)]
    pub jitter: Option<f64>,
    /// Log every k-th step (the first and last step are always logged).
    #[arg(long, default_value_t = 1)]
    pub log_every: u64,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(flatten)]
    pub exec: Execution,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// circle, swap, obstacle, random, formation, scale or scale3d.
    pub suite: Suite,
    /// Agent counts (circle, scale, scale3d).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Number of random cases.
    #[arg(long, default_value_t = suites::RANDOM_CASES)]
    pub cases: usize,
    /// Base seed; random case k uses seed + k.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub kind: Vec<Kind>,
    /// Grid spacings (swap, formation).
    #[arg(long, value_delimiter = ',')]
    pub spacing: Vec<f64>,
    /// Circle spacing as multiples of d.
    #[arg(long, value_delimiter = ',')]
    pub factor: Vec<f64>,
    /// Jitter amplitude (m).
    #[arg(long, default_value_t = fmp_core::plan::DEFAULT_JITTER)]
    pub jitter: f64,
    /// Concurrent runs [default: available cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write table.csv, summary.csv and runs.jsonl here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(flatten)]
    pub exec: Execution,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[command(subcommand)]
    pub generator: Generator,
    /// Output file [default: stdout].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Required separation d* (m) [default: the suite's].
    #[arg(long, global = true)]
    pub d_star: Option<f64>,
    /// Speed limit (m/s) [default: the suite's].
    #[arg(long, global = true)]
    pub v_max: Option<f64>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Subcommand, Debug)]
pub enum Generator {
    /// Agents on a circle heading for antipodal points.
    Circle {
        #[arg(long, default_value_t = suites::CIRCLE_N)]
        n: usize,
        /// Adjacent spacing as a multiple of d.
        #[arg(long, default_value_t = 1.5)]
        factor: f64,
    },
    /// Square grid swap.
    Swap {
        #[arg(long, value_enum, default_value_t = Kind::Mirror)]
        kind: Kind,
        #[arg(long, default_value_t = suites::SWAP_N)]
        n: usize,
        #[arg(long, default_value_t = 9.5)]
        spacing: f64,
    },
    /// Four groups crossing between four discs.
    Obstacle,
    /// Poisson-disc starts and goals in a square.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Circle to double circle.
    Formation {
        #[arg(long, default_value_t = 12.0)]
        spacing: f64,
    },
    /// Poisson-disc starts and goals in a box, per-axis speed limits.
    Random3d {
        #[arg(long, default_value_t = suites::SCALE3D_N)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    /// Directory written by `fmp run`.
    #[arg(long)]
    pub run: PathBuf,
    /// Evaluation threads for the re-run [default: as recorded].
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

fn apply(file: &mut ScenarioFile, o: &Overrides) {
    if let Some(c1) = o.c1 {
        file.c1 = Some(c1);
        if o.c2.is_none() {
            file.c2 = None;
        }
    }
    if o.c2.is_some() {
        file.c2 = o.c2;
    }
    if o.dt.is_some() {
        file.dt = o.dt;
    }
    if o.max_sim_time.is_some() {
        file.max_sim_time = o.max_sim_time;
    }
}

fn cmd_run(a: &RunArgs) -> Result<u8> {
    let mut file = ScenarioFile::load(&a.scenario)?;
    apply(&mut file, &a.overrides);
    let stem = a
        .scenario
        .file_stem()
        .map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
    let mut spec = RunSpec::new(file, stem);
    if let Some(seed) = a.seed {
        spec.seed = seed;
    }
    if let Some(j) = a.jitter {
        spec.jitter = j;
    }
    spec.log_every = a.log_every;
    spec.threads = a.exec.threads();
    spec.strategy = a.exec.neighbors.into();
    let outcome = run_to_dir(&spec, &a.out)?;
    let m = &outcome.metrics;
    eprintln!(
        "{}: {} agents, converged={} transition_time={} steps={} min_separation={} (d*={}) execution_time={:.1} ms",
        outcome.scenario.name,
        outcome.scenario.len(),
        m.converged,
        m.transition_time.map_or("-".into(), |t| format!("{t:.2} s")),
        m.steps,
        m.min_separation,
        outcome.params.d_star,
        m.execution_time
    );
    if let Some(f) = &m.fault {
        eprintln!("fault: {f}");
    }
    Ok(outcome.exit_code())
}

fn cmd_bench(a: &BenchArgs) -> Result<u8> {
    let cores = max_threads();
    let opts = BenchOptions {
        dt: a.overrides.dt,
        c1: a.overrides.c1,
        c2: a.overrides.c2,
        max_sim_time: a.overrides.max_sim_time,
        seed: a.seed,
        jitter: a.jitter,
        n: a.n.clone(),
        cases: a.cases,
        kinds: a.kind.iter().map(|&k| k.into()).collect(),
        spacings: a.spacing.clone(),
        factors: a.factor.clone(),
        jobs: a.jobs.filter(|&j| j > 0).unwrap_or(cores),
        threads: a.exec.threads(),
        strategy: a.exec.neighbors.into(),
    };
    let rows = suites::run_suite(a.suite, &opts)?;
    let summary = Summary::of(&rows);
    let stdout = io::stdout();
    let mut out = stdout.lock();
    suites::write_csv(&rows, &mut out)?;
    writeln!(out)?;
    suites::write_csv(std::slice::from_ref(&summary), &mut out)?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        suites::write_csv(&rows, fs::File::create(dir.join("table.csv"))?)?;
        suites::write_csv(
            std::slice::from_ref(&summary),
            fs::File::create(dir.join("summary.csv"))?,
        )?;
        let mut lines = Vec::new();
        for r in &rows {
            output::to_line(r, &mut lines)?;
        }
        fs::write(dir.join("runs.jsonl"), lines)?;
    }
    Ok(0)
}

/// Scenario and tunables of a generator with command-line overrides.
pub fn generate(a: &GenArgs) -> Result<ScenarioFile> {
    let limit = |default: VelocityLimit| a.v_max.map_or(default, VelocityLimit::Uniform);
    let tuned = |t: Tunables| {
        let mut t = Tunables::new(a.d_star.unwrap_or(t.d_star), limit(t.v_limit));
        if let Some(dt) = a.overrides.dt {
            t.dt = dt;
        }
        if let Some(c1) = a.overrides.c1 {
            t = t.with_gains(c1, a.overrides.c2);
        } else if let Some(c2) = a.overrides.c2 {
            t.c2 = c2;
        }
        t.max_sim_time = a.overrides.max_sim_time;
        t
    };
    let (s, t): (Scenario, Tunables) = match a.generator {
        Generator::Circle { n, factor } => {
            let mut t = tuned(suites::circle_tunables());
            t.dt = a.overrides.dt.unwrap_or(Suite::Circle.default_dt(&t));
            (suites::circle_case(n, factor, &t)?, t)
        }
        Generator::Swap { kind, n, spacing } => {
            let mut t = tuned(suites::swap_tunables());
            t.dt = a.overrides.dt.unwrap_or(Suite::Swap.default_dt(&t));
            (grid_swap_scenario(kind.into(), n, spacing, &t)?, t)
        }
        Generator::Obstacle => {
            let mut t = tuned(obstacle_passage_tunables());
            t.dt = a.overrides.dt.unwrap_or(Suite::Obstacle.default_dt(&t));
            (obstacle_passage_scenario(), t)
        }
        Generator::Random { seed } => {
            let mut t = tuned(suites::random_tunables());
            t.dt = a.overrides.dt.unwrap_or(Suite::Random.default_dt(&t));
            (suites::random_case(seed, &t)?, t)
        }
        Generator::Formation { spacing } => {
            let mut t = tuned(formation_tunables());
            t.dt = a.overrides.dt.unwrap_or(Suite::Formation.default_dt(&t));
            (formation_scenario(suites::FORMATION_N, spacing, &t)?, t)
        }
        Generator::Random3d { n, seed } => {
            let mut t = tuned(suites::scale3d_tunables());
            if a.v_max.is_none() {
                t.v_limit = suites::scale3d_limit();
            }
            t.dt = a.overrides.dt.unwrap_or(Suite::Scale3d.default_dt(&t));
            (suites::scale3d_case(n, seed, &t)?, t)
        }
    };
    Ok(ScenarioFile::from_parts(&s, &t))
}

fn cmd_gen(a: &GenArgs) -> Result<u8> {
    let json = generate(a)?.to_json();
    match &a.out {
        Some(path) => write_file(path, json.as_bytes())?,
        None => io::stdout().lock().write_all(json.as_bytes())?,
    }
    Ok(0)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_replay(a: &ReplayArgs) -> Result<u8> {
    match replay_check(&a.run, a.threads.filter(|&n| n > 0))? {
        ReplayVerdict::Identical { lines } => {
            println!("identical: {lines} lines");
            Ok(0)
        }
        ReplayVerdict::Differs { line } => {
            println!("differs at line {line}");
            Ok(1)
        }
    }
}

/// Parses `args` and runs the command, returning the process exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Gen(a) => cmd_gen(a),
        Command::ReplayCheck(a) => cmd_replay(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            report(&e);
            1
        }
    }
}

fn report(e: &anyhow::Error) {
    if let Some(RunError::Plan(fmp_core::PlanError::Invalid(report))) = e.downcast_ref::<RunError>() {
        eprintln!("error: invalid scenario");
        for line in report.to_string().lines() {
            eprintln!("  {line}");
        }
        return;
    }
    eprintln!("error: {e:#}");
}

pub fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
