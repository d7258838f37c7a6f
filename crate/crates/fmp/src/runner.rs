//! Executes one scenario and writes its artifacts.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use fmp_core::neighbors::NeighborStrategy;
use fmp_core::plan::{prepare, PlanError, PlanOptions, DEFAULT_JITTER};
use fmp_core::sim::{simulate_with, ControlEvaluator, LogOptions, RunResult, Sequential, StepObserver, StepRecord};
use fmp_core::{summarize, ControlParams, RunMetrics, Scenario, Tunables};

use crate::config::{ConfigError, ScenarioFile};
use crate::output::{self, MetricsFile, METRICS_JSON, TRAJECTORY_CSV, TRAJECTORY_JSONL};
use crate::parallel::{RayonEvaluator, WallClock};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("cannot start worker pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot write csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot encode json: {0}")]
    Json(#[from] serde_json::Error),
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Io { context, source }
}

/// Everything that determines a run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub file: ScenarioFile,
    pub name: String,
    pub seed: u64,
    pub jitter: f64,
    /// Log every k-th step; 0 logs nothing.
    pub log_every: u64,
    pub threads: usize,
    pub strategy: NeighborStrategy,
}

impl RunSpec {
    /// Seed and jitter come from the file unless given explicitly.
    pub fn new(file: ScenarioFile, name: impl Into<String>) -> Self {
        Self {
            seed: file.seed.unwrap_or(0),
            jitter: file.jitter.unwrap_or(DEFAULT_JITTER),
            file,
            name: name.into(),
            log_every: 1,
            threads: 1,
            strategy: NeighborStrategy::Auto,
        }
    }

    pub fn from_parts(scenario: &Scenario, t: &Tunables) -> Self {
        Self::new(ScenarioFile::from_parts(scenario, t), scenario.name.clone())
    }

    /// The scenario file as it should be echoed: effective seed and jitter included.
    pub fn echo(&self) -> ScenarioFile {
        let mut f = self.file.clone();
        f.seed = Some(self.seed);
        f.jitter = Some(self.jitter);
        f
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub scenario: Scenario,
    pub params: ControlParams,
    pub metrics: RunMetrics,
    pub result: RunResult,
}

impl Outcome {
    /// Process exit status: 0 converged, 2 not converged, 1 fault.
    pub fn exit_code(&self) -> u8 {
        match (&self.result.fault, self.result.converged) {
            (Some(_), _) => 1,
            (None, true) => 0,
            (None, false) => 2,
        }
    }
}

/// Runs `spec`, streaming logged steps to `observer`.
pub fn execute(spec: &RunSpec, observer: &mut dyn StepObserver) -> Result<Outcome, RunError> {
    let (scenario, tunables) = spec.file.resolve(&spec.name)?;
    let options = PlanOptions {
        jitter: spec.jitter,
        seed: spec.seed,
        strategy: spec.strategy,
    };
    let plan = prepare(&scenario, &tunables, &options)?;
    let evaluator: Box<dyn ControlEvaluator> = if spec.threads > 1 {
        Box::new(RayonEvaluator::new(spec.threads)?)
    } else {
        Box::new(Sequential)
    };
    let log = LogOptions { every: spec.log_every };
    let result = simulate_with(plan.world, evaluator.as_ref(), &mut WallClock::new(), log, observer);
    let metrics = summarize(&result, &scenario, &plan.params);
    Ok(Outcome {
        scenario,
        params: plan.params,
        metrics,
        result,
    })
}

/// Writes both trajectory files as steps arrive. The first I/O error is
/// kept and later steps are skipped.
pub struct ArtifactWriter {
    jsonl: BufWriter<File>,
    csv: csv::Writer<BufWriter<File>>,
    line: Vec<u8>,
    error: Option<RunError>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path, dim: fmp_core::Dim) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(io_err(format!("cannot create {}", dir.display())))?;
        let open = |name: &str| {
            let path = dir.join(name);
            File::create(&path)
                .map(BufWriter::new)
                .map_err(io_err(format!("cannot create {}", path.display())))
        };
        let jsonl = open(TRAJECTORY_JSONL)?;
        let mut csv = csv::Writer::from_writer(open(TRAJECTORY_CSV)?);
        csv.write_record(output::csv_header(dim))?;
        Ok(Self {
            jsonl,
            csv,
            line: Vec::new(),
            error: None,
        })
    }

    fn write(&mut self, record: &StepRecord) -> Result<(), RunError> {
        self.line.clear();
        output::step_line(record, &mut self.line)?;
        self.jsonl.write_all(&self.line).map_err(io_err(TRAJECTORY_JSONL))?;
        output::csv_rows(&mut self.csv, record)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), RunError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.jsonl.flush().map_err(io_err(TRAJECTORY_JSONL))?;
        self.csv.flush().map_err(io_err(TRAJECTORY_CSV))?;
        Ok(())
    }
}

impl StepObserver for ArtifactWriter {
    fn observe(&mut self, record: &StepRecord) {
        if self.error.is_none() {
            if let Err(e) = self.write(record) {
                self.error = Some(e);
            }
        }
    }
}

pub fn metrics_file(spec: &RunSpec, outcome: &Outcome) -> MetricsFile {
    MetricsFile {
        scenario: outcome.scenario.name.clone(),
        metrics: (&outcome.metrics).into(),
        d_star: outcome.params.d_star,
        seed: spec.seed,
        jitter: spec.jitter,
        log_every: spec.log_every,
        threads: spec.threads,
        params: outcome.params.clone(),
        config: spec.echo(),
    }
}

/// Runs `spec` and writes the three artifacts into `dir`.
pub fn run_to_dir(spec: &RunSpec, dir: &Path) -> Result<Outcome, RunError> {
    // Resolve and validate before touching the output directory.
    let (scenario, tunables) = spec.file.resolve(&spec.name)?;
    prepare(
        &scenario,
        &tunables,
        &PlanOptions {
            jitter: spec.jitter,
            seed: spec.seed,
            strategy: spec.strategy,
        },
    )?;
    let mut writer = ArtifactWriter::create(dir, scenario.dim)?;
    let outcome = execute(spec, &mut writer)?;
    writer.finish()?;
    let path = dir.join(METRICS_JSON);
    fs::write(&path, output::to_pretty(&metrics_file(spec, &outcome))?)
        .map_err(io_err(format!("cannot write {}", path.display())))?;
    Ok(outcome)
}

/// Reads the `metrics.json` of a finished run.
pub fn load_metrics(dir: &Path) -> Result<MetricsFile, RunError> {
    let path = dir.join(METRICS_JSON);
    let text = fs::read_to_string(&path).map_err(io_err(format!("cannot read {}", path.display())))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        RunError::Config(ConfigError::Parse {
            origin: path.display().to_string(),
            path: e.path().to_string(),
            line: e.inner().line(),
            column: e.inner().column(),
            message: e.inner().to_string(),
        })
    })
}

/// Result of re-running a logged run and comparing trajectories.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ReplayVerdict {
    Identical {
        lines: u64,
    },
    /// First differing line (1-based), or the shorter length when one log ends early.
    Differs {
        line: u64,
    },
}

/// Compares regenerated trajectory lines against an existing log.
struct ReplayComparer<R> {
    reader: R,
    buf: Vec<u8>,
    existing: Vec<u8>,
    lines: u64,
    mismatch: Option<u64>,
    error: Option<io::Error>,
}

impl<R: BufRead> StepObserver for ReplayComparer<R> {
    fn observe(&mut self, record: &StepRecord) {
        if self.mismatch.is_some() || self.error.is_some() {
            return;
        }
        self.lines += 1;
        self.buf.clear();
        output::step_line(record, &mut self.buf).expect("in-memory json");
        self.existing.clear();
        match self.reader.read_until(b'\n', &mut self.existing) {
            Ok(_) if self.existing == self.buf => {}
            Ok(_) => self.mismatch = Some(self.lines),
            Err(e) => self.error = Some(e),
        }
    }
}

/// Re-runs the run stored in `dir` (optionally with a different thread
/// count) and checks that it reproduces `trajectory.jsonl` byte for byte.
pub fn replay_check(dir: &Path, threads: Option<usize>) -> Result<ReplayVerdict, RunError> {
    let saved = load_metrics(dir)?;
    let mut spec = RunSpec::new(saved.config.clone(), saved.scenario.clone());
    spec.log_every = saved.log_every;
    spec.threads = threads.unwrap_or(saved.threads);
    let path = dir.join(TRAJECTORY_JSONL);
    let file = File::open(&path).map_err(io_err(format!("cannot read {}", path.display())))?;
    let mut cmp = ReplayComparer {
        reader: BufReader::new(file),
        buf: Vec::new(),
        existing: Vec::new(),
        lines: 0,
        mismatch: None,
        error: None,
    };
    execute(&spec, &mut cmp)?;
    if let Some(e) = cmp.error {
        return Err(RunError::Io {
            context: path.display().to_string(),
            source: e,
        });
    }
    if let Some(line) = cmp.mismatch {
        return Ok(ReplayVerdict::Differs { line });
    }
    let mut rest = Vec::new();
    cmp.reader
        .read_to_end(&mut rest)
        .map_err(io_err(path.display().to_string()))?;
    if rest.is_empty() {
        Ok(ReplayVerdict::Identical { lines: cmp.lines })
    } else {
        Ok(ReplayVerdict::Differs { line: cmp.lines + 1 })
    }
}
