//! Run artifacts: `trajectory.jsonl`, `trajectory.csv` and `metrics.json`.
//!
//! JSON floats are written with 17 significant digits so a log can be
//! replayed bit for bit. Non-finite values (for example the obstacle
//! clearance of a run without obstacles) become `null`.

use std::io::{self, Write};

use fmp_core::sim::StepRecord;
use fmp_core::{ControlParams, Dim, RunMetrics, VecD};
use serde::{Deserialize, Serialize};
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::config::ScenarioFile;

pub const TRAJECTORY_JSONL: &str = "trajectory.jsonl";
pub const TRAJECTORY_CSV: &str = "trajectory.csv";
pub const METRICS_JSON: &str = "metrics.json";

/// Wraps a formatter so every `f64` is written as `{:.16e}`.
pub struct Exact<F>(pub F);

impl<F: Formatter> Formatter for Exact<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn end_object_key<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_key(w)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Compact single-line JSON with exact floats.
pub fn to_line<T: Serialize + ?Sized>(value: &T, out: &mut Vec<u8>) -> serde_json::Result<()> {
    let mut ser = serde_json::Serializer::with_formatter(&mut *out, Exact(CompactFormatter));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(())
}

/// Indented JSON with exact floats.
pub fn to_pretty<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Exact(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

/// One line of `trajectory.jsonl`.
#[derive(Serialize)]
pub struct StepLine<'a> {
    pub step: u64,
    pub t: f64,
    pub positions: &'a [VecD],
    pub velocities: &'a [VecD],
    pub min_separation: f64,
    pub max_goal_distance: f64,
    pub hamiltonian: f64,
    pub cap_active: &'a [bool],
}

impl<'a> From<&'a StepRecord> for StepLine<'a> {
    fn from(r: &'a StepRecord) -> Self {
        Self {
            step: r.step,
            t: r.t,
            positions: &r.positions,
            velocities: &r.velocities,
            min_separation: r.min_separation,
            max_goal_distance: r.max_goal_distance,
            hamiltonian: r.hamiltonian,
            cap_active: &r.cap_active,
        }
    }
}

/// Owned counterpart of [`StepLine`] for reading logs back.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct LoggedStep {
    pub step: u64,
    pub t: f64,
    pub positions: Vec<VecD>,
    pub velocities: Vec<VecD>,
    pub min_separation: Option<f64>,
    pub max_goal_distance: f64,
    pub hamiltonian: f64,
    pub cap_active: Vec<bool>,
}

pub fn step_line(record: &StepRecord, out: &mut Vec<u8>) -> serde_json::Result<()> {
    to_line(&StepLine::from(record), out)
}

pub fn csv_header(dim: Dim) -> Vec<&'static str> {
    match dim {
        Dim::Two => vec!["t", "id", "px", "py", "vx", "vy"],
        Dim::Three => vec!["t", "id", "px", "py", "pz", "vx", "vy", "vz"],
    }
}

/// Appends one row per agent of `record`.
pub fn csv_rows<W: Write>(w: &mut csv::Writer<W>, record: &StepRecord) -> csv::Result<()> {
    let t = record.t.to_string();
    let mut row: Vec<String> = Vec::with_capacity(8);
    for (id, (p, v)) in record.positions.iter().zip(&record.velocities).enumerate() {
        row.clear();
        row.push(t.clone());
        row.push(id.to_string());
        row.extend(p.components().iter().map(f64::to_string));
        row.extend(v.components().iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    Ok(())
}

/// Contents of `metrics.json`: the run summary plus everything needed to
/// reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsFile {
    pub scenario: String,
    #[serde(flatten)]
    pub metrics: RunMetricsJson,
    pub d_star: f64,
    pub seed: u64,
    pub jitter: f64,
    pub log_every: u64,
    pub threads: usize,
    /// Fully resolved parameters, including derived `d`, `r` and `xi`.
    pub params: ControlParams,
    /// Input scenario as run, with command-line overrides applied.
    pub config: ScenarioFile,
}

/// [`RunMetrics`] with non-finite values mapped to `None` so they read back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetricsJson {
    pub transition_time: Option<f64>,
    pub execution_time: f64,
    pub min_separation: Option<f64>,
    pub min_obstacle_clearance: Option<f64>,
    pub lbt_opt: f64,
    pub converged: bool,
    pub deadlock: bool,
    pub livelock: bool,
    pub steps: u64,
    pub max_hamiltonian_increase: Option<f64>,
    pub energy_violations: u64,
    pub max_limit_excess: Option<f64>,
    pub final_max_speed: f64,
    pub final_max_goal_distance: f64,
    pub fault: Option<String>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl From<&RunMetrics> for RunMetricsJson {
    fn from(m: &RunMetrics) -> Self {
        Self {
            transition_time: m.transition_time,
            execution_time: m.execution_time,
            min_separation: finite(m.min_separation),
            min_obstacle_clearance: finite(m.min_obstacle_clearance),
            lbt_opt: m.lbt_opt,
            converged: m.converged,
            deadlock: m.deadlock,
            livelock: m.livelock,
            steps: m.steps,
            max_hamiltonian_increase: finite(m.max_hamiltonian_increase),
            energy_violations: m.energy_violations,
            max_limit_excess: finite(m.max_limit_excess),
            final_max_speed: m.final_max_speed,
            final_max_goal_distance: m.final_max_goal_distance,
            fault: m.fault.clone(),
        }
    }
}
