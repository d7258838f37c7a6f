//! Run analysis: transition time, separation, deadlock and the straight-line
//! lower bound on the transition time.

use alloc::vec::Vec;

use crate::model::{ControlParams, Scenario, VelocityLimit};
use crate::neighbors::closest_pair_brute_force;
use crate::sim::{RunResult, StepRecord, StepSummary};
use crate::vector::{Dim, VecD};

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("trajectory is empty")]
    EmptyTrajectory,
}

/// Summary of one run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunMetrics {
    /// Simulated seconds until every agent was within `end_max_dis` of its
    /// target; `None` if that never happened.
    pub transition_time: Option<f64>,
    /// Wall-clock milliseconds spent stepping.
    pub execution_time: f64,
    pub min_separation: f64,
    /// Closest approach to an obstacle surface; `+∞` without obstacles.
    pub min_obstacle_clearance: f64,
    pub lbt_opt: f64,
    pub converged: bool,
    pub deadlock: bool,
    pub livelock: bool,
    pub steps: u64,
    /// Largest one-step increase of the Hamiltonian (negative if it never rose).
    pub max_hamiltonian_increase: f64,
    /// Steps whose Hamiltonian increase exceeded [`energy_tolerance`].
    pub energy_violations: u64,
    /// Largest overshoot of the velocity limit seen at any step.
    pub max_limit_excess: f64,
    pub final_max_speed: f64,
    pub final_max_goal_distance: f64,
    pub fault: Option<alloc::string::String>,
}

/// `max_i ‖F_i − J_i‖ / v_max`.
pub fn lbt_opt(starts: &[VecD], goals: &[VecD], v_max: f64) -> f64 {
    starts
        .iter()
        .zip(goals)
        .map(|(s, g)| s.dist(g) / v_max)
        .fold(0.0, f64::max)
}

/// Straight-line lower bound under a velocity limit. With per-axis limits in
/// 3D the horizontal and vertical legs are bounded separately.
pub fn lbt_opt_for(starts: &[VecD], goals: &[VecD], limit: &VelocityLimit) -> f64 {
    match *limit {
        VelocityLimit::Uniform(v) => lbt_opt(starts, goals, v),
        VelocityLimit::PerAxis { horizontal, up, down } => starts
            .iter()
            .zip(goals)
            .map(|(s, g)| {
                let delta = *g - *s;
                match delta.dim() {
                    Dim::Two => delta.norm() / horizontal,
                    Dim::Three => {
                        let h = crate::math::sqrt(delta.x() * delta.x() + delta.y() * delta.y()) / horizontal;
                        let dz = delta.z();
                        let vert = if dz >= 0.0 { dz / up } else { -dz / down };
                        h.max(vert)
                    }
                }
            })
            .fold(0.0, f64::max),
    }
}

/// Smallest pairwise distance over a logged trajectory, recomputed from the
/// logged positions by scanning all pairs, plus the per-step series.
/// A single agent gives `+∞`.
pub fn min_separation(trajectory: &[StepRecord]) -> Result<(f64, Vec<f64>), MetricsError> {
    if trajectory.is_empty() {
        return Err(MetricsError::EmptyTrajectory);
    }
    let series: Vec<f64> = trajectory
        .iter()
        .map(|r| closest_pair_brute_force(&r.positions).map_or(f64::INFINITY, |p| p.distance))
        .collect();
    let min = series.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((min, series))
}

/// Allowed one-step Hamiltonian increase from a state with energy `h`.
pub fn energy_tolerance(h: f64, dt: f64) -> f64 {
    (1e-3 * dt * h.abs()).max(1e-6)
}

/// Thresholds of the stall detector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeadlockCriteria {
    /// Length of the trailing window (s).
    pub window: f64,
    /// Every speed in the window must stay below this fraction of `v_max`.
    pub speed_fraction: f64,
    /// Fraction of the run inspected for lack of progress.
    pub livelock_tail: f64,
}

impl Default for DeadlockCriteria {
    fn default() -> Self {
        Self {
            window: 5.0,
            speed_fraction: 0.01,
            livelock_tail: 0.25,
        }
    }
}

fn trailing(series: &[StepSummary], span: f64) -> Option<&[StepSummary]> {
    let last = series.last()?;
    let from = last.t - span;
    if series[0].t > from + 1e-9 {
        return None;
    }
    let start = series.partition_point(|s| s.t < from - 1e-9);
    Some(&series[start..])
}

/// A run is deadlocked when it did not converge and, over the trailing
/// window, every agent was nearly still while some agent stayed away from its
/// target. Runs shorter than the window are never classified as deadlocked.
pub fn detect_deadlock_in(
    series: &[StepSummary],
    converged: bool,
    params: &ControlParams,
    c: &DeadlockCriteria,
) -> bool {
    if converged {
        return false;
    }
    let Some(tail) = trailing(series, c.window) else {
        return false;
    };
    let still = c.speed_fraction * params.v_max();
    tail.iter()
        .all(|s| s.max_speed < still && s.max_goal_distance >= params.end_max_dis)
}

pub fn detect_deadlock(run: &RunResult, params: &ControlParams) -> bool {
    detect_deadlock_in(&run.series, run.converged, params, &DeadlockCriteria::default())
}

/// Not converged, not deadlocked, and the largest goal distance at the end
/// is no smaller than at the start of the final `livelock_tail` of the run.
pub fn detect_livelock_in(
    series: &[StepSummary],
    converged: bool,
    params: &ControlParams,
    c: &DeadlockCriteria,
) -> bool {
    if converged || series.len() < 2 || detect_deadlock_in(series, converged, params, c) {
        return false;
    }
    let last = series[series.len() - 1];
    let Some(tail) = trailing(series, c.livelock_tail * last.t) else {
        return false;
    };
    last.max_goal_distance >= tail[0].max_goal_distance
}

/// Aggregates a finished run. Pure: every field comes from the run log.
pub fn summarize(run: &RunResult, scenario: &Scenario, params: &ControlParams) -> RunMetrics {
    let criteria = DeadlockCriteria::default();
    let series = &run.series;
    let mut min_separation = f64::INFINITY;
    let mut min_clearance = f64::INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    for s in series {
        min_separation = min_separation.min(s.min_separation);
        min_clearance = min_clearance.min(s.min_obstacle_clearance);
        max_excess = max_excess.max(s.limit_excess);
    }
    let mut max_increase = f64::NEG_INFINITY;
    let mut violations = 0;
    for w in series.windows(2) {
        let (h0, h1) = (w[0].hamiltonian.total, w[1].hamiltonian.total);
        let inc = h1 - h0;
        max_increase = max_increase.max(inc);
        if inc > energy_tolerance(h0, params.dt) {
            violations += 1;
        }
    }
    let last = series.last();
    RunMetrics {
        transition_time: run.transition_time(),
        execution_time: run.execution_ns as f64 / 1e6,
        min_separation,
        min_obstacle_clearance: min_clearance,
        lbt_opt: lbt_opt_for(&scenario.starts, &run.final_world.targets, &params.v_limit),
        converged: run.converged,
        deadlock: detect_deadlock_in(series, run.converged, params, &criteria),
        livelock: detect_livelock_in(series, run.converged, params, &criteria),
        steps: run.steps(),
        max_hamiltonian_increase: max_increase,
        energy_violations: violations,
        max_limit_excess: max_excess,
        final_max_speed: last.map_or(0.0, |s| s.max_speed),
        final_max_goal_distance: last.map_or(0.0, |s| s.max_goal_distance),
        fault: run.fault.map(|f| alloc::format!("{f}")),
    }
}
