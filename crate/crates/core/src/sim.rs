//! Synchronous stepping engine.
//!
//! Each step freezes the current state, evaluates every agent's control input
//! against that snapshot (in any order, possibly in parallel), then integrates:
//!
//! ```text
//! v ← cap(v + u·Δt)
//! p ← p + v·Δt        (new velocity)
//! ```
//!
//! Obstacles move along their scripted velocity and the clock advances. The
//! run stops as soon as every agent is within `end_max_dis` of its target or
//! the time budget is spent.

use alloc::vec::Vec;

use crate::controller::{cap_velocity, control_input, Fault, ForceBreakdown};
use crate::energy::{self, Hamiltonian};
use crate::model::{AgentState, ControlParams, Obstacle};
use crate::neighbors::{closest_pair, neighbors, NeighborStrategy, NeighborTable};
use crate::vector::VecD;

/// Frozen system state plus the parameters that drive it.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub time: f64,
    pub steps: u64,
    pub positions: Vec<VecD>,
    pub velocities: Vec<VecD>,
    pub targets: Vec<VecD>,
    pub obstacles: Vec<Obstacle>,
    pub params: ControlParams,
    pub strategy: NeighborStrategy,
}

impl World {
    /// Agents at rest at `positions`, heading for `targets`.
    pub fn new(positions: Vec<VecD>, targets: Vec<VecD>, obstacles: Vec<Obstacle>, params: ControlParams) -> Self {
        assert_eq!(positions.len(), targets.len(), "one target per agent");
        let velocities = positions.iter().map(|p| VecD::zero(p.dim())).collect();
        Self {
            time: 0.0,
            steps: 0,
            positions,
            velocities,
            targets,
            obstacles,
            params,
            strategy: NeighborStrategy::Auto,
        }
    }

    pub fn with_strategy(mut self, strategy: NeighborStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn agent(&self, i: usize) -> AgentState {
        AgentState {
            position: self.positions[i],
            velocity: self.velocities[i],
        }
    }

    pub fn positions(&self) -> &[VecD] {
        &self.positions
    }

    /// Agents within `r` of each other under the world's neighbour strategy.
    pub fn neighbor_table(&self) -> NeighborTable {
        neighbors(&self.positions, self.params.r, self.strategy)
    }

    /// `max_i ‖p_i − T_i‖`.
    pub fn max_goal_distance(&self) -> f64 {
        self.positions
            .iter()
            .zip(&self.targets)
            .map(|(p, t)| p.dist(t))
            .fold(0.0, f64::max)
    }

    pub fn converged(&self) -> bool {
        self.max_goal_distance() < self.params.end_max_dis
    }

    /// Control inputs of all agents, in index order.
    pub fn controls(&self, table: &NeighborTable) -> Result<Vec<ForceBreakdown>, Fault> {
        (0..self.len()).map(|i| control_input(i, self, table.of(i))).collect()
    }

    /// Integrates one step with precomputed controls. Returns, per agent,
    /// whether the velocity cap changed the integrated velocity.
    pub fn advance(&mut self, controls: &[ForceBreakdown]) -> Result<Vec<bool>, Fault> {
        assert_eq!(controls.len(), self.len());
        let dt = self.params.dt;
        let limit = self.params.v_limit;
        let mut capped = Vec::with_capacity(self.len());
        for (agent, u) in controls.iter().enumerate() {
            let raw = self.velocities[agent] + u.total * dt;
            let v = cap_velocity(raw, &limit);
            let p = self.positions[agent] + v * dt;
            if !(v.is_finite() && p.is_finite()) {
                return Err(Fault::NonFinite { agent });
            }
            capped.push(v != raw);
            self.velocities[agent] = v;
            self.positions[agent] = p;
        }
        let t = self.time;
        for o in &mut self.obstacles {
            let v = o.velocity_at(t);
            o.center += v * dt;
        }
        self.steps += 1;
        self.time = self.steps as f64 * dt;
        Ok(capped)
    }

    /// One sequential step.
    pub fn step(&mut self) -> Result<Vec<bool>, Fault> {
        let table = self.neighbor_table();
        let controls = self.controls(&table)?;
        self.advance(&controls)
    }
}

/// Evaluates the control inputs of every agent against a frozen world.
///
/// Implementations must return the same values as [`World::controls`]; on
/// failure they must report the fault of the lowest-indexed failing agent.
pub trait ControlEvaluator {
    fn evaluate(&self, world: &World, table: &NeighborTable) -> Result<Vec<ForceBreakdown>, Fault>;
}

/// Single-threaded evaluation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl ControlEvaluator for Sequential {
    fn evaluate(&self, world: &World, table: &NeighborTable) -> Result<Vec<ForceBreakdown>, Fault> {
        world.controls(table)
    }
}

/// Monotonic nanosecond clock used to time the stepping loop.
pub trait Clock {
    fn now_ns(&mut self) -> u64;
}

/// Clock that never advances, for environments without a timer.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn now_ns(&mut self) -> u64 {
        0
    }
}

/// Full state of one logged step.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub t: f64,
    pub positions: Vec<VecD>,
    pub velocities: Vec<VecD>,
    pub min_separation: f64,
    pub max_goal_distance: f64,
    pub hamiltonian: f64,
    pub cap_active: Vec<bool>,
}

/// Scalar diagnostics kept for every step, logged or not.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSummary {
    pub step: u64,
    pub t: f64,
    /// `+∞` with fewer than two agents.
    pub min_separation: f64,
    pub max_goal_distance: f64,
    pub max_speed: f64,
    /// Largest overshoot of the velocity limit over all agents (≤ 0 when held).
    pub limit_excess: f64,
    /// `+∞` without obstacles.
    pub min_obstacle_clearance: f64,
    pub hamiltonian: Hamiltonian,
    pub caps_active: usize,
}

/// Receives logged steps as the run progresses.
pub trait StepObserver {
    fn observe(&mut self, record: &StepRecord);
}

impl StepObserver for Vec<StepRecord> {
    fn observe(&mut self, record: &StepRecord) {
        self.push(record.clone());
    }
}

/// Observer that drops everything.
#[derive(Clone, Copy, Debug, Default)]
pub struct Discard;

impl StepObserver for Discard {
    fn observe(&mut self, _record: &StepRecord) {}
}

/// Which steps reach the observer: step 0, every `every`-th step, and the
/// final step. `every == 0` logs nothing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogOptions {
    pub every: u64,
}

impl Default for LogOptions {
    fn default() -> Self {
        Self { every: 1 }
    }
}

/// Fault with the step at which it surfaced.
#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("step {step}: {fault}")]
pub struct StepFault {
    pub step: u64,
    pub fault: Fault,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Logged steps (empty when streamed to an observer).
    pub trajectory: Vec<StepRecord>,
    /// Diagnostics of every step, starting with the initial state.
    pub series: Vec<StepSummary>,
    pub converged: bool,
    pub fault: Option<StepFault>,
    pub final_world: World,
    /// Wall-clock time of the stepping loop, diagnostics and logging excluded.
    pub execution_ns: u64,
}

impl RunResult {
    pub fn steps(&self) -> u64 {
        self.final_world.steps
    }

    /// Simulated time to convergence.
    pub fn transition_time(&self) -> Option<f64> {
        self.converged.then_some(self.final_world.time)
    }
}

/// `hint` is a guess at the closest-pair distance; it only affects speed.
fn summarize_state(world: &World, table: &NeighborTable, caps: &[bool], hint: f64) -> StepSummary {
    let p = &world.params;
    // Every pair closer than r is in the table, so the table minimum is exact
    // whenever it is non-empty.
    let mut min_sep = f64::INFINITY;
    for (i, j) in table.pairs() {
        min_sep = min_sep.min(world.positions[i].dist(&world.positions[j]));
    }
    if min_sep == f64::INFINITY {
        let cell = if hint.is_finite() { hint.max(p.r) } else { 2.0 * p.r };
        if let Some(pair) = closest_pair(&world.positions, cell) {
            min_sep = pair.distance;
        }
    }
    let mut max_speed: f64 = 0.0;
    let mut limit_excess = f64::NEG_INFINITY;
    for v in &world.velocities {
        max_speed = max_speed.max(v.norm());
        limit_excess = limit_excess.max(p.v_limit.excess(v));
    }
    let mut min_clearance = f64::INFINITY;
    for q in &world.positions {
        for o in &world.obstacles {
            min_clearance = min_clearance.min(o.surface_distance(q));
        }
    }
    StepSummary {
        step: world.steps,
        t: world.time,
        min_separation: min_sep,
        max_goal_distance: world.max_goal_distance(),
        max_speed,
        limit_excess,
        min_obstacle_clearance: min_clearance,
        hamiltonian: energy::hamiltonian_in(world, table),
        caps_active: caps.iter().filter(|c| **c).count(),
    }
}

fn record_of(world: &World, summary: &StepSummary, caps: &[bool]) -> StepRecord {
    StepRecord {
        step: world.steps,
        t: world.time,
        positions: world.positions.clone(),
        velocities: world.velocities.clone(),
        min_separation: summary.min_separation,
        max_goal_distance: summary.max_goal_distance,
        hamiltonian: summary.hamiltonian.total,
        cap_active: caps.to_vec(),
    }
}

/// Runs the world until convergence, timeout or fault, streaming logged
/// steps to `observer`.
pub fn simulate_with<E, C, O>(
    mut world: World,
    evaluator: &E,
    clock: &mut C,
    log: LogOptions,
    observer: &mut O,
) -> RunResult
where
    E: ControlEvaluator + ?Sized,
    C: Clock + ?Sized,
    O: StepObserver + ?Sized,
{
    let mut series = Vec::new();
    let mut execution_ns = 0u64;
    let mut caps = alloc::vec![false; world.len()];
    let mut table = world.neighbor_table();
    let logged = |step: u64, last: bool| log.every > 0 && (step % log.every == 0 || last);

    let mut converged = world.converged();
    let mut fault = None;
    let timed_out = |w: &World| w.time >= w.params.max_sim_time;
    let summary = summarize_state(&world, &table, &caps, f64::INFINITY);
    // No pair closes by more than 2·v·Δt in one step, so the last minimum
    // plus that margin bounds the next one.
    let drift = 2.0 * world.params.v_max() * world.params.dt * (1.0 + 1e-9);
    let mut last_min = summary.min_separation;
    if logged(0, converged || timed_out(&world)) {
        observer.observe(&record_of(&world, &summary, &caps));
    }
    series.push(summary);

    while !converged && !timed_out(&world) {
        let started = clock.now_ns();
        let outcome = evaluator
            .evaluate(&world, &table)
            .and_then(|controls| world.advance(&controls));
        let next_table = world.neighbor_table();
        converged = world.converged();
        execution_ns += clock.now_ns().saturating_sub(started);
        match outcome {
            Ok(c) => caps = c,
            Err(f) => {
                fault = Some(StepFault {
                    step: world.steps,
                    fault: f,
                });
                break;
            }
        }
        table = next_table;
        let summary = summarize_state(&world, &table, &caps, last_min + drift);
        last_min = summary.min_separation;
        if logged(world.steps, converged || timed_out(&world)) {
            observer.observe(&record_of(&world, &summary, &caps));
        }
        series.push(summary);
    }

    RunResult {
        trajectory: Vec::new(),
        series,
        converged: converged && fault.is_none(),
        fault,
        final_world: world,
        execution_ns,
    }
}

/// Runs the world and keeps the logged steps in the result.
pub fn simulate<E, C>(world: World, evaluator: &E, clock: &mut C, log: LogOptions) -> RunResult
where
    E: ControlEvaluator + ?Sized,
    C: Clock + ?Sized,
{
    let mut trajectory = Vec::new();
    let mut result = simulate_with(world, evaluator, clock, log, &mut trajectory);
    result.trajectory = trajectory;
    result
}
