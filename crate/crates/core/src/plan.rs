//! From a scenario and tunables to a ready-to-run [`World`]: assignment,
//! parameter derivation, validation and initial state.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assignment::{hungarian_assign, Assignment, AssignmentError};
use crate::metrics::lbt_opt_for;
use crate::model::{validate_scenario, ControlParams, ParamError, Scenario, Tunables, ValidationReport, Violation};
use crate::neighbors::NeighborStrategy;
use crate::sim::World;
use crate::vector::VecD;

/// Default amplitude of the start-position perturbation (m).
pub const DEFAULT_JITTER: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanOptions {
    /// Each start coordinate is offset by a uniform draw in `[−jitter, jitter]`.
    /// Exactly symmetric layouts (head-on swaps along a line, antipodal
    /// circles) are equilibria of the force law; the offset lets them resolve.
    /// Zero disables it.
    pub jitter: f64,
    pub seed: u64,
    pub strategy: NeighborStrategy,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self {
            jitter: DEFAULT_JITTER,
            seed: 0,
            strategy: NeighborStrategy::Auto,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("assignment failed: {0}")]
    Assignment(#[from] AssignmentError),
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamError),
    #[error("invalid scenario:\n{0}")]
    Invalid(ValidationReport),
    #[error("jitter must be finite and non-negative, got {0}")]
    BadJitter(f64),
}

/// A prepared run.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub world: World,
    pub assignment: Assignment,
    pub params: ControlParams,
    /// Straight-line lower bound on the transition time.
    pub lbt: f64,
}

/// Largest squared start-to-target distance.
pub fn max_sq_distance(starts: &[VecD], targets: &[VecD]) -> f64 {
    starts
        .iter()
        .zip(targets)
        .map(|(s, t)| (*s - *t).norm_sq())
        .fold(0.0, f64::max)
}

fn assign(scenario: &Scenario) -> Result<Assignment, PlanError> {
    let n = scenario.starts.len();
    if n == 0 || n != scenario.goals.len() {
        let mut report = ValidationReport::default();
        if n == 0 {
            report.violations.push(Violation::Empty);
        }
        if n != scenario.goals.len() {
            report.violations.push(Violation::CountMismatch {
                starts: n,
                goals: scenario.goals.len(),
            });
        }
        return Err(PlanError::Invalid(report));
    }
    if scenario.preassigned {
        let perm: Vec<usize> = (0..n).collect();
        let total_cost = crate::assignment::assignment_cost(&scenario.starts, &scenario.goals, &perm)?;
        Ok(Assignment { perm, total_cost })
    } else {
        Ok(hungarian_assign(&scenario.starts, &scenario.goals)?)
    }
}

/// Resolved parameters for a scenario without building the world.
pub fn resolve_params(scenario: &Scenario, tunables: &Tunables) -> Result<(Assignment, ControlParams, f64), PlanError> {
    let assignment = assign(scenario)?;
    let targets = assignment.targets(&scenario.goals);
    let xi = max_sq_distance(&scenario.starts, &targets);
    let lbt = lbt_opt_for(&scenario.starts, &targets, &tunables.v_limit);
    let params = ControlParams::derive(tunables, scenario.dim, scenario.len(), xi, lbt)?;
    Ok((assignment, params, lbt))
}

/// Assigns goals (unless preassigned), derives `d`, `r` and `r_hat` from the
/// scenario, validates spacing and builds the initial world with zero
/// velocities.
pub fn prepare(scenario: &Scenario, tunables: &Tunables, options: &PlanOptions) -> Result<Plan, PlanError> {
    if !(options.jitter.is_finite() && options.jitter >= 0.0) {
        return Err(PlanError::BadJitter(options.jitter));
    }
    let (assignment, params, lbt) = resolve_params(scenario, tunables)?;
    let report = validate_scenario(scenario, &params);
    if !report.is_ok() {
        return Err(PlanError::Invalid(report));
    }
    let targets = assignment.targets(&scenario.goals);
    let starts = if options.jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let j = options.jitter;
        scenario
            .starts
            .iter()
            .map(|s| {
                let mut q = *s;
                for axis in 0..s.dim().count() {
                    let offset: f64 = rng.random_range(-j..=j);
                    q = q.with(axis, s.components()[axis] + offset);
                }
                q
            })
            .collect()
    } else {
        scenario.starts.clone()
    };
    let world = World::new(starts, targets, scenario.obstacles.clone(), params.clone()).with_strategy(options.strategy);
    Ok(Plan {
        world,
        assignment,
        params,
        lbt,
    })
}
