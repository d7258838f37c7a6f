//! Force-based motion planning for large agent teams.
//!
//! Every agent steers itself with a force built from three pieces: quadratic
//! repulsion from nearby agents, repulsion from nearby obstacle surfaces and a
//! PD pull towards its assigned goal. Velocities are hard-capped after each
//! integration step. The communication radius is sized from the required
//! separation, the team size and the speed limit so that no pair ends up
//! closer than the requested minimum.
//!
//! The crate is `no_std` with `alloc`. Wall-clock timing and parallel force
//! evaluation plug in through [`sim::Clock`] and [`sim::ControlEvaluator`].

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod assignment;
pub mod controller;
pub mod energy;
mod math;
pub mod metrics;
pub mod model;
pub mod neighbors;
pub mod plan;
pub mod scenarios;
pub mod sim;
pub mod vector;

pub use assignment::{assignment_cost, hungarian_assign, Assignment, AssignmentError};
pub use controller::{
    cap_velocity, comm_radius, control_input, d_from_dstar, navigational_feedback, obstacle_force, repulsive_force,
    repulsive_phi, Fault, ForceBreakdown,
};
pub use energy::{hamiltonian, Hamiltonian};
pub use metrics::{detect_deadlock, lbt_opt, summarize, RunMetrics};
pub use model::{
    validate_scenario, AgentState, ControlParams, Obstacle, ParamError, Scenario, Tunables, ValidationReport,
    VelocityLimit, VelocitySchedule, Violation,
};
pub use plan::{prepare, Plan, PlanError, PlanOptions};
pub use sim::{simulate, simulate_with, LogOptions, RunResult, StepRecord, StepSummary, World};
pub use vector::{distance, Dim, GeometryError, VecD};
