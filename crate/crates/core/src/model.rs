//! Domain model shared by every stage: agents, limits, obstacles, scenarios
//! and the resolved control parameters of a run.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::controller::{comm_radius, d_from_dstar, obstacle_range};
use crate::vector::{Dim, VecD};

/// Default repulsive gradient for agents and obstacles.
pub const DEFAULT_RHO: f64 = 7.5e6;
/// Default time step (s).
pub const DEFAULT_DT: f64 = 0.02;
/// Default termination threshold on the largest goal distance (m).
pub const DEFAULT_END_MAX_DIS: f64 = 0.05;
/// Default position gain (s⁻²).
pub const DEFAULT_C1: f64 = 10.0;
/// Default agent-to-obstacle clearance (m).
pub const DEFAULT_OBSTACLE_CLEARANCE: f64 = 0.5;
/// Floor of the default simulated-time budget (s).
pub const MIN_SIM_TIME: f64 = 60.0;

/// Default velocity gain `2.5 √c1`: slightly overdamped, so the slow mode of
/// the navigational PD law decays at `√c1 / 2` and agents settle with
/// speeds below `√c1 / 2 · end_max_dis` instead of overshooting.
pub fn default_c2(c1: f64) -> f64 {
    2.5 * crate::math::sqrt(c1)
}

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AgentState {
    pub position: VecD,
    pub velocity: VecD,
}

impl AgentState {
    /// Agent at rest.
    pub fn at_rest(position: VecD) -> Self {
        Self {
            position,
            velocity: VecD::zero(position.dim()),
        }
    }
}

/// Hard velocity bound applied after every integration step.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum VelocityLimit {
    /// Bound on the speed ‖v‖.
    Uniform(f64),
    /// Horizontal speed bound plus separate climb and descent rates, all positive
    /// magnitudes. Planar runs only use `horizontal`.
    PerAxis { horizontal: f64, up: f64, down: f64 },
}

impl VelocityLimit {
    /// The single speed used to size interaction margins: the largest magnitude.
    pub fn effective_max(&self) -> f64 {
        match *self {
            VelocityLimit::Uniform(v) => v,
            VelocityLimit::PerAxis { horizontal, up, down } => horizontal.max(up).max(down),
        }
    }

    pub fn is_valid(&self) -> bool {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        match *self {
            VelocityLimit::Uniform(v) => ok(v),
            VelocityLimit::PerAxis { horizontal, up, down } => ok(horizontal) && ok(up) && ok(down),
        }
    }

    /// Whether `v` satisfies the limit with slack `tol`.
    pub fn admits(&self, v: &VecD, tol: f64) -> bool {
        self.excess(v) <= tol
    }

    /// Largest amount by which `v` exceeds any of its bounds (≤ 0 when admitted).
    pub fn excess(&self, v: &VecD) -> f64 {
        match *self {
            VelocityLimit::Uniform(max) => v.norm() - max,
            VelocityLimit::PerAxis { horizontal, up, down } => match v.dim() {
                Dim::Two => v.norm() - horizontal,
                Dim::Three => {
                    let h = crate::math::sqrt(v.x() * v.x() + v.y() * v.y()) - horizontal;
                    h.max(v.z() - up).max(-v.z() - down)
                }
            },
        }
    }
}

/// Piecewise-constant velocity program of an obstacle centre.
#[derive(Clone, Debug, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VelocitySchedule {
    /// `(start time, velocity)` pairs sorted by start time. Before the first
    /// entry the obstacle is at rest.
    pub segments: Vec<(f64, VecD)>,
}

impl VelocitySchedule {
    pub fn constant(velocity: VecD) -> Self {
        Self {
            segments: alloc::vec![(0.0, velocity)],
        }
    }

    pub fn velocity_at(&self, t: f64, dim: Dim) -> VecD {
        self.segments
            .iter()
            .take_while(|(start, _)| *start <= t)
            .last()
            .map(|(_, v)| *v)
            .unwrap_or(VecD::zero(dim))
    }

    pub fn is_static(&self) -> bool {
        self.segments.iter().all(|(_, v)| v.norm_sq() == 0.0)
    }
}

/// Sphere (3D) or disc (2D) obstacle.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Obstacle {
    pub center: VecD,
    pub radius: f64,
    pub schedule: VelocitySchedule,
}

impl Obstacle {
    pub fn fixed(center: VecD, radius: f64) -> Self {
        Self {
            center,
            radius,
            schedule: VelocitySchedule::default(),
        }
    }

    pub fn moving(center: VecD, radius: f64, velocity: VecD) -> Self {
        Self {
            center,
            radius,
            schedule: VelocitySchedule::constant(velocity),
        }
    }

    pub fn velocity_at(&self, t: f64) -> VecD {
        self.schedule.velocity_at(t, self.center.dim())
    }

    /// Distance from `p` to the closest surface point; negative inside.
    #[inline]
    pub fn surface_distance(&self, p: &VecD) -> f64 {
        self.center.dist(p) - self.radius
    }
}

/// A planning problem: start set, goal set, obstacles.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scenario {
    pub name: String,
    pub dim: Dim,
    pub starts: Vec<VecD>,
    pub goals: Vec<VecD>,
    pub obstacles: Vec<Obstacle>,
    /// `goals[i]` already belongs to agent `i`; assignment is skipped.
    pub preassigned: bool,
}

impl Scenario {
    pub fn new(name: impl Into<String>, dim: Dim, starts: Vec<VecD>, goals: Vec<VecD>) -> Self {
        Self {
            name: name.into(),
            dim,
            starts,
            goals,
            obstacles: Vec::new(),
            preassigned: false,
        }
    }

    pub fn with_obstacles(mut self, obstacles: Vec<Obstacle>) -> Self {
        self.obstacles = obstacles;
        self
    }

    pub fn preassigned(mut self, yes: bool) -> Self {
        self.preassigned = yes;
        self
    }

    pub fn len(&self) -> usize {
        self.starts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }
}

/// User-facing knobs. Anything left `None` is derived when the run is prepared.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tunables {
    pub d_star: f64,
    pub v_limit: VelocityLimit,
    pub rho: f64,
    pub c1: f64,
    pub c2: f64,
    pub dt: f64,
    pub end_max_dis: f64,
    pub max_sim_time: Option<f64>,
    /// Override for the largest squared start-to-goal distance.
    pub xi: Option<f64>,
    pub rho_hat: Option<f64>,
    pub r_hat: Option<f64>,
    /// Required agent-to-obstacle clearance used to size `r_hat`.
    pub d_hat_star: f64,
}

impl Tunables {
    pub fn new(d_star: f64, v_limit: VelocityLimit) -> Self {
        Self {
            d_star,
            v_limit,
            rho: DEFAULT_RHO,
            c1: DEFAULT_C1,
            c2: default_c2(DEFAULT_C1),
            dt: DEFAULT_DT,
            end_max_dis: DEFAULT_END_MAX_DIS,
            max_sim_time: None,
            xi: None,
            rho_hat: None,
            r_hat: None,
            d_hat_star: DEFAULT_OBSTACLE_CLEARANCE,
        }
    }

    /// Sets `c1` and resets `c2` to the default derived from it.
    pub fn with_gains(mut self, c1: f64, c2: Option<f64>) -> Self {
        self.c1 = c1;
        self.c2 = c2.unwrap_or_else(|| default_c2(c1));
        self
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParamError {
    #[error("parameter `{name}` must be positive and finite, got {value}")]
    NotPositive { name: &'static str, value: f64 },
    #[error("velocity limit must have strictly positive magnitudes")]
    BadVelocityLimit,
    #[error("expected 0 < d* <= d < r, got d* = {d_star}, d = {d}, r = {r}")]
    Ordering { d_star: f64, d: f64, r: f64 },
}

/// Fully resolved parameters of one run, including derived `d`, `r`, `r_hat`.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ControlParams {
    pub dim: Dim,
    pub n: usize,
    pub d_star: f64,
    pub d: f64,
    pub r: f64,
    pub rho: f64,
    pub c1: f64,
    pub c2: f64,
    pub v_limit: VelocityLimit,
    pub dt: f64,
    pub end_max_dis: f64,
    pub max_sim_time: f64,
    pub xi: f64,
    pub rho_hat: f64,
    pub r_hat: f64,
    pub d_hat_star: f64,
}

impl ControlParams {
    /// Resolves tunables for `n` agents in `dim` dimensions.
    ///
    /// `xi` is the largest squared start-to-goal distance (ignored if the
    /// tunables override it); `lbt` is the straight-line lower bound on the
    /// transition time, used to size the default time budget.
    pub fn derive(t: &Tunables, dim: Dim, n: usize, xi: f64, lbt: f64) -> Result<Self, ParamError> {
        fn positive(name: &'static str, value: f64) -> Result<f64, ParamError> {
            if value.is_finite() && value > 0.0 {
                Ok(value)
            } else {
                Err(ParamError::NotPositive { name, value })
            }
        }
        positive("d_star", t.d_star)?;
        positive("rho", t.rho)?;
        positive("c1", t.c1)?;
        positive("c2", t.c2)?;
        positive("dt", t.dt)?;
        positive("end_max_dis", t.end_max_dis)?;
        positive("d_hat_star", t.d_hat_star)?;
        if !t.v_limit.is_valid() {
            return Err(ParamError::BadVelocityLimit);
        }
        let xi = t.xi.unwrap_or(xi);
        if !(xi.is_finite() && xi >= 0.0) {
            return Err(ParamError::NotPositive { name: "xi", value: xi });
        }
        let rho_hat = positive("rho_hat", t.rho_hat.unwrap_or(t.rho))?;
        let v_max = t.v_limit.effective_max();
        let d = d_from_dstar(t.d_star, n.max(1), xi, v_max, t.rho, dim);
        let r = comm_radius(v_max, t.rho, d);
        let r_hat = positive(
            "r_hat",
            t.r_hat.unwrap_or_else(|| obstacle_range(t.d_hat_star, v_max, rho_hat)),
        )?;
        let max_sim_time = positive("max_sim_time", t.max_sim_time.unwrap_or(MIN_SIM_TIME.max(10.0 * lbt)))?;
        let params = Self {
            dim,
            n,
            d_star: t.d_star,
            d,
            r,
            rho: t.rho,
            c1: t.c1,
            c2: t.c2,
            v_limit: t.v_limit,
            dt: t.dt,
            end_max_dis: t.end_max_dis,
            max_sim_time,
            xi,
            rho_hat,
            r_hat,
            d_hat_star: t.d_hat_star,
        };
        params.check()?;
        Ok(params)
    }

    /// Checks `0 < d* <= d < r`.
    pub fn check(&self) -> Result<(), ParamError> {
        if !(self.d_star > 0.0 && self.d_star <= self.d && self.d < self.r) {
            return Err(ParamError::Ordering {
                d_star: self.d_star,
                d: self.d,
                r: self.r,
            });
        }
        Ok(())
    }

    pub fn v_max(&self) -> f64 {
        self.v_limit.effective_max()
    }
}

/// One reason a scenario is unfit for a run.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Empty,
    CountMismatch {
        starts: usize,
        goals: usize,
    },
    DimMismatch {
        expected: Dim,
        found: Dim,
    },
    NonFinite {
        what: &'static str,
        index: usize,
    },
    StartSpacing {
        i: usize,
        j: usize,
        distance: f64,
    },
    GoalSpacing {
        i: usize,
        j: usize,
        distance: f64,
    },
    BadObstacle {
        index: usize,
    },
    InsideObstacle {
        what: &'static str,
        index: usize,
        obstacle: usize,
        clearance: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "scenario has no agents"),
            Violation::CountMismatch { starts, goals } => {
                write!(f, "{starts} starts but {goals} goals")
            }
            Violation::DimMismatch { expected, found } => {
                write!(f, "expected {expected} coordinates, found {found}")
            }
            Violation::NonFinite { what, index } => write!(f, "{what} {index} is not finite"),
            Violation::StartSpacing { i, j, distance } => {
                write!(f, "starts {i} and {j} are {distance} m apart")
            }
            Violation::GoalSpacing { i, j, distance } => {
                write!(f, "goals {i} and {j} are {distance} m apart")
            }
            Violation::BadObstacle { index } => write!(f, "obstacle {index} has a non-positive radius"),
            Violation::InsideObstacle {
                what,
                index,
                obstacle,
                clearance,
            } => write!(f, "{what} {index} has clearance {clearance} m to obstacle {obstacle}"),
        }
    }
}

/// Outcome of [`validate_scenario`]; empty means the scenario is runnable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn spacing_violations(points: &[VecD], d: f64, goals: bool, out: &mut Vec<Violation>) {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let distance = points[i].dist(&points[j]);
            if distance < d {
                out.push(if goals {
                    Violation::GoalSpacing { i, j, distance }
                } else {
                    Violation::StartSpacing { i, j, distance }
                });
            }
        }
    }
}

/// Checks a scenario against resolved parameters: matching counts, a single
/// dimension, finite coordinates, start and goal spacing of at least `d`, and
/// every start and goal strictly outside every obstacle.
pub fn validate_scenario(s: &Scenario, p: &ControlParams) -> ValidationReport {
    let mut violations = Vec::new();
    if s.starts.is_empty() {
        violations.push(Violation::Empty);
    }
    if s.starts.len() != s.goals.len() {
        violations.push(Violation::CountMismatch {
            starts: s.starts.len(),
            goals: s.goals.len(),
        });
    }
    let sets: [(&'static str, &[VecD]); 2] = [("start", &s.starts), ("goal", &s.goals)];
    for (what, points) in sets {
        for (index, q) in points.iter().enumerate() {
            if q.dim() != s.dim {
                violations.push(Violation::DimMismatch {
                    expected: s.dim,
                    found: q.dim(),
                });
            } else if !q.is_finite() {
                violations.push(Violation::NonFinite { what, index });
            }
        }
    }
    for (index, o) in s.obstacles.iter().enumerate() {
        if o.center.dim() != s.dim {
            violations.push(Violation::DimMismatch {
                expected: s.dim,
                found: o.center.dim(),
            });
        }
        if !(o.radius.is_finite() && o.radius > 0.0) || !o.center.is_finite() {
            violations.push(Violation::BadObstacle { index });
        }
    }
    if !violations.is_empty() {
        return ValidationReport { violations };
    }
    spacing_violations(&s.starts, p.d, false, &mut violations);
    spacing_violations(&s.goals, p.d, true, &mut violations);
    for (what, points) in sets {
        for (index, q) in points.iter().enumerate() {
            for (obstacle, o) in s.obstacles.iter().enumerate() {
                let clearance = o.surface_distance(q);
                if clearance <= 0.0 {
                    violations.push(Violation::InsideObstacle {
                        what,
                        index,
                        obstacle,
                        clearance,
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}
