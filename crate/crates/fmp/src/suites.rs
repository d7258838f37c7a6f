//! Built-in benchmark suites and their summary tables.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use fmp_core::controller::interaction_margin;
use fmp_core::neighbors::NeighborStrategy;
use fmp_core::plan::{max_sq_distance, DEFAULT_JITTER};
use fmp_core::scenarios::{
    circle_radius_for, circle_scenario, formation_scenario, formation_tunables, grid_swap_scenario,
    obstacle_passage_scenario, obstacle_passage_tunables, random_scenario, Aabb, RandomCaseSpec, ScenarioError,
    SwapKind,
};
use fmp_core::sim::Discard;
use fmp_core::{d_from_dstar, Dim, Scenario, Tunables, VelocityLimit};
use rayon::prelude::*;
use serde::Serialize;

use crate::runner::{execute, Outcome, RunError, RunSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Circle,
    Swap,
    Obstacle,
    Random,
    Formation,
    Scale,
    Scale3d,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Circle,
        Suite::Swap,
        Suite::Obstacle,
        Suite::Random,
        Suite::Formation,
        Suite::Scale,
        Suite::Scale3d,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Circle => "circle",
            Suite::Swap => "swap",
            Suite::Obstacle => "obstacle",
            Suite::Random => "random",
            Suite::Formation => "formation",
            Suite::Scale => "scale",
            Suite::Scale3d => "scale3d",
        }
    }

    /// Integration step used unless overridden.
    ///
    /// The scale suite times the engine at the default 0.02 s and refines it
    /// per case with [`guard_dt`]. Every other suite uses [`contact_dt`].
    pub fn default_dt(self, t: &Tunables) -> f64 {
        match self {
            Suite::Scale => fmp_core::model::DEFAULT_DT,
            _ => contact_dt(t),
        }
    }
}

/// Steps tried by [`guard_dt`] and [`contact_dt`], largest first.
pub const DT_LADDER: [f64; 8] = [0.02, 0.01, 0.005, 0.002, 0.001, 5e-4, 2e-4, 1e-4];

fn ladder(fits: impl Fn(f64) -> bool) -> f64 {
    DT_LADDER
        .into_iter()
        .find(|&dt| fits(dt))
        .unwrap_or(DT_LADDER[DT_LADDER.len() - 1])
}

/// Largest step in [`DT_LADDER`] for which a head-on pair at full speed
/// closes at most half of the repulsive band `r - d` per step.
///
/// The band is only a few centimetres wide at `ρ = 7.5e6`, so this is far
/// below 0.02 s for fast agents.
pub fn contact_dt(t: &Tunables) -> f64 {
    let v = t.v_limit.effective_max();
    let band = interaction_margin(v, t.rho);
    ladder(|dt| 4.0 * v * dt <= band)
}

/// Largest step in [`DT_LADDER`] for which a head-on pair closes at most
/// half of the band `d - d*` per step. Falls back to the smallest entry.
pub fn guard_dt(d: f64, d_star: f64, v_max: f64) -> f64 {
    ladder(|dt| 4.0 * v_max * dt <= d - d_star)
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("unknown suite `{0}` (expected one of circle, swap, obstacle, random, formation, scale, scale3d)")]
pub struct UnknownSuite(pub String);

impl FromStr for Suite {
    type Err = UnknownSuite;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| UnknownSuite(s.to_owned()))
    }
}

pub const CIRCLE_N: usize = 100;
pub const CIRCLE_D_STAR: f64 = 3.0;
/// Adjacent spacing on the circle as a multiple of `d`.
pub const CIRCLE_FACTORS: [f64; 2] = [1.5, 3.0];
pub const SWAP_N: usize = 100;
pub const SWAP_D_STAR: f64 = 5.0;
pub const SWAP_SPACINGS: [f64; 5] = [6.0, 6.5, 7.5, 8.5, 9.5];
pub const RANDOM_N: usize = 30;
pub const RANDOM_SIDE: f64 = 40.0;
pub const RANDOM_D_STAR: f64 = 5.0;
pub const RANDOM_V_MAX: f64 = 3.0;
pub const RANDOM_CASES: usize = 20;
pub const FORMATION_N: usize = 28;
pub const FORMATION_SPACINGS: [f64; 4] = [12.0, 6.0, 3.0, 1.0];
pub const SCALE_N: [usize; 5] = [10, 100, 250, 500, 1000];
pub const SCALE_D_STAR: f64 = 5.0;
pub const SCALE_FACTOR: f64 = 1.5;
pub const SCALE3D_N: usize = 100;
pub const SCALE3D_D_STAR: f64 = 3.0;
/// Box of the 100-agent 3D case; larger teams scale it at constant density.
pub const SCALE3D_BOX: [f64; 3] = [60.0, 60.0, 30.0];
pub const V_MAX: f64 = 15.0;

pub fn scale3d_limit() -> VelocityLimit {
    VelocityLimit::PerAxis {
        horizontal: 9.0,
        up: 3.0,
        down: 6.0,
    }
}

/// Overrides for a suite; empty lists and `None` take the suite defaults.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchOptions {
    pub dt: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub max_sim_time: Option<f64>,
    pub seed: u64,
    pub jitter: f64,
    /// Agent counts (circle, scale, scale3d).
    pub n: Vec<usize>,
    /// Random cases.
    pub cases: usize,
    pub kinds: Vec<SwapKind>,
    /// Grid spacings (swap, formation).
    pub spacings: Vec<f64>,
    /// Circle spacing factors.
    pub factors: Vec<f64>,
    /// Concurrent runs.
    pub jobs: usize,
    /// Evaluation threads per run (used when `jobs == 1`).
    pub threads: usize,
    pub strategy: NeighborStrategy,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            dt: None,
            c1: None,
            c2: None,
            max_sim_time: None,
            seed: 0,
            jitter: DEFAULT_JITTER,
            n: Vec::new(),
            cases: RANDOM_CASES,
            kinds: Vec::new(),
            spacings: Vec::new(),
            factors: Vec::new(),
            jobs: 1,
            threads: 1,
            strategy: NeighborStrategy::Auto,
        }
    }
}

impl BenchOptions {
    fn tune(&self, suite: Suite, mut t: Tunables) -> Tunables {
        if let Some(c1) = self.c1 {
            t = t.with_gains(c1, self.c2);
        } else if let Some(c2) = self.c2 {
            t.c2 = c2;
        }
        t.dt = self.dt.unwrap_or(suite.default_dt(&t));
        t.max_sim_time = self.max_sim_time;
        t
    }

    fn list<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
        if given.is_empty() {
            default.to_vec()
        } else {
            given.to_vec()
        }
    }
}

/// One prepared benchmark instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub suite: Suite,
    pub label: String,
    /// Suite-specific parameter: spacing, spacing factor or seed.
    pub param: Option<f64>,
    pub scenario: Scenario,
    pub tunables: Tunables,
    pub seed: u64,
}

impl Case {
    pub fn spec(&self, opts: &BenchOptions) -> RunSpec {
        let mut spec = RunSpec::from_parts(&self.scenario, &self.tunables);
        spec.seed = self.seed;
        spec.jitter = opts.jitter;
        spec.log_every = 0;
        spec.threads = if opts.jobs > 1 { 1 } else { opts.threads };
        spec.strategy = opts.strategy;
        spec
    }
}

pub fn circle_tunables() -> Tunables {
    Tunables::new(CIRCLE_D_STAR, VelocityLimit::Uniform(V_MAX))
}

pub fn swap_tunables() -> Tunables {
    Tunables::new(SWAP_D_STAR, VelocityLimit::Uniform(V_MAX))
}

pub fn random_tunables() -> Tunables {
    Tunables::new(RANDOM_D_STAR, VelocityLimit::Uniform(RANDOM_V_MAX))
}

pub fn scale_tunables() -> Tunables {
    Tunables::new(SCALE_D_STAR, VelocityLimit::Uniform(V_MAX))
}

pub fn scale3d_tunables() -> Tunables {
    Tunables::new(SCALE3D_D_STAR, scale3d_limit())
}

/// Circle whose adjacent spacing is `factor · d`.
pub fn circle_case(n: usize, factor: f64, t: &Tunables) -> Result<Scenario, ScenarioError> {
    let radius = circle_radius_for(n, Dim::Two, t, factor)?;
    let mut s = circle_scenario(n, radius, Dim::Two, t)?;
    s.name = format!("circle-n{n}-f{factor}");
    Ok(s)
}

pub fn random_case(seed: u64, t: &Tunables) -> Result<Scenario, ScenarioError> {
    random_scenario(
        &RandomCaseSpec::new(RANDOM_N, Aabb::rect(RANDOM_SIDE, RANDOM_SIDE), seed),
        t,
    )
}

pub fn scale3d_case(n: usize, seed: u64, t: &Tunables) -> Result<Scenario, ScenarioError> {
    let k = (n as f64 / SCALE3D_N as f64).cbrt();
    let [w, h, depth] = SCALE3D_BOX.map(|x| x * k);
    let mut s = random_scenario(&RandomCaseSpec::new(n, Aabb::cuboid(w, h, depth), seed), t)?;
    s.name = format!("random3d-n{n}-seed{seed}");
    Ok(s)
}

/// Instances of `suite` in table order.
pub fn cases(suite: Suite, opts: &BenchOptions) -> Result<Vec<Case>, ScenarioError> {
    let case = |label: String, param: Option<f64>, scenario: Scenario, tunables: Tunables, seed: u64| Case {
        suite,
        label,
        param,
        scenario,
        tunables,
        seed,
    };
    let mut out = Vec::new();
    match suite {
        Suite::Circle => {
            let t = opts.tune(suite, circle_tunables());
            for n in BenchOptions::list(&opts.n, &[CIRCLE_N]) {
                for f in BenchOptions::list(&opts.factors, &CIRCLE_FACTORS) {
                    let s = circle_case(n, f, &t)?;
                    out.push(case(format!("n{n}-f{f}"), Some(f), s, t.clone(), opts.seed));
                }
            }
        }
        Suite::Swap => {
            let t = opts.tune(suite, swap_tunables());
            for kind in BenchOptions::list(&opts.kinds, &[SwapKind::Mirror, SwapKind::Diagonal]) {
                for sp in BenchOptions::list(&opts.spacings, &SWAP_SPACINGS) {
                    let s = grid_swap_scenario(kind, SWAP_N, sp, &t)?;
                    out.push(case(
                        format!("{}-{sp}", kind_name(kind)),
                        Some(sp),
                        s,
                        t.clone(),
                        opts.seed,
                    ));
                }
            }
        }
        Suite::Obstacle => {
            let t = opts.tune(suite, obstacle_passage_tunables());
            out.push(case("passage".into(), None, obstacle_passage_scenario(), t, opts.seed));
        }
        Suite::Random => {
            let t = opts.tune(suite, random_tunables());
            for k in 0..opts.cases as u64 {
                let seed = opts.seed.wrapping_add(k);
                let s = random_case(seed, &t)?;
                out.push(case(format!("seed{seed}"), Some(seed as f64), s, t.clone(), seed));
            }
        }
        Suite::Formation => {
            let t = opts.tune(suite, formation_tunables());
            for sp in BenchOptions::list(&opts.spacings, &FORMATION_SPACINGS) {
                let s = formation_scenario(FORMATION_N, sp, &t)?;
                out.push(case(format!("s{sp}"), Some(sp), s, t.clone(), opts.seed));
            }
        }
        Suite::Scale => {
            let base = opts.tune(suite, scale_tunables());
            for n in BenchOptions::list(&opts.n, &SCALE_N) {
                let s = circle_case(n, SCALE_FACTOR, &base)?;
                let mut t = base.clone();
                if opts.dt.is_none() {
                    let xi = t.xi.unwrap_or_else(|| max_sq_distance(&s.starts, &s.goals));
                    let v = t.v_limit.effective_max();
                    t.dt = guard_dt(d_from_dstar(t.d_star, n, xi, v, t.rho, Dim::Two), t.d_star, v);
                }
                out.push(case(format!("n{n}"), None, s, t, opts.seed));
            }
        }
        Suite::Scale3d => {
            let t = opts.tune(suite, scale3d_tunables());
            for n in BenchOptions::list(&opts.n, &[SCALE3D_N]) {
                let s = scale3d_case(n, opts.seed, &t)?;
                out.push(case(format!("n{n}"), None, s, t.clone(), opts.seed));
            }
        }
    }
    Ok(out)
}

pub fn kind_name(kind: SwapKind) -> &'static str {
    match kind {
        SwapKind::Mirror => "mirror",
        SwapKind::Diagonal => "diagonal",
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// One line of a suite table. Empty cells mean "not applicable".
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub suite: &'static str,
    pub case: String,
    pub n: usize,
    pub param: Option<f64>,
    pub seed: u64,
    pub dt: f64,
    pub converged: bool,
    pub transition_time_s: Option<f64>,
    pub execution_time_ms: f64,
    pub steps: u64,
    pub lbt_opt_s: f64,
    pub d_star_m: f64,
    pub d_m: f64,
    pub min_separation_m: Option<f64>,
    pub min_obstacle_clearance_m: Option<f64>,
    pub deadlock: bool,
    pub livelock: bool,
    pub energy_violations: u64,
    pub max_hamiltonian_increase: Option<f64>,
    pub max_limit_excess: Option<f64>,
    pub final_max_speed: f64,
    pub fault: Option<String>,
}

impl Row {
    pub fn new(case: &Case, o: &Outcome) -> Self {
        let m = &o.metrics;
        Self {
            suite: case.suite.name(),
            case: case.label.clone(),
            n: o.scenario.len(),
            param: case.param,
            seed: case.seed,
            dt: o.params.dt,
            converged: m.converged,
            transition_time_s: m.transition_time,
            execution_time_ms: m.execution_time,
            steps: m.steps,
            lbt_opt_s: m.lbt_opt,
            d_star_m: o.params.d_star,
            d_m: o.params.d,
            min_separation_m: finite(m.min_separation),
            min_obstacle_clearance_m: finite(m.min_obstacle_clearance),
            deadlock: m.deadlock,
            livelock: m.livelock,
            energy_violations: m.energy_violations,
            max_hamiltonian_increase: finite(m.max_hamiltonian_increase),
            max_limit_excess: finite(m.max_limit_excess),
            final_max_speed: m.final_max_speed,
            fault: m.fault.clone(),
        }
    }

    /// Per-step wall time in milliseconds.
    pub fn step_time_ms(&self) -> f64 {
        self.execution_time_ms / self.steps.max(1) as f64
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("{case}: {source}")]
    Run {
        case: String,
        #[source]
        source: RunError,
    },
    #[error("cannot start worker pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

pub fn run_case(case: &Case, opts: &BenchOptions) -> Result<(Row, Outcome), BenchError> {
    let outcome = execute(&case.spec(opts), &mut Discard).map_err(|source| BenchError::Run {
        case: format!("{}/{}", case.suite, case.label),
        source,
    })?;
    Ok((Row::new(case, &outcome), outcome))
}

/// Runs every case, `opts.jobs` at a time, keeping table order.
pub fn run_cases(cases: &[Case], opts: &BenchOptions) -> Result<Vec<Row>, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build()?;
    let rows: Vec<Result<Row, BenchError>> = pool.install(|| {
        cases
            .par_iter()
            .with_max_len(1)
            .map(|c| run_case(c, opts).map(|(row, _)| row))
            .collect()
    });
    rows.into_iter().collect()
}

pub fn run_suite(suite: Suite, opts: &BenchOptions) -> Result<Vec<Row>, BenchError> {
    run_cases(&cases(suite, opts)?, opts)
}

/// Aggregate line printed under a suite table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub runs: usize,
    pub converged: usize,
    pub deadlocks: usize,
    pub livelocks: usize,
    pub faults: usize,
    pub min_separation_m: Option<f64>,
    pub mean_transition_time_s: Option<f64>,
    pub mean_execution_time_ms: Option<f64>,
    pub energy_violations: u64,
}

impl Summary {
    pub fn of(rows: &[Row]) -> Self {
        let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
        Self {
            runs: rows.len(),
            converged: rows.iter().filter(|r| r.converged).count(),
            deadlocks: rows.iter().filter(|r| r.deadlock).count(),
            livelocks: rows.iter().filter(|r| r.livelock).count(),
            faults: rows.iter().filter(|r| r.fault.is_some()).count(),
            min_separation_m: rows.iter().filter_map(|r| r.min_separation_m).reduce(f64::min),
            mean_transition_time_s: mean(rows.iter().filter_map(|r| r.transition_time_s).collect()),
            mean_execution_time_ms: mean(rows.iter().map(|r| r.execution_time_ms).collect()),
            energy_violations: rows.iter().map(|r| r.energy_violations).sum(),
        }
    }
}

pub fn write_csv<T: Serialize, W: Write>(items: &[T], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for item in items {
        out.serialize(item)?;
    }
    out.flush()?;
    Ok(())
}
