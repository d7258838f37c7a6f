//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the lines always reach the terminal. Any
//! argument that does not start with `-` is a filter on the criterion id
//! (`c1` .. `c10`). The process fails if any selected criterion fails.

use std::time::{Duration, Instant};

use fmp::parallel::max_threads;
use fmp::runner::{replay_check, run_to_dir, ReplayVerdict, RunSpec};
use fmp::suites::{cases, scale3d_case, scale3d_tunables, BenchOptions, Case, Suite};
use fmp_core::energy::collective_potential;
use fmp_core::neighbors::{brute_force_neighbors, closest_pair_brute_force, grid_neighbors, NeighborStrategy};
use fmp_core::sim::{NoClock, Sequential, StepObserver};
use fmp_core::{
    assignment_cost, comm_radius, d_from_dstar, hungarian_assign, prepare, repulsive_phi, simulate, Dim, LogOptions,
    PlanOptions, RunMetrics, Scenario, StepRecord, Tunables, VecD, VelocityLimit,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Independent per-step checks of a run.

/// Speed-limit overshoot computed from the limit definition, not the engine.
fn excess(limit: &VelocityLimit, v: &VecD) -> f64 {
    let c = v.components();
    match *limit {
        VelocityLimit::Uniform(max) => c.iter().map(|x| x * x).sum::<f64>().sqrt() - max,
        VelocityLimit::PerAxis { horizontal, up, down } => {
            let h = (c[0] * c[0] + c[1] * c[1]).sqrt() - horizontal;
            if c.len() == 3 {
                h.max(c[2] - up).max(-c[2] - down)
            } else {
                h
            }
        }
    }
}

struct Checker {
    limit: VelocityLimit,
    dt: f64,
    obstacles: Vec<(VecD, f64)>,
    steps: u64,
    min_sep: f64,
    max_excess: f64,
    min_clearance: f64,
    last_h: Option<f64>,
    energy_violations: u64,
    /// Time spent in these checks, kept out of the runtime budgets.
    overhead: Duration,
}

impl Checker {
    fn new(scenario: &Scenario, t: &Tunables) -> Self {
        assert!(
            scenario.obstacles.iter().all(|o| o.schedule.is_static()),
            "static obstacles only"
        );
        Self {
            limit: t.v_limit,
            dt: t.dt,
            obstacles: scenario.obstacles.iter().map(|o| (o.center, o.radius)).collect(),
            steps: 0,
            min_sep: f64::INFINITY,
            max_excess: f64::NEG_INFINITY,
            min_clearance: f64::INFINITY,
            last_h: None,
            energy_violations: 0,
            overhead: Duration::ZERO,
        }
    }
}

impl StepObserver for Checker {
    fn observe(&mut self, r: &StepRecord) {
        let started = Instant::now();
        self.steps += 1;
        let p = &r.positions;
        let mut best = f64::INFINITY;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                best = best.min((p[i] - p[j]).norm_sq());
            }
        }
        self.min_sep = self.min_sep.min(best.sqrt());
        for v in &r.velocities {
            self.max_excess = self.max_excess.max(excess(&self.limit, v));
        }
        for &(c, radius) in &self.obstacles {
            for q in p {
                self.min_clearance = self.min_clearance.min((*q - c).norm() - radius);
            }
        }
        if let Some(h0) = self.last_h {
            if r.hamiltonian - h0 > f64::max(1e-6, 1e-3 * self.dt * h0.abs()) {
                self.energy_violations += 1;
            }
        }
        self.last_h = Some(r.hamiltonian);
        self.overhead += started.elapsed();
    }
}

struct SuiteRun {
    case: Case,
    d_star: f64,
    metrics: RunMetrics,
    check: Checker,
}

impl SuiteRun {
    fn name(&self) -> String {
        format!("{}/{}", self.case.suite, self.case.label)
    }
}

/// Every shipped benchmark except the large scale sizes, plus 20 seeded
/// random cases, each checked at every step. Also returns the wall time
/// net of the checks.
fn run_suites() -> (Vec<SuiteRun>, Duration) {
    let started = Instant::now();
    let opts = BenchOptions {
        n: vec![10, 100],
        ..BenchOptions::default()
    };
    let mut all = Vec::new();
    for suite in [
        Suite::Circle,
        Suite::Swap,
        Suite::Obstacle,
        Suite::Random,
        Suite::Formation,
        Suite::Scale,
        Suite::Scale3d,
    ] {
        let opts = BenchOptions {
            n: if suite == Suite::Scale {
                opts.n.clone()
            } else {
                Vec::new()
            },
            ..BenchOptions::default()
        };
        for case in cases(suite, &opts).expect("suite cases") {
            let mut spec = case.spec(&opts);
            spec.log_every = 1;
            let mut check = Checker::new(&case.scenario, &case.tunables);
            let out = fmp::runner::execute(&spec, &mut check).expect("suite run");
            all.push(SuiteRun {
                d_star: case.tunables.d_star,
                case,
                metrics: out.metrics,
                check,
            });
        }
    }
    let overhead: Duration = all.iter().map(|r| r.check.overhead).sum();
    (all, started.elapsed().saturating_sub(overhead))
}

// ---------------------------------------------------------------------------
// Criteria.

fn c1_separation(runs: &[SuiteRun], elapsed: Duration) -> Verdict {
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| r.check.min_sep < r.d_star || r.metrics.min_separation < r.d_star)
        .map(|r| format!("{} ({:.4} < {})", r.name(), r.check.min_sep, r.d_star))
        .collect();
    let margin = runs
        .iter()
        .map(|r| r.check.min_sep - r.d_star)
        .fold(f64::INFINITY, f64::min);
    let steps: u64 = runs.iter().map(|r| r.check.steps).sum();
    let fast = elapsed < Duration::from_secs(120);
    Verdict::new(
        bad.is_empty() && fast,
        format!(
            "{} runs, {steps} steps, smallest margin over d* {margin:.4} m, {:.1} s (budget 120 s) plus {:.1} s of checks{}",
            runs.len(),
            elapsed.as_secs_f64(),
            runs.iter().map(|r| r.check.overhead).sum::<Duration>().as_secs_f64(),
            if bad.is_empty() { String::new() } else { format!("; below d*: {}", bad.join(", ")) }
        ),
    )
}

fn c2_velocity_cap(runs: &[SuiteRun]) -> Verdict {
    let worst = runs
        .iter()
        .max_by(|a, b| a.check.max_excess.total_cmp(&b.check.max_excess))
        .expect("runs");
    let pass = runs.iter().all(|r| r.check.max_excess <= 1e-12);
    Verdict::new(
        pass,
        format!("largest overshoot {:.3e} ({})", worst.check.max_excess, worst.name()),
    )
}

fn c3_energy(runs: &[SuiteRun]) -> Verdict {
    let bad: Vec<String> = runs
        .iter()
        .filter(|r| r.check.energy_violations > 0)
        .map(|r| format!("{} {}/{}", r.name(), r.check.energy_violations, r.check.steps))
        .collect();
    let agree = runs
        .iter()
        .all(|r| r.check.energy_violations == r.metrics.energy_violations);
    Verdict::new(
        bad.is_empty() && agree,
        if bad.is_empty() {
            format!("no step raised H beyond tolerance in {} runs", runs.len())
        } else {
            format!(
                "{} of {} runs raise H beyond tolerance: {}",
                bad.len(),
                runs.len(),
                bad.join(", ")
            )
        },
    )
}

fn c4_deadlock(runs: &[SuiteRun], elapsed: Duration) -> Verdict {
    let random: Vec<&SuiteRun> = runs.iter().filter(|r| r.case.suite == Suite::Random).collect();
    let deadlocks = random.iter().filter(|r| r.metrics.deadlock).count();
    let dense: Vec<&SuiteRun> = runs
        .iter()
        .filter(|r| r.case.suite == Suite::Swap && r.case.param == Some(6.0))
        .collect();
    let stuck: Vec<String> = dense
        .iter()
        .filter(|r| !r.metrics.converged)
        .map(|r| format!("{} (deadlock={})", r.name(), r.metrics.deadlock))
        .collect();
    Verdict::new(
        random.len() >= 20
            && deadlocks == 0
            && dense.len() == 2
            && stuck.is_empty()
            && elapsed < Duration::from_secs(300),
        format!(
            "{deadlocks} deadlocks in {} random cases; 6.0 m swaps not converged: [{}]",
            random.len(),
            stuck.join(", ")
        ),
    )
}

fn c5_obstacles(runs: &[SuiteRun]) -> Verdict {
    let r = runs
        .iter()
        .find(|r| r.case.suite == Suite::Obstacle)
        .expect("passage run");
    Verdict::new(
        r.metrics.converged && r.check.min_clearance > 0.0 && r.metrics.min_obstacle_clearance > 0.0,
        format!(
            "converged={} in {:?} s, min surface clearance {:.4} m",
            r.metrics.converged, r.metrics.transition_time, r.check.min_clearance
        ),
    )
}

fn c6_envelope(runs: &[SuiteRun]) -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for r in runs.iter().filter(|r| r.metrics.converged) {
        let t = r.metrics.transition_time.expect("converged");
        if t < r.metrics.lbt_opt {
            pass = false;
            notes.push(format!("{} below Lbt", r.name()));
        }
    }
    let sparse = runs.iter().filter(|r| {
        (r.case.suite == Suite::Circle && r.case.param.is_some_and(|f| f >= 3.0))
            || (r.case.suite == Suite::Swap && r.case.param == Some(9.5))
    });
    for r in sparse {
        let ratio = r
            .metrics
            .transition_time
            .map_or(f64::INFINITY, |t| t / r.metrics.lbt_opt);
        notes.push(format!("{} T/Lbt={ratio:.2}", r.name()));
        pass &= ratio <= 3.0;
    }
    Verdict::new(pass, notes.join(", "))
}

/// Seconds per step over `steps` steps of a prepared circle, best of three.
fn per_step(n: usize, strategy: NeighborStrategy, steps: usize) -> f64 {
    let case = scale_case(n);
    let plan = prepare(&case.scenario, &case.tunables, &PlanOptions::default()).expect("plan");
    (0..3)
        .map(|_| {
            let mut w = plan.world.clone();
            w.strategy = strategy;
            let t0 = Instant::now();
            for _ in 0..steps {
                w.step().expect("step");
            }
            t0.elapsed().as_secs_f64() / steps as f64
        })
        .fold(f64::INFINITY, f64::min)
}

fn scale_case(n: usize) -> Case {
    let opts = BenchOptions {
        n: vec![n],
        ..BenchOptions::default()
    };
    cases(Suite::Scale, &opts).expect("scale case").remove(0)
}

fn c7_scalability(runs: &[SuiteRun]) -> Verdict {
    let mut notes = Vec::new();
    let small: Vec<&SuiteRun> = runs.iter().filter(|r| r.case.suite == Suite::Scale).collect();
    let mut pass = small.len() == 2 && small.iter().all(|r| r.metrics.converged);
    for r in &small {
        notes.push(format!("{} converged={}", r.case.label, r.metrics.converged));
    }

    let sizes = [250usize, 1000];
    let brute: Vec<f64> = sizes
        .iter()
        .map(|&n| per_step(n, NeighborStrategy::BruteForce, 40))
        .collect();
    let grid: Vec<f64> = sizes.iter().map(|&n| per_step(n, NeighborStrategy::Grid, 40)).collect();
    let slope = |t: &[f64]| (t[1] / t[0]).ln() / (sizes[1] as f64 / sizes[0] as f64).ln();
    let (sb, sg) = (slope(&brute), slope(&grid));
    notes.push(format!(
        "per-step slope brute {sb:.2} ({:.3}->{:.3} ms), grid {sg:.2} ({:.3}->{:.3} ms)",
        brute[0] * 1e3,
        brute[1] * 1e3,
        grid[0] * 1e3,
        grid[1] * 1e3
    ));
    pass &= sb <= 2.25 && sg <= 1.25;

    // End to end: planning plus stepping until convergence, within 10 minutes.
    let budget = Duration::from_secs(600);
    let t0 = Instant::now();
    let case = scale_case(1000);
    let plan = prepare(&case.scenario, &case.tunables, &PlanOptions::default()).expect("plan");
    let mut w = plan.world;
    while !w.converged() && w.time < w.params.max_sim_time && t0.elapsed() < budget {
        w.step().expect("step");
    }
    let wall = t0.elapsed();
    notes.push(format!(
        "n1000 converged={} at t={:.1} s (Lbt {:.1} s, max goal distance {:.1} m) after {:.0} s wall (budget 600 s)",
        w.converged(),
        w.time,
        plan.lbt,
        w.max_goal_distance(),
        wall.as_secs_f64()
    ));
    pass &= w.converged() && wall < budget;
    Verdict::new(pass, notes.join("; "))
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: Dim, side: f64) -> Vec<VecD> {
    (0..n)
        .map(|_| match dim {
            Dim::Two => VecD::xy(rng.random_range(0.0..side), rng.random_range(0.0..side)),
            Dim::Three => VecD::xyz(
                rng.random_range(0.0..side),
                rng.random_range(0.0..side),
                rng.random_range(0.0..side),
            ),
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

fn c8_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut notes = Vec::new();

    let mut hungarian_bad = 0;
    for k in 0..200 {
        let n = 1 + k % 7;
        let dim = if k % 2 == 0 { Dim::Two } else { Dim::Three };
        let starts = random_points(&mut rng, n, dim, 50.0);
        let goals = random_points(&mut rng, n, dim, 50.0);
        let got = hungarian_assign(&starts, &goals).expect("assignment");
        let best = permutations(n)
            .iter()
            .map(|p| assignment_cost(&starts, &goals, p).expect("cost"))
            .fold(f64::INFINITY, f64::min);
        let cost = assignment_cost(&starts, &goals, &got.perm).expect("cost");
        if (cost - best).abs() > 1e-9 * best.max(1.0) {
            hungarian_bad += 1;
        }
    }
    notes.push(format!("hungarian mismatches {hungarian_bad}/200"));

    let mut grid_bad = 0;
    for k in 0..50 {
        let dim = if k % 2 == 0 { Dim::Two } else { Dim::Three };
        let n = rng.random_range(20..400);
        let pts = random_points(&mut rng, n, dim, 60.0);
        let r = rng.random_range(0.5..12.0);
        if grid_neighbors(&pts, r) != brute_force_neighbors(&pts, r) {
            grid_bad += 1;
        }
    }
    notes.push(format!("grid mismatches {grid_bad}/50"));

    // Small team (direct scan) and a 300-agent circle (grid path).
    let mut tracker_bad = 0;
    let mut tracked = 0;
    let random = cases(
        Suite::Random,
        &BenchOptions {
            cases: 1,
            ..BenchOptions::default()
        },
    )
    .expect("case");
    let mut big = scale_case(300);
    big.tunables.max_sim_time = Some(4.0);
    for case in [&random[0], &big] {
        let plan = prepare(&case.scenario, &case.tunables, &PlanOptions::default()).expect("plan");
        let run = simulate(plan.world, &Sequential, &mut NoClock, LogOptions { every: 1 });
        for rec in &run.trajectory {
            tracked += 1;
            let oracle = closest_pair_brute_force(&rec.positions).map_or(f64::INFINITY, |c| c.distance);
            if oracle.to_bits() != rec.min_separation.to_bits() {
                tracker_bad += 1;
            }
        }
    }
    notes.push(format!("min-separation mismatches {tracker_bad}/{tracked}"));

    let (r, rho) = (5.0356, 7.5e6);
    let mut worst = 0.0f64;
    for k in 1..200 {
        let z = r * k as f64 / 200.0;
        let h = 1e-4 * (r - z);
        let psi = |z: f64| collective_potential(&[VecD::xy(0.0, 0.0), VecD::xy(z, 0.0)], r, rho).expect("psi");
        let fd = (psi(z + h) - psi(z - h)) / (2.0 * h);
        let phi = repulsive_phi(z, r, rho).expect("phi");
        worst = worst.max(((fd - phi) / phi).abs());
    }
    notes.push(format!("worst |psi' - phi|/|phi| {worst:.2e}"));

    Verdict::new(
        hungarian_bad == 0 && grid_bad == 0 && tracker_bad == 0 && worst < 1e-6,
        notes.join(", "),
    )
}

fn c9_determinism() -> Verdict {
    let tmp = tempfile::tempdir().expect("tempdir");
    let mut t = scale3d_tunables();
    t.dt = 0.005;
    t.max_sim_time = Some(2.0);
    let dense = scale3d_case(300, 4, &t).expect("3d case");
    let random = &cases(
        Suite::Random,
        &BenchOptions {
            cases: 1,
            ..BenchOptions::default()
        },
    )
    .expect("case")[0];
    let mut counts = vec![1, 2, max_threads(), 8];
    counts.sort_unstable();
    counts.dedup();
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, spec) in [
        ("3d-300", RunSpec::from_parts(&dense, &t)),
        ("random", RunSpec::from_parts(&random.scenario, &random.tunables)),
    ] {
        let mut logs = Vec::new();
        for &threads in &counts {
            let mut spec = spec.clone();
            spec.seed = 17;
            spec.threads = threads;
            let dir = tmp.path().join(format!("{name}-{threads}"));
            run_to_dir(&spec, &dir).expect("run");
            logs.push(std::fs::read(dir.join("trajectory.jsonl")).expect("log"));
        }
        let same = logs.windows(2).all(|w| w[0] == w[1]);
        let replay = replay_check(&tmp.path().join(format!("{name}-1")), Some(2)).expect("replay");
        let replay_ok = matches!(replay, ReplayVerdict::Identical { .. });
        notes.push(format!(
            "{name}: {} bytes, identical={same}, replay={replay_ok}",
            logs[0].len()
        ));
        pass &= same && replay_ok;
    }
    Verdict::new(pass, format!("threads {counts:?}; {}", notes.join("; ")))
}

fn c10_parameters() -> Verdict {
    let d = d_from_dstar(5.0, 30, 40.0 * 40.0 * 2.0, 3.0, 7.5e6, Dim::Two);
    let r = comm_radius(15.0, 7.5e6, 5.0);
    let rel = |x: f64, want: f64| ((x - want) / want).abs();
    Verdict::new(
        rel(d, 5.2687) <= 1e-3 && rel(r, 5.0356) <= 1e-3,
        format!("d = {d:.6} (want 5.2687), r = {r:.6} (want 5.0356)"),
    )
}

// ---------------------------------------------------------------------------

const TITLES: [&str; 10] = [
    "separation guarantee",
    "velocity cap",
    "energy monotonicity",
    "deadlock freedom",
    "obstacle safety",
    "time-optimality envelope",
    "scalability",
    "oracle equivalences",
    "determinism and replay",
    "parameter pipeline",
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected = |id: usize| filters.is_empty() || filters.iter().any(|f| *f == format!("c{id}"));
    if !(1..=10).any(selected) {
        return;
    }

    let shared = if (1..=7).any(selected) {
        Some(run_suites())
    } else {
        None
    };
    let mut failed = 0;
    for id in 1..=10 {
        if !selected(id) {
            continue;
        }
        let started = Instant::now();
        let v = match (id, &shared) {
            (1, Some((runs, t))) => c1_separation(runs, *t),
            (2, Some((runs, _))) => c2_velocity_cap(runs),
            (3, Some((runs, _))) => c3_energy(runs),
            (4, Some((runs, t))) => c4_deadlock(runs, *t),
            (5, Some((runs, _))) => c5_obstacles(runs),
            (6, Some((runs, _))) => c6_envelope(runs),
            (7, Some((runs, _))) => c7_scalability(runs),
            (8, _) => c8_oracles(),
            (9, _) => c9_determinism(),
            (10, _) => c10_parameters(),
            _ => unreachable!(),
        };
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} ({}): {} [{:.1} s]",
            if v.pass { "PASS" } else { "FAIL" },
            TITLES[id - 1],
            v.detail,
            started.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
