//! Benchmark instances and random test cases.
//!
//! Every generator is a pure function of its arguments. Generators that
//! depend on `d` take the run's [`Tunables`] and refuse to produce a layout
//! whose spacing is below the derived `d`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::controller::d_from_dstar;
use crate::math;
use crate::model::{Obstacle, Scenario, Tunables, VelocityLimit};
use crate::plan::{resolve_params, PlanError};
use crate::vector::{Dim, VecD};

/// Candidate attempts per active sample.
const BRIDSON_K: usize = 30;
/// Fresh seeds tried before giving up on a saturated draw.
const MAX_RETRIES: u64 = 32;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("need at least {min} agents, got {n}")]
    TooFew { n: usize, min: usize },
    #[error("{n} is not a perfect square")]
    NotSquare { n: usize },
    #[error("{n} agents cannot be split over two circles (need an even count)")]
    OddCount { n: usize },
    #[error("non-positive or non-finite {name}: {value}")]
    BadArgument { name: &'static str, value: f64 },
    #[error("adjacent spacing {spacing} is below d = {d}; radius must be at least {min_radius}")]
    RadiusTooSmall { spacing: f64, d: f64, min_radius: f64 },
    #[error("spacing {spacing} is below d = {d}")]
    SpacingTooSmall { spacing: f64, d: f64 },
    #[error("{n} points at spacing {spacing} cannot fit in the box")]
    Infeasible { n: usize, spacing: f64 },
    #[error("sampler saturated below {n} points after {retries} retries")]
    RetriesExhausted { n: usize, retries: u64 },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

fn positive(name: &'static str, value: f64) -> Result<f64, ScenarioError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(ScenarioError::BadArgument { name, value })
    }
}

/// `d` as it will be derived when the scenario is prepared.
pub fn required_spacing(s: &Scenario, t: &Tunables) -> Result<f64, ScenarioError> {
    Ok(resolve_params(s, t)?.1.d)
}

fn point_on_circle(radius: f64, angle: f64, dim: Dim) -> VecD {
    let (x, y) = (radius * math::cos(angle), radius * math::sin(angle));
    match dim {
        Dim::Two => VecD::xy(x, y),
        Dim::Three => VecD::xyz(x, y, 0.0),
    }
}

/// `n` agents evenly spaced on a circle in the `z = 0` plane, each heading
/// for the antipodal point. Marked preassigned: for even `n` the goal set
/// equals the start set and an optimal assignment would leave everyone in
/// place.
pub fn circle_scenario(n: usize, radius: f64, dim: Dim, t: &Tunables) -> Result<Scenario, ScenarioError> {
    if n < 2 {
        return Err(ScenarioError::TooFew { n, min: 2 });
    }
    positive("radius", radius)?;
    let step = 2.0 * PI / n as f64;
    let starts: Vec<VecD> = (0..n).map(|k| point_on_circle(radius, k as f64 * step, dim)).collect();
    let goals = starts.iter().map(|p| -*p).collect();
    let s = Scenario::new(format!("circle-n{n}-r{radius}"), dim, starts, goals).preassigned(true);
    let d = required_spacing(&s, t)?;
    let chord = adjacent_chord(n, radius);
    if chord < d {
        return Err(ScenarioError::RadiusTooSmall {
            spacing: chord,
            d,
            min_radius: circle_radius_for(n, dim, t, 1.0)?,
        });
    }
    Ok(s)
}

fn adjacent_chord(n: usize, radius: f64) -> f64 {
    if n == 2 {
        2.0 * radius
    } else {
        2.0 * radius * math::sin(PI / n as f64)
    }
}

/// Smallest circle radius whose adjacent chord is at least `factor · d`,
/// where `d` itself grows with the radius through ξ = (2R)². Solved by
/// fixed-point iteration, which contracts because `d` grows like `R^{2/3}`.
pub fn circle_radius_for(n: usize, dim: Dim, t: &Tunables, factor: f64) -> Result<f64, ScenarioError> {
    if n < 2 {
        return Err(ScenarioError::TooFew { n, min: 2 });
    }
    positive("factor", factor)?;
    let v = t.v_limit.effective_max();
    let unit = adjacent_chord(n, 1.0);
    let mut radius = factor * t.d_star / unit;
    for _ in 0..200 {
        let xi = 4.0 * radius * radius;
        let next = factor * d_from_dstar(t.d_star, n, xi, v, t.rho, dim) / unit;
        if (next - radius).abs() <= 1e-12 * next {
            radius = next;
            break;
        }
        radius = next;
    }
    // Headroom for rounding in the trigonometric layout.
    Ok(radius * (1.0 + 1e-9))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SwapKind {
    /// Columns reflected across the vertical axis of the grid.
    Mirror,
    /// Cells reflected across the main diagonal.
    Diagonal,
}

/// Square grid of `n` agents, `spacing` apart, centred on the origin.
/// Agent `i` sits in column `i % k`, row `i / k`.
pub fn grid_swap_scenario(kind: SwapKind, n: usize, spacing: f64, t: &Tunables) -> Result<Scenario, ScenarioError> {
    positive("spacing", spacing)?;
    let k = integer_sqrt(n).ok_or(ScenarioError::NotSquare { n })?;
    if n == 0 {
        return Err(ScenarioError::TooFew { n, min: 1 });
    }
    let half = (k as f64 - 1.0) / 2.0;
    let cell = |c: usize, r: usize| VecD::xy((c as f64 - half) * spacing, (r as f64 - half) * spacing);
    let mut starts = Vec::with_capacity(n);
    let mut goals = Vec::with_capacity(n);
    for r in 0..k {
        for c in 0..k {
            starts.push(cell(c, r));
            goals.push(match kind {
                SwapKind::Mirror => cell(k - 1 - c, r),
                SwapKind::Diagonal => cell(r, c),
            });
        }
    }
    let name = match kind {
        SwapKind::Mirror => format!("mirror-n{n}-s{spacing}"),
        SwapKind::Diagonal => format!("diagonal-n{n}-s{spacing}"),
    };
    let s = Scenario::new(name, Dim::Two, starts, goals).preassigned(true);
    let d = required_spacing(&s, t)?;
    if spacing < d {
        return Err(ScenarioError::SpacingTooSmall { spacing, d });
    }
    Ok(s)
}

fn integer_sqrt(n: usize) -> Option<usize> {
    let k = math::sqrt(n as f64) as usize;
    (k.saturating_sub(1)..=k + 1).find(|c| c * c == n)
}

/// Axis-aligned box.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aabb {
    pub min: VecD,
    pub max: VecD,
}

impl Aabb {
    /// Box `[0, w] × [0, h]`.
    pub fn rect(w: f64, h: f64) -> Self {
        Self {
            min: VecD::xy(0.0, 0.0),
            max: VecD::xy(w, h),
        }
    }

    /// Box `[0, w] × [0, h] × [0, depth]`.
    pub fn cuboid(w: f64, h: f64, depth: f64) -> Self {
        Self {
            min: VecD::xyz(0.0, 0.0, 0.0),
            max: VecD::xyz(w, h, depth),
        }
    }

    pub fn dim(&self) -> Dim {
        self.min.dim()
    }

    pub fn extent(&self) -> VecD {
        self.max - self.min
    }

    pub fn diagonal_sq(&self) -> f64 {
        self.extent().norm_sq()
    }

    pub fn contains(&self, p: &VecD) -> bool {
        (0..self.dim().count()).all(|a| {
            let c = p.components()[a];
            c >= self.min.components()[a] && c <= self.max.components()[a]
        })
    }
}

/// Upper bound on how many points `spacing` apart fit in `b`: the volume of
/// the box grown by half a spacing over the volume of a densest-packing cell.
fn packing_bound(b: &Aabb, spacing: f64) -> f64 {
    let e = b.extent();
    match b.dim() {
        Dim::Two => (e.x() + spacing) * (e.y() + spacing) / (spacing * spacing * math::sqrt(3.0) / 2.0),
        Dim::Three => {
            (e.x() + spacing) * (e.y() + spacing) * (e.z() + spacing) / (spacing * spacing * spacing / math::sqrt(2.0))
        }
    }
}

/// Bridson's dart throwing until the box is saturated.
fn bridson(b: &Aabb, spacing: f64, rng: &mut ChaCha8Rng) -> Vec<VecD> {
    let dim = b.dim();
    let d = dim.count();
    let cell = spacing / math::sqrt(d as f64);
    let ext = b.extent();
    let mut shape = [1usize; 3];
    for (a, s) in shape.iter_mut().enumerate().take(d) {
        *s = (math::ceil(ext.components()[a] / cell) as usize).max(1);
    }
    let mut grid: Vec<Option<u32>> = vec![None; shape[0] * shape[1] * shape[2]];
    let cell_of = |p: &VecD| -> [usize; 3] {
        let mut c = [0usize; 3];
        for a in 0..d {
            let k = math::floor((p.components()[a] - b.min.components()[a]) / cell);
            c[a] = (k.max(0.0) as usize).min(shape[a] - 1);
        }
        c
    };
    let flat = |c: [usize; 3]| (c[2] * shape[1] + c[1]) * shape[0] + c[0];

    let uniform_in_box = |rng: &mut ChaCha8Rng| {
        let mut q = b.min;
        for a in 0..d {
            let lo = b.min.components()[a];
            let hi = b.max.components()[a];
            q = q.with(a, if hi > lo { rng.random_range(lo..hi) } else { lo });
        }
        q
    };

    let mut points: Vec<VecD> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let first = uniform_in_box(rng);
    grid[flat(cell_of(&first))] = Some(0);
    points.push(first);
    active.push(0);

    let reach = 2isize;
    let span_z = if d == 3 { reach } else { 0 };
    let spacing_sq = spacing * spacing;
    while !active.is_empty() {
        let slot = rng.random_range(0..active.len());
        let centre = points[active[slot]];
        let mut placed = false;
        for _ in 0..BRIDSON_K {
            // Uniform direction and radius in [spacing, 2·spacing).
            let candidate = loop {
                let mut off = VecD::zero(dim);
                for a in 0..d {
                    off = off.with(a, rng.random_range(-2.0 * spacing..2.0 * spacing));
                }
                let n2 = off.norm_sq();
                if (spacing_sq..4.0 * spacing_sq).contains(&n2) {
                    break centre + off;
                }
            };
            if !b.contains(&candidate) {
                continue;
            }
            let c = cell_of(&candidate);
            let mut clear = true;
            'scan: for dz in -span_z..=span_z {
                for dy in -reach..=reach {
                    for dx in -reach..=reach {
                        let q = [c[0] as isize + dx, c[1] as isize + dy, c[2] as isize + dz];
                        if (0..3).any(|a| q[a] < 0 || q[a] >= shape[a] as isize) {
                            continue;
                        }
                        let idx = flat([q[0] as usize, q[1] as usize, q[2] as usize]);
                        if let Some(other) = grid[idx] {
                            if points[other as usize].dist(&candidate) < spacing {
                                clear = false;
                                break 'scan;
                            }
                        }
                    }
                }
            }
            if clear {
                let id = points.len();
                grid[flat(c)] = Some(id as u32);
                points.push(candidate);
                active.push(id);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(slot);
        }
    }
    points
}

fn derived_seed(seed: u64, attempt: u64) -> u64 {
    // SplitMix64 finaliser.
    let mut z = seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Exactly `n` points inside `b`, pairwise at least `min_spacing` apart.
/// Saturates the box with Bridson's sampler, then keeps a seeded random
/// subset of `n`.
pub fn poisson_disc(b: &Aabb, min_spacing: f64, n: usize, seed: u64) -> Result<Vec<VecD>, ScenarioError> {
    positive("min_spacing", min_spacing)?;
    if b.min.dim() != b.max.dim() || (0..b.dim().count()).any(|a| b.extent().components()[a] < 0.0) {
        return Err(ScenarioError::BadArgument {
            name: "box",
            value: f64::NAN,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    if n as f64 > packing_bound(b, min_spacing) {
        return Err(ScenarioError::Infeasible {
            n,
            spacing: min_spacing,
        });
    }
    for attempt in 0..MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, attempt));
        let mut points = bridson(b, min_spacing, &mut rng);
        if points.len() >= n {
            points.shuffle(&mut rng);
            points.truncate(n);
            return Ok(points);
        }
    }
    Err(ScenarioError::RetriesExhausted {
        n,
        retries: MAX_RETRIES,
    })
}

/// Parameters of one random case.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomCaseSpec {
    pub n: usize,
    pub bounds: Aabb,
    /// Sampling spacing; `None` derives `d` from the box diagonal.
    pub min_spacing: Option<f64>,
    pub seed: u64,
}

impl RandomCaseSpec {
    pub fn new(n: usize, bounds: Aabb, seed: u64) -> Self {
        Self {
            n,
            bounds,
            min_spacing: None,
            seed,
        }
    }

    /// `d` for the worst case ξ = (box diagonal)², which bounds any draw.
    pub fn sampling_spacing(&self, t: &Tunables) -> f64 {
        self.min_spacing.unwrap_or_else(|| {
            d_from_dstar(
                t.d_star,
                self.n.max(1),
                self.bounds.diagonal_sq(),
                t.v_limit.effective_max(),
                t.rho,
                self.bounds.dim(),
            )
        })
    }
}

/// Independent Poisson-disc draws for starts and goals; goals are assigned
/// when the scenario is prepared.
pub fn random_scenario(spec: &RandomCaseSpec, t: &Tunables) -> Result<Scenario, ScenarioError> {
    let spacing = spec.sampling_spacing(t);
    let starts = poisson_disc(&spec.bounds, spacing, spec.n, derived_seed(spec.seed, 1 << 32))?;
    let goals = poisson_disc(&spec.bounds, spacing, spec.n, derived_seed(spec.seed, (1 << 32) + 1))?;
    let s = Scenario::new(
        format!("random-n{}-seed{}", spec.n, spec.seed),
        spec.bounds.dim(),
        starts,
        goals,
    );
    // d is monotone in ξ and ξ of any draw is at most the diagonal squared.
    let d = required_spacing(&s, t)?;
    if spacing < d {
        return Err(ScenarioError::SpacingTooSmall { spacing, d });
    }
    Ok(s)
}

/// Agents per group in the passage layout.
pub const PASSAGE_GROUP_SIDE: usize = 5;
/// Spacing inside each group (m).
pub const PASSAGE_SPACING: f64 = 4.0;
/// Distance from the origin to the centre of each group (m).
pub const PASSAGE_GROUP_OFFSET: f64 = 40.0;
/// Obstacle centres sit at `(±a, ±a)`.
pub const PASSAGE_OBSTACLE_OFFSET: f64 = 14.0;
pub const PASSAGE_OBSTACLE_RADIUS: f64 = 10.0;

/// Tunables the passage layout is sized for.
pub fn obstacle_passage_tunables() -> Tunables {
    Tunables::new(2.0, VelocityLimit::Uniform(5.0))
}

/// Four 5×5 groups west, south, east and north of the origin. Each group
/// moves diagonally to the next side counterclockwise (west to south, south
/// to east and so on), so opposite groups travel in opposite directions. The
/// straight paths cut through four discs on the diagonals, which leave an
/// 8 m gap on each axis, so every group has to pass the central opening.
pub fn obstacle_passage_scenario() -> Scenario {
    let side = PASSAGE_GROUP_SIDE;
    let half = (side as f64 - 1.0) / 2.0;
    let centres = [
        VecD::xy(-PASSAGE_GROUP_OFFSET, 0.0),
        VecD::xy(0.0, -PASSAGE_GROUP_OFFSET),
        VecD::xy(PASSAGE_GROUP_OFFSET, 0.0),
        VecD::xy(0.0, PASSAGE_GROUP_OFFSET),
    ];
    let mut starts = Vec::with_capacity(4 * side * side);
    for c in centres {
        for r in 0..side {
            for k in 0..side {
                starts.push(c + VecD::xy((k as f64 - half) * PASSAGE_SPACING, (r as f64 - half) * PASSAGE_SPACING));
            }
        }
    }
    let goals = starts.iter().map(|p| VecD::xy(-p.y(), p.x())).collect();
    let a = PASSAGE_OBSTACLE_OFFSET;
    let obstacles = [(a, a), (-a, a), (-a, -a), (a, -a)]
        .into_iter()
        .map(|(x, y)| Obstacle::fixed(VecD::xy(x, y), PASSAGE_OBSTACLE_RADIUS))
        .collect();
    Scenario::new("obstacle-passage", Dim::Two, starts, goals)
        .with_obstacles(obstacles)
        .preassigned(true)
}

/// `n` agents on a circle with adjacent spacing `spacing` reform into two
/// concentric rings of `n/2`: the inner ring with the same adjacent spacing,
/// the outer one `spacing` further out and rotated by half a slot.
pub fn formation_scenario(n: usize, spacing: f64, t: &Tunables) -> Result<Scenario, ScenarioError> {
    positive("spacing", spacing)?;
    if n % 2 == 1 {
        return Err(ScenarioError::OddCount { n });
    }
    if n < 4 {
        return Err(ScenarioError::TooFew { n, min: 4 });
    }
    let m = n / 2;
    let r0 = spacing / adjacent_chord(n, 1.0);
    let r_in = spacing / adjacent_chord(m, 1.0);
    let r_out = r_in + spacing;
    let starts = (0..n)
        .map(|k| point_on_circle(r0, 2.0 * PI * k as f64 / n as f64, Dim::Two))
        .collect();
    let slot = 2.0 * PI / m as f64;
    let goals = (0..m)
        .map(|k| point_on_circle(r_in, k as f64 * slot, Dim::Two))
        .chain((0..m).map(|k| point_on_circle(r_out, (k as f64 + 0.5) * slot, Dim::Two)))
        .collect();
    let s = Scenario::new(format!("formation-n{n}-s{spacing}"), Dim::Two, starts, goals);
    let d = required_spacing(&s, t)?;
    // Chords are computed with rounding; allow a relative hair below spacing.
    if spacing * (1.0 + 1e-12) < d {
        return Err(ScenarioError::SpacingTooSmall { spacing, d });
    }
    Ok(s)
}

/// Tunables of the formation experiment.
pub fn formation_tunables() -> Tunables {
    Tunables::new(0.4, VelocityLimit::Uniform(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_scenario;
    use crate::neighbors::closest_pair_brute_force;

    fn valid(s: &Scenario, t: &Tunables) -> bool {
        let (_, p, _) = resolve_params(s, t).unwrap();
        let report = validate_scenario(s, &p);
        report.is_ok()
    }

    fn close(a: &VecD, b: &VecD) -> bool {
        a.dist(b) < 1e-9
    }

    #[test]
    fn circle_examples() {
        let t = Tunables::new(1.0, VelocityLimit::Uniform(1.0));
        let s = circle_scenario(2, 10.0, Dim::Two, &t).unwrap();
        assert!(close(&s.starts[0], &VecD::xy(10.0, 0.0)));
        assert!(close(&s.starts[1], &VecD::xy(-10.0, 0.0)));
        assert!(close(&s.goals[0], &VecD::xy(-10.0, 0.0)));
        assert!(close(&s.goals[1], &VecD::xy(10.0, 0.0)));

        let s = circle_scenario(4, 10.0, Dim::Two, &t).unwrap();
        let cardinal = [(10.0, 0.0), (0.0, 10.0), (-10.0, 0.0), (0.0, -10.0)];
        for (k, (x, y)) in cardinal.iter().enumerate() {
            assert!(close(&s.starts[k], &VecD::xy(*x, *y)));
            assert!(close(&s.goals[k], &s.starts[(k + 2) % 4]));
        }
    }

    #[test]
    fn circle_rejects_small_radius() {
        let t = Tunables::new(3.0, VelocityLimit::Uniform(15.0));
        match circle_scenario(100, 20.0, Dim::Two, &t) {
            Err(ScenarioError::RadiusTooSmall { min_radius, .. }) => {
                assert!(min_radius > 20.0);
                assert!(circle_scenario(100, min_radius * 1.0001, Dim::Two, &t).is_ok());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn circle_radius_fixed_point_is_tight() {
        let t = Tunables::new(5.0, VelocityLimit::Uniform(15.0));
        for n in [10, 100, 1000] {
            let r = circle_radius_for(n, Dim::Two, &t, 1.0).unwrap();
            let s = circle_scenario(n, r, Dim::Two, &t).unwrap();
            assert!(valid(&s, &t));
            assert!(circle_scenario(n, r * 0.99, Dim::Two, &t).is_err());
        }
    }

    #[test]
    fn hundred_agent_circle_validates() {
        let t = Tunables::new(3.0, VelocityLimit::Uniform(15.0));
        let r = circle_radius_for(100, Dim::Two, &t, 1.2).unwrap();
        let s = circle_scenario(100, r, Dim::Two, &t).unwrap();
        assert!(valid(&s, &t));
        let min = closest_pair_brute_force(&s.starts).unwrap().distance;
        assert!(min >= required_spacing(&s, &t).unwrap());
    }

    #[test]
    fn two_by_two_swaps() {
        let t = Tunables::new(5.0, VelocityLimit::Uniform(15.0));
        // Cells in row-major order: (c0,r0) (c1,r0) (c0,r1) (c1,r1).
        let m = grid_swap_scenario(SwapKind::Mirror, 4, 10.0, &t).unwrap();
        assert_eq!(m.goals, vec![m.starts[1], m.starts[0], m.starts[3], m.starts[2]]);
        let d = grid_swap_scenario(SwapKind::Diagonal, 4, 10.0, &t).unwrap();
        assert_eq!(d.goals, vec![d.starts[0], d.starts[2], d.starts[1], d.starts[3]]);
        assert!(m.preassigned && d.preassigned);
    }

    #[test]
    fn swap_spacing_sweep_validates() {
        let t = Tunables::new(5.0, VelocityLimit::Uniform(15.0));
        for spacing in [6.0, 6.5, 7.5, 8.5, 9.5] {
            for kind in [SwapKind::Mirror, SwapKind::Diagonal] {
                let s = grid_swap_scenario(kind, 100, spacing, &t).unwrap();
                assert_eq!(s.len(), 100);
                assert!(valid(&s, &t));
            }
        }
        assert!(matches!(
            grid_swap_scenario(SwapKind::Mirror, 100, 5.2, &t),
            Err(ScenarioError::SpacingTooSmall { .. })
        ));
        assert_eq!(
            grid_swap_scenario(SwapKind::Mirror, 10, 6.0, &t),
            Err(ScenarioError::NotSquare { n: 10 })
        );
    }

    fn min_pairwise(points: &[VecD]) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                m = m.min(points[i].dist(&points[j]));
            }
        }
        m
    }

    #[test]
    fn poisson_disc_examples() {
        let b = Aabb::rect(40.0, 40.0);
        let one = poisson_disc(&b, 5.0, 1, 3).unwrap();
        assert_eq!(one.len(), 1);
        assert!(b.contains(&one[0]));

        let pts = poisson_disc(&b, 5.27, 30, 11).unwrap();
        assert_eq!(pts.len(), 30);
        assert!(pts.iter().all(|p| b.contains(p)));
        assert!(min_pairwise(&pts) >= 5.27);
        assert_eq!(pts, poisson_disc(&b, 5.27, 30, 11).unwrap());
        assert_ne!(pts, poisson_disc(&b, 5.27, 30, 12).unwrap());
    }

    #[test]
    fn poisson_disc_3d_and_infeasible() {
        let b = Aabb::cuboid(60.0, 60.0, 30.0);
        let pts = poisson_disc(&b, 3.5, 100, 5).unwrap();
        assert!(pts.iter().all(|p| b.contains(p) && p.dim() == Dim::Three));
        assert!(min_pairwise(&pts) >= 3.5);
        assert!(matches!(
            poisson_disc(&Aabb::rect(10.0, 10.0), 5.0, 100, 0),
            Err(ScenarioError::Infeasible { .. })
        ));
    }

    #[test]
    fn random_scenarios_validate() {
        let t = Tunables::new(5.0, VelocityLimit::Uniform(3.0));
        let spec = RandomCaseSpec::new(30, Aabb::rect(40.0, 40.0), 0);
        let spacing = spec.sampling_spacing(&t);
        assert!((spacing - 5.2685).abs() < 1e-4, "{spacing}");
        for seed in 0..10 {
            let s = random_scenario(&RandomCaseSpec { seed, ..spec.clone() }, &t).unwrap();
            assert_eq!(s.len(), 30);
            assert!(!s.preassigned);
            assert!(valid(&s, &t));
            assert!(min_pairwise(&s.starts) >= spacing && min_pairwise(&s.goals) >= spacing);
        }
        let single = random_scenario(&RandomCaseSpec::new(1, Aabb::rect(40.0, 40.0), 4), &t).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn random_3d_validates() {
        let t = Tunables::new(
            3.0,
            VelocityLimit::PerAxis {
                horizontal: 9.0,
                up: 3.0,
                down: 6.0,
            },
        );
        let s = random_scenario(&RandomCaseSpec::new(100, Aabb::cuboid(60.0, 60.0, 30.0), 1), &t).unwrap();
        assert_eq!(s.dim, Dim::Three);
        assert!(valid(&s, &t));
    }

    #[test]
    fn passage_layout() {
        let s = obstacle_passage_scenario();
        assert_eq!(s.len(), 100);
        assert_eq!(s.obstacles.len(), 4);
        for p in s.starts.iter().chain(&s.goals) {
            assert!(s.obstacles.iter().all(|o| o.surface_distance(p) > 0.0));
        }
        assert!(valid(&s, &obstacle_passage_tunables()));
        // West group ends where the south group starts.
        assert!(s.goals[..25].iter().all(|g| s.starts[25..50].contains(g)));
        // The straight path of each group's centre agent crosses a disc.
        for i in [12, 37, 62, 87] {
            let mid = (s.starts[i] + s.goals[i]) * 0.5;
            assert!(s.obstacles.iter().any(|o| o.surface_distance(&mid) < 0.0));
        }
    }

    #[test]
    fn formation_sweep() {
        let t = formation_tunables();
        for spacing in [12.0, 6.0, 3.0, 1.0] {
            let s = formation_scenario(28, spacing, &t).unwrap();
            assert!(valid(&s, &t), "spacing {spacing}");
            assert!((min_pairwise(&s.starts) - spacing).abs() < 1e-9);
            assert!(min_pairwise(&s.goals) >= spacing - 1e-9);
        }
        let s = formation_scenario(4, 2.0, &t).unwrap();
        assert!(valid(&s, &t));
        assert_eq!(formation_scenario(5, 2.0, &t), Err(ScenarioError::OddCount { n: 5 }));
        assert!(matches!(
            formation_scenario(28, 0.3, &t),
            Err(ScenarioError::SpacingTooSmall { .. })
        ));
    }

    #[test]
    fn generators_are_pure() {
        let t = Tunables::new(5.0, VelocityLimit::Uniform(3.0));
        let spec = RandomCaseSpec::new(30, Aabb::rect(40.0, 40.0), 77);
        assert_eq!(random_scenario(&spec, &t).unwrap(), random_scenario(&spec, &t).unwrap());
        assert_eq!(obstacle_passage_scenario(), obstacle_passage_scenario());
    }
}
