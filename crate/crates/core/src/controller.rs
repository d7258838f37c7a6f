//! The force law of a single agent and the parameter pipeline that sizes it.
//!
//! An agent feels three accelerations:
//!
//! * repulsion from every other agent closer than the communication radius `r`,
//!   with pairwise magnitude `φ(z) = −ρ (z − r)²` on `0 < z < r`,
//! * a PD pull towards its assigned target, `−c1 (p − T) − c2 v`,
//! * repulsion from the closest surface point of every obstacle nearer than
//!   `r_hat`, with the same quadratic profile.
//!
//! No attraction between agents and no velocity consensus. The velocity
//! bound is enforced after integration by [`cap_velocity`], which is the
//! discrete form of switching the control off at the speed limit.

use crate::math;
use crate::model::{Obstacle, VelocityLimit};
use crate::sim::World;
use crate::vector::{Dim, VecD};

/// Pairs closer than this are treated as coincident.
pub const COINCIDENT_DISTANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
pub enum Fault {
    #[error("agents {i} and {j} coincide (distance {distance} m)")]
    Coincident { i: usize, j: usize, distance: f64 },
    #[error("agent {agent} is inside obstacle {obstacle} (clearance {clearance} m)")]
    InsideObstacle {
        agent: usize,
        obstacle: usize,
        clearance: f64,
    },
    #[error("agent {agent} has a non-finite state")]
    NonFinite { agent: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, thiserror::Error)]
#[error("pairwise distance must be positive, got {0}")]
pub struct NonPositiveDistance(pub f64);

/// Acceleration of one agent split by source.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceBreakdown {
    pub repulsive: VecD,
    pub navigational: VecD,
    pub obstacle: VecD,
    pub total: VecD,
}

#[inline]
fn phi(z: f64, range: f64, gain: f64) -> f64 {
    if z < range {
        let k = z - range;
        -gain * k * k
    } else {
        0.0
    }
}

/// Pairwise repulsion magnitude `φ(z)`; never positive, zero from `r` on.
pub fn repulsive_phi(z: f64, r: f64, rho: f64) -> Result<f64, NonPositiveDistance> {
    if z > 0.0 {
        Ok(phi(z, r, rho))
    } else {
        Err(NonPositiveDistance(z))
    }
}

/// Pairwise potential `ψ(z) = (ρ/3)(r − z)³` below `r`, zero beyond; `ψ' = φ`.
#[inline]
pub fn repulsive_potential(z: f64, r: f64, rho: f64) -> f64 {
    if z < r {
        let k = r - z;
        rho / 3.0 * k * k * k
    } else {
        0.0
    }
}

/// Obstacle repulsion magnitude as a function of surface distance `s`.
#[inline]
pub fn obstacle_phi(s: f64, r_hat: f64, rho_hat: f64) -> f64 {
    phi(s, r_hat, rho_hat)
}

/// Repulsion on agent `i` from the candidates in `neighbors` (indices into
/// `positions`, `i` itself is skipped). Candidates farther than `r` do not
/// contribute, so any superset of the true neighbourhood gives the same sum
/// provided the candidate order is the same.
pub fn repulsive_force_among(
    i: usize,
    positions: &[VecD],
    neighbors: &[usize],
    r: f64,
    rho: f64,
) -> Result<VecD, Fault> {
    let pi = positions[i];
    let mut f = VecD::zero(pi.dim());
    for &j in neighbors {
        if j == i {
            continue;
        }
        let delta = positions[j] - pi;
        let z = delta.norm();
        if z < COINCIDENT_DISTANCE {
            let (i, j) = if i < j { (i, j) } else { (j, i) };
            return Err(Fault::Coincident { i, j, distance: z });
        }
        if z < r {
            f += delta * (phi(z, r, rho) / z);
        }
    }
    Ok(f)
}

/// Repulsion on agent `i` scanning every other agent.
pub fn repulsive_force(i: usize, positions: &[VecD], r: f64, rho: f64) -> Result<VecD, Fault> {
    let pi = positions[i];
    let mut f = VecD::zero(pi.dim());
    for (j, pj) in positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let delta = *pj - pi;
        let z = delta.norm();
        if z < r {
            if z < COINCIDENT_DISTANCE {
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                return Err(Fault::Coincident { i, j, distance: z });
            }
            f += delta * (phi(z, r, rho) / z);
        }
    }
    Ok(f)
}

/// PD pull towards `target`.
#[inline]
pub fn navigational_feedback(p: VecD, v: VecD, target: VecD, c1: f64, c2: f64) -> VecD {
    (p - target) * (-c1) - v * c2
}

/// Repulsion on an agent at `p` from obstacles whose surface is nearer than
/// `r_hat`. The agent index is only used to label a fault.
pub fn obstacle_force(agent: usize, p: VecD, obstacles: &[Obstacle], r_hat: f64, rho_hat: f64) -> Result<VecD, Fault> {
    let mut f = VecD::zero(p.dim());
    for (obstacle, o) in obstacles.iter().enumerate() {
        let delta = o.center - p;
        let to_center = delta.norm();
        let clearance = to_center - o.radius;
        if clearance <= 0.0 {
            return Err(Fault::InsideObstacle {
                agent,
                obstacle,
                clearance,
            });
        }
        if clearance < r_hat {
            f += delta * (obstacle_phi(clearance, r_hat, rho_hat) / to_center);
        }
    }
    Ok(f)
}

/// Communication radius `r = ∛(3 v² / 2ρ) + d`.
pub fn comm_radius(v_max: f64, rho: f64, d: f64) -> f64 {
    d + interaction_margin(v_max, rho)
}

/// `∛(3 v² / 2ρ)`, the depth a pair moving at `v` can reach into the
/// repulsive zone.
pub fn interaction_margin(v_max: f64, rho: f64) -> f64 {
    math::cbrt(3.0 * v_max * v_max / (2.0 * rho))
}

/// Initial-spacing bound `d` that keeps every pair at least `d_star` apart:
///
/// `d = d* + ∛(((k n − 3) v² + 3 n ξ) / 2ρ)` with `k = 9` in 2D and `18` in 3D,
/// where `ξ` is the largest squared start-to-goal distance.
pub fn d_from_dstar(d_star: f64, n: usize, xi: f64, v_max: f64, rho: f64, dim: Dim) -> f64 {
    let n = n as f64;
    let k = match dim {
        Dim::Two => 9.0,
        Dim::Three => 18.0,
    };
    d_star + math::cbrt(((k * n - 3.0) * v_max * v_max + 3.0 * n * xi) / (2.0 * rho))
}

/// Default obstacle interaction range: the required clearance plus the same
/// velocity margin as the agent radius.
pub fn obstacle_range(d_hat_star: f64, v_max: f64, rho_hat: f64) -> f64 {
    d_hat_star + interaction_margin(v_max, rho_hat)
}

fn clamp_norm(v: VecD, max: f64) -> VecD {
    let n = v.norm();
    if n <= max {
        return v;
    }
    let mut w = v * (max / n);
    // Rounding can leave the rescaled norm one ulp above the bound.
    while w.norm() > max {
        w = w * (1.0 - f64::EPSILON);
    }
    w
}

/// Projects `v` onto the velocity limit. Uniform limits rescale the vector,
/// per-axis limits clamp the horizontal norm and the vertical rate separately.
pub fn cap_velocity(v: VecD, limit: &VelocityLimit) -> VecD {
    match *limit {
        VelocityLimit::Uniform(max) => clamp_norm(v, max),
        VelocityLimit::PerAxis { horizontal, up, down } => match v.dim() {
            Dim::Two => clamp_norm(v, horizontal),
            Dim::Three => {
                let h = clamp_norm(VecD::xy(v.x(), v.y()), horizontal);
                VecD::xyz(h.x(), h.y(), v.z().clamp(-down, up))
            }
        },
    }
}

/// Control input of agent `i` evaluated on the frozen `world` snapshot.
/// `neighbors` must contain every agent within `r` of `i`, in ascending order.
pub fn control_input(i: usize, world: &World, neighbors: &[usize]) -> Result<ForceBreakdown, Fault> {
    let p = &world.params;
    let agent = world.agent(i);
    let positions = world.positions();
    let repulsive = repulsive_force_among(i, positions, neighbors, p.r, p.rho)?;
    let navigational = navigational_feedback(agent.position, agent.velocity, world.targets[i], p.c1, p.c2);
    let obstacle = obstacle_force(i, agent.position, &world.obstacles, p.r_hat, p.rho_hat)?;
    Ok(ForceBreakdown {
        repulsive,
        navigational,
        obstacle,
        total: repulsive + navigational + obstacle,
    })
}
