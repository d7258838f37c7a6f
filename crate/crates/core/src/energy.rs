//! Energy bookkeeping used as a runtime check on the force law.
//!
//! `H = V(p) + c1·J(p) + K(v)` where `V` is the collective repulsive potential,
//! `J = ½ Σ ‖p_i − T_i‖²` the moment of inertia about the targets and
//! `K = ½ Σ ‖v_i‖²` the kinetic energy. With obstacles present the obstacle
//! potential `Σ ψ̂(s)` is added so the sum stays a Lyapunov candidate.

use crate::controller::{repulsive_potential, Fault, COINCIDENT_DISTANCE};
use crate::model::Obstacle;
use crate::neighbors::NeighborTable;
use crate::sim::World;
use crate::vector::VecD;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Hamiltonian {
    /// `V(p)`.
    pub collective: f64,
    /// `c1 · J(p)`.
    pub inertia: f64,
    /// `K(v)`.
    pub kinetic: f64,
    /// Obstacle potential, zero without obstacles.
    pub obstacle: f64,
    pub total: f64,
}

/// `V(p) = ½ Σ_{i≠j} ψ(‖p_j − p_i‖)`, summed once per unordered pair.
pub fn collective_potential(positions: &[VecD], r: f64, rho: f64) -> Result<f64, Fault> {
    let mut v = 0.0;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            let z = positions[i].dist(&positions[j]);
            if z < COINCIDENT_DISTANCE {
                return Err(Fault::Coincident { i, j, distance: z });
            }
            v += repulsive_potential(z, r, rho);
        }
    }
    Ok(v)
}

/// Same as [`collective_potential`] restricted to the pairs of a neighbour
/// table built with radius `r`. Pairs are visited in the same order, so the
/// two agree exactly.
pub fn collective_potential_in(positions: &[VecD], table: &NeighborTable, r: f64, rho: f64) -> f64 {
    table
        .pairs()
        .map(|(i, j)| repulsive_potential(positions[i].dist(&positions[j]), r, rho))
        .fold(0.0, |acc, x| acc + x)
}

/// `J(p) = ½ Σ ‖p_i − T_i‖²`.
pub fn inertia(positions: &[VecD], targets: &[VecD]) -> f64 {
    0.5 * positions
        .iter()
        .zip(targets)
        .map(|(p, t)| (*p - *t).norm_sq())
        .fold(0.0, |acc, x| acc + x)
}

/// `K(v) = ½ Σ ‖v_i‖²`.
pub fn kinetic(velocities: &[VecD]) -> f64 {
    0.5 * velocities.iter().map(VecD::norm_sq).fold(0.0, |acc, x| acc + x)
}

pub fn obstacle_potential(positions: &[VecD], obstacles: &[Obstacle], r_hat: f64, rho_hat: f64) -> f64 {
    let mut u = 0.0;
    for p in positions {
        for o in obstacles {
            u += repulsive_potential(o.surface_distance(p), r_hat, rho_hat);
        }
    }
    u
}

fn assemble(collective: f64, inertia: f64, kinetic: f64, obstacle: f64) -> Hamiltonian {
    Hamiltonian {
        collective,
        inertia,
        kinetic,
        obstacle,
        total: collective + inertia + kinetic + obstacle,
    }
}

/// Hamiltonian of a world, scanning all pairs.
pub fn hamiltonian(world: &World) -> Result<Hamiltonian, Fault> {
    let p = &world.params;
    Ok(assemble(
        collective_potential(&world.positions, p.r, p.rho)?,
        p.c1 * inertia(&world.positions, &world.targets),
        kinetic(&world.velocities),
        obstacle_potential(&world.positions, &world.obstacles, p.r_hat, p.rho_hat),
    ))
}

/// Hamiltonian of a world using a neighbour table built with radius `r`.
pub fn hamiltonian_in(world: &World, table: &NeighborTable) -> Hamiltonian {
    let p = &world.params;
    assemble(
        collective_potential_in(&world.positions, table, p.r, p.rho),
        p.c1 * inertia(&world.positions, &world.targets),
        kinetic(&world.velocities),
        obstacle_potential(&world.positions, &world.obstacles, p.r_hat, p.rho_hat),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ControlParams, Tunables, VelocityLimit};
    use crate::neighbors::brute_force_neighbors;
    use crate::vector::Dim;
    use alloc::vec;

    const RHO: f64 = 7.5e6;

    #[test]
    fn collective_potential_examples() {
        let r = 5.0;
        let apart = [VecD::xy(0.0, 0.0), VecD::xy(5.0, 0.0), VecD::xy(0.0, 7.0)];
        assert_eq!(collective_potential(&apart, r, RHO).unwrap(), 0.0);

        let z = 4.8;
        let pair = [VecD::xy(0.0, 0.0), VecD::xy(z, 0.0)];
        let expect = RHO / 3.0 * (r - z) * (r - z) * (r - z);
        let v = collective_potential(&pair, r, RHO).unwrap();
        assert!((v - expect).abs() <= 1e-12 * expect);

        let triple = [VecD::xy(0.0, 0.0), VecD::xy(z, 0.0), VecD::xy(2.4, 30.0)];
        assert_eq!(collective_potential(&triple, r, RHO).unwrap(), v);

        let t = brute_force_neighbors(&triple, r);
        assert_eq!(collective_potential_in(&triple, &t, r, RHO), v);
    }

    #[test]
    fn coincident_pair_faults() {
        let pts = [VecD::xy(1.0, 0.0), VecD::xy(1.0, 0.0)];
        assert!(matches!(
            collective_potential(&pts, 5.0, RHO),
            Err(Fault::Coincident { i: 0, j: 1, .. })
        ));
    }

    fn world(positions: alloc::vec::Vec<VecD>, targets: alloc::vec::Vec<VecD>, c1: f64) -> World {
        let t = Tunables::new(1.0, VelocityLimit::Uniform(2.0)).with_gains(c1, None);
        let p = ControlParams::derive(&t, Dim::Two, positions.len(), 0.0, 0.0).unwrap();
        World::new(positions, targets, vec![], p)
    }

    #[test]
    fn hamiltonian_examples() {
        let w = world(
            vec![VecD::xy(0.0, 0.0), VecD::xy(10.0, 0.0)],
            vec![VecD::xy(0.0, 0.0), VecD::xy(10.0, 0.0)],
            10.0,
        );
        assert_eq!(hamiltonian(&w).unwrap().total, 0.0);

        let w = world(vec![VecD::xy(2.0, 0.0)], vec![VecD::xy(0.0, 0.0)], 10.0);
        let h = hamiltonian(&w).unwrap();
        assert_eq!(h.inertia, 20.0);
        assert_eq!(h.total, 20.0);
        assert_eq!(h.kinetic, 0.0);
    }
}
