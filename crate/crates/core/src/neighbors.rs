//! Fixed-radius neighbour queries.
//!
//! Small teams use an all-pairs scan. Larger teams bucket agents in a uniform
//! grid with cell size `r`, so only the `3^dim` surrounding cells are visited.
//! Both paths return the same neighbour lists in ascending index order, which
//! keeps force sums bit-identical whichever path produced the list.

use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::math;
use crate::vector::VecD;

/// Team size from which [`NeighborStrategy::Auto`] switches to the grid.
pub const GRID_THRESHOLD: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NeighborStrategy {
    BruteForce,
    Grid,
    #[default]
    Auto,
}

impl NeighborStrategy {
    fn use_grid(self, n: usize) -> bool {
        match self {
            NeighborStrategy::BruteForce => false,
            NeighborStrategy::Grid => true,
            NeighborStrategy::Auto => n >= GRID_THRESHOLD,
        }
    }
}

/// Neighbour lists in compressed row form.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct NeighborTable {
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl NeighborTable {
    fn with_capacity(n: usize) -> Self {
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        Self {
            offsets,
            indices: Vec::new(),
        }
    }

    fn close_row(&mut self) {
        self.offsets.push(self.indices.len());
    }

    /// Neighbours of agent `i`, ascending.
    pub fn of(&self, i: usize) -> &[usize] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unordered pairs `(i, j)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| self.of(i).iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }
}

pub fn brute_force_neighbors(positions: &[VecD], r: f64) -> NeighborTable {
    let mut table = NeighborTable::with_capacity(positions.len());
    for (i, p) in positions.iter().enumerate() {
        for (j, q) in positions.iter().enumerate() {
            if j != i && p.dist(q) < r {
                table.indices.push(j);
            }
        }
        table.close_row();
    }
    table
}

type CellKey = [i64; 3];

/// Agents bucketed by grid cell: `order[start..start + len]` holds the
/// agents of one cell in ascending index order.
struct CellIndex {
    cell: f64,
    cells: HashMap<CellKey, (usize, usize)>,
    order: Vec<usize>,
    three_d: bool,
}

impl CellIndex {
    fn build(positions: &[VecD], cell: f64) -> Self {
        let three_d = positions.first().is_some_and(|p| p.dim().count() == 3);
        let keys: Vec<CellKey> = positions.iter().map(|p| Self::key_of(p, cell)).collect();
        let mut cells: HashMap<CellKey, (usize, usize)> = HashMap::with_capacity(positions.len());
        for k in &keys {
            cells.entry(*k).or_insert((0, 0)).1 += 1;
        }
        let mut next = 0;
        for (start, len) in cells.values_mut() {
            *start = next;
            next += *len;
            *len = 0;
        }
        let mut order = alloc::vec![0; positions.len()];
        for (i, k) in keys.iter().enumerate() {
            let (start, len) = cells.get_mut(k).expect("counted above");
            order[*start + *len] = i;
            *len += 1;
        }
        Self {
            cell,
            cells,
            order,
            three_d,
        }
    }

    fn key_of(p: &VecD, cell: f64) -> CellKey {
        [
            math::floor(p.x() / cell) as i64,
            math::floor(p.y() / cell) as i64,
            math::floor(p.z() / cell) as i64,
        ]
    }

    /// Calls `f(j)` for every agent in the cells adjacent to `p`'s cell.
    fn for_each_near(&self, p: &VecD, mut f: impl FnMut(usize)) {
        let k = Self::key_of(p, self.cell);
        let dz: &[i64] = if self.three_d { &[-1, 0, 1] } else { &[0] };
        for &oz in dz {
            for oy in [-1i64, 0, 1] {
                for ox in [-1i64, 0, 1] {
                    let key = [
                        k[0].saturating_add(ox),
                        k[1].saturating_add(oy),
                        k[2].saturating_add(oz),
                    ];
                    if let Some(&(start, len)) = self.cells.get(&key) {
                        self.order[start..start + len].iter().for_each(|&j| f(j));
                    }
                }
            }
        }
    }
}

pub fn grid_neighbors(positions: &[VecD], r: f64) -> NeighborTable {
    let index = CellIndex::build(positions, r);
    let mut table = NeighborTable::with_capacity(positions.len());
    for (i, p) in positions.iter().enumerate() {
        let start = table.indices.len();
        index.for_each_near(p, |j| {
            if j != i && p.dist(&positions[j]) < r {
                table.indices.push(j);
            }
        });
        table.indices[start..].sort_unstable();
        table.close_row();
    }
    table
}

/// Every `j ≠ i` with `‖p_j − p_i‖ < r`, per agent.
pub fn neighbors(positions: &[VecD], r: f64, strategy: NeighborStrategy) -> NeighborTable {
    if strategy.use_grid(positions.len()) {
        grid_neighbors(positions, r)
    } else {
        brute_force_neighbors(positions, r)
    }
}

/// Closest pair of a point set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClosestPair {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

impl ClosestPair {
    fn offer(best: &mut Option<ClosestPair>, i: usize, j: usize, distance: f64) {
        let better = match best {
            None => true,
            Some(b) => distance < b.distance || (distance == b.distance && (i, j) < (b.i, b.j)),
        };
        if better {
            *best = Some(ClosestPair { i, j, distance });
        }
    }
}

pub fn closest_pair_brute_force(positions: &[VecD]) -> Option<ClosestPair> {
    let mut best = None;
    for i in 0..positions.len() {
        for j in i + 1..positions.len() {
            ClosestPair::offer(&mut best, i, j, positions[i].dist(&positions[j]));
        }
    }
    best
}

/// Exact closest pair using grids of growing cell size, starting at `cell`.
/// Any pair closer than the cell size lies in adjacent cells, so the search
/// stops once the best pair found is no farther apart than one cell.
pub fn closest_pair(positions: &[VecD], cell: f64) -> Option<ClosestPair> {
    if positions.len() < 2 {
        return None;
    }
    let mut cell = if cell.is_finite() && cell > 0.0 { cell } else { 1.0 };
    loop {
        let index = CellIndex::build(positions, cell);
        let mut best = None;
        for (i, p) in positions.iter().enumerate() {
            index.for_each_near(p, |j| {
                if j > i {
                    ClosestPair::offer(&mut best, i, j, p.dist(&positions[j]));
                }
            });
        }
        match best {
            Some(b) if b.distance <= cell => return Some(b),
            Some(b) => cell = b.distance,
            None => cell *= 4.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize, extent: f64, three: bool) -> Vec<VecD> {
        (0..n)
            .map(|_| {
                let x = rng.random_range(-extent..extent);
                let y = rng.random_range(-extent..extent);
                if three {
                    VecD::xyz(x, y, rng.random_range(-extent..extent))
                } else {
                    VecD::xy(x, y)
                }
            })
            .collect()
    }

    #[test]
    fn grid_matches_brute_force_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for case in 0..50 {
            let three = case % 2 == 1;
            let n = rng.random_range(2..400);
            let pts = cloud(&mut rng, n, 40.0, three);
            let r = rng.random_range(0.5..12.0);
            assert_eq!(grid_neighbors(&pts, r), brute_force_neighbors(&pts, r), "case {case}");
        }
    }

    #[test]
    fn closest_pair_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for case in 0..40 {
            let n = rng.random_range(2..300);
            let pts = cloud(&mut rng, n, 100.0, case % 3 == 0);
            let hint = rng.random_range(0.01..5.0);
            assert_eq!(closest_pair(&pts, hint), closest_pair_brute_force(&pts), "case {case}");
        }
        assert_eq!(closest_pair(&[VecD::xy(0.0, 0.0)], 1.0), None);
    }

    #[test]
    fn pairs_are_unique() {
        let pts = [VecD::xy(0.0, 0.0), VecD::xy(1.0, 0.0), VecD::xy(2.0, 0.0)];
        let t = brute_force_neighbors(&pts, 1.5);
        let pairs: Vec<_> = t.pairs().collect();
        assert_eq!(pairs, alloc::vec![(0, 1), (1, 2)]);
        assert_eq!(t.of(1), &[0, 2]);
    }
}
