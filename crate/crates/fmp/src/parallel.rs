//! Multi-threaded control evaluation and a wall clock for the stepping loop.

use std::time::Instant;

use fmp_core::controller::{control_input, Fault, ForceBreakdown};
use fmp_core::neighbors::NeighborTable;
use fmp_core::sim::{Clock, ControlEvaluator, World};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};

/// Environment variable read by the CLI when `--threads` is absent.
pub const THREADS_ENV: &str = "FMP_THREADS";

/// Agents handed to a worker at a time.
const CHUNK: usize = 64;

/// Evaluates agents on a private rayon pool. Every agent reads the same
/// frozen world, so the result does not depend on the number of threads.
pub struct RayonEvaluator {
    pool: ThreadPool,
}

impl RayonEvaluator {
    pub fn new(threads: usize) -> Result<Self, ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl ControlEvaluator for RayonEvaluator {
    fn evaluate(&self, world: &World, table: &NeighborTable) -> Result<Vec<ForceBreakdown>, Fault> {
        let results: Vec<Result<ForceBreakdown, Fault>> = self.pool.install(|| {
            (0..world.len())
                .into_par_iter()
                .with_min_len(CHUNK)
                .map(|i| control_input(i, world, table.of(i)))
                .collect()
        });
        // Sequential scan so the reported fault is always the lowest index.
        results.into_iter().collect()
    }
}

pub fn max_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Monotonic clock measured from construction.
#[derive(Debug)]
pub struct WallClock(Instant);

impl WallClock {
    pub fn new() -> Self {
        Self(Instant::now())
    }
}

impl Default for WallClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for WallClock {
    fn now_ns(&mut self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fmp_core::sim::Sequential;
    use fmp_core::{ControlParams, Dim, Tunables, VecD, VelocityLimit};

    fn world(positions: Vec<VecD>) -> World {
        let t = Tunables::new(1.0, VelocityLimit::Uniform(2.0));
        let p = ControlParams::derive(&t, Dim::Two, positions.len(), 100.0, 5.0).unwrap();
        let targets = positions.iter().map(|q| *q + VecD::xy(3.0, -1.0)).collect();
        World::new(positions, targets, vec![], p)
    }

    #[test]
    fn matches_sequential_bit_for_bit() {
        let positions: Vec<VecD> = (0..500)
            .map(|k| VecD::xy((k % 25) as f64 * 1.02, (k / 25) as f64 * 1.03))
            .collect();
        let w = world(positions);
        let table = w.neighbor_table();
        let expected = Sequential.evaluate(&w, &table).unwrap();
        for threads in [1, 2, 4] {
            let got = RayonEvaluator::new(threads).unwrap().evaluate(&w, &table).unwrap();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn reports_lowest_faulting_agent() {
        let mut positions: Vec<VecD> = (0..300).map(|k| VecD::xy(k as f64 * 2.0, 0.0)).collect();
        positions[250] = positions[251];
        positions[10] = positions[11];
        let w = world(positions);
        let table = w.neighbor_table();
        let err = RayonEvaluator::new(3).unwrap().evaluate(&w, &table).unwrap_err();
        assert!(matches!(err, Fault::Coincident { i: 10, j: 11, .. }), "{err:?}");
        assert_eq!(Sequential.evaluate(&w, &table).unwrap_err(), err);
    }
}
