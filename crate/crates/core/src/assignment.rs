//! One-to-one agent→goal assignment minimising the summed straight-line
//! distance, solved with the Hungarian method in `O(n³)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::vector::VecD;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum AssignmentError {
    #[error("no agents to assign")]
    Empty,
    #[error("{starts} starts but {goals} goals")]
    LengthMismatch { starts: usize, goals: usize },
    #[error("start and goal sets have different dimensions")]
    DimMismatch,
    #[error("not a permutation of 0..{n}")]
    NotPermutation { n: usize },
}

/// `perm[i]` is the goal index given to agent `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pub perm: Vec<usize>,
    pub total_cost: f64,
}

impl Assignment {
    /// Goals reordered so that `targets[i]` belongs to agent `i`.
    pub fn targets(&self, goals: &[VecD]) -> Vec<VecD> {
        self.perm.iter().map(|&g| goals[g]).collect()
    }
}

fn check_shapes(starts: &[VecD], goals: &[VecD]) -> Result<(), AssignmentError> {
    if starts.is_empty() {
        return Err(AssignmentError::Empty);
    }
    if starts.len() != goals.len() {
        return Err(AssignmentError::LengthMismatch {
            starts: starts.len(),
            goals: goals.len(),
        });
    }
    let dim = starts[0].dim();
    if starts.iter().chain(goals).any(|p| p.dim() != dim) {
        return Err(AssignmentError::DimMismatch);
    }
    Ok(())
}

/// `Σ_i ‖goals[perm[i]] − starts[i]‖`.
pub fn assignment_cost(starts: &[VecD], goals: &[VecD], perm: &[usize]) -> Result<f64, AssignmentError> {
    if starts.len() != goals.len() || perm.len() != starts.len() {
        return Err(AssignmentError::LengthMismatch {
            starts: starts.len(),
            goals: goals.len(),
        });
    }
    let n = perm.len();
    let mut seen = vec![false; n];
    for &g in perm {
        if g >= n || core::mem::replace(&mut seen[g], true) {
            return Err(AssignmentError::NotPermutation { n });
        }
    }
    Ok(starts
        .iter()
        .zip(perm)
        .map(|(s, &g)| goals[g].dist(s))
        .fold(0.0, |acc, x| acc + x))
}

/// Minimum-cost assignment of starts to goals.
///
/// Shortest augmenting paths with row/column potentials: each row is inserted
/// in turn and the potentials keep reduced costs non-negative, so the final
/// matching is optimal. Ties are broken by the deterministic scan order.
pub fn hungarian_assign(starts: &[VecD], goals: &[VecD]) -> Result<Assignment, AssignmentError> {
    check_shapes(starts, goals)?;
    let n = starts.len();
    let cost: Vec<f64> = starts
        .iter()
        .flat_map(|s| goals.iter().map(move |g| g.dist(s)))
        .collect();

    // 1-based with a virtual column 0; `row_of[j]` is the row matched to column j.
    let mut row_pot = vec![0.0f64; n + 1];
    let mut col_pot = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        row_of[0] = row;
        let mut col = 0usize;
        min_slack.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[col] = true;
            let r = row_of[col];
            let mut delta = f64::INFINITY;
            let mut next = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[(r - 1) * n + (j - 1)] - row_pot[r] - col_pot[j];
                if reduced < min_slack[j] {
                    min_slack[j] = reduced;
                    way[j] = col;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    next = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    row_pot[row_of[j]] += delta;
                    col_pot[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            col = next;
            if row_of[col] == 0 {
                break;
            }
        }
        // Flip the augmenting path back to the virtual column.
        while col != 0 {
            let prev = way[col];
            row_of[col] = row_of[prev];
            col = prev;
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[row_of[j] - 1] = j - 1;
    }
    let total_cost = assignment_cost(starts, goals, &perm)?;
    Ok(Assignment { perm, total_cost })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive minimum over all permutations (Heap's algorithm).
    fn brute_force_min(starts: &[VecD], goals: &[VecD]) -> f64 {
        let n = starts.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = assignment_cost(starts, goals, &perm).unwrap();
        let mut c = vec![0usize; n];
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                best = best.min(assignment_cost(starts, goals, &perm).unwrap());
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        best
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<VecD> {
        (0..n)
            .map(|_| VecD::xy(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)))
            .collect()
    }

    #[test]
    fn cost_examples() {
        let a = [VecD::xy(0.0, 0.0), VecD::xy(1.0, 0.0)];
        let b = [VecD::xy(1.0, 0.0), VecD::xy(0.0, 0.0)];
        assert_eq!(assignment_cost(&a, &a, &[0, 1]), Ok(0.0));
        assert_eq!(assignment_cost(&a, &b, &[1, 0]), Ok(0.0));
        assert_eq!(assignment_cost(&a, &b, &[0, 1]), Ok(2.0));
        assert_eq!(
            assignment_cost(&a, &b, &[0, 0]),
            Err(AssignmentError::NotPermutation { n: 2 })
        );
        assert_eq!(
            assignment_cost(&a, &b, &[0, 2]),
            Err(AssignmentError::NotPermutation { n: 2 })
        );
    }

    #[test]
    fn identity_when_starts_are_goals() {
        let pts: Vec<VecD> = (0..5).map(|k| VecD::xy(6.0 * k as f64, (k * k) as f64)).collect();
        let a = hungarian_assign(&pts, &pts).unwrap();
        assert_eq!(a.perm, vec![0, 1, 2, 3, 4]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn swap_pair() {
        let a = [VecD::xy(0.0, 0.0), VecD::xy(1.0, 0.0)];
        let b = [VecD::xy(1.0, 0.0), VecD::xy(0.0, 0.0)];
        let s = hungarian_assign(&a, &b).unwrap();
        assert_eq!(s.perm, vec![1, 0]);
        assert_eq!(s.total_cost, 0.0);
    }

    #[test]
    fn six_agents_match_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = random_points(&mut rng, 6);
        let g = random_points(&mut rng, 6);
        let a = hungarian_assign(&s, &g).unwrap();
        let best = brute_force_min(&s, &g);
        assert!((a.total_cost - best).abs() <= 1e-9 * best.max(1.0));
    }

    #[test]
    fn optimal_on_random_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for case in 0..200 {
            let n = rng.random_range(1..=7);
            let s = random_points(&mut rng, n);
            let g = random_points(&mut rng, n);
            let a = hungarian_assign(&s, &g).unwrap();
            let best = brute_force_min(&s, &g);
            assert!((a.total_cost - best).abs() <= 1e-9 * best.max(1.0), "case {case}");
            let mut sorted = a.perm.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn translation_leaves_cost_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..30 {
            let n = rng.random_range(2..=12);
            let s = random_points(&mut rng, n);
            let g = random_points(&mut rng, n);
            let shift = VecD::xy(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
            let s2: Vec<VecD> = s.iter().map(|p| *p + shift).collect();
            let g2: Vec<VecD> = g.iter().map(|p| *p + shift).collect();
            let a = hungarian_assign(&s, &g).unwrap();
            let b = hungarian_assign(&s2, &g2).unwrap();
            assert!((a.total_cost - b.total_cost).abs() <= 1e-9 * a.total_cost.max(1.0));
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(hungarian_assign(&[], &[]), Err(AssignmentError::Empty));
        assert_eq!(
            hungarian_assign(&[VecD::xy(0.0, 0.0)], &[]),
            Err(AssignmentError::LengthMismatch { starts: 1, goals: 0 })
        );
        assert_eq!(
            hungarian_assign(&[VecD::xy(0.0, 0.0)], &[VecD::xyz(0.0, 0.0, 0.0)]),
            Err(AssignmentError::DimMismatch)
        );
    }
}
