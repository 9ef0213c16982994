//! Closed-form solver for the adaptive probabilistic K-NN graph.
//!
//! Given the distances from a target patch to its candidates, the solver
//! ranks candidates by ascending distance (stable, ties broken by candidate
//! index) and assigns the K nearest a probability
//!
//! ```text
//! w_h = (d[K] - d[h]) / (K * d[K] - sum_{r < K} d[r]),   h = 0..K
//! ```
//!
//! (0-based ranks; `d` sorted ascending). The weights are the unique
//! minimizer of `||w + d / (2 gamma)||^2` over the probability simplex for
//! the trade-off value returned by [`gamma_of_k`]. When the first K + 1
//! distances are all equal the denominator vanishes and the solver falls
//! back to uniform weights 1/K, the limit the regularized problem tends to.

use crate::error::{Error, Result};

/// Denominators at or below this are treated as degenerate (all of the
/// nearest K + 1 distances coincide) and trigger the uniform fallback.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// Sparse probability graph over one target's candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    /// Indices into the candidate list, ascending by distance; length K.
    pub ranked: Vec<usize>,
    /// Probability of each ranked neighbor; sums to one, non-increasing.
    pub weights: Vec<f64>,
    /// True when the uniform fallback was used.
    pub uniform_fallback: bool,
}

/// Stable ascending argsort: ties keep candidate-index order.
fn rank_by_distance(dist: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dist.len()).collect();
    order.sort_by(|&i, &j| dist[i].partial_cmp(&dist[j]).expect("finite distances"));
    order
}

/// Solve for the K-neighbor probability graph of one target.
///
/// `dist` must hold at least `k + 1` finite, nonnegative entries.
pub fn solve_simplex(dist: &[f64], k: usize) -> Result<NeighborGraph> {
    let n = dist.len();
    if k < 1 {
        return Err(Error::InvalidParams("neighbor count must be >= 1".into()));
    }
    if n <= k {
        return Err(Error::TooFewCandidates {
            needed: k + 1,
            found: n,
        });
    }
    let order = rank_by_distance(dist);
    let ranked: Vec<usize> = order[..k].to_vec();
    let d_next = dist[order[k]];
    let nearest_sum: f64 = ranked.iter().map(|&i| dist[i]).sum();
    let denom = k as f64 * d_next - nearest_sum;
    let (weights, uniform_fallback) = if denom <= DEGENERATE_DENOMINATOR {
        (vec![1.0 / k as f64; k], true)
    } else {
        (
            ranked.iter().map(|&i| (d_next - dist[i]) / denom).collect(),
            false,
        )
    };
    Ok(NeighborGraph {
        ranked,
        weights,
        uniform_fallback,
    })
}

/// Trade-off value for which the closed-form solution solves the
/// regularized simplex problem: `gamma = K/2 * d[K] - 1/2 * sum_{r<K} d[r]`
/// over the ascending-sorted distances. Always nonnegative.
pub fn gamma_of_k(dist: &[f64], k: usize) -> Result<f64> {
    let n = dist.len();
    if k < 1 {
        return Err(Error::InvalidParams("neighbor count must be >= 1".into()));
    }
    if n <= k {
        return Err(Error::TooFewCandidates {
            needed: k + 1,
            found: n,
        });
    }
    let order = rank_by_distance(dist);
    let d_next = dist[order[k]];
    let nearest_sum: f64 = order[..k].iter().map(|&i| dist[i]).sum();
    Ok(0.5 * (k as f64 * d_next - nearest_sum))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_point_example() {
        let g = solve_simplex(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(g.ranked, vec![0, 1]);
        assert!((g.weights[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.weights[1] - 1.0 / 3.0).abs() < 1e-15);
        assert!(!g.uniform_fallback);
    }

    #[test]
    fn equal_distances_fall_back_to_uniform() {
        let g = solve_simplex(&[0.7; 5], 3).unwrap();
        assert_eq!(g.ranked, vec![0, 1, 2]);
        assert_eq!(g.weights, vec![1.0 / 3.0; 3]);
        assert!(g.uniform_fallback);
    }

    #[test]
    fn tied_pair_with_k1_falls_back() {
        // denominator: 1 * 0.5 - 0.5 = 0
        let g = solve_simplex(&[0.5, 0.5, 2.0], 1).unwrap();
        assert_eq!(g.ranked, vec![0]);
        assert_eq!(g.weights, vec![1.0]);
        assert!(g.uniform_fallback);
    }

    #[test]
    fn boundary_tie_zeroes_the_last_rank() {
        // d[K-1] == d[K]: the closed form puts exactly zero weight on the
        // last kept rank while the head still sums to one.
        let g = solve_simplex(&[1.0, 2.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(g.ranked, vec![0, 1]);
        assert_eq!(g.weights, vec![1.0, 0.0]);
        assert!(!g.uniform_fallback);
    }

    #[test]
    fn tied_distances_share_equal_weight() {
        let g = solve_simplex(&[5.0, 1.0, 1.0, 9.0], 2).unwrap();
        assert_eq!(g.ranked, vec![1, 2], "stable sort keeps index order");
        assert_eq!(g.weights[0], g.weights[1]);
        assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_candidates_is_an_error() {
        assert!(matches!(
            solve_simplex(&[1.0, 2.0], 2),
            Err(Error::TooFewCandidates {
                needed: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn gamma_examples() {
        let g = gamma_of_k(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert!((g - 1.5).abs() < 1e-15);
        assert_eq!(gamma_of_k(&[0.4; 4], 2).unwrap(), 0.0);
    }

    #[test]
    fn weights_are_sorted_and_sparse() {
        let dist = [5.0, 0.25, 3.0, 0.75, 9.0, 1.5];
        let g = solve_simplex(&dist, 3).unwrap();
        assert_eq!(g.ranked, vec![1, 3, 5]);
        for pair in g.weights.windows(2) {
            assert!(pair[0] >= pair[1]);
        }
        let sum: f64 = g.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10);
    }

    proptest! {
        #[test]
        fn simplex_feasibility(
            dist in proptest::collection::vec(0.0f64..10.0, 3..16),
            k_seed in 1usize..15,
        ) {
            let k = 1 + k_seed % (dist.len() - 1);
            let g = solve_simplex(&dist, k).unwrap();
            let sum: f64 = g.weights.iter().sum();
            prop_assert!((sum - 1.0).abs() <= 1e-10);
            prop_assert!(g.weights.iter().all(|&w| (-1e-10..=1.0 + 1e-10).contains(&w)));
            prop_assert_eq!(g.ranked.len(), k);
            for pair in g.weights.windows(2) {
                prop_assert!(pair[0] >= pair[1] - 1e-12);
            }
        }

        #[test]
        fn gamma_is_nonnegative(
            dist in proptest::collection::vec(0.0f64..10.0, 3..16),
            k_seed in 1usize..15,
        ) {
            let k = 1 + k_seed % (dist.len() - 1);
            prop_assert!(gamma_of_k(&dist, k).unwrap() >= 0.0);
        }

        #[test]
        fn permutation_equivariance(
            dist in proptest::collection::vec(0.0f64..10.0, 4..12),
            shift in 1usize..11,
        ) {
            // Tie-free inputs: perturb duplicates deterministically.
            let mut dist = dist;
            dist.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for i in 1..dist.len() {
                if dist[i] <= dist[i - 1] {
                    dist[i] = dist[i - 1] + 1e-3;
                }
            }
            let n = dist.len();
            let k = 2.min(n - 1);
            let base = solve_simplex(&dist, k).unwrap();
            // Rotate the vector and check the solution rotates with it.
            let shift = shift % n;
            let rotated: Vec<f64> = (0..n).map(|i| dist[(i + shift) % n]).collect();
            let rot = solve_simplex(&rotated, k).unwrap();
            for (r_idx, r_w) in rot.ranked.iter().zip(rot.weights.iter()) {
                let original_idx = (r_idx + shift) % n;
                let pos = base.ranked.iter().position(|&i| i == original_idx);
                prop_assert!(pos.is_some(), "rotated rank set must match");
                prop_assert!((base.weights[pos.unwrap()] - r_w).abs() <= 1e-12);
            }
        }
    }
}
