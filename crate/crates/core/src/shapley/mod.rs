//! Shapley attributions: exact subset enumeration and permutation sampling.

mod pipeline;
mod report;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use pipeline::{
    attribute, attribute_datasets, attribute_env, attribute_files, attribute_game, load_graph,
    AttributionSettings, SeedPlan,
};
pub use report::{AttributionReport, Diagnostics, Method, RankedEntry};

use crate::error::{Error, Result};
use crate::game::{Coalition, ValueFunction};

/// Exact enumeration is used up to this many players by default (4,096 coalitions).
pub const DEFAULT_EXACT_THRESHOLD: usize = 12;

/// Weight of a marginal contribution to a coalition of size `s`:
/// `s! (k - s - 1)! / k!`, i.e. `1 / (k · C(k-1, s))`.
fn subset_weights(k: usize) -> Vec<f64> {
    let mut binom = vec![1.0f64; k];
    for s in 1..k {
        binom[s] = binom[s - 1] * (k - s) as f64 / s as f64;
    }
    binom.iter().map(|b| 1.0 / (k as f64 * b)).collect()
}

/// Evaluates `v` on every coalition of its players, in bitmask order.
pub fn all_values<V: ValueFunction + ?Sized>(v: &V) -> Vec<f64> {
    let k = v.n_players();
    #[cfg(feature = "parallel")]
    let out = (0..1u64 << k)
        .into_par_iter()
        .map(|b| v.value(Coalition::from_bits(b)))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let out = (0..1u64 << k)
        .map(|b| v.value(Coalition::from_bits(b)))
        .collect();
    out
}

/// Shapley values by enumerating all `2^k` coalitions once each.
pub fn exact_shapley<V: ValueFunction + ?Sized>(v: &V, max_players: usize) -> Result<Vec<f64>> {
    let k = v.n_players();
    if k > max_players || k > 30 {
        return Err(Error::TooManyPlayers {
            k,
            max: max_players.min(30),
        });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let values = all_values(v);
    let weights = subset_weights(k);
    let mut attr = vec![0.0; k];
    for (bits, &base) in values.iter().enumerate() {
        let c = Coalition::from_bits(bits as u64);
        let w = weights.get(c.len()).copied().unwrap_or(0.0);
        for (d, a) in attr.iter_mut().enumerate() {
            if !c.contains(d) {
                *a += w * (values[c.with(d).bits() as usize] - base);
            }
        }
    }
    Ok(attr)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermutationEstimate {
    pub attributions: Vec<f64>,
    /// Standard error of each mean over permutations.
    pub stderr: Vec<f64>,
    pub permutations: usize,
}

/// Monte Carlo Shapley values from `m` uniformly random orderings.
pub fn permutation_shapley<V: ValueFunction + ?Sized>(
    v: &V,
    m: usize,
    seed: u64,
) -> Result<PermutationEstimate> {
    if m < 2 {
        return Err(Error::TooFewPermutations(m));
    }
    let k = v.n_players();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..k).collect();
    let mut mean = vec![0.0; k];
    let mut m2 = vec![0.0; k];
    let empty = v.value(Coalition::EMPTY);
    for t in 1..=m {
        let tf = t as f64;
        order.shuffle(&mut rng);
        let mut prefix = Coalition::EMPTY;
        let mut prev = empty;
        for &d in &order {
            prefix = prefix.with(d);
            let cur = v.value(prefix);
            let delta = cur - prev;
            let step = delta - mean[d];
            mean[d] += step / tf;
            m2[d] += step * (delta - mean[d]);
            prev = cur;
        }
    }
    let mf = m as f64;
    let stderr = m2.iter().map(|s| (s / (mf - 1.0) / mf).sqrt()).collect();
    Ok(PermutationEstimate {
        attributions: mean,
        stderr,
        permutations: m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::TableGame;

    #[test]
    fn single_player_gets_everything() {
        let t = TableGame::new(1, vec![0.0, 2.5]).unwrap();
        assert_eq!(exact_shapley(&t, 12).unwrap(), vec![2.5]);
    }

    #[test]
    fn two_player_formula() {
        let t = TableGame::new(2, vec![0.0, 0.4, -0.3, 0.9]).unwrap();
        let a = exact_shapley(&t, 12).unwrap();
        // ½(Val(C) − Val({2}) + Val({1}) − Val(∅))
        assert!((a[0] - 0.5 * (0.9 + 0.3 + 0.4)).abs() < 1e-15);
        assert!((a[1] - 0.5 * (0.9 - 0.4 - 0.3)).abs() < 1e-15);
    }

    #[test]
    fn three_player_table() {
        // ∅,{1},{2},{1,2},{3},{1,3},{2,3},{1,2,3} in bitmask order
        let t = TableGame::new(3, vec![0.0, 1.0, 2.0, 4.0, 3.0, 5.0, 6.0, 9.0]).unwrap();
        let a = exact_shapley(&t, 12).unwrap();
        for (got, want) in a.iter().zip([2.0, 3.0, 4.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn threshold_enforced() {
        let t = TableGame::from_fn(4, |c| c.len() as f64).unwrap();
        assert!(matches!(exact_shapley(&t, 3), Err(Error::TooManyPlayers { k: 4, .. })));
    }

    #[test]
    fn permutation_sampling_additive_game() {
        let t = TableGame::new(2, vec![0.0, 1.0, 3.0, 4.0]).unwrap();
        let est = permutation_shapley(&t, 2000, 17).unwrap();
        for (d, want) in [1.0, 3.0].into_iter().enumerate() {
            assert!((est.attributions[d] - want).abs() <= 3.0 * est.stderr[d] + 1e-12);
        }
        let total: f64 = est.attributions.iter().sum();
        assert!((total - 4.0).abs() < 1e-12);
    }

    #[test]
    fn permutation_sampling_is_seeded() {
        let t = TableGame::new(3, vec![0.0, 1.0, 2.0, 4.0, 3.0, 5.0, 6.0, 9.0]).unwrap();
        let a = permutation_shapley(&t, 2, 5).unwrap();
        let b = permutation_shapley(&t, 2, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.stderr.iter().all(|s| *s >= 0.0));
        assert!(matches!(permutation_shapley(&t, 1, 5), Err(Error::TooFewPermutations(1))));
    }
}
