use proptest::prelude::*;
use shiftshap::shapley::all_values;
use shiftshap::{exact_shapley, permutation_shapley, Coalition, Error, TableGame, ValueFunction};

fn table() -> impl Strategy<Value = TableGame> {
    (1usize..7).prop_flat_map(|k| {
        prop::collection::vec(-10.0f64..10.0, 1 << k).prop_map(move |mut v| {
            v[0] = 0.0;
            TableGame::new(k, v).unwrap()
        })
    })
}

/// Relabels players by swapping `a` and `b`.
fn swap_players(c: Coalition, a: usize, b: usize) -> Coalition {
    let mut out = c.without(a).without(b);
    if c.contains(a) {
        out = out.with(b);
    }
    if c.contains(b) {
        out = out.with(a);
    }
    out
}

proptest! {
    #[test]
    fn efficiency(v in table()) {
        let phi = exact_shapley(&v, 12).unwrap();
        let full = v.value(Coalition::full(v.n_players()));
        prop_assert!((phi.iter().sum::<f64>() - full).abs() <= 1e-10);
    }

    #[test]
    fn relabelling_players_permutes_attributions(v in table(), a in 0usize..6, b in 0usize..6) {
        let k = v.n_players();
        let (a, b) = (a % k, b % k);
        let swapped = TableGame::from_fn(k, |c| v.value(swap_players(c, a, b))).unwrap();
        let phi = exact_shapley(&v, 12).unwrap();
        let psi = exact_shapley(&swapped, 12).unwrap();
        prop_assert!((phi[a] - psi[b]).abs() <= 1e-10);
        prop_assert!((phi[b] - psi[a]).abs() <= 1e-10);
    }

    #[test]
    fn null_player_gets_zero(v in table(), d in 0usize..6) {
        let k = v.n_players();
        let d = d % k;
        let null = TableGame::from_fn(k, |c| v.value(c.without(d))).unwrap();
        prop_assert!(exact_shapley(&null, 12).unwrap()[d].abs() <= 1e-12);
    }

    #[test]
    fn permutation_estimates_telescope(v in table(), m in 2usize..50, seed in any::<u64>()) {
        let est = permutation_shapley(&v, m, seed).unwrap();
        let full = v.value(Coalition::full(v.n_players()));
        prop_assert!((est.attributions.iter().sum::<f64>() - full).abs() <= 1e-10);
        prop_assert_eq!(permutation_shapley(&v, m, seed).unwrap(), est);
    }

    #[test]
    fn additive_games_are_exact_under_sampling(weights in prop::collection::vec(-5.0f64..5.0, 1..7), seed in any::<u64>()) {
        let k = weights.len();
        let v = TableGame::from_fn(k, |c| c.members().map(|i| weights[i]).sum()).unwrap();
        let est = permutation_shapley(&v, 3, seed).unwrap();
        for ((a, w), se) in est.attributions.iter().zip(&weights).zip(&est.stderr) {
            prop_assert!((a - w).abs() <= 1e-12);
            prop_assert!(*se <= 1e-12);
        }
    }
}

#[test]
fn enumeration_order_is_bitmask_order() {
    let v = TableGame::new(2, vec![0.0, 1.0, 2.0, 4.0]).unwrap();
    assert_eq!(all_values(&v), vec![0.0, 1.0, 2.0, 4.0]);
    assert_eq!(exact_shapley(&v, 12).unwrap(), vec![1.5, 2.5]);
}

#[test]
fn limits_are_enforced() {
    let v = TableGame::from_fn(4, |c| c.len() as f64).unwrap();
    assert!(matches!(exact_shapley(&v, 3), Err(Error::TooManyPlayers { k: 4, max: 3 })));
    assert!(matches!(permutation_shapley(&v, 1, 0), Err(Error::TooFewPermutations(1))));
    assert!(TableGame::new(2, vec![1.0, 0.0, 0.0, 0.0]).is_err());
    assert!(TableGame::new(2, vec![0.0; 3]).is_err());
}
