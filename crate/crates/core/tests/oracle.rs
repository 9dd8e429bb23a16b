use proptest::prelude::*;
use shiftshap::oracle::{
    discrete_attributions, discrete_values, enumerate_discrete, gaussian_attr, gaussian_perf,
    gaussian_values, random_scm, simulate_gaussian, DiscreteScm, Env, GaussianScenario, Population,
};
use shiftshap::{exact_shapley, Coalition, TableGame, ValueFunction};

fn scenario() -> impl Strategy<Value = GaussianScenario> {
    (
        -3.0f64..3.0,
        -3.0f64..3.0,
        -3.0f64..3.0,
        -3.0f64..3.0,
        0.05f64..3.0,
        0.05f64..3.0,
        -3.0f64..3.0,
    )
        .prop_map(|(mu1, mu2, theta1, theta2, sigma_x2, sigma_y2, phi)| GaussianScenario {
            mu1,
            mu2,
            theta1,
            theta2,
            sigma_x2,
            sigma_y2,
            phi,
        })
}

proptest! {
    #[test]
    fn gaussian_attributions_sum_to_the_change(s in scenario()) {
        let (ax, ay) = gaussian_attr(&s);
        let delta = gaussian_perf(&s, Env::Target) - gaussian_perf(&s, Env::Source);
        prop_assert!((ax + ay - delta).abs() <= 1e-12 * (1.0 + delta.abs()));
    }

    #[test]
    fn gaussian_attributions_are_shapley_of_the_values(s in scenario()) {
        let table = TableGame::new(2, gaussian_values(&s).to_vec()).unwrap();
        let phi = exact_shapley(&table, 12).unwrap();
        let (ax, ay) = gaussian_attr(&s);
        prop_assert!((phi[0] - ax).abs() <= 1e-10 * (1.0 + ax.abs()));
        prop_assert!((phi[1] - ay).abs() <= 1e-10 * (1.0 + ay.abs()));
    }

    #[test]
    fn unshifted_gaussian_is_null(s in scenario()) {
        let same = s.with_target(s.mu1, s.theta1);
        prop_assert_eq!(gaussian_attr(&same), (0.0, 0.0));
    }

    #[test]
    fn mixed_pmfs_sum_to_one(seed in any::<u64>(), n in 1usize..6, bits in any::<u64>()) {
        let scm = random_scm(seed, n, 3, 2);
        let c = Coalition::from_bits(bits & ((1 << n) - 1));
        let pmf = scm.joint_pmf(c).unwrap();
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(pmf.iter().all(|&p| p > 0.0));
    }

    #[test]
    fn population_game_matches_enumeration(seed in any::<u64>(), n in 1usize..6) {
        let scm = random_scm(seed, n, 3, 3);
        let game = Population::build(&scm).and_then(Population::game).unwrap();
        for bits in 0..1u64 << n {
            let c = Coalition::from_bits(bits);
            let (_, val) = enumerate_discrete(&scm, c).unwrap();
            prop_assert!((game.value(c) - val).abs() <= 1e-10);
        }
    }

    #[test]
    fn discrete_attributions_are_efficient(seed in any::<u64>(), n in 1usize..6) {
        let scm = random_scm(seed, n, 3, 2);
        let attr = discrete_attributions(&scm).unwrap();
        let full = discrete_values(&scm).unwrap().value(Coalition::full(n));
        prop_assert!((attr.iter().sum::<f64>() - full).abs() <= 1e-12);
    }
}

#[test]
fn unshifted_mechanisms_are_null_players() {
    let mut scm = random_scm(9, 4, 3, 2);
    for i in [1, 3] {
        scm.nodes[i].cpt_target = scm.nodes[i].cpt_source.clone();
    }
    let attr = discrete_attributions(&scm).unwrap();
    assert!(attr[1].abs() < 1e-14 && attr[3].abs() < 1e-14, "{attr:?}");
}

#[test]
fn scm_json_round_trip() {
    let scm = random_scm(4, 3, 3, 2);
    let back = DiscreteScm::from_json(&scm.to_json()).unwrap();
    assert_eq!(back, scm);
    assert_eq!(discrete_attributions(&back).unwrap(), discrete_attributions(&scm).unwrap());
}

#[test]
fn simulated_gaussian_matches_its_moments() {
    let s = GaussianScenario::convergence_study();
    let ds = simulate_gaussian(&s, 200_000, 3, Env::Target).unwrap();
    let x = ds.column("x").unwrap();
    let loss = ds.column("loss").unwrap();
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    assert!((mean - s.mu2).abs() < 0.01, "{mean}");
    assert!((var - s.sigma_x2).abs() < 0.01, "{var}");
    let perf = loss.iter().sum::<f64>() / n;
    assert!((perf - gaussian_perf(&s, Env::Target)).abs() < 0.01, "{perf}");
}
