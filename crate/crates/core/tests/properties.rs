//! Property tests over the public API.

use altgrad::bandit::{
    bandit_objective, biased_expected_update, biased_fixed_point, estimator_variance,
    expected_gradient, BanditTask, FixedPoint,
};
use altgrad::experiment::{derive_seed, expand_grid, ExperimentConfig};
use altgrad::numerics::{kl_divergence, kl_to_softmax, log_softmax, softmax, RngStream};
use altgrad::sampling_tree::SamplingTree;
use proptest::prelude::*;

fn prefs(max_k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-30.0f64..30.0, 2..=max_k)
}

proptest! {
    #[test]
    fn softmax_is_a_shift_invariant_distribution(theta in prefs(12), c in -500.0f64..500.0) {
        let pi = softmax(&theta).unwrap();
        let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
        let pj = softmax(&shifted).unwrap();
        prop_assert!((pi.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (a, b) in pi.as_slice().iter().zip(pj.as_slice()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        for (l, p) in log_softmax(&theta).iter().zip(pi.as_slice()) {
            if *p > 1e-300 {
                prop_assert!((l.exp() - p).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kl_is_nonnegative_and_zero_on_self(a in prefs(8)) {
        let p = softmax(&a).unwrap();
        prop_assert!(kl_divergence(&p, &p).unwrap().abs() < 1e-12);
        let b: Vec<f64> = a.iter().rev().copied().collect();
        prop_assert!(kl_to_softmax(&p, &b).unwrap() >= -1e-12);
    }

    #[test]
    fn expected_alternate_update_with_true_value_is_the_gradient(
        r in prop::collection::vec(-5.0f64..5.0, 2..8),
        seed in 0u64..1000,
    ) {
        let task = BanditTask::new(r.clone(), 1.0).unwrap();
        let mut rng = RngStream::new(seed, 0);
        let theta: Vec<f64> = r.iter().map(|_| rng.standard_normal()).collect();
        let pi = softmax(&theta).unwrap();
        let b = bandit_objective(&pi, &task).unwrap();
        let alt = biased_expected_update(&pi, &task, b).unwrap();
        let g = expected_gradient(&pi, &task).unwrap().g;
        for (x, y) in alt.iter().zip(&g) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn biased_fixed_point_equalizes_the_expected_update(
        r in prop::collection::vec(-5.0f64..5.0, 2..8),
        gap in 0.05f64..10.0,
        optimistic in any::<bool>(),
    ) {
        let task = BanditTask::new(r.clone(), 0.0).unwrap();
        let b = if optimistic {
            r.iter().copied().fold(f64::NEG_INFINITY, f64::max) + gap
        } else {
            r.iter().copied().fold(f64::INFINITY, f64::min) - gap
        };
        let FixedPoint::Interior(pi) = biased_fixed_point(&task, b).unwrap() else {
            return Err(TestCaseError::fail("expected an interior point"));
        };
        let u = biased_expected_update(&pi, &task, b).unwrap();
        for v in &u {
            prop_assert!((v - u[0]).abs() <= 1e-9 * u[0].abs().max(1.0));
        }
    }

    #[test]
    fn estimator_variances_are_nonnegative(
        r in prop::collection::vec(-3.0f64..3.0, 2..6),
        b in -5.0f64..5.0,
        seed in 0u64..1000,
    ) {
        let task = BanditTask::new(r.clone(), 0.7).unwrap();
        let mut rng = RngStream::new(seed, 1);
        let theta: Vec<f64> = r.iter().map(|_| 3.0 * rng.standard_normal()).collect();
        let pi = softmax(&theta).unwrap();
        for eta in [pi.as_slice().to_vec(), vec![0.0; r.len()]] {
            prop_assert!(estimator_variance(&pi, &task, b, &eta).unwrap().iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn tree_total_tracks_updates(seed in 0u64..500, n in 1usize..64, updates in 0usize..200) {
        let mut rng = RngStream::new(seed, 2);
        let mut theta: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        let actions: Vec<usize> = (0..n).map(|a| 10 * a + 3).collect();
        let mut tree = SamplingTree::build(&actions, &theta, &mut rng).unwrap();
        for _ in 0..updates {
            let i = (rng.uniform() * n as f64) as usize % n;
            theta[i] = 4.0 * rng.standard_normal();
            tree.update_preference(actions[i], theta[i]).unwrap();
        }
        for _ in 0..20 {
            let a = tree.sample(&mut rng);
            prop_assert!(actions.contains(&a));
            prop_assert!(tree.last_visits() <= tree.depth());
        }
        // Preference ratios survive the tree's internal rebasing.
        let pi = softmax(&theta).unwrap();
        let weights: Vec<f64> = actions.iter().map(|&a| tree.node(a).unwrap().val).collect();
        let z: f64 = weights.iter().sum();
        prop_assert!((tree.total_weight() - z).abs() <= 1e-9 * z);
        for (w, p) in weights.iter().zip(pi.as_slice()) {
            prop_assert!((w / z - p).abs() < 1e-9);
        }
    }

    #[test]
    fn derived_seeds_depend_on_every_input(base in any::<u64>(), run in 0usize..1000) {
        let s = derive_seed(base, "cell", run);
        prop_assert_eq!(s, derive_seed(base, "cell", run));
        prop_assert_ne!(s, derive_seed(base, "cell", run + 1));
        prop_assert_ne!(s, derive_seed(base, "cellx", run));
        prop_assert_ne!(s, derive_seed(base.wrapping_add(1), "cell", run));
    }
}

#[test]
fn grid_labels_are_unique_and_stable() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/exp1_saturation.toml")).unwrap();
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let cells = expand_grid(cfg.grid.as_ref().unwrap(), &[0.0; 3]).unwrap();
    let labels: std::collections::BTreeSet<_> = cells.iter().map(|c| c.label.as_str()).collect();
    assert_eq!(labels.len(), cells.len());
    assert!(labels.iter().all(|l| !l.contains([',', '/', ' '])));
    assert_eq!(cells, expand_grid(cfg.grid.as_ref().unwrap(), &[0.0; 3]).unwrap());
}
