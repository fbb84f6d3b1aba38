use proptest::prelude::*;
use star_detect::network::poisson_binomial;
use star_detect::{CostPair, NetworkConfig, ObservationModel};

fn config_strategy(max_agents: usize) -> impl Strategy<Value = NetworkConfig> {
    (
        0.02f64..0.98,
        0.2f64..3.0,
        0.1f64..5.0,
        0.1f64..5.0,
        0.01f64..0.99,
        proptest::collection::vec(0.01f64..0.99, 1..=max_agents),
    )
        .prop_map(|(pi0, sigma, c_fa, c_md, q0, q)| {
            NetworkConfig::new(pi0, CostPair::new(c_fa, c_md).unwrap(), ObservationModel::gaussian(sigma).unwrap(), q0, q)
                .unwrap()
        })
}

/// Finite-difference slopes of the updated belief over `q0` on a 1e-3 grid.
fn update_slopes(n: usize, ones: usize) -> Vec<f64> {
    let beliefs: Vec<f64> = (1..1000)
        .map(|k| {
            NetworkConfig::standard(0.5, k as f64 * 1e-3, vec![0.5; n]).unwrap().update_belief_count(ones)
        })
        .collect();
    beliefs.windows(2).map(|w| (w[1] - w[0]) / 1e-3).collect()
}

#[test]
fn belief_update_not_monotone_for_two_agents() {
    assert!(update_slopes(2, 0).iter().any(|&s| s < 0.0));
}

#[test]
fn belief_update_monotone_for_one_agent() {
    for ones in [0, 1] {
        assert!(update_slopes(1, ones).iter().all(|&s| s > 0.0));
    }
}

#[test]
fn explicit_decisions_match_counts() {
    let c = NetworkConfig::standard(0.3, 0.6, vec![0.4, 0.4, 0.4]).unwrap();
    let a = c.update_belief(&[true, false, false]).unwrap();
    let b = c.update_belief(&[false, false, true]).unwrap();
    assert_eq!(a, b);
    assert!((a - c.update_belief_count(1)).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn dp_matches_bruteforce(config in config_strategy(12)) {
        let dp = config.exact_risk();
        let brute = config.exact_risk_bruteforce().unwrap();
        prop_assert!((dp.r0 - brute.r0).abs() <= 1e-12, "{} vs {}", dp.r0, brute.r0);
        prop_assert!((dp.p_fa0 - brute.p_fa0).abs() <= 1e-12);
        prop_assert!((dp.p_md0 - brute.p_md0).abs() <= 1e-12);
    }

    #[test]
    fn risk_bounded_by_trivial_rules(config in config_strategy(8)) {
        let r = config.exact_risk();
        let always_zero = config.costs.c_md * (1.0 - config.pi0);
        let always_one = config.costs.c_fa * config.pi0;
        prop_assert!(r.r0 >= 0.0);
        prop_assert!(r.p_fa0 >= 0.0 && r.p_fa0 <= 1.0 + 1e-12 && r.p_md0 >= 0.0 && r.p_md0 <= 1.0 + 1e-12);
        prop_assert!(r.r0 <= always_zero.max(always_one) + 1e-12);
        prop_assert_eq!(r.r0, config.risk());
    }

    #[test]
    fn risk_invariant_to_agent_order(config in config_strategy(8)) {
        let mut shuffled = config.clone();
        shuffled.q_local.reverse();
        prop_assert!((config.risk() - shuffled.risk()).abs() <= 1e-13);
    }

    #[test]
    fn count_pmf_is_distribution(t in proptest::collection::vec(0.0f64..=1.0, 0..30)) {
        let pmf = poisson_binomial(&t);
        prop_assert_eq!(pmf.len(), t.len() + 1);
        prop_assert!(pmf.iter().all(|&p| p >= 0.0));
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        prop_assert!((mean - t.iter().sum::<f64>()).abs() < 1e-10);
    }

    #[test]
    fn pinned_differences_nonnegative(config in config_strategy(6)) {
        for j in 1..=config.n() {
            let (d_fa, d_md) = config.pinned_differences(j).unwrap();
            prop_assert!(d_fa >= -1e-15 && d_md >= -1e-15, "{} {}", d_fa, d_md);
        }
    }

    #[test]
    fn conditional_errors_average_to_totals(config in config_strategy(6)) {
        let report = config.exact_risk();
        let local = config.local_error_probs(1).unwrap();
        let (fa1, md1_given_one) = config.conditional_fusion_errors(1, true).unwrap();
        let (fa0, md1_given_zero) = config.conditional_fusion_errors(1, false).unwrap();
        let fa = local.p_fa * fa1 + local.p_true_neg * fa0;
        let md = local.p_detect * md1_given_one + local.p_md * md1_given_zero;
        prop_assert!((fa - report.p_fa0).abs() < 1e-12);
        prop_assert!((md - report.p_md0).abs() < 1e-12);
    }

    #[test]
    fn error_probs_monotone_in_threshold(sigma in 0.2f64..3.0, t in -3.0f64..4.0, dt in 1e-3f64..1.0) {
        let model = ObservationModel::gaussian(sigma).unwrap();
        let (a, b) = (model.error_probs(t), model.error_probs(t + dt));
        // strict until the tails saturate in double precision
        prop_assert!(b.p_fa <= a.p_fa && b.p_md >= a.p_md);
        prop_assert!(b.p_fa < a.p_fa || a.p_fa == 1.0 || b.p_fa == 0.0);
    }

    #[test]
    fn threshold_round_trip(sigma in 0.2f64..3.0, q in 0.001f64..0.999, c in 0.1f64..10.0) {
        let model = ObservationModel::gaussian(sigma).unwrap();
        let costs = CostPair::new(1.0, c).unwrap();
        let t = model.threshold_from_belief(&costs, q).unwrap();
        prop_assert!((model.belief_from_threshold(&costs, t) - q).abs() < 1e-10);
    }
}
