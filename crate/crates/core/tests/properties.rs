mod common;

use common::world;
use madd_core::attributes::social_influence;
use madd_core::dynamics::{dissemination_tendency, update_trust_from_sums};
use madd_core::network::{community_overlap_matrix, CommunityIndex};
use madd_core::powerlaw::PowerLawFit;
use madd_core::synth::SynthConfig;
use proptest::prelude::*;

#[test]
fn cdf_matches_brute_force_summation() {
    for (alpha, lambda, x_min) in [
        (1.5, 0.01, 10),
        (2.5, 0.0, 1),
        (1.146, 0.006, 16),
        (3.0, 0.001, 4),
    ] {
        let fit = PowerLawFit::new(alpha, lambda, x_min);
        let mass = |x: u64| (x as f64).powf(-alpha) * (-lambda * x as f64).exp();
        let total: f64 = (x_min..=100_000).map(mass).sum();
        let mut acc = 0.0;
        for x in x_min..=5_000 {
            acc += mass(x);
            let got = fit.cdf(x);
            assert!(
                (got - acc / total).abs() < 1e-3,
                "alpha {alpha} x {x}: {got} vs {}",
                acc / total
            );
        }
        assert_eq!(fit.cdf(x_min - 1), 0.0);
    }
}

#[test]
fn hubs_are_high_influence_members() {
    let mut misses = 0;
    for seed in 0..20u64 {
        let mut cfg = SynthConfig::single("Technology", 500, seed);
        cfg.params.malicious_ratio = 0.0;
        cfg.params.legitimate_ratio = 0.0;
        let w = world(&cfg);
        let n = w.network.n_nodes();
        let hub = (0..n)
            .max_by_key(|&i| (w.network.degree(i), std::cmp::Reverse(i)))
            .unwrap();
        let si = |i: usize| w.population.profiles[i].influence[0];
        let above = (0..n).filter(|&i| si(i) > si(hub)).count();
        if above as f64 / n as f64 > 0.5 {
            misses += 1;
        }
    }
    assert!(misses <= 2, "{misses} hubs in the lower half by influence");
}

proptest! {
    #[test]
    fn tendency_falls_with_exposure_and_rises_with_interest(
        theta in 0.0f64..=1.0,
        cdf in 0.0f64..=1.0,
        ic in 1.0f64..=10.0,
        extra in 0.0f64..=9.0,
        xi in 0.0f64..=2.0,
        n in 0u32..50,
    ) {
        let max = 10.0;
        let ic2 = (ic + extra).min(max);
        let base = dissemination_tendency(theta, cdf, ic, max, xi, n);
        prop_assert!((0.0..=1.0).contains(&base));
        prop_assert!(dissemination_tendency(theta, cdf, ic, max, xi, n + 1) <= base);
        prop_assert!(dissemination_tendency(theta, cdf, ic2, max, xi, n) >= base);
    }

    #[test]
    fn influence_is_a_distribution(followers in prop::collection::vec(0u64..1_000_000, 1..200)) {
        let (si, _) = social_influence(&followers);
        prop_assert!((si.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(si.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn cdf_is_monotone_and_bounded(alpha in 1.1f64..4.0, lambda in 0.0f64..0.2, x_min in 1u64..30) {
        let fit = PowerLawFit::new(alpha, lambda, x_min);
        let mut prev = 0.0;
        for x in 0..x_min + 200 {
            let c = fit.cdf(x);
            prop_assert!((0.0..=1.0).contains(&c));
            prop_assert!(c + 1e-12 >= prev);
            prev = c;
        }
    }

    #[test]
    fn trust_update_stays_in_unit_interval(
        tt in 0.0f64..=1.0,
        corr in 0.0f64..100.0,
        dis in 0.0f64..100.0,
        gamma in 0.0f64..=1.0,
        beta in 0.0f64..5.0,
        delta in 0.0f64..5.0,
    ) {
        let next = update_trust_from_sums(tt, corr, dis, gamma, beta, delta);
        prop_assert!((0.0..=1.0).contains(&next));
        prop_assert!(update_trust_from_sums(tt, corr + 1.0, dis, gamma, beta, delta) >= next);
        prop_assert!(update_trust_from_sums(tt, corr, dis + 1.0, gamma, beta, delta) <= next);
    }

    #[test]
    fn overlap_matrix_is_symmetric(assign in prop::collection::vec(prop::collection::btree_set(0usize..5, 1..4), 1..60)) {
        let of_agent: Vec<Vec<usize>> = assign.iter().map(|s| s.iter().copied().collect()).collect();
        let index = CommunityIndex::from_assignments(of_agent, 5);
        let m = community_overlap_matrix(&index);
        for (i, row) in m.iter().enumerate() {
            prop_assert_eq!(row[i], index.members[i].len());
            for (j, &v) in row.iter().enumerate() {
                prop_assert_eq!(v, m[j][i]);
            }
        }
    }
}
