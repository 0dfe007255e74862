use std::collections::{BTreeMap, BTreeSet};

use lptype_core::sketch::{L0Estimator, L0Sampler, SketchBackend, SketchConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expect = total as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expect).powi(2) / expect)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

fn support_of(updates: &[(u128, i64)]) -> BTreeSet<u128> {
    let mut m: BTreeMap<u128, i64> = BTreeMap::new();
    for &(i, d) in updates {
        *m.entry(i).or_default() += d;
    }
    m.into_iter()
        .filter(|(_, c)| *c != 0)
        .map(|(i, _)| i)
        .collect()
}

#[test]
fn exact_estimate_matches_counter_replay() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let updates: Vec<(u128, i64)> = (0..1000)
        .map(|_| {
            (
                rng.gen_range(0..60u128),
                if rng.gen_bool(0.5) { 1 } else { -1 },
            )
        })
        .collect();
    let mut e = L0Estimator::new(SketchConfig::exact(100, 0).unwrap());
    for &(i, d) in &updates {
        e.update(i, d).unwrap();
    }
    assert_eq!(e.estimate() as usize, support_of(&updates).len());
}

#[test]
fn randomized_estimate_within_quarter() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = 0;
    let trials = 300;
    for seed in 0..trials {
        let cfg = SketchConfig::new(1 << 20, 0.25, 0.05, seed, SketchBackend::Randomized).unwrap();
        let mut e = L0Estimator::new(cfg);
        let support: BTreeSet<u128> = std::iter::repeat_with(|| rng.gen_range(0..1u128 << 20))
            .take(100)
            .collect();
        for &i in &support {
            e.update(i, 1).unwrap();
        }
        let n = support.len() as f64;
        let est = e.estimate() as f64;
        if est >= 0.75 * n && est <= 1.25 * n {
            ok += 1;
        }
    }
    assert!(ok as f64 >= 0.93 * trials as f64, "{ok}/{trials}");
}

#[test]
fn randomized_estimate_large_support() {
    let cfg = SketchConfig::new(1 << 40, 0.25, 0.05, 9, SketchBackend::Randomized).unwrap();
    let mut e = L0Estimator::new(cfg);
    for i in 0..20_000u128 {
        e.update(i * 7919, 1).unwrap();
    }
    let est = e.estimate() as f64;
    assert!((est - 20_000.0).abs() <= 0.25 * 20_000.0, "{est}");
}

#[test]
fn two_point_sampler_ignores_multiplicity() {
    for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
        let cfg = SketchConfig::new(1 << 20, 0.25, 0.05, 3, backend).unwrap();
        let mut s = L0Sampler::new(cfg);
        s.update(1, 1).unwrap();
        s.update(2, 1_000_000).unwrap();
        let ones = (0..10_000).filter(|_| s.sample() == Some(1)).count() as f64;
        assert!((ones / 10_000.0 - 0.5).abs() < 0.05, "{backend:?}: {ones}");
    }
}

#[test]
fn exact_sampler_uniform_over_fifty() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let support: Vec<u128> = (0..50).map(|_| rng.gen_range(0..1u128 << 20)).collect();
    let mut s = L0Sampler::new(SketchConfig::exact(1 << 20, 21).unwrap());
    for &i in &support {
        s.update(i, 1).unwrap();
    }
    let idx: BTreeMap<u128, usize> = support.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut counts = vec![0u64; idx.len()];
    for _ in 0..10_000 {
        counts[idx[&s.sample().unwrap()]] += 1;
    }
    assert!(chi_square_p(&counts) > 0.001);
}

#[test]
fn randomized_sampler_over_large_support_stays_in_support() {
    let cfg = SketchConfig::new(1 << 30, 0.25, 0.05, 12, SketchBackend::Randomized).unwrap();
    let mut s = L0Sampler::new(cfg);
    let live: BTreeSet<u128> = (0..5000u128).map(|i| i * 104_729 % (1 << 30)).collect();
    for &i in &live {
        s.update(i, 2).unwrap();
    }
    for _ in 0..200 {
        assert!(live.contains(&s.sample().unwrap()));
    }
}

#[test]
fn insertion_minus_deletion_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ins: Vec<u128> = (0..300).map(|_| rng.gen_range(0..500)).collect();
    let del: Vec<u128> = ins.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
    for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
        let cfg = SketchConfig::new(500, 0.25, 0.05, 6, backend).unwrap();
        let mut a = L0Estimator::new(cfg);
        let mut b = L0Estimator::new(cfg);
        for &i in &ins {
            a.update(i, 1).unwrap();
        }
        for &i in &del {
            b.update(i, -1).unwrap();
        }
        let merged = a.merge(&b).unwrap();
        let mut updates: Vec<(u128, i64)> = ins.iter().map(|&i| (i, 1)).collect();
        updates.extend(del.iter().map(|&i| (i, -1)));
        let truth = support_of(&updates).len() as f64;
        let est = merged.estimate() as f64;
        match backend {
            SketchBackend::ExactOracle => assert_eq!(est, truth),
            SketchBackend::Randomized => assert!((est - truth).abs() <= 0.25 * truth),
        }
    }
}

#[test]
fn merge_with_empty_is_identity() {
    for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
        let cfg = SketchConfig::new(1000, 0.25, 0.05, 6, backend).unwrap();
        let mut a = L0Sampler::new(cfg);
        for i in 0..40 {
            a.update(i * 3, 1).unwrap();
        }
        assert_eq!(a.merge(&L0Sampler::new(cfg)).unwrap(), a);
    }
}

fn updates_strategy() -> impl Strategy<Value = Vec<(u128, i64)>> {
    prop::collection::vec((0u128..2000, -3i64..=3), 0..200)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_of_split_equals_whole(updates in updates_strategy(), cut in 0usize..200, seed in any::<u64>()) {
        let cut = cut.min(updates.len());
        for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
            let cfg = SketchConfig::new(2000, 0.25, 0.05, seed, backend).unwrap();
            let mut whole_e = L0Estimator::new(cfg);
            let mut whole_s = L0Sampler::new(cfg);
            let mut left_e = L0Estimator::new(cfg);
            let mut left_s = L0Sampler::new(cfg);
            let mut right_e = L0Estimator::new(cfg);
            let mut right_s = L0Sampler::new(cfg);
            for (k, &(i, d)) in updates.iter().enumerate() {
                whole_e.update(i, d).unwrap();
                whole_s.update(i, d).unwrap();
                if k < cut {
                    left_e.update(i, d).unwrap();
                    left_s.update(i, d).unwrap();
                } else {
                    right_e.update(i, d).unwrap();
                    right_s.update(i, d).unwrap();
                }
            }
            prop_assert_eq!(left_e.merge(&right_e).unwrap(), whole_e);
            prop_assert_eq!(left_s.merge(&right_s).unwrap(), whole_s);
        }
    }

    #[test]
    fn positive_multiplicities_do_not_change_queries(items in prop::collection::btree_set(0u128..5000, 1..80), mult in 2i64..50, seed in any::<u64>()) {
        for backend in [SketchBackend::ExactOracle, SketchBackend::Randomized] {
            let cfg = SketchConfig::new(5000, 0.25, 0.05, seed, backend).unwrap();
            let mut once_e = L0Estimator::new(cfg);
            let mut many_e = L0Estimator::new(cfg);
            let mut once_s = L0Sampler::new(cfg);
            let mut many_s = L0Sampler::new(cfg);
            for &i in &items {
                once_e.update(i, 1).unwrap();
                many_e.update(i, mult).unwrap();
                once_s.update(i, 1).unwrap();
                many_s.update(i, mult).unwrap();
            }
            prop_assert_eq!(once_e.estimate(), many_e.estimate());
            for _ in 0..10 {
                prop_assert_eq!(once_s.sample(), many_s.sample());
            }
        }
    }

    #[test]
    fn same_seed_same_outputs(updates in updates_strategy(), seed in any::<u64>()) {
        let cfg = SketchConfig::new(2000, 0.25, 0.05, seed, SketchBackend::Randomized).unwrap();
        let mut a = L0Sampler::new(cfg);
        let mut b = L0Sampler::new(cfg);
        for &(i, d) in &updates {
            a.update(i, d.abs()).unwrap();
            b.update(i, d.abs()).unwrap();
        }
        for _ in 0..5 {
            prop_assert_eq!(a.sample(), b.sample());
        }
    }
}
