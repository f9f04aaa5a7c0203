use compressed_gossip::{Compressor, CompressorSpec, InitDistribution};
use proptest::prelude::*;

fn sq_err_ratio(q: &[f64], x: &[f64]) -> f64 {
    let err: f64 = q.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    err / x.iter().map(|v| v * v).sum::<f64>()
}

fn mc_mean(spec: CompressorSpec, x: &[f64], draws: usize, seed: u64) -> f64 {
    let mut c = Compressor::new(spec, x.len(), seed).unwrap();
    (0..draws).map(|_| sq_err_ratio(&c.compress(x).unwrap(), x)).sum::<f64>() / draws as f64
}

/// Exact expectation of `rand_k` by enumerating every `k`-subset.
fn rand_k_expectation(x: &[f64], k: usize) -> f64 {
    let d = x.len();
    let norm: f64 = x.iter().map(|v| v * v).sum();
    let (mut total, mut count) = (0.0, 0usize);
    for mask in 0u32..(1 << d) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let dropped: f64 = (0..d).filter(|i| mask & (1 << i) == 0).map(|i| x[i] * x[i]).sum();
        total += dropped / norm;
        count += 1;
    }
    total / count as f64
}

#[test]
fn rand_k_matches_subset_enumeration() {
    for d in 2..=6 {
        let xs = InitDistribution::Normal.sample(3, d, d as u64);
        for k in 1..=d {
            for r in 0..3 {
                let x = xs.row(r);
                let exact = rand_k_expectation(x, k);
                assert!((exact - (1.0 - k as f64 / d as f64)).abs() < 1e-12);
                let mc = mc_mean(CompressorSpec::RandK(k), x, 10_000, 31 * k as u64 + r as u64);
                if exact > 0.0 {
                    assert!((mc / exact - 1.0).abs() <= 0.05, "d={d} k={k}: {mc} vs {exact}");
                } else {
                    assert_eq!(mc, 0.0);
                }
            }
        }
    }
}

#[test]
fn contract_holds_in_expectation() {
    let specs = [
        (CompressorSpec::RandK(5), 40),
        (CompressorSpec::RandK(20), 40),
        (CompressorSpec::Qsgd(2), 30),
        (CompressorSpec::Qsgd(3), 100),
        (CompressorSpec::Qsgd(5), 150),
        (CompressorSpec::Qsgd(8), 64),
    ];
    for (spec, d) in specs {
        let omega2 = spec.omega_squared(d).unwrap();
        let xs = InitDistribution::Normal.sample(20, d, 7);
        let mut total = 0.0;
        for r in 0..20 {
            total += mc_mean(spec, xs.row(r), 10_000, r as u64);
        }
        let mean = total / 20.0;
        assert!(mean <= 1.05 * omega2, "{spec} d={d}: {mean} vs {omega2}");
        if let CompressorSpec::RandK(k) = spec {
            assert!((mean / (1.0 - k as f64 / d as f64) - 1.0).abs() <= 0.05);
        }
    }
}

#[test]
fn top_k_bound_is_deterministic() {
    let d = 50;
    let xs = InitDistribution::Normal.sample(1000, d, 3);
    for k in [1, 7, 25, 50] {
        let mut a = Compressor::new(CompressorSpec::TopK(k), d, 1).unwrap();
        let mut b = Compressor::new(CompressorSpec::TopK(k), d, 2).unwrap();
        for r in 0..xs.rows() {
            let x = xs.row(r);
            let qa = a.compress(x).unwrap();
            assert_eq!(qa, b.compress(x).unwrap());
            assert!(sq_err_ratio(&qa, x) <= 1.0 - k as f64 / d as f64 + 1e-12);
        }
    }
}

#[test]
fn qsgd_five_levels_at_150() {
    assert!((CompressorSpec::Qsgd(5).omega_squared(150).unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(CompressorSpec::Qsgd(5).message_bits(150).unwrap(), 150 * 5 + 32);
    assert_eq!(CompressorSpec::RandK(3).message_bits(50).unwrap(), 3 * (32 + 6));
    assert_eq!(CompressorSpec::Identity.message_bits(7).unwrap(), 7 * 32);
}

fn sparsifier() -> impl Strategy<Value = (CompressorSpec, usize)> {
    (1usize..30).prop_flat_map(|d| {
        (1..=d).prop_flat_map(move |k| {
            prop_oneof![Just((CompressorSpec::RandK(k), d)), Just((CompressorSpec::TopK(k), d))]
        })
    })
}

proptest! {
    #[test]
    fn sparsifier_support_and_kept_values((spec, d) in sparsifier(), seed in any::<u64>()) {
        let k = spec.k().unwrap();
        let x = InitDistribution::Normal.sample(1, d, seed);
        let x = x.row(0);
        let q = Compressor::new(spec, d, seed).unwrap().compress(x).unwrap();
        prop_assert!(q.iter().filter(|v| **v != 0.0).count() <= k);
        for (qi, xi) in q.iter().zip(x) {
            prop_assert!(*qi == 0.0 || qi == xi);
        }
    }

    #[test]
    fn same_seed_same_outputs(k in 1usize..6, d in 6usize..40, seed in any::<u64>()) {
        for spec in [CompressorSpec::RandK(k), CompressorSpec::Qsgd(k + 1)] {
            let xs = InitDistribution::Normal.sample(5, d, seed ^ 1);
            let mut a = Compressor::new(spec, d, seed).unwrap();
            let mut b = Compressor::new(spec, d, seed).unwrap();
            for r in 0..5 {
                prop_assert_eq!(a.compress(xs.row(r)).unwrap(), b.compress(xs.row(r)).unwrap());
            }
        }
    }
}
