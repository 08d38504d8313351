mod common;

use common::{brute_force_log_bound, ln_phi, upper_quantile_bisect};
use falsikit::ensemble::ModelSample;
use falsikit::falsify::{
    bh_error_bounds, likelihood_bound, log_likelihood, p_values, BoundCache, ChannelLayout, FdrConfig, ResidualNoiseModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[test]
fn p_value_at_critical_residual_is_five_percent() {
    let noise = ResidualNoiseModel::per_channel(vec![0.5, 3.0], ChannelLayout::Interleaved);
    let z = upper_quantile_bisect(0.025);
    let p = p_values(&[z * 0.5, -z * 3.0], &noise).unwrap();
    for p in p {
        assert!((p - 0.05).abs() < 1e-12, "{p}");
    }
    let p = p_values(&[1.95996 * 0.5], &ResidualNoiseModel::iid(0.5)).unwrap()[0];
    assert!((p - 0.05).abs() < 1e-5);
}

#[test]
fn last_rank_bound_is_the_two_sided_quantile() {
    let config = FdrConfig::new(0.05).unwrap();
    for n in [1, 7, 600] {
        let bounds = bh_error_bounds(1.0, &config, n).unwrap();
        let (lo, hi) = bounds[n - 1];
        assert!((hi - upper_quantile_bisect(0.025)).abs() < 1e-10);
        assert!((hi - 1.95996).abs() < 1e-5);
        assert_eq!(lo, -hi);
    }
}

#[test]
fn single_and_two_entry_bounds() {
    let config = FdrConfig::new(0.05).unwrap();
    let one = likelihood_bound(&[0.0], &ResidualNoiseModel::iid(1.0), &config).unwrap();
    assert!((one.log_bound - ln_phi(upper_quantile_bisect(0.025))).abs() < 1e-10);
    assert!((one.log_bound + 2.8396).abs() < 1e-4, "{}", one.log_bound);

    let two = likelihood_bound(&[0.3, -1.0], &ResidualNoiseModel::iid(1.0), &config).unwrap();
    let expected = ln_phi(upper_quantile_bisect(0.0125)) + ln_phi(upper_quantile_bisect(0.025));
    assert!((two.log_bound - expected).abs() < 1e-10);
}

#[test]
fn bound_matches_brute_force_for_mixed_sigmas() {
    let config = FdrConfig::new(0.05).unwrap();
    let sigmas = vec![0.2, 1.5, 0.7];
    let noise = ResidualNoiseModel::per_channel(sigmas.clone(), ChannelLayout::Interleaved);
    let eps: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
    let all: Vec<f64> = (0..30).map(|i| sigmas[i % 3]).collect();
    let got = likelihood_bound(&eps, &noise, &config).unwrap().log_bound;
    assert!((got - brute_force_log_bound(&all, 0.05)).abs() < 1e-10);
}

#[test]
fn cache_is_bit_identical_to_direct_evaluation() {
    let config = FdrConfig::from_phi(0.9).unwrap();
    let noise = ResidualNoiseModel::per_channel(vec![0.4, 1.1], ChannelLayout::Blocked);
    let n = 50;
    let cache = BoundCache::new(&noise, &config, n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let eps: Vec<f64> = (0..n).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
        assert_eq!(cache.evaluate(&eps).unwrap(), likelihood_bound(&eps, &noise, &config).unwrap());
        assert_eq!(cache.log_likelihood(&eps).unwrap().to_bits(), log_likelihood(&eps, &noise).unwrap().to_bits());
    }
}

#[test]
fn diverged_model_is_falsified() {
    let cache = BoundCache::new(&ResidualNoiseModel::iid(1.0), &FdrConfig::new(0.05).unwrap(), 4).unwrap();
    let sample = ModelSample {
        class_id: "c".into(),
        theta: vec![1.0],
        sample_index: 3,
    };
    let v = cache.verdict(&sample, None).unwrap();
    assert!(!v.unfalsified);
    assert_eq!(v.log_likelihood, f64::NEG_INFINITY);
    assert!(cache.verdict(&sample, Some(&[0.0; 4])).unwrap().unfalsified);
}
