use falsikit::falsify::{ClassReport, FalsificationVerdict};
use falsikit::predict::{
    bayesian_weights, estimate_parameters, max_likelihood_model, post_falsification_weights, predict_response, WeightMode,
};
use falsikit::series::SimulationOutput;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(lls: &[f64], unfalsified: &[bool]) -> ClassReport {
    ClassReport {
        class_id: "m".into(),
        parameter_names: vec!["a".into(), "b".into()],
        verdicts: lls
            .iter()
            .zip(unfalsified)
            .enumerate()
            .map(|(i, (&ll, &u))| FalsificationVerdict {
                class_id: "m".into(),
                sample_index: i,
                theta: vec![i as f64, 1.0 - i as f64 * 0.1],
                log_likelihood: ll,
                log_bound: 0.0,
                unfalsified: u,
                rejected_count: 0,
            })
            .collect(),
    }
}

#[test]
fn weights_match_linear_space_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let lls: Vec<f64> = (0..10).map(|_| rng.random_range(-40.0..5.0)).collect();
        let w = bayesian_weights(&report(&lls, &[true; 10]), None, WeightMode::Cancel).unwrap();
        let total: f64 = lls.iter().map(|l| l.exp()).sum();
        for (e, l) in w.entries.iter().zip(&lls) {
            assert!((e.weight - l.exp() / total).abs() < 1e-12);
        }
        assert!((w.weight_sum() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn falsified_models_are_dropped_and_the_rest_renormalized() {
    let lls = [-3.0, -1.0, -2.0, -0.5];
    let keep = [true, false, true, false];
    let w = post_falsification_weights(&report(&lls, &keep), None, WeightMode::Cancel).unwrap();
    let idx: Vec<usize> = w.entries.iter().map(|e| e.sample_index).collect();
    assert_eq!(idx, vec![0, 2]);
    let z = (-3.0f64).exp() + (-2.0f64).exp();
    assert!((w.entries[0].weight - (-3.0f64).exp() / z).abs() < 1e-15);
}

#[test]
fn symmetric_pair_estimates_zero() {
    let mut r = report(&[-1.0, -1.0], &[true, true]);
    r.verdicts[0].theta = vec![2.0, -3.0];
    r.verdicts[1].theta = vec![-2.0, 3.0];
    let w = post_falsification_weights(&r, None, WeightMode::Cancel).unwrap();
    assert_eq!(estimate_parameters(&w).unwrap(), vec![0.0, 0.0]);
}

#[test]
fn truth_in_ensemble_has_maximum_likelihood() {
    // Zero-noise data from θ* = 0.7 on a quadratic response; only the true
    // sample reproduces it exactly.
    let truth = 0.7;
    let model = |t: f64| (0..40).map(|k| t * (k as f64 * 0.3).sin() + t * t * 0.1).collect::<Vec<f64>>();
    let d = model(truth);
    let thetas = [0.1, 0.65, 0.7, 0.75, 1.4];
    let lls: Vec<f64> = thetas
        .iter()
        .map(|&t| -0.5 * model(t).iter().zip(&d).map(|(h, d)| (h - d).powi(2)).sum::<f64>())
        .collect();
    let mut r = report(&lls, &[true; 5]);
    for (v, t) in r.verdicts.iter_mut().zip(thetas) {
        v.theta = vec![t];
    }
    let best = max_likelihood_model(&r.verdicts).unwrap();
    assert_eq!(best.theta, vec![truth]);
}

#[test]
fn prediction_is_channelwise_weighted_sum_within_member_range() {
    let lls = [-1.0, -0.2, -2.5, -0.9];
    let w = bayesian_weights(&report(&lls, &[true; 4]), None, WeightMode::Cancel).unwrap();
    let sim = |theta: &[f64]| -> falsikit::Result<SimulationOutput> {
        let values = (0..30).flat_map(|k| [theta[0] * k as f64, (theta[1] * k as f64).cos()]).collect();
        Ok(SimulationOutput {
            dt: 0.1,
            values,
            channels: vec!["u".into(), "v".into()],
        })
    };
    let p = predict_response(&w, "x", sim).unwrap();
    assert_eq!(p.simulations, 4);
    for ch in 0..2 {
        let got = p.channel(ch);
        for (k, g) in got.iter().enumerate() {
            let members: Vec<f64> = w.entries.iter().map(|e| sim(&e.theta).unwrap().values[2 * k + ch]).collect();
            let brute: f64 = w.entries.iter().zip(&members).map(|(e, m)| e.weight * m).sum();
            assert!((g - brute).abs() <= 1e-12 * brute.abs().max(1.0));
            let (lo, hi) = members.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &m| (a.min(m), b.max(m)));
            assert!(*g >= lo - 1e-12 && *g <= hi + 1e-12);
        }
    }
}

#[test]
fn diverged_member_fails_the_whole_prediction() {
    let w = bayesian_weights(&report(&[-1.0, -1.0, -1.0], &[true; 3]), None, WeightMode::Cancel).unwrap();
    let err = predict_response(&w, "x", |theta| {
        if theta[0] == 1.0 {
            Err(falsikit::Error::Unstable { time: 2.5 })
        } else {
            Ok(SimulationOutput {
                dt: 0.1,
                values: vec![theta[0]; 3],
                channels: vec!["u".into()],
            })
        }
    })
    .unwrap_err()
    .to_string();
    assert!(err.contains("m#1"), "{err}");
}
