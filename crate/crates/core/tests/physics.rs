use std::f64::consts::PI;

use falsikit::physics::{
    biaxial_hysteresis_rates, rk4_step, simulate, simulate_from, BiaxialBoucWen, BoucWen, DynamicSystem, IsolatorLaw,
    IsolatorParams, IsolatorVariant, LinearChain, SimulationSettings, Tridiagonal,
};
use falsikit::series::ExcitationRecord;

/// Drives a Bouc-Wen element along a prescribed velocity history.
/// State `[x, z]`, input `ẋ`.
struct Driven(BoucWen);

impl DynamicSystem for Driven {
    fn state_dim(&self) -> usize {
        2
    }

    fn derivative(&self, state: &[f64], input: &[f64], rate: &mut [f64]) {
        rate[0] = input[0];
        rate[1] = self.0.rate(state[1], input[0]);
    }

    fn channels(&self) -> Vec<String> {
        vec!["x".into(), "z".into()]
    }

    fn outputs(&self, state: &[f64], _rate: &[f64], _input: &[f64], out: &mut [f64]) {
        out.copy_from_slice(state);
    }
}

fn channels() -> Vec<String> {
    vec!["x".into(), "z".into()]
}

/// Runs `Driven` with the velocity held at its mid-step value, one output per step.
fn drive(law: BoucWen, velocity: impl Fn(f64) -> f64, h: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
    let v: Vec<f64> = (0..steps).map(|k| velocity((k as f64 + 0.5) * h)).collect();
    let rec = ExcitationRecord::single("v", h, v).unwrap();
    let settings = SimulationSettings::new(h, h * steps as f64).with_dt_int(h);
    let out = simulate(&Driven(law), &rec, &channels(), &settings).unwrap();
    let x = out.values.iter().step_by(2).copied().collect();
    let z = out.values.iter().skip(1).step_by(2).copied().collect();
    (x, z)
}

#[test]
fn slow_ramp_saturates_to_post_yield_stiffness() {
    let params = IsolatorParams {
        variant: IsolatorVariant::BoucWen,
        k_post: 4.0,
        c_b: 0.0,
        r_k: 0.1667,
        q_y_percent: Some(5.0),
        r_d: None,
    };
    let law = params.law(13729.31, 1400.0).unwrap();
    let bw = *law.hysteresis().unwrap();
    let x_y = 1.0 / bw.a;
    let h = x_y / 200.0;
    let steps = 8000;
    let (x, z) = drive(bw, |_| 1.0, h, steps);
    assert!((x[steps - 1] - (steps - 1) as f64 * h).abs() < 1e-9 * x_y);
    let z_end = z[steps - 1];
    assert!((z_end - 1.0).abs() < 1e-9, "z = {z_end}");
    // Closed form for A = β + γ, n = 1 under monotonic loading: z = 1 − e^(−x/x_y).
    let k = steps / 4;
    assert!((z[k] - (1.0 - (-x[k] / x_y).exp())).abs() < 1e-8);
    let f = |i: usize| law.force(x[i], 0.0, z[i]);
    let tangent = (f(steps - 1) - f(steps - 2)) / (x[steps - 1] - x[steps - 2]);
    let IsolatorLaw::Hysteretic { k_post, .. } = law else { unreachable!() };
    assert!((tangent / k_post - 1.0).abs() < 1e-6, "{tangent} vs {k_post}");
}

/// ∮ z dx by the trapezoid rule over samples of one closed cycle.
fn loop_integral(x: &[f64], z: &[f64]) -> f64 {
    x.windows(2).zip(z.windows(2)).map(|(xw, zw)| 0.5 * (zw[0] + zw[1]) * (xw[1] - xw[0])).sum()
}

/// Reference integration of the n = 1 law with its own fine classical RK4.
fn reference_loop(x_y: f64, amp: f64, omega: f64, fine: usize, cycles: usize) -> (Vec<f64>, Vec<f64>) {
    let a = 1.0 / x_y;
    let (b, g) = (0.5 * a, 0.5 * a);
    let zdot = |z: f64, v: f64| a * v - b * v * z.abs() - g * z * v.abs();
    let vel = |t: f64| amp * omega * (omega * t).cos();
    let period = 2.0 * PI / omega;
    let h = period / fine as f64;
    let (mut xs, mut zs) = (vec![0.0], vec![0.0]);
    let mut z = 0.0;
    for k in 0..fine * cycles {
        let t = k as f64 * h;
        let k1 = zdot(z, vel(t));
        let k2 = zdot(z + 0.5 * h * k1, vel(t + 0.5 * h));
        let k3 = zdot(z + 0.5 * h * k2, vel(t + 0.5 * h));
        let k4 = zdot(z + h * k3, vel(t + h));
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        xs.push(amp * (omega * (t + h)).sin());
        zs.push(z);
    }
    (xs, zs)
}

#[test]
fn loop_area_matches_fine_reference() {
    let x_y = 0.01;
    let amp = 5.0 * x_y;
    let omega = 2.0 * PI / 2.0;
    let per_cycle = 400;
    let cycles = 3;
    let h = 2.0 * PI / omega / per_cycle as f64;
    let bw = BoucWen::symmetric(x_y, 1.0);
    let (x, z) = drive(bw, |t| amp * omega * (omega * t).cos(), h, per_cycle * cycles);
    // Outputs start at t = 0, so the last cycle is samples [n - per_cycle - 1, n).
    let n = x.len();
    let area = loop_integral(&x[n - per_cycle - 1..], &z[n - per_cycle - 1..]);

    let fine = 40_000;
    let (xr, zr) = reference_loop(x_y, amp, omega, fine, cycles);
    let m = xr.len();
    let reference = loop_integral(&xr[m - fine - 1..], &zr[m - fine - 1..]);
    assert!(reference > 0.0);
    assert!((area / reference - 1.0).abs() < 0.005, "{area} vs {reference}");
}

#[test]
fn biaxial_circular_orbit_stays_bounded() {
    let law = BiaxialBoucWen {
        a: 1.0,
        beta: 0.5,
        gamma: 0.5,
        d_x: 1.0,
        d_y: 1.0,
    };
    let radius = 20.0;
    let omega = 2.0 * PI;
    let run = |per_cycle: usize| {
        let h = 1.0 / per_cycle as f64;
        let f = |t: f64, z: [f64; 2]| {
            let (vx, vy) = (-radius * omega * (omega * t).sin(), radius * omega * (omega * t).cos());
            let (a, b) = biaxial_hysteresis_rates(z[0], z[1], vx, vy, &law).unwrap();
            [a, b]
        };
        let mut z = [0.0, 0.0];
        let mut peak: f64 = 0.0;
        for k in 0..per_cycle * 3 {
            let t = k as f64 * h;
            let add = |z: [f64; 2], k: [f64; 2], s: f64| [z[0] + s * k[0], z[1] + s * k[1]];
            let k1 = f(t, z);
            let k2 = f(t + 0.5 * h, add(z, k1, 0.5 * h));
            let k3 = f(t + 0.5 * h, add(z, k2, 0.5 * h));
            let k4 = f(t + h, add(z, k3, h));
            for i in 0..2 {
                z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            peak = peak.max(z[0].hypot(z[1]));
        }
        (z, peak)
    };
    let (coarse, peak_coarse) = run(20_000);
    let (fine, peak_fine) = run(200_000);
    // The limit surface of A = β + γ is the unit circle.
    for (z, peak) in [(coarse, peak_coarse), (fine, peak_fine)] {
        assert!(peak <= 1.0 + 1e-6, "peak {peak}");
        assert!(z[0].hypot(z[1]) > 0.99);
    }
    assert!((coarse[0] - fine[0]).abs() < 1e-6 && (coarse[1] - fine[1]).abs() < 1e-6);
}

#[test]
fn sdof_steady_state_matches_frequency_response() {
    let (m, omega_n, zeta) = (1.0, 2.0 * PI, 0.05);
    let k = m * omega_n * omega_n;
    let c = 2.0 * zeta * m * omega_n;
    let chain = LinearChain::new(vec![m], Tridiagonal::diagonal(vec![k]), Tridiagonal::diagonal(vec![c])).unwrap();
    let omega = 0.8 * omega_n;
    let period = 2.0 * PI / omega;
    let h = period / 200.0;
    let cycles = 60;
    let steps = 200 * cycles;
    let amp = 0.3;
    // Mid-step samples make the held input second-order accurate.
    let ag: Vec<f64> = (0..steps).map(|i| amp * (omega * (i as f64 + 0.5) * h).sin()).collect();
    let rec = ExcitationRecord::single("ag", h, ag).unwrap();
    let settings = SimulationSettings::new(h, h * steps as f64).with_dt_int(h);
    let out = simulate(&chain, &rec, &["floor1_disp".to_string()], &settings).unwrap();
    let tail = &out.values[steps - 400..];
    let peak = tail.iter().fold(0.0_f64, |p, v| p.max(v.abs()));
    let expected = m * amp / ((k - m * omega * omega).powi(2) + (c * omega).powi(2)).sqrt();
    assert!((peak / expected - 1.0).abs() < 1e-3, "{peak} vs {expected}");
}

#[test]
fn damped_chain_energy_never_increases() {
    let chain = LinearChain::new(
        vec![300.0; 3],
        Tridiagonal::shear_chain(&[40_000.0; 3]),
        Tridiagonal::shear_chain(&[200.0; 3]),
    )
    .unwrap();
    let mut state = vec![0.01, 0.02, 0.03, 0.0, 0.0, 0.0];
    let mut work: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; 6]);
    let mut last = chain.energy(&state);
    for _ in 0..5000 {
        rk4_step(&chain, &mut state, &[0.0], 0.001, &mut work);
        let e = chain.energy(&state);
        assert!(e <= last * (1.0 + 1e-12), "{e} > {last}");
        last = e;
    }
    assert!(last < 0.5 * chain.energy(&[0.01, 0.02, 0.03, 0.0, 0.0, 0.0]));
}

#[test]
fn free_vibration_error_is_fourth_order() {
    let omega = 2.0 * PI;
    let chain = LinearChain::new(vec![1.0], Tridiagonal::diagonal(vec![omega * omega]), Tridiagonal::diagonal(vec![0.0])).unwrap();
    let x0 = 0.1;
    let error = |h: f64| {
        let rec = ExcitationRecord::single("zero", 0.02, vec![0.0; 250]).unwrap();
        let settings = SimulationSettings::new(0.02, 5.0).with_dt_int(h);
        let out = simulate_from(&chain, vec![x0, 0.0], &rec, &["floor1_disp".to_string()], &settings).unwrap();
        out.values
            .iter()
            .enumerate()
            .map(|(k, v)| (v - x0 * (omega * k as f64 * 0.02).cos()).abs())
            .fold(0.0, f64::max)
    };
    let ratio = error(0.02) / error(0.01);
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}");
}
