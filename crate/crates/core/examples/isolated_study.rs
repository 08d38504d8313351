//! Runs the synthetic isolated-building study and prints the class table.

use falsikit::scenario::IsolatedScenario;
use falsikit::study::Stage;

fn main() -> falsikit::Result<()> {
    let mut scenario = IsolatedScenario::default();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize| args.get(i).map(|a| a.parse::<f64>().expect("numeric argument"));
    if let Some(n) = arg(0) {
        scenario.samples_per_class = n as usize;
    }
    if let Some(s) = arg(1) {
        scenario.master_seed = s as u64;
        scenario.record_seed = 1940 + 10 * s as u64;
        scenario.noise_seed = s as u64;
    }
    if let Some(f) = arg(2) {
        scenario.noise_fraction = f;
    }
    let t = std::time::Instant::now();
    let study = scenario.build()?;
    let out = study.run(Stage::Predict)?;
    let report = out.report.as_ref().expect("falsified");
    println!("log bound {:.3}", report.log_bound);
    for class in &report.classes {
        let lls: Vec<f64> = class.verdicts.iter().map(|v| v.log_likelihood).collect();
        let max = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{:<16} {:>4}/{:<4} {:>6.1}%  max ll {:.1}",
            class.class_id,
            class.unfalsified_count(),
            class.samples(),
            100.0 * class.unfalsified_fraction(),
            max
        );
    }
    for (id, theta) in &out.estimates {
        println!("{id:<16} theta {theta:.4?}");
    }
    for p in &out.predictions {
        println!("{:<16} rel rms {:.4}%", p.result.class_id, 100.0 * p.relative_rms_error.unwrap_or(f64::NAN));
    }
    println!("elapsed {:.1?}", t.elapsed());
    Ok(())
}
