use std::fs;

use falsikit::io::{ingest_excitation, ingest_measurements, read_modes};
use falsikit::Error;

#[test]
fn six_hundred_rows_become_six_hundred_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("m.csv");
    let body: String = std::iter::once("time,base_abs_accel\n".to_string())
        .chain((0..600).map(|k| format!("{},{}\n", k as f64 * 0.05, (k as f64).sin())))
        .collect();
    fs::write(&path, body).unwrap();
    let m = ingest_measurements(&path, &["base_abs_accel".to_string()]).unwrap();
    assert_eq!(m.len(), 600);
    assert!((m.dt - 0.05).abs() < 1e-12);
    assert!(ingest_measurements(&path, &["other".to_string()]).is_err());
}

#[test]
fn three_column_file_is_a_biaxial_record() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("xy.txt");
    fs::write(&path, "# t ax ay\n0 0.1 0.2\n0.02 0.3 -0.4\n0.04 0 0\n").unwrap();
    let rec = ingest_excitation(&path, "xy").unwrap();
    assert_eq!(rec.channel_count, 2);
    assert_eq!(rec.steps(), 3);
    assert_eq!(rec.at(1), &[0.3, -0.4]);
}

#[test]
fn malformed_files_report_their_line() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("bad.csv");
    fs::write(&path, "time,a\n0,1\n0.05,2\n0.2,3\n").unwrap();
    match ingest_excitation(&path, "a").unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 4),
        e => panic!("unexpected {e}"),
    }
    fs::write(&path, "0 1 2 3\n0.1 1 2 3\n").unwrap();
    assert!(ingest_excitation(&path, "a").unwrap_err().to_string().contains("1 or 2"));
}

#[test]
fn modal_reference_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("modes.txt");
    fs::write(&path, "1.5 4.2\n0.5 1.0\n1.0 -0.5\n").unwrap();
    let modes = read_modes(&path).unwrap();
    assert_eq!(modes.frequencies, vec![1.5, 4.2]);
    assert_eq!(modes.mode_count(), 2);
    fs::write(&path, "1.5 4.2\n0.5\n").unwrap();
    assert!(read_modes(&path).is_err());
}
