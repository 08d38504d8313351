//! Delimited text I/O for records, measurements, modal data and results.
//!
//! Time series are columns separated by commas or whitespace: time first,
//! then one column per channel. Lines starting with `#` are skipped and a
//! first line that does not parse as numbers is taken as a header.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::modal::ModalResult;
use crate::series::{ExcitationRecord, MeasurementSet};

/// Relative tolerance on successive time steps.
pub const GRID_TOLERANCE: f64 = 1e-6;

/// Formats with 17 significant digits so values round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    /// One-based source line of each row.
    pub lines: Vec<usize>,
}

fn fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c == ',' || c.is_whitespace()).filter(|f| !f.is_empty()).collect()
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(path, &text)
}

/// Parses delimited numeric text; `path` only labels errors.
pub fn parse_table(path: &Path, text: &str) -> Result<Table> {
    let mut table = Table {
        header: None,
        rows: Vec::new(),
        lines: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols = fields(line);
        let parsed: std::result::Result<Vec<f64>, _> = cols.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(row) => {
                if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                    return Err(parse_error(path, i + 1, format!("non-finite value in column {}", j + 1)));
                }
                if let Some(first) = table.rows.first() {
                    if row.len() != first.len() {
                        return Err(parse_error(
                            path,
                            i + 1,
                            format!("expected {} columns, found {}", first.len(), row.len()),
                        ));
                    }
                }
                table.rows.push(row);
                table.lines.push(i + 1);
            }
            Err(_) if table.rows.is_empty() && table.header.is_none() => {
                table.header = Some(cols.iter().map(|s| s.to_string()).collect());
            }
            Err(e) => return Err(parse_error(path, i + 1, format!("not a number: {e}"))),
        }
    }
    if let (Some(h), Some(r)) = (&table.header, table.rows.first()) {
        if h.len() != r.len() {
            return Err(parse_error(
                path,
                table.lines[0],
                format!("header names {} columns, data has {}", h.len(), r.len()),
            ));
        }
    }
    Ok(table)
}

/// Sampling interval of the time column, checking the grid is uniform.
fn uniform_dt(path: &Path, table: &Table) -> Result<f64> {
    if table.rows.len() < 2 {
        return Err(parse_error(path, table.lines.first().copied().unwrap_or(1), "need at least two samples"));
    }
    let dt = table.rows[1][0] - table.rows[0][0];
    if !(dt > 0.0) {
        return Err(parse_error(path, table.lines[1], "time must increase"));
    }
    for (k, w) in table.rows.windows(2).enumerate() {
        let step = w[1][0] - w[0][0];
        if (step - dt).abs() >= GRID_TOLERANCE * dt {
            return Err(parse_error(
                path,
                table.lines[k + 1],
                format!("non-uniform time grid: step {step} differs from {dt}"),
            ));
        }
    }
    Ok(dt)
}

fn check_columns(path: &Path, table: &Table, channels: usize) -> Result<()> {
    let found = table.rows.first().map_or(0, Vec::len);
    if found != channels + 1 {
        return Err(parse_error(
            path,
            table.lines.first().copied().unwrap_or(1),
            format!("expected time plus {channels} channel column(s), found {found} columns"),
        ));
    }
    Ok(())
}

fn interleave(table: &Table) -> Vec<f64> {
    table.rows.iter().flat_map(|r| r[1..].iter().copied()).collect()
}

/// Reads an excitation record; the channel count is the number of data
/// columns after time.
pub fn ingest_excitation(path: &Path, label: &str) -> Result<ExcitationRecord> {
    let table = read_table(path)?;
    let channels = table.rows.first().map_or(0, |r| r.len().saturating_sub(1));
    if !(1..=2).contains(&channels) {
        return Err(parse_error(
            path,
            table.lines.first().copied().unwrap_or(1),
            format!("an excitation needs time plus 1 or 2 columns, found {} columns", channels + 1),
        ));
    }
    let dt = uniform_dt(path, &table)?;
    ExcitationRecord::new(label, dt, interleave(&table), channels)
}

/// Reads measurements of `channels`. A header, when present, must name them.
pub fn ingest_measurements(path: &Path, channels: &[String]) -> Result<MeasurementSet> {
    let table = read_table(path)?;
    check_columns(path, &table, channels.len())?;
    if let Some(h) = &table.header {
        if h[1..] != *channels {
            return Err(parse_error(
                path,
                1,
                format!("header channels [{}] differ from configured [{}]", h[1..].join(", "), channels.join(", ")),
            ));
        }
    }
    let dt = uniform_dt(path, &table)?;
    MeasurementSet::new(interleave(&table), dt, channels.to_vec())
}

/// Modal reference: the first row holds the frequencies [Hz], then one row
/// per degree of freedom with one column per mode.
pub fn read_modes(path: &Path) -> Result<ModalResult> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = fields(line)
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| parse_error(path, i + 1, format!("not a number: {e}")))?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(parse_error(path, i + 1, "non-finite value"));
        }
        rows.push((i + 1, row));
    }
    let Some(((_, freqs), shapes)) = rows.split_first() else {
        return Err(parse_error(path, 1, "empty modal file"));
    };
    if shapes.is_empty() {
        return Err(parse_error(path, 1, "no mode-shape rows after the frequencies"));
    }
    let m = freqs.len();
    if let Some((line, r)) = shapes.iter().find(|(_, r)| r.len() != m) {
        return Err(parse_error(path, *line, format!("expected {m} mode columns, found {}", r.len())));
    }
    let phi = DMatrix::from_fn(shapes.len(), m, |i, j| shapes[i].1[j]);
    ModalResult::from_parts(freqs.clone(), phi)
}

pub fn format_modes(modes: &ModalResult) -> String {
    let mut s = String::new();
    let join = |v: &mut dyn Iterator<Item = f64>| v.map(fmt_f64).collect::<Vec<_>>().join(" ");
    s.push_str(&join(&mut modes.frequencies.iter().copied()));
    s.push('\n');
    for i in 0..modes.mode_shapes.nrows() {
        s.push_str(&join(&mut modes.mode_shapes.row(i).iter().copied()));
        s.push('\n');
    }
    s
}

/// Time column plus `columns`, each holding one value per step.
pub fn format_columns(dt: f64, names: &[String], columns: &[Vec<f64>]) -> String {
    let steps = columns.first().map_or(0, Vec::len);
    let mut s = String::from("time");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for k in 0..steps {
        s.push_str(&fmt_f64(k as f64 * dt));
        for c in columns {
            s.push(',');
            s.push_str(&fmt_f64(c[k]));
        }
        s.push('\n');
    }
    s
}

/// Interleaved samples as a time-series file body.
pub fn format_timeseries(dt: f64, channels: &[String], values: &[f64]) -> String {
    let n = channels.len().max(1);
    let columns: Vec<Vec<f64>> = (0..n).map(|c| values.iter().skip(c).step_by(n).copied().collect()).collect();
    format_columns(dt, channels, &columns)
}

pub fn format_excitation(record: &ExcitationRecord) -> String {
    let names: Vec<String> = (0..record.channel_count).map(|c| format!("{}_{c}", record.label)).collect();
    format_timeseries(record.dt, &names, &record.samples)
}

/// Writes to a sibling temporary file and renames it over `path`, so a
/// crash never leaves a partial file under the final name.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    tmp.set_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).and_then(|_| f.sync_all()).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Result<Table> {
        parse_table(Path::new("mem.csv"), text)
    }

    #[test]
    fn header_comments_and_delimiters() {
        let t = table("# note\ntime, a\n0.0, 1.5\n0.05\t-2\n").unwrap();
        assert_eq!(t.header.unwrap(), vec!["time", "a"]);
        assert_eq!(t.rows, vec![vec![0.0, 1.5], vec![0.05, -2.0]]);
        assert_eq!(t.lines, vec![3, 4]);
    }

    #[test]
    fn nan_and_ragged_rows_are_rejected() {
        let e = table("0 1\n0.1 NaN\n").unwrap_err().to_string();
        assert!(e.contains(":2:"), "{e}");
        let e = table("0 1\n0.1 2 3\n").unwrap_err().to_string();
        assert!(e.contains("expected 2 columns"), "{e}");
    }

    #[test]
    fn jitter_reports_first_offending_row() {
        let text = "0 0\n0.05 0\n0.1 0\n0.1501 0\n0.2 0\n";
        let t = table(text).unwrap();
        let e = uniform_dt(Path::new("mem.csv"), &t).unwrap_err().to_string();
        assert!(e.contains("mem.csv:4:"), "{e}");
        let ok = table("0 0\n0.05 0\n0.10000000001 0\n").unwrap();
        assert!((uniform_dt(Path::new("m"), &ok).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
