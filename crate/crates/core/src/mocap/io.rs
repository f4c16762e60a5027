use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;

use super::{ForcePlateRecord, JointTrajectory, Side};
use crate::error::{Error, Result};
use crate::joints::N_COLS;

/// Longest NaN run repaired by linear interpolation; longer runs fail the load.
pub const MAX_NAN_GAP: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Units {
    Meters,
    Millimeters,
}

impl Units {
    fn scale(self) -> f64 {
        match self {
            Units::Meters => 1.0,
            Units::Millimeters => 1e-3,
        }
    }
}

/// Parses `# key=value, key=value` into pairs.
fn parse_header(line: &str, path: &Path) -> Result<Vec<(String, String)>> {
    let bad = |reason: &str| Error::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    let body = line.trim().strip_prefix('#').ok_or_else(|| bad("missing leading '#'"))?;
    body.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn header_value<'a>(pairs: &'a [(String, String)], key: &str, path: &Path) -> Result<&'a str> {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("missing {key}"),
        })
}

fn parse_rate(pairs: &[(String, String)], path: &Path) -> Result<f64> {
    let raw = header_value(pairs, "rate_hz", path)?;
    raw.parse::<f64>()
        .ok()
        .filter(|r| *r > 0.0 && r.is_finite())
        .ok_or_else(|| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("bad rate_hz {raw:?}"),
        })
}

fn split_header(text: &str, path: &Path) -> Result<(Vec<(String, String)>, String)> {
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or("");
    let pairs = parse_header(first, path)?;
    Ok((pairs, lines.next().unwrap_or("").to_string()))
}

fn parse_field(raw: &str) -> Option<f64> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("nan") {
        return Some(f64::NAN);
    }
    s.parse().ok()
}

fn read_rows(body: &str, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let line = i + 2;
        if record.len() != width {
            return Err(Error::ColumnCount {
                expected: width,
                found: record.len(),
                line,
            });
        }
        let row = record
            .iter()
            .map(|f| {
                parse_field(f).ok_or_else(|| Error::InvalidTrajectory(format!("non-numeric field {f:?} on line {line}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// Linearly interpolates interior NaN runs of at most `max_gap` samples.
pub(crate) fn repair_nan_gaps(column: &mut [f64], column_index: usize, max_gap: usize) -> Result<()> {
    let n = column.len();
    let mut i = 0;
    while i < n {
        if !column[i].is_nan() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && column[i].is_nan() {
            i += 1;
        }
        let len = i - start;
        if len > max_gap {
            return Err(Error::NanGap {
                column: column_index,
                len,
                max: max_gap,
            });
        }
        if start == 0 || i == n {
            return Err(Error::InvalidTrajectory(format!(
                "NaN run at the edge of column {column_index} cannot be interpolated"
            )));
        }
        let (lo, hi) = (column[start - 1], column[i]);
        let span = (len + 1) as f64;
        for (k, v) in column[start..i].iter_mut().enumerate() {
            let w = (k + 1) as f64 / span;
            *v = lo + w * (hi - lo);
        }
    }
    Ok(())
}

/// Parses trajectory CSV text; `path` is used only for error messages.
pub fn parse_trajectory(text: &str, path: &Path) -> Result<JointTrajectory> {
    let (pairs, body) = split_header(text, path)?;
    let rate_hz = parse_rate(&pairs, path)?;
    let units = match header_value(&pairs, "units", path)? {
        "m" => Units::Meters,
        "mm" => Units::Millimeters,
        other => {
            return Err(Error::MalformedHeader {
                path: path.to_path_buf(),
                reason: format!("unknown units {other:?}"),
            })
        }
    };
    let rows = read_rows(&body, N_COLS)?;
    if rows.is_empty() {
        return Err(Error::InvalidTrajectory("no samples".into()));
    }
    let t = rows.len();
    let mut columns: Vec<Vec<f64>> = (0..N_COLS).map(|c| rows.iter().map(|r| r[c]).collect()).collect();
    for (c, col) in columns.iter_mut().enumerate() {
        repair_nan_gaps(col, c, MAX_NAN_GAP)?;
    }
    let scale = units.scale();
    let samples = DMatrix::from_fn(t, N_COLS, |r, c| columns[c][r] * scale);
    JointTrajectory::new(samples, rate_hz)
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<JointTrajectory> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, path)
}

/// Writes a trajectory in meters.
pub fn write_trajectory(path: impl AsRef<Path>, traj: &JointTrajectory) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(traj.len() * N_COLS * 10);
    out.push_str(&format!("# rate_hz={}, units=m\n", traj.rate_hz()));
    let s = traj.samples();
    for r in 0..s.nrows() {
        for c in 0..N_COLS {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.6}", s[(r, c)]));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn parse_force_plate(text: &str, path: &Path) -> Result<ForcePlateRecord> {
    let (pairs, body) = split_header(text, path)?;
    let rate_hz = parse_rate(&pairs, path)?;
    let side: Side = header_value(&pairs, "side", path)?
        .parse()
        .map_err(|_| Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: "side must be robotic or contralateral".into(),
        })?;
    let rows = read_rows(&body, 1)?;
    let grf: Vec<f64> = rows.into_iter().map(|r| r[0]).collect();
    if grf.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in GRF record".into()));
    }
    ForcePlateRecord::new(grf, rate_hz, side)
}

pub fn load_force_plate(path: impl AsRef<Path>) -> Result<ForcePlateRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_force_plate(&text, path)
}

pub fn write_force_plate(path: impl AsRef<Path>, grf: &ForcePlateRecord) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(grf.vertical_grf.len() * 10);
    out.push_str(&format!("# rate_hz={}, side={}\n", grf.rate_hz, grf.side.as_str()));
    for v in &grf.vertical_grf {
        out.push_str(&format!("{v:.3}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
