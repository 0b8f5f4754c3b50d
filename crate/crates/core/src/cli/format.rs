//! Plain-text data files: the per-kick time series and density snapshots.

use std::fmt::Write as _;

use thiserror::Error;

use crate::observables::{DensitySnapshot, ObservableRecord};

pub const TIME_SERIES_HEADER: &str = "t,log_norm,p_mean,e_kin,e_pot,e_tot,width";
pub const MOMENTUM_SNAPSHOT_HEADER: &str = "p,prob";
pub const COORDINATE_SNAPSHOT_HEADER: &str = "theta,prob";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemaError {
    #[error("empty file")]
    Empty,
    #[error("unrecognised header '{0}'")]
    Header(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: cannot parse '{field}' as a number")]
    Number { line: usize, field: String },
    #[error("line {line}: t must be a non-negative integer, got '{field}'")]
    Time { line: usize, field: String },
    #[error("line {line}: t={t} does not follow the previous row")]
    Order { line: usize, t: usize },
}

/// Shortest decimal that parses back to the same `f64`. Plain notation for
/// moderate magnitudes, exponent notation otherwise.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn render_time_series(records: &[ObservableRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TIME_SERIES_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.t,
            fmt_num(r.log_norm_growth),
            fmt_num(r.p_mean),
            fmt_num(r.e_kin),
            fmt_num(r.e_pot),
            fmt_num(r.e_tot),
            fmt_num(r.width)
        );
    }
    out
}

fn render_pairs(header: &str, rows: &[(f64, f64)]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(header);
    out.push('\n');
    for &(x, w) in rows {
        let _ = writeln!(out, "{},{}", fmt_num(x), fmt_num(w));
    }
    out
}

/// `(momentum file, coordinate file)` contents.
pub fn render_snapshot(s: &DensitySnapshot) -> (String, String) {
    (
        render_pairs(MOMENTUM_SNAPSHOT_HEADER, &s.momentum_density),
        render_pairs(COORDINATE_SNAPSHOT_HEADER, &s.coordinate_density),
    )
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty())
}

fn number(line: usize, field: &str) -> Result<f64, SchemaError> {
    field
        .parse::<f64>()
        .map_err(|_| SchemaError::Number { line, field: field.into() })
}

/// Parses a time-series file. Rows must start at any `t` and increase by one.
pub fn parse_time_series(text: &str) -> Result<Vec<ObservableRecord>, SchemaError> {
    let mut lines = data_lines(text);
    let (_, header) = lines.next().ok_or(SchemaError::Empty)?;
    if header != TIME_SERIES_HEADER {
        return Err(SchemaError::Header(header.chars().take(80).collect()));
    }
    let mut records: Vec<ObservableRecord> = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 7 {
            return Err(SchemaError::FieldCount { line, expected: 7, found: fields.len() });
        }
        let t: usize = fields[0]
            .parse()
            .map_err(|_| SchemaError::Time { line, field: fields[0].into() })?;
        if let Some(prev) = records.last() {
            if prev.t.checked_add(1) != Some(t) {
                return Err(SchemaError::Order { line, t });
            }
        }
        let v = |i: usize| number(line, fields[i]);
        records.push(ObservableRecord {
            t,
            log_norm_growth: v(1)?,
            p_mean: v(2)?,
            e_kin: v(3)?,
            e_pot: v(4)?,
            e_tot: v(5)?,
            width: v(6)?,
        });
    }
    Ok(records)
}

/// Parses a snapshot file; returns its header (`p,prob` or `theta,prob`)
/// and the sampled density.
pub fn parse_snapshot(text: &str) -> Result<(&'static str, Vec<(f64, f64)>), SchemaError> {
    let mut lines = data_lines(text);
    let (_, header) = lines.next().ok_or(SchemaError::Empty)?;
    let header = [MOMENTUM_SNAPSHOT_HEADER, COORDINATE_SNAPSHOT_HEADER]
        .into_iter()
        .find(|h| *h == header)
        .ok_or_else(|| SchemaError::Header(header.chars().take(80).collect()))?;
    let mut rows = Vec::new();
    for (line, row) in lines {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 2 {
            return Err(SchemaError::FieldCount { line, expected: 2, found: fields.len() });
        }
        rows.push((number(line, fields[0])?, number(line, fields[1])?));
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for &x in &[0.0, -0.0, 1.0, 0.1, 1e-300, -3.5e-7, 6.283185307179586, 1e20, f64::MAX, f64::MIN_POSITIVE] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_num(0.25), "0.25");
        assert_eq!(fmt_num(1e-7), "1e-7");
        assert_eq!(fmt_num(12.0), "12");
    }

    #[test]
    fn series_round_trip() {
        let records: Vec<_> = (0..3)
            .map(|t| ObservableRecord {
                t,
                log_norm_growth: 0.1 * t as f64,
                p_mean: -1e-9,
                e_kin: 1.0 / 3.0,
                e_pot: 2.0,
                e_tot: 7.0 / 3.0,
                width: 1e17,
            })
            .collect();
        let text = render_time_series(&records);
        assert!(text.starts_with("t,log_norm,p_mean,e_kin,e_pot,e_tot,width\n0,0,-1e-9,"));
        assert_eq!(parse_time_series(&text).unwrap(), records);
    }

    #[test]
    fn schema_violations() {
        assert_eq!(parse_time_series(""), Err(SchemaError::Empty));
        assert!(matches!(parse_time_series("p,prob\n"), Err(SchemaError::Header(_))));
        let h = TIME_SERIES_HEADER;
        assert!(matches!(parse_time_series(&format!("{h}\n0,1,2\n")), Err(SchemaError::FieldCount { line: 2, .. })));
        assert!(matches!(parse_time_series(&format!("{h}\n0,1,2,3,4,x,6\n")), Err(SchemaError::Number { .. })));
        assert!(matches!(parse_time_series(&format!("{h}\n-1,1,2,3,4,5,6\n")), Err(SchemaError::Time { .. })));
        assert!(matches!(
            parse_time_series(&format!("{h}\n0,1,2,3,4,5,6\n2,1,2,3,4,5,6\n")),
            Err(SchemaError::Order { line: 3, t: 2 })
        ));
        assert_eq!(parse_time_series(&format!("{h}\n")).unwrap(), vec![]);
    }

    #[test]
    fn snapshot_files() {
        let s = DensitySnapshot {
            t: 4,
            momentum_density: vec![(-0.1, 0.5), (0.0, 0.5)],
            coordinate_density: vec![(-3.0, 1.0)],
        };
        let (p, theta) = render_snapshot(&s);
        assert_eq!(p, "p,prob\n-0.1,0.5\n0,0.5\n");
        assert_eq!(parse_snapshot(&theta).unwrap(), ("theta,prob", vec![(-3.0, 1.0)]));
        assert!(parse_snapshot("x,y\n").is_err());
    }
}
