//! Plain-text and image artifacts.
//!
//! Fields are written as CSV with one line per native row (`j` ascending)
//! and `{:.16e}` values, which round-trip `f64` exactly. Graymaps are binary
//! P5 images with the top wall in the first row.

use std::io::Write;

use crate::assimilation::ObservationSet;
use crate::error::{Error, Result};
use crate::experiments::{RrmseRecord, RrmseSeries};
use crate::grid::{Field, GridSpec, Location};

pub const RRMSE_HEADER: &str = "t,rrmse_theta,rrmse_u,rrmse_v,flags";
pub const OBSERVATION_HEADER: &str = "step,variable,i,j,value";

pub fn write_field_csv(field: &Field, mut out: impl Write) -> Result<()> {
    let (_, rows) = field.shape();
    let mut line = String::new();
    for j in 0..rows {
        line.clear();
        for (i, x) in field.row(j).iter().enumerate() {
            if i > 0 {
                line.push(',');
            }
            line.push_str(&format!("{x:.16e}"));
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn field_to_csv(field: &Field) -> String {
    let mut buf = Vec::new();
    write_field_csv(field, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// Parse a field CSV for location `loc` of `grid`.
pub fn read_field_csv(text: &str, grid: &GridSpec, loc: Location) -> Result<Field> {
    let (cols, rows) = grid.shape(loc);
    let mut values = Vec::with_capacity(cols * rows);
    let mut seen = 0;
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        seen += 1;
        if seen > rows {
            return Err(Error::parse(line_no, None, format!("more than {rows} rows")));
        }
        let before = values.len();
        for cell in line.split(',') {
            let x: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, None, format!("invalid number `{}`", cell.trim())))?;
            values.push(x);
        }
        if values.len() - before != cols {
            return Err(Error::parse(
                line_no,
                None,
                format!("expected {cols} values, found {}", values.len() - before),
            ));
        }
    }
    if seen != rows {
        return Err(Error::parse(text.lines().count(), None, format!("expected {rows} rows, found {seen}")));
    }
    Field::from_interior(grid, loc, &values)
}

fn format_record(r: &RrmseRecord) -> String {
    format!(
        "{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
        r.t, r.values[0], r.values[1], r.values[2], r.flags
    )
}

/// One row per step, without the initial record.
pub fn write_rrmse_csv(series: &RrmseSeries, mut out: impl Write) -> Result<()> {
    let mut text = String::with_capacity(96 * (series.len() + 1));
    text.push_str(RRMSE_HEADER);
    text.push('\n');
    for r in &series.records {
        text.push_str(&format_record(r));
    }
    out.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_rrmse_csv(text: &str) -> Result<Vec<RrmseRecord>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == RRMSE_HEADER => {}
        Some((_, h)) => return Err(Error::parse(1, None, format!("expected header `{RRMSE_HEADER}`, found `{h}`"))),
        None => return Err(Error::parse(1, None, "empty file")),
    }
    let mut out = Vec::new();
    for (n, line) in lines {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 5 {
            return Err(Error::parse(line_no, None, format!("expected 5 columns, found {}", cells.len())));
        }
        let num = |k: usize| -> Result<f64> {
            cells[k]
                .parse()
                .map_err(|_| Error::parse(line_no, None, format!("invalid number `{}`", cells[k])))
        };
        let flags: u8 = cells[4]
            .parse()
            .ok()
            .filter(|f| *f < 8)
            .ok_or_else(|| Error::parse(line_no, None, format!("invalid flags `{}`", cells[4])))?;
        out.push(RrmseRecord { t: num(0)?, values: [num(1)?, num(2)?, num(3)?], flags });
    }
    Ok(out)
}

/// Observation stream as `step,variable,i,j,value` rows.
pub fn write_observations_csv<'a>(
    sets: impl IntoIterator<Item = &'a ObservationSet>,
    mut out: impl Write,
) -> Result<()> {
    writeln!(out, "{OBSERVATION_HEADER}")?;
    for set in sets {
        for (var, samples) in set.iter() {
            for ((i, j), x) in samples.lattice.points().zip(&samples.values) {
                writeln!(out, "{},{var},{i},{j},{x:.16e}", set.step)?;
            }
        }
    }
    Ok(())
}

/// 8-bit graymap of `field` normalized to its own range, with that range.
pub struct Graymap {
    pub bytes: Vec<u8>,
    pub min: f64,
    pub max: f64,
}

impl Graymap {
    /// Sidecar text recording the normalization.
    pub fn sidecar(&self, name: &str) -> String {
        format!("field = {name}\nmin = {:.16e}\nmax = {:.16e}\n", self.min, self.max)
    }
}

pub fn field_to_pgm(field: &Field) -> Graymap {
    let (cols, rows) = field.shape();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    for j in 0..rows {
        for &x in field.row(j) {
            min = min.min(x);
            max = max.max(x);
        }
    }
    let span = max - min;
    let mut bytes = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    for j in (0..rows).rev() {
        for &x in field.row(j) {
            let level = if span > 0.0 { ((x - min) / span * 255.0).round() } else { 0.0 };
            bytes.push(level.clamp(0.0, 255.0) as u8);
        }
    }
    Graymap { bytes, min, max }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> GridSpec {
        GridSpec::new(6, 4, 2.0, 1.0).unwrap()
    }

    #[test]
    fn field_csv_round_trip_is_exact() {
        let grid = g();
        for loc in [Location::Center, Location::UFace, Location::VFace] {
            let f = Field::from_fn(&grid, loc, |i, j| (i as f64 * 0.37).sin() / (j as f64 + 0.3));
            let text = field_to_csv(&f);
            assert_eq!(text.lines().count(), grid.shape(loc).1);
            assert_eq!(read_field_csv(&text, &grid, loc).unwrap(), f);
        }
    }

    #[test]
    fn field_csv_errors_point_at_lines() {
        let grid = g();
        let f = Field::zeros(&grid, Location::Center);
        let text = field_to_csv(&f).replacen("0.0000000000000000e0", "zero", 1);
        assert!(matches!(read_field_csv(&text, &grid, Location::Center), Err(Error::Parse { line: 1, .. })));
        assert!(read_field_csv("1,2\n", &grid, Location::Center).is_err());
    }

    #[test]
    fn rrmse_csv_round_trip() {
        let rec = |t: f64| RrmseRecord { t, values: [t.exp(), 1.0 / 3.0, 0.0], flags: 4 };
        let series = RrmseSeries { initial: rec(0.0), records: (1..=5).map(|k| rec(k as f64 * 0.01)).collect() };
        let mut buf = Vec::new();
        write_rrmse_csv(&series, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(RRMSE_HEADER));
        assert_eq!(read_rrmse_csv(&text).unwrap(), series.records);
        assert!(read_rrmse_csv("t,x\n").is_err());
    }

    #[test]
    fn pgm_header_and_range() {
        let grid = g();
        let f = Field::from_fn(&grid, Location::Center, |i, _| i as f64);
        let pgm = field_to_pgm(&f);
        assert!(pgm.bytes.starts_with(b"P5\n6 4\n255\n"));
        assert_eq!(pgm.bytes.len(), "P5\n6 4\n255\n".len() + 24);
        assert_eq!((pgm.min, pgm.max), (0.0, 5.0));
        assert_eq!(*pgm.bytes.last().unwrap(), 255);
    }
}
