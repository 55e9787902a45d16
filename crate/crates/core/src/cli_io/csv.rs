//! CSV output. Numbers carry 17 significant digits, so every `f64` survives
//! a write/read cycle and re-emission is byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::experiments::{TrajectoryRow, TRAJECTORY_COLUMNS};

use super::CliError;

pub const TRAJECTORY_HEADER: &str =
    "t,f11,f21,f11_nu,f21_nu,l2,h_half,energy_E,strip_nu_hat,omega1_f01,omega3_f01,flags";

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::with_capacity(64 + rows.len() * 256);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in rows {
        for v in r.values() {
            out.push_str(&format_number(v));
            out.push(',');
        }
        out.push_str(&r.flags.join(";"));
        out.push('\n');
    }
    out
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>, CliError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRAJECTORY_HEADER => {}
        other => return Err(CliError::MalformedCsv(format!("unexpected header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != TRAJECTORY_COLUMNS.len() {
                return Err(CliError::MalformedCsv(format!("row {}: {} cells", i + 1, cells.len())));
            }
            let mut v = [0.0; 11];
            for (slot, cell) in v.iter_mut().zip(&cells) {
                *slot = cell
                    .parse()
                    .map_err(|_| CliError::MalformedCsv(format!("row {}: '{cell}' is not a number", i + 1)))?;
            }
            let flags = cells[11].split(';').filter(|s| !s.is_empty()).map(String::from).collect();
            Ok(TrajectoryRow::from_values(v, flags))
        })
        .collect()
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn emit_csv(path: &Path, rows: &[TrajectoryRow]) -> Result<(), CliError> {
    write_text(path, &trajectory_csv(rows))
}

pub fn read_csv(path: &Path) -> Result<Vec<TrajectoryRow>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_trajectory_csv(&text)
}

/// Plain numeric table with a header row.
pub fn emit_table(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_number(*v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    write_text(path, &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_matches_columns() {
        assert_eq!(TRAJECTORY_HEADER, TRAJECTORY_COLUMNS.join(","));
    }

    #[test]
    fn empty_record_still_has_header() {
        assert_eq!(trajectory_csv(&[]), format!("{TRAJECTORY_HEADER}\n"));
    }

    #[test]
    fn reemission_is_identical() {
        let mut a = TrajectoryRow::from_values([0.1, 1.0 / 3.0, 2e-300, 5.0, 6.0, 7.0, 8.0, 9.0, f64::NAN, 1e300, -0.0], vec![]);
        a.add_flag("blowup");
        a.add_flag("bound_violation");
        let text = trajectory_csv(&[a.clone(), TrajectoryRow::default()]);
        let back = parse_trajectory_csv(&text).unwrap();
        assert_eq!(back[0].flags, a.flags);
        assert_eq!(back[0].f11.to_bits(), a.f11.to_bits());
        assert_eq!(trajectory_csv(&back), text);
    }
}
