//! Deterministic CSV/JSON emission and the tabulated-density CSV loader.
//!
//! Floats in CSV carry 17 significant digits so a write/read round trip is
//! bit-exact; JSON reports serialize with a fixed field order so identical
//! inputs produce byte-identical artifacts.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modes::Regime;
use crate::occupation::OccupationSample;
use crate::volterra::ComplexTrajectory;

/// 17 significant digits: lossless for f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesFormat {
    Csv,
    Json,
}

/// Tabular series with a fixed header, rendered as CSV rows or as a JSON
/// object {"header": [...], "rows": [[...], ...]}.
pub fn render_series(format: SeriesFormat, header: &[&str], rows: &[Vec<f64>]) -> String {
    match format {
        SeriesFormat::Csv => {
            let mut out = String::new();
            out.push_str(&header.join(","));
            out.push('\n');
            for row in rows {
                let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        SeriesFormat::Json => {
            #[derive(Serialize)]
            struct Series<'a> {
                header: &'a [&'a str],
                rows: &'a [Vec<f64>],
            }
            let mut s = serde_json::to_string_pretty(&Series { header, rows })
                .expect("series serialization cannot fail");
            s.push('\n');
            s
        }
    }
}

pub fn write_series(
    path: &Path,
    format: SeriesFormat,
    header: &[&str],
    rows: &[Vec<f64>],
) -> Result<()> {
    write_text(path, &render_series(format, header, rows))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Trajectory rows `t,re_u,im_u,abs_u`.
pub const TRAJECTORY_HEADER: [&str; 4] = ["t", "re_u", "im_u", "abs_u"];

pub fn trajectory_rows(u: &ComplexTrajectory) -> Vec<Vec<f64>> {
    u.samples()
        .iter()
        .enumerate()
        .map(|(k, z)| vec![u.grid().time(k), z.re, z.im, z.norm()])
        .collect()
}

/// Occupation rows `t,n_total,n_initial_part,n_bath_part`.
pub const OCCUPATION_HEADER: [&str; 4] = ["t", "n_total", "n_initial_part", "n_bath_part"];

pub fn occupation_rows(series: &[OccupationSample]) -> Vec<Vec<f64>> {
    series
        .iter()
        .map(|s| vec![s.t, s.n_total, s.n_initial_part, s.n_bath_part])
        .collect()
}

/// Mode-report payload: {eta_c, modes: [{omega0, amplitude}], regime}.
/// eta_c is null when undefined for the spectrum (non-half-side) or infinite.
#[derive(Debug, Serialize)]
pub struct ModeReport {
    pub eta_c: Option<f64>,
    pub modes: Vec<ModeEntry>,
    pub regime: Regime,
}

#[derive(Debug, Serialize)]
pub struct ModeEntry {
    pub omega0: f64,
    pub amplitude: f64,
}

/// Oracle comparison payload.
#[derive(Debug, Serialize)]
pub struct OracleReport {
    pub n_modes: usize,
    pub window: [f64; 2],
    pub recurrence_time: f64,
    pub max_abs_error: f64,
    pub per_time_errors: Vec<PerTimeError>,
}

#[derive(Debug, Serialize)]
pub struct PerTimeError {
    pub t: f64,
    pub abs_error: f64,
}

pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

/// Load (omega, j) samples from a two-column CSV with header `omega,j`;
/// omega strictly increasing, j finite and non-negative.
pub fn read_tabulated_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "omega,j" => {}
        Some((_, h)) => {
            return Err(Error::Config(format!(
                "{}: expected header 'omega,j', found '{}'",
                path.display(),
                h.trim()
            )))
        }
        None => return Err(Error::Config(format!("{}: empty file", path.display()))),
    }
    let mut samples = Vec::new();
    for (ln, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let parse = |s: Option<&str>, what: &str| -> Result<f64> {
            s.ok_or_else(|| {
                Error::Config(format!("{}:{}: missing {what}", path.display(), ln + 1))
            })?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("{}:{}: {what}: {e}", path.display(), ln + 1)))
        };
        let w = parse(parts.next(), "omega")?;
        let j = parse(parts.next(), "j")?;
        if parts.next().is_some() {
            return Err(Error::Config(format!(
                "{}:{}: expected two columns",
                path.display(),
                ln + 1
            )));
        }
        samples.push((w, j));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volterra::TimeGrid;
    use num_complex::Complex64;

    #[test]
    fn csv_round_trip_is_lossless() {
        let values = [
            0.1,
            -1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            6.02e23,
            -0.0,
        ];
        for v in values {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v.to_bits(), back.to_bits(), "{v} -> {s} -> {back}");
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let s = render_series(SeriesFormat::Csv, &["a", "b"], &[]);
        assert_eq!(s, "a,b\n");
    }

    #[test]
    fn series_render_is_deterministic() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        let a = render_series(SeriesFormat::Json, &["x", "y"], &rows);
        let b = render_series(SeriesFormat::Json, &["x", "y"], &rows);
        assert_eq!(a, b);
    }

    #[test]
    fn mode_report_stable_shape() {
        let report = ModeReport {
            eta_c: Some(0.5),
            modes: vec![ModeEntry {
                omega0: -0.2,
                amplitude: 0.3,
            }],
            regime: Regime::NonThermal,
        };
        let s = render_json(&report);
        assert!(s.contains("\"eta_c\": 0.5"));
        assert!(s.contains("\"regime\": \"non-thermal\""));
        let infinite = ModeReport {
            eta_c: None,
            modes: vec![],
            regime: Regime::Thermal,
        };
        assert!(render_json(&infinite).contains("\"eta_c\": null"));
    }

    #[test]
    fn trajectory_rows_shape() {
        let grid = TimeGrid::new(1.0, 0.5).unwrap();
        let u = ComplexTrajectory::new(
            grid,
            vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(-1.0, 0.0),
            ],
        )
        .unwrap();
        let rows = trajectory_rows(&u);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1], vec![0.5, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn tabulated_csv_loader() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("j.csv");
        std::fs::write(&path, "omega,j\n0.0,0.0\n1.0,2.5\n2.0,0.0\n").unwrap();
        let samples = read_tabulated_csv(&path).unwrap();
        assert_eq!(samples, vec![(0.0, 0.0), (1.0, 2.5), (2.0, 0.0)]);

        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "w,j\n0,0\n").unwrap();
        assert!(read_tabulated_csv(&bad).is_err());
    }
}
