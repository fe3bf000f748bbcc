//! `dse_results.csv` and per-run `objectives.json`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dse::{ensure_parent, DseResultRow};
use crate::error::{Error, Result};
use crate::numfmt::format_g17;

pub const MEAN_COLUMN: &str = "mean_cross_track_error";
pub const MAX_COLUMN: &str = "max_cross_track_error";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub cross_track_mean: f64,
    pub cross_track_max: f64,
}

pub fn write_objectives(objectives: &Objectives, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(objectives).expect("plain struct serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Header `scenario,<params...>,mean_cross_track_error,max_cross_track_error`.
/// Parameter columns follow the first row's assignment; every row must use
/// the same names.
pub fn dse_results_csv(rows: &[DseResultRow]) -> Result<String> {
    let names: Vec<&str> = rows
        .first()
        .map(|r| r.assignment.iter().map(|(n, _)| n.as_str()).collect())
        .unwrap_or_default();
    let mut out = String::from("scenario");
    for n in &names {
        out.push(',');
        out.push_str(n);
    }
    out.push_str(&format!(",{MEAN_COLUMN},{MAX_COLUMN}\n"));
    for row in rows {
        if row.assignment.len() != names.len() || row.assignment.iter().zip(&names).any(|((n, _), m)| n != m) {
            return Err(Error::InvalidConfig(vec![format!(
                "row for scenario `{}` has parameters differing from the header",
                row.scenario
            )]));
        }
        if row.scenario.contains([',', '\n', '\r']) {
            return Err(Error::InvalidConfig(vec![format!(
                "scenario name `{}` cannot be written to CSV",
                row.scenario
            )]));
        }
        out.push_str(&row.scenario);
        for (_, v) in &row.assignment {
            out.push(',');
            out.push_str(&format_g17(*v));
        }
        out.push(',');
        out.push_str(&format_g17(row.mean_error));
        out.push(',');
        out.push_str(&format_g17(row.max_error));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_dse_results(rows: &[DseResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = dse_results_csv(rows)?;
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn parse_dse_results(text: &str, origin: &str) -> Result<Vec<DseResultRow>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(origin, "empty results file"))?;
    let columns: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    let n = columns.len();
    if n < 3 || columns[0] != "scenario" || columns[n - 2] != MEAN_COLUMN || columns[n - 1] != MAX_COLUMN {
        return Err(Error::parse(
            format!("{origin}:1"),
            format!("header must be `scenario,<params...>,{MEAN_COLUMN},{MAX_COLUMN}`"),
        ));
    }
    let params = &columns[1..n - 2];
    let mut rows = Vec::new();
    for (i, line) in lines {
        let at = || format!("{origin}:{}", i + 1);
        let fields: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if fields.len() != n {
            return Err(Error::parse(
                at(),
                format!("expected {n} fields, found {}", fields.len()),
            ));
        }
        let number = |s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::parse(at(), format!("`{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::parse(at(), format!("non-finite value `{s}`")))
            }
        };
        let assignment = params
            .iter()
            .zip(&fields[1..n - 2])
            .map(|(name, f)| Ok((name.to_string(), number(f)?)))
            .collect::<Result<Vec<_>>>()?;
        let mean_error = number(fields[n - 2])?;
        let max_error = number(fields[n - 1])?;
        if mean_error < 0.0 || max_error < 0.0 {
            return Err(Error::parse(at(), "negative error value"));
        }
        rows.push(DseResultRow {
            scenario: fields[0].to_string(),
            assignment,
            mean_error,
            max_error,
        });
    }
    Ok(rows)
}

pub fn read_dse_results(path: impl AsRef<Path>) -> Result<Vec<DseResultRow>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dse_results(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rows(n_scenarios: usize, seed: u64) -> Vec<DseResultRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for s in 0..n_scenarios {
            for a in 0..125 {
                rows.push(DseResultRow {
                    scenario: format!("scenario{s}"),
                    assignment: vec![
                        ("{R}.I.cAlphaF".into(), 20000.0 + 4500.0 * (a / 25) as f64),
                        ("{R}.I.mu".into(), 0.3 + 0.1 * ((a / 5) % 5) as f64),
                        ("{R}.I.m_robot".into(), 1000.0 + 500.0 * (a % 5) as f64),
                    ],
                    mean_error: rng.gen_range(0.0..10.0),
                    max_error: rng.gen_range(0.0..1e6) / 3.0,
                });
            }
        }
        rows
    }

    #[test]
    fn round_trip_1500_rows() {
        let rows = random_rows(12, 11);
        assert_eq!(rows.len(), 1500);
        let text = dse_results_csv(&rows).unwrap();
        assert!(text.starts_with(
            "scenario,{R}.I.cAlphaF,{R}.I.mu,{R}.I.m_robot,mean_cross_track_error,max_cross_track_error\n"
        ));
        assert_eq!(parse_dse_results(&text, "mem").unwrap(), rows);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out/dse_results.csv");
        let rows = random_rows(2, 5);
        write_dse_results(&rows, &path).unwrap();
        assert_eq!(read_dse_results(&path).unwrap(), rows);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(parse_dse_results("", "x").is_err());
        assert!(parse_dse_results("scenario,a,mean\n", "x").is_err());
        let bad = "scenario,a,mean_cross_track_error,max_cross_track_error\ns,1,2\n";
        assert!(parse_dse_results(bad, "x").unwrap_err().to_string().contains("x:2"));
        let neg = "scenario,a,mean_cross_track_error,max_cross_track_error\ns,1,-2,3\n";
        assert!(parse_dse_results(neg, "x").is_err());
    }

    #[test]
    fn objectives_document() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("objectives.json");
        write_objectives(
            &Objectives {
                cross_track_mean: 0.5,
                cross_track_max: 1.25,
            },
            &path,
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(v["cross_track_mean"], 0.5);
        assert_eq!(v["cross_track_max"], 1.25);
    }
}
