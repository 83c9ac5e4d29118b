//! Convergence logs (CSV) and run summaries (JSON).

use std::io::{self, Write};

use itrpower_core::{
    IterationRecord, ModelSpec, RunConfig, RunOutcome, ScheduleEntry, Termination,
};
use serde::{Deserialize, Serialize};

pub const CSV_HEADER: &str =
    "iter,t,T_total,theta,theta1,theta2,res_norm,err,sigma_min,omega_min,wallclock_s";

/// 17 significant digits, enough to reproduce every `f64` exactly.
fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_row(r: &IterationRecord) -> String {
    let err = r.err.map(float).unwrap_or_default();
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.iter,
        float(r.t),
        float(r.total_time),
        float(r.theta),
        float(r.theta1),
        float(r.theta2),
        float(r.res_norm),
        err,
        float(r.sigma_min),
        float(r.omega_min),
        float(r.wallclock_s),
    )
}

/// Writes the header once and then one row per record.
pub struct CsvWriter<W: Write> {
    out: W,
}

impl<W: Write> CsvWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "{CSV_HEADER}")?;
        Ok(Self { out })
    }

    pub fn record(&mut self, r: &IterationRecord) -> io::Result<()> {
        writeln!(self.out, "{}", csv_row(r))?;
        self.out.flush()
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub fn write_csv<W: Write>(out: W, history: &[IterationRecord]) -> io::Result<W> {
    let mut w = CsvWriter::new(out)?;
    for r in history {
        w.record(r)?;
    }
    Ok(w.into_inner())
}

/// Parses a CSV produced by [`write_csv`]. `theta_hat` is not part of the
/// log and comes back as `None`.
pub fn parse_csv(text: &str) -> Result<Vec<IterationRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .map(|(n, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 11 {
                return Err(format!(
                    "row {}: expected 11 columns, found {}",
                    n + 1,
                    cols.len()
                ));
            }
            let f = |i: usize| -> Result<f64, String> {
                cols[i]
                    .parse()
                    .map_err(|e| format!("row {}, column {}: {e}", n + 1, i + 1))
            };
            Ok(IterationRecord {
                iter: cols[0].parse().map_err(|e| format!("row {}: {e}", n + 1))?,
                t: f(1)?,
                total_time: f(2)?,
                theta: f(3)?,
                theta1: f(4)?,
                theta2: f(5)?,
                res_norm: f(6)?,
                err: if cols[7].is_empty() {
                    None
                } else {
                    Some(f(7)?)
                },
                sigma_min: f(8)?,
                omega_min: f(9)?,
                wallclock_s: f(10)?,
                theta_hat: None,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub model: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub rank: usize,
    pub variant: String,
    pub schedule: Vec<ScheduleEntry>,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub theta_hat: Option<f64>,
    pub res_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub err: Option<f64>,
    pub seed: u64,
    pub iterations: usize,
    pub termination: Termination,
}

pub fn model_params(spec: &ModelSpec) -> serde_json::Map<String, serde_json::Value> {
    let mut p = serde_json::Map::new();
    match *spec {
        ModelSpec::Ising { g } => {
            p.insert("g".into(), g.into());
        }
        ModelSpec::HeisenbergS1 { delta } => {
            p.insert("delta".into(), delta.into());
        }
        ModelSpec::HeisenbergHalf => {}
    }
    p
}

impl Summary {
    /// `None` when the run produced no checks.
    pub fn new(config: &RunConfig, outcome: &RunOutcome) -> Option<Self> {
        let last = outcome.last()?;
        Some(Self {
            model: config.model.kind().name().to_string(),
            params: model_params(&config.model),
            rank: config.rank,
            variant: config.variant.name().to_string(),
            schedule: outcome.schedule.clone(),
            theta: last.theta,
            theta_hat: last.theta_hat,
            res_norm: last.res_norm,
            err: last.err,
            seed: config.seed,
            iterations: last.iter,
            termination: outcome.termination,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(err: Option<f64>) -> IterationRecord {
        IterationRecord {
            iter: 10,
            t: 0.1,
            total_time: 1.0000000000000002,
            theta: -2.127_088_819_946_73,
            theta1: -2.1,
            theta2: -1.0 / 3.0,
            res_norm: 1.2345678901234567e-9,
            err,
            sigma_min: 5e-324,
            omega_min: f64::MAX,
            wallclock_s: 0.25,
            theta_hat: None,
        }
    }

    #[test]
    fn single_record_gives_two_lines() {
        let buf = write_csv(Vec::new(), &[record(Some(1e-3))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    }

    #[test]
    fn missing_error_is_an_empty_field() {
        let row = csv_row(&record(None));
        assert_eq!(row.split(',').nth(7), Some(""));
        assert!(row.contains(",,"));
    }

    #[test]
    fn rows_parse_back_exactly() {
        let hist = vec![record(Some(std::f64::consts::PI * 1e-7)), record(None)];
        let text = String::from_utf8(write_csv(Vec::new(), &hist).unwrap()).unwrap();
        assert_eq!(parse_csv(&text).unwrap(), hist);
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(parse_csv("iter,t\n1,2").is_err());
    }
}
