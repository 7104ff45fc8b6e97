//! Gain streams and their file format: headerless CSV, one round per line,
//! `n` comma-separated reals in `[0, 1]`.

use crate::mechanism::GainVector;
use crate::{Error, Result};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct GainStream {
    n: usize,
    rows: Vec<GainVector>,
}

impl GainStream {
    pub fn new(rows: Vec<GainVector>) -> Result<Self> {
        let n = rows.first().map(GainVector::len).ok_or_else(|| Error::invalid("gain stream is empty"))?;
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::invalid(format!("round {} has {} experts, expected {n}", i + 1, rows[i].len())));
        }
        Ok(GainStream { n, rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(GainVector::new).collect::<Result<_>>()?)
    }

    /// `horizon` rounds of all-zero gains.
    pub fn zeros(n: usize, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::invalid("horizon must be at least 1"));
        }
        Self::new(vec![GainVector::zeros(n)?; horizon])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[GainVector] {
        &self.rows
    }

    /// The first `horizon` rounds.
    pub fn truncated(&self, horizon: usize) -> Result<Self> {
        if horizon > self.rows.len() {
            return Err(Error::invalid(format!(
                "stream has {} rounds, {horizon} requested",
                self.rows.len()
            )));
        }
        Self::new(self.rows[..horizon].to_vec())
    }

    /// Per-expert total gain.
    pub fn totals(&self) -> Vec<f64> {
        let mut totals = vec![0.0; self.n];
        for r in &self.rows {
            for (t, g) in totals.iter_mut().zip(r.values()) {
                *t += g;
            }
        }
        totals
    }

    /// Index and total of the best single expert in hindsight.
    pub fn best_static(&self) -> (usize, f64) {
        let totals = self.totals();
        let i = crate::mechanism::argmax_tiebreak(&totals).expect("n >= 2");
        (i, totals[i])
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let cells: Vec<String> = r.values().iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut n = None;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let values = line
                .split(',')
                .map(|cell| {
                    let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                        line: line_no,
                        message: format!("not a number: {cell:?}"),
                    })?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("gain {v} is outside [0, 1]"),
                        });
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<f64>>>()?;
            match n {
                None if values.len() < 2 => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("need at least 2 experts, found {}", values.len()),
                    })
                }
                None => n = Some(values.len()),
                Some(n) if n != values.len() => {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("expected {n} values, found {}", values.len()),
                    })
                }
                _ => {}
            }
            rows.push(GainVector::new(values)?);
        }
        Self::new(rows)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}
