//! Ingestion of weekly per-unit panels (e.g. hospital COVID bed density).
//!
//! Input is CSV with columns `week_index,unit_id,covid_density,total_beds`
//! and an optional header line. Each week becomes one gain vector over the
//! retained units.

use crate::stream::GainStream;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelDataset {
    pub week_index: Vec<i64>,
    pub unit_ids: Vec<String>,
    /// `density[w][u]`; units that did not report in a week get 0.
    pub density: Vec<Vec<f64>>,
    /// Smallest bed count among retained units reporting in each week.
    pub min_beds: Vec<f64>,
    /// Units removed by the case-count filter.
    pub dropped_units: Vec<String>,
}

impl PanelDataset {
    pub fn weeks(&self) -> usize {
        self.week_index.len()
    }

    pub fn units(&self) -> usize {
        self.unit_ids.len()
    }

    /// `√2 / min_beds` for each week: moving one patient between two units
    /// changes each of their densities by at most `1 / beds`.
    pub fn sensitivities(&self) -> Vec<f64> {
        self.min_beds.iter().map(|b| std::f64::consts::SQRT_2 / b).collect()
    }

    pub fn gain_stream(&self) -> Result<GainStream> {
        GainStream::from_rows(self.density.clone())
    }
}

struct Record {
    week: i64,
    unit: String,
    density: f64,
    beds: f64,
}

fn parse_line(line: &str, line_no: usize) -> Result<Record> {
    let parse_err = |message: String| Error::Parse { line: line_no, message };
    let cells: Vec<&str> = line.split(',').map(str::trim).collect();
    if cells.len() != 4 {
        return Err(parse_err(format!("expected 4 columns, found {}", cells.len())));
    }
    let week = cells[0]
        .parse::<i64>()
        .map_err(|_| parse_err(format!("week_index {:?} is not an integer", cells[0])))?;
    if cells[1].is_empty() {
        return Err(parse_err("empty unit_id".to_string()));
    }
    let density: f64 = cells[2]
        .parse()
        .map_err(|_| parse_err(format!("covid_density {:?} is not a number", cells[2])))?;
    if !(0.0..=1.0).contains(&density) {
        return Err(parse_err(format!("covid_density {density} is outside [0, 1]")));
    }
    let beds: f64 = cells[3]
        .parse()
        .map_err(|_| parse_err(format!("total_beds {:?} is not a number", cells[3])))?;
    if !(beds > 0.0) || !beds.is_finite() {
        return Err(parse_err(format!("total_beds {beds} must be positive")));
    }
    Ok(Record {
        week,
        unit: cells[1].to_string(),
        density,
        beds,
    })
}

/// Parses a panel, drops units whose total cases (Σ density × beds) fall
/// below `min_cases_filter`, and computes per-week minimum bed counts.
pub fn parse_panel(text: &str, min_cases_filter: f64) -> Result<PanelDataset> {
    let mut records = Vec::new();
    let mut seen = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if records.is_empty() && seen.is_empty() && line.trim_start().starts_with("week_index") {
            continue;
        }
        let rec = parse_line(line, line_no)?;
        if let Some(first) = seen.insert((rec.week, rec.unit.clone()), line_no) {
            return Err(Error::Parse {
                line: line_no,
                message: format!("duplicate entry for week {} unit {} (first on line {first})", rec.week, rec.unit),
            });
        }
        records.push(rec);
    }

    let mut cases: BTreeMap<&str, f64> = BTreeMap::new();
    for r in &records {
        *cases.entry(&r.unit).or_default() += r.density * r.beds;
    }
    let kept: BTreeSet<&str> = cases.iter().filter(|(_, c)| **c >= min_cases_filter).map(|(u, _)| *u).collect();
    let dropped_units: Vec<String> = cases.keys().filter(|u| !kept.contains(*u)).map(|u| u.to_string()).collect();
    if kept.is_empty() {
        return Err(Error::invalid("no units left after the case-count filter"));
    }

    let weeks: Vec<i64> = records.iter().map(|r| r.week).collect::<BTreeSet<_>>().into_iter().collect();
    let unit_ids: Vec<String> = kept.iter().map(|u| u.to_string()).collect();
    let week_pos: BTreeMap<i64, usize> = weeks.iter().enumerate().map(|(i, w)| (*w, i)).collect();
    let unit_pos: BTreeMap<&str, usize> = kept.iter().enumerate().map(|(i, u)| (*u, i)).collect();

    let mut density = vec![vec![0.0; unit_ids.len()]; weeks.len()];
    let mut min_beds = vec![f64::INFINITY; weeks.len()];
    for r in &records {
        if let Some(&u) = unit_pos.get(r.unit.as_str()) {
            let w = week_pos[&r.week];
            density[w][u] = r.density;
            min_beds[w] = min_beds[w].min(r.beds);
        }
    }
    // Weeks where no retained unit reported fall back to the overall minimum.
    let overall = min_beds.iter().copied().fold(f64::INFINITY, f64::min);
    for b in &mut min_beds {
        if !b.is_finite() {
            *b = overall;
        }
    }
    Ok(PanelDataset {
        week_index: weeks,
        unit_ids,
        density,
        min_beds,
        dropped_units,
    })
}

pub fn ingest_csv(path: &Path, min_cases_filter: f64) -> Result<PanelDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_panel(&text, min_cases_filter)
}

/// A panel with constant bed counts, used to attach a sensitivity to a
/// synthetic stream.
pub fn panel_from_stream(stream: &GainStream, beds: f64) -> Result<PanelDataset> {
    if !(beds > 0.0) {
        return Err(Error::invalid("bed count must be positive"));
    }
    Ok(PanelDataset {
        week_index: (0..stream.len() as i64).collect(),
        unit_ids: (0..stream.n()).map(|i| format!("unit_{i}")).collect(),
        density: stream.rows().iter().map(|r| r.values().to_vec()).collect(),
        min_beds: vec![beds; stream.len()],
        dropped_units: Vec::new(),
    })
}
