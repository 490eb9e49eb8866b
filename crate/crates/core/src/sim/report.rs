use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::engine::RunOutcome;

/// One run's metrics; also the CSV row format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub scenario: String,
    pub method: String,
    pub requests: usize,
    pub mix: f64,
    pub degree: u32,
    pub seed: u64,
    pub meet_rate: f64,
    pub avg_makespan_ms: f64,
}

impl SimReport {
    pub fn from_outcome(
        scenario: &str,
        method: &str,
        requests: usize,
        mix: f64,
        degree: u32,
        seed: u64,
        outcome: &RunOutcome,
    ) -> Self {
        let n = outcome.completions.len();
        let met = outcome.completions.iter().filter(|c| c.met()).count();
        let makespan: f64 = outcome.completions.iter().map(|c| c.makespan()).sum();
        SimReport {
            scenario: scenario.to_string(),
            method: method.to_string(),
            requests,
            mix,
            degree,
            seed,
            meet_rate: if n == 0 { 0.0 } else { met as f64 / n as f64 },
            avg_makespan_ms: if n == 0 { 0.0 } else { makespan / n as f64 },
        }
    }
}

/// Mean and 95% half-width of one metric over a cell's runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
}

impl Estimate {
    /// Normal-approximation interval: `1.96 * s / sqrt(n)` with the sample
    /// standard deviation `s`.
    pub fn of(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::MissingData(format!("need at least 2 runs per cell, got {}", xs.len())));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        Ok(Self { mean, half_width: 1.96 * var.sqrt() / n.sqrt() })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub scenario: String,
    pub method: String,
    pub requests: usize,
    pub mix: f64,
    pub degree: u32,
    pub runs: usize,
    pub meet_rate: Estimate,
    pub avg_makespan_ms: Estimate,
}

/// Groups reports by (scenario, method, requests, mix, degree), in order of
/// first appearance.
pub fn aggregate(reports: &[SimReport]) -> Result<Vec<CellSummary>> {
    if reports.is_empty() {
        return Err(Error::MissingData("no runs to aggregate".into()));
    }
    let mut order: Vec<(String, String, usize, u64, u32)> = Vec::new();
    let mut cells: BTreeMap<(String, String, usize, u64, u32), Vec<&SimReport>> = BTreeMap::new();
    for r in reports {
        let key = (r.scenario.clone(), r.method.clone(), r.requests, r.mix.to_bits(), r.degree);
        let entry = cells.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(r);
    }
    order
        .into_iter()
        .map(|key| {
            let rows = &cells[&key];
            let meet: Vec<f64> = rows.iter().map(|r| r.meet_rate).collect();
            let span: Vec<f64> = rows.iter().map(|r| r.avg_makespan_ms).collect();
            let ctx = |e: Error| match e {
                Error::MissingData(m) => Error::MissingData(format!("cell {}/{}/{}: {m}", key.0, key.1, key.2)),
                other => other,
            };
            Ok(CellSummary {
                scenario: key.0.clone(),
                method: key.1.clone(),
                requests: key.2,
                mix: f64::from_bits(key.3),
                degree: key.4,
                runs: rows.len(),
                meet_rate: Estimate::of(&meet).map_err(ctx)?,
                avg_makespan_ms: Estimate::of(&span).map_err(ctx)?,
            })
        })
        .collect()
}
