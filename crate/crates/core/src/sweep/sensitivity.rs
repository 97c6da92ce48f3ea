use std::fmt::Write as _;

use crate::marketdata::DateRange;

use super::{best_and_averaged, AveragedParams, GridEvaluator, ParamGrid, SweepError};

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityCell {
    pub lag: usize,
    pub cost_bps: f64,
    /// Unweighted mean over subperiods of each subperiod's top-k average.
    pub averaged: Option<AveragedParams>,
    pub used: Vec<String>,
    /// Subperiods with fewer than k grid results.
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTable {
    pub lags: Vec<usize>,
    pub cost_levels: Vec<f64>,
    /// Cost-major: `cells[c * lags.len() + l]`.
    pub cells: Vec<SensitivityCell>,
}

impl SensitivityTable {
    pub fn cell(&self, lag: usize, cost_bps: f64) -> Option<&SensitivityCell> {
        self.cells.iter().find(|c| c.lag == lag && c.cost_bps == cost_bps)
    }
}

/// For each (lag, one-way cost) cell, runs the grid per subperiod with that
/// lag and a flat cost, averages the top-`k` parameters per subperiod, then
/// averages across subperiods.
pub fn sensitivity_table(
    evaluator: &GridEvaluator<'_>,
    grid: &ParamGrid,
    lags: &[usize],
    cost_levels: &[f64],
    subperiods: &[(String, DateRange)],
    k: usize,
) -> Result<SensitivityTable, SweepError> {
    if lags.is_empty() || cost_levels.is_empty() || subperiods.is_empty() {
        return Err(SweepError::InvalidParams("sensitivity needs lags, cost levels and subperiods".into()));
    }
    let mut cells = Vec::with_capacity(lags.len() * cost_levels.len());
    for &cost_bps in cost_levels {
        let costs = evaluator.engine().costs.clone().with_flat_bps(cost_bps);
        for &lag in lags {
            let cell_grid = ParamGrid { lags: vec![lag], ..grid.clone() };
            let mut per_sub = Vec::new();
            let (mut used, mut skipped) = (Vec::new(), Vec::new());
            for (label, range) in subperiods {
                let outcome = evaluator.grid(&cell_grid, *range, false, &costs)?;
                match best_and_averaged(&outcome.results, k) {
                    Ok((_, avg)) => {
                        per_sub.push(avg);
                        used.push(label.clone());
                    }
                    Err(SweepError::TooFewResults { .. }) => skipped.push(label.clone()),
                    Err(e) => return Err(e),
                }
            }
            cells.push(SensitivityCell { lag, cost_bps, averaged: AveragedParams::mean(&per_sub), used, skipped });
        }
    }
    Ok(SensitivityTable { lags: lags.to_vec(), cost_levels: cost_levels.to_vec(), cells })
}

const CELL_FIELDS: [&str; 4] = ["n_pairs", "threshold", "multiplier", "confidence"];

/// One row per cost level; per lag a group of averaged-parameter columns
/// named `lag{L}_{field}`. Cells without data are left empty.
pub fn sensitivity_to_csv(table: &SensitivityTable) -> String {
    let mut out = String::from("cost_bps");
    for lag in &table.lags {
        for f in CELL_FIELDS {
            let _ = write!(out, ",lag{lag}_{f}");
        }
    }
    out.push('\n');
    for &cost in &table.cost_levels {
        let _ = write!(out, "{cost}");
        for &lag in &table.lags {
            match table.cell(lag, cost).and_then(|c| c.averaged) {
                Some(a) => {
                    let _ = write!(out, ",{},{},{},{}", a.n_pairs, a.threshold, a.multiplier, a.confidence);
                }
                None => out.push_str(",,,,"),
            }
        }
        out.push('\n');
    }
    out
}
