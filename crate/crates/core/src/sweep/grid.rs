use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::marketdata::{DateRange, PricePanel};
use crate::metrics::{annualized_sharpe, monthly_returns};
use crate::pairselect::Method;
use crate::tradesim::{CostModel, StrategyParams};

use super::{Engine, GridEvaluator, RankBy, SweepError};

/// Confidence reported for distance-method grid points, where it is unused.
const DISTANCE_CONFIDENCE: f64 = 0.05;

/// Choice sets for the parameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrid {
    pub n_pairs: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// Cointegration only.
    pub confidences: Vec<f64>,
    pub lags: Vec<usize>,
    pub allow_reentry: bool,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            n_pairs: vec![5, 10, 20, 40],
            thresholds: vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0],
            multipliers: vec![0.16, 0.5, 1.0, 1.5],
            confidences: vec![0.01, 0.05, 0.1],
            lags: vec![1],
            allow_reentry: true,
        }
    }
}

impl ParamGrid {
    /// A grid holding exactly one parameter set.
    pub fn single(params: &StrategyParams) -> Self {
        ParamGrid {
            n_pairs: vec![params.n_pairs],
            thresholds: vec![params.threshold],
            multipliers: vec![params.length_multiplier],
            confidences: vec![params.confidence],
            lags: vec![params.lag],
            allow_reentry: params.allow_reentry,
        }
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.n_pairs.is_empty()
            || self.thresholds.is_empty()
            || self.multipliers.is_empty()
            || self.confidences.is_empty()
            || self.lags.is_empty()
        {
            return Err(SweepError::InvalidParams("every grid axis needs at least one choice".into()));
        }
        Ok(())
    }

    fn confidences_for(&self, method: Method) -> Vec<f64> {
        match method {
            Method::Distance => vec![DISTANCE_CONFIDENCE],
            Method::Cointegration => self.confidences.clone(),
        }
    }

    /// Cartesian product in axis order (pairs, threshold, multiplier,
    /// confidence, lag).
    pub fn points(&self, method: Method) -> Vec<StrategyParams> {
        let confidences = self.confidences_for(method);
        let mut out = Vec::new();
        for &n_pairs in &self.n_pairs {
            for &threshold in &self.thresholds {
                for &length_multiplier in &self.multipliers {
                    for &confidence in &confidences {
                        for &lag in &self.lags {
                            out.push(StrategyParams {
                                n_pairs,
                                threshold,
                                length_multiplier,
                                confidence,
                                lag,
                                allow_reentry: self.allow_reentry,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn max_pairs(&self) -> usize {
        self.n_pairs.iter().copied().max().unwrap_or(0)
    }

    pub fn min_confidence(&self, method: Method) -> f64 {
        self.confidences_for(method).into_iter().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub params: StrategyParams,
    pub mean_monthly: f64,
    pub sharpe: f64,
    pub sharpe_degenerate: bool,
    pub n_trades: usize,
    pub n_months: usize,
    pub range: DateRange,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFailure {
    pub params: StrategyParams,
    pub reason: String,
}

/// Ranked results plus the points that could not be evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub results: Vec<GridResult>,
    pub failures: Vec<GridFailure>,
}

fn params_cmp(a: &StrategyParams, b: &StrategyParams) -> Ordering {
    a.n_pairs
        .cmp(&b.n_pairs)
        .then(a.threshold.total_cmp(&b.threshold))
        .then(a.length_multiplier.total_cmp(&b.length_multiplier))
        .then(a.confidence.total_cmp(&b.confidence))
        .then(a.lag.cmp(&b.lag))
        .then(a.allow_reentry.cmp(&b.allow_reentry))
}

/// Sorts best first: descending primary key, descending secondary key,
/// then ascending parameters.
pub fn rank_results(results: &mut [GridResult], rank_by: RankBy) {
    results.sort_by(|a, b| {
        let (ka, kb) = match rank_by {
            RankBy::Return => ((a.mean_monthly, a.sharpe), (b.mean_monthly, b.sharpe)),
            RankBy::Sharpe => ((a.sharpe, a.mean_monthly), (b.sharpe, b.mean_monthly)),
        };
        kb.0.total_cmp(&ka.0).then(kb.1.total_cmp(&ka.1)).then_with(|| params_cmp(&a.params, &b.params))
    });
}

impl GridEvaluator<'_> {
    /// Scores one parameter set by its monthly returns over `range`.
    pub fn score(
        &self,
        params: &StrategyParams,
        range: DateRange,
        lookback: bool,
        costs: &CostModel,
    ) -> Result<GridResult, SweepError> {
        let run = self.evaluate(params, range, lookback, costs)?;
        let monthly: Vec<f64> = monthly_returns(&run.returns)?.iter().map(|m| m.value).collect();
        let (sharpe, sharpe_degenerate) = annualized_sharpe(&monthly);
        Ok(GridResult {
            params: *params,
            mean_monthly: monthly.iter().sum::<f64>() / monthly.len() as f64,
            sharpe,
            sharpe_degenerate,
            n_trades: run.n_trades(),
            n_months: monthly.len(),
            range,
        })
    }

    /// Every grid point over `range`, ranked. Points are evaluated in
    /// parallel; the outcome does not depend on scheduling.
    pub fn grid(&self, grid: &ParamGrid, range: DateRange, lookback: bool, costs: &CostModel) -> Result<GridOutcome, SweepError> {
        grid.validate()?;
        let points = grid.points(self.engine().method);
        self.warm(range, &grid.multipliers, lookback);
        let scored: Vec<Result<GridResult, SweepError>> =
            points.par_iter().map(|p| self.score(p, range, lookback, costs)).collect();
        let mut results = Vec::new();
        let mut failures = Vec::new();
        for (params, r) in points.iter().zip(scored) {
            match r {
                Ok(r) => results.push(r),
                Err(e) => failures.push(GridFailure { params: *params, reason: e.to_string() }),
            }
        }
        rank_results(&mut results, self.engine().rank_by);
        Ok(GridOutcome { results, failures })
    }
}

/// Evaluates the whole grid over `range`.
pub fn run_grid(panel: &PricePanel, engine: &Engine, grid: &ParamGrid, range: DateRange) -> Result<GridOutcome, SweepError> {
    let evaluator = GridEvaluator::new(panel, engine.clone(), grid.max_pairs(), grid.min_confidence(engine.method));
    evaluator.grid(grid, range, false, &engine.costs)
}

/// Per-axis arithmetic means over the top results.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedParams {
    pub n_pairs: f64,
    pub threshold: f64,
    pub multiplier: f64,
    pub confidence: f64,
    pub lag: f64,
}

impl AveragedParams {
    pub fn exact(p: &StrategyParams) -> Self {
        AveragedParams {
            n_pairs: p.n_pairs as f64,
            threshold: p.threshold,
            multiplier: p.length_multiplier,
            confidence: p.confidence,
            lag: p.lag as f64,
        }
    }

    pub fn mean(items: &[AveragedParams]) -> Option<Self> {
        if items.is_empty() {
            return None;
        }
        let k = items.len() as f64;
        let avg = |f: fn(&AveragedParams) -> f64| items.iter().map(f).sum::<f64>() / k;
        Some(AveragedParams {
            n_pairs: avg(|a| a.n_pairs),
            threshold: avg(|a| a.threshold),
            multiplier: avg(|a| a.multiplier),
            confidence: avg(|a| a.confidence),
            lag: avg(|a| a.lag),
        })
    }
}

/// Rank-1 result and the mean parameters of the top `k` ranked results.
pub fn best_and_averaged(results: &[GridResult], k: usize) -> Result<(GridResult, AveragedParams), SweepError> {
    if k == 0 || results.len() < k {
        return Err(SweepError::TooFewResults { needed: k.max(1), got: results.len() });
    }
    let top: Vec<AveragedParams> = results[..k].iter().map(|r| AveragedParams::exact(&r.params)).collect();
    Ok((results[0].clone(), AveragedParams::mean(&top).expect("k > 0")))
}

fn nearest<T: Copy>(choices: &[T], value: f64, as_f64: impl Fn(T) -> f64) -> T {
    let mut best = choices[0];
    for &c in &choices[1..] {
        let (d, db) = ((as_f64(c) - value).abs(), (as_f64(best) - value).abs());
        if d < db || (d == db && as_f64(c) < as_f64(best)) {
            best = c;
        }
    }
    best
}

/// Rounds each averaged axis to the nearest grid choice, ties to the
/// smaller value.
pub fn snap_to_grid(avg: &AveragedParams, grid: &ParamGrid, method: Method) -> StrategyParams {
    let confidences = grid.confidences_for(method);
    StrategyParams {
        n_pairs: nearest(&grid.n_pairs, avg.n_pairs, |v| v as f64),
        threshold: nearest(&grid.thresholds, avg.threshold, |v| v),
        length_multiplier: nearest(&grid.multipliers, avg.multiplier, |v| v),
        confidence: nearest(&confidences, avg.confidence, |v| v),
        lag: nearest(&grid.lags, avg.lag, |v| v as f64),
        allow_reentry: grid.allow_reentry,
    }
}

pub const GRID_HEADER: &str = "n_pairs,threshold,multiplier,confidence,lag,mean_monthly,sharpe,n_trades";

pub fn grid_to_csv(results: &[GridResult]) -> String {
    let mut out = String::from(GRID_HEADER);
    out.push('\n');
    for r in results {
        let p = &r.params;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.n_pairs, p.threshold, p.length_multiplier, p.confidence, p.lag, r.mean_monthly, r.sharpe, r.n_trades
        );
    }
    out
}
