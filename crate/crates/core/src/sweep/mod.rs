//! Backtest tiling, grid search, walk-forward retuning and the lag × cost
//! sensitivity table.

mod adaptive;
mod backtest;
mod grid;
mod sensitivity;

use std::str::FromStr;

use thiserror::Error;

use crate::marketdata::MarketDataError;
use crate::metrics::MetricsError;
use crate::pairselect::{Method, SelectError};
use crate::tradesim::{CapitalBasis, CostModel, SimError};

pub use adaptive::{adaptive_backtest, retune_blocks, AdaptiveBlock, AdaptiveResult, BlockChoice};
pub use backtest::{run_backtest, run_backtest_lookback, tile_cycles, Backtest, CycleSpec, CycleSummary, GridEvaluator};
pub use grid::{
    best_and_averaged, grid_to_csv, rank_results, run_grid, snap_to_grid, AveragedParams, GridFailure, GridOutcome,
    GridResult, ParamGrid, GRID_HEADER,
};
pub use sensitivity::{sensitivity_table, sensitivity_to_csv, SensitivityCell, SensitivityTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("range has {available} trading days, need {needed}")]
    RangeTooShort { needed: usize, available: usize },
    #[error("need {needed} grid results, have {got}")]
    TooFewResults { needed: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Market(#[from] MarketDataError),
    #[error(transparent)]
    Select(#[from] SelectError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Ranking key for "best" parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RankBy {
    /// Mean monthly return, Sharpe as tiebreaker.
    #[default]
    Return,
    /// Sharpe, mean monthly return as tiebreaker.
    Sharpe,
}

impl FromStr for RankBy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "return" => Ok(RankBy::Return),
            "sharpe" => Ok(RankBy::Sharpe),
            other => Err(format!("unknown ranking `{other}` (expected return or sharpe)")),
        }
    }
}

impl std::fmt::Display for RankBy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            RankBy::Return => "return",
            RankBy::Sharpe => "sharpe",
        })
    }
}

/// Settings that stay fixed across a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Engine {
    pub method: Method,
    pub costs: CostModel,
    pub basis: CapitalBasis,
    pub rank_by: RankBy,
    /// Cointegration: rank all passing pairs by p-value instead of scanning
    /// the SSD order.
    pub exhaustive: bool,
    /// ADF lag cap; `None` applies the default rule to each formation length.
    pub max_lag: Option<usize>,
}

impl Engine {
    pub fn new(method: Method, costs: CostModel) -> Self {
        Engine { method, costs, basis: CapitalBasis::Committed, rank_by: RankBy::Return, exhaustive: false, max_lag: None }
    }
}
