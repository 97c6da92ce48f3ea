//! Spread construction, threshold trading and portfolio aggregation.

mod costs;
mod export;
mod portfolio;
mod sim;
mod spread;

use thiserror::Error;

pub use costs::CostModel;
pub use export::{
    ledgers_to_csv, parse_ledger_csv, parse_returns_csv, returns_to_csv, LedgerRow, LEDGER_HEADER, RETURNS_HEADER,
};
pub use portfolio::{portfolio_returns, CapitalBasis, PortfolioReturns};
pub use sim::{
    plan_trades, settle_trades, short_spread_notionals, simulate_pair, Action, LegPrices, PlannedTrade, Side,
    TradeEvent, TradeLedger, DAYS_PER_YEAR,
};
pub use spread::{build_spread, zscore, SpreadSeries};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("ticker `{0}` not in panel")]
    UnknownTicker(String),
    #[error("pair {0} has no hedge ratio")]
    MissingHedgeRatio(String),
    #[error("formation window of {0} days is too short")]
    ShortFormation(usize),
    #[error("spread of {0} has zero formation variance")]
    DegenerateSpread(String),
    #[error("trading window is empty")]
    EmptyTradingWindow,
    #[error("calendar mismatch: {0}")]
    IndexMismatch(String),
    #[error("no price for `{0}` at the start of the window")]
    MissingPrice(String),
    #[error("n_pairs must be positive")]
    NoPairs,
    #[error("malformed CSV at line {line}: {reason}")]
    Malformed { line: u64, reason: String },
}

/// Strategy parameters shared by both formation methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    pub n_pairs: usize,
    /// Entry threshold in formation standard deviations.
    pub threshold: f64,
    /// Scales the 252-day formation and 126-day trading windows.
    pub length_multiplier: f64,
    /// Cointegration p-value cutoff.
    pub confidence: f64,
    /// Days between a signal and its fill.
    pub lag: usize,
    pub allow_reentry: bool,
}

impl StrategyParams {
    pub fn baseline() -> Self {
        StrategyParams { n_pairs: 20, threshold: 2.0, length_multiplier: 1.0, confidence: 0.05, lag: 1, allow_reentry: true }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.n_pairs == 0 {
            return Err("n_pairs must be positive".into());
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(format!("threshold must be positive, got {}", self.threshold));
        }
        if !(self.length_multiplier > 0.0 && self.length_multiplier.is_finite()) {
            return Err(format!("length multiplier must be positive, got {}", self.length_multiplier));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(format!("confidence must be in (0, 1), got {}", self.confidence));
        }
        Ok(())
    }
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self::baseline()
    }
}
