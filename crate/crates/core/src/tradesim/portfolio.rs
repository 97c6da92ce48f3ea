use chrono::NaiveDate;

use super::{SimError, TradeLedger};

/// Denominator for daily portfolio returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapitalBasis {
    /// Every selected pair's capital, traded or not.
    #[default]
    Committed,
    /// Only pairs holding a position that day.
    Employed,
}

impl std::str::FromStr for CapitalBasis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "committed" => Ok(CapitalBasis::Committed),
            "employed" => Ok(CapitalBasis::Employed),
            other => Err(format!("unknown capital basis `{other}` (expected committed or employed)")),
        }
    }
}

impl std::fmt::Display for CapitalBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CapitalBasis::Committed => "committed",
            CapitalBasis::Employed => "employed",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioReturns {
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
    pub n_trades: usize,
}

/// Equal-weight daily returns over `n_pairs` slots. Slots without a selected
/// pair earn zero, so fewer ledgers than `n_pairs` dilute the return.
pub fn portfolio_returns(ledgers: &[TradeLedger], n_pairs: usize, basis: CapitalBasis) -> Result<PortfolioReturns, SimError> {
    if n_pairs == 0 {
        return Err(SimError::NoPairs);
    }
    let Some(first) = ledgers.first() else {
        return Err(SimError::EmptyTradingWindow);
    };
    let dates = first.dates.clone();
    if let Some(bad) = ledgers.iter().find(|l| l.dates != dates) {
        return Err(SimError::IndexMismatch(format!("ledger {} has a different calendar", bad.pair)));
    }
    let returns = (0..dates.len())
        .map(|t| {
            let pnl: f64 = ledgers.iter().map(|l| l.daily_returns[t]).sum();
            let denom = match basis {
                CapitalBasis::Committed => n_pairs,
                CapitalBasis::Employed => ledgers.iter().filter(|l| l.exposed[t]).count(),
            };
            if denom == 0 {
                0.0
            } else {
                pnl / denom as f64
            }
        })
        .collect();
    Ok(PortfolioReturns { dates, returns, n_trades: ledgers.iter().map(TradeLedger::n_trades).sum() })
}
