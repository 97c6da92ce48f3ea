//! Pair formation: SSD ranking, the Engle-Granger test and the two
//! selection methods.

mod adf;
mod coint;
mod mackinnon;
mod ols;
mod select;
mod ssd;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::marketdata::{CsvText, NormalizedPanel};

pub use adf::{adf_test, adf_test_with, default_max_lag, AdfResult};
pub use coint::{engle_granger, CointResult, MIN_COINT_LEN};
pub use mackinnon::AdfNull;
pub use select::{pick_cointegrated, select_pairs, test_candidate, Selection, SelectionConfig};
pub use ssd::{rank_pairs, ssd_score};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectError {
    #[error("series lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("series too short ({len} < {needed})")]
    TooShort { len: usize, needed: usize },
    #[error("need at least 2 tickers, have {0}")]
    TooFewTickers(usize),
    #[error("regressor has zero variance")]
    DegenerateRegressor,
    #[error("regression design is numerically singular")]
    NumericalSingularity,
    #[error("series is constant")]
    ConstantSeries,
    #[error("series of length {len} too short for the lag order (need {needed})")]
    InsufficientLength { len: usize, needed: usize },
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("invalid selection config: {0}")]
    InvalidConfig(String),
}

/// Pair formation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Distance,
    Cointegration,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Distance => "distance",
            Method::Cointegration => "coint",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "distance" => Ok(Method::Distance),
            "coint" | "cointegration" => Ok(Method::Cointegration),
            other => Err(format!("unknown method `{other}` (expected distance or coint)")),
        }
    }
}

/// Cointegration fit attached to a candidate by the cointegration path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CointStats {
    pub hedge_ratio: f64,
    pub intercept: f64,
    pub adf_stat: f64,
    pub p_value: f64,
    pub degenerate: bool,
}

/// An unordered ticker pair with `leg_a < leg_b`.
///
/// `index_a`/`index_b` are the legs' positions in the normalized panel the
/// candidate was ranked on.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCandidate {
    pub leg_a: String,
    pub leg_b: String,
    pub index_a: usize,
    pub index_b: usize,
    pub ssd: f64,
    pub coint: Option<CointStats>,
}

impl PairCandidate {
    pub(crate) fn new(panel: &NormalizedPanel, index_a: usize, index_b: usize, ssd: f64) -> Self {
        PairCandidate {
            leg_a: panel.tickers()[index_a].clone(),
            leg_b: panel.tickers()[index_b].clone(),
            index_a,
            index_b,
            ssd,
            coint: None,
        }
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.leg_a, self.leg_b)
    }

    pub fn p_value(&self) -> Option<f64> {
        self.coint.map(|c| c.p_value)
    }
}

pub const PAIRS_HEADER: &str = "leg_a,leg_b,ssd,hedge_ratio,intercept,adf_stat,p_value";

/// Selected pairs as `leg_a,leg_b,ssd,hedge_ratio,intercept,adf_stat,p_value`.
/// Distance-method pairs leave the regression columns empty.
pub fn pairs_to_csv(pairs: &[PairCandidate]) -> String {
    let mut out = CsvText::new(&PAIRS_HEADER.split(',').collect::<Vec<_>>());
    for p in pairs {
        let mut row = vec![p.leg_a.clone(), p.leg_b.clone(), p.ssd.to_string()];
        match p.coint {
            Some(c) => row.extend([c.hedge_ratio, c.intercept, c.adf_stat, c.p_value].map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        out.row(row);
    }
    out.finish()
}
