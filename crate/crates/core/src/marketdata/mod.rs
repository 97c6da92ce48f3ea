//! Daily price panel ingestion, universe filtering and log-price normalization.
//!
//! The panel is read from a long-format CSV (`date,ticker,close,volume`) and
//! held as a dense dates × tickers matrix with missing cells. Each formation
//! window filters its own universe and rebases log prices at its first day.

mod panel;
mod universe;
mod window;

use chrono::NaiveDate;
use thiserror::Error;

pub use panel::{
    load_price_panel, parse_price_panel, write_price_panel, PriceBar, PricePanel, Quote, PANEL_HEADER,
};
pub use universe::{filter_universe, formation_liquidity, normalize_log_prices, Liquidity, NormalizedPanel};
pub use window::{
    parse_subperiod_table, scaled_lengths, DateRange, PeriodWindow, SubperiodRow, SubperiodTable,
    FORMATION_BASE_DAYS, SUBPERIOD_HEADER, TRADING_BASE_DAYS,
};

/// CSV text builder that quotes fields only where needed.
pub(crate) struct CsvText(csv::Writer<Vec<u8>>);

impl CsvText {
    pub(crate) fn new(header: &[&str]) -> Self {
        let mut text = CsvText(csv::WriterBuilder::new().flexible(true).from_writer(Vec::new()));
        text.row(header);
        text
    }

    pub(crate) fn row<I, T>(&mut self, fields: I)
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.0.write_record(fields).expect("writing to memory");
    }

    pub(crate) fn finish(self) -> String {
        let bytes = self.0.into_inner().expect("writing to memory");
        String::from_utf8(bytes).expect("fields are UTF-8")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketDataError {
    #[error("file not found: {0}")]
    MissingFile(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate observation for {ticker} on {date} (line {line})")]
    DuplicateObservation { line: u64, date: NaiveDate, ticker: String },
    #[error("non-positive close at line {line}")]
    NonPositivePrice { line: u64 },
    #[error("invalid panel: {0}")]
    InvalidPanel(String),
    #[error("invalid window: {0}")]
    InvalidWindow(String),
    #[error("invalid subperiod table: {0}")]
    InvalidSubperiods(String),
    #[error("no tickers survive the universe filter")]
    EmptyUniverse,
    #[error("missing formation-start price for {0}")]
    MissingBasePrice(String),
    #[error("missing formation price for {ticker} on {date}")]
    MissingFormationPrice { ticker: String, date: NaiveDate },
}
