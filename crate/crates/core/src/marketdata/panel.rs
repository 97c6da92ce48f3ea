use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::NaiveDate;

use super::{CsvText, MarketDataError, PeriodWindow};

pub const PANEL_HEADER: [&str; 4] = ["date", "ticker", "close", "volume"];

/// One daily observation of a single stock.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceBar {
    pub date: NaiveDate,
    pub ticker: String,
    pub close: f64,
    pub volume: u64,
}

/// Close and volume for one (date, ticker) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote {
    pub close: f64,
    pub volume: u64,
}

/// Date-aligned close/volume matrix over a stock universe.
///
/// Tickers are kept in lexicographic order and dates strictly increasing,
/// so a ticker's column index doubles as its rank in pair orderings.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<NaiveDate>,
    tickers: Vec<String>,
    // [ticker][date]
    quotes: Vec<Vec<Option<Quote>>>,
    pub(crate) filtered_for: Option<PeriodWindow>,
}

impl PricePanel {
    pub fn empty() -> Self {
        PricePanel {
            dates: Vec::new(),
            tickers: Vec::new(),
            quotes: Vec::new(),
            filtered_for: None,
        }
    }

    /// Builds a panel from a dense matrix, validating shape and ordering.
    pub fn new(
        dates: Vec<NaiveDate>,
        tickers: Vec<String>,
        quotes: Vec<Vec<Option<Quote>>>,
    ) -> Result<Self, MarketDataError> {
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MarketDataError::InvalidPanel("dates must be strictly increasing".into()));
        }
        if tickers.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MarketDataError::InvalidPanel(
                "tickers must be distinct and sorted".into(),
            ));
        }
        if quotes.len() != tickers.len() || quotes.iter().any(|col| col.len() != dates.len()) {
            return Err(MarketDataError::InvalidPanel("matrix dimensions do not match".into()));
        }
        for (ticker, col) in tickers.iter().zip(&quotes) {
            if col.iter().all(Option::is_none) {
                return Err(MarketDataError::InvalidPanel(format!(
                    "ticker {ticker} has no observations"
                )));
            }
            if col.iter().flatten().any(|q| !(q.close > 0.0) || !q.close.is_finite()) {
                return Err(MarketDataError::InvalidPanel(format!(
                    "ticker {ticker} has a non-positive close"
                )));
            }
        }
        Ok(PricePanel { dates, tickers, quotes, filtered_for: None })
    }

    /// Builds a panel from loose bars. Each (date, ticker) may appear once.
    pub fn from_bars(bars: impl IntoIterator<Item = PriceBar>) -> Result<Self, MarketDataError> {
        let mut cells: BTreeMap<(String, NaiveDate), Quote> = BTreeMap::new();
        let mut dates = BTreeSet::new();
        for bar in bars {
            if !(bar.close > 0.0) || !bar.close.is_finite() {
                return Err(MarketDataError::NonPositivePrice { line: 0 });
            }
            dates.insert(bar.date);
            let key = (bar.ticker.clone(), bar.date);
            if cells.insert(key, Quote { close: bar.close, volume: bar.volume }).is_some() {
                return Err(MarketDataError::DuplicateObservation {
                    line: 0,
                    date: bar.date,
                    ticker: bar.ticker,
                });
            }
        }
        Ok(Self::assemble(dates, cells))
    }

    fn assemble(dates: BTreeSet<NaiveDate>, cells: BTreeMap<(String, NaiveDate), Quote>) -> Self {
        let dates: Vec<NaiveDate> = dates.into_iter().collect();
        let mut tickers: Vec<String> = Vec::new();
        let mut quotes: Vec<Vec<Option<Quote>>> = Vec::new();
        for ((ticker, date), quote) in cells {
            if tickers.last() != Some(&ticker) {
                tickers.push(ticker);
                quotes.push(vec![None; dates.len()]);
            }
            let t = dates.binary_search(&date).expect("date collected above");
            quotes.last_mut().expect("pushed above")[t] = Some(quote);
        }
        PricePanel { dates, tickers, quotes, filtered_for: None }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.binary_search_by(|t| t.as_str().cmp(ticker)).ok()
    }

    pub fn date_index(&self, date: NaiveDate) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    pub fn quotes(&self, ticker: usize) -> &[Option<Quote>] {
        &self.quotes[ticker]
    }

    pub fn quote(&self, ticker: usize, date: usize) -> Option<Quote> {
        self.quotes[ticker][date]
    }

    pub fn close(&self, ticker: usize, date: usize) -> Option<f64> {
        self.quotes[ticker][date].map(|q| q.close)
    }

    /// The window this panel was produced for by `filter_universe`, if any.
    pub fn filtered_for(&self) -> Option<&PeriodWindow> {
        self.filtered_for.as_ref()
    }

    /// Restricts the panel to `dates[start..end]` and the given ticker
    /// indices (ascending). Tickers left without any observation are dropped.
    pub(crate) fn slice(&self, start: usize, end: usize, tickers: &[usize]) -> PricePanel {
        let mut out_tickers = Vec::with_capacity(tickers.len());
        let mut out_quotes = Vec::with_capacity(tickers.len());
        for &i in tickers {
            let col = self.quotes[i][start..end].to_vec();
            if col.iter().any(Option::is_some) {
                out_tickers.push(self.tickers[i].clone());
                out_quotes.push(col);
            }
        }
        PricePanel {
            dates: self.dates[start..end].to_vec(),
            tickers: out_tickers,
            quotes: out_quotes,
            filtered_for: None,
        }
    }

    /// Removes `ticker` from the panel and returns its close series aligned
    /// to the panel dates (`None` where missing).
    pub fn split_off(&self, ticker: &str) -> (PricePanel, Option<Vec<Option<f64>>>) {
        match self.ticker_index(ticker) {
            None => (self.clone(), None),
            Some(idx) => {
                let keep: Vec<usize> = (0..self.n_tickers()).filter(|&i| i != idx).collect();
                let series = self.quotes[idx].iter().map(|q| q.map(|q| q.close)).collect();
                let mut rest = self.slice(0, self.n_dates(), &keep);
                // dates only present for the removed ticker stay in the calendar
                rest.filtered_for = None;
                (rest, Some(series))
            }
        }
    }

    /// Iterates bars in (date, ticker) order.
    pub fn bars(&self) -> impl Iterator<Item = PriceBar> + '_ {
        (0..self.n_dates()).flat_map(move |t| {
            (0..self.n_tickers()).filter_map(move |i| {
                self.quotes[i][t].map(|q| PriceBar {
                    date: self.dates[t],
                    ticker: self.tickers[i].clone(),
                    close: q.close,
                    volume: q.volume,
                })
            })
        })
    }

    /// Renders the panel in the input CSV layout. Closes use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_csv_string(&self) -> String {
        let mut out = CsvText::new(&PANEL_HEADER);
        for bar in self.bars() {
            out.row([bar.date.format("%Y-%m-%d").to_string(), bar.ticker, bar.close.to_string(), bar.volume.to_string()]);
        }
        out.finish()
    }
}

/// Reads a price panel CSV from disk.
pub fn load_price_panel(path: impl AsRef<Path>) -> Result<PricePanel, MarketDataError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => MarketDataError::MissingFile(path.display().to_string()),
        _ => MarketDataError::Io(format!("{}: {e}", path.display())),
    })?;
    parse_price_panel(&bytes)
}

pub fn write_price_panel(panel: &PricePanel, path: impl AsRef<Path>) -> Result<(), MarketDataError> {
    let path = path.as_ref();
    fs::write(path, panel.to_csv_string()).map_err(|e| MarketDataError::Io(format!("{}: {e}", path.display())))
}

/// Parses the `date,ticker,close,volume` layout from raw bytes.
pub fn parse_price_panel(bytes: &[u8]) -> Result<PricePanel, MarketDataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let mut cells: BTreeMap<(String, NaiveDate), Quote> = BTreeMap::new();
    let mut dates = BTreeSet::new();
    let mut record = csv::StringRecord::new();
    let mut seen_header = false;

    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map_or(line, |p| p.line());
                return Err(MarketDataError::MalformedRow { line, reason: e.to_string() });
            }
        }
        let line = record.position().map_or(line, |p| p.line());
        if !seen_header {
            let header: Vec<&str> = record.iter().map(|f| f.trim_start_matches('\u{feff}')).collect();
            if header != PANEL_HEADER {
                return Err(MarketDataError::MalformedRow {
                    line,
                    reason: format!("expected header `{}`", PANEL_HEADER.join(",")),
                });
            }
            seen_header = true;
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 4 {
            return Err(MarketDataError::MalformedRow {
                line,
                reason: format!("expected 4 fields, found {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| {
            MarketDataError::MalformedRow { line, reason: format!("bad date `{}`: {e}", &record[0]) }
        })?;
        let ticker = record[1].to_string();
        if ticker.is_empty() {
            return Err(MarketDataError::MalformedRow { line, reason: "empty ticker".into() });
        }
        let close: f64 = record[2].parse().map_err(|_| MarketDataError::MalformedRow {
            line,
            reason: format!("bad close `{}`", &record[2]),
        })?;
        if close.is_nan() || close.is_infinite() {
            return Err(MarketDataError::MalformedRow { line, reason: "close is not finite".into() });
        }
        if close <= 0.0 {
            return Err(MarketDataError::NonPositivePrice { line });
        }
        let volume: u64 = record[3].parse().map_err(|_| MarketDataError::MalformedRow {
            line,
            reason: format!("bad volume `{}`", &record[3]),
        })?;
        dates.insert(date);
        if cells.insert((ticker.clone(), date), Quote { close, volume }).is_some() {
            return Err(MarketDataError::DuplicateObservation { line, date, ticker });
        }
    }
    if !seen_header {
        return Err(MarketDataError::MalformedRow { line: 1, reason: "missing header".into() });
    }
    Ok(PricePanel::assemble(dates, cells))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    #[test]
    fn header_only_is_empty_panel() {
        let panel = parse_price_panel(b"date,ticker,close,volume\n").unwrap();
        assert_eq!(panel.n_dates(), 0);
        assert_eq!(panel.n_tickers(), 0);
    }

    #[test]
    fn duplicate_observation_is_rejected() {
        let csv = "date,ticker,close,volume\n2020-01-02,AAA,10,5\n2020-01-02,AAA,11,6\n";
        match parse_price_panel(csv.as_bytes()) {
            Err(MarketDataError::DuplicateObservation { line, ticker, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(ticker, "AAA");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_positive_close_is_rejected() {
        let csv = "date,ticker,close,volume\n2020-01-02,AAA,0,5\n";
        assert!(matches!(
            parse_price_panel(csv.as_bytes()),
            Err(MarketDataError::NonPositivePrice { line: 2 })
        ));
        let csv = "date,ticker,close,volume\n2020-01-02,AAA,-1.5,5\n";
        assert!(matches!(
            parse_price_panel(csv.as_bytes()),
            Err(MarketDataError::NonPositivePrice { line: 2 })
        ));
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let cases: [(&str, u64); 4] = [
            ("date,ticker,close,volume\n2020-01-02,AAA,1\n", 2),
            ("date,ticker,close,volume\n2020-01-02,AAA,1,1\n2020-13-02,AAA,1,1\n", 3),
            ("date,ticker,close,volume\n2020-01-02,AAA,x,1\n", 2),
            ("date,ticker,close,volume\n2020-01-02,AAA,1,-3\n", 2),
        ];
        for (csv, expected) in cases {
            match parse_price_panel(csv.as_bytes()) {
                Err(MarketDataError::MalformedRow { line, .. }) => assert_eq!(line, expected, "{csv}"),
                other => panic!("unexpected {other:?} for {csv}"),
            }
        }
        assert!(matches!(parse_price_panel(b""), Err(MarketDataError::MalformedRow { line: 1, .. })));
        assert!(matches!(
            parse_price_panel(b"ticker,date,close,volume\n"),
            Err(MarketDataError::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn crlf_input_is_accepted() {
        let csv = "date,ticker,close,volume\r\n2020-01-02,AAA,10.5,100\r\n2020-01-03,AAA,10.25,90\r\n";
        let panel = parse_price_panel(csv.as_bytes()).unwrap();
        assert_eq!(panel.n_dates(), 2);
        assert_eq!(panel.close(0, 1), Some(10.25));
    }

    #[test]
    fn missing_file_error() {
        assert!(matches!(
            load_price_panel("/definitely/not/here.csv"),
            Err(MarketDataError::MissingFile(_))
        ));
    }

    #[test]
    fn union_of_dates_leaves_gaps_missing() {
        let csv = "date,ticker,close,volume\n2020-01-02,BBB,2,1\n2020-01-03,AAA,1,1\n";
        let panel = parse_price_panel(csv.as_bytes()).unwrap();
        assert_eq!(panel.tickers(), ["AAA", "BBB"]);
        assert_eq!(panel.dates(), [d("2020-01-02"), d("2020-01-03")]);
        assert_eq!(panel.close(0, 0), None);
        assert_eq!(panel.close(1, 0), Some(2.0));
    }

    #[test]
    fn split_off_removes_benchmark() {
        let csv = "date,ticker,close,volume\n2020-01-02,AAA,1,1\n2020-01-02,MKT,100,0\n2020-01-03,AAA,2,1\n2020-01-03,MKT,101,0\n";
        let panel = parse_price_panel(csv.as_bytes()).unwrap();
        let (rest, bench) = panel.split_off("MKT");
        assert_eq!(rest.tickers(), ["AAA"]);
        assert_eq!(bench.unwrap(), vec![Some(100.0), Some(101.0)]);
        assert!(panel.split_off("ZZZ").1.is_none());
    }
}
