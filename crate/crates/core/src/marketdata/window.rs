use chrono::NaiveDate;

use super::{CsvText, MarketDataError};

/// Trading days standing in for twelve calendar months.
pub const FORMATION_BASE_DAYS: usize = 252;
/// Trading days standing in for six calendar months.
pub const TRADING_BASE_DAYS: usize = 126;

/// A formation period followed by a trading period, in panel trading days.
///
/// Formation covers `formation_days` dates from `formation_start` through
/// `formation_end` inclusive; trading covers the next `trading_days` dates,
/// ending at `trading_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PeriodWindow {
    pub formation_start: NaiveDate,
    pub formation_end: NaiveDate,
    pub trading_end: NaiveDate,
    pub formation_days: usize,
    pub trading_days: usize,
}

impl PeriodWindow {
    /// Window over `dates[start..start + formation_days + trading_days]`.
    pub fn from_index(
        dates: &[NaiveDate],
        start: usize,
        formation_days: usize,
        trading_days: usize,
    ) -> Result<Self, MarketDataError> {
        if formation_days == 0 {
            return Err(MarketDataError::InvalidWindow("formation period is empty".into()));
        }
        let end = start + formation_days + trading_days;
        if end > dates.len() {
            return Err(MarketDataError::InvalidWindow(format!(
                "window needs {} days from index {start}, panel has {}",
                formation_days + trading_days,
                dates.len()
            )));
        }
        Ok(PeriodWindow {
            formation_start: dates[start],
            formation_end: dates[start + formation_days - 1],
            trading_end: dates[end - 1],
            formation_days,
            trading_days,
        })
    }

    pub fn total_days(&self) -> usize {
        self.formation_days + self.trading_days
    }

    /// Resolves the window against a calendar, returning the index of
    /// `formation_start`. Fails unless the day counts agree with `dates`.
    pub fn locate(&self, dates: &[NaiveDate]) -> Result<usize, MarketDataError> {
        let start = dates.binary_search(&self.formation_start).map_err(|_| {
            MarketDataError::InvalidWindow(format!("{} is not a panel date", self.formation_start))
        })?;
        let end = start + self.total_days();
        if end > dates.len()
            || dates[start + self.formation_days - 1] != self.formation_end
            || dates[end - 1] != self.trading_end
        {
            return Err(MarketDataError::InvalidWindow(
                "window day counts do not match the panel calendar".into(),
            ));
        }
        Ok(start)
    }
}

/// Formation/trading lengths for a period-length multiplier.
pub fn scaled_lengths(multiplier: f64) -> (usize, usize) {
    let formation = (FORMATION_BASE_DAYS as f64 * multiplier).round() as usize;
    let trading = (TRADING_BASE_DAYS as f64 * multiplier).round() as usize;
    (formation, trading)
}

/// Inclusive calendar range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        DateRange { start, end }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    /// Index range `[lo, hi)` of `dates` falling inside the range.
    pub fn index_span(&self, dates: &[NaiveDate]) -> (usize, usize) {
        let lo = dates.partition_point(|d| *d < self.start);
        let hi = dates.partition_point(|d| *d <= self.end);
        (lo, hi.max(lo))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubperiodRow {
    pub label: String,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub oneway_cost_bps: f64,
    pub short_fee_annual: f64,
}

/// Contiguous calendar subperiods with their cost assumptions.
///
/// Rows cover `[start, end)`; the last row also includes its end date.
#[derive(Debug, Clone, PartialEq)]
pub struct SubperiodTable {
    rows: Vec<SubperiodRow>,
}

pub const SUBPERIOD_HEADER: [&str; 5] = ["label", "start_date", "end_date", "oneway_cost_bps", "short_fee_annual"];

impl SubperiodTable {
    pub fn new(rows: Vec<SubperiodRow>) -> Result<Self, MarketDataError> {
        if rows.is_empty() {
            return Err(MarketDataError::InvalidSubperiods("table has no rows".into()));
        }
        for row in &rows {
            if row.start >= row.end {
                return Err(MarketDataError::InvalidSubperiods(format!(
                    "{}: start must precede end",
                    row.label
                )));
            }
            if !(row.oneway_cost_bps >= 0.0 && row.oneway_cost_bps.is_finite())
                || !(row.short_fee_annual >= 0.0 && row.short_fee_annual.is_finite())
            {
                return Err(MarketDataError::InvalidSubperiods(format!("{}: costs must be >= 0", row.label)));
            }
        }
        for pair in rows.windows(2) {
            if pair[0].end != pair[1].start {
                return Err(MarketDataError::InvalidSubperiods(format!(
                    "{} ends {} but {} starts {}",
                    pair[0].label, pair[0].end, pair[1].label, pair[1].start
                )));
            }
        }
        Ok(SubperiodTable { rows })
    }

    /// Six bull/bear subperiods from 1990 to mid-2020 with their one-way
    /// transaction costs and a 0.6% annual short-borrow fee.
    pub fn default_table() -> Self {
        let row = |label: &str, start: (i32, u32, u32), end: (i32, u32, u32), bps: f64| SubperiodRow {
            label: label.to_string(),
            start: NaiveDate::from_ymd_opt(start.0, start.1, start.2).expect("valid date"),
            end: NaiveDate::from_ymd_opt(end.0, end.1, end.2).expect("valid date"),
            oneway_cost_bps: bps,
            short_fee_annual: 0.006,
        };
        SubperiodTable {
            rows: vec![
                row("1990-00", (1990, 1, 1), (2000, 3, 1), 35.0),
                row("2000-02", (2000, 3, 1), (2002, 10, 1), 30.0),
                row("2002-07", (2002, 10, 1), (2007, 8, 1), 30.0),
                row("2007-09", (2007, 8, 1), (2009, 6, 1), 30.0),
                row("2009-20", (2009, 6, 1), (2020, 2, 20), 26.0),
                row("Covid", (2020, 2, 20), (2020, 6, 1), 26.0),
            ],
        }
    }

    pub fn rows(&self) -> &[SubperiodRow] {
        &self.rows
    }

    /// Index of the row containing `date`.
    pub fn row_index(&self, date: NaiveDate) -> Option<usize> {
        let last = self.rows.len() - 1;
        self.rows.iter().enumerate().position(|(i, r)| {
            r.start <= date && (date < r.end || (i == last && date == r.end))
        })
    }

    /// Row containing `date`, falling back to the first or last row for
    /// dates before or after the table.
    pub fn nearest_row(&self, date: NaiveDate) -> &SubperiodRow {
        match self.row_index(date) {
            Some(i) => &self.rows[i],
            None if date < self.rows[0].start => &self.rows[0],
            None => self.rows.last().expect("non-empty"),
        }
    }

    /// Inclusive date range of each row, with interior ends pulled back a day.
    pub fn ranges(&self) -> Vec<DateRange> {
        let last = self.rows.len() - 1;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let end = if i == last { r.end } else { r.end.pred_opt().unwrap_or(r.end) };
                DateRange::new(r.start, end)
            })
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = CsvText::new(&SUBPERIOD_HEADER);
        for r in &self.rows {
            out.row([
                r.label.clone(),
                r.start.format("%Y-%m-%d").to_string(),
                r.end.format("%Y-%m-%d").to_string(),
                r.oneway_cost_bps.to_string(),
                r.short_fee_annual.to_string(),
            ]);
        }
        out.finish()
    }
}

/// Parses a subperiod table CSV (`label,start_date,end_date,oneway_cost_bps,short_fee_annual`).
pub fn parse_subperiod_table(bytes: &[u8]) -> Result<SubperiodTable, MarketDataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| MarketDataError::MalformedRow {
            line: e.position().map_or(n as u64 + 1, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(n as u64 + 1, |p| p.line());
        if !seen_header {
            let header: Vec<&str> = record.iter().map(|f| f.trim_start_matches('\u{feff}')).collect();
            if header != SUBPERIOD_HEADER {
                return Err(MarketDataError::MalformedRow {
                    line,
                    reason: format!("expected header `{}`", SUBPERIOD_HEADER.join(",")),
                });
            }
            seen_header = true;
            continue;
        }
        if record.len() != 5 {
            return Err(MarketDataError::MalformedRow {
                line,
                reason: format!("expected 5 fields, found {}", record.len()),
            });
        }
        let date = |s: &str| {
            NaiveDate::parse_from_str(s, "%Y-%m-%d")
                .map_err(|e| MarketDataError::MalformedRow { line, reason: format!("bad date `{s}`: {e}") })
        };
        let number = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| MarketDataError::MalformedRow { line, reason: format!("bad number `{s}`") })
        };
        rows.push(SubperiodRow {
            label: record[0].to_string(),
            start: date(&record[1])?,
            end: date(&record[2])?,
            oneway_cost_bps: number(&record[3])?,
            short_fee_annual: number(&record[4])?,
        });
    }
    if !seen_header {
        return Err(MarketDataError::MalformedRow { line: 1, reason: "missing header".into() });
    }
    SubperiodTable::new(rows)
}
