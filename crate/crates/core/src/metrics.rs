//! Monthly aggregation, subperiod performance rows and benchmark comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate, Weekday};
use thiserror::Error;

use crate::marketdata::{PricePanel, SubperiodTable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("return series is empty")]
    Empty,
    #[error("dates must be strictly increasing (at {0})")]
    UnsortedDates(NaiveDate),
    #[error("return {value} on {date} is not above -1")]
    ReturnOutOfRange { date: NaiveDate, value: f64 },
    #[error("dates and returns have different lengths")]
    LengthMismatch,
    #[error("benchmark covers {bench_start}..{bench_end}, strategy needs {start}..{end}")]
    BenchmarkCoverageGap { start: NaiveDate, end: NaiveDate, bench_start: NaiveDate, bench_end: NaiveDate },
    #[error("benchmark ticker `{0}` not in panel")]
    UnknownBenchmark(String),
}

/// Dated simple returns, strictly increasing in date and above -1.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn new(dates: Vec<NaiveDate>, returns: Vec<f64>) -> Result<Self, MetricsError> {
        if dates.len() != returns.len() {
            return Err(MetricsError::LengthMismatch);
        }
        for w in dates.windows(2) {
            if w[0] >= w[1] {
                return Err(MetricsError::UnsortedDates(w[1]));
            }
        }
        if let Some((d, r)) = dates.iter().zip(&returns).find(|(_, r)| !(**r > -1.0 && r.is_finite())) {
            return Err(MetricsError::ReturnOutOfRange { date: *d, value: *r });
        }
        Ok(ReturnSeries { dates, returns })
    }

    pub fn empty() -> Self {
        ReturnSeries { dates: Vec::new(), returns: Vec::new() }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first_date(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last_date(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    /// Observations with `start <= date <= end`.
    pub fn between(&self, start: NaiveDate, end: NaiveDate) -> ReturnSeries {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end).max(lo);
        ReturnSeries { dates: self.dates[lo..hi].to_vec(), returns: self.returns[lo..hi].to_vec() }
    }

    /// Appends `other`, which must start after this series ends.
    pub fn extend(&mut self, other: &ReturnSeries) -> Result<(), MetricsError> {
        if let (Some(last), Some(first)) = (self.last_date(), other.first_date()) {
            if first <= last {
                return Err(MetricsError::UnsortedDates(first));
            }
        }
        self.dates.extend_from_slice(&other.dates);
        self.returns.extend_from_slice(&other.returns);
        Ok(())
    }
}

/// One calendar month of compounded returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonthlyReturn {
    pub year: i32,
    pub month: u32,
    /// Last observed date in the month.
    pub last_date: NaiveDate,
    pub value: f64,
    pub n_days: usize,
    /// First or last month of the series with weekdays outside the observed
    /// dates.
    pub partial: bool,
}

fn has_weekday_between(from: NaiveDate, to: NaiveDate) -> bool {
    from.iter_days().take_while(|d| *d < to).any(|d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun))
}

fn month_bounds(year: i32, month: u32) -> (NaiveDate, NaiveDate) {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month");
    let next = if month == 12 { NaiveDate::from_ymd_opt(year + 1, 1, 1) } else { NaiveDate::from_ymd_opt(year, month + 1, 1) };
    (first, next.expect("valid month"))
}

/// `r_month = Π(1 + r_day) - 1` per calendar month.
pub fn monthly_returns(daily: &ReturnSeries) -> Result<Vec<MonthlyReturn>, MetricsError> {
    if daily.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut out: Vec<MonthlyReturn> = Vec::new();
    for (i, (&date, &r)) in daily.dates.iter().zip(&daily.returns).enumerate() {
        let same = out.last().is_some_and(|m| m.year == date.year() && m.month == date.month());
        if !same {
            out.push(MonthlyReturn { year: date.year(), month: date.month(), last_date: date, value: r, n_days: 0, partial: false });
        }
        let m = out.last_mut().expect("pushed");
        if m.n_days > 0 {
            m.value = (1.0 + m.value) * (1.0 + r) - 1.0;
        }
        m.last_date = date;
        m.n_days += 1;
        if i == 0 {
            let (first, _) = month_bounds(date.year(), date.month());
            m.partial |= has_weekday_between(first, date);
        }
    }
    let last = daily.last_date().expect("non-empty");
    let (_, next) = month_bounds(last.year(), last.month());
    let tail = out.last_mut().expect("non-empty");
    tail.partial |= has_weekday_between(last.succ_opt().expect("in range"), next);
    Ok(out)
}

/// Daily simple returns of one ticker's closes, with missing days carried
/// at the last close. Starts on the panel's second date.
pub fn benchmark_returns(panel: &PricePanel, ticker: &str) -> Result<ReturnSeries, MetricsError> {
    let i = panel.ticker_index(ticker).ok_or_else(|| MetricsError::UnknownBenchmark(ticker.to_string()))?;
    closes_to_returns(panel.dates(), &panel.quotes(i).iter().map(|q| q.map(|q| q.close)).collect::<Vec<_>>())
}

pub fn closes_to_returns(dates: &[NaiveDate], closes: &[Option<f64>]) -> Result<ReturnSeries, MetricsError> {
    let mut out_dates = Vec::new();
    let mut out = Vec::new();
    let mut prev: Option<f64> = None;
    for (d, c) in dates.iter().zip(closes) {
        if let Some(p) = prev {
            let c = c.unwrap_or(p);
            out_dates.push(*d);
            out.push(c / p - 1.0);
            prev = Some(c);
        } else {
            prev = *c;
        }
    }
    ReturnSeries::new(out_dates, out)
}

/// Sample mean and (n - 1) standard deviation; std is 0 for one value.
fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// `mean / std × √12` on monthly returns with a zero risk-free rate.
///
/// Without dispersion the ratio is ±∞ by the sign of the mean (0 for a zero
/// mean) and the second value is `true`.
pub fn annualized_sharpe(monthly: &[f64]) -> (f64, bool) {
    let (mean, std) = mean_std(monthly);
    if std <= 1e-12 * mean.abs() || std == 0.0 {
        let s = if mean > 0.0 {
            f64::INFINITY
        } else if mean < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
        return (s, true);
    }
    (mean / std * 12f64.sqrt(), false)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceRow {
    pub scenario: String,
    pub subperiod: String,
    pub mean_monthly_return: f64,
    pub annualized_sharpe: f64,
    pub sharpe_degenerate: bool,
    pub excess_monthly: f64,
    pub benchmark_mean_monthly: f64,
    pub n_trades: usize,
    pub n_months: usize,
}

pub const TOTAL_LABEL: &str = "Total";

fn row_stats(
    scenario: &str,
    subperiod: &str,
    months: &[&MonthlyReturn],
    bench: &BTreeMap<(i32, u32), f64>,
    trades: &BTreeMap<(i32, u32), usize>,
) -> PerformanceRow {
    let values: Vec<f64> = months.iter().map(|m| m.value).collect();
    let (mean, _) = mean_std(&values);
    let (sharpe, degenerate) = annualized_sharpe(&values);
    let bench_values: Vec<f64> = months.iter().map(|m| bench.get(&(m.year, m.month)).copied().unwrap_or(0.0)).collect();
    let (bench_mean, _) = mean_std(&bench_values);
    PerformanceRow {
        scenario: scenario.to_string(),
        subperiod: subperiod.to_string(),
        mean_monthly_return: mean,
        annualized_sharpe: sharpe,
        sharpe_degenerate: degenerate,
        excess_monthly: mean - bench_mean,
        benchmark_mean_monthly: bench_mean,
        n_trades: months.iter().map(|m| trades.get(&(m.year, m.month)).copied().unwrap_or(0)).sum(),
        n_months: months.len(),
    }
}

/// One row per subperiod with at least one month, then a Total row.
///
/// Months belong to the subperiod holding their last observed date;
/// months outside the table only count towards Total. `trade_dates` are the
/// entry dates attributed to the month they fall in. Without a benchmark
/// the comparison is against zero.
pub fn performance_summary(
    strategy: &ReturnSeries,
    benchmark: Option<&ReturnSeries>,
    scenario: &str,
    subperiods: &SubperiodTable,
    trade_dates: &[NaiveDate],
) -> Result<Vec<PerformanceRow>, MetricsError> {
    let months = monthly_returns(strategy)?;
    let (start, end) = (strategy.first_date().expect("non-empty"), strategy.last_date().expect("non-empty"));
    let mut bench = BTreeMap::new();
    if let Some(b) = benchmark {
        let covered = b.first_date().is_some_and(|d| d <= start) && b.last_date().is_some_and(|d| d >= end);
        if !covered {
            return Err(MetricsError::BenchmarkCoverageGap {
                start,
                end,
                bench_start: b.first_date().unwrap_or(start),
                bench_end: b.last_date().unwrap_or(start),
            });
        }
        for m in monthly_returns(&b.between(start, end))? {
            bench.insert((m.year, m.month), m.value);
        }
    }
    let mut trades = BTreeMap::new();
    for d in trade_dates {
        *trades.entry((d.year(), d.month())).or_insert(0usize) += 1;
    }

    let mut rows = Vec::new();
    for (i, sub) in subperiods.rows().iter().enumerate() {
        let in_row: Vec<&MonthlyReturn> = months.iter().filter(|m| subperiods.row_index(m.last_date) == Some(i)).collect();
        if !in_row.is_empty() {
            rows.push(row_stats(scenario, &sub.label, &in_row, &bench, &trades));
        }
    }
    let all: Vec<&MonthlyReturn> = months.iter().collect();
    rows.push(row_stats(scenario, TOTAL_LABEL, &all, &bench, &trades));
    Ok(rows)
}

pub const REPORT_HEADER: &str = "scenario,subperiod,mean_monthly,annualized_sharpe,excess_monthly,n_trades,n_months";

pub fn report_to_csv(rows: &[PerformanceRow]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scenario, r.subperiod, r.mean_monthly_return, r.annualized_sharpe, r.excess_monthly, r.n_trades, r.n_months
        );
    }
    out
}

/// Console table: scenarios down, subperiods across, monthly figures in
/// percent.
pub fn render_table(rows: &[PerformanceRow], notes: &[String]) -> String {
    let mut columns: Vec<&str> = Vec::new();
    let mut scenarios: Vec<&str> = Vec::new();
    for r in rows {
        if r.subperiod != TOTAL_LABEL && !columns.contains(&r.subperiod.as_str()) {
            columns.push(&r.subperiod);
        }
        if !scenarios.contains(&r.scenario.as_str()) {
            scenarios.push(&r.scenario);
        }
    }
    columns.push(TOTAL_LABEL);
    let label_width = scenarios.iter().map(|s| s.len()).max().unwrap_or(0).max(8) + 2;
    let width = columns.iter().map(|c| c.len()).max().unwrap_or(0).max(9) + 1;

    let mut out = String::new();
    let _ = write!(out, "{:label_width$}{:8}", "", "");
    for c in &columns {
        let _ = write!(out, "{c:>width$}");
    }
    out.push('\n');
    let metrics: [(&str, fn(&PerformanceRow) -> String); 4] = [
        ("mean %", |r| format!("{:.3}", r.mean_monthly_return * 100.0)),
        ("sharpe", |r| {
            if r.annualized_sharpe.is_infinite() {
                if r.annualized_sharpe > 0.0 { "inf".into() } else { "-inf".into() }
            } else {
                format!("{:.3}", r.annualized_sharpe)
            }
        }),
        ("excess %", |r| format!("{:.3}", r.excess_monthly * 100.0)),
        ("trades", |r| r.n_trades.to_string()),
    ];
    for s in &scenarios {
        for (k, (name, cell)) in metrics.iter().enumerate() {
            let _ = write!(out, "{:label_width$}{name:8}", if k == 0 { *s } else { "" });
            for c in &columns {
                let text = rows.iter().find(|r| r.scenario == *s && r.subperiod == *c).map_or("-".to_string(), cell);
                let _ = write!(out, "{text:>width$}");
            }
            out.push('\n');
        }
    }
    for n in notes {
        let _ = writeln!(out, "note: {n}");
    }
    out
}
