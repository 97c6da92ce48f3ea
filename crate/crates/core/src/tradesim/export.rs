use std::fmt::Write as _;

use chrono::NaiveDate;

use crate::marketdata::CsvText;

use super::{SimError, TradeLedger};

pub const LEDGER_HEADER: [&str; 7] = ["pair", "date", "action", "leg_a_notional", "leg_b_notional", "cost", "cum_pnl"];
pub const RETURNS_HEADER: [&str; 2] = ["date", "return"];

/// One event row of a ledger CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerRow {
    pub pair: String,
    pub date: NaiveDate,
    pub action: String,
    pub leg_a_notional: f64,
    pub leg_b_notional: f64,
    pub cost: f64,
    /// Pair P&L accumulated through `date`, net of costs.
    pub cum_pnl: f64,
}

/// Event rows for every ledger, in ledger then event order.
pub fn ledgers_to_csv<'a>(ledgers: impl IntoIterator<Item = &'a TradeLedger>) -> String {
    let mut out = CsvText::new(&LEDGER_HEADER);
    for ledger in ledgers {
        let mut cum = 0.0;
        let mut through = 0;
        for e in &ledger.events {
            while through <= e.day {
                cum += ledger.daily_returns[through];
                through += 1;
            }
            out.row([
                ledger.pair.clone(),
                e.date.to_string(),
                e.action.as_str().to_string(),
                e.leg_a_notional.to_string(),
                e.leg_b_notional.to_string(),
                e.cost.to_string(),
                cum.to_string(),
            ]);
        }
    }
    out.finish()
}

pub fn returns_to_csv(dates: &[NaiveDate], returns: &[f64]) -> String {
    let mut out = RETURNS_HEADER.join(",");
    out.push('\n');
    for (d, r) in dates.iter().zip(returns) {
        let _ = writeln!(out, "{d},{r}");
    }
    out
}

/// Reads records after checking the exact header; calls `row` with each
/// non-empty record and its line number.
fn read_rows(
    bytes: &[u8],
    header: &[&str],
    mut row: impl FnMut(&csv::StringRecord, u64) -> Result<(), SimError>,
) -> Result<(), SimError> {
    let mut reader =
        csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(bytes);
    let mut seen_header = false;
    for (n, record) in reader.records().enumerate() {
        let record = record.map_err(|e| SimError::Malformed {
            line: e.position().map_or(n as u64 + 1, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(n as u64 + 1, |p| p.line());
        if !seen_header {
            let got: Vec<&str> = record.iter().map(|f| f.trim_start_matches('\u{feff}')).collect();
            if got != header {
                return Err(SimError::Malformed { line, reason: format!("expected header `{}`", header.join(",")) });
            }
            seen_header = true;
            continue;
        }
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(SimError::Malformed {
                line,
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        row(&record, line)?;
    }
    if !seen_header {
        return Err(SimError::Malformed { line: 1, reason: "missing header".into() });
    }
    Ok(())
}

fn date_field(s: &str, line: u64) -> Result<NaiveDate, SimError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| SimError::Malformed { line, reason: format!("bad date `{s}`: {e}") })
}

fn number_field(s: &str, line: u64) -> Result<f64, SimError> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(SimError::Malformed { line, reason: format!("bad number `{s}`") }),
    }
}

/// Parses a `date,return` file. Dates must be strictly increasing.
pub fn parse_returns_csv(bytes: &[u8]) -> Result<(Vec<NaiveDate>, Vec<f64>), SimError> {
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut returns = Vec::new();
    read_rows(bytes, &RETURNS_HEADER, |record, line| {
        let date = date_field(&record[0], line)?;
        if dates.last().is_some_and(|last| *last >= date) {
            return Err(SimError::Malformed { line, reason: format!("date {date} is not increasing") });
        }
        dates.push(date);
        returns.push(number_field(&record[1], line)?);
        Ok(())
    })?;
    Ok((dates, returns))
}

pub fn parse_ledger_csv(bytes: &[u8]) -> Result<Vec<LedgerRow>, SimError> {
    const ACTIONS: [&str; 4] = ["open_short_spread", "open_long_spread", "close", "force_close"];
    let mut rows = Vec::new();
    read_rows(bytes, &LEDGER_HEADER, |record, line| {
        if record[0].is_empty() {
            return Err(SimError::Malformed { line, reason: "empty pair".into() });
        }
        if !ACTIONS.contains(&&record[2]) {
            return Err(SimError::Malformed { line, reason: format!("unknown action `{}`", &record[2]) });
        }
        rows.push(LedgerRow {
            pair: record[0].to_string(),
            date: date_field(&record[1], line)?,
            action: record[2].to_string(),
            leg_a_notional: number_field(&record[3], line)?,
            leg_b_notional: number_field(&record[4], line)?,
            cost: number_field(&record[5], line)?,
            cum_pnl: number_field(&record[6], line)?,
        });
        Ok(())
    })?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tradesim::{settle_trades, CostModel, LegPrices, PlannedTrade, Side};

    #[test]
    fn returns_round_trip() {
        let d0 = NaiveDate::from_ymd_opt(2020, 1, 2).unwrap();
        let dates = [d0, d0.succ_opt().unwrap()];
        let text = returns_to_csv(&dates, &[0.001, -0.25]);
        let (d, r) = parse_returns_csv(text.as_bytes()).unwrap();
        assert_eq!(d, dates);
        assert_eq!(r, [0.001, -0.25]);
    }

    #[test]
    fn returns_reject_unsorted_and_bad_header() {
        assert!(parse_returns_csv(b"date,return\n2020-01-02,0\n2020-01-01,0\n").is_err());
        assert!(parse_returns_csv(b"day,return\n").is_err());
        assert!(parse_returns_csv(b"").is_err());
        assert!(parse_returns_csv(b"date,return\n2020-01-02,NaN\n").is_err());
    }

    #[test]
    fn ledger_round_trip() {
        let dates: Vec<NaiveDate> =
            (0..3).map(|i| NaiveDate::from_ymd_opt(2020, 1, 6).unwrap() + chrono::Duration::days(i)).collect();
        let a = [10.0, 10.0, 9.0, 9.0];
        let b = [10.0, 10.0, 10.0, 10.0];
        let plan = [PlannedTrade { side: Side::ShortSpread, open_signal: 0, open: 0, close_signal: Some(1), close: 2, forced: false }];
        let ledger = settle_trades("A/B".into(), &plan, &LegPrices { dates: &dates, a: &a, b: &b }, 1.0, &CostModel::zero());
        let rows = parse_ledger_csv(ledgers_to_csv([&ledger]).as_bytes()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].action, "open_short_spread");
        assert_eq!(rows[1].action, "close");
        assert!((rows[1].cum_pnl - 0.1).abs() < 1e-12);
    }
}
