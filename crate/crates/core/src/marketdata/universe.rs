use chrono::NaiveDate;

use super::{MarketDataError, PeriodWindow, PricePanel};

/// Per-ticker formation-window liquidity used for the decile cut.
#[derive(Debug, Clone, PartialEq)]
pub struct Liquidity {
    pub ticker: String,
    pub dollar_volume: f64,
    pub continuous: bool,
}

/// Formation-window liquidity for every ticker observed at least once in
/// the formation period, in ticker order.
pub fn formation_liquidity(panel: &PricePanel, window: &PeriodWindow) -> Result<Vec<Liquidity>, MarketDataError> {
    let start = window.locate(panel.dates())?;
    let end = start + window.formation_days;
    let mut out = Vec::new();
    for (i, ticker) in panel.tickers().iter().enumerate() {
        let quotes = &panel.quotes(i)[start..end];
        if quotes.iter().all(Option::is_none) {
            continue;
        }
        let dollar_volume = quotes.iter().flatten().map(|q| q.close * q.volume as f64).sum();
        let continuous = quotes.iter().all(|q| matches!(q, Some(q) if q.volume > 0));
        out.push(Liquidity { ticker: ticker.clone(), dollar_volume, continuous });
    }
    Ok(out)
}

/// Drops the least liquid decile and every ticker that was not traded on
/// each formation day, and restricts the panel to the window's dates.
///
/// The decile is `floor(N / 10)` tickers by formation dollar volume, with
/// ties broken by ticker. A panel already filtered for `window` is returned
/// unchanged.
pub fn filter_universe(panel: &PricePanel, window: &PeriodWindow) -> Result<PricePanel, MarketDataError> {
    if panel.filtered_for() == Some(window) {
        return Ok(panel.clone());
    }
    let start = window.locate(panel.dates())?;
    let liquidity = formation_liquidity(panel, window)?;

    let mut by_liquidity: Vec<&Liquidity> = liquidity.iter().collect();
    by_liquidity.sort_by(|a, b| a.dollar_volume.total_cmp(&b.dollar_volume).then_with(|| a.ticker.cmp(&b.ticker)));
    let cut = liquidity.len() / 10;
    let illiquid: Vec<&str> = by_liquidity[..cut].iter().map(|l| l.ticker.as_str()).collect();

    let survivors: Vec<usize> = liquidity
        .iter()
        .filter(|l| l.continuous && !illiquid.contains(&l.ticker.as_str()))
        .map(|l| panel.ticker_index(&l.ticker).expect("ticker from panel"))
        .collect();
    if survivors.is_empty() {
        return Err(MarketDataError::EmptyUniverse);
    }
    let mut out = panel.slice(start, start + window.total_days(), &survivors);
    out.filtered_for = Some(*window);
    Ok(out)
}

/// Log prices rebased to zero at the formation start, over formation and
/// trading dates of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedPanel {
    tickers: Vec<String>,
    dates: Vec<NaiveDate>,
    formation_days: usize,
    // [ticker][date]
    values: Vec<Vec<f64>>,
    // true where the close was missing and the previous value was carried
    stale: Vec<Vec<bool>>,
}

impl NormalizedPanel {
    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn formation_days(&self) -> usize {
        self.formation_days
    }

    pub fn trading_days(&self) -> usize {
        self.dates.len() - self.formation_days
    }

    pub fn n_tickers(&self) -> usize {
        self.tickers.len()
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.binary_search_by(|t| t.as_str().cmp(ticker)).ok()
    }

    /// Full series (formation then trading) for ticker `i`.
    pub fn series(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn formation(&self, i: usize) -> &[f64] {
        &self.values[i][..self.formation_days]
    }

    pub fn trading(&self, i: usize) -> &[f64] {
        &self.values[i][self.formation_days..]
    }

    /// Days whose value was carried forward over a missing close.
    pub fn stale(&self, i: usize) -> &[bool] {
        &self.stale[i]
    }
}

/// `P_it = ln(close_it) - ln(close at formation start)` for each ticker.
///
/// Formation prices must be complete. Missing trading-period closes carry
/// the previous value forward and are marked stale.
pub fn normalize_log_prices(panel: &PricePanel, window: &PeriodWindow) -> Result<NormalizedPanel, MarketDataError> {
    let start = window.locate(panel.dates())?;
    let end = start + window.total_days();
    let mut values = Vec::with_capacity(panel.n_tickers());
    let mut stale = Vec::with_capacity(panel.n_tickers());
    for (i, ticker) in panel.tickers().iter().enumerate() {
        let closes = &panel.quotes(i)[start..end];
        let base = closes[0]
            .map(|q| q.close.ln())
            .ok_or_else(|| MarketDataError::MissingBasePrice(ticker.clone()))?;
        let mut col = Vec::with_capacity(closes.len());
        let mut flags = Vec::with_capacity(closes.len());
        let mut last = 0.0;
        for (t, q) in closes.iter().enumerate() {
            match q {
                Some(q) => {
                    last = q.close.ln() - base;
                    flags.push(false);
                }
                None if t < window.formation_days => {
                    return Err(MarketDataError::MissingFormationPrice {
                        ticker: ticker.clone(),
                        date: panel.dates()[start + t],
                    })
                }
                None => flags.push(true),
            }
            col.push(last);
        }
        values.push(col);
        stale.push(flags);
    }
    Ok(NormalizedPanel {
        tickers: panel.tickers().to_vec(),
        dates: panel.dates()[start..end].to_vec(),
        formation_days: window.formation_days,
        values,
        stale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{PriceBar, PricePanel};
    use chrono::Duration;

    fn day(i: usize) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + Duration::days(i as i64)
    }

    pub(crate) fn panel_from(closes: &[(&str, Vec<Option<(f64, u64)>>)]) -> PricePanel {
        let mut bars = Vec::new();
        for (ticker, col) in closes {
            for (t, q) in col.iter().enumerate() {
                if let Some((close, volume)) = q {
                    bars.push(PriceBar { date: day(t), ticker: ticker.to_string(), close: *close, volume: *volume });
                }
            }
        }
        PricePanel::from_bars(bars).unwrap()
    }

    fn liquid(price: f64, volume: u64, n: usize) -> Vec<Option<(f64, u64)>> {
        vec![Some((price, volume)); n]
    }

    #[test]
    fn bottom_decile_of_ten_drops_one() {
        let names: Vec<String> = (0..10).map(|i| format!("T{i}")).collect();
        let cols: Vec<(&str, Vec<Option<(f64, u64)>>)> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), liquid(10.0, 100 + i as u64 * 10, 6)))
            .collect();
        let panel = panel_from(&cols);
        let window = PeriodWindow::from_index(panel.dates(), 0, 4, 2).unwrap();
        let out = filter_universe(&panel, &window).unwrap();
        assert_eq!(out.n_tickers(), 9);
        assert!(out.ticker_index("T0").is_none());
        assert_eq!(out.n_dates(), 6);
    }

    #[test]
    fn gap_in_formation_drops_liquid_ticker() {
        let mut gappy = liquid(1000.0, 1_000_000, 6);
        gappy[2] = None;
        let mut zero_volume = liquid(1000.0, 1_000_000, 6);
        zero_volume[1] = Some((1000.0, 0));
        let mut late_gap = liquid(1000.0, 1_000_000, 6);
        late_gap[5] = None;
        let panel = panel_from(&[
            ("A", liquid(10.0, 10, 6)),
            ("B", gappy),
            ("C", zero_volume),
            ("D", late_gap),
            ("E", liquid(10.0, 10, 6)),
        ]);
        let window = PeriodWindow::from_index(panel.dates(), 0, 4, 2).unwrap();
        let out = filter_universe(&panel, &window).unwrap();
        // 5 tickers: decile cut is 0, so only the continuity rule applies
        assert_eq!(out.tickers(), ["A", "D", "E"]);
    }

    #[test]
    fn ties_in_liquidity_break_by_ticker() {
        let names: Vec<String> = (0..20).map(|i| format!("T{i:02}")).collect();
        let cols: Vec<(&str, Vec<Option<(f64, u64)>>)> =
            names.iter().map(|n| (n.as_str(), liquid(10.0, 100, 5))).collect();
        let panel = panel_from(&cols);
        let window = PeriodWindow::from_index(panel.dates(), 0, 5, 0).unwrap();
        let out = filter_universe(&panel, &window).unwrap();
        assert_eq!(out.tickers().first().map(String::as_str), Some("T02"));
        assert_eq!(out.n_tickers(), 18);
    }

    #[test]
    fn empty_universe_error() {
        let mut col = liquid(10.0, 10, 4);
        col[0] = Some((10.0, 0));
        let panel = panel_from(&[("A", col)]);
        let window = PeriodWindow::from_index(panel.dates(), 0, 4, 0).unwrap();
        assert!(matches!(filter_universe(&panel, &window), Err(MarketDataError::EmptyUniverse)));
    }

    #[test]
    fn constant_price_normalizes_to_zero() {
        let panel = panel_from(&[("A", liquid(100.0, 1, 5))]);
        let window = PeriodWindow::from_index(panel.dates(), 0, 3, 2).unwrap();
        let norm = normalize_log_prices(&panel, &window).unwrap();
        assert!(norm.series(0).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_point_log_return() {
        let panel = panel_from(&[("A", vec![Some((100.0, 1)), Some((110.0, 1))])]);
        let window = PeriodWindow::from_index(panel.dates(), 0, 2, 0).unwrap();
        let norm = normalize_log_prices(&panel, &window).unwrap();
        assert_eq!(norm.series(0)[0], 0.0);
        assert!((norm.series(0)[1] - 0.09531017980432493).abs() < 1e-15);
    }

    #[test]
    fn trading_gap_carries_forward() {
        let panel = panel_from(&[
            ("A", vec![Some((100.0, 1)), Some((110.0, 1)), None, Some((121.0, 1))]),
            ("B", liquid(5.0, 1, 4)),
        ]);
        let window = PeriodWindow::from_index(panel.dates(), 0, 2, 2).unwrap();
        let norm = normalize_log_prices(&panel, &window).unwrap();
        assert_eq!(norm.series(0)[2], norm.series(0)[1]);
        assert_eq!(norm.stale(0), [false, false, true, false]);
        assert_eq!(norm.trading(0).len(), 2);
    }

    #[test]
    fn missing_base_price() {
        let panel = panel_from(&[
            ("A", vec![None, Some((110.0, 1)), Some((121.0, 1))]),
            ("B", liquid(5.0, 1, 3)),
        ]);
        let window = PeriodWindow::from_index(panel.dates(), 0, 2, 1).unwrap();
        assert!(matches!(normalize_log_prices(&panel, &window), Err(MarketDataError::MissingBasePrice(t)) if t == "A"));
    }
}
