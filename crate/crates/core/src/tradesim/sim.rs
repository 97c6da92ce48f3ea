use std::collections::VecDeque;

use chrono::NaiveDate;

use crate::marketdata::PricePanel;

use super::spread::{zscore, SpreadSeries};
use super::{CostModel, SimError, StrategyParams};

/// Trading days per year for short-fee accrual.
pub const DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    /// Short leg a, long leg b: entered when z is above the threshold.
    ShortSpread,
    /// Long leg a, short leg b: entered when z is below minus the threshold.
    LongSpread,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    OpenShortSpread,
    OpenLongSpread,
    Close,
    ForceClose,
}

impl Action {
    pub fn as_str(self) -> &'static str {
        match self {
            Action::OpenShortSpread => "open_short_spread",
            Action::OpenLongSpread => "open_long_spread",
            Action::Close => "close",
            Action::ForceClose => "force_close",
        }
    }

    pub fn is_open(self) -> bool {
        matches!(self, Action::OpenShortSpread | Action::OpenLongSpread)
    }
}

/// A round trip in trading-day indices. Execution days never precede their
/// signal days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedTrade {
    pub side: Side,
    pub open_signal: usize,
    pub open: usize,
    /// `None` when the exit was forced without a crossing signal.
    pub close_signal: Option<usize>,
    pub close: usize,
    pub forced: bool,
}

#[derive(Debug, Clone, Copy)]
enum Order {
    Open(Side, usize),
    Close(usize),
}

/// Walks the threshold rules over a z-score series.
///
/// Flat: open short above `threshold`, long below `-threshold` (strict).
/// Positioned: close once z reaches zero or the opposite sign. Orders fill
/// `lag` days after their signal. Opens that would fill on the last day or
/// later are ignored; a position still open on the last day, or on a day
/// where `tradable` is false, is force-closed there. One signal per day.
pub fn plan_trades(z: &[f64], tradable: &[bool], threshold: f64, lag: usize, allow_reentry: bool) -> Vec<PlannedTrade> {
    assert_eq!(z.len(), tradable.len());
    let mut trades = Vec::new();
    let Some(last) = z.len().checked_sub(1) else {
        return trades;
    };
    let mut pending: VecDeque<(usize, Order)> = VecDeque::new();
    // (side, open day, signal day)
    let mut holding: Option<(Side, usize, usize)> = None;
    let mut signal: Option<Side> = None;
    let mut late_close_signal: Option<usize> = None;
    let mut opened = false;

    let execute = |order: Order, day: usize, holding: &mut Option<(Side, usize, usize)>, trades: &mut Vec<PlannedTrade>| match order {
        Order::Open(side, signal_day) => {
            if holding.is_none() && tradable[day] && day < last {
                *holding = Some((side, day, signal_day));
            }
        }
        Order::Close(signal_day) => {
            if let Some((side, open, open_signal)) = holding.take() {
                trades.push(PlannedTrade { side, open_signal, open, close_signal: Some(signal_day), close: day, forced: false });
            }
        }
    };

    for t in 0..=last {
        if !tradable[t] {
            if let Some((side, open, open_signal)) = holding.take() {
                trades.push(PlannedTrade { side, open_signal, open, close_signal: None, close: t, forced: true });
            }
            signal = None;
            pending.clear();
            late_close_signal = None;
            continue;
        }
        while pending.front().is_some_and(|(day, _)| *day == t) {
            let (_, order) = pending.pop_front().expect("checked");
            execute(order, t, &mut holding, &mut trades);
        }

        let order = match signal {
            None if allow_reentry || !opened => {
                if z[t] > threshold {
                    Some(Order::Open(Side::ShortSpread, t))
                } else if z[t] < -threshold {
                    Some(Order::Open(Side::LongSpread, t))
                } else {
                    None
                }
            }
            Some(Side::ShortSpread) if z[t] <= 0.0 => Some(Order::Close(t)),
            Some(Side::LongSpread) if z[t] >= 0.0 => Some(Order::Close(t)),
            _ => None,
        };
        let fill = t + lag;
        match order {
            Some(Order::Open(side, _)) if fill < last => {
                signal = Some(side);
                opened = true;
                pending.push_back((fill, order.expect("matched")));
            }
            Some(Order::Close(_)) => {
                signal = None;
                if fill <= last {
                    pending.push_back((fill, order.expect("matched")));
                } else {
                    late_close_signal = Some(t);
                }
            }
            _ => {}
        }
        while pending.front().is_some_and(|(day, _)| *day == t) {
            let (_, order) = pending.pop_front().expect("checked");
            execute(order, t, &mut holding, &mut trades);
        }

        if t == last {
            if let Some((side, open, open_signal)) = holding.take() {
                trades.push(PlannedTrade { side, open_signal, open, close_signal: late_close_signal, close: t, forced: true });
            }
        }
    }
    trades
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeEvent {
    pub date: NaiveDate,
    /// Trading-day index of the fill.
    pub day: usize,
    pub signal_day: Option<usize>,
    pub action: Action,
    /// Signed market value of each leg at the fill (long > 0).
    pub leg_a_notional: f64,
    pub leg_b_notional: f64,
    /// Transaction costs plus, on exits, accrued short-borrow fees.
    pub cost: f64,
}

/// Events and daily net returns for one pair over a trading window.
///
/// Returns are P&L per unit of committed capital (one unit of notional per
/// leg) and are exactly zero on days without a position or a fill.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeLedger {
    pub pair: String,
    pub dates: Vec<NaiveDate>,
    pub events: Vec<TradeEvent>,
    pub daily_returns: Vec<f64>,
    /// Days on which the pair held a position at some point.
    pub exposed: Vec<bool>,
    pub degenerate: bool,
}

impl TradeLedger {
    pub fn flat(pair: String, dates: Vec<NaiveDate>, degenerate: bool) -> Self {
        let n = dates.len();
        TradeLedger { pair, dates, events: Vec::new(), daily_returns: vec![0.0; n], exposed: vec![false; n], degenerate }
    }

    pub fn n_trades(&self) -> usize {
        self.events.iter().filter(|e| e.action.is_open()).count()
    }

    pub fn total_return(&self) -> f64 {
        self.daily_returns.iter().sum()
    }
}

/// Signed entry notionals `(a, b)` for a short-spread position with gross
/// notional 2, legs weighted 1 : |β|. A long-spread position negates both.
pub fn short_spread_notionals(hedge_ratio: f64) -> (f64, f64) {
    let beta = hedge_ratio.abs();
    let w_a = 2.0 / (1.0 + beta);
    let w_b = 2.0 * beta / (1.0 + beta);
    (-w_a, w_b * hedge_ratio.signum())
}

/// Inputs to settle a trade plan: carried-forward leg prices on trading days
/// plus the close of the last formation day.
pub struct LegPrices<'a> {
    pub dates: &'a [NaiveDate],
    /// Length `dates.len() + 1`; index 0 is the last formation close.
    pub a: &'a [f64],
    pub b: &'a [f64],
}

/// Marks a trade plan to market and charges costs.
///
/// Fills happen at the fill day's close. Each leg pays `oneway_bps` of its
/// traded notional on entry and on exit; the short leg accrues
/// `short_fee_annual / 252` of its entry notional per day held, charged at
/// exit.
pub fn settle_trades(
    pair: String,
    plan: &[PlannedTrade],
    prices: &LegPrices<'_>,
    hedge_ratio: f64,
    costs: &CostModel,
) -> TradeLedger {
    let n = prices.dates.len();
    let mut ledger = TradeLedger::flat(pair, prices.dates.to_vec(), false);
    let (short_a, short_b) = short_spread_notionals(hedge_ratio);
    // price on trading day t lives at index t + 1
    let pa = |t: usize| prices.a[t + 1];
    let pb = |t: usize| prices.b[t + 1];
    for trade in plan {
        assert!(trade.open <= trade.close && trade.close < n);
        let sign = match trade.side {
            Side::ShortSpread => 1.0,
            Side::LongSpread => -1.0,
        };
        let (na, nb) = (sign * short_a, sign * short_b);
        let (qa, qb) = (na / pa(trade.open), nb / pb(trade.open));

        let open_date = prices.dates[trade.open];
        let open_cost = costs.oneway_bps(open_date) * 1e-4 * (na.abs() + nb.abs());
        ledger.events.push(TradeEvent {
            date: open_date,
            day: trade.open,
            signal_day: Some(trade.open_signal),
            action: if sign > 0.0 { Action::OpenShortSpread } else { Action::OpenLongSpread },
            leg_a_notional: na,
            leg_b_notional: nb,
            cost: open_cost,
        });
        ledger.daily_returns[trade.open] -= open_cost;
        ledger.exposed[trade.open] = true;

        for t in trade.open + 1..=trade.close {
            ledger.daily_returns[t] += qa * (pa(t) - pa(t - 1)) + qb * (pb(t) - pb(t - 1));
            ledger.exposed[t] = true;
        }

        let close_date = prices.dates[trade.close];
        let (va, vb) = (qa * pa(trade.close), qb * pb(trade.close));
        let held = (trade.close - trade.open) as f64;
        let short_notional: f64 = [na, nb].iter().filter(|v| **v < 0.0).map(|v| v.abs()).sum();
        let fee = costs.short_fee_annual(close_date) / DAYS_PER_YEAR * held * short_notional;
        let close_cost = costs.oneway_bps(close_date) * 1e-4 * (va.abs() + vb.abs()) + fee;
        ledger.events.push(TradeEvent {
            date: close_date,
            day: trade.close,
            signal_day: trade.close_signal,
            action: if trade.forced { Action::ForceClose } else { Action::Close },
            leg_a_notional: va,
            leg_b_notional: vb,
            cost: close_cost,
        });
        ledger.daily_returns[trade.close] -= close_cost;
    }
    ledger
}

/// Carried-forward closes for `ticker` over `prices` dates, plus a flag per
/// day telling whether the close was actually observed.
fn carried_closes(prices: &PricePanel, ticker: usize) -> Result<(Vec<f64>, Vec<bool>), SimError> {
    let mut last = None;
    let mut out = Vec::with_capacity(prices.n_dates());
    let mut seen = Vec::with_capacity(prices.n_dates());
    for q in prices.quotes(ticker) {
        if let Some(q) = q {
            last = Some(q.close);
        }
        seen.push(q.is_some());
        out.push(last.ok_or_else(|| SimError::MissingPrice(prices.tickers()[ticker].clone()))?);
    }
    Ok((out, seen))
}

/// Trades one pair over the trading part of `spread`'s window.
///
/// `prices` must share the spread's calendar (formation then trading days).
/// A leg without a close on some trading day is carried at its last price
/// and any open position is force-closed there.
pub fn simulate_pair(
    spread: &SpreadSeries,
    prices: &PricePanel,
    params: &StrategyParams,
    costs: &CostModel,
) -> Result<TradeLedger, SimError> {
    if prices.n_dates() != spread.values.len() {
        return Err(SimError::IndexMismatch(format!(
            "spread has {} days, prices {}",
            spread.values.len(),
            prices.n_dates()
        )));
    }
    let f = spread.formation_days;
    let trading_dates = prices.dates()[f..].to_vec();
    if trading_dates.is_empty() {
        return Err(SimError::EmptyTradingWindow);
    }
    if spread.degenerate {
        return Ok(TradeLedger::flat(spread.label(), trading_dates, true));
    }
    let ia = prices.ticker_index(&spread.leg_a).ok_or_else(|| SimError::UnknownTicker(spread.leg_a.clone()))?;
    let ib = prices.ticker_index(&spread.leg_b).ok_or_else(|| SimError::UnknownTicker(spread.leg_b.clone()))?;
    let (pa, seen_a) = carried_closes(prices, ia)?;
    let (pb, seen_b) = carried_closes(prices, ib)?;
    let tradable: Vec<bool> = (f..prices.n_dates()).map(|t| seen_a[t] && seen_b[t]).collect();

    let z = zscore(spread)?;
    let plan = plan_trades(&z, &tradable, params.threshold, params.lag, params.allow_reentry);
    let legs = LegPrices { dates: &trading_dates, a: &pa[f - 1..], b: &pb[f - 1..] };
    Ok(settle_trades(spread.label(), &plan, &legs, spread.hedge_ratio, costs))
}
