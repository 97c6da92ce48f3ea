//! Library outputs checked against independent recomputations.

mod common;

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use pairtrade::marketdata::{filter_universe, normalize_log_prices, DateRange, PeriodWindow, SubperiodRow, SubperiodTable};
use pairtrade::metrics::{annualized_sharpe, closes_to_returns, monthly_returns, performance_summary, ReturnSeries};
use pairtrade::pairselect::{engle_granger, select_pairs, Method, SelectionConfig};
use pairtrade::sweep::{rank_results, run_backtest, tile_cycles, Engine, GridEvaluator, GridResult, RankBy};
use pairtrade::synthgen::{gen_universe, weekday_calendar, SynthConfig};
use pairtrade::tradesim::{plan_trades, settle_trades, CostModel, LegPrices, Side, StrategyParams};
use rand::Rng;

use common::*;

fn weekday_returns(seed: u64, start: NaiveDate, n: usize) -> ReturnSeries {
    let mut r = rng(seed);
    let dates = weekday_calendar(start, n);
    let returns = (0..n).map(|_| 0.01 * normal(&mut r)).collect();
    ReturnSeries::new(dates, returns).unwrap()
}

#[test]
fn settled_trades_match_position_replay() {
    let mut r = rng(11);
    for _ in 0..100 {
        let n = r.random_range(10..80);
        let z = random_walk(&mut r, n, 0.7);
        let plan = plan_trades(&z, &vec![true; n], 1.0, r.random_range(0..3), true);
        let pa: Vec<f64> = random_walk(&mut r, n + 1, 0.03).iter().map(|x| 12.0 * x.exp()).collect();
        let pb: Vec<f64> = random_walk(&mut r, n + 1, 0.03).iter().map(|x| 80.0 * x.exp()).collect();
        let dates = weekday_calendar(date(2010, 1, 4), n);
        let beta = r.random_range(0.3..2.5);
        let (bps, fee) = (r.random_range(0.0..50.0), r.random_range(0.0..0.05));
        let ledger = settle_trades("A/B".into(), &plan, &LegPrices { dates: &dates, a: &pa, b: &pb }, beta, &CostModel::flat(bps, fee));

        let mut expected = vec![0.0; n];
        for trade in &plan {
            // gross 2 split 1 : beta; short spread is short a, long b
            let sign = if trade.side == Side::ShortSpread { 1.0 } else { -1.0 };
            let na = -sign * 2.0 / (1.0 + beta);
            let nb = sign * 2.0 * beta / (1.0 + beta);
            let (o, c) = (trade.open + 1, trade.close + 1);
            let (qa, qb) = (na / pa[o], nb / pb[o]);
            let pnl = qa * (pa[c] - pa[o]) + qb * (pb[c] - pb[o]);
            let open_cost = bps * 1e-4 * 2.0;
            let exit_value = (qa * pa[c]).abs() + (qb * pb[c]).abs();
            let short_entry = if na < 0.0 { -na } else { -nb };
            let fee_cost = fee / 252.0 * (trade.close - trade.open) as f64 * short_entry;
            let total = pnl - open_cost - bps * 1e-4 * exit_value - fee_cost;
            expected[trade.close] += total;
            // a day shared with another trade's fill mixes both trades
            let isolated = plan.iter().filter(|t| *t != trade).all(|t| t.close != trade.open && t.open != trade.close);
            if isolated {
                let got: f64 = ledger.daily_returns[trade.open..=trade.close].iter().sum();
                assert!((got - total).abs() < 1e-12, "trade {trade:?}: {got} vs {total}");
            }
        }
        let got_total: f64 = ledger.daily_returns.iter().sum();
        let want_total: f64 = expected.iter().sum();
        assert!((got_total - want_total).abs() < 1e-11);
        assert!(ledger.daily_returns.iter().zip(&ledger.exposed).all(|(r, e)| *e || *r == 0.0));
    }
}

#[test]
fn monthly_compounding_matches_product() {
    for seed in 0..20 {
        let daily = weekday_returns(seed, date(2003, 2, 17), 700);
        let mut groups: BTreeMap<(i32, u32), Vec<f64>> = BTreeMap::new();
        for (d, r) in daily.dates().iter().zip(daily.returns()) {
            groups.entry((d.year(), d.month())).or_default().push(*r);
        }
        let months = monthly_returns(&daily).unwrap();
        assert_eq!(months.len(), groups.len());
        for (m, ((y, mo), rs)) in months.iter().zip(&groups) {
            assert_eq!((m.year, m.month, m.n_days), (*y, *mo, rs.len()));
            let want = rs.iter().fold(1.0, |acc, r| acc * (1.0 + r)) - 1.0;
            assert!(relative_eq(m.value, want, 1e-12) || (m.value - want).abs() < 1e-15);
        }
        assert!(months[0].partial);
        assert!(months[1..months.len() - 1].iter().all(|m| !m.partial));
    }
}

#[test]
fn subperiod_rows_match_masked_recomputation() {
    let daily = weekday_returns(3, date(2001, 1, 1), 1300);
    let table = SubperiodTable::new(vec![
        SubperiodRow { label: "a".into(), start: date(2001, 1, 1), end: date(2002, 3, 15), oneway_cost_bps: 30.0, short_fee_annual: 0.0 },
        SubperiodRow { label: "b".into(), start: date(2002, 3, 15), end: date(2004, 1, 1), oneway_cost_bps: 30.0, short_fee_annual: 0.0 },
        SubperiodRow { label: "c".into(), start: date(2004, 1, 1), end: date(2006, 12, 31), oneway_cost_bps: 30.0, short_fee_annual: 0.0 },
    ])
    .unwrap();
    let bench = weekday_returns(4, date(2000, 6, 1), 1600);
    let trades: Vec<NaiveDate> = daily.dates().iter().step_by(17).copied().collect();
    let rows = performance_summary(&daily, Some(&bench), "s", &table, &trades).unwrap();
    assert_eq!(rows.len(), 4);

    let months = monthly_returns(&daily).unwrap();
    let bench_months: BTreeMap<(i32, u32), f64> = monthly_returns(&bench.between(daily.dates()[0], *daily.dates().last().unwrap()))
        .unwrap()
        .iter()
        .map(|m| ((m.year, m.month), m.value))
        .collect();
    let mut month_total = 0;
    for (row, sub) in rows.iter().zip(table.rows()) {
        let is_last = sub.label == "c";
        let picked: Vec<_> = months
            .iter()
            .filter(|m| m.last_date >= sub.start && (m.last_date < sub.end || is_last && m.last_date <= sub.end))
            .collect();
        let values: Vec<f64> = picked.iter().map(|m| m.value).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt();
        let bmean = picked.iter().map(|m| bench_months[&(m.year, m.month)]).sum::<f64>() / picked.len() as f64;
        let n_trades = trades.iter().filter(|d| picked.iter().any(|m| m.year == d.year() && m.month == d.month())).count();
        assert_eq!(row.subperiod, sub.label);
        assert_eq!(row.n_months, picked.len());
        assert!((row.mean_monthly_return - mean).abs() < 1e-14);
        assert!((row.annualized_sharpe - mean / sd * 12f64.sqrt()).abs() < 1e-10);
        assert!((row.excess_monthly - (mean - bmean)).abs() < 1e-14);
        assert_eq!(row.n_trades, n_trades);
        month_total += row.n_months;
    }
    let total = rows.last().unwrap();
    assert_eq!(total.subperiod, "Total");
    assert_eq!(total.n_months, month_total);
    assert_eq!(total.n_trades, trades.len());
}

#[test]
fn sharpe_sentinels() {
    assert_eq!(annualized_sharpe(&[0.01, 0.01, 0.01]), (f64::INFINITY, true));
    assert_eq!(annualized_sharpe(&[-0.01, -0.01]), (f64::NEG_INFINITY, true));
    assert_eq!(annualized_sharpe(&[0.0, 0.0]), (0.0, true));
    let (s, flag) = annualized_sharpe(&[0.01, 0.03]);
    assert!(!flag);
    let sd = ((0.01f64 - 0.02).powi(2) * 2.0).sqrt();
    assert!((s - 0.02 / sd * 12f64.sqrt()).abs() < 1e-12);
}

#[test]
fn ranking_matches_repeated_selection() {
    let mut r = rng(21);
    let mut results: Vec<GridResult> = (0..200)
        .map(|i| GridResult {
            params: StrategyParams { n_pairs: 5 + i % 4, threshold: (i % 6) as f64 * 0.5, ..StrategyParams::baseline() },
            // coarse values force ties on both keys
            mean_monthly: (r.random_range(0..8) as f64) * 1e-3,
            sharpe: (r.random_range(0..4) as f64) * 0.25,
            sharpe_degenerate: false,
            n_trades: 0,
            n_months: 12,
            range: DateRange::new(date(2000, 1, 1), date(2001, 1, 1)),
        })
        .collect();
    let mut pool = results.clone();
    rank_results(&mut results, RankBy::Return);
    let key = |g: &GridResult| (g.mean_monthly, g.sharpe, std::cmp::Reverse(g.params.n_pairs), -g.params.threshold);
    for got in &results {
        let best = (0..pool.len())
            .max_by(|&a, &b| {
                let (ka, kb) = (key(&pool[a]), key(&pool[b]));
                ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1)).then(ka.2.cmp(&kb.2)).then(ka.3.total_cmp(&kb.3))
            })
            .unwrap();
        let want = pool.swap_remove(best);
        assert_eq!((got.mean_monthly, got.sharpe), (want.mean_monthly, want.sharpe));
        assert_eq!((got.params.n_pairs, got.params.threshold), (want.params.n_pairs, want.params.threshold));
    }
}

#[test]
fn cycles_tile_the_range() {
    let dates = weekday_calendar(date(2000, 1, 3), 2000);
    for m in [0.16, 0.5, 1.0, 1.5] {
        for lookback in [false, true] {
            let range = DateRange::new(dates[600], dates[1899]);
            let cycles = tile_cycles(&dates, range, m, lookback).unwrap();
            let (f, t) = ((252.0 * m).round() as usize, (126.0 * m).round() as usize);
            let first = if lookback { 600 } else { 600 + f };
            assert_eq!(cycles[0].trading_start(), first);
            for w in cycles.windows(2) {
                assert_eq!(w[0].trading_start() + w[0].trading_days, w[1].trading_start());
            }
            for c in &cycles {
                assert_eq!(c.formation_days, f);
                assert!(c.trading_days <= t && c.trading_days > 0);
            }
            let last = cycles.last().unwrap();
            assert_eq!(last.trading_start() + last.trading_days, 1900);
        }
    }
}

#[test]
fn cached_grid_evaluation_matches_fresh_backtest() {
    let cfg = SynthConfig { n_stocks: 24, n_planted_pairs: 5, days: 900, seed: 31, gapped_stocks: 2, benchmark_ticker: None, ..Default::default() };
    let panel = synth(&cfg);
    let range = DateRange::new(panel.dates()[0], *panel.dates().last().unwrap());
    for method in [Method::Distance, Method::Cointegration] {
        let engine = Engine::new(method, CostModel::flat(25.0, 0.01));
        let shared = GridEvaluator::new(&panel, engine.clone(), 40, 0.01);
        for (n_pairs, threshold, conf, mult) in [(5, 1.0, 0.01, 1.0), (10, 2.0, 0.05, 0.5), (3, 1.5, 0.1, 1.0), (40, 0.5, 0.1, 0.5)] {
            let params = StrategyParams { n_pairs, threshold, confidence: conf, length_multiplier: mult, ..StrategyParams::baseline() };
            let cached = shared.evaluate(&params, range, false, &engine.costs).unwrap();
            let fresh = run_backtest(&panel, &engine, &params, range).unwrap();
            assert_eq!(cached.returns, fresh.returns, "{method:?} {params:?}");
            assert_eq!(cached.ledgers, fresh.ledgers);
            assert_eq!(cached.cycles, fresh.cycles);
        }
    }
}

#[test]
fn planted_pairs_are_recovered() {
    let cfg = SynthConfig { n_stocks: 30, n_planted_pairs: 4, days: 400, seed: 5, hedge_ratios: vec![1.0], benchmark_ticker: None, ..Default::default() };
    let (panel, manifest) = gen_universe(&cfg).unwrap();
    let window = PeriodWindow::from_index(panel.dates(), 0, 252, 126).unwrap();
    let filtered = filter_universe(&panel, &window).unwrap();
    let norm = normalize_log_prices(&filtered, &window).unwrap();
    let planted: Vec<String> = manifest.pairs.iter().map(|p| format!("{}/{}", p.leg_a, p.leg_b)).collect();

    let distance = select_pairs(&norm, &SelectionConfig::distance(4)).unwrap();
    let chosen: Vec<String> = distance.pairs.iter().map(|p| p.label()).collect();
    assert_eq!(chosen.iter().filter(|c| planted.contains(c)).count(), 4, "{chosen:?}");

    let coint = select_pairs(&norm, &SelectionConfig::cointegration(4, 0.01)).unwrap();
    for p in &coint.pairs {
        assert!(p.p_value().unwrap() < 0.01);
    }
    for pair in &manifest.pairs {
        let a = norm.ticker_index(&pair.leg_a).unwrap();
        let b = norm.ticker_index(&pair.leg_b).unwrap();
        let fit = engle_granger(norm.formation(a), norm.formation(b), None).unwrap();
        assert!((fit.hedge_ratio - pair.beta).abs() < 0.1, "{} {}", fit.hedge_ratio, pair.beta);
        assert!(fit.p_value < 0.01);
    }
    for t in &manifest.illiquid {
        assert!(filtered.ticker_index(t).is_none(), "{t} survived the liquidity filter");
    }
}

#[test]
fn synthetic_legs_follow_the_planted_relation() {
    let cfg = SynthConfig { hedge_ratios: vec![0.5, 1.5, 2.0], seed: 9, ..Default::default() };
    let (panel, manifest) = gen_universe(&cfg).unwrap();
    for p in &manifest.pairs {
        let (a, b) = (panel.ticker_index(&p.leg_a).unwrap(), panel.ticker_index(&p.leg_b).unwrap());
        for t in 0..panel.n_dates() {
            let lhs = panel.close(a, t).unwrap().ln();
            let rhs = p.alpha + p.beta * panel.close(b, t).unwrap().ln() + p.spread[t];
            assert!((lhs - rhs).abs() < 1e-9);
        }
    }
}

#[test]
fn benchmark_returns_carry_gaps() {
    let dates = weekday_calendar(date(2005, 1, 3), 6);
    let closes = [Some(100.0), Some(110.0), None, Some(99.0), None, Some(99.0)];
    let series = closes_to_returns(&dates, &closes).unwrap();
    let want = [0.1, 0.0, 99.0 / 110.0 - 1.0, 0.0, 0.0];
    assert_eq!(series.dates(), &dates[1..]);
    for (g, w) in series.returns().iter().zip(want) {
        assert!((g - w).abs() < 1e-15);
    }
}
