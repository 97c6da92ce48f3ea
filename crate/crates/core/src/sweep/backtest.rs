use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, OnceLock};

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::marketdata::{
    filter_universe, normalize_log_prices, scaled_lengths, DateRange, MarketDataError, NormalizedPanel, PeriodWindow,
    PricePanel,
};
use crate::metrics::ReturnSeries;
use crate::pairselect::{pick_cointegrated, rank_pairs, test_candidate, Method, PairCandidate, SelectError};
use crate::tradesim::{build_spread, portfolio_returns, simulate_pair, CostModel, StrategyParams, TradeLedger};

use super::{Engine, SweepError};

/// One formation + trading cycle as panel indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleSpec {
    pub formation_start: usize,
    pub formation_days: usize,
    pub trading_days: usize,
}

impl CycleSpec {
    pub fn trading_start(&self) -> usize {
        self.formation_start + self.formation_days
    }
}

/// Tiles `range` with back-to-back trading windows of `round(126·m)` days,
/// each preceded by `round(252·m)` formation days. The last window may be
/// shorter.
///
/// Without `lookback` the first formation period starts at the range start
/// and the range must hold one full cycle. With `lookback` trading starts at
/// the range start and the first formation period lies before it.
pub fn tile_cycles(
    dates: &[NaiveDate],
    range: DateRange,
    multiplier: f64,
    lookback: bool,
) -> Result<Vec<CycleSpec>, SweepError> {
    let (f, t) = scaled_lengths(multiplier);
    if f < 2 || t == 0 {
        return Err(SweepError::InvalidParams(format!("multiplier {multiplier} gives {f} formation / {t} trading days")));
    }
    let (lo, hi) = range.index_span(dates);
    let first_trade = if lookback {
        if lo < f {
            return Err(SweepError::RangeTooShort { needed: f, available: lo });
        }
        if hi == lo {
            return Err(SweepError::RangeTooShort { needed: 1, available: 0 });
        }
        lo
    } else {
        if hi - lo < f + t {
            return Err(SweepError::RangeTooShort { needed: f + t, available: hi - lo });
        }
        lo + f
    };
    let mut cycles = Vec::new();
    let mut start = first_trade;
    while start < hi {
        let len = t.min(hi - start);
        cycles.push(CycleSpec { formation_start: start - f, formation_days: f, trading_days: len });
        start += len;
    }
    Ok(cycles)
}

/// Formation-stage state of one cycle, shared by every grid point with the
/// same period length.
#[derive(Debug)]
struct PreparedCycle {
    spec: CycleSpec,
    trading_dates: Vec<NaiveDate>,
    stage: Option<(PricePanel, NormalizedPanel)>,
    /// Distance: the smallest SSDs. Cointegration: the tested SSD-order
    /// prefix (or every testable pair in exhaustive mode).
    candidates: Vec<PairCandidate>,
    note: Option<String>,
}

impl PreparedCycle {
    fn prepare(
        panel: &PricePanel,
        spec: CycleSpec,
        engine: &Engine,
        max_pairs: usize,
        min_confidence: f64,
    ) -> Result<Self, SweepError> {
        let window = PeriodWindow::from_index(panel.dates(), spec.formation_start, spec.formation_days, spec.trading_days)?;
        let start = spec.trading_start();
        let trading_dates = panel.dates()[start..start + spec.trading_days].to_vec();
        let empty = |note: String| PreparedCycle { spec, trading_dates: trading_dates.clone(), stage: None, candidates: Vec::new(), note: Some(note) };

        let filtered = match filter_universe(panel, &window) {
            Ok(p) => p,
            Err(MarketDataError::EmptyUniverse) => return Ok(empty("no tickers survive the filter".into())),
            Err(e) => return Err(e.into()),
        };
        let normalized = normalize_log_prices(&filtered, &window)?;
        let ranked = match rank_pairs(&normalized) {
            Ok(r) => r,
            Err(SelectError::TooFewTickers(n)) => return Ok(empty(format!("{n} tickers survive the filter"))),
            Err(e) => return Err(e.into()),
        };
        let candidates = match engine.method {
            Method::Distance => ranked.into_iter().take(max_pairs).collect(),
            Method::Cointegration if engine.exhaustive => {
                ranked.iter().filter_map(|c| test_candidate(&normalized, c, engine.max_lag).ok()).collect()
            }
            Method::Cointegration => {
                let mut tested = Vec::new();
                let mut passing = 0;
                for c in &ranked {
                    if passing == max_pairs {
                        break;
                    }
                    let Ok(t) = test_candidate(&normalized, c, engine.max_lag) else {
                        continue;
                    };
                    if t.p_value().is_some_and(|p| p <= min_confidence) {
                        passing += 1;
                    }
                    tested.push(t);
                }
                tested
            }
        };
        Ok(PreparedCycle { spec, trading_dates, stage: Some((filtered, normalized)), candidates, note: None })
    }

    fn pairs(&self, engine: &Engine, n_pairs: usize, confidence: f64) -> Vec<PairCandidate> {
        match engine.method {
            Method::Distance => self.candidates.iter().take(n_pairs).cloned().collect(),
            Method::Cointegration => pick_cointegrated(&self.candidates, n_pairs, confidence, engine.exhaustive),
        }
    }

    fn run(
        &self,
        engine: &Engine,
        params: &StrategyParams,
        costs: &CostModel,
    ) -> Result<(Vec<f64>, Vec<TradeLedger>, Vec<String>), SweepError> {
        let Some((prices, normalized)) = &self.stage else {
            return Ok((vec![0.0; self.trading_dates.len()], Vec::new(), Vec::new()));
        };
        let pairs = self.pairs(engine, params.n_pairs, params.confidence);
        let mut ledgers = Vec::with_capacity(pairs.len());
        for pair in &pairs {
            let spread = build_spread(pair, normalized, engine.method)?;
            ledgers.push(simulate_pair(&spread, prices, params, costs)?);
        }
        let returns = if ledgers.is_empty() {
            vec![0.0; self.trading_dates.len()]
        } else {
            portfolio_returns(&ledgers, params.n_pairs, engine.basis)?.returns
        };
        Ok((returns, ledgers, pairs.iter().map(PairCandidate::label).collect()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSummary {
    pub formation_start: NaiveDate,
    pub trading_start: NaiveDate,
    pub trading_end: NaiveDate,
    pub pairs: Vec<String>,
    /// Why the cycle traded nothing, when the universe was too small.
    pub note: Option<String>,
}

/// Concatenated daily portfolio returns over all cycles of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Backtest {
    pub params: StrategyParams,
    pub returns: ReturnSeries,
    pub ledgers: Vec<TradeLedger>,
    /// Entry dates of every trade.
    pub trade_dates: Vec<NaiveDate>,
    pub cycles: Vec<CycleSummary>,
}

impl Backtest {
    pub fn n_trades(&self) -> usize {
        self.trade_dates.len()
    }
}

type CycleKey = (DateRange, bool, usize, usize);
type CycleSlot = Arc<OnceLock<Result<Arc<Vec<PreparedCycle>>, SweepError>>>;

/// Evaluates parameter sets over one panel, caching the formation stage
/// (filtering, normalization, ranking and cointegration tests) per range
/// and period length.
///
/// The cache holds enough candidates for up to `max_pairs` pairs at any
/// confidence of at least `min_confidence`.
pub struct GridEvaluator<'a> {
    panel: &'a PricePanel,
    engine: Engine,
    max_pairs: usize,
    min_confidence: f64,
    cache: Mutex<BTreeMap<CycleKey, CycleSlot>>,
}

impl<'a> GridEvaluator<'a> {
    pub fn new(panel: &'a PricePanel, engine: Engine, max_pairs: usize, min_confidence: f64) -> Self {
        GridEvaluator { panel, engine, max_pairs, min_confidence, cache: Mutex::new(BTreeMap::new()) }
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn panel(&self) -> &PricePanel {
        self.panel
    }

    fn cycles(&self, range: DateRange, multiplier: f64, lookback: bool) -> Result<Arc<Vec<PreparedCycle>>, SweepError> {
        let (f, t) = scaled_lengths(multiplier);
        let slot = {
            let mut cache = self.cache.lock().expect("cache lock");
            Arc::clone(cache.entry((range, lookback, f, t)).or_default())
        };
        if let Some(done) = slot.get() {
            return done.clone();
        }
        // Computed outside the slot: a worker blocked in `get_or_init` could
        // steal a task waiting on the same slot and deadlock.
        let prepared = tile_cycles(self.panel.dates(), range, multiplier, lookback).and_then(|specs| {
            specs
                .par_iter()
                .map(|s| PreparedCycle::prepare(self.panel, *s, &self.engine, self.max_pairs, self.min_confidence))
                .collect::<Result<Vec<PreparedCycle>, SweepError>>()
                .map(Arc::new)
        });
        slot.get_or_init(|| prepared).clone()
    }

    /// Prepares the formation stage for each multiplier up front so that
    /// parallel evaluations sharing a window do not repeat the work.
    pub(crate) fn warm(&self, range: DateRange, multipliers: &[f64], lookback: bool) {
        multipliers.par_iter().for_each(|&m| {
            let _ = self.cycles(range, m, lookback);
        });
    }

    /// Runs one parameter set over `range` with the given costs.
    pub fn evaluate(
        &self,
        params: &StrategyParams,
        range: DateRange,
        lookback: bool,
        costs: &CostModel,
    ) -> Result<Backtest, SweepError> {
        params.validate().map_err(SweepError::InvalidParams)?;
        costs.validate().map_err(SweepError::InvalidParams)?;
        if params.n_pairs > self.max_pairs || params.confidence < self.min_confidence {
            return Err(SweepError::InvalidParams(format!(
                "evaluator prepared for at most {} pairs at confidence ≥ {}",
                self.max_pairs, self.min_confidence
            )));
        }
        let cycles = self.cycles(range, params.length_multiplier, lookback)?;
        let mut dates = Vec::new();
        let mut returns = Vec::new();
        let mut ledgers = Vec::new();
        let mut summaries = Vec::with_capacity(cycles.len());
        for cycle in cycles.iter() {
            let (r, l, pairs) = cycle.run(&self.engine, params, costs)?;
            dates.extend_from_slice(&cycle.trading_dates);
            returns.extend(r);
            ledgers.extend(l);
            summaries.push(CycleSummary {
                formation_start: self.panel.dates()[cycle.spec.formation_start],
                trading_start: cycle.trading_dates[0],
                trading_end: *cycle.trading_dates.last().expect("non-empty trading window"),
                pairs,
                note: cycle.note.clone(),
            });
        }
        let mut trade_dates: Vec<NaiveDate> =
            ledgers.iter().flat_map(|l| l.events.iter().filter(|e| e.action.is_open()).map(|e| e.date)).collect();
        trade_dates.sort();
        Ok(Backtest { params: *params, returns: ReturnSeries::new(dates, returns)?, ledgers, trade_dates, cycles: summaries })
    }
}

/// Back-to-back formation/trading cycles over `range`, each running filter,
/// normalize, select and simulate.
pub fn run_backtest(
    panel: &PricePanel,
    engine: &Engine,
    params: &StrategyParams,
    range: DateRange,
) -> Result<Backtest, SweepError> {
    GridEvaluator::new(panel, engine.clone(), params.n_pairs, params.confidence).evaluate(params, range, false, &engine.costs)
}

/// Like [`run_backtest`] but trading starts at the range start, with the
/// first formation period taken from the dates before it.
pub fn run_backtest_lookback(
    panel: &PricePanel,
    engine: &Engine,
    params: &StrategyParams,
    range: DateRange,
) -> Result<Backtest, SweepError> {
    GridEvaluator::new(panel, engine.clone(), params.n_pairs, params.confidence).evaluate(params, range, true, &engine.costs)
}
