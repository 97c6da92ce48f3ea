use chrono::{Months, NaiveDate};
use rayon::prelude::*;

use crate::marketdata::DateRange;
use crate::metrics::ReturnSeries;
use crate::tradesim::{StrategyParams, TradeLedger};

use super::{GridEvaluator, ParamGrid, SweepError};

/// Calendar blocks of `months` starting at `range.start`, clipped to the
/// range, keeping only blocks that contain at least one date.
pub fn retune_blocks(dates: &[NaiveDate], range: DateRange, months: u32) -> Vec<DateRange> {
    let mut blocks = Vec::new();
    let mut k = 0;
    loop {
        let Some(start) = range.start.checked_add_months(Months::new(months * k)) else { break };
        if start > range.end {
            break;
        }
        let next = range.start.checked_add_months(Months::new(months * (k + 1)));
        let end = next.and_then(|n| n.pred_opt()).map_or(range.end, |e| e.min(range.end));
        let block = DateRange::new(start, end);
        let (lo, hi) = block.index_span(dates);
        if hi > lo {
            blocks.push(block);
        }
        k += 1;
    }
    blocks
}

#[derive(Debug, Clone, PartialEq)]
pub enum BlockChoice {
    /// First block: no history to tune on.
    Baseline,
    /// Rank-1 parameters of the grid over the preceding block.
    Tuned { on: DateRange },
    /// The grid over the preceding block produced no result.
    Fallback { on: DateRange },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveBlock {
    pub range: DateRange,
    pub params: StrategyParams,
    pub choice: BlockChoice,
    /// Grid points that failed while tuning this block.
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveResult {
    pub returns: ReturnSeries,
    pub blocks: Vec<AdaptiveBlock>,
    pub ledgers: Vec<TradeLedger>,
    pub trade_dates: Vec<NaiveDate>,
}

/// Walk-forward retuning over blocks of `interval_months`.
///
/// The first block runs `baseline` with formation inside the block. Each
/// later block runs the rank-1 parameters of the grid evaluated on the
/// block before it, trading from the block start with formation drawn from
/// the preceding dates. Parameter choices only read data up to the end of
/// the preceding block.
pub fn adaptive_backtest(
    evaluator: &GridEvaluator<'_>,
    grid: &ParamGrid,
    baseline: &StrategyParams,
    range: DateRange,
    interval_months: u32,
) -> Result<AdaptiveResult, SweepError> {
    if interval_months == 0 {
        return Err(SweepError::InvalidParams("retune interval must be positive".into()));
    }
    let dates = evaluator.panel().dates();
    let blocks = retune_blocks(dates, range, interval_months);
    if blocks.len() < 2 {
        let (lo, hi) = range.index_span(dates);
        return Err(SweepError::RangeTooShort { needed: 2, available: blocks.len().min(hi - lo) });
    }
    let costs = &evaluator.engine().costs;

    let choices: Vec<Result<(StrategyParams, BlockChoice, usize), SweepError>> = (0..blocks.len())
        .into_par_iter()
        .map(|b| {
            if b == 0 {
                return Ok((*baseline, BlockChoice::Baseline, 0));
            }
            let on = blocks[b - 1];
            let outcome = evaluator.grid(grid, on, false, costs)?;
            let failures = outcome.failures.len();
            Ok(match outcome.results.first() {
                Some(best) => (best.params, BlockChoice::Tuned { on }, failures),
                None => (*baseline, BlockChoice::Fallback { on }, failures),
            })
        })
        .collect();

    let mut returns = ReturnSeries::empty();
    let mut ledgers = Vec::new();
    let mut trade_dates = Vec::new();
    let mut out_blocks = Vec::with_capacity(blocks.len());
    for (b, (block, choice)) in blocks.iter().zip(choices).enumerate() {
        let (params, choice, failures) = choice?;
        let run = evaluator.evaluate(&params, *block, b > 0, costs)?;
        returns.extend(&run.returns)?;
        ledgers.extend(run.ledgers);
        trade_dates.extend(run.trade_dates);
        out_blocks.push(AdaptiveBlock { range: *block, params, choice, failures });
    }
    Ok(AdaptiveResult { returns, blocks: out_blocks, ledgers, trade_dates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::Duration;

    #[test]
    fn four_years_make_two_blocks() {
        let start = NaiveDate::from_ymd_opt(2001, 1, 1).unwrap();
        let dates: Vec<NaiveDate> = (0..1461).map(|i| start + Duration::days(i)).collect();
        let range = DateRange::new(start, NaiveDate::from_ymd_opt(2004, 12, 31).unwrap());
        let blocks = retune_blocks(&dates, range, 24);
        assert_eq!(
            blocks,
            [
                DateRange::new(start, NaiveDate::from_ymd_opt(2002, 12, 31).unwrap()),
                DateRange::new(NaiveDate::from_ymd_opt(2003, 1, 1).unwrap(), range.end),
            ]
        );
    }
}
