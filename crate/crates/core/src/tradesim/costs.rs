use chrono::NaiveDate;

use crate::marketdata::SubperiodTable;

/// Proportional transaction costs and short-borrow fees by calendar date.
///
/// Without overrides both rates come from the subperiod row containing the
/// date (nearest row outside the table); with no table they are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    table: Option<SubperiodTable>,
    flat_bps: Option<f64>,
    short_fee: Option<f64>,
}

impl CostModel {
    pub fn zero() -> Self {
        CostModel { table: None, flat_bps: Some(0.0), short_fee: Some(0.0) }
    }

    pub fn flat(oneway_bps: f64, short_fee_annual: f64) -> Self {
        CostModel { table: None, flat_bps: Some(oneway_bps), short_fee: Some(short_fee_annual) }
    }

    pub fn from_table(table: SubperiodTable) -> Self {
        CostModel { table: Some(table), flat_bps: None, short_fee: None }
    }

    /// Replaces the dated one-way cost with a constant.
    pub fn with_flat_bps(mut self, oneway_bps: f64) -> Self {
        self.flat_bps = Some(oneway_bps);
        self
    }

    pub fn with_short_fee(mut self, short_fee_annual: f64) -> Self {
        self.short_fee = Some(short_fee_annual);
        self
    }

    /// One-way cost in basis points of traded notional.
    pub fn oneway_bps(&self, date: NaiveDate) -> f64 {
        match (self.flat_bps, &self.table) {
            (Some(bps), _) => bps,
            (None, Some(table)) => table.nearest_row(date).oneway_cost_bps,
            (None, None) => 0.0,
        }
    }

    pub fn short_fee_annual(&self, date: NaiveDate) -> f64 {
        match (self.short_fee, &self.table) {
            (Some(fee), _) => fee,
            (None, Some(table)) => table.nearest_row(date).short_fee_annual,
            (None, None) => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let bad = |v: f64| !(v >= 0.0 && v.is_finite());
        if self.flat_bps.is_some_and(bad) || self.short_fee.is_some_and(bad) {
            return Err("costs must be finite and non-negative".into());
        }
        Ok(())
    }
}
