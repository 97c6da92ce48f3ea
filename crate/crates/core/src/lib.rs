//! Pairs-trading backtest engine.
//!
//! The pipeline runs in two stages per window: pairs are formed on a
//! formation period (distance ranking or SSD-ordered Engle-Granger scan) and
//! traded on the following period with threshold rules, execution lag and
//! proportional costs. On top of that sit grid search, per-subperiod best
//! parameters, a two-year walk-forward retuning scheme and the lag × cost
//! sensitivity table. `synthgen` produces seeded universes with planted
//! cointegrated pairs for verification.

pub mod marketdata;
pub mod pairselect;
pub mod tradesim;
pub mod metrics;
pub mod sweep;
pub mod synthgen;
pub mod cli;
