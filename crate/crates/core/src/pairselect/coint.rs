use nalgebra::DMatrix;

use super::adf::{adf_test, default_max_lag, AdfResult};
use super::ols;
use super::SelectError;

/// Minimum series length accepted by [`engle_granger`].
pub const MIN_COINT_LEN: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct CointResult {
    pub hedge_ratio: f64,
    pub intercept: f64,
    pub residuals: Vec<f64>,
    pub adf_stat: f64,
    pub p_value: f64,
    /// `None` when the residuals vanish and no ADF regression was run.
    pub adf: Option<AdfResult>,
    /// The regression fits exactly; the spread never moves.
    pub degenerate: bool,
}

/// Two-step Engle-Granger test: OLS of `a` on `b` with an intercept, then an
/// ADF test on the residuals. `max_lag = None` uses Schwert's rule.
pub fn engle_granger(a: &[f64], b: &[f64], max_lag: Option<usize>) -> Result<CointResult, SelectError> {
    if a.len() != b.len() {
        return Err(SelectError::LengthMismatch { left: a.len(), right: b.len() });
    }
    let n = a.len();
    if n < MIN_COINT_LEN {
        return Err(SelectError::TooShort { len: n, needed: MIN_COINT_LEN });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(SelectError::NonFinite);
    }
    let (lo, hi) = b.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return Err(SelectError::DegenerateRegressor);
    }

    let design = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { b[i] });
    let fit = ols::fit(design, a)?;
    let (intercept, hedge_ratio) = (fit.coef[0], fit.coef[1]);
    let residuals: Vec<f64> = a.iter().zip(b).map(|(a, b)| a - intercept - hedge_ratio * b).collect();

    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let resid_max = residuals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if resid_max <= 1e-12 * scale {
        return Ok(CointResult {
            hedge_ratio,
            intercept,
            residuals,
            adf_stat: f64::NEG_INFINITY,
            p_value: 0.0,
            adf: None,
            degenerate: true,
        });
    }

    let lag = max_lag.unwrap_or_else(|| default_max_lag(n));
    let adf = adf_test(&residuals, lag)?;
    Ok(CointResult {
        hedge_ratio,
        intercept,
        residuals,
        adf_stat: adf.statistic,
        p_value: adf.p_value,
        adf: Some(adf),
        degenerate: false,
    })
}
