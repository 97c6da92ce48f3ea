use nalgebra::DMatrix;

use super::mackinnon::AdfNull;
use super::ols;
use super::SelectError;

/// Outcome of an augmented Dickey-Fuller test.
#[derive(Debug, Clone, PartialEq)]
pub struct AdfResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Lagged differences kept after AIC selection.
    pub used_lag: usize,
    /// Rows in the final test regression.
    pub nobs: usize,
    /// Critical values at 1%, 5%, 10%.
    pub critical_values: [f64; 3],
}

/// Schwert's rule `floor(12 * (T / 100)^(1/4))`, capped so the largest
/// candidate regression keeps positive residual degrees of freedom.
pub fn default_max_lag(len: usize) -> usize {
    let schwert = (12.0 * (len as f64 / 100.0).powf(0.25)).floor() as usize;
    schwert.min((len / 2).saturating_sub(2)).min(len.saturating_sub(10))
}

/// ADF test on cointegration residuals: no deterministic terms in the test
/// regression, p-values from the two-variable Engle-Granger surface.
pub fn adf_test(series: &[f64], max_lag: usize) -> Result<AdfResult, SelectError> {
    adf_test_with(series, max_lag, AdfNull::EngleGranger)
}

/// Regresses `Δx_t` on `x_{t-1}` and `Δx_{t-1..t-p}` with no constant, picks
/// `p ≤ max_lag` by minimum AIC on a common sample, refits with `p` on the
/// longest available sample and reports the t-statistic on `x_{t-1}`.
pub fn adf_test_with(series: &[f64], max_lag: usize, null: AdfNull) -> Result<AdfResult, SelectError> {
    let len = series.len();
    if len < max_lag + 10 || len < 2 * max_lag + 4 {
        return Err(SelectError::InsufficientLength { len, needed: (max_lag + 10).max(2 * max_lag + 4) });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(SelectError::NonFinite);
    }
    let (min, max) = series.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if min == max {
        return Err(SelectError::ConstantSeries);
    }
    let diff: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();

    // Lag selection on the sample shared by every candidate order.
    let (design, target) = adf_design(series, &diff, max_lag, max_lag);
    let nobs = target.len();
    let ssr = ols::nested_ssr(design, &target)?;
    let mut best = (f64::INFINITY, 0usize);
    for (lag, &ssr) in ssr.iter().enumerate() {
        let k = lag + 1;
        let aic = nobs as f64 * ((2.0 * std::f64::consts::PI).ln() + (ssr / nobs as f64).ln() + 1.0) + 2.0 * k as f64;
        if aic < best.0 {
            best = (aic, lag);
        }
    }
    let used_lag = best.1;

    let (design, target) = adf_design(series, &diff, used_lag, used_lag);
    let fit = ols::fit(design, &target)?;
    let statistic = fit.t_value(0);
    let crit_nobs = match null {
        AdfNull::EngleGranger => len - 1,
        AdfNull::UnitRoot => fit.nobs,
    };
    Ok(AdfResult {
        statistic,
        p_value: null.p_value(statistic),
        used_lag,
        nobs: fit.nobs,
        critical_values: null.critical_values(crit_nobs),
    })
}

/// Design `[x_{t-1}, Δx_{t-1}, …, Δx_{t-lags}]` and target `Δx_t`, starting
/// after `trim` initial differences.
fn adf_design(series: &[f64], diff: &[f64], trim: usize, lags: usize) -> (DMatrix<f64>, Vec<f64>) {
    let rows = diff.len() - trim;
    let design = DMatrix::from_fn(rows, lags + 1, |r, c| {
        let i = r + trim;
        if c == 0 {
            series[i]
        } else {
            diff[i - c]
        }
    });
    (design, diff[trim..].to_vec())
}
