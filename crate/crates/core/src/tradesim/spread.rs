use crate::marketdata::NormalizedPanel;
use crate::pairselect::{Method, PairCandidate};

use super::SimError;

/// Formation standard deviations at or below this are treated as zero.
const DEGENERATE_STD: f64 = 1e-12;

/// Spread of one pair over a formation + trading window, with the
/// formation-period statistics used to standardize it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadSeries {
    pub leg_a: String,
    pub leg_b: String,
    pub method: Method,
    /// Weight of leg b in the spread (1 for the distance method).
    pub hedge_ratio: f64,
    pub values: Vec<f64>,
    pub formation_days: usize,
    pub formation_mean: f64,
    /// Unbiased (n - 1) standard deviation over formation dates.
    pub formation_std: f64,
    pub degenerate: bool,
}

impl SpreadSeries {
    pub fn formation(&self) -> &[f64] {
        &self.values[..self.formation_days]
    }

    pub fn trading(&self) -> &[f64] {
        &self.values[self.formation_days..]
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.leg_a, self.leg_b)
    }
}

/// `s_t = P_a - P_b` (distance) or `s_t = P_a - α - β·P_b` (cointegration).
pub fn build_spread(pair: &PairCandidate, panel: &NormalizedPanel, method: Method) -> Result<SpreadSeries, SimError> {
    let ia = panel.ticker_index(&pair.leg_a).ok_or_else(|| SimError::UnknownTicker(pair.leg_a.clone()))?;
    let ib = panel.ticker_index(&pair.leg_b).ok_or_else(|| SimError::UnknownTicker(pair.leg_b.clone()))?;
    let (a, b) = (panel.series(ia), panel.series(ib));
    let (hedge_ratio, values): (f64, Vec<f64>) = match method {
        Method::Distance => (1.0, a.iter().zip(b).map(|(a, b)| a - b).collect()),
        Method::Cointegration => {
            let stats = pair.coint.ok_or_else(|| SimError::MissingHedgeRatio(pair.label()))?;
            let values = a.iter().zip(b).map(|(a, b)| a - stats.intercept - stats.hedge_ratio * b).collect();
            (stats.hedge_ratio, values)
        }
    };
    let f = panel.formation_days();
    if f < 2 {
        return Err(SimError::ShortFormation(f));
    }
    let formation = &values[..f];
    let mean = formation.iter().sum::<f64>() / f as f64;
    let var = formation.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (f - 1) as f64;
    let std = var.sqrt();
    Ok(SpreadSeries {
        leg_a: pair.leg_a.clone(),
        leg_b: pair.leg_b.clone(),
        method,
        hedge_ratio,
        values,
        formation_days: f,
        formation_mean: mean,
        formation_std: std,
        degenerate: !(std > DEGENERATE_STD),
    })
}

/// `z_t = (s_t - formation mean) / formation std` over trading dates.
pub fn zscore(spread: &SpreadSeries) -> Result<Vec<f64>, SimError> {
    if spread.degenerate {
        return Err(SimError::DegenerateSpread(spread.label()));
    }
    Ok(spread.trading().iter().map(|s| (s - spread.formation_mean) / spread.formation_std).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketdata::{normalize_log_prices, PeriodWindow, PriceBar, PricePanel};
    use chrono::{Duration, NaiveDate};

    fn normalized(series: &[(&str, &[f64])], formation: usize) -> NormalizedPanel {
        let start = NaiveDate::from_ymd_opt(2021, 1, 4).unwrap();
        let mut bars = Vec::new();
        for (ticker, logs) in series {
            for (t, v) in logs.iter().enumerate() {
                bars.push(PriceBar {
                    date: start + Duration::days(t as i64),
                    ticker: ticker.to_string(),
                    close: 10.0 * v.exp(),
                    volume: 1,
                });
            }
        }
        let panel = PricePanel::from_bars(bars).unwrap();
        let n = series[0].1.len();
        let window = PeriodWindow::from_index(panel.dates(), 0, formation, n - formation).unwrap();
        normalize_log_prices(&panel, &window).unwrap()
    }

    #[test]
    fn identical_legs_are_degenerate() {
        let s = [0.0, 0.1, 0.05, 0.2];
        let panel = normalized(&[("A", &s), ("B", &s)], 3);
        let pair = crate::pairselect::rank_pairs(&panel).unwrap().remove(0);
        let spread = build_spread(&pair, &panel, Method::Distance).unwrap();
        assert!(spread.values.iter().all(|&v| v == 0.0));
        assert!(spread.degenerate);
        assert!(matches!(zscore(&spread), Err(SimError::DegenerateSpread(_))));
    }

    #[test]
    fn distance_spread_arithmetic() {
        let panel = normalized(&[("A", &[0.0, 0.1, 0.2]), ("B", &[0.0, 0.0, 0.1])], 2);
        let pair = crate::pairselect::rank_pairs(&panel).unwrap().remove(0);
        let spread = build_spread(&pair, &panel, Method::Distance).unwrap();
        let expected = [0.0, 0.1, 0.1];
        for (got, want) in spread.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cointegration_needs_hedge_ratio() {
        let panel = normalized(&[("A", &[0.0, 0.1, 0.2]), ("B", &[0.0, 0.3, 0.1])], 2);
        let pair = crate::pairselect::rank_pairs(&panel).unwrap().remove(0);
        assert!(matches!(build_spread(&pair, &panel, Method::Cointegration), Err(SimError::MissingHedgeRatio(_))));
    }

    #[test]
    fn zscore_uses_formation_statistics() {
        // formation spread (-1, 1): mean 0, unbiased std sqrt(2)
        let spread = SpreadSeries {
            leg_a: "A".into(),
            leg_b: "B".into(),
            method: Method::Distance,
            hedge_ratio: 1.0,
            values: vec![-1.0, 1.0, 2.0f64.sqrt() * 2.0, 0.0],
            formation_days: 2,
            formation_mean: 0.0,
            formation_std: 2.0f64.sqrt(),
            degenerate: false,
        };
        let z = zscore(&spread).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-15);
        assert_eq!(z[1], 0.0);
    }
}
