use crate::marketdata::NormalizedPanel;

use super::coint::engle_granger;
use super::ssd::rank_pairs;
use super::{CointStats, Method, PairCandidate, SelectError};

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub method: Method,
    pub n_pairs: usize,
    /// Largest p-value accepted by the cointegration filter.
    pub confidence: f64,
    /// Test every ranked pair and keep the lowest p-values instead of
    /// scanning the SSD ranking until `n_pairs` pass.
    pub exhaustive: bool,
    /// ADF lag cap; `None` applies Schwert's rule to the formation length.
    pub max_lag: Option<usize>,
}

impl SelectionConfig {
    pub fn distance(n_pairs: usize) -> Self {
        SelectionConfig { method: Method::Distance, n_pairs, confidence: 1.0, exhaustive: false, max_lag: None }
    }

    pub fn cointegration(n_pairs: usize, confidence: f64) -> Self {
        SelectionConfig { method: Method::Cointegration, n_pairs, confidence, exhaustive: false, max_lag: None }
    }

    fn validate(&self) -> Result<(), SelectError> {
        if self.n_pairs == 0 {
            return Err(SelectError::InvalidConfig("n_pairs must be at least 1".into()));
        }
        if self.method == Method::Cointegration && !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(SelectError::InvalidConfig(format!("confidence {} outside (0, 1]", self.confidence)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub pairs: Vec<PairCandidate>,
    /// Candidates ran out before `n_pairs` were found.
    pub exhausted: bool,
}

/// Runs the Engle-Granger test on one ranked candidate's formation series,
/// regressing the lexicographically smaller leg on the larger one.
pub fn test_candidate(
    panel: &NormalizedPanel,
    candidate: &PairCandidate,
    max_lag: Option<usize>,
) -> Result<PairCandidate, SelectError> {
    let fit = engle_granger(panel.formation(candidate.index_a), panel.formation(candidate.index_b), max_lag)?;
    let mut out = candidate.clone();
    out.coint = Some(CointStats {
        hedge_ratio: fit.hedge_ratio,
        intercept: fit.intercept,
        adf_stat: fit.adf_stat,
        p_value: fit.p_value,
        degenerate: fit.degenerate,
    });
    Ok(out)
}

/// Picks from already-tested candidates (in SSD order) the first `n_pairs`
/// with `p_value ≤ confidence`, or in exhaustive mode the `n_pairs` lowest
/// p-values.
pub fn pick_cointegrated(tested: &[PairCandidate], n_pairs: usize, confidence: f64, exhaustive: bool) -> Vec<PairCandidate> {
    let passes = |c: &&PairCandidate| c.coint.as_ref().is_some_and(|s| s.p_value <= confidence);
    if exhaustive {
        let mut passing: Vec<&PairCandidate> = tested.iter().filter(passes).collect();
        passing.sort_by(|x, y| {
            let (px, py) = (x.p_value().unwrap_or(1.0), y.p_value().unwrap_or(1.0));
            px.total_cmp(&py).then(x.ssd.total_cmp(&y.ssd)).then(x.index_a.cmp(&y.index_a)).then(x.index_b.cmp(&y.index_b))
        });
        passing.into_iter().take(n_pairs).cloned().collect()
    } else {
        tested.iter().filter(passes).take(n_pairs).cloned().collect()
    }
}

/// Forms pairs for one formation window.
///
/// Distance selection takes the `n_pairs` smallest SSDs. Cointegration
/// walks the SSD ranking, testing each pair and keeping those that pass,
/// until `n_pairs` are kept or the ranking runs out. Pairs whose test cannot
/// be computed (constant leg, singular regression) are skipped. A ticker
/// may appear in several pairs.
pub fn select_pairs(panel: &NormalizedPanel, config: &SelectionConfig) -> Result<Selection, SelectError> {
    config.validate()?;
    let ranked = rank_pairs(panel)?;
    match config.method {
        Method::Distance => {
            let exhausted = ranked.len() < config.n_pairs;
            Ok(Selection { pairs: ranked.into_iter().take(config.n_pairs).collect(), exhausted })
        }
        Method::Cointegration if config.exhaustive => {
            let tested: Vec<PairCandidate> =
                ranked.iter().filter_map(|c| test_candidate(panel, c, config.max_lag).ok()).collect();
            let pairs = pick_cointegrated(&tested, config.n_pairs, config.confidence, true);
            Ok(Selection { exhausted: pairs.len() < config.n_pairs, pairs })
        }
        Method::Cointegration => {
            let mut pairs = Vec::with_capacity(config.n_pairs);
            for candidate in &ranked {
                if pairs.len() == config.n_pairs {
                    break;
                }
                let Ok(tested) = test_candidate(panel, candidate, config.max_lag) else {
                    continue;
                };
                if tested.p_value().is_some_and(|p| p <= config.confidence) {
                    pairs.push(tested);
                }
            }
            Ok(Selection { exhausted: pairs.len() < config.n_pairs, pairs })
        }
    }
}
