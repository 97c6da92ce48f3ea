use rayon::prelude::*;

use crate::marketdata::NormalizedPanel;

use super::{PairCandidate, SelectError};

/// Sum of squared deviations `Σ_t (a_t - b_t)^2`.
pub fn ssd_score(a: &[f64], b: &[f64]) -> Result<f64, SelectError> {
    if a.len() != b.len() {
        return Err(SelectError::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.len() < 2 {
        return Err(SelectError::TooShort { len: a.len(), needed: 2 });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

/// Every unordered ticker pair ranked by formation-period SSD, ascending,
/// ties broken by `(leg_a, leg_b)`.
pub fn rank_pairs(panel: &NormalizedPanel) -> Result<Vec<PairCandidate>, SelectError> {
    let n = panel.n_tickers();
    if n < 2 {
        return Err(SelectError::TooFewTickers(n));
    }
    if panel.formation_days() < 2 {
        return Err(SelectError::TooShort { len: panel.formation_days(), needed: 2 });
    }
    let mut out: Vec<PairCandidate> = (0..n - 1)
        .into_par_iter()
        .flat_map_iter(|i| {
            let a = panel.formation(i);
            (i + 1..n).map(move |j| {
                let ssd = ssd_score(a, panel.formation(j)).expect("equal formation lengths");
                PairCandidate::new(panel, i, j, ssd)
            })
        })
        .collect();
    out.sort_by(|x, y| x.ssd.total_cmp(&y.ssd).then(x.index_a.cmp(&y.index_a)).then(x.index_b.cmp(&y.index_b)));
    Ok(out)
}
