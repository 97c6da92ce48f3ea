//! Householder-QR least squares used by the cointegration regressions.

use nalgebra::{DMatrix, DVector};

use super::SelectError;

/// Relative pivot size below which the design is treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub(crate) struct OlsFit {
    pub coef: Vec<f64>,
    pub std_err: Vec<f64>,
    #[allow(dead_code)]
    pub ssr: f64,
    pub nobs: usize,
}

impl OlsFit {
    pub fn t_value(&self, j: usize) -> f64 {
        self.coef[j] / self.std_err[j]
    }
}

fn check_rank(r: &DMatrix<f64>) -> Result<(), SelectError> {
    let k = r.ncols();
    let scale = (0..k).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if !(scale > 0.0) || (0..k).any(|i| r[(i, i)].abs() <= RANK_TOL * scale) {
        return Err(SelectError::NumericalSingularity);
    }
    Ok(())
}

/// Ordinary least squares of `y` on the columns of `x`.
pub(crate) fn fit(x: DMatrix<f64>, y: &[f64]) -> Result<OlsFit, SelectError> {
    let (n, k) = x.shape();
    if n <= k || y.len() != n {
        return Err(SelectError::NumericalSingularity);
    }
    let qr = x.qr();
    let r = qr.r();
    check_rank(&r)?;
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let head = qty.rows(0, k).into_owned();
    let coef = r.solve_upper_triangular(&head).ok_or(SelectError::NumericalSingularity)?;
    let ssr: f64 = qty.rows(k, n - k).iter().map(|v| v * v).sum();

    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or(SelectError::NumericalSingularity)?;
    let sigma2 = ssr / (n - k) as f64;
    let std_err = (0..k)
        .map(|j| (sigma2 * r_inv.row(j).iter().map(|v| v * v).sum::<f64>()).sqrt())
        .collect();
    Ok(OlsFit { coef: coef.iter().copied().collect(), std_err, ssr, nobs: n })
}

/// Residual sums of squares for the nested designs `x[:, ..k]`, k = 1..=ncols,
/// all on the same sample. Entry `k - 1` belongs to the first `k` columns.
pub(crate) fn nested_ssr(x: DMatrix<f64>, y: &[f64]) -> Result<Vec<f64>, SelectError> {
    let (n, k) = x.shape();
    if n <= k || y.len() != n {
        return Err(SelectError::NumericalSingularity);
    }
    let qr = x.qr();
    check_rank(&qr.r())?;
    let mut qty = DVector::from_column_slice(y);
    qr.q_tr_mul(&mut qty);
    let mut tail: f64 = qty.rows(k, n - k).iter().map(|v| v * v).sum();
    let mut out = vec![0.0; k];
    for j in (0..k).rev() {
        out[j] = tail;
        tail += qty[j] * qty[j];
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = xs.iter().map(|x| 1.5 + 3.0 * x).collect();
        let design = DMatrix::from_fn(20, 2, |i, j| if j == 0 { 1.0 } else { xs[i] });
        let f = fit(design, &y).unwrap();
        assert!((f.coef[0] - 1.5).abs() < 1e-12);
        assert!((f.coef[1] - 3.0).abs() < 1e-12);
        assert!(f.ssr < 1e-20);
    }

    #[test]
    fn nested_matches_separate_fits() {
        let n = 50;
        let cols: Vec<Vec<f64>> = (0..4)
            .map(|j| (0..n).map(|i| ((i * (j + 3)) as f64 * 0.37).sin() + j as f64 * 0.1).collect())
            .collect();
        let y: Vec<f64> = (0..n).map(|i| (i as f64 * 0.11).cos() + cols[1][i]).collect();
        let full = DMatrix::from_fn(n, 4, |i, j| cols[j][i]);
        let nested = nested_ssr(full, &y).unwrap();
        for k in 1..=4 {
            let sub = DMatrix::from_fn(n, k, |i, j| cols[j][i]);
            let f = fit(sub, &y).unwrap();
            assert!((f.ssr - nested[k - 1]).abs() < 1e-10 * (1.0 + f.ssr), "k={k}");
        }
    }

    #[test]
    fn collinear_design_is_singular() {
        let design = DMatrix::from_fn(10, 2, |i, _| i as f64);
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(matches!(fit(design, &y), Err(SelectError::NumericalSingularity)));
    }
}
