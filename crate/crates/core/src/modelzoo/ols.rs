//! Least squares with intercept, solved by QR.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{rank_repair, Dataset, ModelError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    pub intercept: f64,
    /// One coefficient per input column; dropped columns carry 0.
    pub coef: Vec<f64>,
    pub dropped: Vec<String>,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
    /// Regressors used, excluding the intercept.
    pub n_regressors: usize,
}

impl OlsModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept + row.iter().zip(&self.coef).map(|(x, b)| x * b).sum::<f64>()
    }
}

/// Solve `min ‖y − Xβ‖` for a full-column-rank `x`. Fails with the offending
/// column positions when a diagonal entry of R vanishes.
pub(crate) fn qr_solve(x: DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>, Vec<usize>> {
    let p = x.ncols();
    let qr = x.qr();
    let r = qr.r();
    let scale = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let bad: Vec<usize> = (0..p)
        .filter(|&i| r[(i, i)].abs() <= 1e-10 * scale.max(1.0))
        .collect();
    if !bad.is_empty() {
        return Err(bad);
    }
    let qty = qr.q().transpose() * y;
    Ok(r.solve_upper_triangular(&qty)
        .expect("non-singular triangle"))
}

pub fn fit_ols(data: &Dataset) -> Result<OlsModel, ModelError> {
    let n = data.n();
    let all: Vec<usize> = (0..data.p()).collect();
    let (kept, dropped) = rank_repair(&data.x, &all);
    if !dropped.is_empty() {
        log::info!("least squares: dropping dependent columns {dropped:?}");
    }
    if n < kept.len() + 1 {
        return Err(ModelError::Data(format!(
            "{n} rows for {} coefficients",
            kept.len() + 1
        )));
    }
    let design = DMatrix::from_fn(n, kept.len() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            data.x.rows[i][kept[j - 1]]
        }
    });
    let y = DVector::from_column_slice(data.y());
    let beta = qr_solve(design, &y).map_err(|bad| {
        ModelError::RankDeficient(
            bad.iter()
                .map(|&j| {
                    if j == 0 {
                        "(intercept)".to_string()
                    } else {
                        data.x.columns[kept[j - 1]].name.clone()
                    }
                })
                .collect(),
        )
    })?;
    let mut coef = vec![0.0; data.p()];
    for (k, &j) in kept.iter().enumerate() {
        coef[j] = beta[k + 1];
    }
    let mut m = OlsModel {
        intercept: beta[0],
        coef,
        dropped,
        r2: 0.0,
        adj_r2: 0.0,
        n,
        n_regressors: kept.len(),
    };
    let pred: Vec<f64> = data.x.rows.iter().map(|r| m.predict_row(r)).collect();
    m.r2 = super::r_squared(&pred, data.y())?;
    let dof = n as f64 - kept.len() as f64 - 1.0;
    m.adj_r2 = if dof > 0.0 {
        1.0 - (1.0 - m.r2) * (n as f64 - 1.0) / dof
    } else {
        m.r2
    };
    Ok(m)
}
