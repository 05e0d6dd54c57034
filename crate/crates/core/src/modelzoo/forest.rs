//! Random forest regression.
//!
//! Randomness is keyed on the seed and the tree index, so the fit depends on
//! the order of the training rows: the same rows in the same order give the
//! same forest, a permuted copy generally does not.

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, GrowParams, Presorted, Tree};
use super::{Dataset, ModelError};
use crate::seeding::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Fraction of covariates drawn at each split.
    pub col_fraction: f64,
    /// Minimum node size (forest) or child hessian mass (booster).
    pub min_node: usize,
    /// Fraction of rows drawn per tree.
    pub row_fraction: f64,
    /// Draw rows with replacement (forest only).
    #[serde(default = "yes")]
    pub bootstrap: bool,
    pub rng_seed: u64,
}

fn yes() -> bool {
    true
}

impl ForestParams {
    pub fn new(
        n_trees: usize,
        max_depth: usize,
        col_fraction: f64,
        min_node: usize,
        row_fraction: f64,
        rng_seed: u64,
    ) -> ForestParams {
        ForestParams {
            n_trees,
            max_depth,
            col_fraction,
            min_node,
            row_fraction,
            bootstrap: true,
            rng_seed,
        }
    }

    pub(crate) fn check(&self) -> Result<(), ModelError> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if self.n_trees == 0
            || self.max_depth == 0
            || self.min_node == 0
            || !frac(self.col_fraction)
            || !frac(self.row_fraction)
        {
            return Err(ModelError::Params(format!(
                "tree ensemble needs B ≥ 1, d ≥ 1, m ≥ 1 and fractions in (0, 1]; got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

/// Per-row draw counts for one tree.
pub(crate) fn row_weights(
    n: usize,
    fraction: f64,
    replace: bool,
    rng: &mut crate::seeding::Rng,
) -> Vec<f64> {
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut w = vec![0.0; n];
    if replace {
        for _ in 0..k {
            w[rng.random_range(0..n)] += 1.0;
        }
    } else if k == n {
        w.fill(1.0);
    } else {
        for i in sample(rng, n, k) {
            w[i] = 1.0;
        }
    }
    w
}

pub fn fit_rf(data: &Dataset, params: &ForestParams) -> Result<ForestModel, ModelError> {
    params.check()?;
    let x = &data.x.rows;
    let sorted = Presorted::new(x);
    let grow_params = GrowParams {
        max_depth: params.max_depth,
        min_split: params.min_node as f64,
        min_child: 0.0,
        lambda: 0.0,
        gamma: None,
        col_fraction: params.col_fraction,
    };
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(params.rng_seed, &format!("tree/{b}"));
            let w = row_weights(data.n(), params.row_fraction, params.bootstrap, &mut rng);
            let g: Vec<f64> = data.y().iter().zip(&w).map(|(y, c)| -y * c).collect();
            grow(x, &sorted, &g, &w, &grow_params, &mut rng)
        })
        .collect();
    Ok(ForestModel { trees })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;

    fn replication(seed: u64) -> ForestParams {
        ForestParams {
            bootstrap: false,
            ..ForestParams::new(1, usize::MAX, 1.0, 1, 1.0, seed)
        }
    }

    /// Plain recursive CART: exhaustive midpoint splits minimising child SSE.
    fn cart(rows: &[usize], x: &[Vec<f64>], y: &[f64], out: &mut Vec<(Vec<usize>, f64)>) {
        let mean = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64;
        let sse = |idx: &[usize]| {
            let m = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
            idx.iter().map(|&i| (y[i] - m).powi(2)).sum::<f64>()
        };
        let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
        if sse(rows) > 0.0 {
            for f in 0..x[0].len() {
                let mut vals: Vec<f64> = rows.iter().map(|&i| x[i][f]).collect();
                vals.sort_by(f64::total_cmp);
                vals.dedup();
                for w in vals.windows(2) {
                    let t = w[0] + (w[1] - w[0]) / 2.0;
                    let (l, r): (Vec<usize>, Vec<usize>) = rows.iter().partition(|&&i| x[i][f] < t);
                    let s = sse(&l) + sse(&r);
                    if best.as_ref().is_none_or(|b| s < b.0) {
                        best = Some((s, l, r));
                    }
                }
            }
        }
        match best {
            Some((_, l, r)) => {
                cart(&l, x, y, out);
                cart(&r, x, y, out);
            }
            None => out.push((rows.to_vec(), mean)),
        }
    }

    #[test]
    fn single_tree_equals_cart() {
        let mut rng = rng_from(5);
        let x: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                vec![
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                    rng.random_range(0.0..1.0),
                ]
            })
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| (3.0 * r[0]).sin() + r[1] * r[2] + rng.random_range(-0.1..0.1))
            .collect();
        let d = Dataset::from_rows(&["a", "b", "c"], x.clone(), y.clone(), vec![1; 40]).unwrap();
        let m = fit_rf(&d, &replication(1)).unwrap();
        let mut leaves = Vec::new();
        cart(&(0..40).collect::<Vec<_>>(), &x, &y, &mut leaves);
        assert_eq!(m.trees[0].n_leaves(), leaves.len());
        for (rows, value) in leaves {
            for i in rows {
                assert_eq!(m.predict_row(&x[i]), value);
            }
        }
    }

    #[test]
    fn constant_target() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let d = Dataset::from_rows(&["a", "b"], x.clone(), vec![1.25; 20], vec![1; 20]).unwrap();
        let m = fit_rf(&d, &ForestParams::new(10, 5, 0.5, 1, 1.0, 2)).unwrap();
        for r in &x {
            assert_eq!(m.predict_row(r), 1.25);
        }
    }

    #[test]
    fn xor_training_error() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 2) as f64, (i / 2 % 2) as f64])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| if r[0] != r[1] { 1.0 } else { 0.0 })
            .collect();
        let d = Dataset::from_rows(&["a", "b"], x.clone(), y.clone(), vec![1; 40]).unwrap();
        let rmse_at = |depth| {
            let m = fit_rf(
                &d,
                &ForestParams {
                    max_depth: depth,
                    ..replication(3)
                },
            )
            .unwrap();
            let pred: Vec<f64> = x.iter().map(|r| m.predict_row(r)).collect();
            crate::modelzoo::rmse(&pred, &y).unwrap()
        };
        assert!(rmse_at(2) < 0.05);
        assert!((rmse_at(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn order_seeded_contract() {
        let mut rng = rng_from(8);
        let x: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| r[0] - r[1] + rng.random_range(-0.2..0.2))
            .collect();
        let d = Dataset::from_rows(&["a", "b"], x.clone(), y.clone(), vec![1; 60]).unwrap();
        let p = ForestParams::new(20, 6, 0.5, 2, 1.0, 4);
        assert_eq!(fit_rf(&d, &p).unwrap(), fit_rf(&d, &p).unwrap());
        // reversed rows draw different bootstrap samples
        let idx: Vec<usize> = (0..60).rev().collect();
        let rev = d.subset(&idx);
        let (a, b) = (fit_rf(&d, &p).unwrap(), fit_rf(&rev, &p).unwrap());
        assert!(x.iter().any(|r| a.predict_row(r) != b.predict_row(r)));
        // without resampling or column draws the fit ignores row order
        let det = ForestParams {
            bootstrap: false,
            col_fraction: 1.0,
            ..p
        };
        let (a, b) = (fit_rf(&d, &det).unwrap(), fit_rf(&rev, &det).unwrap());
        for r in &x {
            assert!((a.predict_row(r) - b.predict_row(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn parameters_are_validated() {
        let d = Dataset::from_rows(
            &["a"],
            vec![vec![0.0], vec![1.0]],
            vec![0.0, 1.0],
            vec![1, 1],
        )
        .unwrap();
        assert!(fit_rf(&d, &ForestParams::new(0, 3, 1.0, 1, 1.0, 0)).is_err());
        assert!(fit_rf(&d, &ForestParams::new(1, 3, 1.5, 1, 1.0, 0)).is_err());
        assert!(fit_rf(&d, &ForestParams::new(1, 3, 1.0, 1, 0.0, 0)).is_err());
    }
}
