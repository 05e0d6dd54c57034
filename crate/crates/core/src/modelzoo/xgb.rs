//! Gradient-boosted trees on squared error with L2 leaf penalty and a
//! minimum split gain.

use serde::{Deserialize, Serialize};

use super::forest::{row_weights, ForestParams};
use super::tree::{grow, GrowParams, Presorted, Tree};
use super::{Dataset, ModelError};
use crate::seeding::rng_for;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XgbParams {
    #[serde(flatten)]
    pub forest: ForestParams,
    /// Shrinkage applied to every tree.
    pub rho: f64,
    pub gamma_split: f64,
    pub lambda: f64,
}

impl XgbParams {
    pub fn new(forest: ForestParams, rho: f64, gamma_split: f64) -> XgbParams {
        XgbParams {
            forest: ForestParams {
                bootstrap: false,
                ..forest
            },
            rho,
            gamma_split,
            lambda: 1.0,
        }
    }

    fn check(&self) -> Result<(), ModelError> {
        self.forest.check()?;
        if !(self.rho > 0.0 && self.rho <= 1.0)
            || !(self.gamma_split >= 0.0)
            || !(self.lambda >= 0.0)
        {
            return Err(ModelError::Params(format!(
                "booster needs rho in (0, 1], gamma_split ≥ 0, lambda ≥ 0; got {}, {}, {}",
                self.rho, self.gamma_split, self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XgbModel {
    pub base_score: f64,
    pub rho: f64,
    pub trees: Vec<Tree>,
    /// Mean of ½(ŷ − y)² on the training rows after each round.
    pub train_loss: Vec<f64>,
}

impl XgbModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.base_score + self.rho * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}

fn half_mse(pred: &[f64], y: &[f64]) -> f64 {
    0.5 * pred
        .iter()
        .zip(y)
        .map(|(p, t)| (p - t).powi(2))
        .sum::<f64>()
        / y.len() as f64
}

pub fn fit_xgb(data: &Dataset, params: &XgbParams) -> Result<XgbModel, ModelError> {
    params.check()?;
    let x = &data.x.rows;
    let y = data.y();
    let sorted = Presorted::new(x);
    let grow_params = GrowParams {
        max_depth: params.forest.max_depth,
        min_split: 0.0,
        min_child: params.forest.min_node as f64,
        lambda: params.lambda,
        gamma: Some(params.gamma_split),
        col_fraction: params.forest.col_fraction,
    };
    let base_score = y.iter().sum::<f64>() / y.len() as f64;
    let mut pred = vec![base_score; y.len()];
    let mut trees = Vec::with_capacity(params.forest.n_trees);
    let mut train_loss = Vec::with_capacity(params.forest.n_trees);
    for t in 0..params.forest.n_trees {
        let mut rng = rng_for(params.forest.rng_seed, &format!("round/{t}"));
        let h = row_weights(y.len(), params.forest.row_fraction, false, &mut rng);
        let g: Vec<f64> = pred
            .iter()
            .zip(y)
            .zip(&h)
            .map(|((p, t), w)| (p - t) * w)
            .collect();
        let tree = grow(x, &sorted, &g, &h, &grow_params, &mut rng);
        for (p, r) in pred.iter_mut().zip(x) {
            *p += params.rho * tree.predict(r);
        }
        trees.push(tree);
        train_loss.push(half_mse(&pred, y));
    }
    Ok(XgbModel {
        base_score,
        rho: params.rho,
        trees,
        train_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from;
    use rand::Rng;

    fn stump(lambda: f64) -> XgbParams {
        XgbParams {
            lambda,
            ..XgbParams::new(ForestParams::new(1, 1, 1.0, 1, 1.0, 0), 1.0, 0.0)
        }
    }

    #[test]
    fn one_stump_leaf_weights() {
        let d = Dataset::from_rows(
            &["x"],
            vec![vec![0.0], vec![1.0]],
            vec![0.0, 2.0],
            vec![1, 1],
        )
        .unwrap();
        let mut p = stump(0.0);
        p.forest.min_node = 1;
        let m = fit_xgb(&d, &p).unwrap();
        // base 1; g = (1, −1), h = 1 per leaf, so weights −G/H = (−1, +1)
        let leaves: Vec<f64> = m.trees[0]
            .nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.value)
            .collect();
        assert_eq!(leaves, vec![-1.0, 1.0]);
        assert_eq!(m.predict_row(&[0.0]), 0.0);
        assert_eq!(m.predict_row(&[1.0]), 2.0);
        // with λ = 1 the weights shrink to −G/(H+1)
        let mut p1 = stump(1.0);
        p1.forest.min_node = 1;
        let m1 = fit_xgb(&d, &p1).unwrap();
        let leaves: Vec<f64> = m1.trees[0]
            .nodes
            .iter()
            .filter(|n| n.is_leaf())
            .map(|n| n.value)
            .collect();
        assert_eq!(leaves, vec![-0.5, 0.5]);
    }

    #[test]
    fn huge_penalty_returns_base_score() {
        let mut rng = rng_from(2);
        let x: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let y: Vec<f64> = x.iter().map(|r| 3.0 * r[0]).collect();
        let d = Dataset::from_rows(&["x"], x.clone(), y.clone(), vec![1; 30]).unwrap();
        let p = XgbParams {
            lambda: 1e12,
            ..XgbParams::new(ForestParams::new(20, 3, 1.0, 1, 1.0, 0), 0.5, 0.0)
        };
        let m = fit_xgb(&d, &p).unwrap();
        let base = y.iter().sum::<f64>() / 30.0;
        for r in &x {
            assert!((m.predict_row(r) - base).abs() < 1e-9);
        }
    }

    #[test]
    fn training_loss_never_increases_without_subsampling() {
        let mut rng = rng_from(3);
        let x: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| r[0] * r[1] + (2.0 * r[2]).sin() + rng.random_range(-0.3..0.3))
            .collect();
        let d = Dataset::from_rows(&["a", "b", "c", "e"], x, y, vec![1; 200]).unwrap();
        let p = XgbParams::new(ForestParams::new(60, 4, 1.0, 2, 1.0, 1), 0.3, 0.01);
        let m = fit_xgb(&d, &p).unwrap();
        for w in m.train_loss.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
        }
        assert!(m.train_loss.last().unwrap() < &m.train_loss[0]);
    }

    #[test]
    fn gamma_blocks_weak_splits() {
        let d = Dataset::from_rows(
            &["x"],
            vec![vec![0.0], vec![1.0]],
            vec![0.0, 0.2],
            vec![1, 1],
        )
        .unwrap();
        let p = XgbParams {
            lambda: 0.0,
            ..XgbParams::new(ForestParams::new(1, 3, 1.0, 1, 1.0, 0), 1.0, 1.0)
        };
        let m = fit_xgb(&d, &p).unwrap();
        assert_eq!(m.trees[0].nodes.len(), 1);
    }

    #[test]
    fn subsampled_fit_is_deterministic() {
        let mut rng = rng_from(4);
        let x: Vec<Vec<f64>> = (0..80)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] + r[1] * r[2]).collect();
        let d = Dataset::from_rows(&["a", "b", "c"], x, y, vec![1; 80]).unwrap();
        let p = XgbParams::new(ForestParams::new(30, 3, 0.6, 2, 0.6, 9), 0.1, 0.0);
        assert_eq!(fit_xgb(&d, &p).unwrap(), fit_xgb(&d, &p).unwrap());
    }
}
