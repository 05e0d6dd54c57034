//! Exact Shapley attributions for the tree ensembles, mean-|SHAP| rankings and
//! dependence-plot data.

mod treeshap;

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Column, FeatureMatrix, Group};
use crate::modelzoo::{Learned, ModelError, TrainedModel, Tree};

/// Largest tolerated gap between `base + Σφ` and the prediction.
pub const LOCAL_ACCURACY_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ShapError {
    #[error("TreeSHAP needs a tree ensemble, got a `{0}` model")]
    NotATreeModel(&'static str),
    #[error("row has {got} values, model expects {expected}")]
    RowWidth { expected: usize, got: usize },
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("no rows to explain")]
    Empty,
    #[error(
        "local accuracy violated: base + sum(phi) = {reconstructed}, prediction = {prediction}"
    )]
    LocalAccuracy { reconstructed: f64, prediction: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Trees combined as `offset + scale · Σ tree(x)`.
#[derive(Debug, Clone)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    pub scale: f64,
    pub offset: f64,
    pub column_names: Vec<String>,
}

impl TreeEnsemble {
    pub fn new(
        trees: Vec<Tree>,
        scale: f64,
        offset: f64,
        column_names: Vec<String>,
    ) -> TreeEnsemble {
        TreeEnsemble {
            trees,
            scale,
            offset,
            column_names,
        }
    }

    /// Random forests average their trees; boosters add the shrunken sum to
    /// the base score.
    pub fn from_model(model: &TrainedModel) -> Result<TreeEnsemble, ShapError> {
        let names = model.column_names.clone();
        match &model.learned {
            Learned::Rf(f) => Ok(TreeEnsemble::new(
                f.trees.clone(),
                1.0 / f.trees.len() as f64,
                0.0,
                names,
            )),
            Learned::Xgb(b) => Ok(TreeEnsemble::new(
                b.trees.clone(),
                b.rho,
                b.base_score,
                names,
            )),
            _ => Err(ShapError::NotATreeModel(model.method().tag())),
        }
    }

    pub fn n_features(&self) -> usize {
        self.column_names.len()
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.offset + self.scale * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }

    /// Expected output when no feature is known.
    pub fn base_value(&self) -> f64 {
        self.offset + self.scale * self.trees.iter().map(treeshap::expected_value).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapAttribution {
    pub base_value: f64,
    pub phi: Vec<f64>,
}

impl ShapAttribution {
    pub fn reconstructed(&self) -> f64 {
        self.base_value + self.phi.iter().sum::<f64>()
    }
}

/// Attributions for one row; fails if they do not add up to the prediction.
pub fn tree_shap(model: &TreeEnsemble, row: &[f64]) -> Result<ShapAttribution, ShapError> {
    if row.len() != model.n_features() {
        return Err(ShapError::RowWidth {
            expected: model.n_features(),
            got: row.len(),
        });
    }
    let mut phi = vec![0.0; row.len()];
    for t in &model.trees {
        treeshap::add_tree_shap(t, row, model.scale, &mut phi);
    }
    let att = ShapAttribution {
        base_value: model.base_value(),
        phi,
    };
    let prediction = model.predict_row(row);
    let reconstructed = att.reconstructed();
    if (reconstructed - prediction).abs() > LOCAL_ACCURACY_TOL * prediction.abs().max(1.0) {
        return Err(ShapError::LocalAccuracy {
            reconstructed,
            prediction,
        });
    }
    Ok(att)
}

/// Attributions for every row of a matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapMatrix {
    pub columns: Vec<Column>,
    pub base_value: f64,
    /// Row-major, one vector per observation.
    pub phi: Vec<Vec<f64>>,
    pub values: Vec<Vec<f64>>,
}

pub fn explain(model: &TreeEnsemble, x: &FeatureMatrix) -> Result<ShapMatrix, ShapError> {
    let names = x.column_names();
    if names != model.column_names {
        let j = names
            .iter()
            .zip(&model.column_names)
            .position(|(a, b)| a != b)
            .unwrap_or(names.len().min(model.n_features()));
        return Err(ShapError::Model(ModelError::Schema(format!(
            "feature {j} differs between model ({}) and data ({})",
            model.column_names.get(j).map_or("none", String::as_str),
            names.get(j).map_or("none", String::as_str)
        ))));
    }
    let phi = x
        .rows
        .par_iter()
        .map(|r| tree_shap(model, r).map(|a| a.phi))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ShapMatrix {
        columns: x.columns.clone(),
        base_value: model.base_value(),
        phi,
        values: x.rows.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    /// (feature, mean |φ|), largest first.
    pub entries: Vec<(String, f64)>,
}

impl ImportanceRanking {
    pub fn top(&self, k: usize) -> &[(String, f64)] {
        &self.entries[..k.min(self.entries.len())]
    }

    pub fn rank_of(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|(f, _)| f == feature)
    }
}

/// Mean |φ| per feature over rows, optionally without the user dummies.
pub fn mean_abs_shap(
    shap: &ShapMatrix,
    exclude_user_dummies: bool,
) -> Result<ImportanceRanking, ShapError> {
    if shap.phi.is_empty() {
        return Err(ShapError::Empty);
    }
    let n = shap.phi.len() as f64;
    let mut entries: Vec<(String, f64)> = shap
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| !(exclude_user_dummies && c.group == Group::User))
        .map(|(j, c)| {
            (
                c.name.clone(),
                shap.phi.iter().map(|r| r[j].abs()).sum::<f64>() / n,
            )
        })
        .collect();
    // stable: ties keep column order
    entries.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ImportanceRanking { entries })
}

/// (feature value, φ) per row, ascending by value.
pub fn dependence_data(shap: &ShapMatrix, feature: &str) -> Result<Vec<(f64, f64)>, ShapError> {
    let j = shap
        .columns
        .iter()
        .position(|c| c.name == feature)
        .ok_or_else(|| ShapError::UnknownFeature(feature.to_string()))?;
    let mut pairs: Vec<(f64, f64)> = shap
        .values
        .iter()
        .zip(&shap.phi)
        .map(|(v, p)| (v[j], p[j]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs)
}

pub fn write_importance_csv(ranking: &ImportanceRanking, path: &Path) -> Result<(), ShapError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "feature,mean_abs_shap")?;
    for (f, v) in &ranking.entries {
        writeln!(w, "{f},{v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dependence_csv(
    feature: &str,
    pairs: &[(f64, f64)],
    path: &Path,
) -> Result<(), ShapError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{feature},shap")?;
    for (v, p) in pairs {
        writeln!(w, "{v},{p}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapSummary {
    pub base_value: f64,
    pub n_rows: usize,
    pub excluded_user_dummies: bool,
    pub max_local_accuracy_gap: f64,
    pub top: Vec<(String, f64)>,
}

pub fn summarize(
    model: &TreeEnsemble,
    shap: &ShapMatrix,
    ranking: &ImportanceRanking,
    excluded_user_dummies: bool,
    top: usize,
) -> ShapSummary {
    let gap = shap
        .values
        .iter()
        .zip(&shap.phi)
        .map(|(r, p)| (model.predict_row(r) - shap.base_value - p.iter().sum::<f64>()).abs())
        .fold(0.0, f64::max);
    ShapSummary {
        base_value: shap.base_value,
        n_rows: shap.phi.len(),
        excluded_user_dummies,
        max_local_accuracy_gap: gap,
        top: ranking.top(top).to_vec(),
    }
}
