//! Six predictors behind one train/predict contract, plus error metrics.

pub mod forest;
pub mod lmm;
pub mod mlp;
pub mod ols;
pub mod svr;
pub mod tree;
pub mod xgb;

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::UserId;
use crate::features::{Column, FeatureMatrix, Group, Kind, ResponseVector};

pub use forest::{fit_rf, ForestModel, ForestParams};
pub use lmm::{fit_lmm, LmmModel, LmmSpec};
pub use mlp::{fit_mlp, MlpModel, MlpParams};
pub use ols::{fit_ols, OlsModel};
pub use svr::{fit_svr, SvrModel, SvrParams};
pub use tree::{Node, Tree};
pub use xgb::{fit_xgb, XgbModel, XgbParams};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("design matrix is rank deficient; dependent columns: {0:?}")]
    RankDeficient(Vec<String>),
    #[error("{method} did not converge after {iterations} iterations ({detail})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        detail: String,
    },
    #[error("loss became non-finite at epoch {0}")]
    NonFinite(usize),
    #[error("feature schema mismatch: {0}")]
    Schema(String),
    #[error("model file: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub x: FeatureMatrix,
    pub y: ResponseVector,
}

impl Dataset {
    pub fn new(x: FeatureMatrix, y: ResponseVector) -> Result<Dataset, ModelError> {
        if x.n_rows() != y.values.len() {
            return Err(ModelError::Data(format!(
                "{} rows but {} responses",
                x.n_rows(),
                y.values.len()
            )));
        }
        if x.n_rows() == 0 {
            return Err(ModelError::Data("no rows".into()));
        }
        if y.values.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::Data("non-finite response".into()));
        }
        Ok(Dataset { x, y })
    }

    /// Plain numeric data. Columns holding only 0/1 are marked binary; all
    /// columns count as non-image covariates.
    pub fn from_rows(
        names: &[&str],
        rows: Vec<Vec<f64>>,
        y: Vec<f64>,
        groups: Vec<UserId>,
    ) -> Result<Dataset, ModelError> {
        let columns = names
            .iter()
            .enumerate()
            .map(|(j, n)| Column {
                name: n.to_string(),
                group: Group::NonImage,
                kind: if rows.iter().all(|r| r[j] == 0.0 || r[j] == 1.0) {
                    Kind::Binary
                } else {
                    Kind::Continuous
                },
                one_hot: None,
            })
            .collect();
        let ids = (0..rows.len()).map(|i| format!("r{i}")).collect();
        let x = FeatureMatrix {
            columns,
            rows,
            post_ids: ids,
            group_labels: groups,
        };
        x.check().map_err(|e| ModelError::Data(e.to_string()))?;
        Dataset::new(x, ResponseVector { values: y })
    }

    pub fn n(&self) -> usize {
        self.x.n_rows()
    }

    pub fn p(&self) -> usize {
        self.x.n_cols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y.values
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(idx),
            y: ResponseVector {
                values: idx.iter().map(|&i| self.y.values[i]).collect(),
            },
        }
    }
}

/// Zero-mean, unit-variance scaling of continuous columns. Binary columns
/// and constant columns pass through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &FeatureMatrix) -> Standardizer {
        let n = x.n_rows() as f64;
        let mut mean = vec![0.0; x.n_cols()];
        let mut sd = vec![1.0; x.n_cols()];
        for (j, c) in x.columns.iter().enumerate() {
            if c.kind == Kind::Binary {
                continue;
            }
            let m = x.rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let v = x.rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / n;
            mean[j] = m;
            sd[j] = if v > 0.0 { v.sqrt() } else { 1.0 };
        }
        Standardizer { mean, sd }
    }

    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }
}

pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64, ModelError> {
    check_lengths(pred, actual)?;
    let s: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok((s / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64, ModelError> {
    check_lengths(pred, actual)?;
    let s: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum();
    Ok(s / pred.len() as f64)
}

/// Coefficient of determination; 0 when `actual` is constant.
pub fn r_squared(pred: &[f64], actual: &[f64]) -> Result<f64, ModelError> {
    check_lengths(pred, actual)?;
    let m = actual.iter().sum::<f64>() / actual.len() as f64;
    let sst: f64 = actual.iter().map(|a| (a - m).powi(2)).sum();
    let sse: f64 = pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum();
    Ok(if sst > 0.0 { 1.0 - sse / sst } else { 0.0 })
}

fn check_lengths(pred: &[f64], actual: &[f64]) -> Result<(), ModelError> {
    if pred.len() != actual.len() {
        return Err(ModelError::Data(format!(
            "length mismatch: {} vs {}",
            pred.len(),
            actual.len()
        )));
    }
    if pred.is_empty() {
        return Err(ModelError::Data("empty input".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lm,
    Lmm,
    Svr,
    Mlp,
    Rf,
    Xgb,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Lm,
        Method::Lmm,
        Method::Svr,
        Method::Mlp,
        Method::Rf,
        Method::Xgb,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Lm => "lm",
            Method::Lmm => "lmm",
            Method::Svr => "svr",
            Method::Mlp => "mlp",
            Method::Rf => "rf",
            Method::Xgb => "xgb",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| ModelError::Params(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum ModelParams {
    Lm,
    Lmm(LmmSpec),
    Svr(SvrParams),
    Mlp(MlpParams),
    Rf(ForestParams),
    Xgb(XgbParams),
}

impl ModelParams {
    pub fn method(&self) -> Method {
        match self {
            ModelParams::Lm => Method::Lm,
            ModelParams::Lmm(_) => Method::Lmm,
            ModelParams::Svr(_) => Method::Svr,
            ModelParams::Mlp(_) => Method::Mlp,
            ModelParams::Rf(_) => Method::Rf,
            ModelParams::Xgb(_) => Method::Xgb,
        }
    }

    /// Replace the random seed where the method has one.
    pub fn with_seed(&self, seed: u64) -> ModelParams {
        let mut p = self.clone();
        match &mut p {
            ModelParams::Mlp(m) => m.rng_seed = seed,
            ModelParams::Rf(f) => f.rng_seed = seed,
            ModelParams::Xgb(x) => x.forest.rng_seed = seed,
            _ => {}
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Learned {
    Lm(OlsModel),
    Lmm(LmmModel),
    Svr(SvrModel),
    Mlp(MlpModel),
    Rf(ForestModel),
    Xgb(XgbModel),
}

/// A fitted predictor with the schema it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub params: ModelParams,
    pub column_names: Vec<String>,
    pub schema_hash: String,
    pub learned: Learned,
}

impl TrainedModel {
    pub fn method(&self) -> Method {
        self.params.method()
    }

    pub fn check_schema(&self, x: &FeatureMatrix) -> Result<(), ModelError> {
        if x.schema_hash() != self.schema_hash {
            let got = x.column_names();
            let first = self
                .column_names
                .iter()
                .zip(&got)
                .position(|(a, b)| a != b)
                .map(|j| {
                    format!(
                        "column {j}: expected `{}`, got `{}`",
                        self.column_names[j], got[j]
                    )
                })
                .unwrap_or_else(|| {
                    format!(
                        "expected {} columns, got {}",
                        self.column_names.len(),
                        got.len()
                    )
                });
            return Err(ModelError::Schema(first));
        }
        Ok(())
    }

    /// Prediction for one row; `group` matters only for the mixed model.
    pub fn predict_row(&self, row: &[f64], group: UserId) -> f64 {
        match &self.learned {
            Learned::Lm(m) => m.predict_row(row),
            Learned::Lmm(m) => m.predict_row(row, group),
            Learned::Svr(m) => m.predict_row(row),
            Learned::Mlp(m) => m.predict_row(row),
            Learned::Rf(m) => m.predict_row(row),
            Learned::Xgb(m) => m.predict_row(row),
        }
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>, ModelError> {
        self.check_schema(x)?;
        Ok(x.rows
            .iter()
            .zip(&x.group_labels)
            .map(|(r, &g)| self.predict_row(r, g))
            .collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<TrainedModel, ModelError> {
        let m: TrainedModel = serde_json::from_str(s).map_err(|e| ModelError::Io(e.to_string()))?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(ModelError::Io(format!(
                "unsupported model format version {}",
                m.version
            )));
        }
        Ok(m)
    }
}

/// Train the method named by `params`.
pub fn fit(data: &Dataset, params: &ModelParams) -> Result<TrainedModel, ModelError> {
    let learned = match params {
        ModelParams::Lm => Learned::Lm(fit_ols(data)?),
        ModelParams::Lmm(s) => Learned::Lmm(fit_lmm(data, s)?),
        ModelParams::Svr(s) => Learned::Svr(fit_svr(data, s)?),
        ModelParams::Mlp(s) => Learned::Mlp(fit_mlp(data, s)?),
        ModelParams::Rf(s) => Learned::Rf(fit_rf(data, s)?),
        ModelParams::Xgb(s) => Learned::Xgb(fit_xgb(data, s)?),
    };
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        params: params.clone(),
        column_names: data.x.column_names(),
        schema_hash: data.x.schema_hash(),
        learned,
    })
}

/// Column indices to keep for a linear fit: constant columns and exact
/// duplicates go, and each one-hot family that covers every row loses its
/// first level (it is collinear with the intercept). Returns kept indices and
/// the names of dropped columns.
pub(crate) fn rank_repair(x: &FeatureMatrix, candidates: &[usize]) -> (Vec<usize>, Vec<String>) {
    let mut kept: Vec<usize> = Vec::new();
    let mut dropped = Vec::new();
    let mut families: std::collections::BTreeMap<&str, Vec<usize>> = Default::default();
    for &j in candidates {
        if let Some(f) = &x.columns[j].one_hot {
            families.entry(f.as_str()).or_default().push(j);
        }
    }
    let mut reference: std::collections::BTreeSet<usize> = Default::default();
    for cols in families.values() {
        let full = x
            .rows
            .iter()
            .all(|r| (cols.iter().map(|&j| r[j]).sum::<f64>() - 1.0).abs() < 1e-12);
        if full {
            // first non-constant level becomes the reference
            if let Some(&j) = cols.iter().find(|&&j| !is_constant(x, j)) {
                reference.insert(j);
            }
        }
    }
    for &j in candidates {
        let name = &x.columns[j].name;
        if is_constant(x, j) || reference.contains(&j) || kept.iter().any(|&k| same_column(x, j, k))
        {
            dropped.push(name.clone());
        } else {
            kept.push(j);
        }
    }
    (kept, dropped)
}

fn is_constant(x: &FeatureMatrix, j: usize) -> bool {
    let first = x.rows[0][j];
    x.rows.iter().all(|r| r[j] == first)
}

fn same_column(x: &FeatureMatrix, a: usize, b: usize) -> bool {
    x.rows.iter().all(|r| r[a] == r[b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn metric_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        let (p, a) = ([3.0, -4.0], [0.0, 0.0]);
        assert!((rmse(&p, &a).unwrap() - 12.5f64.sqrt()).abs() < 1e-12);
        assert!((rmse(&p, &a).unwrap() - 3.5355).abs() < 1e-4);
        assert_eq!(mae(&p, &a).unwrap(), 3.5);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    proptest! {
        #[test]
        fn rmse_dominates_mae(v in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 1..40)) {
            let (p, a): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert!(rmse(&p, &a).unwrap() >= mae(&p, &a).unwrap() - 1e-12);
        }
    }

    #[test]
    fn method_tags_parse() {
        for m in Method::ALL {
            assert_eq!(m.tag().parse::<Method>().unwrap(), m);
        }
        assert!("knn".parse::<Method>().is_err());
    }

    #[test]
    fn standardizer_skips_binary_and_constant() {
        let d = Dataset::from_rows(
            &["a", "b", "c"],
            vec![
                vec![1.0, 0.0, 7.0],
                vec![3.0, 1.0, 7.0],
                vec![5.0, 1.0, 7.0],
            ],
            vec![0.0; 3],
            vec![1; 3],
        )
        .unwrap();
        let s = Standardizer::fit(&d.x);
        assert_eq!(s.mean, vec![3.0, 0.0, 7.0]);
        assert_eq!(s.sd[1], 1.0);
        assert_eq!(s.sd[2], 1.0);
        let z = s.apply(&[5.0, 1.0, 7.0]);
        assert!((z[0] - 2.0 / (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert_eq!(&z[1..], &[1.0, 0.0]);
    }

    #[test]
    fn rank_repair_drops_constants_duplicates_and_references() {
        let mut d = Dataset::from_rows(
            &["h0", "h1", "k", "dup", "x"],
            vec![
                vec![1.0, 0.0, 2.0, 0.5, 0.5],
                vec![0.0, 1.0, 2.0, 1.5, 1.5],
                vec![1.0, 0.0, 2.0, 2.0, 2.0],
            ],
            vec![0.0; 3],
            vec![1; 3],
        )
        .unwrap();
        d.x.columns[0].one_hot = Some("h".into());
        d.x.columns[1].one_hot = Some("h".into());
        let (kept, dropped) = rank_repair(&d.x, &[0, 1, 2, 3, 4]);
        assert_eq!(kept, vec![1, 3]);
        assert_eq!(dropped, vec!["h0", "k", "x"]);
    }

    #[test]
    fn model_round_trips_and_checks_schema() {
        let d = Dataset::from_rows(
            &["x"],
            (0..5).map(|i| vec![i as f64]).collect(),
            (0..5).map(|i| 2.0 * i as f64).collect(),
            vec![1; 5],
        )
        .unwrap();
        let m = fit(&d, &ModelParams::Lm).unwrap();
        let back = TrainedModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let other = Dataset::from_rows(&["z"], vec![vec![1.0]], vec![0.0], vec![1]).unwrap();
        assert!(matches!(m.predict(&other.x), Err(ModelError::Schema(_))));
    }
}
