//! Parameter grids and inner-fold grid search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{hierarchical_folds, HarnessError};
use crate::features::Setting;
use crate::modelzoo::{
    fit, mlp::default_hidden_sizes, rmse, Dataset, ForestParams, LmmSpec, Method, MlpParams,
    ModelParams, SvrParams, XgbParams,
};
use crate::seeding::substream;

/// One tuned parameter and its candidate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    /// Field name in the serialized parameters, e.g. `max_depth`.
    pub name: String,
    pub values: Vec<Value>,
}

/// Base parameters plus axes; cells are the cross product, last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub base: ModelParams,
    pub axes: Vec<GridAxis>,
}

impl GridSpec {
    pub fn single(params: ModelParams) -> GridSpec {
        GridSpec {
            base: params,
            axes: vec![],
        }
    }

    pub fn method(&self) -> Method {
        self.base.method()
    }

    pub fn with_axis<T: Serialize>(mut self, name: &str, values: &[T]) -> GridSpec {
        self.axes.push(GridAxis {
            name: name.to_string(),
            values: values
                .iter()
                .map(|v| serde_json::to_value(v).expect("serializable"))
                .collect(),
        });
        self
    }

    pub fn n_cells(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    /// Every cell in enumeration order.
    pub fn cells(&self) -> Result<Vec<ModelParams>, HarnessError> {
        let base = serde_json::to_value(&self.base).expect("serializable");
        let Value::Object(fields) = &base else {
            return Err(HarnessError::Grid(
                "parameters must serialize to an object".into(),
            ));
        };
        for a in &self.axes {
            if a.values.is_empty() {
                return Err(HarnessError::Grid(format!(
                    "axis `{}` has no values",
                    a.name
                )));
            }
            if a.name == "method" || !fields.contains_key(&a.name) {
                return Err(HarnessError::Grid(format!(
                    "`{}` is not a {} parameter",
                    a.name,
                    self.method()
                )));
            }
        }
        let mut out = Vec::with_capacity(self.n_cells());
        for cell in 0..self.n_cells() {
            let mut obj = fields.clone();
            let mut rest = cell;
            for a in self.axes.iter().rev() {
                obj.insert(a.name.clone(), a.values[rest % a.values.len()].clone());
                rest /= a.values.len();
            }
            let p: ModelParams = serde_json::from_value(Value::Object(obj)).map_err(|e| {
                HarnessError::Grid(format!("cell {cell} of the {} grid: {e}", self.method()))
            })?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Grid size preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    /// Selected values with one coarser and one finer neighbour on the main
    /// axes of each method.
    Full,
    /// The expensive knobs scaled down. One cell per method, except the
    /// booster, whose short chains get a small depth × step-size search.
    #[default]
    Reduced,
}

/// Tuned values per method and setting.
pub fn selected_params(method: Method, setting: Setting, rng_seed: u64) -> ModelParams {
    fn by_setting<T>(setting: Setting, all: T, non: T, img: T, com: T) -> T {
        match setting {
            Setting::All => all,
            Setting::NonImage => non,
            Setting::Image => img,
            Setting::Common => com,
        }
    }
    match method {
        Method::Lm => ModelParams::Lm,
        Method::Lmm => ModelParams::Lmm(LmmSpec::default()),
        Method::Svr => ModelParams::Svr(SvrParams::new(
            by_setting(setting, 85.0, 95.0, 95.0, 100.0),
            by_setting(setting, 0.2, 0.2, 0.2, 0.3),
            by_setting(setting, 0.0008, 0.0009, 0.003, 0.1),
        )),
        Method::Mlp => ModelParams::Mlp(MlpParams::new(default_hidden_sizes(setting), rng_seed)),
        Method::Rf => ModelParams::Rf(ForestParams::new(
            by_setting(setting, 500, 3000, 1000, 1000),
            40,
            by_setting(setting, 1.0, 0.6, 0.6, 0.7),
            by_setting(setting, 10, 10, 10, 15),
            by_setting(setting, 1.0, 1.0, 1.0, 0.6),
            rng_seed,
        )),
        Method::Xgb => ModelParams::Xgb(XgbParams::new(
            ForestParams::new(
                by_setting(setting, 2000, 1000, 1000, 1000),
                10,
                by_setting(setting, 0.8, 1.0, 0.9, 0.8),
                by_setting(setting, 5, 5, 5, 10),
                0.6,
                rng_seed,
            ),
            0.01,
            0.005,
        )),
    }
}

fn neighbours(v: f64) -> [f64; 3] {
    [v / 2.0, v, v * 2.0]
}

fn fractions(v: f64) -> Vec<f64> {
    let mut out: Vec<f64> = [v - 0.2, v, v + 0.2]
        .iter()
        .map(|x| (x * 10.0).round() / 10.0)
        .filter(|x| *x > 0.0 && *x <= 1.0)
        .collect();
    out.dedup();
    out
}

pub fn default_grid(method: Method, setting: Setting, scale: GridScale, rng_seed: u64) -> GridSpec {
    let base = selected_params(method, setting, rng_seed);
    match scale {
        GridScale::Full => match &base {
            ModelParams::Svr(p) => {
                let (c, g) = (neighbours(p.c), neighbours(p.gamma));
                GridSpec::single(base)
                    .with_axis("c", &c)
                    .with_axis("gamma", &g)
            }
            ModelParams::Mlp(p) => {
                let lr = neighbours(p.learning_rate);
                GridSpec::single(base).with_axis("learning_rate", &lr)
            }
            ModelParams::Rf(p) => {
                let v = fractions(p.col_fraction);
                let m = [p.min_node / 2, p.min_node, p.min_node * 2];
                GridSpec::single(base)
                    .with_axis("col_fraction", &v)
                    .with_axis("min_node", &m)
            }
            ModelParams::Xgb(p) => {
                let d = [
                    p.forest.max_depth / 2,
                    p.forest.max_depth,
                    p.forest.max_depth * 2,
                ];
                let r = neighbours(p.rho);
                GridSpec::single(base)
                    .with_axis("max_depth", &d)
                    .with_axis("rho", &r)
            }
            ModelParams::Lm | ModelParams::Lmm(_) => GridSpec::single(base),
        },
        GridScale::Reduced => match base {
            ModelParams::Xgb(mut p) => {
                // a tenth of the rounds; shallow trees with larger steps
                p.forest.n_trees /= 10;
                let rho = p.rho;
                p.rho *= 10.0;
                GridSpec::single(ModelParams::Xgb(p))
                    .with_axis("max_depth", &[2, 4])
                    .with_axis("rho", &[rho * 10.0, rho * 30.0])
            }
            other => GridSpec::single(match other {
                ModelParams::Mlp(mut p) => {
                    for h in p.hidden_sizes.iter_mut() {
                        *h = (*h / 16).max(4);
                    }
                    ModelParams::Mlp(p)
                }
                ModelParams::Rf(mut p) => {
                    p.n_trees = (p.n_trees / 10).max(50);
                    ModelParams::Rf(p)
                }
                other => other,
            }),
        },
    }
}

/// The winning cell and every cell's mean inner RMSE (`None` = failed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridChoice {
    pub index: usize,
    pub params: ModelParams,
    /// Empty when the grid has a single cell and no search ran.
    pub scores: Vec<Option<f64>>,
}

/// Pick the cell with the lowest mean RMSE over `k_inner` user-stratified
/// folds of `train`. Ties go to the earlier cell; failed cells never win.
pub fn grid_search(
    train: &Dataset,
    grid: &GridSpec,
    k_inner: usize,
    rng_seed: u64,
) -> Result<GridChoice, HarnessError> {
    let cells = grid.cells()?;
    if cells.len() == 1 {
        return Ok(GridChoice {
            index: 0,
            params: cells.into_iter().next().expect("one cell"),
            scores: vec![],
        });
    }
    let plan = hierarchical_folds(
        &train.x.group_labels,
        k_inner,
        substream(rng_seed, "inner/folds"),
    )?;
    let splits: Vec<(Dataset, Dataset)> = (0..k_inner)
        .map(|f| {
            (
                train.subset(&plan.train_rows(f)),
                train.subset(&plan.test_rows(f)),
            )
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..k_inner).map(move |f| (c, f)))
        .collect();
    let errors: Vec<Option<f64>> = jobs
        .par_iter()
        .map(|&(c, f)| {
            let (tr, va) = &splits[f];
            let params = cells[c].with_seed(substream(rng_seed, &format!("inner/{f}")));
            let res = fit(tr, &params)
                .and_then(|m| m.predict(&va.x))
                .and_then(|p| rmse(&p, va.y()));
            match res {
                Ok(e) if e.is_finite() => Some(e),
                Ok(e) => {
                    log::warn!(
                        "{} grid cell {c}, inner fold {f}: non-finite error {e}",
                        grid.method()
                    );
                    None
                }
                Err(e) => {
                    log::warn!("{} grid cell {c}, inner fold {f}: {e}", grid.method());
                    None
                }
            }
        })
        .collect();
    let scores: Vec<Option<f64>> = errors
        .chunks(k_inner)
        .map(|ch| {
            ch.iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / k_inner as f64)
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    for (c, s) in scores.iter().enumerate() {
        if let Some(s) = *s {
            if best.is_none_or(|(_, b)| s < b) {
                best = Some((c, s));
            }
        }
    }
    let (index, _) =
        best.ok_or_else(|| HarnessError::Grid(format!("every {} cell failed", grid.method())))?;
    Ok(GridChoice {
        index,
        params: cells[index].clone(),
        scores,
    })
}
