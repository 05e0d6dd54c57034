//! The outer cross-validation sweep over settings and methods.
//!
//! Per outer fold, topic models, the period imputation and every model fit
//! see training posts only. Each of those stages reports the post ids it
//! consumed to a [`LeakageAudit`].

use std::collections::BTreeSet;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{default_grid, grid_search, GridScale, GridSpec};
use super::{hierarchical_folds, row_order, HarnessError, DEFAULT_K_INNER, DEFAULT_K_OUTER};
use crate::corpus::{Corpus, PostId};
use crate::features::content::{extract_content, ContentConfig};
use crate::features::{build_full_matrix_from, FeatureError, FeatureOptions, Setting};
use crate::hashing::json_hash;
use crate::modelzoo::{fit, mae, rmse, Dataset, Method, ModelParams};
use crate::seeding::substream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalPlan {
    pub settings: Vec<Setting>,
    pub methods: Vec<Method>,
    pub k_outer: usize,
    pub k_inner: usize,
    pub rng_seed: u64,
    pub grid_scale: GridScale,
    /// Replaces the default grid for a (setting, method) pair.
    #[serde(default)]
    pub grid_overrides: Vec<(Setting, GridSpec)>,
    pub content: ContentConfig,
    pub features: FeatureOptions,
    #[serde(default)]
    pub topic_scope: TopicScope,
}

/// Which posts the topic models are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TopicScope {
    /// The training posts of each outer fold.
    #[default]
    PerFold,
    /// Every post once. Held-out captions and labels then shape the topics,
    /// and the leakage audit reports the topic stages.
    Global,
}

impl Default for EvalPlan {
    fn default() -> Self {
        EvalPlan {
            settings: Setting::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            k_outer: DEFAULT_K_OUTER,
            k_inner: DEFAULT_K_INNER,
            rng_seed: 0,
            grid_scale: GridScale::Reduced,
            grid_overrides: vec![],
            content: ContentConfig::default(),
            features: FeatureOptions::default(),
            topic_scope: TopicScope::PerFold,
        }
    }
}

impl EvalPlan {
    pub fn grid(&self, setting: Setting, method: Method) -> GridSpec {
        self.grid_overrides
            .iter()
            .find(|(s, g)| *s == setting && g.method() == method)
            .map(|(_, g)| g.clone())
            .unwrap_or_else(|| default_grid(method, setting, self.grid_scale, 0))
    }

    fn model_seed(&self, setting: Setting, method: Method, fold: usize) -> u64 {
        substream(
            self.rng_seed,
            &format!("model/{setting}/{method}/fold{fold}"),
        )
    }
}

/// Post ids consumed by one preprocessing or fitting stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageAudit {
    pub stage: String,
    pub n_posts: usize,
    pub ids_hash: String,
    /// Every consumed post is a training post of the fold.
    pub within_train: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_hash: String,
    pub test_hash: String,
    pub stages: Vec<StageAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LeakageAudit {
    pub folds: Vec<FoldAudit>,
}

impl LeakageAudit {
    pub fn passed(&self) -> bool {
        !self.folds.is_empty()
            && self
                .folds
                .iter()
                .all(|f| !f.stages.is_empty() && f.stages.iter().all(|s| s.within_train))
    }

    /// `fold/stage` for every stage that touched held-out posts.
    pub fn violations(&self) -> Vec<String> {
        self.folds
            .iter()
            .flat_map(|f| {
                f.stages
                    .iter()
                    .filter(|s| !s.within_train)
                    .map(move |s| format!("fold {}/{}", f.fold, s.stage))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub setting: Setting,
    pub method: Method,
    /// Mean over outer folds; `None` if any fold failed.
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub fold_rmse: Vec<Option<f64>>,
    pub fold_mae: Vec<Option<f64>>,
    pub chosen: Vec<Option<ModelParams>>,
    pub errors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub k_outer: usize,
    pub k_inner: usize,
    pub rng_seed: u64,
    pub settings: Vec<Setting>,
    pub methods: Vec<Method>,
    pub fold_sizes: Vec<usize>,
    pub cells: Vec<CellResult>,
    pub audit: LeakageAudit,
}

impl CvResult {
    pub fn cell(&self, setting: Setting, method: Method) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.setting == setting && c.method == method)
    }
}

fn ids_hash(ids: &[PostId]) -> String {
    let mut v = ids.to_vec();
    v.sort();
    json_hash(&v)
}

fn stage(name: &str, ids: &[PostId], train: &BTreeSet<PostId>) -> StageAudit {
    StageAudit {
        stage: name.to_string(),
        n_posts: ids.len(),
        ids_hash: ids_hash(ids),
        within_train: ids.iter().all(|id| train.contains(id)),
    }
}

struct FoldScore {
    rmse: Result<(f64, f64), String>,
    chosen: Option<ModelParams>,
}

fn score_cell(
    train: &Dataset,
    test: &Dataset,
    grid: &GridSpec,
    k_inner: usize,
    seed: u64,
) -> FoldScore {
    let choice = match grid_search(train, grid, k_inner, substream(seed, "grid")) {
        Ok(c) => c,
        Err(e) => {
            return FoldScore {
                rmse: Err(e.to_string()),
                chosen: None,
            }
        }
    };
    let params = choice.params.with_seed(seed);
    let res = fit(train, &params)
        .and_then(|m| m.predict(&test.x))
        .and_then(|p| Ok((rmse(&p, test.y())?, mae(&p, test.y())?)));
    FoldScore {
        rmse: res.map_err(|e| e.to_string()),
        chosen: Some(choice.params),
    }
}

/// Score every method under every setting with `k_outer` user-stratified
/// folds. Cell failures are recorded in the result; the sweep continues.
pub fn evaluate_grid(corpus: &Corpus, plan: &EvalPlan) -> Result<CvResult, HarnessError> {
    if plan.settings.is_empty() || plan.methods.is_empty() {
        return Err(HarnessError::Grid(
            "need at least one setting and one method".into(),
        ));
    }
    for &s in &plan.settings {
        for &m in &plan.methods {
            plan.grid(s, m).cells()?;
        }
    }
    let order = row_order(corpus);
    let groups: Vec<_> = order.iter().map(|(_, u)| *u).collect();
    let folds = hierarchical_folds(
        &groups,
        plan.k_outer,
        substream(plan.rng_seed, "folds/outer"),
    )?;
    let content_cfg = ContentConfig {
        rng_seed: substream(plan.rng_seed, "topics"),
        ..plan.content.clone()
    };
    let jobs: Vec<(Setting, Method)> = plan
        .settings
        .iter()
        .flat_map(|&s| plan.methods.iter().map(move |&m| (s, m)))
        .collect();

    let global = match plan.topic_scope {
        TopicScope::PerFold => None,
        TopicScope::Global => {
            let mut ids: Vec<(String, Vec<PostId>)> = Vec::new();
            let c = extract_content(corpus, None, &content_cfg, &mut |n, v| {
                ids.push((n.to_string(), v.to_vec()))
            })?;
            Some((c, ids))
        }
    };

    type FoldOut = (FoldAudit, Vec<FoldScore>);
    let per_fold: Vec<FoldOut> = (0..plan.k_outer)
        .into_par_iter()
        .map(|f| -> Result<FoldOut, HarnessError> {
            let test_rows = folds.test_rows(f);
            let train_rows = folds.train_rows(f);
            let train_ids: BTreeSet<PostId> =
                train_rows.iter().map(|&i| order[i].0.clone()).collect();
            let test_ids: Vec<PostId> = test_rows.iter().map(|&i| order[i].0.clone()).collect();
            let stages = Mutex::new(Vec::new());
            let mut record = |name: &str, ids: &[PostId]| {
                stages
                    .lock()
                    .expect("audit lock")
                    .push(stage(name, ids, &train_ids))
            };
            let own;
            let content = match &global {
                Some((c, ids)) => {
                    for (n, v) in ids {
                        record(n, v);
                    }
                    c
                }
                None => {
                    own = extract_content(corpus, Some(&train_ids), &content_cfg, &mut record)?;
                    &own
                }
            };
            let (full, y) = build_full_matrix_from(
                corpus,
                content,
                &plan.features,
                Some(&train_ids),
                &mut record,
            )?;
            if full.post_ids.iter().zip(&order).any(|(a, (b, _))| a != b) {
                return Err(FeatureError::Invalid(
                    "matrix rows do not follow the corpus row order".into(),
                )
                .into());
            }
            let scores: Vec<FoldScore> = jobs
                .par_iter()
                .map(|&(s, m)| {
                    let data = Dataset::new(full.for_setting(s), y.clone())
                        .expect("matrix and response agree");
                    let train = data.subset(&train_rows);
                    let test = data.subset(&test_rows);
                    stages.lock().expect("audit lock").push(stage(
                        &format!("fit/{s}/{m}"),
                        &train.x.post_ids,
                        &train_ids,
                    ));
                    score_cell(
                        &train,
                        &test,
                        &plan.grid(s, m),
                        plan.k_inner,
                        plan.model_seed(s, m, f),
                    )
                })
                .collect();
            let mut stages = stages.into_inner().expect("audit lock");
            stages.sort_by(|a, b| a.stage.cmp(&b.stage));
            let train_vec: Vec<PostId> = train_ids.iter().cloned().collect();
            let audit = FoldAudit {
                fold: f,
                n_train: train_rows.len(),
                n_test: test_rows.len(),
                train_hash: ids_hash(&train_vec),
                test_hash: ids_hash(&test_ids),
                stages,
            };
            Ok((audit, scores))
        })
        .collect::<Result<_, _>>()?;

    let mut cells = Vec::with_capacity(jobs.len());
    for (j, &(setting, method)) in jobs.iter().enumerate() {
        let mut cell = CellResult {
            setting,
            method,
            rmse: None,
            mae: None,
            fold_rmse: vec![],
            fold_mae: vec![],
            chosen: vec![],
            errors: vec![],
        };
        for (f, (_, scores)) in per_fold.iter().enumerate() {
            let sc = &scores[j];
            match &sc.rmse {
                Ok((r, a)) => {
                    cell.fold_rmse.push(Some(*r));
                    cell.fold_mae.push(Some(*a));
                }
                Err(e) => {
                    log::warn!("{setting}/{method} fold {f}: {e}");
                    cell.fold_rmse.push(None);
                    cell.fold_mae.push(None);
                    cell.errors.push(format!("fold {f}: {e}"));
                }
            }
            cell.chosen.push(sc.chosen.clone());
        }
        let mean = |v: &[Option<f64>]| {
            v.iter()
                .copied()
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / v.len() as f64)
        };
        cell.rmse = mean(&cell.fold_rmse);
        cell.mae = mean(&cell.fold_mae);
        cells.push(cell);
    }
    Ok(CvResult {
        k_outer: plan.k_outer,
        k_inner: plan.k_inner,
        rng_seed: plan.rng_seed,
        settings: plan.settings.clone(),
        methods: plan.methods.clone(),
        fold_sizes: folds.fold_sizes(),
        cells,
        audit: LeakageAudit {
            folds: per_fold.into_iter().map(|(a, _)| a).collect(),
        },
    })
}
