//! Post-popularity prediction pipeline.
//!
//! The crate turns raw post metadata plus cached vision-API annotations into an
//! interpretable post-level design matrix, fits a zoo of six predictors under
//! user-stratified cross-validation, and explains the tree ensembles with exact
//! TreeSHAP attributions.
//!
//! Module map:
//!
//! - [`corpus`]: users, posts, loading/validation and the planted synthetic generator
//! - [`vision`]: cached label/color annotations, label filtering, representative color
//! - [`colorlab`]: Munsell ten-hue and HSV eight-class color coding
//! - [`topiclab`]: seeded LDA by collapsed Gibbs sampling plus topic diagnostics
//! - [`features`]: response transform, time features and the four covariate settings
//! - [`modelzoo`]: OLS, linear mixed model, kernel SVR, MLP, random forest, boosted trees
//! - [`harness`]: hierarchical folds, inner grid search and the setting × method sweep
//! - [`shapxai`]: TreeSHAP, mean-|SHAP| rankings and dependence data

pub mod colorlab;
pub mod corpus;
pub mod features;
pub mod harness;
pub mod hashing;
pub mod modelzoo;
pub mod seeding;
pub mod shapxai;
pub mod topiclab;
pub mod vision;
