//! User-stratified cross-validation, inner grid search, the setting × method
//! sweep and the nested preliminary regressions.

pub mod evaluate;
pub mod grid;
pub mod prelim;
pub mod report;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, PostId, UserId};
use crate::features::FeatureError;
use crate::modelzoo::ModelError;
use crate::seeding::rng_for;

pub use evaluate::{
    evaluate_grid, CellResult, CvResult, EvalPlan, FoldAudit, LeakageAudit, StageAudit, TopicScope,
};
pub use grid::{
    default_grid, grid_search, selected_params, GridAxis, GridChoice, GridScale, GridSpec,
};
pub use prelim::{nested_regressions, preliminary_regressions, RegressionSummary};
pub use report::{
    error_table, hash_path, write_regressions, write_report, ErrorTable, ManifestEntry, RunManifest,
};

pub const DEFAULT_K_OUTER: usize = 6;
pub const DEFAULT_K_INNER: usize = 5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("user {user} has {posts} posts, fewer than the {k} folds requested")]
    UndersizedUser {
        user: UserId,
        posts: usize,
        k: usize,
    },
    #[error("fold count must be at least 1")]
    NoFolds,
    #[error("grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Io(String),
}

/// Fold index per row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub rng_seed: u64,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &f in &self.assignments {
            s[f] += 1;
        }
        s
    }
}

/// Shuffle each user's rows and deal them round-robin into `k` folds.
///
/// `groups[i]` is the user of row `i`. Users are visited in id order, each
/// with its own named random stream.
pub fn hierarchical_folds(
    groups: &[UserId],
    k: usize,
    rng_seed: u64,
) -> Result<FoldPlan, HarnessError> {
    if k == 0 {
        return Err(HarnessError::NoFolds);
    }
    let mut by_user: BTreeMap<UserId, Vec<usize>> = BTreeMap::new();
    for (i, &g) in groups.iter().enumerate() {
        by_user.entry(g).or_default().push(i);
    }
    let mut assignments = vec![0; groups.len()];
    for (&user, rows) in &mut by_user {
        if rows.len() < k {
            return Err(HarnessError::UndersizedUser {
                user,
                posts: rows.len(),
                k,
            });
        }
        rows.shuffle(&mut rng_for(rng_seed, &format!("folds/user/{user}")));
        for (j, &r) in rows.iter().enumerate() {
            assignments[r] = j % k;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        rng_seed,
    })
}

/// (post id, user id) per feature-matrix row: users by id, then their posts in
/// posting order.
pub fn row_order(corpus: &Corpus) -> Vec<(PostId, UserId)> {
    let mut users: Vec<_> = corpus.users.iter().collect();
    users.sort_by_key(|u| u.user_id);
    users
        .into_iter()
        .flat_map(|u| u.post_ids.iter().map(move |p| (p.clone(), u.user_id)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn groups(users: usize, per: usize) -> Vec<UserId> {
        (0..users * per).map(|i| (i / per) as UserId + 1).collect()
    }

    #[test]
    fn forty_by_hundred_into_six() {
        let g = groups(40, 100);
        let plan = hierarchical_folds(&g, 6, 1).unwrap();
        for u in 1..=40u64 {
            let mut counts = [0usize; 6];
            for (i, &gi) in g.iter().enumerate() {
                if gi == u {
                    counts[plan.assignments[i]] += 1;
                }
            }
            assert!(counts.iter().all(|&c| c == 16 || c == 17), "{counts:?}");
        }
    }

    #[test]
    fn one_fold_holds_everything() {
        let plan = hierarchical_folds(&groups(3, 5), 1, 0).unwrap();
        assert!(plan.assignments.iter().all(|&f| f == 0));
        assert!(plan.train_rows(0).is_empty());
    }

    #[test]
    fn undersized_user_is_named() {
        let mut g = groups(3, 8);
        g.truncate(20);
        let err = hierarchical_folds(&g, 6, 0).unwrap_err().to_string();
        assert!(err.contains("user 3"), "{err}");
        assert!(matches!(
            hierarchical_folds(&g, 0, 0),
            Err(HarnessError::NoFolds)
        ));
    }

    #[test]
    fn deterministic_given_seed() {
        let g = groups(5, 20);
        assert_eq!(
            hierarchical_folds(&g, 4, 9).unwrap(),
            hierarchical_folds(&g, 4, 9).unwrap()
        );
        assert_ne!(
            hierarchical_folds(&g, 4, 9).unwrap(),
            hierarchical_folds(&g, 4, 10).unwrap()
        );
    }

    proptest! {
        #[test]
        fn per_user_spread_at_most_one(seed in any::<u64>(), users in 1usize..12, extra in 0usize..15, k in 1usize..8) {
            let per: Vec<usize> = (0..users).map(|u| k + (u * 7 + extra) % 13).collect();
            let g: Vec<UserId> = per.iter().enumerate().flat_map(|(u, &n)| std::iter::repeat_n(u as UserId, n)).collect();
            let plan = hierarchical_folds(&g, k, seed).unwrap();
            for u in 0..users as UserId {
                let mut counts = vec![0usize; k];
                for (i, &gi) in g.iter().enumerate() {
                    if gi == u {
                        counts[plan.assignments[i]] += 1;
                    }
                }
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
            let sizes = plan.fold_sizes();
            prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= users);
            // folds cover every row exactly once
            let mut seen: Vec<usize> = (0..k).flat_map(|f| plan.test_rows(f)).collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..g.len()).collect::<Vec<_>>());
        }
    }
}
