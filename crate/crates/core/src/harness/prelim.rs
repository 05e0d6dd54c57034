//! Nested least-squares fits: common variables, then user dummies, then the
//! vision-derived content variables.

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::corpus::Corpus;
use crate::features::content::{extract_content, ContentConfig};
use crate::features::{build_full_matrix, FeatureMatrix, FeatureOptions, Group, ResponseVector};
use crate::modelzoo::{fit_ols, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSummary {
    pub name: String,
    pub n_columns: usize,
    /// Columns removed as linearly dependent.
    pub dropped: Vec<String>,
    pub r2: f64,
    pub adj_r2: f64,
}

fn is_content(name: &str) -> bool {
    ["caption_topic_", "image_topic_", "color_"]
        .iter()
        .any(|p| name.starts_with(p))
}

/// Column subsets of the three nested models.
pub fn nested_column_sets(x: &FeatureMatrix) -> [Vec<usize>; 3] {
    let common: Vec<usize> = (0..x.n_cols())
        .filter(|&j| x.columns[j].group != Group::User && !is_content(&x.columns[j].name))
        .collect();
    let with_users: Vec<usize> = (0..x.n_cols())
        .filter(|&j| !is_content(&x.columns[j].name))
        .collect();
    let all: Vec<usize> = (0..x.n_cols()).collect();
    [common, with_users, all]
}

/// Fit the three nested models on the full sample.
pub fn nested_regressions(
    x: &FeatureMatrix,
    y: &ResponseVector,
) -> Result<Vec<RegressionSummary>, HarnessError> {
    let names = ["model_1_common", "model_2_user_dummies", "model_3_content"];
    nested_column_sets(x)
        .iter()
        .zip(names)
        .map(|(cols, name)| {
            let data = Dataset::new(x.select_columns(cols), y.clone())?;
            let m = fit_ols(&data)?;
            Ok(RegressionSummary {
                name: name.to_string(),
                n_columns: cols.len(),
                dropped: m.dropped,
                r2: m.r2,
                adj_r2: m.adj_r2,
            })
        })
        .collect()
}

/// Topics fitted on every post, then [`nested_regressions`].
pub fn preliminary_regressions(
    corpus: &Corpus,
    content: &ContentConfig,
    opts: &FeatureOptions,
) -> Result<Vec<RegressionSummary>, HarnessError> {
    let features = extract_content(corpus, None, content, &mut |_, _| {})?;
    let (x, y) = build_full_matrix(corpus, &features, opts)?;
    nested_regressions(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthConfig};

    #[test]
    fn nested_fits_on_a_planted_corpus() {
        let cfg = SynthConfig {
            n_users: 8,
            posts_per_user: 40,
            rng_seed: 2,
            ..SynthConfig::default()
        };
        let (c, _) = synth_corpus(&cfg).unwrap();
        let r = preliminary_regressions(&c, &ContentConfig::fast(1), &FeatureOptions::default())
            .unwrap();
        assert_eq!(r.len(), 3);
        assert!(r[0].r2 < r[1].r2 && r[1].r2 < r[2].r2, "{r:?}");
        for m in &r {
            assert!(m.adj_r2 <= m.r2);
        }
        assert!(r[0].n_columns < r[1].n_columns && r[1].n_columns < r[2].n_columns);
        // the hour and season one-hots lose a reference level
        assert!(r[0].dropped.iter().any(|d| d.starts_with("hour_")));
        assert!(r[0].dropped.iter().any(|d| d.starts_with("season_")));
    }

    #[test]
    fn model_one_has_no_users_or_content() {
        let cols = crate::features::schema(&[1, 2, 3], &["event".into()], &["food".into()]);
        let x = FeatureMatrix {
            columns: cols,
            rows: vec![],
            post_ids: vec![],
            group_labels: vec![],
        };
        let [m1, m2, m3] = nested_column_sets(&x);
        let names = |idx: &[usize]| {
            idx.iter()
                .map(|&j| x.columns[j].name.clone())
                .collect::<Vec<_>>()
        };
        assert!(!names(&m1)
            .iter()
            .any(|n| n.starts_with("user_") || is_content(n)));
        assert!(names(&m2).contains(&"user_3".to_string()));
        assert!(!names(&m2).iter().any(|n| is_content(n)));
        assert_eq!(m3.len(), x.n_cols());
        assert!(
            names(&m1).contains(&"time_difference".to_string())
                && names(&m1).contains(&"n_hashtag".to_string())
        );
    }
}
