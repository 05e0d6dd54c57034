//! Post-level design matrix and response.
//!
//! Columns fall into four groups: user dummies, the remaining common column
//! (time difference), non-image covariates and image covariates. The four
//! evaluation settings are unions of groups; see [`Setting`].

pub mod content;
pub mod time;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorlab::MunsellHue;
use crate::corpus::{Corpus, PostId, UserId};
pub use content::{extract_content, ContentConfig, ContentFeatures, PostContent};
pub use time::{response_transform, time_features, Season, TimeFeatures};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("post {0}: {1}")]
    Post(PostId, String),
    #[error("unknown setting `{0}` (expected all, nonimage, image or common)")]
    UnknownSetting(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("topic model: {0}")]
    Topic(#[from] crate::topiclab::TopicError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    User,
    Common,
    NonImage,
    Image,
}

impl Group {
    pub fn tag(self) -> &'static str {
        match self {
            Group::User => "user",
            Group::Common => "common",
            Group::NonImage => "nonimage",
            Group::Image => "image",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Setting {
    All,
    NonImage,
    Image,
    Common,
}

impl Setting {
    pub const ALL: [Setting; 4] = [
        Setting::All,
        Setting::NonImage,
        Setting::Image,
        Setting::Common,
    ];

    pub fn groups(self) -> &'static [Group] {
        match self {
            Setting::All => &[Group::User, Group::Common, Group::NonImage, Group::Image],
            Setting::NonImage => &[Group::User, Group::Common, Group::NonImage],
            Setting::Image => &[Group::User, Group::Common, Group::Image],
            Setting::Common => &[Group::User, Group::Common],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Setting::All => "all",
            Setting::NonImage => "nonimage",
            Setting::Image => "image",
            Setting::Common => "common",
        }
    }
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = FeatureError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "all" => Ok(Setting::All),
            "nonimage" => Ok(Setting::NonImage),
            "image" => Ok(Setting::Image),
            "common" => Ok(Setting::Common),
            _ => Err(FeatureError::UnknownSetting(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub group: Group,
    pub kind: Kind,
    /// One-hot family (`hour`, `season`, `user`) the column belongs to.
    pub one_hot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub columns: Vec<Column>,
    /// Row-major values.
    pub rows: Vec<Vec<f64>>,
    pub post_ids: Vec<PostId>,
    pub group_labels: Vec<UserId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseVector {
    pub values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Keep the listed column indices, in the given order.
    pub fn select_columns(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| idx.iter().map(|&j| r[j]).collect())
                .collect(),
            post_ids: self.post_ids.clone(),
            group_labels: self.group_labels.clone(),
        }
    }

    /// Columns of the given setting, keeping the full-matrix order.
    pub fn for_setting(&self, setting: Setting) -> FeatureMatrix {
        let idx: Vec<usize> = (0..self.n_cols())
            .filter(|&j| setting.groups().contains(&self.columns[j].group))
            .collect();
        self.select_columns(&idx)
    }

    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: self.columns.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            post_ids: idx.iter().map(|&i| self.post_ids[i].clone()).collect(),
            group_labels: idx.iter().map(|&i| self.group_labels[i]).collect(),
        }
    }

    /// Column name -> group tag.
    pub fn manifest(&self) -> BTreeMap<String, String> {
        self.columns
            .iter()
            .map(|c| (c.name.clone(), c.group.tag().to_string()))
            .collect()
    }

    pub fn schema_hash(&self) -> String {
        crate::hashing::json_hash(&self.columns)
    }

    /// Invariant check: rectangular, unique names, binary columns in {0, 1},
    /// finite values.
    pub fn check(&self) -> Result<(), FeatureError> {
        let names: BTreeSet<&str> = self.columns.iter().map(|c| c.name.as_str()).collect();
        if names.len() != self.columns.len() {
            return Err(FeatureError::Invalid("duplicate column names".into()));
        }
        if self.post_ids.len() != self.rows.len() || self.group_labels.len() != self.rows.len() {
            return Err(FeatureError::Invalid(
                "row labels differ in length from rows".into(),
            ));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.len() != self.columns.len() {
                return Err(FeatureError::Post(
                    self.post_ids[i].clone(),
                    "ragged row".into(),
                ));
            }
            for (c, &x) in self.columns.iter().zip(r) {
                if !x.is_finite() || (c.kind == Kind::Binary && x != 0.0 && x != 1.0) {
                    return Err(FeatureError::Post(
                        self.post_ids[i].clone(),
                        format!("bad value {x} in column {}", c.name),
                    ));
                }
            }
        }
        Ok(())
    }

    /// CSV with `post_id,user_id,response,<columns>`.
    pub fn write_csv(&self, y: &ResponseVector, path: &Path) -> Result<(), FeatureError> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(w, "post_id,user_id,response")?;
        for c in &self.columns {
            write!(w, ",{}", c.name)?;
        }
        writeln!(w)?;
        for (i, r) in self.rows.iter().enumerate() {
            write!(
                w,
                "{},{},{}",
                self.post_ids[i], self.group_labels[i], y.values[i]
            )?;
            for x in r {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureOptions {
    /// Offset of local time from UTC for calendar features.
    pub tz_offset_secs: i32,
    /// Constant added to the time difference in the response.
    pub response_offset: f64,
}

impl Default for FeatureOptions {
    fn default() -> Self {
        FeatureOptions {
            tz_offset_secs: 0,
            response_offset: time::DEFAULT_RESPONSE_OFFSET,
        }
    }
}

fn col(name: impl Into<String>, group: Group, kind: Kind, one_hot: Option<&str>) -> Column {
    Column {
        name: name.into(),
        group,
        kind,
        one_hot: one_hot.map(str::to_string),
    }
}

/// Full column schema (Setting-All order).
pub fn schema(
    user_ids: &[UserId],
    caption_topics: &[String],
    image_topics: &[String],
) -> Vec<Column> {
    use Group::*;
    use Kind::*;
    let mut users: Vec<UserId> = user_ids.to_vec();
    users.sort_unstable();
    let mut cols: Vec<Column> = users
        .iter()
        .skip(1)
        .map(|u| col(format!("user_{u}"), User, Binary, Some("user")))
        .collect();
    cols.push(col("time_difference", Common, Continuous, None));
    cols.push(col("n_image", NonImage, Continuous, None));
    cols.push(col("n_reels", NonImage, Continuous, None));
    cols.push(col("public", NonImage, Binary, None));
    cols.push(col("weekdays", NonImage, Binary, None));
    for b in time::HOUR_BIN_NAMES {
        cols.push(col(format!("hour_{b}"), NonImage, Binary, Some("hour")));
    }
    cols.push(col("holiday", NonImage, Binary, None));
    for s in Season::ALL {
        cols.push(col(
            format!("season_{}", s.name()),
            NonImage,
            Binary,
            Some("season"),
        ));
    }
    cols.push(col("period", NonImage, Continuous, None));
    cols.push(col("period_missing", NonImage, Binary, None));
    cols.push(col("tagged_place", NonImage, Binary, None));
    cols.push(col("n_tagged_id", NonImage, Continuous, None));
    cols.push(col("n_hashtag", NonImage, Continuous, None));
    for t in caption_topics {
        cols.push(col(format!("caption_topic_{t}"), NonImage, Binary, None));
    }
    for t in image_topics {
        cols.push(col(format!("image_topic_{t}"), Image, Binary, None));
    }
    for h in MunsellHue::ALL {
        cols.push(col(format!("color_{h}"), Image, Binary, None));
    }
    cols
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Build the matrix for `setting`. Rows are ordered by user id, then posting
/// time. A user's first post has no period; it receives the median of that
/// user's observed periods and `period_missing = 1`.
pub fn build_matrix(
    corpus: &Corpus,
    content: &ContentFeatures,
    setting: Setting,
    opts: &FeatureOptions,
) -> Result<(FeatureMatrix, ResponseVector), FeatureError> {
    let (full, y) = build_full_matrix(corpus, content, opts)?;
    Ok((full.for_setting(setting), y))
}

/// Setting-All matrix.
pub fn build_full_matrix(
    corpus: &Corpus,
    content: &ContentFeatures,
    opts: &FeatureOptions,
) -> Result<(FeatureMatrix, ResponseVector), FeatureError> {
    build_full_matrix_from(corpus, content, opts, None, &mut |_, _| {})
}

/// Setting-All matrix whose period imputation only looks at `train` posts.
///
/// `audit` receives `"period_imputation"` and the posts whose periods entered
/// a median.
pub fn build_full_matrix_from(
    corpus: &Corpus,
    content: &ContentFeatures,
    opts: &FeatureOptions,
    train: Option<&BTreeSet<PostId>>,
    audit: &mut dyn FnMut(&str, &[PostId]),
) -> Result<(FeatureMatrix, ResponseVector), FeatureError> {
    let in_train = |id: &PostId| train.is_none_or(|t| t.contains(id));
    let mut median_inputs: Vec<PostId> = Vec::new();
    let user_ids: Vec<UserId> = corpus.users.iter().map(|u| u.user_id).collect();
    let columns = schema(
        &user_ids,
        &content.caption_topic_names,
        &content.image_topic_names,
    );
    let index = corpus.post_index();
    let mut sorted_users = user_ids.clone();
    sorted_users.sort_unstable();
    let first_user = sorted_users.first().copied();

    let mut rows = Vec::with_capacity(corpus.posts.len());
    let mut post_ids = Vec::with_capacity(corpus.posts.len());
    let mut groups = Vec::with_capacity(corpus.posts.len());
    let mut y = Vec::with_capacity(corpus.posts.len());

    let mut users: Vec<&crate::corpus::UserRecord> = corpus.users.iter().collect();
    users.sort_by_key(|u| u.user_id);
    for u in users {
        let posts: Vec<&crate::corpus::PostRecord> = u
            .post_ids
            .iter()
            .map(|pid| {
                index
                    .get(pid.as_str())
                    .map(|&i| &corpus.posts[i])
                    .ok_or_else(|| {
                        FeatureError::Post(pid.clone(), "listed by its user but missing".into())
                    })
            })
            .collect::<Result<_, _>>()?;
        let periods: Vec<Option<f64>> = posts
            .iter()
            .enumerate()
            .map(|(i, p)| (i > 0).then(|| (p.posted_at - posts[i - 1].posted_at) as f64 / 3600.0))
            .collect();
        let observed: Vec<f64> = periods
            .iter()
            .zip(&posts)
            .filter(|(v, p)| v.is_some() && in_train(&p.post_id))
            .map(|(v, p)| {
                median_inputs.push(p.post_id.clone());
                v.expect("filtered")
            })
            .collect();
        let fill = median(observed).unwrap_or(0.0);

        for (i, p) in posts.iter().enumerate() {
            let c = content.per_post.get(&p.post_id).ok_or_else(|| {
                FeatureError::Post(
                    p.post_id.clone(),
                    "no content features (topics/colors)".into(),
                )
            })?;
            let prev = (i > 0).then(|| posts[i - 1].posted_at);
            let tf = time::time_features(p.posted_at, prev, &corpus.holidays, opts.tz_offset_secs);
            let mut r = Vec::with_capacity(columns.len());
            for &other in sorted_users.iter().skip(1) {
                r.push(f64::from(u8::from(
                    other == u.user_id && Some(other) != first_user,
                )));
            }
            r.push(time::time_difference_days(p.posted_at, p.crawled_at));
            r.push(p.n_images as f64);
            r.push(p.n_reels as f64);
            r.push(f64::from(u8::from(p.likes_public)));
            r.push(tf.weekdays as f64);
            r.extend(tf.hour_one_hot().iter().map(|&b| b as f64));
            r.push(tf.holiday as f64);
            r.extend(tf.season_one_hot().iter().map(|&b| b as f64));
            r.push(tf.period_hours.unwrap_or(fill));
            r.push(f64::from(u8::from(tf.period_hours.is_none())));
            r.push(f64::from(u8::from(p.has_tagged_place)));
            r.push(p.n_tagged_ids as f64);
            r.push(p.n_hashtags as f64);
            r.extend(c.caption_topics.iter().map(|&b| b as f64));
            r.extend(c.image_topics.iter().map(|&b| b as f64));
            r.extend(c.colors.iter().map(|&b| b as f64));
            rows.push(r);
            post_ids.push(p.post_id.clone());
            groups.push(u.user_id);
            y.push(time::response_transform(
                p.like_count,
                p.posted_at,
                p.crawled_at,
                opts.response_offset,
            ));
        }
    }
    let m = FeatureMatrix {
        columns,
        rows,
        post_ids,
        group_labels: groups,
    };
    m.check()?;
    median_inputs.sort();
    audit("period_imputation", &median_inputs);
    Ok((m, ResponseVector { values: y }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthConfig};

    fn small() -> (Corpus, ContentFeatures) {
        let cfg = SynthConfig {
            n_users: 5,
            posts_per_user: 12,
            rng_seed: 11,
            ..SynthConfig::default()
        };
        let (c, _) = synth_corpus(&cfg).unwrap();
        let content = extract_content(&c, None, &ContentConfig::fast(3), &mut |_, _| {}).unwrap();
        (c, content)
    }

    fn names(m: &FeatureMatrix) -> BTreeSet<String> {
        m.column_names().into_iter().collect()
    }

    #[test]
    fn settings_partition_columns() {
        let (c, content) = small();
        let opts = FeatureOptions::default();
        let m: BTreeMap<Setting, BTreeSet<String>> = Setting::ALL
            .iter()
            .map(|&s| (s, names(&build_matrix(&c, &content, s, &opts).unwrap().0)))
            .collect();
        let (all, non, img, com) = (
            &m[&Setting::All],
            &m[&Setting::NonImage],
            &m[&Setting::Image],
            &m[&Setting::Common],
        );
        assert!(com.is_subset(non) && non.is_subset(all));
        assert!(com.is_subset(img) && img.is_subset(all));
        assert_eq!(
            &non.intersection(img).cloned().collect::<BTreeSet<_>>(),
            com
        );
        assert_eq!(&non.union(img).cloned().collect::<BTreeSet<_>>(), all);
        assert!(!img.contains("n_hashtag"));
        assert!(!non.iter().any(|n| n.starts_with("color_")));
        let mut want: BTreeSet<String> = (2..=5).map(|u| format!("user_{u}")).collect();
        want.insert("time_difference".into());
        assert_eq!(com, &want);
    }

    #[test]
    fn rows_sorted_and_one_hots_valid() {
        let (c, content) = small();
        let (m, y) = build_full_matrix(&c, &content, &FeatureOptions::default()).unwrap();
        assert_eq!(m.n_rows(), 60);
        assert_eq!(y.values.len(), 60);
        let idx = c.post_index();
        for i in 1..m.n_rows() {
            let (a, b) = (
                &c.posts[idx[m.post_ids[i - 1].as_str()]],
                &c.posts[idx[m.post_ids[i].as_str()]],
            );
            assert!((a.user_id, a.posted_at) < (b.user_id, b.posted_at));
        }
        for fam in ["hour", "season", "user"] {
            let cols: Vec<usize> = (0..m.n_cols())
                .filter(|&j| m.columns[j].one_hot.as_deref() == Some(fam))
                .collect();
            for r in &m.rows {
                let s: f64 = cols.iter().map(|&j| r[j]).sum();
                if fam == "user" {
                    assert!(s == 0.0 || s == 1.0);
                } else {
                    assert_eq!(s, 1.0);
                }
            }
        }
        // reference user has no dummy
        assert!(m.column_index("user_1").is_none());
        // first post of each user is imputed and flagged
        let miss = m.column_index("period_missing").unwrap();
        assert_eq!(m.rows.iter().filter(|r| r[miss] == 1.0).count(), 5);
        let (again, _) = build_full_matrix(&c, &content, &FeatureOptions::default()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn imputation_median_uses_training_posts_only() {
        let (c, content) = small();
        let opts = FeatureOptions::default();
        // hold out every third post and each user's latest one
        let last: BTreeSet<&PostId> = c.users.iter().filter_map(|u| u.post_ids.last()).collect();
        let train: BTreeSet<PostId> = c
            .posts
            .iter()
            .enumerate()
            .filter(|(i, p)| i % 3 != 0 && !last.contains(&p.post_id))
            .map(|(_, p)| p.post_id.clone())
            .collect();
        let mut used = Vec::new();
        let (m, _) =
            build_full_matrix_from(&c, &content, &opts, Some(&train), &mut |stage, ids| {
                assert_eq!(stage, "period_imputation");
                used = ids.to_vec();
            })
            .unwrap();
        assert!(!used.is_empty() && used.iter().all(|id| train.contains(id)));
        // moving a held-out post leaves every imputed value unchanged
        let mut moved = c.clone();
        let victim = moved
            .posts
            .iter()
            .position(|p| last.contains(&p.post_id))
            .unwrap();
        moved.posts[victim].posted_at += 10 * 86_400;
        let (m2, _) =
            build_full_matrix_from(&moved, &content, &opts, Some(&train), &mut |_, _| {}).unwrap();
        let (miss, period) = (
            m.column_index("period_missing").unwrap(),
            m.column_index("period").unwrap(),
        );
        for (a, b) in m.rows.iter().zip(&m2.rows) {
            if a[miss] == 1.0 {
                assert_eq!(a[period], b[period]);
            }
        }
        // without a restriction the median sees every post
        let mut all = Vec::new();
        build_full_matrix_from(&c, &content, &opts, None, &mut |_, ids| all = ids.to_vec())
            .unwrap();
        assert_eq!(all.len(), c.posts.len() - c.users.len());
    }

    #[test]
    fn forty_users_give_39_dummies() {
        let ids: Vec<UserId> = (1..=40).collect();
        let cols = schema(&ids, &["a".into()], &["b".into()]);
        assert_eq!(cols.iter().filter(|c| c.group == Group::User).count(), 39);
    }

    #[test]
    fn missing_content_names_post() {
        let (c, mut content) = small();
        let gone = c.posts[3].post_id.clone();
        content.per_post.remove(&gone);
        let err = build_full_matrix(&c, &content, &FeatureOptions::default())
            .unwrap_err()
            .to_string();
        assert!(err.contains(&gone), "{err}");
    }

    #[test]
    fn setting_names_parse() {
        for s in Setting::ALL {
            assert_eq!(s.name().parse::<Setting>().unwrap(), s);
        }
        assert_eq!("Non-Image".parse::<Setting>().unwrap(), Setting::NonImage);
        assert!("pixels".parse::<Setting>().is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let (c, content) = small();
        let (m, y) =
            build_matrix(&c, &content, Setting::Common, &FeatureOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        m.write_csv(&y, &p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 61);
        assert!(lines[0].starts_with("post_id,user_id,response,user_2"));
    }
}
