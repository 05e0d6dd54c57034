//! Run configuration: one TOML document, every section optional.

use std::path::{Path, PathBuf};

use postpop::features::{ContentConfig, FeatureOptions, Setting};
use postpop::harness::{GridScale, TopicScope, DEFAULT_K_INNER, DEFAULT_K_OUTER};
use postpop::modelzoo::Method;
use postpop::topiclab::{SeedSpec, DEFAULT_SWEEPS};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Global seed; every component derives a named sub-stream from it.
    pub seed: u64,
    pub paths: Paths,
    pub synth: SynthSection,
    pub topics: TopicSection,
    pub features: FeatureSection,
    pub pipeline: Pipeline,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Output directory; `--out` and `POSTPOP_OUT` take precedence.
    pub out: Option<PathBuf>,
    /// Corpus directory; defaults to `<out>/corpus`.
    pub corpus: Option<PathBuf>,
    /// Caption seed spec (`{topic: [tokens]}`); bundled seeds when unset.
    pub caption_seeds: Option<PathBuf>,
    /// Label seed spec; bundled seeds when unset.
    pub label_seeds: Option<PathBuf>,
    /// Holiday list (ISO dates) replacing the corpus's own.
    pub holidays: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub n_users: usize,
    pub posts_per_user: usize,
    pub noise_sd: f64,
}

impl Default for SynthSection {
    fn default() -> Self {
        let d = postpop::corpus::SynthConfig::default();
        SynthSection {
            n_users: d.n_users,
            posts_per_user: d.posts_per_user,
            noise_sd: d.noise_sd,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopicSection {
    pub n_sweeps: usize,
    pub caption_alpha: f64,
    pub caption_beta: f64,
    pub label_alpha: f64,
    pub label_beta: f64,
    pub min_label_score: f64,
    pub min_token_count: usize,
    pub topic_threshold: Option<f64>,
}

impl Default for TopicSection {
    fn default() -> Self {
        let c = ContentConfig::default();
        TopicSection {
            n_sweeps: DEFAULT_SWEEPS,
            caption_alpha: c.caption_alpha,
            caption_beta: c.caption_beta,
            label_alpha: c.label_alpha,
            label_beta: c.label_beta,
            min_label_score: c.min_label_score,
            min_token_count: c.min_token_count,
            topic_threshold: c.topic_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    /// Local-time offset from UTC for calendar features, in seconds.
    pub tz_offset_secs: i32,
    pub response_offset: f64,
}

impl Default for FeatureSection {
    fn default() -> Self {
        let d = FeatureOptions::default();
        FeatureSection {
            tz_offset_secs: d.tz_offset_secs,
            response_offset: d.response_offset,
        }
    }
}

impl FeatureSection {
    pub fn options(&self) -> FeatureOptions {
        FeatureOptions {
            tz_offset_secs: self.tz_offset_secs,
            response_offset: self.response_offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Pipeline {
    pub settings: Vec<Setting>,
    pub methods: Vec<Method>,
    pub k_outer: usize,
    pub k_inner: usize,
    pub grid_scale: GridScale,
    /// `per_fold` (default) or `global`.
    pub topic_scope: TopicScope,
}

impl Default for Pipeline {
    fn default() -> Self {
        Pipeline {
            settings: Setting::ALL.to_vec(),
            methods: Method::ALL.to_vec(),
            k_outer: DEFAULT_K_OUTER,
            k_inner: DEFAULT_K_INNER,
            grid_scale: GridScale::Reduced,
            topic_scope: TopicScope::PerFold,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
    }

    /// Checks value ranges and that every referenced input path exists.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Invalid(m));
        for p in [
            &self.paths.caption_seeds,
            &self.paths.label_seeds,
            &self.paths.holidays,
        ]
        .into_iter()
        .flatten()
        {
            if !p.exists() {
                return bad(format!("referenced path {} does not exist", p.display()));
            }
        }
        if self.pipeline.settings.is_empty() || self.pipeline.methods.is_empty() {
            return bad("pipeline needs at least one setting and one method".into());
        }
        if self.pipeline.k_outer < 2 || self.pipeline.k_inner < 2 {
            return bad("k_outer and k_inner must be at least 2".into());
        }
        if self.topics.n_sweeps == 0 {
            return bad("topics.n_sweeps must be positive".into());
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        self.paths
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.paths
            .corpus
            .clone()
            .unwrap_or_else(|| self.out_dir().join("corpus"))
    }

    pub fn content_config(&self) -> Result<ContentConfig, CliError> {
        let read = |p: &Option<PathBuf>, fallback: SeedSpec| -> Result<SeedSpec, CliError> {
            match p {
                None => Ok(fallback),
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?;
                    SeedSpec::from_json(&text)
                        .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))
                }
            }
        };
        let t = &self.topics;
        Ok(ContentConfig {
            caption_seeds: read(&self.paths.caption_seeds, SeedSpec::default_captions())?,
            label_seeds: read(&self.paths.label_seeds, SeedSpec::default_labels())?,
            caption_alpha: t.caption_alpha,
            caption_beta: t.caption_beta,
            label_alpha: t.label_alpha,
            label_beta: t.label_beta,
            n_sweeps: t.n_sweeps,
            rng_seed: postpop::seeding::substream(self.seed, "topics"),
            min_label_score: t.min_label_score,
            min_token_count: t.min_token_count,
            topic_threshold: t.topic_threshold,
        })
    }
}
