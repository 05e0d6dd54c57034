//! Topic models over captions and image labels.
//!
//! Captions are tokenized into words; each image's filtered labels form one
//! label document. Both are fit with seeded LDA ([`gibbs`]); [`diagnostics`]
//! holds the seed-construction and coherence machinery.

pub mod diagnostics;
pub mod gibbs;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use diagnostics::{
    contrastive_seeds, information_gain, npmi_pair, relevance, select_hyperparams, top_words,
    topic_coherence_npmi, topic_diversity, HyperparamScore, DEFAULT_LAMBDA,
};
pub use gibbs::{
    aggregate_post_topics, binarize_topics, fit_lda, fit_seeded_lda, fit_seeded_lda_observed,
    GibbsParams, TopicModelState, TopicPosterior, DEFAULT_SWEEPS, FOLD_IN_SWEEPS,
};

#[derive(Debug, Error, PartialEq)]
pub enum TopicError {
    #[error("vocabulary is empty")]
    EmptyVocabulary,
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(String),
    #[error("invalid seed spec: {0}")]
    SeedSpec(String),
    #[error("token `{0}` is not in the vocabulary")]
    UnknownToken(String),
    #[error("need at least {needed} distinct tokens after removing overlaps, have {available}")]
    VocabularyTooSmall { needed: usize, available: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Lower-case a caption and split it on anything that is not alphanumeric or
/// `_`. Hashtag markers disappear with the split; the tagged word is kept.
pub fn tokenize_caption(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocabulary, TopicError> {
        if tokens.is_empty() {
            return Err(TopicError::EmptyVocabulary);
        }
        let index: HashMap<String, usize> = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        if index.len() != tokens.len() {
            return Err(TopicError::Invalid("duplicate token in vocabulary".into()));
        }
        Ok(Vocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Map a token list to ids, dropping out-of-vocabulary tokens.
    pub fn encode<S: AsRef<str>>(&self, doc: &[S]) -> Vec<usize> {
        doc.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }

    pub fn hash(&self) -> String {
        crate::hashing::json_hash(&self.tokens)
    }

    /// Restore the lookup table after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

/// Tokens with at least `min_count` occurrences, ordered by descending
/// frequency and then lexicographically.
pub fn build_vocabulary<S: AsRef<str>>(
    docs: &[Vec<S>],
    min_count: usize,
) -> Result<Vocabulary, TopicError> {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for d in docs {
        for t in d {
            *counts.entry(t.as_ref()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count.max(1))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    Vocabulary::from_tokens(kept.into_iter().map(|(t, _)| t.to_string()).collect())
}

/// Named topics with their seed tokens. A token seeds at most one topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub topic_names: Vec<String>,
    pub seeds: Vec<Vec<String>>,
}

impl SeedSpec {
    pub fn new(topic_names: Vec<String>, seeds: Vec<Vec<String>>) -> Result<SeedSpec, TopicError> {
        let spec = SeedSpec { topic_names, seeds };
        spec.check()?;
        Ok(spec)
    }

    pub fn check(&self) -> Result<(), TopicError> {
        let err = |m: String| Err(TopicError::SeedSpec(m));
        if self.topic_names.len() < 2 {
            return err("need at least two topics".into());
        }
        if self.topic_names.len() != self.seeds.len() {
            return err("topic names and seed lists differ in length".into());
        }
        let mut owner: HashMap<&str, &str> = HashMap::new();
        for (name, list) in self.topic_names.iter().zip(&self.seeds) {
            if list.is_empty() {
                return err(format!("topic `{name}` has no seeds"));
            }
            for t in list {
                if let Some(prev) = owner.insert(t, name) {
                    return err(format!("token `{t}` seeds both `{prev}` and `{name}`"));
                }
            }
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.topic_names.len()
    }

    /// Parse `{topic_name: [tokens]}`; key order defines topic order.
    pub fn from_json(text: &str) -> Result<SeedSpec, TopicError> {
        let map: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| TopicError::SeedSpec(e.to_string()))?;
        let mut names = Vec::new();
        let mut seeds = Vec::new();
        for (k, v) in map {
            let list: Vec<String> = serde_json::from_value(v)
                .map_err(|e| TopicError::SeedSpec(format!("topic `{k}`: {e}")))?;
            names.push(k);
            seeds.push(list);
        }
        SeedSpec::new(names, seeds)
    }

    pub fn to_json(&self) -> String {
        let mut map = serde_json::Map::new();
        for (k, v) in self.topic_names.iter().zip(&self.seeds) {
            map.insert(k.clone(), serde_json::json!(v));
        }
        serde_json::to_string_pretty(&map).expect("serializable")
    }

    /// Seed token ids per topic, dropping tokens missing from `vocab` with a
    /// warning.
    pub fn resolve(&self, vocab: &Vocabulary) -> Vec<Vec<usize>> {
        self.topic_names
            .iter()
            .zip(&self.seeds)
            .map(|(name, list)| {
                list.iter()
                    .filter_map(|t| {
                        let id = vocab.id(t);
                        if id.is_none() {
                            log::warn!(
                                "seed `{t}` for topic `{name}` is not in the vocabulary; dropped"
                            );
                        }
                        id
                    })
                    .collect()
            })
            .collect()
    }

    /// Caption topics: event, beauty, health, fashion, daily.
    pub fn default_captions() -> SeedSpec {
        SeedSpec::from_json(include_str!("../../assets/seeds_caption.json"))
            .expect("bundled caption seeds")
    }

    /// Image-label topics: fashion, food, body, beauty, daily.
    pub fn default_labels() -> SeedSpec {
        SeedSpec::from_json(include_str!("../../assets/seeds_label.json"))
            .expect("bundled label seeds")
    }
}

/// Document frequency of every token, used for the seed-free frequency
/// ranking.
pub fn document_frequency(docs: &[Vec<usize>], vocab_size: usize) -> Vec<usize> {
    let mut df = vec![0usize; vocab_size];
    let mut seen = vec![usize::MAX; vocab_size];
    for (d, doc) in docs.iter().enumerate() {
        for &w in doc {
            if seen[w] != d {
                seen[w] = d;
                df[w] += 1;
            }
        }
    }
    df
}

/// Topic names mapped to their index, for lookups by name.
pub fn topic_index(spec: &SeedSpec) -> BTreeMap<String, usize> {
    spec.topic_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect()
}
