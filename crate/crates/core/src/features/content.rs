//! Caption topics, image topics and image colors per post.
//!
//! Topic models are fitted on the training posts only. Held-out posts are
//! folded into the frozen models, so no count from a held-out post reaches a
//! fitted parameter.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::colorlab::{post_color_vector, rgb_to_munsell_hue};
use crate::corpus::{Corpus, PostId};
use crate::topiclab::{
    aggregate_post_topics, binarize_topics, build_vocabulary, fit_seeded_lda, tokenize_caption,
    GibbsParams, SeedSpec, TopicModelState, TopicPosterior, Vocabulary,
};
use crate::vision::{filter_labels, representative_color, DEFAULT_MIN_SCORE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentConfig {
    pub caption_seeds: SeedSpec,
    pub label_seeds: SeedSpec,
    pub caption_alpha: f64,
    pub caption_beta: f64,
    pub label_alpha: f64,
    pub label_beta: f64,
    pub n_sweeps: usize,
    pub rng_seed: u64,
    pub min_label_score: f64,
    pub min_token_count: usize,
    /// Presence threshold on the topic share; `None` means 1/K.
    pub topic_threshold: Option<f64>,
}

impl Default for ContentConfig {
    fn default() -> Self {
        ContentConfig {
            caption_seeds: SeedSpec::default_captions(),
            label_seeds: SeedSpec::default_labels(),
            caption_alpha: 10.0,
            caption_beta: 10.0,
            label_alpha: 10.0,
            label_beta: 0.1,
            n_sweeps: crate::topiclab::DEFAULT_SWEEPS,
            rng_seed: 0,
            min_label_score: DEFAULT_MIN_SCORE,
            min_token_count: 1,
            topic_threshold: None,
        }
    }
}

impl ContentConfig {
    /// Default seeds and priors with a short chain, for tests and smoke runs.
    pub fn fast(rng_seed: u64) -> Self {
        ContentConfig {
            n_sweeps: 60,
            rng_seed,
            ..ContentConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostContent {
    pub caption_theta: Vec<f64>,
    pub image_theta: Vec<f64>,
    pub caption_topics: Vec<u8>,
    pub image_topics: Vec<u8>,
    pub colors: [u8; 10],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContentFeatures {
    pub caption_topic_names: Vec<String>,
    pub image_topic_names: Vec<String>,
    pub per_post: BTreeMap<PostId, PostContent>,
    pub caption_model: TopicModelState,
    pub label_model: TopicModelState,
    pub caption_vocab: Vocabulary,
    pub label_vocab: Vocabulary,
    /// Post ids the topic models were fitted on, sorted.
    pub fitted_on: Vec<PostId>,
}

fn threshold(cfg: &ContentConfig, k: usize) -> f64 {
    cfg.topic_threshold.unwrap_or(1.0 / k as f64)
}

/// Content features for every post of `corpus`.
///
/// `train` restricts topic fitting to those post ids (all posts when `None`).
/// `audit` receives a stage name and the post ids each fitting stage used.
pub fn extract_content(
    corpus: &Corpus,
    train: Option<&BTreeSet<PostId>>,
    cfg: &ContentConfig,
    audit: &mut dyn FnMut(&str, &[PostId]),
) -> Result<ContentFeatures, FeatureError> {
    let in_train = |id: &PostId| train.is_none_or(|t| t.contains(id));
    let mut fitted_on: Vec<PostId> = corpus
        .posts
        .iter()
        .map(|p| p.post_id.clone())
        .filter(|id| in_train(id))
        .collect();
    fitted_on.sort();
    if fitted_on.is_empty() {
        return Err(FeatureError::Invalid(
            "no training posts for topic fitting".into(),
        ));
    }

    // caption documents
    let captions: Vec<Vec<String>> = corpus
        .posts
        .iter()
        .map(|p| tokenize_caption(&p.caption))
        .collect();
    let train_rows: Vec<usize> = (0..corpus.posts.len())
        .filter(|&i| in_train(&corpus.posts[i].post_id))
        .collect();
    let cap_train: Vec<Vec<String>> = train_rows.iter().map(|&i| captions[i].clone()).collect();
    let caption_vocab = build_vocabulary(&cap_train, cfg.min_token_count)?;

    // label documents, one per image
    let mut labels: Vec<Vec<Vec<String>>> = Vec::with_capacity(corpus.posts.len());
    let mut colors: Vec<[u8; 10]> = Vec::with_capacity(corpus.posts.len());
    for p in &corpus.posts {
        let images = corpus.images(&p.post_id);
        if images.is_empty() {
            return Err(FeatureError::Post(
                p.post_id.clone(),
                "no image annotations".into(),
            ));
        }
        labels.push(
            images
                .iter()
                .map(|a| filter_labels(a, cfg.min_label_score))
                .collect(),
        );
        let hues = images
            .iter()
            .map(|a| representative_color(a).map(rgb_to_munsell_hue))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FeatureError::Post(p.post_id.clone(), e.to_string()))?;
        let v = post_color_vector(&hues)
            .map_err(|e| FeatureError::Post(p.post_id.clone(), e.to_string()))?;
        colors.push(v.bits);
    }
    let lab_train: Vec<Vec<String>> = train_rows
        .iter()
        .flat_map(|&i| labels[i].iter().cloned())
        .collect();
    let label_vocab = build_vocabulary(&lab_train, cfg.min_token_count)?;

    audit("caption_topics", &fitted_on);
    audit("image_topics", &fitted_on);

    let cap_docs: Vec<Vec<usize>> = cap_train.iter().map(|d| caption_vocab.encode(d)).collect();
    let lab_docs: Vec<Vec<usize>> = lab_train.iter().map(|d| label_vocab.encode(d)).collect();
    let cap_params = GibbsParams {
        n_sweeps: cfg.n_sweeps,
        ..GibbsParams::new(
            cfg.caption_alpha,
            cfg.caption_beta,
            crate::seeding::substream(cfg.rng_seed, "captions"),
        )
    };
    let lab_params = GibbsParams {
        n_sweeps: cfg.n_sweeps,
        ..GibbsParams::new(
            cfg.label_alpha,
            cfg.label_beta,
            crate::seeding::substream(cfg.rng_seed, "labels"),
        )
    };
    let (caption_model, label_model) = rayon::join(
        || fit_seeded_lda(&cap_docs, &caption_vocab, &cfg.caption_seeds, &cap_params),
        || fit_seeded_lda(&lab_docs, &label_vocab, &cfg.label_seeds, &lab_params),
    );
    let (caption_model, label_model) = (caption_model?, label_model?);

    // training posts read their own counts, the rest are folded in
    let mut train_pos: BTreeMap<usize, usize> = BTreeMap::new();
    let mut image_start: BTreeMap<usize, usize> = BTreeMap::new();
    let mut next_image = 0;
    for (d, &i) in train_rows.iter().enumerate() {
        train_pos.insert(i, d);
        image_start.insert(i, next_image);
        next_image += labels[i].len();
    }

    let cap_threshold = threshold(cfg, caption_model.k);
    let lab_threshold = threshold(cfg, label_model.k);
    let per_post: Vec<(PostId, PostContent)> = (0..corpus.posts.len())
        .into_par_iter()
        .map(|i| {
            let p = &corpus.posts[i];
            let cap = match train_pos.get(&i) {
                Some(&d) => caption_model.doc_topic_posterior(d),
                None => caption_model.infer(&caption_vocab.encode(&captions[i])),
            };
            let per_image: Vec<TopicPosterior> = match image_start.get(&i) {
                Some(&s) => (0..labels[i].len())
                    .map(|j| label_model.doc_topic_posterior(s + j))
                    .collect(),
                None => labels[i]
                    .iter()
                    .map(|d| label_model.infer(&label_vocab.encode(d)))
                    .collect(),
            };
            let img = aggregate_post_topics(&per_image)?;
            Ok((
                p.post_id.clone(),
                PostContent {
                    caption_topics: binarize_topics(&cap, cap_threshold),
                    image_topics: binarize_topics(&img, lab_threshold),
                    caption_theta: cap.theta,
                    image_theta: img.theta,
                    colors: colors[i],
                },
            ))
        })
        .collect::<Result<_, FeatureError>>()?;

    Ok(ContentFeatures {
        caption_topic_names: caption_model.topic_names.clone(),
        image_topic_names: label_model.topic_names.clone(),
        per_post: per_post.into_iter().collect(),
        caption_model,
        label_model,
        caption_vocab,
        label_vocab,
        fitted_on,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{synth_corpus, SynthConfig};

    fn corpus() -> Corpus {
        synth_corpus(&SynthConfig {
            n_users: 6,
            posts_per_user: 20,
            rng_seed: 5,
            ..SynthConfig::default()
        })
        .unwrap()
        .0
    }

    #[test]
    fn held_out_posts_do_not_touch_counts() {
        let c = corpus();
        let train: BTreeSet<PostId> = c
            .posts
            .iter()
            .filter(|p| p.user_id != 3)
            .map(|p| p.post_id.clone())
            .collect();
        let mut seen = Vec::new();
        let a = extract_content(&c, Some(&train), &ContentConfig::fast(1), &mut |s, ids| {
            seen.push((s.to_string(), ids.to_vec()))
        })
        .unwrap();
        assert_eq!(seen.len(), 2);
        for (_, ids) in &seen {
            assert_eq!(ids.iter().cloned().collect::<BTreeSet<_>>(), train);
        }
        // changing a held-out caption leaves the fitted models unchanged
        let mut c2 = c.clone();
        for p in c2.posts.iter_mut().filter(|p| p.user_id == 3) {
            p.caption = "zzz qqq completely new words".into();
        }
        let b =
            extract_content(&c2, Some(&train), &ContentConfig::fast(1), &mut |_, _| {}).unwrap();
        assert_eq!(a.caption_model.n_wk, b.caption_model.n_wk);
        assert_eq!(a.caption_vocab.tokens(), b.caption_vocab.tokens());
        assert_eq!(a.per_post.len(), c.posts.len());
    }

    #[test]
    fn content_shapes_and_determinism() {
        let c = corpus();
        let cfg = ContentConfig::fast(2);
        let a = extract_content(&c, None, &cfg, &mut |_, _| {}).unwrap();
        let b = extract_content(&c, None, &cfg, &mut |_, _| {}).unwrap();
        assert_eq!(a.per_post, b.per_post);
        assert_eq!(
            a.caption_topic_names,
            ["event", "beauty", "health", "fashion", "daily"]
        );
        assert_eq!(
            a.image_topic_names,
            ["fashion", "food", "body", "beauty", "daily"]
        );
        for pc in a.per_post.values() {
            assert_eq!(pc.caption_topics.len(), 5);
            assert!((pc.image_theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(pc.colors.iter().any(|&b| b == 1));
            // at least one share reaches the mean, so at most K-1 can be absent
            assert!(pc.image_topics.iter().all(|&b| b <= 1));
        }
    }

    #[test]
    fn missing_annotations_are_reported() {
        let mut c = corpus();
        let id = c.posts[0].post_id.clone();
        c.annotations.remove(&id);
        let err = extract_content(&c, None, &ContentConfig::fast(1), &mut |_, _| {}).unwrap_err();
        assert!(err.to_string().contains(&id));
    }
}
