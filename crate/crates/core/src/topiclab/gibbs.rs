//! Collapsed Gibbs sampling for LDA with an asymmetric, seed-boosted word
//! prior.
//!
//! Token `w` in topic `k` carries prior pseudo-count
//! `beta + seed_boost * [w in seeds(k)]`. Each token's first topic is drawn
//! from its word's prior row. With a zero boost that draw is uniform, so a
//! zero boost reproduces plain LDA exactly for the same rng seed.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{SeedSpec, TopicError, Vocabulary};
use crate::seeding;

pub const DEFAULT_SWEEPS: usize = 500;
/// Sweeps used to fold an unseen document into a frozen model.
pub const FOLD_IN_SWEEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GibbsParams {
    pub alpha: f64,
    pub beta: f64,
    /// Extra prior mass on a seed word in its own topic. `None` means `5 * beta`.
    pub seed_boost: Option<f64>,
    pub n_sweeps: usize,
    pub rng_seed: u64,
}

impl GibbsParams {
    pub fn new(alpha: f64, beta: f64, rng_seed: u64) -> GibbsParams {
        GibbsParams {
            alpha,
            beta,
            seed_boost: None,
            n_sweeps: DEFAULT_SWEEPS,
            rng_seed,
        }
    }

    pub fn boost(&self) -> f64 {
        self.seed_boost.unwrap_or(5.0 * self.beta)
    }

    fn check(&self) -> Result<(), TopicError> {
        let bad = |m: &str| Err(TopicError::Hyperparameter(m.into()));
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad("beta must be positive");
        }
        let b = self.boost();
        if !(b >= 0.0 && b.is_finite()) {
            return bad("seed_boost must be non-negative");
        }
        if self.n_sweeps == 0 {
            return bad("n_sweeps must be at least 1");
        }
        Ok(())
    }
}

/// Per-document topic distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicPosterior {
    pub theta: Vec<f64>,
}

impl TopicPosterior {
    fn from_weights(w: Vec<f64>) -> TopicPosterior {
        let s: f64 = w.iter().sum();
        TopicPosterior {
            theta: w.into_iter().map(|x| x / s).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModelState {
    pub k: usize,
    pub vocab_size: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed_boost: f64,
    pub topic_names: Vec<String>,
    /// Seed token ids per topic.
    pub seed_words: Vec<Vec<usize>>,
    pub z: Vec<Vec<u32>>,
    pub n_dk: Vec<Vec<u32>>,
    /// Word-major counts: entry `w * k + t`.
    pub n_wk: Vec<u32>,
    pub n_k: Vec<u64>,
    pub n_sweeps: usize,
    pub rng_seed: u64,
    pub vocab_hash: String,
}

impl TopicModelState {
    /// State with explicit assignments `z` (no sampling). Seeds are empty.
    pub fn from_assignments(
        docs: &[Vec<usize>],
        z: Vec<Vec<u32>>,
        k: usize,
        vocab_size: usize,
        alpha: f64,
        beta: f64,
    ) -> TopicModelState {
        let mut st = TopicModelState {
            k,
            vocab_size,
            alpha,
            beta,
            seed_boost: 0.0,
            topic_names: (0..k).map(|i| format!("topic_{i}")).collect(),
            seed_words: vec![Vec::new(); k],
            z: Vec::new(),
            n_dk: vec![vec![0; k]; docs.len()],
            n_wk: vec![0; vocab_size * k],
            n_k: vec![0; k],
            n_sweeps: 0,
            rng_seed: 0,
            vocab_hash: String::new(),
        };
        for (d, (doc, zd)) in docs.iter().zip(&z).enumerate() {
            for (&w, &t) in doc.iter().zip(zd) {
                st.n_dk[d][t as usize] += 1;
                st.n_wk[w * k + t as usize] += 1;
                st.n_k[t as usize] += 1;
            }
        }
        st.z = z;
        st
    }

    pub fn n_kw(&self, topic: usize, w: usize) -> u32 {
        self.n_wk[w * self.k + topic]
    }

    fn prior_table(&self) -> (Vec<f64>, Vec<f64>) {
        let mut prior = vec![self.beta; self.vocab_size * self.k];
        let mut sum = vec![self.beta * self.vocab_size as f64; self.k];
        for (t, seeds) in self.seed_words.iter().enumerate() {
            for &w in seeds {
                prior[w * self.k + t] += self.seed_boost;
                sum[t] += self.seed_boost;
            }
        }
        (prior, sum)
    }

    /// Word prior of `w` in topic `t`.
    pub fn prior(&self, t: usize, w: usize) -> f64 {
        let boosted = self.seed_words.get(t).is_some_and(|s| s.contains(&w));
        self.beta + if boosted { self.seed_boost } else { 0.0 }
    }

    /// Smoothed topic-word probability `(n_kw + prior) / (n_k + sum prior)`.
    pub fn phi(&self, t: usize, w: usize) -> f64 {
        let n_seeds = self.seed_words.get(t).map_or(0, Vec::len) as f64;
        let psum = self.beta * self.vocab_size as f64 + self.seed_boost * n_seeds;
        (self.n_kw(t, w) as f64 + self.prior(t, w)) / (self.n_k[t] as f64 + psum)
    }

    /// Corpus frequency of `w` among all sampled tokens.
    pub fn word_frequency(&self, w: usize) -> f64 {
        let total: u64 = self.n_k.iter().sum();
        let cw: u64 = (0..self.k).map(|t| self.n_kw(t, w) as u64).sum();
        if total == 0 {
            0.0
        } else {
            cw as f64 / total as f64
        }
    }

    pub fn n_docs(&self) -> usize {
        self.n_dk.len()
    }

    /// Posterior of training document `d`: `theta_k ∝ n_dk + alpha`.
    pub fn doc_topic_posterior(&self, d: usize) -> TopicPosterior {
        TopicPosterior::from_weights(
            self.n_dk[d]
                .iter()
                .map(|&c| c as f64 + self.alpha)
                .collect(),
        )
    }

    /// Most frequent topic of training document `d` (lowest index on ties).
    pub fn dominant_topic(&self, d: usize) -> usize {
        argmax_first(&self.n_dk[d])
    }

    /// Posterior of an unseen document, folded in by Gibbs sampling with the
    /// topic-word counts frozen. Counts are averaged over the second half of
    /// the sweeps. Ids outside the vocabulary are ignored; the rng stream is
    /// derived from the model seed and the document, so repeated calls agree.
    pub fn infer(&self, doc: &[usize]) -> TopicPosterior {
        let doc: Vec<usize> = doc
            .iter()
            .copied()
            .filter(|&w| w < self.vocab_size)
            .collect();
        if doc.is_empty() {
            return TopicPosterior::from_weights(vec![1.0; self.k]);
        }
        let (prior, psum) = self.prior_table();
        let k = self.k;
        let label = format!("fold-in/{}", crate::hashing::json_hash(&doc));
        let mut rng = seeding::rng_for(self.rng_seed, &label);
        let mut z: Vec<usize> = doc.iter().map(|_| rng.random_range(0..k)).collect();
        let mut ndk = vec![0u32; k];
        for &t in &z {
            ndk[t] += 1;
        }
        let mut acc = vec![0.0f64; k];
        let mut p = vec![0.0f64; k];
        let burn_in = FOLD_IN_SWEEPS / 2;
        for sweep in 0..FOLD_IN_SWEEPS {
            for (i, &w) in doc.iter().enumerate() {
                ndk[z[i]] -= 1;
                let mut total = 0.0;
                for t in 0..k {
                    let nw = self.n_wk[w * k + t] as f64 + prior[w * k + t];
                    total += (ndk[t] as f64 + self.alpha) * nw / (self.n_k[t] as f64 + psum[t]);
                    p[t] = total;
                }
                let t = draw(&p, total, rng.random::<f64>());
                z[i] = t;
                ndk[t] += 1;
            }
            if sweep >= burn_in {
                for t in 0..k {
                    acc[t] += ndk[t] as f64;
                }
            }
        }
        let n_avg = (FOLD_IN_SWEEPS - burn_in) as f64;
        TopicPosterior::from_weights(acc.into_iter().map(|c| c / n_avg + self.alpha).collect())
    }

    /// Recount every table from `z` and compare.
    pub fn counts_consistent(&self, docs: &[Vec<usize>]) -> bool {
        if docs.len() != self.z.len() {
            return false;
        }
        let mut n_dk = vec![vec![0u32; self.k]; docs.len()];
        let mut n_wk = vec![0u32; self.vocab_size * self.k];
        let mut n_k = vec![0u64; self.k];
        for (d, doc) in docs.iter().enumerate() {
            if doc.len() != self.z[d].len() {
                return false;
            }
            for (&w, &t) in doc.iter().zip(&self.z[d]) {
                let t = t as usize;
                n_dk[d][t] += 1;
                n_wk[w * self.k + t] += 1;
                n_k[t] += 1;
            }
        }
        n_dk == self.n_dk && n_wk == self.n_wk && n_k == self.n_k
    }
}

fn argmax_first(v: &[u32]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Inverse-CDF draw from unnormalized cumulative weights.
fn draw(cum: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    cum.iter()
        .position(|&c| target < c)
        .unwrap_or(cum.len() - 1)
}

/// Seeded LDA. Seed tokens missing from `vocab` are dropped with a warning.
pub fn fit_seeded_lda(
    docs: &[Vec<usize>],
    vocab: &Vocabulary,
    spec: &SeedSpec,
    params: &GibbsParams,
) -> Result<TopicModelState, TopicError> {
    fit_seeded_lda_observed(docs, vocab, spec, params, &mut |_, _| {})
}

/// [`fit_seeded_lda`] with a callback after every sweep (sweep index, state).
pub fn fit_seeded_lda_observed(
    docs: &[Vec<usize>],
    vocab: &Vocabulary,
    spec: &SeedSpec,
    params: &GibbsParams,
    observer: &mut dyn FnMut(usize, &TopicModelState),
) -> Result<TopicModelState, TopicError> {
    spec.check()?;
    let seeds = spec.resolve(vocab);
    sample(
        docs,
        vocab,
        spec.topic_names.clone(),
        seeds,
        params.boost(),
        params,
        observer,
    )
}

/// Plain LDA with `k` unnamed topics.
pub fn fit_lda(
    docs: &[Vec<usize>],
    vocab: &Vocabulary,
    k: usize,
    params: &GibbsParams,
) -> Result<TopicModelState, TopicError> {
    if k == 0 {
        return Err(TopicError::Hyperparameter("k must be at least 1".into()));
    }
    let names = (0..k).map(|i| format!("topic_{i}")).collect();
    sample(
        docs,
        vocab,
        names,
        vec![Vec::new(); k],
        0.0,
        params,
        &mut |_, _| {},
    )
}

fn sample(
    docs: &[Vec<usize>],
    vocab: &Vocabulary,
    topic_names: Vec<String>,
    seed_words: Vec<Vec<usize>>,
    seed_boost: f64,
    params: &GibbsParams,
    observer: &mut dyn FnMut(usize, &TopicModelState),
) -> Result<TopicModelState, TopicError> {
    params.check()?;
    let v = vocab.len();
    if let Some(&w) = docs.iter().flatten().find(|&&w| w >= v) {
        return Err(TopicError::Invalid(format!(
            "token id {w} outside vocabulary of {v}"
        )));
    }
    let k = topic_names.len();
    let mut rng = seeding::rng_from(params.rng_seed);
    let mut st = TopicModelState {
        k,
        vocab_size: v,
        alpha: params.alpha,
        beta: params.beta,
        seed_boost,
        topic_names,
        seed_words,
        z: Vec::with_capacity(docs.len()),
        n_dk: vec![vec![0; k]; docs.len()],
        n_wk: vec![0; v * k],
        n_k: vec![0; k],
        n_sweeps: params.n_sweeps,
        rng_seed: params.rng_seed,
        vocab_hash: vocab.hash(),
    };
    // initial assignments are drawn from the word prior, so seed tokens start
    // mostly in their own topic and unseeded tokens start uniform
    let (prior, psum) = st.prior_table();
    let init: Vec<f64> = prior
        .chunks(k)
        .flat_map(|row| {
            let mut acc = 0.0;
            row.iter().map(move |&x| {
                acc += x;
                acc
            })
        })
        .collect();
    for (d, doc) in docs.iter().enumerate() {
        let zd: Vec<u32> = doc
            .iter()
            .map(|&w| {
                let cum = &init[w * k..w * k + k];
                draw(cum, cum[k - 1], rng.random::<f64>()) as u32
            })
            .collect();
        for (&w, &t) in doc.iter().zip(&zd) {
            st.n_dk[d][t as usize] += 1;
            st.n_wk[w * k + t as usize] += 1;
            st.n_k[t as usize] += 1;
        }
        st.z.push(zd);
    }

    let alpha = params.alpha;
    let mut p = vec![0.0f64; k];
    for sweep in 0..params.n_sweeps {
        for (d, doc) in docs.iter().enumerate() {
            let ndk = &mut st.n_dk[d];
            for (i, &w) in doc.iter().enumerate() {
                let old = st.z[d][i] as usize;
                ndk[old] -= 1;
                st.n_wk[w * k + old] -= 1;
                st.n_k[old] -= 1;
                let row = &st.n_wk[w * k..w * k + k];
                let prow = &prior[w * k..w * k + k];
                let mut total = 0.0;
                for t in 0..k {
                    total += (ndk[t] as f64 + alpha) * (row[t] as f64 + prow[t])
                        / (st.n_k[t] as f64 + psum[t]);
                    p[t] = total;
                }
                let new = draw(&p, total, rng.random::<f64>());
                st.z[d][i] = new as u32;
                ndk[new] += 1;
                st.n_wk[w * k + new] += 1;
                st.n_k[new] += 1;
            }
        }
        observer(sweep, &st);
    }
    Ok(st)
}

/// Element-wise mean of per-image posteriors.
pub fn aggregate_post_topics(per_image: &[TopicPosterior]) -> Result<TopicPosterior, TopicError> {
    let first = per_image
        .first()
        .ok_or_else(|| TopicError::Invalid("no image posteriors to aggregate".into()))?;
    let k = first.theta.len();
    if per_image.iter().any(|p| p.theta.len() != k) {
        return Err(TopicError::Invalid(
            "posteriors disagree on topic count".into(),
        ));
    }
    let n = per_image.len() as f64;
    let mean = (0..k)
        .map(|t| per_image.iter().map(|p| p.theta[t]).sum::<f64>() / n)
        .collect();
    Ok(TopicPosterior { theta: mean })
}

/// Indicator `theta[k] > threshold` (strict).
pub fn binarize_topics(theta: &TopicPosterior, threshold: f64) -> Vec<u8> {
    theta
        .theta
        .iter()
        .map(|&x| u8::from(x > threshold))
        .collect()
}
