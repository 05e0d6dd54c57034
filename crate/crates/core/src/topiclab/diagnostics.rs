//! Seed construction by information gain, topic diversity, relevance ranking,
//! NPMI coherence and coherence-based hyperparameter selection.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gibbs::{fit_seeded_lda, GibbsParams, TopicModelState};
use super::{SeedSpec, TopicError, Vocabulary};

/// Default relevance weight between within-topic probability and lift.
pub const DEFAULT_LAMBDA: f64 = 0.6;
/// Smoothing added to every document-level probability in NPMI.
pub const NPMI_EPSILON: f64 = 1e-12;
/// Candidate values for both alpha and beta.
pub const DEFAULT_GRID_VALUES: [f64; 6] = [0.05, 0.1, 0.5, 1.0, 5.0, 10.0];

fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Contingency counts for information gain: among non-empty documents,
/// `n` total, `n_topic[t]` with dominant topic `t`, and for a token the
/// number of documents containing it overall and per dominant topic.
struct IgTable {
    n: usize,
    n_topic: Vec<usize>,
    dominant: Vec<Option<usize>>,
}

impl IgTable {
    fn new(state: &TopicModelState, docs: &[Vec<usize>]) -> IgTable {
        let mut n_topic = vec![0; state.k];
        let dominant: Vec<Option<usize>> = docs
            .iter()
            .enumerate()
            .map(|(d, doc)| {
                (!doc.is_empty()).then(|| {
                    let t = state.dominant_topic(d);
                    n_topic[t] += 1;
                    t
                })
            })
            .collect();
        IgTable {
            n: dominant.iter().flatten().count(),
            n_topic,
            dominant,
        }
    }

    fn gain(&self, t: usize, df: usize, df_topic: usize) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        let h = binary_entropy(self.n_topic[t] as f64 / n);
        let with = if df > 0 {
            df as f64 / n * binary_entropy(df_topic as f64 / df as f64)
        } else {
            0.0
        };
        let rest = self.n - df;
        let without = if rest > 0 {
            rest as f64 / n * binary_entropy((self.n_topic[t] - df_topic) as f64 / rest as f64)
        } else {
            0.0
        };
        (h - with - without).max(0.0)
    }
}

/// Per-topic information gain `H(T) - H(T | w)` where `T` is the event
/// "the document's dominant topic is t" and `w` is document-level presence
/// of the token. Empty documents are left out.
pub fn information_gain(
    state: &TopicModelState,
    docs: &[Vec<usize>],
    vocab: &Vocabulary,
    token: &str,
) -> Result<Vec<f64>, TopicError> {
    let w = vocab
        .id(token)
        .ok_or_else(|| TopicError::UnknownToken(token.to_string()))?;
    let table = IgTable::new(state, docs);
    let mut df = 0;
    let mut df_topic = vec![0; state.k];
    for (doc, dom) in docs.iter().zip(&table.dominant) {
        if let Some(t) = dom {
            if doc.contains(&w) {
                df += 1;
                df_topic[*t] += 1;
            }
        }
    }
    Ok((0..state.k)
        .map(|t| table.gain(t, df, df_topic[t]))
        .collect())
}

/// Information gain of every token for every topic, indexed `[topic][token]`.
fn gain_matrix(state: &TopicModelState, docs: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let v = state.vocab_size;
    let table = IgTable::new(state, docs);
    let mut df = vec![0usize; v];
    let mut df_topic = vec![vec![0usize; v]; state.k];
    let mut seen = vec![usize::MAX; v];
    for (d, (doc, dom)) in docs.iter().zip(&table.dominant).enumerate() {
        let Some(t) = dom else { continue };
        for &w in doc {
            if seen[w] != d {
                seen[w] = d;
                df[w] += 1;
                df_topic[*t][w] += 1;
            }
        }
    }
    (0..state.k)
        .map(|t| {
            (0..v)
                .map(|w| table.gain(t, df[w], df_topic[t][w]))
                .collect()
        })
        .collect()
}

/// Pick `n` tokens per topic from ranked candidate lists so that no token is
/// chosen twice. Tokens picked by more than one topic are banned from all
/// topics and the lists are refilled, until the picks are disjoint.
pub(crate) fn select_disjoint(
    ranked: &[Vec<usize>],
    n: usize,
    vocab_size: usize,
) -> Result<Vec<Vec<usize>>, TopicError> {
    let mut banned = vec![false; vocab_size];
    let mut n_banned = 0;
    loop {
        let mut picks = Vec::with_capacity(ranked.len());
        for list in ranked {
            let pick: Vec<usize> = list
                .iter()
                .copied()
                .filter(|&w| !banned[w])
                .take(n)
                .collect();
            if pick.len() < n {
                return Err(TopicError::VocabularyTooSmall {
                    needed: ranked.len() * n,
                    available: vocab_size - n_banned,
                });
            }
            picks.push(pick);
        }
        let mut owners = vec![0u32; vocab_size];
        for pick in &picks {
            for &w in pick {
                owners[w] += 1;
            }
        }
        let mut clash = false;
        for (w, &c) in owners.iter().enumerate() {
            if c > 1 {
                banned[w] = true;
                n_banned += 1;
                clash = true;
            }
        }
        if !clash {
            return Ok(picks);
        }
    }
}

/// Seeds made of each topic's highest-information-gain tokens, with tokens
/// shared between topics removed. Ties rank by vocabulary index.
pub fn contrastive_seeds(
    state: &TopicModelState,
    docs: &[Vec<usize>],
    vocab: &Vocabulary,
    n_per_topic: usize,
) -> Result<SeedSpec, TopicError> {
    if n_per_topic == 0 {
        return Err(TopicError::Invalid("n_per_topic must be positive".into()));
    }
    let gains = gain_matrix(state, docs);
    let ranked: Vec<Vec<usize>> = gains
        .iter()
        .map(|g| {
            let mut idx: Vec<usize> = (0..g.len()).collect();
            idx.sort_by(|&a, &b| g[b].total_cmp(&g[a]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let picks = select_disjoint(&ranked, n_per_topic, state.vocab_size)?;
    SeedSpec::new(
        state.topic_names.clone(),
        picks
            .into_iter()
            .map(|p| p.into_iter().map(|w| vocab.token(w).to_string()).collect())
            .collect(),
    )
}

/// Mean pairwise Jaccard similarity. Two empty sets count as identical.
pub fn topic_diversity<T: Ord>(word_sets: &[BTreeSet<T>]) -> Result<f64, TopicError> {
    let k = word_sets.len();
    if k < 2 {
        return Err(TopicError::Invalid(
            "topic diversity needs at least two sets".into(),
        ));
    }
    let mut total = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            let inter = word_sets[i].intersection(&word_sets[j]).count();
            let union = word_sets[i].union(&word_sets[j]).count();
            total += if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            };
        }
    }
    Ok(2.0 * total / (k * (k - 1)) as f64)
}

/// `lambda * P(w|t) + (1 - lambda) * P(w|t) / P(w)`. A token with no corpus
/// occurrences has no defined lift; its lift term is taken as zero.
pub fn relevance(state: &TopicModelState, w: usize, t: usize, lambda: f64) -> f64 {
    let p_wt = state.phi(t, w);
    let p_w = state.word_frequency(w);
    let lift = if p_w > 0.0 { p_wt / p_w } else { 0.0 };
    lambda * p_wt + (1.0 - lambda) * lift
}

/// The `n` most relevant tokens of topic `t`; ties by vocabulary index.
pub fn top_words(state: &TopicModelState, t: usize, n: usize, lambda: f64) -> Vec<usize> {
    let scores: Vec<f64> = (0..state.vocab_size)
        .map(|w| relevance(state, w, t, lambda))
        .collect();
    let mut idx: Vec<usize> = (0..state.vocab_size).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(n);
    idx
}

/// NPMI of two tokens from document counts: `n_i`, `n_j` documents containing
/// each, `n_ij` containing both, out of `n_docs`.
pub fn npmi_pair(n_i: usize, n_j: usize, n_ij: usize, n_docs: usize) -> f64 {
    let d = n_docs as f64;
    let joint = (n_ij as f64 / d + NPMI_EPSILON).min(1.0);
    if joint >= 1.0 {
        return 1.0;
    }
    let p_i = n_i as f64 / d + NPMI_EPSILON;
    let p_j = n_j as f64 / d + NPMI_EPSILON;
    ((joint / (p_i * p_j)).log2() / -joint.log2()).clamp(-1.0, 1.0)
}

/// Mean pairwise NPMI of each topic's `n_top` most relevant tokens, with
/// document-level co-occurrence.
pub fn topic_coherence_npmi(
    state: &TopicModelState,
    docs: &[Vec<usize>],
    n_top: usize,
    lambda: f64,
) -> Result<Vec<f64>, TopicError> {
    if n_top < 2 {
        return Err(TopicError::Invalid("n_top must be at least 2".into()));
    }
    if docs.is_empty() {
        return Err(TopicError::Invalid("no documents".into()));
    }
    let sets: Vec<BTreeSet<usize>> = docs.iter().map(|d| d.iter().copied().collect()).collect();
    let n_docs = docs.len();
    Ok((0..state.k)
        .map(|t| {
            let top = top_words(state, t, n_top, lambda);
            let count = |f: &dyn Fn(&BTreeSet<usize>) -> bool| sets.iter().filter(|s| f(s)).count();
            let mut sum = 0.0;
            let mut pairs = 0;
            for a in 0..top.len() {
                for b in a + 1..top.len() {
                    let (i, j) = (top[a], top[b]);
                    let n_i = count(&|s| s.contains(&i));
                    let n_j = count(&|s| s.contains(&j));
                    let n_ij = count(&|s| s.contains(&i) && s.contains(&j));
                    sum += npmi_pair(n_i, n_j, n_ij, n_docs);
                    pairs += 1;
                }
            }
            if pairs == 0 {
                0.0
            } else {
                sum / pairs as f64
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparamScore {
    pub alpha: f64,
    pub beta: f64,
    /// Mean over topics; `-inf` if the cell failed.
    pub mean_npmi: f64,
    pub per_topic: Vec<f64>,
}

/// The 6 × 6 default grid, alpha-major.
pub fn default_grid() -> Vec<(f64, f64)> {
    DEFAULT_GRID_VALUES
        .iter()
        .flat_map(|&a| DEFAULT_GRID_VALUES.iter().map(move |&b| (a, b)))
        .collect()
}

/// Fit one model per `(alpha, beta)` cell and return the cell with the
/// highest mean NPMI (first cell on ties) together with every cell's score.
/// `base` supplies sweeps, seed and boost rule.
pub fn select_hyperparams(
    docs: &[Vec<usize>],
    vocab: &Vocabulary,
    spec: &SeedSpec,
    grid: &[(f64, f64)],
    base: &GibbsParams,
    n_top: usize,
    lambda: f64,
) -> Result<((f64, f64), Vec<HyperparamScore>), TopicError> {
    if grid.is_empty() {
        return Err(TopicError::Invalid("empty hyperparameter grid".into()));
    }
    if grid.len() == 1 {
        let (alpha, beta) = grid[0];
        return Ok((
            grid[0],
            vec![HyperparamScore {
                alpha,
                beta,
                mean_npmi: f64::NAN,
                per_topic: Vec::new(),
            }],
        ));
    }
    let scores: Vec<HyperparamScore> = grid
        .par_iter()
        .map(|&(alpha, beta)| {
            let params = GibbsParams {
                alpha,
                beta,
                ..*base
            };
            let per_topic = fit_seeded_lda(docs, vocab, spec, &params)
                .and_then(|st| topic_coherence_npmi(&st, docs, n_top, lambda));
            match per_topic {
                Ok(per_topic) => HyperparamScore {
                    alpha,
                    beta,
                    mean_npmi: per_topic.iter().sum::<f64>() / per_topic.len() as f64,
                    per_topic,
                },
                Err(e) => {
                    log::warn!("topic grid cell ({alpha}, {beta}) failed: {e}");
                    HyperparamScore {
                        alpha,
                        beta,
                        mean_npmi: f64::NEG_INFINITY,
                        per_topic: Vec::new(),
                    }
                }
            }
        })
        .collect();
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.mean_npmi > scores[best].mean_npmi {
            best = i;
        }
    }
    Ok((grid[best], scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topiclab::build_vocabulary;
    use crate::topiclab::gibbs::tests::planted_two_topic;
    use proptest::prelude::*;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_tokens((0..n).map(|i| format!("w{i}")).collect()).unwrap()
    }

    /// Brute-force entropy over explicit (dominant topic, presence) pairs.
    fn oracle_ig(pairs: &[(usize, bool)], t: usize) -> f64 {
        let h = |xs: &[bool]| {
            if xs.is_empty() {
                return 0.0;
            }
            let p = xs.iter().filter(|&&b| b).count() as f64 / xs.len() as f64;
            let mut e = 0.0;
            for q in [p, 1.0 - p] {
                if q > 0.0 {
                    e -= q * q.log2();
                }
            }
            e
        };
        let all: Vec<bool> = pairs.iter().map(|&(d, _)| d == t).collect();
        let yes: Vec<bool> = pairs.iter().filter(|p| p.1).map(|&(d, _)| d == t).collect();
        let no: Vec<bool> = pairs
            .iter()
            .filter(|p| !p.1)
            .map(|&(d, _)| d == t)
            .collect();
        let n = pairs.len() as f64;
        h(&all) - yes.len() as f64 / n * h(&yes) - no.len() as f64 / n * h(&no)
    }

    /// Six documents over tokens w0..w4; dominant topics fixed by `z`.
    fn six_docs() -> (Vec<Vec<usize>>, Vec<Vec<u32>>) {
        let docs = vec![
            vec![0, 1, 1],
            vec![0, 2],
            vec![1, 3, 3],
            vec![2, 4],
            vec![0, 4, 4],
            vec![3, 1],
        ];
        let z = vec![
            vec![0, 0, 0],
            vec![1, 1],
            vec![2, 2, 2],
            vec![1, 1],
            vec![0, 2, 2],
            vec![0, 0],
        ];
        (docs, z)
    }

    #[test]
    fn information_gain_matches_entropy_oracle() {
        let (docs, z) = six_docs();
        let st = TopicModelState::from_assignments(&docs, z, 3, 5, 0.1, 0.1);
        let v = vocab(5);
        let dom: Vec<usize> = (0..6).map(|d| st.dominant_topic(d)).collect();
        assert_eq!(dom, vec![0, 1, 2, 1, 2, 0]);
        for w in 0..5 {
            let ig = information_gain(&st, &docs, &v, &format!("w{w}")).unwrap();
            let pairs: Vec<(usize, bool)> = docs
                .iter()
                .zip(&dom)
                .map(|(d, &t)| (t, d.contains(&w)))
                .collect();
            for t in 0..3 {
                assert!((ig[t] - oracle_ig(&pairs, t)).abs() < 1e-12, "w{w} t{t}");
                assert!(ig[t] >= -1e-12);
            }
        }
        // w1 sits in docs {0,2,5}; the topic-0 event is {0,5}. Frozen value.
        let ig1 = information_gain(&st, &docs, &v, "w1").unwrap()[0];
        assert!((ig1 - 0.459_147_917_027_244_8).abs() < 1e-12, "{ig1}");
        assert!(information_gain(&st, &docs, &v, "nope").is_err());
    }

    #[test]
    fn information_gain_edge_cases() {
        // w0 everywhere; w1 exactly in topic-1 documents
        let docs = vec![vec![0, 1], vec![0, 2], vec![0, 1], vec![0, 2]];
        let z = vec![vec![1, 1], vec![0, 0], vec![1, 1], vec![0, 0]];
        let st = TopicModelState::from_assignments(&docs, z, 2, 3, 0.1, 0.1);
        let v = vocab(3);
        assert!(information_gain(&st, &docs, &v, "w0")
            .unwrap()
            .iter()
            .all(|&g| g.abs() < 1e-15));
        let g1 = information_gain(&st, &docs, &v, "w1").unwrap();
        assert!((g1[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_top_tokens_are_dropped() {
        let ranked = vec![vec![5, 1, 2, 3], vec![5, 4, 6, 7]];
        assert_eq!(
            select_disjoint(&ranked, 2, 8).unwrap(),
            vec![vec![1, 2], vec![4, 6]]
        );
        let tight = vec![vec![0, 1], vec![0, 2]];
        assert!(matches!(
            select_disjoint(&tight, 2, 3),
            Err(TopicError::VocabularyTooSmall { .. })
        ));
    }

    #[test]
    fn contrastive_seeds_are_disjoint() {
        let mut docs_raw = Vec::new();
        for d in 0..90 {
            let prefix = ["sun", "rain", "snow"][d % 3];
            docs_raw.push(
                (0..8)
                    .map(|i| format!("{prefix}{}", (d + i) % 9))
                    .collect::<Vec<_>>(),
            );
        }
        let v = build_vocabulary(&docs_raw, 1).unwrap();
        let docs: Vec<Vec<usize>> = docs_raw.iter().map(|d| v.encode(d)).collect();
        let z: Vec<Vec<u32>> = (0..90).map(|d| vec![(d % 3) as u32; 8]).collect();
        let st = TopicModelState::from_assignments(&docs, z, 3, v.len(), 0.1, 0.1);
        let spec = contrastive_seeds(&st, &docs, &v, 4).unwrap();
        assert_eq!(spec.seeds.len(), 3);
        let all: BTreeSet<&String> = spec.seeds.iter().flatten().collect();
        assert_eq!(all.len(), 12);
        for (t, list) in spec.seeds.iter().enumerate() {
            let prefix = ["sun", "rain", "snow"][t];
            assert!(list.iter().all(|w| w.starts_with(prefix)), "{list:?}");
        }
        assert!(contrastive_seeds(&st, &docs, &v, 10).is_err());
    }

    #[test]
    fn diversity_cases() {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<BTreeSet<_>>();
        assert_eq!(
            topic_diversity(&[s(&["a", "b"]), s(&["a", "b"])]).unwrap(),
            1.0
        );
        assert_eq!(topic_diversity(&[s(&["a"]), s(&["b"])]).unwrap(), 0.0);
        assert_eq!(
            topic_diversity(&[s(&["a", "b", "c"]), s(&["b", "c", "d"])]).unwrap(),
            0.5
        );
        assert!(topic_diversity(&[s(&["a"])]).is_err());
    }

    /// Three tokens, two topics; hand-set counts.
    fn toy_state() -> TopicModelState {
        // topic 0: w0 x3, w1 x1 ; topic 1: w1 x2, w2 x4
        let docs = vec![vec![0, 0, 0, 1], vec![1, 1, 2, 2, 2, 2]];
        let z = vec![vec![0, 0, 0, 0], vec![1, 1, 1, 1, 1, 1]];
        TopicModelState::from_assignments(&docs, z, 2, 3, 0.5, 0.5)
    }

    #[test]
    fn relevance_by_hand() {
        let st = toy_state();
        // P(w1|t0) = (1 + 0.5) / (4 + 1.5) ; P(w1) = 3/10
        let p = 1.5 / 5.5;
        let want = 0.6 * p + 0.4 * p / 0.3;
        assert!((relevance(&st, 1, 0, 0.6) - want).abs() < 1e-12);
        // λ = 1 ranks by P(w|t); λ = 0 ranks by lift
        let by_p = top_words(&st, 1, 3, 1.0);
        let mut want_p: Vec<usize> = (0..3).collect();
        want_p.sort_by(|&a, &b| st.phi(1, b).total_cmp(&st.phi(1, a)).then(a.cmp(&b)));
        assert_eq!(by_p, want_p);
        let lift = |w: usize| st.phi(1, w) / st.word_frequency(w);
        let by_lift = top_words(&st, 1, 3, 0.0);
        let mut want_l: Vec<usize> = (0..3).collect();
        want_l.sort_by(|&a, &b| lift(b).total_cmp(&lift(a)).then(a.cmp(&b)));
        assert_eq!(by_lift, want_l);
    }

    #[test]
    fn npmi_reference_pairs() {
        // always together
        assert!((npmi_pair(3, 3, 3, 10) - 1.0).abs() < 1e-9);
        assert_eq!(npmi_pair(10, 10, 10, 10), 1.0);
        // independent: P(i,j) = P(i) P(j)
        assert!(npmi_pair(2, 2, 1, 4).abs() < 1e-9);
        assert!(npmi_pair(5, 4, 2, 10).abs() < 1e-9);
        // never together
        assert!(npmi_pair(3, 3, 0, 10) < -0.9);
    }

    #[test]
    fn coherence_matches_counting_oracle() {
        let docs = vec![
            vec![0, 1],
            vec![0, 1, 2],
            vec![2, 3],
            vec![1, 3],
            vec![0, 2, 3],
        ];
        let z = vec![
            vec![0, 0],
            vec![0, 0, 1],
            vec![1, 1],
            vec![0, 1],
            vec![0, 1, 1],
        ];
        let st = TopicModelState::from_assignments(&docs, z, 2, 4, 0.1, 0.1);
        let got = topic_coherence_npmi(&st, &docs, 3, DEFAULT_LAMBDA).unwrap();
        for t in 0..2 {
            let top = top_words(&st, t, 3, DEFAULT_LAMBDA);
            let mut vals = Vec::new();
            for a in 0..3 {
                for b in a + 1..3 {
                    let (i, j) = (top[a], top[b]);
                    let mut c = [0usize; 3];
                    for d in &docs {
                        let (hi, hj) = (d.contains(&i), d.contains(&j));
                        c[0] += hi as usize;
                        c[1] += hj as usize;
                        c[2] += (hi && hj) as usize;
                    }
                    let (pi, pj, pij) = (c[0] as f64 / 5.0, c[1] as f64 / 5.0, c[2] as f64 / 5.0);
                    vals.push((pij / (pi * pj)).log2() / -pij.log2());
                }
            }
            let want = vals.iter().sum::<f64>() / 3.0;
            assert!(
                (got[t] - want).abs() < 1e-9,
                "topic {t}: {} vs {want}",
                got[t]
            );
        }
        assert!(topic_coherence_npmi(&st, &docs, 1, 0.6).is_err());
    }

    #[test]
    fn grid_shapes() {
        let g = default_grid();
        assert_eq!(g.len(), 36);
        assert_eq!(g[0], (0.05, 0.05));
        assert_eq!(g[35], (10.0, 10.0));
        let (raw, _) = planted_two_topic(20, 1);
        let v = build_vocabulary(&raw, 1).unwrap();
        let docs: Vec<Vec<usize>> = raw.iter().map(|d| v.encode(d)).collect();
        let spec = SeedSpec::new(
            vec!["a".into(), "b".into()],
            vec![vec!["sun0".into()], vec!["rain0".into()]],
        )
        .unwrap();
        let base = GibbsParams::new(1.0, 1.0, 3);
        let (pick, _) = select_hyperparams(&docs, &v, &spec, &[(0.5, 5.0)], &base, 5, 0.6).unwrap();
        assert_eq!(pick, (0.5, 5.0));
    }

    proptest! {
        #[test]
        fn diversity_is_symmetric_and_bounded(
            sets in prop::collection::vec(prop::collection::btree_set(0u8..12, 0..6), 2..6),
            rot in 0usize..6,
        ) {
            let d = topic_diversity(&sets).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            let mut perm = sets.clone();
            let r = rot % perm.len();
            perm.rotate_left(r);
            perm.reverse();
            prop_assert!((topic_diversity(&perm).unwrap() - d).abs() < 1e-12);
        }

        #[test]
        fn npmi_is_bounded(n in 1usize..40, a in 0usize..40, b in 0usize..40, c in 0usize..40) {
            let (ni, nj) = (a.min(n), b.min(n));
            let nij = c.min(ni).min(nj);
            let v = npmi_pair(ni, nj, nij, n);
            prop_assert!((-1.0..=1.0).contains(&v));
        }
    }
}
