//! Synthetic corpora with planted effects.
//!
//! The log likes-rate of a post is
//!
//! ```text
//! user intercept
//!   + time_difference * ln(1 + days / 5)
//!   + sum of image-topic, caption-topic and color lifts
//!   + image_topic_fashion:color_B * fashion * B
//!   + period * min(period_hours, 250) / 250
//!   + n_image * (1 - ((n_image - 5) / 5)^2)
//!   + small linear effects of tags, hashtags, publicity and calendar
//!   + N(0, noise_sd^2)
//! ```
//!
//! and `like_count = round(exp(log_rate) * (days + 5))`. Topic presence and
//! image colors are independent of the user and of each other, so the
//! marginal lift of any single topic equals its coefficient. Every image of a
//! post carries labels from each of the post's image topics, drawn from
//! per-topic vocabularies that contain the bundled seed words, and the
//! representative color of every image sits inside its hue family's sector.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, PostRecord, UserRecord};
use crate::colorlab::{self, Hsv, MunsellHue, SectorTable};
use crate::features::time;
use crate::seeding::{self, Rng};
use crate::topiclab::SeedSpec;
use crate::vision::{ColorAnnotation, ImageAnnotation, LabelAnnotation};

/// Crawl time shared by every synthetic post: 2023-01-15T00:00:00Z.
pub const CRAWL_AT: i64 = 1_673_740_800;
/// Horizon (hours) at which the period effect saturates.
pub const PERIOD_CAP_HOURS: f64 = 250.0;
pub const IMAGE_TOPIC_PROB: f64 = 0.35;
pub const CAPTION_TOPIC_PROB: f64 = 0.3;

const GENERIC_LABELS: [&str; 10] = [
    "photograph",
    "font",
    "happy",
    "smile",
    "rectangle",
    "gesture",
    "fun",
    "pattern",
    "art",
    "event",
];

const LABEL_EXTRAS: [(&str, [&str; 6]); 5] = [
    (
        "fashion",
        [
            "outerwear",
            "collar",
            "waist",
            "pocket",
            "denim",
            "formal wear",
        ],
    ),
    (
        "food",
        [
            "tableware",
            "ingredient",
            "recipe",
            "dish",
            "cuisine",
            "plate",
        ],
    ),
    ("body", ["arm", "abdomen", "joint", "flesh", "leg", "hip"]),
    (
        "beauty",
        ["skin", "eyebrow", "eyelash", "lip", "nail", "perfume"],
    ),
    (
        "daily",
        ["sky", "tree", "cloud", "building", "vacation", "city"],
    ),
];

const CAPTION_EXTRAS: [(&str, [&str; 8]); 5] = [
    (
        "event",
        [
            "giveaway",
            "coupon",
            "sale",
            "launch",
            "celebrate",
            "lucky",
            "prize",
            "apply_now",
        ],
    ),
    (
        "beauty",
        [
            "serum",
            "toner",
            "foundation",
            "cushion",
            "glow",
            "moisture",
            "sunscreen",
            "pore",
        ],
    ),
    (
        "health",
        [
            "protein",
            "workout",
            "yoga",
            "wellness",
            "nutrition",
            "sleep",
            "immunity",
            "hydration",
        ],
    ),
    (
        "fashion",
        [
            "ootd",
            "denim",
            "coat",
            "sneakers",
            "outfit",
            "dress",
            "blouse",
            "accessory",
        ],
    ),
    (
        "daily",
        [
            "today", "weekend", "friends", "family", "walk", "coffee", "sunset", "memories",
        ],
    ),
];

const FILLER: [&str; 20] = [
    "so", "really", "with", "and", "the", "my", "you", "we", "love", "good", "happy", "thanks",
    "here", "this", "now", "more", "very", "just", "all", "new",
];

const HASHTAGS: [&str; 8] = [
    "instagood",
    "photooftheday",
    "daily",
    "korea",
    "seoul",
    "follow",
    "like",
    "mood",
];

/// Public holidays (Korea) covering the synthetic timeline.
pub const HOLIDAYS: [&str; 28] = [
    "2021-09-20",
    "2021-09-21",
    "2021-09-22",
    "2021-10-03",
    "2021-10-04",
    "2021-10-09",
    "2021-10-11",
    "2021-12-25",
    "2022-01-01",
    "2022-01-31",
    "2022-02-01",
    "2022-02-02",
    "2022-03-01",
    "2022-03-09",
    "2022-05-05",
    "2022-05-08",
    "2022-06-01",
    "2022-06-06",
    "2022-08-15",
    "2022-09-09",
    "2022-09-10",
    "2022-09-11",
    "2022-09-12",
    "2022-10-03",
    "2022-10-09",
    "2022-10-10",
    "2022-12-25",
    "2023-01-01",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub posts_per_user: usize,
    pub rng_seed: u64,
    /// Planted coefficients keyed by feature name; see [`default_effects`].
    pub effect_sizes: BTreeMap<String, f64>,
    pub noise_sd: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 40,
            posts_per_user: 100,
            rng_seed: 7,
            effect_sizes: default_effects(),
            noise_sd: 0.3,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let bad = |m: String| Err(CorpusError::Config(m));
        if self.n_users < 2 {
            return bad("n_users must be at least 2".into());
        }
        if self.posts_per_user < 10 {
            return bad("posts_per_user must be at least 10".into());
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be positive".into());
        }
        let known: BTreeSet<String> = default_effects().into_keys().collect();
        for (k, v) in &self.effect_sizes {
            if !known.contains(k) {
                return bad(format!("unknown effect `{k}`"));
            }
            if !v.is_finite() {
                return bad(format!("effect `{k}` is not finite"));
            }
        }
        if self.resolved_effects()["user_intercept_sd"] < 0.0 {
            return bad("user_intercept_sd must be non-negative".into());
        }
        Ok(())
    }

    /// Every known effect: configured value, else the default.
    pub fn resolved_effects(&self) -> BTreeMap<String, f64> {
        let mut m = default_effects();
        for (k, v) in &self.effect_sizes {
            m.insert(k.clone(), *v);
        }
        m
    }
}

/// The default planted model. Time difference carries the largest effect.
pub fn default_effects() -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: f64| {
        m.insert(k.to_string(), v);
    };
    put("user_intercept_mean", 3.0);
    put("user_intercept_sd", 1.0);
    put("time_difference", -1.0);
    put("image_topic_fashion", 0.5);
    put("image_topic_food", 0.0);
    put("image_topic_body", 0.5);
    put("image_topic_beauty", -0.4);
    put("image_topic_daily", 0.1);
    put("caption_topic_event", 0.3);
    put("caption_topic_beauty", 0.1);
    put("caption_topic_health", -0.1);
    put("caption_topic_fashion", 0.1);
    put("caption_topic_daily", -0.2);
    for h in MunsellHue::ALL {
        put(&format!("color_{h}"), 0.0);
    }
    put("color_GY", 0.3);
    put("color_PB", 0.3);
    put("image_topic_fashion:color_B", 0.5);
    put("period", 0.4);
    put("n_image", 0.3);
    put("n_reels", 0.0);
    put("n_hashtag", 0.01);
    put("tagged_place", 0.05);
    put("n_tagged_id", 0.02);
    put("public", 0.05);
    put("weekdays", -0.1);
    put("holiday", 0.1);
    put("hour_18_21", 0.15);
    put("hour_21_24", 0.15);
    m
}

fn forms() -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("time_difference".into(), "coef * ln(1 + days / 5)".into());
    m.insert(
        "period".into(),
        format!("coef * min(period_hours, {PERIOD_CAP_HOURS}) / {PERIOD_CAP_HOURS}"),
    );
    m.insert(
        "n_image".into(),
        "coef * (1 - ((n_image - 5) / 5)^2)".into(),
    );
    m.insert(
        "image_topic_fashion:color_B".into(),
        "coef * image_topic_fashion * color_B".into(),
    );
    m.insert(
        "user_intercept_sd".into(),
        "user intercept ~ N(user_intercept_mean, sd^2)".into(),
    );
    m
}

/// Per-post planted quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostTruth {
    pub log_rate: f64,
    pub noise: f64,
    /// Presence per image-label topic, bundled label-topic order.
    pub image_topics: Vec<u8>,
    /// Presence per caption topic, bundled caption-topic order.
    pub caption_topics: Vec<u8>,
    pub color_bits: [u8; 10],
}

/// Sidecar written next to a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub coefficients: BTreeMap<String, f64>,
    /// Functional form of the non-linear terms.
    pub forms: BTreeMap<String, String>,
    pub noise_sd: f64,
    pub image_topic_prob: f64,
    pub caption_topic_prob: f64,
    pub image_topic_names: Vec<String>,
    pub caption_topic_names: Vec<String>,
    pub user_intercepts: BTreeMap<u64, f64>,
    pub posts: BTreeMap<String, PostTruth>,
}

impl GroundTruth {
    pub const FILE: &'static str = "ground_truth.json";

    pub fn save(&self, dir: &Path) -> Result<(), CorpusError> {
        let path = dir.join(Self::FILE);
        fs::write(
            &path,
            serde_json::to_string_pretty(self).expect("serializable"),
        )
        .map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(dir: &Path) -> Result<GroundTruth, CorpusError> {
        super::read_json(&dir.join(Self::FILE))
    }

    /// Closed-form expected gap in mean log-rate between posts with and
    /// without an image topic: its coefficient plus the interaction share.
    pub fn expected_image_topic_lift(&self, topic: &str) -> f64 {
        self.coefficients
            .get(&format!("image_topic_{topic}"))
            .copied()
            .unwrap_or(0.0)
            + if topic == "fashion" {
                self.coefficients
                    .get("image_topic_fashion:color_B")
                    .copied()
                    .unwrap_or(0.0)
                    * self.blue_share()
            } else {
                0.0
            }
    }

    fn blue_share(&self) -> f64 {
        let n = self.posts.len().max(1) as f64;
        self.posts
            .values()
            .filter(|p| p.color_bits[MunsellHue::B.index()] == 1)
            .count() as f64
            / n
    }
}

fn pick_distinct<'a>(rng: &mut Rng, pool: &[&'a str], n: usize) -> Vec<&'a str> {
    pool.choose_multiple(rng, n.min(pool.len()))
        .copied()
        .collect()
}

/// An RGB triple whose Munsell family is `family`, inside the sector.
fn color_in_family(rng: &mut Rng, family: MunsellHue) -> [u8; 3] {
    let table = SectorTable::bundled();
    let bounds = table.lower_bounds().expect("bundled table is valid");
    let lo = bounds[family.index()];
    let width = (bounds[(family.index() + 1) % 10] - lo).rem_euclid(360.0);
    for _ in 0..200 {
        let hsv = Hsv {
            hue: (lo + width * rng.random_range(0.2..0.8)).rem_euclid(360.0),
            saturation: rng.random_range(0.45..0.9),
            value: rng.random_range(0.45..0.95),
        };
        let rgb = colorlab::hsv_to_rgb(hsv);
        if colorlab::rgb_to_munsell_hue(rgb) == family {
            return rgb;
        }
    }
    colorlab::hsv_to_rgb(Hsv {
        hue: lo + width / 2.0,
        saturation: 0.8,
        value: 0.8,
    })
}

struct Vocab {
    label_topics: Vec<Vec<String>>,
    caption_topics: Vec<Vec<String>>,
    label_names: Vec<String>,
    caption_names: Vec<String>,
}

fn vocab() -> Vocab {
    let labels = SeedSpec::default_labels();
    let captions = SeedSpec::default_captions();
    let extend = |spec: &SeedSpec, extras: &[(&str, &[&str])]| -> Vec<Vec<String>> {
        spec.topic_names
            .iter()
            .zip(&spec.seeds)
            .map(|(name, seeds)| {
                let mut words = seeds.clone();
                let (_, more) = extras
                    .iter()
                    .find(|(n, _)| n == name)
                    .expect("extras for every topic");
                words.extend(more.iter().map(|s| s.to_string()));
                words
            })
            .collect()
    };
    let label_extras: Vec<(&str, &[&str])> =
        LABEL_EXTRAS.iter().map(|(n, w)| (*n, &w[..])).collect();
    let caption_extras: Vec<(&str, &[&str])> =
        CAPTION_EXTRAS.iter().map(|(n, w)| (*n, &w[..])).collect();
    Vocab {
        label_topics: extend(&labels, &label_extras),
        caption_topics: extend(&captions, &caption_extras),
        label_names: labels.topic_names,
        caption_names: captions.topic_names,
    }
}

fn make_image(
    rng: &mut Rng,
    vocab: &Vocab,
    image_id: String,
    present: &[usize],
    family: MunsellHue,
) -> ImageAnnotation {
    let mut labels = Vec::new();
    let mut used = BTreeSet::new();
    let mut push = |labels: &mut Vec<LabelAnnotation>, d: &str, score: f64| {
        if used.insert(d.to_string()) {
            labels.push(LabelAnnotation {
                description: d.to_string(),
                score: (score * 1e4).round() / 1e4,
            });
        }
    };
    for &t in present {
        let pool: Vec<&str> = vocab.label_topics[t].iter().map(String::as_str).collect();
        let n = rng.random_range(3..=5);
        for w in pick_distinct(rng, &pool, n) {
            let s = rng.random_range(0.6..0.98);
            push(&mut labels, w, s);
        }
    }
    let n_generic = if present.is_empty() {
        rng.random_range(3..=5)
    } else {
        rng.random_range(1..=2)
    };
    for w in pick_distinct(rng, &GENERIC_LABELS, n_generic) {
        let s = rng.random_range(0.55..0.95);
        push(&mut labels, w, s);
    }
    // low-confidence labels that the score filter removes
    let all: Vec<&str> = vocab
        .label_topics
        .iter()
        .flatten()
        .map(String::as_str)
        .collect();
    let n_noise = rng.random_range(1..=3);
    for w in pick_distinct(rng, &all, n_noise) {
        let s = rng.random_range(0.2..0.49);
        push(&mut labels, w, s);
    }
    labels.sort_by(|a, b| b.score.total_cmp(&a.score));

    let rep_fraction: f64 = rng.random_range(0.25..0.45);
    let mut colors = vec![ColorAnnotation {
        rgb: color_in_family(rng, family),
        pixel_fraction: (rep_fraction * 1e4).round() / 1e4,
    }];
    for _ in 0..rng.random_range(2..=6) {
        let f: f64 = rng.random_range(0.01..rep_fraction * 0.9);
        colors.push(ColorAnnotation {
            rgb: [rng.random(), rng.random(), rng.random()],
            pixel_fraction: (f * 1e4).round() / 1e4,
        });
    }
    colors.shuffle(rng);
    ImageAnnotation {
        image_id,
        labels,
        colors,
    }
}

fn make_caption(rng: &mut Rng, vocab: &Vocab, topics: &[u8], n_hashtags: u32) -> String {
    let mut words: Vec<String> = Vec::new();
    for (t, &on) in topics.iter().enumerate() {
        if on == 1 {
            let pool: Vec<&str> = vocab.caption_topics[t].iter().map(String::as_str).collect();
            let n = rng.random_range(3..=6);
            words.extend(pick_distinct(rng, &pool, n).into_iter().map(String::from));
        }
    }
    for _ in 0..rng.random_range(4..=10) {
        words.push(FILLER.choose(rng).expect("non-empty").to_string());
    }
    words.shuffle(rng);
    for _ in 0..n_hashtags {
        words.push(format!("#{}", HASHTAGS.choose(rng).expect("non-empty")));
    }
    words.join(" ")
}

/// Generate a corpus and its ground truth. Deterministic in the config.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<(Corpus, GroundTruth), CorpusError> {
    cfg.validate()?;
    let vocab = vocab();
    let holidays: BTreeSet<NaiveDate> = HOLIDAYS
        .iter()
        .map(|s| s.parse().expect("valid holiday literal"))
        .collect();
    let effects = cfg.resolved_effects();
    let eff = |k: &str| effects.get(k).copied().unwrap_or(0.0);
    let noise = Normal::new(0.0, cfg.noise_sd).expect("positive sd");
    let intercept =
        Normal::new(eff("user_intercept_mean"), eff("user_intercept_sd")).expect("valid sd");

    let mut corpus = Corpus {
        holidays: holidays.clone(),
        ..Corpus::default()
    };
    let mut truth = GroundTruth {
        coefficients: effects.clone(),
        forms: forms(),
        noise_sd: cfg.noise_sd,
        image_topic_prob: IMAGE_TOPIC_PROB,
        caption_topic_prob: CAPTION_TOPIC_PROB,
        image_topic_names: vocab.label_names.clone(),
        caption_topic_names: vocab.caption_names.clone(),
        user_intercepts: BTreeMap::new(),
        posts: BTreeMap::new(),
    };

    for u in 0..cfg.n_users {
        let user_id = (u + 1) as u64;
        let mut rng = seeding::rng_for(cfg.rng_seed, &format!("synth/user/{user_id}"));
        let b_u = intercept.sample(&mut rng);
        truth.user_intercepts.insert(user_id, b_u);

        let mean_gap: f64 = rng.random_range(40.0..110.0);
        let gap = Exp::new(1.0 / mean_gap).expect("positive rate");
        let n = cfg.posts_per_user;
        let mut times = vec![0i64; n];
        let mut t = CRAWL_AT - (rng.random_range(1.0..20.0) * time::SECONDS_PER_DAY) as i64;
        for slot in times.iter_mut().rev() {
            *slot = t;
            let hours = 1.0 + gap.sample(&mut rng);
            t -= (hours * 3600.0) as i64;
        }

        let mut post_ids = Vec::with_capacity(n);
        for (i, &posted_at) in times.iter().enumerate() {
            let post_id = format!("u{user_id:03}p{i:03}");
            let prev = (i > 0).then(|| times[i - 1]);
            let tf = time::time_features(posted_at, prev, &holidays, 0);
            let days = time::time_difference_days(posted_at, CRAWL_AT);

            let n_images = 1 + (0..9).filter(|_| rng.random_bool(0.3)).count();
            let n_reels = if rng.random_bool(0.85) {
                0
            } else {
                rng.random_range(1..=3)
            };
            let likes_public = rng.random_bool(0.9);
            let has_tagged_place = rng.random_bool(0.3);
            let n_tagged_ids = if rng.random_bool(0.6) {
                0
            } else {
                rng.random_range(1..=5)
            };
            let n_hashtags = rng.random_range(0..=30u32);

            let image_topics: Vec<u8> = (0..5)
                .map(|_| u8::from(rng.random_bool(IMAGE_TOPIC_PROB)))
                .collect();
            let caption_topics: Vec<u8> = (0..5)
                .map(|_| u8::from(rng.random_bool(CAPTION_TOPIC_PROB)))
                .collect();
            let present: Vec<usize> = (0..5).filter(|&t| image_topics[t] == 1).collect();

            let mut images = Vec::with_capacity(n_images);
            let mut bits = [0u8; 10];
            for j in 0..n_images {
                let family = MunsellHue::ALL[rng.random_range(0..10)];
                bits[family.index()] = 1;
                images.push(make_image(
                    &mut rng,
                    &vocab,
                    format!("{post_id}_i{j}"),
                    &present,
                    family,
                ));
            }
            let caption = make_caption(&mut rng, &vocab, &caption_topics, n_hashtags);

            let mut lr = b_u + eff("time_difference") * (1.0 + days / 5.0).ln();
            for (t, name) in vocab.label_names.iter().enumerate() {
                lr += eff(&format!("image_topic_{name}")) * image_topics[t] as f64;
            }
            for (t, name) in vocab.caption_names.iter().enumerate() {
                lr += eff(&format!("caption_topic_{name}")) * caption_topics[t] as f64;
            }
            for h in MunsellHue::ALL {
                lr += eff(&format!("color_{h}")) * bits[h.index()] as f64;
            }
            let fashion = vocab
                .label_names
                .iter()
                .position(|n| n == "fashion")
                .expect("fashion topic");
            lr += eff("image_topic_fashion:color_B")
                * (image_topics[fashion] * bits[MunsellHue::B.index()]) as f64;
            let period = tf.period_hours.unwrap_or(mean_gap);
            lr += eff("period") * period.min(PERIOD_CAP_HOURS) / PERIOD_CAP_HOURS;
            let ni = n_images as f64;
            lr += eff("n_image") * (1.0 - ((ni - 5.0) / 5.0).powi(2));
            lr += eff("n_reels") * n_reels as f64;
            lr += eff("n_hashtag") * n_hashtags as f64;
            lr += eff("tagged_place") * f64::from(u8::from(has_tagged_place));
            lr += eff("n_tagged_id") * n_tagged_ids as f64;
            lr += eff("public") * f64::from(u8::from(likes_public));
            lr += eff("weekdays") * tf.weekdays as f64;
            lr += eff("holiday") * tf.holiday as f64;
            lr += eff(&format!("hour_{}", time::HOUR_BIN_NAMES[tf.hour_bin]));
            let e = noise.sample(&mut rng);
            lr += e;
            let like_count = (lr.exp() * (days + time::DEFAULT_RESPONSE_OFFSET))
                .round()
                .max(0.0) as i64;

            corpus.posts.push(PostRecord {
                post_id: post_id.clone(),
                user_id,
                posted_at,
                crawled_at: CRAWL_AT,
                like_count,
                likes_public,
                n_images,
                n_reels,
                has_tagged_place,
                n_tagged_ids,
                n_hashtags,
                caption,
                image_ids: images.iter().map(|a| a.image_id.clone()).collect(),
            });
            corpus.annotations.insert(post_id.clone(), images);
            truth.posts.insert(
                post_id.clone(),
                PostTruth {
                    log_rate: lr,
                    noise: e,
                    image_topics,
                    caption_topics,
                    color_bits: bits,
                },
            );
            post_ids.push(post_id);
        }
        corpus.users.push(UserRecord { user_id, post_ids });
    }
    Ok((corpus, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{load_corpus, save_corpus, validate};
    use crate::features::time::response_transform;
    use crate::vision::representative_color;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_users: 4,
            posts_per_user: 12,
            rng_seed: seed,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn size_contract() {
        let (c, t) = synth_corpus(&SynthConfig::default()).unwrap();
        assert_eq!(c.users.len(), 40);
        assert_eq!(c.posts.len(), 4000);
        assert!(c.users.iter().all(|u| u.post_ids.len() == 100));
        assert_eq!(t.posts.len(), 4000);
        assert_eq!(validate(&c), vec![]);
    }

    #[test]
    fn deterministic_bytes() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        for d in [&a, &b] {
            let (c, t) = synth_corpus(&small(3)).unwrap();
            save_corpus(&c, d.path()).unwrap();
            t.save(d.path()).unwrap();
        }
        for f in [
            "posts.jsonl",
            "users.json",
            "holidays.json",
            GroundTruth::FILE,
        ] {
            assert_eq!(
                fs::read(a.path().join(f)).unwrap(),
                fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
        let (c2, _) = synth_corpus(&small(4)).unwrap();
        assert_ne!(load_corpus(a.path()).unwrap(), c2);
    }

    #[test]
    fn round_trip_and_sidecar() {
        let d = tempfile::tempdir().unwrap();
        let (c, t) = synth_corpus(&small(5)).unwrap();
        save_corpus(&c, d.path()).unwrap();
        t.save(d.path()).unwrap();
        assert_eq!(load_corpus(d.path()).unwrap(), c);
        assert_eq!(GroundTruth::load(d.path()).unwrap(), t);
    }

    #[test]
    fn planted_colors_are_recoverable() {
        let (c, t) = synth_corpus(&small(6)).unwrap();
        for p in &c.posts {
            let hues: Vec<MunsellHue> = c
                .images(&p.post_id)
                .iter()
                .map(|a| colorlab::rgb_to_munsell_hue(representative_color(a).unwrap()))
                .collect();
            let v = colorlab::post_color_vector(&hues).unwrap();
            assert_eq!(v.bits, t.posts[&p.post_id].color_bits, "{}", p.post_id);
        }
    }

    #[test]
    fn response_tracks_planted_rate() {
        let (c, t) = synth_corpus(&small(8)).unwrap();
        for p in &c.posts {
            let y = response_transform(p.like_count, p.posted_at, p.crawled_at, 5.0);
            let lr = t.posts[&p.post_id].log_rate;
            // rounding of the like count only
            let days = time::time_difference_days(p.posted_at, p.crawled_at);
            let slack = (0.5 / (lr.exp() * (days + 5.0) - 0.5)).ln_1p();
            assert!(
                (y - lr).abs() <= slack + 1e-9 || p.like_count <= 1,
                "{}: {y} vs {lr}",
                p.post_id
            );
        }
    }

    #[test]
    fn config_checks() {
        let mut c = SynthConfig::default();
        c.n_users = 1;
        assert!(synth_corpus(&c).is_err());
        let mut c = SynthConfig::default();
        c.posts_per_user = 9;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.noise_sd = 0.0;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.effect_sizes.insert("bogus".into(), 1.0);
        assert!(c.validate().is_err());
    }

    /// Monte-Carlo check of the planted Body lift against the closed form.
    #[test]
    fn body_lift_matches_closed_form() {
        let mut cfg = SynthConfig::default();
        cfg.effect_sizes.insert("image_topic_body".into(), 0.8);
        let (c, t) = synth_corpus(&cfg).unwrap();
        let body = t
            .image_topic_names
            .iter()
            .position(|n| n == "body")
            .unwrap();
        let (mut on, mut off) = (Vec::new(), Vec::new());
        for p in &c.posts {
            let y = response_transform(p.like_count, p.posted_at, p.crawled_at, 5.0);
            if t.posts[&p.post_id].image_topics[body] == 1 {
                on.push(y);
            } else {
                off.push(y);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let var = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
        };
        let diff = mean(&on) - mean(&off);
        let se = (var(&on) / on.len() as f64 + var(&off) / off.len() as f64).sqrt();
        let want = t.expected_image_topic_lift("body");
        assert_eq!(want, 0.8);
        assert!(
            (diff - want).abs() <= 3.0 * se,
            "diff {diff}, want {want} ± {}",
            3.0 * se
        );
    }
}
