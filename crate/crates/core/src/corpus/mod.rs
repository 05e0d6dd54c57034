//! Users, posts and their image annotations.
//!
//! A corpus lives in a directory with three files:
//!
//! - `posts.jsonl`: one post per line, image annotations embedded under `images`
//! - `users.json`: array of user ids
//! - `holidays.json`: array of ISO dates
//!
//! [`synth`] generates corpora with planted effects.

pub mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::vision::{self, ImageAnnotation, VisionError};

pub use synth::{synth_corpus, GroundTruth, SynthConfig};

pub type UserId = u64;
pub type PostId = String;

/// Most images a single post may carry.
pub const MAX_IMAGES: usize = 10;

pub const POSTS_FILE: &str = "posts.jsonl";
pub const USERS_FILE: &str = "users.json";
pub const HOLIDAYS_FILE: &str = "holidays.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Invalid(Violation),
    #[error("invalid synth config: {0}")]
    Config(String),
}

/// One broken invariant. `entity` is e.g. `post p12` or `user 3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub entity: String,
    pub rule: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.entity, self.rule)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: UserId,
    /// Ordered by posting time.
    pub post_ids: Vec<PostId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: PostId,
    pub user_id: UserId,
    /// UTC seconds.
    pub posted_at: i64,
    /// UTC seconds.
    pub crawled_at: i64,
    /// Signed so that corrupt input can be represented and reported.
    pub like_count: i64,
    pub likes_public: bool,
    pub n_images: usize,
    pub n_reels: u32,
    pub has_tagged_place: bool,
    pub n_tagged_ids: u32,
    pub n_hashtags: u32,
    pub caption: String,
    pub image_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub users: Vec<UserRecord>,
    pub posts: Vec<PostRecord>,
    pub annotations: BTreeMap<PostId, Vec<ImageAnnotation>>,
    pub holidays: BTreeSet<NaiveDate>,
}

impl Corpus {
    pub fn post_index(&self) -> HashMap<&str, usize> {
        self.posts
            .iter()
            .enumerate()
            .map(|(i, p)| (p.post_id.as_str(), i))
            .collect()
    }

    pub fn images(&self, post_id: &str) -> &[ImageAnnotation] {
        self.annotations
            .get(post_id)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Rebuild `users[*].post_ids` from the posts, keeping the user list.
    pub fn reindex_users(&mut self) {
        let mut by_user: BTreeMap<UserId, Vec<(i64, &str)>> = BTreeMap::new();
        for p in &self.posts {
            by_user
                .entry(p.user_id)
                .or_default()
                .push((p.posted_at, &p.post_id));
        }
        for u in &mut self.users {
            let mut ps = by_user.remove(&u.user_id).unwrap_or_default();
            ps.sort();
            u.post_ids = ps.into_iter().map(|(_, id)| id.to_string()).collect();
        }
    }
}

fn violation(entity: String, rule: impl Into<String>) -> Violation {
    Violation {
        entity,
        rule: rule.into(),
    }
}

/// Every broken invariant, in a deterministic order. Empty iff the corpus is
/// valid.
pub fn validate(corpus: &Corpus) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut user_ids = HashSet::new();
    for u in &corpus.users {
        let who = format!("user {}", u.user_id);
        if !user_ids.insert(u.user_id) {
            out.push(violation(who.clone(), "duplicate user_id"));
        }
        if u.post_ids.is_empty() {
            out.push(violation(who.clone(), "user has no posts"));
        }
    }

    let mut post_ids = HashSet::new();
    let mut posted: HashMap<&str, (UserId, i64)> = HashMap::new();
    for p in &corpus.posts {
        let who = format!("post {}", p.post_id);
        if !post_ids.insert(p.post_id.as_str()) {
            out.push(violation(who.clone(), "duplicate post_id"));
        }
        posted.insert(&p.post_id, (p.user_id, p.posted_at));
        if !user_ids.contains(&p.user_id) {
            out.push(violation(
                who.clone(),
                format!("references unknown user {}", p.user_id),
            ));
        }
        if p.crawled_at < p.posted_at {
            out.push(violation(who.clone(), "crawled_at precedes posted_at"));
        }
        if p.like_count < 0 {
            out.push(violation(who.clone(), "like_count is negative"));
        }
        if p.n_images != p.image_ids.len() {
            out.push(violation(
                who.clone(),
                "n_images differs from the number of image_ids",
            ));
        }
        if p.n_images == 0 {
            if p.n_reels == 0 {
                out.push(violation(who.clone(), "post has no content"));
            } else {
                out.push(violation(
                    who.clone(),
                    "post has no images (video-only posts are excluded)",
                ));
            }
        }
        if p.n_images > MAX_IMAGES {
            out.push(violation(
                who.clone(),
                format!("more than {MAX_IMAGES} images"),
            ));
        }
        match corpus.annotations.get(&p.post_id) {
            Some(anns) if anns.len() != p.n_images => out.push(violation(
                who.clone(),
                format!("{} annotations for {} images", anns.len(), p.n_images),
            )),
            None if p.n_images > 0 => out.push(violation(who.clone(), "missing annotations")),
            _ => {}
        }
    }

    for u in &corpus.users {
        let who = format!("user {}", u.user_id);
        let mut prev = i64::MIN;
        for pid in &u.post_ids {
            match posted.get(pid.as_str()) {
                None => out.push(violation(who.clone(), format!("lists unknown post {pid}"))),
                Some(&(owner, t)) => {
                    if owner != u.user_id {
                        out.push(violation(
                            who.clone(),
                            format!("lists post {pid} owned by user {owner}"),
                        ));
                    }
                    if t < prev {
                        out.push(violation(who.clone(), "post_ids not sorted by posted_at"));
                    }
                    prev = t;
                }
            }
        }
    }

    for (pid, anns) in &corpus.annotations {
        if !post_ids.contains(pid.as_str()) {
            out.push(violation(
                format!("annotation {pid}"),
                "references unknown post",
            ));
            continue;
        }
        for a in anns {
            if let Err(e) = a.check() {
                out.push(violation(
                    format!("post {pid}"),
                    format!("image {}: {e}", a.image_id),
                ));
            }
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
struct PostLine {
    user_id: UserId,
    post_id: PostId,
    posted_at: i64,
    crawled_at: i64,
    like_count: i64,
    likes_public: bool,
    n_reels: u32,
    has_tagged_place: bool,
    n_tagged_ids: u32,
    n_hashtags: u32,
    caption: String,
    images: Vec<Value>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CorpusError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CorpusError::Parse {
        file: path.display().to_string(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Load and validate a corpus directory. The first violation, if any, is
/// returned as an error.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let user_ids: Vec<UserId> = read_json(&dir.join(USERS_FILE))?;
    let holidays: BTreeSet<NaiveDate> = read_json(&dir.join(HOLIDAYS_FILE))?;

    let posts_path = dir.join(POSTS_FILE);
    let file = fs::File::open(&posts_path).map_err(io_err(&posts_path))?;
    let mut posts = Vec::new();
    let mut annotations = BTreeMap::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(io_err(&posts_path))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |message: String| CorpusError::Parse {
            file: posts_path.display().to_string(),
            line: lineno,
            message,
        };
        let pl: PostLine = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
        let anns = pl
            .images
            .iter()
            .enumerate()
            .map(|(j, raw)| {
                vision::parse_vision_response(raw).map_err(|e| match e {
                    VisionError::Schema { field, reason } => {
                        parse(format!("images[{j}].{field}: {reason}"))
                    }
                    other => parse(other.to_string()),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        posts.push(PostRecord {
            post_id: pl.post_id.clone(),
            user_id: pl.user_id,
            posted_at: pl.posted_at,
            crawled_at: pl.crawled_at,
            like_count: pl.like_count,
            likes_public: pl.likes_public,
            n_images: anns.len(),
            n_reels: pl.n_reels,
            has_tagged_place: pl.has_tagged_place,
            n_tagged_ids: pl.n_tagged_ids,
            n_hashtags: pl.n_hashtags,
            caption: pl.caption,
            image_ids: anns.iter().map(|a| a.image_id.clone()).collect(),
        });
        annotations.insert(pl.post_id, anns);
    }

    let mut corpus = Corpus {
        users: user_ids
            .into_iter()
            .map(|user_id| UserRecord {
                user_id,
                post_ids: Vec::new(),
            })
            .collect(),
        posts,
        annotations,
        holidays,
    };
    corpus.reindex_users();
    if let Some(v) = validate(&corpus).into_iter().next() {
        return Err(CorpusError::Invalid(v));
    }
    Ok(corpus)
}

/// Write a corpus directory readable by [`load_corpus`].
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let users: Vec<UserId> = corpus.users.iter().map(|u| u.user_id).collect();
    write_json(&dir.join(USERS_FILE), &users)?;
    write_json(&dir.join(HOLIDAYS_FILE), &corpus.holidays)?;

    let path = dir.join(POSTS_FILE);
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    for p in &corpus.posts {
        let images = corpus
            .images(&p.post_id)
            .iter()
            .map(|a| serde_json::to_value(a).expect("annotations serialize"))
            .collect();
        let line = PostLine {
            user_id: p.user_id,
            post_id: p.post_id.clone(),
            posted_at: p.posted_at,
            crawled_at: p.crawled_at,
            like_count: p.like_count,
            likes_public: p.likes_public,
            n_reels: p.n_reels,
            has_tagged_place: p.has_tagged_place,
            n_tagged_ids: p.n_tagged_ids,
            n_hashtags: p.n_hashtags,
            caption: p.caption.clone(),
            images,
        };
        serde_json::to_writer(&mut w, &line).expect("post line serializes");
        w.write_all(b"\n").map_err(io_err(&path))?;
    }
    w.flush().map_err(io_err(&path))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CorpusError> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vision::{ColorAnnotation, LabelAnnotation};

    fn image(id: &str) -> ImageAnnotation {
        ImageAnnotation {
            image_id: id.into(),
            labels: vec![LabelAnnotation {
                description: "food".into(),
                score: 0.9,
            }],
            colors: vec![ColorAnnotation {
                rgb: [77, 153, 231],
                pixel_fraction: 0.4,
            }],
        }
    }

    fn tiny() -> Corpus {
        let mut c = Corpus::default();
        for u in 0..2u64 {
            c.users.push(UserRecord {
                user_id: u,
                post_ids: vec![],
            });
            for k in 0..3 {
                let pid = format!("u{u}p{k}");
                let img = format!("{pid}i0");
                c.posts.push(PostRecord {
                    post_id: pid.clone(),
                    user_id: u,
                    posted_at: 1_640_995_200 + 3600 * k,
                    crawled_at: 1_641_995_200,
                    like_count: 10 + k,
                    likes_public: true,
                    n_images: 1,
                    n_reels: 0,
                    has_tagged_place: false,
                    n_tagged_ids: 0,
                    n_hashtags: 2,
                    caption: "lunch #food".into(),
                    image_ids: vec![img.clone()],
                });
                c.annotations.insert(pid, vec![image(&img)]);
            }
        }
        c.holidays
            .insert(NaiveDate::from_ymd_opt(2022, 1, 1).unwrap());
        c.reindex_users();
        c
    }

    fn post_mut<'a>(c: &'a mut Corpus, id: &str) -> &'a mut PostRecord {
        c.posts.iter_mut().find(|p| p.post_id == id).unwrap()
    }

    #[test]
    fn valid_corpus_has_no_violations() {
        assert_eq!(validate(&tiny()), vec![]);
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let c = tiny();
        save_corpus(&c, dir.path()).unwrap();
        let back = load_corpus(dir.path()).unwrap();
        assert_eq!(back.users.len(), 2);
        assert_eq!(back.posts.len(), 6);
        assert_eq!(back, c);
        let dir2 = tempfile::tempdir().unwrap();
        save_corpus(&back, dir2.path()).unwrap();
        assert_eq!(load_corpus(dir2.path()).unwrap(), back);
    }

    #[test]
    fn negative_likes_is_one_violation() {
        let mut c = tiny();
        post_mut(&mut c, "u0p1").like_count = -1;
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].entity, "post u0p1");
    }

    #[test]
    fn annotation_count_mismatch_is_one_violation() {
        let mut c = tiny();
        c.annotations.get_mut("u1p2").unwrap().push(image("extra"));
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("annotations"));
    }

    #[test]
    fn load_rejects_crawl_before_post() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny();
        post_mut(&mut c, "u1p0").crawled_at = 0;
        save_corpus(&c, dir.path()).unwrap();
        let err = load_corpus(dir.path()).unwrap_err().to_string();
        assert!(err.contains("u1p0") && err.contains("crawled_at"), "{err}");
    }

    #[test]
    fn load_rejects_empty_posts() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = tiny();
        {
            let p = post_mut(&mut c, "u0p2");
            p.n_images = 0;
            p.image_ids.clear();
        }
        c.annotations.insert("u0p2".into(), vec![]);
        save_corpus(&c, dir.path()).unwrap();
        let err = load_corpus(dir.path()).unwrap_err().to_string();
        assert!(
            err.contains("u0p2") && err.contains("post has no content"),
            "{err}"
        );

        post_mut(&mut c, "u0p2").n_reels = 2;
        let v = validate(&c);
        assert_eq!(v.len(), 1);
        assert!(v[0].rule.contains("video-only"));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        save_corpus(&tiny(), dir.path()).unwrap();
        let path = dir.path().join(POSTS_FILE);
        let original = fs::read_to_string(&path).unwrap();

        let mut lines: Vec<&str> = original.lines().collect();
        lines[1] = "{not json";
        fs::write(&path, lines.join("\n")).unwrap();
        match load_corpus(dir.path()).unwrap_err() {
            CorpusError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }

        let bad_score = original.replacen("\"score\":0.9", "\"score\":1.2", 1);
        fs::write(&path, bad_score).unwrap();
        let err = load_corpus(dir.path()).unwrap_err().to_string();
        assert!(
            err.contains(":1:") && err.contains("images[0].labels[0].score"),
            "{err}"
        );
    }

    #[test]
    fn unknown_user_and_stray_annotation() {
        let mut c = tiny();
        c.annotations.insert("ghost".into(), vec![]);
        post_mut(&mut c, "u0p0").user_id = 9;
        let rules: Vec<String> = validate(&c).into_iter().map(|v| v.to_string()).collect();
        assert!(rules.iter().any(|r| r.contains("unknown user 9")));
        assert!(rules.iter().any(|r| r.starts_with("annotation ghost")));
    }
}
