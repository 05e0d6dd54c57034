use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use postpop::colorlab::{rgb_to_hsv, rgb_to_hsv8, rgb_to_munsell_hue};
use postpop::corpus::{self, Corpus, GroundTruth, SynthConfig};
use postpop::features::{
    build_full_matrix, extract_content, ContentConfig, ContentFeatures, FeatureMatrix,
    FeatureOptions, ResponseVector, Setting,
};
use postpop::harness::report::CV_RESULT_FILE;
use postpop::harness::{
    error_table, evaluate_grid, hash_path, nested_regressions, selected_params, write_regressions,
    write_report, CvResult, EvalPlan, ManifestEntry, RunManifest, TopicScope,
};
use postpop::hashing::json_hash;
use postpop::modelzoo::{fit, Dataset, Method, ModelParams, TrainedModel};
use postpop::seeding::substream;
use postpop::shapxai::{
    dependence_data, explain as shap_explain, mean_abs_shap, summarize, write_dependence_csv,
    write_importance_csv, TreeEnsemble,
};
use postpop::topiclab::{
    build_vocabulary, contrastive_seeds, diagnostics::default_grid, fit_seeded_lda,
    select_hyperparams, tokenize_caption, top_words, topic_coherence_npmi, topic_diversity,
    GibbsParams, SeedSpec, TopicModelState, Vocabulary, DEFAULT_LAMBDA,
};
use postpop::vision::filter_labels;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::{DocKind, ExplainArgs, SeedMethod, TopicMetric, TrainArgs};

pub const CONTENT_FILE: &str = "content.json";
pub const FEATURE_CONFIG_FILE: &str = "feature_config.json";

/// Inputs and outputs of one command, written to the manifest on success.
struct Run<'a> {
    cfg: &'a RunConfig,
    command: String,
    rng_seed: u64,
    started: Instant,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

impl<'a> Run<'a> {
    fn new(cfg: &'a RunConfig, command: &str, rng_seed: u64) -> Run<'a> {
        Run {
            cfg,
            command: command.to_string(),
            rng_seed,
            started: Instant::now(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    fn input(&mut self, p: &Path) -> Result<(), CliError> {
        let h = hash_path(p).map_err(CliError::runtime)?;
        self.inputs.insert(p.display().to_string(), h);
        Ok(())
    }

    fn output(&mut self, p: &Path) -> Result<(), CliError> {
        let h = hash_path(p).map_err(CliError::runtime)?;
        self.outputs.insert(p.display().to_string(), h);
        Ok(())
    }

    fn finish(self) -> Result<(), CliError> {
        let entry = ManifestEntry {
            command: self.command,
            config_hash: json_hash(self.cfg),
            rng_seed: self.rng_seed,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        };
        RunManifest::record(&self.cfg.out_dir(), entry).map_err(CliError::runtime)
    }
}

/// Content and feature options recorded by `features build`, reused by every
/// downstream command.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct FeatureConfig {
    content: ContentConfig,
    options: FeatureOptions,
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_text(
        path,
        &serde_json::to_string_pretty(value).expect("serializable"),
    )
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

pub fn parse_settings(raw: &[String]) -> Result<Vec<Setting>, CliError> {
    raw.iter()
        .map(|s| Setting::from_str(s.trim()).map_err(|e| CliError::Invalid(e.to_string())))
        .collect()
}

pub fn parse_methods(raw: &[String]) -> Result<Vec<Method>, CliError> {
    raw.iter()
        .map(|s| Method::from_str(s.trim()).map_err(|e| CliError::Invalid(e.to_string())))
        .collect()
}

fn require(path: &Path, artifact: &str, producer: &'static str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Missing {
            artifact: format!("{artifact} ({})", path.display()),
            producer,
        })
    }
}

fn features_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir().join("features")
}

fn load_corpus(cfg: &RunConfig, run: &mut Run) -> Result<Corpus, CliError> {
    let dir = cfg.corpus_dir();
    require(
        &dir.join(corpus::POSTS_FILE),
        "corpus",
        "synth` or `postpop ingest",
    )?;
    let mut c = corpus::load_corpus(&dir)?;
    run.input(&dir)?;
    if let Some(h) = &cfg.paths.holidays {
        c.holidays = read_json(h)?;
        run.input(h)?;
    }
    Ok(c)
}

struct Features {
    content: ContentFeatures,
    options: FeatureOptions,
}

fn load_features(cfg: &RunConfig, run: &mut Run) -> Result<Features, CliError> {
    let dir = features_dir(cfg);
    let content_path = dir.join(CONTENT_FILE);
    require(&content_path, "feature artifacts", "features build")?;
    let mut content: ContentFeatures = read_json(&content_path)?;
    content.caption_vocab.rebuild_index();
    content.label_vocab.rebuild_index();
    let fc: FeatureConfig = read_json(&dir.join(FEATURE_CONFIG_FILE))?;
    run.input(&content_path)?;
    Ok(Features {
        content,
        options: fc.options,
    })
}

fn full_matrix(corpus: &Corpus, f: &Features) -> Result<(FeatureMatrix, ResponseVector), CliError> {
    let (x, y) = build_full_matrix(corpus, &f.content, &f.options).map_err(CliError::runtime)?;
    x.check().map_err(CliError::runtime)?;
    Ok((x, y))
}

pub fn color_classify(raw: &str) -> Result<(), CliError> {
    let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
    let bad = || {
        CliError::Invalid(format!(
            "--rgb expects R,G,B with values 0-255, got `{raw}`"
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut rgb = [0u8; 3];
    for (c, p) in rgb.iter_mut().zip(&parts) {
        *c = p.parse().map_err(|_| bad())?;
    }
    let hsv = rgb_to_hsv(rgb);
    println!(
        "rgb: {},{},{}\nhsv: {:.1},{:.3},{:.3}\nmunsell: {}\nhsv8: {}",
        rgb[0],
        rgb[1],
        rgb[2],
        hsv.hue,
        hsv.saturation,
        hsv.value,
        rgb_to_munsell_hue(rgb),
        rgb_to_hsv8(rgb)
    );
    Ok(())
}

pub fn synth(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = substream(cfg.seed, "corpus");
    let mut run = Run::new(cfg, "synth", seed);
    let sc = SynthConfig {
        n_users: cfg.synth.n_users,
        posts_per_user: cfg.synth.posts_per_user,
        rng_seed: seed,
        noise_sd: cfg.synth.noise_sd,
        ..SynthConfig::default()
    };
    let (c, truth) = corpus::synth_corpus(&sc)?;
    let dir = cfg.corpus_dir();
    corpus::save_corpus(&c, &dir)?;
    truth.save(&dir)?;
    run.output(&dir)?;
    println!(
        "wrote {} posts from {} users to {} (ground truth in {})",
        c.posts.len(),
        c.users.len(),
        dir.display(),
        GroundTruth::FILE
    );
    run.finish()
}

pub fn ingest(cfg: &RunConfig, source: &Path) -> Result<(), CliError> {
    let mut run = Run::new(cfg, "ingest", cfg.seed);
    if !source.is_dir() {
        return Err(CliError::Invalid(format!(
            "{} is not a corpus directory",
            source.display()
        )));
    }
    let c = corpus::load_corpus(source)?;
    let violations = corpus::validate(&c);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(CliError::Invalid(list.join("\n")));
    }
    run.input(source)?;
    let dir = cfg.corpus_dir();
    corpus::save_corpus(&c, &dir)?;
    run.output(&dir)?;
    println!(
        "ingested {} posts from {} users into {}",
        c.posts.len(),
        c.users.len(),
        dir.display()
    );
    run.finish()
}

pub fn features_build(cfg: &RunConfig) -> Result<(), CliError> {
    let content_cfg = cfg.content_config()?;
    let mut run = Run::new(cfg, "features build", content_cfg.rng_seed);
    let c = load_corpus(cfg, &mut run)?;
    let content =
        extract_content(&c, None, &content_cfg, &mut |_, _| {}).map_err(CliError::runtime)?;
    let f = Features {
        content,
        options: cfg.features.options(),
    };
    let (x, y) = full_matrix(&c, &f)?;
    let dir = features_dir(cfg);
    fs::create_dir_all(&dir)?;
    let content_path = dir.join(CONTENT_FILE);
    write_json(&content_path, &f.content)?;
    let fc_path = dir.join(FEATURE_CONFIG_FILE);
    write_json(
        &fc_path,
        &FeatureConfig {
            content: content_cfg,
            options: f.options,
        },
    )?;
    run.output(&content_path)?;
    run.output(&fc_path)?;
    for s in &cfg.pipeline.settings {
        let xs = x.for_setting(*s);
        let csv = dir.join(format!("matrix_{s}.csv"));
        xs.write_csv(&y, &csv).map_err(CliError::runtime)?;
        let schema = dir.join(format!("schema_{s}.json"));
        write_json(&schema, &xs.manifest())?;
        run.output(&csv)?;
        run.output(&schema)?;
        println!(
            "{s}: {} rows x {} columns -> {}",
            xs.n_rows(),
            xs.n_cols(),
            csv.display()
        );
    }
    run.finish()
}

struct TopicDocs {
    vocab: Vocabulary,
    docs: Vec<Vec<usize>>,
}

fn topic_docs(cfg: &RunConfig, c: &Corpus, kind: DocKind) -> Result<TopicDocs, CliError> {
    let raw: Vec<Vec<String>> = match kind {
        DocKind::Captions => c
            .posts
            .iter()
            .map(|p| tokenize_caption(&p.caption))
            .collect(),
        DocKind::Labels => c
            .posts
            .iter()
            .flat_map(|p| c.images(&p.post_id).iter())
            .map(|a| filter_labels(a, cfg.topics.min_label_score))
            .collect(),
    };
    let vocab = build_vocabulary(&raw, cfg.topics.min_token_count).map_err(CliError::runtime)?;
    let docs = raw.iter().map(|d| vocab.encode(d)).collect();
    Ok(TopicDocs { vocab, docs })
}

fn topics_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir().join("topics")
}

fn model_path(cfg: &RunConfig, kind: DocKind) -> PathBuf {
    topics_dir(cfg).join(format!("{}_model.json", kind.name()))
}

fn load_topic_model(
    cfg: &RunConfig,
    kind: DocKind,
    run: &mut Run,
) -> Result<(TopicModelState, TopicDocs), CliError> {
    let path = model_path(cfg, kind);
    require(&path, "topic model", "topics fit")?;
    let state: TopicModelState = read_json(&path)?;
    run.input(&path)?;
    let c = load_corpus(cfg, run)?;
    let td = topic_docs(cfg, &c, kind)?;
    if td.vocab.hash() != state.vocab_hash {
        return Err(CliError::Invalid(format!(
            "{} was fitted on a different vocabulary; rerun `postpop topics fit`",
            path.display()
        )));
    }
    Ok((state, td))
}

pub fn topics_fit(cfg: &RunConfig, kind: DocKind, select: bool) -> Result<(), CliError> {
    let content = cfg.content_config()?;
    let seed = substream(content.rng_seed, kind.name());
    let mut run = Run::new(cfg, &format!("topics fit {}", kind.name()), seed);
    let c = load_corpus(cfg, &mut run)?;
    let td = topic_docs(cfg, &c, kind)?;
    let (spec, mut alpha, mut beta) = match kind {
        DocKind::Captions => (
            content.caption_seeds,
            content.caption_alpha,
            content.caption_beta,
        ),
        DocKind::Labels => (content.label_seeds, content.label_alpha, content.label_beta),
    };
    let base = GibbsParams {
        n_sweeps: content.n_sweeps,
        ..GibbsParams::new(alpha, beta, seed)
    };
    if select {
        let (best, scores) = select_hyperparams(
            &td.docs,
            &td.vocab,
            &spec,
            &default_grid(),
            &base,
            10,
            DEFAULT_LAMBDA,
        )
        .map_err(CliError::runtime)?;
        (alpha, beta) = best;
        let p = topics_dir(cfg).join(format!("{}_selection.json", kind.name()));
        write_json(&p, &scores)?;
        run.output(&p)?;
    }
    let params = GibbsParams {
        n_sweeps: content.n_sweeps,
        ..GibbsParams::new(alpha, beta, seed)
    };
    let state = fit_seeded_lda(&td.docs, &td.vocab, &spec, &params).map_err(CliError::runtime)?;
    let mp = model_path(cfg, kind);
    write_json(&mp, &state)?;
    let vp = topics_dir(cfg).join(format!("{}_vocab.json", kind.name()));
    write_json(&vp, &td.vocab)?;
    run.output(&mp)?;
    run.output(&vp)?;
    println!(
        "{} topics on {} documents (alpha {alpha}, beta {beta}) -> {}",
        state.k,
        td.docs.len(),
        mp.display()
    );
    for t in 0..state.k {
        let words: Vec<&str> = top_words(&state, t, 8, DEFAULT_LAMBDA)
            .into_iter()
            .map(|w| td.vocab.token(w))
            .collect();
        println!("  {}: {}", state.topic_names[t], words.join(" "));
    }
    run.finish()
}

pub fn topics_eval(
    cfg: &RunConfig,
    kind: DocKind,
    metric: TopicMetric,
    n_top: usize,
) -> Result<(), CliError> {
    let mut run = Run::new(cfg, &format!("topics eval {}", kind.name()), cfg.seed);
    let (state, td) = load_topic_model(cfg, kind, &mut run)?;
    let (name, value) = match metric {
        TopicMetric::Npmi => {
            let per_topic = topic_coherence_npmi(&state, &td.docs, n_top, DEFAULT_LAMBDA)
                .map_err(|e| CliError::Invalid(e.to_string()))?;
            let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
            for (t, v) in state.topic_names.iter().zip(&per_topic) {
                println!("{t}: {v:.4}");
            }
            println!("mean npmi: {mean:.4}");
            let by_topic: BTreeMap<&str, f64> = state
                .topic_names
                .iter()
                .map(String::as_str)
                .zip(per_topic.iter().copied())
                .collect();
            (
                "npmi",
                serde_json::json!({"mean": mean, "per_topic": by_topic}),
            )
        }
        TopicMetric::Diversity => {
            let sets: Vec<_> = (0..state.k)
                .map(|t| {
                    top_words(&state, t, n_top, DEFAULT_LAMBDA)
                        .into_iter()
                        .collect()
                })
                .collect();
            let d = topic_diversity(&sets).map_err(CliError::runtime)?;
            println!("mean pairwise jaccard of top-{n_top} sets: {d:.4}");
            ("diversity", serde_json::json!({"mean_jaccard": d}))
        }
    };
    let p = topics_dir(cfg).join(format!("{}_{name}.json", kind.name()));
    write_json(&p, &value)?;
    run.output(&p)?;
    run.finish()
}

pub fn topics_seeds(
    cfg: &RunConfig,
    kind: DocKind,
    method: SeedMethod,
    n: usize,
) -> Result<(), CliError> {
    let mut run = Run::new(cfg, &format!("topics seeds {}", kind.name()), cfg.seed);
    let (state, td) = load_topic_model(cfg, kind, &mut run)?;
    let spec: SeedSpec = match method {
        SeedMethod::Ig => contrastive_seeds(&state, &td.docs, &td.vocab, n)
            .map_err(|e| CliError::Invalid(e.to_string()))?,
    };
    let text = spec.to_json();
    let p = topics_dir(cfg).join(format!("{}_seeds_ig.json", kind.name()));
    write_text(&p, &text)?;
    run.output(&p)?;
    println!("{text}");
    run.finish()
}

pub fn train(cfg: &RunConfig, a: &TrainArgs) -> Result<(), CliError> {
    let method = Method::from_str(&a.method).map_err(|e| CliError::Invalid(e.to_string()))?;
    let setting = Setting::from_str(&a.setting).map_err(|e| CliError::Invalid(e.to_string()))?;
    let seed = substream(cfg.seed, &format!("model/train/{setting}/{method}"));
    let mut run = Run::new(cfg, &format!("train {method} {setting}"), seed);
    let params = match &a.params {
        Some(p) => {
            let params: ModelParams = read_json(p)?;
            run.input(p)?;
            if params.method() != method {
                return Err(CliError::Invalid(format!(
                    "{} holds {} parameters, not {method}",
                    p.display(),
                    params.method()
                )));
            }
            params.with_seed(seed)
        }
        None => selected_params(method, setting, seed),
    };
    let c = load_corpus(cfg, &mut run)?;
    let f = load_features(cfg, &mut run)?;
    let (x, y) = full_matrix(&c, &f)?;
    let data = Dataset::new(x.for_setting(setting), y).map_err(CliError::runtime)?;
    let model = fit(&data, &params).map_err(CliError::runtime)?;
    let pred = model.predict(&data.x).map_err(CliError::runtime)?;
    let rmse = postpop::modelzoo::rmse(&pred, data.y()).map_err(CliError::runtime)?;
    let p = cfg
        .out_dir()
        .join("models")
        .join(format!("{method}_{setting}.json"));
    write_text(&p, &model.to_json())?;
    run.output(&p)?;
    println!(
        "{method} on {setting}: {} rows x {} columns, training rmse {rmse:.4} -> {}",
        data.n(),
        data.p(),
        p.display()
    );
    run.finish()
}

fn cv_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir().join("cv")
}

pub fn cv_run(cfg: &RunConfig) -> Result<(), CliError> {
    let seed = substream(cfg.seed, "cv");
    let mut run = Run::new(cfg, "cv run", seed);
    let fdir = features_dir(cfg);
    require(
        &fdir.join(CONTENT_FILE),
        "feature artifacts",
        "features build",
    )?;
    let fc: FeatureConfig = read_json(&fdir.join(FEATURE_CONFIG_FILE))?;
    run.input(&fdir.join(FEATURE_CONFIG_FILE))?;
    let c = load_corpus(cfg, &mut run)?;
    let p = &cfg.pipeline;
    let plan = EvalPlan {
        settings: p.settings.clone(),
        methods: p.methods.clone(),
        k_outer: p.k_outer,
        k_inner: p.k_inner,
        rng_seed: seed,
        grid_scale: p.grid_scale,
        grid_overrides: vec![],
        content: fc.content,
        features: fc.options,
        topic_scope: p.topic_scope,
    };
    let result = evaluate_grid(&c, &plan).map_err(|e| match e {
        postpop::harness::HarnessError::UndersizedUser { .. }
        | postpop::harness::HarnessError::NoFolds => CliError::Invalid(e.to_string()),
        e => CliError::runtime(e),
    })?;
    let dir = cv_dir(cfg);
    let path = dir.join(CV_RESULT_FILE);
    write_json(&path, &result)?;
    run.output(&path)?;
    let table = error_table(&result, "rmse").map_err(CliError::runtime)?;
    print!("{}", table.to_csv());
    if p.topic_scope == TopicScope::Global {
        eprintln!("note: topic_scope = global, so held-out posts entered the topic models");
    } else if !result.audit.passed() {
        return Err(CliError::Runtime(format!(
            "leakage audit failed: {}",
            result.audit.violations().join("; ")
        )));
    }
    let failed: Vec<String> = result
        .cells
        .iter()
        .filter(|c| c.rmse.is_none())
        .map(|c| format!("{}/{}: {}", c.setting, c.method, c.errors.join("; ")))
        .collect();
    run.finish()?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{} cells failed:\n{}",
            failed.len(),
            failed.join("\n")
        )))
    }
}

pub fn explain(cfg: &RunConfig, a: &ExplainArgs) -> Result<(), CliError> {
    let mut run = Run::new(cfg, "explain", cfg.seed);
    if !a.model.exists() {
        return Err(CliError::Missing {
            artifact: format!("model {}", a.model.display()),
            producer: "train",
        });
    }
    let text = fs::read_to_string(&a.model)?;
    let model = TrainedModel::from_json(&text).map_err(|e| CliError::Invalid(e.to_string()))?;
    run.input(&a.model)?;
    let ensemble =
        TreeEnsemble::from_model(&model).map_err(|e| CliError::Invalid(e.to_string()))?;
    let c = load_corpus(cfg, &mut run)?;
    let f = load_features(cfg, &mut run)?;
    let (x, _) = full_matrix(&c, &f)?;
    let idx = model
        .column_names
        .iter()
        .map(|n| {
            x.column_index(n).ok_or_else(|| {
                CliError::Invalid(format!("model column `{n}` is not in the feature matrix"))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let xs = x.select_columns(&idx);
    model
        .check_schema(&xs)
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let shap = shap_explain(&ensemble, &xs).map_err(CliError::runtime)?;
    let ranking = mean_abs_shap(&shap, a.exclude_user_dummies).map_err(CliError::runtime)?;
    let summary = summarize(&ensemble, &shap, &ranking, a.exclude_user_dummies, a.top);

    let stem = a
        .model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    let dir = cfg.out_dir().join("explain").join(stem);
    fs::create_dir_all(dir.join("dependence"))?;
    let imp = dir.join("importance.csv");
    write_importance_csv(&ranking, &imp).map_err(CliError::runtime)?;
    run.output(&imp)?;
    for (feature, _) in ranking.top(a.top) {
        let pairs = dependence_data(&shap, feature).map_err(CliError::runtime)?;
        let p = dir.join("dependence").join(format!("{feature}.csv"));
        write_dependence_csv(feature, &pairs, &p).map_err(CliError::runtime)?;
        run.output(&p)?;
    }
    let sp = dir.join("summary.json");
    write_json(&sp, &summary)?;
    run.output(&sp)?;
    println!(
        "base value {:.4}, max local-accuracy gap {:.2e}",
        summary.base_value, summary.max_local_accuracy_gap
    );
    for (i, (feature, v)) in summary.top.iter().enumerate() {
        println!("{:>3}. {feature} {v:.4}", i + 1);
    }
    run.finish()
}

pub fn report(cfg: &RunConfig) -> Result<(), CliError> {
    let mut run = Run::new(cfg, "report", cfg.seed);
    let cv_path = cv_dir(cfg).join(CV_RESULT_FILE);
    require(&cv_path, "cross-validation results", "cv run")?;
    let result: CvResult = read_json(&cv_path)?;
    run.input(&cv_path)?;
    let dir = cfg.out_dir().join("report");
    for p in write_report(&result, &dir).map_err(CliError::runtime)? {
        run.output(&p)?;
    }
    let c = load_corpus(cfg, &mut run)?;
    let f = load_features(cfg, &mut run)?;
    let (x, y) = full_matrix(&c, &f)?;
    let summaries = nested_regressions(&x, &y).map_err(CliError::runtime)?;
    for p in write_regressions(&summaries, &dir).map_err(CliError::runtime)? {
        run.output(&p)?;
    }
    for s in &summaries {
        println!(
            "{}: {} columns, R² {:.4}, adjusted {:.4}",
            s.name, s.n_columns, s.r2, s.adj_r2
        );
    }
    print!(
        "{}",
        error_table(&result, "rmse")
            .map_err(CliError::runtime)?
            .to_csv()
    );
    println!("report written to {}", dir.display());
    run.finish()
}
