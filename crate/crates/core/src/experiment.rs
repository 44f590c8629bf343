//! Config-driven batch runs: load corpus, train models, cluster, summarize, score.
//!
//! Every file a run writes is listed in `manifest.json` with its SHA-256.
//! Trained posteriors are cached under `posteriors/`, keyed by corpus content
//! and model configuration, and reused by later runs.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{
    load_corpus, read_jsonl, tokenize_normalize, true_clusters, Corpus, DaRef, DecisionRecord,
    PreprocessConfig, StopwordList,
};
use crate::error::{Error, Result};
use crate::rouge::{
    aggregate, markdown_table, write_text, DecisionScores, RougeConfig, RougeReport, RougeScorer,
};
use crate::summarize::{
    attach_context, summarize, ContextSpec, DecisionCluster, ExtractConfig, Method, SummaryResult,
};
use crate::textstats::cluster_drdas;
use crate::topic_models::{train, ModelConfig, ModelKind, TopicModelPosterior};

pub const MANIFEST_FILE: &str = "manifest.json";

/// One topic model of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub kind: String,
    pub num_topics: usize,
}

/// Context window sizes used by `domsum+context(...)` methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextConfig {
    pub window: usize,
    pub top: usize,
}

impl Default for ContextConfig {
    fn default() -> Self {
        let d = ContextSpec::default();
        Self {
            window: d.window,
            top: d.top,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: PathBuf,
    pub output_dir: PathBuf,
    /// Seed of every sampler in the run.
    pub seed: u64,
    /// `true` for the annotated partition, `system` for agglomerative clustering.
    pub clustering: String,
    pub methods: Vec<String>,
    pub models: Vec<ModelEntry>,
    /// Hyperparameters shared by all entries of `models`.
    pub model_defaults: ModelConfig<f64>,
    /// Topic model whose DA distributions feed system clustering.
    pub system_clustering: ModelConfig<f64>,
    pub preprocess: PreprocessConfig,
    pub rouge: RougeConfig,
    pub extract: ExtractConfig,
    pub context: ContextConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let models = ModelKind::ALL
            .iter()
            .flat_map(|k| {
                [5, 10].map(|n| ModelEntry {
                    kind: k.name().to_owned(),
                    num_topics: n,
                })
            })
            .collect();
        Self {
            corpus: PathBuf::new(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            clustering: "true".into(),
            methods: [
                "domsum",
                "domsum+context(adjacent,one)",
                "onetopic",
                "multitopic",
                "tmmsum",
                "klsum",
                "longest",
                "prototype",
                "upperbound",
            ]
            .map(String::from)
            .to_vec(),
            models,
            model_defaults: ModelConfig::default(),
            system_clustering: ModelConfig::new(ModelKind::Lda, 10),
            preprocess: PreprocessConfig::default(),
            rouge: RougeConfig::default(),
            extract: ExtractConfig::default(),
            context: ContextConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clustering {
    True,
    System,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads a TOML config; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if !p.as_os_str().is_empty() && p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.corpus);
        resolve(&mut cfg.output_dir);
        if let Some(sw) = cfg.preprocess.stopwords.as_mut() {
            resolve(sw);
        }
        Ok(cfg)
    }

    /// Every problem with the configuration; empty when it can run.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.corpus.as_os_str().is_empty() {
            out.push("corpus path is not set".to_owned());
        } else if !self.corpus.is_dir() {
            out.push(format!(
                "corpus directory {} does not exist",
                self.corpus.display()
            ));
        }
        if let Some(sw) = &self.preprocess.stopwords {
            if !sw.is_file() {
                out.push(format!("stopword file {} does not exist", sw.display()));
            }
        }
        if self.methods.is_empty() {
            out.push("at least one method is required".to_owned());
        }
        let mut needs_model = false;
        for m in &self.methods {
            match m.parse::<Method>() {
                Ok(m) => needs_model |= m.needs_posterior(),
                Err(e) => out.push(e),
            }
        }
        if needs_model && self.models.is_empty() {
            out.push("methods need a topic model but no models are listed".to_owned());
        }
        for entry in &self.models {
            if let Err(e) = entry.kind.parse::<ModelKind>() {
                out.push(e);
            }
            if entry.num_topics < 1 {
                out.push("num_topics must be ≥ 1".to_owned());
            }
        }
        out.extend(self.model_defaults.diagnostics());
        if self.clustering().is_none() {
            out.push(format!(
                "unknown clustering \"{}\" (expected true or system)",
                self.clustering
            ));
        } else if self.clustering() == Some(Clustering::System) {
            out.extend(
                self.system_clustering
                    .diagnostics()
                    .into_iter()
                    .map(|d| format!("system_clustering: {d}")),
            );
        }
        if self.rouge.variants.is_empty() {
            out.push("rouge.variants must not be empty".to_owned());
        }
        if self.extract.top_n < 1 {
            out.push("extract.top_n must be ≥ 1".to_owned());
        }
        let mut seen = BTreeSet::new();
        out.retain(|d| seen.insert(d.clone()));
        out
    }

    pub fn clustering(&self) -> Option<Clustering> {
        match self.clustering.to_ascii_lowercase().as_str() {
            "true" => Some(Clustering::True),
            "system" => Some(Clustering::System),
            _ => None,
        }
    }

    /// The concrete sampler configuration for each entry of `models`.
    pub fn model_configs(&self) -> Result<Vec<ModelConfig<f64>>> {
        self.models
            .iter()
            .map(|e| {
                let kind = e.kind.parse().map_err(Error::InvalidConfig)?;
                Ok(ModelConfig {
                    kind,
                    num_topics: e.num_topics,
                    seed: self.seed,
                    ..self.model_defaults.clone()
                })
            })
            .collect()
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        self.methods
            .iter()
            .map(|m| m.parse().map_err(Error::InvalidConfig))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RunStatus {
    #[serde(rename = "ok")]
    Ok,
    #[serde(rename = "FAILED")]
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub detail: String,
    pub seconds: f64,
    pub checksum: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Relative to the output directory.
    pub path: PathBuf,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub status: RunStatus,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub config: ExperimentConfig,
    pub stages: Vec<StageRecord>,
    pub artifacts: Vec<Artifact>,
}

impl RunManifest {
    fn new(config: &ExperimentConfig) -> Self {
        Self {
            status: RunStatus::Ok,
            failed_stage: None,
            error: None,
            config: config.clone(),
            stages: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// Re-hashes every listed artifact; returns the paths whose content changed.
    pub fn verify(&self, output_dir: &Path) -> Result<Vec<PathBuf>> {
        let mut bad = Vec::new();
        for a in &self.artifacts {
            let path = output_dir.join(&a.path);
            let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&bytes) != a.sha256 {
                bad.push(a.path.clone());
            }
        }
        Ok(bad)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Stage bookkeeping for one run.
struct Run<'a> {
    config: &'a ExperimentConfig,
    out: PathBuf,
    manifest: RunManifest,
}

impl<'a> Run<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        let out = config.output_dir.clone();
        fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(Self {
            config,
            out,
            manifest: RunManifest::new(config),
        })
    }

    fn stage<T>(
        &mut self,
        name: &'static str,
        detail: &str,
        f: impl FnOnce(&mut Self) -> Result<(T, Option<String>)>,
    ) -> Result<T> {
        log::info!("stage {name} {detail}");
        let start = Instant::now();
        match f(self) {
            Ok((value, checksum)) => {
                self.manifest.stages.push(StageRecord {
                    name: name.to_owned(),
                    detail: detail.to_owned(),
                    seconds: start.elapsed().as_secs_f64(),
                    checksum,
                });
                Ok(value)
            }
            Err(e) => {
                self.manifest.failed_stage = Some(format!("{name} {detail}").trim().to_owned());
                Err(e.at_stage(name))
            }
        }
    }

    /// Writes `bytes` to `rel` under the output directory and records it.
    fn write(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> Result<String> {
        let rel = rel.as_ref();
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(self.record(rel, bytes))
    }

    fn record(&mut self, rel: &Path, bytes: &[u8]) -> String {
        let sha = sha256_hex(bytes);
        self.manifest.artifacts.retain(|a| a.path != rel);
        self.manifest.artifacts.push(Artifact {
            path: rel.to_owned(),
            sha256: sha.clone(),
            bytes: bytes.len() as u64,
        });
        sha
    }

    fn finish(mut self, result: Result<()>) -> Result<RunManifest> {
        if let Err(e) = &result {
            self.manifest.status = RunStatus::Failed;
            self.manifest.error = Some(e.to_string());
            log::error!("run failed: {e}");
        }
        let path = self.out.join(MANIFEST_FILE);
        let bytes = serde_json::to_vec_pretty(&self.manifest)?;
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        result.map(|_| self.manifest)
    }

    fn load_corpus(&mut self) -> Result<(Corpus, String)> {
        let cfg = self.config;
        self.stage("load_corpus", "", |_| {
            let corpus = load_corpus(&cfg.corpus, &cfg.preprocess)?;
            let digest = corpus_digest(&cfg.corpus, &cfg.preprocess)?;
            log::info!(
                "{} meetings, {} dialogue acts, {} word types",
                corpus.meetings.len(),
                corpus.num_das(),
                corpus.vocabulary.len()
            );
            Ok(((corpus, digest.clone()), Some(digest)))
        })
    }

    /// Trains `model`, or loads it from the cache when an identical run produced it.
    fn posterior(
        &mut self,
        corpus: &Corpus,
        digest: &str,
        model: &ModelConfig<f64>,
    ) -> Result<TopicModelPosterior<f64>> {
        let detail = format!("{} K={}", model.kind, model.num_topics);
        self.stage("train", &detail, |run| {
            let key_src = format!("{digest}\n{}", serde_json::to_string(model)?);
            let key = &sha256_hex(key_src.as_bytes())[..16];
            let rel = PathBuf::from("posteriors")
                .join(format!("{}_k{}_{key}.json", model.kind, model.num_topics));
            let path = run.out.join(&rel);
            if path.is_file() {
                match TopicModelPosterior::<f64>::load_json(&path) {
                    Ok(p) if &p.config == model => {
                        log::info!("reusing cached posterior {}", rel.display());
                        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
                        let sha = run.record(&rel, &bytes);
                        return Ok((p, Some(sha)));
                    }
                    _ => log::warn!("ignoring stale cache entry {}", rel.display()),
                }
            }
            let post = train(corpus, model)?;
            let sha = run.write(&rel, &serde_json::to_vec(&post)?)?;
            Ok((post, Some(sha)))
        })
    }

    fn clusters(
        &mut self,
        corpus: &Corpus,
        digest: &str,
    ) -> Result<IndexMap<String, DecisionCluster>> {
        let gold = true_clusters(corpus);
        match self.config.clustering() {
            Some(Clustering::True) | None => Ok(gold),
            Some(Clustering::System) => {
                let model = ModelConfig {
                    seed: self.config.seed,
                    ..self.config.system_clustering.clone()
                };
                let post = self.posterior(corpus, digest, &model)?;
                self.stage("system_clustering", "", |run| {
                    let clusters = system_clusters(corpus, &post, &gold)?;
                    let sha = run.write("clusters.json", &serde_json::to_vec_pretty(&clusters)?)?;
                    Ok((clusters, Some(sha)))
                })
            }
        }
    }
}

/// SHA-256 over the corpus directory's JSON-lines files and the preprocessing settings.
pub fn corpus_digest(dir: &Path, preprocess: &PreprocessConfig) -> Result<String> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "jsonl"))
        .collect();
    files.sort();
    let mut h = Sha256::new();
    for f in &files {
        h.update(f.file_name().unwrap_or_default().as_encoded_bytes());
        h.update([0]);
        h.update(fs::read(f).map_err(|e| Error::io(f, e))?);
        h.update([0]);
    }
    h.update(serde_json::to_vec(preprocess)?);
    if let Some(sw) = &preprocess.stopwords {
        h.update(fs::read(sw).map_err(|e| Error::io(sw, e))?);
    }
    Ok(hex::encode(h.finalize()))
}

/// Agglomerative clustering of each meeting's DRDAs into as many clusters as
/// it has gold decisions. Each decision gets the system cluster overlapping
/// its gold cluster most (earliest cluster on ties, empty if none overlaps).
pub fn system_clusters(
    corpus: &Corpus,
    posterior: &TopicModelPosterior<f64>,
    gold: &IndexMap<String, DecisionCluster>,
) -> Result<IndexMap<String, DecisionCluster>> {
    let mut out = IndexMap::new();
    for (m, meeting) in corpus.meetings.iter().enumerate() {
        if meeting.decisions.is_empty() {
            continue;
        }
        let items: Vec<(DaRef, Vec<f64>)> = meeting
            .das
            .iter()
            .enumerate()
            .filter(|(_, da)| da.is_drda)
            .map(|(d, _)| {
                let r = DaRef::new(m, d);
                posterior.topic_dist(r).map(|p| (r, p.to_vec()))
            })
            .collect::<Result<_>>()?;
        let clusters = if items.is_empty() {
            Vec::new()
        } else {
            let k = meeting.decisions.len().min(items.len());
            cluster_drdas(&items, k)?.clusters
        };
        for decision in &meeting.decisions {
            let id = &decision.decision_id;
            let truth: BTreeSet<DaRef> = gold
                .get(id)
                .map(|c| c.center_das.iter().copied().collect())
                .unwrap_or_default();
            let mut best: Option<(usize, usize)> = None;
            for (i, c) in clusters.iter().enumerate() {
                let overlap = c.iter().filter(|d| truth.contains(d)).count();
                if overlap > 0 && best.is_none_or(|(_, b)| overlap > b) {
                    best = Some((i, overlap));
                }
            }
            let mut centers = best.map(|(i, _)| clusters[i].clone()).unwrap_or_default();
            centers.sort();
            out.insert(id.clone(), DecisionCluster::new(id, m, centers));
        }
    }
    Ok(out)
}

/// File-name-safe form of a report label.
fn slug(s: &str) -> String {
    let mut out = String::new();
    for c in s.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_owned()
}

fn method_label(method: Method) -> String {
    match method {
        Method::Longest => "Longest DA".into(),
        Method::Prototype => "Prototype DA".into(),
        Method::Upperbound => "Upperbound".into(),
        other => other.to_string(),
    }
}

/// One scored cell of the experiment matrix.
struct Row {
    label: String,
    method: Method,
    model: Option<(ModelKind, usize)>,
    report: RougeReport,
}

/// Summarizes every cluster with `method` and scores the result against the gold abstracts.
pub fn summarize_and_score(
    method: Method,
    clusters: &IndexMap<String, DecisionCluster>,
    corpus: &Corpus,
    posterior: Option<&TopicModelPosterior<f64>>,
    config: &ExperimentConfig,
    scorer: &RougeScorer,
) -> Result<(Vec<SummaryResult>, RougeReport)> {
    let mut summaries = Vec::with_capacity(clusters.len());
    let mut scores = Vec::with_capacity(clusters.len());
    for cluster in clusters.values() {
        let cluster = match method {
            Method::DomSumContext(kind, word_mode) => {
                let spec = ContextSpec {
                    kind,
                    word_mode,
                    window: config.context.window,
                    top: config.context.top,
                };
                attach_context(cluster, corpus, &spec)
            }
            _ => cluster.clone(),
        };
        let summary = summarize(method, &cluster, corpus, posterior, &config.extract)?;
        let gold = corpus
            .decision(&cluster.decision_id)
            .ok_or_else(|| Error::UnresolvedDecision(cluster.decision_id.clone()))?;
        scores.push(DecisionScores {
            decision_id: cluster.decision_id.clone(),
            scores: scorer.score(&summary.tokens, &gold.abstract_tokens),
        });
        summaries.push(summary);
    }
    Ok((summaries, aggregate(scores)?))
}

fn jsonl<T: Serialize>(items: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

/// Runs the full experiment matrix and writes reports under `config.output_dir`.
///
/// On failure the manifest is still written, with status `FAILED` and the stage name.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    let diags = config.validate();
    if !diags.is_empty() {
        return Err(Error::InvalidConfig(diags.join("; ")));
    }
    let mut run = Run::new(config)?;
    let result = run_matrix(&mut run);
    run.finish(result)
}

fn run_matrix(run: &mut Run<'_>) -> Result<()> {
    let config = run.config;
    let methods = config.parsed_methods()?;
    let models = config.model_configs()?;
    let (corpus, digest) = run.load_corpus()?;
    let clusters = run.clusters(&corpus, &digest)?;
    let scorer = RougeScorer::new(config.rouge.clone(), corpus.stopword_list().clone());

    let mut rows: Vec<Row> = Vec::new();
    let mut summaries_by_label: HashMap<String, Vec<SummaryResult>> = HashMap::new();
    let mut cell = |run: &mut Run<'_>,
                    m: Method,
                    model: Option<&ModelConfig<f64>>,
                    post: Option<&TopicModelPosterior<f64>>|
     -> Result<()> {
        let label = match model {
            Some(model) => format!("{} K={} {}", model.kind, model.num_topics, m),
            None => method_label(m),
        };
        let (summaries, report) = run.stage("summarize", &label, |_| {
            Ok((
                summarize_and_score(m, &clusters, &corpus, post, config, &scorer)?,
                None,
            ))
        })?;
        summaries_by_label.insert(label.clone(), summaries);
        rows.push(Row {
            label,
            method: m,
            model: model.map(|c| (c.kind, c.num_topics)),
            report,
        });
        Ok(())
    };
    for &m in &methods {
        if matches!(m, Method::Longest | Method::Prototype) {
            cell(run, m, None, None)?;
        }
    }
    let model_methods: Vec<Method> = methods
        .iter()
        .copied()
        .filter(|m| m.needs_posterior())
        .collect();
    if !model_methods.is_empty() {
        for model in &models {
            let post = run.posterior(&corpus, &digest, model)?;
            for &m in &model_methods {
                cell(run, m, Some(model), Some(&post))?;
            }
        }
    }
    if methods.contains(&Method::Upperbound) {
        cell(run, Method::Upperbound, None, None)?;
    }

    run.stage("write_reports", "", |run| {
        let mut cmp = csv::Writer::from_writer(Vec::new());
        cmp.write_record([
            "label",
            "method",
            "model",
            "num_topics",
            "variant",
            "macro_precision",
            "macro_recall",
            "macro_f1",
            "micro_precision",
            "micro_recall",
            "micro_f1",
        ])?;
        for row in &rows {
            let name = slug(&row.label);
            let summaries = summaries_by_label.remove(&row.label).unwrap_or_default();
            run.write(format!("summaries/{name}.jsonl"), &jsonl(&summaries)?)?;
            let csv_rel = PathBuf::from(format!("reports/{name}.csv"));
            let csv_path = run.out.join(&csv_rel);
            fs::create_dir_all(run.out.join("reports")).map_err(|e| Error::io(&run.out, e))?;
            row.report.write_csv(&csv_path)?;
            let bytes = fs::read(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
            run.record(&csv_rel, &bytes);
            let (model, k) = row
                .model
                .map(|(m, k)| (m.to_string(), k.to_string()))
                .unwrap_or_default();
            for (v, mac) in &row.report.macro_avg {
                let mic = row.report.micro_avg[v];
                cmp.write_record([
                    row.label.clone(),
                    row.method.to_string(),
                    model.clone(),
                    k.clone(),
                    v.to_string(),
                    format!("{:.6}", mac.precision),
                    format!("{:.6}", mac.recall),
                    format!("{:.6}", mac.f1),
                    format!("{:.6}", mic.precision),
                    format!("{:.6}", mic.recall),
                    format!("{:.6}", mic.f1),
                ])?;
            }
        }
        let cmp_bytes = cmp
            .into_inner()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        run.write("comparison.csv", &cmp_bytes)?;
        let table: Vec<(String, &RougeReport)> =
            rows.iter().map(|r| (r.label.clone(), &r.report)).collect();
        let heading = match config.clustering() {
            Some(Clustering::System) => "System clusterings",
            _ => "True clusterings",
        };
        let md = format!("## {heading}\n\n{}", markdown_table(&table));
        let sha = run.write("comparison.md", md.as_bytes())?;
        Ok(((), Some(sha)))
    })
}

/// Trains every configured model and writes the posteriors, without summarizing.
pub fn train_only(config: &ExperimentConfig) -> Result<RunManifest> {
    let mut diags = config.validate();
    diags.retain(|d| !d.starts_with("unknown method") && !d.contains("method"));
    if !diags.is_empty() {
        return Err(Error::InvalidConfig(diags.join("; ")));
    }
    let mut run = Run::new(config)?;
    let result = (|| {
        let models = config.model_configs()?;
        let (corpus, digest) = run.load_corpus()?;
        for model in &models {
            run.posterior(&corpus, &digest, model)?;
        }
        Ok(())
    })();
    run.finish(result)
}

/// One line of a summaries file accepted by [`score_files`].
#[derive(Debug, Clone, Deserialize)]
struct SummaryLine {
    decision_id: String,
    tokens: Vec<String>,
}

/// Scores a JSON-lines summaries file against a decisions file.
///
/// Summary tokens are taken as given; abstracts are normalized with `preprocess`.
pub fn score_files(
    summaries: &Path,
    decisions: &Path,
    rouge: &RougeConfig,
    preprocess: &PreprocessConfig,
) -> Result<RougeReport> {
    let stops = match &preprocess.stopwords {
        Some(p) => StopwordList::from_file(p)?,
        None => StopwordList::bundled(),
    };
    let refs: HashMap<String, Vec<String>> = read_jsonl::<DecisionRecord>(decisions)?
        .into_iter()
        .map(|d| {
            (
                d.decision_id,
                tokenize_normalize(&d.abstract_text, preprocess),
            )
        })
        .collect();
    let scorer = RougeScorer::new(rouge.clone(), stops);
    let mut scores = Vec::new();
    for line in read_jsonl::<SummaryLine>(summaries)? {
        let gold = refs
            .get(&line.decision_id)
            .ok_or_else(|| Error::UnresolvedDecision(line.decision_id.clone()))?;
        scores.push(DecisionScores {
            scores: scorer.score(&line.tokens, gold),
            decision_id: line.decision_id,
        });
    }
    aggregate(scores)
}

/// Writes a per-decision CSV and a one-row markdown table for a [`score_files`] report.
pub fn write_score_report(report: &RougeReport, out_dir: &Path, label: &str) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    report.write_csv(&out_dir.join(format!("{}.csv", slug(label))))?;
    write_text(
        &out_dir.join(format!("{}.md", slug(label))),
        &markdown_table(&[(label.to_owned(), report)]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs_are_file_safe() {
        assert_eq!(
            slug("LocalLDA K=5 domsum+context(adjacent,one)"),
            "locallda_k_5_domsum_context_adjacent_one"
        );
        assert_eq!(slug("Longest DA"), "longest_da");
    }

    #[test]
    fn validate_reports_each_problem() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig {
            corpus: dir.path().to_owned(),
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().is_empty(), "{:?}", cfg.validate());

        cfg.models = vec![ModelEntry {
            kind: "LocalLDA".into(),
            num_topics: 0,
        }];
        assert_eq!(cfg.validate(), ["num_topics must be ≥ 1"]);

        cfg.models[0].num_topics = 5;
        cfg.methods.push("foo".into());
        let d = cfg.validate();
        assert_eq!(d.len(), 1);
        assert!(d[0].contains("foo"));

        cfg.corpus = dir.path().join("missing");
        cfg.clustering = "maybe".into();
        assert_eq!(cfg.validate().len(), 3);
    }

    #[test]
    fn toml_round_trip_with_defaults() {
        let cfg = ExperimentConfig::from_toml_str(
            r#"
            corpus = "data"
            methods = ["domsum", "longest"]
            [[models]]
            kind = "STM"
            num_topics = 5
            [model_defaults]
            iterations = 50
            burn_in = 10
            "#,
        )
        .unwrap();
        assert_eq!(cfg.models.len(), 1);
        assert_eq!(cfg.model_defaults.iterations, 50);
        assert_eq!(cfg.model_defaults.alpha, 0.1);
        let m = cfg.model_configs().unwrap();
        assert_eq!((m[0].kind, m[0].num_topics), (ModelKind::Stm, 5));
        assert!(ExperimentConfig::from_toml_str("bogus_key = 1").is_err());
    }
}
