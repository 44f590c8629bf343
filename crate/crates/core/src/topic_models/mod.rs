//! Collapsed Gibbs samplers for LDA, Local LDA, Multi-grain LDA and the
//! Segmented Topic Model, and the per-DA / per-topic estimates they produce.
//!
//! Every model is trained jointly over the whole corpus with meetings as the
//! outer documents. Posterior estimates are averaged over thinned
//! post-burn-in snapshots.

mod lda;
mod mglda;
mod stm;

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DaRef};
use crate::error::{Error, Result};
use crate::num::Real;

pub use lda::{lda_conditional, DocumentScope, LdaSampler};
pub use mglda::{MgLdaPriors, MgLdaSampler};
pub use stm::{LogStirling, StmSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "LDA")]
    Lda,
    #[serde(rename = "LocalLDA")]
    LocalLda,
    #[serde(rename = "MGLDA")]
    MgLda,
    #[serde(rename = "STM")]
    Stm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Lda,
        ModelKind::LocalLda,
        ModelKind::MgLda,
        ModelKind::Stm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lda => "LDA",
            ModelKind::LocalLda => "LocalLDA",
            ModelKind::MgLda => "MGLDA",
            ModelKind::Stm => "STM",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "lda" => Ok(ModelKind::Lda),
            "locallda" => Ok(ModelKind::LocalLda),
            "mglda" => Ok(ModelKind::MgLda),
            "stm" => Ok(ModelKind::Stm),
            _ => Err(format!("unknown model kind \"{s}\"")),
        }
    }
}

/// Sampler settings. Defaults are the published hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(default)]
pub struct ModelConfig<F: Real> {
    pub kind: ModelKind,
    /// For MG-LDA: the number of local topics (global topics use the same count).
    pub num_topics: usize,
    pub alpha: F,
    pub beta: F,
    pub mg_alpha_gl: F,
    pub mg_alpha_loc: F,
    pub mg_alpha_mix: F,
    pub mg_gamma: F,
    pub mg_window: usize,
    pub stm_alpha: F,
    pub stm_a: F,
    pub stm_b: F,
    pub iterations: usize,
    pub burn_in: usize,
    /// Keep every `thin`-th sweep after burn-in.
    pub thin: usize,
    pub seed: u64,
    /// Train on non-stopword tokens only.
    pub exclude_stopwords: bool,
    /// Check count-table identities after every sweep.
    pub audit: bool,
}

impl<F: Real> Default for ModelConfig<F> {
    fn default() -> Self {
        Self {
            kind: ModelKind::LocalLda,
            num_topics: 5,
            alpha: F::lit(0.1),
            beta: F::lit(0.1),
            mg_alpha_gl: F::lit(0.1),
            mg_alpha_loc: F::lit(0.1),
            mg_alpha_mix: F::lit(0.1),
            mg_gamma: F::lit(0.1),
            mg_window: 3,
            stm_alpha: F::lit(0.5),
            stm_a: F::lit(0.1),
            stm_b: F::one(),
            iterations: 1000,
            burn_in: 500,
            thin: 10,
            seed: 0,
            exclude_stopwords: true,
            audit: false,
        }
    }
}

impl<F: Real> ModelConfig<F> {
    pub fn new(kind: ModelKind, num_topics: usize) -> Self {
        Self {
            kind,
            num_topics,
            ..Self::default()
        }
    }

    /// All configuration problems; empty when valid.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.num_topics < 1 {
            out.push("num_topics must be ≥ 1".to_owned());
        }
        if self.iterations < 1 {
            out.push("iterations must be ≥ 1".to_owned());
        }
        if self.burn_in >= self.iterations.max(1) {
            out.push(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            ));
        }
        if self.thin < 1 {
            out.push("thin must be ≥ 1".to_owned());
        }
        let positive = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("mg_alpha_gl", self.mg_alpha_gl),
            ("mg_alpha_loc", self.mg_alpha_loc),
            ("mg_alpha_mix", self.mg_alpha_mix),
            ("mg_gamma", self.mg_gamma),
            ("stm_alpha", self.stm_alpha),
        ];
        for (name, v) in positive {
            if !(v > F::zero()) {
                out.push(format!("{name} must be > 0"));
            }
        }
        if self.mg_window < 1 {
            out.push("mg_window must be ≥ 1".to_owned());
        }
        if !(self.stm_a >= F::zero() && self.stm_a < F::one()) {
            out.push("stm_a must lie in [0, 1)".to_owned());
        }
        if !(self.stm_b > -self.stm_a) {
            out.push("stm_b must be greater than -stm_a".to_owned());
        }
        out
    }
}

/// Word-id view of a corpus used by the samplers: meeting → DA → tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub meetings: Vec<Vec<Vec<usize>>>,
    pub vocab_size: usize,
}

impl TrainingData {
    pub fn new(meetings: Vec<Vec<Vec<usize>>>, vocab_size: usize) -> Self {
        debug_assert!(meetings.iter().flatten().flatten().all(|w| *w < vocab_size));
        Self {
            meetings,
            vocab_size,
        }
    }

    pub fn from_corpus(corpus: &Corpus, exclude_stopwords: bool) -> Self {
        let meetings = corpus
            .meetings
            .iter()
            .map(|m| {
                m.das
                    .iter()
                    .map(|da| {
                        da.tokens
                            .iter()
                            .filter(|t| !(exclude_stopwords && corpus.is_stopword(**t)))
                            .map(|t| t.index())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self::new(meetings, corpus.vocabulary.len())
    }

    pub fn num_tokens(&self) -> usize {
        self.meetings.iter().flatten().map(Vec::len).sum()
    }

    pub fn num_das(&self) -> usize {
        self.meetings.iter().map(Vec::len).sum()
    }

    /// Smoothed unigram distribution `(n_w + beta) / (N + V beta)`.
    pub fn smoothed_unigram<F: Real>(&self, beta: F) -> Vec<F> {
        let mut counts = vec![0usize; self.vocab_size];
        for w in self.meetings.iter().flatten().flatten() {
            counts[*w] += 1;
        }
        let denom = F::from_count(self.num_tokens()) + F::from_count(self.vocab_size) * beta;
        counts
            .into_iter()
            .map(|c| (F::from_count(c) + beta) / denom)
            .collect()
    }

    pub(crate) fn da_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.meetings.len());
        let mut acc = 0;
        for m in &self.meetings {
            offsets.push(acc);
            acc += m.len();
        }
        offsets
    }
}

/// Point estimates consumed by the summarizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TopicModelPosterior<F: Real> {
    pub config: ModelConfig<F>,
    pub num_topics: usize,
    pub vocab_size: usize,
    /// `[meeting][da][topic]`.
    pub p_topic_given_da: Vec<Vec<Vec<F>>>,
    /// `[topic][word]`.
    pub p_word_given_topic: Vec<Vec<F>>,
}

impl<F: Real> TopicModelPosterior<F> {
    /// Assembles a posterior from explicit distributions.
    pub fn from_parts(
        config: ModelConfig<F>,
        p_topic_given_da: Vec<Vec<Vec<F>>>,
        p_word_given_topic: Vec<Vec<F>>,
    ) -> Result<Self> {
        let num_topics = p_word_given_topic.len();
        if num_topics == 0 {
            return Err(Error::InvalidConfig(
                "posterior needs at least one topic".into(),
            ));
        }
        let vocab_size = p_word_given_topic[0].len();
        if p_word_given_topic.iter().any(|r| r.len() != vocab_size) {
            return Err(Error::InvalidConfig("ragged topic-word matrix".into()));
        }
        if p_topic_given_da
            .iter()
            .flatten()
            .any(|r| r.len() != num_topics)
        {
            return Err(Error::InvalidConfig(
                "topic distribution length differs from topic count".into(),
            ));
        }
        Ok(Self {
            config,
            num_topics,
            vocab_size,
            p_topic_given_da,
            p_word_given_topic,
        })
    }

    pub fn topic_dist(&self, da: DaRef) -> Result<&[F]> {
        self.p_topic_given_da
            .get(da.meeting)
            .and_then(|m| m.get(da.da))
            .map(Vec::as_slice)
            .ok_or(Error::MissingPosterior(da))
    }

    #[inline]
    pub fn word_prob(&self, topic: usize, word: usize) -> F {
        self.p_word_given_topic[topic][word]
    }

    /// Largest deviation of any stored distribution from summing to one.
    pub fn max_normalization_error(&self) -> F {
        self.p_topic_given_da
            .iter()
            .flatten()
            .chain(self.p_word_given_topic.iter())
            .map(|v| (v.iter().copied().sum::<F>() - F::one()).abs())
            .fold(F::zero(), F::max)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        let bytes = serde_json::to_vec(self)?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_slice(&bytes)?)
    }
}

/// A collapsed Gibbs sampler over a fixed [`TrainingData`].
pub trait Sampler<F: Real> {
    /// One full pass resampling every token.
    fn sweep(&mut self);

    /// Recomputes every count table from the assignments and compares.
    fn audit(&self) -> std::result::Result<(), String>;

    /// Point estimate from the current state.
    fn estimate(&self) -> TopicModelPosterior<F>;
}

/// Averages snapshots component-wise.
pub fn posterior_estimates<F: Real>(
    snapshots: &[TopicModelPosterior<F>],
) -> Result<TopicModelPosterior<F>> {
    let mut acc = PosteriorAccumulator::default();
    for s in snapshots {
        acc.add(s);
    }
    acc.finish()
}

#[derive(Debug, Default)]
struct PosteriorAccumulator<F: Real> {
    sum: Option<TopicModelPosterior<F>>,
    count: usize,
}

impl<F: Real> PosteriorAccumulator<F> {
    fn add(&mut self, snap: &TopicModelPosterior<F>) {
        self.count += 1;
        let Some(sum) = self.sum.as_mut() else {
            self.sum = Some(snap.clone());
            return;
        };
        let pairs = sum
            .p_topic_given_da
            .iter_mut()
            .flatten()
            .zip(snap.p_topic_given_da.iter().flatten())
            .chain(
                sum.p_word_given_topic
                    .iter_mut()
                    .zip(snap.p_word_given_topic.iter()),
            );
        for (dst, src) in pairs {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += *s;
            }
        }
    }

    fn finish(self) -> Result<TopicModelPosterior<F>> {
        let mut post = self.sum.ok_or(Error::EmptyInput("posterior_estimates"))?;
        if self.count > 1 {
            let n = F::from_count(self.count);
            for v in post
                .p_topic_given_da
                .iter_mut()
                .flatten()
                .chain(post.p_word_given_topic.iter_mut())
            {
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
        Ok(post)
    }
}

/// Draws an index with probability proportional to `weights`.
pub(crate) fn sample_index<F: Real, R: Rng + ?Sized>(weights: &[F], rng: &mut R) -> usize {
    let total: F = weights.iter().copied().sum();
    debug_assert!(total > F::zero(), "sampling from zero mass");
    let u = F::lit(rng.random::<f64>()) * total;
    let mut acc = F::zero();
    let mut last_positive = 0;
    for (i, w) in weights.iter().enumerate() {
        if *w > F::zero() {
            acc += *w;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Builds the sampler named by `config.kind`.
pub fn build_sampler<'a, F: Real>(
    data: &'a TrainingData,
    config: &ModelConfig<F>,
) -> Result<Box<dyn Sampler<F> + 'a>> {
    if data.vocab_size == 0 {
        return Err(Error::EmptyVocabulary);
    }
    if config.num_topics < 1 {
        return Err(Error::InvalidConfig("num_topics must be ≥ 1".into()));
    }
    let diags = config.diagnostics();
    if !diags.is_empty() {
        return Err(Error::InvalidConfig(diags.join("; ")));
    }
    Ok(match config.kind {
        ModelKind::Lda => Box::new(LdaSampler::new(data, config, DocumentScope::Meeting)),
        ModelKind::LocalLda => Box::new(LdaSampler::new(data, config, DocumentScope::DialogueAct)),
        ModelKind::MgLda => Box::new(MgLdaSampler::new(data, config)),
        ModelKind::Stm => Box::new(StmSampler::new(data, config)),
    })
}

/// Runs the sampler for `config.iterations` sweeps and averages thinned post-burn-in estimates.
pub fn train_data<F: Real>(
    data: &TrainingData,
    config: &ModelConfig<F>,
) -> Result<TopicModelPosterior<F>> {
    let mut sampler = build_sampler(data, config)?;
    if config.audit {
        sampler
            .audit()
            .map_err(|detail| Error::AuditViolation { sweep: 0, detail })?;
    }
    let mut acc = PosteriorAccumulator::default();
    for sweep in 1..=config.iterations {
        sampler.sweep();
        if config.audit {
            sampler
                .audit()
                .map_err(|detail| Error::AuditViolation { sweep, detail })?;
        }
        let kept = sweep > config.burn_in && (sweep - config.burn_in).is_multiple_of(config.thin);
        if kept || (sweep == config.iterations && acc.count == 0) {
            acc.add(&sampler.estimate());
        }
    }
    log::debug!(
        "{} K={} trained on {} tokens, {} snapshots",
        config.kind,
        config.num_topics,
        data.num_tokens(),
        acc.count
    );
    acc.finish()
}

/// Trains one model over the whole corpus.
pub fn train<F: Real>(corpus: &Corpus, config: &ModelConfig<F>) -> Result<TopicModelPosterior<F>> {
    let data = TrainingData::from_corpus(corpus, config.exclude_stopwords);
    train_data(&data, config)
}
