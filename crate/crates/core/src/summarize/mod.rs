//! Decision summaries from topic-model posteriors.
//!
//! Token-level summaries come from [`domsum`]; utterance-level summaries rank
//! the cluster's DAs with one of the scoring metrics and extract the best ones.

mod baselines;
mod domsum;
mod utterance;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DaRef};
use crate::error::Result;
use crate::num::Real;
use crate::topic_models::TopicModelPosterior;

pub use baselines::{baseline_longest, baseline_prototype, prototype_index, upperbound};
pub use domsum::{attach_context, domsum, ContextKind, ContextSpec, WordMode};
pub use utterance::{
    kl_divergence, klsum_greedy, klsum_objective, klsum_select, p_topic_given_cluster,
    p_topic_given_da_word, score_multitopic, score_onetopic, score_tmm, KlSumConfig,
};

/// A context DA together with the center DA it was attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContextDa {
    pub da: DaRef,
    pub center: DaRef,
}

/// The DRDAs supporting one decision, optionally with attached context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionCluster {
    pub decision_id: String,
    pub meeting: usize,
    pub center_das: Vec<DaRef>,
    #[serde(default)]
    pub context_das: Vec<ContextDa>,
    #[serde(default)]
    pub word_mode: WordMode,
}

impl DecisionCluster {
    pub fn new(decision_id: &str, meeting: usize, center_das: Vec<DaRef>) -> Self {
        Self {
            decision_id: decision_id.to_owned(),
            meeting,
            center_das,
            context_das: Vec::new(),
            word_mode: WordMode::default(),
        }
    }

    /// Distinct center and context DAs in temporal order.
    pub fn all_das(&self) -> Vec<DaRef> {
        let set: BTreeSet<DaRef> = self
            .center_das
            .iter()
            .copied()
            .chain(self.context_das.iter().map(|c| c.da))
            .collect();
        set.into_iter().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.center_das.is_empty() && self.context_das.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryMode {
    Token,
    Utterance,
}

/// Which DA and topic admitted a summary word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub token: String,
    pub da: DaRef,
    pub topic: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryResult {
    pub decision_id: String,
    pub method: String,
    pub mode: SummaryMode,
    /// Summary words; for utterance summaries, the tokens of the selected DAs in order.
    pub tokens: Vec<String>,
    /// Selected DAs (utterance summaries only).
    #[serde(default)]
    pub das: Vec<DaRef>,
    #[serde(default)]
    pub provenance: Vec<Provenance>,
}

impl SummaryResult {
    pub fn empty(decision_id: &str, method: &str, mode: SummaryMode) -> Self {
        Self {
            decision_id: decision_id.to_owned(),
            method: method.to_owned(),
            mode,
            tokens: Vec::new(),
            das: Vec::new(),
            provenance: Vec::new(),
        }
    }

    /// Utterance summary made of `das`, listed in temporal order.
    pub fn from_das(decision_id: &str, method: &str, mut das: Vec<DaRef>, corpus: &Corpus) -> Self {
        das.sort();
        das.dedup();
        let tokens = das.iter().flat_map(|d| corpus.token_strings(*d)).collect();
        Self {
            decision_id: decision_id.to_owned(),
            method: method.to_owned(),
            mode: SummaryMode::Utterance,
            tokens,
            das,
            provenance: Vec::new(),
        }
    }
}

/// A summarization method of the experiment matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    DomSum,
    DomSumContext(ContextKind, WordMode),
    OneTopic,
    MultiTopic,
    TmmSum,
    KlSum,
    Longest,
    Prototype,
    Upperbound,
}

impl Method {
    pub fn needs_posterior(self) -> bool {
        !matches!(
            self,
            Method::Longest | Method::Prototype | Method::Upperbound
        )
    }

    pub fn mode(self) -> SummaryMode {
        match self {
            Method::DomSum | Method::DomSumContext(..) | Method::Upperbound => SummaryMode::Token,
            _ => SummaryMode::Utterance,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::DomSum => f.write_str("domsum"),
            Method::DomSumContext(kind, mode) => write!(f, "domsum+context({kind},{mode})"),
            Method::OneTopic => f.write_str("onetopic"),
            Method::MultiTopic => f.write_str("multitopic"),
            Method::TmmSum => f.write_str("tmmsum"),
            Method::KlSum => f.write_str("klsum"),
            Method::Longest => f.write_str("longest"),
            Method::Prototype => f.write_str("prototype"),
            Method::Upperbound => f.write_str("upperbound"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let norm: String = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .collect::<String>()
            .to_ascii_lowercase();
        let simple = match norm.as_str() {
            "domsum" => Some(Method::DomSum),
            "onetopic" => Some(Method::OneTopic),
            "multitopic" => Some(Method::MultiTopic),
            "tmmsum" | "tmm" => Some(Method::TmmSum),
            "klsum" => Some(Method::KlSum),
            "longest" => Some(Method::Longest),
            "prototype" => Some(Method::Prototype),
            "upperbound" => Some(Method::Upperbound),
            _ => None,
        };
        if let Some(m) = simple {
            return Ok(m);
        }
        let unknown = || format!("unknown method \"{s}\"");
        let args = norm
            .strip_prefix("domsum+context(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(unknown)?;
        let (kind, mode) = args.split_once(',').ok_or_else(unknown)?;
        Ok(Method::DomSumContext(
            kind.parse().map_err(|_| unknown())?,
            mode.parse().map_err(|_| unknown())?,
        ))
    }
}

/// Settings shared by the utterance-level extractors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    /// Number of DAs extracted by OneTopic, MultiTopic and TMMSum.
    pub top_n: usize,
    pub klsum: KlSumConfig,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            top_n: 1,
            klsum: KlSumConfig::default(),
        }
    }
}

/// Runs `method` on `cluster`. Empty clusters give empty summaries.
///
/// Context for [`Method::DomSumContext`] must already be attached by the caller.
pub fn summarize<F: Real>(
    method: Method,
    cluster: &DecisionCluster,
    corpus: &Corpus,
    posterior: Option<&TopicModelPosterior<F>>,
    extract: &ExtractConfig,
) -> Result<SummaryResult> {
    let name = method.to_string();
    if cluster.is_empty() {
        log::warn!(
            "decision {}: empty cluster, empty summary",
            cluster.decision_id
        );
        return Ok(SummaryResult::empty(
            &cluster.decision_id,
            &name,
            method.mode(),
        ));
    }
    let need = || {
        posterior.ok_or_else(|| {
            crate::error::Error::InvalidConfig(format!("method {name} needs a topic model"))
        })
    };
    let top = |scores: Vec<(DaRef, F)>| top_scored(scores, extract.top_n);
    let mut out = match method {
        Method::DomSum | Method::DomSumContext(..) => domsum(cluster, corpus, need()?)?,
        Method::OneTopic => {
            let das = top(score_onetopic(cluster, corpus, need()?)?);
            SummaryResult::from_das(&cluster.decision_id, &name, das, corpus)
        }
        Method::MultiTopic => {
            let das = top(score_multitopic(cluster, corpus, need()?)?);
            SummaryResult::from_das(&cluster.decision_id, &name, das, corpus)
        }
        Method::TmmSum => {
            let das = top(score_tmm(cluster, corpus, need()?)?);
            SummaryResult::from_das(&cluster.decision_id, &name, das, corpus)
        }
        Method::KlSum => {
            let das = klsum_select(cluster, corpus, need()?, &extract.klsum)?;
            SummaryResult::from_das(&cluster.decision_id, &name, das, corpus)
        }
        Method::Longest => baseline_longest(cluster, corpus),
        Method::Prototype => baseline_prototype::<F>(cluster, corpus),
        Method::Upperbound => {
            let gold = corpus.decision(&cluster.decision_id).ok_or_else(|| {
                crate::error::Error::UnresolvedDecision(cluster.decision_id.clone())
            })?;
            upperbound(cluster, corpus, gold)
        }
    };
    out.method = name;
    Ok(out)
}

/// The `n` highest-scoring DAs; ties go to the earlier DA.
pub fn top_scored<F: Real>(mut scores: Vec<(DaRef, F)>, n: usize) -> Vec<DaRef> {
    scores.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    scores.into_iter().take(n).map(|(d, _)| d).collect()
}
