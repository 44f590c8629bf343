use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ContextDa, DecisionCluster, Provenance, SummaryMode, SummaryResult};
use crate::corpus::{Corpus, DaRef, TokenId};
use crate::error::Result;
use crate::num::{argmax, Real};
use crate::textstats::{cosine, tfidf};
use crate::topic_models::TopicModelPosterior;

/// How context DAs are chosen around each center DA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextKind {
    /// The DAs immediately before and after the center.
    Adjacent,
    /// The DAs of the meeting most TF-IDF-similar to the center.
    TfIdf,
}

/// Whose dominant topic filters the words of a context DA.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WordMode {
    /// The center DA's.
    #[default]
    One,
    /// The context DA's own.
    Multi,
}

impl fmt::Display for ContextKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContextKind::Adjacent => "adjacent",
            ContextKind::TfIdf => "tfidf",
        })
    }
}

impl FromStr for ContextKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "adjacent" => Ok(ContextKind::Adjacent),
            "tfidf" => Ok(ContextKind::TfIdf),
            _ => Err(format!("unknown context kind \"{s}\"")),
        }
    }
}

impl fmt::Display for WordMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordMode::One => "one",
            WordMode::Multi => "multi",
        })
    }
}

impl FromStr for WordMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "one" => Ok(WordMode::One),
            "multi" => Ok(WordMode::Multi),
            _ => Err(format!("unknown word mode \"{s}\"")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContextSpec {
    pub kind: ContextKind,
    pub word_mode: WordMode,
    /// DAs taken on each side for adjacent context.
    pub window: usize,
    /// DAs taken for TF-IDF context.
    pub top: usize,
}

impl Default for ContextSpec {
    fn default() -> Self {
        Self {
            kind: ContextKind::Adjacent,
            word_mode: WordMode::One,
            window: 5,
            top: 10,
        }
    }
}

impl ContextSpec {
    pub fn new(kind: ContextKind, word_mode: WordMode) -> Self {
        Self {
            kind,
            word_mode,
            ..Self::default()
        }
    }
}

/// Returns a copy of `cluster` with context DAs attached to every center DA.
pub fn attach_context(
    cluster: &DecisionCluster,
    corpus: &Corpus,
    spec: &ContextSpec,
) -> DecisionCluster {
    let centers: HashSet<DaRef> = cluster.center_das.iter().copied().collect();
    let mut out = cluster.clone();
    out.word_mode = spec.word_mode;
    out.context_das.clear();
    let mut seen: HashSet<ContextDa> = HashSet::new();
    let mut vectors_by_meeting = BTreeMap::new();
    for &center in &cluster.center_das {
        let n = corpus.meetings[center.meeting].das.len();
        let picked: Vec<usize> = match spec.kind {
            ContextKind::Adjacent => {
                let lo = center.da.saturating_sub(spec.window);
                let hi = (center.da + spec.window).min(n - 1);
                (lo..=hi)
                    .filter(|&d| !centers.contains(&DaRef::new(center.meeting, d)))
                    .collect()
            }
            ContextKind::TfIdf => {
                let vectors = vectors_by_meeting
                    .entry(center.meeting)
                    .or_insert_with(|| meeting_tfidf(corpus, center.meeting));
                let mut scored: Vec<(usize, f64)> = (0..n)
                    .filter(|&d| !centers.contains(&DaRef::new(center.meeting, d)))
                    .map(|d| (d, cosine(&vectors[center.da], &vectors[d])))
                    .collect();
                scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
                scored.into_iter().take(spec.top).map(|(d, _)| d).collect()
            }
        };
        for d in picked {
            let pair = ContextDa {
                da: DaRef::new(center.meeting, d),
                center,
            };
            if seen.insert(pair) {
                out.context_das.push(pair);
            }
        }
    }
    out
}

/// TF-IDF vectors of a meeting's DAs over their non-stopword tokens.
pub(crate) fn meeting_tfidf<F: Real>(
    corpus: &Corpus,
    meeting: usize,
) -> Vec<crate::textstats::TfIdfVector<F>> {
    let docs: Vec<Vec<TokenId>> = (0..corpus.meetings[meeting].das.len())
        .map(|d| corpus.content_tokens(DaRef::new(meeting, d)).collect())
        .collect();
    let refs: Vec<&[TokenId]> = docs.iter().map(Vec::as_slice).collect();
    tfidf(&refs)
}

/// Topic maximizing `P(w|T) P(T|DA)`; lowest index on ties.
fn word_topic<F: Real>(posterior: &TopicModelPosterior<F>, word: TokenId, theta: &[F]) -> usize {
    let joint: Vec<F> = theta
        .iter()
        .enumerate()
        .map(|(k, t)| posterior.word_prob(k, word.index()) * *t)
        .collect();
    argmax(&joint)
}

/// Token-level summary: the words whose most likely topic is the DA's dominant topic.
///
/// For context DAs the dominant topic follows the cluster's [`WordMode`].
pub fn domsum<F: Real>(
    cluster: &DecisionCluster,
    corpus: &Corpus,
    posterior: &TopicModelPosterior<F>,
) -> Result<SummaryResult> {
    // Each DA gets the list of target topics it may admit words for.
    let mut targets: BTreeMap<DaRef, Vec<usize>> = BTreeMap::new();
    for &c in &cluster.center_das {
        let dom = argmax(posterior.topic_dist(c)?);
        targets.entry(c).or_default().push(dom);
    }
    for ctx in &cluster.context_das {
        let target = match cluster.word_mode {
            WordMode::One => argmax(posterior.topic_dist(ctx.center)?),
            WordMode::Multi => argmax(posterior.topic_dist(ctx.da)?),
        };
        targets.entry(ctx.da).or_default().push(target);
    }

    let mut summary = SummaryResult::empty(&cluster.decision_id, "domsum", SummaryMode::Token);
    let mut emitted: HashSet<TokenId> = HashSet::new();
    for (da, allowed) in targets {
        let theta = posterior.topic_dist(da)?;
        for word in corpus.content_tokens(da) {
            if emitted.contains(&word) {
                continue;
            }
            let topic = word_topic(posterior, word, theta);
            if allowed.contains(&topic) {
                emitted.insert(word);
                let token = corpus.word(word).to_owned();
                summary.tokens.push(token.clone());
                summary.provenance.push(Provenance { token, da, topic });
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::super::test_util::corpus;
    use super::*;
    use crate::topic_models::{ModelConfig, ModelKind};

    fn posterior(rows: Vec<Vec<f64>>, phi: Vec<Vec<f64>>) -> TopicModelPosterior<f64> {
        let k = phi.len();
        TopicModelPosterior::from_parts(ModelConfig::new(ModelKind::LocalLda, k), vec![rows], phi)
            .unwrap()
    }

    #[test]
    fn hand_trace_single_da() {
        // Vocabulary: alpha=0, bravo=1.
        let c = corpus(&["alpha bravo"], &[0], "alpha");
        let p = posterior(vec![vec![0.7, 0.3]], vec![vec![0.5, 0.1], vec![0.1, 0.9]]);
        let cl = DecisionCluster::new("d1", 0, vec![DaRef::new(0, 0)]);
        let s = domsum(&cl, &c, &p).unwrap();
        assert_eq!(s.tokens, ["alpha"]);
        assert_eq!(s.provenance[0].topic, 0);
    }

    #[test]
    fn single_topic_keeps_every_content_word() {
        let c = corpus(
            &["the remote has a latex case", "latex buttons"],
            &[0, 1],
            "x",
        );
        let v = c.vocabulary.len();
        let p = posterior(vec![vec![1.0], vec![1.0]], vec![vec![1.0 / v as f64; v]]);
        let cl = DecisionCluster::new("d1", 0, vec![DaRef::new(0, 0), DaRef::new(0, 1)]);
        let s = domsum(&cl, &c, &p).unwrap();
        assert_eq!(s.tokens, ["remote", "latex", "case", "buttons"]);
    }

    #[test]
    fn missing_posterior_row_names_the_da() {
        let c = corpus(&["alpha", "bravo"], &[0, 1], "alpha");
        let p = posterior(vec![vec![1.0]], vec![vec![0.5, 0.5]]);
        let cl = DecisionCluster::new("d1", 0, vec![DaRef::new(0, 1)]);
        let err = domsum(&cl, &c, &p).unwrap_err();
        assert!(err.to_string().contains("0:1"));
    }

    #[test]
    fn adjacent_context_is_clipped_and_skips_centers() {
        let texts: Vec<String> = (0..12).map(|i| format!("w{i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let c = corpus(&refs, &[2, 4], "w2");
        let cl = DecisionCluster::new("d1", 0, vec![DaRef::new(0, 2)]);
        let out = attach_context(
            &cl,
            &c,
            &ContextSpec::new(ContextKind::Adjacent, WordMode::One),
        );
        let ds: Vec<usize> = out.context_das.iter().map(|x| x.da.da).collect();
        assert_eq!(ds, [0, 1, 3, 4, 5, 6, 7]);

        let cl = DecisionCluster::new("d1", 0, vec![DaRef::new(0, 2), DaRef::new(0, 4)]);
        let out = attach_context(
            &cl,
            &c,
            &ContextSpec::new(ContextKind::Adjacent, WordMode::One),
        );
        assert!(out.context_das.iter().all(|x| x.da.da != 2 && x.da.da != 4));
    }

    #[test]
    fn tfidf_context_with_disjoint_vocabularies_takes_lowest_indices() {
        let texts: Vec<String> = (0..15).map(|i| format!("w{i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let c = corpus(&refs, &[7], "w7");
        let cl = DecisionCluster::new("d1", 0, vec![DaRef::new(0, 7)]);
        let out = attach_context(
            &cl,
            &c,
            &ContextSpec::new(ContextKind::TfIdf, WordMode::Multi),
        );
        let ds: Vec<usize> = out.context_das.iter().map(|x| x.da.da).collect();
        assert_eq!(ds, [0, 1, 2, 3, 4, 5, 6, 8, 9, 10]);
        assert_eq!(out.word_mode, WordMode::Multi);
    }

    #[test]
    fn tfidf_context_prefers_similar_das() {
        let c = corpus(
            &[
                "latex case",
                "apple",
                "latex rubber",
                "banana",
                "case latex rubber",
            ],
            &[0],
            "latex",
        );
        let cl = DecisionCluster::new("d1", 0, vec![DaRef::new(0, 0)]);
        let mut spec = ContextSpec::new(ContextKind::TfIdf, WordMode::One);
        spec.top = 2;
        let out = attach_context(&cl, &c, &spec);
        let ds: Vec<usize> = out.context_das.iter().map(|x| x.da.da).collect();
        assert_eq!(ds, [4, 2]);
    }

    #[test]
    fn word_mode_selects_the_filtering_topic() {
        // Center DA 0 is dominated by topic 0, context DA 1 by topic 1.
        let c = corpus(&["alpha", "bravo charlie"], &[0], "alpha");
        // alpha=0, bravo=1, charlie=2. bravo leans to topic 0, charlie to topic 1.
        let phi = vec![vec![0.6, 0.3, 0.1], vec![0.1, 0.1, 0.8]];
        let rows = vec![vec![0.9, 0.1], vec![0.4, 0.6]];
        let p = posterior(rows, phi);
        let base = DecisionCluster::new("d1", 0, vec![DaRef::new(0, 0)]);
        let one = attach_context(
            &base,
            &c,
            &ContextSpec::new(ContextKind::Adjacent, WordMode::One),
        );
        let multi = attach_context(
            &base,
            &c,
            &ContextSpec::new(ContextKind::Adjacent, WordMode::Multi),
        );
        assert_eq!(domsum(&one, &c, &p).unwrap().tokens, ["alpha", "bravo"]);
        assert_eq!(domsum(&multi, &c, &p).unwrap().tokens, ["alpha", "charlie"]);
    }
}
