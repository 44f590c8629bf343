use std::collections::HashSet;

use super::domsum::meeting_tfidf;
use super::{DecisionCluster, Provenance, SummaryMode, SummaryResult};
use crate::corpus::{Corpus, DaRef, Decision};
use crate::num::Real;
use crate::stem::porter_stem;
use crate::textstats::{centroid, cosine, TfIdfVector};

fn longest_da(das: &[DaRef], corpus: &Corpus) -> Option<DaRef> {
    das.iter()
        .copied()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            corpus
                .da(*a)
                .tokens
                .len()
                .cmp(&corpus.da(*b).tokens.len())
                .then(j.cmp(i))
        })
        .map(|(_, d)| d)
}

/// The DA with the most normalized tokens; the earliest on ties.
pub fn baseline_longest(cluster: &DecisionCluster, corpus: &Corpus) -> SummaryResult {
    let das = cluster.all_das();
    let picked = longest_da(&das, corpus).into_iter().collect();
    SummaryResult::from_das(&cluster.decision_id, "longest", picked, corpus)
}

/// Index of the vector closest to the centroid; `None` when every vector is zero.
pub fn prototype_index<F: Real>(vectors: &[&TfIdfVector<F>]) -> Option<usize> {
    if vectors.iter().all(|v| v.is_zero()) {
        return None;
    }
    let center = centroid(vectors).ok()?;
    let mut best: Option<(usize, F)> = None;
    for (i, v) in vectors.iter().enumerate() {
        let s = cosine(v, &center);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// The DA most TF-IDF-similar to the cluster centroid.
pub fn baseline_prototype<F: Real>(cluster: &DecisionCluster, corpus: &Corpus) -> SummaryResult {
    let das = cluster.all_das();
    let mut by_meeting = std::collections::BTreeMap::new();
    for d in &das {
        by_meeting
            .entry(d.meeting)
            .or_insert_with(|| meeting_tfidf::<F>(corpus, d.meeting));
    }
    let vectors: Vec<&TfIdfVector<F>> = das.iter().map(|d| &by_meeting[&d.meeting][d.da]).collect();
    let picked = match prototype_index(&vectors) {
        Some(i) => Some(das[i]),
        None => {
            log::warn!(
                "decision {}: all TF-IDF vectors are zero, using the longest DA",
                cluster.decision_id
            );
            longest_da(&das, corpus)
        }
    };
    SummaryResult::from_das(
        &cluster.decision_id,
        "prototype",
        picked.into_iter().collect(),
        corpus,
    )
}

/// Cluster words whose stem matches a stemmed, non-stopword token of the gold abstract.
///
/// One word is kept per stem, so ROUGE-1 precision against the abstract is 1.
pub fn upperbound(cluster: &DecisionCluster, corpus: &Corpus, gold: &Decision) -> SummaryResult {
    let stops = corpus.stopword_list();
    let gold_stems: HashSet<String> = gold
        .abstract_tokens
        .iter()
        .filter(|t| !stops.contains(t))
        .map(|t| porter_stem(t))
        .collect();
    let mut out = SummaryResult::empty(&cluster.decision_id, "upperbound", SummaryMode::Token);
    let mut seen = HashSet::new();
    for da in cluster.all_das() {
        for w in corpus.content_tokens(da) {
            let word = corpus.word(w);
            let stem = porter_stem(word);
            if gold_stems.contains(&stem) && seen.insert(stem) {
                out.tokens.push(word.to_owned());
                out.provenance.push(Provenance {
                    token: word.to_owned(),
                    da,
                    topic: 0,
                });
            }
        }
    }
    out
}
