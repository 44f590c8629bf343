#![allow(dead_code)]

use std::path::{Path, PathBuf};

use domsum::corpus::{Corpus, DaRecord, DecisionRecord, PreprocessConfig, StopwordList};
use domsum::{DaRef, DecisionCluster, ModelConfig, Posterior};

/// Content words for synthetic instances.
pub const WORDS: [&str; 8] = [
    "latex", "remote", "button", "chip", "yellow", "battery", "scroll", "menu",
];

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy")
}

/// One meeting `m0`; DA `i` holds `das[i]` as word indices into [`WORDS`], every DA supports `d1`.
pub fn corpus(das: &[Vec<usize>]) -> Corpus {
    let records = das
        .iter()
        .enumerate()
        .map(|(i, ws)| DaRecord {
            meeting_id: "m0".into(),
            da_index: i,
            speaker: "A".into(),
            text: ws.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" "),
            is_drda: true,
            decision_ids: vec!["d1".into()],
        })
        .collect();
    Corpus::from_records(
        vec![records],
        vec![DecisionRecord {
            decision_id: "d1".into(),
            meeting_id: "m0".into(),
            abstract_text: "the remote".into(),
        }],
        PreprocessConfig::default(),
        StopwordList::bundled(),
    )
    .unwrap()
}

pub fn cluster(n: usize) -> DecisionCluster {
    DecisionCluster::new("d1", 0, (0..n).map(|i| DaRef::new(0, i)).collect())
}

/// Posterior from `theta[da][topic]` and `phi[topic][word index into WORDS]`.
pub fn posterior(corpus: &Corpus, theta: &[Vec<f64>], phi: &[Vec<f64>]) -> Posterior {
    let vocab = &corpus.vocabulary;
    let pwt = phi
        .iter()
        .map(|row| {
            vocab
                .words()
                .iter()
                .map(|w| WORDS.iter().position(|x| x == w).map_or(0.0, |i| row[i]))
                .collect()
        })
        .collect();
    Posterior::from_parts(
        ModelConfig::new(domsum::ModelKind::Lda, phi.len()),
        vec![theta.to_vec()],
        pwt,
    )
    .unwrap()
}

pub fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Two topics over disjoint halves of a 10-word vocabulary.
pub struct Synthetic {
    pub data: domsum::topic_models::TrainingData,
    pub phi: Vec<Vec<f64>>,
    /// Dominant topic of every DA, in training-data order.
    pub da_topic: Vec<Vec<usize>>,
}

/// `meetings × das × tokens` tokens; each DA draws 90% of its tokens from one topic.
pub fn synthetic(
    seed: u64,
    meetings: usize,
    das: usize,
    tokens: usize,
    pure_meetings: bool,
) -> Synthetic {
    use rand::distr::weighted::WeightedIndex;
    use rand::distr::Distribution;
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let half = 5;
    let phi: Vec<Vec<f64>> = (0..2)
        .map(|k| {
            let raw: Vec<f64> = (0..2 * half)
                .map(|w| {
                    if w / half == k {
                        rng.random_range(0.5..1.5)
                    } else {
                        0.0
                    }
                })
                .collect();
            normalized(raw)
        })
        .collect();
    let words: Vec<WeightedIndex<f64>> =
        phi.iter().map(|r| WeightedIndex::new(r).unwrap()).collect();
    let mut out = Vec::new();
    let mut labels = Vec::new();
    for m in 0..meetings {
        let mut meeting = Vec::new();
        let mut ml = Vec::new();
        for _ in 0..das {
            let dom = if pure_meetings {
                m % 2
            } else {
                rng.random_range(0..2)
            };
            let da: Vec<usize> = (0..tokens)
                .map(|_| {
                    let k = if pure_meetings || rng.random_bool(0.9) {
                        dom
                    } else {
                        1 - dom
                    };
                    words[k].sample(&mut rng)
                })
                .collect();
            meeting.push(da);
            ml.push(dom);
        }
        out.push(meeting);
        labels.push(ml);
    }
    Synthetic {
        data: domsum::topic_models::TrainingData::new(out, 2 * half),
        phi,
        da_topic: labels,
    }
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Greedy min-distance matching of learned to true topics; returns the TV of each matched pair.
pub fn matched_tv(learned: &[Vec<f64>], truth: &[Vec<f64>]) -> Vec<f64> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, t) in truth.iter().enumerate() {
        for (j, l) in learned.iter().enumerate() {
            pairs.push((total_variation(t, l), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut used_t = vec![false; truth.len()];
    let mut used_l = vec![false; learned.len()];
    let mut out = Vec::new();
    for (d, i, j) in pairs {
        if !used_t[i] && !used_l[j] {
            used_t[i] = true;
            used_l[j] = true;
            out.push(d);
        }
    }
    out
}
