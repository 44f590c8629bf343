use serde::{Deserialize, Serialize};

use super::DecisionCluster;
use crate::corpus::{Corpus, DaRef, TokenId};
use crate::error::{Error, Result};
use crate::num::{argmax, normalize, Real};
use crate::topic_models::TopicModelPosterior;

const TMM_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KlSumConfig {
    /// Maximum total length of the selection, in normalized tokens.
    pub budget: usize,
    pub smoothing: f64,
}

impl Default for KlSumConfig {
    fn default() -> Self {
        Self {
            budget: 40,
            smoothing: 1e-6,
        }
    }
}

struct Member<'a, F> {
    da: DaRef,
    words: Vec<TokenId>,
    theta: &'a [F],
}

fn members<'a, F: Real>(
    cluster: &DecisionCluster,
    corpus: &Corpus,
    posterior: &'a TopicModelPosterior<F>,
    op: &'static str,
) -> Result<Vec<Member<'a, F>>> {
    let das = cluster.all_das();
    if das.is_empty() {
        return Err(Error::EmptyInput(op));
    }
    das.into_iter()
        .map(|da| {
            Ok(Member {
                da,
                words: corpus.content_tokens(da).collect(),
                theta: posterior.topic_dist(da)?,
            })
        })
        .collect()
}

/// Mean of `rows` weighted by `weights`; unweighted when all weights are zero.
fn weighted_mean<F: Real>(rows: &[(F, &[F])], k: usize) -> Vec<F> {
    let total: F = rows.iter().map(|(w, _)| *w).sum();
    let mut out = vec![F::zero(); k];
    for (w, row) in rows {
        let w = if total > F::zero() { *w } else { F::one() };
        for (o, r) in out.iter_mut().zip(row.iter()) {
            *o += w * *r;
        }
    }
    normalize(&mut out);
    out
}

/// Topic distribution of a cluster: member `P(T|DA)` weighted by non-stopword token counts.
pub fn p_topic_given_cluster<F: Real>(
    cluster: &DecisionCluster,
    corpus: &Corpus,
    posterior: &TopicModelPosterior<F>,
) -> Result<Vec<F>> {
    let ms = members(cluster, corpus, posterior, "p_topic_given_cluster")?;
    let rows: Vec<(F, &[F])> = ms
        .iter()
        .map(|m| (F::from_count(m.words.len()), m.theta))
        .collect();
    Ok(weighted_mean(&rows, posterior.num_topics))
}

/// `P(T|DA,w) ∝ P(w|T) P(T|DA)`, uniform when every topic gives zero mass.
pub fn p_topic_given_da_word<F: Real>(
    posterior: &TopicModelPosterior<F>,
    theta: &[F],
    word: TokenId,
) -> Vec<F> {
    let mut v: Vec<F> = theta
        .iter()
        .enumerate()
        .map(|(k, t)| posterior.word_prob(k, word.index()) * *t)
        .collect();
    normalize(&mut v);
    v
}

/// `[member][topic]` sums of `P(T|DA,w)` over each member's words.
fn topic_mass<F: Real>(posterior: &TopicModelPosterior<F>, ms: &[Member<'_, F>]) -> Vec<Vec<F>> {
    ms.iter()
        .map(|m| {
            let mut acc = vec![F::zero(); posterior.num_topics];
            for &w in &m.words {
                for (a, p) in acc
                    .iter_mut()
                    .zip(p_topic_given_da_word(posterior, m.theta, w))
                {
                    *a += p;
                }
            }
            acc
        })
        .collect()
}

/// Share of each member in column `k` of `mass`; uniform if the column is empty.
fn column_shares<F: Real>(mass: &[Vec<F>], k: usize) -> Vec<F> {
    let total: F = mass.iter().map(|row| row[k]).sum();
    if total > F::zero() {
        mass.iter().map(|row| row[k] / total).collect()
    } else {
        vec![F::one() / F::from_count(mass.len()); mass.len()]
    }
}

/// Scores each DA by its share of the cluster's mass on the central topic.
pub fn score_onetopic<F: Real>(
    cluster: &DecisionCluster,
    corpus: &Corpus,
    posterior: &TopicModelPosterior<F>,
) -> Result<Vec<(DaRef, F)>> {
    let central = argmax(&p_topic_given_cluster(cluster, corpus, posterior)?);
    let ms = members(cluster, corpus, posterior, "score_onetopic")?;
    let shares = column_shares(&topic_mass(posterior, &ms), central);
    Ok(ms.iter().map(|m| m.da).zip(shares).collect())
}

/// Like [`score_onetopic`] but mixing every topic's shares by the cluster topic distribution.
pub fn score_multitopic<F: Real>(
    cluster: &DecisionCluster,
    corpus: &Corpus,
    posterior: &TopicModelPosterior<F>,
) -> Result<Vec<(DaRef, F)>> {
    let pc = p_topic_given_cluster(cluster, corpus, posterior)?;
    let ms = members(cluster, corpus, posterior, "score_multitopic")?;
    let mass = topic_mass(posterior, &ms);
    let mut scores = vec![F::zero(); ms.len()];
    for (k, pk) in pc.iter().enumerate() {
        for (s, share) in scores.iter_mut().zip(column_shares(&mass, k)) {
            *s += *pk * share;
        }
    }
    Ok(ms.iter().map(|m| m.da).zip(scores).collect())
}

/// `ln P(C|DA)`: log-likelihood of every cluster token under the DA's topic mixture.
pub fn score_tmm<F: Real>(
    cluster: &DecisionCluster,
    corpus: &Corpus,
    posterior: &TopicModelPosterior<F>,
) -> Result<Vec<(DaRef, F)>> {
    let ms = members(cluster, corpus, posterior, "score_tmm")?;
    let floor = F::lit(TMM_FLOOR);
    let mut floored = 0usize;
    let out = ms
        .iter()
        .map(|m| {
            let mut ll = F::zero();
            for w in ms.iter().flat_map(|x| x.words.iter()) {
                let p: F = m
                    .theta
                    .iter()
                    .enumerate()
                    .map(|(k, t)| posterior.word_prob(k, w.index()) * *t)
                    .sum();
                if p < floor {
                    floored += 1;
                }
                ll += p.max(floor).ln();
            }
            (m.da, ll)
        })
        .collect();
    if floored > 0 {
        log::warn!(
            "decision {}: {floored} word probabilities floored at {TMM_FLOOR:e}",
            cluster.decision_id
        );
    }
    Ok(out)
}

/// `KL(p || q)` with `0 ln 0 = 0`.
pub fn kl_divergence<F: Real>(p: &[F], q: &[F]) -> F {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > F::zero())
        .map(|(a, b)| *a * (*a / *b).ln())
        .sum()
}

/// `KL(P_C || P_S)` where `P_S` is the weighted mean of the members, smoothed by `eps`.
pub fn klsum_objective<F: Real>(p_c: &[F], selected: &[(F, &[F])], eps: F) -> F {
    let mut p_s = weighted_mean(selected, p_c.len());
    p_s.iter_mut().for_each(|x| *x += eps);
    normalize(&mut p_s);
    kl_divergence(p_c, &p_s)
}

/// Greedy KLSum over explicit candidates `(length, weight, P(T|DA))`; returns indices in pick order.
pub fn klsum_greedy<F: Real>(
    p_c: &[F],
    candidates: &[(usize, F, &[F])],
    budget: usize,
    eps: F,
) -> Vec<usize> {
    let mut picked: Vec<usize> = Vec::new();
    let mut used = 0;
    let mut current: Option<F> = None;
    loop {
        let mut best: Option<(usize, F)> = None;
        for (i, (len, _, _)) in candidates.iter().enumerate() {
            if picked.contains(&i) || used + len > budget {
                continue;
            }
            let sel: Vec<(F, &[F])> = picked
                .iter()
                .chain(std::iter::once(&i))
                .map(|&j| (candidates[j].1, candidates[j].2))
                .collect();
            let kl = klsum_objective(p_c, &sel, eps);
            if best.is_none_or(|(_, b)| kl < b) {
                best = Some((i, kl));
            }
        }
        let Some((i, kl)) = best else { break };
        if current.is_some_and(|c| kl >= c) {
            break;
        }
        picked.push(i);
        used += candidates[i].0;
        current = Some(kl);
    }
    picked
}

/// Greedy selection of DAs whose topic mixture best matches the cluster's, within a token budget.
pub fn klsum_select<F: Real>(
    cluster: &DecisionCluster,
    corpus: &Corpus,
    posterior: &TopicModelPosterior<F>,
    config: &KlSumConfig,
) -> Result<Vec<DaRef>> {
    let p_c = p_topic_given_cluster(cluster, corpus, posterior)?;
    let ms = members(cluster, corpus, posterior, "klsum_select")?;
    let candidates: Vec<(usize, F, &[F])> = ms
        .iter()
        .map(|m| {
            (
                corpus.da(m.da).tokens.len(),
                F::from_count(m.words.len()),
                m.theta,
            )
        })
        .collect();
    let picked = klsum_greedy(&p_c, &candidates, config.budget, F::lit(config.smoothing));
    if picked.is_empty() {
        log::warn!(
            "decision {}: no dialogue act fits the {}-token budget",
            cluster.decision_id,
            config.budget
        );
    }
    Ok(picked.into_iter().map(|i| ms[i].da).collect())
}
