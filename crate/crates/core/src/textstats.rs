//! TF-IDF vectors, cosine similarity, centroids, and agglomerative DRDA clustering.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{DaRef, TokenId};
use crate::error::{Error, Result};
use crate::num::Real;

/// Sparse non-negative weight vector with a cached Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TfIdfVector<F: Real> {
    weights: BTreeMap<TokenId, F>,
    norm: F,
}

impl<F: Real> TfIdfVector<F> {
    /// Builds a vector, dropping zero entries. Negative weights are rejected.
    pub fn from_weights(weights: impl IntoIterator<Item = (TokenId, F)>) -> Self {
        let weights: BTreeMap<TokenId, F> = weights
            .into_iter()
            .inspect(|(_, w)| assert!(*w >= F::zero(), "tf-idf weights must be non-negative"))
            .filter(|(_, w)| *w > F::zero())
            .collect();
        let norm = weights.values().map(|w| *w * *w).sum::<F>().sqrt();
        Self { weights, norm }
    }

    pub fn weight(&self, token: TokenId) -> F {
        self.weights.get(&token).copied().unwrap_or_else(F::zero)
    }

    pub fn weights(&self) -> &BTreeMap<TokenId, F> {
        &self.weights
    }

    pub fn norm(&self) -> F {
        self.norm
    }

    pub fn is_zero(&self) -> bool {
        self.norm == F::zero()
    }

    pub fn dot(&self, other: &Self) -> F {
        let (small, large) = if self.weights.len() <= other.weights.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .weights
            .iter()
            .filter_map(|(t, w)| large.weights.get(t).map(|v| *w * *v))
            .sum()
    }
}

/// `tf(w, d) * ln(N / df(w))` over the given DAs, with raw counts and `N = docs.len()`.
///
/// Output vectors are in input order.
pub fn tfidf<F: Real>(docs: &[&[TokenId]]) -> Vec<TfIdfVector<F>> {
    let n = F::from_count(docs.len());
    let mut df: HashMap<TokenId, usize> = HashMap::new();
    let tfs: Vec<BTreeMap<TokenId, usize>> = docs
        .iter()
        .map(|doc| {
            let mut tf = BTreeMap::new();
            for t in doc.iter() {
                *tf.entry(*t).or_insert(0usize) += 1;
            }
            for t in tf.keys() {
                *df.entry(*t).or_default() += 1;
            }
            tf
        })
        .collect();
    tfs.into_iter()
        .map(|tf| {
            TfIdfVector::from_weights(tf.into_iter().map(|(t, c)| {
                let idf = (n / F::from_count(df[&t])).ln();
                (t, F::from_count(c) * idf)
            }))
        })
        .collect()
}

/// `dot(a, b) / (|a| |b|)`, or 0 when either vector is zero.
pub fn cosine<F: Real>(a: &TfIdfVector<F>, b: &TfIdfVector<F>) -> F {
    if a.is_zero() || b.is_zero() {
        return F::zero();
    }
    let c = a.dot(b) / (a.norm * b.norm);
    c.min(F::one()).max(F::zero())
}

/// Component-wise arithmetic mean.
pub fn centroid<F: Real>(vectors: &[&TfIdfVector<F>]) -> Result<TfIdfVector<F>> {
    if vectors.is_empty() {
        return Err(Error::EmptyInput("centroid"));
    }
    let n = F::from_count(vectors.len());
    let mut sum: BTreeMap<TokenId, F> = BTreeMap::new();
    for v in vectors {
        for (t, w) in &v.weights {
            *sum.entry(*t).or_insert_with(F::zero) += *w;
        }
    }
    Ok(TfIdfVector::from_weights(
        sum.into_iter().map(|(t, w)| (t, w / n)),
    ))
}

/// Jensen-Shannon divergence with natural logarithms; bounded by `ln 2`.
pub fn js_divergence<F: Real>(p: &[F], q: &[F]) -> F {
    debug_assert_eq!(p.len(), q.len());
    let half = F::lit(0.5);
    let kl_to_mid = |a: &[F], b: &[F]| -> F {
        a.iter()
            .zip(b)
            .filter(|(x, _)| **x > F::zero())
            .map(|(x, y)| *x * (*x / (half * (*x + *y))).ln())
            .sum::<F>()
    };
    let js = half * kl_to_mid(p, q) + half * kl_to_mid(q, p);
    js.max(F::zero())
}

/// `1 - JS(p, q)`.
pub fn js_similarity<F: Real>(p: &[F], q: &[F]) -> F {
    F::one() - js_divergence(p, q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Merge<F: Real> {
    /// Input position of the lowest member of each merged cluster.
    pub left: usize,
    pub right: usize,
    pub similarity: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ClusteringResult<F: Real> {
    /// Clusters ordered by their earliest member; members in input order.
    pub clusters: Vec<Vec<DaRef>>,
    pub linkage_trace: Vec<Merge<F>>,
}

/// Average-linkage agglomerative clustering under `1 - JS` similarity, stopping at `k` clusters.
///
/// Items are identified by their position in `items`; ties between candidate
/// merges go to the lexicographically lowest pair of cluster positions.
pub fn cluster_drdas<F: Real>(items: &[(DaRef, Vec<F>)], k: usize) -> Result<ClusteringResult<F>> {
    let n = items.len();
    if k == 0 {
        return Err(Error::InvalidConfig(
            "target cluster count must be >= 1".into(),
        ));
    }
    if k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let mut sim = vec![F::zero(); n * n];
    for i in 0..n {
        for j in i + 1..n {
            let s = js_similarity(&items[i].1, &items[j].1);
            sim[i * n + j] = s;
            sim[j * n + i] = s;
        }
    }
    // Each active cluster is keyed by its lowest member position.
    let mut clusters: BTreeMap<usize, Vec<usize>> = (0..n).map(|i| (i, vec![i])).collect();
    let mut trace = Vec::with_capacity(n - k);
    while clusters.len() > k {
        let keys: Vec<usize> = clusters.keys().copied().collect();
        let mut best: Option<(usize, usize, F)> = None;
        for (ai, &a) in keys.iter().enumerate() {
            for &b in &keys[ai + 1..] {
                let ma = &clusters[&a];
                let mb = &clusters[&b];
                let total: F = ma
                    .iter()
                    .flat_map(|&x| mb.iter().map(move |&y| (x, y)))
                    .map(|(x, y)| sim[x * n + y])
                    .sum();
                let avg = total / F::from_count(ma.len() * mb.len());
                if best.is_none_or(|(_, _, s)| avg > s) {
                    best = Some((a, b, avg));
                }
            }
        }
        let (a, b, s) = best.expect("at least two clusters remain");
        let mut moved = clusters.remove(&b).expect("active cluster");
        let target = clusters.get_mut(&a).expect("active cluster");
        target.append(&mut moved);
        target.sort_unstable();
        trace.push(Merge {
            left: a,
            right: b,
            similarity: s,
        });
    }
    Ok(ClusteringResult {
        clusters: clusters
            .into_values()
            .map(|m| m.into_iter().map(|i| items[i].0).collect())
            .collect(),
        linkage_trace: trace,
    })
}
