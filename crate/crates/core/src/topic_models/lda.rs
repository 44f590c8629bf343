use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sample_index, ModelConfig, Sampler, TopicModelPosterior, TrainingData};
use crate::num::Real;

/// What counts as a document for the topic proportions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocumentScope {
    /// Plain LDA: all DAs of a meeting share one topic distribution.
    Meeting,
    /// Local LDA: every DA is its own document.
    DialogueAct,
}

/// Unnormalized collapsed conditional `(n_dk + a)(n_kw + b) / (n_k + V b)` for every topic.
///
/// The token being resampled must already be removed from the counts.
pub fn lda_conditional<F: Real>(
    doc_topic: &[u32],
    word_topic: &[u32],
    topic_total: &[u32],
    alpha: F,
    beta: F,
    vocab_size: usize,
    out: &mut [F],
) {
    let vbeta = F::from_count(vocab_size) * beta;
    for (k, o) in out.iter_mut().enumerate() {
        *o = (F::from(doc_topic[k]).unwrap() + alpha) * (F::from(word_topic[k]).unwrap() + beta)
            / (F::from(topic_total[k]).unwrap() + vbeta);
    }
}

#[derive(Debug, Clone, Copy)]
struct Token {
    word: usize,
    doc: usize,
    da: usize,
}

/// Collapsed Gibbs sampler for LDA and Local LDA.
pub struct LdaSampler<'a, F: Real> {
    data: &'a TrainingData,
    config: ModelConfig<F>,
    scope: DocumentScope,
    k: usize,
    tokens: Vec<Token>,
    z: Vec<usize>,
    doc_topic: Vec<u32>,
    da_topic: Vec<u32>,
    da_len: Vec<u32>,
    word_topic: Vec<u32>,
    topic_total: Vec<u32>,
    rng: ChaCha8Rng,
    scratch: Vec<F>,
}

impl<'a, F: Real> LdaSampler<'a, F> {
    pub fn new(data: &'a TrainingData, config: &ModelConfig<F>, scope: DocumentScope) -> Self {
        let k = config.num_topics;
        let offsets = data.da_offsets();
        let mut tokens = Vec::with_capacity(data.num_tokens());
        let mut da_len = vec![0u32; data.num_das()];
        for (m, meeting) in data.meetings.iter().enumerate() {
            for (d, words) in meeting.iter().enumerate() {
                let da = offsets[m] + d;
                let doc = match scope {
                    DocumentScope::Meeting => m,
                    DocumentScope::DialogueAct => da,
                };
                da_len[da] = words.len() as u32;
                tokens.extend(words.iter().map(|&word| Token { word, doc, da }));
            }
        }
        let num_docs = match scope {
            DocumentScope::Meeting => data.meetings.len(),
            DocumentScope::DialogueAct => data.num_das(),
        };
        let mut s = Self {
            data,
            config: config.clone(),
            scope,
            k,
            z: vec![0; tokens.len()],
            tokens,
            doc_topic: vec![0; num_docs * k],
            da_topic: vec![0; data.num_das() * k],
            da_len,
            word_topic: vec![0; data.vocab_size * k],
            topic_total: vec![0; k],
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            scratch: vec![F::zero(); k],
        };
        for i in 0..s.tokens.len() {
            let topic = s.draw(i);
            s.assign(i, topic);
        }
        s
    }

    pub fn scope(&self) -> DocumentScope {
        self.scope
    }

    pub fn assignments(&self) -> &[usize] {
        &self.z
    }

    fn draw(&mut self, i: usize) -> usize {
        let t = self.tokens[i];
        let k = self.k;
        lda_conditional(
            &self.doc_topic[t.doc * k..(t.doc + 1) * k],
            &self.word_topic[t.word * k..(t.word + 1) * k],
            &self.topic_total,
            self.config.alpha,
            self.config.beta,
            self.data.vocab_size,
            &mut self.scratch,
        );
        sample_index(&self.scratch, &mut self.rng)
    }

    fn assign(&mut self, i: usize, topic: usize) {
        let t = self.tokens[i];
        let k = self.k;
        self.z[i] = topic;
        self.doc_topic[t.doc * k + topic] += 1;
        self.da_topic[t.da * k + topic] += 1;
        self.word_topic[t.word * k + topic] += 1;
        self.topic_total[topic] += 1;
    }

    fn unassign(&mut self, i: usize) {
        let t = self.tokens[i];
        let k = self.k;
        let topic = self.z[i];
        self.doc_topic[t.doc * k + topic] -= 1;
        self.da_topic[t.da * k + topic] -= 1;
        self.word_topic[t.word * k + topic] -= 1;
        self.topic_total[topic] -= 1;
    }
}

impl<F: Real> Sampler<F> for LdaSampler<'_, F> {
    fn sweep(&mut self) {
        for i in 0..self.tokens.len() {
            self.unassign(i);
            let topic = self.draw(i);
            self.assign(i, topic);
        }
    }

    fn audit(&self) -> Result<(), String> {
        let k = self.k;
        let mut doc_topic = vec![0u32; self.doc_topic.len()];
        let mut da_topic = vec![0u32; self.da_topic.len()];
        let mut word_topic = vec![0u32; self.word_topic.len()];
        let mut topic_total = vec![0u32; k];
        for (t, &z) in self.tokens.iter().zip(&self.z) {
            if z >= k {
                return Err(format!("topic {z} out of range"));
            }
            doc_topic[t.doc * k + z] += 1;
            da_topic[t.da * k + z] += 1;
            word_topic[t.word * k + z] += 1;
            topic_total[z] += 1;
        }
        check("n_dk", &doc_topic, &self.doc_topic)?;
        check("n_da,k", &da_topic, &self.da_topic)?;
        check("n_kw", &word_topic, &self.word_topic)?;
        check("n_k", &topic_total, &self.topic_total)?;
        let assigned: u32 = self.topic_total.iter().sum();
        if assigned as usize != self.data.num_tokens() {
            return Err(format!(
                "{assigned} tokens assigned, corpus has {}",
                self.data.num_tokens()
            ));
        }
        Ok(())
    }

    fn estimate(&self) -> TopicModelPosterior<F> {
        let k = self.k;
        let alpha = self.config.alpha;
        let beta = self.config.beta;
        let kalpha = F::from_count(k) * alpha;
        let offsets = self.data.da_offsets();
        let p_topic_given_da = self
            .data
            .meetings
            .iter()
            .enumerate()
            .map(|(m, meeting)| {
                (0..meeting.len())
                    .map(|d| {
                        let da = offsets[m] + d;
                        let denom = F::from(self.da_len[da]).unwrap() + kalpha;
                        (0..k)
                            .map(|j| (F::from(self.da_topic[da * k + j]).unwrap() + alpha) / denom)
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let p_word_given_topic = topic_word_estimate(
            &self.word_topic,
            &self.topic_total,
            beta,
            self.data.vocab_size,
        );
        TopicModelPosterior {
            config: self.config.clone(),
            num_topics: k,
            vocab_size: self.data.vocab_size,
            p_topic_given_da,
            p_word_given_topic,
        }
    }
}

/// `(n_kw + beta) / (n_k + V beta)` from a word-major `[w * K + k]` table.
pub(super) fn topic_word_estimate<F: Real>(
    word_topic: &[u32],
    topic_total: &[u32],
    beta: F,
    vocab_size: usize,
) -> Vec<Vec<F>> {
    let k = topic_total.len();
    let vbeta = F::from_count(vocab_size) * beta;
    (0..k)
        .map(|j| {
            let denom = F::from(topic_total[j]).unwrap() + vbeta;
            (0..vocab_size)
                .map(|w| (F::from(word_topic[w * k + j]).unwrap() + beta) / denom)
                .collect()
        })
        .collect()
}

pub(super) fn check(name: &str, expected: &[u32], actual: &[u32]) -> Result<(), String> {
    match expected.iter().zip(actual).position(|(a, b)| a != b) {
        None => Ok(()),
        Some(i) => Err(format!(
            "{name}[{i}] is {} but assignments imply {}",
            actual[i], expected[i]
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conditional_hand_values() {
        let mut out = [0.0f64; 2];
        lda_conditional(&[1, 0], &[2, 0], &[3, 0], 0.1, 0.1, 2, &mut out);
        assert!((out[0] - 1.1 * 2.1 / 3.2).abs() < 1e-12);
        assert!((out[0] - 0.7219).abs() < 1e-4);
        assert!((out[1] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn conditional_uniform_when_counts_zero() {
        let mut out = [0.0f64; 3];
        lda_conditional(&[0; 3], &[0; 3], &[0; 3], 0.1, 0.1, 7, &mut out);
        let expected = 0.1 * 0.1 / (7.0 * 0.1);
        assert!(out.iter().all(|v| (v - expected).abs() < 1e-15));
    }

    #[test]
    fn local_lda_single_snapshot_estimate() {
        // One DA with two tokens, both forced onto topic 0 by the data layout.
        let data = TrainingData::new(vec![vec![vec![0, 0]]], 1);
        let cfg = ModelConfig::<f64>::new(super::super::ModelKind::LocalLda, 2);
        let mut s = LdaSampler::new(&data, &cfg, DocumentScope::DialogueAct);
        for i in 0..2 {
            s.unassign(i);
            s.assign(i, 0);
        }
        s.audit().unwrap();
        let p = s.estimate();
        assert!((p.p_topic_given_da[0][0][0] - 2.1 / 2.2).abs() < 1e-12);
        assert!((p.p_topic_given_da[0][0][1] - 0.1 / 2.2).abs() < 1e-12);
        assert!((p.p_topic_given_da[0][0][0] - 0.9545).abs() < 1e-4);
    }

    #[test]
    fn audit_detects_corruption() {
        let data = TrainingData::new(vec![vec![vec![0, 1, 1]]], 2);
        let cfg = ModelConfig::<f64>::new(super::super::ModelKind::Lda, 2);
        let mut s = LdaSampler::new(&data, &cfg, DocumentScope::Meeting);
        s.audit().unwrap();
        s.topic_total[0] += 1;
        assert!(s.audit().is_err());
    }
}
