//! Segmented Topic Model: each meeting has a Dirichlet topic distribution and
//! each DA draws its own distribution from a Pitman–Yor process centered on it.
//!
//! The sampler keeps, for every token, the topic and a flag saying whether the
//! token opened a table in its DA's restaurant. Table counts per (DA, topic)
//! are the number of flagged tokens.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lda::{check, topic_word_estimate};
use super::{sample_index, ModelConfig, Sampler, TopicModelPosterior, TrainingData};
use crate::num::Real;

/// Table of `ln S^n_{m,a}`, the generalized Stirling numbers with discount `a`.
///
/// `S^{n+1}_m = S^n_{m-1} + (n - m a) S^n_m`, `S^0_0 = 1`.
#[derive(Debug, Clone)]
pub struct LogStirling {
    a: f64,
    rows: Vec<Vec<f64>>,
}

impl LogStirling {
    pub fn new(a: f64) -> Self {
        Self {
            a,
            rows: vec![vec![0.0]],
        }
    }

    /// `ln S^n_m`; negative infinity outside `1 ≤ m ≤ n` (except `S^0_0`).
    pub fn get(&mut self, n: usize, m: usize) -> f64 {
        if m > n {
            return f64::NEG_INFINITY;
        }
        self.extend_to(n);
        self.rows[n][m]
    }

    fn extend_to(&mut self, n: usize) {
        while self.rows.len() <= n {
            let prev_n = self.rows.len() - 1;
            let prev = &self.rows[prev_n];
            let mut row = vec![f64::NEG_INFINITY; prev_n + 2];
            for (m, slot) in row.iter_mut().enumerate() {
                let from_new = if m >= 1 {
                    prev[m - 1]
                } else {
                    f64::NEG_INFINITY
                };
                let coef = prev_n as f64 - m as f64 * self.a;
                let from_old = if m <= prev_n && coef > 0.0 {
                    coef.ln() + prev[m]
                } else {
                    f64::NEG_INFINITY
                };
                *slot = crate::num::log_add_exp(from_new, from_old);
            }
            self.rows.push(row);
        }
    }

    /// `ln(S^{n+1}_{m'} / S^n_m)` as used by the add step.
    fn ratio(&mut self, n: usize, m: usize, new_table: bool) -> f64 {
        let m1 = if new_table { m + 1 } else { m };
        self.get(n + 1, m1) - self.get(n, m)
    }
}

#[derive(Debug, Clone, Copy)]
struct Token {
    word: usize,
    meeting: usize,
    da: usize,
}

pub struct StmSampler<'a, F: Real> {
    data: &'a TrainingData,
    config: ModelConfig<F>,
    k: usize,
    tokens: Vec<Token>,
    z: Vec<usize>,
    opener: Vec<bool>,
    /// `c_dk` customers and `t_dk` tables, `[da * K + k]`.
    da_topic: Vec<u32>,
    da_tables: Vec<u32>,
    da_len: Vec<u32>,
    da_table_total: Vec<u32>,
    /// `T_mk` and `T_m`.
    meeting_tables: Vec<u32>,
    meeting_table_total: Vec<u32>,
    word_topic: Vec<u32>,
    topic_total: Vec<u32>,
    stirling: LogStirling,
    rng: ChaCha8Rng,
    scratch: Vec<F>,
}

impl<'a, F: Real> StmSampler<'a, F> {
    pub fn new(data: &'a TrainingData, config: &ModelConfig<F>) -> Self {
        let k = config.num_topics;
        let mut tokens = Vec::with_capacity(data.num_tokens());
        let mut da_len = Vec::with_capacity(data.num_das());
        let mut da = 0;
        for (m, meeting) in data.meetings.iter().enumerate() {
            for words in meeting {
                da_len.push(0);
                tokens.extend(words.iter().map(|&word| Token {
                    word,
                    meeting: m,
                    da,
                }));
                da += 1;
            }
        }
        let num_das = data.num_das();
        let n = tokens.len();
        let mut s = Self {
            data,
            config: config.clone(),
            k,
            tokens,
            z: vec![0; n],
            opener: vec![false; n],
            da_topic: vec![0; num_das * k],
            da_tables: vec![0; num_das * k],
            da_len,
            da_table_total: vec![0; num_das],
            meeting_tables: vec![0; data.meetings.len() * k],
            meeting_table_total: vec![0; data.meetings.len()],
            word_topic: vec![0; data.vocab_size * k],
            topic_total: vec![0; k],
            stirling: LogStirling::new(config.stm_a.as_f64()),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            scratch: vec![F::zero(); 2 * k],
        };
        for i in 0..n {
            let (topic, open) = s.draw(i);
            s.add(i, topic, open);
        }
        s
    }

    pub fn assignments(&self) -> &[usize] {
        &self.z
    }

    /// Flags marking the tokens that opened a table.
    pub fn openers(&self) -> &[bool] {
        &self.opener
    }

    /// Joint draw of topic and table flag: indices `0..K` open a table, `K..2K` join one.
    fn draw(&mut self, i: usize) -> (usize, bool) {
        let t = self.tokens[i];
        let k = self.k;
        let cfg = &self.config;
        let c = |n: u32| F::from(n).unwrap();
        let fk = F::from_count(k);
        let vbeta = F::from_count(self.data.vocab_size) * cfg.beta;
        let td = self.da_table_total[t.da];
        let strength = cfg.stm_b + cfg.stm_a * c(td);
        let tm = self.meeting_table_total[t.meeting];
        let base_denom = c(tm) + fk * cfg.stm_alpha;
        for j in 0..k {
            let cdk = self.da_topic[t.da * k + j] as usize;
            let tdk = self.da_tables[t.da * k + j] as usize;
            let word =
                (c(self.word_topic[t.word * k + j]) + cfg.beta) / (c(self.topic_total[j]) + vbeta);
            let base = (c(self.meeting_tables[t.meeting * k + j]) + cfg.stm_alpha) / base_denom;
            let r_new = self.stirling.ratio(cdk, tdk, true);
            self.scratch[j] = strength * F::lit(r_new.exp()) * F::from_count(tdk + 1)
                / F::from_count(cdk + 1)
                * base
                * word;
            self.scratch[k + j] = if tdk >= 1 {
                let r_old = self.stirling.ratio(cdk, tdk, false);
                F::lit(r_old.exp()) * F::from_count(cdk - tdk + 1) / F::from_count(cdk + 1) * word
            } else {
                F::zero()
            };
        }
        let idx = sample_index(&self.scratch, &mut self.rng);
        (idx % k, idx < k)
    }

    fn add(&mut self, i: usize, topic: usize, open: bool) {
        let t = self.tokens[i];
        let k = self.k;
        self.z[i] = topic;
        self.opener[i] = open;
        self.da_topic[t.da * k + topic] += 1;
        self.da_len[t.da] += 1;
        self.word_topic[t.word * k + topic] += 1;
        self.topic_total[topic] += 1;
        if open {
            self.da_tables[t.da * k + topic] += 1;
            self.da_table_total[t.da] += 1;
            self.meeting_tables[t.meeting * k + topic] += 1;
            self.meeting_table_total[t.meeting] += 1;
        }
    }

    /// Removes token `i` unless it is the only opener of a table that still has
    /// other customers, in which case it stays put.
    fn try_remove(&mut self, i: usize) -> bool {
        let t = self.tokens[i];
        let k = self.k;
        let topic = self.z[i];
        let cell = t.da * k + topic;
        if self.opener[i] && self.da_tables[cell] == 1 && self.da_topic[cell] > 1 {
            return false;
        }
        self.da_topic[cell] -= 1;
        self.da_len[t.da] -= 1;
        self.word_topic[t.word * k + topic] -= 1;
        self.topic_total[topic] -= 1;
        if self.opener[i] {
            self.da_tables[cell] -= 1;
            self.da_table_total[t.da] -= 1;
            self.meeting_tables[t.meeting * k + topic] -= 1;
            self.meeting_table_total[t.meeting] -= 1;
        }
        true
    }
}

impl<F: Real> Sampler<F> for StmSampler<'_, F> {
    fn sweep(&mut self) {
        for i in 0..self.tokens.len() {
            if self.try_remove(i) {
                let (topic, open) = self.draw(i);
                self.add(i, topic, open);
            }
        }
    }

    fn audit(&self) -> Result<(), String> {
        let k = self.k;
        let mut da_topic = vec![0u32; self.da_topic.len()];
        let mut da_tables = vec![0u32; self.da_tables.len()];
        let mut da_len = vec![0u32; self.da_len.len()];
        let mut da_table_total = vec![0u32; self.da_table_total.len()];
        let mut meeting_tables = vec![0u32; self.meeting_tables.len()];
        let mut meeting_table_total = vec![0u32; self.meeting_table_total.len()];
        let mut word_topic = vec![0u32; self.word_topic.len()];
        let mut topic_total = vec![0u32; k];
        for ((t, &z), &open) in self.tokens.iter().zip(&self.z).zip(&self.opener) {
            if z >= k {
                return Err(format!("topic {z} out of range"));
            }
            da_topic[t.da * k + z] += 1;
            da_len[t.da] += 1;
            word_topic[t.word * k + z] += 1;
            topic_total[z] += 1;
            if open {
                da_tables[t.da * k + z] += 1;
                da_table_total[t.da] += 1;
                meeting_tables[t.meeting * k + z] += 1;
                meeting_table_total[t.meeting] += 1;
            }
        }
        check("c_dk", &da_topic, &self.da_topic)?;
        check("t_dk", &da_tables, &self.da_tables)?;
        check("c_d", &da_len, &self.da_len)?;
        check("t_d", &da_table_total, &self.da_table_total)?;
        check("T_mk", &meeting_tables, &self.meeting_tables)?;
        check("T_m", &meeting_table_total, &self.meeting_table_total)?;
        check("n_kw", &word_topic, &self.word_topic)?;
        check("n_k", &topic_total, &self.topic_total)?;
        for (cell, (&c, &t)) in self.da_topic.iter().zip(&self.da_tables).enumerate() {
            let ok = if c == 0 { t == 0 } else { 1 <= t && t <= c };
            if !ok {
                return Err(format!(
                    "DA {} topic {}: {t} tables for {c} customers",
                    cell / k,
                    cell % k
                ));
            }
        }
        Ok(())
    }

    fn estimate(&self) -> TopicModelPosterior<F> {
        let k = self.k;
        let cfg = &self.config;
        let c = |n: u32| F::from(n).unwrap();
        let fk = F::from_count(k);
        let mut da = 0;
        let mut p_topic_given_da = Vec::with_capacity(self.data.meetings.len());
        for (m, meeting) in self.data.meetings.iter().enumerate() {
            let base_denom = c(self.meeting_table_total[m]) + fk * cfg.stm_alpha;
            let theta_m: Vec<F> = (0..k)
                .map(|j| (c(self.meeting_tables[m * k + j]) + cfg.stm_alpha) / base_denom)
                .collect();
            let mut rows = Vec::with_capacity(meeting.len());
            for _ in meeting {
                let strength = cfg.stm_b + cfg.stm_a * c(self.da_table_total[da]);
                let denom = cfg.stm_b + c(self.da_len[da]);
                rows.push(
                    (0..k)
                        .map(|j| {
                            let cell = da * k + j;
                            (c(self.da_topic[cell]) - cfg.stm_a * c(self.da_tables[cell])
                                + strength * theta_m[j])
                                / denom
                        })
                        .collect(),
                );
                da += 1;
            }
            p_topic_given_da.push(rows);
        }
        TopicModelPosterior {
            config: self.config.clone(),
            num_topics: k,
            vocab_size: self.data.vocab_size,
            p_topic_given_da,
            p_word_given_topic: topic_word_estimate(
                &self.word_topic,
                &self.topic_total,
                cfg.beta,
                self.data.vocab_size,
            ),
        }
    }
}
