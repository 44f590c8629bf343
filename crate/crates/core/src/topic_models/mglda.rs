//! Multi-grain LDA with meeting-level global topics and sliding-window local topics.
//!
//! Window `v` of a meeting covers DAs `v .. v + T`; a DA at position `i` may
//! draw from windows `max(0, i + 1 - T) ..= i`. Only the local topics are
//! exported as summarization topics.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::lda::{check, topic_word_estimate};
use super::{sample_index, ModelConfig, Sampler, TopicModelPosterior, TrainingData};
use crate::num::Real;

const GLOBAL: usize = 0;
const LOCAL: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgLdaPriors<F: Real> {
    pub alpha_gl: F,
    pub alpha_loc: F,
    /// Beta prior mass on the global granularity.
    pub alpha_mix_gl: F,
    /// Beta prior mass on the local granularity.
    pub alpha_mix_loc: F,
    pub gamma: F,
    pub beta: F,
    pub window: usize,
}

impl<F: Real> MgLdaPriors<F> {
    pub fn from_config(config: &ModelConfig<F>) -> Self {
        Self {
            alpha_gl: config.mg_alpha_gl,
            alpha_loc: config.mg_alpha_loc,
            alpha_mix_gl: config.mg_alpha_mix,
            alpha_mix_loc: config.mg_alpha_mix,
            gamma: config.mg_gamma,
            beta: config.beta,
            window: config.mg_window,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Token {
    word: usize,
    meeting: usize,
    da: usize,
    /// First global window index available to this token's DA.
    first_window: usize,
    num_windows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Assignment {
    window: usize,
    granularity: usize,
    topic: usize,
}

pub struct MgLdaSampler<'a, F: Real> {
    data: &'a TrainingData,
    config: ModelConfig<F>,
    priors: MgLdaPriors<F>,
    k: usize,
    tokens: Vec<Token>,
    state: Vec<Assignment>,
    /// Per DA, counts for each of its candidate windows (flat, offset by `da_window_offset`).
    da_window: Vec<u32>,
    da_window_offset: Vec<usize>,
    da_len: Vec<u32>,
    da_first_window: Vec<usize>,
    /// `[window * 2 + granularity]`.
    window_gran: Vec<u32>,
    window_loc_topic: Vec<u32>,
    meeting_gl_topic: Vec<u32>,
    meeting_gl_total: Vec<u32>,
    gl_word_topic: Vec<u32>,
    gl_topic_total: Vec<u32>,
    loc_word_topic: Vec<u32>,
    loc_topic_total: Vec<u32>,
    rng: ChaCha8Rng,
    scratch: Vec<F>,
}

impl<'a, F: Real> MgLdaSampler<'a, F> {
    pub fn new(data: &'a TrainingData, config: &ModelConfig<F>) -> Self {
        Self::with_priors(data, config, MgLdaPriors::from_config(config))
    }

    /// Sampler with explicit priors, which may be asymmetric in the granularity mixture.
    pub fn with_priors(
        data: &'a TrainingData,
        config: &ModelConfig<F>,
        priors: MgLdaPriors<F>,
    ) -> Self {
        let k = config.num_topics;
        let t = priors.window.max(1);
        let num_das = data.num_das();
        let mut tokens = Vec::with_capacity(data.num_tokens());
        let mut da_window_offset = Vec::with_capacity(num_das);
        let mut da_first_window = Vec::with_capacity(num_das);
        let mut da_len = Vec::with_capacity(num_das);
        let mut window_base = 0;
        let mut slot = 0;
        let mut da = 0;
        for (m, meeting) in data.meetings.iter().enumerate() {
            for (d, words) in meeting.iter().enumerate() {
                let first = (d + 1).saturating_sub(t);
                let num_windows = d - first + 1;
                da_window_offset.push(slot);
                da_first_window.push(window_base + first);
                da_len.push(words.len() as u32);
                slot += num_windows;
                tokens.extend(words.iter().map(|&word| Token {
                    word,
                    meeting: m,
                    da,
                    first_window: window_base + first,
                    num_windows,
                }));
                da += 1;
            }
            window_base += meeting.len();
        }
        let num_windows = window_base;
        let v = data.vocab_size;
        let mut s = Self {
            data,
            config: config.clone(),
            priors,
            k,
            state: Vec::with_capacity(tokens.len()),
            tokens,
            da_window: vec![0; slot],
            da_window_offset,
            da_len,
            da_first_window,
            window_gran: vec![0; num_windows * 2],
            window_loc_topic: vec![0; num_windows * k],
            meeting_gl_topic: vec![0; data.meetings.len() * k],
            meeting_gl_total: vec![0; data.meetings.len()],
            gl_word_topic: vec![0; v * k],
            gl_topic_total: vec![0; k],
            loc_word_topic: vec![0; v * k],
            loc_topic_total: vec![0; k],
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            scratch: Vec::new(),
        };
        for i in 0..s.tokens.len() {
            let a = s.sample_token(i);
            s.state.push(a);
            s.add(i, a);
        }
        s
    }

    /// Joint draw of (window, granularity, topic) for token `i`, whose counts are already removed.
    #[allow(clippy::needless_range_loop)]
    fn sample_token(&mut self, i: usize) -> Assignment {
        let tok = self.tokens[i];
        let k = self.k;
        let p = self.priors;
        let fk = F::from_count(k);
        let vbeta = F::from_count(self.data.vocab_size) * p.beta;
        let mix_total = p.alpha_mix_gl + p.alpha_mix_loc;
        let c = |n: u32| F::from(n).unwrap();

        self.scratch.clear();
        self.scratch.resize(tok.num_windows * 2 * k, F::zero());
        let da_slot = self.da_window_offset[tok.da];
        let gl_topic = &self.meeting_gl_topic[tok.meeting * k..(tok.meeting + 1) * k];
        let gl_denom = c(self.meeting_gl_total[tok.meeting]) + fk * p.alpha_gl;
        let w = tok.word;
        for j in 0..tok.num_windows {
            let v = tok.first_window + j;
            let window_w = c(self.da_window[da_slot + j]) + p.gamma;
            let n_gl = self.window_gran[v * 2 + GLOBAL];
            let n_loc = self.window_gran[v * 2 + LOCAL];
            let n_v = c(n_gl + n_loc) + mix_total;
            let gl_w = window_w * (c(n_gl) + p.alpha_mix_gl) / n_v;
            let loc_w = window_w * (c(n_loc) + p.alpha_mix_loc) / n_v;
            let loc_denom = c(n_loc) + fk * p.alpha_loc;
            let base = j * 2 * k;
            for z in 0..k {
                let word_gl = (c(self.gl_word_topic[w * k + z]) + p.beta)
                    / (c(self.gl_topic_total[z]) + vbeta);
                self.scratch[base + z] = gl_w * (c(gl_topic[z]) + p.alpha_gl) / gl_denom * word_gl;
                let word_loc = (c(self.loc_word_topic[w * k + z]) + p.beta)
                    / (c(self.loc_topic_total[z]) + vbeta);
                self.scratch[base + k + z] =
                    loc_w * (c(self.window_loc_topic[v * k + z]) + p.alpha_loc) / loc_denom
                        * word_loc;
            }
        }
        let idx = sample_index(&self.scratch, &mut self.rng);
        let j = idx / (2 * k);
        let rest = idx % (2 * k);
        Assignment {
            window: tok.first_window + j,
            granularity: rest / k,
            topic: rest % k,
        }
    }

    fn add(&mut self, i: usize, a: Assignment) {
        self.apply(i, a, true);
    }

    fn remove(&mut self, i: usize, a: Assignment) {
        self.apply(i, a, false);
    }

    fn apply(&mut self, i: usize, a: Assignment, inc: bool) {
        let tok = self.tokens[i];
        let k = self.k;
        let bump = |x: &mut u32| {
            if inc {
                *x += 1
            } else {
                *x -= 1
            }
        };
        bump(&mut self.da_window[self.da_window_offset[tok.da] + (a.window - tok.first_window)]);
        bump(&mut self.window_gran[a.window * 2 + a.granularity]);
        if a.granularity == GLOBAL {
            bump(&mut self.meeting_gl_topic[tok.meeting * k + a.topic]);
            bump(&mut self.meeting_gl_total[tok.meeting]);
            bump(&mut self.gl_word_topic[tok.word * k + a.topic]);
            bump(&mut self.gl_topic_total[a.topic]);
        } else {
            bump(&mut self.window_loc_topic[a.window * k + a.topic]);
            bump(&mut self.loc_word_topic[tok.word * k + a.topic]);
            bump(&mut self.loc_topic_total[a.topic]);
        }
    }

    /// Assignments as `(window, is_local, topic)` triples in token order.
    pub fn assignments(&self) -> Vec<(usize, bool, usize)> {
        self.state
            .iter()
            .map(|a| (a.window, a.granularity == LOCAL, a.topic))
            .collect()
    }

    /// Per DA, the total count over its window table.
    pub fn window_totals_per_da(&self) -> Vec<u32> {
        (0..self.da_len.len())
            .map(|da| {
                let start = self.da_window_offset[da];
                let end = self
                    .da_window_offset
                    .get(da + 1)
                    .copied()
                    .unwrap_or(self.da_window.len());
                self.da_window[start..end].iter().sum()
            })
            .collect()
    }
}

impl<F: Real> Sampler<F> for MgLdaSampler<'_, F> {
    fn sweep(&mut self) {
        for i in 0..self.tokens.len() {
            let old = self.state[i];
            self.remove(i, old);
            let new = self.sample_token(i);
            self.state[i] = new;
            self.add(i, new);
        }
    }

    fn audit(&self) -> Result<(), String> {
        let k = self.k;
        let mut da_window = vec![0u32; self.da_window.len()];
        let mut window_gran = vec![0u32; self.window_gran.len()];
        let mut window_loc_topic = vec![0u32; self.window_loc_topic.len()];
        let mut meeting_gl_topic = vec![0u32; self.meeting_gl_topic.len()];
        let mut meeting_gl_total = vec![0u32; self.meeting_gl_total.len()];
        let mut gl_word_topic = vec![0u32; self.gl_word_topic.len()];
        let mut gl_topic_total = vec![0u32; k];
        let mut loc_word_topic = vec![0u32; self.loc_word_topic.len()];
        let mut loc_topic_total = vec![0u32; k];
        for (tok, a) in self.tokens.iter().zip(&self.state) {
            if a.window < tok.first_window || a.window >= tok.first_window + tok.num_windows {
                return Err(format!("window {} outside DA coverage", a.window));
            }
            da_window[self.da_window_offset[tok.da] + a.window - tok.first_window] += 1;
            window_gran[a.window * 2 + a.granularity] += 1;
            if a.granularity == GLOBAL {
                meeting_gl_topic[tok.meeting * k + a.topic] += 1;
                meeting_gl_total[tok.meeting] += 1;
                gl_word_topic[tok.word * k + a.topic] += 1;
                gl_topic_total[a.topic] += 1;
            } else {
                window_loc_topic[a.window * k + a.topic] += 1;
                loc_word_topic[tok.word * k + a.topic] += 1;
                loc_topic_total[a.topic] += 1;
            }
        }
        check("n_d,v", &da_window, &self.da_window)?;
        check("n_v,r", &window_gran, &self.window_gran)?;
        check("n_v,loc,k", &window_loc_topic, &self.window_loc_topic)?;
        check("n_m,gl,k", &meeting_gl_topic, &self.meeting_gl_topic)?;
        check("n_m,gl", &meeting_gl_total, &self.meeting_gl_total)?;
        check("n_gl,k,w", &gl_word_topic, &self.gl_word_topic)?;
        check("n_gl,k", &gl_topic_total, &self.gl_topic_total)?;
        check("n_loc,k,w", &loc_word_topic, &self.loc_word_topic)?;
        check("n_loc,k", &loc_topic_total, &self.loc_topic_total)?;
        for (da, total) in self.window_totals_per_da().into_iter().enumerate() {
            if total != self.da_len[da] {
                return Err(format!(
                    "DA {da}: window counts sum to {total}, DA has {} tokens",
                    self.da_len[da]
                ));
            }
        }
        Ok(())
    }

    fn estimate(&self) -> TopicModelPosterior<F> {
        let k = self.k;
        let p = self.priors;
        let fk = F::from_count(k);
        let c = |n: u32| F::from(n).unwrap();
        let mut da = 0;
        let mut p_topic_given_da = Vec::with_capacity(self.data.meetings.len());
        for meeting in &self.data.meetings {
            let mut rows = Vec::with_capacity(meeting.len());
            for _ in meeting {
                let first = self.da_first_window[da];
                let slot = self.da_window_offset[da];
                let nw = self.window_totals_len(da);
                let psi_denom = c(self.da_len[da]) + F::from_count(nw) * p.gamma;
                let mut row = vec![F::zero(); k];
                for j in 0..nw {
                    let v = first + j;
                    let psi = (c(self.da_window[slot + j]) + p.gamma) / psi_denom;
                    let loc_denom = c(self.window_gran[v * 2 + LOCAL]) + fk * p.alpha_loc;
                    for (z, r) in row.iter_mut().enumerate() {
                        *r += psi * (c(self.window_loc_topic[v * k + z]) + p.alpha_loc) / loc_denom;
                    }
                }
                rows.push(row);
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
                &self.loc_word_topic,
                &self.loc_topic_total,
                p.beta,
                self.data.vocab_size,
            ),
        }
    }
}

impl<F: Real> MgLdaSampler<'_, F> {
    fn window_totals_len(&self, da: usize) -> usize {
        let end = self
            .da_window_offset
            .get(da + 1)
            .copied()
            .unwrap_or(self.da_window.len());
        end - self.da_window_offset[da]
    }
}

#[cfg(test)]
mod tests {
    use super::super::{DocumentScope, LdaSampler, ModelKind};
    use super::*;

    fn data() -> TrainingData {
        TrainingData::new(
            vec![
                vec![
                    vec![0, 1, 2],
                    vec![1, 1],
                    vec![3, 4, 0, 2],
                    vec![4],
                    vec![2, 3],
                ],
                vec![vec![0, 0, 4], vec![3]],
            ],
            5,
        )
    }

    #[test]
    fn window_sets_are_clipped_at_meeting_start() {
        let d = data();
        let cfg = ModelConfig::<f64>::new(ModelKind::MgLda, 2);
        let s = MgLdaSampler::new(&d, &cfg);
        // Meeting 0: DA0 -> {0}, DA1 -> {0,1}, DA2.. -> three windows.
        assert_eq!(s.tokens[0].num_windows, 1);
        assert_eq!(s.tokens[3].num_windows, 2);
        assert_eq!(s.tokens[5].num_windows, 3);
        // Meeting 1 starts its own windows.
        let first_m1 = d.meetings[0].iter().map(Vec::len).sum::<usize>();
        assert_eq!(s.tokens[first_m1].first_window, 5);
        assert_eq!(s.tokens[first_m1].num_windows, 1);
    }

    #[test]
    fn window_counts_sum_to_da_length_after_sweeps() {
        let d = data();
        let mut cfg = ModelConfig::<f64>::new(ModelKind::MgLda, 3);
        cfg.seed = 5;
        let mut s = MgLdaSampler::new(&d, &cfg);
        for _ in 0..20 {
            s.sweep();
            s.audit().unwrap();
            // Independent replay of the assignments.
            let mut per_da = vec![0u32; d.num_das()];
            for (tok, _) in s.tokens.iter().zip(s.assignments()) {
                per_da[tok.da] += 1;
            }
            assert_eq!(s.window_totals_per_da(), per_da);
        }
    }

    #[test]
    fn single_window_all_local_matches_local_lda() {
        let d = data();
        let mut cfg = ModelConfig::<f64>::new(ModelKind::MgLda, 3);
        cfg.seed = 11;
        cfg.mg_window = 1;
        let priors = MgLdaPriors {
            alpha_mix_gl: 0.0,
            ..MgLdaPriors::from_config(&cfg)
        };
        let mut mg = MgLdaSampler::with_priors(&d, &cfg, priors);
        let mut lda_cfg = cfg.clone();
        lda_cfg.kind = ModelKind::LocalLda;
        lda_cfg.alpha = priors.alpha_loc;
        let mut local = LdaSampler::new(&d, &lda_cfg, DocumentScope::DialogueAct);
        for _ in 0..30 {
            mg.sweep();
            local.sweep();
            let mg_topics: Vec<usize> = mg
                .assignments()
                .into_iter()
                .map(|(_, is_local, z)| {
                    assert!(is_local);
                    z
                })
                .collect();
            assert_eq!(mg_topics, local.assignments());
        }
        let a = Sampler::<f64>::estimate(&mg);
        let b = Sampler::<f64>::estimate(&local);
        for (x, y) in a
            .p_topic_given_da
            .iter()
            .flatten()
            .flatten()
            .zip(b.p_topic_given_da.iter().flatten().flatten())
        {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn estimates_are_normalized() {
        let d = data();
        let cfg = ModelConfig::<f32>::new(ModelKind::MgLda, 4);
        let mut s = MgLdaSampler::new(&d, &cfg);
        s.sweep();
        assert!(s.estimate().max_normalization_error() < 1e-5);
    }
}
