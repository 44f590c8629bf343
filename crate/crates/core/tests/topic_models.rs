mod common;

use common::{matched_tv, synthetic, toy_dir};
use domsum::num::argmax;
use domsum::topic_models::{build_sampler, train_data, TrainingData};
use domsum::{load_corpus, ModelConfig, ModelKind, PreprocessConfig};

fn quick(kind: ModelKind, k: usize, seed: u64) -> ModelConfig {
    let mut cfg = ModelConfig::new(kind, k);
    cfg.iterations = 200;
    cfg.burn_in = 100;
    cfg.seed = seed;
    cfg
}

#[test]
fn local_lda_recovers_separated_topics() {
    let syn = synthetic(1, 20, 10, 10, false);
    let post = train_data(&syn.data, &quick(ModelKind::LocalLda, 2, 5)).unwrap();
    for tv in matched_tv(&post.p_word_given_topic, &syn.phi) {
        assert!(tv <= 0.1, "{tv}");
    }
}

#[test]
fn pure_das_share_the_topic_that_owns_their_words() {
    let syn = synthetic(2, 10, 10, 10, true);
    let post = train_data(&syn.data, &quick(ModelKind::LocalLda, 2, 9)).unwrap();
    for (m, meeting) in syn.data.meetings.iter().enumerate() {
        for d in 0..meeting.len() {
            let k = argmax(&post.p_topic_given_da[m][d]);
            let half = syn.da_topic[m][d];
            let mass: f64 = (half * 5..half * 5 + 5)
                .map(|w| post.p_word_given_topic[k][w])
                .sum();
            assert!(mass >= 0.9, "meeting {m} da {d}: {mass}");
        }
    }
}

#[test]
fn stm_without_discount_and_large_concentration_matches_meeting_lda() {
    let syn = synthetic(3, 8, 8, 8, true);
    let lda = train_data(&syn.data, &quick(ModelKind::Lda, 2, 4)).unwrap();
    let mut cfg = quick(ModelKind::Stm, 2, 4);
    cfg.stm_a = 0.0;
    cfg.stm_b = 1e4;
    let stm = train_data(&syn.data, &cfg).unwrap();
    let labels = |p: &domsum::Posterior| -> Vec<usize> {
        p.p_topic_given_da
            .iter()
            .flatten()
            .map(|r| argmax(r))
            .collect()
    };
    let (a, b) = (labels(&lda), labels(&stm));
    let same = a.iter().zip(&b).filter(|(x, y)| x == y).count();
    assert!(
        same == a.len() || same == 0,
        "agree on {same} of {}",
        a.len()
    );
}

#[test]
fn stm_da_distributions_collapse_to_the_meeting_with_large_concentration() {
    let syn = synthetic(4, 4, 6, 8, false);
    let mut cfg = quick(ModelKind::Stm, 3, 1);
    cfg.stm_a = 0.0;
    cfg.stm_b = 1e6;
    let post = train_data(&syn.data, &cfg).unwrap();
    for meeting in &post.p_topic_given_da {
        for row in meeting {
            for (x, y) in row.iter().zip(&meeting[0]) {
                assert!((x - y).abs() < 1e-3);
            }
        }
    }
}

#[test]
fn every_model_passes_audits_on_toy() {
    let corpus = load_corpus(&toy_dir(), &PreprocessConfig::default()).unwrap();
    let data = TrainingData::from_corpus(&corpus, true);
    for kind in ModelKind::ALL {
        let mut cfg = quick(kind, 4, 2);
        cfg.iterations = 30;
        cfg.burn_in = 10;
        cfg.audit = true;
        let post = train_data(&data, &cfg).unwrap();
        assert!(post.max_normalization_error() < 1e-6, "{kind}");
    }
}

#[test]
fn f32_and_f64_agree_on_dominant_topics() {
    let syn = synthetic(5, 6, 6, 8, true);
    let a = train_data(&syn.data, &quick(ModelKind::LocalLda, 2, 3)).unwrap();
    let mut cfg32 = domsum::ModelConfig32::new(ModelKind::LocalLda, 2);
    cfg32.iterations = 200;
    cfg32.burn_in = 100;
    cfg32.seed = 3;
    let b = train_data(&syn.data, &cfg32).unwrap();
    assert!(b.max_normalization_error() < 1e-4);
    let la: Vec<usize> = a
        .p_topic_given_da
        .iter()
        .flatten()
        .map(|r| argmax(r))
        .collect();
    let lb: Vec<usize> = b
        .p_topic_given_da
        .iter()
        .flatten()
        .map(|r| argmax(r))
        .collect();
    let same = la.iter().zip(&lb).filter(|(x, y)| x == y).count();
    assert!(same == la.len() || same == 0);
}

#[test]
fn empty_vocabulary_and_zero_topics_are_errors() {
    let empty = TrainingData::new(vec![vec![vec![]]], 0);
    assert!(build_sampler(&empty, &ModelConfig::new(ModelKind::Lda, 2)).is_err());
    let syn = synthetic(6, 1, 2, 2, true);
    assert!(train_data(&syn.data, &ModelConfig::new(ModelKind::Stm, 0)).is_err());
}
