mod common;

use std::collections::HashSet;

use common::{cluster, corpus, normalized, posterior, WORDS};
use domsum::summarize::{
    domsum, klsum_greedy, klsum_objective, score_multitopic, score_onetopic, score_tmm,
};
use proptest::prelude::*;

#[derive(Debug, Clone)]
struct Instance {
    das: Vec<Vec<usize>>,
    theta: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=5, 1usize..=4).prop_flat_map(|(n, k)| {
        (
            prop::collection::vec(prop::collection::vec(0..WORDS.len(), 1..=6), n),
            prop::collection::vec(prop::collection::vec(0.01f64..1.0, k), n),
            prop::collection::vec(prop::collection::vec(0.01f64..1.0, WORDS.len()), k),
        )
            .prop_map(|(das, theta, phi)| Instance {
                das,
                theta: theta.into_iter().map(normalized).collect(),
                phi: phi.into_iter().map(normalized).collect(),
            })
    })
}

fn run(inst: &Instance) -> Vec<String> {
    let c = corpus(&inst.das);
    let p = posterior(&c, &inst.theta, &inst.phi);
    domsum(&cluster(inst.das.len()), &c, &p).unwrap().tokens
}

proptest! {
    #[test]
    fn domsum_words_come_from_the_cluster(inst in instance()) {
        let out = run(&inst);
        let pool: HashSet<&str> = inst.das.iter().flatten().map(|&w| WORDS[w]).collect();
        let mut seen = HashSet::new();
        for t in &out {
            prop_assert!(pool.contains(t.as_str()));
            prop_assert!(seen.insert(t.clone()), "duplicate {}", t);
        }
    }

    #[test]
    fn duplicating_a_da_changes_nothing(inst in instance(), pick in any::<prop::sample::Index>()) {
        let i = pick.index(inst.das.len());
        let mut dup = inst.clone();
        dup.das.push(inst.das[i].clone());
        dup.theta.push(inst.theta[i].clone());
        prop_assert_eq!(run(&inst), run(&dup));
    }

    #[test]
    fn scaling_a_word_across_topics_keeps_the_argmax(
        inst in instance(),
        word in 0..WORDS.len(),
        scale in 0.05f64..20.0,
    ) {
        let mut scaled = inst.clone();
        for row in &mut scaled.phi {
            row[word] *= scale;
        }
        prop_assert_eq!(run(&inst), run(&scaled));
    }

    #[test]
    fn utterance_scores_are_shares(inst in instance()) {
        let c = corpus(&inst.das);
        let p = posterior(&c, &inst.theta, &inst.phi);
        let cl = cluster(inst.das.len());
        for scores in [score_onetopic(&cl, &c, &p).unwrap(), score_multitopic(&cl, &c, &p).unwrap()] {
            let total: f64 = scores.iter().map(|s| s.1).sum();
            prop_assert!((total - 1.0).abs() < 1e-9, "{}", total);
        }
        for (_, ll) in score_tmm(&cl, &c, &p).unwrap() {
            prop_assert!(ll <= 0.0 && ll.is_finite());
        }
    }

    #[test]
    fn klsum_objective_never_increases_along_greedy_picks(
        inst in instance(),
        budget in 1usize..20,
    ) {
        let k = inst.phi.len();
        let p_c = normalized(inst.theta.iter().fold(vec![0.0; k], |mut acc, r| {
            acc.iter_mut().zip(r).for_each(|(a, b)| *a += b);
            acc
        }));
        let cands: Vec<(usize, f64, &[f64])> = inst
            .das
            .iter()
            .zip(&inst.theta)
            .map(|(d, t)| (d.len(), d.len() as f64, t.as_slice()))
            .collect();
        let picks = klsum_greedy(&p_c, &cands, budget, 1e-6);
        let mut prev = f64::INFINITY;
        let mut used = 0;
        for n in 1..=picks.len() {
            let sel: Vec<(f64, &[f64])> = picks[..n].iter().map(|&i| (cands[i].1, cands[i].2)).collect();
            let kl = klsum_objective(&p_c, &sel, 1e-6);
            prop_assert!(kl < prev);
            prev = kl;
            used += cands[picks[n - 1]].0;
        }
        prop_assert!(used <= budget);
    }
}
