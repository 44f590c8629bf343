//! ROUGE-1, ROUGE-2 and ROUGE-SU4 with stemming and stopword removal.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::hash::Hash;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::StopwordList;
use crate::error::{Error, Result};
use crate::stem::porter_stem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    R1,
    R2,
    SU4,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::R1, Variant::R2, Variant::SU4];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::R1 => "R1",
            Variant::R2 => "R2",
            Variant::SU4 => "SU4",
        })
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "R1" | "ROUGE1" => Ok(Variant::R1),
            "R2" | "ROUGE2" => Ok(Variant::R2),
            "SU4" | "RSU4" | "ROUGESU4" => Ok(Variant::SU4),
            _ => Err(format!("unknown ROUGE variant \"{s}\"")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RougeConfig {
    pub variants: Vec<Variant>,
    pub stem: bool,
    pub remove_stopwords: bool,
    pub su4_max_skip: usize,
}

impl Default for RougeConfig {
    fn default() -> Self {
        Self {
            variants: Variant::ALL.to_vec(),
            stem: true,
            remove_stopwords: true,
            su4_max_skip: 4,
        }
    }
}

/// Precision, recall and F1 with the raw counts behind them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matches: usize,
    pub system_units: usize,
    pub reference_units: usize,
}

impl Scores {
    pub fn from_counts(matches: usize, system_units: usize, reference_units: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(matches, system_units);
        let recall = ratio(matches, reference_units);
        Self {
            precision,
            recall,
            f1: f1(precision, recall),
            matches,
            system_units,
            reference_units,
        }
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Stopword filtering, then stemming, as enabled in `config`.
pub fn preprocess_for_rouge(
    tokens: &[String],
    config: &RougeConfig,
    stopwords: &StopwordList,
) -> Vec<String> {
    tokens
        .iter()
        .filter(|t| !(config.remove_stopwords && stopwords.contains(t)))
        .map(|t| {
            if config.stem {
                porter_stem(t)
            } else {
                t.clone()
            }
        })
        .collect()
}

fn counts<T: Eq + Hash>(units: impl IntoIterator<Item = T>) -> (HashMap<T, usize>, usize) {
    let mut map = HashMap::new();
    let mut total = 0;
    for u in units {
        *map.entry(u).or_insert(0) += 1;
        total += 1;
    }
    (map, total)
}

fn clipped<T: Eq + Hash>(
    sys: impl IntoIterator<Item = T>,
    refr: impl IntoIterator<Item = T>,
) -> Scores {
    let (s, ns) = counts(sys);
    let (r, nr) = counts(refr);
    let matches = s
        .iter()
        .map(|(u, c)| r.get(u).map_or(0, |rc| (*c).min(*rc)))
        .sum();
    Scores::from_counts(matches, ns, nr)
}

fn ngrams(tokens: &[String], n: usize) -> impl Iterator<Item = &[String]> {
    tokens.windows(n.max(1))
}

/// Clipped n-gram overlap.
pub fn rouge_n(system: &[String], reference: &[String], n: usize) -> Scores {
    clipped(ngrams(system, n), ngrams(reference, n))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum SuUnit<'a> {
    Uni(&'a str),
    Pair(&'a str, &'a str),
}

fn su_units(tokens: &[String], max_skip: usize) -> Vec<SuUnit<'_>> {
    let mut out: Vec<SuUnit<'_>> = tokens.iter().map(|t| SuUnit::Uni(t)).collect();
    for i in 0..tokens.len() {
        for j in i + 1..tokens.len().min(i + max_skip + 2) {
            out.push(SuUnit::Pair(&tokens[i], &tokens[j]));
        }
    }
    out
}

/// Skip-bigrams with at most `max_skip` skipped tokens, plus unigrams.
pub fn rouge_su(system: &[String], reference: &[String], max_skip: usize) -> Scores {
    clipped(su_units(system, max_skip), su_units(reference, max_skip))
}

pub fn rouge_su4(system: &[String], reference: &[String]) -> Scores {
    rouge_su(system, reference, 4)
}

/// Scores raw token lists with a fixed configuration and stopword list.
#[derive(Debug, Clone)]
pub struct RougeScorer {
    pub config: RougeConfig,
    stopwords: StopwordList,
}

impl RougeScorer {
    pub fn new(config: RougeConfig, stopwords: StopwordList) -> Self {
        Self { config, stopwords }
    }

    pub fn preprocess(&self, tokens: &[String]) -> Vec<String> {
        preprocess_for_rouge(tokens, &self.config, &self.stopwords)
    }

    pub fn score(&self, system: &[String], reference: &[String]) -> BTreeMap<Variant, Scores> {
        let s = self.preprocess(system);
        let r = self.preprocess(reference);
        self.config
            .variants
            .iter()
            .map(|v| {
                let sc = match v {
                    Variant::R1 => rouge_n(&s, &r, 1),
                    Variant::R2 => rouge_n(&s, &r, 2),
                    Variant::SU4 => rouge_su(&s, &r, self.config.su4_max_skip),
                };
                (*v, sc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionScores {
    pub decision_id: String,
    pub scores: BTreeMap<Variant, Scores>,
}

/// Precision, recall and F1 only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub per_decision: Vec<DecisionScores>,
    /// Mean over decisions.
    pub macro_avg: BTreeMap<Variant, Prf>,
    /// From counts pooled over decisions.
    pub micro_avg: BTreeMap<Variant, Prf>,
}

/// Macro and micro averages over per-decision scores.
pub fn aggregate(per_decision: Vec<DecisionScores>) -> Result<RougeReport> {
    if per_decision.is_empty() {
        return Err(Error::EmptyInput("aggregate"));
    }
    let n = per_decision.len() as f64;
    let mut macro_avg: BTreeMap<Variant, Prf> = BTreeMap::new();
    let mut pooled: BTreeMap<Variant, (usize, usize, usize)> = BTreeMap::new();
    for d in &per_decision {
        for (v, s) in &d.scores {
            let m = macro_avg.entry(*v).or_default();
            m.precision += s.precision / n;
            m.recall += s.recall / n;
            m.f1 += s.f1 / n;
            let p = pooled.entry(*v).or_default();
            p.0 += s.matches;
            p.1 += s.system_units;
            p.2 += s.reference_units;
        }
    }
    let micro_avg = pooled
        .into_iter()
        .map(|(v, (m, s, r))| {
            let sc = Scores::from_counts(m, s, r);
            (
                v,
                Prf {
                    precision: sc.precision,
                    recall: sc.recall,
                    f1: sc.f1,
                },
            )
        })
        .collect();
    Ok(RougeReport {
        per_decision,
        macro_avg,
        micro_avg,
    })
}

impl RougeReport {
    /// One row per decision and variant: `decision_id,variant,precision,recall,f1`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["decision_id", "variant", "precision", "recall", "f1"])?;
        for d in &self.per_decision {
            for (v, s) in &d.scores {
                w.write_record([
                    d.decision_id.clone(),
                    v.to_string(),
                    format!("{:.6}", s.precision),
                    format!("{:.6}", s.recall),
                    format!("{:.6}", s.f1),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Markdown comparison table: R-1 precision, recall, F1, then R-2 and R-SU4 F1, in percent.
pub fn markdown_table(rows: &[(String, &RougeReport)]) -> String {
    let mut out = String::new();
    out.push_str("| | R-1 PREC | R-1 REC | R-1 F1 | R-2 F1 | R-SU4 F1 |\n");
    out.push_str("|---|---:|---:|---:|---:|---:|\n");
    for (label, report) in rows {
        let get = |v: Variant| report.macro_avg.get(&v).copied();
        let cell =
            |x: Option<f64>| x.map_or_else(|| "n/a".to_owned(), |x| format!("{:.2}", 100.0 * x));
        let r1 = get(Variant::R1);
        out.push_str(&format!(
            "| {label} | {} | {} | {} | {} | {} |\n",
            cell(r1.map(|p| p.precision)),
            cell(r1.map(|p| p.recall)),
            cell(r1.map(|p| p.f1)),
            cell(get(Variant::R2).map(|p| p.f1)),
            cell(get(Variant::SU4).map(|p| p.f1)),
        ));
    }
    out
}

/// Writes `text` to `path`.
pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_owned).collect()
    }

    #[test]
    fn unigram_and_bigram_hand_counts() {
        let s = rouge_n(&toks("latex button"), &toks("latex case"), 1);
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
        let s = rouge_n(&toks("a b c"), &toks("b c d"), 2);
        assert_eq!((s.precision, s.recall), (0.5, 0.5));
        let s = rouge_n(&toks("x y"), &toks("x y"), 2);
        assert_eq!(s.f1, 1.0);
    }

    #[test]
    fn su4_hand_count() {
        let s = rouge_su4(&toks("a x b"), &toks("a b"));
        assert_eq!((s.matches, s.system_units, s.reference_units), (3, 6, 3));
        assert!((s.f1 - 0.6667).abs() < 1e-4);
    }

    #[test]
    fn su4_gap_limit() {
        // Pair (a, b) with exactly 4 tokens between them counts; 5 does not.
        assert_eq!(su_units(&toks("a 1 2 3 4 b"), 4).len(), 6 + 15);
        let far = toks("a 1 2 3 4 5 b");
        let units = su_units(&far, 4);
        assert!(!units.contains(&SuUnit::Pair("a", "b")));
    }

    #[test]
    fn empty_sides_score_zero() {
        let s = rouge_n(&[], &toks("a"), 1);
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn preprocessing_examples() {
        let sw = StopwordList::bundled();
        let cfg = RougeConfig::default();
        assert_eq!(
            preprocess_for_rouge(&toks("the remote will have pushbuttons"), &cfg, &sw),
            ["remot", "pushbutton"]
        );
        assert!(preprocess_for_rouge(&[], &cfg, &sw).is_empty());
        let no_stem = RougeConfig {
            stem: false,
            ..RougeConfig::default()
        };
        assert_eq!(
            preprocess_for_rouge(&toks("the remote will have pushbuttons"), &no_stem, &sw),
            ["remote", "pushbuttons"]
        );
    }

    #[test]
    fn aggregate_macro_and_micro() {
        let d = |id: &str, s: Scores| DecisionScores {
            decision_id: id.into(),
            scores: [(Variant::R1, s)].into_iter().collect(),
        };
        let one = aggregate(vec![d("a", Scores::from_counts(1, 2, 4))]).unwrap();
        assert_eq!(
            one.macro_avg[&Variant::R1].f1,
            one.per_decision[0].scores[&Variant::R1].f1
        );

        // 1/1 match on a tiny decision, 1/9 on a large one.
        let rep = aggregate(vec![
            d("a", Scores::from_counts(1, 1, 1)),
            d("b", Scores::from_counts(1, 9, 9)),
        ])
        .unwrap();
        let macro_p = rep.macro_avg[&Variant::R1].precision;
        let micro_p = rep.micro_avg[&Variant::R1].precision;
        assert!((macro_p - (1.0 + 1.0 / 9.0) / 2.0).abs() < 1e-12);
        assert!((micro_p - 2.0 / 10.0).abs() < 1e-12);
        assert!(aggregate(vec![]).is_err());
    }

    #[test]
    fn markdown_has_one_row_per_report() {
        let rep = aggregate(vec![DecisionScores {
            decision_id: "a".into(),
            scores: [(Variant::R1, Scores::from_counts(1, 1, 2))]
                .into_iter()
                .collect(),
        }])
        .unwrap();
        let md = markdown_table(&[("Longest DA".into(), &rep)]);
        assert!(md.contains("| Longest DA | 100.00 | 50.00 | 66.67 | n/a | n/a |"));
    }
}
