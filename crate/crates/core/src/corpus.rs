//! Meeting transcripts: ingestion, normalization and vocabulary.
//!
//! A corpus directory holds one JSON-lines file per meeting (one dialogue act
//! per line) plus a `decisions.jsonl` sidecar with the gold abstracts. Meeting
//! files are read in lexicographic file-name order.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summarize::DecisionCluster;

/// File name of the decisions sidecar inside a corpus directory.
pub const DECISIONS_FILE: &str = "decisions.jsonl";

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Position of a dialogue act inside a [`Corpus`]: meeting ordinal, then DA ordinal.
///
/// The derived ordering is temporal order within a meeting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DaRef {
    pub meeting: usize,
    pub da: usize,
}

impl DaRef {
    pub fn new(meeting: usize, da: usize) -> Self {
        Self { meeting, da }
    }
}

impl fmt::Display for DaRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.meeting, self.da)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessConfig {
    /// Drop bracketed transcript annotations such as `[vocalsound]`.
    pub strip_markers: bool,
    /// Treat apostrophes as separators (`there's` -> `there`, `s`).
    pub split_contractions: bool,
    /// Tokens occurring fewer times than this across all DAs are dropped.
    pub min_count: usize,
    /// Plain-text stopword list; the bundled list is used when absent.
    pub stopwords: Option<PathBuf>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        Self {
            strip_markers: true,
            split_contractions: true,
            min_count: 1,
            stopwords: None,
        }
    }
}

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\[[^\]]*\]").expect("valid regex"))
}

/// Lowercases, strips bracketed annotations, and splits on whitespace and punctuation.
pub fn tokenize_normalize(text: &str, config: &PreprocessConfig) -> Vec<String> {
    let stripped = if config.strip_markers {
        marker_regex().replace_all(text, " ")
    } else {
        text.into()
    };
    let lower = stripped.to_lowercase();
    let keep = |c: char| c.is_alphanumeric() || (!config.split_contractions && c == '\'');
    lower
        .split(|c: char| !keep(c))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// A set of stopword strings, already normalized.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    /// The list bundled with the crate.
    pub fn bundled() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    /// Parses one token per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Self { words }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            words: words.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Bijection between token strings and [`TokenId`]s, in first-occurrence order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    fn intern(&mut self, word: &str) -> TokenId {
        if let Some(id) = self.index.get(word) {
            return *id;
        }
        let id = TokenId(self.words.len() as u32);
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        id
    }

    pub fn id(&self, word: &str) -> Option<TokenId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: TokenId) -> &str {
        &self.words[id.index()]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DialogueAct {
    pub meeting_id: String,
    pub da_index: usize,
    pub speaker: String,
    pub raw_text: String,
    pub tokens: Vec<TokenId>,
    pub is_drda: bool,
    pub decision_ids: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub decision_id: String,
    pub meeting_id: String,
    pub abstract_text: String,
    pub abstract_tokens: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Meeting {
    pub id: String,
    pub das: Vec<DialogueAct>,
    pub decisions: Vec<Decision>,
}

/// One line of a meeting file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaRecord {
    pub meeting_id: String,
    pub da_index: usize,
    pub speaker: String,
    pub text: String,
    pub is_drda: bool,
    #[serde(default)]
    pub decision_ids: Vec<String>,
}

/// One line of the decisions sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub decision_id: String,
    pub meeting_id: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
}

/// Immutable, fully normalized meeting collection.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub meetings: Vec<Meeting>,
    pub vocabulary: Vocabulary,
    /// Vocabulary entries that are stopwords.
    pub stopwords: BTreeSet<TokenId>,
    pub config: PreprocessConfig,
    stopword_list: StopwordList,
}

impl Corpus {
    /// Builds a corpus from parsed records. `meetings` holds each meeting's
    /// DA records in file order.
    pub fn from_records(
        meetings: Vec<Vec<DaRecord>>,
        decisions: Vec<DecisionRecord>,
        config: PreprocessConfig,
        stopword_list: StopwordList,
    ) -> Result<Self> {
        let tokenized: Vec<Vec<Vec<String>>> = meetings
            .iter()
            .map(|m| {
                m.iter()
                    .map(|r| tokenize_normalize(&r.text, &config))
                    .collect()
            })
            .collect();

        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tok in tokenized.iter().flatten().flatten() {
            *counts.entry(tok.as_str()).or_default() += 1;
        }
        let mut vocabulary = Vocabulary::default();
        for tok in tokenized.iter().flatten().flatten() {
            if counts[tok.as_str()] >= config.min_count {
                vocabulary.intern(tok);
            }
        }

        let mut decisions_by_meeting: HashMap<&str, Vec<&DecisionRecord>> = HashMap::new();
        let mut seen_decisions = HashSet::new();
        for d in &decisions {
            if !seen_decisions.insert(d.decision_id.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate decision id {}",
                    d.decision_id
                )));
            }
            decisions_by_meeting
                .entry(d.meeting_id.as_str())
                .or_default()
                .push(d);
        }

        let mut seen_meetings = HashSet::new();
        let mut out = Vec::with_capacity(meetings.len());
        for (records, toks) in meetings.iter().zip(tokenized) {
            let Some(first) = records.first() else {
                continue;
            };
            let meeting_id = first.meeting_id.clone();
            if !seen_meetings.insert(meeting_id.clone()) {
                return Err(Error::InvalidConfig(format!(
                    "meeting {meeting_id} appears more than once"
                )));
            }
            let mut meeting_decisions = Vec::new();
            for d in decisions_by_meeting
                .get(meeting_id.as_str())
                .into_iter()
                .flatten()
            {
                let abstract_tokens = tokenize_normalize(&d.abstract_text, &config);
                if abstract_tokens.is_empty() {
                    return Err(Error::EmptyAbstract(d.decision_id.clone()));
                }
                meeting_decisions.push(Decision {
                    decision_id: d.decision_id.clone(),
                    meeting_id: d.meeting_id.clone(),
                    abstract_text: d.abstract_text.clone(),
                    abstract_tokens,
                });
            }
            let known: HashSet<&str> = meeting_decisions
                .iter()
                .map(|d| d.decision_id.as_str())
                .collect();
            let mut das = Vec::with_capacity(records.len());
            for (r, toks) in records.iter().zip(toks) {
                for id in &r.decision_ids {
                    if !known.contains(id.as_str()) {
                        return Err(Error::UnresolvedDecision(id.clone()));
                    }
                }
                das.push(DialogueAct {
                    meeting_id: r.meeting_id.clone(),
                    da_index: r.da_index,
                    speaker: r.speaker.clone(),
                    raw_text: r.text.clone(),
                    tokens: toks.iter().filter_map(|t| vocabulary.id(t)).collect(),
                    is_drda: r.is_drda,
                    decision_ids: r.decision_ids.iter().cloned().collect(),
                });
            }
            out.push(Meeting {
                id: meeting_id,
                das,
                decisions: meeting_decisions,
            });
        }
        for d in &decisions {
            if !seen_meetings.contains(&d.meeting_id) {
                log::warn!(
                    "decision {} refers to meeting {} which is not in the corpus",
                    d.decision_id,
                    d.meeting_id
                );
            }
        }

        let stopwords = vocabulary
            .words()
            .iter()
            .enumerate()
            .filter(|(_, w)| stopword_list.contains(w))
            .map(|(i, _)| TokenId(i as u32))
            .collect();

        Ok(Self {
            meetings: out,
            vocabulary,
            stopwords,
            config,
            stopword_list,
        })
    }

    pub fn da(&self, r: DaRef) -> &DialogueAct {
        &self.meetings[r.meeting].das[r.da]
    }

    pub fn get_da(&self, r: DaRef) -> Option<&DialogueAct> {
        self.meetings.get(r.meeting).and_then(|m| m.das.get(r.da))
    }

    pub fn word(&self, id: TokenId) -> &str {
        self.vocabulary.word(id)
    }

    pub fn is_stopword(&self, id: TokenId) -> bool {
        self.stopwords.contains(&id)
    }

    pub fn stopword_list(&self) -> &StopwordList {
        &self.stopword_list
    }

    /// Tokens of a DA with stopwords removed, in order and with multiplicity.
    pub fn content_tokens(&self, r: DaRef) -> impl Iterator<Item = TokenId> + '_ {
        self.da(r)
            .tokens
            .iter()
            .copied()
            .filter(move |t| !self.is_stopword(*t))
    }

    pub fn token_strings(&self, r: DaRef) -> Vec<String> {
        self.da(r)
            .tokens
            .iter()
            .map(|t| self.word(*t).to_owned())
            .collect()
    }

    pub fn decision(&self, decision_id: &str) -> Option<&Decision> {
        self.meetings
            .iter()
            .flat_map(|m| m.decisions.iter())
            .find(|d| d.decision_id == decision_id)
    }

    pub fn da_refs(&self) -> impl Iterator<Item = DaRef> + '_ {
        self.meetings
            .iter()
            .enumerate()
            .flat_map(|(m, meeting)| (0..meeting.das.len()).map(move |d| DaRef::new(m, d)))
    }

    pub fn num_das(&self) -> usize {
        self.meetings.iter().map(|m| m.das.len()).sum()
    }

    pub fn num_tokens(&self) -> usize {
        self.meetings
            .iter()
            .flat_map(|m| m.das.iter())
            .map(|d| d.tokens.len())
            .sum()
    }

    /// Writes the corpus back out in the directory format read by [`load_corpus`].
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut decisions = Vec::new();
        for (i, m) in self.meetings.iter().enumerate() {
            let path = dir.join(format!("{i:04}_{}.jsonl", sanitize(&m.id)));
            let mut buf = Vec::new();
            for da in &m.das {
                let rec = DaRecord {
                    meeting_id: da.meeting_id.clone(),
                    da_index: da.da_index,
                    speaker: da.speaker.clone(),
                    text: da.raw_text.clone(),
                    is_drda: da.is_drda,
                    decision_ids: da.decision_ids.iter().cloned().collect(),
                };
                serde_json::to_writer(&mut buf, &rec)?;
                buf.push(b'\n');
            }
            fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
            decisions.extend(m.decisions.iter().map(|d| DecisionRecord {
                decision_id: d.decision_id.clone(),
                meeting_id: d.meeting_id.clone(),
                abstract_text: d.abstract_text.clone(),
            }));
        }
        let path = dir.join(DECISIONS_FILE);
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        for d in &decisions {
            serde_json::to_writer(&mut f, d)?;
            f.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub(crate) fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| Error::Malformed {
            file: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

fn check_meeting_file(path: &Path, records: &[DaRecord]) -> Result<()> {
    let malformed = |line: usize, message: String| Error::Malformed {
        file: path.to_owned(),
        line,
        message,
    };
    let Some(first) = records.first() else {
        return Ok(());
    };
    for (i, r) in records.iter().enumerate() {
        if r.meeting_id != first.meeting_id {
            return Err(malformed(
                i + 1,
                format!(
                    "meeting_id {} differs from {} earlier in the file",
                    r.meeting_id, first.meeting_id
                ),
            ));
        }
        if r.da_index != i {
            return Err(malformed(
                i + 1,
                format!("da_index {} out of sequence, expected {i}", r.da_index),
            ));
        }
        if !r.decision_ids.is_empty() && !r.is_drda {
            return Err(malformed(
                i + 1,
                "decision_ids given for a DA with is_drda=false".into(),
            ));
        }
    }
    Ok(())
}

/// Loads every meeting file under `dir` plus the decisions sidecar.
pub fn load_corpus(dir: &Path, config: &PreprocessConfig) -> Result<Corpus> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_jsonl = path.extension().is_some_and(|e| e == "jsonl");
        let is_sidecar = path.file_name().is_some_and(|n| n == DECISIONS_FILE);
        if path.is_file() && is_jsonl && !is_sidecar {
            files.push(path);
        }
    }
    files.sort();

    let mut meetings = Vec::with_capacity(files.len());
    for path in &files {
        let records: Vec<DaRecord> = read_jsonl(path)?;
        check_meeting_file(path, &records)?;
        meetings.push(records);
    }
    let sidecar = dir.join(DECISIONS_FILE);
    let decisions = if sidecar.is_file() {
        read_jsonl(&sidecar)?
    } else {
        Vec::new()
    };
    let stopwords = match &config.stopwords {
        Some(p) => StopwordList::from_file(p)?,
        None => StopwordList::bundled(),
    };
    Corpus::from_records(meetings, decisions, config.clone(), stopwords)
}

/// Gold partition of DRDAs: one cluster per annotated decision, in decision order.
pub fn true_clusters(corpus: &Corpus) -> IndexMap<String, DecisionCluster> {
    let mut out = IndexMap::new();
    for (m, meeting) in corpus.meetings.iter().enumerate() {
        for decision in &meeting.decisions {
            let centers: Vec<DaRef> = meeting
                .das
                .iter()
                .enumerate()
                .filter(|(_, da)| da.is_drda && da.decision_ids.contains(&decision.decision_id))
                .map(|(d, _)| DaRef::new(m, d))
                .collect();
            if centers.is_empty() {
                log::warn!(
                    "decision {} has no supporting dialogue acts",
                    decision.decision_id
                );
            }
            out.insert(
                decision.decision_id.clone(),
                DecisionCluster::new(&decision.decision_id, m, centers),
            );
        }
    }
    out
}
