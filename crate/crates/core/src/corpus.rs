//! Shared data model: chats, translation candidates, detector quads, and
//! their newline-delimited JSON file formats.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::jsonl::{self, JsonlError};
use crate::labeling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    En,
    Ja,
}

impl Lang {
    pub fn code(self) -> &'static str {
        match self {
            Lang::En => "en",
            Lang::Ja => "ja",
        }
    }

    pub fn other(self) -> Lang {
        match self {
            Lang::En => Lang::Ja,
            Lang::Ja => Lang::En,
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Lang {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "en" => Ok(Lang::En),
            "ja" => Ok(Lang::Ja),
            other => Err(format!("unsupported language `{other}` (expected en or ja)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speaker {
    P1,
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceCorpus {
    Persona,
    Jpersona,
}

/// Producer of a translation candidate.
///
/// The derived ordering (human, mt_low, mt_high) is the canonical emission
/// order for candidates of one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Human,
    MtLow,
    MtHigh,
}

impl Origin {
    pub const ALL: [Origin; 3] = [Origin::Human, Origin::MtLow, Origin::MtHigh];

    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Human => "human",
            Origin::MtLow => "mt_low",
            Origin::MtHigh => "mt_high",
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Origin {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "human" => Ok(Origin::Human),
            "mt_low" => Ok(Origin::MtLow),
            "mt_high" => Ok(Origin::MtHigh),
            other => Err(format!("unknown origin `{other}`")),
        }
    }
}

/// Verdict on a translation; also the detector's label space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Correct,
    Erroneous,
}

impl Label {
    pub fn is_erroneous(self) -> bool {
        self == Label::Erroneous
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Correct => "correct",
            Label::Erroneous => "erroneous",
        })
    }
}

/// Translation direction; the second language is the language of the
/// translation under evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "ja-en")]
    JaEn,
    #[serde(rename = "en-ja")]
    EnJa,
}

impl Direction {
    pub fn new(src: Lang, tgt: Lang) -> Option<Direction> {
        match (src, tgt) {
            (Lang::Ja, Lang::En) => Some(Direction::JaEn),
            (Lang::En, Lang::Ja) => Some(Direction::EnJa),
            _ => None,
        }
    }

    pub fn source(self) -> Lang {
        match self {
            Direction::JaEn => Lang::Ja,
            Direction::EnJa => Lang::En,
        }
    }

    pub fn target(self) -> Lang {
        self.source().other()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::JaEn => "ja-en",
            Direction::EnJa => "en-ja",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ja-en" => Ok(Direction::JaEn),
            "en-ja" => Ok(Direction::EnJa),
            other => Err(format!("unknown direction `{other}` (expected ja-en or en-ja)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub index: usize,
    pub speaker: Speaker,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chat {
    pub chat_id: String,
    pub source_corpus: SourceCorpus,
    pub src_lang: Lang,
    pub tgt_lang: Lang,
    #[serde(default)]
    pub personas: Vec<Vec<String>>,
    pub utterances: Vec<Utterance>,
}

impl Chat {
    pub fn direction(&self) -> Option<Direction> {
        Direction::new(self.src_lang, self.tgt_lang)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let fail = |reason: String| CorpusError::Validation {
            chat_id: self.chat_id.clone(),
            reason,
        };
        if self.chat_id.trim().is_empty() {
            return Err(fail("empty chat_id".into()));
        }
        if self.src_lang == self.tgt_lang {
            return Err(fail(format!(
                "src_lang and tgt_lang are both `{}`",
                self.src_lang
            )));
        }
        if self.utterances.len() < 2 {
            return Err(fail(format!(
                "a chat needs at least 2 utterances, found {}",
                self.utterances.len()
            )));
        }
        for (pos, u) in self.utterances.iter().enumerate() {
            if u.index != pos {
                return Err(fail(format!(
                    "utterance indices must be contiguous from 0: position {pos} has index {}",
                    u.index
                )));
            }
            if u.text.trim().is_empty() {
                return Err(fail(format!("utterance {pos} has empty text")));
            }
            if pos > 0 && self.utterances[pos - 1].speaker == u.speaker {
                return Err(fail(format!(
                    "speakers must alternate: utterances {} and {pos} are both {:?}",
                    pos - 1,
                    u.speaker
                )));
            }
        }
        Ok(())
    }
}

/// Coordinates of one utterance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UtteranceRef {
    pub chat_id: String,
    pub index: usize,
}

impl UtteranceRef {
    pub fn new(chat_id: impl Into<String>, index: usize) -> Self {
        UtteranceRef {
            chat_id: chat_id.into(),
            index,
        }
    }
}

impl fmt::Display for UtteranceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.chat_id, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationCandidate {
    pub chat_id: String,
    pub index: usize,
    pub origin: Origin,
    pub lang: Lang,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Label>,
}

impl TranslationCandidate {
    pub fn utterance(&self) -> UtteranceRef {
        UtteranceRef::new(self.chat_id.clone(), self.index)
    }

    pub fn key(&self) -> CandidateKey {
        CandidateKey {
            chat_id: self.chat_id.clone(),
            index: self.index,
            origin: self.origin,
        }
    }
}

/// Unique key of a translation candidate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidateKey {
    pub chat_id: String,
    pub index: usize,
    pub origin: Origin,
}

/// The detector's four-field input.
///
/// `ctx_src`/`resp_src` are in the direction's source language and
/// `ctx_tgt`/`resp_tgt` in its target language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatQuad {
    pub chat_id: String,
    pub index: usize,
    pub direction: Direction,
    pub origin: Origin,
    pub ctx_src: String,
    pub ctx_tgt: String,
    pub resp_src: String,
    pub resp_tgt: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledExample {
    #[serde(flatten)]
    pub quad: ChatQuad,
    pub label: Label,
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error(transparent)]
    Jsonl(#[from] JsonlError),
    #[error("invalid chat `{chat_id}`: {reason}")]
    Validation { chat_id: String, reason: String },
    #[error("invalid record: {0}")]
    Record(String),
    #[error("utterance {at} has no translation candidates")]
    MissingCandidates { at: UtteranceRef },
    #[error("utterance {at} has no human translation to use as context")]
    MissingHumanContext { at: UtteranceRef },
    #[error("candidate {at} does not refer to an utterance of the corpus")]
    UnknownUtterance { at: UtteranceRef },
    #[error("candidate {at}/{origin} has no verdict")]
    Unlabeled { at: UtteranceRef, origin: Origin },
}

pub fn read_chats(path: &Path) -> Result<Vec<Chat>, CorpusError> {
    let chats: Vec<Chat> = jsonl::read_jsonl(path)?;
    let mut seen = HashSet::new();
    for chat in &chats {
        chat.validate()?;
        if !seen.insert(chat.chat_id.as_str()) {
            return Err(CorpusError::Validation {
                chat_id: chat.chat_id.clone(),
                reason: "duplicate chat_id".into(),
            });
        }
    }
    Ok(chats)
}

pub fn write_chats(path: &Path, chats: &[Chat]) -> Result<(), CorpusError> {
    Ok(jsonl::write_jsonl(path, chats)?)
}

pub fn read_candidates(path: &Path) -> Result<Vec<TranslationCandidate>, CorpusError> {
    let candidates: Vec<TranslationCandidate> = jsonl::read_jsonl(path)?;
    let mut seen = HashSet::new();
    for c in &candidates {
        if c.text.trim().is_empty() {
            return Err(CorpusError::Record(format!(
                "candidate {}/{} has empty text",
                c.utterance(),
                c.origin
            )));
        }
        if !seen.insert(c.key()) {
            return Err(CorpusError::Record(format!(
                "duplicate candidate {}/{}",
                c.utterance(),
                c.origin
            )));
        }
    }
    Ok(candidates)
}

pub fn write_candidates(path: &Path, candidates: &[TranslationCandidate]) -> Result<(), CorpusError> {
    Ok(jsonl::write_jsonl(path, candidates)?)
}

pub fn read_examples(path: &Path) -> Result<Vec<LabeledExample>, CorpusError> {
    let examples: Vec<LabeledExample> = jsonl::read_jsonl(path)?;
    for e in &examples {
        if e.quad.index == 0 {
            return Err(CorpusError::Record(format!(
                "example for chat `{}` has response index 0",
                e.quad.chat_id
            )));
        }
    }
    Ok(examples)
}

pub fn write_examples(path: &Path, examples: &[LabeledExample]) -> Result<(), CorpusError> {
    Ok(jsonl::write_jsonl(path, examples)?)
}

/// How the translation of the context utterance is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CtxPolicy {
    /// First correct-labeled candidate in the given origin order, falling
    /// back to the human translation when none is correct.
    FirstCorrect(Vec<Origin>),
    /// Always the human translation.
    Human,
}

impl Default for CtxPolicy {
    fn default() -> Self {
        CtxPolicy::FirstCorrect(vec![Origin::Human, Origin::MtHigh, Origin::MtLow])
    }
}

impl FromStr for CtxPolicy {
    type Err = String;

    /// Accepts `human`, `first-correct`, or `first-correct:o1,o2,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "human" => Ok(CtxPolicy::Human),
            None if s == "first-correct" => Ok(CtxPolicy::default()),
            Some(("first-correct", order)) => {
                let order = order
                    .split(',')
                    .map(|o| o.trim().parse::<Origin>())
                    .collect::<Result<Vec<_>, _>>()?;
                if order.is_empty() {
                    return Err("empty origin order".into());
                }
                Ok(CtxPolicy::FirstCorrect(order))
            }
            _ => Err(format!(
                "unknown context policy `{s}` (expected human, first-correct, or first-correct:<origins>)"
            )),
        }
    }
}

/// Builds labeled detector examples from chats and verdicted candidates.
///
/// Response utterances whose candidates are all erroneous are dropped. A
/// response whose context utterance was dropped keeps its examples and uses
/// the human translation of the context.
pub fn build_quads(
    chats: &[Chat],
    candidates: &[TranslationCandidate],
    policy: &CtxPolicy,
) -> Result<Vec<LabeledExample>, CorpusError> {
    let known: HashSet<(&str, usize)> = chats
        .iter()
        .flat_map(|c| c.utterances.iter().map(move |u| (c.chat_id.as_str(), u.index)))
        .collect();

    let mut by_utt: HashMap<(&str, usize), Vec<&TranslationCandidate>> = HashMap::new();
    for c in candidates {
        if !known.contains(&(c.chat_id.as_str(), c.index)) {
            return Err(CorpusError::UnknownUtterance { at: c.utterance() });
        }
        if c.verdict.is_none() {
            return Err(CorpusError::Unlabeled {
                at: c.utterance(),
                origin: c.origin,
            });
        }
        by_utt.entry((c.chat_id.as_str(), c.index)).or_default().push(c);
    }
    for list in by_utt.values_mut() {
        list.sort_by_key(|c| c.origin);
    }

    let mut out = Vec::new();
    for chat in chats {
        let direction = chat.direction().ok_or_else(|| CorpusError::Validation {
            chat_id: chat.chat_id.clone(),
            reason: "unsupported language pair".into(),
        })?;
        let mut cands = Vec::with_capacity(chat.utterances.len());
        for u in &chat.utterances {
            match by_utt.get(&(chat.chat_id.as_str(), u.index)) {
                Some(list) => cands.push(list.as_slice()),
                None => {
                    return Err(CorpusError::MissingCandidates {
                        at: UtteranceRef::new(chat.chat_id.clone(), u.index),
                    })
                }
            }
        }
        let deleted: Vec<bool> = cands
            .iter()
            .map(|list| labeling::all_erroneous(list.iter().copied()))
            .collect();

        for i in 1..chat.utterances.len() {
            if deleted[i] {
                continue;
            }
            let ctx = &chat.utterances[i - 1];
            let ctx_tgt = context_translation(cands[i - 1], deleted[i - 1], policy).ok_or_else(
                || CorpusError::MissingHumanContext {
                    at: UtteranceRef::new(chat.chat_id.clone(), ctx.index),
                },
            )?;
            let resp = &chat.utterances[i];
            for cand in cands[i] {
                out.push(LabeledExample {
                    quad: ChatQuad {
                        chat_id: chat.chat_id.clone(),
                        index: resp.index,
                        direction,
                        origin: cand.origin,
                        ctx_src: ctx.text.clone(),
                        ctx_tgt: ctx_tgt.to_string(),
                        resp_src: resp.text.clone(),
                        resp_tgt: cand.text.clone(),
                    },
                    label: cand.verdict.expect("verdicts checked above"),
                });
            }
        }
    }
    Ok(out)
}

fn context_translation<'a>(
    cands: &[&'a TranslationCandidate],
    ctx_deleted: bool,
    policy: &CtxPolicy,
) -> Option<&'a str> {
    let human = || {
        cands
            .iter()
            .find(|c| c.origin == Origin::Human)
            .map(|c| c.text.as_str())
    };
    if ctx_deleted {
        return human();
    }
    match policy {
        CtxPolicy::Human => human(),
        CtxPolicy::FirstCorrect(order) => order
            .iter()
            .find_map(|o| {
                cands
                    .iter()
                    .find(|c| c.origin == *o && c.verdict == Some(Label::Correct))
            })
            .map(|c| c.text.as_str())
            .or_else(human),
    }
}

/// Groups candidates by utterance, sorted by key.
pub fn candidates_by_utterance(
    candidates: &[TranslationCandidate],
) -> BTreeMap<UtteranceRef, Vec<&TranslationCandidate>> {
    let mut map: BTreeMap<UtteranceRef, Vec<&TranslationCandidate>> = BTreeMap::new();
    for c in candidates {
        map.entry(c.utterance()).or_default().push(c);
    }
    map
}
