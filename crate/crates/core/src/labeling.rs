//! Crowd verdict aggregation, the all-erroneous deletion rule, and dataset
//! statistics.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    CandidateKey, Chat, CorpusError, Direction, Label, Origin, TranslationCandidate, UtteranceRef,
};
use crate::jsonl;
use crate::percent::Percent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RatingVerdict {
    Good,
    Bad,
}

/// Reasons a rater may give for a bad translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TranslationFlaw {
    Incorrect,
    ContentLost,
    GrammarSpelling,
    StyleShift,
    Incomprehensible,
    GenerallyTerrible,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationRating {
    pub chat_id: String,
    pub index: usize,
    pub origin: Origin,
    pub worker_id: String,
    pub verdict: RatingVerdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<TranslationFlaw>,
}

impl TranslationRating {
    pub fn key(&self) -> CandidateKey {
        CandidateKey {
            chat_id: self.chat_id.clone(),
            index: self.index,
            origin: self.origin,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LabelingError {
    #[error("duplicate rating by worker `{worker_id}` for {chat_id}/{index}/{origin}")]
    DuplicateRating {
        chat_id: String,
        index: usize,
        origin: Origin,
        worker_id: String,
    },
    #[error("rating by `{worker_id}` for {chat_id}/{index}/{origin} gives reasons for a good verdict")]
    ReasonsOnGood {
        chat_id: String,
        index: usize,
        origin: Origin,
        worker_id: String,
    },
    #[error("candidate {chat_id}/{index}/{origin} has no ratings")]
    Unrated {
        chat_id: String,
        index: usize,
        origin: Origin,
    },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

pub fn read_ratings(path: &Path) -> Result<Vec<TranslationRating>, LabelingError> {
    let ratings: Vec<TranslationRating> =
        jsonl::read_jsonl(path).map_err(CorpusError::from)?;
    for r in &ratings {
        if r.verdict == RatingVerdict::Good && !r.reasons.is_empty() {
            return Err(LabelingError::ReasonsOnGood {
                chat_id: r.chat_id.clone(),
                index: r.index,
                origin: r.origin,
                worker_id: r.worker_id.clone(),
            });
        }
    }
    Ok(ratings)
}

pub fn write_ratings(path: &Path, ratings: &[TranslationRating]) -> Result<(), LabelingError> {
    jsonl::write_jsonl(path, ratings).map_err(CorpusError::from)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AggregationRule {
    /// Erroneous when bad votes are at least half (ties count as erroneous).
    #[default]
    Majority,
    /// Erroneous only on a strict majority of bad votes.
    MajorityTiesCorrect,
    /// Erroneous when any rater said bad.
    AnyBad,
}

impl AggregationRule {
    pub fn decide(self, bad: usize, good: usize) -> Label {
        let erroneous = match self {
            AggregationRule::Majority => bad >= good,
            AggregationRule::MajorityTiesCorrect => bad > good,
            AggregationRule::AnyBad => bad > 0,
        };
        if erroneous {
            Label::Erroneous
        } else {
            Label::Correct
        }
    }
}

impl FromStr for AggregationRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "majority" => Ok(AggregationRule::Majority),
            "majority-ties-correct" => Ok(AggregationRule::MajorityTiesCorrect),
            "any-bad" => Ok(AggregationRule::AnyBad),
            other => Err(format!(
                "unknown rule `{other}` (expected majority, majority-ties-correct, any-bad)"
            )),
        }
    }
}

pub fn aggregate_verdicts(
    ratings: &[TranslationRating],
    rule: AggregationRule,
) -> Result<BTreeMap<CandidateKey, Label>, LabelingError> {
    let mut seen = HashSet::new();
    let mut tallies: BTreeMap<CandidateKey, (usize, usize)> = BTreeMap::new();
    for r in ratings {
        if !seen.insert((r.key(), r.worker_id.as_str())) {
            return Err(LabelingError::DuplicateRating {
                chat_id: r.chat_id.clone(),
                index: r.index,
                origin: r.origin,
                worker_id: r.worker_id.clone(),
            });
        }
        let t = tallies.entry(r.key()).or_default();
        match r.verdict {
            RatingVerdict::Bad => t.0 += 1,
            RatingVerdict::Good => t.1 += 1,
        }
    }
    Ok(tallies
        .into_iter()
        .map(|(k, (bad, good))| (k, rule.decide(bad, good)))
        .collect())
}

/// Attaches aggregated verdicts to candidates. Every candidate must be rated.
pub fn apply_verdicts(
    candidates: &[TranslationCandidate],
    verdicts: &BTreeMap<CandidateKey, Label>,
) -> Result<Vec<TranslationCandidate>, LabelingError> {
    candidates
        .iter()
        .map(|c| {
            let v = verdicts.get(&c.key()).ok_or_else(|| LabelingError::Unrated {
                chat_id: c.chat_id.clone(),
                index: c.index,
                origin: c.origin,
            })?;
            Ok(TranslationCandidate {
                verdict: Some(*v),
                ..c.clone()
            })
        })
        .collect()
}

/// True when there is at least one candidate and every one is erroneous.
pub fn all_erroneous<'a>(cands: impl IntoIterator<Item = &'a TranslationCandidate>) -> bool {
    let mut any = false;
    for c in cands {
        any = true;
        if c.verdict != Some(Label::Erroneous) {
            return false;
        }
    }
    any
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeletionOutcome {
    pub retained: Vec<TranslationCandidate>,
    pub deleted: Vec<UtteranceRef>,
}

/// Removes every response utterance (index >= 1) whose candidates are all
/// erroneous. Candidates without a verdict never count as erroneous.
pub fn apply_deletion_rule(candidates: &[TranslationCandidate]) -> DeletionOutcome {
    let grouped = crate::corpus::candidates_by_utterance(candidates);
    let deleted: Vec<UtteranceRef> = grouped
        .iter()
        .filter(|(at, list)| at.index > 0 && all_erroneous(list.iter().copied()))
        .map(|(at, _)| at.clone())
        .collect();
    let gone: HashSet<&UtteranceRef> = deleted.iter().collect();
    let retained = candidates
        .iter()
        .filter(|c| !gone.contains(&c.utterance()))
        .cloned()
        .collect();
    DeletionOutcome { retained, deleted }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionStats {
    /// Retained response utterances (index >= 1).
    pub utterance_count: usize,
    pub example_count: usize,
    pub erroneous_count: usize,
    pub correct_count: usize,
    /// All-erroneous utterances removed by the deletion rule.
    pub deleted_count: usize,
    /// `Some(n)` when every retained response has exactly `n` candidates.
    pub candidates_per_utterance: Option<usize>,
    pub examples_per_origin: BTreeMap<Origin, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OriginStats {
    pub total: usize,
    pub bad: usize,
    pub bad_rate: Percent,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub directions: BTreeMap<Direction, DirectionStats>,
    /// Over every labeled candidate, before deletion.
    pub origins: BTreeMap<Origin, OriginStats>,
    pub deleted_total: usize,
}

pub fn compute_stats(candidates: &[TranslationCandidate], chats: &[Chat]) -> DatasetStats {
    let mut stats = DatasetStats::default();

    for c in candidates {
        let Some(v) = c.verdict else { continue };
        let o = stats.origins.entry(c.origin).or_default();
        o.total += 1;
        if v == Label::Erroneous {
            o.bad += 1;
        }
    }
    for o in stats.origins.values_mut() {
        o.bad_rate = Percent::from_ratio(o.bad as u64, o.total as u64);
    }

    let mut by_utt: HashMap<(&str, usize), Vec<&TranslationCandidate>> = HashMap::new();
    for c in candidates.iter().filter(|c| c.verdict.is_some()) {
        by_utt.entry((c.chat_id.as_str(), c.index)).or_default().push(c);
    }

    let mut per_utt_counts: BTreeMap<Direction, HashSet<usize>> = BTreeMap::new();
    for chat in chats {
        let Some(dir) = chat.direction() else { continue };
        let d = stats.directions.entry(dir).or_default();
        for u in &chat.utterances {
            let cands = by_utt
                .get(&(chat.chat_id.as_str(), u.index))
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            if u.index == 0 || cands.is_empty() {
                continue;
            }
            if all_erroneous(cands.iter().copied()) {
                d.deleted_count += 1;
                continue;
            }
            d.utterance_count += 1;
            per_utt_counts.entry(dir).or_default().insert(cands.len());
            for c in cands {
                d.example_count += 1;
                *d.examples_per_origin.entry(c.origin).or_default() += 1;
                match c.verdict {
                    Some(Label::Erroneous) => d.erroneous_count += 1,
                    _ => d.correct_count += 1,
                }
            }
        }
    }
    for (dir, d) in stats.directions.iter_mut() {
        d.candidates_per_utterance = match per_utt_counts.get(dir) {
            Some(set) if set.len() == 1 => set.iter().next().copied(),
            _ => None,
        };
    }
    stats.deleted_total = stats.directions.values().map(|d| d.deleted_count).sum();
    stats
}

impl DatasetStats {
    pub fn render_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<8} {:>10} {:>9} {:>10} {:>8} {:>8}",
            "dir", "utterances", "examples", "erroneous", "correct", "deleted"
        );
        for (dir, d) in &self.directions {
            let _ = writeln!(
                s,
                "{:<8} {:>10} {:>9} {:>10} {:>8} {:>8}",
                dir.as_str(),
                d.utterance_count,
                d.example_count,
                d.erroneous_count,
                d.correct_count,
                d.deleted_count
            );
        }
        let _ = writeln!(s, "deleted total: {}", self.deleted_total);
        let _ = writeln!(s);
        let _ = writeln!(s, "{:<8} {:>8} {:>8} {:>9}", "origin", "total", "bad", "bad rate");
        for (o, st) in &self.origins {
            let _ = writeln!(
                s,
                "{:<8} {:>8} {:>8} {:>8}%",
                o.as_str(),
                st.total,
                st.bad,
                st.bad_rate
            );
        }
        s
    }
}
