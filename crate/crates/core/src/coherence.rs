//! Crowd coherence ratings of source chats and top-K selection.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::CorpusError;
use crate::jsonl;

pub const DEFAULT_MIN_VOTES: usize = 7;
pub const DEFAULT_RATERS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncoherenceReason {
    QuestionIgnored,
    UnnaturalTopicChange,
    NotAddressing,
    OutOfOrder,
    HardToFollow,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoherenceRating {
    pub chat_id: String,
    pub worker_id: String,
    pub coherent: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<IncoherenceReason>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatScore {
    pub chat_id: String,
    pub coherent_votes: usize,
    pub total_votes: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CoherenceError {
    #[error("worker `{worker_id}` rated chat `{chat_id}` more than once")]
    DuplicateRating { chat_id: String, worker_id: String },
    #[error("rating of chat `{chat_id}` by `{worker_id}`: reasons must be given iff the chat is incoherent")]
    Reasons { chat_id: String, worker_id: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

impl CoherenceRating {
    fn check(&self) -> Result<(), CoherenceError> {
        if self.coherent == self.reasons.is_empty() {
            Ok(())
        } else {
            Err(CoherenceError::Reasons {
                chat_id: self.chat_id.clone(),
                worker_id: self.worker_id.clone(),
            })
        }
    }
}

pub fn read_ratings(path: &Path) -> Result<Vec<CoherenceRating>, CoherenceError> {
    let ratings: Vec<CoherenceRating> = jsonl::read_jsonl(path).map_err(CorpusError::from)?;
    for r in &ratings {
        r.check()?;
    }
    Ok(ratings)
}

pub fn write_ratings(path: &Path, ratings: &[CoherenceRating]) -> Result<(), CoherenceError> {
    jsonl::write_jsonl(path, ratings).map_err(CorpusError::from)?;
    Ok(())
}

/// One score per distinct chat, ordered by chat_id.
pub fn score_chats(ratings: &[CoherenceRating]) -> Result<Vec<ChatScore>, CoherenceError> {
    let mut seen = HashSet::new();
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in ratings {
        r.check()?;
        if !seen.insert((r.chat_id.as_str(), r.worker_id.as_str())) {
            return Err(CoherenceError::DuplicateRating {
                chat_id: r.chat_id.clone(),
                worker_id: r.worker_id.clone(),
            });
        }
        let t = tally.entry(&r.chat_id).or_default();
        t.1 += 1;
        if r.coherent {
            t.0 += 1;
        }
    }
    Ok(tally
        .into_iter()
        .map(|(id, (coherent_votes, total_votes))| ChatScore {
            chat_id: id.to_string(),
            coherent_votes,
            total_votes,
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub chat_ids: Vec<String>,
    /// How many fewer than `k` chats qualified.
    pub shortfall: usize,
}

/// Up to `k` chats with at least `min_votes` coherent votes, by descending
/// vote count; ties go to the smaller chat_id.
pub fn select_top(scores: &[ChatScore], k: usize, min_votes: usize) -> Selection {
    let mut qualified: Vec<&ChatScore> = scores
        .iter()
        .filter(|s| s.coherent_votes >= min_votes)
        .collect();
    qualified.sort_by(|a, b| {
        b.coherent_votes
            .cmp(&a.coherent_votes)
            .then_with(|| a.chat_id.cmp(&b.chat_id))
    });
    let chat_ids: Vec<String> = qualified.iter().take(k).map(|s| s.chat_id.clone()).collect();
    Selection {
        shortfall: k - chat_ids.len(),
        chat_ids,
    }
}

/// Chats whose rater count differs from `expected`.
pub fn irregular_rater_counts(scores: &[ChatScore], expected: usize) -> Vec<&str> {
    scores
        .iter()
        .filter(|s| s.total_votes != expected)
        .map(|s| s.chat_id.as_str())
        .collect()
}
