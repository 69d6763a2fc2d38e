//! Seeded synthetic fixtures for tests and benchmarks.
//!
//! Nothing here is used by the pipeline itself.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coherence::{CoherenceRating, IncoherenceReason};
use crate::corpus::{
    Chat, ChatQuad, Direction, Label, LabeledExample, Lang, Origin, SourceCorpus, Speaker, TranslationCandidate,
    Utterance,
};
use crate::detector::PredictionRecord;
use crate::evaluation::ConfusionMatrix;
use crate::labeling::{RatingVerdict, TranslationFlaw, TranslationRating};

/// How verdicts are planted for one translation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DirectionPlan {
    pub direction: Direction,
    /// `(number of chats, utterances per chat)` groups.
    pub shapes: [(usize, usize); 2],
    /// Response utterances whose three candidates are all bad.
    pub deleted: usize,
    /// Chats whose first utterance has a bad low-quality translation.
    pub first_low_bad: usize,
    /// Bad candidates per origin among retained responses.
    pub low_bad: usize,
    pub high_bad: usize,
    pub human_bad: usize,
}

impl DirectionPlan {
    pub fn chats(&self) -> usize {
        self.shapes.iter().map(|s| s.0).sum()
    }

    pub fn utterances(&self) -> usize {
        self.shapes.iter().map(|s| s.0 * s.1).sum()
    }

    pub fn responses(&self) -> usize {
        self.utterances() - self.chats()
    }

    pub fn retained(&self) -> usize {
        self.responses() - self.deleted
    }
}

/// English-source chats (translated en→ja).
pub const EN_PLAN: DirectionPlan = DirectionPlan {
    direction: Direction::EnJa,
    shapes: [(140, 15), (60, 14)],
    deleted: 66,
    first_low_bad: 200,
    low_bad: 2400,
    high_bad: 800,
    human_bad: 206,
};

/// Japanese-source chats (translated ja→en).
pub const JA_PLAN: DirectionPlan = DirectionPlan {
    direction: Direction::JaEn,
    shapes: [(240, 11), (10, 10)],
    deleted: 93,
    first_low_bad: 224,
    low_bad: 2105,
    high_bad: 759,
    human_bad: 232,
};

/// A labeled corpus: chats, candidates with verdicts, and crowd ratings
/// whose majority reproduces every verdict.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub chats: Vec<Chat>,
    pub candidates: Vec<TranslationCandidate>,
    pub ratings: Vec<TranslationRating>,
}

fn utterance_text(lang: Lang, chat: usize, i: usize) -> String {
    match lang {
        Lang::En => format!("Line {i} of chat {chat}, do you like it?"),
        Lang::Ja => format!("チャット{chat}の{i}番目の発話です。"),
    }
}

fn candidate_text(lang: Lang, chat: usize, i: usize, origin: Origin) -> String {
    match (lang, origin) {
        (Lang::En, Origin::Human) => format!("This is line {i} of chat {chat}."),
        (Lang::En, Origin::MtHigh) => format!("It is the line {i} in chat {chat}."),
        (Lang::En, Origin::MtLow) => format!("chat line {chat} it {i}"),
        (Lang::Ja, Origin::Human) => format!("チャット{chat}の{i}行目です。"),
        (Lang::Ja, Origin::MtHigh) => format!("チャット{chat}における{i}行目。"),
        (Lang::Ja, Origin::MtLow) => format!("行{i}チャット{chat}"),
    }
}

fn plant_direction(plan: &DirectionPlan, rng: &mut ChaCha8Rng, out: &mut PlantedCorpus) {
    let src = plan.direction.source();
    let tgt = plan.direction.target();
    let prefix = src.code();
    let mut chats = Vec::with_capacity(plan.chats());
    for &(count, len) in &plan.shapes {
        for _ in 0..count {
            let n = chats.len();
            chats.push(Chat {
                chat_id: format!("{prefix}-{n:04}"),
                source_corpus: if src == Lang::En {
                    SourceCorpus::Persona
                } else {
                    SourceCorpus::Jpersona
                },
                src_lang: src,
                tgt_lang: tgt,
                personas: vec![vec!["I like tea.".into()], vec!["I run daily.".into()]],
                utterances: (0..len)
                    .map(|i| Utterance {
                        index: i,
                        speaker: if i % 2 == 0 { Speaker::P1 } else { Speaker::P2 },
                        text: utterance_text(src, n, i),
                    })
                    .collect(),
            });
        }
    }

    let mut bad: BTreeMap<(usize, usize), [bool; 3]> = BTreeMap::new();
    let slot = |o: Origin| match o {
        Origin::Human => 0,
        Origin::MtLow => 1,
        Origin::MtHigh => 2,
    };
    let mut firsts: Vec<usize> = (0..chats.len()).collect();
    firsts.shuffle(rng);
    for &c in &firsts[..plan.first_low_bad] {
        bad.entry((c, 0)).or_default()[slot(Origin::MtLow)] = true;
    }
    let mut responses: Vec<(usize, usize)> = chats
        .iter()
        .enumerate()
        .flat_map(|(c, chat)| (1..chat.utterances.len()).map(move |i| (c, i)))
        .collect();
    responses.shuffle(rng);
    let (deleted, retained) = responses.split_at(plan.deleted);
    for &u in deleted {
        bad.insert(u, [true; 3]);
    }
    let mut low = retained.to_vec();
    low.shuffle(rng);
    for &u in &low[..plan.low_bad] {
        bad.entry(u).or_default()[slot(Origin::MtLow)] = true;
    }
    // High and human verdicts go to disjoint utterances so no retained
    // utterance ends up all bad.
    let mut other = retained.to_vec();
    other.shuffle(rng);
    for &u in &other[..plan.high_bad] {
        bad.entry(u).or_default()[slot(Origin::MtHigh)] = true;
    }
    for &u in &other[plan.high_bad..plan.high_bad + plan.human_bad] {
        bad.entry(u).or_default()[slot(Origin::Human)] = true;
    }

    for (c, chat) in chats.iter().enumerate() {
        for u in &chat.utterances {
            let flags = bad.get(&(c, u.index)).copied().unwrap_or_default();
            for origin in Origin::ALL {
                let is_bad = flags[slot(origin)];
                let verdict = if is_bad { Label::Erroneous } else { Label::Correct };
                out.candidates.push(TranslationCandidate {
                    chat_id: chat.chat_id.clone(),
                    index: u.index,
                    origin,
                    lang: tgt,
                    text: candidate_text(tgt, c, u.index, origin),
                    verdict: Some(verdict),
                });
                // three raters; one dissent at most keeps the majority intact
                let dissent = rng.random_range(0..4usize);
                for w in 0..3 {
                    let vote_bad = if w == dissent { !is_bad } else { is_bad };
                    out.ratings.push(TranslationRating {
                        chat_id: chat.chat_id.clone(),
                        index: u.index,
                        origin,
                        worker_id: format!("rater{:02}", (c * 7 + u.index * 3 + w) % 25),
                        verdict: if vote_bad { RatingVerdict::Bad } else { RatingVerdict::Good },
                        reasons: if vote_bad {
                            vec![TranslationFlaw::Incorrect]
                        } else {
                            Vec::new()
                        },
                    });
                }
            }
        }
    }
    out.chats.extend(chats);
}

/// The full two-direction corpus planted according to [`EN_PLAN`] and
/// [`JA_PLAN`].
pub fn planted_corpus(seed: u64) -> PlantedCorpus {
    planted_corpus_with(&[EN_PLAN, JA_PLAN], seed)
}

pub fn planted_corpus_with(plans: &[DirectionPlan], seed: u64) -> PlantedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PlantedCorpus {
        chats: Vec::new(),
        candidates: Vec::new(),
        ratings: Vec::new(),
    };
    for plan in plans {
        plant_direction(plan, &mut rng, &mut out);
    }
    out
}

/// Coherence ratings for `chats` chats from `raters` raters each; the
/// share of coherent votes varies from chat to chat.
pub fn coherence_ratings(chats: usize, raters: usize, seed: u64) -> Vec<CoherenceRating> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let reasons = [
        IncoherenceReason::QuestionIgnored,
        IncoherenceReason::UnnaturalTopicChange,
        IncoherenceReason::NotAddressing,
        IncoherenceReason::OutOfOrder,
        IncoherenceReason::HardToFollow,
    ];
    let mut out = Vec::with_capacity(chats * raters);
    for c in 0..chats {
        let p: f64 = rng.random_range(0.3..0.95);
        let first_worker = rng.random_range(0..100usize);
        for r in 0..raters {
            let coherent = rng.random_bool(p);
            out.push(CoherenceRating {
                chat_id: format!("chat{c:05}"),
                worker_id: format!("worker{:03}", (first_worker + r) % 100),
                coherent,
                reasons: if coherent {
                    Vec::new()
                } else {
                    vec![reasons[rng.random_range(0..reasons.len())]]
                },
            });
        }
    }
    out
}

/// `(origin, [tn, fp, fn, tp])` for each origin of one direction.
pub type OriginCounts = [(Origin, [u64; 4]); 3];

/// Per-origin `(tn, fp, fn, tp)` counts of the reported confusion matrices.
pub const REPORTED_MATRICES: [(Direction, OriginCounts); 2] = [
    (
        Direction::JaEn,
        [
            (Origin::Human, [1879, 207, 290, 21]),
            (Origin::MtLow, [11, 155, 90, 2140]),
            (Origin::MtHigh, [1252, 590, 374, 181]),
        ],
    ),
    (
        Direction::EnJa,
        [
            (Origin::Human, [2406, 176, 83, 9]),
            (Origin::MtLow, [6, 265, 53, 2350]),
            (Origin::MtHigh, [1005, 758, 505, 406]),
        ],
    ),
];

pub fn reported_matrix(tn_fp_fn_tp: [u64; 4]) -> ConfusionMatrix {
    let [tn, fp, fn_, tp] = tn_fp_fn_tp;
    ConfusionMatrix::new(tp, fp, fn_, tn)
}

/// Examples and predictions realizing [`REPORTED_MATRICES`] cell by cell,
/// in seeded random order.
pub fn reported_predictions(seed: u64) -> (Vec<LabeledExample>, Vec<PredictionRecord>) {
    use Label::{Correct as C, Erroneous as E};
    let mut rows = Vec::new();
    for (direction, origins) in REPORTED_MATRICES {
        for (origin, [tn, fp, fn_, tp]) in origins {
            for (count, truth, pred) in [(tn, C, C), (fp, C, E), (fn_, E, C), (tp, E, E)] {
                for _ in 0..count {
                    rows.push((direction, origin, truth, pred));
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    let mut examples = Vec::with_capacity(rows.len());
    let mut preds = Vec::with_capacity(rows.len());
    for (n, (direction, origin, truth, pred)) in rows.into_iter().enumerate() {
        let quad = ChatQuad {
            chat_id: format!("r{n:05}"),
            index: 1,
            direction,
            origin,
            ctx_src: "ctx".into(),
            ctx_tgt: "ctx".into(),
            resp_src: "resp".into(),
            resp_tgt: "resp".into(),
        };
        let prob: f64 = if pred.is_erroneous() {
            rng.random_range(0.5..1.0)
        } else {
            rng.random_range(0.0..0.5)
        };
        preds.push(PredictionRecord {
            chat_id: quad.chat_id.clone(),
            index: 1,
            origin,
            direction,
            prob_erroneous: prob,
            predicted_label: pred,
        });
        examples.push(LabeledExample { quad, label: truth });
    }
    (examples, preds)
}

const EN_WORDS: &[&str] = &[
    "I", "you", "like", "dogs", "cats", "tea", "coffee", "running", "books", "music", "today", "really", "what",
    "do", "enjoy", "weekend", "movies", "cooking", "travel", "work", "school", "sure", "yes", "no", "maybe",
    "often", "garden", "rain", "summer", "friends",
];

const JA_WORDS: &[&str] = &[
    "私", "あなた", "好き", "犬", "猫", "お茶", "コーヒー", "走る", "本", "音楽", "今日", "本当に", "何",
    "する", "楽しむ", "週末", "映画", "料理", "旅行", "仕事", "学校", "はい", "いいえ", "たぶん", "よく",
    "庭", "雨", "夏", "友達", "です",
];

/// A token that marks a broken translation in [`sentinel_corpus`].
pub const SENTINEL: &str = "ゾゾ";

fn phrase(rng: &mut ChaCha8Rng, words: &[&str], sep: &str, len: std::ops::Range<usize>) -> String {
    let n = rng.random_range(len);
    (0..n)
        .map(|_| words[rng.random_range(0..words.len())])
        .collect::<Vec<_>>()
        .join(sep)
}

/// A random quad with texts of 1 to `max_words` words per field.
pub fn random_quad(rng: &mut ChaCha8Rng, max_words: usize) -> ChatQuad {
    let direction = if rng.random_bool(0.5) {
        Direction::EnJa
    } else {
        Direction::JaEn
    };
    let (src, tgt) = match direction {
        Direction::EnJa => (EN_WORDS, JA_WORDS),
        Direction::JaEn => (JA_WORDS, EN_WORDS),
    };
    let r = 1..max_words + 1;
    ChatQuad {
        chat_id: format!("q{}", rng.random::<u32>()),
        index: 1,
        direction,
        origin: Origin::ALL[rng.random_range(0..3)],
        ctx_src: phrase(rng, src, " ", r.clone()),
        ctx_tgt: phrase(rng, tgt, " ", r.clone()),
        resp_src: phrase(rng, src, " ", r.clone()),
        resp_tgt: phrase(rng, tgt, " ", r),
    }
}

/// A balanced, linearly separable corpus: erroneous examples, and only
/// those, contain [`SENTINEL`] in the response translation.
pub fn sentinel_corpus(n: usize, seed: u64) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let mut quad = random_quad(&mut rng, 8);
            quad.chat_id = format!("s{i:05}");
            let label = if i % 2 == 0 { Label::Correct } else { Label::Erroneous };
            if label.is_erroneous() {
                let mut words: Vec<&str> = quad.resp_tgt.split(' ').collect();
                let at = rng.random_range(0..=words.len());
                words.insert(at, SENTINEL);
                quad.resp_tgt = words.join(" ");
            }
            quad.origin = if label.is_erroneous() { Origin::MtLow } else { Origin::Human };
            LabeledExample { quad, label }
        })
        .collect()
}
