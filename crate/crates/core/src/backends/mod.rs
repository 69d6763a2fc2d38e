//! Translation producers behind one interface: remote MT endpoints,
//! translator-supplied human translations, and a seeded degrading mock.

mod config;
mod human;
mod mock;
mod remote;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::corpus::{Chat, Direction, Lang, Origin, TranslationCandidate, UtteranceRef};

pub use config::{load_backends, BackendConfig, BackendKind, BackendsFile, Degradation};
pub use human::{HumanTranslation, HumanTranslations};
pub use mock::DegradingMock;
pub use remote::RemoteBackend;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendInfo {
    pub name: String,
    pub quality: Origin,
    /// Fixed (source, target) pair, or `None` when the backend serves either
    /// direction.
    pub languages: Option<(Lang, Lang)>,
    /// Translate multi-sentence utterances with the 2-to-2 sliding window.
    pub windowed: bool,
}

impl BackendInfo {
    pub fn new(name: impl Into<String>, quality: Origin) -> Self {
        BackendInfo {
            name: name.into(),
            quality,
            languages: None,
            windowed: false,
        }
    }

    pub fn serves(&self, direction: Direction) -> bool {
        match self.languages {
            None => true,
            Some(pair) => pair == (direction.source(), direction.target()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TranslationRequest<'a> {
    pub at: Option<&'a UtteranceRef>,
    pub direction: Direction,
    pub sentences: &'a [String],
}

#[derive(Debug, thiserror::Error)]
pub enum BackendError {
    #[error("backend `{backend}` unreachable at {} after {attempts} attempts: {message}", fmt_at(.at))]
    Unreachable {
        backend: String,
        at: Option<UtteranceRef>,
        attempts: u32,
        message: String,
    },
    #[error("backend `{backend}` returned HTTP {status} at {}: {body}", fmt_at(.at))]
    Http {
        backend: String,
        at: Option<UtteranceRef>,
        status: u16,
        body: String,
    },
    #[error("backend `{backend}` returned an empty translation at {}", fmt_at(.at))]
    Degenerate {
        backend: String,
        at: Option<UtteranceRef>,
    },
    #[error("backend `{backend}` returned {got} sentences for a request of {expected} at {}", fmt_at(.at))]
    Protocol {
        backend: String,
        at: Option<UtteranceRef>,
        expected: usize,
        got: usize,
    },
    #[error("no human translation for {at}")]
    Alignment { at: UtteranceRef },
    #[error("backend `{backend}` cannot translate {direction}")]
    LanguageMismatch { backend: String, direction: Direction },
    #[error("empty input text at {}", fmt_at(.at))]
    EmptyInput { at: Option<UtteranceRef> },
    #[error("backend configuration: {0}")]
    Config(String),
}

fn fmt_at(at: &Option<UtteranceRef>) -> String {
    match at {
        Some(at) => at.to_string(),
        None => "(no coordinates)".into(),
    }
}

pub trait TranslationBackend: Send + Sync {
    fn info(&self) -> &BackendInfo;

    /// Translates each sentence of the request, returning one output per
    /// input sentence. No chat context is ever passed.
    fn translate(&self, request: &TranslationRequest<'_>) -> Result<Vec<String>, BackendError>;
}

/// Translates one utterance as a single unit.
pub fn translate_utterance(
    backend: &dyn TranslationBackend,
    direction: Direction,
    at: Option<&UtteranceRef>,
    text: &str,
) -> Result<String, BackendError> {
    if text.trim().is_empty() {
        return Err(BackendError::EmptyInput { at: at.cloned() });
    }
    check_direction(backend, direction)?;
    let sentences = [text.to_string()];
    let out = backend.translate(&TranslationRequest {
        at,
        direction,
        sentences: &sentences,
    })?;
    let name = &backend.info().name;
    if out.len() != 1 {
        return Err(BackendError::Protocol {
            backend: name.clone(),
            at: at.cloned(),
            expected: 1,
            got: out.len(),
        });
    }
    let text = out.into_iter().next().expect("length checked");
    if text.trim().is_empty() {
        return Err(BackendError::Degenerate {
            backend: name.clone(),
            at: at.cloned(),
        });
    }
    Ok(text)
}

/// Translates consecutive sentences with a two-sentence window of stride 1.
///
/// The first window contributes both of its outputs and each later window
/// only its second, so the output has one entry per input sentence.
pub fn translate_windowed(
    backend: &dyn TranslationBackend,
    direction: Direction,
    at: Option<&UtteranceRef>,
    sentences: &[String],
) -> Result<Vec<String>, BackendError> {
    match sentences.len() {
        0 => return Err(BackendError::EmptyInput { at: at.cloned() }),
        1 => return Ok(vec![translate_utterance(backend, direction, at, &sentences[0])?]),
        _ => {}
    }
    check_direction(backend, direction)?;
    let name = &backend.info().name;
    let mut out = Vec::with_capacity(sentences.len());
    for (w, window) in sentences.windows(2).enumerate() {
        let got = backend.translate(&TranslationRequest {
            at,
            direction,
            sentences: window,
        })?;
        if got.len() != 2 {
            return Err(BackendError::Protocol {
                backend: name.clone(),
                at: at.cloned(),
                expected: 2,
                got: got.len(),
            });
        }
        if got.iter().any(|s| s.trim().is_empty()) {
            return Err(BackendError::Degenerate {
                backend: name.clone(),
                at: at.cloned(),
            });
        }
        let mut got = got.into_iter();
        let first = got.next().expect("length checked");
        let second = got.next().expect("length checked");
        if w == 0 {
            out.push(first);
        }
        out.push(second);
    }
    Ok(out)
}

fn check_direction(backend: &dyn TranslationBackend, direction: Direction) -> Result<(), BackendError> {
    if backend.info().serves(direction) {
        Ok(())
    } else {
        Err(BackendError::LanguageMismatch {
            backend: backend.info().name.clone(),
            direction,
        })
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '。' | '．' | '.' | '!' | '?' | '！' | '？')
}

/// Splits text after runs of terminal punctuation, keeping the delimiters.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        cur.push(c);
        if is_terminal(c) && !chars.peek().copied().is_some_and(is_terminal) {
            let s = cur.trim();
            if !s.is_empty() {
                out.push(s.to_string());
            }
            cur.clear();
        }
    }
    let s = cur.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
    out
}

/// Joins per-sentence translations in the conventions of the target language.
pub fn join_sentences(sentences: &[String], lang: Lang) -> String {
    match lang {
        Lang::Ja => sentences.concat(),
        Lang::En => sentences.join(" "),
    }
}

/// Translates a whole utterance, windowing within it when the backend is a
/// 2-to-2 model. Windows never cross utterance boundaries.
pub fn translate_text(
    backend: &dyn TranslationBackend,
    direction: Direction,
    at: Option<&UtteranceRef>,
    text: &str,
) -> Result<String, BackendError> {
    if !backend.info().windowed {
        return translate_utterance(backend, direction, at, text);
    }
    let sentences = split_sentences(text);
    if sentences.len() <= 1 {
        return translate_utterance(backend, direction, at, text);
    }
    let out = translate_windowed(backend, direction, at, &sentences)?;
    Ok(join_sentences(&out, direction.target()))
}

/// One candidate per (utterance, backend), ordered by chat, utterance, then
/// backend. Utterances are translated in parallel.
pub fn generate_candidates(
    chats: &[Chat],
    backends: &[&dyn TranslationBackend],
) -> Result<Vec<TranslationCandidate>, BackendError> {
    let mut jobs = Vec::new();
    for chat in chats {
        let direction = chat.direction().ok_or_else(|| {
            BackendError::Config(format!("chat `{}` has an unsupported language pair", chat.chat_id))
        })?;
        for b in backends {
            check_direction(*b, direction)?;
        }
        for u in &chat.utterances {
            for b in backends {
                jobs.push((chat, direction, u, *b));
            }
        }
    }
    jobs.par_iter()
        .map(|(chat, direction, u, b)| {
            let at = UtteranceRef::new(chat.chat_id.clone(), u.index);
            let text = translate_text(*b, *direction, Some(&at), &u.text)?;
            Ok(TranslationCandidate {
                chat_id: chat.chat_id.clone(),
                index: u.index,
                origin: b.info().quality,
                lang: direction.target(),
                text,
                verdict: None,
            })
        })
        .collect()
}

/// Picks, for each direction present in `chats`, the backends that serve it,
/// and generates candidates preserving chat order.
pub fn generate_candidates_routed(
    chats: &[Chat],
    backends: &[&dyn TranslationBackend],
) -> Result<Vec<TranslationCandidate>, BackendError> {
    let mut groups: HashMap<Direction, Vec<&Chat>> = HashMap::new();
    for chat in chats {
        if let Some(d) = chat.direction() {
            groups.entry(d).or_default().push(chat);
        }
    }
    let mut by_chat: HashMap<String, Vec<TranslationCandidate>> = HashMap::new();
    for (direction, group) in groups {
        let serving: Vec<&dyn TranslationBackend> = backends
            .iter()
            .copied()
            .filter(|b| b.info().serves(direction))
            .collect();
        if serving.is_empty() {
            return Err(BackendError::Config(format!("no backend serves {direction}")));
        }
        let owned: Vec<Chat> = group.into_iter().cloned().collect();
        for c in generate_candidates(&owned, &serving)? {
            by_chat.entry(c.chat_id.clone()).or_default().push(c);
        }
    }
    let mut out = Vec::new();
    for chat in chats {
        if let Some(list) = by_chat.remove(&chat.chat_id) {
            out.extend(list);
        }
    }
    Ok(out)
}
