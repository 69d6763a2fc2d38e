//! Packing a quad into one `[CLS] a [SEP] b [SEP] c [SEP] d [SEP]` sequence.

use std::ops::Range;

use super::tokenizer::Tokenize;
use super::DetectorError;
use crate::corpus::ChatQuad;

/// Number of special tokens around the four spans.
pub const SPECIAL_TOKENS: usize = 5;

/// Token ids ready for the encoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectorInput {
    pub token_ids: Vec<u32>,
    /// 0 for the context segment (including its separators), 1 for the
    /// response segment.
    pub type_ids: Vec<u32>,
    /// Token positions of ctx_src, ctx_tgt, resp_src and resp_tgt.
    pub spans: [Range<usize>; 4],
    /// Tokens removed from each span by truncation.
    pub truncated: [usize; 4],
}

impl DetectorInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

/// Tokenizes and packs the four fields, truncating from the left of
/// ctx_src, then ctx_tgt, then resp_src until the sequence fits.
///
/// resp_tgt is never truncated; if it alone cannot fit the input is rejected.
pub fn assemble_input<T: Tokenize + ?Sized>(
    quad: &ChatQuad,
    tokenizer: &T,
    max_length: usize,
) -> Result<DetectorInput, DetectorError> {
    if max_length <= SPECIAL_TOKENS {
        return Err(DetectorError::Config(format!(
            "max_length must exceed {SPECIAL_TOKENS}, got {max_length}"
        )));
    }
    let fields = [
        ("ctx_src", &quad.ctx_src),
        ("ctx_tgt", &quad.ctx_tgt),
        ("resp_src", &quad.resp_src),
        ("resp_tgt", &quad.resp_tgt),
    ];
    let mut spans: Vec<Vec<u32>> = Vec::with_capacity(4);
    for (name, text) in fields {
        if text.trim().is_empty() {
            return Err(DetectorError::EmptyField {
                chat_id: quad.chat_id.clone(),
                index: quad.index,
                field: name,
            });
        }
        spans.push(tokenizer.encode(text));
    }
    let budget = max_length - SPECIAL_TOKENS;
    if spans[3].len() > budget {
        return Err(DetectorError::InputTooLong {
            chat_id: quad.chat_id.clone(),
            index: quad.index,
            tokens: spans[3].len() + SPECIAL_TOKENS,
            max_length,
        });
    }
    let total: usize = spans.iter().map(Vec::len).sum();
    let mut excess = total.saturating_sub(budget);
    let mut truncated = [0usize; 4];
    for (i, span) in spans.iter_mut().take(3).enumerate() {
        let cut = excess.min(span.len());
        span.drain(..cut);
        truncated[i] = cut;
        excess -= cut;
    }
    debug_assert_eq!(excess, 0);

    let sp = tokenizer.special_ids();
    let mut token_ids = Vec::with_capacity(total + SPECIAL_TOKENS);
    let mut type_ids = Vec::with_capacity(total + SPECIAL_TOKENS);
    let mut ranges: [Range<usize>; 4] = Default::default();
    token_ids.push(sp.cls);
    type_ids.push(0);
    for (i, span) in spans.iter().enumerate() {
        let segment = if i < 2 { 0 } else { 1 };
        let start = token_ids.len();
        token_ids.extend_from_slice(span);
        ranges[i] = start..token_ids.len();
        token_ids.push(sp.sep);
        type_ids.resize(token_ids.len(), segment);
    }
    Ok(DetectorInput {
        token_ids,
        type_ids,
        spans: ranges,
        truncated,
    })
}
