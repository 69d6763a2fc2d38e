//! Sentence- and corpus-level BLEU.

use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BleuTokenizer {
    /// Split on whitespace only.
    Whitespace,
    /// Split on whitespace, then isolate punctuation and CJK characters.
    WhitespacePunct,
}

impl FromStr for BleuTokenizer {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whitespace" => Ok(BleuTokenizer::Whitespace),
            "whitespace-punct" => Ok(BleuTokenizer::WhitespacePunct),
            other => Err(format!("unknown tokenizer `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Smoothing {
    None,
    /// Replace zero matches by `epsilon` (NLTK method 1).
    Epsilon { epsilon: f64 },
    /// Add one to matches and totals of every order (NLTK method 2).
    AddOne,
}

impl FromStr for Smoothing {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Smoothing::None),
            "add-one" => Ok(Smoothing::AddOne),
            "epsilon" => Ok(Smoothing::Epsilon { epsilon: 0.1 }),
            other => match other.strip_prefix("epsilon:") {
                Some(v) => v
                    .parse()
                    .map(|epsilon| Smoothing::Epsilon { epsilon })
                    .map_err(|_| format!("bad epsilon in `{other}`")),
                None => Err(format!("unknown smoothing `{other}`")),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    pub tokenizer: BleuTokenizer,
    pub max_ngram: usize,
    pub smoothing: Smoothing,
    /// One weight per order; uniform when empty.
    #[serde(default)]
    pub weights: Vec<f64>,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            tokenizer: BleuTokenizer::WhitespacePunct,
            max_ngram: 4,
            smoothing: Smoothing::AddOne,
            weights: Vec::new(),
        }
    }
}

impl BleuConfig {
    /// Whitespace tokens, 4-grams, no smoothing, uniform weights.
    pub fn plain() -> Self {
        BleuConfig {
            tokenizer: BleuTokenizer::Whitespace,
            max_ngram: 4,
            smoothing: Smoothing::None,
            weights: Vec::new(),
        }
    }

    fn weight(&self, order: usize) -> f64 {
        self.weights
            .get(order)
            .copied()
            .unwrap_or(1.0 / self.max_ngram as f64)
    }
}

fn is_cjk(c: char) -> bool {
    matches!(c as u32,
        0x3040..=0x30FF   // kana
        | 0x3400..=0x4DBF
        | 0x4E00..=0x9FFF
        | 0xF900..=0xFAFF
        | 0xFF66..=0xFF9F)
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c as u32, 0x3000..=0x303F | 0xFF01..=0xFF0F | 0xFF1A..=0xFF20 | 0xFF3B..=0xFF40 | 0xFF5B..=0xFF65)
        || matches!(c, '“' | '”' | '‘' | '’' | '…' | '—' | '–')
}

pub fn tokenize(text: &str, tokenizer: BleuTokenizer) -> Vec<String> {
    match tokenizer {
        BleuTokenizer::Whitespace => text.split_whitespace().map(str::to_string).collect(),
        BleuTokenizer::WhitespacePunct => {
            let mut out = Vec::new();
            for word in text.split_whitespace() {
                let mut cur = String::new();
                for c in word.chars() {
                    if is_punct(c) || is_cjk(c) {
                        if !cur.is_empty() {
                            out.push(std::mem::take(&mut cur));
                        }
                        out.push(c.to_string());
                    } else {
                        cur.push(c);
                    }
                }
                if !cur.is_empty() {
                    out.push(cur);
                }
            }
            out
        }
    }
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], u64> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for g in tokens.windows(n) {
            *m.entry(g).or_insert(0) += 1;
        }
    }
    m
}

/// Clipped matches and hypothesis n-gram total for one order.
fn modified_precision(hyp: &[String], reference: &[String], n: usize) -> (u64, u64) {
    let h = ngram_counts(hyp, n);
    let r = ngram_counts(reference, n);
    let matches = h
        .iter()
        .map(|(g, c)| (*c).min(r.get(g).copied().unwrap_or(0)))
        .sum();
    (matches, hyp.len().saturating_sub(n - 1) as u64)
}

fn brevity_penalty(hyp_len: u64, ref_len: u64) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len >= ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// In [0, 100].
    pub score: f64,
    /// (clipped matches, hypothesis n-grams) per order, starting at unigrams.
    pub precisions: Vec<(u64, u64)>,
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn combine(counts: &[(u64, u64)], bp: f64, cfg: &BleuConfig) -> f64 {
    // Orders with no hypothesis n-grams are left out and the remaining
    // weights renormalized, so a short sentence matched against itself
    // still scores 100.
    let mut log_sum = 0.0;
    let mut weight_sum = 0.0;
    for (order, &(m, total)) in counts.iter().enumerate() {
        if total == 0 {
            continue;
        }
        let p = match cfg.smoothing {
            Smoothing::None => m as f64 / total as f64,
            Smoothing::Epsilon { epsilon } => {
                if m == 0 {
                    epsilon / total as f64
                } else {
                    m as f64 / total as f64
                }
            }
            Smoothing::AddOne => (m + 1) as f64 / (total + 1) as f64,
        };
        if p <= 0.0 {
            return 0.0;
        }
        let w = cfg.weight(order);
        log_sum += w * p.ln();
        weight_sum += w;
    }
    if weight_sum == 0.0 {
        return 0.0;
    }
    (100.0 * bp * (log_sum / weight_sum).exp()).clamp(0.0, 100.0)
}

pub fn sentence_bleu(hypothesis: &str, reference: &str, cfg: &BleuConfig) -> BleuScore {
    let hyp = tokenize(hypothesis, cfg.tokenizer);
    let reference = tokenize(reference, cfg.tokenizer);
    let counts: Vec<(u64, u64)> = (1..=cfg.max_ngram)
        .map(|n| modified_precision(&hyp, &reference, n))
        .collect();
    let bp = brevity_penalty(hyp.len() as u64, reference.len() as u64);
    BleuScore {
        score: combine(&counts, bp, cfg),
        precisions: counts,
        brevity_penalty: bp,
        hyp_len: hyp.len() as u64,
        ref_len: reference.len() as u64,
    }
}

/// Corpus BLEU over (hypothesis, reference) pairs: clipped counts and
/// lengths are summed before combining.
pub fn corpus_bleu<'a>(
    pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    cfg: &BleuConfig,
) -> BleuScore {
    let mut counts = vec![(0u64, 0u64); cfg.max_ngram];
    let (mut hyp_len, mut ref_len) = (0u64, 0u64);
    for (h, r) in pairs {
        let h = tokenize(h, cfg.tokenizer);
        let r = tokenize(r, cfg.tokenizer);
        hyp_len += h.len() as u64;
        ref_len += r.len() as u64;
        for (n, slot) in counts.iter_mut().enumerate() {
            let (m, t) = modified_precision(&h, &r, n + 1);
            slot.0 += m;
            slot.1 += t;
        }
    }
    let bp = brevity_penalty(hyp_len, ref_len);
    BleuScore {
        score: combine(&counts, bp, cfg),
        precisions: counts,
        brevity_penalty: bp,
        hyp_len,
        ref_len,
    }
}
