//! BERT-style basic tokenization followed by greedy longest-match WordPiece.

use std::collections::{BTreeMap, HashMap};
use std::io::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::DetectorError;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";

const MAX_WORD_CHARS: usize = 100;

/// Ids of the special tokens every tokenizer must provide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpecialIds {
    pub pad: u32,
    pub unk: u32,
    pub cls: u32,
    pub sep: u32,
}

pub trait Tokenize {
    fn encode(&self, text: &str) -> Vec<u32>;
    fn special_ids(&self) -> SpecialIds;
}

fn is_cjk_ideograph(c: char) -> bool {
    matches!(c as u32,
        0x4E00..=0x9FFF
        | 0x3400..=0x4DBF
        | 0x20000..=0x2A6DF
        | 0x2A700..=0x2B73F
        | 0x2B740..=0x2B81F
        | 0x2B820..=0x2CEAF
        | 0xF900..=0xFAFF
        | 0x2F800..=0x2FA1F)
}

fn is_punctuation(c: char) -> bool {
    let cp = c as u32;
    if (33..=47).contains(&cp)
        || (58..=64).contains(&cp)
        || (91..=96).contains(&cp)
        || (123..=126).contains(&cp)
    {
        return true;
    }
    // General Unicode punctuation blocks, CJK symbols, and fullwidth forms.
    matches!(cp, 0x2000..=0x206F | 0x3000..=0x303F | 0xFF01..=0xFF0F | 0xFF1A..=0xFF20 | 0xFF3B..=0xFF40 | 0xFF5B..=0xFF65)
}

/// Whitespace split with punctuation and CJK ideographs isolated.
pub fn basic_tokenize(text: &str, lowercase: bool) -> Vec<String> {
    let text = if lowercase { text.to_lowercase() } else { text.to_string() };
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_whitespace() || c.is_control() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else if is_punctuation(c) || is_cjk_ideograph(c) {
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
    out
}

/// A WordPiece vocabulary; line `i` of `vocab.txt` is the token with id `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPiece {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
    special: SpecialIds,
    lowercase: bool,
}

impl WordPiece {
    pub fn from_tokens(tokens: Vec<String>, lowercase: bool) -> Result<Self, DetectorError> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i as u32).is_some() {
                return Err(DetectorError::Vocab(format!("duplicate vocabulary entry `{t}`")));
            }
        }
        let get = |t: &str| {
            ids.get(t)
                .copied()
                .ok_or_else(|| DetectorError::Vocab(format!("vocabulary lacks {t}")))
        };
        let special = SpecialIds {
            pad: get(PAD)?,
            unk: get(UNK)?,
            cls: get(CLS)?,
            sep: get(SEP)?,
        };
        Ok(WordPiece {
            tokens,
            ids,
            special,
            lowercase,
        })
    }

    /// Builds a vocabulary from training text: the special tokens, every
    /// character seen (as a word start and as a `##` continuation), then the
    /// most frequent whole words up to `max_size`.
    pub fn build<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        max_size: usize,
        lowercase: bool,
    ) -> Result<Self, DetectorError> {
        let mut words: HashMap<String, u64> = HashMap::new();
        for t in texts {
            for w in basic_tokenize(t, lowercase) {
                *words.entry(w).or_default() += 1;
            }
        }
        let mut tokens: Vec<String> = [PAD, UNK, CLS, SEP].iter().map(|s| s.to_string()).collect();
        let mut chars: BTreeMap<char, ()> = BTreeMap::new();
        for w in words.keys() {
            for c in w.chars() {
                chars.insert(c, ());
            }
        }
        for c in chars.keys() {
            tokens.push(c.to_string());
            tokens.push(format!("##{c}"));
        }
        let mut by_freq: Vec<(&String, &u64)> = words
            .iter()
            .filter(|(w, _)| w.chars().count() > 1)
            .collect();
        by_freq.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
        for (w, _) in by_freq {
            if tokens.len() >= max_size {
                break;
            }
            tokens.push(w.clone());
        }
        Self::from_tokens(tokens, lowercase)
    }

    pub fn load(path: &Path, lowercase: bool) -> Result<Self, DetectorError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DetectorError::Io(format!("{}: {e}", path.display())))?;
        let tokens = text.lines().map(str::to_string).collect();
        Self::from_tokens(tokens, lowercase)
    }

    pub fn save(&self, path: &Path) -> Result<(), DetectorError> {
        let mut f = std::fs::File::create(path)
            .map_err(|e| DetectorError::Io(format!("{}: {e}", path.display())))?;
        for t in &self.tokens {
            writeln!(f, "{t}").map_err(|e| DetectorError::Io(e.to_string()))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lowercase(&self) -> bool {
        self.lowercase
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    /// SHA-256 over the newline-joined vocabulary.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update(b"\n");
        }
        hex(&h.finalize())
    }

    fn word_pieces(&self, word: &str, out: &mut Vec<u32>) {
        let chars: Vec<char> = word.chars().collect();
        if chars.len() > MAX_WORD_CHARS {
            out.push(self.special.unk);
            return;
        }
        let mut pieces = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let mut sub: String = chars[start..end].iter().collect();
                if start > 0 {
                    sub.insert_str(0, "##");
                }
                if let Some(id) = self.ids.get(&sub) {
                    found = Some(*id);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(id) => pieces.push(id),
                None => {
                    out.push(self.special.unk);
                    return;
                }
            }
            start = end;
        }
        out.extend(pieces);
    }
}

impl Tokenize for WordPiece {
    fn encode(&self, text: &str) -> Vec<u32> {
        let mut out = Vec::new();
        for w in basic_tokenize(text, self.lowercase) {
            self.word_pieces(&w, &mut out);
        }
        out
    }

    fn special_ids(&self) -> SpecialIds {
        self.special
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_splits_punct_and_ideographs() {
        assert_eq!(
            basic_tokenize("I agree. 晩ご飯", false),
            vec!["I", "agree", ".", "晩", "ご", "飯"]
        );
        assert_eq!(basic_tokenize("Hello", true), vec!["hello"]);
    }

    #[test]
    fn wordpiece_greedy_longest_match() {
        let tokens = [PAD, UNK, CLS, SEP, "un", "##aff", "##able", "aff"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let wp = WordPiece::from_tokens(tokens, false).unwrap();
        assert_eq!(wp.encode("unaffable"), vec![4, 5, 6]);
        assert_eq!(wp.encode("aff"), vec![7]);
        assert_eq!(wp.encode("xyz"), vec![1]);
    }

    #[test]
    fn built_vocab_covers_seen_characters() {
        let wp = WordPiece::build(["I like dogs.", "犬が好き"], 100, false).unwrap();
        assert!(wp.id("dogs").is_some());
        // an unseen word made of seen characters decomposes without [UNK]
        let ids = wp.encode("gods");
        assert!(!ids.contains(&wp.special_ids().unk));
        assert_eq!(wp.encode("Q"), vec![wp.special_ids().unk]);
    }

    #[test]
    fn missing_specials_rejected() {
        let r = WordPiece::from_tokens(vec!["a".into()], false);
        assert!(matches!(r, Err(DetectorError::Vocab(_))));
    }

    #[test]
    fn fingerprint_changes_with_vocab() {
        let a = WordPiece::build(["a b"], 100, false).unwrap();
        let b = WordPiece::build(["a c"], 100, false).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
