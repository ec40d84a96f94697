//! Domain types: phone inventory, contextual words, filter configuration.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of a word in a [`WordList`].
pub type WordId = u64;

/// Index into the phone symbol table. Column `id` of a posterior matrix
/// holds the per-frame probability of this phone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PhoneId(pub u32);

impl PhoneId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PhoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Maps phone symbol strings to contiguous [`PhoneId`]s. The id of a symbol
/// is its 0-based line number in the symbol table file.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    symbols: Vec<String>,
    index: HashMap<String, PhoneId>,
}

impl SymbolTable {
    /// Builds a table from symbols in id order. Symbols must be unique,
    /// non-empty and free of whitespace (pronunciations are whitespace
    /// separated).
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = SymbolTable {
            symbols: Vec::new(),
            index: HashMap::new(),
        };
        for symbol in symbols {
            table.push(symbol.into())?;
        }
        Ok(table)
    }

    pub(crate) fn push(&mut self, symbol: String) -> Result<PhoneId> {
        let line = self.symbols.len();
        if symbol.is_empty() {
            return Err(Error::SymbolTableFormat {
                line,
                detail: "empty symbol".into(),
            });
        }
        if symbol.chars().any(char::is_whitespace) {
            return Err(Error::SymbolTableFormat {
                line,
                detail: format!("symbol '{symbol}' contains whitespace"),
            });
        }
        if self.index.contains_key(&symbol) {
            return Err(Error::SymbolTableFormat {
                line,
                detail: format!("duplicate symbol '{symbol}'"),
            });
        }
        let id = PhoneId(line as u32);
        self.index.insert(symbol.clone(), id);
        self.symbols.push(symbol);
        Ok(id)
    }

    /// Number of phone classes F.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn id_of(&self, symbol: &str) -> Option<PhoneId> {
        self.index.get(symbol).copied()
    }

    pub fn symbol(&self, id: PhoneId) -> Option<&str> {
        self.symbols.get(id.index()).map(String::as_str)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &str> {
        self.symbols.iter().map(String::as_str)
    }
}

/// A hotword: surface string plus one or more phone-id pronunciations.
///
/// A word's score under any scorer is the maximum over its pronunciations,
/// so homophones and pronunciation variants can share one entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextualWord {
    pub word_id: WordId,
    pub surface: String,
    pronunciations: Vec<Vec<PhoneId>>,
}

impl ContextualWord {
    /// Requires at least one pronunciation, each non-empty.
    pub fn new(
        word_id: WordId,
        surface: impl Into<String>,
        pronunciations: Vec<Vec<PhoneId>>,
    ) -> Result<Self> {
        if pronunciations.is_empty() || pronunciations.iter().any(Vec::is_empty) {
            return Err(Error::InvalidConfig {
                detail: format!("word {word_id}: pronunciations must be non-empty"),
            });
        }
        Ok(ContextualWord {
            word_id,
            surface: surface.into(),
            pronunciations,
        })
    }

    pub fn pronunciations(&self) -> &[Vec<PhoneId>] {
        &self.pronunciations
    }

    /// Length of the shortest pronunciation; a word can only align inside a
    /// window with at least this many frames.
    pub fn min_pronunciation_len(&self) -> usize {
        self.pronunciations.iter().map(Vec::len).min().unwrap_or(0)
    }
}

/// The predefined contextual word list together with its phone inventory.
#[derive(Debug, Clone)]
pub struct WordList {
    words: Vec<ContextualWord>,
    symbols: SymbolTable,
    by_id: HashMap<WordId, usize>,
}

impl WordList {
    /// Word ids must be unique and every phone id must be valid for the
    /// symbol table.
    pub fn new(words: Vec<ContextualWord>, symbols: SymbolTable) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(words.len());
        for (idx, word) in words.iter().enumerate() {
            if by_id.insert(word.word_id, idx).is_some() {
                return Err(Error::DuplicateWordId {
                    line: idx,
                    word_id: word.word_id,
                });
            }
            for pron in word.pronunciations() {
                for &phone in pron {
                    if phone.index() >= symbols.len() {
                        return Err(Error::PhoneOutOfRange {
                            phone: phone.0,
                            inventory: symbols.len(),
                        });
                    }
                }
            }
        }
        Ok(WordList {
            words,
            symbols,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[ContextualWord] {
        &self.words
    }

    pub fn word(&self, id: WordId) -> Option<&ContextualWord> {
        self.by_id.get(&id).map(|&idx| &self.words[idx])
    }

    pub fn contains(&self, id: WordId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.symbols
    }

    /// Inventory size F implied by the list; posterior matrices scored
    /// against this list must have exactly this many columns.
    pub fn inventory_size(&self) -> usize {
        self.symbols.len()
    }

    /// Checks that no pronunciation uses the blank phone.
    pub fn ensure_no_blank(&self, blank: PhoneId) -> Result<()> {
        for word in &self.words {
            for pron in word.pronunciations() {
                if pron.contains(&blank) {
                    return Err(Error::BlankInPronunciation {
                        word_id: word.word_id,
                        blank: blank.0,
                    });
                }
            }
        }
        Ok(())
    }

    /// A new list containing the first `n` words (or all, if fewer). Used by
    /// the scaling benchmark to sweep list sizes.
    pub fn truncated(&self, n: usize) -> WordList {
        let words: Vec<_> = self.words.iter().take(n).cloned().collect();
        let by_id = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.word_id, i))
            .collect();
        WordList {
            words,
            symbols: self.symbols.clone(),
            by_id,
        }
    }
}

/// How per-window survivors accumulate into the session's final list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccumulationPolicy {
    /// Union of all per-window survivors; a word keeps the best scores it
    /// achieved in any window.
    #[serde(rename = "union")]
    UnionOverWindows,
    /// Only the most recent window's survivors.
    #[serde(rename = "final")]
    FinalWindowOnly,
}

impl FromStr for AccumulationPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "union" => Ok(AccumulationPolicy::UnionOverWindows),
            "final" => Ok(AccumulationPolicy::FinalWindowOnly),
            other => Err(Error::InvalidConfig {
                detail: format!("accumulation must be 'union' or 'final', got '{other}'"),
            }),
        }
    }
}

impl fmt::Display for AccumulationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccumulationPolicy::UnionOverWindows => f.write_str("union"),
            AccumulationPolicy::FinalWindowOnly => f.write_str("final"),
        }
    }
}

/// Thresholds, window geometry and accumulation policy for a filter session.
///
/// Thresholds are compared with `>=`, so 0 is the permissive extreme; values
/// above 1 are accepted and reject everything (scores never exceed 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub psc_threshold: f64,
    pub soc_threshold: f64,
    /// Sliding window capacity in chunks.
    pub window_chunks: usize,
    /// Frames per streaming chunk; 53 frames is about 480 ms of audio.
    pub chunk_frames: usize,
    pub accumulation: AccumulationPolicy,
    /// Transducer blank class, if the inventory has one. Pronunciations may
    /// never reference it.
    pub blank_id: Option<PhoneId>,
    /// Drop frames dominated by the blank class before buffering. Remaining
    /// rows are not renormalized.
    pub drop_blank_frames: bool,
    /// A frame is dropped when its blank probability exceeds this.
    pub blank_dominance_threshold: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            psc_threshold: 0.5,
            soc_threshold: 0.5,
            window_chunks: 10,
            chunk_frames: 53,
            accumulation: AccumulationPolicy::UnionOverWindows,
            blank_id: None,
            drop_blank_frames: false,
            blank_dominance_threshold: 0.95,
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_chunks == 0 {
            return Err(Error::InvalidConfig {
                detail: "window_chunks must be >= 1".into(),
            });
        }
        if self.chunk_frames == 0 {
            return Err(Error::InvalidConfig {
                detail: "chunk_frames must be >= 1".into(),
            });
        }
        for (name, value) in [
            ("psc_threshold", self.psc_threshold),
            ("soc_threshold", self.soc_threshold),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::InvalidConfig {
                    detail: format!("{name} must be a finite value >= 0, got {value}"),
                });
            }
        }
        if !(0.0..=1.0).contains(&self.blank_dominance_threshold) {
            return Err(Error::InvalidConfig {
                detail: format!(
                    "blank_dominance_threshold must be in [0, 1], got {}",
                    self.blank_dominance_threshold
                ),
            });
        }
        if self.drop_blank_frames && self.blank_id.is_none() {
            return Err(Error::InvalidConfig {
                detail: "drop_blank_frames requires blank_id".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_table_rejects_duplicates_and_whitespace() {
        assert!(SymbolTable::new(["a", "b", "a"]).is_err());
        assert!(SymbolTable::new(["a", "b c"]).is_err());
        assert!(SymbolTable::new(["a", ""]).is_err());
        let table = SymbolTable::new(["zh", "ang1", "s", "an1"]).unwrap();
        assert_eq!(table.len(), 4);
        assert_eq!(table.id_of("s"), Some(PhoneId(2)));
        assert_eq!(table.symbol(PhoneId(3)), Some("an1"));
    }

    #[test]
    fn word_requires_nonempty_pronunciations() {
        assert!(ContextualWord::new(1, "w", vec![]).is_err());
        assert!(ContextualWord::new(1, "w", vec![vec![]]).is_err());
        let w = ContextualWord::new(1, "w", vec![vec![PhoneId(0)], vec![PhoneId(1), PhoneId(2)]])
            .unwrap();
        assert_eq!(w.min_pronunciation_len(), 1);
    }

    #[test]
    fn word_list_rejects_duplicate_ids_and_bad_phones() {
        let symbols = SymbolTable::new(["a", "b"]).unwrap();
        let w = |id| ContextualWord::new(id, "x", vec![vec![PhoneId(0)]]).unwrap();
        assert!(WordList::new(vec![w(1), w(1)], symbols.clone()).is_err());

        let bad = ContextualWord::new(2, "y", vec![vec![PhoneId(7)]]).unwrap();
        assert!(matches!(
            WordList::new(vec![bad], symbols.clone()),
            Err(Error::PhoneOutOfRange {
                phone: 7,
                inventory: 2
            })
        ));

        let list = WordList::new(vec![w(1), w(2)], symbols).unwrap();
        assert_eq!(list.len(), 2);
        assert!(list.contains(2));
        assert!(!list.contains(3));
    }

    #[test]
    fn blank_check() {
        let symbols = SymbolTable::new(["<blank>", "a"]).unwrap();
        let w = ContextualWord::new(1, "w", vec![vec![PhoneId(1), PhoneId(0)]]).unwrap();
        let list = WordList::new(vec![w], symbols).unwrap();
        assert!(list.ensure_no_blank(PhoneId(1)).is_err());
        assert!(list.ensure_no_blank(PhoneId(0)).is_err());
    }

    #[test]
    fn config_validation() {
        let config = FilterConfig::default();
        assert_eq!(config.chunk_frames, 53);
        assert_eq!(config.window_chunks, 10);
        config.validate().unwrap();

        let bad = FilterConfig {
            window_chunks: 0,
            ..FilterConfig::default()
        };
        assert!(bad.validate().is_err());

        // Above-unit thresholds are allowed; they make the filter reject all.
        let high = FilterConfig {
            psc_threshold: 1.01,
            ..FilterConfig::default()
        };
        high.validate().unwrap();

        let neg = FilterConfig {
            soc_threshold: -0.1,
            ..FilterConfig::default()
        };
        assert!(neg.validate().is_err());

        let blankless = FilterConfig {
            drop_blank_frames: true,
            blank_id: None,
            ..FilterConfig::default()
        };
        assert!(blankless.validate().is_err());
    }

    #[test]
    fn accumulation_parse_roundtrip() {
        assert_eq!(
            "union".parse::<AccumulationPolicy>().unwrap(),
            AccumulationPolicy::UnionOverWindows
        );
        assert_eq!(
            "final".parse::<AccumulationPolicy>().unwrap(),
            AccumulationPolicy::FinalWindowOnly
        );
        assert!("neither".parse::<AccumulationPolicy>().is_err());
        assert_eq!(AccumulationPolicy::UnionOverWindows.to_string(), "union");
    }
}
