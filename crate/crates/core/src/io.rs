//! File formats: phone symbol tables, word lists, posterior files and
//! corpus manifests.
//!
//! - Symbol table: text, one symbol per line; the 0-based line number is the
//!   phone id.
//! - Word list: UTF-8 tab-separated text, one word per line:
//!   `word_id <TAB> surface <TAB> pron_1 [<TAB> pron_k]...`, each
//!   pronunciation a space-separated phone-symbol sequence.
//! - Posterior file: binary, little-endian; header `PHPO`, format version
//!   (u32), T (u32), F (u32), frame_shift_ms (f32); payload T x F f32 values,
//!   frame-major.
//! - Manifest: one JSON array of `{utt_id, posterior_path,
//!   ground_truth_word_ids}` entries; relative posterior paths resolve
//!   against the manifest's directory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Utterance;
use crate::posterior::PosteriorMatrix;
use crate::types::{ContextualWord, SymbolTable, WordId, WordList};

pub const POSTERIOR_MAGIC: [u8; 4] = *b"PHPO";
pub const POSTERIOR_VERSION: u32 = 1;

/// Refuse posterior payloads beyond this many values (800 MB of f64).
const MAX_POSTERIOR_VALUES: u64 = 100_000_000;

// ---------------------------------------------------------------------------
// Symbol tables
// ---------------------------------------------------------------------------

pub fn read_symbol_table(path: &Path) -> Result<SymbolTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut table = SymbolTable::new(Vec::<String>::new())?;
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        table.push(line.trim_end_matches('\r').to_string())?;
    }
    Ok(table)
}

pub fn write_symbol_table(path: &Path, table: &SymbolTable) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for symbol in table.symbols() {
        writeln!(out, "{symbol}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Word lists
// ---------------------------------------------------------------------------

/// Parses a word-list document against a symbol table. Blank lines are
/// skipped; line numbers in errors are 1-based.
pub fn parse_word_list(text: &str, symbols: SymbolTable) -> Result<WordList> {
    let mut words = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let mut fields = raw.split('\t');
        let id_field = fields.next().unwrap_or("");
        let word_id: WordId = id_field.parse().map_err(|_| Error::WordListFormat {
            line,
            detail: format!("bad word id '{id_field}'"),
        })?;
        let surface = fields.next().ok_or(Error::WordListFormat {
            line,
            detail: "missing surface field".into(),
        })?;

        let mut pronunciations = Vec::new();
        for pron_field in fields {
            let mut pron = Vec::new();
            for symbol in pron_field.split_whitespace() {
                let id = symbols.id_of(symbol).ok_or_else(|| Error::UnknownSymbol {
                    line,
                    symbol: symbol.to_string(),
                })?;
                pron.push(id);
            }
            if pron.is_empty() {
                return Err(Error::EmptyPronunciation { line });
            }
            pronunciations.push(pron);
        }
        if pronunciations.is_empty() {
            return Err(Error::EmptyPronunciation { line });
        }
        if !seen.insert(word_id) {
            return Err(Error::DuplicateWordId { line, word_id });
        }
        words.push(
            ContextualWord::new(word_id, surface, pronunciations).map_err(|e| {
                Error::WordListFormat {
                    line,
                    detail: e.to_string(),
                }
            })?,
        );
    }
    WordList::new(words, symbols)
}

pub fn read_word_list(path: &Path, symbols: SymbolTable) -> Result<WordList> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_word_list(&text, symbols)
}

/// Serializes a list in the word-list format. Parsing the output against the
/// same symbol table yields a semantically identical list.
pub fn format_word_list(list: &WordList) -> String {
    let symbols = list.symbols();
    let mut out = String::new();
    for word in list.words() {
        out.push_str(&word.word_id.to_string());
        out.push('\t');
        out.push_str(&word.surface);
        for pron in word.pronunciations() {
            out.push('\t');
            let rendered: Vec<&str> = pron
                .iter()
                .map(|&id| symbols.symbol(id).expect("word list phones are valid"))
                .collect();
            out.push_str(&rendered.join(" "));
        }
        out.push('\n');
    }
    out
}

pub fn write_word_list(path: &Path, list: &WordList) -> Result<()> {
    std::fs::write(path, format_word_list(list)).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Posterior files
// ---------------------------------------------------------------------------

pub fn write_posteriors(path: &Path, matrix: &PosteriorMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let frames = matrix.frames() as u32;
    let phones = matrix.num_phones() as u32;
    out.write_all(&POSTERIOR_MAGIC)
        .and_then(|_| out.write_all(&POSTERIOR_VERSION.to_le_bytes()))
        .and_then(|_| out.write_all(&frames.to_le_bytes()))
        .and_then(|_| out.write_all(&phones.to_le_bytes()))
        .and_then(|_| out.write_all(&matrix.frame_shift_ms().to_le_bytes()))
        .map_err(|e| Error::io(path, e))?;
    for &value in matrix.as_flat() {
        out.write_all(&(value as f32).to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_posteriors(path: &Path) -> Result<PosteriorMatrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let bad = |detail: String| Error::PosteriorFormat {
        path: path.to_path_buf(),
        detail,
    };
    let mut header = [0u8; 20];
    reader
        .read_exact(&mut header)
        .map_err(|_| bad("truncated header (need 20 bytes)".into()))?;
    if header[0..4] != POSTERIOR_MAGIC {
        return Err(bad(format!(
            "bad magic {:?}, expected \"PHPO\"",
            &header[0..4]
        )));
    }
    let u32_at = |off: usize| u32::from_le_bytes(header[off..off + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != POSTERIOR_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let frames = u32_at(8) as u64;
    let phones = u32_at(12) as u64;
    let frame_shift_ms = f32::from_le_bytes(header[16..20].try_into().unwrap());
    if phones == 0 {
        return Err(bad("phone class count is zero".into()));
    }
    let values = frames
        .checked_mul(phones)
        .filter(|&n| n <= MAX_POSTERIOR_VALUES)
        .ok_or_else(|| bad(format!("unreasonable dimensions {frames}x{phones}")))?;

    let mut payload = vec![0u8; (values * 4) as usize];
    reader
        .read_exact(&mut payload)
        .map_err(|_| bad(format!("truncated payload (expected {values} f32 values)")))?;
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing).map_err(|e| Error::io(path, e))? != 0 {
        return Err(bad("trailing bytes after payload".into()));
    }

    let data: Vec<f64> = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    PosteriorMatrix::from_flat(data, phones as usize, frame_shift_ms)
        .map_err(|e| bad(e.to_string()))
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utt_id: String,
    pub posterior_path: String,
    pub ground_truth_word_ids: Vec<WordId>,
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::ManifestFormat {
        detail: e.to_string(),
    })
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, entries).map_err(|e| Error::ManifestFormat {
        detail: e.to_string(),
    })?;
    out.write_all(b"\n")
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Loads every utterance a manifest references. Relative posterior paths are
/// resolved against the manifest's directory.
pub fn load_manifest_utterances(manifest_path: &Path) -> Result<Vec<Utterance>> {
    let entries = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    entries
        .into_iter()
        .map(|entry| {
            let raw = PathBuf::from(&entry.posterior_path);
            let resolved = if raw.is_absolute() {
                raw
            } else {
                base.join(raw)
            };
            Ok(Utterance {
                utt_id: entry.utt_id,
                posteriors: read_posteriors(&resolved)?,
                ground_truth: entry.ground_truth_word_ids,
            })
        })
        .collect()
}
