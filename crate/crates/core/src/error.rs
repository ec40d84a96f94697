//! Error types shared across the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class, used by callers (e.g. the CLI) to map errors to
/// exit codes without matching every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Underlying I/O failure.
    Io,
    /// A file or document is structurally malformed.
    Format,
    /// Inputs are well-formed but semantically invalid.
    Validation,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {detail}")]
    PosteriorFormat { path: PathBuf, detail: String },

    #[error("symbol table line {line}: {detail}")]
    SymbolTableFormat { line: usize, detail: String },

    #[error("word list line {line}: unknown phone symbol '{symbol}'")]
    UnknownSymbol { line: usize, symbol: String },

    #[error("word list line {line}: duplicate word id {word_id}")]
    DuplicateWordId { line: usize, word_id: u64 },

    #[error("word list line {line}: empty pronunciation")]
    EmptyPronunciation { line: usize },

    #[error("word list line {line}: {detail}")]
    WordListFormat { line: usize, detail: String },

    #[error("manifest: {detail}")]
    ManifestFormat { detail: String },

    #[error("posterior row {row}: entry {value} at column {col} outside [0, 1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },

    #[error("posterior row {row}: sum {sum} not within 1e-3 of 1")]
    RowNotStochastic { row: usize, sum: f64 },

    #[error("phone id {phone} outside inventory of size {inventory}")]
    PhoneOutOfRange { phone: u32, inventory: usize },

    #[error("posterior has {got} phone classes, word list expects {expected}")]
    InventoryMismatch { expected: usize, got: usize },

    #[error("empty phone sequence")]
    EmptyPhoneSequence,

    #[error("word id {word_id}: pronunciation contains blank phone {blank}")]
    BlankInPronunciation { word_id: u64, blank: u32 },

    #[error("ground truth of utterance '{utt_id}' references unknown word id {word_id}")]
    UnknownGroundTruth { utt_id: String, word_id: u64 },

    #[error("invalid config: {detail}")]
    InvalidConfig { detail: String },

    #[error("invalid scenario: {detail}")]
    InvalidScenario { detail: String },

    #[error("oracle guard exceeded: {detail}")]
    OracleGuard { detail: String },

    #[error("matrix shape: {detail}")]
    Shape { detail: String },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::PosteriorFormat { .. }
            | Error::SymbolTableFormat { .. }
            | Error::UnknownSymbol { .. }
            | Error::DuplicateWordId { .. }
            | Error::EmptyPronunciation { .. }
            | Error::WordListFormat { .. }
            | Error::ManifestFormat { .. } => ErrorKind::Format,
            Error::EntryOutOfRange { .. }
            | Error::RowNotStochastic { .. }
            | Error::PhoneOutOfRange { .. }
            | Error::InventoryMismatch { .. }
            | Error::EmptyPhoneSequence
            | Error::BlankInPronunciation { .. }
            | Error::UnknownGroundTruth { .. }
            | Error::InvalidConfig { .. }
            | Error::InvalidScenario { .. }
            | Error::OracleGuard { .. }
            | Error::Shape { .. } => ErrorKind::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
