//! Streaming contextual word filtering over phone posteriors.
//!
//! An ASR front-end that biases toward rare entities (contacts, song names)
//! needs a compact, accurate contextual word list. This crate consumes the
//! phone-posterior chunks a streaming acoustic model emits, maintains a
//! sliding window over them, and reduces a large predefined word list with a
//! two-stage filter: a cheap order-insensitive posterior sum confidence
//! (PSC) pass, then a dynamic-programming sequence order confidence (SOC)
//! pass over the survivors.
//!
//! Alongside the engine ([`filter`]) there are brute-force reference scorers
//! ([`oracle`]), a deterministic synthetic corpus generator ([`synth`]),
//! recall/list-size evaluation and threshold sweeps ([`eval`]), a scaling
//! benchmark ([`bench`]), the cross-attention bias kernel the filtered list
//! feeds ([`attention`]), and readers/writers for the on-disk formats
//! ([`io`]).

pub mod attention;
pub mod bench;
pub mod error;
pub mod eval;
pub mod filter;
pub mod io;
pub mod oracle;
pub mod posterior;
pub mod synth;
pub mod types;

pub use error::{Error, ErrorKind, Result};
pub use filter::{filter_window, psc_score, soc_score, FilterSession, ScoredWord, WindowView};
pub use posterior::{PosteriorMatrix, ValidationMode};
pub use types::{
    AccumulationPolicy, ContextualWord, FilterConfig, PhoneId, SymbolTable, WordId, WordList,
};
