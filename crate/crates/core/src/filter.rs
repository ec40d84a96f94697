//! Two-stage contextual word filter.
//!
//! Stage one scores every candidate with the posterior sum confidence (PSC):
//! the mean over the pronunciation of each phone's maximum posterior anywhere
//! in the sliding window. It ignores phone order and eliminates most of the
//! list cheaply. Stage two scores the survivors with the sequence order
//! confidence (SOC): the best mean posterior over a strictly increasing
//! frame-per-phone alignment, computed by dynamic programming. A word passes
//! a stage when its score is `>=` the stage threshold.
//!
//! [`FilterSession`] drives both stages over a sliding window of streaming
//! chunks, re-filtering on every pushed chunk.

use std::collections::BTreeMap;
use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::PosteriorMatrix;
use crate::types::{AccumulationPolicy, ContextualWord, FilterConfig, PhoneId, WordId, WordList};

/// Minimum words per rayon work unit when scoring a list in parallel.
const PAR_CHUNK: usize = 256;

/// A T x F slice of concatenated chunk posteriors: the current sliding
/// window. Borrowed, cheap to copy, and safe to score from many threads.
#[derive(Debug, Clone, Copy)]
pub struct WindowView<'a> {
    data: &'a [f64],
    num_phones: usize,
}

impl<'a> WindowView<'a> {
    pub fn new(data: &'a [f64], num_phones: usize) -> Result<Self> {
        if num_phones == 0 {
            return Err(Error::Shape {
                detail: "window needs at least one phone class".into(),
            });
        }
        if !data.len().is_multiple_of(num_phones) {
            return Err(Error::Shape {
                detail: format!(
                    "window buffer of {} values is not a multiple of {num_phones}",
                    data.len()
                ),
            });
        }
        Ok(WindowView { data, num_phones })
    }

    pub fn frames(&self) -> usize {
        self.data.len() / self.num_phones
    }

    pub fn num_phones(&self) -> usize {
        self.num_phones
    }

    #[inline]
    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.num_phones..(t + 1) * self.num_phones]
    }

    #[inline]
    pub fn prob(&self, t: usize, phone: PhoneId) -> f64 {
        self.data[t * self.num_phones + phone.index()]
    }
}

fn check_phones(window: &WindowView<'_>, phones: &[PhoneId]) -> Result<()> {
    if phones.is_empty() {
        return Err(Error::EmptyPhoneSequence);
    }
    for &phone in phones {
        if phone.index() >= window.num_phones() {
            return Err(Error::PhoneOutOfRange {
                phone: phone.0,
                inventory: window.num_phones(),
            });
        }
    }
    Ok(())
}

/// Column maxima for the whole window: `maxima[f] = max_t p[t, f]`.
/// Zeros when the window has no frames.
fn column_maxima(window: &WindowView<'_>) -> Vec<f64> {
    let mut maxima = vec![0.0f64; window.num_phones()];
    for t in 0..window.frames() {
        for (best, &p) in maxima.iter_mut().zip(window.row(t)) {
            if p > *best {
                *best = p;
            }
        }
    }
    maxima
}

/// Sums per-phone column maxima in ascending phone-id order and divides by
/// the sequence length. The canonical summation order makes the score
/// bit-exactly invariant under permutations of `phones`. Stack-sorted for
/// typical pronunciation lengths; this is the stage-one hot path.
fn psc_from_maxima(maxima: &[f64], phones: &[PhoneId]) -> f64 {
    const STACK: usize = 16;
    let mut buf = [PhoneId(0); STACK];
    let ordered: &[PhoneId] = if phones.len() <= STACK {
        let slot = &mut buf[..phones.len()];
        slot.copy_from_slice(phones);
        slot.sort_unstable();
        slot
    } else {
        return psc_from_maxima_long(maxima, phones);
    };
    let mut sum = 0.0;
    for phone in ordered {
        sum += maxima[phone.index()];
    }
    sum / phones.len() as f64
}

#[cold]
fn psc_from_maxima_long(maxima: &[f64], phones: &[PhoneId]) -> f64 {
    let mut ordered: Vec<PhoneId> = phones.to_vec();
    ordered.sort_unstable();
    let mut sum = 0.0;
    for phone in ordered {
        sum += maxima[phone.index()];
    }
    sum / phones.len() as f64
}

/// Posterior sum confidence of a phone sequence over a window.
///
/// Returns `(sum_i max_t p[t, phones[i]]) / len(phones)`, or 0 for an empty
/// window. Order-insensitive.
pub fn psc_score(window: &WindowView<'_>, phones: &[PhoneId]) -> Result<f64> {
    check_phones(window, phones)?;
    if window.frames() == 0 {
        return Ok(0.0);
    }
    Ok(psc_from_maxima(&column_maxima(window), phones))
}

/// Sequence order confidence of a phone sequence over a window.
///
/// Equals the maximum over strictly increasing frame selections
/// t_0 < t_1 < ... of the mean matched posterior, computed by dynamic
/// programming over (phone, frame) cells; 0 when the sequence is longer than
/// the window (no valid selection exists).
pub fn soc_score(window: &WindowView<'_>, phones: &[PhoneId]) -> Result<f64> {
    check_phones(window, phones)?;
    let frames = window.frames();
    let len = phones.len();
    if len > frames {
        return Ok(0.0);
    }

    // Row i holds, for each frame j >= i, the best sum matching
    // phones[0..=i] to frames 0..=j. Cells with j < i have no valid
    // alignment and are never read.
    let mut prev = vec![0.0f64; frames];
    let mut running = f64::NEG_INFINITY;
    for (j, cell) in prev.iter_mut().enumerate() {
        let p = window.prob(j, phones[0]);
        if p > running {
            running = p;
        }
        *cell = running;
    }

    let mut cur = vec![0.0f64; frames];
    for (i, &phone) in phones.iter().enumerate().skip(1) {
        for j in i..frames {
            let extend = prev[j - 1] + window.prob(j, phone);
            cur[j] = if j == i {
                extend
            } else {
                extend.max(cur[j - 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }

    Ok(prev[frames - 1] / len as f64)
}

/// Which scorer [`score_word`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scorer {
    Psc,
    Soc,
}

/// Scores a word as the maximum of the scorer over its pronunciations.
pub fn score_word(window: &WindowView<'_>, word: &ContextualWord, scorer: Scorer) -> Result<f64> {
    let mut best = 0.0f64;
    for pron in word.pronunciations() {
        let score = match scorer {
            Scorer::Psc => psc_score(window, pron)?,
            Scorer::Soc => soc_score(window, pron)?,
        };
        if score > best {
            best = score;
        }
    }
    Ok(best)
}

/// A word that survived filtering, with its stage scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredWord {
    pub word_id: WordId,
    pub psc: f64,
    /// Absent if the word was eliminated at stage one; always present on
    /// words returned by [`filter_window`].
    pub soc: Option<f64>,
}

fn sort_survivors(survivors: &mut [ScoredWord]) {
    survivors.sort_by(|a, b| {
        let sa = a.soc.unwrap_or(0.0);
        let sb = b.soc.unwrap_or(0.0);
        sb.total_cmp(&sa).then(a.word_id.cmp(&b.word_id))
    });
}

/// Runs both filter stages over one window.
///
/// Stage one keeps words with PSC >= `psc_threshold`; stage two computes SOC
/// only for those and keeps words with SOC >= `soc_threshold`. Words whose
/// every pronunciation is longer than the window have no valid alignment and
/// are excluded even at threshold 0. Output is sorted by descending SOC,
/// ties by ascending word id.
pub fn filter_window(
    window: &WindowView<'_>,
    list: &WordList,
    config: &FilterConfig,
) -> Result<Vec<ScoredWord>> {
    let maxima = column_maxima(window);
    let frames = window.frames();

    let mut survivors: Vec<ScoredWord> = list
        .words()
        .par_iter()
        .with_min_len(PAR_CHUNK)
        .map(|word| -> Result<Option<ScoredWord>> {
            if word.min_pronunciation_len() > frames {
                return Ok(None);
            }
            let mut psc = 0.0f64;
            for pron in word.pronunciations() {
                check_phones(window, pron)?;
                let s = psc_from_maxima(&maxima, pron);
                if s > psc {
                    psc = s;
                }
            }
            if psc < config.psc_threshold {
                return Ok(None);
            }
            let soc = score_word(window, word, Scorer::Soc)?;
            if soc < config.soc_threshold {
                return Ok(None);
            }
            Ok(Some(ScoredWord {
                word_id: word.word_id,
                psc,
                soc: Some(soc),
            }))
        })
        .filter_map(Result::transpose)
        .collect::<Result<_>>()?;

    sort_survivors(&mut survivors);
    Ok(survivors)
}

/// Per-utterance streaming state: a ring buffer of recent chunks plus the
/// survivors accumulated so far.
///
/// Sessions are single-writer: [`push_chunk`](FilterSession::push_chunk)
/// calls must be serialized per session. Distinct sessions are independent.
#[derive(Debug)]
pub struct FilterSession<'a> {
    config: FilterConfig,
    list: &'a WordList,
    ring: VecDeque<PosteriorMatrix>,
    window_buf: Vec<f64>,
    survivors: BTreeMap<WordId, (f64, f64)>,
    history: Vec<(usize, Vec<ScoredWord>)>,
}

impl<'a> FilterSession<'a> {
    /// Creates an empty session. Fails if the config is invalid or a
    /// configured blank phone appears in any pronunciation.
    pub fn new(config: FilterConfig, list: &'a WordList) -> Result<Self> {
        config.validate()?;
        if let Some(blank) = config.blank_id {
            if blank.index() >= list.inventory_size() {
                return Err(Error::PhoneOutOfRange {
                    phone: blank.0,
                    inventory: list.inventory_size(),
                });
            }
            list.ensure_no_blank(blank)?;
        }
        Ok(FilterSession {
            config,
            list,
            ring: VecDeque::new(),
            window_buf: Vec::new(),
            survivors: BTreeMap::new(),
            history: Vec::new(),
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    /// Frames currently buffered across all chunks in the window.
    pub fn window_frames(&self) -> usize {
        self.ring.iter().map(PosteriorMatrix::frames).sum()
    }

    pub fn chunks_buffered(&self) -> usize {
        self.ring.len()
    }

    /// Per-window survivor lists in push order, keyed by window index.
    pub fn history(&self) -> &[(usize, Vec<ScoredWord>)] {
        &self.history
    }

    /// Slides the window forward by one chunk and re-filters.
    ///
    /// The chunk is appended (evicting the oldest chunk once the buffer holds
    /// `window_chunks`), the filter runs over the buffered window, and the
    /// survivors are merged into the session per the accumulation policy.
    /// Returns this window's survivors.
    pub fn push_chunk(&mut self, chunk: PosteriorMatrix) -> Result<Vec<ScoredWord>> {
        if chunk.num_phones() != self.list.inventory_size() {
            return Err(Error::InventoryMismatch {
                expected: self.list.inventory_size(),
                got: chunk.num_phones(),
            });
        }
        let chunk = match (self.config.drop_blank_frames, self.config.blank_id) {
            (true, Some(blank)) => {
                chunk.without_blank_frames(blank, self.config.blank_dominance_threshold)?
            }
            _ => chunk,
        };

        self.ring.push_back(chunk);
        if self.ring.len() > self.config.window_chunks {
            self.ring.pop_front();
        }

        self.window_buf.clear();
        for buffered in &self.ring {
            self.window_buf.extend_from_slice(buffered.as_flat());
        }
        let window = WindowView::new(&self.window_buf, self.list.inventory_size())?;
        let survivors = filter_window(&window, self.list, &self.config)?;

        match self.config.accumulation {
            AccumulationPolicy::UnionOverWindows => {
                for sw in &survivors {
                    let soc = sw.soc.unwrap_or(0.0);
                    self.survivors
                        .entry(sw.word_id)
                        .and_modify(|(best_psc, best_soc)| {
                            *best_psc = best_psc.max(sw.psc);
                            *best_soc = best_soc.max(soc);
                        })
                        .or_insert((sw.psc, soc));
                }
            }
            AccumulationPolicy::FinalWindowOnly => {
                self.survivors.clear();
                for sw in &survivors {
                    self.survivors
                        .insert(sw.word_id, (sw.psc, sw.soc.unwrap_or(0.0)));
                }
            }
        }

        self.history.push((self.history.len(), survivors.clone()));
        Ok(survivors)
    }

    /// The filtered word list for the utterance so far.
    ///
    /// Under `UnionOverWindows` each word carries the maximum PSC and SOC it
    /// achieved in any window; under `FinalWindowOnly` this is the last
    /// window's survivors. Empty when no chunk was pushed.
    pub fn finalize(&self) -> Vec<ScoredWord> {
        let mut out: Vec<ScoredWord> = self
            .survivors
            .iter()
            .map(|(&word_id, &(psc, soc))| ScoredWord {
                word_id,
                psc,
                soc: Some(soc),
            })
            .collect();
        sort_survivors(&mut out);
        out
    }
}
