//! Deterministic synthetic corpus generator.
//!
//! Embeds known word pronunciations into posterior matrices among noise and
//! a large distractor list, so recall and list-size metrics have an exact
//! ground truth at desk scale.
//!
//! Row model, all rows valid distributions:
//! - background frame: `eps * R + (1 - eps) * U`, where `R` is a
//!   renormalized-uniform random distribution drawn per frame, `U` the flat
//!   distribution `1/F`, and `eps` the noise mass;
//! - planted frame for phone u: `peak * delta_u + eps * R +
//!   (1 - peak - eps) * U`. The feasibility bound `peak + eps <= 1` is what
//!   keeps these mixture weights convex.
//!
//! With `peak = 1` (which forces `eps = 0`) planted frames are exact
//! one-hot rows, so every planted word scores a sequence order confidence of
//! 1 over any window containing it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::Utterance;
use crate::io;
use crate::posterior::PosteriorMatrix;
use crate::types::{ContextualWord, PhoneId, SymbolTable, WordList};

const FRAME_SHIFT_MS: f32 = 10.0;
/// Resample attempts before declaring the pronunciation space too small.
const MAX_RESAMPLE: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub seed: u64,
    pub num_utterances: usize,
    pub utterance_chunks: usize,
    pub chunk_frames: usize,
    /// Phone inventory size F.
    pub phone_inventory_size: usize,
    pub target_words_per_utt: usize,
    /// Posterior mass planted on the true phone at its frames, in (0, 1].
    pub peak_prob: f64,
    /// Random noise mass per frame, in [0, 1); `peak_prob + noise_epsilon`
    /// may not exceed 1.
    pub noise_epsilon: f64,
    pub frames_per_phone: usize,
    pub distractor_list_size: usize,
    /// Inclusive pronunciation length range for targets and distractors.
    pub pronunciation_length: (usize, usize),
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            seed: 0,
            num_utterances: 10,
            utterance_chunks: 4,
            chunk_frames: 53,
            phone_inventory_size: 64,
            target_words_per_utt: 2,
            peak_prob: 0.8,
            noise_epsilon: 0.15,
            frames_per_phone: 2,
            distractor_list_size: 200,
            pronunciation_length: (3, 6),
        }
    }
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: String| Err(Error::InvalidScenario { detail });
        if self.num_utterances == 0 {
            return bad("num_utterances must be >= 1".into());
        }
        if self.utterance_chunks == 0 || self.chunk_frames == 0 {
            return bad("utterance_chunks and chunk_frames must be >= 1".into());
        }
        if self.phone_inventory_size == 0 {
            return bad("phone_inventory_size must be >= 1".into());
        }
        if self.frames_per_phone == 0 {
            return bad("frames_per_phone must be >= 1".into());
        }
        if self.distractor_list_size == 0 {
            return bad("distractor_list_size must be >= 1".into());
        }
        if !(self.peak_prob > 0.0 && self.peak_prob <= 1.0) {
            return bad(format!(
                "peak_prob must be in (0, 1], got {}",
                self.peak_prob
            ));
        }
        if !(0.0..1.0).contains(&self.noise_epsilon) {
            return bad(format!(
                "noise_epsilon must be in [0, 1), got {}",
                self.noise_epsilon
            ));
        }
        if self.peak_prob + self.noise_epsilon > 1.0 {
            return bad(format!(
                "peak_prob + noise_epsilon = {} exceeds 1",
                self.peak_prob + self.noise_epsilon
            ));
        }
        let (lo, hi) = self.pronunciation_length;
        if lo == 0 || lo > hi {
            return bad(format!(
                "pronunciation_length range ({lo}, {hi}) is invalid"
            ));
        }
        let utt_frames = self.utterance_chunks * self.chunk_frames;
        let worst_case = self.target_words_per_utt * hi * self.frames_per_phone;
        if worst_case > utt_frames {
            return bad(format!(
                "targets do not fit: up to {worst_case} planted frames in a \
                 {utt_frames}-frame utterance"
            ));
        }
        Ok(())
    }

    fn utterance_frames(&self) -> usize {
        self.utterance_chunks * self.chunk_frames
    }
}

/// A generated word list plus the utterances that plant some of its words.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub word_list: WordList,
    pub utterances: Vec<Utterance>,
}

fn sample_pronunciation(rng: &mut ChaCha8Rng, spec: &ScenarioSpec) -> Vec<PhoneId> {
    let (lo, hi) = spec.pronunciation_length;
    let len = rng.gen_range(lo..=hi);
    (0..len)
        .map(|_| PhoneId(rng.gen_range(0..spec.phone_inventory_size as u32)))
        .collect()
}

/// Fills `row` with `eps * R + (1 - eps) * U` plus `peak` on `planted`.
fn fill_row(rng: &mut ChaCha8Rng, row: &mut [f64], eps: f64, planted: Option<(PhoneId, f64)>) {
    let f = row.len();
    let remainder = 1.0 - eps - planted.map_or(0.0, |(_, peak)| peak);
    let uniform = remainder / f as f64;

    let mut total = 0.0;
    for cell in row.iter_mut() {
        let draw: f64 = rng.gen();
        *cell = draw;
        total += draw;
    }
    if total <= 0.0 {
        // All-zero draws; fall back to a flat random component.
        row.fill(1.0);
        total = f as f64;
    }
    for cell in row.iter_mut() {
        *cell = eps * (*cell / total) + uniform;
    }
    if let Some((phone, peak)) = planted {
        row[phone.index()] += peak;
    }
}

fn generate_word_list(spec: &ScenarioSpec) -> Result<WordList> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(0);

    let symbols = SymbolTable::new((0..spec.phone_inventory_size).map(|i| format!("p{i}")))?;

    let num_targets = spec.num_utterances * spec.target_words_per_utt;
    let mut words = Vec::with_capacity(num_targets + spec.distractor_list_size);
    let mut target_prons: HashSet<Vec<PhoneId>> = HashSet::new();
    for i in 0..num_targets {
        let pron = sample_pronunciation(&mut rng, spec);
        target_prons.insert(pron.clone());
        words.push(ContextualWord::new(
            i as u64,
            format!("t{i:05}"),
            vec![pron],
        )?);
    }

    // Distractors may collide with target pronunciations partially (that is
    // the interesting confusable case) but never exactly, so ground truth
    // stays unambiguous.
    for j in 0..spec.distractor_list_size {
        let mut pron = sample_pronunciation(&mut rng, spec);
        let mut attempts = 0;
        while target_prons.contains(&pron) {
            attempts += 1;
            if attempts > MAX_RESAMPLE {
                return Err(Error::InvalidScenario {
                    detail: "pronunciation space too small to avoid target duplicates".into(),
                });
            }
            pron = sample_pronunciation(&mut rng, spec);
        }
        let id = (num_targets + j) as u64;
        words.push(ContextualWord::new(id, format!("d{j:05}"), vec![pron])?);
    }

    WordList::new(words, symbols)
}

fn generate_utterance(spec: &ScenarioSpec, word_list: &WordList, utt: usize) -> Result<Utterance> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1 + utt as u64);

    let frames = spec.utterance_frames();
    let f = spec.phone_inventory_size;

    let target_ids: Vec<u64> = (0..spec.target_words_per_utt)
        .map(|k| (utt * spec.target_words_per_utt + k) as u64)
        .collect();
    let prons: Vec<&[PhoneId]> = target_ids
        .iter()
        .map(|&id| {
            word_list
                .word(id)
                .expect("generated target exists")
                .pronunciations()[0]
                .as_slice()
        })
        .collect();

    // Non-overlapping placement: draw one cut per target in the free frame
    // budget, then lay spans out left to right.
    let span_total: usize = prons.iter().map(|p| p.len() * spec.frames_per_phone).sum();
    let free = frames - span_total;
    let mut cuts: Vec<usize> = (0..prons.len()).map(|_| rng.gen_range(0..=free)).collect();
    cuts.sort_unstable();

    let mut planted: Vec<Option<PhoneId>> = vec![None; frames];
    let mut laid = 0;
    for (pron, cut) in prons.iter().zip(cuts) {
        let start = cut + laid;
        for (i, &phone) in pron.iter().enumerate() {
            for df in 0..spec.frames_per_phone {
                planted[start + i * spec.frames_per_phone + df] = Some(phone);
            }
        }
        laid += pron.len() * spec.frames_per_phone;
    }

    let mut data = vec![0.0f64; frames * f];
    for (t, row) in data.chunks_mut(f).enumerate() {
        let slot = planted[t].map(|phone| (phone, spec.peak_prob));
        fill_row(&mut rng, row, spec.noise_epsilon, slot);
    }

    Ok(Utterance {
        utt_id: format!("utt_{utt:05}"),
        posteriors: PosteriorMatrix::from_flat(data, f, FRAME_SHIFT_MS)?,
        ground_truth: target_ids,
    })
}

/// Generates a corpus. Pure function of the spec: per-utterance RNG streams
/// are derived from the master seed, so output is identical regardless of
/// how the work is scheduled.
pub fn generate(spec: &ScenarioSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let word_list = generate_word_list(spec)?;
    let utterances: Vec<Utterance> = (0..spec.num_utterances)
        .into_par_iter()
        .map(|utt| generate_utterance(spec, &word_list, utt))
        .collect::<Result<_>>()?;
    Ok(SyntheticCorpus {
        word_list,
        utterances,
    })
}

/// Writes a corpus in the standard on-disk layout: `symbols.txt`,
/// `words.tsv`, `manifest.json` and one posterior file per utterance under
/// `posteriors/`.
pub fn write_corpus(dir: &Path, corpus: &SyntheticCorpus) -> Result<()> {
    let posterior_dir = dir.join("posteriors");
    std::fs::create_dir_all(&posterior_dir).map_err(|e| Error::io(&posterior_dir, e))?;

    io::write_symbol_table(&dir.join("symbols.txt"), corpus.word_list.symbols())?;
    io::write_word_list(&dir.join("words.tsv"), &corpus.word_list)?;

    let mut entries = Vec::with_capacity(corpus.utterances.len());
    for utt in &corpus.utterances {
        let rel = format!("posteriors/{}.phpo", utt.utt_id);
        io::write_posteriors(&dir.join(&rel), &utt.posteriors)?;
        entries.push(io::ManifestEntry {
            utt_id: utt.utt_id.clone(),
            posterior_path: rel,
            ground_truth_word_ids: utt.ground_truth.clone(),
        });
    }
    io::write_manifest(&dir.join("manifest.json"), &entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::soc_score;
    use crate::posterior::ValidationMode;

    fn small_spec() -> ScenarioSpec {
        ScenarioSpec {
            seed: 42,
            num_utterances: 3,
            utterance_chunks: 2,
            chunk_frames: 10,
            phone_inventory_size: 8,
            target_words_per_utt: 1,
            peak_prob: 0.8,
            noise_epsilon: 0.1,
            frames_per_phone: 1,
            distractor_list_size: 5,
            pronunciation_length: (2, 3),
        }
    }

    #[test]
    fn validate_catches_infeasible_specs() {
        let mut spec = small_spec();
        spec.peak_prob = 0.9;
        spec.noise_epsilon = 0.2;
        assert!(spec.validate().is_err());

        let mut spec = small_spec();
        spec.target_words_per_utt = 10;
        assert!(
            matches!(spec.validate(), Err(Error::InvalidScenario { detail }) if detail.contains("do not fit"))
        );

        let mut spec = small_spec();
        spec.pronunciation_length = (3, 2);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = small_spec();
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.utterances.len(), b.utterances.len());
        for (ua, ub) in a.utterances.iter().zip(&b.utterances) {
            assert_eq!(ua.posteriors, ub.posteriors);
            assert_eq!(ua.ground_truth, ub.ground_truth);
        }
        assert_eq!(
            io::format_word_list(&a.word_list),
            io::format_word_list(&b.word_list)
        );
    }

    #[test]
    fn rows_are_strictly_valid() {
        let corpus = generate(&small_spec()).unwrap();
        for utt in &corpus.utterances {
            utt.posteriors.validate(ValidationMode::Strict).unwrap();
        }
    }

    #[test]
    fn exact_peak_plants_perfect_soc() {
        let mut spec = small_spec();
        spec.peak_prob = 1.0;
        spec.noise_epsilon = 0.0;
        let corpus = generate(&spec).unwrap();
        for utt in &corpus.utterances {
            for &id in &utt.ground_truth {
                let pron = &corpus.word_list.word(id).unwrap().pronunciations()[0];
                let soc = soc_score(&utt.posteriors.view(), pron).unwrap();
                assert_eq!(soc, 1.0, "planted word {id} in {}", utt.utt_id);
            }
        }
    }

    #[test]
    fn zero_targets_means_empty_ground_truth() {
        let mut spec = small_spec();
        spec.target_words_per_utt = 0;
        let corpus = generate(&spec).unwrap();
        assert!(corpus.utterances.iter().all(|u| u.ground_truth.is_empty()));
        // List is distractors only.
        assert_eq!(corpus.word_list.len(), spec.distractor_list_size);
    }

    #[test]
    fn ground_truth_is_subset_of_list() {
        let corpus = generate(&small_spec()).unwrap();
        for utt in &corpus.utterances {
            for &id in &utt.ground_truth {
                assert!(corpus.word_list.contains(id));
            }
        }
    }

    #[test]
    fn written_corpus_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let corpus = generate(&small_spec()).unwrap();
        write_corpus(dir.path(), &corpus).unwrap();

        let symbols = io::read_symbol_table(&dir.path().join("symbols.txt")).unwrap();
        let list = io::read_word_list(&dir.path().join("words.tsv"), symbols).unwrap();
        assert_eq!(list.words(), corpus.word_list.words());

        let utts = io::load_manifest_utterances(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(utts.len(), corpus.utterances.len());
        // f32 storage: loaded probabilities match within rounding.
        for (loaded, orig) in utts.iter().zip(&corpus.utterances) {
            assert_eq!(loaded.utt_id, orig.utt_id);
            assert_eq!(loaded.ground_truth, orig.ground_truth);
            let flat_l = loaded.posteriors.as_flat();
            let flat_o = orig.posteriors.as_flat();
            assert_eq!(flat_l.len(), flat_o.len());
            for (a, b) in flat_l.iter().zip(flat_o) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }
}
