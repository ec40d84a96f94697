//! Corpus evaluation: entity recall rate (ERR) and average list size (ALS),
//! plus threshold sweeps.

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::FilterSession;
use crate::posterior::PosteriorMatrix;
use crate::types::{FilterConfig, WordId, WordList};

/// One evaluation unit: an utterance's posteriors and the contextual words
/// actually spoken in it.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub utt_id: String,
    pub posteriors: PosteriorMatrix,
    pub ground_truth: Vec<WordId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtteranceDetail {
    pub utt_id: String,
    pub ground_truth_size: usize,
    pub recalled: usize,
    pub final_list_size: usize,
}

/// Wall-clock statistics; excluded from determinism comparisons.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalTiming {
    pub wall_ms: f64,
    pub window_mean_ms: f64,
    pub window_p95_ms: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: FilterConfig,
    pub word_list_size: usize,
    /// 100 x recalled / ground-truth entities, over utterances with
    /// non-empty ground truth; 100 when the corpus has no entities at all.
    pub err_percent: f64,
    /// Mean final list size over all utterances.
    pub als: f64,
    pub utterances: Vec<UtteranceDetail>,
    pub timing: EvalTiming,
}

/// The per-utterance output of a filter run, as emitted by the `filter`
/// command: final surviving words with their scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredWord {
    pub word_id: WordId,
    pub surface: String,
    pub soc: f64,
}

/// Filter results document: utterance id to surviving words.
pub type FilterResults = BTreeMap<String, Vec<FilteredWord>>;

fn aggregate(details: &[UtteranceDetail]) -> (f64, f64) {
    let truth: usize = details.iter().map(|d| d.ground_truth_size).sum();
    let recalled: usize = details.iter().map(|d| d.recalled).sum();
    let err_percent = if truth == 0 {
        100.0
    } else {
        100.0 * recalled as f64 / truth as f64
    };
    let als = if details.is_empty() {
        0.0
    } else {
        details
            .iter()
            .map(|d| d.final_list_size as f64)
            .sum::<f64>()
            / details.len() as f64
    };
    (err_percent, als)
}

fn percentile_ms(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn run_utterance(
    utt: &Utterance,
    list: &WordList,
    config: &FilterConfig,
) -> Result<(UtteranceDetail, Vec<crate::filter::ScoredWord>, Vec<f64>)> {
    for &id in &utt.ground_truth {
        if !list.contains(id) {
            return Err(Error::UnknownGroundTruth {
                utt_id: utt.utt_id.clone(),
                word_id: id,
            });
        }
    }

    let mut session = FilterSession::new(config.clone(), list)?;
    let mut window_ms = Vec::new();
    for chunk in utt.posteriors.chunks(config.chunk_frames) {
        let start = Instant::now();
        session.push_chunk(chunk)?;
        window_ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    let survivors = session.finalize();

    let surviving_ids: HashSet<WordId> = survivors.iter().map(|s| s.word_id).collect();
    let recalled = utt
        .ground_truth
        .iter()
        .filter(|id| surviving_ids.contains(id))
        .count();
    let detail = UtteranceDetail {
        utt_id: utt.utt_id.clone(),
        ground_truth_size: utt.ground_truth.len(),
        recalled,
        final_list_size: survivors.len(),
    };
    Ok((detail, survivors, window_ms))
}

/// Runs a filter session over every utterance and aggregates ERR and ALS.
/// Utterances are processed in parallel on the ambient rayon pool; the
/// report content (timing aside) is independent of scheduling.
pub fn evaluate(
    utterances: &[Utterance],
    list: &WordList,
    config: &FilterConfig,
) -> Result<EvalReport> {
    filter_corpus(utterances, list, config).map(|(report, _)| report)
}

/// Runs the filter over every utterance, returning both the evaluation
/// report and the per-utterance final lists (the `filter` command's output).
pub fn filter_corpus(
    utterances: &[Utterance],
    list: &WordList,
    config: &FilterConfig,
) -> Result<(EvalReport, FilterResults)> {
    let wall = Instant::now();
    let per_utt: Vec<(UtteranceDetail, Vec<crate::filter::ScoredWord>, Vec<f64>)> = utterances
        .par_iter()
        .map(|utt| run_utterance(utt, list, config))
        .collect::<Result<_>>()?;

    let mut details = Vec::with_capacity(per_utt.len());
    let mut results = FilterResults::new();
    let mut window_ms = Vec::new();
    for ((detail, survivors, times), utt) in per_utt.into_iter().zip(utterances) {
        let words = survivors
            .into_iter()
            .map(|s| FilteredWord {
                word_id: s.word_id,
                surface: list
                    .word(s.word_id)
                    .map_or_else(String::new, |w| w.surface.clone()),
                soc: s.soc.unwrap_or(0.0),
            })
            .collect();
        results.insert(utt.utt_id.clone(), words);
        details.push(detail);
        window_ms.extend(times);
    }

    let (err_percent, als) = aggregate(&details);
    window_ms.sort_by(f64::total_cmp);
    let timing = EvalTiming {
        wall_ms: wall.elapsed().as_secs_f64() * 1e3,
        window_mean_ms: if window_ms.is_empty() {
            0.0
        } else {
            window_ms.iter().sum::<f64>() / window_ms.len() as f64
        },
        window_p95_ms: percentile_ms(&window_ms, 0.95),
        windows: window_ms.len(),
    };
    let report = EvalReport {
        config: config.clone(),
        word_list_size: list.len(),
        err_percent,
        als,
        utterances: details,
        timing,
    };
    Ok((report, results))
}

/// Scores precomputed filter results against ground truth, without
/// re-running any session. ERR and ALS match a direct [`evaluate`] of the
/// same corpus and config.
pub fn evaluate_results(
    ground_truth: &[(String, Vec<WordId>)],
    results: &FilterResults,
    list: &WordList,
    config: &FilterConfig,
) -> Result<EvalReport> {
    let details: Vec<UtteranceDetail> = ground_truth
        .iter()
        .map(|(utt_id, truth)| {
            let words = results.get(utt_id).ok_or_else(|| Error::ManifestFormat {
                detail: format!("filter results missing utterance '{utt_id}'"),
            })?;
            let ids: HashSet<WordId> = words.iter().map(|w| w.word_id).collect();
            Ok(UtteranceDetail {
                utt_id: utt_id.clone(),
                ground_truth_size: truth.len(),
                recalled: truth.iter().filter(|id| ids.contains(id)).count(),
                final_list_size: words.len(),
            })
        })
        .collect::<Result<_>>()?;
    let (err_percent, als) = aggregate(&details);
    Ok(EvalReport {
        config: config.clone(),
        word_list_size: list.len(),
        err_percent,
        als,
        utterances: details,
        timing: EvalTiming::default(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub psc_threshold: f64,
    pub soc_threshold: f64,
    pub err_percent: f64,
    pub als: f64,
}

/// One [`evaluate`] per grid point over the cartesian product of the two
/// threshold axes. Raising either threshold never raises ERR or ALS.
pub fn sweep(
    utterances: &[Utterance],
    list: &WordList,
    base: &FilterConfig,
    psc_grid: &[f64],
    soc_grid: &[f64],
) -> Result<Vec<SweepRow>> {
    if psc_grid.is_empty() || soc_grid.is_empty() {
        return Err(Error::InvalidConfig {
            detail: "sweep grid must be non-empty".into(),
        });
    }
    let mut rows = Vec::with_capacity(psc_grid.len() * soc_grid.len());
    for &psc_threshold in psc_grid {
        for &soc_threshold in soc_grid {
            let config = FilterConfig {
                psc_threshold,
                soc_threshold,
                ..base.clone()
            };
            let report = evaluate(utterances, list, &config)?;
            rows.push(SweepRow {
                psc_threshold,
                soc_threshold,
                err_percent: report.err_percent,
                als: report.als,
            });
        }
    }
    Ok(rows)
}

/// Renders a sweep table as CSV.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("psc_threshold,soc_threshold,err_percent,als\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.psc_threshold, row.soc_threshold, row.err_percent, row.als
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, ScenarioSpec};

    fn planted_spec() -> ScenarioSpec {
        ScenarioSpec {
            seed: 42,
            num_utterances: 4,
            utterance_chunks: 2,
            chunk_frames: 12,
            phone_inventory_size: 16,
            target_words_per_utt: 1,
            peak_prob: 1.0,
            noise_epsilon: 0.0,
            frames_per_phone: 1,
            distractor_list_size: 30,
            pronunciation_length: (2, 3),
        }
    }

    fn config(psc: f64, soc: f64) -> FilterConfig {
        FilterConfig {
            psc_threshold: psc,
            soc_threshold: soc,
            chunk_frames: 12,
            ..FilterConfig::default()
        }
    }

    #[test]
    fn perfect_plant_recalls_everything() {
        let corpus = generate(&planted_spec()).unwrap();
        let report = evaluate(&corpus.utterances, &corpus.word_list, &config(0.9, 0.9)).unwrap();
        assert_eq!(report.err_percent, 100.0);
        assert!(report.als >= 1.0);
        assert_eq!(report.utterances.len(), 4);
        assert!(report.timing.windows > 0);
    }

    #[test]
    fn unreachable_thresholds_empty_the_list() {
        let corpus = generate(&planted_spec()).unwrap();
        let report = evaluate(&corpus.utterances, &corpus.word_list, &config(1.01, 1.01)).unwrap();
        assert_eq!(report.err_percent, 0.0);
        assert_eq!(report.als, 0.0);
    }

    /// When finalize provably returns exactly the ground truth for every
    /// utterance, ERR is 100 and ALS is the mean ground-truth size.
    #[test]
    fn exact_recall_reports_mean_ground_truth_size() {
        use crate::posterior::PosteriorMatrix;
        use crate::types::{ContextualWord, PhoneId, SymbolTable, WordList};

        let symbols = SymbolTable::new(["p0", "p1", "p2", "p3"]).unwrap();
        let target = ContextualWord::new(1, "a", vec![vec![PhoneId(0), PhoneId(1)]]).unwrap();
        let distractor = ContextualWord::new(2, "b", vec![vec![PhoneId(2), PhoneId(3)]]).unwrap();
        let list = WordList::new(vec![target, distractor], symbols).unwrap();

        let posteriors =
            PosteriorMatrix::from_rows(&[vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0]], 10.0)
                .unwrap();
        let utts = vec![Utterance {
            utt_id: "u0".into(),
            posteriors,
            ground_truth: vec![1],
        }];

        let report = evaluate(&utts, &list, &config(0.5, 0.5)).unwrap();
        assert_eq!(report.err_percent, 100.0);
        assert_eq!(report.als, 1.0);
        assert_eq!(report.utterances[0].recalled, 1);
        assert_eq!(report.utterances[0].final_list_size, 1);
    }

    #[test]
    fn unknown_ground_truth_is_rejected() {
        let corpus = generate(&planted_spec()).unwrap();
        let mut utts = corpus.utterances.clone();
        utts[0].ground_truth.push(9999);
        assert!(matches!(
            evaluate(&utts, &corpus.word_list, &config(0.5, 0.5)),
            Err(Error::UnknownGroundTruth { word_id: 9999, .. })
        ));
    }

    #[test]
    fn evaluate_results_matches_direct_evaluate() {
        let corpus = generate(&planted_spec()).unwrap();
        let cfg = config(0.9, 0.9);
        let (direct, results) = filter_corpus(&corpus.utterances, &corpus.word_list, &cfg).unwrap();
        let truth: Vec<(String, Vec<WordId>)> = corpus
            .utterances
            .iter()
            .map(|u| (u.utt_id.clone(), u.ground_truth.clone()))
            .collect();
        let indirect = evaluate_results(&truth, &results, &corpus.word_list, &cfg).unwrap();
        assert_eq!(direct.err_percent, indirect.err_percent);
        assert_eq!(direct.als, indirect.als);
        assert_eq!(direct.utterances, indirect.utterances);
    }

    #[test]
    fn sweep_shape_and_monotonicity() {
        let mut spec = planted_spec();
        spec.peak_prob = 0.7;
        spec.noise_epsilon = 0.2;
        let corpus = generate(&spec).unwrap();
        let grid = [0.0, 0.3, 0.6, 0.9];
        let rows = sweep(
            &corpus.utterances,
            &corpus.word_list,
            &config(0.5, 0.5),
            &grid,
            &grid,
        )
        .unwrap();
        assert_eq!(rows.len(), 16);

        let lookup = |p: f64, s: f64| {
            rows.iter()
                .find(|r| r.psc_threshold == p && r.soc_threshold == s)
                .unwrap()
        };
        for &p in &grid {
            for &s in &grid {
                let here = lookup(p, s);
                for &p2 in grid.iter().filter(|&&x| x >= p) {
                    let there = lookup(p2, s);
                    assert!(there.err_percent <= here.err_percent + 1e-12);
                    assert!(there.als <= here.als + 1e-12);
                }
                for &s2 in grid.iter().filter(|&&x| x >= s) {
                    let there = lookup(p, s2);
                    assert!(there.err_percent <= here.err_percent + 1e-12);
                    assert!(there.als <= here.als + 1e-12);
                }
            }
        }
    }

    #[test]
    fn sweep_rejects_empty_grid() {
        let corpus = generate(&planted_spec()).unwrap();
        assert!(sweep(
            &corpus.utterances,
            &corpus.word_list,
            &config(0.5, 0.5),
            &[],
            &[0.5]
        )
        .is_err());
    }

    #[test]
    fn csv_rendering() {
        let rows = vec![SweepRow {
            psc_threshold: 0.5,
            soc_threshold: 0.25,
            err_percent: 100.0,
            als: 3.5,
        }];
        assert_eq!(
            sweep_to_csv(&rows),
            "psc_threshold,soc_threshold,err_percent,als\n0.5,0.25,100,3.5\n"
        );
    }
}
