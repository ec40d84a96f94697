//! Report rendering and output sinks.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use ctxfilter::bench::ScalingReport;
use ctxfilter::eval::{EvalReport, FilterResults, SweepRow};
use ctxfilter::{Error, FilterConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
    Csv,
}

/// Writes rendered output to a file or stdout.
pub struct Sink<'a> {
    out: Option<&'a Path>,
}

impl<'a> Sink<'a> {
    pub fn new(out: Option<&'a Path>) -> Self {
        Sink { out }
    }

    fn path_for_errors(&self) -> PathBuf {
        self.out
            .map_or_else(|| PathBuf::from("<stdout>"), Path::to_path_buf)
    }

    pub fn write_text(&self, text: &str) -> Result<(), Error> {
        match self.out {
            Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
                path: path.into(),
                source: e,
            }),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes()).map_err(|e| Error::Io {
                    path: self.path_for_errors(),
                    source: e,
                })
            }
        }
    }

    pub fn write_json<T: Serialize>(&self, value: &T) -> Result<(), Error> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::ManifestFormat {
            detail: format!("serializing report: {e}"),
        })?;
        text.push('\n');
        self.write_text(&text)
    }
}

/// Sweep output with the base config echoed for reproducibility.
#[derive(Serialize)]
pub struct SweepReport<'a> {
    pub config: &'a FilterConfig,
    pub rows: &'a [SweepRow],
}

pub fn render_filter_results(results: &FilterResults) -> String {
    let mut out = String::new();
    for (utt_id, words) in results {
        out.push_str(&format!("{utt_id}: {} words\n", words.len()));
        for word in words {
            out.push_str(&format!(
                "  {:>8}  soc {:.4}  {}\n",
                word.word_id, word.soc, word.surface
            ));
        }
    }
    out
}

pub fn render_eval_report(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("ERR        {:>10.2} %\n", report.err_percent));
    out.push_str(&format!("ALS        {:>10.2}\n", report.als));
    out.push_str(&format!("word list  {:>10}\n", report.word_list_size));
    out.push_str(&format!(
        "thresholds psc {} / soc {}\n",
        report.config.psc_threshold, report.config.soc_threshold
    ));
    out.push_str(&format!(
        "timing     wall {:.1} ms, window mean {:.3} ms, p95 {:.3} ms ({} windows)\n",
        report.timing.wall_ms,
        report.timing.window_mean_ms,
        report.timing.window_p95_ms,
        report.timing.windows
    ));
    out.push_str(&format!(
        "\n{:<16} {:>6} {:>9} {:>6}\n",
        "utt", "truth", "recalled", "final"
    ));
    for d in &report.utterances {
        out.push_str(&format!(
            "{:<16} {:>6} {:>9} {:>6}\n",
            d.utt_id, d.ground_truth_size, d.recalled, d.final_list_size
        ));
    }
    out
}

pub fn eval_detail_csv(report: &EvalReport) -> String {
    let mut out = String::from("utt_id,ground_truth_size,recalled,final_list_size\n");
    for d in &report.utterances {
        out.push_str(&format!(
            "{},{},{},{}\n",
            d.utt_id, d.ground_truth_size, d.recalled, d.final_list_size
        ));
    }
    out
}

pub fn render_sweep(rows: &[SweepRow]) -> String {
    let mut out = format!("{:>6} {:>6} {:>8} {:>10}\n", "psc", "soc", "ERR%", "ALS");
    for row in rows {
        out.push_str(&format!(
            "{:>6} {:>6} {:>8.2} {:>10.2}\n",
            row.psc_threshold, row.soc_threshold, row.err_percent, row.als
        ));
    }
    out
}

pub fn render_bench(report: &ScalingReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "machine: {} {} ({}, {} cores), {} thread(s)\n",
        report.machine.os,
        report.machine.arch,
        report.machine.cpu_model,
        report.machine.logical_cores,
        report.threads
    ));
    out.push_str(&format!(
        "window: {} frames x {} phones; {} warmup, {} iterations\n\n",
        report.window_frames, report.num_phones, report.warmup, report.iterations
    ));
    out.push_str(&format!(
        "{:>10} {:>12} {:>12} {:>12} {:>12}\n",
        "list size", "mean ms", "median ms", "min ms", "max ms"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:>10} {:>12.4} {:>12.4} {:>12.4} {:>12.4}\n",
            row.list_size, row.mean_ms, row.median_ms, row.min_ms, row.max_ms
        ));
    }
    if let Some(fit) = &report.linear_fit {
        out.push_str(&format!(
            "\nlinear fit: {:.6} us/word + {:.4} ms\n",
            fit.slope_ms_per_word * 1e3,
            fit.intercept_ms
        ));
    }
    if let Some(exponent) = report.loglog_exponent {
        out.push_str(&format!("log-log exponent: {exponent:.3}\n"));
    }
    out
}
