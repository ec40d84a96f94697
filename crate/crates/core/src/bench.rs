//! Throughput scaling benchmark: filter cost as a function of word-list
//! size on a fixed window.

use std::hint::black_box;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{filter_window, WindowView};
use crate::posterior::PosteriorMatrix;
use crate::types::{ContextualWord, FilterConfig, PhoneId, SymbolTable, WordList};

/// Iteration counts for one benchmark run. At least 5 warmup and 30 measured
/// iterations per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub warmup: usize,
    pub iterations: usize,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            warmup: 5,
            iterations: 30,
        }
    }
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.warmup < 5 || self.iterations < 30 {
            return Err(Error::InvalidConfig {
                detail: format!(
                    "benchmarks need >= 5 warmup and >= 30 measured iterations, \
                     got {}/{}",
                    self.warmup, self.iterations
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineInfo {
    pub os: String,
    pub arch: String,
    pub cpu_model: String,
    pub logical_cores: usize,
}

impl MachineInfo {
    pub fn capture() -> Self {
        let cpu_model = std::fs::read_to_string("/proc/cpuinfo")
            .ok()
            .and_then(|text| {
                text.lines()
                    .find(|l| l.starts_with("model name"))
                    .and_then(|l| l.split(':').nth(1))
                    .map(|s| s.trim().to_string())
            })
            .unwrap_or_else(|| "unknown".to_string());
        MachineInfo {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpu_model,
            logical_cores: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub list_size: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// Least-squares fit of mean time against list size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope_ms_per_word: f64,
    pub intercept_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub machine: MachineInfo,
    pub threads: usize,
    pub warmup: usize,
    pub iterations: usize,
    pub window_frames: usize,
    pub num_phones: usize,
    pub config: FilterConfig,
    pub rows: Vec<BenchRow>,
    pub linear_fit: Option<LinearFit>,
    /// Slope of `ln(median time)` against `ln(size)` over positive-size
    /// rows; about 1 for linear scaling.
    pub loglog_exponent: Option<f64>,
}

fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Some((slope, intercept))
}

/// Times `filter_window` against prefixes of `list` at each requested size.
///
/// `list` must hold at least `max(sizes)` words. Runs on the ambient rayon
/// pool; wrap in a single-threaded pool for stable single-core numbers.
pub fn bench_scaling(
    sizes: &[usize],
    window: &WindowView<'_>,
    list: &WordList,
    config: &FilterConfig,
    spec: &BenchSpec,
) -> Result<ScalingReport> {
    spec.validate()?;
    if let Some(&max) = sizes.iter().max() {
        if max > list.len() {
            return Err(Error::InvalidConfig {
                detail: format!(
                    "benchmark needs {max} words but the list has {}",
                    list.len()
                ),
            });
        }
    }

    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let sub = list.truncated(size);
        for _ in 0..spec.warmup {
            black_box(filter_window(window, &sub, config)?);
        }
        let mut samples = Vec::with_capacity(spec.iterations);
        for _ in 0..spec.iterations {
            let start = Instant::now();
            black_box(filter_window(window, &sub, config)?);
            samples.push(start.elapsed().as_secs_f64() * 1e3);
        }
        samples.sort_by(f64::total_cmp);
        rows.push(BenchRow {
            list_size: size,
            mean_ms: samples.iter().sum::<f64>() / samples.len() as f64,
            median_ms: samples[samples.len() / 2],
            min_ms: samples[0],
            max_ms: samples[samples.len() - 1],
        });
    }

    let linear_points: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.list_size as f64, r.mean_ms))
        .collect();
    let linear_fit = least_squares(&linear_points).map(|(slope, intercept)| LinearFit {
        slope_ms_per_word: slope,
        intercept_ms: intercept,
    });

    // Medians keep the exponent estimate stable against timer outliers.
    let log_points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.list_size > 0 && r.median_ms > 0.0)
        .map(|r| ((r.list_size as f64).ln(), r.median_ms.ln()))
        .collect();
    let loglog_exponent = least_squares(&log_points).map(|(slope, _)| slope);

    Ok(ScalingReport {
        machine: MachineInfo::capture(),
        threads: rayon::current_num_threads(),
        warmup: spec.warmup,
        iterations: spec.iterations,
        window_frames: window.frames(),
        num_phones: window.num_phones(),
        config: config.clone(),
        rows,
        linear_fit,
        loglog_exponent,
    })
}

/// Renders a scaling report as CSV.
pub fn scaling_to_csv(report: &ScalingReport) -> String {
    let mut out = String::from("list_size,mean_ms,median_ms,min_ms,max_ms\n");
    for row in &report.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.list_size, row.mean_ms, row.median_ms, row.min_ms, row.max_ms
        ));
    }
    out
}

/// A window of pure renormalized-uniform noise rows, for benchmarking.
pub fn synthetic_window(seed: u64, frames: usize, num_phones: usize) -> PosteriorMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0f64; frames * num_phones];
    for row in data.chunks_mut(num_phones) {
        let mut total = 0.0;
        for cell in row.iter_mut() {
            let draw: f64 = rng.gen();
            *cell = draw;
            total += draw;
        }
        if total <= 0.0 {
            row.fill(1.0);
            total = num_phones as f64;
        }
        for cell in row.iter_mut() {
            *cell /= total;
        }
    }
    PosteriorMatrix::from_flat(data, num_phones, 10.0).expect("synthetic shape is consistent")
}

/// A word list of `size` random pronunciations over `num_phones` phones.
pub fn synthetic_list(
    seed: u64,
    size: usize,
    num_phones: usize,
    pronunciation_length: (usize, usize),
) -> Result<WordList> {
    let (lo, hi) = pronunciation_length;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidConfig {
            detail: format!("pronunciation_length range ({lo}, {hi}) is invalid"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let symbols = SymbolTable::new((0..num_phones).map(|i| format!("p{i}")))?;
    let words = (0..size)
        .map(|i| {
            let len = rng.gen_range(lo..=hi);
            let pron = (0..len)
                .map(|_| PhoneId(rng.gen_range(0..num_phones as u32)))
                .collect();
            ContextualWord::new(i as u64, format!("b{i:05}"), vec![pron])
        })
        .collect::<Result<Vec<_>>>()?;
    WordList::new(words, symbols)
}
