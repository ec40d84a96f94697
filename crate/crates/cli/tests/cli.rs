//! End-to-end tests of the `ctxfilter` binary: exit codes, format/flag
//! handling, and golden JSON outputs on a handcrafted corpus.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ctxfilter::io::{self, ManifestEntry};
use ctxfilter::PosteriorMatrix;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ctxfilter"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr_line(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr)
        .trim_end()
        .to_string()
}

/// Two-utterance corpus with hand-checkable scores and no randomness.
///
/// Words over symbols a/b/c: alpha = "a b", beta = "b a", gamma = "c c".
/// Utterance u1 holds the 3x3 fixture where alpha passes 0.6/0.6 thresholds
/// and beta/gamma fail stage two; u2 is one-hot on "c c" so only gamma
/// matches.
fn write_fixture_corpus(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    std::fs::create_dir_all(dir.join("posteriors")).unwrap();
    let symbols = dir.join("symbols.txt");
    std::fs::write(&symbols, "a\nb\nc\n").unwrap();
    let words = dir.join("words.tsv");
    std::fs::write(&words, "1\talpha\ta b\n2\tbeta\tb a\n3\tgamma\tc c\n").unwrap();

    let u1 = PosteriorMatrix::from_rows(
        &[
            vec![0.7, 0.2, 0.1],
            vec![0.1, 0.8, 0.1],
            vec![0.2, 0.1, 0.7],
        ],
        10.0,
    )
    .unwrap();
    let u2 = PosteriorMatrix::from_rows(
        &[
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ],
        10.0,
    )
    .unwrap();
    io::write_posteriors(&dir.join("posteriors/u1.phpo"), &u1).unwrap();
    io::write_posteriors(&dir.join("posteriors/u2.phpo"), &u2).unwrap();

    let manifest = dir.join("manifest.json");
    io::write_manifest(
        &manifest,
        &[
            ManifestEntry {
                utt_id: "u1".into(),
                posterior_path: "posteriors/u1.phpo".into(),
                ground_truth_word_ids: vec![1],
            },
            ManifestEntry {
                utt_id: "u2".into(),
                posterior_path: "posteriors/u2.phpo".into(),
                ground_truth_word_ids: vec![3],
            },
        ],
    )
    .unwrap();
    (manifest, symbols, words)
}

fn corpus_flags(manifest: &Path, symbols: &Path, words: &Path) -> Vec<String> {
    vec![
        "--manifest".into(),
        manifest.to_string_lossy().into_owned(),
        "--symbols".into(),
        symbols.to_string_lossy().into_owned(),
        "--word-list".into(),
        words.to_string_lossy().into_owned(),
    ]
}

fn golden_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn assert_matches_golden(actual: &str, name: &str) {
    let path = golden_path(name);
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "output differs from golden {name}");
}

#[test]
fn usage_errors_exit_1_with_one_line() {
    let output = run(&["eval", "--bogus"]);
    assert_eq!(output.status.code(), Some(1));
    let line = stderr_line(&output);
    assert_eq!(line.lines().count(), 1);
    assert!(line.starts_with("error: usage:"), "got: {line}");

    let output = run(&["eval", "--format", "yaml"]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    std::fs::remove_file(dir.path().join("posteriors/u2.phpo")).unwrap();

    let flags = corpus_flags(&manifest, &symbols, &words);
    let args: Vec<&str> = std::iter::once("eval")
        .chain(flags.iter().map(String::as_str))
        .collect();
    let output = run(&args);
    assert_eq!(output.status.code(), Some(2));
    let line = stderr_line(&output);
    assert!(line.starts_with("error: io:"), "got: {line}");
    assert!(
        line.contains("u2.phpo"),
        "diagnostic should name the path: {line}"
    );
}

#[test]
fn inventory_mismatch_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    // A fourth symbol makes the word list expect F=4 while posteriors have 3.
    std::fs::write(&symbols, "a\nb\nc\nd\n").unwrap();

    let flags = corpus_flags(&manifest, &symbols, &words);
    let args: Vec<&str> = std::iter::once("eval")
        .chain(flags.iter().map(String::as_str))
        .collect();
    let output = run(&args);
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_line(&output).starts_with("error: validation:"));
}

#[test]
fn malformed_word_list_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    std::fs::write(&words, "1\talpha\ta zz\n").unwrap();

    let flags = corpus_flags(&manifest, &symbols, &words);
    let args: Vec<&str> = std::iter::once("eval")
        .chain(flags.iter().map(String::as_str))
        .collect();
    let output = run(&args);
    assert_eq!(output.status.code(), Some(2));
    let line = stderr_line(&output);
    assert!(
        line.starts_with("error: format:") && line.contains("zz"),
        "got: {line}"
    );
}

#[test]
fn invalid_config_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    let flags = corpus_flags(&manifest, &symbols, &words);
    let mut args: Vec<&str> = std::iter::once("eval")
        .chain(flags.iter().map(String::as_str))
        .collect();
    args.extend_from_slice(&["--window-chunks", "0"]);
    let output = run(&args);
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_line(&output).contains("window_chunks"));
}

#[test]
fn bench_iteration_floor_is_enforced() {
    let output = run(&[
        "bench",
        "--sizes",
        "10",
        "--window-frames",
        "8",
        "--phone-inventory",
        "4",
        "--warmup",
        "2",
    ]);
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr_line(&output).contains("warmup"));
}

#[test]
fn filter_output_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    let out = dir.path().join("results.json");

    let flags = corpus_flags(&manifest, &symbols, &words);
    let mut args: Vec<&str> = std::iter::once("filter")
        .chain(flags.iter().map(String::as_str))
        .collect();
    args.extend_from_slice(&[
        "--psc-threshold",
        "0.6",
        "--soc-threshold",
        "0.6",
        "--chunk-frames",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    let output = run(&args);
    assert!(output.status.success());
    assert_matches_golden(
        &std::fs::read_to_string(&out).unwrap(),
        "filter_results.json",
    );
}

#[test]
fn eval_report_matches_golden_without_timing() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    let out = dir.path().join("report.json");

    let flags = corpus_flags(&manifest, &symbols, &words);
    let mut args: Vec<&str> = std::iter::once("eval")
        .chain(flags.iter().map(String::as_str))
        .collect();
    args.extend_from_slice(&[
        "--psc-threshold",
        "0.6",
        "--soc-threshold",
        "0.6",
        "--chunk-frames",
        "3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run(&args).status.success());

    let mut value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let object = value.as_object_mut().unwrap();
    assert!(
        object.remove("timing").is_some(),
        "report carries a timing section"
    );
    let golden: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(golden_path("eval_report.json")).unwrap())
            .unwrap();
    assert_eq!(value, golden, "report (timing aside) differs from golden");
}

#[test]
fn sweep_csv_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    let out = dir.path().join("sweep.csv");

    let flags = corpus_flags(&manifest, &symbols, &words);
    let mut args: Vec<&str> = std::iter::once("sweep")
        .chain(flags.iter().map(String::as_str))
        .collect();
    args.extend_from_slice(&[
        "--psc-grid",
        "0,0.6",
        "--soc-grid",
        "0,0.6",
        "--chunk-frames",
        "3",
        "--format",
        "csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run(&args).status.success());
    assert_matches_golden(&std::fs::read_to_string(&out).unwrap(), "sweep.csv");
}

/// `eval --filter-results` over a `filter` output reproduces the direct
/// evaluation's ERR and ALS.
#[test]
fn eval_from_filter_results_matches_direct_eval() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    let results = dir.path().join("results.json");
    let direct = dir.path().join("direct.json");
    let indirect = dir.path().join("indirect.json");

    let flags = corpus_flags(&manifest, &symbols, &words);
    let common: Vec<&str> = flags.iter().map(String::as_str).collect();
    let thresholds = [
        "--psc-threshold",
        "0.6",
        "--soc-threshold",
        "0.6",
        "--chunk-frames",
        "3",
    ];

    let mut args = vec!["filter"];
    args.extend(&common);
    args.extend_from_slice(&thresholds);
    args.extend_from_slice(&["--out", results.to_str().unwrap()]);
    assert!(run(&args).status.success());

    let mut args = vec!["eval"];
    args.extend(&common);
    args.extend_from_slice(&thresholds);
    args.extend_from_slice(&["--out", direct.to_str().unwrap()]);
    assert!(run(&args).status.success());

    let mut args = vec!["eval"];
    args.extend(&common);
    args.extend_from_slice(&thresholds);
    args.extend_from_slice(&[
        "--filter-results",
        results.to_str().unwrap(),
        "--out",
        indirect.to_str().unwrap(),
    ]);
    assert!(run(&args).status.success());

    let load = |p: &Path| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
    };
    let (a, b) = (load(&direct), load(&indirect));
    assert_eq!(a["err_percent"], b["err_percent"]);
    assert_eq!(a["als"], b["als"]);
    assert_eq!(a["utterances"], b["utterances"]);
}

/// Command-line flags override config-file values, which override defaults,
/// and the effective config lands in the report.
#[test]
fn config_file_precedence_via_binary() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());
    let config = dir.path().join("filter.toml");
    std::fs::write(
        &config,
        "[filter]\npsc_threshold = 0.25\nsoc_threshold = 0.25\nchunk_frames = 3\n",
    )
    .unwrap();
    let out = dir.path().join("report.json");

    let flags = corpus_flags(&manifest, &symbols, &words);
    let mut args: Vec<&str> = std::iter::once("eval")
        .chain(flags.iter().map(String::as_str))
        .collect();
    args.extend_from_slice(&[
        "--config",
        config.to_str().unwrap(),
        "--soc-threshold",
        "0.9",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run(&args).status.success());

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["config"]["psc_threshold"], 0.25); // file beats default
    assert_eq!(report["config"]["soc_threshold"], 0.9); // flag beats file
    assert_eq!(report["config"]["chunk_frames"], 3);
    assert_eq!(report["config"]["window_chunks"], 10); // untouched default
}

/// Sweep and bench JSON reports carry the documented top-level keys.
#[test]
fn sweep_and_bench_json_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());

    let flags = corpus_flags(&manifest, &symbols, &words);
    let mut args: Vec<&str> = std::iter::once("sweep")
        .chain(flags.iter().map(String::as_str))
        .collect();
    args.extend_from_slice(&[
        "--psc-grid",
        "0.5",
        "--soc-grid",
        "0.5",
        "--chunk-frames",
        "3",
        "--format",
        "json",
    ]);
    let output = run(&args);
    assert!(output.status.success());
    let sweep: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert!(sweep["config"]["psc_threshold"].is_number());
    let row = &sweep["rows"][0];
    for key in ["psc_threshold", "soc_threshold", "err_percent", "als"] {
        assert!(row[key].is_number(), "sweep row missing {key}");
    }

    let output = run(&[
        "bench",
        "--sizes",
        "5,10",
        "--window-frames",
        "8",
        "--phone-inventory",
        "4",
        "--format",
        "json",
    ]);
    assert!(output.status.success());
    let bench: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(bench["threads"], 1);
    assert!(bench["machine"]["os"].is_string());
    assert!(bench["rows"][1]["median_ms"].is_number());
    assert!(bench["config"]["psc_threshold"].is_number());
}

#[test]
fn text_formats_render() {
    let dir = tempfile::tempdir().unwrap();
    let (manifest, symbols, words) = write_fixture_corpus(dir.path());

    let flags = corpus_flags(&manifest, &symbols, &words);
    let mut args: Vec<&str> = std::iter::once("eval")
        .chain(flags.iter().map(String::as_str))
        .collect();
    args.extend_from_slice(&["--chunk-frames", "3", "--format", "text"]);
    let output = run(&args);
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("ERR") && text.contains("u1"), "got: {text}");

    let bench = run(&[
        "bench",
        "--sizes",
        "5,10",
        "--window-frames",
        "8",
        "--phone-inventory",
        "4",
        "--format",
        "csv",
    ]);
    assert!(bench.status.success());
    let csv = String::from_utf8_lossy(&bench.stdout);
    assert!(csv.starts_with("list_size,mean_ms"), "got: {csv}");
}
