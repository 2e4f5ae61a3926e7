use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hatectx::logreg::LogRegModel;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn hatectx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hatectx")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let o = hatectx(args);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gold() -> Vec<(String, bool)> {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(fixture("corpus.json")).unwrap()).unwrap();
    let mut out = Vec::new();
    for t in v.as_array().unwrap() {
        for c in t["comments"].as_array().unwrap() {
            out.push((c["id"].as_str().unwrap().to_string(), c["label"].as_i64().unwrap() == 1));
        }
    }
    out
}

fn read_scores(path: &Path) -> HashMap<String, f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("comment_id,score"));
    lines
        .map(|l| {
            let (id, s) = l.rsplit_once(',').unwrap();
            (id.to_string(), s.parse().unwrap())
        })
        .collect()
}

/// Accuracy, precision, recall, F1 and pairwise AUC by direct counting.
fn naive_metrics(scores: &HashMap<String, f64>, gold: &[(String, bool)]) -> [f64; 5] {
    let (mut tp, mut fp, mut tn, mut fn_) = (0.0, 0.0, 0.0, 0.0);
    for (id, y) in gold {
        match (scores[id] >= 0.5, *y) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, false) => tn += 1.0,
            (false, true) => fn_ += 1.0,
        }
    }
    let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
    let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (a, _) in gold.iter().filter(|(_, y)| *y) {
        for (b, _) in gold.iter().filter(|(_, y)| !*y) {
            pairs += 1.0;
            wins += match scores[a].partial_cmp(&scores[b]).unwrap() {
                std::cmp::Ordering::Greater => 1.0,
                std::cmp::Ordering::Equal => 0.5,
                std::cmp::Ordering::Less => 0.0,
            };
        }
    }
    [(tp + tn) / (tp + fp + tn + fn_), precision, recall, f1, wins / pairs]
}

fn parse_table(csv: &str) -> Vec<(String, [f64; 5])> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let fields: Vec<&str> = l.rsplitn(6, ',').collect();
            let mut vals = [0.0; 5];
            for (k, v) in fields[..5].iter().rev().enumerate() {
                vals[k] = v.parse().unwrap();
            }
            (fields[5].trim_matches('"').to_string(), vals)
        })
        .collect()
}

fn assert_close_to_rounded(name: &str, table: [f64; 5], exact: [f64; 5]) {
    for (k, (t, e)) in table.iter().zip(exact).enumerate() {
        assert!((t - e).abs() <= 5e-4 + 1e-12, "{name} column {k}: table {t}, recomputed {e}");
    }
}

fn slug(label: &str) -> String {
    let mut s = String::new();
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

#[test]
fn stats_prints_fixture_counts() {
    let out = ok(&["stats", "--corpus", p(&fixture("corpus.json"))]);
    assert_eq!(out, "comments: 40\nhateful: 12\nthreads: 4\nusers: 11\nlong_comments: 1\n");
}

#[test]
fn missing_corpus_is_a_config_error() {
    let o = hatectx(&["stats", "--corpus", "/nonexistent/corpus.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/corpus.json"));
}

#[test]
fn kappa_commands() {
    let a = fixture("kappa_a.txt");
    let b = fixture("kappa_b.txt");
    let k: f64 = ok(&["kappa", p(&a), p(&b)]).trim().parse().unwrap();
    assert!((k - 0.5).abs() < 1e-12);
    let k: f64 = ok(&["kappa", p(&a), p(&a)]).trim().parse().unwrap();
    assert_eq!(k, 1.0);

    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.txt");
    std::fs::write(&short, "1\n0\n").unwrap();
    assert_eq!(hatectx(&["kappa", p(&a), p(&short)]).status.code(), Some(2));
}

#[test]
fn bad_configuration_exits_with_2() {
    let corpus = fixture("corpus.json");
    let dir = tempfile::tempdir().unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["evaluate", "--corpus", p(&corpus), "--folds", "1"],
        vec!["evaluate", "--corpus", p(&corpus), "--features", "char,emoji"],
        vec!["evaluate", "--corpus", p(&corpus), "--features", "liwc"],
        vec!["train", "--corpus", p(&corpus), "--family", "nn"],
        vec!["evaluate", "--suite", "everything", "--corpus", p(&corpus)],
    ];
    for args in cases {
        let o = hatectx(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }

    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "corpus = \"x.json\"\nlearning_rat = 0.1\n").unwrap();
    assert_eq!(hatectx(&["evaluate", "--config", p(&cfg)]).status.code(), Some(2));
}

#[test]
fn runtime_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("taken");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("out");
    let o = hatectx(&["train", "--corpus", p(&fixture("corpus.json")), "--out", p(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn single_class_corpus_cannot_be_stratified() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("corpus.json")).unwrap().replace("\"label\": 1", "\"label\": 0");
    let corpus = dir.path().join("one_class.json");
    std::fs::write(&corpus, text).unwrap();
    let o = hatectx(&["evaluate", "--corpus", p(&corpus), "--folds", "2", "--out", p(&dir.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn lr_train_writes_loadable_reproducible_model() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("corpus.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(&["train", "--corpus", p(&corpus), "--features", "char", "--out", p(d)]);
    }
    let model = std::fs::read_to_string(a.join("model.json")).unwrap();
    assert_eq!(model, std::fs::read_to_string(b.join("model.json")).unwrap());
    LogRegModel::from_json(&model).unwrap();
    let manifest = std::fs::read_to_string(a.join("manifest.toml")).unwrap();
    assert!(manifest.contains("seed = 1") && manifest.contains("config_hash = "));
    let trace = std::fs::read_to_string(a.join("loss_trace.csv")).unwrap();
    let losses: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(losses.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn nn_train_runs_thirty_epochs_by_default() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "train",
        "--family",
        "nn",
        "--corpus",
        p(&fixture("corpus.json")),
        "--embeddings",
        p(&fixture("embeddings.txt")),
        "--embed-dim",
        "8",
        "--hidden",
        "4",
        "--attention-width",
        "4",
        "--branches",
        "comment,title,username",
        "--out",
        p(dir.path()),
    ]);
    let trace = std::fs::read_to_string(dir.path().join("loss_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 31);
    let model = std::fs::read_to_string(dir.path().join("model.json")).unwrap();
    hatectx::encoder::ContextNet::from_json(&model).unwrap();
}

#[test]
fn lr_suite_matches_golden_and_scores() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "evaluate",
        "--corpus",
        p(&fixture("corpus.json")),
        "--folds",
        "5",
        "--suite",
        "lr",
        "--liwc",
        p(&fixture("categories.dic")),
        "--nrc",
        p(&fixture("nrc.txt")),
        "--out",
        p(dir.path()),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(fixture("golden/evaluate_lr.csv")).unwrap());

    let gold = gold();
    let table = parse_table(&csv);
    assert_eq!(table.len(), 7);
    for (label, vals) in table {
        let scores = read_scores(&dir.path().join("scores").join(format!("{}.csv", slug(&label))));
        assert_eq!(scores.len(), gold.len());
        assert_close_to_rounded(&label, vals, naive_metrics(&scores, &gold));
    }
}

#[test]
fn nn_suite_lists_all_variants() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&[
        "evaluate",
        "--corpus",
        p(&fixture("corpus.json")),
        "--folds",
        "2",
        "--suite",
        "nn",
        "--embeddings",
        p(&fixture("embeddings.txt")),
        "--embed-dim",
        "8",
        "--hidden",
        "3",
        "--attention-width",
        "3",
        "--epochs",
        "1",
        "--format",
        "csv",
        "--out",
        p(dir.path()),
    ]);
    let labels: Vec<String> = parse_table(&out).into_iter().map(|(l, _)| l).collect();
    assert_eq!(
        labels,
        [
            "LSTM",
            "bi-LSTM",
            "bi-LSTM+attention",
            "bi-LSTM+attention + username",
            "bi-LSTM+attention + title",
            "bi-LSTM+attention + title + username"
        ]
    );
}

#[test]
fn ensemble_matches_golden_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (lr, nn) = (fixture("scores/lr.csv"), fixture("scores/nn.csv"));
    let out = ok(&[
        "ensemble",
        "--corpus",
        p(&fixture("corpus.json")),
        "--lr-scores",
        p(&lr),
        "--nn-scores",
        p(&nn),
        "--format",
        "csv",
        "--out",
        p(dir.path()),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("ensemble.csv")).unwrap();
    assert_eq!(csv, std::fs::read_to_string(fixture("golden/ensemble.csv")).unwrap());
    assert!(out.starts_with(&csv));
    let overlap = std::fs::read_to_string(dir.path().join("overlap.csv")).unwrap();
    assert_eq!(overlap, std::fs::read_to_string(fixture("golden/overlap.csv")).unwrap());

    let gold = gold();
    let (lr, nn) = (read_scores(&lr), read_scores(&nn));
    let max: HashMap<String, f64> = lr.iter().map(|(k, v)| (k.clone(), v.max(nn[k]))).collect();
    let avg: HashMap<String, f64> = lr.iter().map(|(k, v)| (k.clone(), (v + nn[k]) / 2.0)).collect();
    let table = parse_table(&csv);
    let names: Vec<&str> = table.iter().map(|(l, _)| l.as_str()).collect();
    assert_eq!(
        names,
        ["Logistic Regression", "Neural Network", "Max Score Ensemble", "Average Score Ensemble"]
    );
    for ((label, vals), scores) in table.iter().zip([&lr, &nn, &max, &avg]) {
        assert_close_to_rounded(label, *vals, naive_metrics(scores, &gold));
    }

    let counts: usize = overlap.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<usize>().unwrap()).sum();
    assert_eq!(counts, gold.iter().filter(|(_, y)| *y).count());
}

#[test]
fn report_rerenders_metrics() {
    let golden = fixture("golden/evaluate_lr.csv");
    assert_eq!(ok(&["report", p(&golden), "--format", "csv"]), std::fs::read_to_string(&golden).unwrap());
    let text = ok(&["report", p(&golden)]);
    assert!(text.lines().nth(2).unwrap().starts_with("char (baseline)"));
}

#[test]
fn manifest_reproduces_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    ok(&[
        "evaluate",
        "--corpus",
        p(&fixture("corpus.json")),
        "--folds",
        "3",
        "--seed",
        "11",
        "--features",
        "char,word",
        "--sources",
        "comment,username",
        "--out",
        p(&first),
    ]);
    let second = dir.path().join("second");
    ok(&["evaluate", "--config", p(&first.join("manifest.toml")), "--out", p(&second)]);
    for f in ["metrics.csv", "metrics.txt"] {
        assert_eq!(
            std::fs::read(first.join(f)).unwrap(),
            std::fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }

    let tampered = dir.path().join("tampered.toml");
    let m = std::fs::read_to_string(first.join("manifest.toml")).unwrap().replace("seed = 11", "seed = 12");
    std::fs::write(&tampered, m).unwrap();
    assert_eq!(hatectx(&["evaluate", "--config", p(&tampered)]).status.code(), Some(2));
}

#[test]
fn convert_groups_released_records_by_title() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("released.jsonl");
    std::fs::write(
        &input,
        concat!(
            "{\"title\": \"A\", \"username\": \"u1\", \"text\": \"first\", \"label\": 1}\n",
            "{\"title\": \"B\", \"username\": \"u2\", \"text\": \"second\", \"label\": 0}\n",
            "{\"title\": \"A\", \"username\": \"u3\", \"text\": \"third\", \"label\": 0}\n",
        ),
    )
    .unwrap();
    let output = dir.path().join("corpus.json");
    assert_eq!(ok(&["convert", p(&input), p(&output)]), "3 comments in 2 threads\n");
    let stats = ok(&["stats", "--corpus", p(&output)]);
    assert!(stats.starts_with("comments: 3\nhateful: 1\nthreads: 2\nusers: 3\n"), "{stats}");

    std::fs::write(&input, "{\"title\": \"A\", \"user\": \"u\", \"text\": \"x\", \"label\": 2}\n").unwrap();
    assert_eq!(hatectx(&["convert", p(&input), p(&output)]).status.code(), Some(2));
}
