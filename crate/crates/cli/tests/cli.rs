use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_humordet");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let o = run(dir, args);
    assert_eq!(o.status.code(), Some(0), "{args:?}\n{}", stderr(&o));
    o
}

const WORDS: [&str; 10] = [
    "apple", "river", "cloud", "tiger", "lemon", "piano", "storm", "candle", "garden", "rocket",
];

fn write_sources(dir: &Path) {
    let mut jokes = String::from("text\n");
    let mut news = String::from("text\n");
    for i in 0..90 {
        let a = WORDS[i % 10];
        let b = WORDS[(i * 3 + 1) % 10];
        jokes.push_str(&format!(
            "Why did the {a} {i} cross the road? To reach the {b} on the other side!\n"
        ));
        news.push_str(&format!(
            "GOVERNMENT ANNOUNCES NEW {a} POLICY {i} FOR {b} MARKETS THIS WEEK\n"
        ));
    }
    std::fs::write(dir.join("jokes.csv"), jokes).unwrap();
    std::fs::write(dir.join("news.csv"), news).unwrap();
}

/// Dataset, mock store and a briefly trained model under `dir`.
fn pipeline(dir: &Path, seed: &str) {
    write_sources(dir);
    ok(
        dir,
        &[
            "build-dataset",
            "--jokes",
            "jokes.csv",
            "--news",
            "news.csv",
            "--out",
            "data.csv",
            "--rows-per-class",
            "60",
            "--seed",
            seed,
        ],
    );
    ok(
        dir,
        &["encode", "--data", "data.csv", "--store", "store.cbem", "--dim", "16"],
    );
    ok(
        dir,
        &[
            "train",
            "--store",
            "store.cbem",
            "--labels",
            "data.csv",
            "--params-out",
            "params.cbpm",
            "--epochs",
            "4",
            "--seed",
            seed,
            "--quiet",
        ],
    );
}

fn bytes(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn predict_on_trained_model() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "42");
    let o = ok(
        dir.path(),
        &[
            "predict",
            "--text",
            "Why did the lemon cross the road? Nobody knows.",
            "--params",
            "params.cbpm",
        ],
    );
    let out = stdout(&o);
    let (p, label) = out.trim_end().split_once('\t').unwrap();
    assert_eq!(p.split_once('.').unwrap().1.len(), 6, "{out}");
    let p: f64 = p.parse().unwrap();
    assert!(p > 0.0 && p < 1.0);
    assert_eq!(label == "true", p >= 0.5);
}

#[test]
fn missing_store_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "1");
    let o = run(
        dir.path(),
        &[
            "train",
            "--store",
            "nowhere/emb.cbem",
            "--labels",
            "data.csv",
            "--params-out",
            "p.cbpm",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("nowhere/emb.cbem"), "{err}");
    assert!(!dir.path().join("p.cbpm").exists());
}

#[test]
fn exit_codes_by_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "1");
    let usage = [
        vec!["train", "--nope"],
        vec![
            "train",
            "--store",
            "store.cbem",
            "--labels",
            "data.csv",
            "--params-out",
            "x",
            "--epochs",
            "0",
        ],
        vec!["eval", "--labels", "data.csv"],
        vec!["eval", "--labels", "data.csv", "--params", "params.cbpm"],
        vec!["encode", "--data", "data.csv", "--store", "s", "--backend", "file"],
    ];
    for args in usage {
        let o = run(dir.path(), &args);
        assert_eq!(o.status.code(), Some(1), "{args:?}: {}", stderr(&o));
        assert_eq!(stderr(&o).lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
    std::fs::write(dir.path().join("junk.cbpm"), b"not params").unwrap();
    let data = [
        vec!["predict", "--text", "hi there", "--params", "junk.cbpm"],
        vec![
            "build-dataset",
            "--jokes",
            "jokes.csv",
            "--news",
            "news.csv",
            "--out",
            "d.csv",
            "--rows-per-class",
            "1000",
        ],
        vec![
            "eval",
            "--labels",
            "data.csv",
            "--store",
            "data.csv",
            "--params",
            "params.cbpm",
        ],
        vec![
            "encode",
            "--data",
            "data.csv",
            "--store",
            "s",
            "--backend",
            "file",
            "--source",
            "store.cbem",
        ],
    ];
    for args in data {
        let o = run(dir.path(), &args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert_eq!(stderr(&o).lines().count(), 1, "{args:?}: {}", stderr(&o));
    }
    let short = run(
        dir.path(),
        &[
            "build-dataset",
            "--jokes",
            "jokes.csv",
            "--news",
            "news.csv",
            "--out",
            "d.csv",
            "--rows-per-class",
            "1000",
        ],
    );
    assert!(stderr(&short).contains("90"), "{}", stderr(&short));
}

#[test]
fn artifacts_are_byte_identical_per_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    pipeline(a.path(), "7");
    pipeline(b.path(), "7");
    pipeline(c.path(), "8");
    for name in ["data.csv", "store.cbem", "params.cbpm"] {
        assert_eq!(bytes(a.path(), name), bytes(b.path(), name), "{name}");
    }
    assert_ne!(bytes(a.path(), "params.cbpm"), bytes(c.path(), "params.cbpm"));

    let eval = [
        "eval",
        "--store",
        "store.cbem",
        "--labels",
        "data.csv",
        "--params",
        "params.cbpm",
        "--baseline",
        "nb",
        "--seed",
        "7",
        "--format",
        "json",
    ];
    let ea = stdout(&ok(a.path(), &eval));
    assert_eq!(ea, stdout(&ok(b.path(), &eval)));
    assert_eq!(ea.lines().count(), 2);
    for line in ea.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for key in ["accuracy", "precision", "recall", "f1"] {
            let x = v[key].as_f64().unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
        let counts = &v["counts"];
        let total: u64 = ["tp", "fp", "tn", "fn"]
            .iter()
            .map(|k| counts[k].as_u64().unwrap())
            .sum();
        assert_eq!(total, 24);
    }
}

#[test]
fn file_backend_copies_records_by_row() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "3");
    ok(
        dir.path(),
        &[
            "encode",
            "--data",
            "data.csv",
            "--store",
            "copy.cbem",
            "--backend",
            "file",
            "--source",
            "store.cbem",
            "--dim",
            "16",
        ],
    );
    assert_eq!(bytes(dir.path(), "copy.cbem"), bytes(dir.path(), "store.cbem"));
    ok(
        dir.path(),
        &[
            "encode",
            "--data",
            "data.csv",
            "--store",
            "one.cbem",
            "--backend",
            "file",
            "--source",
            "store.cbem",
            "--dim",
            "16",
            "--s-max",
            "1",
        ],
    );
    assert!(bytes(dir.path(), "one.cbem").len() <= bytes(dir.path(), "store.cbem").len());
}

#[test]
fn config_file_supplies_flags_and_command_line_wins() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "5");
    let conf: PathBuf = dir.path().join("run.conf");
    std::fs::write(
        &conf,
        "# manifest\nseed = 5\nquiet = true\n\n[train]\nstore = store.cbem\nlabels = data.csv\nparams_out = from_conf.cbpm\nepochs = 4\n",
    )
    .unwrap();
    let o = ok(dir.path(), &["train", "--config", "run.conf"]);
    assert!(stderr(&o).is_empty());
    assert_eq!(bytes(dir.path(), "from_conf.cbpm"), bytes(dir.path(), "params.cbpm"));

    ok(
        dir.path(),
        &[
            "train",
            "--config",
            "run.conf",
            "--epochs",
            "1",
            "--params-out",
            "override.cbpm",
        ],
    );
    ok(
        dir.path(),
        &[
            "train",
            "--store",
            "store.cbem",
            "--labels",
            "data.csv",
            "--params-out",
            "direct.cbpm",
            "--epochs",
            "1",
            "--seed",
            "5",
        ],
    );
    assert_eq!(bytes(dir.path(), "override.cbpm"), bytes(dir.path(), "direct.cbpm"));

    std::fs::write(&conf, "epoch = 4\n").unwrap();
    let o = run(dir.path(), &["train", "--config", "run.conf"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("run.conf:1"), "{}", stderr(&o));
}

#[test]
fn help_lists_every_flag_with_defaults() {
    let cases: [(&str, &[&str], &[&str]); 6] = [
        (
            "build-dataset",
            &[
                "--jokes",
                "--news",
                "--out",
                "--jokes-column",
                "--news-column",
                "--rows-per-class",
                "--min-chars",
                "--max-chars",
                "--min-words",
                "--max-words",
            ],
            &[
                "[default: 100000]",
                "[default: 30]",
                "[default: 100]",
                "[default: 10]",
                "[default: 18]",
                "[default: text]",
            ],
        ),
        ("stats", &["--data", "--format"], &["[default: table]"]),
        (
            "encode",
            &[
                "--data",
                "--store",
                "--backend",
                "--source",
                "--dim",
                "--s-max",
                "--max-seq-len",
            ],
            &["[default: mock]", "[default: 768]", "[default: 3]", "[default: 100]"],
        ),
        (
            "train",
            &[
                "--store",
                "--labels",
                "--params-out",
                "--epochs",
                "--batch",
                "--lr",
                "--s-max",
                "--train-fraction",
            ],
            &["[default: 5]", "[default: 64]", "[default: 0.001]", "[default: 0.8]"],
        ),
        (
            "eval",
            &[
                "--store",
                "--labels",
                "--params",
                "--baseline",
                "--data",
                "--alpha",
                "--train-fraction",
                "--format",
            ],
            &["[default: 0.2]", "[default: 0.8]", "[default: table]"],
        ),
        ("predict", &["--text", "--params", "--backend"], &["[default: mock]"]),
    ];
    let dir = tempfile::tempdir().unwrap();
    for (sub, flags, defaults) in cases {
        let help = stdout(&ok(dir.path(), &[sub, "--help"]));
        for needle in flags
            .iter()
            .chain(defaults)
            .chain(&["--seed", "--config", "--quiet", "[default: 42]"])
        {
            assert!(help.contains(needle), "{sub} --help lacks {needle}\n{help}");
        }
    }
    let top = stdout(&ok(dir.path(), &["--help"]));
    for sub in ["build-dataset", "stats", "encode", "train", "eval", "predict"] {
        assert!(top.contains(sub));
    }
}

#[test]
fn stats_json_has_every_column() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path(), "2");
    let o = ok(dir.path(), &["stats", "--data", "data.csv", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for col in [
        "chars",
        "words",
        "unique_words",
        "punctuation",
        "duplicate_words",
        "sentences",
    ] {
        for field in ["mean", "std", "min", "median", "max"] {
            assert!(v[col][field].is_number(), "{col}.{field}");
        }
    }
    let table = stdout(&ok(dir.path(), &["stats", "--data", "data.csv"]));
    assert!(table.contains("#chars") && table.contains("median"));
}
