//! Drives the installed binary end to end on a small corpus.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_docforest"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_gen_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("gen.json");
    std::fs::write(
        &path,
        r#"{"num_docs": 8, "entities_per_doc": [15, 30], "seed": 5, "matcher_fraction": 0.3}"#,
    )
    .unwrap();
    path
}

#[test]
fn full_pipeline_through_the_binary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_gen_config(tmp.path());
    let corpus_dir = tmp.path().join("corpus");
    let model_path = tmp.path().join("model.json");
    let preds_path = tmp.path().join("preds.jsonl");

    let out = run(&[
        "gen",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        corpus_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    for f in ["train.jsonl", "val.jsonl", "test.jsonl", "manifest.json"] {
        assert!(corpus_dir.join(f).exists(), "missing {f}");
    }

    let out = run(&[
        "train",
        "--corpus",
        corpus_dir.to_str().unwrap(),
        "--out",
        model_path.to_str().unwrap(),
        "--epochs",
        "2",
        "--hidden-dim",
        "16",
        "--emb-dim",
        "8",
        "--seed",
        "1",
    ]);
    assert!(out.status.success(), "{out:?}");
    let model_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&model_path).unwrap()).unwrap();
    assert_eq!(model_json["version"], 1);
    assert_eq!(model_json["dims"]["E"], 8);

    let gold = corpus_dir.join("val.jsonl");
    let out = run(&[
        "predict",
        "--model",
        model_path.to_str().unwrap(),
        "--input",
        gold.to_str().unwrap(),
        "--out",
        preds_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let preds = std::fs::read_to_string(&preds_path).unwrap();
    let gold_lines = std::fs::read_to_string(&gold).unwrap();
    let entity_count: usize = gold_lines
        .lines()
        .map(|l| {
            serde_json::from_str::<serde_json::Value>(l).unwrap()["entities"]
                .as_array()
                .unwrap()
                .len()
        })
        .sum();
    assert_eq!(preds.lines().count(), entity_count);
    for line in preds.lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(["rule1", "rule2", "rule3", "matcher"]
            .contains(&rec["provenance"].as_str().unwrap()));
    }

    // rerunning predict produces identical bytes
    let first = std::fs::read(&preds_path).unwrap();
    let out = run(&[
        "predict",
        "--model",
        model_path.to_str().unwrap(),
        "--input",
        gold.to_str().unwrap(),
        "--out",
        preds_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(first, std::fs::read(&preds_path).unwrap());

    let out = run(&[
        "eval",
        "--preds",
        preds_path.to_str().unwrap(),
        "--gold",
        gold.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(stdout(&out).starts_with("accuracy "));

    let out = run(&[
        "eval",
        "--preds",
        preds_path.to_str().unwrap(),
        "--gold",
        gold.to_str().unwrap(),
        "--scored-categories",
        "note,paragraph",
    ]);
    assert!(out.status.success(), "{out:?}");

    let out = run(&[
        "compare",
        "--corpus",
        corpus_dir.to_str().unwrap(),
        "--model",
        model_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let table = stdout(&out);
    assert!(table.contains("loss only") && table.contains("loss+greedy"), "{table}");

    // --no-rules scores everything with the matcher
    let nr_path = tmp.path().join("preds_nr.jsonl");
    let out = run(&[
        "predict",
        "--model",
        model_path.to_str().unwrap(),
        "--input",
        gold.to_str().unwrap(),
        "--out",
        nr_path.to_str().unwrap(),
        "--no-rules",
    ]);
    assert!(out.status.success());
    for line in std::fs::read_to_string(&nr_path).unwrap().lines() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(rec["provenance"], "matcher");
    }
}

#[test]
fn gen_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_gen_config(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = run(&[
            "gen",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for f in ["train.jsonl", "val.jsonl", "test.jsonl", "manifest.json"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f} differs between reruns"
        );
    }
}

#[test]
fn rules_dump_prints_the_tables() {
    let out = run(&["rules", "--dump"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["no_parent"].as_array().unwrap().len(), 15);
    assert_eq!(v["section_chain"][0]["category"], "section");
    assert_eq!(v["section_chain"][0]["level"], 1);
    assert_eq!(v["fixed_dependencies"]["table_caption"][0], "table");

    let out = run(&["rules"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("--dump"));
}

#[test]
fn exit_codes_distinguish_usage_data_and_internal_errors() {
    let tmp = tempfile::tempdir().unwrap();

    // missing config file: usage error
    let out = run(&["gen", "--config", "/nonexistent/cfg.json", "--out", "x"]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    // config that is not JSON: data error
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "not json").unwrap();
    let out = run(&["gen", "--config", bad.to_str().unwrap(), "--out", "x"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // config violating its own constraints: usage error
    let zero = tmp.path().join("zero.json");
    std::fs::write(&zero, r#"{"num_docs": 0}"#).unwrap();
    let out = run(&["gen", "--config", zero.to_str().unwrap(), "--out", "x"]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    // corpus dir without a manifest: usage error
    let out = run(&[
        "train",
        "--corpus",
        tmp.path().to_str().unwrap(),
        "--out",
        tmp.path().join("m.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    // malformed document line: data error
    let cfg = write_gen_config(tmp.path());
    let corpus_dir = tmp.path().join("corpus");
    assert!(run(&[
        "gen",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        corpus_dir.to_str().unwrap(),
    ])
    .status
    .success());
    let model_path = tmp.path().join("model.json");
    assert!(run(&[
        "train",
        "--corpus",
        corpus_dir.to_str().unwrap(),
        "--out",
        model_path.to_str().unwrap(),
        "--epochs",
        "1",
        "--hidden-dim",
        "8",
        "--emb-dim",
        "4",
    ])
    .status
    .success());
    let mangled = tmp.path().join("mangled.jsonl");
    std::fs::write(&mangled, "{\"doc_id\": \"d\"}\n").unwrap();
    let out = run(&[
        "predict",
        "--model",
        model_path.to_str().unwrap(),
        "--input",
        mangled.to_str().unwrap(),
        "--out",
        tmp.path().join("p.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");

    // unknown flag: usage error
    let out = run(&["gen", "--bogus"]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");

    // eval with predictions missing a labeled entity: data error
    let preds = tmp.path().join("empty.jsonl");
    std::fs::write(&preds, "").unwrap();
    let out = run(&[
        "eval",
        "--preds",
        preds.to_str().unwrap(),
        "--gold",
        corpus_dir.join("val.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}
