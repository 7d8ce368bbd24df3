use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn olfactor(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_olfactor"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, molecules: usize, labels: usize) {
    let o = olfactor(
        dir,
        &[
            "synth",
            "--molecules",
            &molecules.to_string(),
            "--labels",
            &labels.to_string(),
            "--output",
            "data.csv",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn analyze_writes_reports_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("data.csv"),
        "smiles,labels\nCCO,fruity;sweet\n,green\nC1CC,floral\nCC(=O)OC,fruity\nCCCC,\n",
    )
    .unwrap();
    let o = olfactor(
        dir.path(),
        &[
            "analyze",
            "--dataset",
            "data.csv",
            "--out-dir",
            "out",
            "--top-k",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stdout(&o).starts_with("2 molecules, 2 descriptors\n3 rows dropped"),
        "{}",
        stdout(&o)
    );

    let out = dir.path().join("out");
    let report = fs::read_to_string(out.join("cleaning_report.csv")).unwrap();
    assert_eq!(
        report,
        "row,reason\n1,missing_smiles\n2,parse_error:unmatched_ring_closure@1\n4,no_labels\n"
    );
    assert_eq!(
        fs::read_to_string(out.join("frequencies.csv")).unwrap(),
        "label,count\nfruity,2\nsweet,1\n"
    );
    let cooc = fs::read_to_string(out.join("cooccurrence.csv")).unwrap();
    assert_eq!(cooc, "label,fruity,sweet\nfruity,2,1\nsweet,1,1\n");
    assert!(out.join("label_counts.csv").is_file());
}

#[test]
fn featurize_writes_pooled_and_atom_rows() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("data.csv"),
        "smiles,labels\nCCO,fruity\nc1ccccc1,sweet\n",
    )
    .unwrap();
    let o = olfactor(
        dir.path(),
        &[
            "featurize",
            "--dataset",
            "data.csv",
            "--out-dir",
            "out",
            "--atoms",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let features = fs::read_to_string(dir.path().join("out/features.csv")).unwrap();
    let lines: Vec<&str> = features.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0].split(',').count(), 23);
    assert!(lines[1].starts_with("CCO,"));
    let atoms = fs::read_to_string(dir.path().join("out/atoms.csv")).unwrap();
    assert_eq!(atoms.lines().count(), 1 + 3 + 6);
}

#[test]
fn zero_epochs_writes_initial_checkpoint_and_empty_log() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 40, 4);
    let o = olfactor(
        dir.path(),
        &[
            "train",
            "--dataset",
            "data.csv",
            "--out-dir",
            "out",
            "--epochs",
            "0",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(dir.path().join("out/train_log.jsonl")).unwrap(),
        ""
    );
    assert!(dir.path().join("out/checkpoint.json").is_file());
    let o = olfactor(dir.path(), &["eval", "--dataset", "data.csv", "--out-dir", "out"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn training_log_has_one_record_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 120, 5);
    let o = olfactor(
        dir.path(),
        &[
            "train",
            "--dataset",
            "data.csv",
            "--out-dir",
            "out",
            "--epochs",
            "12",
            "--set",
            "train.lr=0.01",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let log = fs::read_to_string(dir.path().join("out/train_log.jsonl")).unwrap();
    let records: Vec<serde_json::Value> = log.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), 12);
    for (i, r) in records.iter().enumerate() {
        assert_eq!(r["epoch"], i + 1);
        for key in [
            "basis",
            "stt",
            "class",
            "sample",
            "col",
            "total",
            "val_f1",
            "val_auroc",
        ] {
            assert!(r.get(key).is_some(), "missing {key} in {r}");
        }
    }
    let val: Vec<f64> = records.iter().map(|r| r["val_total"].as_f64().unwrap()).collect();
    let best_so_far: Vec<f64> = val
        .iter()
        .scan(f64::INFINITY, |best, v| {
            *best = best.min(*v);
            Some(*best)
        })
        .collect();
    assert!(best_so_far.windows(2).all(|w| w[1] <= w[0]));
    assert!(
        best_so_far[11] < val[0],
        "validation loss never improved: {val:?}"
    );
    assert!(stdout(&o).contains("best validation macro-F1"));
}

#[test]
fn eval_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 60, 4);
    let o = olfactor(
        dir.path(),
        &[
            "train",
            "--dataset",
            "data.csv",
            "--out-dir",
            "out",
            "--epochs",
            "3",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let o = olfactor(dir.path(), &["eval", "--dataset", "data.csv", "--out-dir", "out"]);
        assert!(o.status.success(), "{}", stderr(&o));
        outputs.push(fs::read(dir.path().join("out/metrics.json")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let metrics: serde_json::Value = serde_json::from_slice(&outputs[0]).unwrap();
    assert_eq!(metrics["samples"], 60);
    assert_eq!(metrics["per_label"].as_array().unwrap().len(), 4);
}

#[test]
fn eval_rejects_unknown_labels() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 40, 4);
    let o = olfactor(
        dir.path(),
        &[
            "train",
            "--dataset",
            "data.csv",
            "--out-dir",
            "out",
            "--epochs",
            "0",
        ],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    fs::write(
        dir.path().join("other.csv"),
        "smiles,labels\nCCO,label00;minty\nCCC,woody\n",
    )
    .unwrap();
    let o = olfactor(
        dir.path(),
        &["eval", "--dataset", "other.csv", "--out-dir", "out"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("minty, woody"), "{}", stderr(&o));
}

#[test]
fn corrupt_checkpoint_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 20, 2);
    fs::write(dir.path().join("ckpt.json"), "{\"schema_version\": 1,").unwrap();
    let o = olfactor(
        dir.path(),
        &["eval", "--dataset", "data.csv", "--checkpoint", "ckpt.json"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("malformed checkpoint"), "{}", stderr(&o));
}

#[test]
fn config_problems_are_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# experiment\nloss.lambda1=0.3\nloss.lambda3=-2\nmodel.depth=3\ntrain.lr=fast\n",
    )
    .unwrap();
    let o = olfactor(
        dir.path(),
        &[
            "train",
            "--config",
            "run.cfg",
            "--set",
            "train.train_fraction=0.5",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for needle in [
        "run.cfg:4: unknown key `model.depth`",
        "run.cfg:5: train.lr",
        "loss.lambda3",
        "train.train_fraction",
    ] {
        assert!(err.contains(needle), "{needle} missing from:\n{err}");
    }
}

#[test]
fn missing_dataset_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let o = olfactor(dir.path(), &["analyze"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("paths.dataset"));
    let o = olfactor(dir.path(), &["featurize", "--dataset", "absent.csv"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn gradcheck_prints_a_passing_table() {
    let dir = tempfile::tempdir().unwrap();
    for extra in [&[][..], &["--set", "hmfm.sigma_prime=0"][..]] {
        let mut args = vec!["gradcheck", "--seed", "5"];
        args.extend_from_slice(extra);
        let o = olfactor(dir.path(), &args);
        assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
        let text = stdout(&o);
        assert!(text.lines().next().unwrap().contains("nudged"));
        for name in ["cil.total", "hmfm.input", "mlp.head.weight", "graph.head.weight"] {
            assert!(text.contains(name), "{name} missing from:\n{text}");
        }
    }
}

#[test]
fn converged_synthetic_run_scores_well_on_its_training_set() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), 200, 10);
    fs::write(
        dir.path().join("run.cfg"),
        "paths.dataset=data.csv\npaths.out_dir=out\nmodel.hidden_dims=64,64\nhmfm.dim=32\n\
         train.lr=0.01\ntrain.epochs=100\ntrain.train_fraction=1\ntrain.val_fraction=0\n",
    )
    .unwrap();
    let o = olfactor(dir.path(), &["train", "--config", "run.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = olfactor(dir.path(), &["eval", "--config", "run.cfg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let metrics: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/metrics.json")).unwrap()).unwrap();
    let f1 = metrics["macro_f1"].as_f64().unwrap();
    assert!(f1 >= 0.9, "macro-F1 {f1}");
}
