use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use combood::cli::fit_with_calibration;
use combood::dataio::{self, archive, MatrixFormat};
use combood::metrics::{self, EvalReport};
use combood::{DetectorConfig, FeatureMatrix};

fn combood(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_combood"))
        .args(args)
        .env_remove("COMBOOD_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small far-OOD scenario written to `dir` by the synth subcommand.
fn synth(dir: &Path, shift: &str) -> PathBuf {
    let out = dir.join("data");
    let o = combood(&[
        "synth", p(&out), "--n-train", "300", "--n-id-test", "100", "--n-ood-test", "100",
        "--shift", shift, "--seed", "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

fn fit(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let (ex, em) = (data.join("train_extrema.npy"), data.join("train_embed.npy"));
    let mut args = vec![
        "fit",
        p(&ex),
        p(&em),
        p(out),
        "--k",
        "10",
    ];
    args.extend_from_slice(extra);
    combood(&args)
}

fn score(det: &Path, data: &Path, split: &str, out: &Path) -> Output {
    combood(&[
        "score",
        p(det),
        p(&data.join(format!("{split}_extrema.npy"))),
        p(&data.join(format!("{split}_embed.npy"))),
        p(out),
    ])
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "8");
    let manifest = std::fs::read_to_string(data.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 5"));

    let det = dir.path().join("d.combood");
    let o = fit(&data, &det, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("config: reg_c=1 k=10"));

    // the archive matches a library fit with the same hold-out
    let load = |s: &str| dataio::load_matrix_auto(data.join(s)).unwrap();
    let cfg = DetectorConfig { k: 10, ..Default::default() };
    let lib = fit_with_calibration(&load("train_extrema.npy"), &load("train_embed.npy"), cfg, 0.1).unwrap();
    assert_eq!(std::fs::read(&det).unwrap(), archive::encode(&lib));

    let (id_csv, ood_csv) = (dir.path().join("id.csv"), dir.path().join("ood.csv"));
    for (split, out) in [("id", &id_csv), ("ood", &ood_csv)] {
        let o = score(&det, &data, split, out);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&id_csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "id,kc,mc,score,decision");
    assert_eq!(lines.len(), 101);
    assert!(lines[1].starts_with("0,"));

    let report_path = dir.path().join("eval.json");
    let o = combood(&["eval", p(&id_csv), p(&ood_csv), p(&report_path)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: EvalReport = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let id = dataio::read_score_file(&id_csv, "score").unwrap();
    let ood = dataio::read_score_file(&ood_csv, "score").unwrap();
    assert_eq!(report, metrics::evaluate(&id, &ood, 0.95).unwrap());
    assert!(report.auroc >= 0.99, "{report:?}");

    let (ex, em) = (data.join("id_extrema.npy"), data.join("id_embed.npy"));
    for parallel in [false, true] {
        let bench = dir.path().join("bench.json");
        let mut args = vec![
            "bench",
            p(&det),
            p(&ex),
            p(&em),
            p(&bench),
            "--repeats",
            "2",
        ];
        if parallel {
            args.push("--parallel");
        }
        let o = combood(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&bench).unwrap()).unwrap();
        assert_eq!(v["samples"], 100);
        assert_eq!(v["mode"], if parallel { "parallel" } else { "serial" });
        assert!(v["mean_ms"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn uncalibrated_detector_omits_decisions() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "8");
    let det = dir.path().join("d.combood");
    assert!(fit(&data, &det, &["--calibrate-split", "0"]).status.success());
    let out = dir.path().join("s.csv");
    let o = score(&det, &data, "id", &out);
    assert!(o.status.success());
    assert!(stderr(&o).contains("uncalibrated"));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("id,kc,mc,score\n"));
}

#[test]
fn error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "8");
    let det = dir.path().join("d.combood");

    let missing = dir.path().join("nope.npy");
    let o = combood(&["fit", p(&missing), p(&data.join("train_embed.npy")), p(&det)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(p(&missing)));

    let o = fit(&data, &det, &["--reg-c", "-1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));

    assert_eq!(combood(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(combood(&["--help"]).status.code(), Some(0));

    // 10 extrema rows against 9 embedding rows
    assert!(fit(&data, &det, &[]).status.success());
    let ex = dataio::load_matrix_auto(data.join("id_extrema.npy")).unwrap();
    let em = dataio::load_matrix_auto(data.join("id_embed.npy")).unwrap();
    let (ex10, em9) = (dir.path().join("ex10.npy"), dir.path().join("em9.npy"));
    let head = |m: &FeatureMatrix, n: usize| m.select_rows(&(0..n).collect::<Vec<_>>()).unwrap();
    dataio::save_matrix(&ex10, &head(&ex, 10), MatrixFormat::Npy).unwrap();
    dataio::save_matrix(&em9, &head(&em, 9), MatrixFormat::Npy).unwrap();
    let o = combood(&["score", p(&det), p(&ex10), p(&em9), p(&dir.path().join("x.csv"))]);
    assert_eq!(o.status.code(), Some(2));

    let em10 = dir.path().join("em10.npy");
    dataio::save_matrix(&em10, &head(&em, 10), MatrixFormat::Npy).unwrap();
    let out = dir.path().join("ten.csv");
    let o = combood(&["score", p(&det), p(&ex10), p(&em10), p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 11);
}

#[test]
fn eval_on_fixed_tables() {
    let dir = tempfile::tempdir().unwrap();
    let table = |name: &str, scores: &[f64]| {
        let path = dir.path().join(name);
        let mut s = String::from("id,score\n");
        for (i, v) in scores.iter().enumerate() {
            s.push_str(&format!("{i},{v}\n"));
        }
        std::fs::write(&path, s).unwrap();
        path
    };
    let hi = table("hi.csv", &[5.0, 6.0, 7.0, 8.0]);
    let lo = table("lo.csv", &[1.0, 2.0, 3.0]);
    let same = table("same.csv", &[1.0, 1.0, 1.0]);
    let run = |a: &Path, b: &Path| -> serde_json::Value {
        let out = dir.path().join("r.json");
        let o = combood(&["eval", p(a), p(b), p(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap()
    };
    assert_eq!(run(&hi, &lo)["auroc"], 1.0);
    assert_eq!(run(&same, &same)["auroc"], 0.5);
    assert_eq!(run(&hi, &lo)["n_id"], 4);
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "8");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            p(&data.join("train_extrema.npy")).to_string(),
            p(&data.join("id_extrema.npy")).to_string(),
            p(&data.join("ood_extrema.npy")).to_string(),
            p(out).to_string(),
        ]
    };
    let out = dir.path().join("sweep.csv");
    let a = args(&out);
    let o = combood(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(text.lines().next(), Some("c,auroc"));
    assert_eq!(rows.len(), 7);
    for r in rows {
        let auroc: f64 = r.split(',').nth(1).unwrap().parse().unwrap();
        assert!(auroc >= 0.9, "{r}");
    }

    let mut one = args(&out);
    one.push("--c-values".into());
    one.push("1".into());
    assert!(combood(&one.iter().map(String::as_str).collect::<Vec<_>>()).status.success());
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 2);

    let mut neg = args(&out);
    neg.push("--c-values=-1".into());
    let o = combood(&neg.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn thread_count_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "8");
    let det = dir.path().join("d.combood");
    assert!(fit(&data, &det, &[]).status.success());
    let out = dir.path().join("s.csv");
    let (ex, em) = (data.join("id_extrema.npy"), data.join("id_embed.npy"));
    let args = [
        "score",
        p(&det),
        p(&ex),
        p(&em),
        p(&out),
    ];
    let o = Command::new(env!("CARGO_BIN_EXE_combood"))
        .args(args)
        .env("COMBOOD_THREADS", "3")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("threads=3"), "{}", stderr(&o));
    let mut with_flag = vec!["--threads", "2"];
    with_flag.extend_from_slice(&args);
    let o = Command::new(env!("CARGO_BIN_EXE_combood"))
        .args(&with_flag)
        .env("COMBOOD_THREADS", "3")
        .output()
        .unwrap();
    assert!(stderr(&o).contains("threads=2"), "{}", stderr(&o));

    let o = Command::new(env!("CARGO_BIN_EXE_combood"))
        .args(args)
        .env("COMBOOD_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}
