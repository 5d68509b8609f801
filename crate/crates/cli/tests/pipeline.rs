use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use jumpcal::evalkit::PricingReport;
use tempfile::TempDir;

fn jumpcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jumpcal"))
        .args(args)
        .env("JUMPCAL_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let o = jumpcal(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    o
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"{
  "train": {
    "engine": { "paths": 16, "steps": 4, "epochs": 3, "arch": { "hidden": [4] } },
    "ann": { "hidden": [4], "epochs": 5 },
    "calibration": { "restarts": 1, "simplex": { "max_evals": 60 } }
  }
}"#;

struct Fixture {
    dir: TempDir,
}

impl Fixture {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("small.json"), SMALL).unwrap();
        ok(&[
            "generate",
            "--model",
            "heston",
            "--seed",
            "1",
            "--out",
            s(&dir.path().join("data")),
        ]);
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn train(&self, model: &str, out: &str, extra: &[&str]) -> Output {
        let (cfg, data, out) = (self.path("small.json"), self.path("data/train.csv"), self.path(out));
        let mut args = vec![
            "train",
            "--config",
            s(&cfg),
            "--seed",
            "3",
            "--model",
            model,
            "--data",
            s(&data),
            "--out",
            s(&out),
        ];
        args.extend_from_slice(extra);
        jumpcal(&args)
    }
}

#[test]
fn generate_writes_both_grids_reproducibly() {
    let f = Fixture::new();
    let rows = |p: &str| fs::read_to_string(f.path(p)).unwrap().lines().count() - 1;
    assert_eq!(rows("data/train.csv"), 45);
    assert_eq!(rows("data/test.csv"), 170);
    ok(&[
        "generate",
        "--model",
        "heston",
        "--seed",
        "1",
        "--out",
        s(&f.path("again")),
    ]);
    for file in ["train.csv", "test.csv", "manifest.json"] {
        assert_eq!(
            fs::read(f.path("data").join(file)).unwrap(),
            fs::read(f.path("again").join(file)).unwrap()
        );
    }
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"seed": 1, "generate": {"model": "garch"}}"#).unwrap();
    let o = jumpcal(&["generate", "--config", s(&bad), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("generate.model"));

    let o = jumpcal(&["generate", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));

    let o = jumpcal(&["generate", "--model", "garch", "--seed", "1", "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_input_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = jumpcal(&[
        "train",
        "--seed",
        "1",
        "--data",
        s(&dir.path().join("nope.csv")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn divergence_exits_with_two() {
    let f = Fixture::new();
    let cfg = f.path("blowup.json");
    fs::write(
        &cfg,
        r#"{"train": {"engine": {"paths": 4, "steps": 2, "epochs": 2, "arch": {"hidden": [2], "initial_output": [1e308, 0.2, 0.05, 0.0, 0.1, 0.05, 0.5, 0.0]}}}}"#,
    )
    .unwrap();
    let o = jumpcal(&[
        "train",
        "--config",
        s(&cfg),
        "--seed",
        "1",
        "--data",
        s(&f.path("data/train.csv")),
        "--out",
        s(&f.path("x")),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("epoch 0"));
}

#[test]
fn zero_epochs_keeps_the_initial_networks() {
    let f = Fixture::new();
    let o = f.train("njsde", "m0", &["--epochs", "0"]);
    assert!(o.status.success());
    let text = fs::read_to_string(f.path("m0/model.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["state"]["epochs_done"], 0);
    let mut cfg = jumpcal::TrainConfig {
        paths: 16,
        steps: 4,
        epochs: 0,
        bank_seed: 3,
        ..Default::default()
    };
    cfg.arch.hidden = vec![4];
    let fresh = jumpcal::njsde::TrainState::new(&cfg, 3).unwrap();
    let stored: jumpcal::njsde::TrainState = serde_json::from_value(v["state"].clone()).unwrap();
    assert_eq!(stored.nets, fresh.nets);
    assert_eq!(fs::read_to_string(f.path("m0/loss.csv")).unwrap(), "epoch,loss,tau\n");
}

#[test]
fn nsde_manifest_records_the_clamped_jump_heads() {
    let f = Fixture::new();
    assert!(f.train("nsde", "n", &[]).status.success());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.path("n/manifest.json")).unwrap()).unwrap();
    let clamped: Vec<&str> = m["summary"]["clamped_heads"]
        .as_array()
        .unwrap()
        .iter()
        .map(|h| h.as_str().unwrap())
        .collect();
    assert_eq!(clamped.len(), 3, "{clamped:?}");
    assert_eq!(m["config"]["train"]["engine"]["model"], "nsde");
}

#[test]
fn resumed_training_matches_an_uninterrupted_run() {
    let f = Fixture::new();
    assert!(f.train("njsde", "full", &[]).status.success());
    assert!(f.train("njsde", "half", &["--stop-after", "1"]).status.success());
    let ckpt = f.path("half/model.json");
    assert!(f.train("njsde", "rest", &["--resume", s(&ckpt)]).status.success());
    assert_eq!(
        fs::read(f.path("full/loss.csv")).unwrap(),
        fs::read(f.path("rest/loss.csv")).unwrap()
    );
    assert_eq!(
        fs::read(f.path("full/model.json")).unwrap(),
        fs::read(f.path("rest/model.json")).unwrap()
    );

    // a checkpoint from a different configuration is refused
    let o = f.train("njsde", "other", &["--resume", s(&ckpt), "--paths", "8"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ann_memorizes_a_single_quote() {
    let f = Fixture::new();
    let text = fs::read_to_string(f.path("data/train.csv")).unwrap();
    let one: Vec<&str> = text.lines().take(2).collect();
    fs::write(f.path("one.csv"), one.join("\n") + "\n").unwrap();
    let cfg = f.path("ann.json");
    fs::write(
        &cfg,
        r#"{"train": {"ann": {"hidden": [4], "epochs": 3000, "optimizer": {"learning_rate": 0.01}}}}"#,
    )
    .unwrap();
    ok(&[
        "train",
        "--config",
        s(&cfg),
        "--seed",
        "2",
        "--model",
        "ann",
        "--data",
        s(&f.path("one.csv")),
        "--out",
        s(&f.path("ann")),
    ]);
    let model = format!("ann={}", s(&f.path("ann/model.json")));
    ok(&[
        "evaluate",
        "--model",
        &model,
        "--train-data",
        s(&f.path("one.csv")),
        "--out",
        s(&f.path("ev")),
    ]);
    let r: PricingReport =
        serde_json::from_str(&fs::read_to_string(f.path("ev/reports/ann_in.json")).unwrap()).unwrap();
    assert!(r.mae < 1e-2, "{}", r.mae);
}

#[test]
fn evaluate_and_compare_layouts() {
    let f = Fixture::new();
    let mut models = Vec::new();
    for m in ["bs", "ann", "nsde"] {
        assert!(f.train(m, m, &[]).status.success());
        models.push(format!("{m}={}", s(&f.path(&format!("{m}/model.json")))));
    }
    // the same model twice, under two labels
    models.push(format!("bs2={}", s(&f.path("bs/model.json"))));
    let mut args = vec!["evaluate", "--seed", "0"];
    for m in &models {
        args.extend(["--model", m.as_str()]);
    }
    let (tr, te) = (f.path("data/train.csv"), f.path("data/test.csv"));
    args.extend(["--train-data", s(&tr), "--test-data", s(&te)]);
    let (e1, e2) = (f.path("ev1"), f.path("ev2"));
    let mut a1 = args.clone();
    a1.extend(["--out", s(&e1)]);
    let mut a2 = args.clone();
    a2.extend(["--out", s(&e2)]);
    ok(&a1);
    ok(&a2);
    for file in [
        "summary.csv",
        "buckets.csv",
        "manifest.json",
        "reports/nsde_out.json",
        "reports/ann_in.csv",
    ] {
        assert_eq!(
            fs::read(e1.join(file)).unwrap(),
            fs::read(e2.join(file)).unwrap(),
            "{file}"
        );
    }
    let table = fs::read_to_string(e1.join("summary.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines.iter().all(|l| l.split(',').count() == 6));

    let reports: Vec<String> = ["bs", "bs2", "ann", "nsde"]
        .iter()
        .map(|l| format!("{l}={}", s(&e1.join(format!("reports/{l}_out.json")))))
        .collect();
    let compare = |order: &[usize], out: &str| {
        let mut args = vec!["compare", "--out"];
        let out = f.path(out);
        args.push(s(&out));
        for &i in order {
            args.extend(["--model", reports[i].as_str()]);
        }
        ok(&args);
        serde_json::from_str::<serde_json::Value>(&fs::read_to_string(out.join("dm_matrix.json")).unwrap()).unwrap()
    };
    let m = compare(&[0, 1, 2, 3], "dm");
    assert_eq!(m["entries"][0][1]["statistic"], 0.0);
    assert_eq!(m["entries"][0][1]["p_value"], 1.0);
    let swapped = compare(&[3, 2], "dm_swapped");
    let a = m["entries"][2][3]["statistic"].as_f64().unwrap();
    let b = swapped["entries"][0][1]["statistic"].as_f64().unwrap();
    assert_eq!(a, -b);

    let o = jumpcal(&["compare", "--out", s(&f.path("dm1")), "--model", reports[0].as_str()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn six_models_give_fifteen_comparisons() {
    let f = Fixture::new();
    assert!(f.train("bs", "bs", &[]).status.success());
    let model = format!("bs={}", s(&f.path("bs/model.json")));
    ok(&[
        "evaluate",
        "--model",
        &model,
        "--test-data",
        s(&f.path("data/test.csv")),
        "--out",
        s(&f.path("ev")),
    ]);
    // perturbed copies of one report stand in for six models
    let base: PricingReport =
        serde_json::from_str(&fs::read_to_string(f.path("ev/reports/bs_out.json")).unwrap()).unwrap();
    let mut args = vec!["compare".to_string(), "--out".into(), s(&f.path("dm")).into()];
    for k in 0..6 {
        let mut r = base.clone();
        for (i, row) in r.rows.iter_mut().enumerate() {
            row.predicted += 0.01 * k as f64 * ((i * (k + 1)) as f64).sin();
        }
        let p = f.path(&format!("r{k}.json"));
        fs::write(&p, serde_json::to_string(&r).unwrap()).unwrap();
        args.push("--model".into());
        args.push(format!("m{k}={}", s(&p)));
    }
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(&args);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(f.path("dm/dm_matrix.json")).unwrap()).unwrap();
    let n = m["entries"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r.as_array().unwrap())
        .filter(|e| !e.is_null())
        .count();
    assert_eq!(n, 15);
}
