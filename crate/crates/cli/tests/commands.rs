use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cgnet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgnet"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn gen(dir: &Path, name: &str, n: &str, seed: &str) {
    let o = cgnet(
        &[
            "gen-data",
            "--n",
            n,
            "--seed",
            seed,
            "--potential",
            "lennard_jones",
            "--out",
            name,
        ],
        dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_data_is_deterministic_and_labelled() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "a.jsonl", "30", "7");
    gen(dir.path(), "b.jsonl", "30", "7");
    gen(dir.path(), "c.jsonl", "30", "8");
    let a = fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.jsonl")).unwrap());
    assert_ne!(a, fs::read_to_string(dir.path().join("c.jsonl")).unwrap());
    for line in a.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let pos: Vec<[f64; 3]> = serde_json::from_value(v["positions"].clone()).unwrap();
        let mut e = 0.0;
        for i in 0..pos.len() {
            for j in i + 1..pos.len() {
                let r2: f64 = (0..3).map(|k| (pos[i][k] - pos[j][k]).powi(2)).sum();
                let s6 = r2.powi(-3);
                e += 4.0 * (s6 * s6 - s6);
            }
        }
        let label = v["energy"].as_f64().unwrap();
        assert!(
            (e - label).abs() <= 1e-12 * e.abs().max(1.0),
            "{e} vs {label}"
        );
    }
}

fn metrics_without_wall(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').unwrap().0.to_string())
        .collect()
}

#[test]
fn train_eval_and_forces() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "d.jsonl", "40", "3");
    fs::write(
        p.join("t.cfg"),
        "# small run\ndata = d.jsonl\nepochs = 4\nchannels = 2\nlearning_rate = 1e-3\n",
    )
    .unwrap();
    for (ckpt, csv) in [("m1.json", "m1.csv"), ("m2.json", "m2.csv")] {
        let o = cgnet(
            &[
                "train",
                "--config",
                "t.cfg",
                "--out",
                ckpt,
                "--metrics",
                csv,
            ],
            p,
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let m1 = metrics_without_wall(&p.join("m1.csv"));
    assert_eq!(m1[0], "epoch,train_rmse,holdout_rmse");
    assert_eq!(m1.len(), 6);
    assert_eq!(m1, metrics_without_wall(&p.join("m2.csv")));
    assert_eq!(
        fs::read(p.join("m1.json")).unwrap(),
        fs::read(p.join("m2.json")).unwrap()
    );

    let rows: Vec<Vec<f64>> = m1[1..]
        .iter()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert!(
        rows.last().unwrap()[1] <= rows[0][1],
        "train rmse went up: {rows:?}"
    );

    let o = cgnet(&["eval", "--ckpt", "m1.json", "--data", "d.jsonl"], p);
    assert!(o.status.success());
    let out = stdout(&o);
    let rmse: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("rmse "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(rmse.is_finite());
    assert!(out.contains("max_abs_error"));

    let o = cgnet(
        &[
            "forces", "--ckpt", "m1.json", "--data", "d.jsonl", "--out", "f.jsonl",
        ],
        p,
    );
    assert!(o.status.success());
    let text = fs::read_to_string(p.join("f.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 40);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        let f: Vec<[f64; 3]> = serde_json::from_value(v["forces"].clone()).unwrap();
        for k in 0..3 {
            assert!(f.iter().map(|x| x[k]).sum::<f64>().abs() < 1e-9);
        }
    }
}

#[test]
fn fresh_model_eval_is_finite() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "d.jsonl", "10", "0");
    let o = cgnet(
        &[
            "train",
            "--data",
            "d.jsonl",
            "--epochs",
            "0",
            "--out",
            "m.json",
            "--metrics",
            "m.csv",
        ],
        p,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = cgnet(&["eval", "--ckpt", "m.json", "--data", "d.jsonl"], p);
    assert!(!stdout(&o).contains("NaN"));
}

#[test]
fn selftest_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let ok = cgnet(&["selftest"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stdout(&ok));
    assert!(stdout(&ok).contains("0 failed"));

    let strict = cgnet(&["selftest", "--tol-scale", "1e-30"], dir.path());
    assert_eq!(strict.status.code(), Some(1));

    let fault = cgnet(&["selftest", "--cg-fault", "1e-3"], dir.path());
    assert_eq!(fault.status.code(), Some(1));
    let line = stdout(&fault)
        .lines()
        .find(|l| l.contains("cg_block_diagonalization"))
        .unwrap()
        .to_string();
    assert!(line.starts_with("FAIL"), "{line}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(p.join("bad.cfg"), "data = d.jsonl\nwarp_speed = 9\n").unwrap();
    let o = cgnet(
        &[
            "train",
            "--config",
            "bad.cfg",
            "--out",
            "m",
            "--metrics",
            "c",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.cfg:2"));
    assert_eq!(cgnet(&["train"], p).status.code(), Some(2));
    assert_eq!(cgnet(&["frobnicate"], p).status.code(), Some(2));
    assert_eq!(
        cgnet(&["dump-cg", "--lmax", "99", "--out", "x"], p)
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn missing_files_fail_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgnet(
        &["eval", "--ckpt", "nope.json", "--data", "nope.jsonl"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_dataset_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    gen(p, "d.jsonl", "3", "0");
    let mut text = fs::read_to_string(p.join("d.jsonl")).unwrap();
    text.push_str("{\"positions\": [[0,0,0]], \"species\": []}\n");
    fs::write(p.join("d.jsonl"), text).unwrap();
    let o = cgnet(
        &[
            "train",
            "--data",
            "d.jsonl",
            "--epochs",
            "1",
            "--out",
            "m",
            "--metrics",
            "c",
        ],
        p,
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(
        String::from_utf8_lossy(&o.stderr).contains("d.jsonl:4"),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn dump_cg_has_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let o = cgnet(&["dump-cg", "--lmax", "2", "--out", "cg.json"], dir.path());
    assert!(o.status.success());
    let v: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("cg.json")).unwrap()).unwrap();
    let c = v
        .iter()
        .find(|e| e["l1"] == 1 && e["l2"] == 1 && e["l"] == 0 && e["m1"] == 0)
        .unwrap()["value"]
        .as_f64()
        .unwrap();
    assert_eq!(c, -(1.0f64 / 3.0).sqrt());
}
