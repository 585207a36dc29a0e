use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn growbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_growbench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let data = dir.join(name);
    let out = growbench(&["gen", "--out", p(&data), "--rows", "300", "--seed", seed]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    data
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    assert_eq!(code(&growbench(&["gen", "--out", p(&csv), "--days", "0"])), 2);
    assert_eq!(code(&growbench(&["train", "--model", "lr"])), 2);
    assert_eq!(
        code(&growbench(&[
            "train",
            "--data",
            "missing.csv",
            "--model",
            "svm",
            "--out",
            "o"
        ])),
        2
    );
    assert_eq!(code(&growbench(&["report", "--out", p(dir.path())])), 2);
    assert_eq!(code(&growbench(&["water-sim", "--out", p(&csv), "--levels", "0,0"])), 2);
    assert_eq!(code(&growbench(&["bogus"])), 2);
}

#[test]
fn full_pipeline_writes_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.csv", "3");
    assert!(dir.path().join("d.truth.json").exists());
    let out = dir.path().join("out");
    for m in ["lr", "dnn", "lstm"] {
        let t = growbench(
            &[
                "train",
                "--data",
                p(&data),
                "--model",
                m,
                "--out",
                p(&out),
                "--epochs",
                "2",
                "--arch",
                "8",
            ]
            .into_iter()
            .filter(|a| m != "lr" || !matches!(*a, "--arch" | "8"))
            .collect::<Vec<_>>(),
        );
        assert_eq!(code(&t), 0, "{}", String::from_utf8_lossy(&t.stderr));
        let e = growbench(&["eval", "--data", p(&data), "--model", m, "--out", p(&out)]);
        assert_eq!(code(&e), 0, "{}", String::from_utf8_lossy(&e.stderr));
        let x = growbench(&[
            "explain",
            "--data",
            p(&data),
            "--model",
            m,
            "--out",
            p(&out),
            "--samples",
            "3",
            "--background",
            "5",
        ]);
        assert_eq!(code(&x), 0, "{}", String::from_utf8_lossy(&x.stderr));
    }
    let r = growbench(&["report", "--out", p(&out)]);
    assert_eq!(code(&r), 0);
    let table = String::from_utf8(r.stdout).unwrap();
    for label in [
        "Parameters",
        "MSE",
        "MAE",
        "R2",
        "Execution Time",
        "CPU Usage",
        "RAM Usage",
        "Disk Read",
        "Disk Write",
    ] {
        assert!(table.contains(label), "missing row {label}");
    }
    for m in ["lr", "dnn", "lstm"] {
        for suffix in [
            "ckpt.json",
            "loss.csv",
            "eval.json",
            "predictions.csv",
            "predictions.svg",
            "shap.json",
            "importance.csv",
            "importance.svg",
        ] {
            assert!(out.join(format!("{m}.{suffix}")).exists(), "{m}.{suffix}");
        }
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let models: Vec<&str> = report["models"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m["model"].as_str().unwrap())
        .collect();
    assert_eq!(models, ["lr", "lstm", "dnn"]);
}

#[test]
fn changed_dataset_is_an_artifact_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.csv", "3");
    let out = dir.path().join("out");
    assert_eq!(
        code(&growbench(&[
            "train",
            "--data",
            p(&data),
            "--model",
            "lr",
            "--out",
            p(&out)
        ])),
        0
    );
    let other = gen(dir.path(), "e.csv", "4");
    fs::copy(&other, &data).unwrap();
    let e = growbench(&["eval", "--data", p(&data), "--model", "lr", "--out", p(&out)]);
    assert_eq!(code(&e), 4, "{}", String::from_utf8_lossy(&e.stderr));
}

#[test]
fn singular_design_is_a_numeric_failure() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen(dir.path(), "d.csv", "3");
    // Pin CO2 to one value so its standardized column is all zeros.
    let text = fs::read_to_string(&data).unwrap();
    let pinned: Vec<String> = text
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let mut cells: Vec<&str> = line.split(';').collect();
            if i > 0 {
                cells[2] = "900";
            }
            cells.join(";")
        })
        .collect();
    fs::write(&data, pinned.join("\n") + "\n").unwrap();
    let t = growbench(&[
        "train",
        "--data",
        p(&data),
        "--model",
        "lr",
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(code(&t), 3, "{}", String::from_utf8_lossy(&t.stderr));
    assert!(String::from_utf8_lossy(&t.stderr).contains("CO2"));
}

#[test]
fn config_file_fills_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let data = dir.path().join("d.csv");
    fs::write(&cfg, format!("seed = 9\n[gen]\nrows = 120\nout = \"{}\"\n", p(&data))).unwrap();
    let g = growbench(&["gen", "--config", p(&cfg)]);
    assert_eq!(code(&g), 0, "{}", String::from_utf8_lossy(&g.stderr));
    assert_eq!(fs::read_to_string(&data).unwrap().lines().count(), 121);
    let g = growbench(&["gen", "--config", p(&cfg), "--rows", "50"]);
    assert_eq!(code(&g), 0);
    assert_eq!(fs::read_to_string(&data).unwrap().lines().count(), 51);
}

#[test]
fn water_sim_trace_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("w.csv");
    let s = growbench(&[
        "water-sim",
        "--out",
        p(&trace),
        "--ticks",
        "60",
        "--fill-rate",
        "10",
        "--drain-at",
        "40",
    ]);
    assert_eq!(code(&s), 0, "{}", String::from_utf8_lossy(&s.stderr));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("tick,tank_percent"));
    assert_eq!(text.lines().count(), 62);
    let c = growbench(&["water-sim", "--check"]);
    assert_eq!(code(&c), 0);
    assert!(String::from_utf8_lossy(&c.stdout).contains("hold"));
}
