//! Acceptance gate: one line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the criteria execute one at a time;
//! the profiler and timing checks must not share the CPU with other tests.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use growbench::dataset::{
    clean, parse_csv, split, write_csv, CsvOptions, DesignMatrix, FeatureSet, ScalerStats, SplitMode,
};
use growbench::eval::{interval95, metrics, profile, IntervalMethod};
use growbench::explain::{background_rows, feature_groups, shapley_exact};
use growbench::models::{lr_fit, LRParams, LstmParams, MlpParams, ModelKind, ModelSpec, ParamSet, TrainConfig};
use growbench::numerics::{Activation, Matrix, Rng};
use growbench::pipeline::{self, prepare, TrainRequest};
use growbench::sensorsim::{generate, model_check, SimConfig, WaterController};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    check(
        elapsed < limit,
        format!(
            "{detail}; {:.2} s (limit {:.0} s)",
            elapsed.as_secs_f64(),
            limit.as_secs_f64()
        ),
    )
}

fn parameter_counts() -> Outcome {
    let start = Instant::now();
    let lr = LRParams {
        coefficients: vec![0.0; 6],
        intercept: 0.0,
    };
    let lstm = LstmParams::zeros(10, 1, &[100, 100], Activation::Tanh);
    let mlp = MlpParams::zeros(&[6, 300, 300, 150, 1]);
    let got = [
        (lr.parameter_count(), lr.walk_count()),
        (lstm.parameter_count(), lstm.walk_count()),
        (mlp.parameter_count(), mlp.walk_count()),
    ];
    let want = [7, 124_901, 137_701];
    let ok = got.iter().zip(want).all(|(&(a, b), w)| a == w && b == w);
    let detail = format!("LR {} LSTM {} MLP {}", got[0].0, got[1].0, got[2].0);
    if !ok {
        return Err(format!("{detail} (walked {:?})", got));
    }
    within(start.elapsed(), Duration::from_secs(1), detail)
}

fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64
}

/// Largest relative error between the analytic gradient and central
/// differences over every parameter.
fn max_rel_error<P: ParamSet + Clone>(params: &P, analytic: &[f64], loss: impl Fn(&P) -> f64) -> f64 {
    let base = params.flatten();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut probe = params.clone();
    for i in 0..base.len() {
        let mut flat = base.clone();
        flat[i] = base[i] + h;
        probe.assign(&flat);
        let up = loss(&probe);
        flat[i] = base[i] - h;
        probe.assign(&flat);
        let down = loss(&probe);
        let numeric = (up - down) / (2.0 * h);
        let scale = analytic[i].abs().max(numeric.abs()).max(1e-7);
        worst = worst.max((analytic[i] - numeric).abs() / scale);
    }
    worst
}

fn gradients() -> Outcome {
    let start = Instant::now();
    let mut rng = Rng::new(2024);
    let (mut mlp_worst, mut lstm_worst) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let mlp = MlpParams::glorot(&[6, 4, 1], &mut rng);
        let x = Matrix::new(8, 6, rng.normal_vec(48, 0.0, 1.0)).unwrap();
        let y = rng.normal_vec(8, 0.0, 1.0);
        let (_, g) = mlp.loss_and_grad(&x, &y, None).unwrap();
        mlp_worst = mlp_worst.max(max_rel_error(&mlp, &g.flatten(), |m| mse(&m.predict(&x).unwrap(), &y)));

        let lstm = LstmParams::init(3, 2, &[4], Activation::Tanh, &mut rng);
        let x = Matrix::new(8, 6, rng.normal_vec(48, 0.0, 1.0)).unwrap();
        let (_, g) = lstm.loss_and_grad(&x, &y, None).unwrap();
        lstm_worst = lstm_worst.max(max_rel_error(&lstm, &g.flatten(), |m| mse(&m.predict(&x).unwrap(), &y)));
    }
    let detail = format!("max rel error MLP {mlp_worst:.2e}, LSTM {lstm_worst:.2e} over 20 points");
    if mlp_worst >= 1e-4 || lstm_worst >= 1e-4 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(30), detail)
}

fn train_request(data: &Path, out: &Path, kind: ModelKind, epochs: usize) -> TrainRequest {
    let mut train = TrainConfig::default_for(kind);
    if kind != ModelKind::Lr {
        train.epochs = epochs;
    }
    TrainRequest {
        data: data.to_path_buf(),
        out_dir: out.to_path_buf(),
        spec: ModelSpec::default_for(kind),
        train,
        test_ratio: pipeline::DEFAULT_TEST_RATIO,
        split_mode: SplitMode::Shuffled,
        max_rows: None,
        config_path: None,
    }
}

fn model_ordering(dir: &Path) -> Outcome {
    let start = Instant::now();
    let data = dir.join("ordering.csv");
    let sim = SimConfig {
        rows: Some(9600),
        ..SimConfig::default()
    };
    pipeline::run_gen(&sim, &data, false).map_err(|e| e.to_string())?;
    let out = dir.join("ordering");
    let mut r2 = Vec::new();
    for (kind, epochs) in [(ModelKind::Lr, 1), (ModelKind::Lstm, 30), (ModelKind::Dnn, 50)] {
        pipeline::run_train(&train_request(&data, &out, kind, epochs)).map_err(|e| e.to_string())?;
        let e = pipeline::run_eval(&data, &out, kind, IntervalMethod::Gaussian).map_err(|e| e.to_string())?;
        r2.push(e.report.metrics.r2.ok_or("undefined R2")?);
    }
    let (lr, lstm, dnn) = (r2[0], r2[1], r2[2]);
    let detail = format!("R2 LSTM {lstm:.4} >= DNN {dnn:.4} > LR {lr:.4} + 0.1, DNN >= 0.8");
    if !(lstm >= dnn && dnn > lr + 0.1 && dnn >= 0.8) {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(600), detail)
}

fn shapley(dir: &Path) -> Outcome {
    let start = Instant::now();
    let data = dir.join("shap.csv");
    let sim = SimConfig {
        rows: Some(600),
        seed: 5,
        ..SimConfig::default()
    };
    pipeline::run_gen(&sim, &data, false).map_err(|e| e.to_string())?;

    // Closed form for a linear model.
    let loaded = pipeline::load_dataset(&data).map_err(|e| e.to_string())?;
    let prep = prepare(
        &loaded.frames,
        FeatureSet::Sensors,
        1,
        0.2,
        7,
        SplitMode::Shuffled,
        None,
    )
    .map_err(|e| e.to_string())?;
    let (xtr, ytr) = prep.rows(&prep.split.train).map_err(|e| e.to_string())?;
    let lr = lr_fit(&xtr, &ytr, &prep.feature_names).map_err(|e| e.to_string())?;
    let bg_rows = background_rows(&prep.split.train, 100, 7);
    let bg = prep.x.select_rows(&bg_rows).unwrap();
    let bg_mean: Vec<f64> = (0..bg.cols())
        .map(|c| bg.column(c).iter().sum::<f64>() / bg.rows() as f64)
        .collect();
    let groups = feature_groups(prep.n_features(), 1);
    let mut closed_gap: f64 = 0.0;
    let mut eff_gap: f64 = 0.0;
    for &r in prep.split.test.iter().take(50) {
        let x = prep.x.row(r);
        let a = shapley_exact(|m: &Matrix| lr.predict(m), x, &bg, &groups).map_err(|e| e.to_string())?;
        for (i, phi) in a.shap.iter().enumerate() {
            closed_gap = closed_gap.max((phi - lr.coefficients[i] * (x[i] - bg_mean[i])).abs());
        }
        eff_gap = eff_gap.max(a.efficiency_gap());
    }

    // Efficiency for every trained model on every explained sample.
    let out = dir.join("shap");
    let mut gaps = vec![("LR".to_string(), eff_gap)];
    for kind in ModelKind::ALL {
        pipeline::run_train(&train_request(&data, &out, kind, 3)).map_err(|e| e.to_string())?;
        let e = pipeline::run_explain(&data, &out, kind, 10, 20).map_err(|e| e.to_string())?;
        let worst = e.attributions.iter().map(|a| a.efficiency_gap()).fold(0.0, f64::max);
        gaps.push((kind.as_str().to_string(), worst));
    }
    let worst_eff = gaps.iter().map(|g| g.1).fold(0.0, f64::max);
    let detail = format!(
        "closed-form gap {closed_gap:.1e} over 50 samples; max efficiency gap {worst_eff:.1e} (LR, lr, lstm, dnn)"
    );
    if closed_gap >= 1e-6 || worst_eff >= 1e-6 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(60), detail)
}

fn split_and_scaler() -> Outcome {
    let sim = SimConfig {
        rows: Some(9948),
        ..SimConfig::default()
    };
    let ds = generate(&sim).map_err(|e| e.to_string())?;
    let text = write_csv(&ds.frames, &ds.height_names, CsvOptions::default());
    let parsed = parse_csv(text.as_bytes()).map_err(|e| e.to_string())?;
    let (frames, _) = clean(&parsed.records).map_err(|e| e.to_string())?;
    let mut design = DesignMatrix::from_frames(&frames, FeatureSet::SensorsWithTime).map_err(|e| e.to_string())?;
    let raw = design.x.clone();
    let s = split(design.n_samples(), 0.2, 7, SplitMode::Shuffled).map_err(|e| e.to_string())?;
    let sizes = (s.train.len(), s.test.len());
    design.standardize_with(s.clone()).map_err(|e| e.to_string())?;
    let stats: &ScalerStats = design.scaler.as_ref().unwrap();
    let train = design.x.select_rows(&s.train).unwrap();
    let n = train.rows() as f64;
    let (mut worst_mean, mut worst_std): (f64, f64) = (0.0, 0.0);
    for c in 0..train.cols() {
        if stats.stds[c] == 0.0 {
            continue;
        }
        let col = train.column(c);
        let m = col.iter().sum::<f64>() / n;
        let sd = (col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
        worst_mean = worst_mean.max(m.abs());
        worst_std = worst_std.max((sd - 1.0).abs());
    }
    let back = stats.inverse(&design.x).unwrap();
    let round_trip = (0..raw.rows())
        .flat_map(|r| (0..raw.cols()).map(move |c| (r, c)))
        .filter(|&(_, c)| stats.stds[c] > 0.0)
        .map(|(r, c)| (back.get(r, c) - raw.get(r, c)).abs() / raw.get(r, c).abs().max(1.0))
        .fold(0.0, f64::max);
    let detail = format!(
        "n {} -> {:?}; |mean| {worst_mean:.1e}, |std-1| {worst_std:.1e}, round trip {round_trip:.1e}",
        design.n_samples(),
        sizes
    );
    check(
        design.n_samples() == 9948
            && sizes == (7958, 1990)
            && worst_mean < 1e-9
            && worst_std < 1e-9
            && round_trip < 1e-12,
        detail,
    )
}

fn interval_coverage() -> Outcome {
    let mut rng = Rng::new(99);
    let n = 10_000;
    let mut widths = Vec::new();
    let mut coverages = Vec::new();
    for sigma in [0.5, 1.0, 2.0, 4.0] {
        let residuals = rng.normal_vec(n, 0.0, sigma);
        let preds = rng.normal_vec(n, 10.0, 3.0);
        let truth: Vec<f64> = preds.iter().map(|p| p + rng.normal(0.0, sigma)).collect();
        let band = interval95(&residuals, &preds, IntervalMethod::Gaussian).map_err(|e| e.to_string())?;
        let hits = band
            .iter()
            .zip(&truth)
            .filter(|((lo, hi), t)| lo <= *t && *t <= hi)
            .count();
        coverages.push(hits as f64 / n as f64);
        widths.push(band[0].1 - band[0].0);
    }
    let covered = coverages.iter().all(|c| (c - 0.95).abs() <= 0.01);
    let monotone = widths.windows(2).all(|w| w[1] > w[0]);
    check(
        covered && monotone,
        format!(
            "coverage {:?}, widths {:?} for sigma 0.5/1/2/4",
            coverages.iter().map(|c| format!("{c:.4}")).collect::<Vec<_>>(),
            widths.iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>()
        ),
    )
}

fn water_check() -> Outcome {
    let start = Instant::now();
    let report = model_check(&WaterController { fill_rate: 25 }, &[0, 25, 50, 75, 100]);
    let detail = format!(
        "{} reachable states, {} safety and {} liveness violations ({} supply-limited)",
        report.reachable_states,
        report.safety_violations.len(),
        report.liveness_violations.len(),
        report.supply_limited_states
    );
    if !report.passed() || report.reachable_states == 0 {
        return Err(detail);
    }
    within(start.elapsed(), Duration::from_secs(10), detail)
}

fn profiler(dir: &Path) -> Outcome {
    let (_, busy) = profile(|| {
        let start = Instant::now();
        let mut x = 0u64;
        while start.elapsed() < Duration::from_secs(1) {
            x = std::hint::black_box(x.wrapping_mul(6364136223846793005).wrapping_add(1));
        }
        x
    });
    let cpu = busy.cpu_percent.ok_or("cpu unavailable")?;
    let cpu_ok = (80.0..=105.0).contains(&cpu) && (1.0..=1.2).contains(&busy.wall_seconds);

    let path = dir.join("ten_mb.bin");
    let (_, io) = profile(|| {
        let mut f = fs::File::create(&path).unwrap();
        std::io::Write::write_all(&mut f, &vec![7u8; 10 * 1024 * 1024]).unwrap();
        f.sync_all().unwrap();
    });
    let (disk_ok, disk) = match io.disk_write_mb {
        Some(mb) => (mb >= 10.0, format!("disk write {mb:.2} MB")),
        None => {
            let reason = io
                .unavailable
                .iter()
                .find(|u| u.metric.contains("disk"))
                .map(|u| u.reason.clone());
            (
                reason.is_some(),
                format!("disk write unavailable: {}", reason.unwrap_or_default()),
            )
        }
    };
    check(
        cpu_ok && disk_ok,
        format!("busy loop cpu {cpu:.1}% wall {:.3} s; {disk}", busy.wall_seconds),
    )
}

fn determinism(dir: &Path) -> Outcome {
    let bin = env!("CARGO_BIN_EXE_growbench");
    let config = dir.join("run.toml");
    fs::write(
        &config,
        "seed = 7\nrows = 400\nepochs = 2\n[train]\narch = [16, 8]\n[explain]\nsamples = 3\n",
    )
    .unwrap();
    let mut reports = Vec::new();
    // Same manifest means the same paths too, so the second run reuses the
    // first run's locations after wiping them.
    let root = dir.join("det");
    for _ in 0..2 {
        let _ = fs::remove_dir_all(&root);
        fs::create_dir_all(&root).unwrap();
        let data = root.join("data.csv");
        let out = root.join("out");
        let (d, o, c) = (data.to_str().unwrap(), out.to_str().unwrap(), config.to_str().unwrap());
        let mut steps: Vec<Vec<&str>> = vec![vec!["gen", "--out", d, "--config", c]];
        for m in ["lr", "lstm", "dnn"] {
            steps.push(vec!["train", "--data", d, "--model", m, "--out", o, "--config", c]);
            steps.push(vec!["eval", "--data", d, "--model", m, "--out", o, "--config", c]);
        }
        steps.push(vec!["report", "--out", o, "--config", c]);
        for args in steps {
            let st = Command::new(bin).args(&args).output().map_err(|e| e.to_string())?;
            if !st.status.success() {
                return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&st.stderr)));
            }
        }
        reports.push(fs::read(out.join("report.json")).map_err(|e| e.to_string())?);
    }
    check(
        reports[0] == reports[1],
        format!(
            "report.json {} bytes, identical: {}",
            reports[0].len(),
            reports[0] == reports[1]
        ),
    )
}

fn metric_definitions() -> Outcome {
    let m = metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).map_err(|e| e.to_string())?;
    let r2 = m.r2.ok_or("undefined R2")?;
    check(
        (m.mse - 1.0 / 3.0).abs() < 1e-12 && (m.mae - 1.0 / 3.0).abs() < 1e-12 && (r2 - 0.5).abs() < 1e-12,
        format!("mse {} mae {} r2 {}", m.mse, m.mae, r2),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let d = dir.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("parameter counts", Box::new(parameter_counts)),
        ("gradient correctness", Box::new(gradients)),
        ("model ordering", Box::new(|| model_ordering(d))),
        ("shapley oracle and efficiency", Box::new(|| shapley(d))),
        ("split and scaler contracts", Box::new(split_and_scaler)),
        ("interval coverage", Box::new(interval_coverage)),
        ("water model check", Box::new(water_check)),
        ("profiler sanity", Box::new(|| profiler(d))),
        ("determinism", Box::new(|| determinism(d))),
        ("metric definitions", Box::new(metric_definitions)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome =
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
