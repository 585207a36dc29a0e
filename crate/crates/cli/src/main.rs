mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use growbench::dataset::SplitMode;
use growbench::eval::IntervalMethod;
use growbench::models::{ModelKind, ModelSpec, TrainConfig};
use growbench::numerics::Activation;
use growbench::pipeline::{self, PipelineError, TrainRequest, DEFAULT_BACKGROUND, DEFAULT_EXPLAIN_SAMPLES};
use growbench::sensorsim::{model_check, simulate, trace_csv, SimConfig, WaterController, WaterSystemState};

use config::Config;

#[derive(Parser)]
#[command(name = "growbench", version, about = "Hydroponic growth prediction benchmark")]
struct Cli {
    /// Log progress (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sensor dataset and its ground-truth model.
    Gen(GenArgs),
    /// Run the water-loop controller and write a tick-by-tick trace.
    WaterSim(WaterArgs),
    /// Train one model under the resource profiler.
    Train(TrainArgs),
    /// Score a trained model on its held-out split.
    Eval(EvalArgs),
    /// Exact Shapley attributions and feature importance.
    Explain(ExplainArgs),
    /// Compare every evaluated model in an output directory.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    /// 3 epochs and 500 rows.
    Quick,
    Full,
}

#[derive(Args)]
struct Common {
    /// Key/value file mirroring these flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    common: Common,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    days: Option<usize>,
    /// Exact row count (overrides whole days).
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write decimal commas instead of points.
    #[arg(long)]
    decimal_comma: bool,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

#[derive(Args)]
struct WaterArgs {
    #[command(flatten)]
    common: Common,
    /// Trace CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    ticks: Option<usize>,
    /// Percent of a container moved per tick.
    #[arg(long)]
    fill_rate: Option<u8>,
    /// Starting tank volume in container-percent (0..=300).
    #[arg(long)]
    tank: Option<u16>,
    /// Starting container levels, e.g. 0,0,0.
    #[arg(long)]
    levels: Option<String>,
    /// Target levels, e.g. 60,60,60.
    #[arg(long)]
    targets: Option<String>,
    /// Ticks on which to drain container 3, e.g. 50,51.
    #[arg(long)]
    drain_at: Option<String>,
    /// Exhaustively check safety and liveness over a five-level grid.
    #[arg(long)]
    check: bool,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    /// lr, dnn or lstm.
    #[arg(long)]
    model: Option<ModelKind>,
    /// Output directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hidden layer widths, e.g. 300,300,150.
    #[arg(long)]
    arch: Option<String>,
    #[arg(long)]
    dropout: Option<f64>,
    /// Sequence window length for the LSTM.
    #[arg(long)]
    window: Option<usize>,
    /// LSTM cell activation: tanh or relu.
    #[arg(long)]
    cell_activation: Option<Activation>,
    /// Gradient norm clip, or `none`.
    #[arg(long)]
    grad_clip: Option<String>,
    /// shuffled or chronological.
    #[arg(long)]
    split: Option<SplitMode>,
    #[arg(long)]
    test_ratio: Option<f64>,
    /// Train on the first N dataset rows only.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long, value_enum)]
    profile: Option<Profile>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// gaussian or quantile.
    #[arg(long)]
    interval: Option<IntervalMethod>,
}

#[derive(Args)]
struct ExplainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of test rows to explain.
    #[arg(long)]
    samples: Option<usize>,
    /// Number of training rows in the background set.
    #[arg(long)]
    background: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> PipelineError {
    PipelineError::Usage(msg.into())
}

fn load_config(common: &Common, sub: &str) -> Result<Config, PipelineError> {
    match &common.config {
        Some(p) => Config::load(p, sub).map_err(usage),
        None => Ok(Config::empty()),
    }
}

fn required<T>(v: Option<T>, flag: &str) -> Result<T, PipelineError> {
    v.ok_or_else(|| usage(format!("missing required --{flag}")))
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, PipelineError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse().map_err(|_| usage(format!("invalid {what} `{text}`"))))
        .collect()
}

fn levels3(text: &str, what: &str) -> Result<[u8; 3], PipelineError> {
    let v: Vec<u8> = parse_list(text, what)?;
    let arr: [u8; 3] = v
        .try_into()
        .map_err(|_| usage(format!("{what} needs exactly three values")))?;
    if arr.iter().any(|&l| l > 100) {
        return Err(usage(format!("{what} must be percentages (0..=100)")));
    }
    Ok(arr)
}

fn profile_of(cfg: &Config, flag: Option<Profile>) -> Result<Profile, PipelineError> {
    let from_file = cfg
        .pick::<String>(None, "profile")
        .map_err(usage)?
        .map(|s| Profile::from_str(&s, true).map_err(usage))
        .transpose()?;
    Ok(flag.or(from_file).unwrap_or(Profile::Full))
}

fn cmd_gen(a: GenArgs) -> Result<(), PipelineError> {
    let cfg = load_config(&a.common, "gen")?;
    let profile = profile_of(&cfg, a.profile)?;
    let out = required(cfg.pick(a.out, "out").map_err(usage)?, "out")?;
    let mut sim = SimConfig::default();
    if let Some(d) = cfg.pick(a.days, "days").map_err(usage)? {
        sim.days = d;
    }
    sim.rows = cfg.pick(a.rows, "rows").map_err(usage)?;
    if sim.rows.is_none() && matches!(profile, Profile::Quick) {
        sim.rows = Some(500);
    }
    if let Some(s) = cfg.pick(a.seed, "seed").map_err(usage)? {
        sim.seed = s;
    }
    let comma = cfg.switch(a.decimal_comma, "decimal-comma").map_err(usage)?;
    let summary = pipeline::run_gen(&sim, &out, comma)?;
    println!(
        "wrote {} rows to {} (truth: {})",
        summary.rows,
        summary.csv_path.display(),
        summary.truth_path.display()
    );
    Ok(())
}

fn cmd_water(a: WaterArgs) -> Result<(), PipelineError> {
    let cfg = load_config(&a.common, "water-sim")?;
    let fill_rate = cfg.pick(a.fill_rate, "fill-rate").map_err(usage)?.unwrap_or(5);
    if fill_rate == 0 || fill_rate > 100 {
        return Err(usage("--fill-rate must be in 1..=100"));
    }
    let controller = WaterController { fill_rate };
    if cfg.switch(a.check, "check").map_err(usage)? {
        let grid = [0, 25, 50, 75, 100];
        let report = model_check(&WaterController { fill_rate: 25 }, &grid);
        println!(
            "checked {} reachable states from {} initial states ({} supply-limited)",
            report.reachable_states, report.initial_states, report.supply_limited_states
        );
        for v in report.safety_violations.iter().chain(&report.liveness_violations) {
            println!("violation: {v}");
        }
        return if report.passed() {
            println!("safety and liveness hold");
            Ok(())
        } else {
            Err(PipelineError::Numeric("water controller check failed".into()))
        };
    }
    let out = required(cfg.pick(a.out, "out").map_err(usage)?, "out")?;
    let ticks = cfg.pick(a.ticks, "ticks").map_err(usage)?.unwrap_or(100);
    let tank = cfg.pick(a.tank, "tank").map_err(usage)?.unwrap_or(300);
    if tank > growbench::sensorsim::water::TANK_CAPACITY {
        return Err(usage("--tank must be at most 300"));
    }
    let levels = levels3(
        &cfg.pick(a.levels, "levels").map_err(usage)?.unwrap_or("0,0,0".into()),
        "levels",
    )?;
    let targets = levels3(
        &cfg.pick(a.targets, "targets")
            .map_err(usage)?
            .unwrap_or("60,60,60".into()),
        "targets",
    )?;
    let drain: Vec<usize> = match cfg.pick::<String>(a.drain_at, "drain-at").map_err(usage)? {
        Some(s) => parse_list(&s, "drain ticks")?,
        None => Vec::new(),
    };
    let states = simulate(
        &controller,
        WaterSystemState::idle(tank, levels, targets),
        ticks,
        &drain,
    );
    std::fs::write(&out, trace_csv(&states)).map_err(|source| PipelineError::Io {
        context: format!("writing {}", out.display()),
        source,
    })?;
    let settled = states.iter().position(|s| s.is_settled());
    match settled {
        Some(t) => println!("wrote {} ticks to {}; settled at tick {t}", ticks, out.display()),
        None => println!("wrote {} ticks to {}; not settled", ticks, out.display()),
    }
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<(), PipelineError> {
    let cfg = load_config(&a.common, "train")?;
    let profile = profile_of(&cfg, a.profile)?;
    let pick_usage = |e: String| usage(e);
    let data: PathBuf = required(cfg.pick(a.data, "data").map_err(pick_usage)?, "data")?;
    let kind: ModelKind = required(cfg.pick(a.model, "model").map_err(usage)?, "model")?;
    let out: PathBuf = required(cfg.pick(a.out, "out").map_err(usage)?, "out")?;

    let mut spec = ModelSpec::default_for(kind);
    // A shared config file may carry keys for other models; only flags are strict.
    let net_flags = a.arch.is_some() || a.dropout.is_some();
    let lstm_flags = a.window.is_some() || a.cell_activation.is_some();
    let arch = cfg.pick::<String>(a.arch, "arch").map_err(usage)?;
    let dropout = cfg.pick(a.dropout, "dropout").map_err(usage)?;
    let window = cfg.pick(a.window, "window").map_err(usage)?;
    let act = cfg.pick(a.cell_activation, "cell-activation").map_err(usage)?;
    match &mut spec {
        ModelSpec::Lr => {
            if net_flags || lstm_flags {
                return Err(usage(
                    "--arch, --dropout, --window and --cell-activation do not apply to lr",
                ));
            }
        }
        ModelSpec::Dnn { hidden, dropout: d } => {
            if lstm_flags {
                return Err(usage("--window and --cell-activation only apply to lstm"));
            }
            if let Some(s) = &arch {
                *hidden = parse_list(s, "architecture")?;
            }
            if let Some(v) = dropout {
                *d = v;
            }
        }
        ModelSpec::Lstm {
            hidden,
            window_len,
            cell_activation,
            dropout: d,
        } => {
            if let Some(s) = &arch {
                *hidden = parse_list(s, "architecture")?;
            }
            if let Some(v) = dropout {
                *d = v;
            }
            if let Some(w) = window {
                *window_len = w;
            }
            if let Some(c) = act {
                *cell_activation = c;
            }
        }
    }
    if let ModelSpec::Dnn { hidden, .. } | ModelSpec::Lstm { hidden, .. } = &spec {
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(usage("--arch needs positive layer widths"));
        }
    }

    let mut train = TrainConfig::default_for(kind);
    if matches!(profile, Profile::Quick) && kind != ModelKind::Lr {
        train.epochs = 3;
    }
    if let Some(e) = cfg.pick(a.epochs, "epochs").map_err(usage)? {
        train.epochs = e;
    }
    if let Some(b) = cfg.pick(a.batch_size, "batch-size").map_err(usage)? {
        train.batch_size = b;
    }
    if let Some(lr) = cfg.pick(a.lr, "lr").map_err(usage)? {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(usage("--lr must be positive"));
        }
        train.adam.lr = lr;
    }
    if let Some(s) = cfg.pick(a.seed, "seed").map_err(usage)? {
        train.seed = s;
    }
    if let Some(c) = cfg.pick::<String>(a.grad_clip, "grad-clip").map_err(usage)? {
        train.grad_clip = match c.as_str() {
            "none" => None,
            v => Some(
                v.parse::<f64>()
                    .ok()
                    .filter(|x| *x > 0.0)
                    .ok_or_else(|| usage(format!("invalid --grad-clip `{v}`")))?,
            ),
        };
    }
    let mut max_rows = cfg.pick(a.rows, "rows").map_err(usage)?;
    if max_rows.is_none() && matches!(profile, Profile::Quick) {
        max_rows = Some(500);
    }
    let req = TrainRequest {
        data,
        out_dir: out,
        spec,
        train,
        test_ratio: cfg
            .pick(a.test_ratio, "test-ratio")
            .map_err(usage)?
            .unwrap_or(pipeline::DEFAULT_TEST_RATIO),
        split_mode: cfg.pick(a.split, "split").map_err(usage)?.unwrap_or_default(),
        max_rows,
        config_path: cfg.path.clone(),
    };
    let s = pipeline::run_train(&req)?;
    println!(
        "trained {kind}: {} parameters, {} epochs, final loss {:.6}, {:.3} s",
        s.checkpoint.parameter_count,
        s.loss_curve.len(),
        s.loss_curve.last().copied().unwrap_or(f64::NAN),
        s.resources.wall_seconds
    );
    Ok(())
}

fn data_model_out(
    cfg: &Config,
    data: Option<PathBuf>,
    model: Option<ModelKind>,
    out: Option<PathBuf>,
) -> Result<(PathBuf, ModelKind, PathBuf), PipelineError> {
    Ok((
        required(cfg.pick(data, "data").map_err(usage)?, "data")?,
        required(cfg.pick(model, "model").map_err(usage)?, "model")?,
        required(cfg.pick(out, "out").map_err(usage)?, "out")?,
    ))
}

fn cmd_eval(a: EvalArgs) -> Result<(), PipelineError> {
    let cfg = load_config(&a.common, "eval")?;
    let (data, kind, out) = data_model_out(&cfg, a.data, a.model, a.out)?;
    let method = cfg.pick(a.interval, "interval").map_err(usage)?.unwrap_or_default();
    let e = pipeline::run_eval(&data, &out, kind, method)?;
    let m = e.report.metrics;
    let r2 = m.r2.map(|v| format!("{v:.4}")).unwrap_or_else(|| "undefined".into());
    println!(
        "{kind}: mse {:.6}, mae {:.6}, r2 {r2} on {} test rows",
        m.mse, m.mae, e.report.n_test
    );
    Ok(())
}

fn cmd_explain(a: ExplainArgs) -> Result<(), PipelineError> {
    let cfg = load_config(&a.common, "explain")?;
    let (data, kind, out) = data_model_out(&cfg, a.data, a.model, a.out)?;
    let samples = cfg
        .pick(a.samples, "samples")
        .map_err(usage)?
        .unwrap_or(DEFAULT_EXPLAIN_SAMPLES);
    let background = cfg
        .pick(a.background, "background")
        .map_err(usage)?
        .unwrap_or(DEFAULT_BACKGROUND);
    let e = pipeline::run_explain(&data, &out, kind, samples, background)?;
    println!(
        "{kind}: explained {} rows; ranking {}; max efficiency gap {:.2e}",
        e.attributions.len(),
        e.importance.ranking.join(" > "),
        e.max_efficiency_gap
    );
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<(), PipelineError> {
    let cfg = load_config(&a.common, "report")?;
    let out: PathBuf = required(cfg.pick(a.out, "out").map_err(usage)?, "out")?;
    let s = pipeline::run_report(&out)?;
    print!("{}", s.table.to_text());
    println!("wrote {}", Path::new(&out).join("report.json").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::WaterSim(a) => cmd_water(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Explain(a) => cmd_explain(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
