use std::error::Error;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Subcommand, ValueEnum};
use rayon::prelude::*;

use scal_core::datagen::{generate, load_dataset, read_labels, write_dataset, SyntheticSpec};
use scal_core::harness::session::{Session, SessionOracle};
use scal_core::harness::{
    curve_csv, curve_file_name, emit_results, read_label_store, run_experiment_observed, summary_csv, summary_table,
    write_label_store, ExperimentConfig, ExperimentCurve, GroundTruthOracle, Oracle, ReplayOracle,
};
use scal_core::metrics::{nmi_with, NmiNormalization};
use scal_core::{Dataset, Strategy};

use crate::server::{router, AppState};

pub type CliResult<T = ()> = Result<T, Box<dyn Error + Send + Sync>>;

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset (points, labels and metadata files).
    Generate(GenerateArgs),
    /// Run experiments with the ground truth answering queries.
    Run(RunArgs),
    /// Run one experiment with a person answering queries over HTTP.
    Serve(ServeArgs),
    /// Score a clustering against reference labels.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Kind {
    /// Random subspaces with Gaussian noise.
    Noise,
    /// Planes in R^3 sharing an axis.
    Angle,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value = "noise")]
    pub kind: Kind,
    /// Noise standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Angle between neighbouring planes, in degrees.
    #[arg(long, default_value_t = 30.0)]
    pub theta: f64,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub points_per_cluster: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV; `.labels` and `.meta` files are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    /// key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV (overrides `data` in the config).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Extra key=value settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Continue from the label files in the output directory.
    #[arg(long)]
    pub resume: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Comma-separated strategies; defaults to the configured one.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Vec<Strategy>,
    /// Seeds as `a..b` or a comma-separated list; defaults to the configured one.
    #[arg(long)]
    pub seeds: Option<String>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Give up on a query after this many seconds without an answer.
    #[arg(long)]
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted cluster per line.
    #[arg(long)]
    pub pred: PathBuf,
    /// Reference class per line.
    #[arg(long)]
    pub truth: PathBuf,
    /// Normalise mutual information by the geometric mean of the entropies.
    #[arg(long)]
    pub geometric: bool,
}

pub fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Generate(a) => cmd_generate(a),
        Command::Run(a) => cmd_run(a),
        Command::Serve(a) => cmd_serve(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

pub fn cmd_generate(a: GenerateArgs) -> CliResult {
    let mut spec = match a.kind {
        Kind::Noise => SyntheticSpec::noise_sweep(a.sigma.unwrap_or(0.2), a.seed),
        Kind::Angle => SyntheticSpec::angle_sweep(a.theta, a.seed),
    };
    if let Some(s) = a.sigma {
        spec.sigma = s;
    }
    spec.k = a.k.unwrap_or(spec.k);
    spec.q = a.q.unwrap_or(spec.q);
    spec.p = a.p.unwrap_or(spec.p);
    spec.points_per_cluster = a.points_per_cluster.unwrap_or(spec.points_per_cluster);
    let mut data = generate(&spec)?;
    data.name = stem(&a.out);
    write_dataset(&data, &a.out)?;
    println!("wrote {} points in {} dimensions to {}", data.len(), data.dim(), a.out.display());
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Config file, then `--set` pairs, then the dedicated flags.
pub fn load_config(args: &ConfigArgs) -> CliResult<ExperimentConfig> {
    let mut pairs = Vec::new();
    for kv in &args.set {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            let mut cfg = ExperimentConfig::parse(&text)?;
            for (k, v) in &pairs {
                cfg.set(k, v)?;
            }
            cfg
        }
        None => ExperimentConfig::from_pairs(pairs)?,
    };
    if let Some(d) = &args.data {
        cfg.data = Some(d.clone());
    }
    if let Some(o) = &args.output {
        cfg.output = Some(o.clone());
    }
    Ok(cfg)
}

fn load_data(cfg: &ExperimentConfig) -> CliResult<Dataset> {
    let path = cfg.data.as_ref().ok_or("no dataset given (use --data or data=PATH)")?;
    Ok(load_dataset(path)?)
}

pub fn parse_seeds(text: &str) -> CliResult<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            return Err(format!("empty seed range {text:?}").into());
        }
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| Ok(s.trim().parse::<u64>()?)).collect()
}

/// Label store kept next to a curve file so a run can be resumed.
pub fn label_file(dir: &Path, cfg: &ExperimentConfig, data: &Dataset) -> PathBuf {
    dir.join(format!("{}_{}_seed{}.labels.csv", cfg.strategy, data.name, cfg.seed))
}

fn write_checkpoint(dir: &Path, cfg: &ExperimentConfig, data: &Dataset, curve: &ExperimentCurve) -> scal_core::Result<()> {
    let path = dir.join(curve_file_name(curve));
    fs::write(&path, curve_csv(curve)).map_err(|e| scal_core::Error::Io { path: path.clone(), source: e })?;
    write_label_store(&curve.labels, &label_file(dir, cfg, data))
}

/// One experiment. Earlier answers are replayed when resuming, and the curve
/// and label store are checkpointed after every update.
pub fn run_cell(
    cfg: &ExperimentConfig,
    data: &Dataset,
    resume: bool,
    oracle: impl Oracle,
    mut on_record: impl FnMut(&ExperimentCurve),
) -> scal_core::Result<ExperimentCurve> {
    let dir = cfg.output.clone();
    let recorded = match (&dir, resume) {
        (Some(d), true) if label_file(d, cfg, data).exists() => read_label_store(&label_file(d, cfg, data))?,
        _ => Default::default(),
    };
    let oracle = ReplayOracle::new(&recorded, oracle);
    run_experiment_observed(cfg, data, oracle, |c| {
        on_record(c);
        match &dir {
            Some(d) => write_checkpoint(d, cfg, data, c),
            None => Ok(()),
        }
    })
}

pub fn cmd_run(a: RunArgs) -> CliResult {
    let cfg = load_config(&a.config)?;
    let data = load_data(&cfg)?;
    let strategies = if a.strategies.is_empty() { vec![cfg.strategy] } else { a.strategies.clone() };
    let seeds = match &a.seeds {
        Some(s) => parse_seeds(s)?,
        None => vec![cfg.seed],
    };
    if let Some(dir) = &cfg.output {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    let cells: Vec<ExperimentConfig> = strategies
        .iter()
        .flat_map(|&strategy| {
            seeds.iter().map({
                let cfg = cfg.clone();
                move |&seed| ExperimentConfig {
                    strategy,
                    seed,
                    ..cfg.clone()
                }
            })
        })
        .collect();
    let curves: Vec<ExperimentCurve> = cells
        .par_iter()
        .map(|c| run_cell(c, &data, a.config.resume, GroundTruthOracle::new(&data)?, |_| {}))
        .collect::<scal_core::Result<_>>()?;

    match &cfg.output {
        Some(dir) => {
            for p in emit_results(&curves, dir)? {
                println!("wrote {}", p.display());
            }
        }
        None => print!("{}", summary_csv(&curves)),
    }
    print!("{}", summary_table(&curves));
    Ok(())
}

pub fn cmd_serve(a: ServeArgs) -> CliResult {
    let cfg = load_config(&a.config)?;
    let data = Arc::new(load_data(&cfg)?);
    let budget = cfg.budget.unwrap_or(data.len());
    let session = Session::new(cfg.k, budget);
    if let Some(dir) = &cfg.output {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }

    let (done_tx, done_rx) = tokio::sync::oneshot::channel::<()>();
    let worker = {
        let (session, data, cfg) = (session.clone(), data.clone(), cfg.clone());
        let oracle = SessionOracle::new(session.clone(), a.timeout_secs.map(Duration::from_secs));
        let resume = a.config.resume;
        std::thread::spawn(move || {
            let result = run_cell(&cfg, &data, resume, oracle, |c| session.observe(c));
            session.finish();
            let _ = done_tx.send(());
            result
        })
    };

    let runtime = tokio::runtime::Runtime::new()?;
    let app = router(AppState {
        session: session.clone(),
        data: data.clone(),
    });
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(a.bind).await?;
        eprintln!("labelling service on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                tokio::select! {
                    _ = tokio::signal::ctrl_c() => {}
                    _ = done_rx => {}
                }
            })
            .await
    })?;
    session.close();

    let curve = worker.join().map_err(|_| "experiment thread panicked")??;
    match &cfg.output {
        Some(dir) => {
            for p in emit_results(&[curve], dir)? {
                println!("wrote {}", p.display());
            }
        }
        None => print!("{}", curve_csv(&curve)),
    }
    Ok(())
}

pub fn cmd_eval(a: EvalArgs) -> CliResult {
    let pred = read_labels(&a.pred)?;
    let truth = read_labels(&a.truth)?;
    let norm = if a.geometric {
        NmiNormalization::Geometric
    } else {
        NmiNormalization::Arithmetic
    };
    let score = nmi_with(&pred, &truth, norm)?;
    println!("points={} nmi={score}", pred.len());
    println!("perfect={}", score >= 1.0 - scal_core::metrics::PERFECT_TOL);
    Ok(())
}
