//! The active-learning loop, its configuration, answer sources and result
//! files.

pub mod session;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datagen::read_labels;
use crate::error::{Error, Result};
use crate::influence::score_all;
use crate::ksc::{best_of_restarts, fit_models, KscOptions, KscRun};
use crate::kscc::run_kscc;
use crate::metrics::{auc, nmi, queries_to_perfect, PERFECT_TOL};
use crate::model::{total_loss, Centering, Clustering, Dataset, LabelStore};
use crate::numkit::Matrix;
use crate::spectral::{load_affinity, spectral_active_step};
use crate::strategies::{select_batch, Strategy};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitMethod {
    /// Lowest-objective KSC run out of this many random restarts.
    KscBestOf(usize),
    /// One cluster id per line (1-based), e.g. the output of an external
    /// clustering method.
    LabelsFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateMethod {
    Kscc,
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub k: usize,
    pub q: usize,
    /// Maximum number of points to query. `None` means every point.
    pub budget: Option<usize>,
    pub batch: usize,
    pub init: InitMethod,
    pub centering: Centering,
    pub update: UpdateMethod,
    pub affinity: Option<PathBuf>,
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Start each constrained update from the previous clustering rather
    /// than from the initial one.
    pub warm_start: bool,
    /// Stop as soon as the clustering matches the ground truth.
    pub stop_at_perfect: bool,
}

impl ExperimentConfig {
    pub fn new(strategy: Strategy, k: usize, q: usize) -> Self {
        ExperimentConfig {
            strategy,
            k,
            q,
            budget: None,
            batch: 1,
            init: InitMethod::KscBestOf(50),
            centering: Centering::On,
            update: UpdateMethod::Kscc,
            affinity: None,
            seed: 0,
            data: None,
            output: None,
            warm_start: true,
            stop_at_perfect: true,
        }
    }

    /// Parse flat `key=value` text. Blank lines and `#` comments are ignored.
    /// `strategy`, `k` and `q` are required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
            pairs.push((key.trim().to_string(), value.trim().to_string()));
        }
        Self::from_pairs(pairs)
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut cfg = ExperimentConfig::new(Strategy::Scal, 0, 0);
        let mut seen = (false, false, false);
        for (key, value) in pairs {
            match key.as_str() {
                "strategy" => seen.0 = true,
                "k" | "K" => seen.1 = true,
                "q" => seen.2 = true,
                _ => {}
            }
            cfg.set(&key, &value)?;
        }
        match seen {
            (false, _, _) => Err(Error::Config("missing key: strategy".into())),
            (_, false, _) => Err(Error::Config("missing key: k".into())),
            (_, _, false) => Err(Error::Config("missing key: q".into())),
            _ => Ok(cfg),
        }
    }

    /// Apply one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {value:?}")))
        }
        fn flag(key: &str, value: &str) -> Result<bool> {
            match value.to_ascii_lowercase().as_str() {
                "true" | "on" | "yes" | "1" => Ok(true),
                "false" | "off" | "no" | "0" => Ok(false),
                _ => Err(Error::Config(format!("{key}: expected on/off, got {value:?}"))),
            }
        }
        match key {
            "strategy" => self.strategy = value.parse()?,
            "k" | "K" => self.k = num(key, value)?,
            "q" => self.q = num(key, value)?,
            "budget" => {
                self.budget = match value {
                    "all" | "" => None,
                    v => Some(num(key, v)?),
                }
            }
            "batch" => self.batch = num(key, value)?,
            "init" => {
                self.init = if let Some(rest) = value.strip_prefix("ksc_best_of") {
                    let r = rest.trim_start_matches(['(', ':']).trim_end_matches(')');
                    InitMethod::KscBestOf(if r.is_empty() { 50 } else { num(key, r)? })
                } else if let Some(path) = value.strip_prefix("labels_file:") {
                    InitMethod::LabelsFile(PathBuf::from(path))
                } else {
                    return Err(Error::Config(format!(
                        "init: expected ksc_best_of(N) or labels_file:PATH, got {value:?}"
                    )));
                }
            }
            "centering" => {
                self.centering = if flag(key, value)? { Centering::On } else { Centering::Off }
            }
            "update" => {
                self.update = match value {
                    "kscc" => UpdateMethod::Kscc,
                    "spectral" => UpdateMethod::Spectral,
                    _ => return Err(Error::Config(format!("update: expected kscc or spectral, got {value:?}"))),
                }
            }
            "affinity" => self.affinity = Some(PathBuf::from(value)),
            "seed" => self.seed = num(key, value)?,
            "data" => self.data = Some(PathBuf::from(value)),
            "output" => self.output = Some(PathBuf::from(value)),
            "warm_start" => self.warm_start = flag(key, value)?,
            "stop_at_perfect" => self.stop_at_perfect = flag(key, value)?,
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn ksc_options(&self) -> KscOptions {
        KscOptions::new(self.q).centering(self.centering)
    }

    fn validate(&self, data: &Dataset) -> Result<usize> {
        data.validate_for(self.k)?;
        if self.k < 2 {
            return Err(Error::Config("k must be at least 2".into()));
        }
        if self.q == 0 || self.q >= data.dim() {
            return Err(Error::Config(format!("q must be in 1..{}, got {}", data.dim(), self.q)));
        }
        if self.batch == 0 {
            return Err(Error::Config("batch must be at least 1".into()));
        }
        if self.update == UpdateMethod::Spectral && self.affinity.is_none() {
            return Err(Error::Config("update=spectral requires an affinity file".into()));
        }
        let budget = self.budget.unwrap_or(data.len());
        if budget > data.len() {
            return Err(Error::Config(format!("budget {budget} exceeds the {} points", data.len())));
        }
        Ok(budget)
    }
}

/// One row of an experiment curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRecord {
    pub iteration: usize,
    pub n_queried: usize,
    /// Absent when the ground truth is unknown.
    pub nmi: Option<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSummary {
    pub queries_to_perfect_pct: f64,
    pub auc_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentCurve {
    pub strategy: Strategy,
    pub dataset: String,
    pub seed: u64,
    pub n_points: usize,
    pub records: Vec<CurveRecord>,
    pub labels: LabelStore,
    pub clustering: Clustering,
}

impl ExperimentCurve {
    /// `(fraction queried, nmi)` pairs, or `None` without ground truth.
    pub fn nmi_curve(&self) -> Option<Vec<(f64, f64)>> {
        self.records
            .iter()
            .map(|r| r.nmi.map(|v| (r.n_queried as f64 / self.n_points as f64, v)))
            .collect()
    }

    pub fn summary(&self) -> Option<CurveSummary> {
        let curve = self.nmi_curve()?;
        Some(CurveSummary {
            queries_to_perfect_pct: queries_to_perfect(&curve),
            auc_pct: auc(&curve),
        })
    }

    pub fn final_nmi(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.nmi)
    }
}

/// Answers label queries. Classes are 0-based.
pub trait Oracle {
    fn answer(&mut self, id: usize) -> Result<usize>;
}

/// Answers from the dataset's ground truth.
#[derive(Debug, Clone)]
pub struct GroundTruthOracle {
    classes: Vec<usize>,
}

impl GroundTruthOracle {
    pub fn new(data: &Dataset) -> Result<Self> {
        let classes = data
            .true_classes
            .clone()
            .ok_or_else(|| Error::Oracle(format!("dataset {} has no ground truth", data.name)))?;
        Ok(GroundTruthOracle { classes })
    }
}

impl Oracle for GroundTruthOracle {
    fn answer(&mut self, id: usize) -> Result<usize> {
        self.classes
            .get(id)
            .copied()
            .ok_or_else(|| Error::Oracle(format!("no ground truth for point {id}")))
    }
}

/// Answers from a fixed id → class table; unknown ids are an error.
#[derive(Debug, Clone, Default)]
pub struct ScriptedOracle {
    answers: HashMap<usize, usize>,
}

impl ScriptedOracle {
    pub fn new(answers: impl IntoIterator<Item = (usize, usize)>) -> Self {
        ScriptedOracle {
            answers: answers.into_iter().collect(),
        }
    }
}

impl Oracle for ScriptedOracle {
    fn answer(&mut self, id: usize) -> Result<usize> {
        self.answers
            .get(&id)
            .copied()
            .ok_or_else(|| Error::Oracle(format!("no scripted answer for point {id}")))
    }
}

/// Replays recorded answers and defers to `fallback` for anything new. Used
/// to resume a session from a checkpoint.
pub struct ReplayOracle<O> {
    recorded: HashMap<usize, usize>,
    fallback: O,
}

impl<O: Oracle> ReplayOracle<O> {
    pub fn new(recorded: &LabelStore, fallback: O) -> Self {
        ReplayOracle {
            recorded: recorded.iter().collect(),
            fallback,
        }
    }
}

impl<O: Oracle> Oracle for ReplayOracle<O> {
    fn answer(&mut self, id: usize) -> Result<usize> {
        match self.recorded.get(&id) {
            Some(&c) => Ok(c),
            None => self.fallback.answer(id),
        }
    }
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn answer(&mut self, id: usize) -> Result<usize> {
        (**self).answer(id)
    }
}

fn initial_run(config: &ExperimentConfig, data: &Dataset) -> Result<KscRun> {
    let opts = config.ksc_options();
    match &config.init {
        InitMethod::KscBestOf(restarts) => best_of_restarts(data, config.k, &opts, *restarts, config.seed),
        InitMethod::LabelsFile(path) => {
            let labels = read_labels(path)?;
            if labels.len() != data.len() {
                return Err(Error::Config(format!(
                    "{}: {} labels for {} points",
                    path.display(),
                    labels.len(),
                    data.len()
                )));
            }
            let mut clustering = Clustering::new(labels, config.k)?;
            let models = fit_models(data, &clustering, config.q, config.centering)?;
            clustering.objective = total_loss(data, &models, &clustering);
            Ok(KscRun {
                clustering,
                models,
                trace: Vec::new(),
            })
        }
    }
}

fn record(iteration: usize, labels: &LabelStore, run: &KscRun, data: &Dataset) -> Result<CurveRecord> {
    let nmi = match &data.true_classes {
        Some(truth) => Some(nmi(&run.clustering.assignment, truth)?),
        None => None,
    };
    Ok(CurveRecord {
        iteration,
        n_queried: labels.len(),
        nmi,
        objective: run.clustering.objective,
    })
}

/// Run the query/update loop with no progress callback.
pub fn run_experiment(config: &ExperimentConfig, data: &Dataset, oracle: impl Oracle) -> Result<ExperimentCurve> {
    run_experiment_observed(config, data, oracle, |_| Ok(()))
}

/// Run the query/update loop. `observe` sees the curve after every record,
/// including the initial one, and is the place to checkpoint; if the oracle
/// fails the loop stops with its error and the last observed curve stands.
pub fn run_experiment_observed(
    config: &ExperimentConfig,
    data: &Dataset,
    mut oracle: impl Oracle,
    mut observe: impl FnMut(&ExperimentCurve) -> Result<()>,
) -> Result<ExperimentCurve> {
    let budget = config.validate(data)?;
    let affinity: Option<Matrix> = match (config.update, &config.affinity) {
        (UpdateMethod::Spectral, Some(path)) => {
            let w = load_affinity(path)?;
            if w.nrows() != data.len() {
                return Err(Error::Config(format!(
                    "{}: affinity covers {} points, dataset has {}",
                    path.display(),
                    w.nrows(),
                    data.len()
                )));
            }
            Some(w)
        }
        _ => None,
    };
    let opts = config.ksc_options();
    let initial = initial_run(config, data)?;
    let mut run = initial.clone();
    let mut labels = LabelStore::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut curve = ExperimentCurve {
        strategy: config.strategy,
        dataset: data.name.clone(),
        seed: config.seed,
        n_points: data.len(),
        records: vec![record(0, &labels, &run, data)?],
        labels: labels.clone(),
        clustering: run.clustering.clone(),
    };
    observe(&curve)?;

    let mut iteration = 0;
    while labels.len() < budget {
        let perfect = curve.final_nmi().is_some_and(|v| v >= 1.0 - PERFECT_TOL);
        if config.stop_at_perfect && perfect {
            break;
        }
        iteration += 1;
        let scores = score_all(data, &run.models, &run.clustering, &labels)?;
        let losses: Vec<f64> = scores.points.iter().fold(vec![0.0; data.len()], |mut acc, p| {
            acc[p.id] = p.loss;
            acc
        });
        let take = config.batch.min(budget - labels.len());
        let picks = select_batch(config.strategy, &scores, &losses, take, &mut rng)?;
        for id in picks {
            let class = oracle.answer(id)?;
            if class >= config.k {
                return Err(Error::Oracle(format!(
                    "class {} for point {id} is outside 1..={}",
                    class + 1,
                    config.k
                )));
            }
            labels.insert(id, class)?;
        }

        run = match config.update {
            UpdateMethod::Kscc => {
                let start = if config.warm_start { &run.clustering } else { &initial.clustering };
                run_kscc(data, start, &labels, &opts)?
            }
            UpdateMethod::Spectral => {
                let w = affinity.as_ref().expect("validated above");
                spectral_active_step(data, w.view(), &labels, config.k, &opts, config.seed)?
            }
        };
        curve.records.push(record(iteration, &labels, &run, data)?);
        curve.labels = labels.clone();
        curve.clustering = run.clustering.clone();
        observe(&curve)?;
    }
    Ok(curve)
}

/// Format a float so that it round-trips exactly.
fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub const CURVE_HEADER: &str = "strategy,dataset,seed,iteration,n_queried,nmi,objective";
pub const SUMMARY_HEADER: &str = "strategy,dataset,seed,queries_to_perfect_pct,auc_pct";

/// The per-run results CSV.
pub fn curve_csv(curve: &ExperimentCurve) -> String {
    let mut out = String::from(CURVE_HEADER);
    out.push('\n');
    for r in &curve.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            curve.strategy,
            curve.dataset,
            curve.seed,
            r.iteration,
            r.n_queried,
            r.nmi.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.objective)
        );
    }
    out
}

/// One row per curve, in input order. Curves without ground truth get empty
/// metric fields.
pub fn summary_csv(curves: &[ExperimentCurve]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for c in curves {
        let (qp, a) = match c.summary() {
            Some(s) => (fmt_f64(s.queries_to_perfect_pct), fmt_f64(s.auc_pct)),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(out, "{},{},{},{qp},{a}", c.strategy, c.dataset, c.seed);
    }
    out
}

pub fn curve_file_name(curve: &ExperimentCurve) -> String {
    format!("{}_{}_seed{}.csv", curve.strategy, curve.dataset, curve.seed)
}

/// Write one curve CSV per run plus `summary.csv` into `dir`. Returns the
/// paths written, summary last.
pub fn emit_results(curves: &[ExperimentCurve], dir: &Path) -> Result<Vec<PathBuf>> {
    if curves.is_empty() {
        return Err(Error::InvalidInput("no curves to write".into()));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for c in curves {
        let path = dir.join(curve_file_name(c));
        fs::write(&path, curve_csv(c)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let path = dir.join("summary.csv");
    fs::write(&path, summary_csv(curves)).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

/// Mean summaries per strategy in a two-row table (queries-to-perfect % and
/// AUC %), strategies as columns in first-seen order.
pub fn summary_table(curves: &[ExperimentCurve]) -> String {
    let mut order: Vec<Strategy> = Vec::new();
    let mut acc: HashMap<Strategy, (f64, f64, usize)> = HashMap::new();
    for c in curves {
        let Some(s) = c.summary() else { continue };
        if !order.contains(&c.strategy) {
            order.push(c.strategy);
        }
        let e = acc.entry(c.strategy).or_default();
        e.0 += s.queries_to_perfect_pct;
        e.1 += s.auc_pct;
        e.2 += 1;
    }
    let mut out = format!("{:<22}", "");
    for s in &order {
        let _ = write!(out, "{:>10}", s.name());
    }
    out.push('\n');
    for (title, pick) in [("queries-to-perfect %", 0), ("AUC %", 1)] {
        let _ = write!(out, "{title:<22}");
        for s in &order {
            let (q, a, n) = acc[s];
            let v = if pick == 0 { q } else { a } / n as f64;
            let _ = write!(out, "{v:>10.2}");
        }
        out.push('\n');
    }
    out
}

/// Save labels as `id,class` lines (class 1-based) in query order.
pub fn write_label_store(labels: &LabelStore, path: &Path) -> Result<()> {
    let mut out = String::new();
    for (id, class) in labels.iter() {
        let _ = writeln!(out, "{id},{}", class + 1);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_label_store(path: &Path) -> Result<LabelStore> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut labels = LabelStore::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let (id, class) = line
            .split_once(',')
            .ok_or_else(|| parse_err(format!("expected id,class, got {line:?}")))?;
        let id: usize = id.trim().parse().map_err(|_| parse_err(format!("bad id {id:?}")))?;
        let class: usize = class
            .trim()
            .parse()
            .ok()
            .filter(|&c| c >= 1)
            .ok_or_else(|| parse_err(format!("bad class {class:?}")))?;
        labels
            .insert(id, class - 1)
            .map_err(|_| parse_err(format!("point {id} labelled twice")))?;
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{generate, SyntheticSpec};

    fn small(seed: u64) -> Dataset {
        generate(&SyntheticSpec {
            k: 3,
            q: 2,
            p: 6,
            points_per_cluster: 20,
            ..SyntheticSpec::noise_sweep(0.05, seed)
        })
        .unwrap()
    }

    fn config(strategy: Strategy) -> ExperimentConfig {
        ExperimentConfig {
            init: InitMethod::KscBestOf(5),
            ..ExperimentConfig::new(strategy, 3, 2)
        }
    }

    #[test]
    fn config_parses_and_overrides() {
        let cfg = ExperimentConfig::parse(
            "# sweep\nstrategy = minmargin\nK=5\nq=10\nbudget=40\ninit=ksc_best_of(7)\ncentering=off\nwarm_start=false\n",
        )
        .unwrap();
        assert_eq!(cfg.strategy, Strategy::MinMargin);
        assert_eq!((cfg.k, cfg.q, cfg.budget), (5, 10, Some(40)));
        assert_eq!(cfg.init, InitMethod::KscBestOf(7));
        assert_eq!(cfg.centering, Centering::Off);
        assert!(!cfg.warm_start);

        let cfg = ExperimentConfig::parse("strategy=scal\nk=2\nq=1\ninit=labels_file:/tmp/x.labels\nupdate=spectral").unwrap();
        assert_eq!(cfg.init, InitMethod::LabelsFile("/tmp/x.labels".into()));
        assert_eq!(cfg.update, UpdateMethod::Spectral);

        assert!(ExperimentConfig::parse("k=2\nq=1").is_err());
        assert!(ExperimentConfig::parse("strategy=scal\nk=2\nq=1\ncolour=red").is_err());
        assert!(ExperimentConfig::parse("strategy=scal\nk=two\nq=1").is_err());
    }

    #[test]
    fn zero_budget_gives_one_record() {
        let data = small(1);
        let cfg = ExperimentConfig {
            budget: Some(0),
            ..config(Strategy::Scal)
        };
        let curve = run_experiment(&cfg, &data, GroundTruthOracle::new(&data).unwrap()).unwrap();
        assert_eq!(curve.records.len(), 1);
        assert_eq!(curve.records[0].n_queried, 0);
    }

    #[test]
    fn full_budget_ends_perfect() {
        let data = small(2);
        let cfg = ExperimentConfig {
            stop_at_perfect: false,
            batch: 7,
            ..config(Strategy::Random)
        };
        let curve = run_experiment(&cfg, &data, GroundTruthOracle::new(&data).unwrap()).unwrap();
        assert_eq!(curve.labels.len(), data.len());
        assert_eq!(curve.final_nmi(), Some(1.0));
        let queried: Vec<usize> = curve.records.iter().map(|r| r.n_queried).collect();
        assert!(queried.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= 7));
    }

    #[test]
    fn labels_are_never_repeated() {
        let data = small(3);
        let cfg = ExperimentConfig {
            budget: Some(25),
            stop_at_perfect: false,
            ..config(Strategy::MaxResid)
        };
        let curve = run_experiment(&cfg, &data, GroundTruthOracle::new(&data).unwrap()).unwrap();
        let mut ids = curve.labels.query_order().to_vec();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 25);
        assert!(crate::kscc::satisfies_constraints(&curve.clustering, &curve.labels));
    }

    #[test]
    fn bad_oracle_class_aborts_with_partial_curve() {
        struct Bad;
        impl Oracle for Bad {
            fn answer(&mut self, _: usize) -> Result<usize> {
                Ok(9)
            }
        }
        let data = small(4);
        let cfg = ExperimentConfig {
            stop_at_perfect: false,
            ..config(Strategy::Scal)
        };
        let mut seen = 0;
        let err = run_experiment_observed(&cfg, &data, Bad, |c| {
            seen = c.records.len();
            Ok(())
        })
        .unwrap_err();
        assert!(matches!(err, Error::Oracle(_)));
        assert_eq!(seen, 1);
    }

    #[test]
    fn replayed_answers_reproduce_the_curve() {
        let data = small(5);
        let cfg = ExperimentConfig {
            budget: Some(10),
            stop_at_perfect: false,
            ..config(Strategy::Scal)
        };
        let first = run_experiment(&cfg, &data, GroundTruthOracle::new(&data).unwrap()).unwrap();
        let replay = ReplayOracle::new(&first.labels, ScriptedOracle::default());
        let second = run_experiment(&cfg, &data, replay).unwrap();
        assert_eq!(curve_csv(&first), curve_csv(&second));
    }

    #[test]
    fn spectral_update_needs_affinity() {
        let data = small(6);
        let cfg = ExperimentConfig {
            update: UpdateMethod::Spectral,
            ..config(Strategy::Scal)
        };
        assert!(matches!(
            run_experiment(&cfg, &data, GroundTruthOracle::new(&data).unwrap()),
            Err(Error::Config(_))
        ));
    }

    fn trivial_curve() -> ExperimentCurve {
        ExperimentCurve {
            strategy: Strategy::Scal,
            dataset: "toy".into(),
            seed: 7,
            n_points: 4,
            records: vec![
                CurveRecord {
                    iteration: 0,
                    n_queried: 0,
                    nmi: Some(0.5),
                    objective: 1.25,
                },
                CurveRecord {
                    iteration: 1,
                    n_queried: 2,
                    nmi: Some(1.0),
                    objective: 0.0,
                },
            ],
            labels: LabelStore::new(),
            clustering: Clustering::new(vec![0, 0, 1, 1], 2).unwrap(),
        }
    }

    #[test]
    fn golden_result_files() {
        let dir = tempfile::tempdir().unwrap();
        let paths = emit_results(&[trivial_curve()], dir.path()).unwrap();
        assert_eq!(paths.len(), 2);
        assert_eq!(
            fs::read_to_string(&paths[0]).unwrap(),
            "strategy,dataset,seed,iteration,n_queried,nmi,objective\n\
             scal,toy,7,0,0,0.5,1.25\n\
             scal,toy,7,1,2,1.0,0.0\n"
        );
        assert_eq!(
            fs::read_to_string(&paths[1]).unwrap(),
            "strategy,dataset,seed,queries_to_perfect_pct,auc_pct\nscal,toy,7,50.0,87.5\n"
        );
    }

    #[test]
    fn summary_has_one_row_per_run() {
        let mut curves = Vec::new();
        for seed in 0..3 {
            for s in [Strategy::Scal, Strategy::Random] {
                curves.push(ExperimentCurve {
                    strategy: s,
                    seed,
                    ..trivial_curve()
                });
            }
        }
        assert_eq!(summary_csv(&curves).lines().count(), 7);
        let table = summary_table(&curves);
        assert_eq!(table.lines().count(), 3);
        assert!(table.contains("scal") && table.contains("random"));
        assert!(table.lines().nth(1).unwrap().contains("50.00"));
    }

    #[test]
    fn label_store_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labels.csv");
        let mut labels = LabelStore::new();
        labels.insert(9, 2).unwrap();
        labels.insert(3, 0).unwrap();
        write_label_store(&labels, &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "9,3\n3,1\n");
        assert_eq!(read_label_store(&path).unwrap(), labels);

        fs::write(&path, "1,1\n2,0\n").unwrap();
        assert!(matches!(read_label_store(&path), Err(Error::Parse { line: 2, .. })));
    }
}
