mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use octree_core::dataset::{load_csv, LabelColumn, mdlp_binarize, read_binarized_csv, reduce_unique, split, write_binarized_csv};
use octree_core::engine::{self, SolveConfig, SolveResult};
use octree_core::formulations::build_benders_master;
use octree_core::milp::{write_lp, write_mps};
use octree_core::oracle::enumerate_optimal;
use octree_core::{BinarizedDataset, ClassTree, Exec, MetricSpec, UniqueDataset};

use config::RunConfig;

/// Column order of the benchmark results file.
const RESULT_COLUMNS: [&str; 9] = ["dataset", "depth", "objective", "time", "ub", "lb", "gap", "objective_value", "status"];

/// A failed command and the exit code it maps to.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
    Solve(String),
    Mismatch(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Solve(_) => 3,
            Failure::Mismatch(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Solve(m) | Failure::Mismatch(m) => m,
        }
    }
}

impl From<config::ConfigError> for Failure {
    fn from(e: config::ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<octree_core::DataError> for Failure {
    fn from(e: octree_core::DataError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<octree_core::TreeError> for Failure {
    fn from(e: octree_core::TreeError) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<octree_core::SolveError> for Failure {
    fn from(e: octree_core::SolveError) -> Self {
        match e {
            octree_core::SolveError::Tree(t) => Failure::Data(t.to_string()),
            other => Failure::Solve(other.to_string()),
        }
    }
}

impl From<octree_core::ModelError> for Failure {
    fn from(e: octree_core::ModelError) -> Self {
        Failure::Solve(e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

#[derive(Parser)]
#[command(name = "octree", version, about = "Optimal classification trees by branch-and-cut")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discretize a CSV into 0/1 columns and report the unique-instance count.
    Binarize {
        input: PathBuf,
        /// Directory for binarized.csv and rules.json.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Label column, by header name or 0-based index (default: last).
        #[arg(long)]
        label: Option<String>,
        /// Also write train/validation/test files with these fractions.
        #[arg(long)]
        split: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Train an optimal tree and write tree, result and log files.
    Train {
        data: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the master model in MPS format before solving.
        #[arg(long)]
        export_mps: Option<PathBuf>,
        /// Write the master model in LP format before solving.
        #[arg(long)]
        export_lp: Option<PathBuf>,
    },
    /// Score a saved tree on a dataset.
    Evaluate {
        #[arg(long)]
        tree: PathBuf,
        data: PathBuf,
        /// Binarization rules (default: rules.json next to the tree, if any).
        /// Without rules the data must already be binarized.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// The data is already binarized (as written by `binarize` or a split).
        #[arg(long, conflicts_with = "rules")]
        binarized: bool,
        #[arg(long)]
        label: Option<String>,
        /// Comma-separated metric names.
        #[arg(long)]
        metrics: Option<String>,
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Write the master model without solving it.
    Export {
        data: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
        /// `mps` or `lp`; defaults to the output file's extension.
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Compare the solver against exhaustive enumeration (depth ≤ 2).
    OracleCheck {
        data: Option<PathBuf>,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Run every dataset × depth × objective combination and record results.
    Benchmark {
        /// Comma-separated dataset paths.
        #[arg(long)]
        datasets: Option<String>,
        #[arg(long)]
        depths: Option<String>,
        #[arg(long)]
        objectives: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
        /// Results CSV (default: results.csv in the output directory).
        #[arg(long)]
        results: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Runs solved at the same time.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args, Clone, Debug, Default)]
struct ModelArgs {
    /// Run configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    depth: Option<u32>,
    /// accuracy, f1, fbeta, mcc, ba, cost, icost, gmean, fm, iou, dor or combo.
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    cost_pos: Option<f64>,
    #[arg(long)]
    cost_neg: Option<f64>,
    #[arg(long)]
    alpha1: Option<f64>,
    #[arg(long)]
    alpha2: Option<f64>,
    #[arg(long)]
    dor_bound: Option<f64>,
    /// One cost per data row, for `icost`.
    #[arg(long)]
    kappa: Option<PathBuf>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_cuts: bool,
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long)]
    max_branch_nodes: Option<usize>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long)]
    gap_tolerance: Option<f64>,
    /// Train/validation/test fractions, e.g. 0.5,0.25,0.25.
    #[arg(long)]
    split: Option<String>,
}

/// Flags merged over the configuration file.
#[derive(Clone, Debug)]
struct Settings {
    data: Option<PathBuf>,
    label: Option<String>,
    depth: u32,
    objective: String,
    beta: Option<f64>,
    lambda: f64,
    cost_pos: f64,
    cost_neg: f64,
    alpha1: f64,
    alpha2: f64,
    dor_bound: f64,
    kappa: Option<PathBuf>,
    time_limit: f64,
    seed: u64,
    cuts: bool,
    warm_start: bool,
    max_branch_nodes: Option<usize>,
    node_limit: Option<u64>,
    gap_tolerance: f64,
    split: Option<(f64, f64, f64)>,
    out: PathBuf,
    export_mps: Option<PathBuf>,
    export_lp: Option<PathBuf>,
    cfg: RunConfig,
}

/// Label column by name or position; the last column when absent.
fn label_column(label: Option<&str>) -> LabelColumn {
    label.map_or(LabelColumn::Last, LabelColumn::from)
}

fn load_config(path: Option<&Path>) -> Outcome<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", p.display())))?;
            Ok(RunConfig::parse(&text)?)
        }
    }
}

fn parse_split(text: &str) -> Outcome<(f64, f64, f64)> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("--split {text:?}: expected three numbers")))?;
    match parts[..] {
        [a, b, c] => Ok((a, b, c)),
        _ => Err(Failure::Usage(format!("--split {text:?}: expected three numbers"))),
    }
}

impl Settings {
    fn resolve(args: &ModelArgs, data: Option<&PathBuf>, out: Option<&PathBuf>) -> Outcome<Self> {
        let cfg = load_config(args.config.as_deref())?;
        let split = match args.split.clone().or_else(|| cfg.get("split").map(String::from)) {
            Some(s) => Some(parse_split(&s)?),
            None => None,
        };
        let s = Self {
            data: data.cloned().or_else(|| cfg.get("path").map(PathBuf::from)),
            label: args.label.clone().or_else(|| cfg.get("label").map(String::from)),
            depth: args.depth.or(cfg.parsed("depth")?).unwrap_or(2),
            objective: args
                .objective
                .clone()
                .or_else(|| cfg.get("objective").map(String::from))
                .unwrap_or_else(|| "accuracy".into()),
            beta: args.beta.or(cfg.parsed("beta")?),
            lambda: args.lambda.or(cfg.parsed("lambda")?).unwrap_or(0.0),
            cost_pos: args.cost_pos.or(cfg.parsed("cost_pos")?).unwrap_or(1.0),
            cost_neg: args.cost_neg.or(cfg.parsed("cost_neg")?).unwrap_or(1.0),
            alpha1: args.alpha1.or(cfg.parsed("alpha1")?).unwrap_or(1.0),
            alpha2: args.alpha2.or(cfg.parsed("alpha2")?).unwrap_or(1.0),
            dor_bound: args.dor_bound.or(cfg.parsed("dor_bound")?).unwrap_or(100.0),
            kappa: args.kappa.clone().or_else(|| cfg.get("kappa_file").map(PathBuf::from)),
            time_limit: args.time_limit.or(cfg.parsed("time_limit")?).unwrap_or(600.0),
            seed: args.seed.or(cfg.parsed("seed")?).unwrap_or(0),
            cuts: !args.no_cuts && cfg.flag("cuts")?.unwrap_or(true),
            warm_start: !args.no_warm_start && cfg.flag("warm_start")?.unwrap_or(true),
            max_branch_nodes: args.max_branch_nodes.or(cfg.parsed("max_branch_nodes")?),
            node_limit: args.node_limit.or(cfg.parsed("node_limit")?),
            gap_tolerance: args.gap_tolerance.or(cfg.parsed("gap_tolerance")?).unwrap_or(0.0),
            split,
            out: out.cloned().or_else(|| cfg.get("dir").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from(".")),
            export_mps: cfg.get("export_mps").map(PathBuf::from),
            export_lp: cfg.get("export_lp").map(PathBuf::from),
            cfg,
        };
        if !(1..=20).contains(&s.depth) {
            return Err(Failure::Usage(format!("depth {} outside 1..=20", s.depth)));
        }
        if !(s.time_limit > 0.0) {
            return Err(Failure::Usage(format!("time limit {} must be positive", s.time_limit)));
        }
        if !(0.0..1.0).contains(&s.lambda) {
            return Err(Failure::Usage(format!("lambda {} outside [0, 1)", s.lambda)));
        }
        for p in s.data.iter().chain(&s.kappa) {
            if !p.exists() {
                return Err(Failure::Data(format!("{} does not exist", p.display())));
            }
        }
        Ok(s)
    }

    fn data_path(&self) -> Outcome<&Path> {
        self.data
            .as_deref()
            .ok_or_else(|| Failure::Usage("no dataset given (argument or [data] path)".into()))
    }

    fn label(&self) -> LabelColumn {
        label_column(self.label.as_deref())
    }

    fn solve_config(&self) -> SolveConfig {
        SolveConfig {
            time_limit: self.time_limit,
            gap_tolerance: self.gap_tolerance,
            lambda: self.lambda,
            enable_conflict_cuts: self.cuts,
            enable_feature_cuts: self.cuts,
            enable_envelope_cuts: self.cuts,
            enable_warm_start: self.warm_start,
            seed: self.seed,
            max_branch_nodes: self.max_branch_nodes,
            node_limit: self.node_limit,
            ..SolveConfig::default()
        }
    }

    /// Metric for `name`, with parameters taken from the settings.
    fn spec(&self, name: &str, data: &UniqueDataset) -> Outcome<MetricSpec> {
        let spec = match name {
            "accuracy" => MetricSpec::Accuracy,
            "f1" => MetricSpec::f1(),
            "fbeta" => MetricSpec::FBeta {
                beta: self.beta.unwrap_or(1.0),
            },
            "mcc" => MetricSpec::Mcc,
            "ba" => MetricSpec::BalancedAccuracy,
            "cost" => MetricSpec::CostSensitive {
                c_pos: self.cost_pos,
                c_neg: self.cost_neg,
            },
            "icost" => MetricSpec::InstanceCost {
                kappa: self.unique_kappa(data)?,
            },
            "gmean" => MetricSpec::GMean,
            "fm" => MetricSpec::FowlkesMallows,
            "iou" => MetricSpec::IoU,
            "dor" => MetricSpec::Dor { bound: self.dor_bound },
            "combo" => MetricSpec::Combination {
                alpha1: self.alpha1,
                alpha2: self.alpha2,
                beta: self.beta.unwrap_or(1.0),
            },
            other => return Err(Failure::Usage(format!("unknown objective {other:?}"))),
        };
        spec.validate(data)?;
        Ok(spec)
    }

    /// Per-row costs averaged over the rows each unique instance merges.
    fn unique_kappa(&self, data: &UniqueDataset) -> Outcome<Vec<f64>> {
        let path = self
            .kappa
            .as_ref()
            .ok_or_else(|| Failure::Usage("icost needs --kappa".into()))?;
        if self.split.is_some() {
            return Err(Failure::Usage("icost costs are per row and cannot be combined with --split".into()));
        }
        let text = fs::read_to_string(path).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?;
        let rows: Vec<f64> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .enumerate()
            .filter_map(|(k, l)| match l.parse::<f64>() {
                Ok(v) => Some(Ok(v)),
                Err(_) if k == 0 => None,
                Err(_) => Some(Err(Failure::Data(format!("kappa value {l:?} is not a number")))),
            })
            .collect::<Result<_, _>>()?;
        let n_rows: usize = data.origin_map().iter().map(Vec::len).sum();
        if rows.len() != n_rows {
            return Err(Failure::Data(format!("{} kappa values for {n_rows} rows", rows.len())));
        }
        Ok(data
            .origin_map()
            .iter()
            .map(|origin| origin.iter().map(|&r| rows[r]).sum::<f64>() / origin.len() as f64)
            .collect())
    }
}

/// Loads and binarizes a dataset; returns rules, the full binarized data and
/// the training part.
fn load_training(s: &Settings, path: &Path) -> Outcome<(octree_core::BinRules, BinarizedDataset, Option<[BinarizedDataset; 3]>)> {
    let raw = load_csv(path, s.label())?;
    let (rules, bin) = mdlp_binarize(&raw)?;
    let parts = match s.split {
        Some(f) => {
            let (a, b, c) = split(&bin, s.seed, f)?;
            Some([a, b, c])
        }
        None => None,
    };
    Ok((rules, bin, parts))
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::Data(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::Data(format!("cannot write {}: {e}", path.display())))
}

fn binarized_csv(data: &BinarizedDataset) -> Outcome<Vec<u8>> {
    let mut buf = Vec::new();
    write_binarized_csv(data, &mut buf)?;
    Ok(buf)
}

fn cmd_binarize(input: &Path, out: &Path, label: Option<&str>, split_arg: Option<&str>, seed: u64) -> Outcome {
    let raw = load_csv(input, label_column(label))?;
    let (rules, bin) = mdlp_binarize(&raw)?;
    let uniq = reduce_unique(&bin);
    write_file(&out.join("binarized.csv"), binarized_csv(&bin)?)?;
    write_file(&out.join("rules.json"), rules.to_json()?)?;
    if let Some(text) = split_arg {
        let (a, b, c) = split(&bin, seed, parse_split(text)?)?;
        for (name, part) in [("train.csv", a), ("validation.csv", b), ("test.csv", c)] {
            write_file(&out.join(name), binarized_csv(&part)?)?;
        }
    }
    let degenerate = bin.degenerate().iter().filter(|&&d| d).count();
    println!(
        "rows {} columns {} degenerate {} unique {}",
        bin.len(),
        bin.n_features(),
        degenerate,
        uniq.len()
    );
    Ok(())
}

fn result_json(r: &SolveResult) -> Outcome<String> {
    serde_json::to_string_pretty(r).map_err(|e| Failure::Solve(e.to_string()))
}

fn export_model(s: &Settings, data: &UniqueDataset, spec: &MetricSpec, mps: Option<&Path>, lp: Option<&Path>) -> Outcome {
    if mps.is_none() && lp.is_none() {
        return Ok(());
    }
    let (model, _) = build_benders_master(data, s.depth, s.lambda, spec, s.max_branch_nodes)?;
    if let Some(p) = mps {
        write_file(p, write_mps(&model)?)?;
    }
    if let Some(p) = lp {
        write_file(p, write_lp(&model)?)?;
    }
    Ok(())
}

fn cmd_train(s: &Settings, export_mps: Option<&Path>, export_lp: Option<&Path>) -> Outcome {
    let path = s.data_path()?;
    let (rules, bin, parts) = load_training(s, path)?;
    let train_bin = parts.as_ref().map_or(&bin, |p| &p[0]);
    let data = reduce_unique(train_bin);
    let spec = s.spec(&s.objective, &data)?;
    export_model(
        s,
        &data,
        &spec,
        export_mps.or(s.export_mps.as_deref()),
        export_lp.or(s.export_lp.as_deref()),
    )?;
    info!("training on {} rows ({} unique), depth {}, {}", train_bin.len(), data.len(), s.depth, spec.name());
    let result = engine::train(&data, s.depth, &spec, &s.solve_config())?;

    write_file(&s.out.join("tree.json"), result.tree.to_json()?)?;
    write_file(
        &s.out.join("tree.dot"),
        result.tree.to_dot(Some(data.feature_names()), Some(data.class_names())),
    )?;
    write_file(&s.out.join("rules.json"), rules.to_json()?)?;
    write_file(&s.out.join("result.json"), result_json(&result)?)?;
    let mut log = result.log.join("\n");
    log.push('\n');
    write_file(&s.out.join("solve.log"), log)?;
    if let Some([train, val, test]) = &parts {
        write_file(&s.out.join("train.csv"), binarized_csv(train)?)?;
        let mut holdout = serde_json::Map::new();
        for (name, part) in [("validation", val), ("test", test)] {
            let u = reduce_unique(part);
            let value = result.tree.evaluate(&u)?.metric(&spec, &u)?;
            holdout.insert(name.into(), serde_json::json!({ "rows": part.len(), "metric": spec.name(), "value": value }));
        }
        write_file(
            &s.out.join("holdout.json"),
            serde_json::to_string_pretty(&holdout).map_err(|e| Failure::Solve(e.to_string()))?,
        )?;
    }
    println!(
        "status {} objective {} {} {} gap {:.4}% nodes {}",
        serde_json::to_value(result.status).map_err(|e| Failure::Solve(e.to_string()))?.as_str().unwrap_or("?"),
        result.objective,
        spec.name(),
        result.metric_value,
        result.gap,
        result.nodes
    );
    Ok(())
}

/// Metrics reported by default for the label arity of `data`.
fn default_metrics(data: &UniqueDataset) -> Vec<String> {
    let names: &[&str] = if data.n_classes() == 2 {
        &["accuracy", "f1", "mcc", "ba", "gmean", "fm", "iou"]
    } else {
        &["accuracy", "ba"]
    };
    names.iter().map(|s| s.to_string()).collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    tree_path: &Path,
    data_path: &Path,
    rules: Option<&Path>,
    binarized: bool,
    label: Option<&str>,
    metrics: Option<&str>,
    format: &str,
    output: Option<&Path>,
) -> Outcome {
    let text = fs::read_to_string(tree_path).map_err(|e| Failure::Data(format!("{}: {e}", tree_path.display())))?;
    let tree = ClassTree::from_json(&text)?;
    let label = label_column(label);
    // `train` writes rules.json beside tree.json; use it unless told otherwise.
    let sibling = tree_path.with_file_name("rules.json");
    let rules = match binarized {
        true => None,
        false => rules.or_else(|| sibling.exists().then_some(sibling.as_path())),
    };
    let bin = match rules {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Data(format!("{}: {e}", p.display())))?;
            octree_core::BinRules::from_json(&text)?.apply(&load_csv(data_path, label.clone())?)?
        }
        None => read_binarized_csv(data_path, label, None)?,
    };
    if bin.n_features() != tree.n_features() {
        return Err(Failure::Data(format!(
            "tree expects {} features, data has {}",
            tree.n_features(),
            bin.n_features()
        )));
    }
    let data = reduce_unique(&bin);
    let names: Vec<String> = match metrics {
        Some(m) => m.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => default_metrics(&data),
    };
    let settings = Settings::resolve(&ModelArgs::default(), None, None)?;
    let eval = tree.evaluate(&data)?;
    let mut rows = Vec::new();
    for name in &names {
        if name == "icost" {
            return Err(Failure::Usage("icost cannot be evaluated without per-row costs".into()));
        }
        let spec = settings.spec(name, &data)?;
        rows.push((name.clone(), eval.metric(&spec, &data)?));
    }
    let body = match format {
        "json" => {
            let list: Vec<_> = rows.iter().map(|(m, v)| serde_json::json!({ "metric": m, "value": v })).collect();
            let mut s = serde_json::to_string_pretty(&list).map_err(|e| Failure::Data(e.to_string()))?;
            s.push('\n');
            s
        }
        "csv" => {
            let mut s = String::from("metric,value\n");
            for (m, v) in &rows {
                s.push_str(&format!("{m},{v}\n"));
            }
            s
        }
        other => return Err(Failure::Usage(format!("unknown format {other:?}"))),
    };
    match output {
        Some(p) => write_file(p, body),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cmd_export(s: &Settings, format: Option<&str>, output: &Path) -> Outcome {
    let path = s.data_path()?;
    let (_, bin, parts) = load_training(s, path)?;
    let data = reduce_unique(parts.as_ref().map_or(&bin, |p| &p[0]));
    let spec = s.spec(&s.objective, &data)?;
    let format = format
        .map(str::to_string)
        .or_else(|| output.extension().map(|e| e.to_string_lossy().to_lowercase()))
        .unwrap_or_default();
    match format.as_str() {
        "mps" => export_model(s, &data, &spec, Some(output), None),
        "lp" => export_model(s, &data, &spec, None, Some(output)),
        other => Err(Failure::Usage(format!("export format {other:?} is neither mps nor lp"))),
    }
}

fn cmd_oracle_check(s: &Settings) -> Outcome {
    let path = s.data_path()?;
    let (_, bin, parts) = load_training(s, path)?;
    let data = reduce_unique(parts.as_ref().map_or(&bin, |p| &p[0]));
    let spec = s.spec(&s.objective, &data)?;
    let oracle = enumerate_optimal(&data, s.depth, &spec, s.lambda, s.max_branch_nodes, Exec::default()).map_err(|e| match e {
        octree_core::SolveError::LimitsExceeded(m) => Failure::Usage(format!("oracle limits exceeded: {m}")),
        other => other.into(),
    })?;
    let solved = engine::train(&data, s.depth, &spec, &s.solve_config())?;
    if (solved.objective - oracle.best_objective).abs() <= 1e-9 {
        println!("PASS {} objective {} ({} trees enumerated)", spec.name(), solved.objective, oracle.count);
        Ok(())
    } else {
        println!("FAIL {} solver {} oracle {}", spec.name(), solved.objective, oracle.best_objective);
        Err(Failure::Mismatch(format!(
            "solver objective {} differs from oracle {}",
            solved.objective, oracle.best_objective
        )))
    }
}

/// One benchmark run's CSV fields after `dataset, depth, objective`.
fn run_fields(result: &Outcome<SolveResult>, secs: f64) -> Vec<String> {
    match result {
        Ok(r) => vec![
            format!("{secs:.3}"),
            r.upper_bound.to_string(),
            r.lower_bound.to_string(),
            r.gap.to_string(),
            r.objective.to_string(),
            serde_json::to_value(r.status)
                .ok()
                .and_then(|v| v.as_str().map(String::from))
                .unwrap_or_default(),
        ],
        Err(e) => vec![format!("{secs:.3}"), String::new(), String::new(), String::new(), String::new(), format!("error: {}", e.message())],
    }
}

fn cmd_benchmark(
    s: &Settings,
    datasets: Option<&str>,
    depths: Option<&str>,
    objectives: Option<&str>,
    results: Option<&Path>,
    jobs: Option<usize>,
) -> Outcome {
    let list = |flag: Option<&str>, key: &str| -> Vec<String> {
        match flag {
            Some(v) => v.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
            None => s.cfg.list(key),
        }
    };
    let mut sets = list(datasets, "datasets");
    if sets.is_empty() {
        sets.extend(s.data.iter().map(|p| p.display().to_string()));
    }
    let depth_list: Vec<u32> = {
        let raw = list(depths, "depths");
        if raw.is_empty() {
            vec![s.depth]
        } else {
            raw.iter()
                .map(|d| d.parse().map_err(|_| Failure::Usage(format!("depth {d:?} is not a number"))))
                .collect::<Outcome<_>>()?
        }
    };
    let mut objective_list = list(objectives, "objectives");
    if objective_list.is_empty() {
        objective_list.push(s.objective.clone());
    }
    if sets.is_empty() {
        return Err(Failure::Usage("benchmark needs at least one dataset".into()));
    }
    for d in &sets {
        if !Path::new(d).exists() {
            return Err(Failure::Data(format!("{d} does not exist")));
        }
    }
    let jobs = jobs.or(s.cfg.parsed("jobs")?).unwrap_or(1).max(1);
    let results_path = results
        .map(Path::to_path_buf)
        .or_else(|| s.cfg.get("results").map(PathBuf::from))
        .unwrap_or_else(|| s.out.join("results.csv"));

    let mut runs: Vec<(String, u32, String)> = Vec::new();
    for d in &sets {
        for &k in &depth_list {
            for o in &objective_list {
                runs.push((d.clone(), k, o.clone()));
            }
        }
    }
    let rows: Vec<Mutex<Option<Vec<String>>>> = runs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let start = Instant::now();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(runs.len()) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some((dataset, depth, objective)) = runs.get(k) else {
                    break;
                };
                let t0 = Instant::now();
                let result = (|| -> Outcome<SolveResult> {
                    let mut run = s.clone();
                    run.depth = *depth;
                    let (_, bin, parts) = load_training(&run, Path::new(dataset))?;
                    let data = reduce_unique(parts.as_ref().map_or(&bin, |p| &p[0]));
                    let spec = run.spec(objective, &data)?;
                    let cfg = SolveConfig {
                        exec: Exec::Sequential,
                        ..run.solve_config()
                    };
                    Ok(engine::train(&data, *depth, &spec, &cfg)?)
                })();
                if let Err(e) = &result {
                    warn!("{dataset} depth {depth} {objective}: {}", e.message());
                }
                let mut row = vec![dataset.clone(), depth.to_string(), objective.clone()];
                row.extend(run_fields(&result, t0.elapsed().as_secs_f64()));
                *rows[k].lock().expect("no thread panics while holding a row") = Some(row);
            });
        }
    });

    let mut out = String::new();
    out.push_str(&RESULT_COLUMNS.join(","));
    out.push('\n');
    let mut gaps = Vec::new();
    let mut optimal = 0;
    for row in rows {
        let row = row.into_inner().expect("threads have finished").expect("every run records a row");
        if let Ok(g) = row[6].parse::<f64>() {
            gaps.push(g);
        }
        if row[8] == "optimal" {
            optimal += 1;
        }
        out.push_str(&row.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    let mean_gap = if gaps.is_empty() { String::new() } else { (gaps.iter().sum::<f64>() / gaps.len() as f64).to_string() };
    out.push_str(&format!(
        "summary,,,{:.3},,,{mean_gap},,{optimal}/{} optimal\n",
        start.elapsed().as_secs_f64(),
        runs.len()
    ));
    write_file(&results_path, out)?;
    println!("{} runs, {optimal} optimal, results in {}", runs.len(), results_path.display());
    Ok(())
}

fn csv_field(f: &str) -> String {
    if f.contains([',', '"', '\n']) {
        format!("\"{}\"", f.replace('"', "\"\""))
    } else {
        f.to_string()
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Binarize {
            input,
            out,
            label,
            split,
            seed,
        } => cmd_binarize(&input, &out, label.as_deref(), split.as_deref(), seed),
        Command::Train {
            data,
            model,
            out,
            export_mps,
            export_lp,
        } => {
            let s = Settings::resolve(&model, data.as_ref(), out.as_ref())?;
            cmd_train(&s, export_mps.as_deref(), export_lp.as_deref())
        }
        Command::Evaluate {
            tree,
            data,
            rules,
            binarized,
            label,
            metrics,
            format,
            output,
        } => cmd_evaluate(&tree, &data, rules.as_deref(), binarized, label.as_deref(), metrics.as_deref(), &format, output.as_deref()),
        Command::Export {
            data,
            model,
            format,
            output,
        } => {
            let s = Settings::resolve(&model, data.as_ref(), None)?;
            cmd_export(&s, format.as_deref(), &output)
        }
        Command::OracleCheck { data, model } => {
            let s = Settings::resolve(&model, data.as_ref(), None)?;
            cmd_oracle_check(&s)
        }
        Command::Benchmark {
            datasets,
            depths,
            objectives,
            model,
            results,
            out,
            jobs,
        } => {
            let s = Settings::resolve(&model, None, out.as_ref())?;
            cmd_benchmark(&s, datasets.as_deref(), depths.as_deref(), objectives.as_deref(), results.as_deref(), jobs)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OCTREE_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
