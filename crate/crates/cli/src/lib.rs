//! Command-line front end: train, evaluate, explain, sweep, cross-check and
//! audit self-explaining classifiers.

pub mod artifacts;
pub mod config;
pub mod error;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use sst_core::evaluation::{eval_cross, evaluate, MetricsReport};
use sst_core::masking::{RandomSource, SufficiencyKind};
use sst_core::model::{encode_checkpoint, read_checkpoint, ModelParams};
use sst_core::numerics::Tensor2D;
use sst_core::oracle::{brute_force_with, greedy_with, saliency, SufficiencyChecker};
use sst_core::training::{sweep, train, SweepAxis, TrainConfig, TrainMode};

use artifacts::{mask_pgm, write_atomic, write_json, Explanation, OracleInstance, OracleReport};
pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "sst", version, about = "Train and audit classifiers that explain themselves")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides the training and evaluation seeds.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (default: the config's `out`, else `out`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckArg {
    Baseline,
    Probabilistic,
    Robust,
}

impl From<CheckArg> for SufficiencyKind {
    fn from(c: CheckArg) -> Self {
        match c {
            CheckArg::Baseline => SufficiencyKind::Baseline,
            CheckArg::Probabilistic => SufficiencyKind::Probabilistic,
            CheckArg::Robust => SufficiencyKind::Robust,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMethod {
    Greedy,
    Brute,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model; writes model.sstm, train_log.csv and metrics.json.
    Train {
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a checkpoint on the configured test set; writes metrics.json.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Restrict faithfulness to one check.
        #[arg(long, value_enum)]
        check: Option<CheckArg>,
    },
    /// Explain one instance; writes explanation.json and, for images, mask.pgm.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Index into the configured test set.
        #[arg(long, conflicts_with = "instance")]
        index: Option<usize>,
        /// JSON file holding one feature vector.
        #[arg(long)]
        instance: Option<PathBuf>,
    },
    /// Train and evaluate one model per value; writes sweep.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_axis)]
        axis: SweepAxis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Faithfulness of several checkpoints under several checks; writes cross.csv.
    Cross {
        #[command(flatten)]
        common: Common,
        /// `LABEL=PATH` or `PATH` (labelled by file stem); repeatable.
        #[arg(long, required = true)]
        checkpoint: Vec<String>,
        /// Checks to run (default: all three); repeatable.
        #[arg(long, value_enum)]
        check: Vec<CheckArg>,
    },
    /// Greedy and exhaustive minimal sufficient subsets; writes oracle.json and oracle.csv.
    Oracle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, value_enum, default_value = "baseline")]
        check: CheckArg,
        /// Largest subset size the exhaustive search may return.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, value_enum, default_value = "both")]
        method: OracleMethod,
    },
}

fn parse_axis(s: &str) -> Result<SweepAxis, String> {
    s.parse().map_err(|e: sst_core::Error| e.to_string())
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let cfg = match &common.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    Ok(match common.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn out_dir(common: &Common, cfg: &RunConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_data(cfg: &RunConfig) -> Result<config::LoadedData, CliError> {
    let data = cfg.data.load()?;
    if data.fell_back {
        eprintln!(
            "note: MNIST files not found (set {}); using a synthetic task",
            config::MNIST_ENV
        );
    }
    Ok(data)
}

fn load_checkpoint(path: &Path) -> Result<ModelParams, CliError> {
    read_checkpoint(path).map_err(|e| match e {
        sst_core::Error::Io(source) => CliError::Io {
            path: path.display().to_string(),
            source,
        },
        other => CliError::Runtime(other),
    })
}

fn require_width(params: &ModelParams, n: usize) -> Result<(), CliError> {
    if params.inputs() != n {
        return Err(CliError::Usage(format!(
            "model expects {} features, data has {n}",
            params.inputs()
        )));
    }
    Ok(())
}

pub fn cmd_train(common: &Common) -> Result<PathBuf, CliError> {
    let cfg = load_config(common)?;
    let out = out_dir(common, &cfg);
    let data = load_data(&cfg)?;
    let (params, log) = train(&data.train, &cfg.train)?;
    let reference = if cfg.compare_standard {
        let twin = TrainConfig {
            mode: TrainMode::Standard,
            ..cfg.train.clone()
        };
        let (reference, _) = train(&data.train, &twin)?;
        Some(sst_core::evaluation::accuracy_pct(&reference, &data.test)?)
    } else {
        None
    };
    let report = evaluate(&params, &data.test, &cfg.eval, &SufficiencyKind::ALL, reference)?;
    write_atomic(&out.join("model.sstm"), &encode_checkpoint(&params))?;
    write_atomic(&out.join("train_log.csv"), log.to_csv().as_bytes())?;
    write_atomic(&out.join("metrics.json"), report.to_json().as_bytes())?;
    Ok(out)
}

pub fn cmd_eval(common: &Common, checkpoint: &Path, check: Option<CheckArg>) -> Result<MetricsReport, CliError> {
    let cfg = load_config(common)?;
    let out = out_dir(common, &cfg);
    let params = load_checkpoint(checkpoint)?;
    let data = load_data(&cfg)?;
    require_width(&params, data.test.features_per_example())?;
    let kinds: Vec<SufficiencyKind> = match check {
        Some(c) => vec![c.into()],
        None => SufficiencyKind::ALL.to_vec(),
    };
    let report = evaluate(&params, &data.test, &cfg.eval, &kinds, None)?;
    write_atomic(&out.join("metrics.json"), report.to_json().as_bytes())?;
    Ok(report)
}

pub fn cmd_explain(
    common: &Common,
    checkpoint: &Path,
    index: Option<usize>,
    instance: Option<&Path>,
) -> Result<Explanation, CliError> {
    let cfg = load_config(common)?;
    let out = out_dir(common, &cfg);
    let params = load_checkpoint(checkpoint)?;
    let x: Vec<f64> = match (index, instance) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            serde_json::from_str(&text).map_err(|e| {
                CliError::Config(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
            })?
        }
        (Some(i), None) => {
            let data = load_data(&cfg)?;
            if i >= data.test.len() {
                return Err(CliError::Usage(format!(
                    "index {i} out of range for {} test instances",
                    data.test.len()
                )));
            }
            data.test.x(i).to_vec()
        }
        (None, None) => return Err(CliError::Usage("explain needs --index or --instance".into())),
    };
    require_width(&params, x.len())?;
    let (scores, masks) = params.explain(&Tensor2D::row_vector(&x))?;
    let mask = &masks[0];
    let explanation = Explanation {
        schema: artifacts::EXPLAIN_SCHEMA,
        predicted_class: params.predict_one(&x)?,
        subset: mask.indices(),
        size_pct: mask.size_pct(),
        threshold: params.threshold(),
        scores: scores.row(0).to_vec(),
    };
    write_json(&out.join("explanation.json"), &explanation)?;
    if let Some((h, w)) = params.architecture().image_shape {
        write_atomic(&out.join("mask.pgm"), &mask_pgm(mask.as_slice(), h, w))?;
    }
    Ok(explanation)
}

pub fn cmd_sweep(common: &Common, axis: SweepAxis, values: &[f64]) -> Result<PathBuf, CliError> {
    let cfg = load_config(common)?;
    let out = out_dir(common, &cfg);
    let data = load_data(&cfg)?;
    let table = sweep(&data.train, &data.test, &cfg.train, &cfg.eval, axis, values)?;
    for cell in &table.cells {
        if let Err(msg) = &cell.result {
            eprintln!("sweep {}={} failed: {msg}", axis.name(), cell.value);
        }
    }
    let path = out.join("sweep.csv");
    write_atomic(&path, table.to_csv().as_bytes())?;
    Ok(path)
}

fn labelled(spec: &str) -> (String, PathBuf) {
    match spec.split_once('=') {
        Some((label, path)) => (label.to_string(), PathBuf::from(path)),
        None => {
            let path = PathBuf::from(spec);
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (label, path)
        }
    }
}

pub fn cmd_cross(common: &Common, checkpoints: &[String], checks: &[CheckArg]) -> Result<PathBuf, CliError> {
    let cfg = load_config(common)?;
    let out = out_dir(common, &cfg);
    let data = load_data(&cfg)?;
    let mut models = Vec::new();
    for spec in checkpoints {
        let (label, path) = labelled(spec);
        let params = load_checkpoint(&path)?;
        require_width(&params, data.test.features_per_example())?;
        models.push((label, params));
    }
    let kinds: Vec<SufficiencyKind> = if checks.is_empty() {
        SufficiencyKind::ALL.to_vec()
    } else {
        checks.iter().map(|&c| c.into()).collect()
    };
    let refs: Vec<(String, &ModelParams)> = models.iter().map(|(l, p)| (l.clone(), p)).collect();
    let matrix = eval_cross(&refs, &data.test, &kinds, &cfg.eval)?;
    let path = out.join("cross.csv");
    write_atomic(&path, matrix.to_csv().as_bytes())?;
    Ok(path)
}

pub fn cmd_oracle(
    common: &Common,
    checkpoint: &Path,
    check: CheckArg,
    k: Option<usize>,
    method: OracleMethod,
) -> Result<OracleReport, CliError> {
    let cfg = load_config(common)?;
    let out = out_dir(common, &cfg);
    let params = load_checkpoint(checkpoint)?;
    let data = load_data(&cfg)?;
    let n = data.test.features_per_example();
    require_width(&params, n)?;
    let kind: SufficiencyKind = check.into();
    let oracle_cfg = cfg.oracle.config(cfg.eval.check(kind), k);
    oracle_cfg.validate(n)?;
    let brute = matches!(method, OracleMethod::Brute | OracleMethod::Both);
    let greedy = matches!(method, OracleMethod::Greedy | OracleMethod::Both);
    if brute && n > oracle_cfg.max_n {
        return Err(sst_core::Error::Capacity {
            n,
            max: oracle_cfg.max_n,
        }
        .into());
    }

    let mut rng = RandomSource::new(cfg.eval.seed);
    let mut instances = Vec::new();
    for i in 0..cfg.oracle.instances.min(data.test.len()) {
        let x = data.test.x(i);
        let checker = SufficiencyChecker::new(&params, x, &oracle_cfg.check, &mut rng.fork())?;
        let mut record = OracleInstance {
            index: i,
            predicted_class: checker.target(),
            greedy: None,
            greedy_passes: None,
            oracle: None,
            oracle_found: None,
            oracle_passes: None,
        };
        if greedy {
            let g = greedy_with(&checker, &saliency(&params, x)?)?;
            record.greedy_passes = Some(checker.is_sufficient(&g)?);
            record.greedy = Some(g.indices());
        }
        if brute {
            let found = brute_force_with(&checker, k.unwrap_or(n))?;
            record.oracle_found = Some(found.is_some());
            if let Some(m) = found {
                record.oracle_passes = Some(checker.is_sufficient(&m)?);
                record.oracle = Some(m.indices());
            }
        }
        instances.push(record);
    }
    let report = OracleReport {
        schema: artifacts::ORACLE_SCHEMA,
        check: kind.name().to_string(),
        budget: k,
        instances,
    };
    write_json(&out.join("oracle.json"), &report)?;
    write_atomic(&out.join("oracle.csv"), report.summary_csv().as_bytes())?;
    Ok(report)
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Train { common } => {
            let out = cmd_train(common)?;
            println!("wrote {}", out.display());
        }
        Command::Eval {
            common,
            checkpoint,
            check,
        } => {
            let r = cmd_eval(common, checkpoint, *check)?;
            println!("accuracy {:.2}% size {:.2}%", r.accuracy_pct, r.mean_size_pct);
        }
        Command::Explain {
            common,
            checkpoint,
            index,
            instance,
        } => {
            let e = cmd_explain(common, checkpoint, *index, instance.as_deref())?;
            println!("class {} subset of {} features", e.predicted_class, e.subset.len());
        }
        Command::Sweep { common, axis, values } => {
            println!("wrote {}", cmd_sweep(common, *axis, values)?.display());
        }
        Command::Cross {
            common,
            checkpoint,
            check,
        } => {
            println!("wrote {}", cmd_cross(common, checkpoint, check)?.display());
        }
        Command::Oracle {
            common,
            checkpoint,
            check,
            k,
            method,
        } => {
            let r = cmd_oracle(common, checkpoint, *check, *k, *method)?;
            println!("explained {} instances", r.instances.len());
        }
    }
    Ok(())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
