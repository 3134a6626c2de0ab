use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sst_core::data::{self, gen_synthetic, load_mnist_dir, split, Dataset, SyntheticRule, SyntheticSpec};
use sst_core::evaluation::EvalSettings;
use sst_core::oracle::OracleConfig;
use sst_core::training::TrainConfig;

use crate::error::CliError;

/// Environment variable naming the directory with the four MNIST IDX files.
pub const MNIST_ENV: &str = "SST_MNIST_DIR";

/// Where training and test examples come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataConfig {
    /// Official MNIST files. Without a directory, `SST_MNIST_DIR` is consulted;
    /// when neither points at the files a synthetic task is used instead.
    Mnist {
        #[serde(default)]
        dir: Option<PathBuf>,
        /// Use only the first examples of each split.
        #[serde(default)]
        train_limit: Option<usize>,
        #[serde(default)]
        test_limit: Option<usize>,
    },
    Synthetic {
        n: usize,
        support: Vec<usize>,
        #[serde(default)]
        rule: SyntheticRule,
        count: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_test_fraction")]
        test_fraction: f64,
    },
    /// Pre-generated `SSTD` dataset caches.
    Cached { train: PathBuf, test: PathBuf },
}

fn default_test_fraction() -> f64 {
    0.2
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig::Mnist {
            dir: None,
            train_limit: None,
            test_limit: None,
        }
    }
}

/// The synthetic task used when MNIST is requested but absent.
pub fn fallback_synthetic() -> DataConfig {
    DataConfig::Synthetic {
        n: 20,
        support: vec![0, 1, 2],
        rule: SyntheticRule::Threshold,
        count: 3000,
        seed: 0,
        test_fraction: default_test_fraction(),
    }
}

/// Locates MNIST: explicit directory, then the environment variable.
pub fn mnist_dir(explicit: Option<&Path>) -> Option<PathBuf> {
    let dir = match explicit {
        Some(d) => d.to_path_buf(),
        None => PathBuf::from(std::env::var_os(MNIST_ENV)?),
    };
    dir.join("train-images-idx3-ubyte").exists().then_some(dir)
}

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub train: Dataset,
    pub test: Dataset,
    /// Set when MNIST was requested but the synthetic fallback was used.
    pub fell_back: bool,
}

impl DataConfig {
    pub fn load(&self) -> Result<LoadedData, CliError> {
        match self {
            DataConfig::Mnist {
                dir,
                train_limit,
                test_limit,
            } => {
                let Some(dir) = mnist_dir(dir.as_deref()) else {
                    if dir.is_some() {
                        return Err(CliError::Config(format!(
                            "no MNIST files in {}",
                            dir.as_ref().expect("checked").display()
                        )));
                    }
                    let mut data = fallback_synthetic().load()?;
                    data.fell_back = true;
                    return Ok(data);
                };
                let m = load_mnist_dir(&dir)?;
                let limit = |ds: Dataset, l: &Option<usize>| match l {
                    Some(k) => ds.head(*k),
                    None => ds,
                };
                Ok(LoadedData {
                    train: limit(m.train, train_limit),
                    test: limit(m.test, test_limit),
                    fell_back: false,
                })
            }
            DataConfig::Synthetic {
                n,
                support,
                rule,
                count,
                seed,
                test_fraction,
            } => {
                let ds = gen_synthetic(&SyntheticSpec {
                    n: *n,
                    support: support.clone(),
                    rule: *rule,
                    count: *count,
                    seed: *seed,
                })?;
                let parts = split(&ds, (1.0 - test_fraction, 0.0, *test_fraction), *seed)?;
                Ok(LoadedData {
                    train: parts.train,
                    test: parts.test,
                    fell_back: false,
                })
            }
            DataConfig::Cached { train, test } => Ok(LoadedData {
                train: data::cache::read(train)?,
                test: data::cache::read(test)?,
                fell_back: false,
            }),
        }
    }
}

/// Settings for the `oracle` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default = "default_max_n")]
    pub max_n: usize,
    /// Number of leading test instances to explain.
    #[serde(default = "default_instances")]
    pub instances: usize,
}

fn default_max_n() -> usize {
    20
}

fn default_instances() -> usize {
    20
}

impl Default for OracleSection {
    fn default() -> Self {
        Self {
            max_n: default_max_n(),
            instances: default_instances(),
        }
    }
}

impl OracleSection {
    pub fn config(&self, check: sst_core::masking::MaskingStrategy, budget: Option<usize>) -> OracleConfig {
        OracleConfig {
            check,
            budget,
            max_n: self.max_n,
        }
    }
}

/// Everything one command needs, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub eval: EvalSettings,
    #[serde(default)]
    pub oracle: OracleSection,
    /// Also train a standard-mode twin and report the accuracy gain against it.
    #[serde(default)]
    pub compare_standard: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Parses JSON text; errors carry `origin:line:column`.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        })?;
        cfg.train
            .validate()
            .and_then(|_| cfg.eval.validate())
            .map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Overrides every seed in the document.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self.eval.seed = seed;
        self
    }
}
