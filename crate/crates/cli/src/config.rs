//! Run configuration: file format, defaults and flag overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use dba_core::baselines::LimeParams;
use dba_core::dba_att::DEFAULT_ANNOTATOR_LAMBDA;
use dba_core::dba_tab::{default_r_grid, moons_r_grid};
use dba_core::evaluation::{EvalConfig, GammaPolicy};
use dba_core::experiments::{AIRIS_TEST, AIRIS_TRAIN, MOONS_BANDWIDTH, MOONS_N, MOONS_NOISE, MOONS_TRAIN};
use dba_core::{DbaParams, Method};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const OUTPUT_DIR_ENV: &str = "DBA_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "dba-output";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatasetSpec {
    /// Synthetic AIris, rows `0..n_train` for training and the next `n_test`
    /// for testing.
    Airis { n_train: usize, n_test: usize },
    Moons { n: usize, noise: f64, n_train: usize },
    /// CSV files with numeric features and a label column. Columns starting
    /// with `attribute_prefix` are read as binary annotations.
    Csv {
        train: PathBuf,
        test: PathBuf,
        #[serde(default = "default_label_column")]
        label_column: String,
        #[serde(default)]
        attribute_prefix: Option<String>,
    },
}

fn default_label_column() -> String {
    "label".into()
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec::Airis {
            n_train: AIRIS_TRAIN,
            n_test: AIRIS_TEST,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ClassifierSpec {
    /// Exact class rule on AIris, a kernel smoother otherwise.
    #[default]
    Auto,
    GroundTruth,
    KernelSmoother { bandwidth: f64 },
    Knn { k: usize },
    /// Nearest-neighbour lookup in a CSV of raw-space points and scores.
    ScoredTable { path: PathBuf, probability_column: String },
    /// External scorer speaking JSON lines on stdin/stdout, in raw space.
    Subprocess {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CodecSpec {
    #[default]
    Identity,
    /// Principal-component whitening fitted on the training features.
    Affine { latent_dim: usize },
    /// External encoder/decoder operating on explanation-space features.
    Subprocess {
        program: String,
        #[serde(default)]
        args: Vec<String>,
        latent_dim: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub dataset: DatasetSpec,
    pub classifier: ClassifierSpec,
    pub codec: CodecSpec,
    pub annotator_lambda: f64,
    /// Explain in raw feature units instead of standardized ones.
    pub raw_features: bool,
    pub methods: Vec<Method>,
    pub dba: DbaParams<f64>,
    pub lime: LimeParams<f64>,
    pub gamma: GammaPolicy<f64>,
    pub seed: u64,
    /// Number of test points drawn when `point_indices` is absent.
    pub points: usize,
    pub point_indices: Option<Vec<usize>>,
    pub label_stable_only: bool,
    pub curve_step: f64,
    pub curve_max_distance: f64,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            dataset: DatasetSpec::default(),
            classifier: ClassifierSpec::default(),
            codec: CodecSpec::default(),
            annotator_lambda: DEFAULT_ANNOTATOR_LAMBDA,
            raw_features: false,
            methods: vec![Method::DbaTab, Method::LimeTab],
            dba: DbaParams::default(),
            lime: LimeParams::default(),
            gamma: GammaPolicy::default(),
            seed: 0,
            points: 50,
            point_indices: None,
            label_stable_only: false,
            curve_step: 0.05,
            curve_max_distance: 3.0,
            output_dir: None,
            jobs: None,
        }
    }
}

pub fn moons_spec() -> DatasetSpec {
    DatasetSpec::Moons {
        n: MOONS_N,
        noise: MOONS_NOISE,
        n_train: MOONS_TRAIN,
    }
}

pub fn default_bandwidth() -> f64 {
    MOONS_BANDWIDTH
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub dataset: Option<DatasetSpec>,
    pub classifier: Option<ClassifierSpec>,
    pub codec: Option<CodecSpec>,
    pub methods: Option<Vec<Method>>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
    pub point_indices: Option<Vec<usize>>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub r_grid: Option<Vec<f64>>,
    pub lime_m: Option<usize>,
    pub lime_sigma: Option<f64>,
    pub annotator_lambda: Option<f64>,
    pub raw_features: bool,
    pub label_stable_only: bool,
    pub curve_step: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
        match value.get("schema_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(CONFIG_SCHEMA_VERSION) => {}
            Some(v) => bail!("unsupported config schema_version {v} (expected {CONFIG_SCHEMA_VERSION})"),
            None => bail!("config must declare schema_version = {CONFIG_SCHEMA_VERSION}"),
        }
        serde_json::from_value(value).context("config does not match the run-config schema")
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    /// Defaults, then the file, then the flags.
    pub fn resolve(file: Option<&Path>, o: Overrides) -> anyhow::Result<Self> {
        let mut c = match file {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! set {
            ($($field:ident).+ <- $value:expr) => {
                if let Some(v) = $value {
                    c.$($field).+ = v;
                }
            };
        }
        set!(dataset <- o.dataset);
        set!(classifier <- o.classifier);
        set!(codec <- o.codec);
        set!(methods <- o.methods);
        set!(seed <- o.seed);
        set!(points <- o.points);
        set!(dba.k <- o.k);
        set!(dba.m <- o.m);
        set!(dba.r_grid <- o.r_grid);
        set!(lime.m <- o.lime_m);
        set!(annotator_lambda <- o.annotator_lambda);
        set!(curve_step <- o.curve_step);
        if o.point_indices.is_some() {
            c.point_indices = o.point_indices;
        }
        if o.lime_sigma.is_some() {
            c.lime.sigma = o.lime_sigma;
        }
        if o.output_dir.is_some() {
            c.output_dir = o.output_dir;
        }
        if o.jobs.is_some() {
            c.jobs = o.jobs;
        }
        c.raw_features |= o.raw_features;
        c.label_stable_only |= o.label_stable_only;
        if matches!(c.dataset, DatasetSpec::Moons { .. }) && c.dba.r_grid == default_r_grid::<f64>() {
            c.dba.r_grid = moons_r_grid();
        }
        if c.output_dir.is_none() {
            c.output_dir = Some(
                std::env::var_os(OUTPUT_DIR_ENV)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)),
            );
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.methods.is_empty() {
            bail!("at least one method is required");
        }
        if self.points == 0 && self.point_indices.as_ref().is_none_or(Vec::is_empty) {
            bail!("no test points requested");
        }
        if !(self.curve_step > 0.0 && self.curve_max_distance > 0.0) {
            bail!("curve step and range must be positive");
        }
        if !(self.annotator_lambda >= 0.0) {
            bail!("annotator lambda must be non-negative");
        }
        if self.jobs == Some(0) {
            bail!("--jobs must be at least 1");
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn eval_config(&self) -> EvalConfig<f64> {
        EvalConfig {
            methods: self.methods.clone(),
            dba: self.dba.clone(),
            lime: self.lime.clone(),
            gamma: self.gamma.clone(),
            seed: self.seed,
            label_stable_only: self.label_stable_only,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"schema_version": 1, "seed": 3, "points": 9, "dba": {"k": 10}}"#).unwrap();
        let o = Overrides {
            seed: Some(11),
            ..Default::default()
        };
        let c = RunConfig::resolve(Some(&path), o).unwrap();
        assert_eq!(c.seed, 11);
        assert_eq!(c.points, 9);
        assert_eq!(c.dba.k, 10);
        assert_eq!(c.dba.m, 500);
    }

    #[test]
    fn unknown_keys_and_versions_are_rejected() {
        assert!(RunConfig::from_json(r#"{"schema_version": 1, "sead": 3}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version": 1, "dba": {"kk": 3}}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version": 2}"#).is_err());
        assert!(RunConfig::from_json(r#"{"seed": 2}"#).is_err());
        assert!(RunConfig::from_json(r#"{"schema_version": 1, "methods": ["dba-tabb"]}"#).is_err());
    }

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn moons_uses_its_own_grid_unless_overridden() {
        let o = Overrides {
            dataset: Some(moons_spec()),
            ..Default::default()
        };
        assert_eq!(RunConfig::resolve(None, o.clone()).unwrap().dba.r_grid, moons_r_grid::<f64>());
        let o = Overrides {
            r_grid: Some(vec![0.5, 1.0]),
            ..o
        };
        assert_eq!(RunConfig::resolve(None, o).unwrap().dba.r_grid, vec![0.5, 1.0]);
    }
}
