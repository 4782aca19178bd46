//! Turns a resolved [`RunConfig`] into data, a black box and a codec.

use anyhow::{bail, Context};
use dba_core::classifier::Concurrency;
use dba_core::classifiers::{GroundTruthAiris, KernelSmoother, KnnClassifier, ScoredTable};
use dba_core::codec::{AffineCodec, Codec, IdentityCodec};
use dba_core::data::{load_dataset_with, CsvOptions};
use dba_core::datagen::{airis_hyperplanes_under, airis_standardizer, gen_airis_rows, gen_moons, Hyperplane};
use dba_core::dba_att::{train_annotators, Annotator};
use dba_core::evaluation::{AttributeSetup, EvalSetup};
use dba_core::subprocess::{SubprocessClassifier, SubprocessCodec};
use dba_core::{Annotations, Classifier, Dataset, Label, Standardizer};

use crate::config::{default_bandwidth, ClassifierSpec, CodecSpec, DatasetSpec, RunConfig};

/// Everything a command needs, in explanation-space coordinates.
pub struct World {
    pub train: Dataset<f64>,
    pub test: Dataset<f64>,
    pub train_annotations: Option<Annotations>,
    /// Maps raw features to explanation space (identity with `raw_features`).
    pub standardizer: Standardizer<f64>,
    pub classifier: Box<dyn Classifier<f64>>,
    pub hyperplanes: Option<Vec<Hyperplane<f64>>>,
    pub codec: Box<dyn Codec<f64>>,
}

/// A raw-space black box queried with explanation-space points.
struct OnRawScale {
    inner: Box<dyn Classifier<f64>>,
    standardizer: Standardizer<f64>,
}

impl Classifier<f64> for OnRawScale {
    fn label(&self, x: &[f64]) -> dba_core::Result<Label> {
        self.inner.label(&self.standardizer.invert(x)?)
    }
    fn probability(&self, x: &[f64]) -> dba_core::Result<Option<f64>> {
        self.inner.probability(&self.standardizer.invert(x)?)
    }
    fn probability_consistent(&self) -> bool {
        self.inner.probability_consistent()
    }
    fn concurrency(&self) -> Concurrency {
        self.inner.concurrency()
    }
    fn describe(&self) -> String {
        format!("{} (on raw features)", self.inner.describe())
    }
}

fn identity_standardizer(names: Vec<String>) -> Standardizer<f64> {
    let d = names.len();
    Standardizer::from_parts(names, vec![0.0; d], vec![1.0; d]).expect("unit standardizer")
}

impl World {
    pub fn build(cfg: &RunConfig) -> anyhow::Result<World> {
        let (train_raw, test_raw, train_annotations, standardizer) = match &cfg.dataset {
            DatasetSpec::Airis { n_train, n_test } => {
                let (train, ann) = gen_airis_rows::<f64>(0, *n_train, cfg.seed);
                let (test, _) = gen_airis_rows::<f64>(*n_train, *n_test, cfg.seed);
                (train, test, Some(ann), airis_standardizer())
            }
            DatasetSpec::Moons { n, noise, n_train } => {
                if n_train >= n {
                    bail!("moons needs n_train < n");
                }
                let all = gen_moons::<f64>(*n, *noise, cfg.seed)?;
                let (train, test) = all.split_at(*n_train);
                let s = Standardizer::fit(&train)?;
                (train, test, None, s)
            }
            DatasetSpec::Csv {
                train,
                test,
                label_column,
                attribute_prefix,
            } => {
                let mut opts = CsvOptions::new(label_column.clone());
                if let Some(p) = attribute_prefix {
                    opts = opts.with_attribute_prefix(p.clone());
                }
                let (tr, ann) = load_dataset_with::<f64>(train, &opts).with_context(|| format!("loading {}", train.display()))?;
                let (te, _) = load_dataset_with::<f64>(test, &opts).with_context(|| format!("loading {}", test.display()))?;
                if te.dim() != tr.dim() {
                    bail!("train and test have different feature counts");
                }
                let s = Standardizer::fit(&tr)?;
                (tr, te, ann, s)
            }
        };
        let standardizer = if cfg.raw_features {
            identity_standardizer(train_raw.feature_names.clone())
        } else {
            standardizer
        };
        let train = standardizer.apply_dataset(&train_raw)?;
        let test = standardizer.apply_dataset(&test_raw)?;
        let is_airis = matches!(cfg.dataset, DatasetSpec::Airis { .. });
        let classifier: Box<dyn Classifier<f64>> = match (&cfg.classifier, is_airis) {
            (ClassifierSpec::Auto | ClassifierSpec::GroundTruth, true) => {
                Box::new(GroundTruthAiris::standardized(standardizer.clone()))
            }
            (ClassifierSpec::GroundTruth, false) => bail!("the ground-truth classifier exists only for AIris"),
            (ClassifierSpec::Auto, false) => Box::new(KernelSmoother::fit(&train, default_bandwidth())?),
            (ClassifierSpec::KernelSmoother { bandwidth }, _) => Box::new(KernelSmoother::fit(&train, *bandwidth)?),
            (ClassifierSpec::Knn { k }, _) => Box::new(KnnClassifier::fit(&train, *k)?),
            (ClassifierSpec::ScoredTable { path, probability_column }, _) => Box::new(OnRawScale {
                inner: Box::new(ScoredTable::load(path, probability_column)?),
                standardizer: standardizer.clone(),
            }),
            (ClassifierSpec::Subprocess { program, args }, _) => Box::new(OnRawScale {
                inner: Box::new(SubprocessClassifier::spawn(program, args)?),
                standardizer: standardizer.clone(),
            }),
        };
        let hyperplanes = is_airis.then(|| {
            let (h1, h2) = airis_hyperplanes_under(&standardizer);
            vec![h1, h2]
        });
        let codec: Box<dyn Codec<f64>> = match &cfg.codec {
            CodecSpec::Identity => Box::new(IdentityCodec::new(train.dim())),
            CodecSpec::Affine { latent_dim } => Box::new(AffineCodec::fit(&train.points, *latent_dim)?),
            CodecSpec::Subprocess {
                program,
                args,
                latent_dim,
            } => Box::new(SubprocessCodec::spawn(program, args, train.dim(), *latent_dim)?),
        };
        Ok(World {
            train,
            test,
            train_annotations,
            standardizer,
            classifier,
            hyperplanes,
            codec,
        })
    }

    /// Annotators trained on the encoded training points.
    pub fn annotators(&self, lambda: f64) -> anyhow::Result<Vec<Annotator<f64>>> {
        let Some(ann) = &self.train_annotations else {
            bail!("attribute-based methods need attribute annotations (AIris, or a CSV with attribute_prefix)");
        };
        let z = self
            .train
            .points
            .iter()
            .map(|x| self.codec.encode(x))
            .collect::<dba_core::Result<Vec<_>>>()?;
        Ok(train_annotators(&z, ann, lambda, self.codec.concurrency())?)
    }

    pub fn eval_setup(&self, cfg: &RunConfig) -> anyhow::Result<EvalSetup<'_, f64>> {
        let attributes = if cfg.methods.iter().any(|m| m.is_attribute_based()) {
            Some(AttributeSetup {
                codec: self.codec.as_ref(),
                annotators: self.annotators(cfg.annotator_lambda)?,
            })
        } else {
            None
        };
        Ok(EvalSetup {
            classifier: self.classifier.as_ref(),
            train: &self.train,
            hyperplanes: self.hyperplanes.clone(),
            attributes,
        })
    }

    /// The configured test rows: explicit indices, or a seeded draw.
    pub fn points(&self, cfg: &RunConfig) -> anyhow::Result<Vec<usize>> {
        match &cfg.point_indices {
            Some(idx) => {
                if let Some(p) = idx.iter().find(|&&p| p >= self.test.n()) {
                    bail!("point index {p} out of range (test set has {} rows)", self.test.n());
                }
                Ok(idx.clone())
            }
            None => Ok(dba_core::evaluation::select_points(self.test.n(), cfg.points, cfg.seed)),
        }
    }
}
