//! Ready-made benchmark setups.

use rand_distr::{Distribution, StandardNormal};

use crate::classifier::label_all;
use crate::classifiers::{GroundTruthAiris, KernelSmoother, LinearClassifier};
use crate::data::{Annotations, Dataset};
use crate::datagen::{airis_hyperplanes_under, airis_standardizer, gen_airis_rows, gen_moons, Hyperplane};
use crate::error::Result;
use crate::rng::SeedStream;
use crate::scalar::Scalar;
use crate::standardize::Standardizer;

pub const AIRIS_TRAIN: usize = 4000;
pub const AIRIS_TEST: usize = 2000;
pub const MOONS_N: usize = 1000;
pub const MOONS_NOISE: f64 = 0.15;
pub const MOONS_TRAIN: usize = 600;
pub const MOONS_BANDWIDTH: f64 = 0.3;

/// Tabular AIris in range-standardized coordinates with the exact class rule.
pub struct AirisTab<F: Scalar> {
    pub train: Dataset<F>,
    pub test: Dataset<F>,
    pub train_annotations: Annotations,
    pub test_annotations: Annotations,
    pub standardizer: Standardizer<F>,
    pub classifier: GroundTruthAiris<F>,
    pub hyperplanes: Vec<Hyperplane<F>>,
}

/// Train rows `0..n_train` and test rows `n_train..n_train + n_test` of one
/// generator stream.
pub fn airis_tab<F: Scalar>(n_train: usize, n_test: usize, seed: u64) -> Result<AirisTab<F>> {
    let standardizer = airis_standardizer::<F>();
    let (train_raw, train_annotations) = gen_airis_rows::<F>(0, n_train, seed);
    let (test_raw, test_annotations) = gen_airis_rows::<F>(n_train, n_test, seed);
    let (h1, h2) = airis_hyperplanes_under(&standardizer);
    Ok(AirisTab {
        train: standardizer.apply_dataset(&train_raw)?,
        test: standardizer.apply_dataset(&test_raw)?,
        train_annotations,
        test_annotations,
        classifier: GroundTruthAiris::standardized(standardizer.clone()),
        standardizer,
        hyperplanes: vec![h1, h2],
    })
}

/// Two moons split into train and test, standardized on the training part,
/// with a kernel-smoother black box fitted on the standardized training data.
pub struct Moons<F: Scalar> {
    pub train: Dataset<F>,
    pub test: Dataset<F>,
    pub standardizer: Standardizer<F>,
    pub classifier: KernelSmoother<F>,
}

pub fn moons<F: Scalar>(seed: u64) -> Result<Moons<F>> {
    let all = gen_moons::<F>(MOONS_N, F::lit(MOONS_NOISE), seed)?;
    let (train_raw, test_raw) = all.split_at(MOONS_TRAIN);
    let standardizer = Standardizer::fit(&train_raw)?;
    let train = standardizer.apply_dataset(&train_raw)?;
    let test = standardizer.apply_dataset(&test_raw)?;
    let classifier = KernelSmoother::fit(&train, F::lit(MOONS_BANDWIDTH))?;
    Ok(Moons {
        train,
        test,
        standardizer,
        classifier,
    })
}

/// A random linear black box with Gaussian training data labelled by it.
pub struct LinearOracle<F: Scalar> {
    pub classifier: LinearClassifier<F>,
    pub train: Dataset<F>,
    pub x0: Vec<F>,
}

/// `w ~ N(0, I)`, `b ~ N(0, 1/4)`, `n` training points and `x0` from
/// `N(0, I)`. Redraws until both classes occur.
pub fn linear_oracle<F: Scalar>(d: usize, n: usize, seed: SeedStream) -> Result<LinearOracle<F>> {
    let mut rng = seed.rng();
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng| -> F { F::lit(StandardNormal.sample(rng)) };
    loop {
        let w: Vec<F> = (0..d).map(|_| gauss(&mut rng)).collect();
        let b = gauss(&mut rng) * F::lit(0.5);
        let classifier = LinearClassifier::new(w, b)?;
        let points: Vec<Vec<F>> = (0..n).map(|_| (0..d).map(|_| gauss(&mut rng)).collect()).collect();
        let x0: Vec<F> = (0..d).map(|_| gauss(&mut rng)).collect();
        let labels = label_all(&classifier, &points)?;
        let train = Dataset::new(points, labels, Dataset::<F>::default_names(d))?;
        if train.has_both_classes() {
            return Ok(LinearOracle { classifier, train, x0 });
        }
    }
}
