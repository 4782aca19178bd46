//! LIME-style baselines: Gaussian perturbations around the training
//! distribution, an exponential proximity kernel and a weighted least squares
//! surrogate on the model's probabilities. No feature selection, no penalty.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::classifier::{label_all, map_indexed, probability_or_indicator, Classifier};
use crate::codec::{Codec, LatentClassifier};
use crate::dba_att::{attribute_vector, Annotator, AttributeExplanation, AttributeScaler};
use crate::error::{Error, Result};
use crate::evaluation::class_balance;
use crate::explanation::{Explanation, Method};
use crate::glm::{fit_wls, weighted_r2, LinearModel};
use crate::linalg;
use crate::scalar::Scalar;
use crate::standardize::Standardizer;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct LimeParams<F: Scalar> {
    pub m: usize,
    /// Kernel width; `0.75 sqrt(dim)` when absent.
    #[serde(default)]
    pub sigma: Option<F>,
}

impl<F: Scalar> Default for LimeParams<F> {
    fn default() -> Self {
        LimeParams { m: 500, sigma: None }
    }
}

impl<F: Scalar> LimeParams<F> {
    pub fn sigma_for(&self, dim: usize) -> Result<F> {
        let s = self.sigma.unwrap_or_else(|| default_sigma(dim));
        if !(s > F::zero()) || self.m == 0 {
            return Err(Error::InvalidArgument("LIME needs m >= 1 and sigma > 0".into()));
        }
        Ok(s)
    }
}

/// `0.75 sqrt(dim)`.
pub fn default_sigma<F: Scalar>(dim: usize) -> F {
    F::lit(0.75 * (dim as f64).sqrt())
}

/// `m` i.i.d. draws from `N(means, diag(sds^2))`.
pub fn lime_sample<F: Scalar, R: Rng + ?Sized>(means: &[F], sds: &[F], m: usize, rng: &mut R) -> Result<Vec<Vec<F>>> {
    if means.len() != sds.len() {
        return Err(Error::Dimension {
            expected: means.len(),
            found: sds.len(),
        });
    }
    if sds.iter().any(|s| !(*s > F::zero())) {
        return Err(Error::InvalidArgument("sampling standard deviations must be positive".into()));
    }
    Ok((0..m)
        .map(|_| {
            means
                .iter()
                .zip(sds)
                .map(|(&mu, &s)| {
                    let e: f64 = StandardNormal.sample(rng);
                    mu + s * F::lit(e)
                })
                .collect()
        })
        .collect())
}

/// `exp(-||x_i - x0||^2 / sigma^2)`.
pub fn lime_weights<F: Scalar>(samples: &[Vec<F>], x0: &[F], sigma: F) -> Vec<F> {
    let s2 = sigma * sigma;
    samples.iter().map(|x| (-linalg::distance_sq(x, x0) / s2).exp()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LimeOutcome<F: Scalar> {
    pub explanation: Explanation<F>,
    pub model: LinearModel<F>,
    pub sigma: F,
    #[serde(skip)]
    pub samples: Vec<Vec<F>>,
    #[serde(skip)]
    pub weights: Vec<F>,
}

fn targets<F: Scalar>(f: &dyn Classifier<F>, points: &[Vec<F>]) -> Result<Vec<F>> {
    map_indexed(points.len(), f.concurrency(), |i| probability_or_indicator(f, &points[i]))
        .into_iter()
        .collect()
}

fn wls_with_r2<F: Scalar>(x: &[Vec<F>], y: &[F], w: &[F], warnings: &mut Vec<String>) -> Result<(LinearModel<F>, F)> {
    let model = fit_wls(x, y, w)?;
    if model.ridge > F::zero() {
        warnings.push(format!("rank-deficient sample; ridge {} added", model.ridge));
    }
    let r2 = weighted_r2(&model, x, y, w)?;
    Ok((model, r2))
}

/// LIME on tabular features. `stats` holds the training means and sds used
/// for sampling.
pub fn lime_explain<F: Scalar, R: Rng + ?Sized>(
    stats: &Standardizer<F>,
    x0: &[F],
    f: &dyn Classifier<F>,
    params: &LimeParams<F>,
    rng: &mut R,
) -> Result<LimeOutcome<F>> {
    if x0.len() != stats.dim() {
        return Err(Error::Dimension {
            expected: stats.dim(),
            found: x0.len(),
        });
    }
    let sigma = params.sigma_for(x0.len())?;
    let samples = lime_sample(&stats.means, &stats.sds, params.m, rng)?;
    let weights = lime_weights(&samples, x0, sigma);
    let y = targets(f, &samples)?;
    let mut warnings = vec![];
    if f.probability(x0)?.is_none() {
        warnings.push("no class probabilities; regressing on hard labels".to_string());
    }
    let (model, r2) = wls_with_r2(&samples, &y, &weights, &mut warnings)?;
    let labels = label_all(f, &samples)?;
    let explanation = Explanation {
        method: Method::LimeTab,
        feature_names: stats.feature_names.clone(),
        coefficients: model.coefficients.clone(),
        intercept: model.intercept,
        boundary_point: None,
        bisected_point: None,
        chosen_r: None,
        sample_size: samples.len(),
        fidelity: None,
        r2: Some(r2),
        class_balance: class_balance(&labels),
        warnings,
    };
    Ok(LimeOutcome {
        explanation,
        model,
        sigma,
        samples,
        weights,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LimeAttOutcome<F: Scalar> {
    pub explanation: AttributeExplanation<F>,
    pub model: LinearModel<F>,
    pub sigma: F,
}

/// LIME in attribute space: Gaussian samples in latent space around the
/// latent training statistics, weighted by latent distance to `encode(x0)`,
/// regressed on `c(decode(z))` over standardized attribute probabilities.
pub fn lime_att_explain<F: Scalar, R: Rng + ?Sized>(
    latent_stats: &Standardizer<F>,
    x0: &[F],
    f: &dyn Classifier<F>,
    codec: &dyn Codec<F>,
    annotators: &[Annotator<F>],
    params: &LimeParams<F>,
    rng: &mut R,
) -> Result<LimeAttOutcome<F>> {
    if annotators.is_empty() {
        return Err(Error::InvalidArgument("at least one annotator is required".into()));
    }
    let z0 = codec.encode(x0)?;
    let sigma = params.sigma_for(z0.len())?;
    let samples = lime_sample(&latent_stats.means, &latent_stats.sds, params.m, rng)?;
    let weights = lime_weights(&samples, &z0, sigma);
    let g = LatentClassifier { codec, inner: f };
    let y = targets(&g, &samples)?;
    let names: Vec<String> = annotators.iter().map(|a| a.name.clone()).collect();
    let attrs: Vec<Vec<F>> = samples.iter().map(|z| attribute_vector(annotators, z)).collect();
    let scaler = AttributeScaler::fit(&attrs, &names)?;
    let x: Vec<Vec<F>> = attrs.iter().map(|a| scaler.apply(a)).collect();
    let mut warnings: Vec<String> = scaler
        .dropped
        .iter()
        .map(|n| format!("attribute '{n}' constant over the sample; dropped"))
        .collect();
    let (model, r2) = wls_with_r2(&x, &y, &weights, &mut warnings)?;
    let labels = label_all(&g, &samples)?;
    let explanation = Explanation {
        method: Method::LimeAtt,
        feature_names: scaler.names.clone(),
        coefficients: model.coefficients.clone(),
        intercept: model.intercept,
        boundary_point: None,
        bisected_point: None,
        chosen_r: None,
        sample_size: samples.len(),
        fidelity: None,
        r2: Some(r2),
        class_balance: class_balance(&labels),
        warnings,
    };
    Ok(LimeAttOutcome {
        explanation: AttributeExplanation::assemble(explanation, scaler, annotators, None),
        model,
        sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::LinearClassifier;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn default_sigmas() {
        assert!((default_sigma::<f64>(5) - 1.677).abs() < 1e-3);
        assert!((default_sigma::<f64>(100) - 7.5).abs() < 1e-12);
    }

    #[test]
    fn weights_formula() {
        let w = lime_weights(&[vec![1.0, 2.0], vec![1.0 + 0.6, 2.0 + 0.8]], &[1.0, 2.0], 1.0);
        assert_eq!(w[0], 1.0);
        assert!((w[1] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sampling_is_seeded_and_centered() {
        let means = [1.0, -2.0, 0.5];
        let sds = [0.5, 2.0, 1e-12];
        let a = lime_sample(&means, &sds, 10_000, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = lime_sample(&means, &sds, 10_000, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        for j in 0..3 {
            let mean: f64 = a.iter().map(|x| x[j]).sum::<f64>() / 1e4;
            assert!((mean - means[j]).abs() <= 4.0 * sds[j] / 100.0);
        }
        assert!(a.iter().all(|x| (x[2] - 0.5).abs() < 1e-9));
        assert!(lime_sample(&means, &[1.0, 0.0, 1.0], 3, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    struct Clipped(Vec<f64>);

    impl Classifier<f64> for Clipped {
        fn label(&self, x: &[f64]) -> Result<crate::data::Label> {
            Ok(crate::classifier::label_from_probability(self.probability(x)?.unwrap()))
        }
        fn probability(&self, x: &[f64]) -> Result<Option<f64>> {
            Ok(Some((0.5 + linalg::dot(&self.0, x)).clamp(0.0, 1.0)))
        }
        fn describe(&self) -> String {
            "clipped linear".into()
        }
    }

    #[test]
    fn linear_probability_surface_is_recovered() {
        let f = Clipped(vec![0.01, -0.02, 0.015]);
        let stats = Standardizer::from_parts(
            crate::data::Dataset::<f64>::default_names(3),
            vec![0.0; 3],
            vec![1.0; 3],
        )
        .unwrap();
        let out = lime_explain(&stats, &[0.1, 0.2, -0.1], &f, &LimeParams::default(), &mut ChaCha8Rng::seed_from_u64(2))
            .unwrap();
        assert!(out.explanation.r2.unwrap() > 1.0 - 1e-9);
        assert!(linalg::cosine(&out.explanation.coefficients, &f.0).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn constant_target_has_no_r2() {
        let f = LinearClassifier::new(vec![1.0, 0.0], 100.0).unwrap();
        let stats = Standardizer::from_parts(vec!["a".into(), "b".into()], vec![0.0; 2], vec![1.0; 2]).unwrap();
        let f = crate::classifier::FnClassifier::new("const", move |x: &[f64]| {
            let _ = f.margin(x);
            crate::data::Label::Positive
        });
        let err = lime_explain(&stats, &[0.0, 0.0], &f, &LimeParams::default(), &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(err, Err(Error::UndefinedR2)));
    }
}
