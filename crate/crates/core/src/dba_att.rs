//! Decision boundary approximation in terms of user-specified attributes.
//!
//! Detection and simulation run in the latent space of a [`Codec`], labelled
//! through `z -> f(decode(z))`. The simplex vertices are `z_b +- alpha theta_j`
//! where `theta_j` is the coefficient vector of annotator `j`. Each sampled
//! `z` is mapped to its attribute probabilities `a_j(z)`, the attributes are
//! standardized over the sample and a logistic surrogate is fitted on them.
//! The latent direction `u = sum_j beta_j theta_j` closes the loop for tuning
//! `r` and for boundary-distance probes.

use serde::{Deserialize, Serialize};

use crate::classifier::{map_indexed, Classifier, Concurrency};
use crate::classifiers::sigmoid;
use crate::codec::{Codec, LatentClassifier};
use crate::data::{Annotations, Label};
use crate::dba_tab::{
    boundary_distance_along, detect, simulate, tune_grid, BoundaryDetection, DbaParams, RTrial, ReferenceSet,
    SimulationSample, TrialOutcome, TrialStatus,
};
use crate::error::{Error, Result};
use crate::evaluation::{class_balance, surrogate_accuracy};
use crate::explanation::{Explanation, Method};
use crate::glm::{fit_logistic, fit_logistic_with, LinearModel, LogisticOptions};
use crate::linalg;
use crate::rng::SeedStream;
use crate::scalar::Scalar;

pub const DEFAULT_ANNOTATOR_LAMBDA: f64 = 0.1;

/// `a(z) = sigmoid(theta'z + theta_0)`: probability that an attribute holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Annotator<F: Scalar> {
    pub name: String,
    pub theta: Vec<F>,
    pub theta0: F,
}

impl<F: Scalar> Annotator<F> {
    pub fn probability(&self, z: &[F]) -> F {
        sigmoid(linalg::dot(&self.theta, z) + self.theta0)
    }
}

/// L2-penalized logistic fit of one attribute on latent points.
pub fn train_annotator<F: Scalar>(name: &str, z: &[Vec<F>], labels: &[Label], lambda: F) -> Result<Annotator<F>> {
    if !(lambda > F::zero()) {
        return Err(Error::InvalidArgument("annotator lambda must be positive".into()));
    }
    let model = fit_logistic(z, labels, lambda, None).map_err(|e| match e {
        Error::SingleClass(_) => Error::SingleClass(format!("attribute '{name}'")),
        other => other,
    })?;
    if model.coefficients.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite(format!("annotator '{name}' coefficients")));
    }
    Ok(Annotator {
        name: name.to_string(),
        theta: model.coefficients,
        theta0: model.intercept,
    })
}

/// One annotator per annotation column, trained independently.
pub fn train_annotators<F: Scalar>(
    z: &[Vec<F>],
    annotations: &Annotations,
    lambda: F,
    mode: Concurrency,
) -> Result<Vec<Annotator<F>>> {
    if annotations.n_rows() != z.len() {
        return Err(Error::Dimension {
            expected: z.len(),
            found: annotations.n_rows(),
        });
    }
    map_indexed(annotations.names.len(), mode, |j| {
        train_annotator(&annotations.names[j], z, &annotations.columns[j], lambda)
    })
    .into_iter()
    .collect()
}

/// `theta_j = scale * e_j`, `theta_0 = 0`: annotators that read one latent
/// coordinate each.
pub fn coordinate_annotators<F: Scalar>(names: &[String], scale: F) -> Vec<Annotator<F>> {
    let d = names.len();
    names
        .iter()
        .enumerate()
        .map(|(j, name)| Annotator {
            name: name.clone(),
            theta: (0..d).map(|i| if i == j { scale } else { F::zero() }).collect(),
            theta0: F::zero(),
        })
        .collect()
}

pub fn attribute_vector<F: Scalar>(annotators: &[Annotator<F>], z: &[F]) -> Vec<F> {
    annotators.iter().map(|a| a.probability(z)).collect()
}

/// Per-attribute standardization over a sample. Attributes with zero spread
/// are dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AttributeScaler<F: Scalar> {
    /// Indices into the annotator list of the attributes kept.
    pub retained: Vec<usize>,
    pub names: Vec<String>,
    pub means: Vec<F>,
    pub sds: Vec<F>,
    pub dropped: Vec<String>,
}

impl<F: Scalar> AttributeScaler<F> {
    pub fn fit(attributes: &[Vec<F>], names: &[String]) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::InvalidArgument("empty attribute sample".into()));
        }
        let n = F::from_usize_lossy(attributes.len());
        let mut scaler = AttributeScaler {
            retained: vec![],
            names: vec![],
            means: vec![],
            sds: vec![],
            dropped: vec![],
        };
        for (j, name) in names.iter().enumerate() {
            let mean = attributes.iter().map(|a| a[j]).sum::<F>() / n;
            let var = attributes.iter().map(|a| (a[j] - mean).powi(2)).sum::<F>() / n;
            let sd = var.sqrt();
            if sd > F::zero() && sd.is_finite() {
                scaler.retained.push(j);
                scaler.names.push(name.clone());
                scaler.means.push(mean);
                scaler.sds.push(sd);
            } else {
                log::debug!("attribute '{name}' is constant over the sample; dropped");
                scaler.dropped.push(name.clone());
            }
        }
        if scaler.retained.is_empty() {
            return Err(Error::DegenerateAttributes(scaler.dropped));
        }
        Ok(scaler)
    }

    pub fn apply(&self, a: &[F]) -> Vec<F> {
        self.retained
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(&j, (&m, &s))| (a[j] - m) / s)
            .collect()
    }
}

/// `sum_j beta_j theta_j` over the given annotators.
pub fn latent_direction<F: Scalar>(beta: &[F], thetas: &[&[F]]) -> Vec<F> {
    let l = thetas.first().map_or(0, |t| t.len());
    let mut u = vec![F::zero(); l];
    for (&b, t) in beta.iter().zip(thetas) {
        for (ui, &ti) in u.iter_mut().zip(t.iter()) {
            *ui = *ui + b * ti;
        }
    }
    u
}

/// Which coefficient scale multiplies the annotator vectors in `u`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionScale {
    /// The reported coefficients on standardized attributes.
    Standardized,
    /// Coefficients divided by the attribute's sample sd.
    RawAttribute,
}

/// An attribute-space surrogate and the latent direction it implies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AttributeExplanation<F: Scalar> {
    /// Coefficients over the retained, standardized attributes.
    pub explanation: Explanation<F>,
    pub scaler: AttributeScaler<F>,
    pub latent_boundary_point: Option<Vec<F>>,
    /// Direction used for tuning and distance probes.
    pub latent_direction: Vec<F>,
    pub direction_scale: DirectionScale,
    /// `sum_j (beta_j / sd_j) theta_j`.
    pub latent_direction_raw_scale: Vec<F>,
    /// Latent distance from `z0` to the boundary along `latent_direction`.
    pub boundary_distance: Option<F>,
}

impl<F: Scalar> AttributeExplanation<F> {
    pub(crate) fn assemble(
        explanation: Explanation<F>,
        scaler: AttributeScaler<F>,
        annotators: &[Annotator<F>],
        latent_boundary_point: Option<Vec<F>>,
    ) -> Self {
        let thetas: Vec<&[F]> = scaler.retained.iter().map(|&j| annotators[j].theta.as_slice()).collect();
        let latent = latent_direction(&explanation.coefficients, &thetas);
        let raw: Vec<F> = explanation
            .coefficients
            .iter()
            .zip(&scaler.sds)
            .map(|(&b, &s)| b / s)
            .collect();
        AttributeExplanation {
            latent_direction_raw_scale: latent_direction(&raw, &thetas),
            latent_direction: latent,
            direction_scale: DirectionScale::Standardized,
            explanation,
            scaler,
            latent_boundary_point,
            boundary_distance: None,
        }
    }
}

/// Encodes reference points and labels them by `f(decode(z))`.
pub fn latent_reference_set<F: Scalar>(
    codec: &dyn Codec<F>,
    f: &dyn Classifier<F>,
    points: &[Vec<F>],
) -> Result<ReferenceSet<F>> {
    let mode = codec.concurrency();
    let z: Vec<Vec<F>> = map_indexed(points.len(), mode, |i| codec.encode(&points[i]))
        .into_iter()
        .collect::<Result<_>>()?;
    let g = LatentClassifier { codec, inner: f };
    let names = (1..=codec.latent_dim()).map(|k| format!("z{k}")).collect();
    ReferenceSet::from_points(z, names, &g)
}

/// Share of points whose label survives `decode(encode(x))`.
pub fn label_stability<F: Scalar>(codec: &dyn Codec<F>, f: &dyn Classifier<F>, points: &[Vec<F>]) -> Result<F> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points to assess".into()));
    }
    let mode = codec.concurrency().and(f.concurrency());
    let stable = map_indexed(points.len(), mode, |i| -> Result<bool> {
        Ok(f.label(&codec.round_trip(&points[i])?)? == f.label(&points[i])?)
    })
    .into_iter()
    .collect::<Result<Vec<bool>>>()?;
    Ok(F::from_usize_lossy(stable.iter().filter(|s| **s).count()) / F::from_usize_lossy(points.len()))
}

/// Mean absolute change of `c` under `decode(encode(x))`.
pub fn probability_stability<F: Scalar>(
    codec: &dyn Codec<F>,
    f: &dyn Classifier<F>,
    points: &[Vec<F>],
) -> Result<F> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("no points to assess".into()));
    }
    let mode = codec.concurrency().and(f.concurrency());
    let diffs = map_indexed(points.len(), mode, |i| -> Result<F> {
        let before = f.probability(&points[i])?;
        let after = f.probability(&codec.round_trip(&points[i])?)?;
        match (before, after) {
            (Some(b), Some(a)) => Ok((b - a).abs()),
            _ => Err(Error::Precondition(format!(
                "probability stability needs class probabilities; {} has none",
                f.describe()
            ))),
        }
    })
    .into_iter()
    .collect::<Result<Vec<F>>>()?;
    Ok(diffs.into_iter().sum::<F>() / F::from_usize_lossy(points.len()))
}

/// Refuses points whose label changes under a codec round trip.
pub fn check_label_stable<F: Scalar>(codec: &dyn Codec<F>, f: &dyn Classifier<F>, x0: &[F]) -> Result<Label> {
    let before = f.label(x0)?;
    let after = f.label(&codec.round_trip(x0)?)?;
    if before != after {
        return Err(Error::LabelUnstable { before, after });
    }
    Ok(before)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AttOutcome<F: Scalar> {
    pub explanation: AttributeExplanation<F>,
    /// Detection in latent space.
    pub detection: BoundaryDetection<F>,
    pub model: LinearModel<F>,
    pub trials: Vec<RTrial<F>>,
    #[serde(skip)]
    pub sample: Option<SimulationSample<F>>,
}

/// DBA in attribute space. `refs` must come from [`latent_reference_set`]
/// with the same codec.
pub fn explain_att<F: Scalar>(
    refs: &ReferenceSet<F>,
    x0: &[F],
    f: &dyn Classifier<F>,
    codec: &dyn Codec<F>,
    annotators: &[Annotator<F>],
    params: &DbaParams<F>,
    seed: SeedStream,
) -> Result<AttOutcome<F>> {
    if annotators.is_empty() {
        return Err(Error::InvalidArgument("at least one annotator is required".into()));
    }
    if let Some(a) = annotators.iter().find(|a| a.theta.len() != codec.latent_dim()) {
        return Err(Error::Dimension {
            expected: codec.latent_dim(),
            found: a.theta.len(),
        });
    }
    params.validate(annotators.len())?;
    check_label_stable(codec, f, x0)?;
    let g = LatentClassifier { codec, inner: f };
    let z0 = codec.encode(x0)?;
    let detection = detect(refs, &z0, &g, params)?;
    let basis: Vec<Vec<F>> = annotators.iter().map(|a| a.theta.clone()).collect();
    let names: Vec<String> = annotators.iter().map(|a| a.name.clone()).collect();
    let gamma = detection.distance + params.gamma_offset;
    let stream = seed.child("simulation");
    let (best, trials, (sample, model, expl, distance)) = tune_grid(&params.r_grid, g.concurrency(), |i, r| {
        let mut rng = stream.index(i as u64).rng();
        let sample = simulate(&g, &detection.boundary_point, &z0, r, params.m, &basis, &mut rng)?;
        let balance = class_balance(&sample.labels);
        let attrs: Vec<Vec<F>> = sample.points.iter().map(|z| attribute_vector(annotators, z)).collect();
        let scaler = match AttributeScaler::fit(&attrs, &names) {
            Ok(s) => s,
            Err(e) => return Ok(TrialOutcome::Skipped(TrialStatus::FitFailed(e.to_string()), Some(balance))),
        };
        let x: Vec<Vec<F>> = attrs.iter().map(|a| scaler.apply(a)).collect();
        let model = match fit_logistic_with(&x, &sample.labels, None, &LogisticOptions::default()) {
            Ok(m) => m,
            Err(Error::SingleClass(_)) => {
                return Ok(TrialOutcome::Skipped(TrialStatus::SingleClass, Some(balance)));
            }
            Err(e) => return Ok(TrialOutcome::Skipped(TrialStatus::FitFailed(e.to_string()), Some(balance))),
        };
        let explanation = Explanation {
            method: Method::DbaAtt,
            feature_names: scaler.names.clone(),
            coefficients: model.coefficients.clone(),
            intercept: model.intercept,
            boundary_point: None,
            bisected_point: None,
            chosen_r: Some(r),
            sample_size: sample.points.len(),
            fidelity: Some(surrogate_accuracy(&model, &x, &sample.labels)),
            r2: None,
            class_balance: balance,
            warnings: scaler
                .dropped
                .iter()
                .map(|n| format!("attribute '{n}' constant over the sample; dropped"))
                .collect(),
        };
        let expl = AttributeExplanation::assemble(explanation, scaler, annotators, None);
        if expl.latent_direction.iter().all(|u| *u == F::zero()) {
            return Ok(TrialOutcome::Skipped(TrialStatus::ZeroDirection, Some(balance)));
        }
        let crossing = boundary_distance_along(
            &g,
            &z0,
            &expl.latent_direction,
            gamma,
            params.bisection_tol,
            params.bisection_max_iter,
        )?;
        Ok(TrialOutcome::Done {
            crossing,
            balance,
            payload: (sample, model, expl, crossing.distance()),
        })
    })?;
    let mut expl = expl;
    expl.boundary_distance = distance;
    expl.latent_boundary_point = Some(detection.boundary_point.clone());
    expl.explanation.chosen_r = Some(params.r_grid[best]);
    let mut warnings = detection.warnings.clone();
    warnings.append(&mut expl.explanation.warnings);
    expl.explanation.warnings = warnings;
    Ok(AttOutcome {
        explanation: expl,
        detection,
        model,
        trials,
        sample: Some(sample),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::FnClassifier;
    use crate::codec::IdentityCodec;

    struct Constant(Vec<f64>);

    impl Codec<f64> for Constant {
        fn name(&self) -> String {
            "constant".into()
        }
        fn input_dim(&self) -> usize {
            self.0.len()
        }
        fn latent_dim(&self) -> usize {
            1
        }
        fn encode(&self, _x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![0.0])
        }
        fn decode(&self, _z: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    #[test]
    fn symmetric_annotation_is_centered() {
        let z: Vec<Vec<f64>> = (-20..=20)
            .filter(|i| *i != 0)
            .flat_map(|i| (-2..=2).map(move |k| vec![i as f64 / 10.0, k as f64 / 2.0]))
            .collect();
        let labels: Vec<Label> = z.iter().map(|p| Label::from_sign(p[0])).collect();
        let a = train_annotator("first", &z, &labels, 0.1).unwrap();
        assert!(a.theta0.abs() < 1e-8);
        assert!(linalg::cosine(&a.theta, &[1.0, 0.0]).unwrap() > 0.99);
        assert!(matches!(
            train_annotator("none", &z, &vec![Label::Positive; z.len()], 0.1),
            Err(Error::SingleClass(_))
        ));
    }

    #[test]
    fn latent_direction_examples() {
        let t1 = [1.0f64, 2.0, 0.0];
        let t2 = [0.0, 0.0, 3.0];
        assert_eq!(latent_direction(&[1.0], &[&t1]), t1.to_vec());
        assert_eq!(latent_direction(&[0.0, 0.0], &[&t1, &t2]), vec![0.0; 3]);
        let u = latent_direction(&[0.5, -2.0], &[&t1, &t2]);
        let pyth = 0.25 * linalg::dot(&t1, &t1) + 4.0 * linalg::dot(&t2, &t2);
        assert!((linalg::dot(&u, &u) - pyth).abs() < 1e-12);
    }

    #[test]
    fn scaler_standardizes_and_drops() {
        let attrs = vec![vec![0.1, 0.5, 0.2], vec![0.3, 0.5, 0.9], vec![0.8, 0.5, 0.4]];
        let names: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
        let s = AttributeScaler::fit(&attrs, &names).unwrap();
        assert_eq!(s.dropped, vec!["b".to_string()]);
        assert_eq!(s.retained, vec![0, 2]);
        let x: Vec<Vec<f64>> = attrs.iter().map(|a| s.apply(a)).collect();
        for k in 0..2 {
            let mean: f64 = x.iter().map(|v| v[k]).sum::<f64>() / 3.0;
            let var: f64 = x.iter().map(|v| (v[k] - mean).powi(2)).sum::<f64>() / 3.0;
            assert!(mean.abs() < 1e-9 && (var.sqrt() - 1.0).abs() < 1e-9);
        }
        let flat = vec![vec![0.5, 0.5]; 4];
        match AttributeScaler::fit(&flat, &names[..2]) {
            Err(Error::DegenerateAttributes(n)) => assert_eq!(n, vec!["a".to_string(), "b".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stability_measures() {
        let f = crate::classifiers::LinearClassifier::new(vec![1.0, -1.0], 0.0).unwrap();
        let pts = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 0.5], vec![0.3, 0.2]];
        let id = IdentityCodec::new(2);
        assert_eq!(label_stability(&id, &f, &pts).unwrap(), 1.0);
        assert_eq!(probability_stability(&id, &f, &pts).unwrap(), 0.0);
        // every point decodes to (5, 0), a class +1 point
        let c = Constant(vec![5.0, 0.0]);
        assert_eq!(label_stability(&c, &f, &pts).unwrap(), 0.75);
        let lonely = FnClassifier::new("labels only", |x: &[f64]| Label::from_sign(x[0]));
        assert!(probability_stability(&id, &lonely, &pts).is_err());
    }

    #[test]
    fn probability_stability_formula() {
        struct Two;
        impl Classifier<f64> for Two {
            fn label(&self, x: &[f64]) -> Result<Label> {
                Ok(Label::from_sign(x[0]))
            }
            fn probability(&self, x: &[f64]) -> Result<Option<f64>> {
                Ok(Some(if x[0] > 0.5 { 0.8 } else { 0.6 }))
            }
            fn describe(&self) -> String {
                "two".into()
            }
        }
        let c = Constant(vec![0.0]);
        assert!((probability_stability(&c, &Two, &[vec![1.0]]).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn unstable_points_are_refused() {
        let f = FnClassifier::new("x1", |x: &[f64]| Label::from_sign(x[0]));
        let c = Constant(vec![5.0, 0.0]);
        let refs = ReferenceSet::from_points(vec![vec![0.0]], vec!["z1".into()], &f).unwrap();
        let ann = coordinate_annotators(&["z1".to_string()], 1.0);
        let err = explain_att(&refs, &[-1.0, 0.0], &f, &c, &ann, &DbaParams::default(), SeedStream::new(0));
        assert!(matches!(
            err,
            Err(Error::LabelUnstable {
                before: Label::Negative,
                after: Label::Positive
            })
        ));
    }
}
