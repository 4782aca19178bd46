//! Built-in black boxes.

use serde::{Deserialize, Serialize};

use crate::classifier::{label_from_probability, Classifier};
use crate::data::{Dataset, Label};
use crate::datagen::{airis_class_rule, AirisParams};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;
use crate::standardize::Standardizer;

fn check_dim(expected: usize, x: &[impl Sized]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

/// The exact AIris class rule. When built with a standardizer, inputs are
/// standardized features and are mapped back to raw parameters first.
#[derive(Clone, Debug)]
pub struct GroundTruthAiris<F: Scalar> {
    standardizer: Option<Standardizer<F>>,
}

impl<F: Scalar> GroundTruthAiris<F> {
    pub fn raw() -> Self {
        GroundTruthAiris { standardizer: None }
    }

    pub fn standardized(s: Standardizer<F>) -> Self {
        GroundTruthAiris { standardizer: Some(s) }
    }

    pub fn space(&self) -> &'static str {
        if self.standardizer.is_some() {
            "standardized"
        } else {
            "raw"
        }
    }
}

impl<F: Scalar> Classifier<F> for GroundTruthAiris<F> {
    fn label(&self, x: &[F]) -> Result<Label> {
        check_dim(5, x)?;
        let raw = match &self.standardizer {
            Some(s) => s.invert(x)?,
            None => x.to_vec(),
        };
        let params = AirisParams::from_slice(&raw)?;
        Ok(airis_class_rule(&params))
    }

    fn probability(&self, x: &[F]) -> Result<Option<F>> {
        Ok(Some(self.label(x)?.indicator()))
    }

    fn describe(&self) -> String {
        format!("AIris ground-truth rule ({} features)", self.space())
    }
}

/// `f(x) = sign(w'x + b)` with ties to +1, `c(x) = sigmoid(w'x + b)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearClassifier<F: Scalar> {
    pub weights: Vec<F>,
    pub bias: F,
}

impl<F: Scalar> LinearClassifier<F> {
    pub fn new(weights: Vec<F>, bias: F) -> Result<Self> {
        if weights.is_empty() || weights.iter().all(|w| *w == F::zero()) {
            return Err(Error::InvalidArgument("linear classifier needs a non-zero weight vector".into()));
        }
        Ok(LinearClassifier { weights, bias })
    }

    pub fn margin(&self, x: &[F]) -> F {
        linalg::dot(&self.weights, x) + self.bias
    }

    /// `|w'x + b| / ||w||`
    pub fn distance_to_boundary(&self, x: &[F]) -> F {
        self.margin(x).abs() / linalg::norm(&self.weights)
    }
}

impl<F: Scalar> Classifier<F> for LinearClassifier<F> {
    fn label(&self, x: &[F]) -> Result<Label> {
        check_dim(self.weights.len(), x)?;
        Ok(Label::from_sign(self.margin(x)))
    }

    fn probability(&self, x: &[F]) -> Result<Option<F>> {
        check_dim(self.weights.len(), x)?;
        Ok(Some(sigmoid(self.margin(x))))
    }

    fn describe(&self) -> String {
        format!("linear classifier (d = {})", self.weights.len())
    }
}

pub fn sigmoid<F: Scalar>(t: F) -> F {
    if t >= F::zero() {
        F::one() / (F::one() + (-t).exp())
    } else {
        let e = t.exp();
        e / (F::one() + e)
    }
}

/// Nadaraya-Watson estimate of `P(y = +1 | x)` with a Gaussian kernel.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KernelSmoother<F: Scalar> {
    reference: Vec<Vec<F>>,
    targets: Vec<F>,
    bandwidth: F,
}

impl<F: Scalar> KernelSmoother<F> {
    pub fn new(reference: Vec<Vec<F>>, labels: &[Label], bandwidth: F) -> Result<Self> {
        if !(bandwidth > F::zero()) {
            return Err(Error::InvalidArgument("kernel bandwidth must be positive".into()));
        }
        if reference.is_empty() || reference.len() != labels.len() {
            return Err(Error::InvalidArgument(
                "kernel smoother needs at least one labelled reference point".into(),
            ));
        }
        Ok(KernelSmoother {
            reference,
            targets: labels.iter().map(|l| l.indicator()).collect(),
            bandwidth,
        })
    }

    pub fn fit(data: &Dataset<F>, bandwidth: F) -> Result<Self> {
        Self::new(data.points.clone(), &data.labels, bandwidth)
    }

    pub fn bandwidth(&self) -> F {
        self.bandwidth
    }

    /// `sum_i y_i K(x, x_i) / sum_i K(x, x_i)`, `K = exp(-||x - x_i||^2 / (2 h^2))`.
    pub fn prob(&self, x: &[F]) -> Result<F> {
        check_dim(self.reference[0].len(), x)?;
        let two_h2 = F::lit(2.0) * self.bandwidth * self.bandwidth;
        let d2: Vec<F> = self.reference.iter().map(|r| linalg::distance_sq(r, x)).collect();
        // shift by the smallest distance so the nearest kernel weight is 1
        let min = d2.iter().copied().fold(F::infinity(), F::min);
        let mut num = F::zero();
        let mut den = F::zero();
        for (&d, &y) in d2.iter().zip(&self.targets) {
            let k = (-(d - min) / two_h2).exp();
            num = num + y * k;
            den = den + k;
        }
        Ok((num / den).max(F::zero()).min(F::one()))
    }
}

impl<F: Scalar> Classifier<F> for KernelSmoother<F> {
    fn label(&self, x: &[F]) -> Result<Label> {
        Ok(label_from_probability(self.prob(x)?))
    }

    fn probability(&self, x: &[F]) -> Result<Option<F>> {
        self.prob(x).map(Some)
    }

    fn describe(&self) -> String {
        format!(
            "Gaussian kernel smoother (h = {}, {} reference points)",
            self.bandwidth,
            self.reference.len()
        )
    }
}

/// Share of +1 labels among the `k` nearest reference points.
#[derive(Clone, Debug)]
pub struct KnnClassifier<F: Scalar> {
    reference: Vec<Vec<F>>,
    labels: Vec<Label>,
    k: usize,
}

impl<F: Scalar> KnnClassifier<F> {
    pub fn fit(data: &Dataset<F>, k: usize) -> Result<Self> {
        if k == 0 || data.n() == 0 {
            return Err(Error::InvalidArgument("k-NN needs k >= 1 and reference points".into()));
        }
        Ok(KnnClassifier {
            reference: data.points.clone(),
            labels: data.labels.clone(),
            k: k.min(data.n()),
        })
    }

    pub fn prob(&self, x: &[F]) -> Result<F> {
        check_dim(self.reference[0].len(), x)?;
        let mut d: Vec<(F, usize)> = self
            .reference
            .iter()
            .enumerate()
            .map(|(i, r)| (linalg::distance_sq(r, x), i))
            .collect();
        d.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let pos = d[..self.k].iter().filter(|(_, i)| self.labels[*i].is_positive()).count();
        Ok(F::from_usize_lossy(pos) / F::from_usize_lossy(self.k))
    }
}

impl<F: Scalar> Classifier<F> for KnnClassifier<F> {
    fn label(&self, x: &[F]) -> Result<Label> {
        Ok(label_from_probability(self.prob(x)?))
    }

    fn probability(&self, x: &[F]) -> Result<Option<F>> {
        self.prob(x).map(Some)
    }

    fn describe(&self) -> String {
        format!("{}-nearest-neighbour vote", self.k)
    }
}

/// Precomputed probabilities from an external model; a query returns the
/// score of the nearest scored point.
#[derive(Clone, Debug)]
pub struct ScoredTable<F: Scalar> {
    points: Vec<Vec<F>>,
    probabilities: Vec<F>,
}

impl<F: Scalar> ScoredTable<F> {
    pub fn new(points: Vec<Vec<F>>, probabilities: Vec<F>) -> Result<Self> {
        if points.is_empty() || points.len() != probabilities.len() {
            return Err(Error::InvalidArgument("scored table needs one probability per point".into()));
        }
        if probabilities.iter().any(|p| !(*p >= F::zero() && *p <= F::one())) {
            return Err(Error::InvalidArgument("scores must be probabilities in [0, 1]".into()));
        }
        Ok(ScoredTable { points, probabilities })
    }

    /// Reads a CSV of feature columns plus a probability column.
    pub fn load(path: impl AsRef<std::path::Path>, probability_column: &str) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::Reader::from_reader(file);
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
        let p_idx = headers
            .iter()
            .position(|h| h == probability_column)
            .ok_or_else(|| Error::MissingColumn(probability_column.to_string()))?;
        let mut points = Vec::new();
        let mut probs = Vec::new();
        for (row, rec) in reader.records().enumerate() {
            let rec = rec?;
            let mut point = Vec::new();
            for (i, cell) in rec.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    row: row + 1,
                    column: headers[i].clone(),
                    value: cell.to_string(),
                })?;
                if i == p_idx {
                    probs.push(F::lit(v));
                } else {
                    point.push(F::lit(v));
                }
            }
            points.push(point);
        }
        Self::new(points, probs)
    }

    fn nearest(&self, x: &[F]) -> Result<usize> {
        check_dim(self.points[0].len(), x)?;
        let mut best = (F::infinity(), 0);
        for (i, p) in self.points.iter().enumerate() {
            let d = linalg::distance_sq(p, x);
            if d < best.0 {
                best = (d, i);
            }
        }
        Ok(best.1)
    }
}

impl<F: Scalar> Classifier<F> for ScoredTable<F> {
    fn label(&self, x: &[F]) -> Result<Label> {
        Ok(label_from_probability(self.probabilities[self.nearest(x)?]))
    }

    fn probability(&self, x: &[F]) -> Result<Option<F>> {
        Ok(Some(self.probabilities[self.nearest(x)?]))
    }

    fn describe(&self) -> String {
        format!("scored table ({} points)", self.points.len())
    }
}
