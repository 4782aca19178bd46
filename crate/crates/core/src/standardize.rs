//! Per-feature affine standardization.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Maps `x_j` to `(x_j - mean_j) / sd_j`.
///
/// Fitted standard deviations use the population convention (divide by n),
/// which is also what the uniform-distribution formula `(b - a) / sqrt(12)`
/// describes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Standardizer<F: Scalar> {
    pub feature_names: Vec<String>,
    pub means: Vec<F>,
    pub sds: Vec<F>,
}

impl<F: Scalar> Standardizer<F> {
    pub fn from_parts(feature_names: Vec<String>, means: Vec<F>, sds: Vec<F>) -> Result<Self> {
        if means.len() != sds.len() || means.len() != feature_names.len() {
            return Err(Error::Dimension {
                expected: means.len(),
                found: sds.len(),
            });
        }
        if let Some(j) = sds.iter().position(|&s| !(s > F::zero()) || !s.is_finite()) {
            return Err(Error::ConstantColumn {
                name: feature_names[j].clone(),
            });
        }
        Ok(Standardizer {
            feature_names,
            means,
            sds,
        })
    }

    /// Sample means and population standard deviations of every column.
    pub fn fit(data: &Dataset<F>) -> Result<Self> {
        Self::fit_rows(&data.points, data.feature_names.clone())
    }

    pub fn fit_rows(rows: &[Vec<F>], feature_names: Vec<String>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 rows to standardize, got {}",
                rows.len()
            )));
        }
        let d = feature_names.len();
        let n = F::from_usize_lossy(rows.len());
        let mut means = vec![F::zero(); d];
        for row in rows {
            for (m, &v) in means.iter_mut().zip(row) {
                *m = *m + v;
            }
        }
        for m in &mut means {
            *m = *m / n;
        }
        let mut vars = vec![F::zero(); d];
        for row in rows {
            for j in 0..d {
                let t = row[j] - means[j];
                vars[j] = vars[j] + t * t;
            }
        }
        let sds = vars.into_iter().map(|v| (v / n).sqrt()).collect();
        Self::from_parts(feature_names, means, sds)
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    fn check(&self, x: &[F]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, x: &[F]) -> Result<Vec<F>> {
        self.check(x)?;
        Ok(x.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect())
    }

    pub fn invert(&self, z: &[F]) -> Result<Vec<F>> {
        self.check(z)?;
        Ok(z.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(&v, (&m, &s))| v * s + m)
            .collect())
    }

    pub fn apply_dataset(&self, data: &Dataset<F>) -> Result<Dataset<F>> {
        let points = data.points.iter().map(|p| self.apply(p)).collect::<Result<_>>()?;
        Ok(Dataset {
            points,
            labels: data.labels.clone(),
            feature_names: data.feature_names.clone(),
            label_mapping: data.label_mapping.clone(),
        })
    }
}
