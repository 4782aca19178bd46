//! Encoder/decoder pairs between the input space and a latent space in which
//! Euclidean distance is meaningful.

use serde::{Deserialize, Serialize};

use crate::classifier::{Classifier, Concurrency};
use crate::data::Label;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

pub trait Codec<F: Scalar>: Send + Sync {
    fn name(&self) -> String;
    fn input_dim(&self) -> usize;
    fn latent_dim(&self) -> usize;
    fn encode(&self, x: &[F]) -> Result<Vec<F>>;
    fn decode(&self, z: &[F]) -> Result<Vec<F>>;

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }

    fn round_trip(&self, x: &[F]) -> Result<Vec<F>> {
        self.decode(&self.encode(x)?)
    }
}

fn check<F>(expected: usize, v: &[F]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct IdentityCodec {
    dim: usize,
}

impl IdentityCodec {
    pub fn new(dim: usize) -> Self {
        IdentityCodec { dim }
    }
}

impl<F: Scalar> Codec<F> for IdentityCodec {
    fn name(&self) -> String {
        "identity".into()
    }
    fn input_dim(&self) -> usize {
        self.dim
    }
    fn latent_dim(&self) -> usize {
        self.dim
    }
    fn encode(&self, x: &[F]) -> Result<Vec<F>> {
        check(self.dim, x)?;
        Ok(x.to_vec())
    }
    fn decode(&self, z: &[F]) -> Result<Vec<F>> {
        check(self.dim, z)?;
        Ok(z.to_vec())
    }
}

/// PCA whitening: `z_k = v_k'(x - mu) / sqrt(lambda_k)` for the leading
/// `latent_dim` principal components. Lossless when `latent_dim` equals the
/// input dimension, a projection otherwise.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AffineCodec<F: Scalar> {
    pub mean: Vec<F>,
    /// Unit principal directions, one per latent coordinate.
    pub components: Vec<Vec<F>>,
    /// Standard deviation along each component.
    pub scales: Vec<F>,
}

impl<F: Scalar> AffineCodec<F> {
    pub fn fit(rows: &[Vec<F>], latent_dim: usize) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InvalidArgument("affine codec needs at least two rows".into()));
        }
        let d = rows[0].len();
        if latent_dim == 0 || latent_dim > d {
            return Err(Error::InvalidArgument(format!(
                "latent dimension must be in 1..={d}, got {latent_dim}"
            )));
        }
        let n = F::from_usize_lossy(rows.len());
        let mean: Vec<F> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<F>() / n).collect();
        let mut cov = vec![F::zero(); d * d];
        for r in rows {
            let c = linalg::sub(r, &mean);
            for a in 0..d {
                for b in 0..d {
                    cov[a * d + b] = cov[a * d + b] + c[a] * c[b];
                }
            }
        }
        for v in &mut cov {
            *v = *v / n;
        }
        let (values, vectors) = linalg::symmetric_eigen(&cov, d);
        let mut components = Vec::with_capacity(latent_dim);
        let mut scales = Vec::with_capacity(latent_dim);
        for k in 0..latent_dim {
            if !(values[k] > F::zero()) {
                return Err(Error::Degenerate(format!("principal component {k} has zero variance")));
            }
            components.push((0..d).map(|row| vectors[row * d + k]).collect());
            scales.push(values[k].sqrt());
        }
        Ok(AffineCodec {
            mean,
            components,
            scales,
        })
    }
}

impl<F: Scalar> Codec<F> for AffineCodec<F> {
    fn name(&self) -> String {
        format!("affine-whitening(l = {})", self.components.len())
    }
    fn input_dim(&self) -> usize {
        self.mean.len()
    }
    fn latent_dim(&self) -> usize {
        self.components.len()
    }
    fn encode(&self, x: &[F]) -> Result<Vec<F>> {
        check(self.mean.len(), x)?;
        let c = linalg::sub(x, &self.mean);
        Ok(self
            .components
            .iter()
            .zip(&self.scales)
            .map(|(v, &s)| linalg::dot(v, &c) / s)
            .collect())
    }
    fn decode(&self, z: &[F]) -> Result<Vec<F>> {
        check(self.components.len(), z)?;
        let mut x = self.mean.clone();
        for ((v, &s), &zk) in self.components.iter().zip(&self.scales).zip(z) {
            for (xi, &vi) in x.iter_mut().zip(v) {
                *xi = *xi + zk * s * vi;
            }
        }
        Ok(x)
    }
}

/// `z -> f(decode(z))`: the black box seen from latent space.
pub struct LatentClassifier<'a, F: Scalar> {
    pub codec: &'a dyn Codec<F>,
    pub inner: &'a dyn Classifier<F>,
}

impl<F: Scalar> Classifier<F> for LatentClassifier<'_, F> {
    fn label(&self, z: &[F]) -> Result<Label> {
        self.inner.label(&self.codec.decode(z)?)
    }

    fn probability(&self, z: &[F]) -> Result<Option<F>> {
        self.inner.probability(&self.codec.decode(z)?)
    }

    fn probability_consistent(&self) -> bool {
        self.inner.probability_consistent()
    }

    fn concurrency(&self) -> Concurrency {
        self.codec.concurrency().and(self.inner.concurrency())
    }

    fn describe(&self) -> String {
        format!("{} through {}", self.inner.describe(), self.codec.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_is_exact() {
        let c = IdentityCodec::new(3);
        let x = [0.1, -2.0, 3.5];
        assert_eq!(Codec::<f64>::round_trip(&c, &x).unwrap(), x.to_vec());
    }

    #[test]
    fn full_rank_affine_is_invertible_and_whitening() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<Vec<f64>> = (0..400)
            .map(|_| {
                let a: f64 = rng.random_range(-1.0..1.0);
                let b: f64 = rng.random_range(-1.0..1.0);
                let c: f64 = rng.random_range(-1.0..1.0);
                vec![a + 0.5 * b, 2.0 * b + 0.3 * c, a - b + c + 3.0]
            })
            .collect();
        let c = AffineCodec::fit(&rows, 3).unwrap();
        for r in rows.iter().take(20) {
            let back = c.round_trip(r).unwrap();
            assert!(linalg::distance(r, &back) < 1e-9);
        }
        let z: Vec<Vec<f64>> = rows.iter().map(|r| c.encode(r).unwrap()).collect();
        for k in 0..3 {
            let var: f64 = z.iter().map(|v| v[k] * v[k]).sum::<f64>() / z.len() as f64;
            assert!((var - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn truncated_affine_is_lossy() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i % 7) as f64]).collect();
        let c = AffineCodec::fit(&rows, 1).unwrap();
        let back = c.round_trip(&rows[3]).unwrap();
        assert!(linalg::distance(&rows[3], &back) > 1e-3);
    }
}
