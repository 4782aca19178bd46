//! The black-box contract every explained model satisfies.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::Result;
use crate::scalar::Scalar;

/// Whether a model (or codec) may be queried from several threads at once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Concurrency {
    Parallel,
    Serial,
}

impl Concurrency {
    pub fn and(self, other: Concurrency) -> Concurrency {
        if self == Concurrency::Parallel && other == Concurrency::Parallel {
            Concurrency::Parallel
        } else {
            Concurrency::Serial
        }
    }

    pub fn is_parallel(self) -> bool {
        self == Concurrency::Parallel
    }
}

/// A binary classifier `f : R^d -> {-1,+1}` with an optional class-+1
/// probability `c`.
pub trait Classifier<F: Scalar>: Send + Sync {
    fn label(&self, x: &[F]) -> Result<Label>;

    fn probability(&self, _x: &[F]) -> Result<Option<F>> {
        Ok(None)
    }

    /// `true` when `label(x) = +1` exactly when `probability(x) >= 0.5`.
    fn probability_consistent(&self) -> bool {
        true
    }

    fn concurrency(&self) -> Concurrency {
        Concurrency::Parallel
    }

    fn describe(&self) -> String;
}

/// Hard label implied by a probability; `c = 0.5` resolves to +1.
pub fn label_from_probability<F: Scalar>(p: F) -> Label {
    if p >= F::lit(0.5) {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// `c(x)` when available, otherwise the hard label as `{0, 1}`.
pub fn probability_or_indicator<F: Scalar>(f: &dyn Classifier<F>, x: &[F]) -> Result<F> {
    match f.probability(x)? {
        Some(p) => Ok(p),
        None => Ok(f.label(x)?.indicator()),
    }
}

/// Wraps a plain function as a label-only classifier.
pub struct FnClassifier<G> {
    func: G,
    name: String,
}

impl<G> FnClassifier<G> {
    pub fn new(name: impl Into<String>, func: G) -> Self {
        FnClassifier {
            func,
            name: name.into(),
        }
    }
}

impl<F: Scalar, G> Classifier<F> for FnClassifier<G>
where
    G: Fn(&[F]) -> Label + Send + Sync,
{
    fn label(&self, x: &[F]) -> Result<Label> {
        Ok((self.func)(x))
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

/// Maps `op` over `0..n`, in parallel only when `mode` allows it. Output order
/// always follows the index order.
pub(crate) fn map_indexed<T, Op>(n: usize, mode: Concurrency, op: Op) -> Vec<T>
where
    T: Send,
    Op: Fn(usize) -> T + Sync + Send,
{
    if mode.is_parallel() {
        (0..n).into_par_iter().map(op).collect()
    } else {
        (0..n).map(op).collect()
    }
}

/// Labels every row with `f`.
pub fn label_all<F: Scalar>(f: &dyn Classifier<F>, rows: &[Vec<F>]) -> Result<Vec<Label>> {
    map_indexed(rows.len(), f.concurrency(), |i| f.label(&rows[i]))
        .into_iter()
        .collect()
}
