//! Synthetic benchmarks with known ground truth: two interleaving moons and
//! the tabular artificial-iris (AIris) parameters.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Annotations, Dataset, Label};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::SeedStream;
use crate::scalar::Scalar;
use crate::standardize::Standardizer;

/// Two half-circle classes with isotropic Gaussian noise.
///
/// Row `i` belongs to class A (+1) when `i` is even and lies on
/// `(cos t, sin t)`; odd rows are class B (-1) on `(1 - cos t, 0.5 - sin t)`.
/// `t` is uniform on `[0, pi]`. Each row draws from its own RNG stream, so
/// row `i` does not depend on `n`.
pub fn gen_moons<F: Scalar>(n: usize, noise: F, seed: u64) -> Result<Dataset<F>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("moons needs n >= 2, got {n}")));
    }
    if !(noise >= F::zero()) {
        return Err(Error::InvalidArgument("noise must be non-negative".into()));
    }
    let stream = SeedStream::new(seed).child("moons");
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let mut rng = stream.index(i as u64).rng();
        let t: f64 = rng.random_range(0.0..=std::f64::consts::PI);
        let (x, y, label) = if i % 2 == 0 {
            (t.cos(), t.sin(), Label::Positive)
        } else {
            (1.0 - t.cos(), 0.5 - t.sin(), Label::Negative)
        };
        let ex: f64 = StandardNormal.sample(&mut rng);
        let ey: f64 = StandardNormal.sample(&mut rng);
        points.push(vec![F::lit(x) + noise * F::lit(ex), F::lit(y) + noise * F::lit(ey)]);
        labels.push(label);
    }
    Dataset::new(points, labels, vec!["x1".into(), "x2".into()])
}

/// Parameter names of the tabular AIris benchmark, in column order.
pub const AIRIS_FEATURES: [&str; 5] = ["PL", "PW", "SL", "SW", "C"];

/// Sampling range of every AIris parameter.
pub const AIRIS_RANGES: [(f64, f64); 5] = [(0.3, 0.7), (0.1, 0.7), (0.3, 0.7), (0.1, 0.7), (0.1, 0.8)];

/// Shared weight of the linear class rule.
pub const AIRIS_WEIGHT: f64 = 0.33;
pub const AIRIS_UPPER_THRESHOLD: f64 = 0.5;
pub const AIRIS_LOWER_THRESHOLD: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AirisParams<F: Scalar> {
    pub pl: F,
    pub pw: F,
    pub sl: F,
    pub sw: F,
    pub c: F,
}

impl<F: Scalar> AirisParams<F> {
    pub fn from_slice(x: &[F]) -> Result<Self> {
        if x.len() != 5 {
            return Err(Error::Dimension {
                expected: 5,
                found: x.len(),
            });
        }
        Ok(AirisParams {
            pl: x[0],
            pw: x[1],
            sl: x[2],
            sw: x[3],
            c: x[4],
        })
    }

    pub fn to_vec(self) -> Vec<F> {
        vec![self.pl, self.pw, self.sl, self.sw, self.c]
    }

    pub fn in_range(&self) -> bool {
        self.to_vec()
            .iter()
            .zip(AIRIS_RANGES)
            .all(|(&v, (lo, hi))| v >= F::lit(lo) && v <= F::lit(hi))
    }
}

/// Class A (+1) iff `0.33 PL + 0.33 PW + 0.33 C < 0.5` and
/// `0.33 PL + 0.33 PW + 0.33 SL > 0.4`; class B (-1) otherwise.
pub fn airis_class_rule<F: Scalar>(p: &AirisParams<F>) -> Label {
    if !p.in_range() {
        static ONCE: std::sync::Once = std::sync::Once::new();
        ONCE.call_once(|| log::warn!("AIris parameters outside their sampling ranges, e.g. {p:?}"));
        log::debug!("AIris parameters outside their sampling ranges: {p:?}");
    }
    let w = F::lit(AIRIS_WEIGHT);
    let shared = w * p.pl + w * p.pw;
    let first = shared + w * p.c < F::lit(AIRIS_UPPER_THRESHOLD);
    let second = shared + w * p.sl > F::lit(AIRIS_LOWER_THRESHOLD);
    if first && second {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// `+1` iff the value is strictly above the midpoint of its range.
pub fn midpoint_attribute<F: Scalar>(value: F, range: (f64, f64)) -> Label {
    if value > F::lit(0.5 * (range.0 + range.1)) {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Samples AIris parameter rows uniformly over their ranges, labels them by
/// [`airis_class_rule`] and annotates each with its midpoint attributes.
/// Rows `start..start + n` of the stream identified by `seed` are produced.
pub fn gen_airis_rows<F: Scalar>(start: usize, n: usize, seed: u64) -> (Dataset<F>, Annotations) {
    let stream = SeedStream::new(seed).child("airis");
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut columns: Vec<Vec<Label>> = (0..5).map(|_| Vec::with_capacity(n)).collect();
    for i in start..start + n {
        let mut rng = stream.index(i as u64).rng();
        let row: Vec<F> = AIRIS_RANGES
            .iter()
            .map(|&(lo, hi)| F::lit(rng.random_range(lo..hi)))
            .collect();
        let params = AirisParams::from_slice(&row).expect("five parameters");
        labels.push(airis_class_rule(&params));
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(midpoint_attribute(row[j], AIRIS_RANGES[j]));
        }
        points.push(row);
    }
    let names: Vec<String> = AIRIS_FEATURES.iter().map(|s| s.to_string()).collect();
    let data = Dataset::new(points, labels, names.clone()).expect("consistent AIris rows");
    (data, Annotations { names, columns })
}

pub fn gen_airis_tab<F: Scalar>(n: usize, seed: u64) -> Result<(Dataset<F>, Annotations)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("AIris needs n >= 2, got {n}")));
    }
    Ok(gen_airis_rows(0, n, seed))
}

/// The population standardizer of the AIris ranges: midpoints and
/// `(b - a) / sqrt(12)`.
pub fn airis_standardizer<F: Scalar>() -> Standardizer<F> {
    let means = AIRIS_RANGES.iter().map(|&(a, b)| F::lit(0.5 * (a + b))).collect();
    let sds = AIRIS_RANGES.iter().map(|&(a, b)| F::lit((b - a) / 12f64.sqrt())).collect();
    Standardizer::from_parts(AIRIS_FEATURES.iter().map(|s| s.to_string()).collect(), means, sds)
        .expect("valid AIris ranges")
}

/// Which side of a hyperplane class A lies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassASide {
    /// `normal . x < threshold`
    Below,
    /// `normal . x > threshold`
    Above,
}

/// `normal . x = threshold`, with class A on one side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Hyperplane<F: Scalar> {
    pub normal: Vec<F>,
    pub threshold: F,
    pub class_a_side: ClassASide,
}

impl<F: Scalar> Hyperplane<F> {
    pub fn value(&self, x: &[F]) -> F {
        linalg::dot(&self.normal, x) - self.threshold
    }

    pub fn holds(&self, x: &[F]) -> bool {
        match self.class_a_side {
            ClassASide::Below => self.value(x) < F::zero(),
            ClassASide::Above => self.value(x) > F::zero(),
        }
    }

    /// Euclidean distance from `x` to the plane.
    pub fn distance(&self, x: &[F]) -> F {
        self.value(x).abs() / linalg::norm(&self.normal)
    }
}

/// The two AIris hyperplanes expressed in the coordinates of `s`.
///
/// Substituting `x_j = mean_j + sd_j s_j` turns each coefficient `0.33` into
/// `0.33 sd_j` and moves `0.33 mean_j` into the threshold.
pub fn airis_hyperplanes_under<F: Scalar>(s: &Standardizer<F>) -> (Hyperplane<F>, Hyperplane<F>) {
    let w = F::lit(AIRIS_WEIGHT);
    let mask1 = [true, true, false, false, true];
    let mask2 = [true, true, true, false, false];
    let build = |mask: [bool; 5], threshold: f64, side| {
        let normal = (0..5)
            .map(|j| if mask[j] { w * s.sds[j] } else { F::zero() })
            .collect();
        let shift: F = (0..5).filter(|&j| mask[j]).map(|j| w * s.means[j]).sum();
        Hyperplane {
            normal,
            threshold: F::lit(threshold) - shift,
            class_a_side: side,
        }
    };
    (
        build(mask1, AIRIS_UPPER_THRESHOLD, ClassASide::Below),
        build(mask2, AIRIS_LOWER_THRESHOLD, ClassASide::Above),
    )
}

/// The AIris hyperplanes over features standardized by the range statistics.
pub fn standardized_hyperplanes<F: Scalar>() -> (Hyperplane<F>, Hyperplane<F>) {
    airis_hyperplanes_under(&airis_standardizer())
}
