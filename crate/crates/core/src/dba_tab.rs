//! Local decision boundary approximation on tabular features.
//!
//! 1. Detection: bisect the segments from `x0` to its `k` nearest
//!    opposite-class training points and keep the boundary point closest to
//!    `x0`.
//! 2. Simulation: draw `m` points from the convex hull of the `2d` vertices
//!    `x_b +- alpha e_j` with simplex-uniform weights, `alpha = r ||x_b - x0||`,
//!    and label them with `f`.
//! 3. Explanation: fit an unpenalized logistic surrogate on the sample.
//!
//! `r` is chosen from a grid as the value whose surrogate direction reaches
//! the decision boundary soonest when walking from `x0`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::classifier::{label_all, map_indexed, Classifier, Concurrency};
use crate::data::{Dataset, Label};
use crate::error::{Error, Result};
use crate::evaluation::{class_balance, surrogate_accuracy};
use crate::explanation::{Explanation, Method};
use crate::glm::{fit_logistic_with, LinearModel, LogisticOptions};
use crate::linalg;
use crate::rng::SeedStream;
use crate::scalar::Scalar;

/// The r grid `{0.1, ..., 0.9, 1, 1.5, ..., 9.5, 10}`.
pub fn default_r_grid<F: Scalar>() -> Vec<F> {
    let mut grid: Vec<F> = (1..=9).map(|i| F::lit(i as f64 / 10.0)).collect();
    grid.extend((2..=20).map(|i| F::lit(i as f64 * 0.5)));
    grid
}

/// The coarser grid `{0.2, ..., 1.5, 2, 2.5, ..., 5}` used on the moons toy.
pub fn moons_r_grid<F: Scalar>() -> Vec<F> {
    let mut grid: Vec<F> = (2..=15).map(|i| F::lit(i as f64 / 10.0)).collect();
    grid.extend((4..=10).map(|i| F::lit(i as f64 * 0.5)));
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct DbaParams<F: Scalar> {
    pub k: usize,
    pub m: usize,
    pub r_grid: Vec<F>,
    /// Final bracket length relative to the segment length.
    pub bisection_tol: F,
    pub bisection_max_iter: usize,
    /// `gamma = ||x0 - x_b|| + gamma_offset` when probing a direction.
    pub gamma_offset: F,
}

impl<F: Scalar> Default for DbaParams<F> {
    fn default() -> Self {
        DbaParams {
            k: 1000,
            m: 500,
            r_grid: default_r_grid(),
            bisection_tol: F::lit(1e-4),
            bisection_max_iter: 60,
            gamma_offset: F::lit(0.1),
        }
    }
}

impl<F: Scalar> DbaParams<F> {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if self.m < dim + 1 {
            return Err(Error::InvalidArgument(format!(
                "sample size m = {} must be at least d + 1 = {}",
                self.m,
                dim + 1
            )));
        }
        if self.r_grid.is_empty() || self.r_grid.iter().any(|r| !(*r > F::zero())) {
            return Err(Error::InvalidArgument("r grid must be non-empty and positive".into()));
        }
        if !(self.bisection_tol > F::zero()) || self.bisection_max_iter == 0 {
            return Err(Error::InvalidArgument("bisection needs tol > 0 and max_iter >= 1".into()));
        }
        Ok(())
    }
}

/// Training points together with the labels the explained model assigns them.
#[derive(Clone, Debug)]
pub struct ReferenceSet<F: Scalar> {
    pub points: Vec<Vec<F>>,
    pub model_labels: Vec<Label>,
    pub feature_names: Vec<String>,
    /// Rows whose stored label differs from the model's label.
    pub stored_label_disagreements: Option<usize>,
    pub concurrency: Concurrency,
}

impl<F: Scalar> ReferenceSet<F> {
    pub fn from_dataset(data: &Dataset<F>, f: &dyn Classifier<F>) -> Result<Self> {
        let mut refs = Self::from_points(data.points.clone(), data.feature_names.clone(), f)?;
        let diff = refs
            .model_labels
            .iter()
            .zip(&data.labels)
            .filter(|(a, b)| a != b)
            .count();
        if diff > 0 {
            log::info!("{diff} of {} training labels differ from the model's labels", data.n());
        }
        refs.stored_label_disagreements = Some(diff);
        Ok(refs)
    }

    pub fn from_points(points: Vec<Vec<F>>, feature_names: Vec<String>, f: &dyn Classifier<F>) -> Result<Self> {
        let model_labels = label_all(f, &points)?;
        Ok(ReferenceSet {
            points,
            model_labels,
            feature_names,
            stored_label_disagreements: None,
            concurrency: f.concurrency(),
        })
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OppositeNeighbors<F: Scalar> {
    pub indices: Vec<usize>,
    pub distances: Vec<F>,
    pub warning: Option<String>,
}

/// The `k` reference points with the opposite model label that are closest to
/// `x0`, ascending by distance with ties broken by index.
pub fn nearest_opposite<F: Scalar>(
    refs: &ReferenceSet<F>,
    x0: &[F],
    x0_label: Label,
    k: usize,
) -> Result<OppositeNeighbors<F>> {
    let mut cand: Vec<(F, usize)> = refs
        .points
        .iter()
        .zip(&refs.model_labels)
        .enumerate()
        .filter(|(_, (_, l))| **l != x0_label)
        .map(|(i, (p, _))| (linalg::distance_sq(p, x0), i))
        .collect();
    if cand.is_empty() {
        return Err(Error::NoOppositePoints);
    }
    cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)));
    let warning = (cand.len() < k).then(|| {
        let msg = format!("only {} opposite-class points available (k = {k}); using all", cand.len());
        log::warn!("{msg}");
        msg
    });
    cand.truncate(k);
    Ok(OppositeNeighbors {
        indices: cand.iter().map(|c| c.1).collect(),
        distances: cand.iter().map(|c| c.0.sqrt()).collect(),
        warning,
    })
}

/// Result of a bisection line search on `[a, b]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Bisection<F: Scalar> {
    /// Midpoint of the final bracket.
    pub point: Vec<F>,
    /// Bracket end carrying `f(a)`.
    pub inside: Vec<F>,
    /// Bracket end carrying `f(b)`.
    pub outside: Vec<F>,
    pub evaluations: usize,
}

/// Bisects `[a, b]` for a label switch of `f`.
///
/// Each of the at most `max_iter` rounds forms the midpoint of the current
/// bracket; the search stops once the bracket is no longer than
/// `tol * ||b - a||` or on the last round, and returns that midpoint. With
/// `max_iter = 1` the result is the midpoint of `[a, b]`.
pub fn bisect_boundary<F: Scalar>(
    f: &dyn Classifier<F>,
    a: &[F],
    b: &[F],
    tol: F,
    max_iter: usize,
) -> Result<Bisection<F>> {
    let la = f.label(a)?;
    let lb = f.label(b)?;
    bisect_known(f, a, b, la, lb, tol, max_iter)
}

fn bisect_known<F: Scalar>(
    f: &dyn Classifier<F>,
    a: &[F],
    b: &[F],
    la: Label,
    lb: Label,
    tol: F,
    max_iter: usize,
) -> Result<Bisection<F>> {
    if la == lb {
        return Err(Error::Precondition(format!(
            "bisection needs opposite labels at the segment ends, both are {la}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let half = F::lit(0.5);
    let (mut lo, mut hi) = (F::zero(), F::one());
    let mut evaluations = 0;
    for round in 1..=max_iter {
        let mid = (lo + hi) * half;
        if hi - lo <= tol || round == max_iter {
            break;
        }
        evaluations += 1;
        if f.label(&linalg::lerp(a, b, mid))? == la {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = (lo + hi) * half;
    Ok(Bisection {
        point: linalg::lerp(a, b, mid),
        inside: linalg::lerp(a, b, lo),
        outside: linalg::lerp(a, b, hi),
        evaluations,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoundaryDetection<F: Scalar> {
    pub boundary_point: Vec<F>,
    /// The opposite-class point whose segment produced `boundary_point`.
    pub bisected_point: Vec<F>,
    pub bisected_index: usize,
    pub distance: F,
    pub candidates_examined: usize,
    /// Bracket around `boundary_point`: `x0`'s label inside, opposite outside.
    pub inside: Vec<F>,
    pub outside: Vec<F>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Boundary points on every segment `[x0, x_j]`, in candidate order.
pub fn candidate_boundary_points<F: Scalar>(
    refs: &ReferenceSet<F>,
    x0: &[F],
    x0_label: Label,
    f: &dyn Classifier<F>,
    neighbors: &OppositeNeighbors<F>,
    params: &DbaParams<F>,
) -> Result<Vec<Bisection<F>>> {
    let mode = refs.concurrency.and(f.concurrency());
    map_indexed(neighbors.indices.len(), mode, |c| {
        let j = neighbors.indices[c];
        bisect_known(
            f,
            x0,
            &refs.points[j],
            x0_label,
            refs.model_labels[j],
            params.bisection_tol,
            params.bisection_max_iter,
        )
    })
    .into_iter()
    .collect()
}

/// Closest decision-boundary point to `x0` along segments to its nearest
/// opposite-class neighbours.
pub fn detect<F: Scalar>(
    refs: &ReferenceSet<F>,
    x0: &[F],
    f: &dyn Classifier<F>,
    params: &DbaParams<F>,
) -> Result<BoundaryDetection<F>> {
    let x0_label = f.label(x0)?;
    let neighbors = nearest_opposite(refs, x0, x0_label, params.k)?;
    let cands = candidate_boundary_points(refs, x0, x0_label, f, &neighbors, params)?;
    let mut best = 0;
    let mut best_d = F::infinity();
    for (c, b) in cands.iter().enumerate() {
        let d = linalg::distance(&b.point, x0);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    let win = &cands[best];
    let idx = neighbors.indices[best];
    Ok(BoundaryDetection {
        boundary_point: win.point.clone(),
        bisected_point: refs.points[idx].clone(),
        bisected_index: idx,
        distance: best_d,
        candidates_examined: cands.len(),
        inside: win.inside.clone(),
        outside: win.outside.clone(),
        warnings: neighbors.warning.into_iter().collect(),
    })
}

/// Points drawn around a boundary point and labelled by the black box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SimulationSample<F: Scalar> {
    pub points: Vec<Vec<F>>,
    pub labels: Vec<Label>,
    /// Simplex weights per point, ordered `w_{1,-1}, w_{1,+1}, w_{2,-1}, ...`.
    pub weights: Vec<Vec<F>>,
    pub alpha: F,
    /// `v_{j,-1}, v_{j,+1}` for every basis direction, in weight order.
    pub vertices: Vec<Vec<F>>,
}

pub fn coordinate_basis<F: Scalar>(d: usize) -> Vec<Vec<F>> {
    (0..d)
        .map(|j| (0..d).map(|i| if i == j { F::one() } else { F::zero() }).collect())
        .collect()
}

/// Uniform draw from the probability simplex of the given dimension, by
/// normalizing i.i.d. standard exponentials.
pub fn simplex_weights<F: Scalar, R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<F> {
    let draws: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|e| F::lit(e / total)).collect()
}

/// Samples `m` points `sum_j w_{j,-1} v_{j,-1} + w_{j,+1} v_{j,+1}` with
/// `v_{j,+-1} = x_b +- alpha * basis_j` and `alpha = r ||x_b - x0||`.
pub fn simulate<F: Scalar, R: Rng + ?Sized>(
    f: &dyn Classifier<F>,
    x_b: &[F],
    x0: &[F],
    r: F,
    m: usize,
    basis: &[Vec<F>],
    rng: &mut R,
) -> Result<SimulationSample<F>> {
    if !(r > F::zero()) || m == 0 {
        return Err(Error::InvalidArgument("simulation needs r > 0 and m >= 1".into()));
    }
    let alpha = r * linalg::distance(x_b, x0);
    if !(alpha > F::zero()) {
        return Err(Error::Degenerate("boundary point coincides with x0 (alpha = 0)".into()));
    }
    let mut vertices = Vec::with_capacity(2 * basis.len());
    for b in basis {
        vertices.push(linalg::axpy(x_b, -alpha, b));
        vertices.push(linalg::axpy(x_b, alpha, b));
    }
    let mut points = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for _ in 0..m {
        let w: Vec<F> = simplex_weights(2 * basis.len(), rng);
        // weights sum to one, so the hull combination is x_b plus the
        // weighted basis offsets
        let mut offset = vec![F::zero(); x_b.len()];
        for (j, b) in basis.iter().enumerate() {
            let c = w[2 * j + 1] - w[2 * j];
            for (o, &bj) in offset.iter_mut().zip(b) {
                *o = *o + c * bj;
            }
        }
        points.push(linalg::axpy(x_b, alpha, &offset));
        weights.push(w);
    }
    let labels = label_all(f, &points)?;
    Ok(SimulationSample {
        points,
        labels,
        weights,
        alpha,
        vertices,
    })
}

/// Outcome of walking from `x0` along a direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", rename_all = "snake_case")]
pub enum Crossing<F: Scalar> {
    /// The label switched at this distance from `x0`.
    At(F),
    NoCrossing,
}

impl<F: Scalar> Crossing<F> {
    pub fn distance(self) -> Option<F> {
        match self {
            Crossing::At(d) => Some(d),
            Crossing::NoCrossing => None,
        }
    }

    /// `+inf` for a failure, so crossings can be compared.
    pub fn as_cost(self) -> F {
        self.distance().unwrap_or_else(F::infinity)
    }
}

/// Distance from `x0` to the boundary along `direction`, oriented to move
/// away from `x0`'s class: the probe end is `x0 - f(x0) gamma u` with
/// `u = direction / ||direction||`.
pub fn boundary_distance_along<F: Scalar>(
    f: &dyn Classifier<F>,
    x0: &[F],
    direction: &[F],
    gamma: F,
    tol: F,
    max_iter: usize,
) -> Result<Crossing<F>> {
    let n = linalg::norm(direction);
    if !(n > F::zero()) {
        return Err(Error::InvalidArgument("direction must be non-zero".into()));
    }
    let l0 = f.label(x0)?;
    let step = -l0.sign::<F>() * gamma / n;
    let far = linalg::axpy(x0, step, direction);
    let lf = f.label(&far)?;
    if lf == l0 {
        return Ok(Crossing::NoCrossing);
    }
    let b = bisect_known(f, x0, &far, l0, lf, tol, max_iter)?;
    Ok(Crossing::At(linalg::distance(&b.point, x0)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialStatus {
    Ok,
    NoCrossing,
    SingleClass,
    ZeroDirection,
    FitFailed(String),
}

/// One grid value of `r` during tuning.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RTrial<F: Scalar> {
    pub r: F,
    pub status: TrialStatus,
    pub distance: Option<F>,
    pub class_balance: Option<F>,
}

pub(crate) enum TrialOutcome<F: Scalar, T> {
    Skipped(TrialStatus, Option<F>),
    Done { crossing: Crossing<F>, balance: F, payload: T },
}

/// Runs every grid value and keeps the one with the smallest crossing
/// distance; ties go to the smaller `r` (earlier in the ascending grid).
pub(crate) fn tune_grid<F, T, Op>(grid: &[F], mode: Concurrency, trial: Op) -> Result<(usize, Vec<RTrial<F>>, T)>
where
    F: Scalar,
    T: Send,
    Op: Fn(usize, F) -> Result<TrialOutcome<F, T>> + Sync + Send,
{
    let outcomes: Vec<TrialOutcome<F, T>> = map_indexed(grid.len(), mode, |i| trial(i, grid[i]))
        .into_iter()
        .collect::<Result<_>>()?;
    let mut trials = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, F)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        let t = match o {
            TrialOutcome::Skipped(status, balance) => RTrial {
                r: grid[i],
                status: status.clone(),
                distance: None,
                class_balance: *balance,
            },
            TrialOutcome::Done { crossing, balance, .. } => {
                if let Crossing::At(d) = crossing {
                    if best.is_none_or(|(_, bd)| *d < bd) {
                        best = Some((i, *d));
                    }
                }
                RTrial {
                    r: grid[i],
                    status: match crossing {
                        Crossing::At(_) => TrialStatus::Ok,
                        Crossing::NoCrossing => TrialStatus::NoCrossing,
                    },
                    distance: crossing.distance(),
                    class_balance: Some(*balance),
                }
            }
        };
        trials.push(t);
    }
    let Some((idx, _)) = best else {
        let summary: Vec<String> = trials.iter().map(|t| format!("r={}: {:?}", t.r, t.status)).collect();
        return Err(Error::TuningFailed(summary.join(", ")));
    };
    let payload = outcomes
        .into_iter()
        .nth(idx)
        .and_then(|o| match o {
            TrialOutcome::Done { payload, .. } => Some(payload),
            TrialOutcome::Skipped(..) => None,
        })
        .expect("best trial has a payload");
    Ok((idx, trials, payload))
}

/// Everything produced by one DBA-Tab run.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DbaOutcome<F: Scalar> {
    pub explanation: Explanation<F>,
    pub detection: BoundaryDetection<F>,
    pub model: LinearModel<F>,
    pub trials: Vec<RTrial<F>>,
    #[serde(skip)]
    pub sample: Option<SimulationSample<F>>,
}

/// Detection, simulation and surrogate fitting with `r` tuned over the grid.
pub fn tune_and_explain<F: Scalar>(
    refs: &ReferenceSet<F>,
    x0: &[F],
    f: &dyn Classifier<F>,
    params: &DbaParams<F>,
    seed: SeedStream,
) -> Result<DbaOutcome<F>> {
    params.validate(x0.len())?;
    if x0.len() != refs.dim() {
        return Err(Error::Dimension {
            expected: refs.dim(),
            found: x0.len(),
        });
    }
    let detection = detect(refs, x0, f, params)?;
    explain_from_detection(refs, detection, x0, f, params, seed)
}

/// The simulation and tuning half of [`tune_and_explain`].
pub fn explain_from_detection<F: Scalar>(
    refs: &ReferenceSet<F>,
    detection: BoundaryDetection<F>,
    x0: &[F],
    f: &dyn Classifier<F>,
    params: &DbaParams<F>,
    seed: SeedStream,
) -> Result<DbaOutcome<F>> {
    let basis = coordinate_basis::<F>(x0.len());
    let gamma = detection.distance + params.gamma_offset;
    let stream = seed.child("simulation");
    let mode = f.concurrency();
    let (best, trials, (sample, model)) = tune_grid(&params.r_grid, mode, |i, r| {
        let mut rng = stream.index(i as u64).rng();
        let sample = simulate(f, &detection.boundary_point, x0, r, params.m, &basis, &mut rng)?;
        let balance = class_balance(&sample.labels);
        let model = match fit_logistic_with(&sample.points, &sample.labels, None, &LogisticOptions::default()) {
            Ok(m) => m,
            Err(Error::SingleClass(_)) => {
                log::warn!("r = {r}: sample contains a single class; skipped");
                return Ok(TrialOutcome::Skipped(TrialStatus::SingleClass, Some(balance)));
            }
            Err(e) => return Ok(TrialOutcome::Skipped(TrialStatus::FitFailed(e.to_string()), Some(balance))),
        };
        if model.coefficients.iter().all(|c| *c == F::zero()) {
            return Ok(TrialOutcome::Skipped(TrialStatus::ZeroDirection, Some(balance)));
        }
        let crossing = boundary_distance_along(
            f,
            x0,
            &model.coefficients,
            gamma,
            params.bisection_tol,
            params.bisection_max_iter,
        )?;
        Ok(TrialOutcome::Done {
            crossing,
            balance,
            payload: (sample, model),
        })
    })?;
    let mut warnings = detection.warnings.clone();
    warnings.extend(
        trials
            .iter()
            .filter(|t| t.status == TrialStatus::SingleClass)
            .map(|t| format!("r = {} skipped: single-class sample", t.r)),
    );
    let fidelity = surrogate_accuracy(&model, &sample.points, &sample.labels);
    let explanation = Explanation {
        method: Method::DbaTab,
        feature_names: refs.feature_names.clone(),
        coefficients: model.coefficients.clone(),
        intercept: model.intercept,
        boundary_point: Some(detection.boundary_point.clone()),
        bisected_point: Some(detection.bisected_point.clone()),
        chosen_r: Some(params.r_grid[best]),
        sample_size: sample.points.len(),
        fidelity: Some(fidelity),
        r2: None,
        class_balance: class_balance(&sample.labels),
        warnings,
    };
    Ok(DbaOutcome {
        explanation,
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
    use crate::classifiers::LinearClassifier;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sign_x1() -> FnClassifier<impl Fn(&[f64]) -> Label + Send + Sync> {
        FnClassifier::new("sign(x1)", |x: &[f64]| Label::from_sign(x[0]))
    }

    fn refs_from(points: Vec<Vec<f64>>, f: &dyn Classifier<f64>) -> ReferenceSet<f64> {
        let d = points[0].len();
        ReferenceSet::from_points(points, Dataset::<f64>::default_names(d), f).unwrap()
    }

    #[test]
    fn grids() {
        let g: Vec<f64> = default_r_grid();
        assert_eq!(g.len(), 28);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[9], 1.0);
        assert_eq!(g[10], 1.5);
        assert_eq!(*g.last().unwrap(), 10.0);
        let m: Vec<f64> = moons_r_grid();
        assert_eq!(m.len(), 21);
        assert_eq!((m[0], m[13], m[14], *m.last().unwrap()), (0.2, 1.5, 2.0, 5.0));
    }

    #[test]
    fn nearest_opposite_orders_and_truncates() {
        let f = sign_x1();
        let refs = refs_from(
            vec![
                vec![-3.0, 0.0],
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![-2.0, 0.0],
                vec![0.5, 0.0],
            ],
            &f,
        );
        let n = nearest_opposite(&refs, &[0.5, 0.0], Label::Positive, 2).unwrap();
        assert_eq!(n.indices, vec![2, 3]);
        assert!(n.warning.is_none());
        let all = nearest_opposite(&refs, &[0.5, 0.0], Label::Positive, 10).unwrap();
        assert_eq!(all.indices, vec![2, 3, 0]);
        assert!(all.warning.is_some());
        let none = refs_from(vec![vec![1.0, 0.0]], &f);
        assert!(matches!(
            nearest_opposite(&none, &[0.5, 0.0], Label::Positive, 1),
            Err(Error::NoOppositePoints)
        ));
    }

    #[test]
    fn bisection_examples() {
        let f = sign_x1();
        let b = bisect_boundary(&f, &[-1.0, 0.0], &[1.0, 0.0], 1e-4, 60).unwrap();
        assert!(linalg::norm(&b.point) <= 1e-4);
        let g = FnClassifier::new("sum", |x: &[f64]| Label::from_sign(x[0] + x[1]));
        let b = bisect_boundary(&g, &[-2.0, 0.0], &[2.0, 2.0], 1e-4, 60).unwrap();
        let seg = (20.0f64).sqrt();
        assert!(linalg::distance(&b.point, &[-2.0 / 3.0, 2.0 / 3.0]) <= 1e-4 * seg);
        assert_ne!(g.label(&b.inside).unwrap(), g.label(&b.outside).unwrap());
        let one = bisect_boundary(&f, &[-1.0, 4.0], &[3.0, 0.0], 1e-4, 1).unwrap();
        assert_eq!(one.point, vec![1.0, 2.0]);
        assert!(matches!(
            bisect_boundary(&f, &[1.0, 0.0], &[2.0, 0.0], 1e-4, 60),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn detect_finds_normal_foot_when_available() {
        let f = LinearClassifier::new(vec![1.0, 1.0], -1.0).unwrap();
        // (0,0) is class -1 at distance 1/sqrt(2); (1,1) lies on its normal
        let refs = refs_from(vec![vec![1.0, 1.0], vec![3.0, -0.5], vec![-0.5, 4.0]], &f);
        let params = DbaParams {
            k: 3,
            ..DbaParams::default()
        };
        let det = detect(&refs, &[0.0, 0.0], &f, &params).unwrap();
        assert!((det.distance - f.distance_to_boundary(&[0.0, 0.0])).abs() < 1e-3);
        assert_eq!(det.bisected_index, 0);
        assert_eq!(det.candidates_examined, 3);
    }

    #[test]
    fn detect_with_single_candidate() {
        let f = sign_x1();
        let refs = refs_from(vec![vec![-1.0, 2.0], vec![-4.0, 0.0]], &f);
        let params = DbaParams {
            k: 1,
            ..DbaParams::default()
        };
        let det = detect(&refs, &[1.0, 0.0], &f, &params).unwrap();
        assert_eq!(det.bisected_index, 0);
        let lone = bisect_boundary(&f, &[1.0, 0.0], &[-1.0, 2.0], 1e-4, 60).unwrap();
        assert_eq!(det.boundary_point, lone.point);
    }

    #[test]
    fn simulation_weights_and_bounds() {
        let f = sign_x1();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x_b = [0.0, 1.0, -2.0];
        let x0 = [1.0, 1.0, -2.0];
        let s = simulate(&f, &x_b, &x0, 0.5, 200, &coordinate_basis(3), &mut rng).unwrap();
        assert_eq!(s.alpha, 0.5);
        assert_eq!(s.vertices.len(), 6);
        for (p, w) in s.points.iter().zip(&s.weights) {
            let total: f64 = w.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
            assert!(w.iter().all(|v| *v >= 0.0));
            for j in 0..3 {
                assert!((p[j] - x_b[j]).abs() <= s.alpha);
                assert!((p[j] - x_b[j] - s.alpha * (w[2 * j + 1] - w[2 * j])).abs() < 1e-12);
            }
        }
        assert!(matches!(
            simulate(&f, &x0, &x0, 0.5, 10, &coordinate_basis(3), &mut rng),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn distance_along_direction() {
        let f = LinearClassifier::new(vec![2.0f64, -1.0], 0.5).unwrap();
        let x0 = [1.0, 0.3];
        let c = boundary_distance_along(&f, &x0, &[2.0, -1.0], 3.0, 1e-6, 60).unwrap();
        assert!((c.distance().unwrap() - f.distance_to_boundary(&x0)).abs() < 1e-3);
        let parallel = boundary_distance_along(&f, &x0, &[1.0, 2.0], 3.0, 1e-6, 60).unwrap();
        assert_eq!(parallel, Crossing::NoCrossing);
        assert!(boundary_distance_along(&f, &x0, &[0.0, 0.0], 3.0, 1e-6, 60).is_err());
    }

    #[test]
    fn tuning_recovers_linear_normal() {
        let f = LinearClassifier::new(vec![0.8, -0.6, 0.3], 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let refs = refs_from(pts, &f);
        let params = DbaParams {
            k: 100,
            ..DbaParams::default()
        };
        let out = tune_and_explain(&refs, &[0.5, 0.5, 0.5], &f, &params, SeedStream::new(3)).unwrap();
        let cos = linalg::cosine(&out.explanation.coefficients, &f.weights).unwrap();
        assert!(cos >= 0.999, "cosine {cos}");
        let chosen = out.trials.iter().find(|t| Some(t.r) == out.explanation.chosen_r).unwrap();
        for t in &out.trials {
            if let Some(d) = t.distance {
                assert!(chosen.distance.unwrap() <= d);
            }
        }
    }

    #[test]
    fn single_class_radii_are_skipped() {
        // a thin class-+1 slab: large radii still straddle, tiny radii may not
        let f = FnClassifier::new("slab", |x: &[f64]| Label::from_sign(x[0]));
        let pts = vec![vec![-1.0, 0.0], vec![-2.0, 1.0], vec![1.0, 1.0]];
        let refs = refs_from(pts, &f);
        let params = DbaParams {
            k: 2,
            m: 50,
            r_grid: vec![1e-9, 0.5],
            ..DbaParams::default()
        };
        let out = tune_and_explain(&refs, &[1.0, 0.0], &f, &params, SeedStream::new(1)).unwrap();
        assert_eq!(out.trials[0].status, TrialStatus::SingleClass);
        assert_eq!(out.explanation.chosen_r, Some(0.5));
        assert!(!out.explanation.warnings.is_empty());
    }
}
