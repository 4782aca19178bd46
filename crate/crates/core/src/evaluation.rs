//! Evaluation statistics for explanations and the per-run comparison report.

use std::fmt::Write as _;

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::baselines::{lime_att_explain, lime_explain, LimeParams};
use crate::classifier::{map_indexed, probability_or_indicator, Classifier};
use crate::codec::{Codec, LatentClassifier};
use crate::data::{Dataset, Label};
use crate::datagen::Hyperplane;
use crate::dba_att::{check_label_stable, explain_att, latent_reference_set, Annotator, AttributeExplanation};
use crate::dba_tab::{
    boundary_distance_along, detect, explain_from_detection, BoundaryDetection, Crossing, DbaParams, RTrial,
    ReferenceSet, SimulationSample,
};
use crate::error::{Error, Result};
use crate::explanation::{Explanation, Method};
use crate::glm::LinearModel;
use crate::linalg;
use crate::rng::SeedStream;
use crate::scalar::Scalar;
use crate::standardize::Standardizer;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Share of `+1` labels.
pub fn class_balance<F: Scalar>(labels: &[Label]) -> F {
    if labels.is_empty() {
        return F::zero();
    }
    F::from_usize_lossy(labels.iter().filter(|l| l.is_positive()).count()) / F::from_usize_lossy(labels.len())
}

/// Share of rows where the model's sign matches the label.
pub fn surrogate_accuracy<F: Scalar>(model: &LinearModel<F>, x: &[Vec<F>], labels: &[Label]) -> F {
    if x.is_empty() {
        return F::zero();
    }
    let hits = x.iter().zip(labels).filter(|(p, l)| model.predict_label(p) == **l).count();
    F::from_usize_lossy(hits) / F::from_usize_lossy(x.len())
}

/// Sign accuracy of a tabular surrogate on a simulation sample.
pub fn dba_fidelity<F: Scalar>(expl: &Explanation<F>, s: &SimulationSample<F>) -> Result<F> {
    if s.points.is_empty() {
        return Err(Error::InvalidArgument("empty sample".into()));
    }
    let hits = s
        .points
        .iter()
        .zip(&s.labels)
        .filter(|(p, l)| Label::from_sign(expl.decision(p)) == **l)
        .count();
    Ok(F::from_usize_lossy(hits) / F::from_usize_lossy(s.points.len()))
}

/// `(cos-, cos+)`: `|cosine|` of `beta` with the normal of the hyperplane
/// nearest to `x0`, and the largest `|cosine|` over all hyperplanes.
pub fn cosine_similarity_pm<F: Scalar>(beta: &[F], x0: &[F], hyperplanes: &[Hyperplane<F>]) -> Result<(F, F)> {
    if hyperplanes.is_empty() {
        return Err(Error::InvalidArgument("no hyperplanes given".into()));
    }
    let mut nearest = (F::infinity(), F::zero());
    let mut best = F::zero();
    for h in hyperplanes {
        let c = linalg::cosine(beta, &h.normal)
            .ok_or_else(|| Error::InvalidArgument("cosine of a zero vector".into()))?
            .abs();
        let d = h.distance(x0);
        if d < nearest.0 {
            nearest = (d, c);
        }
        if c > best {
            best = c;
        }
    }
    Ok((nearest.1, best))
}

/// Probe lengths `gamma0, 2 gamma0, ...` up to `max_factor * gamma0`, with
/// `gamma0 = ||x0 - x_b|| + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct GammaPolicy<F: Scalar> {
    pub offset: F,
    pub max_factor: F,
}

impl<F: Scalar> Default for GammaPolicy<F> {
    fn default() -> Self {
        GammaPolicy {
            offset: F::lit(0.1),
            max_factor: F::lit(8.0),
        }
    }
}

/// Walks from `origin` along `direction` with growing probe lengths until the
/// label switches. Returns the crossing and the last probe length tried.
pub fn probe_with_policy<F: Scalar>(
    f: &dyn Classifier<F>,
    origin: &[F],
    direction: &[F],
    gamma0: F,
    policy: &GammaPolicy<F>,
    tol: F,
    max_iter: usize,
) -> Result<(Crossing<F>, F)> {
    let cap = gamma0 * policy.max_factor;
    let mut gamma = gamma0;
    loop {
        let c = boundary_distance_along(f, origin, direction, gamma, tol, max_iter)?;
        let next = gamma + gamma;
        if c != Crossing::NoCrossing || next > cap * F::lit(1.0 + 1e-12) {
            return Ok((c, gamma));
        }
        gamma = next;
    }
}

/// `c(origin - f(origin) t u)` for `t = 0, step, ..., max_distance`, with `u`
/// the unit direction.
pub fn probability_curve<F: Scalar>(
    f: &dyn Classifier<F>,
    origin: &[F],
    direction: &[F],
    step: F,
    max_distance: F,
) -> Result<Vec<(F, F)>> {
    let n = linalg::norm(direction);
    if !(n > F::zero()) || !(step > F::zero()) {
        return Err(Error::InvalidArgument("curve needs a non-zero direction and step > 0".into()));
    }
    let sign = -f.label(origin)?.sign::<F>();
    let steps = (max_distance / step).floor().to_usize().unwrap_or(0);
    (0..=steps)
        .map(|k| {
            let t = step * F::from_usize_lossy(k);
            let x = linalg::axpy(origin, sign * t / n, direction);
            Ok((t, probability_or_indicator(f, &x)?))
        })
        .collect()
}

/// Codec and annotators for the attribute-based methods.
pub struct AttributeSetup<'a, F: Scalar> {
    pub codec: &'a dyn Codec<F>,
    pub annotators: Vec<Annotator<F>>,
}

/// The black box and the data the methods are run against.
pub struct EvalSetup<'a, F: Scalar> {
    pub classifier: &'a dyn Classifier<F>,
    pub train: &'a Dataset<F>,
    /// Ground-truth hyperplanes in the explanation space, when known.
    pub hyperplanes: Option<Vec<Hyperplane<F>>>,
    pub attributes: Option<AttributeSetup<'a, F>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", default, deny_unknown_fields)]
pub struct EvalConfig<F: Scalar> {
    pub methods: Vec<Method>,
    pub dba: DbaParams<F>,
    pub lime: LimeParams<F>,
    pub gamma: GammaPolicy<F>,
    pub seed: u64,
    /// Admit only points whose label survives the codec round trip.
    pub label_stable_only: bool,
}

impl<F: Scalar> Default for EvalConfig<F> {
    fn default() -> Self {
        EvalConfig {
            methods: vec![Method::DbaTab, Method::LimeTab],
            dba: DbaParams::default(),
            lime: LimeParams::default(),
            gamma: GammaPolicy::default(),
            seed: 0,
            label_stable_only: false,
        }
    }
}

/// Reference sets and sampling statistics shared by every explained point.
pub struct Prepared<'a, F: Scalar> {
    pub setup: &'a EvalSetup<'a, F>,
    pub refs: ReferenceSet<F>,
    pub latent_refs: Option<ReferenceSet<F>>,
    pub train_stats: Standardizer<F>,
    pub latent_stats: Option<Standardizer<F>>,
}

impl<'a, F: Scalar> Prepared<'a, F> {
    pub fn new(setup: &'a EvalSetup<'a, F>) -> Result<Self> {
        let refs = ReferenceSet::from_dataset(setup.train, setup.classifier)?;
        let train_stats = Standardizer::fit(setup.train)?;
        let (latent_refs, latent_stats) = match &setup.attributes {
            Some(a) => {
                let lr = latent_reference_set(a.codec, setup.classifier, &setup.train.points)?;
                let stats = Standardizer::fit_rows(&lr.points, lr.feature_names.clone())?;
                (Some(lr), Some(stats))
            }
            None => (None, None),
        };
        Ok(Prepared {
            setup,
            refs,
            latent_refs,
            train_stats,
            latent_stats,
        })
    }

    fn attributes(&self) -> Result<(&AttributeSetup<'a, F>, &ReferenceSet<F>, &Standardizer<F>)> {
        match (&self.setup.attributes, &self.latent_refs, &self.latent_stats) {
            (Some(a), Some(r), Some(s)) => Ok((a, r, s)),
            _ => Err(Error::Precondition(
                "attribute-based methods need a codec and annotators".into(),
            )),
        }
    }

    /// Detection in the space `method` explains in.
    pub fn detection(&self, method: Method, x0: &[F], params: &DbaParams<F>) -> Result<(Vec<F>, BoundaryDetection<F>)> {
        if method.is_attribute_based() {
            let (a, refs, _) = self.attributes()?;
            let z0 = a.codec.encode(x0)?;
            let g = LatentClassifier {
                codec: a.codec,
                inner: self.setup.classifier,
            };
            let det = detect(refs, &z0, &g, params)?;
            Ok((z0, det))
        } else {
            Ok((x0.to_vec(), detect(&self.refs, x0, self.setup.classifier, params)?))
        }
    }
}

/// One method applied to one point.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MethodRun<F: Scalar> {
    pub method: Method,
    pub explanation: Explanation<F>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attribute: Option<AttributeExplanation<F>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<BoundaryDetection<F>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trials: Vec<RTrial<F>>,
    /// Where boundary probes start: `x0`, or `encode(x0)` for attribute methods.
    pub origin: Vec<F>,
    /// Probe direction in the same space as `origin`.
    pub direction: Vec<F>,
}

/// Runs `method` on `x0`. `detection` may be passed in to avoid detecting
/// twice; it must live in the method's explanation space.
pub fn run_method<F: Scalar>(
    prep: &Prepared<'_, F>,
    method: Method,
    x0: &[F],
    dba: &DbaParams<F>,
    lime: &LimeParams<F>,
    detection: Option<BoundaryDetection<F>>,
    seed: SeedStream,
) -> Result<MethodRun<F>> {
    let f = prep.setup.classifier;
    let stream = seed.child(method.as_str());
    match method {
        Method::DbaTab => {
            dba.validate(x0.len())?;
            let det = match detection {
                Some(d) => d,
                None => detect(&prep.refs, x0, f, dba)?,
            };
            let out = explain_from_detection(&prep.refs, det, x0, f, dba, stream)?;
            Ok(MethodRun {
                method,
                direction: out.explanation.coefficients.clone(),
                explanation: out.explanation,
                attribute: None,
                detection: Some(out.detection),
                trials: out.trials,
                origin: x0.to_vec(),
            })
        }
        Method::LimeTab => {
            let out = lime_explain(&prep.train_stats, x0, f, lime, &mut stream.child("lime").rng())?;
            Ok(MethodRun {
                method,
                direction: out.explanation.coefficients.clone(),
                explanation: out.explanation,
                attribute: None,
                detection: None,
                trials: vec![],
                origin: x0.to_vec(),
            })
        }
        Method::DbaAtt => {
            let (a, refs, _) = prep.attributes()?;
            let out = explain_att(refs, x0, f, a.codec, &a.annotators, dba, stream)?;
            Ok(MethodRun {
                method,
                explanation: out.explanation.explanation.clone(),
                origin: a.codec.encode(x0)?,
                direction: out.explanation.latent_direction.clone(),
                attribute: Some(out.explanation),
                detection: Some(out.detection),
                trials: out.trials,
            })
        }
        Method::LimeAtt => {
            let (a, _, stats) = prep.attributes()?;
            let out = lime_att_explain(stats, x0, f, a.codec, &a.annotators, lime, &mut stream.child("lime").rng())?;
            Ok(MethodRun {
                method,
                explanation: out.explanation.explanation.clone(),
                origin: a.codec.encode(x0)?,
                direction: out.explanation.latent_direction.clone(),
                attribute: Some(out.explanation),
                detection: None,
                trials: vec![],
            })
        }
    }
}

/// Metrics of one method on one test point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PointRecord<F: Scalar> {
    /// Row index in the test set.
    pub point: usize,
    pub method: Method,
    pub fidelity: Option<F>,
    pub r2: Option<F>,
    pub class_balance: Option<F>,
    pub distance: Option<F>,
    pub failed_to_cross: bool,
    pub gamma: Option<F>,
    pub cosine_minus: Option<F>,
    pub cosine_plus: Option<F>,
    pub chosen_r: Option<F>,
    pub coefficients: Vec<F>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    #[serde(skip)]
    pub origin: Vec<F>,
    #[serde(skip)]
    pub direction: Vec<F>,
}

/// Means over one method's records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct MethodAggregate<F: Scalar> {
    pub method: Method,
    pub points: usize,
    pub fidelity: Option<F>,
    pub r2: Option<F>,
    pub class_balance: Option<F>,
    /// Over points where no compared method failed to cross.
    pub distance: Option<F>,
    pub distance_points: usize,
    pub failure_percent: F,
    pub cosine_minus: Option<F>,
    pub cosine_plus: Option<F>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvaluationReport<F: Scalar> {
    pub schema_version: u32,
    pub config: EvalConfig<F>,
    /// Test-set rows evaluated.
    pub points: Vec<usize>,
    /// Test-set rows refused by the label-stability filter.
    pub excluded: Vec<usize>,
    pub records: Vec<PointRecord<F>>,
    pub aggregates: Vec<MethodAggregate<F>>,
}

impl<F: Scalar> EvaluationReport<F> {
    pub fn aggregate(&self, method: Method) -> Option<&MethodAggregate<F>> {
        self.aggregates.iter().find(|a| a.method == method)
    }
}

/// `count` distinct test rows, sorted, drawn from the evaluation stream.
pub fn select_points(n: usize, count: usize, seed: u64) -> Vec<usize> {
    let count = count.min(n);
    let mut idx = sample(&mut SeedStream::new(seed).child("evaluation").rng(), n, count).into_vec();
    idx.sort_unstable();
    idx
}

fn mean<F: Scalar>(values: impl Iterator<Item = F>) -> Option<F> {
    let v: Vec<F> = values.collect();
    (!v.is_empty()).then(|| v.iter().copied().sum::<F>() / F::from_usize_lossy(v.len()))
}

/// Recomputes the per-method means from the records.
pub fn aggregate<F: Scalar>(methods: &[Method], records: &[PointRecord<F>]) -> Vec<MethodAggregate<F>> {
    let mut points: Vec<usize> = records.iter().map(|r| r.point).collect();
    points.dedup();
    let clean: Vec<usize> = points
        .iter()
        .copied()
        .filter(|p| {
            records
                .iter()
                .filter(|r| r.point == *p && methods.contains(&r.method))
                .all(|r| !r.failed_to_cross)
        })
        .collect();
    methods
        .iter()
        .map(|&m| {
            let rs: Vec<&PointRecord<F>> = records.iter().filter(|r| r.method == m).collect();
            let failures = rs.iter().filter(|r| r.failed_to_cross).count();
            let dist: Vec<F> = rs
                .iter()
                .filter(|r| clean.contains(&r.point))
                .filter_map(|r| r.distance)
                .collect();
            MethodAggregate {
                method: m,
                points: rs.len(),
                fidelity: mean(rs.iter().filter_map(|r| r.fidelity)),
                r2: mean(rs.iter().filter_map(|r| r.r2)),
                class_balance: mean(rs.iter().filter_map(|r| r.class_balance)),
                distance_points: dist.len(),
                distance: mean(dist.into_iter()),
                failure_percent: if rs.is_empty() {
                    F::zero()
                } else {
                    F::lit(100.0) * F::from_usize_lossy(failures) / F::from_usize_lossy(rs.len())
                },
                cosine_minus: mean(rs.iter().filter_map(|r| r.cosine_minus)),
                cosine_plus: mean(rs.iter().filter_map(|r| r.cosine_plus)),
            }
        })
        .collect()
}

fn failed_record<F: Scalar>(point: usize, method: Method, error: String) -> PointRecord<F> {
    PointRecord {
        point,
        method,
        fidelity: None,
        r2: None,
        class_balance: None,
        distance: None,
        failed_to_cross: true,
        gamma: None,
        cosine_minus: None,
        cosine_plus: None,
        chosen_r: None,
        coefficients: vec![],
        error: Some(error),
        origin: vec![],
        direction: vec![],
    }
}

fn evaluate_point<F: Scalar>(
    prep: &Prepared<'_, F>,
    cfg: &EvalConfig<F>,
    point: usize,
    x0: &[F],
) -> Result<Vec<PointRecord<F>>> {
    let f = prep.setup.classifier;
    let seed = SeedStream::new(cfg.seed).child("points").index(point as u64);
    let mut tab_det: Option<Result<(Vec<F>, BoundaryDetection<F>)>> = None;
    let mut att_det: Option<Result<(Vec<F>, BoundaryDetection<F>)>> = None;
    let mut out = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let slot = if method.is_attribute_based() {
            &mut att_det
        } else {
            &mut tab_det
        };
        let det = slot.get_or_insert_with(|| prep.detection(method, x0, &cfg.dba));
        let (origin, det) = match det {
            Ok(d) => d.clone(),
            Err(e) => {
                out.push(failed_record(point, method, format!("detection: {e}")));
                continue;
            }
        };
        let reuse = (method == Method::DbaTab).then(|| det.clone());
        let run = match run_method(prep, method, x0, &cfg.dba, &cfg.lime, reuse, seed) {
            Ok(r) => r,
            Err(e @ Error::Subprocess(_)) => return Err(e),
            Err(e) => {
                out.push(failed_record(point, method, e.to_string()));
                continue;
            }
        };
        let probe_f: Box<dyn Classifier<F> + '_> = match (&prep.setup.attributes, method.is_attribute_based()) {
            (Some(a), true) => Box::new(LatentClassifier {
                codec: a.codec,
                inner: f,
            }),
            _ => Box::new(BorrowedClassifier(f)),
        };
        let gamma0 = linalg::distance(&origin, &det.boundary_point) + cfg.gamma.offset;
        let (crossing, gamma) = if run.direction.iter().all(|v| *v == F::zero()) {
            (Crossing::NoCrossing, gamma0)
        } else {
            probe_with_policy(
                probe_f.as_ref(),
                &run.origin,
                &run.direction,
                gamma0,
                &cfg.gamma,
                cfg.dba.bisection_tol,
                cfg.dba.bisection_max_iter,
            )?
        };
        let cos = match &prep.setup.hyperplanes {
            Some(h) if h.first().is_some_and(|p| p.normal.len() == run.direction.len()) => {
                cosine_similarity_pm(&run.direction, &run.origin, h).ok()
            }
            _ => None,
        };
        out.push(PointRecord {
            point,
            method,
            fidelity: run.explanation.fidelity,
            r2: run.explanation.r2,
            class_balance: Some(run.explanation.class_balance),
            distance: crossing.distance(),
            failed_to_cross: crossing == Crossing::NoCrossing,
            gamma: Some(gamma),
            cosine_minus: cos.map(|c| c.0),
            cosine_plus: cos.map(|c| c.1),
            chosen_r: run.explanation.chosen_r,
            coefficients: run.explanation.coefficients.clone(),
            error: None,
            origin: run.origin,
            direction: run.direction,
        });
    }
    Ok(out)
}

struct BorrowedClassifier<'a, F: Scalar>(&'a dyn Classifier<F>);

impl<F: Scalar> Classifier<F> for BorrowedClassifier<'_, F> {
    fn label(&self, x: &[F]) -> Result<Label> {
        self.0.label(x)
    }
    fn probability(&self, x: &[F]) -> Result<Option<F>> {
        self.0.probability(x)
    }
    fn probability_consistent(&self) -> bool {
        self.0.probability_consistent()
    }
    fn concurrency(&self) -> crate::classifier::Concurrency {
        self.0.concurrency()
    }
    fn describe(&self) -> String {
        self.0.describe()
    }
}

/// Runs every configured method on the selected test rows.
pub fn evaluate_run<F: Scalar>(
    prep: &Prepared<'_, F>,
    test: &Dataset<F>,
    points: &[usize],
    cfg: &EvalConfig<F>,
) -> Result<EvaluationReport<F>> {
    if let Some(&p) = points.iter().find(|&&p| p >= test.n()) {
        return Err(Error::InvalidArgument(format!("test point {p} out of range")));
    }
    let mut admitted = Vec::with_capacity(points.len());
    let mut excluded = vec![];
    for &p in points {
        let stable = match (&prep.setup.attributes, cfg.label_stable_only) {
            (Some(a), true) => match check_label_stable(a.codec, prep.setup.classifier, &test.points[p]) {
                Ok(_) => true,
                Err(Error::LabelUnstable { .. }) => false,
                Err(e) => return Err(e),
            },
            _ => true,
        };
        if stable {
            admitted.push(p);
        } else {
            excluded.push(p);
        }
    }
    if admitted.is_empty() {
        return Err(Error::Precondition("no admissible test points".into()));
    }
    let mut mode = prep.setup.classifier.concurrency();
    if let Some(a) = &prep.setup.attributes {
        mode = mode.and(a.codec.concurrency());
    }
    let per_point = map_indexed(admitted.len(), mode, |i| {
        evaluate_point(prep, cfg, admitted[i], &test.points[admitted[i]])
    });
    let mut records = Vec::with_capacity(admitted.len() * cfg.methods.len());
    for r in per_point {
        records.extend(r?);
    }
    Ok(EvaluationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        aggregates: aggregate(&cfg.methods, &records),
        config: cfg.clone(),
        points: admitted,
        excluded,
        records,
    })
}

pub const TABLE_HEADERS: [&str; 8] = [
    "Method",
    "DBA Fidelity",
    "LIME R2-Fidelity",
    "Class Balance",
    "Decision Boundary Distance",
    "Failure to Cross",
    "Cosine Similarity-",
    "Cosine Similarity+",
];

/// The comparison table as CSV: percentages for shares, three decimals for
/// cosines and distances, `-` where a metric does not apply.
pub fn report_table_csv<F: Scalar>(report: &EvaluationReport<F>) -> String {
    let pct = |v: Option<F>| v.map_or("-".to_string(), |x| format!("{:.1}%", x.as_f64() * 100.0));
    let num = |v: Option<F>| v.map_or("-".to_string(), |x| format!("{:.3}", x.as_f64()));
    let mut s = TABLE_HEADERS.join(",");
    s.push('\n');
    for a in &report.aggregates {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:.1}%,{},{}",
            a.method,
            pct(a.fidelity),
            pct(a.r2),
            pct(a.class_balance),
            num(a.distance),
            a.failure_percent.as_f64(),
            num(a.cosine_minus),
            num(a.cosine_plus)
        );
    }
    s
}

/// Probability-along-direction curves for every successful record, as CSV
/// `method,point,t,probability`.
pub fn curves_csv<F: Scalar>(
    prep: &Prepared<'_, F>,
    report: &EvaluationReport<F>,
    step: F,
    max_distance: F,
) -> Result<String> {
    let mut s = String::from("method,point,t,probability\n");
    for r in report.records.iter().filter(|r| r.error.is_none()) {
        if r.direction.iter().all(|v| *v == F::zero()) {
            continue;
        }
        let curve = match (&prep.setup.attributes, r.method.is_attribute_based()) {
            (Some(a), true) => {
                let g = LatentClassifier {
                    codec: a.codec,
                    inner: prep.setup.classifier,
                };
                probability_curve(&g, &r.origin, &r.direction, step, max_distance)?
            }
            _ => probability_curve(prep.setup.classifier, &r.origin, &r.direction, step, max_distance)?,
        };
        for (t, p) in curve {
            let _ = writeln!(s, "{},{},{},{}", r.method, r.point, t, p);
        }
    }
    Ok(s)
}
