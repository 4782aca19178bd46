use dba_core::baselines::{lime_explain, lime_weights, LimeParams};
use dba_core::classifiers::LinearClassifier;
use dba_core::codec::{AffineCodec, IdentityCodec};
use dba_core::datagen::{ClassASide, Hyperplane};
use dba_core::dba_att::{label_stability, probability_stability, AttributeScaler};
use dba_core::dba_tab::{
    candidate_boundary_points, coordinate_basis, detect, nearest_opposite, simulate, tune_and_explain, TrialStatus,
};
use dba_core::evaluation::cosine_similarity_pm;
use dba_core::glm::{fit_logistic, fit_logistic_with, weighted_r2, LogisticOptions};
use dba_core::{Classifier, Dataset, DbaParams, Label, ReferenceSet, SeedStream, Standardizer};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gauss_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Ordinary least squares with intercept via Gaussian elimination with
/// partial pivoting on the normal equations.
fn ols(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len() + 1;
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &t) in x.iter().zip(y) {
        let z: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for i in 0..p {
            for j in 0..p {
                a[i][j] += z[i] * z[j];
            }
            a[i][p] += z[i] * t;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

fn linear_setup(d: usize, seed: u64) -> (LinearClassifier<f64>, ReferenceSet<f64>, Vec<f64>) {
    let mut rows = gauss_rows(301, d, seed);
    let x0 = rows.pop().unwrap();
    let w: Vec<f64> = (0..d).map(|j| 1.0 + j as f64 * 0.5).collect();
    let f = LinearClassifier::new(w, 0.1).unwrap();
    let refs = ReferenceSet::from_points(rows, Dataset::<f64>::default_names(d), &f).unwrap();
    (f, refs, x0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn standardize_round_trip(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..20),
                              probe in prop::collection::vec(-1e4f64..1e4, 3)) {
        prop_assume!((0..3).all(|j| rows.iter().any(|r| (r[j] - rows[0][j]).abs() > 1e-3)));
        let s = Standardizer::fit_rows(&rows, Dataset::<f64>::default_names(3)).unwrap();
        let back = s.invert(&s.apply(&probe).unwrap()).unwrap();
        for (a, b) in probe.iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r).unwrap()).collect();
        for j in 0..3 {
            let n = z.len() as f64;
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn simulated_points_stay_in_the_box(d in 1usize..12, r in 0.01f64..3.0, seed in any::<u64>()) {
        let x_b = gauss_rows(1, d, seed).remove(0);
        let x0: Vec<f64> = x_b.iter().map(|v| v + 0.5).collect();
        let f = LinearClassifier::new(vec![1.0; d], 0.0).unwrap();
        let s = simulate(&f, &x_b, &x0, r, 40, &coordinate_basis(d), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let alpha = r * (0.25 * d as f64).sqrt();
        prop_assert!((s.alpha - alpha).abs() <= 1e-12 * alpha.max(1.0));
        for (p, w) in s.points.iter().zip(&s.weights) {
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(w.iter().all(|v| *v >= 0.0));
            for (a, b) in p.iter().zip(&x_b) {
                prop_assert!((a - b).abs() <= alpha * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn detection_picks_the_closest_candidate(d in 2usize..6, k in 1usize..12, seed in any::<u64>()) {
        let (f, refs, x0) = linear_setup(d, seed);
        let params = DbaParams { k, ..DbaParams::default() };
        let det = detect(&refs, &x0, &f, &params).unwrap();
        let l0 = f.label(&x0).unwrap();
        let nb = nearest_opposite(&refs, &x0, l0, k).unwrap();
        let cands = candidate_boundary_points(&refs, &x0, l0, &f, &nb, &params).unwrap();
        prop_assert_eq!(cands.len(), nb.indices.len());
        for c in &cands {
            let dc = c.point.iter().zip(&x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            prop_assert!(det.distance <= dc);
        }
    }

    #[test]
    fn detection_is_rotation_invariant(angle in 0.0f64..std::f64::consts::TAU, seed in any::<u64>()) {
        let (c, s) = (angle.cos(), angle.sin());
        let rot = |v: &[f64]| vec![c * v[0] - s * v[1], s * v[0] + c * v[1]];
        let (f, refs, x0) = linear_setup(2, seed);
        let params = DbaParams::default();
        let a = detect(&refs, &x0, &f, &params).unwrap();
        let g = LinearClassifier::new(rot(&[1.0, 1.5]), 0.1).unwrap();
        let rotated: Vec<Vec<f64>> = refs.points.iter().map(|p| rot(p)).collect();
        let refs_r = ReferenceSet::from_points(rotated, Dataset::<f64>::default_names(2), &g).unwrap();
        let b = detect(&refs_r, &rot(&x0), &g, &params).unwrap();
        let seg = |det: &dba_core::dba_tab::BoundaryDetection<f64>, o: &[f64]| {
            det.bisected_point.iter().zip(o).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
        };
        let tol = 2.0 * params.bisection_tol * seg(&a, &x0).max(seg(&b, &rot(&x0)));
        prop_assert!((a.distance - b.distance).abs() <= tol, "{} vs {}", a.distance, b.distance);
    }

    #[test]
    fn lime_weights_translation_invariant(shift in prop::collection::vec(-50.0f64..50.0, 3), seed in any::<u64>(), sigma in 0.1f64..5.0) {
        let samples = gauss_rows(20, 3, seed);
        let x0 = vec![0.3, -0.2, 0.1];
        let moved: Vec<Vec<f64>> = samples.iter().map(|p| p.iter().zip(&shift).map(|(a, b)| a + b).collect()).collect();
        let x0m: Vec<f64> = x0.iter().zip(&shift).map(|(a, b)| a + b).collect();
        let w1 = lime_weights(&samples, &x0, sigma);
        let w2 = lime_weights(&moved, &x0m, sigma);
        for (a, b) in w1.iter().zip(&w2) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn cosines_are_ordered_and_scale_free(beta in prop::collection::vec(-5.0f64..5.0, 3),
                                          x0 in prop::collection::vec(-2.0f64..2.0, 3),
                                          scale in 1e-3f64..1e3) {
        prop_assume!(beta.iter().map(|b| b * b).sum::<f64>() > 1e-6);
        let planes = vec![
            Hyperplane { normal: vec![1.0, 0.5, 0.0], threshold: 0.2, class_a_side: ClassASide::Below },
            Hyperplane { normal: vec![0.0, -1.0, 2.0], threshold: -0.4, class_a_side: ClassASide::Above },
        ];
        let (m, p) = cosine_similarity_pm(&beta, &x0, &planes).unwrap();
        prop_assert!(m <= p + 1e-15);
        let scaled: Vec<f64> = beta.iter().map(|b| b * scale).collect();
        let (m2, p2) = cosine_similarity_pm(&scaled, &x0, &planes).unwrap();
        prop_assert!((m - m2).abs() < 1e-12 && (p - p2).abs() < 1e-12);
    }

    #[test]
    fn attribute_scaler_standardizes(seed in any::<u64>(), n in 5usize..60) {
        let rows: Vec<Vec<f64>> = gauss_rows(n, 3, seed).into_iter().map(|r| r.iter().map(|v| 1.0 / (1.0 + (-v).exp())).collect()).collect();
        let names: Vec<String> = (0..3).map(|j| format!("a{j}")).collect();
        let s = AttributeScaler::fit(&rows, &names).unwrap();
        let z: Vec<Vec<f64>> = rows.iter().map(|r| s.apply(r)).collect();
        for j in 0..s.names.len() {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / n as f64;
            let sd = (z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
            prop_assert!(mean.abs() < 1e-9 && (sd - 1.0).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn penalized_logistic_ignores_row_order_and_duplication(seed in any::<u64>(), lambda in 0.01f64..2.0) {
        let x = gauss_rows(40, 3, seed);
        let y: Vec<Label> = x.iter().enumerate().map(|(i, r)| Label::from_sign(r[0] - 0.5 * r[1] + if i % 5 == 0 { -2.0 } else { 0.3 })).collect();
        prop_assume!(y.iter().any(|l| l.is_positive()) && y.iter().any(|l| !l.is_positive()));
        let base = fit_logistic(&x, &y, lambda, None).unwrap();
        let order: Vec<usize> = (0..x.len()).rev().collect();
        let xp: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
        let yp: Vec<Label> = order.iter().map(|&i| y[i]).collect();
        let perm = fit_logistic(&xp, &yp, lambda, None).unwrap();
        let xd: Vec<Vec<f64>> = x.iter().chain(&x).cloned().collect();
        let yd: Vec<Label> = y.iter().chain(&y).copied().collect();
        let half = vec![0.5; xd.len()];
        let dup = fit_logistic(&xd, &yd, lambda, Some(&half)).unwrap();
        for other in [&perm, &dup] {
            prop_assert!((base.intercept - other.intercept).abs() < 1e-8);
            for (a, b) in base.coefficients.iter().zip(&other.coefficients) {
                prop_assert!((a - b).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn uniform_weight_lime_is_ols(seed in any::<u64>()) {
        let w = gauss_rows(1, 3, seed).remove(0);
        let f = LinearClassifier::new(w, 0.2).unwrap();
        let stats = Standardizer::from_parts(Dataset::<f64>::default_names(3), vec![0.0; 3], vec![1.0; 3]).unwrap();
        let params = LimeParams { m: 200, sigma: Some(1e7) };
        let x0 = [0.1, 0.0, -0.1];
        let out = lime_explain(&stats, &x0, &f, &params, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let y: Vec<f64> = out.samples.iter().map(|p| f.probability(p).unwrap().unwrap()).collect();
        let beta = ols(&out.samples, &y);
        prop_assert!((out.model.intercept - beta[0]).abs() < 1e-8);
        for (a, b) in out.model.coefficients.iter().zip(&beta[1..]) {
            prop_assert!((a - b).abs() < 1e-8);
        }
        let r2 = out.explanation.r2.unwrap();
        prop_assert!(r2 <= 1.0);
    }

    #[test]
    fn r2_never_exceeds_one(seed in any::<u64>(), sigma in 0.2f64..4.0) {
        let f = dba_core::classifiers::KernelSmoother::new(gauss_rows(30, 2, seed), &(0..30).map(|i| if i % 3 == 0 { Label::Positive } else { Label::Negative }).collect::<Vec<_>>(), 0.5).unwrap();
        let stats = Standardizer::from_parts(Dataset::<f64>::default_names(2), vec![0.0; 2], vec![1.0; 2]).unwrap();
        let out = lime_explain(&stats, &[0.0, 0.0], &f, &LimeParams { m: 100, sigma: Some(sigma) }, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(out.explanation.r2.unwrap() <= 1.0);
        let r2 = weighted_r2(&out.model, &out.samples, &out.samples.iter().map(|p| f.prob(p).unwrap()).collect::<Vec<_>>(), &out.weights).unwrap();
        prop_assert!(r2 <= 1.0);
    }

    #[test]
    fn chosen_radius_has_the_smallest_distance(seed in any::<u64>()) {
        let (f, refs, x0) = linear_setup(3, seed);
        let params = DbaParams { m: 200, ..DbaParams::default() };
        let out = tune_and_explain(&refs, &x0, &f, &params, SeedStream::new(seed)).unwrap();
        let chosen = out.explanation.chosen_r.unwrap();
        let best = out.trials.iter().find(|t| t.r == chosen).unwrap().distance.unwrap();
        for t in out.trials.iter().filter(|t| t.status == TrialStatus::Ok) {
            prop_assert!(best <= t.distance.unwrap());
        }
        prop_assert!(out.explanation.fidelity.unwrap() >= 0.5);
    }
}

#[test]
fn separable_direction_stabilizes() {
    let x = gauss_rows(60, 3, 11);
    let y: Vec<Label> = x.iter().map(|r| Label::from_sign(2.0 * r[0] - r[2] + 0.2)).collect();
    let fit = |cap: usize| {
        let opts = LogisticOptions { max_iter: cap, tol: 0.0, ..LogisticOptions::default() };
        fit_logistic_with(&x, &y, None, &opts).unwrap()
    };
    let unit = |v: &[f64]| {
        let n = dot(v, v).sqrt();
        v.iter().map(|a| a / n).collect::<Vec<f64>>()
    };
    let (a, b) = (fit(200), fit(400));
    let (ua, ub) = (unit(&a.coefficients), unit(&b.coefficients));
    let diff = ua.iter().zip(&ub).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt();
    assert!(diff < 1e-3, "direction moved by {diff}");
}

#[test]
fn identity_codec_is_perfectly_stable() {
    let f = LinearClassifier::new(vec![1.0, -2.0], 0.3).unwrap();
    let pts = gauss_rows(100, 2, 5);
    let id = IdentityCodec::new(2);
    assert_eq!(label_stability(&id, &f, &pts).unwrap(), 1.0);
    assert_eq!(probability_stability(&id, &f, &pts).unwrap(), 0.0);
}

#[test]
fn lossy_codec_reports_partial_stability() {
    let f = LinearClassifier::new(vec![0.0, 1.0], 0.0).unwrap();
    let mut pts = gauss_rows(200, 2, 6);
    for p in &mut pts {
        p[0] *= 10.0;
    }
    let codec = AffineCodec::fit(&pts, 1).unwrap();
    let s = label_stability(&codec, &f, &pts).unwrap();
    assert!(s < 1.0 && s > 0.0, "stability {s}");
    let ps = probability_stability(&codec, &f, &pts).unwrap();
    let manual = pts
        .iter()
        .map(|p| {
            let z = dba_core::Codec::encode(&codec, p).unwrap();
            let q = dba_core::Codec::decode(&codec, &z).unwrap();
            (f.probability(p).unwrap().unwrap() - f.probability(&q).unwrap().unwrap()).abs()
        })
        .sum::<f64>()
        / pts.len() as f64;
    assert!((ps - manual).abs() < 1e-12);
}

#[test]
fn single_precision_pipeline_runs() {
    let rows: Vec<Vec<f32>> = gauss_rows(200, 2, 3)
        .into_iter()
        .map(|r| r.into_iter().map(|v| v as f32).collect())
        .collect();
    let f = LinearClassifier::<f32>::new(vec![1.0, 1.0], 0.0).unwrap();
    let refs = ReferenceSet::from_points(rows, Dataset::<f32>::default_names(2), &f).unwrap();
    let params = DbaParams::<f32> { m: 200, ..DbaParams::default() };
    let out = tune_and_explain(&refs, &[0.4f32, 0.3], &f, &params, SeedStream::new(1)).unwrap();
    let c = &out.explanation.coefficients;
    let cos = (c[0] + c[1]) / (2.0f32.sqrt() * (c[0] * c[0] + c[1] * c[1]).sqrt());
    assert!(cos.abs() > 0.99, "cosine {cos}");
}

#[test]
fn airis_annotators_read_their_own_feature() {
    let setup = dba_core::experiments::airis_tab::<f64>(2000, 0, 7).unwrap();
    let ann = &setup.train_annotations;
    for (j, name) in ann.names.iter().enumerate() {
        let a = dba_core::dba_att::train_annotator(name, &setup.train.points, &ann.columns[j], 0.1).unwrap();
        let cos = a.theta[j].abs() / dot(&a.theta, &a.theta).sqrt();
        assert!(cos >= 0.95, "{name}: cosine {cos}");
    }
}
