//! Logistic regression (damped Newton / IRLS) and weighted least squares.
//!
//! Features are expected to be standardized by the caller. The intercept is
//! never penalized.

use serde::{Deserialize, Serialize};

use crate::classifiers::sigmoid;
use crate::data::Label;
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::Scalar;

/// Ridge applied when Newton steps stop being finite on an unpenalized fit.
const MICRO_RIDGE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearModel<F: Scalar> {
    pub coefficients: Vec<F>,
    pub intercept: F,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: F,
    /// The unpenalized problem had perfectly separated classes, so no finite
    /// minimizer exists; only the direction of `coefficients` is meaningful.
    #[serde(default)]
    pub separable: bool,
    /// Diagonal ridge added to make the linear system solvable (0 if none).
    #[serde(default)]
    pub ridge: F,
}

impl<F: Scalar> LinearModel<F> {
    pub fn decision(&self, x: &[F]) -> F {
        linalg::dot(&self.coefficients, x) + self.intercept
    }

    pub fn predict_label(&self, x: &[F]) -> Label {
        Label::from_sign(self.decision(x))
    }
}

#[derive(Clone, Debug)]
pub struct LogisticOptions<F: Scalar> {
    pub lambda: F,
    pub max_iter: usize,
    pub tol: F,
}

impl<F: Scalar> Default for LogisticOptions<F> {
    fn default() -> Self {
        LogisticOptions {
            lambda: F::zero(),
            max_iter: 200,
            tol: F::lit(F::GRADIENT_TOLERANCE),
        }
    }
}

impl<F: Scalar> LogisticOptions<F> {
    pub fn penalized(lambda: F) -> Self {
        LogisticOptions {
            lambda,
            ..Default::default()
        }
    }
}

/// `sum_i w_i log(1 + exp(-y_i (x_i'beta + beta_0))) + lambda/2 ||beta||^2`.
///
/// Parameters are laid out as `[beta_0, beta_1, ..., beta_d]`.
pub struct LogisticProblem<'a, F: Scalar> {
    pub x: &'a [Vec<F>],
    pub y: &'a [Label],
    pub weights: Option<&'a [F]>,
    pub lambda: F,
}

fn softplus<F: Scalar>(t: F) -> F {
    t.max(F::zero()) + (-t.abs()).exp().ln_1p()
}

impl<F: Scalar> LogisticProblem<'_, F> {
    fn weight(&self, i: usize) -> F {
        self.weights.map_or(F::one(), |w| w[i])
    }

    fn eta(&self, i: usize, params: &[F]) -> F {
        params[0] + linalg::dot(&self.x[i], &params[1..])
    }

    pub fn objective(&self, params: &[F]) -> F {
        let loss: F = (0..self.x.len())
            .map(|i| {
                let m = self.y[i].sign::<F>() * self.eta(i, params);
                self.weight(i) * softplus(-m)
            })
            .sum();
        let pen: F = params[1..].iter().map(|&b| b * b).sum();
        loss + F::lit(0.5) * self.lambda * pen
    }

    pub fn gradient(&self, params: &[F]) -> Vec<F> {
        let mut g = vec![F::zero(); params.len()];
        for i in 0..self.x.len() {
            let y = self.y[i].sign::<F>();
            // d/d eta of softplus(-y eta) = -y sigmoid(-y eta)
            let r = -y * sigmoid(-y * self.eta(i, params)) * self.weight(i);
            g[0] = g[0] + r;
            for (gj, &xj) in g[1..].iter_mut().zip(&self.x[i]) {
                *gj = *gj + r * xj;
            }
        }
        for j in 1..params.len() {
            g[j] = g[j] + self.lambda * params[j];
        }
        g
    }

    /// Row-major `(d+1) x (d+1)` Hessian.
    pub fn hessian(&self, params: &[F]) -> Vec<F> {
        let p = params.len();
        let mut h = vec![F::zero(); p * p];
        let mut xt = vec![F::one(); p];
        for i in 0..self.x.len() {
            let eta = self.eta(i, params);
            let s = sigmoid(eta) * sigmoid(-eta) * self.weight(i);
            if s == F::zero() {
                continue;
            }
            xt[1..].copy_from_slice(&self.x[i]);
            for a in 0..p {
                let sa = s * xt[a];
                for b in a..p {
                    h[a * p + b] = h[a * p + b] + sa * xt[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                h[a * p + b] = h[b * p + a];
            }
        }
        for j in 1..p {
            h[j * p + j] = h[j * p + j] + self.lambda;
        }
        h
    }

    fn separates(&self, params: &[F]) -> bool {
        (0..self.x.len()).all(|i| self.weight(i) == F::zero() || self.y[i].sign::<F>() * self.eta(i, params) > F::zero())
    }
}

fn validate<F: Scalar>(x: &[Vec<F>], n_targets: usize, weights: Option<&[F]>) -> Result<usize> {
    if x.len() != n_targets {
        return Err(Error::Dimension {
            expected: x.len(),
            found: n_targets,
        });
    }
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot fit a model on zero rows".into()));
    }
    let d = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(Error::Dimension {
            expected: d,
            found: row.len(),
        });
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix".into()));
    }
    if let Some(w) = weights {
        if w.len() != x.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                found: w.len(),
            });
        }
        if w.iter().any(|v| !(*v >= F::zero()) || !v.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        if w.iter().all(|v| *v == F::zero()) {
            return Err(Error::InvalidArgument("all weights are zero".into()));
        }
    }
    Ok(d)
}

/// Logistic regression with optional L2 penalty on the coefficients.
pub fn fit_logistic<F: Scalar>(x: &[Vec<F>], y: &[Label], lambda: F, weights: Option<&[F]>) -> Result<LinearModel<F>> {
    fit_logistic_with(x, y, weights, &LogisticOptions::penalized(lambda))
}

pub fn fit_logistic_with<F: Scalar>(
    x: &[Vec<F>],
    y: &[Label],
    weights: Option<&[F]>,
    opts: &LogisticOptions<F>,
) -> Result<LinearModel<F>> {
    let d = validate(x, y.len(), weights)?;
    if x.len() < 2 {
        return Err(Error::InvalidArgument("logistic regression needs n >= 2".into()));
    }
    if !(opts.lambda >= F::zero()) {
        return Err(Error::InvalidArgument("lambda must be non-negative".into()));
    }
    let active = |i: usize| weights.is_none_or(|w| w[i] > F::zero());
    let has_pos = (0..y.len()).any(|i| active(i) && y[i].is_positive());
    let has_neg = (0..y.len()).any(|i| active(i) && !y[i].is_positive());
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass("logistic regression needs both classes".into()));
    }

    let mut problem = LogisticProblem {
        x,
        y,
        weights,
        lambda: opts.lambda,
    };
    let mut params = vec![F::zero(); d + 1];
    let mut objective = problem.objective(&params);
    let mut converged = false;
    let mut iterations = 0;
    let mut ridge = F::zero();
    let mut grad = problem.gradient(&params);
    let armijo = F::lit(1e-4);

    while iterations < opts.max_iter {
        if linalg::norm(&grad) <= opts.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let hess = problem.hessian(&params);
        let neg_grad: Vec<F> = grad.iter().map(|&g| -g).collect();
        let step = match linalg::solve_spd_jittered(&hess, &neg_grad) {
            Some((s, r)) => {
                ridge = ridge.max(r);
                s
            }
            None => Vec::new(),
        };
        if step.is_empty() || step.iter().any(|v| !v.is_finite()) {
            if problem.lambda == F::zero() {
                problem.lambda = F::lit(MICRO_RIDGE);
                ridge = ridge.max(problem.lambda);
                objective = problem.objective(&params);
                grad = problem.gradient(&params);
                continue;
            }
            break;
        }
        let slope = linalg::dot(&grad, &step);
        let mut accepted = None;
        // near the optimum the decrease drops below the objective's rounding
        // noise; a full step that shrinks the gradient is then taken as is
        let full = linalg::axpy(&params, F::one(), &step);
        let full_value = problem.objective(&full);
        let noise = F::epsilon() * F::lit(64.0) * (F::one() + objective.abs());
        if full_value.is_finite() && full_value <= objective + noise {
            let g = problem.gradient(&full);
            if linalg::norm(&g) < linalg::norm(&grad) {
                accepted = Some((full, full_value));
            }
        }
        let mut t = F::one();
        while accepted.is_none() && t > F::lit(1e-12) {
            let candidate = linalg::axpy(&params, t, &step);
            let value = problem.objective(&candidate);
            if value.is_finite() && value <= objective + armijo * t * slope {
                accepted = Some((candidate, value));
                break;
            }
            t = t * F::lit(0.5);
        }
        match accepted {
            Some((p, v)) => {
                params = p;
                objective = v;
                grad = problem.gradient(&params);
            }
            // no decrease available along the Newton direction: stationary to
            // working precision
            None => {
                converged = linalg::norm(&grad) <= opts.tol;
                break;
            }
        }
    }
    if !converged && linalg::norm(&grad) <= opts.tol {
        converged = true;
    }
    if converged && (problem.lambda > F::zero() || !problem.separates(&params)) {
        // full Newton steps from inside the tolerance ball bring the
        // solution to working precision, so fits do not depend on the path
        for _ in 0..2 {
            let hess = problem.hessian(&params);
            let neg_grad: Vec<F> = grad.iter().map(|&g| -g).collect();
            let Some((step, _)) = linalg::solve_spd_jittered(&hess, &neg_grad) else { break };
            let candidate = linalg::axpy(&params, F::one(), &step);
            let g = problem.gradient(&candidate);
            if !(linalg::norm(&g) < linalg::norm(&grad)) {
                break;
            }
            params = candidate;
            grad = g;
        }
    }
    let separable = opts.lambda == F::zero() && problem.separates(&params);
    if separable {
        converged = false;
    }
    Ok(LinearModel {
        intercept: params[0],
        coefficients: params[1..].to_vec(),
        converged,
        iterations,
        gradient_norm: linalg::norm(&grad),
        separable,
        ridge,
    })
}

/// Minimizes `sum_i w_i (y_i - x_i'beta - beta_0)^2`.
pub fn fit_wls<F: Scalar>(x: &[Vec<F>], y: &[F], weights: &[F]) -> Result<LinearModel<F>> {
    let d = validate(x, y.len(), Some(weights))?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("regression targets".into()));
    }
    let wsum: F = weights.iter().copied().sum();
    let xbar: Vec<F> = (0..d)
        .map(|j| x.iter().zip(weights).map(|(r, &w)| w * r[j]).sum::<F>() / wsum)
        .collect();
    let ybar: F = y.iter().zip(weights).map(|(&v, &w)| w * v).sum::<F>() / wsum;

    let mut a = vec![F::zero(); d * d];
    let mut b = vec![F::zero(); d];
    let mut centered = vec![F::zero(); d];
    for i in 0..x.len() {
        let w = weights[i];
        if w == F::zero() {
            continue;
        }
        for j in 0..d {
            centered[j] = x[i][j] - xbar[j];
        }
        let yc = y[i] - ybar;
        for j in 0..d {
            let wj = w * centered[j];
            b[j] = b[j] + wj * yc;
            for k in j..d {
                a[j * d + k] = a[j * d + k] + wj * centered[k];
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            a[j * d + k] = a[k * d + j];
        }
    }
    let (coefficients, ridge) = if d == 0 {
        (Vec::new(), F::zero())
    } else {
        linalg::solve_spd_jittered(&a, &b)
            .ok_or_else(|| Error::Degenerate("weighted least squares system is not solvable".into()))?
    };
    if ridge > F::zero() {
        log::warn!("weighted least squares is rank deficient; added ridge {ridge}");
    }
    let intercept = ybar - linalg::dot(&coefficients, &xbar);
    // residual of the normal equations
    let mut normal_residual = b.clone();
    for j in 0..d {
        for k in 0..d {
            normal_residual[j] = normal_residual[j] - a[j * d + k] * coefficients[k];
        }
    }
    Ok(LinearModel {
        coefficients,
        intercept,
        converged: true,
        iterations: 1,
        gradient_norm: linalg::norm(&normal_residual),
        separable: false,
        ridge,
    })
}

/// `1 - SSE_w / SST_w`, the total sum of squares taken about the weighted mean.
pub fn weighted_r2<F: Scalar>(model: &LinearModel<F>, x: &[Vec<F>], y: &[F], weights: &[F]) -> Result<F> {
    validate(x, y.len(), Some(weights))?;
    let wsum: F = weights.iter().copied().sum();
    let ybar: F = y.iter().zip(weights).map(|(&v, &w)| w * v).sum::<F>() / wsum;
    let mut sse = F::zero();
    let mut sst = F::zero();
    for i in 0..x.len() {
        let r = y[i] - model.decision(&x[i]);
        let c = y[i] - ybar;
        sse = sse + weights[i] * r * r;
        sst = sst + weights[i] * c * c;
    }
    if !(sst > F::zero()) {
        return Err(Error::UndefinedR2);
    }
    Ok(F::one() - sse / sst)
}
