//! Bounded Levenberg-Marquardt with forward-difference Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE_GRAD: f64 = 1e-10;
pub const DEFAULT_TOLERANCE_STEP: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 200;

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;

/// A box-constrained nonlinear least-squares problem.
///
/// Minimises ½‖r(p)‖² over `lower <= p <= upper`. Unbounded entries use ±∞.
pub struct FitProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub residual_fn: F,
    pub initial_params: Vec<f64>,
    pub lower_bounds: Option<Vec<f64>>,
    pub upper_bounds: Option<Vec<f64>>,
    pub max_iterations: usize,
    pub tolerance_grad: f64,
    /// Relative: a step counts as converged when ‖δ‖ <= tol·(‖p‖ + tol).
    pub tolerance_step: f64,
}

impl<F> FitProblem<F>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    pub fn new(residual_fn: F, initial_params: Vec<f64>) -> Self {
        Self {
            residual_fn,
            initial_params,
            lower_bounds: None,
            upper_bounds: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance_grad: DEFAULT_TOLERANCE_GRAD,
            tolerance_step: DEFAULT_TOLERANCE_STEP,
        }
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower_bounds = Some(lower);
        self.upper_bounds = Some(upper);
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_tolerances(mut self, grad: f64, step: f64) -> Self {
        self.tolerance_grad = grad;
        self.tolerance_step = step;
        self
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.initial_params.len();
        (
            self.lower_bounds
                .clone()
                .unwrap_or_else(|| vec![f64::NEG_INFINITY; n]),
            self.upper_bounds
                .clone()
                .unwrap_or_else(|| vec![f64::INFINITY; n]),
        )
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FitResult {
    pub params: Vec<f64>,
    /// Euclidean norm of the residual vector at `params`.
    pub residual_norm: f64,
    /// Ratio of largest to smallest singular value of the Jacobian.
    pub jacobian_condition_proxy: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Gauss-Newton standard errors, sqrt(diag(s²·(JᵀJ)⁻¹)) with s² = ‖r‖²/(m-n).
    pub per_param_stderr: Vec<f64>,
    pub gradient_norm: f64,
    /// Residual norm after the initial evaluation and each accepted step.
    pub residual_history: Vec<f64>,
}

/// Forward-difference Jacobian with step sqrt(ε)·max(|p|, 1), flipped
/// backwards where the forward point would leave the box.
pub fn finite_difference_jacobian<F>(
    f: &F,
    params: &[f64],
    base: &[f64],
    upper: Option<&[f64]>,
) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let m = base.len();
    let n = params.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut p = params.to_vec();
    for j in 0..n {
        let mut h = f64::EPSILON.sqrt() * params[j].abs().max(1.0);
        if let Some(up) = upper {
            if params[j] + h > up[j] {
                h = -h;
            }
        }
        p[j] = params[j] + h;
        let step = p[j] - params[j];
        let r = f(&p);
        for i in 0..m {
            jac[(i, j)] = (r[i] - base[i]) / step;
        }
        p[j] = params[j];
    }
    jac
}

fn norm_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

fn all_finite(r: &[f64]) -> bool {
    r.iter().all(|v| v.is_finite())
}

/// Damped Gauss-Newton (Marquardt scaling, Nielsen damping update) with
/// projection onto the bound box after every trial step.
///
/// Non-convergence is reported through `FitResult::converged`; only contract
/// violations and a non-finite initial residual are errors.
pub fn least_squares<F>(problem: &FitProblem<F>) -> Result<FitResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = problem.initial_params.len();
    let (lower, upper) = problem.bounds();
    if lower.len() != n || upper.len() != n {
        return Err(Error::Precondition(format!(
            "bounds length ({}, {}) does not match parameter count {n}",
            lower.len(),
            upper.len()
        )));
    }
    for j in 0..n {
        let p = problem.initial_params[j];
        if !(lower[j] <= p && p <= upper[j]) {
            return Err(Error::Precondition(format!(
                "initial parameter {j} = {p} outside bounds [{}, {}]",
                lower[j], upper[j]
            )));
        }
    }

    let f = &problem.residual_fn;
    let mut params = problem.initial_params.clone();
    let mut residual = f(&params);
    if residual.len() < n {
        return Err(Error::Precondition(format!(
            "residual dimension {} smaller than parameter count {n}",
            residual.len()
        )));
    }
    if !all_finite(&residual) {
        return Err(Error::Precondition(
            "residual function is not finite at the initial point".into(),
        ));
    }

    let project = |p: &mut [f64]| {
        for j in 0..n {
            p[j] = p[j].clamp(lower[j], upper[j]);
        }
    };

    let mut cost = norm_sq(&residual);
    let mut history = vec![cost.sqrt()];
    let mut lambda = LAMBDA_INIT;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut gradient_norm = f64::INFINITY;

    'outer: while iterations < problem.max_iterations {
        iterations += 1;
        let jac = finite_difference_jacobian(f, &params, &residual, Some(&upper));
        let r = DVector::from_column_slice(&residual);
        let jt = jac.transpose();
        let gradient = &jt * &r;
        let jtj = &jt * &jac;
        gradient_norm = gradient.amax();
        if gradient_norm <= problem.tolerance_grad || cost == 0.0 {
            converged = true;
            break;
        }
        let max_diag = jtj.diagonal().max();
        let scale: Vec<f64> = jtj
            .diagonal()
            .iter()
            .map(|d| d.max(1e-12 * max_diag).max(f64::MIN_POSITIVE))
            .collect();

        loop {
            let mut damped = jtj.clone();
            for j in 0..n {
                damped[(j, j)] += lambda * scale[j];
            }
            let Some(chol) = damped.cholesky() else {
                lambda *= nu;
                nu *= 2.0;
                if lambda > LAMBDA_MAX {
                    break 'outer;
                }
                continue;
            };
            let delta = chol.solve(&(-&gradient));
            let mut trial: Vec<f64> = params.iter().zip(delta.iter()).map(|(p, d)| p + d).collect();
            project(&mut trial);
            let step: Vec<f64> = trial.iter().zip(&params).map(|(t, p)| t - p).collect();
            let step_norm = norm_sq(&step).sqrt();
            let p_norm = norm_sq(&params).sqrt();
            if step_norm <= problem.tolerance_step * (p_norm + problem.tolerance_step) {
                converged = true;
                break 'outer;
            }

            let trial_residual = f(&trial);
            let trial_cost = norm_sq(&trial_residual);
            if all_finite(&trial_residual) && trial_cost < cost {
                // gain ratio against the linear model on the projected step
                let s = DVector::from_column_slice(&step);
                let predicted = -(2.0 * gradient.dot(&s) + (&jac * &s).norm_squared());
                let rho = if predicted > 0.0 {
                    (cost - trial_cost) / predicted
                } else {
                    1.0
                };
                lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                params = trial;
                residual = trial_residual;
                cost = trial_cost;
                history.push(cost.sqrt());
                break;
            }
            lambda *= nu;
            nu *= 2.0;
            if lambda > LAMBDA_MAX {
                break 'outer;
            }
        }
    }

    let jac = finite_difference_jacobian(f, &params, &residual, Some(&upper));
    let (condition, stderr) = diagnostics(&jac, cost, residual.len());
    Ok(FitResult {
        params,
        residual_norm: cost.sqrt(),
        jacobian_condition_proxy: condition,
        iterations,
        converged,
        per_param_stderr: stderr,
        gradient_norm,
        residual_history: history,
    })
}

fn diagnostics(jac: &DMatrix<f64>, cost: f64, m: usize) -> (f64, Vec<f64>) {
    let n = jac.ncols();
    let svd = jac.clone().svd(false, false);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    let dof = m.saturating_sub(n);
    let s2 = if dof > 0 { cost / dof as f64 } else { 0.0 };
    let jtj = jac.transpose() * jac;
    let stderr = match jtj.try_inverse() {
        Some(inv) => (0..n).map(|j| (s2 * inv[(j, j)]).max(0.0).sqrt()).collect(),
        None => vec![f64::NAN; n],
    };
    (condition, stderr)
}
