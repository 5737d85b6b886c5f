use crate::cones::ConvexCone;
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::oracles::ConicSample;
use crate::prox::ProximableFunction;

/// Data of one linearized x-subproblem
///
/// ```text
/// min_{x in X}  <grad F, x - x_k> + ||P(y_k + sigma (G + DG (x - x_k)))||^2 / (2 sigma)
///               + ||x - x_k||^2 / (2 sigma)
/// ```
///
/// where `P` is the projection onto the polar cone.
#[derive(Debug, Clone)]
pub struct XSubproblemSpec<'a> {
    pub x_k: &'a [f64],
    pub y_k: &'a [f64],
    pub sample: &'a ConicSample,
    pub cone: &'a ConvexCone,
    pub sigma: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
}

/// Outcome of the inner solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Projected-gradient residual at `x` for the final step size.
    pub residual: f64,
    pub step: f64,
}

impl XSubproblemSpec<'_> {
    pub fn validate(&self) -> Result<()> {
        let n = self.x_k.len();
        check_dim(n, self.sample.f_grad.len())?;
        check_dim(self.cone.dim(), self.y_k.len())?;
        check_dim(self.cone.dim(), self.sample.g_value.len())?;
        check_dim(self.cone.dim(), self.sample.g_jacobian.rows())?;
        check_dim(n, self.sample.g_jacobian.cols())?;
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::arg(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.inner_tol.is_finite() && self.inner_tol > 0.0) {
            return Err(Error::arg(format!(
                "inner_tol must be positive, got {}",
                self.inner_tol
            )));
        }
        if self.inner_max_iters == 0 {
            return Err(Error::arg("inner_max_iters must be at least 1"));
        }
        Ok(())
    }

    /// `G + DG (x - x_k)`.
    pub fn linearized_constraint(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d = linalg::sub(x, self.x_k);
        let lin = self.sample.g_jacobian.apply(&d)?;
        Ok(linalg::add(&self.sample.g_value, &lin))
    }

    fn shifted_multiplier(&self, x: &[f64]) -> Result<Vec<f64>> {
        let lg = self.linearized_constraint(x)?;
        self.cone
            .polar_project(&linalg::axpy(self.y_k, self.sigma, &lg))
    }

    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.x_k.len(), x.len())?;
        let d = linalg::sub(x, self.x_k);
        let p = self.shifted_multiplier(x)?;
        Ok(linalg::dot(&self.sample.f_grad, &d)
            + (linalg::norm_sq(&p) + linalg::norm_sq(&d)) / (2.0 * self.sigma))
    }
}

/// `grad F + DG^T P(y_k + sigma (G + DG (x - x_k))) + (x - x_k) / sigma`.
pub fn x_subproblem_gradient(spec: &XSubproblemSpec<'_>, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(spec.x_k.len(), x.len())?;
    let p = spec.shifted_multiplier(x)?;
    let jt = spec.sample.g_jacobian.apply_transpose(&p)?;
    Ok(spec
        .sample
        .f_grad
        .iter()
        .zip(&jt)
        .zip(x.iter().zip(spec.x_k))
        .map(|((gf, j), (xi, xk))| gf + j + (xi - xk) / spec.sigma)
        .collect())
}

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 80;

fn residual(x: &[f64], candidate: &[f64], step: f64) -> f64 {
    linalg::dist(x, candidate) / step
}

/// Projected gradient descent with backtracking, warm-started at `x_k`.
///
/// The first trial step is `sigma`; later ones are Barzilai-Borwein steps
/// `<dx, dx> / <dx, dgrad>`, which never exceed `sigma` because the
/// objective is `1/sigma`-strongly convex. A trial step is halved until the
/// sufficient-decrease test `Phi(x+) <= Phi(x) - 1e-4 ||x+ - x||^2 / s` holds
/// (with a rounding allowance of a few ulps of `Phi`). The solver stops as
/// soon as the projected-gradient residual `||x - P_X(x - s grad)|| / s` is at
/// most `inner_tol`.
pub fn solve_x_subproblem(
    spec: &XSubproblemSpec<'_>,
    feasible: &ProximableFunction,
) -> Result<SubproblemSolution> {
    spec.validate()?;
    if !feasible.is_indicator() {
        return Err(Error::arg(
            "feasible set must be an indicator with a projection",
        ));
    }
    let mut x = feasible.project(spec.x_k)?;
    let mut step = spec.sigma;
    let mut value = spec.objective(&x)?;
    let mut res = f64::INFINITY;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    for it in 0..spec.inner_max_iters {
        let grad = x_subproblem_gradient(spec, &x)?;
        if let Some((px, pg)) = prev.take() {
            let dx = linalg::sub(&x, &px);
            let dg = linalg::sub(&grad, &pg);
            let curv = linalg::dot(&dx, &dg);
            if curv > 0.0 {
                step = (linalg::norm_sq(&dx) / curv).min(spec.sigma);
            }
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = feasible.project(&linalg::axpy(&x, -step, &grad))?;
            res = residual(&x, &cand, step);
            if res <= spec.inner_tol {
                return Ok(SubproblemSolution {
                    x,
                    iterations: it,
                    residual: res,
                    step,
                });
            }
            let cand_value = spec.objective(&cand)?;
            let decrease = ARMIJO * linalg::dist(&x, &cand).powi(2) / step;
            let slack = 4.0 * f64::EPSILON * (1.0 + value.abs());
            if cand_value <= value - decrease + slack {
                accepted = Some((cand, cand_value));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, v)) => {
                prev = Some((std::mem::replace(&mut x, cand), grad));
                value = v;
            }
            None => {
                return Err(Error::Convergence {
                    iterations: it,
                    residual: res,
                })
            }
        }
        if !linalg::all_finite(&x) {
            return Err(Error::NonFinite("x-subproblem iterate"));
        }
    }
    let grad = x_subproblem_gradient(spec, &x)?;
    let cand = feasible.project(&linalg::axpy(&x, -step, &grad))?;
    res = residual(&x, &cand, step);
    if res <= spec.inner_tol {
        return Ok(SubproblemSolution {
            x,
            iterations: spec.inner_max_iters,
            residual: res,
            step,
        });
    }
    Err(Error::Convergence {
        iterations: spec.inner_max_iters,
        residual: res,
    })
}

/// `P_{K polar}(y_k + sigma (G + DG (x_next - x_k)))`.
pub fn y_update(
    cone: &ConvexCone,
    y_k: &[f64],
    sigma: f64,
    sample: &ConicSample,
    x_next: &[f64],
    x_k: &[f64],
) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::arg(format!("sigma must be positive, got {sigma}")));
    }
    check_dim(cone.dim(), y_k.len())?;
    check_dim(x_k.len(), x_next.len())?;
    let d = linalg::sub(x_next, x_k);
    let lin = linalg::add(&sample.g_value, &sample.g_jacobian.apply(&d)?);
    cone.polar_project(&linalg::axpy(y_k, sigma, &lin))
}
