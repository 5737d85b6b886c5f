//! Multi-class Neyman-Pearson classification as a stochastic conic program.
//!
//! Variables are `m` linear scorers `x_1..x_m` stacked into one vector. The
//! objective penalizes misranking class 1; each remaining class `i` carries a
//! constraint `sum_{l != i} E[phi(x_i^T psi_i - x_l^T psi_i)] - r_i <= 0`,
//! i.e. `g(x)` lies in the nonpositive orthant of dimension `m - 1`.

use crate::cones::ConvexCone;
use crate::constants::ProblemConstants;
use crate::data::ClassGroupedDataset;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::prox::ProximableFunction;
use crate::rng::RandomSource;

use super::{ConicOracle, ConicSample};

/// `phi(t) = log(1 + exp(-t))`, evaluated without overflow.
pub fn logistic_loss(t: f64) -> f64 {
    if t > 0.0 {
        (-t).exp().ln_1p()
    } else {
        -t + t.exp().ln_1p()
    }
}

/// `phi'(t) = -1 / (1 + exp(t))`.
pub fn logistic_loss_derivative(t: f64) -> f64 {
    if t >= 0.0 {
        let e = (-t).exp();
        -e / (1.0 + e)
    } else {
        -1.0 / (1.0 + t.exp())
    }
}

#[derive(Debug, Clone)]
pub struct NeymanPearsonOracle {
    feature_dim: usize,
    /// Dense feature vectors per class; class 0 is the objective class.
    classes: Vec<Vec<Vec<f64>>>,
    r: Vec<f64>,
    lambda: f64,
    cone: ConvexCone,
    feasible: ProximableFunction,
}

impl NeymanPearsonOracle {
    /// `r` defaults to `r_i = m - 1` for every constrained class.
    pub fn new(dataset: &ClassGroupedDataset, lambda: f64, r: Option<Vec<f64>>) -> Result<Self> {
        let m = dataset.num_classes();
        if m < 2 {
            return Err(Error::arg(format!("need at least 2 classes, found {m}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::arg(format!("lambda must be positive, got {lambda}")));
        }
        let classes = dataset.dense_classes()?;
        if let Some((i, _)) = classes.iter().enumerate().find(|(_, c)| c.is_empty()) {
            return Err(Error::Data(format!("class {i} is empty")));
        }
        let r = r.unwrap_or_else(|| vec![(m - 1) as f64; m - 1]);
        check_dim(m - 1, r.len())?;
        let feature_dim = dataset.feature_dim();
        if feature_dim == 0 {
            return Err(Error::Data("dataset has no features".into()));
        }
        Ok(Self {
            feature_dim,
            classes,
            r,
            lambda,
            cone: ConvexCone::NonpositiveOrthant(m - 1),
            feasible: ProximableFunction::product_of_balls(m, feature_dim, lambda),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.r
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }

    fn block<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[i * self.feature_dim..(i + 1) * self.feature_dim]
    }

    /// Adds `weight * sum_{l != i} phi((x_i - x_l)^T psi)` to `value` and its
    /// gradient to `grad`; returns nothing so callers control accumulation order.
    fn accumulate_class_term(
        &self,
        x: &[f64],
        i: usize,
        psi: &[f64],
        value: &mut f64,
        grad: &mut [f64],
    ) {
        let n = self.feature_dim;
        let si = linalg::dot(self.block(x, i), psi);
        for l in 0..self.num_classes() {
            if l == i {
                continue;
            }
            let t = si - linalg::dot(self.block(x, l), psi);
            *value += logistic_loss(t);
            let d = logistic_loss_derivative(t);
            for (k, p) in psi.iter().enumerate() {
                grad[i * n + k] += d * p;
                grad[l * n + k] -= d * p;
            }
        }
    }

    /// Evaluates every field using, for class `i`, the points listed in `points[i]`,
    /// averaging over them.
    fn evaluate_on(&self, x: &[f64], points: &[Vec<&[f64]>]) -> Result<ConicSample> {
        let m = self.num_classes();
        let d = m * self.feature_dim;
        check_dim(d, x.len())?;
        let mut f_value = 0.0;
        let mut f_grad = vec![0.0; d];
        for psi in &points[0] {
            self.accumulate_class_term(x, 0, psi, &mut f_value, &mut f_grad);
        }
        let count = points[0].len() as f64;
        f_value /= count;
        f_grad.iter_mut().for_each(|g| *g /= count);

        let mut g_value = vec![0.0; m - 1];
        let mut jac = DenseMatrix::zeros(m - 1, d);
        for i in 1..m {
            let mut v = 0.0;
            let row = jac.row_mut(i - 1);
            for psi in &points[i] {
                self.accumulate_class_term(x, i, psi, &mut v, row);
            }
            let count = points[i].len() as f64;
            row.iter_mut().for_each(|g| *g /= count);
            g_value[i - 1] = v / count - self.r[i - 1];
        }
        Ok(ConicSample {
            f_value,
            f_grad,
            g_value,
            g_jacobian: jac,
        })
    }

    /// The Slater point `x = 0`.
    pub fn slater_point(&self) -> Vec<f64> {
        vec![0.0; self.dim_x()]
    }

    /// Analytic almost-sure bounds over `X` and every data point.
    ///
    /// Uses `|phi'| <= 1`, `0 < phi(t) <= log(1 + e^{|t|})` and
    /// `|t| <= 2 lambda ||psi||` on the product of balls. The Jacobian bound is
    /// the Frobenius envelope, which dominates the operator norm.
    pub fn envelope_constants(&self) -> Result<ProblemConstants> {
        let m = self.num_classes();
        let mf = m as f64;
        let max_norm: Vec<f64> = self
            .classes
            .iter()
            .map(|c| c.iter().map(|p| linalg::norm(p)).fold(0.0, f64::max))
            .collect();
        let pair_factor = (mf * (mf - 1.0)).sqrt();
        let kappa_f = max_norm[0] * pair_factor;
        let kappa_g = (1..m)
            .map(|i| max_norm[i] * max_norm[i])
            .sum::<f64>()
            .sqrt()
            * pair_factor;
        let nu_g = (1..m)
            .map(|i| {
                let top = (mf - 1.0) * (2.0 * self.lambda * max_norm[i]).exp().ln_1p();
                let ri = self.r[i - 1];
                let b = ri.abs().max((top - ri).abs());
                b * b
            })
            .sum::<f64>()
            .sqrt();
        let f_top = (mf - 1.0) * (2.0 * self.lambda * max_norm[0]).exp().ln_1p();
        let slater_point = self.slater_point();
        let g0 = self.full_batch(&slater_point)?.g_value;
        let slater_margin = self.cone.interior_margin(&g0);
        Ok(ProblemConstants {
            m_star: kappa_f,
            kappa0: kappa_f,
            r: self.feasible.diameter().unwrap_or(f64::INFINITY),
            nu_g,
            kappa_f,
            kappa_g,
            nu_f: f_top,
            slater_margin,
            slater_point,
            estimated: false,
        })
    }
}

impl ConicOracle for NeymanPearsonOracle {
    /// One point index per class.
    type Draw = Vec<usize>;

    fn dim_x(&self) -> usize {
        self.num_classes() * self.feature_dim
    }

    fn cone(&self) -> &ConvexCone {
        &self.cone
    }

    fn feasible_set(&self) -> &ProximableFunction {
        &self.feasible
    }

    fn draw(&self, rng: &mut RandomSource) -> Vec<usize> {
        self.classes.iter().map(|c| rng.index(c.len())).collect()
    }

    fn evaluate(&self, x: &[f64], draw: &Vec<usize>) -> Result<ConicSample> {
        check_dim(self.num_classes(), draw.len())?;
        let mut points = Vec::with_capacity(self.num_classes());
        for (c, &j) in self.classes.iter().zip(draw) {
            let p = c
                .get(j)
                .ok_or_else(|| Error::arg(format!("draw index {j} out of range")))?;
            points.push(vec![p.as_slice()]);
        }
        self.evaluate_on(x, &points)
    }

    fn full_batch(&self, x: &[f64]) -> Result<ConicSample> {
        let points: Vec<Vec<&[f64]>> = self
            .classes
            .iter()
            .map(|c| c.iter().map(Vec::as_slice).collect())
            .collect();
        self.evaluate_on(x, &points)
    }
}
