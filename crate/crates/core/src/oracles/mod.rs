//! Stochastic first-order oracles.
//!
//! Every oracle separates drawing the random element `xi` from evaluating at
//! a point, so the same draw can be replayed at several points (linearization
//! checks, finite differences, frozen-sample tests).

mod bilinear;
mod neyman_pearson;
mod tanh;

pub use bilinear::BilinearOracle;
pub use neyman_pearson::{logistic_loss, logistic_loss_derivative, NeymanPearsonOracle};
pub use tanh::{TanhDraw, TanhFiniteSum, TanhOracle};

use crate::cones::ConvexCone;
use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::point::PrimalDualPoint;
use crate::prox::ProximableFunction;
use crate::rng::RandomSource;

/// One sample `(F, G_x, G_y)` of a minimax oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxSample {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
}

pub trait MinimaxOracle {
    type Draw: Clone;

    /// `(n, m)`: dimensions of the `x` and `y` blocks.
    fn dims(&self) -> (usize, usize);

    fn draw(&self, rng: &mut RandomSource) -> Self::Draw;

    fn evaluate(&self, z: &PrimalDualPoint, draw: &Self::Draw) -> Result<MinimaxSample>;

    fn sample(&self, rng: &mut RandomSource, z: &PrimalDualPoint) -> Result<MinimaxSample> {
        let d = self.draw(rng);
        self.evaluate(z, &d)
    }

    /// `(f, g_x, g_y)` in expectation, when available in closed form.
    fn exact_expectation(&self, _z: &PrimalDualPoint) -> Option<Result<MinimaxSample>> {
        None
    }
}

/// Replays one fixed draw forever.
#[derive(Debug, Clone)]
pub struct FrozenOracle<O: MinimaxOracle> {
    pub inner: O,
    pub draw: O::Draw,
}

impl<O: MinimaxOracle> MinimaxOracle for FrozenOracle<O> {
    type Draw = ();

    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }

    fn draw(&self, _rng: &mut RandomSource) {}

    fn evaluate(&self, z: &PrimalDualPoint, _draw: &()) -> Result<MinimaxSample> {
        self.inner.evaluate(z, &self.draw)
    }

    fn exact_expectation(&self, z: &PrimalDualPoint) -> Option<Result<MinimaxSample>> {
        Some(self.inner.evaluate(z, &self.draw))
    }
}

/// Deterministic oracle returning the exact expected (sub)gradient.
#[derive(Debug, Clone)]
pub struct ExpectedOracle<O>(pub O);

impl<O: MinimaxOracle> MinimaxOracle for ExpectedOracle<O> {
    type Draw = ();

    fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    fn draw(&self, _rng: &mut RandomSource) {}

    fn evaluate(&self, z: &PrimalDualPoint, _draw: &()) -> Result<MinimaxSample> {
        self.0
            .exact_expectation(z)
            .unwrap_or_else(|| Err(crate::Error::arg("oracle has no closed-form expectation")))
    }

    fn exact_expectation(&self, z: &PrimalDualPoint) -> Option<Result<MinimaxSample>> {
        Some(self.evaluate(z, &()))
    }
}

/// One sample of a conic-program oracle at a point `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConicSample {
    pub f_value: f64,
    pub f_grad: Vec<f64>,
    pub g_value: Vec<f64>,
    pub g_jacobian: DenseMatrix,
}

pub trait ConicOracle {
    type Draw: Clone;

    fn dim_x(&self) -> usize;

    fn cone(&self) -> &ConvexCone;

    /// Indicator of the compact feasible set `X`.
    fn feasible_set(&self) -> &ProximableFunction;

    fn draw(&self, rng: &mut RandomSource) -> Self::Draw;

    fn evaluate(&self, x: &[f64], draw: &Self::Draw) -> Result<ConicSample>;

    fn sample(&self, rng: &mut RandomSource, x: &[f64]) -> Result<ConicSample> {
        let d = self.draw(rng);
        self.evaluate(x, &d)
    }

    /// Exact expectation (finite-sum average) of every field.
    fn full_batch(&self, x: &[f64]) -> Result<ConicSample>;
}
