use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::point::PrimalDualPoint;
use crate::rng::RandomSource;

use super::{MinimaxOracle, MinimaxSample};

#[derive(Debug, Clone, PartialEq)]
pub struct TanhDraw {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

/// `F(x, y, xi) = 1 - tanh(v1 <x, u1>) tanh(v2 <y, u2>)` with
/// `u1, u2 ~ U[0, 1]^n`, `v1 = sign <xbar, u1>`, `v2 = sign <ybar, u2>`.
///
/// Not convex-concave globally; used as an empirical test problem only.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhOracle {
    xbar: Vec<f64>,
    ybar: Vec<f64>,
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn sech_sq(t: f64) -> f64 {
    let c = t.cosh();
    if c.is_finite() {
        1.0 / (c * c)
    } else {
        0.0
    }
}

impl TanhOracle {
    pub fn new(xbar: Vec<f64>, ybar: Vec<f64>) -> Result<Self> {
        if xbar.is_empty() {
            return Err(Error::arg("tanh oracle needs a positive dimension"));
        }
        check_dim(xbar.len(), ybar.len())?;
        if !linalg::all_finite(&xbar) || !linalg::all_finite(&ybar) {
            return Err(Error::NonFinite("tanh label vectors"));
        }
        Ok(Self { xbar, ybar })
    }

    pub fn dim(&self) -> usize {
        self.xbar.len()
    }

    /// Fixed pool of draws, the data of the finite-sum reference problem.
    pub fn pool(&self, rng: &mut RandomSource, size: usize) -> Vec<TanhDraw> {
        (0..size).map(|_| self.draw(rng)).collect()
    }
}

impl MinimaxOracle for TanhOracle {
    type Draw = TanhDraw;

    fn dims(&self) -> (usize, usize) {
        (self.dim(), self.dim())
    }

    fn draw(&self, rng: &mut RandomSource) -> TanhDraw {
        let n = self.dim();
        TanhDraw {
            u1: (0..n).map(|_| rng.uniform()).collect(),
            u2: (0..n).map(|_| rng.uniform()).collect(),
        }
    }

    fn evaluate(&self, z: &PrimalDualPoint, d: &TanhDraw) -> Result<MinimaxSample> {
        let n = self.dim();
        z.check_dims(n, n)?;
        check_dim(n, d.u1.len())?;
        check_dim(n, d.u2.len())?;
        let v1 = sign(linalg::dot(&self.xbar, &d.u1));
        let v2 = sign(linalg::dot(&self.ybar, &d.u2));
        let a = v1 * linalg::dot(&z.x, &d.u1);
        let b = v2 * linalg::dot(&z.y, &d.u2);
        let (ta, tb) = (a.tanh(), b.tanh());
        Ok(MinimaxSample {
            value: 1.0 - ta * tb,
            grad_x: linalg::scale(&d.u1, -v1 * sech_sq(a) * tb),
            grad_y: linalg::scale(&d.u2, -v2 * ta * sech_sq(b)),
        })
    }
}

/// The tanh problem with the expectation replaced by the mean over a fixed pool.
#[derive(Debug, Clone, PartialEq)]
pub struct TanhFiniteSum {
    pub oracle: TanhOracle,
    pub pool: Vec<TanhDraw>,
}

impl TanhFiniteSum {
    pub fn new(oracle: TanhOracle, pool: Vec<TanhDraw>) -> Result<Self> {
        if pool.is_empty() {
            return Err(Error::arg("finite-sum pool must be nonempty"));
        }
        Ok(Self { oracle, pool })
    }
}

impl MinimaxOracle for TanhFiniteSum {
    type Draw = usize;

    fn dims(&self) -> (usize, usize) {
        self.oracle.dims()
    }

    fn draw(&self, rng: &mut RandomSource) -> usize {
        rng.index(self.pool.len())
    }

    fn evaluate(&self, z: &PrimalDualPoint, i: &usize) -> Result<MinimaxSample> {
        let d = self
            .pool
            .get(*i)
            .ok_or_else(|| Error::arg(format!("pool index {i} out of range")))?;
        self.oracle.evaluate(z, d)
    }

    fn exact_expectation(&self, z: &PrimalDualPoint) -> Option<Result<MinimaxSample>> {
        let (n, m) = self.dims();
        let mut acc = MinimaxSample {
            value: 0.0,
            grad_x: vec![0.0; n],
            grad_y: vec![0.0; m],
        };
        for d in &self.pool {
            let s = match self.oracle.evaluate(z, d) {
                Ok(s) => s,
                Err(e) => return Some(Err(e)),
            };
            acc.value += s.value;
            acc.grad_x
                .iter_mut()
                .zip(&s.grad_x)
                .for_each(|(a, b)| *a += b);
            acc.grad_y
                .iter_mut()
                .zip(&s.grad_y)
                .for_each(|(a, b)| *a += b);
        }
        let inv = 1.0 / self.pool.len() as f64;
        acc.value *= inv;
        acc.grad_x.iter_mut().for_each(|v| *v *= inv);
        acc.grad_y.iter_mut().for_each(|v| *v *= inv);
        Some(Ok(acc))
    }
}
