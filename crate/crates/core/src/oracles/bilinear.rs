use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::point::PrimalDualPoint;
use crate::rng::RandomSource;

use super::{MinimaxOracle, MinimaxSample};

/// `F(x, y, xi) = (xi^T x)(xi^T y)` with `xi ~ U[0, 1]^n`.
///
/// In expectation `f(x, y) = x^T Q y` with `Q_ii = 1/3`, `Q_ij = 1/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearOracle {
    n: usize,
}

impl BilinearOracle {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::arg("bilinear dimension must be positive"));
        }
        Ok(Self { n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Q v` for `Q = E[xi xi^T]`.
    pub fn apply_q(&self, v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter()
            .map(|vi| 0.25 * s + (1.0 / 3.0 - 0.25) * vi)
            .collect()
    }

    pub fn q_entry(i: usize, j: usize) -> f64 {
        if i == j {
            1.0 / 3.0
        } else {
            0.25
        }
    }
}

impl MinimaxOracle for BilinearOracle {
    type Draw = Vec<f64>;

    fn dims(&self) -> (usize, usize) {
        (self.n, self.n)
    }

    fn draw(&self, rng: &mut RandomSource) -> Vec<f64> {
        (0..self.n).map(|_| rng.uniform()).collect()
    }

    fn evaluate(&self, z: &PrimalDualPoint, xi: &Vec<f64>) -> Result<MinimaxSample> {
        z.check_dims(self.n, self.n)?;
        check_dim(self.n, xi.len())?;
        let sx = linalg::dot(xi, &z.x);
        let sy = linalg::dot(xi, &z.y);
        Ok(MinimaxSample {
            value: sx * sy,
            grad_x: linalg::scale(xi, sy),
            grad_y: linalg::scale(xi, sx),
        })
    }

    fn exact_expectation(&self, z: &PrimalDualPoint) -> Option<Result<MinimaxSample>> {
        Some(z.check_dims(self.n, self.n).map(|_| {
            let qy = self.apply_q(&z.y);
            let qx = self.apply_q(&z.x);
            MinimaxSample {
                value: linalg::dot(&z.x, &qy),
                grad_x: qy,
                grad_y: qx,
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frozen_draw_example() {
        let o = BilinearOracle::new(1).unwrap();
        let z = PrimalDualPoint::new(vec![1.0], vec![1.0]).unwrap();
        let s = o.evaluate(&z, &vec![0.5]).unwrap();
        assert_eq!(s.value, 0.25);
        assert_eq!(s.grad_x, vec![0.25]);
        assert_eq!(s.grad_y, vec![0.25]);
    }

    #[test]
    fn zero_x_gives_zero_grad_y() {
        let o = BilinearOracle::new(3).unwrap();
        let z = PrimalDualPoint::new(vec![0.0; 3], vec![0.3, -1.0, 2.0]).unwrap();
        let mut rng = RandomSource::new(5, 0);
        for _ in 0..10 {
            let s = o.sample(&mut rng, &z).unwrap();
            assert_eq!(s.grad_y, vec![0.0; 3]);
        }
    }

    #[test]
    fn exact_expectation_matches_q() {
        let o = BilinearOracle::new(2).unwrap();
        let z = PrimalDualPoint::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let e = o.exact_expectation(&z).unwrap().unwrap();
        assert!((e.value - 0.25).abs() < 1e-15);
    }

    /// Monte-Carlo check of `E[xi_i xi_j]` against the closed-form `Q`.
    #[test]
    fn monte_carlo_confirms_q() {
        let o = BilinearOracle::new(2).unwrap();
        let z = PrimalDualPoint::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        let mut rng = RandomSource::new(11, 3);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let v = o.sample(&mut rng, &z).unwrap().value;
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - 0.25).abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn dimension_checks() {
        let o = BilinearOracle::new(2).unwrap();
        let z = PrimalDualPoint::new(vec![1.0], vec![1.0]).unwrap();
        assert!(o.evaluate(&z, &vec![0.5, 0.5]).is_err());
        assert!(BilinearOracle::new(0).is_err());
    }
}
