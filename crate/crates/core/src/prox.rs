//! Closed-form proximal maps.
//!
//! `prox(gamma, v) = argmin_w { f(w) + ||w - v||^2 / (2 gamma) }` for every
//! function kind below; none of them needs an inner iterative solve.

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::point::PrimalDualPoint;

/// Absolute slack when testing indicator membership of a projected point.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum ProximableFunction {
    Zero,
    /// `mu * ||w||_1`
    ScaledL1 {
        mu: f64,
    },
    /// `mu * ||w||_2`
    ScaledL2 {
        mu: f64,
    },
    /// `mu * sum_i max(w_i, 0)`
    PositivePartSum {
        mu: f64,
    },
    /// Indicator of `{ w : ||w - center|| <= radius }`.
    BallIndicator {
        center: Vec<f64>,
        radius: f64,
    },
    /// Indicator of the box `[lo, hi]^d`.
    BoxIndicator {
        lo: f64,
        hi: f64,
    },
    /// Separable sum over consecutive blocks of length `block_len`.
    Blockwise {
        block_len: usize,
        parts: Vec<ProximableFunction>,
    },
}

impl ProximableFunction {
    pub fn ball_at_origin(dim: usize, radius: f64) -> Self {
        ProximableFunction::BallIndicator {
            center: vec![0.0; dim],
            radius,
        }
    }

    /// Product of `blocks` origin-centered balls of radius `radius` in `R^block_len`.
    pub fn product_of_balls(blocks: usize, block_len: usize, radius: f64) -> Self {
        ProximableFunction::Blockwise {
            block_len,
            parts: (0..blocks)
                .map(|_| Self::ball_at_origin(block_len, radius))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProximableFunction::Zero => Ok(()),
            ProximableFunction::ScaledL1 { mu }
            | ProximableFunction::ScaledL2 { mu }
            | ProximableFunction::PositivePartSum { mu } => {
                if mu.is_finite() && *mu >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::arg(format!("mu must be nonnegative, got {mu}")))
                }
            }
            ProximableFunction::BallIndicator { center, radius } => {
                if !(radius.is_finite() && *radius >= 0.0) || !linalg::all_finite(center) {
                    Err(Error::arg(
                        "ball needs a finite center and nonnegative radius",
                    ))
                } else {
                    Ok(())
                }
            }
            ProximableFunction::BoxIndicator { lo, hi } => {
                if lo <= hi && !lo.is_nan() && !hi.is_nan() {
                    Ok(())
                } else {
                    Err(Error::arg(format!("empty box [{lo}, {hi}]")))
                }
            }
            ProximableFunction::Blockwise { block_len, parts } => {
                if *block_len == 0 || parts.is_empty() {
                    return Err(Error::arg("blockwise function needs nonempty blocks"));
                }
                parts.iter().try_for_each(|p| p.validate())
            }
        }
    }

    /// Dimension forced by the function's data, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            ProximableFunction::BallIndicator { center, .. } => Some(center.len()),
            ProximableFunction::Blockwise { block_len, parts } => Some(block_len * parts.len()),
            _ => None,
        }
    }

    pub fn check_dim(&self, len: usize) -> Result<()> {
        match self.fixed_dim() {
            Some(d) => check_dim(d, len),
            None => Ok(()),
        }
    }

    pub fn is_indicator(&self) -> bool {
        match self {
            ProximableFunction::BallIndicator { .. } | ProximableFunction::BoxIndicator { .. } => {
                true
            }
            ProximableFunction::Blockwise { parts, .. } => parts.iter().all(|p| p.is_indicator()),
            _ => false,
        }
    }

    /// Diameter of an indicator's domain, when it does not depend on the dimension.
    pub fn diameter(&self) -> Option<f64> {
        match self {
            ProximableFunction::BallIndicator { radius, .. } => Some(2.0 * radius),
            ProximableFunction::Blockwise { parts, .. } => parts
                .iter()
                .map(|p| p.diameter().map(|d| d * d))
                .sum::<Option<f64>>()
                .map(f64::sqrt),
            _ => None,
        }
    }

    /// Domain membership with absolute slack `tol`.
    pub fn contains(&self, w: &[f64], tol: f64) -> bool {
        match self {
            ProximableFunction::BallIndicator { center, radius } => {
                center.len() == w.len() && linalg::dist(w, center) <= radius + tol
            }
            ProximableFunction::BoxIndicator { lo, hi } => {
                w.iter().all(|v| *v >= lo - tol && *v <= hi + tol)
            }
            ProximableFunction::Blockwise { block_len, parts } => {
                w.len() == block_len * parts.len()
                    && w.chunks(*block_len)
                        .zip(parts)
                        .all(|(b, p)| p.contains(b, tol))
            }
            _ => true,
        }
    }

    /// Function value; `+inf` outside the domain of an indicator.
    pub fn eval(&self, w: &[f64]) -> f64 {
        match self {
            ProximableFunction::Zero => 0.0,
            ProximableFunction::ScaledL1 { mu } => mu * w.iter().map(|v| v.abs()).sum::<f64>(),
            ProximableFunction::ScaledL2 { mu } => mu * linalg::norm(w),
            ProximableFunction::PositivePartSum { mu } => {
                mu * w.iter().map(|v| v.max(0.0)).sum::<f64>()
            }
            ProximableFunction::BallIndicator { .. } | ProximableFunction::BoxIndicator { .. } => {
                if self.contains(w, MEMBERSHIP_TOL) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProximableFunction::Blockwise { block_len, parts } => {
                if w.len() != block_len * parts.len() {
                    return f64::INFINITY;
                }
                w.chunks(*block_len)
                    .zip(parts)
                    .map(|(b, p)| p.eval(b))
                    .sum()
            }
        }
    }

    /// Proximal map with parameter `gamma > 0`.
    pub fn prox(&self, gamma: f64, v: &[f64]) -> Result<Vec<f64>> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::arg(format!(
                "prox parameter must be positive, got {gamma}"
            )));
        }
        self.check_dim(v.len())?;
        Ok(self.prox_unchecked(gamma, v))
    }

    fn prox_unchecked(&self, gamma: f64, v: &[f64]) -> Vec<f64> {
        match self {
            ProximableFunction::Zero => v.to_vec(),
            ProximableFunction::ScaledL1 { mu } => {
                let t = mu * gamma;
                v.iter().map(|&vi| soft_threshold(vi, t)).collect()
            }
            ProximableFunction::ScaledL2 { mu } => block_soft_threshold(v, mu * gamma),
            ProximableFunction::PositivePartSum { mu } => {
                let t = mu * gamma;
                v.iter()
                    .map(|&vi| {
                        if vi >= t {
                            vi - t
                        } else if vi >= 0.0 {
                            0.0
                        } else {
                            vi
                        }
                    })
                    .collect()
            }
            ProximableFunction::BallIndicator { center, radius } => {
                let d = linalg::dist(v, center);
                if d <= *radius {
                    v.to_vec()
                } else {
                    let s = radius / d;
                    v.iter()
                        .zip(center)
                        .map(|(vi, ci)| ci + s * (vi - ci))
                        .collect()
                }
            }
            ProximableFunction::BoxIndicator { lo, hi } => {
                v.iter().map(|vi| vi.clamp(*lo, *hi)).collect()
            }
            ProximableFunction::Blockwise { block_len, parts } => v
                .chunks(*block_len)
                .zip(parts)
                .flat_map(|(b, p)| p.prox_unchecked(gamma, b))
                .collect(),
        }
    }

    /// Metric projection onto the domain (the prox of an indicator).
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if !self.is_indicator() {
            return Err(Error::arg("projection requires an indicator function"));
        }
        self.prox(1.0, v)
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn block_soft_threshold(v: &[f64], t: f64) -> Vec<f64> {
    let n = linalg::norm(v);
    if n <= t {
        vec![0.0; v.len()]
    } else {
        linalg::scale(v, 1.0 - t / n)
    }
}

/// Prox of `psi(z) = theta(x) + omega(y)`, applied blockwise.
pub fn prox_joint(
    theta: &ProximableFunction,
    omega: &ProximableFunction,
    gamma: f64,
    z: &PrimalDualPoint,
) -> Result<PrimalDualPoint> {
    Ok(PrimalDualPoint {
        x: theta.prox(gamma, &z.x)?,
        y: omega.prox(gamma, &z.y)?,
    })
}
