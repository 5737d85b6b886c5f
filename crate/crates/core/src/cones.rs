//! Closed convex cones with exact projections onto the cone and its polar.

use crate::error::{check_dim, Error, Result};
use crate::linalg;

/// Absolute tolerance for cone membership of projected points.
pub const CONE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexCone {
    NonnegativeOrthant(usize),
    NonpositiveOrthant(usize),
    /// `{(u, t) : ||u|| <= t}` of total dimension `d`, with `t` stored last.
    SecondOrderCone(usize),
    ZeroCone(usize),
    FreeCone(usize),
    Product(Vec<ConvexCone>),
}

impl ConvexCone {
    pub fn dim(&self) -> usize {
        match self {
            ConvexCone::NonnegativeOrthant(d)
            | ConvexCone::NonpositiveOrthant(d)
            | ConvexCone::SecondOrderCone(d)
            | ConvexCone::ZeroCone(d)
            | ConvexCone::FreeCone(d) => *d,
            ConvexCone::Product(parts) => parts.iter().map(ConvexCone::dim).sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexCone::SecondOrderCone(0) => {
                Err(Error::arg("second-order cone needs dimension >= 1"))
            }
            ConvexCone::Product(parts) => parts.iter().try_for_each(ConvexCone::validate),
            _ => Ok(()),
        }
    }

    /// Metric projection onto the cone.
    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), y.len())?;
        let mut out = y.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    /// Metric projection onto the polar cone, computed as `y - project(y)`.
    pub fn polar_project(&self, y: &[f64]) -> Result<Vec<f64>> {
        let p = self.project(y)?;
        Ok(linalg::sub(y, &p))
    }

    fn project_in_place(&self, y: &mut [f64]) {
        match self {
            ConvexCone::NonnegativeOrthant(_) => y.iter_mut().for_each(|v| *v = v.max(0.0)),
            ConvexCone::NonpositiveOrthant(_) => y.iter_mut().for_each(|v| *v = v.min(0.0)),
            ConvexCone::ZeroCone(_) => y.iter_mut().for_each(|v| *v = 0.0),
            ConvexCone::FreeCone(_) => {}
            ConvexCone::SecondOrderCone(d) => {
                let (u, t) = y.split_at_mut(d - 1);
                let t = &mut t[0];
                let nu = linalg::norm(u);
                if nu <= *t {
                    return;
                }
                if nu <= -*t {
                    u.iter_mut().for_each(|v| *v = 0.0);
                    *t = 0.0;
                    return;
                }
                let a = 0.5 * (nu + *t);
                let s = a / nu;
                u.iter_mut().for_each(|v| *v *= s);
                *t = a;
            }
            ConvexCone::Product(parts) => {
                let mut offset = 0;
                for p in parts {
                    let d = p.dim();
                    p.project_in_place(&mut y[offset..offset + d]);
                    offset += d;
                }
            }
        }
    }

    /// Membership in the cone with absolute slack `tol`.
    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        if y.len() != self.dim() {
            return false;
        }
        match self {
            ConvexCone::NonnegativeOrthant(_) => y.iter().all(|v| *v >= -tol),
            ConvexCone::NonpositiveOrthant(_) => y.iter().all(|v| *v <= tol),
            ConvexCone::ZeroCone(_) => y.iter().all(|v| v.abs() <= tol),
            ConvexCone::FreeCone(_) => true,
            ConvexCone::SecondOrderCone(d) => linalg::norm(&y[..d - 1]) <= y[d - 1] + tol,
            ConvexCone::Product(parts) => {
                self.blocks(y).zip(parts).all(|(b, p)| p.contains(b, tol))
            }
        }
    }

    /// Membership in the polar cone with absolute slack `tol`.
    pub fn polar_contains(&self, y: &[f64], tol: f64) -> bool {
        if y.len() != self.dim() {
            return false;
        }
        match self {
            ConvexCone::NonnegativeOrthant(_) => y.iter().all(|v| *v <= tol),
            ConvexCone::NonpositiveOrthant(_) => y.iter().all(|v| *v >= -tol),
            ConvexCone::ZeroCone(_) => true,
            ConvexCone::FreeCone(_) => y.iter().all(|v| v.abs() <= tol),
            ConvexCone::SecondOrderCone(d) => linalg::norm(&y[..d - 1]) <= -y[d - 1] + tol,
            ConvexCone::Product(parts) => self
                .blocks(y)
                .zip(parts)
                .all(|(b, p)| p.polar_contains(b, tol)),
        }
    }

    /// Largest `eps` with `y + eps * B` inside the cone (0 when `y` is not interior).
    pub fn interior_margin(&self, y: &[f64]) -> f64 {
        match self {
            ConvexCone::NonnegativeOrthant(_) => {
                y.iter().fold(f64::INFINITY, |a, v| a.min(*v)).max(0.0)
            }
            ConvexCone::NonpositiveOrthant(_) => {
                y.iter().fold(f64::INFINITY, |a, v| a.min(-v)).max(0.0)
            }
            ConvexCone::ZeroCone(d) => {
                if *d == 0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            ConvexCone::FreeCone(_) => f64::INFINITY,
            ConvexCone::SecondOrderCone(d) => {
                let t = y[d - 1];
                if *d == 1 {
                    t.max(0.0)
                } else {
                    ((t - linalg::norm(&y[..d - 1])) / std::f64::consts::SQRT_2).max(0.0)
                }
            }
            ConvexCone::Product(parts) => self
                .blocks(y)
                .zip(parts)
                .map(|(b, p)| p.interior_margin(b))
                .fold(f64::INFINITY, f64::min),
        }
    }

    fn blocks<'a>(&'a self, y: &'a [f64]) -> impl Iterator<Item = &'a [f64]> + 'a {
        let dims: Vec<usize> = match self {
            ConvexCone::Product(parts) => parts.iter().map(ConvexCone::dim).collect(),
            other => vec![other.dim()],
        };
        let mut offset = 0;
        dims.into_iter().map(move |d| {
            let b = &y[offset..offset + d];
            offset += d;
            b
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn projection_examples() {
        let pos = ConvexCone::NonnegativeOrthant(2);
        assert_close(&pos.project(&[1.0, -2.0]).unwrap(), &[1.0, 0.0], 1e-12);
        let soc = ConvexCone::SecondOrderCone(3);
        assert_close(
            &soc.project(&[1.0, 0.0, -2.0]).unwrap(),
            &[0.0, 0.0, 0.0],
            1e-12,
        );
        assert_close(
            &soc.project(&[3.0, 0.0, 1.0]).unwrap(),
            &[2.0, 0.0, 2.0],
            1e-12,
        );
    }

    #[test]
    fn polar_examples() {
        let neg = ConvexCone::NonpositiveOrthant(2);
        assert_close(
            &neg.polar_project(&[1.0, -2.0]).unwrap(),
            &[1.0, 0.0],
            1e-12,
        );
        let free = ConvexCone::FreeCone(3);
        assert_close(
            &free.polar_project(&[1.0, -2.0, 5.0]).unwrap(),
            &[0.0; 3],
            1e-12,
        );
        let soc = ConvexCone::SecondOrderCone(3);
        assert_close(
            &soc.polar_project(&[3.0, 0.0, 1.0]).unwrap(),
            &[1.0, 0.0, -1.0],
            1e-12,
        );
    }

    /// Dense 2-D grid search over the polar cone `{(u, t): |u| <= -t}` (u scalar).
    #[test]
    fn soc_polar_against_grid_search() {
        let target = [3.0, 1.0];
        let h = 1e-3;
        let mut best = (f64::INFINITY, [0.0, 0.0]);
        let steps = (4.0 / h) as i64;
        for i in -steps..=steps {
            let t = -(i.abs() as f64) * h; // t <= 0
            let umax = -t;
            let nu = (umax / h).round() as i64;
            for j in -nu..=nu {
                let u = j as f64 * h;
                let d = (u - target[0]).powi(2) + (t - target[1]).powi(2);
                if d < best.0 {
                    best = (d, [u, t]);
                }
            }
        }
        let soc = ConvexCone::SecondOrderCone(2);
        let exact = soc.polar_project(&target).unwrap();
        assert_close(&exact, &best.1, 2e-3);
        assert_close(&exact, &[1.0, -1.0], 1e-12);
    }

    #[test]
    fn product_cone_is_blockwise() {
        let c = ConvexCone::Product(vec![
            ConvexCone::NonnegativeOrthant(1),
            ConvexCone::SecondOrderCone(3),
            ConvexCone::ZeroCone(1),
        ]);
        assert_eq!(c.dim(), 5);
        let p = c.project(&[-1.0, 3.0, 0.0, 1.0, 4.0]).unwrap();
        assert_close(&p, &[0.0, 2.0, 0.0, 2.0, 0.0], 1e-12);
        assert!(c.contains(&p, CONE_TOL));
        let q = c.polar_project(&[-1.0, 3.0, 0.0, 1.0, 4.0]).unwrap();
        assert!(c.polar_contains(&q, CONE_TOL));
    }

    #[test]
    fn interior_margins() {
        assert_eq!(
            ConvexCone::NonpositiveOrthant(2).interior_margin(&[-1.0, -0.25]),
            0.25
        );
        assert_eq!(
            ConvexCone::NonpositiveOrthant(2).interior_margin(&[-1.0, 0.5]),
            0.0
        );
        let soc = ConvexCone::SecondOrderCone(2);
        // distance from (0, 1) to the boundary line t = |u| is 1/sqrt(2)
        assert!((soc.interior_margin(&[0.0, 1.0]) - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(
            ConvexCone::FreeCone(3).interior_margin(&[0.0; 3]),
            f64::INFINITY
        );
    }

    #[test]
    fn dimension_mismatch() {
        let c = ConvexCone::SecondOrderCone(3);
        assert!(matches!(
            c.project(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(c.polar_project(&[1.0, 2.0]).is_err());
        assert!(ConvexCone::SecondOrderCone(0).validate().is_err());
    }

    #[test]
    fn one_dimensional_soc_is_half_line() {
        let c = ConvexCone::SecondOrderCone(1);
        assert_eq!(c.project(&[-2.0]).unwrap(), vec![0.0]);
        assert_eq!(c.project(&[2.0]).unwrap(), vec![2.0]);
    }
}
