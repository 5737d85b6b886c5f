//! Error measures and statistical post-processing of run traces.

use crate::cones::ConvexCone;
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::oracles::{ConicOracle, MinimaxOracle};
use crate::point::PrimalDualPoint;
use crate::record::{IterateView, MetricHook};
use crate::rng::RandomSource;
use crate::saps::SapsProblem;

/// Deterministic evaluation of `phi(x, y)`.
pub trait SaddleFunction {
    fn phi(&self, x: &[f64], y: &[f64]) -> Result<f64>;
}

/// `theta(x) + E[F(x, y, xi)] - omega(y)` using the oracle's closed-form expectation.
impl<O: MinimaxOracle> SaddleFunction for SapsProblem<O> {
    fn phi(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let z = PrimalDualPoint {
            x: x.to_vec(),
            y: y.to_vec(),
        };
        let (n, m) = self.oracle.dims();
        z.check_dims(n, m)?;
        let sample = self
            .oracle
            .exact_expectation(&z)
            .unwrap_or_else(|| Err(Error::arg("oracle has no closed-form expectation")))?;
        Ok(self.theta.eval(x) + sample.value - self.omega.eval(y))
    }
}

/// Minimax optimality gap, raw and clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub raw: f64,
    pub value: f64,
}

/// `phi(x, y*) - phi(x*, y)`. Nonnegative up to rounding when `z_star` is a saddle point.
pub fn minimax_gap<E: SaddleFunction + ?Sized>(
    eval: &E,
    z: &PrimalDualPoint,
    z_star: &PrimalDualPoint,
) -> Result<Gap> {
    let raw = eval.phi(&z.x, &z_star.y)? - eval.phi(&z_star.x, &z.y)?;
    Ok(Gap {
        raw,
        value: raw.max(0.0),
    })
}

pub fn dist_to_saddle(z: &PrimalDualPoint, z_star: &PrimalDualPoint) -> f64 {
    z.dist(z_star)
}

/// Stacked gradient `(grad_x l, grad_y l)` of a deterministic Lagrangian.
pub trait LagrangianGradient {
    fn grad_l(&self, z: &PrimalDualPoint) -> Result<Vec<f64>>;
}

/// Full-batch Lagrangian `l(x, y) = f(x) + <y, g(x)>` of a conic program.
#[derive(Debug, Clone, Copy)]
pub struct ConicLagrangian<'a, O> {
    pub oracle: &'a O,
}

impl<'a, O: ConicOracle> ConicLagrangian<'a, O> {
    pub fn new(oracle: &'a O) -> Self {
        Self { oracle }
    }

    fn check(&self, z: &PrimalDualPoint) -> Result<()> {
        z.check_dims(self.oracle.dim_x(), self.oracle.cone().dim())
    }

    /// Natural KKT residual of the constrained problem:
    ///
    /// ```text
    /// sqrt( ||x - P_X(x - grad_x l(x, y))||^2 + ||y - P_{K polar}(y + g(x))||^2 )
    /// ```
    ///
    /// It vanishes exactly at KKT points: the first term is zero iff
    /// `-grad_x l` lies in the normal cone of `X` at `x`, the second iff
    /// `y in K polar`, `g(x) in K` and `<y, g(x)> = 0`.
    pub fn proj_kkt(&self, z: &PrimalDualPoint) -> Result<f64> {
        self.check(z)?;
        let s = self.oracle.full_batch(&z.x)?;
        let gx = linalg::add(&s.f_grad, &s.g_jacobian.apply_transpose(&z.y)?);
        let px = self
            .oracle
            .feasible_set()
            .project(&linalg::sub(&z.x, &gx))?;
        let py = self
            .oracle
            .cone()
            .polar_project(&linalg::add(&z.y, &s.g_value))?;
        Ok((linalg::dist(&z.x, &px).powi(2) + linalg::dist(&z.y, &py).powi(2)).sqrt())
    }

    /// `||g(x) - P_K(g(x))||` at the full batch.
    pub fn violation(&self, x: &[f64]) -> Result<f64> {
        let g = self.oracle.full_batch(x)?.g_value;
        constraint_violation(self.oracle.cone(), &g)
    }
}

impl<O: ConicOracle> LagrangianGradient for ConicLagrangian<'_, O> {
    fn grad_l(&self, z: &PrimalDualPoint) -> Result<Vec<f64>> {
        self.check(z)?;
        let s = self.oracle.full_batch(&z.x)?;
        let mut g = linalg::add(&s.f_grad, &s.g_jacobian.apply_transpose(&z.y)?);
        g.extend_from_slice(&s.g_value);
        Ok(g)
    }
}

/// `||P_{K polar}(g)||`, the distance from `g` to the cone.
pub fn constraint_violation(cone: &ConvexCone, g_value: &[f64]) -> Result<f64> {
    Ok(linalg::norm(&cone.polar_project(g_value)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktErrors {
    pub rerror: f64,
    pub raerror: f64,
}

/// Relative KKT errors of a trace against the starting point `z0`.
///
/// `rerror` is the smallest `||grad_l(z^i)||` over the trace and `raerror`
/// the mean of `||grad_l(zhat^i)||` over the averaged trace, both divided by
/// `||grad_l(z0)||`.
pub fn kkt_errors<E: LagrangianGradient + ?Sized>(
    eval: &E,
    z0: &PrimalDualPoint,
    iterates: &[PrimalDualPoint],
    averages: &[PrimalDualPoint],
) -> Result<KktErrors> {
    if iterates.is_empty() || averages.is_empty() {
        return Err(Error::arg("kkt_errors needs a nonempty trace"));
    }
    let base = linalg::norm(&eval.grad_l(z0)?);
    if base == 0.0 {
        return Err(Error::DegenerateStart);
    }
    let mut best = f64::INFINITY;
    for z in iterates {
        best = best.min(linalg::norm(&eval.grad_l(z)?));
    }
    let mut total = 0.0;
    for z in averages {
        total += linalg::norm(&eval.grad_l(z)?);
    }
    Ok(KktErrors {
        rerror: best / base,
        raerror: total / averages.len() as f64 / base,
    })
}

/// Streaming version of [`kkt_errors`] plus projected residual and
/// constraint violation of the averaged iterate, as a metric hook.
///
/// Emits `rerror`, `raerror`, `proj_kkt`, `constraint_violation`, `grad_norm`;
/// evaluation failures are reported as NaN.
pub struct KktTracker<'a, O> {
    lagrangian: ConicLagrangian<'a, O>,
    base: f64,
    best: f64,
    avg_total: f64,
    count: u64,
}

impl<'a, O: ConicOracle> KktTracker<'a, O> {
    pub fn new(oracle: &'a O, z0: &PrimalDualPoint) -> Result<Self> {
        let lagrangian = ConicLagrangian::new(oracle);
        let base = linalg::norm(&lagrangian.grad_l(z0)?);
        if base == 0.0 {
            return Err(Error::DegenerateStart);
        }
        Ok(Self {
            lagrangian,
            base,
            best: f64::INFINITY,
            avg_total: 0.0,
            count: 0,
        })
    }

    fn try_evaluate(&mut self, view: &IterateView<'_>) -> Result<Vec<f64>> {
        let g = linalg::norm(&self.lagrangian.grad_l(view.iterate)?);
        let ga = linalg::norm(&self.lagrangian.grad_l(view.average)?);
        self.best = self.best.min(g);
        self.avg_total += ga;
        self.count += 1;
        Ok(vec![
            self.best / self.base,
            self.avg_total / self.count as f64 / self.base,
            self.lagrangian.proj_kkt(view.average)?,
            self.lagrangian.violation(&view.average.x)?,
            g,
        ])
    }
}

impl<O: ConicOracle> MetricHook for KktTracker<'_, O> {
    fn names(&self) -> Vec<String> {
        [
            "rerror",
            "raerror",
            "proj_kkt",
            "constraint_violation",
            "grad_norm",
        ]
        .map(String::from)
        .to_vec()
    }

    fn evaluate(&mut self, view: &IterateView<'_>) -> Vec<f64> {
        self.try_evaluate(view)
            .unwrap_or_else(|_| vec![f64::NAN; 5])
    }
}

/// Least-squares fit of `log err = intercept + slope log N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn rate_slope_fit(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::arg(format!(
            "slope fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for (i, &(n, e)) in points.iter().enumerate() {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::arg(format!("horizon must be positive, got {n}")));
        }
        if !(e.is_finite() && e > 0.0) {
            return Err(Error::arg(format!(
                "error values must be positive, got {e}"
            )));
        }
        if points[..i].iter().any(|&(m, _)| m == n) {
            return Err(Error::arg(format!("duplicate horizon {n}")));
        }
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot <= f64::EPSILON * f64::EPSILON * k {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    Ok(SlopeFit {
        slope,
        intercept,
        r2,
    })
}

/// Fraction of `values` at or above `threshold`.
pub fn tail_tally(values: &[f64], threshold: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::arg("tail_tally needs at least one value"));
    }
    let hits = values.iter().filter(|&&v| v >= threshold).count();
    Ok(hits as f64 / values.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation over `sqrt(count)`; zero for a single value.
    pub stderr: f64,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::arg("cannot summarize an empty sample"));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let stderr = if n > 1 {
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Ok(SummaryStats {
        count: n,
        mean,
        median: median(values)?,
        stderr,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::arg("median of an empty sample"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Estimates `M*`, the square root of the largest mean squared oracle norm
/// `E ||(G_x, G_y)||^2` over the given points, from `draws` samples each.
pub fn estimate_oracle_bound<O: MinimaxOracle>(
    oracle: &O,
    points: &[PrimalDualPoint],
    draws: usize,
    rng: &mut RandomSource,
) -> Result<f64> {
    if points.is_empty() || draws == 0 {
        return Err(Error::arg("need at least one point and one draw"));
    }
    let (n, m) = oracle.dims();
    let mut best = 0.0f64;
    for z in points {
        z.check_dims(n, m)?;
        let mut total = 0.0;
        for _ in 0..draws {
            let s = oracle.sample(rng, z)?;
            check_dim(n, s.grad_x.len())?;
            total += linalg::norm_sq(&s.grad_x) + linalg::norm_sq(&s.grad_y);
        }
        best = best.max(total / draws as f64);
    }
    Ok(best.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::BilinearOracle;
    use crate::prox::ProximableFunction;

    fn p(x: f64, y: f64) -> PrimalDualPoint {
        PrimalDualPoint::new(vec![x], vec![y]).unwrap()
    }

    fn bilinear_l1() -> SapsProblem<BilinearOracle> {
        let l1 = ProximableFunction::ScaledL1 { mu: 1.0 };
        SapsProblem::new(BilinearOracle::new(1).unwrap(), l1.clone(), l1).unwrap()
    }

    #[test]
    fn gap_examples() {
        let prob = bilinear_l1();
        let zs = p(0.0, 0.0);
        assert_eq!(minimax_gap(&prob, &zs, &zs).unwrap().raw, 0.0);
        let g = minimax_gap(&prob, &p(1.0, 1.0), &zs).unwrap();
        assert!((g.raw - 2.0).abs() < 1e-15);
    }

    struct Shifted<'a>(&'a SapsProblem<BilinearOracle>, f64);

    impl SaddleFunction for Shifted<'_> {
        fn phi(&self, x: &[f64], y: &[f64]) -> Result<f64> {
            Ok(self.0.phi(x, y)? + self.1)
        }
    }

    #[test]
    fn gap_ignores_constant_shift() {
        let prob = bilinear_l1();
        let (z, zs) = (p(0.7, -0.4), p(0.0, 0.0));
        let a = minimax_gap(&prob, &z, &zs).unwrap().raw;
        let b = minimax_gap(&Shifted(&prob, 12.5), &z, &zs).unwrap().raw;
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn gap_is_nonnegative_on_grid() {
        let prob = bilinear_l1();
        let zs = p(0.0, 0.0);
        for i in -20..=20 {
            for j in -20..=20 {
                let z = p(i as f64 * 0.1, j as f64 * 0.1);
                assert!(minimax_gap(&prob, &z, &zs).unwrap().raw >= -1e-9);
            }
        }
    }

    struct Table(Vec<(PrimalDualPoint, f64)>);

    impl LagrangianGradient for Table {
        fn grad_l(&self, z: &PrimalDualPoint) -> Result<Vec<f64>> {
            let (_, v) = self.0.iter().find(|(q, _)| q == z).unwrap();
            Ok(vec![*v, 0.0])
        }
    }

    #[test]
    fn kkt_examples() {
        let (a, b, c) = (p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0));
        let t = Table(vec![(a.clone(), 4.0), (b.clone(), 1.0), (c.clone(), 0.0)]);
        let e = kkt_errors(&t, &a, &[a.clone(), b.clone()], &[a.clone(), b.clone()]).unwrap();
        assert_eq!(e.rerror, 0.25);
        assert_eq!(e.raerror, 0.625);
        let e = kkt_errors(&t, &a, &vec![a.clone(); 3], &vec![a.clone(); 3]).unwrap();
        assert_eq!((e.rerror, e.raerror), (1.0, 1.0));
        let e = kkt_errors(&t, &a, &[b.clone(), c.clone()], std::slice::from_ref(&b)).unwrap();
        assert_eq!(e.rerror, 0.0);
        assert_eq!(
            kkt_errors(&t, &c, std::slice::from_ref(&a), std::slice::from_ref(&a)).unwrap_err(),
            Error::DegenerateStart
        );
    }

    #[test]
    fn violation_examples() {
        let c = ConvexCone::NonpositiveOrthant(2);
        assert_eq!(constraint_violation(&c, &[-1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(constraint_violation(&c, &[-1.0, -2.0]).unwrap(), 0.0);
        let soc = ConvexCone::SecondOrderCone(3);
        let v = constraint_violation(&soc, &[3.0, 0.0, 1.0]).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn slope_examples() {
        let pts: Vec<(f64, f64)> = [1.0, 4.0, 16.0]
            .iter()
            .map(|&n: &f64| (n, 3.0 / n.sqrt()))
            .collect();
        let f = rate_slope_fit(&pts).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        let f = rate_slope_fit(&[(1.0, 2.0), (10.0, 2.0), (100.0, 2.0)]).unwrap();
        assert_eq!(f.slope, 0.0);
        assert_eq!(f.r2, 1.0);
        let f = rate_slope_fit(&[(2.0, 0.5), (20.0, 0.05), (200.0, 0.005)]).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!(rate_slope_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(rate_slope_fit(&[(1.0, 1.0), (1.0, 2.0), (3.0, 1.0)]).is_err());
        assert!(rate_slope_fit(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn tail_examples() {
        let v = [1.0, 2.0, 3.0, 10.0];
        assert_eq!(tail_tally(&v, 5.0).unwrap(), 0.25);
        assert_eq!(tail_tally(&v, 0.0).unwrap(), 1.0);
        assert_eq!(tail_tally(&v, 11.0).unwrap(), 0.0);
        assert!(tail_tally(&[], 1.0).is_err());
    }

    #[test]
    fn summary_stats() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.mean, s.median, s.min, s.max), (2.5, 2.5, 1.0, 4.0));
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.stderr - sd / 2.0).abs() < 1e-15);
        assert_eq!(summarize(&[7.0]).unwrap().stderr, 0.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
    }

    #[test]
    fn oracle_bound_of_frozen_draw() {
        let o = crate::oracles::FrozenOracle {
            inner: BilinearOracle::new(1).unwrap(),
            draw: vec![0.5],
        };
        let mut rng = RandomSource::new(0, 0);
        let m = estimate_oracle_bound(&o, &[p(1.0, 1.0)], 10, &mut rng).unwrap();
        assert!((m - (2.0f64 * 0.0625).sqrt()).abs() < 1e-15);
    }
}
