#![allow(dead_code)]

use saddle_core::{ProximableFunction, RandomSource};

/// Minimizes `f` over the box `[lo, hi]` by successive grid refinement.
///
/// Each round evaluates a uniform grid that includes both window endpoints,
/// then shrinks the window to a few steps around the best point, clipped to
/// the original box so that its faces stay on the grid. Stops once the grid
/// step is at most `final_step`.
pub fn grid_minimize(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    final_step: f64,
) -> Vec<f64> {
    let d = lo.len();
    let (outer_lo, outer_hi) = (lo.to_vec(), hi.to_vec());
    let mut lo = lo.to_vec();
    let mut hi = hi.to_vec();
    let per_axis: usize = if d == 1 { 2001 } else { 201 };
    loop {
        let steps: Vec<f64> = (0..d)
            .map(|i| (hi[i] - lo[i]) / (per_axis - 1) as f64)
            .collect();
        let mut best = (f64::INFINITY, lo.clone());
        let total = per_axis.pow(d as u32);
        let mut w = vec![0.0; d];
        for flat in 0..total {
            let mut rem = flat;
            for i in 0..d {
                let j = rem % per_axis;
                w[i] = if j == per_axis - 1 {
                    hi[i]
                } else {
                    lo[i] + j as f64 * steps[i]
                };
                rem /= per_axis;
            }
            let v = f(&w);
            if v < best.0 {
                best = (v, w.clone());
            }
        }
        let step = steps.iter().cloned().fold(0.0, f64::max);
        if step <= final_step {
            return best.1;
        }
        for i in 0..d {
            lo[i] = (best.1[i] - 4.0 * steps[i]).max(outer_lo[i]);
            hi[i] = (best.1[i] + 4.0 * steps[i]).min(outer_hi[i]);
        }
    }
}

/// Prox by grid search.
///
/// Unconstrained kinds search the window `v +- (|v| + 3)`. Indicator kinds
/// search a grid whose faces coincide with the set boundary: the box itself,
/// or polar coordinates around the center for a 2-D ball, so boundary
/// minimizers are representable exactly.
pub fn grid_prox(f: &ProximableFunction, gamma: f64, v: &[f64]) -> Vec<f64> {
    let dist_sq = |w: &[f64]| -> f64 { w.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum() };
    match f {
        ProximableFunction::BoxIndicator { lo, hi } => {
            let lo = vec![*lo; v.len()];
            let hi = vec![*hi; v.len()];
            grid_minimize(&|w| dist_sq(w), &lo, &hi, 1e-5)
        }
        ProximableFunction::BallIndicator { center, radius } if v.len() == 2 => {
            let to_w = |p: &[f64]| [center[0] + p[0] * p[1].cos(), center[1] + p[0] * p[1].sin()];
            let p = grid_minimize(
                &|p| dist_sq(&to_w(p)),
                &[0.0, -std::f64::consts::PI],
                &[*radius, std::f64::consts::PI],
                1e-6,
            );
            to_w(&p).to_vec()
        }
        ProximableFunction::BallIndicator { center, radius } => {
            let lo: Vec<f64> = center.iter().map(|c| c - radius).collect();
            let hi: Vec<f64> = center.iter().map(|c| c + radius).collect();
            grid_minimize(&|w| dist_sq(w), &lo, &hi, 1e-5)
        }
        _ => {
            let obj = |w: &[f64]| f.eval(w) + dist_sq(w) / (2.0 * gamma);
            let lo: Vec<f64> = v.iter().map(|x| x - x.abs() - 3.0).collect();
            let hi: Vec<f64> = v.iter().map(|x| x + x.abs() + 3.0).collect();
            grid_minimize(&obj, &lo, &hi, 1e-5)
        }
    }
}

/// Every function kind at a random parameterization for dimension `d`.
pub fn random_kinds(rng: &mut RandomSource, d: usize) -> Vec<ProximableFunction> {
    let mu = rng.uniform_in(0.1, 2.0);
    let lo = rng.uniform_in(-2.0, 0.0);
    vec![
        ProximableFunction::Zero,
        ProximableFunction::ScaledL1 { mu },
        ProximableFunction::ScaledL2 { mu },
        ProximableFunction::PositivePartSum { mu },
        ProximableFunction::BallIndicator {
            center: rng.uniform_vec(d, -1.0, 1.0),
            radius: rng.uniform_in(0.2, 2.0),
        },
        ProximableFunction::BoxIndicator {
            lo,
            hi: lo + rng.uniform_in(0.1, 3.0),
        },
    ]
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Central difference of `f` along coordinate `i`.
pub fn central_difference(f: &dyn Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[i] += h;
    m[i] -= h;
    (f(&p) - f(&m)) / (2.0 * h)
}

/// Relative error with the denominator floored at `1e-3`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / scale.max(1e-3)
}
