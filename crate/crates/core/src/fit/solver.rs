//! Damped Gauss-Newton for models observed through multiplicative
//! periodogram noise: the variance of a bin is `model² / n_avg`, so the
//! weights are rebuilt from the current model every iteration.

use nalgebra::{SMatrix, SVector};
// Shadowed by the inherent methods whenever std is in the build graph.
#[allow(unused_imports)]
use num_traits::Float;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitOptions {
    pub max_iters: usize,
    /// Converged when every parameter step is below this fraction of the
    /// parameter's scale.
    pub step_tol: f64,
    /// Converged when chi² changes by less than this fraction.
    pub chi2_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 200,
            step_tol: 1e-8,
            chi2_tol: 1e-10,
        }
    }
}

/// One observed bin: abscissa, value, channel (which model branch applies)
/// and the number of averages behind it.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    pub x: f64,
    pub y: f64,
    pub channel: usize,
    pub n_avg: f64,
}

pub(crate) trait Model<const P: usize> {
    /// Model value and gradient for one sample.
    fn eval(&self, p: &[f64; P], s: &Sample) -> (f64, [f64; P]);
    /// Typical magnitude of each parameter, used by the step criterion.
    fn scale(&self, p: &[f64; P]) -> [f64; P];
    fn feasible(&self, p: &[f64; P]) -> bool;
}

#[derive(Debug, Clone)]
pub(crate) struct Solution<const P: usize> {
    pub params: [f64; P],
    pub covariance: [[f64; P]; P],
    pub chi2: f64,
    pub iterations: usize,
    /// False when the iteration limit was reached first; the parameters are
    /// then the last accepted iterate.
    pub converged: bool,
}

const MAX_HALVINGS: usize = 60;

fn weight(m: f64, n_avg: f64) -> Option<f64> {
    (m > 0.0 && m.is_finite()).then(|| n_avg / (m * m))
}

fn weighted_chi2<const P: usize, M: Model<P>>(
    model: &M,
    p: &[f64; P],
    samples: &[Sample],
    weights: &[f64],
) -> Option<f64> {
    let mut chi2 = 0.0;
    for (s, w) in samples.iter().zip(weights) {
        let (m, _) = model.eval(p, s);
        if !(m > 0.0) {
            return None;
        }
        chi2 += w * (s.y - m) * (s.y - m);
    }
    chi2.is_finite().then_some(chi2)
}

struct Normal<const P: usize> {
    matrix: SMatrix<f64, P, P>,
    gradient: SVector<f64, P>,
    chi2: f64,
}

fn normal_equations<const P: usize, M: Model<P>>(
    model: &M,
    p: &[f64; P],
    samples: &[Sample],
    weights: &mut [f64],
) -> Result<Normal<P>> {
    let mut matrix = SMatrix::<f64, P, P>::zeros();
    let mut gradient = SVector::<f64, P>::zeros();
    let mut chi2 = 0.0;
    for (s, w_out) in samples.iter().zip(weights.iter_mut()) {
        let (m, grad) = model.eval(p, s);
        let w = weight(m, s.n_avg).ok_or(Error::SingularNormalMatrix)?;
        *w_out = w;
        let r = s.y - m;
        chi2 += w * r * r;
        let g = SVector::<f64, P>::from_row_slice(&grad);
        matrix += g * g.transpose() * w;
        gradient += g * (w * r);
    }
    Ok(Normal {
        matrix,
        gradient,
        chi2,
    })
}

fn invert<const P: usize>(matrix: SMatrix<f64, P, P>) -> Result<SMatrix<f64, P, P>> {
    // Equilibrate before factorising: parameters differ by many decades.
    let d = SVector::<f64, P>::from_fn(|i, _| {
        let v = matrix[(i, i)];
        if v > 0.0 {
            1.0 / v.sqrt()
        } else {
            0.0
        }
    });
    if d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::SingularNormalMatrix);
    }
    let scaled = SMatrix::<f64, P, P>::from_fn(|i, j| matrix[(i, j)] * d[i] * d[j]);
    let chol = scaled.cholesky().ok_or(Error::SingularNormalMatrix)?;
    let inv = chol.inverse();
    Ok(SMatrix::<f64, P, P>::from_fn(|i, j| {
        inv[(i, j)] * d[i] * d[j]
    }))
}

fn to_array<const P: usize>(m: &SMatrix<f64, P, P>) -> [[f64; P]; P] {
    let mut out = [[0.0; P]; P];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    out
}

pub(crate) fn solve<const P: usize, M: Model<P>>(
    model: &M,
    samples: &[Sample],
    init: [f64; P],
    opts: &FitOptions,
) -> Result<Solution<P>> {
    if samples.len() <= P {
        return Err(Error::SingularNormalMatrix);
    }
    if !model.feasible(&init) || init.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config(
            "initial parameters are not finite or feasible".into(),
        ));
    }
    let mut p = init;
    let mut weights = alloc::vec![0.0; samples.len()];
    for iteration in 1..=opts.max_iters {
        let normal = normal_equations(model, &p, samples, &mut weights)?;
        let inv = invert(normal.matrix)?;
        let delta = inv * normal.gradient;
        let scale = model.scale(&p);

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = p;
            for (t, d) in trial.iter_mut().zip(delta.iter()) {
                *t += lambda * d;
            }
            if model.feasible(&trial) {
                if let Some(c) = weighted_chi2(model, &trial, samples, &weights) {
                    if c <= normal.chi2 {
                        accepted = Some((trial, c));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        let Some((next, chi2_next)) = accepted else {
            // No descent direction left for the current weights: p is the
            // minimiser to working precision.
            return finish(model, samples, p, iteration, true, &mut weights);
        };
        let small_step = delta
            .iter()
            .zip(scale.iter())
            .all(|(d, s)| (lambda * d).abs() <= opts.step_tol * s.abs());
        let small_change =
            normal.chi2 > 0.0 && (normal.chi2 - chi2_next).abs() <= opts.chi2_tol * normal.chi2;
        p = next;
        if small_step || small_change {
            return finish(model, samples, p, iteration, true, &mut weights);
        }
    }
    finish(model, samples, p, opts.max_iters, false, &mut weights)
}

fn finish<const P: usize, M: Model<P>>(
    model: &M,
    samples: &[Sample],
    p: [f64; P],
    iterations: usize,
    converged: bool,
    weights: &mut [f64],
) -> Result<Solution<P>> {
    let normal = normal_equations(model, &p, samples, weights)?;
    let cov = invert(normal.matrix)?;
    Ok(Solution {
        params: p,
        covariance: to_array(&cov),
        chi2: normal.chi2,
        iterations,
        converged,
    })
}
