//! Closed-form reference values and small fitting utilities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::ScalarField;
use crate::error::{arg_err, Result};
use crate::mesh::SimplicialMesh;

/// Concentric spherical condenser `r_inner < |x| < r_outer` in R^n.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialCondenserSpec {
    pub n: usize,
    pub r_inner: f64,
    pub r_outer: f64,
}

impl RadialCondenserSpec {
    pub fn new(n: usize, r_inner: f64, r_outer: f64) -> Result<Self> {
        if n != 2 && n != 3 {
            return arg_err(format!("dimension must be 2 or 3, got {n}"));
        }
        if !(r_inner > 0.0 && r_inner < r_outer && r_outer.is_finite()) {
            return arg_err("radii must satisfy 0 < r_inner < r_outer");
        }
        Ok(RadialCondenserSpec { n, r_inner, r_outer })
    }
}

/// Surface measure of the unit (n-1)-sphere.
pub fn sphere_measure(n: usize) -> f64 {
    match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("sphere_measure: n must be 2 or 3"),
    }
}

/// `omega_{n-1} * log(R/r)^(1-n)`, the n-capacity of the spherical ring.
pub fn radial_capacity(spec: &RadialCondenserSpec) -> f64 {
    let n = spec.n as f64;
    sphere_measure(spec.n) * (spec.r_outer / spec.r_inner).ln().powf(1.0 - n)
}

/// Nodal samples of the radial extremal `log(|x|/r) / log(R/r)`, clamped to
/// `[0, 1]`, centered at the origin.
pub fn radial_witness(spec: &RadialCondenserSpec, mesh: &SimplicialMesh) -> Result<ScalarField> {
    if mesh.dim() != spec.n {
        return arg_err("mesh dimension differs from the condenser dimension");
    }
    let span = (spec.r_outer / spec.r_inner).ln();
    ScalarField::from_fn(mesh, |p| {
        let r = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        if r <= 0.0 {
            0.0
        } else {
            ((r / spec.r_inner).ln() / span).clamp(0.0, 1.0)
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceFit {
    pub order: f64,
    pub intercept: f64,
    /// Indices of samples dropped because they hit the reference exactly.
    pub excluded: Vec<usize>,
    pub non_convergent: bool,
}

/// Observed order below which a sequence is reported as non-convergent.
pub const MIN_CONVERGENT_ORDER: f64 = 0.1;

/// Least-squares slope of `log|value - reference|` against `log h`.
pub fn convergence_order(samples: &[(f64, f64)], reference: f64) -> Result<ConvergenceFit> {
    if samples.len() < 3 {
        return arg_err("convergence_order needs at least 3 samples");
    }
    if samples.windows(2).any(|w| !(w[1].0 < w[0].0)) || samples.iter().any(|s| !(s.0 > 0.0)) {
        return arg_err("mesh sizes must be positive and strictly decreasing");
    }
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &(h, v)) in samples.iter().enumerate() {
        let err = (v - reference).abs();
        if err == 0.0 {
            log::info!("sample {i} equals the reference exactly and is excluded");
            excluded.push(i);
        } else {
            xs.push(h.ln());
            ys.push(err.ln());
        }
    }
    if xs.len() < 2 {
        return arg_err("fewer than 2 samples differ from the reference");
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    Ok(ConvergenceFit {
        order: slope,
        intercept,
        excluded,
        non_convergent: slope < MIN_CONVERGENT_ORDER,
    })
}

/// Ordinary least squares `y = slope * x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Fit of `c = limit + amplitude * (log R + offset)^(1-n)`.
///
/// The offset absorbs the size of the inner set, so that ring-like decay
/// `omega / log(R/rho)^(n-1)` is fitted exactly with `limit = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub limit: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub rms_residual: f64,
}

fn fit_with_offset(logs: &[f64], values: &[f64], n: usize, offset: f64, free_limit: bool) -> (f64, f64, f64) {
    let xs: Vec<f64> = logs.iter().map(|l| (l + offset).powf(1.0 - n as f64)).collect();
    let (a, b) = if free_limit {
        linear_fit(&xs, values)
    } else {
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(values).map(|(x, y)| x * y).sum();
        (sxy / sxx, 0.0)
    };
    let rms = (xs.iter().zip(values).map(|(x, v)| (b + a * x - v).powi(2)).sum::<f64>() / values.len() as f64).sqrt();
    (a, b, rms)
}

/// Fits a [`DecayFit`] to `(R_i, c_i)` by scanning the offset and solving the
/// remaining linear least-squares problem.
pub fn decay_fit(samples: &[(f64, f64)], n: usize) -> Result<DecayFit> {
    fit_decay(samples, n, true)
}

/// Like [`decay_fit`] with the limit pinned to zero: pure decay.
pub fn pure_decay_fit(samples: &[(f64, f64)], n: usize) -> Result<DecayFit> {
    fit_decay(samples, n, false)
}

fn fit_decay(samples: &[(f64, f64)], n: usize, free_limit: bool) -> Result<DecayFit> {
    if samples.len() < 3 {
        return arg_err("decay fit needs at least 3 samples");
    }
    if samples.iter().any(|s| !(s.0 > 1.0)) {
        return arg_err("exhaustion radii must exceed 1 for a logarithmic fit");
    }
    let logs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let values: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let lmin = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    // offset + lmin ranges over [1e-3, 1e4] on a log grid, then golden refinement.
    let grid: Vec<f64> = (0..=1400)
        .map(|i| 10f64.powf(-3.0 + 7.0 * i as f64 / 1400.0) - lmin)
        .collect();
    let score = |s: f64| fit_with_offset(&logs, &values, n, s, free_limit).2;
    let best = grid
        .iter()
        .enumerate()
        .min_by(|a, b| score(*a.1).total_cmp(&score(*b.1)))
        .map(|(i, _)| i)
        .unwrap();
    let mut lo = grid[best.saturating_sub(1)];
    let mut hi = grid[(best + 1).min(grid.len() - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        if score(m1) <= score(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let offset = 0.5 * (lo + hi);
    let (amplitude, limit, rms_residual) = fit_with_offset(&logs, &values, n, offset, free_limit);
    Ok(DecayFit {
        limit,
        amplitude,
        offset,
        rms_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annulus_reference_values() {
        let two = radial_capacity(&RadialCondenserSpec::new(2, 0.25, 1.0).unwrap());
        assert!((two - 4.532360).abs() < 1e-6);
        let three = radial_capacity(&RadialCondenserSpec::new(3, 0.25, 1.0).unwrap());
        assert!((three - 6.538_813_5).abs() < 1e-6);
    }

    #[test]
    fn capacity_vanishes_for_wide_rings() {
        let c = radial_capacity(&RadialCondenserSpec::new(2, 1e-300, 1.0).unwrap());
        assert!(c < 0.01);
    }

    #[test]
    fn invalid_radial_spec() {
        assert!(RadialCondenserSpec::new(2, 1.0, 1.0).is_err());
        assert!(RadialCondenserSpec::new(4, 0.5, 1.0).is_err());
    }

    #[test]
    fn exact_power_law_order() {
        let samples: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&h| (h, 3.0 + h * h)).collect();
        let fit = convergence_order(&samples, 3.0).unwrap();
        assert!((fit.order - 2.0).abs() < 1e-6);
        assert!(!fit.non_convergent);
    }

    #[test]
    fn constant_error_is_flagged() {
        let samples = [(0.1, 1.5), (0.05, 1.5), (0.025, 1.5)];
        let fit = convergence_order(&samples, 1.0).unwrap();
        assert!(fit.order.abs() < 1e-12);
        assert!(fit.non_convergent);
    }

    #[test]
    fn exact_hits_are_excluded() {
        let samples = [(0.1, 1.01), (0.05, 1.0), (0.025, 1.000625), (0.0125, 1.00015625)];
        let fit = convergence_order(&samples, 1.0).unwrap();
        assert_eq!(fit.excluded, vec![1]);
    }

    #[test]
    fn decay_fit_recovers_ring_law() {
        for n in [2usize, 3] {
            let samples: Vec<(f64, f64)> = [4.0, 16.0, 64.0, 256.0, 1024.0]
                .iter()
                .map(|&r: &f64| (r, sphere_measure(n) * (r.ln() + 1.386).powf(1.0 - n as f64)))
                .collect();
            let fit = decay_fit(&samples, n).unwrap();
            assert!(fit.limit.abs() < 1e-6, "n={n} limit {}", fit.limit);
            assert!((fit.offset - 1.386).abs() < 1e-3);
        }
    }

    #[test]
    fn decay_fit_sees_a_floor() {
        let samples: Vec<(f64, f64)> = [4.0, 16.0, 64.0, 256.0, 1024.0]
            .iter()
            .map(|&r: &f64| (r, 1.7 + 2.0 * PI / (r.ln() + 2.0)))
            .collect();
        let fit = decay_fit(&samples, 2).unwrap();
        assert!((fit.limit - 1.7).abs() < 1e-4, "limit {}", fit.limit);
    }
}
