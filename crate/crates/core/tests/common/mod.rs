//! Reference values shared by the integration tests, computed here without
//! the library's closed forms.

#![allow(dead_code)]

use std::f64::consts::PI;

/// n-energy of the radial profile `u(r) = log(r/a) / log(b/a)` over the
/// shell `a < |x| < b`, by composite Simpson quadrature in `r`.
pub fn ring_capacity_quadrature(n: usize, a: f64, b: f64) -> f64 {
    let omega = match n {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => panic!("n must be 2 or 3"),
    };
    let span = (b / a).ln();
    let integrand = |r: f64| omega * r.powi(n as i32 - 1) * (1.0 / (r * span)).powi(n as i32);
    let steps = 20_000;
    let h = (b - a) / steps as f64;
    let mut sum = integrand(a) + integrand(b);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
