//! Test-only oracles: trapezoid quadrature of the extended skew-normal
//! density (evaluated from the raw formula, independent of the sampler)
//! and a one-sample Kolmogorov–Smirnov statistic.

use crate::normal;

const QUAD_POINTS: usize = 2001;

fn esn_log_kernel(x: f64, mu_x: f64, sigma: f64, a: f64, b: f64) -> f64 {
    let z = (x - mu_x) / sigma.sqrt();
    -0.5 * z * z + normal::ln_cdf(-a - b * x)
}

/// Mean and variance of the ESN by 2001-point trapezoid quadrature over
/// `mu_x +/- 8 sqrt(sigma)`.
pub(crate) fn esn_quad_mean_var(mu_x: f64, sigma: f64, a: f64, b: f64) -> (f64, f64) {
    let sd = sigma.sqrt();
    let lo = mu_x - 8.0 * sd;
    let h = 16.0 * sd / (QUAD_POINTS - 1) as f64;
    let mut w = vec![0.0; QUAD_POINTS];
    let mut max = f64::NEG_INFINITY;
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = esn_log_kernel(lo + h * i as f64, mu_x, sigma, a, b);
        max = max.max(*wi);
    }
    for wi in w.iter_mut() {
        *wi = (*wi - max).exp();
    }
    let trap = |f: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = 0.5 * (f(0) + f(QUAD_POINTS - 1));
        for i in 1..QUAD_POINTS - 1 {
            s += f(i);
        }
        s * h
    };
    let z0 = trap(&|i| w[i]);
    let m1 = trap(&|i| (lo + h * i as f64) * w[i]) / z0;
    let m2 = trap(&|i| {
        let x = lo + h * i as f64;
        (x - m1) * (x - m1) * w[i]
    }) / z0;
    (m1, m2)
}

/// Normalized CDF of the ESN on the quadrature grid, linearly interpolated.
pub(crate) fn esn_quad_cdf(mu_x: f64, sigma: f64, a: f64, b: f64) -> impl Fn(f64) -> f64 {
    let sd = sigma.sqrt();
    let lo = mu_x - 8.0 * sd;
    let h = 16.0 * sd / (QUAD_POINTS - 1) as f64;
    let mut w = vec![0.0; QUAD_POINTS];
    let mut max = f64::NEG_INFINITY;
    for (i, wi) in w.iter_mut().enumerate() {
        *wi = esn_log_kernel(lo + h * i as f64, mu_x, sigma, a, b);
        max = max.max(*wi);
    }
    let mut cum = vec![0.0; QUAD_POINTS];
    let mut prev = (w[0] - max).exp();
    for i in 1..QUAD_POINTS {
        let wi = (w[i] - max).exp();
        cum[i] = cum[i - 1] + 0.5 * (prev + wi);
        prev = wi;
    }
    let total = cum[QUAD_POINTS - 1];
    move |x: f64| {
        if x <= lo {
            return 0.0;
        }
        let pos = (x - lo) / h;
        let idx = pos.floor() as usize;
        if idx + 1 >= QUAD_POINTS {
            return 1.0;
        }
        let t = pos - idx as f64;
        ((1.0 - t) * cum[idx] + t * cum[idx + 1]) / total
    }
}

/// One-sample K-S statistic of `xs` against the CDF `f`.
pub(crate) fn ks_vs_cdf(xs: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let fx = f(x);
        d = d.max((fx - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - fx).abs());
    }
    d
}
