//! Probability primitives: the extended skew-normal conditional of a
//! missing intensity, inverse-gamma draws for the variance components, and
//! bivariate normal draws for the mechanism parameters.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::Error;
use crate::normal;
use crate::Result;

/// Below this selection probability the rejection sampler is abandoned for
/// grid inversion (expected trials would exceed 1/0.01 = 100).
const ACCEPT_FLOOR: f64 = 0.01;
/// Hard cap on rejection trials before falling back anyway.
const MAX_TRIALS: usize = 10_000;
/// Grid resolution for inverse-CDF fallback sampling.
const GRID_POINTS: usize = 2001;

/// Extended skew-normal distribution with density
///
/// ```text
/// f(x) = phi((x - mu_x)/sqrt(sigma)) * Phi(-a - b*x) / (sqrt(sigma) * Phi(omega))
/// omega = (-a - b*mu_x) / sqrt(1 + sigma*b^2)
/// ```
///
/// This is the full conditional of a missing log-intensity under the probit
/// selection model: a normal kernel at `mu_x` with variance `sigma`
/// (`sigma` is a variance, not a standard deviation), tilted down-weight
/// wherever observation would have been likely. `b = 0` reduces exactly to
/// `N(mu_x, sigma)`.
#[derive(Debug, Clone, Copy)]
pub struct ExtendedSkewNormal {
    mu_x: f64,
    sigma: f64,
    a: f64,
    b: f64,
    sigma_x: f64,
    omega: f64,
}

impl ExtendedSkewNormal {
    pub fn new(mu_x: f64, sigma: f64, a: f64, b: f64) -> Result<Self> {
        if !(mu_x.is_finite() && sigma.is_finite() && a.is_finite() && b.is_finite()) {
            return Err(Error::Parameter(
                "extended skew normal requires finite parameters".into(),
            ));
        }
        if sigma <= 0.0 {
            return Err(Error::Parameter(format!(
                "extended skew normal requires sigma > 0, got {sigma}"
            )));
        }
        let sigma_x = sigma.sqrt();
        let omega = (-a - b * mu_x) / (1.0 + sigma * b * b).sqrt();
        Ok(ExtendedSkewNormal {
            mu_x,
            sigma,
            a,
            b,
            sigma_x,
            omega,
        })
    }

    pub fn mu_x(&self) -> f64 {
        self.mu_x
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Skew coefficient of the underlying kernel, `c = -b * sqrt(sigma)`.
    pub fn skew_coefficient(&self) -> f64 {
        -self.b * self.sigma_x
    }

    /// Density at `x`. Evaluated in log space so extreme tilt factors
    /// cancel instead of overflowing.
    pub fn density(&self, x: f64) -> f64 {
        let z = (x - self.mu_x) / self.sigma_x;
        let ln_f = -0.5 * z * z - self.sigma_x.ln() - LN_SQRT_2PI
            + normal::ln_cdf(-self.a - self.b * x)
            - normal::ln_cdf(self.omega);
        ln_f.exp()
    }

    /// One draw. Rejection from the `N(mu_x, sigma)` proposal with
    /// acceptance probability `Phi(-a - b*x)`; the overall acceptance rate
    /// is exactly `Phi(omega)`, so when that dips below 1% the sampler
    /// switches to inverse-CDF on a numerically integrated grid spanning
    /// `mu_x +/- 8*sqrt(sigma)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.b == 0.0 {
            // No tilt: exact normal draw.
            let z: f64 = rng.sample(StandardNormal);
            return self.mu_x + self.sigma_x * z;
        }
        if normal::cdf(self.omega) >= ACCEPT_FLOOR {
            for _ in 0..MAX_TRIALS {
                let z: f64 = rng.sample(StandardNormal);
                let x = self.mu_x + self.sigma_x * z;
                let u: f64 = rng.random();
                if u < normal::cdf(-self.a - self.b * x) {
                    return x;
                }
            }
        }
        self.sample_grid(rng)
    }

    fn sample_grid<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let lo = self.mu_x - 8.0 * self.sigma_x;
        let hi = self.mu_x + 8.0 * self.sigma_x;
        let h = (hi - lo) / (GRID_POINTS - 1) as f64;

        // Unnormalized log density on the grid, shifted by its max so the
        // exponentials are well scaled regardless of the tilt.
        let mut ln_w = [0.0; GRID_POINTS];
        let mut ln_max = f64::NEG_INFINITY;
        for (i, lw) in ln_w.iter_mut().enumerate() {
            let x = lo + h * i as f64;
            let z = (x - self.mu_x) / self.sigma_x;
            *lw = -0.5 * z * z + normal::ln_cdf(-self.a - self.b * x);
            ln_max = ln_max.max(*lw);
        }

        let mut cum = vec![0.0; GRID_POINTS];
        let mut prev = (ln_w[0] - ln_max).exp();
        for i in 1..GRID_POINTS {
            let w = (ln_w[i] - ln_max).exp();
            cum[i] = cum[i - 1] + 0.5 * (prev + w);
            prev = w;
        }
        let total = cum[GRID_POINTS - 1];

        let u: f64 = rng.random();
        let target = u * total;
        let idx = cum.partition_point(|&c| c < target).max(1);
        let (c0, c1) = (cum[idx - 1], cum[idx]);
        let t = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.5 };
        lo + h * ((idx - 1) as f64 + t)
    }
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74;

/// Inverse-gamma shape/rate parameters (rate parameterization: the mean is
/// `rate / (shape - 1)` for `shape > 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl InverseGammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        if !(shape.is_finite() && rate.is_finite() && shape > 0.0 && rate > 0.0) {
            return Err(Error::Parameter(format!(
                "inverse gamma requires positive finite shape/rate, got ({shape}, {rate})"
            )));
        }
        Ok(InverseGammaParams { shape, rate })
    }
}

/// One inverse-gamma draw, as the reciprocal of a Gamma(shape, 1/rate)
/// draw. Gamma draws that underflow to zero (possible at shapes like the
/// 0.001 prior, where the true value overflows f64 anyway) are clamped to
/// the smallest positive double so the result stays positive and finite.
pub fn inverse_gamma_sample<R: Rng + ?Sized>(p: InverseGammaParams, rng: &mut R) -> f64 {
    let gamma = Gamma::new(p.shape, 1.0 / p.rate).expect("validated params");
    let g: f64 = gamma.sample(rng).max(f64::MIN_POSITIVE);
    1.0 / g
}

/// One draw from a bivariate normal via the 2x2 Cholesky factor.
pub fn mvn2_sample<R: Rng + ?Sized>(
    mean: [f64; 2],
    cov: [[f64; 2]; 2],
    rng: &mut R,
) -> Result<[f64; 2]> {
    let l = cholesky2(cov)?;
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    Ok([
        mean[0] + l[0][0] * z0,
        mean[1] + l[1][0] * z0 + l[1][1] * z1,
    ])
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite 2x2.
pub fn cholesky2(cov: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let c00 = cov[0][0];
    let c01 = cov[0][1];
    let c11 = cov[1][1];
    if !(c00.is_finite() && c01.is_finite() && c11.is_finite()) || c00 <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let l00 = c00.sqrt();
    let l10 = c01 / l00;
    let rem = c11 - l10 * l10;
    if rem <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    Ok([[l00, 0.0], [l10, rem.sqrt()]])
}

/// Invert a symmetric positive-definite 2x2 matrix.
pub fn invert2(m: [[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if !det.is_finite() || det <= 0.0 {
        return Err(Error::SingularInformation);
    }
    Ok([
        [m[1][1] / det, -m[0][1] / det],
        [-m[1][0] / det, m[0][0] / det],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testoracle::{esn_quad_cdf, esn_quad_mean_var, ks_vs_cdf};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn draws(d: &ExtendedSkewNormal, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn esn_b_zero_is_standard_normal() {
        let d = ExtendedSkewNormal::new(0.0, 1.0, 0.0, 0.0).unwrap();
        let xs = draws(&d, 10_000, 1);
        let ks = ks_vs_cdf(&xs, |x| normal::cdf(x));
        assert!(ks < 0.02, "K-S vs N(0,1): {ks}");
        // pointwise density identity
        for &x in &[-3.0, -0.5, 0.0, 1.0, 2.5] {
            let want = normal::phi(x);
            let got = d.density(x);
            assert!(((got - want) / want).abs() < 1e-12);
        }
        // mode value is 1/sqrt(2 pi sigma)
        let d2 = ExtendedSkewNormal::new(5.0, 4.0, 2.0, 0.0).unwrap();
        let want = 1.0 / (2.0 * std::f64::consts::PI * 4.0).sqrt();
        assert!((d2.density(5.0) - want).abs() < 1e-14);
    }

    #[test]
    fn esn_density_closed_form_point() {
        // (mu=0, sigma=1, a=0, b=1): omega = 0, so at x=0 the tilt and the
        // normalizer are both Phi(0) and the density equals phi(0).
        let d = ExtendedSkewNormal::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let got = d.density(0.0);
        assert!(
            (got - 0.39894228040143268).abs() < 1e-13,
            "density(0) = {got}"
        );
    }

    #[test]
    fn esn_density_mirror_symmetry() {
        // With a = 0 and mu_x = 0, flipping the tilt slope mirrors the
        // density: f(x; b) = f(-x; -b).
        let dp = ExtendedSkewNormal::new(0.0, 1.0, 0.0, 0.7).unwrap();
        let dn = ExtendedSkewNormal::new(0.0, 1.0, 0.0, -0.7).unwrap();
        for i in 0..41 {
            let x = -4.0 + 0.2 * i as f64;
            let lhs = dp.density(x);
            let rhs = dn.density(-x);
            assert!((lhs - rhs).abs() <= 1e-14 * lhs.max(1.0));
        }
    }

    #[test]
    fn esn_normalizes_across_parameter_grid() {
        // includes strongly skewed cases; integral over mu_x +/- 10 sd
        let params = [
            (0.0, 1.0, 0.0, 0.0),
            (0.0, 1.0, 0.0, 1.0),
            (0.0, 1.0, 2.0, -1.0),
            (18.5, 0.3, -9.0, 0.5),
            (0.0, 1.0, 8.0, 1.0),
            (-3.0, 2.5, 1.0, 0.7),
            (18.5, 0.3, 5.0, 0.1),
        ];
        for (mu, sigma, a, b) in params {
            let d = ExtendedSkewNormal::new(mu, sigma, a, b).unwrap();
            let sd = sigma.sqrt();
            let n = 20_001;
            let lo = mu - 10.0 * sd;
            let h = 20.0 * sd / (n - 1) as f64;
            let mut sum = 0.0;
            let mut prev = d.density(lo);
            for i in 1..n {
                let f = d.density(lo + h * i as f64);
                sum += 0.5 * (prev + f);
                prev = f;
            }
            let integral = sum * h;
            assert!(
                (integral - 1.0).abs() < 1e-5,
                "integral {integral} for ({mu},{sigma},{a},{b})"
            );
        }
    }

    #[test]
    fn esn_sample_matches_quadrature_mean() {
        let (mu, sigma, a, b) = (18.5, 0.3, -9.0, 0.5);
        let d = ExtendedSkewNormal::new(mu, sigma, a, b).unwrap();
        let (qm, qv) = esn_quad_mean_var(mu, sigma, a, b);
        let xs = draws(&d, 10_000, 7);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let se = (qv / xs.len() as f64).sqrt();
        assert!(
            (mean - qm).abs() < 3.0 * se,
            "mean {mean} vs quadrature {qm} (se {se})"
        );
    }

    #[test]
    fn esn_sampler_agrees_with_quadrature_cdf_across_grid() {
        let params = [
            (0.0, 1.0, 0.0, 1.0),
            (18.5, 0.3, -9.0, 0.5),
            (-2.0, 4.0, 1.0, -0.6),
            (18.5, 0.3, -8.0, 0.4),
        ];
        for (mu, sigma, a, b) in params {
            let d = ExtendedSkewNormal::new(mu, sigma, a, b).unwrap();
            let cdf = esn_quad_cdf(mu, sigma, a, b);
            let xs = draws(&d, 10_000, 11);
            let ks = ks_vs_cdf(&xs, |x| cdf(x));
            assert!(ks < 0.025, "K-S {ks} for ({mu},{sigma},{a},{b})");
        }
    }

    #[test]
    fn esn_grid_fallback_engages_and_matches_quadrature() {
        // Phi(omega) = Phi(-5/sqrt(1.25)) ~ 4e-6: far below the 1% floor,
        // so every draw goes through the grid path.
        let (mu, sigma, a, b) = (0.0, 1.0, 5.0, 0.5);
        let d = ExtendedSkewNormal::new(mu, sigma, a, b).unwrap();
        assert!(normal::cdf(d.omega()) < 0.01);
        let cdf = esn_quad_cdf(mu, sigma, a, b);
        let xs = draws(&d, 10_000, 13);
        let ks = ks_vs_cdf(&xs, |x| cdf(x));
        assert!(ks < 0.02, "K-S {ks}");
    }

    #[test]
    fn esn_near_certain_missingness_behaves_like_normal() {
        // a = -50 puts the whole support deep in the "missing" regime: the
        // tilt factor is ~1 everywhere and the draw is effectively normal.
        let d = ExtendedSkewNormal::new(0.0, 1.0, -50.0, 0.01).unwrap();
        let cdf = esn_quad_cdf(0.0, 1.0, -50.0, 0.01);
        let xs = draws(&d, 10_000, 17);
        let ks = ks_vs_cdf(&xs, |x| cdf(x));
        assert!(ks < 0.02, "K-S {ks}");
    }

    #[test]
    fn esn_rejects_bad_parameters() {
        assert!(ExtendedSkewNormal::new(f64::NAN, 1.0, 0.0, 0.0).is_err());
        assert!(ExtendedSkewNormal::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(ExtendedSkewNormal::new(0.0, -1.0, 0.0, 0.0).is_err());
        assert!(ExtendedSkewNormal::new(0.0, 1.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn inverse_gamma_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // shape 3, rate 2: mean 1, variance 1
        let p = InverseGammaParams::new(3.0, 2.0).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| inverse_gamma_sample(p, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 3.0 / (n as f64).sqrt());

        // shape 1001, rate 1000: mean ~ 1, variance ~ 0.001
        let p = InverseGammaParams::new(1001.0, 1000.0).unwrap();
        let xs: Vec<f64> = (0..n).map(|_| inverse_gamma_sample(p, &mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 1.0).abs() < 3.0 * (0.001f64 / n as f64).sqrt());
        assert!((var - 0.001).abs() < 0.0002);
    }

    #[test]
    fn inverse_gamma_prior_shape_stays_positive_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = InverseGammaParams::new(0.001, 0.001).unwrap();
        for _ in 0..1_000_000 {
            let x = inverse_gamma_sample(p, &mut rng);
            assert!(x > 0.0 && !x.is_nan());
        }
    }

    #[test]
    fn inverse_gamma_rejects_bad_params() {
        assert!(InverseGammaParams::new(0.0, 1.0).is_err());
        assert!(InverseGammaParams::new(1.0, -1.0).is_err());
        assert!(InverseGammaParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn mvn2_identity_cov() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 100_000;
        let mut xs = Vec::with_capacity(n);
        for _ in 0..n {
            xs.push(mvn2_sample([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], &mut rng).unwrap());
        }
        let m0 = xs.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let m1 = xs.iter().map(|v| v[1]).sum::<f64>() / n as f64;
        let rho = xs.iter().map(|v| (v[0] - m0) * (v[1] - m1)).sum::<f64>() / (n - 1) as f64;
        assert!(rho.abs() < 0.02, "correlation {rho}");
    }

    #[test]
    fn mvn2_diagonal_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let n = 100_000;
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for _ in 0..n {
            let v = mvn2_sample([0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]], &mut rng).unwrap();
            s0 += v[0] * v[0];
            s1 += v[1] * v[1];
        }
        let sd0 = (s0 / n as f64).sqrt();
        let sd1 = (s1 / n as f64).sqrt();
        assert!((sd0 - 2.0).abs() < 0.02, "sd0 {sd0}");
        assert!((sd1 - 1.0).abs() < 0.01, "sd1 {sd1}");
    }

    #[test]
    fn mvn2_probit_scale_covariance_recovery() {
        // covariance scale typical of a mechanism fit
        let mean = [-9.0, 0.5];
        let cov = [[0.01, -0.0004], [-0.0004, 0.00002]];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut vs = Vec::with_capacity(n);
        for _ in 0..n {
            let v = mvn2_sample(mean, cov, &mut rng).unwrap();
            assert!(v[0].is_finite() && v[1].is_finite());
            vs.push(v);
        }
        let m0 = vs.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let m1 = vs.iter().map(|v| v[1]).sum::<f64>() / n as f64;
        let mut c = [[0.0; 2]; 2];
        for v in &vs {
            let d0 = v[0] - m0;
            let d1 = v[1] - m1;
            c[0][0] += d0 * d0;
            c[0][1] += d0 * d1;
            c[1][1] += d1 * d1;
        }
        for row in &mut c {
            for x in row.iter_mut() {
                *x /= (n - 1) as f64;
            }
        }
        assert!((c[0][0] / cov[0][0] - 1.0).abs() < 0.10);
        assert!((c[1][1] / cov[1][1] - 1.0).abs() < 0.10);
        assert!((c[0][1] / cov[0][1] - 1.0).abs() < 0.10);
    }

    #[test]
    fn mvn2_rejects_non_pd() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let r = mvn2_sample([0.0, 0.0], [[1.0, 2.0], [2.0, 1.0]], &mut rng);
        assert!(matches!(r, Err(Error::NotPositiveDefinite)));
        let r = mvn2_sample([0.0, 0.0], [[0.0, 0.0], [0.0, 1.0]], &mut rng);
        assert!(r.is_err());
    }

    #[test]
    fn mvn2_tiny_cov_collapses_to_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let v = mvn2_sample([-9.0, 0.5], [[1e-300, 0.0], [0.0, 1e-300]], &mut rng).unwrap();
        assert!((v[0] + 9.0).abs() < 1e-140);
        assert!((v[1] - 0.5).abs() < 1e-140);
    }
}
