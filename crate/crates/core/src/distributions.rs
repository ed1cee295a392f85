//! Input random variables: bounded marginals, densities, and seeded sampling.
//!
//! Inputs are mutually independent, so the joint density is the product of
//! the marginal densities. Both supported marginals live on a bounded
//! interval, which keeps every generated design inside the support box.

use crate::rng::{self, CHUNK_ROWS};
use crate::{exec, Error, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// A bounded univariate marginal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Marginal {
    /// Uniform density on [lower, upper].
    Uniform { lower: f64, upper: f64 },
    /// Gaussian(mean, std) restricted to [lower, upper] and renormalized by
    /// the Gaussian mass on that interval.
    TruncatedGaussian {
        mean: f64,
        std: f64,
        lower: f64,
        upper: f64,
    },
}

impl Marginal {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        let m = Marginal::Uniform { lower, upper };
        m.validate()?;
        Ok(m)
    }

    pub fn truncated_gaussian(mean: f64, std: f64, lower: f64, upper: f64) -> Result<Self> {
        let m = Marginal::TruncatedGaussian {
            mean,
            std,
            lower,
            upper,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        let (a, b) = self.support();
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidMarginal(format!(
                "bounds must satisfy lower < upper, got [{a}, {b}]"
            )));
        }
        if let Marginal::TruncatedGaussian { mean, std, .. } = *self {
            if !(std.is_finite() && std > 0.0) {
                return Err(Error::InvalidMarginal(format!(
                    "std must be positive, got {std}"
                )));
            }
            if !mean.is_finite() {
                return Err(Error::InvalidMarginal("mean must be finite".into()));
            }
        }
        Ok(())
    }

    /// Support interval [a, b].
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Marginal::Uniform { lower, upper } => (lower, upper),
            Marginal::TruncatedGaussian { lower, upper, .. } => (lower, upper),
        }
    }

    /// Probability density; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if !(a..=b).contains(&x) {
            return 0.0;
        }
        match *self {
            Marginal::Uniform { lower, upper } => 1.0 / (upper - lower),
            Marginal::TruncatedGaussian {
                mean, std, lower, upper,
            } => {
                let normal = Normal::new(0.0, 1.0).expect("unit normal");
                let z = (x - mean) / std;
                let mass = normal.cdf((upper - mean) / std) - normal.cdf((lower - mean) / std);
                let phi = (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt());
                phi / mass
            }
        }
    }

    /// Cumulative distribution function, clamped to [0, 1].
    pub fn cdf(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x <= a {
            return 0.0;
        }
        if x >= b {
            return 1.0;
        }
        match *self {
            Marginal::Uniform { lower, upper } => (x - lower) / (upper - lower),
            Marginal::TruncatedGaussian {
                mean, std, lower, upper,
            } => {
                let normal = Normal::new(0.0, 1.0).expect("unit normal");
                let lo = normal.cdf((lower - mean) / std);
                let hi = normal.cdf((upper - mean) / std);
                ((normal.cdf((x - mean) / std)) - lo) / (hi - lo)
            }
        }
    }

    /// Inverse CDF; maps [0, 1] onto the support interval.
    pub fn quantile(&self, p: f64) -> f64 {
        let (a, b) = self.support();
        let p = p.clamp(0.0, 1.0);
        match *self {
            Marginal::Uniform { lower, upper } => lower + p * (upper - lower),
            Marginal::TruncatedGaussian {
                mean, std, lower, upper,
            } => {
                if p == 0.0 {
                    return a;
                }
                if p == 1.0 {
                    return b;
                }
                let normal = Normal::new(0.0, 1.0).expect("unit normal");
                let lo = normal.cdf((lower - mean) / std);
                let hi = normal.cdf((upper - mean) / std);
                let x = mean + std * normal.inverse_cdf(lo + p * (hi - lo));
                x.clamp(a, b)
            }
        }
    }
}

/// The vector of independent input marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpec {
    marginals: Vec<Marginal>,
}

/// Experimental-design sampling scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleScheme {
    /// Crude Monte Carlo: independent inverse-CDF draws.
    Mcs,
    /// Latin hypercube: one draw per equiprobable stratum per coordinate.
    Lhs,
}

impl InputSpec {
    pub fn new(marginals: Vec<Marginal>) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::InvalidMarginal(
                "input spec needs at least one marginal".into(),
            ));
        }
        for m in &marginals {
            m.validate()?;
        }
        Ok(InputSpec { marginals })
    }

    pub fn dims(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[Marginal] {
        &self.marginals
    }

    pub fn marginal(&self, k: usize) -> &Marginal {
        &self.marginals[k]
    }

    /// Joint density as the product of marginal densities.
    pub fn joint_pdf(&self, x: &[f64]) -> f64 {
        self.marginals
            .iter()
            .zip(x)
            .map(|(m, &xi)| m.pdf(xi))
            .product()
    }

    /// True when every coordinate lies inside the closed support box.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.marginals.len() == x.len()
            && self.marginals.iter().zip(x).all(|(m, &xi)| {
                let (a, b) = m.support();
                (a..=b).contains(&xi)
            })
    }

    /// Draw an L x N design in row-major order.
    ///
    /// The output is a pure function of (spec, count, scheme, seed): MCS rows
    /// are generated in fixed-size chunks with one ChaCha stream per chunk,
    /// LHS columns use one stream per coordinate, so the bytes are identical
    /// for any worker count.
    pub fn sample(
        &self,
        count: usize,
        scheme: SampleScheme,
        seed: u64,
    ) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::EmptySample);
        }
        let n = self.dims();
        match scheme {
            SampleScheme::Mcs => {
                let mut out = vec![0.0; count * n];
                let marginals = &self.marginals;
                exec::fill_chunks(&mut out, CHUNK_ROWS * n, |chunk, _, slice| {
                    let mut rng = rng::stream(seed, chunk as u64);
                    for row in slice.chunks_mut(n) {
                        for (slot, m) in row.iter_mut().zip(marginals) {
                            *slot = m.quantile(rng::next_f64(&mut rng));
                        }
                    }
                });
                Ok(out)
            }
            SampleScheme::Lhs => {
                let mut out = vec![0.0; count * n];
                for (k, m) in self.marginals.iter().enumerate() {
                    let mut rng = rng::stream(seed, k as u64);
                    let mut strata: Vec<usize> = (0..count).collect();
                    rng::shuffle(&mut rng, &mut strata);
                    for (l, &stratum) in strata.iter().enumerate() {
                        let jitter = rng::next_f64(&mut rng);
                        let p = (stratum as f64 + jitter) / count as f64;
                        out[l * n + k] = m.quantile(p);
                    }
                }
                Ok(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_uniform() -> Marginal {
        Marginal::uniform(-3.0, 3.0).unwrap()
    }

    fn bounded_gaussian() -> Marginal {
        Marginal::truncated_gaussian(0.0, 1.0, -3.0, 3.0).unwrap()
    }

    #[test]
    fn uniform_density_is_constant_inside_and_zero_outside() {
        let m = unit_uniform();
        assert_relative_eq!(m.pdf(0.0), 1.0 / 6.0);
        assert_eq!(m.pdf(5.0), 0.0);
        assert_eq!(m.pdf(-3.000001), 0.0);
    }

    #[test]
    fn rejects_inverted_bounds_and_bad_scale() {
        assert!(Marginal::uniform(1.0, 1.0).is_err());
        assert!(Marginal::truncated_gaussian(0.0, 0.0, -1.0, 1.0).is_err());
        assert!(Marginal::truncated_gaussian(0.0, -2.0, -1.0, 1.0).is_err());
    }

    /// Adaptive Simpson oracle, independent of the Gauss-Legendre module.
    fn simpson<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, eps: f64, depth: usize) -> f64 {
        fn rule<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
            (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
        }
        let whole = rule(&f, a, b);
        let mid = 0.5 * (a + b);
        let halves = rule(&f, a, mid) + rule(&f, mid, b);
        if depth == 0 || (whole - halves).abs() < 15.0 * eps {
            halves + (halves - whole) / 15.0
        } else {
            simpson(f, a, mid, eps / 2.0, depth - 1) + simpson(f, mid, b, eps / 2.0, depth - 1)
        }
    }

    #[test]
    fn truncated_gaussian_density_integrates_to_one() {
        let m = bounded_gaussian();
        let mass = simpson(|x| m.pdf(x), -3.0, 3.0, 1e-13, 40);
        assert!((mass - 1.0).abs() < 1e-10, "mass = {mass}");
    }

    #[test]
    fn quantile_inverts_cdf_inside_the_open_interval() {
        for m in [unit_uniform(), bounded_gaussian()] {
            for i in 1..60 {
                let x = -3.0 + 6.0 * i as f64 / 60.0;
                assert!(
                    (m.quantile(m.cdf(x)) - x).abs() < 1e-10,
                    "round trip failed at {x} for {m:?}"
                );
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let spec = InputSpec::new(vec![unit_uniform(), bounded_gaussian()]).unwrap();
        for scheme in [SampleScheme::Mcs, SampleScheme::Lhs] {
            let a = spec.sample(257, scheme, 42).unwrap();
            let b = spec.sample(257, scheme, 42).unwrap();
            let c = spec.sample(257, scheme, 43).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn sampling_rejects_empty_designs() {
        let spec = InputSpec::new(vec![unit_uniform()]).unwrap();
        assert!(matches!(
            spec.sample(0, SampleScheme::Mcs, 1),
            Err(Error::EmptySample)
        ));
    }

    #[test]
    fn lhs_places_exactly_one_sample_per_stratum() {
        let spec = InputSpec::new(vec![unit_uniform(), bounded_gaussian()]).unwrap();
        let count = 10;
        let xs = spec.sample(count, SampleScheme::Lhs, 9).unwrap();
        for k in 0..spec.dims() {
            let m = spec.marginal(k);
            let mut histogram = vec![0usize; count];
            for l in 0..count {
                let p = m.cdf(xs[l * spec.dims() + k]);
                let stratum = ((p * count as f64) as usize).min(count - 1);
                histogram[stratum] += 1;
            }
            assert!(histogram.iter().all(|&c| c == 1), "histogram {histogram:?}");
        }
    }

    #[test]
    fn mcs_sample_mean_obeys_the_law_of_large_numbers() {
        let spec = InputSpec::new(vec![unit_uniform()]).unwrap();
        let count = 100_000;
        let xs = spec.sample(count, SampleScheme::Mcs, 7).unwrap();
        let mean = xs.iter().sum::<f64>() / count as f64;
        let std = 6.0 / 12f64.sqrt();
        assert!(mean.abs() < 3.0 * std / (count as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn truncated_gaussian_samples_respect_the_support() {
        let spec = InputSpec::new(vec![bounded_gaussian()]).unwrap();
        let xs = spec.sample(100_000, SampleScheme::Mcs, 3).unwrap();
        assert!(xs.iter().all(|&x| (-3.0..=3.0).contains(&x)));
    }

    #[test]
    fn empirical_cdf_converges_to_the_analytic_cdf() {
        let m = bounded_gaussian();
        let spec = InputSpec::new(vec![m]).unwrap();
        let count = 100_000;
        let mut xs = spec.sample(count, SampleScheme::Mcs, 11).unwrap();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Kolmogorov-Smirnov statistic against the analytic CDF.
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let f = m.cdf(x);
            let upper = (i + 1) as f64 / count as f64;
            let lower = i as f64 / count as f64;
            ks = ks.max((f - lower).abs()).max((upper - f).abs());
        }
        assert!(ks < 1.63 / (count as f64).sqrt(), "ks = {ks}");
    }
}
