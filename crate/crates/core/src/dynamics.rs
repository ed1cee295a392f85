//! Analytic two-degree-of-freedom damped benchmark.
//!
//! A spring-mass-damper chain with equal masses, dampers, and springs whose
//! values are scaled by random coefficients of variation. The harmonic
//! response solves a 2x2 complex system in closed form, so the benchmark
//! doubles as a cheap reference-solution generator for surrogate validation:
//! crude Monte Carlo sigma curves, moments, and failure probabilities.

use crate::dataset::Dataset;
use crate::distributions::{InputSpec, Marginal, SampleScheme};
use crate::rng::CHUNK_ROWS;
use crate::surrogate::{FailureSense, PfailEstimate};
use crate::{exec, Error, Result};
use num_complex::Complex64;

/// Which benchmark parameters are random.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    /// Spring stiffness only (one uniform input).
    StiffnessOnly,
    /// Mass, damping, and stiffness (three truncated-Gaussian inputs).
    MassDampingStiffness,
}

/// The two-degree-of-freedom benchmark configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Benchmark {
    pub case: CaseKind,
    pub nominal_mass: f64,
    pub nominal_damping: f64,
    pub nominal_stiffness: f64,
    pub cov_mass: f64,
    pub cov_damping: f64,
    pub cov_stiffness: f64,
    /// Harmonic force amplitudes on the two masses.
    pub force: (f64, f64),
}

/// Realized (deterministic) system parameters for one input draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Realization {
    pub mass: f64,
    pub damping: f64,
    pub stiffness: f64,
}

impl Benchmark {
    /// Stiffness-only randomness: K = K0 (1 + cov X) with X uniform on
    /// [-3, 3] and the paper-wide default cov of 0.05.
    pub fn stiffness_only() -> Self {
        Benchmark {
            case: CaseKind::StiffnessOnly,
            nominal_mass: 1.0,
            nominal_damping: 1.0,
            nominal_stiffness: 15_000.0,
            cov_mass: 0.0,
            cov_damping: 0.0,
            cov_stiffness: 0.05,
            force: (1.0, 0.0),
        }
    }

    /// Fully random system: mass, damping, and stiffness scaled by 0.05 times
    /// truncated-Gaussian inputs on [-3, 3].
    pub fn mass_damping_stiffness() -> Self {
        Benchmark {
            case: CaseKind::MassDampingStiffness,
            nominal_mass: 1.0,
            nominal_damping: 1.0,
            nominal_stiffness: 15_000.0,
            cov_mass: 0.05,
            cov_damping: 0.05,
            cov_stiffness: 0.05,
            force: (1.0, 0.0),
        }
    }

    /// Override the stiffness coefficient of variation. Values of 1/3 or more
    /// let the stiffness reach zero inside the input support and are rejected
    /// unless `allow_nonpositive` is set; the literal unit-cov variant is
    /// available through that escape hatch.
    pub fn with_stiffness_cov(mut self, cov: f64, allow_nonpositive: bool) -> Result<Self> {
        if !(cov.is_finite() && cov >= 0.0) {
            return Err(Error::UnphysicalSystem(format!(
                "stiffness cov must be non-negative, got {cov}"
            )));
        }
        if cov >= 1.0 / 3.0 && !allow_nonpositive {
            return Err(Error::UnphysicalSystem(format!(
                "stiffness cov {cov} allows non-positive stiffness on [-3, 3]; \
                 pass allow_nonpositive to accept per-realization failures"
            )));
        }
        self.cov_stiffness = cov;
        Ok(self)
    }

    /// Input marginals for this case.
    pub fn input_spec(&self) -> InputSpec {
        match self.case {
            CaseKind::StiffnessOnly => {
                InputSpec::new(vec![Marginal::uniform(-3.0, 3.0).unwrap()]).unwrap()
            }
            CaseKind::MassDampingStiffness => {
                let tg = Marginal::truncated_gaussian(0.0, 1.0, -3.0, 3.0).unwrap();
                InputSpec::new(vec![tg, tg, tg]).unwrap()
            }
        }
    }

    /// Map one input draw onto physical parameters.
    pub fn realize(&self, x: &[f64]) -> Result<Realization> {
        let (mass, damping, stiffness) = match self.case {
            CaseKind::StiffnessOnly => {
                debug_assert_eq!(x.len(), 1);
                (
                    self.nominal_mass,
                    self.nominal_damping,
                    self.nominal_stiffness * (1.0 + self.cov_stiffness * x[0]),
                )
            }
            CaseKind::MassDampingStiffness => {
                debug_assert_eq!(x.len(), 3);
                (
                    self.nominal_mass * (1.0 + self.cov_mass * x[0]),
                    self.nominal_damping * (1.0 + self.cov_damping * x[1]),
                    self.nominal_stiffness * (1.0 + self.cov_stiffness * x[2]),
                )
            }
        };
        if !(mass > 0.0) {
            return Err(Error::UnphysicalSystem(format!(
                "realized mass {mass} is not positive"
            )));
        }
        if !(stiffness > 0.0) {
            return Err(Error::UnphysicalSystem(format!(
                "realized stiffness {stiffness} is not positive"
            )));
        }
        if !damping.is_finite() {
            return Err(Error::UnphysicalSystem("damping is not finite".into()));
        }
        Ok(Realization {
            mass,
            damping,
            stiffness,
        })
    }

    /// Complex displacement amplitudes (Z1, Z2) at angular frequency omega.
    pub fn frf(&self, omega: f64, x: &[f64]) -> Result<(Complex64, Complex64)> {
        let realization = self.realize(x)?;
        self.frf_realized(&realization, omega)
    }

    /// FRF for already-realized parameters; exact closed-form 2x2 solve.
    pub fn frf_realized(
        &self,
        r: &Realization,
        omega: f64,
    ) -> Result<(Complex64, Complex64)> {
        let i_omega = Complex64::new(0.0, omega);
        let omega2 = omega * omega;
        // Dynamic stiffness D = -w^2 M + i w C + K for the equal-pair chain.
        let d11 = Complex64::new(2.0 * r.stiffness - omega2 * r.mass, 0.0)
            + i_omega * (2.0 * r.damping);
        let d12 = -(Complex64::new(r.stiffness, 0.0) + i_omega * r.damping);
        let d22 =
            Complex64::new(r.stiffness - omega2 * r.mass, 0.0) + i_omega * r.damping;
        let det = d11 * d22 - d12 * d12;
        if det.norm() == 0.0 {
            return Err(Error::SingularSystem { omega });
        }
        let (f1, f2) = self.force;
        let z1 = (d22 * f1 - d12 * f2) / det;
        let z2 = (d11 * f2 - d12 * f1) / det;
        debug_assert!({
            let r1 = (d11 * z1 + d12 * z2 - f1).norm();
            let r2 = (d12 * z1 + d22 * z2 - f2).norm();
            let scale = f1.abs().max(f2.abs()).max(1e-300);
            r1.max(r2) < 1e-10 * scale
        });
        Ok((z1, z2))
    }

    /// Undamped natural frequencies in Hz, ascending. For the equal-pair
    /// chain the squared angular frequencies are (K/M)(3 -+ sqrt(5))/2.
    pub fn natural_frequencies(&self, x: &[f64]) -> Result<(f64, f64)> {
        let r = self.realize(x)?;
        let ratio = r.stiffness / r.mass;
        let root5 = 5.0f64.sqrt();
        let w1 = (ratio * (3.0 - root5) / 2.0).sqrt();
        let w2 = (ratio * (3.0 + root5) / 2.0).sqrt();
        let two_pi = 2.0 * std::f64::consts::PI;
        Ok((w1 / two_pi, w2 / two_pi))
    }

    /// Natural frequencies at the nominal (all-zero) input.
    pub fn nominal_natural_frequencies(&self) -> (f64, f64) {
        let zeros = vec![0.0; self.input_spec().dims()];
        self.natural_frequencies(&zeros).expect("nominal system")
    }

    /// Experimental design at one frequency: sampled inputs paired with
    /// |Z1(omega; x)|.
    pub fn generate_dataset(
        &self,
        omega: f64,
        count: usize,
        scheme: SampleScheme,
        seed: u64,
    ) -> Result<Dataset> {
        let spec = self.input_spec();
        let inputs = spec.sample(count, scheme, seed)?;
        let outputs = self.batch_amplitudes(&inputs, omega)?;
        let provenance = format!(
            "two-dof {:?} omega={omega} count={count} scheme={scheme:?} seed={seed}",
            self.case
        );
        Dataset::from_parts(spec.dims(), inputs, outputs, provenance)
    }

    /// |Z1| for row-major input draws at a fixed frequency.
    pub fn batch_amplitudes(&self, inputs: &[f64], omega: f64) -> Result<Vec<f64>> {
        let dims = self.input_spec().dims();
        let rows = inputs.len() / dims;
        let chunks = rows.div_ceil(CHUNK_ROWS);
        let parts: Vec<Result<Vec<f64>>> = exec::map_indexed(chunks, |c| {
            let start = c * CHUNK_ROWS;
            let stop = ((c + 1) * CHUNK_ROWS).min(rows);
            let mut out = Vec::with_capacity(stop - start);
            for l in start..stop {
                let (z1, _) = self.frf(omega, &inputs[l * dims..(l + 1) * dims])?;
                out.push(z1.norm());
            }
            Ok(out)
        });
        let mut out = Vec::with_capacity(rows);
        for part in parts {
            out.extend(part?);
        }
        Ok(out)
    }

    /// Crude-MCS standard deviation of |Z1| per frequency, reusing one input
    /// sample across the whole grid.
    pub fn mcs_sigma_curve(
        &self,
        omegas: &[f64],
        count: usize,
        seed: u64,
    ) -> Result<Vec<f64>> {
        let spec = self.input_spec();
        let inputs = spec.sample(count, SampleScheme::Mcs, seed)?;
        let dims = spec.dims();
        let realizations: Vec<Realization> = (0..count)
            .map(|l| self.realize(&inputs[l * dims..(l + 1) * dims]))
            .collect::<Result<_>>()?;
        let sigmas: Vec<Result<f64>> = exec::map_indexed(omegas.len(), |i| {
            let omega = omegas[i];
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for r in &realizations {
                let (z1, _) = self.frf_realized(r, omega)?;
                let amplitude = z1.norm();
                sum += amplitude;
                sum_sq += amplitude * amplitude;
            }
            let mean = sum / count as f64;
            Ok((sum_sq / count as f64 - mean * mean).max(0.0).sqrt())
        });
        sigmas.into_iter().collect()
    }

    /// Crude-MCS mean and variance of |Z1| at one frequency.
    pub fn mcs_moments(&self, omega: f64, count: usize, seed: u64) -> Result<(f64, f64)> {
        let spec = self.input_spec();
        let inputs = spec.sample(count, SampleScheme::Mcs, seed)?;
        let outputs = self.batch_amplitudes(&inputs, omega)?;
        let mean = outputs.iter().sum::<f64>() / count as f64;
        let variance = outputs
            .iter()
            .map(|v| (v - mean) * (v - mean))
            .sum::<f64>()
            / count as f64;
        Ok((mean, variance))
    }

    /// Crude-MCS failure probability of the true response at one frequency.
    pub fn mcs_pfail(
        &self,
        omega: f64,
        threshold: f64,
        sense: FailureSense,
        count: usize,
        seed: u64,
    ) -> Result<PfailEstimate> {
        let spec = self.input_spec();
        let inputs = spec.sample(count, SampleScheme::Mcs, seed)?;
        let outputs = self.batch_amplitudes(&inputs, omega)?;
        let failures = outputs
            .iter()
            .filter(|&&v| match sense {
                FailureSense::Exceed => v > threshold,
                FailureSense::FallBelow => v < threshold,
            })
            .count();
        let probability = failures as f64 / count as f64;
        Ok(PfailEstimate {
            probability,
            standard_error: (probability * (1.0 - probability) / count as f64).sqrt(),
            threshold,
            sense,
            resamples: count,
        })
    }
}

/// Angular frequency (rad/s) for a frequency in Hz.
pub fn hz_to_rad(f_hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * f_hz
}

/// Default benchmark frequency grid: 10 to 35 Hz in 0.1 Hz steps.
pub fn default_frequency_grid_hz() -> Vec<f64> {
    let mut grid = Vec::with_capacity(251);
    for i in 0..=250 {
        grid.push(10.0 + 0.1 * i as f64);
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn static_solution_matches_the_hand_solve() {
        let bench = Benchmark::stiffness_only();
        let (z1, z2) = bench.frf(0.0, &[0.0]).unwrap();
        assert_relative_eq!(z1.re, 1.0 / 15_000.0, epsilon = 1e-15);
        assert_relative_eq!(z2.re, 1.0 / 15_000.0, epsilon = 1e-15);
        assert_eq!(z1.im, 0.0);
    }

    #[test]
    fn response_is_linear_in_the_force() {
        let mut doubled = Benchmark::stiffness_only();
        doubled.force = (2.0, 0.0);
        let base = Benchmark::stiffness_only();
        for f_hz in [12.0, 20.0, 31.465] {
            let omega = hz_to_rad(f_hz);
            let (z1, _) = base.frf(omega, &[0.4]).unwrap();
            let (z1_doubled, _) = doubled.frf(omega, &[0.4]).unwrap();
            assert_relative_eq!(z1_doubled.norm(), 2.0 * z1.norm(), epsilon = 1e-12);
        }
    }

    #[test]
    fn amplitude_curve_has_exactly_two_resonance_peaks() {
        let bench = Benchmark::stiffness_only();
        let grid = default_frequency_grid_hz();
        let amplitudes: Vec<f64> = grid
            .iter()
            .map(|&f| bench.frf(hz_to_rad(f), &[0.0]).unwrap().0.norm())
            .collect();
        let peaks = amplitudes
            .windows(3)
            .filter(|w| w[1] > w[0] && w[1] > w[2])
            .count();
        assert_eq!(peaks, 2);
    }

    #[test]
    fn natural_frequencies_match_the_closed_form() {
        let bench = Benchmark::stiffness_only();
        let (f1, f2) = bench.nominal_natural_frequencies();
        assert!(f1 < f2);
        let expected = (15_000.0 * (3.0 + 5.0f64.sqrt()) / 2.0).sqrt()
            / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(f2, expected, epsilon = 1e-12);
        // Second mode near the reported 31.465 Hz.
        assert!((f2 - 31.465).abs() / 31.465 < 0.005, "f2 = {f2}");
    }

    #[test]
    fn frequencies_scale_with_stiffness_and_mass() {
        let base = Benchmark::stiffness_only();
        let (f1, f2) = base.nominal_natural_frequencies();

        let mut stiffer = base;
        stiffer.nominal_stiffness *= 4.0;
        let (s1, s2) = stiffer.nominal_natural_frequencies();
        assert_relative_eq!(s1, 2.0 * f1, epsilon = 1e-12);
        assert_relative_eq!(s2, 2.0 * f2, epsilon = 1e-12);

        let mut heavier = base;
        heavier.nominal_mass *= 4.0;
        let (h1, h2) = heavier.nominal_natural_frequencies();
        assert_relative_eq!(h1, 0.5 * f1, epsilon = 1e-12);
        assert_relative_eq!(h2, 0.5 * f2, epsilon = 1e-12);
    }

    #[test]
    fn residual_stays_tiny_across_random_evaluations() {
        let bench = Benchmark::mass_damping_stiffness();
        let spec = bench.input_spec();
        let inputs = spec.sample(200, SampleScheme::Mcs, 5).unwrap();
        for l in 0..200 {
            let x = &inputs[l * 3..(l + 1) * 3];
            let omega = hz_to_rad(10.0 + (l as f64) * 0.12);
            let r = bench.realize(x).unwrap();
            let (z1, z2) = bench.frf_realized(&r, omega).unwrap();
            let i_omega = Complex64::new(0.0, omega);
            let d11 = Complex64::new(2.0 * r.stiffness - omega * omega * r.mass, 0.0)
                + i_omega * (2.0 * r.damping);
            let d12 = -(Complex64::new(r.stiffness, 0.0) + i_omega * r.damping);
            let d22 = Complex64::new(r.stiffness - omega * omega * r.mass, 0.0)
                + i_omega * r.damping;
            let r1 = (d11 * z1 + d12 * z2 - Complex64::new(1.0, 0.0)).norm();
            let r2 = (d12 * z1 + d22 * z2).norm();
            assert!(r1.max(r2) < 1e-10, "residual {r1} / {r2}");
        }
    }

    #[test]
    fn undamped_transfer_matrix_is_reciprocal() {
        let mut bench = Benchmark::stiffness_only();
        bench.nominal_damping = 0.0;
        let omega = hz_to_rad(17.0);
        let (_, z2_from_f1) = bench.frf(omega, &[0.2]).unwrap();
        bench.force = (0.0, 1.0);
        let (z1_from_f2, _) = bench.frf(omega, &[0.2]).unwrap();
        assert!((z2_from_f1 - z1_from_f2).norm() < 1e-12);
    }

    #[test]
    fn dataset_generation_matches_the_reported_training_sizes() {
        let case2 = Benchmark::mass_damping_stiffness();
        let omega = hz_to_rad(31.465);
        let ds = case2
            .generate_dataset(omega, 1085, SampleScheme::Lhs, 7)
            .unwrap();
        assert_eq!(ds.len(), 1085);
        assert_eq!(ds.n_inputs(), 3);

        let case1 = Benchmark::stiffness_only();
        let ds1 = case1
            .generate_dataset(omega, 90, SampleScheme::Lhs, 7)
            .unwrap();
        assert_eq!(ds1.len(), 90);
        assert_eq!(ds1.n_inputs(), 1);
    }

    #[test]
    fn zero_cov_produces_identical_outputs() {
        let bench = Benchmark::stiffness_only()
            .with_stiffness_cov(0.0, false)
            .unwrap();
        let omega = hz_to_rad(22.0);
        let ds = bench
            .generate_dataset(omega, 32, SampleScheme::Mcs, 3)
            .unwrap();
        let first = ds.outputs()[0];
        assert!(ds.outputs().iter().all(|&y| y == first));
        let sigma = bench.mcs_sigma_curve(&[omega], 1000, 1).unwrap();
        assert_eq!(sigma[0], 0.0);
    }

    #[test]
    fn literal_unit_cov_is_rejected_unless_forced() {
        let bench = Benchmark::stiffness_only();
        assert!(bench.with_stiffness_cov(1.0, false).is_err());
        let literal = bench.with_stiffness_cov(1.0, true).unwrap();
        // A draw with 1 + x <= 0 now fails per realization.
        assert!(matches!(
            literal.realize(&[-1.5]),
            Err(Error::UnphysicalSystem(_))
        ));
        assert!(literal.realize(&[0.5]).is_ok());
    }

    #[test]
    fn sigma_curves_from_two_seeds_agree_within_pooled_error() {
        let bench = Benchmark::stiffness_only();
        let grid: Vec<f64> = (0..26).map(|i| hz_to_rad(10.0 + i as f64)).collect();
        let count = 20_000;
        let spec = bench.input_spec();

        let curve = |seed: u64| -> (Vec<f64>, Vec<f64>) {
            let inputs = spec.sample(count, SampleScheme::Mcs, seed).unwrap();
            let mut sigmas = Vec::new();
            let mut sigma_ses = Vec::new();
            for &omega in &grid {
                let outputs = bench.batch_amplitudes(&inputs, omega).unwrap();
                let mean = outputs.iter().sum::<f64>() / count as f64;
                let var = outputs
                    .iter()
                    .map(|v| (v - mean) * (v - mean))
                    .sum::<f64>()
                    / count as f64;
                let m4 = outputs
                    .iter()
                    .map(|v| (v - mean).powi(4))
                    .sum::<f64>()
                    / count as f64;
                let se_var = ((m4 - var * var).max(0.0) / count as f64).sqrt();
                let sigma = var.sqrt();
                sigmas.push(sigma);
                sigma_ses.push(se_var / (2.0 * sigma));
            }
            (sigmas, sigma_ses)
        };

        let (sigma_a, se_a) = curve(101);
        let (sigma_b, se_b) = curve(202);
        for i in 0..grid.len() {
            let pooled = (se_a[i] * se_a[i] + se_b[i] * se_b[i]).sqrt();
            assert!(
                (sigma_a[i] - sigma_b[i]).abs() < 3.0 * pooled,
                "disagreement at index {i}: {} vs {} (pooled se {pooled})",
                sigma_a[i],
                sigma_b[i]
            );
        }
    }

    #[test]
    fn true_model_failure_probability_behaves() {
        let bench = Benchmark::stiffness_only();
        let omega = hz_to_rad(31.465);
        let none = bench
            .mcs_pfail(omega, 1.0, FailureSense::Exceed, 10_000, 5)
            .unwrap();
        assert_eq!(none.probability, 0.0);
        let all = bench
            .mcs_pfail(omega, -1.0, FailureSense::Exceed, 10_000, 5)
            .unwrap();
        assert_eq!(all.probability, 1.0);
    }
}
