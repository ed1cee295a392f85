//! The assembled surrogate: prediction, exact-by-formula moments, resampled
//! CDFs, failure probability, accuracy metrics, and model persistence.

use crate::basis::{MultiIndexSet, MultivariateEvaluator, OrthonormalBasis1d};
use crate::bspline::{self, KnotVector};
use crate::dataset::Dataset;
use crate::distributions::{InputSpec, Marginal};
use crate::knot_select;
use crate::regression::{self, FitConfig, FitMethod};
use crate::rng::{self, CHUNK_ROWS};
use crate::{exec, Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

const MODEL_FILE_VERSION: u32 = 1;

/// How a fit acquired its expansion coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitMetadata {
    pub method: String,
    pub seed: u64,
    pub training_size: usize,
}

/// A fitted S-variate expansion.
#[derive(Debug, Clone, PartialEq)]
pub struct SddModel {
    input: InputSpec,
    bases: Vec<OrthonormalBasis1d>,
    index_set: MultiIndexSet,
    coefficients: Vec<f64>,
    metadata: FitMetadata,
}

/// Failure criterion orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureSense {
    /// Failure when the prediction exceeds the threshold.
    Exceed,
    /// Failure when the prediction falls below the threshold.
    FallBelow,
}

/// Monte Carlo failure-probability estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PfailEstimate {
    pub probability: f64,
    pub standard_error: f64,
    pub threshold: f64,
    pub sense: FailureSense,
    pub resamples: usize,
}

/// Empirical CDF of model resamples: sorted values with plotting positions
/// i / L'.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    values: Vec<f64>,
}

impl CdfTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Plotting position of the i-th sorted value (1-based over L').
    pub fn probability(&self, i: usize) -> f64 {
        (i + 1) as f64 / self.values.len() as f64
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, value) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", value, self.probability(i))?;
        }
        Ok(())
    }
}

/// Accuracy metrics against a reference; fields apply per reference kind.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub r2: Option<f64>,
    pub rel_std_error: Option<f64>,
    pub mean_abs_error: Option<f64>,
}

/// Reference data for [`SddModel::metrics`].
pub enum MetricsReference<'a> {
    /// Held-out input-output pairs.
    Dataset(&'a Dataset),
    /// Standard-deviation curves over a shared frequency grid; `model` is the
    /// per-frequency sigma of per-frequency surrogates.
    SigmaCurve {
        model: &'a [f64],
        reference: &'a [f64],
    },
}

/// Knot-vector construction rule for the fitting pipeline.
pub enum KnotRule<'a> {
    /// Equally spaced interior knots.
    Uniform,
    /// Seeded random interior knots; coordinates with identical bounds and
    /// configuration receive identical vectors.
    Random { seed: u64 },
    /// Gradient-based selection from the fitting dataset.
    Optimal { dataset: &'a Dataset },
    /// Caller-provided vectors, one per coordinate.
    Explicit(Vec<KnotVector>),
}

/// Build per-coordinate knot vectors for the requested rule.
pub fn build_knots(
    rule: &KnotRule,
    input: &InputSpec,
    degrees: &[usize],
    subintervals: &[usize],
) -> Result<Vec<KnotVector>> {
    let dims = input.dims();
    if degrees.len() != dims || subintervals.len() != dims {
        return Err(Error::DimensionMismatch {
            expected: dims,
            found: degrees.len().min(subintervals.len()),
        });
    }
    match rule {
        KnotRule::Explicit(vectors) => {
            if vectors.len() != dims {
                return Err(Error::DimensionMismatch {
                    expected: dims,
                    found: vectors.len(),
                });
            }
            Ok(vectors.clone())
        }
        _ => (0..dims)
            .map(|k| {
                let (a, b) = input.marginal(k).support();
                match rule {
                    KnotRule::Uniform => {
                        KnotVector::open_uniform(a, b, degrees[k], subintervals[k])
                    }
                    KnotRule::Random { seed } => {
                        bspline::random_knots(a, b, degrees[k], subintervals[k], *seed)
                    }
                    KnotRule::Optimal { dataset } => knot_select::build_optimal_knots(
                        dataset,
                        k,
                        degrees[k],
                        subintervals[k],
                        (a, b),
                    ),
                    KnotRule::Explicit(_) => unreachable!(),
                }
            })
            .collect(),
    }
}

/// Cross-validation summary attached to LASSO fits.
#[derive(Debug, Clone)]
pub struct LassoSummary {
    pub lambda: f64,
    pub cv_errors: Vec<(f64, f64)>,
}

/// A fitted model plus method-specific diagnostics.
pub struct FitOutcome {
    pub model: SddModel,
    pub lasso: Option<LassoSummary>,
}

/// Full fitting pipeline: orthonormal bases on the given knots, design
/// matrix over the dataset, coefficients per the configured method.
pub fn fit_model(
    input: &InputSpec,
    dataset: &Dataset,
    knots: Vec<KnotVector>,
    order: usize,
    config: &FitConfig,
) -> Result<FitOutcome> {
    dataset.validate_support(input)?;
    let bases: Vec<OrthonormalBasis1d> = knots
        .into_iter()
        .enumerate()
        .map(|(k, kv)| OrthonormalBasis1d::build(kv, *input.marginal(k), k))
        .collect::<Result<_>>()?;
    let counts: Vec<usize> = bases.iter().map(|b| b.len()).collect();
    let index_set = MultiIndexSet::build(&counts, order)?;
    let a = regression::design_matrix(dataset, &bases, &index_set)?;
    let b = DVector::from_column_slice(dataset.outputs());
    let (coefficients, lasso) = match config.method {
        FitMethod::LeastSquares => (regression::fit_sls(&a, &b)?, None),
        FitMethod::LassoCv => {
            let fit = regression::fit_lasso_cv(&a, &b, config)?;
            (
                fit.coefficients,
                Some(LassoSummary {
                    lambda: fit.lambda,
                    cv_errors: fit.cv_errors,
                }),
            )
        }
    };
    let metadata = FitMetadata {
        method: match config.method {
            FitMethod::LeastSquares => "sls".to_string(),
            FitMethod::LassoCv => "lasso-cv".to_string(),
        },
        seed: config.seed,
        training_size: dataset.len(),
    };
    let model = SddModel::new(input.clone(), bases, index_set, coefficients, metadata)?;
    Ok(FitOutcome { model, lasso })
}

impl SddModel {
    pub fn new(
        input: InputSpec,
        bases: Vec<OrthonormalBasis1d>,
        index_set: MultiIndexSet,
        coefficients: Vec<f64>,
        metadata: FitMetadata,
    ) -> Result<Self> {
        if coefficients.len() != index_set.len() {
            return Err(Error::CoefficientMismatch {
                coefficients: coefficients.len(),
                basis: index_set.len(),
            });
        }
        if bases.len() != input.dims() || index_set.dims() != input.dims() {
            return Err(Error::DimensionMismatch {
                expected: input.dims(),
                found: bases.len().min(index_set.dims()),
            });
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("expansion coefficients".into()));
        }
        Ok(SddModel {
            input,
            bases,
            index_set,
            coefficients,
            metadata,
        })
    }

    pub fn input(&self) -> &InputSpec {
        &self.input
    }

    pub fn bases(&self) -> &[OrthonormalBasis1d] {
        &self.bases
    }

    pub fn index_set(&self) -> &MultiIndexSet {
        &self.index_set
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn metadata(&self) -> &FitMetadata {
        &self.metadata
    }

    /// Expansion value at a point inside the support box.
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        let mut evaluator = MultivariateEvaluator::new(&self.bases, &self.index_set);
        let mut row = vec![0.0; self.index_set.len()];
        evaluator.eval_into(x, &mut row)?;
        Ok(row.iter().zip(&self.coefficients).map(|(v, c)| v * c).sum())
    }

    /// Predictions for row-major inputs, chunk-parallel and order-preserving.
    pub fn predict_batch(&self, inputs: &[f64]) -> Result<Vec<f64>> {
        let dims = self.input.dims();
        assert_eq!(inputs.len() % dims, 0, "row-major input length");
        let rows = inputs.len() / dims;
        let chunks = rows.div_ceil(CHUNK_ROWS);
        let parts: Vec<Result<Vec<f64>>> = exec::map_indexed(chunks, |c| {
            let start = c * CHUNK_ROWS;
            let stop = ((c + 1) * CHUNK_ROWS).min(rows);
            let mut evaluator = MultivariateEvaluator::new(&self.bases, &self.index_set);
            let mut row = vec![0.0; self.index_set.len()];
            let mut out = Vec::with_capacity(stop - start);
            for l in start..stop {
                evaluator.eval_into(&inputs[l * dims..(l + 1) * dims], &mut row)?;
                out.push(row.iter().zip(&self.coefficients).map(|(v, c)| v * c).sum());
            }
            Ok(out)
        });
        let mut out = Vec::with_capacity(rows);
        for part in parts {
            out.extend(part?);
        }
        Ok(out)
    }

    /// Exact expansion mean: the constant-term coefficient.
    pub fn mean(&self) -> f64 {
        self.coefficients[0]
    }

    /// Exact expansion variance: the sum of squared non-constant
    /// coefficients.
    pub fn variance(&self) -> f64 {
        self.coefficients[1..].iter().map(|c| c * c).sum()
    }

    /// Draw `count` fresh inputs (crude Monte Carlo) and predict them,
    /// fused per chunk so no design matrix is materialized.
    pub fn resample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::EmptySample);
        }
        let dims = self.input.dims();
        let chunks = count.div_ceil(CHUNK_ROWS);
        let parts: Vec<Result<Vec<f64>>> = exec::map_indexed(chunks, |c| {
            let start = c * CHUNK_ROWS;
            let stop = ((c + 1) * CHUNK_ROWS).min(count);
            let mut rng = rng::stream(seed, c as u64);
            let mut evaluator = MultivariateEvaluator::new(&self.bases, &self.index_set);
            let mut row = vec![0.0; self.index_set.len()];
            let mut x = vec![0.0; dims];
            let mut out = Vec::with_capacity(stop - start);
            for _ in start..stop {
                for (slot, marginal) in x.iter_mut().zip(self.input.marginals()) {
                    *slot = marginal.quantile(rng::next_f64(&mut rng));
                }
                evaluator.eval_into(&x, &mut row)?;
                out.push(row.iter().zip(&self.coefficients).map(|(v, c)| v * c).sum());
            }
            Ok(out)
        });
        let mut out = Vec::with_capacity(count);
        for part in parts {
            out.extend(part?);
        }
        Ok(out)
    }

    /// Empirical CDF of `count` resampled predictions.
    pub fn resample_cdf(&self, count: usize, seed: u64) -> Result<CdfTable> {
        let mut values = self.resample(count, seed)?;
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(CdfTable { values })
    }

    /// Failure probability by resampling, with its binomial standard error.
    pub fn pfail(
        &self,
        threshold: f64,
        sense: FailureSense,
        count: usize,
        seed: u64,
    ) -> Result<PfailEstimate> {
        let values = self.resample(count, seed)?;
        let failures = values
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

    /// Accuracy metrics against held-out data or a sigma curve.
    pub fn metrics(&self, reference: &MetricsReference) -> Result<Metrics> {
        match reference {
            MetricsReference::Dataset(ds) => {
                if ds.is_empty() {
                    return Err(Error::EmptySample);
                }
                let predictions = self.predict_batch(ds.inputs())?;
                let outputs = ds.outputs();
                let n = outputs.len() as f64;
                let mean_ref = outputs.iter().sum::<f64>() / n;
                let ss_tot: f64 = outputs.iter().map(|y| (y - mean_ref) * (y - mean_ref)).sum();
                if ss_tot == 0.0 {
                    return Err(Error::ZeroVariance);
                }
                let ss_res: f64 = outputs
                    .iter()
                    .zip(&predictions)
                    .map(|(y, p)| (y - p) * (y - p))
                    .sum();
                let var_ref = ss_tot / n;
                Ok(Metrics {
                    r2: Some(1.0 - ss_res / ss_tot),
                    rel_std_error: Some(relative_std_error(self.variance(), var_ref)?),
                    mean_abs_error: None,
                })
            }
            MetricsReference::SigmaCurve { model, reference } => {
                assert_eq!(model.len(), reference.len(), "curve grids must match");
                if model.is_empty() {
                    return Err(Error::EmptySample);
                }
                Ok(Metrics {
                    r2: None,
                    rel_std_error: None,
                    mean_abs_error: Some(sigma_curve_mae(model, reference)),
                })
            }
        }
    }

    /// Serialize as versioned structured text.
    pub fn to_toml(&self) -> Result<String> {
        let variables: Vec<VariableFile> = self
            .bases
            .iter()
            .map(|basis| VariableFile {
                marginal: *basis.marginal(),
                degree: basis.knots().degree(),
                knots: basis.knots().knots().to_vec(),
                whitening: basis.whitening().transpose().as_slice().to_vec(),
            })
            .collect();
        let file = ModelFile {
            version: MODEL_FILE_VERSION,
            metadata: self.metadata.clone(),
            variables,
            expansion: ExpansionFile {
                interaction_order: self.index_set.order(),
                coefficients: self.coefficients.clone(),
            },
        };
        toml::to_string(&file).map_err(|e| Error::ModelFormat(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ModelFile =
            toml::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {}, expected {MODEL_FILE_VERSION}",
                file.version
            )));
        }
        let mut marginals = Vec::with_capacity(file.variables.len());
        let mut bases = Vec::with_capacity(file.variables.len());
        for (k, variable) in file.variables.into_iter().enumerate() {
            let kv = KnotVector::new(variable.degree, variable.knots)?;
            let n = kv.basis_count();
            if variable.whitening.len() != n * n {
                return Err(Error::ModelFormat(format!(
                    "variable {}: whitening has {} entries, expected {}",
                    k + 1,
                    variable.whitening.len(),
                    n * n
                )));
            }
            let w = DMatrix::from_row_slice(n, n, &variable.whitening);
            marginals.push(variable.marginal);
            bases.push(OrthonormalBasis1d::from_parts(kv, variable.marginal, w)?);
        }
        let input = InputSpec::new(marginals)?;
        let counts: Vec<usize> = bases.iter().map(|b| b.len()).collect();
        let index_set = MultiIndexSet::build(&counts, file.expansion.interaction_order)?;
        SddModel::new(
            input,
            bases,
            index_set,
            file.expansion.coefficients,
            file.metadata,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        SddModel::from_toml(&text)
    }

    /// Two-column coefficient table: 1-based basis index and value.
    pub fn write_coefficients<W: Write>(&self, mut w: W) -> Result<()> {
        for (i, c) in self.coefficients.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, c)?;
        }
        Ok(())
    }
}

/// Relative error of the standard deviation in percent, computed on
/// variances: |var_model - var_ref| / var_ref * 100.
pub fn relative_std_error(var_model: f64, var_ref: f64) -> Result<f64> {
    if var_ref == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((var_model - var_ref).abs() / var_ref * 100.0)
}

/// Mean absolute deviation between two sigma curves on a shared grid.
pub fn sigma_curve_mae(model: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(model.len(), reference.len());
    model
        .iter()
        .zip(reference)
        .map(|(m, r)| (m - r).abs())
        .sum::<f64>()
        / model.len() as f64
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    metadata: FitMetadata,
    variables: Vec<VariableFile>,
    expansion: ExpansionFile,
}

#[derive(Serialize, Deserialize)]
struct VariableFile {
    marginal: Marginal,
    degree: usize,
    /// Full knot list including repeated bounds.
    knots: Vec<f64>,
    /// Row-major whitening matrix.
    whitening: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ExpansionFile {
    interaction_order: usize,
    coefficients: Vec<f64>,
}
