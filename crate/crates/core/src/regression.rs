//! Expansion-coefficient estimation: standard least squares and LASSO with
//! k-fold cross-validation.

use crate::basis::{MultiIndexSet, MultivariateEvaluator, OrthonormalBasis1d};
use crate::dataset::Dataset;
use crate::rng;
use crate::{exec, Error, Result};
use nalgebra::{DMatrix, DVector};

/// Relative pivot threshold below which a design matrix counts as rank
/// deficient.
const RANK_TOLERANCE: f64 = 1e-12;

/// Coordinate-descent stopping threshold on the largest coefficient change.
const CD_TOLERANCE: f64 = 1e-8;

/// Hard cap on coordinate-descent sweeps per lambda.
const CD_MAX_SWEEPS: usize = 100_000;

/// Coefficient estimation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitMethod {
    /// Standard least squares via column-pivoted QR.
    LeastSquares,
    /// l1-penalized least squares with the penalty weight chosen by k-fold
    /// cross-validation.
    LassoCv,
}

/// Lambda grid for the LASSO path, always strictly positive and decreasing.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// Logarithmic grid from lambda_max = max |A^T b| down to
    /// `min_ratio * lambda_max` with `count` points.
    Auto { count: usize, min_ratio: f64 },
    /// Explicit grid, validated on use.
    Explicit(Vec<f64>),
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto {
            count: 100,
            min_ratio: 1e-4,
        }
    }
}

impl LambdaGrid {
    fn resolve(&self, a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<f64>> {
        let grid = match self {
            LambdaGrid::Auto { count, min_ratio } => {
                if *count == 0 || !(0.0..1.0).contains(min_ratio) {
                    return Err(Error::InvalidLambdaGrid);
                }
                let lambda_max = (a.transpose() * b).amax().max(f64::MIN_POSITIVE);
                if *count == 1 {
                    vec![lambda_max]
                } else {
                    let log_max = lambda_max.ln();
                    let log_min = (lambda_max * min_ratio).ln();
                    (0..*count)
                        .map(|i| {
                            let t = i as f64 / (*count as f64 - 1.0);
                            (log_max + t * (log_min - log_max)).exp()
                        })
                        .collect()
                }
            }
            LambdaGrid::Explicit(values) => values.clone(),
        };
        let valid = !grid.is_empty()
            && grid.iter().all(|&l| l.is_finite() && l > 0.0)
            && grid.windows(2).all(|w| w[0] > w[1]);
        if valid {
            Ok(grid)
        } else {
            Err(Error::InvalidLambdaGrid)
        }
    }
}

/// Complete fitting configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub method: FitMethod,
    pub folds: usize,
    pub lambda_grid: LambdaGrid,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            method: FitMethod::LassoCv,
            folds: 10,
            lambda_grid: LambdaGrid::default(),
            seed: 0,
        }
    }
}

/// Result of a cross-validated LASSO fit.
#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    /// (lambda, summed validation error) along the grid.
    pub cv_errors: Vec<(f64, f64)>,
}

/// Evaluate the basis at every design point: row l holds the multivariate
/// basis values at input row l, column 0 is the constant member.
pub fn design_matrix(
    dataset: &Dataset,
    bases: &[OrthonormalBasis1d],
    index_set: &MultiIndexSet,
) -> Result<DMatrix<f64>> {
    let rows = dataset.len();
    let cols = index_set.len();
    let row_data: Vec<Result<Vec<f64>>> = exec::map_indexed(rows, |l| {
        let mut evaluator = MultivariateEvaluator::new(bases, index_set);
        let mut row = vec![0.0; cols];
        evaluator.eval_into(dataset.input_row(l), &mut row)?;
        Ok(row)
    });
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    for (l, row) in row_data.into_iter().enumerate() {
        let row = row?;
        for (j, value) in row.into_iter().enumerate() {
            a[(l, j)] = value;
        }
    }
    Ok(a)
}

/// Least squares by column-pivoted QR; rejects underdetermined or rank
/// deficient systems.
pub fn fit_sls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<Vec<f64>> {
    let rows = a.nrows();
    let cols = a.ncols();
    if rows < cols {
        return Err(Error::UnderDetermined { rows, cols });
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot = 0.0f64;
    for j in 0..cols {
        let pivot = r[(j, j)].abs();
        min_pivot = min_pivot.min(pivot);
        max_pivot = max_pivot.max(pivot);
    }
    if min_pivot <= RANK_TOLERANCE * max_pivot {
        return Err(Error::RankDeficient { pivot: min_pivot });
    }
    let qtb = qr.q().transpose() * b;
    let mut solution = r
        .view((0, 0), (cols, cols))
        .solve_upper_triangular(&qtb.rows(0, cols))
        .ok_or(Error::RankDeficient { pivot: min_pivot })?;
    qr.p().inv_permute_rows(&mut solution);
    Ok(solution.iter().copied().collect())
}

/// Single LASSO solve at fixed lambda by cyclic coordinate descent.
///
/// Minimizes ||b - A c||^2 + lambda * sum_{j >= 1} |c_j|; the constant-term
/// coefficient (column 0) is never penalized. `coefficients` is the warm
/// start and is updated in place; `residual` must equal b - A c on entry.
fn coordinate_descent(
    a: &DMatrix<f64>,
    column_norms: &[f64],
    lambda: f64,
    coefficients: &mut [f64],
    residual: &mut DVector<f64>,
) {
    let cols = a.ncols();
    let half_lambda = 0.5 * lambda;
    for _ in 0..CD_MAX_SWEEPS {
        let mut max_change = 0.0f64;
        for j in 0..cols {
            let norm = column_norms[j];
            if norm == 0.0 {
                continue;
            }
            let column = a.column(j);
            let old = coefficients[j];
            let z = column.dot(residual) + norm * old;
            let new = if j == 0 {
                z / norm
            } else {
                soft_threshold(z, half_lambda) / norm
            };
            if new != old {
                residual.axpy(old - new, &column, 1.0);
                coefficients[j] = new;
                max_change = max_change.max((new - old).abs());
            }
        }
        if max_change < CD_TOLERANCE {
            break;
        }
    }
}

fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Warm-started solution path along a decreasing lambda grid. Returns the
/// coefficients at every grid point.
fn lasso_path(a: &DMatrix<f64>, b: &DVector<f64>, grid: &[f64]) -> Vec<Vec<f64>> {
    let cols = a.ncols();
    let column_norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm_squared()).collect();
    let mut coefficients = vec![0.0; cols];
    let mut residual = b.clone();
    let mut path = Vec::with_capacity(grid.len());
    for &lambda in grid {
        coordinate_descent(a, &column_norms, lambda, &mut coefficients, &mut residual);
        path.push(coefficients.clone());
    }
    path
}

/// Cross-validated LASSO per the fit configuration.
///
/// Folds are a seeded shuffle split into `folds` nearly equal parts; each
/// fold's path is fitted independently (optionally in parallel) and the
/// validation errors are reduced in fold order. Ties in the validation error
/// resolve to the larger lambda. The returned coefficients come from a final
/// full-data path stopped at the chosen lambda.
pub fn fit_lasso_cv(a: &DMatrix<f64>, b: &DVector<f64>, config: &FitConfig) -> Result<LassoFit> {
    let rows = a.nrows();
    if config.folds < 2 || config.folds > rows {
        return Err(Error::InvalidFolds {
            folds: config.folds,
            samples: rows,
        });
    }
    let grid = config.lambda_grid.resolve(a, b)?;

    let mut order: Vec<usize> = (0..rows).collect();
    let mut shuffle_rng = rng::stream(config.seed, 0);
    rng::shuffle(&mut shuffle_rng, &mut order);
    let fold_of: Vec<usize> = {
        let mut fold_of = vec![0usize; rows];
        for (position, &row) in order.iter().enumerate() {
            fold_of[row] = position % config.folds;
        }
        fold_of
    };

    let per_fold: Vec<Vec<f64>> = exec::map_indexed(config.folds, |fold| {
        let train_rows: Vec<usize> = (0..rows).filter(|&l| fold_of[l] != fold).collect();
        let val_rows: Vec<usize> = (0..rows).filter(|&l| fold_of[l] == fold).collect();
        let a_train = a.select_rows(train_rows.iter());
        let b_train = DVector::from_iterator(
            train_rows.len(),
            train_rows.iter().map(|&l| b[l]),
        );
        let path = lasso_path(&a_train, &b_train, &grid);
        path.iter()
            .map(|coefficients| {
                val_rows
                    .iter()
                    .map(|&l| {
                        let predicted: f64 = a
                            .row(l)
                            .iter()
                            .zip(coefficients)
                            .map(|(x, c)| x * c)
                            .sum();
                        let err = b[l] - predicted;
                        err * err
                    })
                    .sum::<f64>()
            })
            .collect()
    });

    let mut cv_errors = vec![0.0; grid.len()];
    for fold_errors in &per_fold {
        for (total, err) in cv_errors.iter_mut().zip(fold_errors) {
            *total += err;
        }
    }
    let scale = 1.0 / config.folds as f64;
    let cv_errors: Vec<f64> = cv_errors.into_iter().map(|e| e * scale).collect();

    let mut best_index = 0;
    for (i, &err) in cv_errors.iter().enumerate() {
        if !err.is_finite() {
            return Err(Error::NonFiniteCvError { lambda: grid[i] });
        }
        if err < cv_errors[best_index] {
            best_index = i;
        }
    }

    let final_path = lasso_path(a, b, &grid[..=best_index]);
    let coefficients = final_path.into_iter().last().expect("non-empty path");
    Ok(LassoFit {
        coefficients,
        lambda: grid[best_index],
        cv_errors: grid.iter().copied().zip(cv_errors).collect(),
    })
}
