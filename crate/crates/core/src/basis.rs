//! Measure-consistent orthonormal B-spline bases.
//!
//! Raw B-splines are not orthonormal under the input probability measure.
//! Replacing the first spline with the constant one, forming the moment
//! matrix G = E[P P^T] by per-span quadrature, and applying the inverse
//! Cholesky factor as a whitening map yields a basis whose first member is
//! identically one and whose members are orthonormal under the marginal.
//! Tensor products over variable subsets of bounded cardinality give the
//! S-variate expansion basis.

use crate::bspline::KnotVector;
use crate::distributions::Marginal;
use crate::quadrature;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Condition-estimate ceiling before basis construction is refused.
const CONDITION_LIMIT: f64 = 1e12;

/// Spline moment matrix G = E[P(X) P(X)^T] under the marginal.
///
/// Integration runs per knot span with a Gauss-Legendre rule of p + 5 nodes,
/// exact for the polynomial integrand under a uniform density and far inside
/// the stated tolerances for the truncated Gaussian. The matrix is scaled by
/// 1 / G[0,0] so the constant entry is exactly one.
pub fn moment_matrix(kv: &KnotVector, marginal: &Marginal) -> Result<DMatrix<f64>> {
    let (a, b) = kv.domain();
    let (ma, mb) = marginal.support();
    let tol = 1e-12 * (b - a).abs();
    if (ma - a).abs() > tol || (mb - b).abs() > tol {
        return Err(Error::SupportMismatch {
            marginal_lower: ma,
            marginal_upper: mb,
            knot_lower: a,
            knot_upper: b,
        });
    }
    let n = kv.basis_count();
    let p = kv.degree();
    let (nodes, weights) = quadrature::gauss_legendre(p + 5);
    let mut g = DMatrix::<f64>::zeros(n, n);
    let mut raw = vec![0.0; n];
    let knots = kv.knots();
    for span in knots.windows(2) {
        let (lo, hi) = (span[0], span[1]);
        if lo == hi {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (&node, &weight) in nodes.iter().zip(&weights) {
            let x = mid + half * node;
            kv.eval_basis_into(x, &mut raw)?;
            raw[0] = 1.0;
            let scale = weight * half * marginal.pdf(x);
            for i in 0..n {
                if raw[i] == 0.0 && i > 0 {
                    continue;
                }
                for j in 0..=i {
                    g[(i, j)] += scale * raw[i] * raw[j];
                }
            }
        }
    }
    let norm = g[(0, 0)];
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::NonFinite("moment matrix normalization".into()));
    }
    for i in 0..n {
        for j in 0..=i {
            let value = g[(i, j)] / norm;
            g[(i, j)] = value;
            g[(j, i)] = value;
        }
    }
    Ok(g)
}

/// Lower-triangular whitening matrix W = L^{-1} where G = L L^T.
///
/// Satisfies W G W^T = I; with G[0,0] = 1 the leading entry of W is one, so
/// the whitened basis keeps the constant function.
pub fn whiten(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = cholesky_lower(g)?;
    let n = g.nrows();
    let mut w = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        w[(j, j)] = 1.0 / l[(j, j)];
        for i in j + 1..n {
            let mut sum = 0.0;
            for k in j..i {
                sum += l[(i, k)] * w[(k, j)];
            }
            w[(i, j)] = -sum / l[(i, i)];
        }
    }
    Ok(w)
}

/// Plain lower Cholesky with the failing leading-minor index on error.
fn cholesky_lower(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    assert_eq!(n, g.ncols(), "moment matrix must be square");
    let mut l = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::NotPositiveDefinite { minor: i + 1 });
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// One-norm condition estimate of G given its whitening matrix.
fn condition_estimate(g: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let inv = w.transpose() * w;
    let norm1 = |m: &DMatrix<f64>| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    };
    norm1(g) * norm1(&inv)
}

/// A univariate orthonormal basis: knot vector, marginal, and whitening map.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis1d {
    knots: KnotVector,
    marginal: Marginal,
    whitening: DMatrix<f64>,
}

impl OrthonormalBasis1d {
    /// Construct the basis for one coordinate; the index is only used in
    /// diagnostics.
    pub fn build(knots: KnotVector, marginal: Marginal, coordinate: usize) -> Result<Self> {
        let g = moment_matrix(&knots, &marginal)?;
        let w = whiten(&g)?;
        let condition = condition_estimate(&g, &w);
        if condition > CONDITION_LIMIT {
            let (knot_a, knot_b) = closest_distinct_pair(knots.knots());
            return Err(Error::IllConditioned {
                coordinate,
                condition,
                knot_a,
                knot_b,
            });
        }
        Ok(OrthonormalBasis1d {
            knots,
            marginal,
            whitening: w,
        })
    }

    /// Rebuild from serialized parts without re-deriving the whitening map.
    pub fn from_parts(knots: KnotVector, marginal: Marginal, whitening: DMatrix<f64>) -> Result<Self> {
        let n = knots.basis_count();
        if whitening.nrows() != n || whitening.ncols() != n {
            return Err(Error::ModelFormat(format!(
                "whitening matrix is {}x{}, expected {n}x{n}",
                whitening.nrows(),
                whitening.ncols()
            )));
        }
        Ok(OrthonormalBasis1d {
            knots,
            marginal,
            whitening,
        })
    }

    pub fn len(&self) -> usize {
        self.knots.basis_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    pub fn whitening(&self) -> &DMatrix<f64> {
        &self.whitening
    }

    /// Evaluate all orthonormal members at x; `raw` is scratch of length n.
    pub fn eval_into(&self, x: f64, out: &mut [f64], raw: &mut [f64]) -> Result<()> {
        let n = self.len();
        debug_assert_eq!(out.len(), n);
        debug_assert_eq!(raw.len(), n);
        self.knots.eval_basis_into(x, raw)?;
        raw[0] = 1.0;
        let w = &self.whitening;
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..=i {
                sum += w[(i, j)] * raw[j];
            }
            out[i] = sum;
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        let mut raw = vec![0.0; self.len()];
        self.eval_into(x, &mut out, &mut raw)?;
        Ok(out)
    }
}

fn closest_distinct_pair(knots: &[f64]) -> (f64, f64) {
    let mut best = (knots[0], knots[knots.len() - 1]);
    let mut gap = f64::INFINITY;
    for w in knots.windows(2) {
        let d = w[1] - w[0];
        if d > 0.0 && d < gap {
            gap = d;
            best = (w[0], w[1]);
        }
    }
    best
}

/// One term of the S-variate expansion: a variable subset and, per member,
/// a basis index >= 1 (index 0 is the constant member of each coordinate).
/// The empty subset denotes the constant term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexTerm {
    pub dims: Vec<usize>,
    pub indices: Vec<usize>,
}

/// Enumerated basis-index set of the S-variate expansion.
///
/// Ordering is canonical: the constant term first, then subsets in graded
/// lexicographic order, and index tuples per subset in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiIndexSet {
    counts: Vec<usize>,
    order: usize,
    terms: Vec<IndexTerm>,
}

impl MultiIndexSet {
    pub fn build(counts: &[usize], order: usize) -> Result<Self> {
        let dims = counts.len();
        if order < 1 || order > dims {
            return Err(Error::InvalidOrder { order, dims });
        }
        let mut terms = vec![IndexTerm {
            dims: Vec::new(),
            indices: Vec::new(),
        }];
        let mut subset = Vec::with_capacity(order);
        for size in 1..=order {
            enumerate_subsets(dims, size, 0, &mut subset, &mut |chosen| {
                push_tuples(counts, chosen, &mut terms);
            });
        }
        debug_assert_eq!(terms.len(), basis_count(counts, order)?);
        Ok(MultiIndexSet {
            counts: counts.to_vec(),
            order,
            terms,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dims(&self) -> usize {
        self.counts.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn terms(&self) -> &[IndexTerm] {
        &self.terms
    }
}

fn enumerate_subsets(
    dims: usize,
    size: usize,
    start: usize,
    current: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if current.len() == size {
        visit(current);
        return;
    }
    let remaining = size - current.len();
    for k in start..=dims.saturating_sub(remaining) {
        current.push(k);
        enumerate_subsets(dims, size, k + 1, current, visit);
        current.pop();
    }
}

/// Append all index tuples for one subset, rightmost index fastest.
fn push_tuples(counts: &[usize], subset: &[usize], terms: &mut Vec<IndexTerm>) {
    if subset.iter().any(|&k| counts[k] < 2) {
        return;
    }
    let mut indices: Vec<usize> = vec![1; subset.len()];
    loop {
        terms.push(IndexTerm {
            dims: subset.to_vec(),
            indices: indices.clone(),
        });
        let mut pos = subset.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            indices[pos] += 1;
            if indices[pos] < counts[subset[pos]] {
                break;
            }
            indices[pos] = 1;
        }
    }
}

/// Number of basis functions of the S-variate expansion:
/// 1 + sum over subsets |u| <= S of prod_{k in u} (n_k - 1), evaluated via
/// elementary symmetric polynomials.
pub fn basis_count(counts: &[usize], order: usize) -> Result<usize> {
    let dims = counts.len();
    if order < 1 || order > dims {
        return Err(Error::InvalidOrder { order, dims });
    }
    let mut elementary = vec![0u128; order + 1];
    elementary[0] = 1;
    for &n in counts {
        let v = (n - 1) as u128;
        for s in (1..=order).rev() {
            elementary[s] += elementary[s - 1] * v;
        }
    }
    let total: u128 = 1 + elementary[1..].iter().sum::<u128>();
    Ok(total as usize)
}

/// Evaluate every multivariate basis member at a point, reusing scratch
/// buffers across calls.
pub struct MultivariateEvaluator<'a> {
    bases: &'a [OrthonormalBasis1d],
    index_set: &'a MultiIndexSet,
    psi: Vec<Vec<f64>>,
    raw: Vec<f64>,
}

impl<'a> MultivariateEvaluator<'a> {
    pub fn new(bases: &'a [OrthonormalBasis1d], index_set: &'a MultiIndexSet) -> Self {
        assert_eq!(bases.len(), index_set.dims());
        for (basis, &count) in bases.iter().zip(index_set.counts()) {
            assert_eq!(basis.len(), count);
        }
        let max_n = bases.iter().map(|b| b.len()).max().unwrap_or(0);
        MultivariateEvaluator {
            bases,
            index_set,
            psi: bases.iter().map(|b| vec![0.0; b.len()]).collect(),
            raw: vec![0.0; max_n],
        }
    }

    pub fn output_len(&self) -> usize {
        self.index_set.len()
    }

    /// `out` must have the index-set length; element order is canonical.
    pub fn eval_into(&mut self, x: &[f64], out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(x.len(), self.bases.len());
        debug_assert_eq!(out.len(), self.index_set.len());
        for (k, basis) in self.bases.iter().enumerate() {
            basis.eval_into(x[k], &mut self.psi[k], &mut self.raw[..basis.len()])?;
        }
        for (slot, term) in out.iter_mut().zip(self.index_set.terms()) {
            let mut product = 1.0;
            for (&k, &i) in term.dims.iter().zip(&term.indices) {
                product *= self.psi[k][i];
            }
            *slot = product;
        }
        Ok(())
    }
}

/// Convenience wrapper around [`MultivariateEvaluator`] for one-off points.
pub fn eval_multivariate(
    bases: &[OrthonormalBasis1d],
    index_set: &MultiIndexSet,
    x: &[f64],
) -> Result<Vec<f64>> {
    let mut evaluator = MultivariateEvaluator::new(bases, index_set);
    let mut out = vec![0.0; index_set.len()];
    evaluator.eval_into(x, &mut out)?;
    Ok(out)
}
