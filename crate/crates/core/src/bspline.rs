//! Open knot vectors and univariate B-spline evaluation.

use crate::rng;
use crate::{Error, Result};
use std::io::{BufRead, Write};

/// A (p+1)-open knot vector on a bounded interval.
///
/// The first and last p+1 entries repeat the interval bounds; interior knots
/// carry multiplicities between 1 and p+1. The basis spans n = len - p - 1
/// functions evaluated by the Cox-de Boor recursion, with the convention
/// that 0/0 is zero and the right boundary belongs to the last nonempty span.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

impl KnotVector {
    /// Wrap and validate an explicit knot sequence.
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 * degree + 2 {
            return Err(Error::InvalidKnots(format!(
                "need at least {} knots for degree {}, got {}",
                2 * degree + 2,
                degree,
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::InvalidKnots("knots must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidKnots("knots must be non-decreasing".into()));
        }
        let p = degree;
        let len = knots.len();
        let n = len - p - 1;
        let a = knots[0];
        let b = knots[len - 1];
        if a >= b {
            return Err(Error::InvalidKnots(format!(
                "domain is empty: [{a}, {b}]"
            )));
        }
        if knots[..=p].iter().any(|&k| k != a) || knots[n..].iter().any(|&k| k != b) {
            return Err(Error::InvalidKnots(format!(
                "vector must repeat the bounds {} times at each end",
                p + 1
            )));
        }
        // Interior multiplicities may not exceed p + 1.
        let mut run = 1usize;
        for w in knots[p..=n].windows(2) {
            if w[0] == w[1] {
                run += 1;
                if run > p + 1 {
                    return Err(Error::InvalidKnots(format!(
                        "interior knot {} has multiplicity above {}",
                        w[0],
                        p + 1
                    )));
                }
            } else {
                run = 1;
            }
        }
        Ok(KnotVector { degree, knots })
    }

    /// (p+1)-open vector with I - 1 equally spaced simple interior knots.
    pub fn open_uniform(a: f64, b: f64, degree: usize, subintervals: usize) -> Result<Self> {
        if subintervals == 0 {
            return Err(Error::InvalidKnots("subinterval count must be >= 1".into()));
        }
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidKnots(format!("invalid bounds [{a}, {b}]")));
        }
        let mut knots = Vec::with_capacity(subintervals + 2 * degree + 1);
        knots.extend(std::iter::repeat(a).take(degree + 1));
        for j in 1..subintervals {
            knots.push(a + (b - a) * j as f64 / subintervals as f64);
        }
        knots.extend(std::iter::repeat(b).take(degree + 1));
        KnotVector::new(degree, knots)
    }

    /// (p+1)-open vector around explicitly chosen simple interior knots.
    pub fn from_interior(a: f64, b: f64, degree: usize, interior: &[f64]) -> Result<Self> {
        if interior.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidKnots(
                "interior knots must be strictly increasing".into(),
            ));
        }
        if interior.iter().any(|&t| t <= a || t >= b) {
            return Err(Error::InvalidKnots(
                "interior knots must lie strictly inside the bounds".into(),
            ));
        }
        let mut knots = Vec::with_capacity(interior.len() + 2 * degree + 2);
        knots.extend(std::iter::repeat(a).take(degree + 1));
        knots.extend_from_slice(interior);
        knots.extend(std::iter::repeat(b).take(degree + 1));
        KnotVector::new(degree, knots)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions n = len - p - 1.
    pub fn basis_count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Number of subintervals I = (distinct knots) - 1.
    pub fn subinterval_count(&self) -> usize {
        let mut distinct = 1;
        for w in self.knots.windows(2) {
            if w[0] != w[1] {
                distinct += 1;
            }
        }
        distinct - 1
    }

    /// Interior knots (strictly inside the domain), with multiplicity.
    pub fn interior(&self) -> &[f64] {
        let p = self.degree;
        let n = self.basis_count();
        &self.knots[p + 1..n]
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Index of the nonempty span containing x; x = b maps to the last span.
    fn find_span(&self, x: f64) -> usize {
        let p = self.degree;
        let n = self.basis_count();
        let t = &self.knots;
        if x >= t[n] {
            return n - 1;
        }
        let mut lo = p;
        let mut hi = n - 1;
        while lo < hi {
            let mid = (lo + hi + 1) / 2;
            if t[mid] <= x {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        lo
    }

    /// All n basis values at x.
    pub fn eval_basis(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.basis_count()];
        self.eval_basis_into(x, &mut out)?;
        Ok(out)
    }

    /// Evaluate into a caller-provided buffer of length n.
    ///
    /// At most p + 1 entries are nonzero; the values are non-negative and sum
    /// to one on the closed domain.
    pub fn eval_basis_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        let (a, b) = self.domain();
        if !(a..=b).contains(&x) {
            return Err(Error::OutOfDomain { x, lower: a, upper: b });
        }
        let p = self.degree;
        debug_assert_eq!(out.len(), self.basis_count());
        out.fill(0.0);
        let span = self.find_span(x);
        let t = &self.knots;
        // Triangular in-place recursion over the p + 1 active functions.
        let mut vals = [0.0; 16];
        let mut left = [0.0; 16];
        let mut right = [0.0; 16];
        let (vals, left, right) = if p < 16 {
            (&mut vals[..=p], &mut left[..=p], &mut right[..=p])
        } else {
            // Degrees this high never occur in practice; keep correctness anyway.
            return self.eval_basis_high_degree(x, span, out);
        };
        vals[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { vals[r] / denom } else { 0.0 };
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
        out[span - p..=span].copy_from_slice(vals);
        Ok(())
    }

    fn eval_basis_high_degree(&self, x: f64, span: usize, out: &mut [f64]) -> Result<()> {
        let p = self.degree;
        let t = &self.knots;
        let mut vals = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        vals[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { vals[r] / denom } else { 0.0 };
                vals[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            vals[j] = saved;
        }
        out[span - p..=span].copy_from_slice(&vals);
        Ok(())
    }

    /// Write the knot list, one value per line.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for k in &self.knots {
            writeln!(w, "{k}")?;
        }
        Ok(())
    }

    /// Read a knot list written by `write_text`; the degree is recovered from
    /// the multiplicity of the first knot.
    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut knots = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value: f64 = line.parse().map_err(|_| {
                Error::InvalidKnots(format!("line {}: cannot parse '{line}'", i + 1))
            })?;
            knots.push(value);
        }
        if knots.is_empty() {
            return Err(Error::InvalidKnots("empty knot file".into()));
        }
        let lead = knots.iter().take_while(|&&k| k == knots[0]).count();
        if lead < 2 {
            return Err(Error::InvalidKnots(
                "first knot must repeat at least twice in an open vector".into(),
            ));
        }
        KnotVector::new(lead - 1, knots)
    }
}

/// Baseline random knot vector: I - 1 sorted uniform draws on (a, b) with a
/// minimum spacing of 1e-6 (b - a), wrapped (p+1)-open.
pub fn random_knots(a: f64, b: f64, degree: usize, subintervals: usize, seed: u64) -> Result<KnotVector> {
    if subintervals == 0 {
        return Err(Error::InvalidKnots("subinterval count must be >= 1".into()));
    }
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidKnots(format!("invalid bounds [{a}, {b}]")));
    }
    let gap = 1e-6 * (b - a);
    let mut rng = rng::stream(seed, 0);
    loop {
        let mut interior: Vec<f64> = (0..subintervals.saturating_sub(1))
            .map(|_| a + (b - a) * rng::next_f64(&mut rng))
            .collect();
        interior.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let spaced = interior.windows(2).all(|w| w[1] - w[0] >= gap)
            && interior.first().map_or(true, |&t| t - a >= gap)
            && interior.last().map_or(true, |&t| b - t >= gap);
        if spaced {
            return KnotVector::from_interior(a, b, degree, &interior);
        }
    }
}
