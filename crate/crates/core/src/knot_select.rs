//! Gradient-based internal knot selection.
//!
//! For each input coordinate the fitting dataset is reordered into a
//! piecewise-linear response profile, the domain is tiled with equal-width
//! reference regions, and each region contributes the internal knot whose
//! profile segment has the steepest slope. The selection reuses the fitting
//! samples and costs no extra model evaluations.

use crate::bspline::KnotVector;
use crate::dataset::Dataset;
use crate::{Error, Result};

/// Nudge applied when a selected knot coincides with a domain bound.
const BOUNDARY_NUDGE: f64 = 1e-9;

/// Sorted response profile along one coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateProfile {
    coordinate: usize,
    abscissae: Vec<f64>,
    ordinates: Vec<f64>,
}

impl CoordinateProfile {
    pub fn coordinate(&self) -> usize {
        self.coordinate
    }

    pub fn abscissae(&self) -> &[f64] {
        &self.abscissae
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ordinates
    }

    /// Piecewise-linear interpolant defined by consecutive profile nodes.
    pub fn interpolate(&self, x: f64) -> f64 {
        let xs = &self.abscissae;
        let ys = &self.ordinates;
        if x <= xs[0] {
            return ys[0];
        }
        if x >= xs[xs.len() - 1] {
            return ys[ys.len() - 1];
        }
        let i = xs.partition_point(|&t| t < x);
        let (x0, x1) = (xs[i - 1], xs[i]);
        let (y0, y1) = (ys[i - 1], ys[i]);
        y0 + (y1 - y0) / (x1 - x0) * (x - x0)
    }
}

/// Equal-width tiling of [lower, upper] into `count` regions.
///
/// A point belongs to the region whose right edge it does not exceed, i.e.
/// region j covers (lower + j*w, lower + (j+1)*w] apart from the first
/// region, which is closed on the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRegions {
    lower: f64,
    upper: f64,
    count: usize,
}

impl ReferenceRegions {
    pub fn new(lower: f64, upper: f64, count: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) || count == 0 {
            return Err(Error::InvalidKnots(format!(
                "invalid reference regions [{lower}, {upper}] x {count}"
            )));
        }
        Ok(ReferenceRegions { lower, upper, count })
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn width(&self) -> f64 {
        (self.upper - self.lower) / self.count as f64
    }

    /// Region index of x, for x in (lower, upper].
    pub fn index_of(&self, x: f64) -> usize {
        let w = self.width();
        let mut j = ((x - self.lower) / w).floor() as isize;
        // Points landing exactly on a region edge belong to the lower region.
        if j > 0 && x <= self.lower + j as f64 * w {
            j -= 1;
        }
        j.clamp(0, self.count as isize - 1) as usize
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        self.lower + (j as f64 + 0.5) * self.width()
    }
}

/// Sort the dataset along coordinate `k` and collapse duplicate abscissae to
/// a single node carrying the mean output.
pub fn build_profile(dataset: &Dataset, k: usize) -> Result<CoordinateProfile> {
    assert!(k < dataset.n_inputs(), "coordinate index out of range");
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by(|&a, &b| {
        dataset.input_row(a)[k]
            .partial_cmp(&dataset.input_row(b)[k])
            .unwrap()
    });
    let mut abscissae: Vec<f64> = Vec::with_capacity(order.len());
    let mut ordinates: Vec<f64> = Vec::with_capacity(order.len());
    let mut run = 0usize;
    for &l in &order {
        let x = dataset.input_row(l)[k];
        let y = dataset.outputs()[l];
        match abscissae.last() {
            Some(&last) if last == x => {
                run += 1;
                let m = ordinates.last_mut().unwrap();
                *m += (y - *m) / (run + 1) as f64;
            }
            _ => {
                abscissae.push(x);
                ordinates.push(y);
                run = 0;
            }
        }
    }
    if abscissae.len() < 2 {
        return Err(Error::DegenerateProfile {
            coordinate: k,
            distinct: abscissae.len(),
        });
    }
    Ok(CoordinateProfile {
        coordinate: k,
        abscissae,
        ordinates,
    })
}

/// Pick one internal knot per region: the right endpoint of the profile
/// segment with the largest absolute slope among segments whose right
/// endpoint falls in the region. Ties keep the leftmost candidate; a region
/// without candidates falls back to its midpoint. Knots touching a bound are
/// nudged inward.
pub fn select_internal_knots(
    profile: &CoordinateProfile,
    regions: &ReferenceRegions,
) -> Result<Vec<f64>> {
    let xs = profile.abscissae();
    let ys = profile.ordinates();
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite(format!(
            "profile outputs for coordinate {}",
            profile.coordinate()
        )));
    }
    let mut best: Vec<Option<(f64, f64)>> = vec![None; regions.count()];
    for i in 1..xs.len() {
        let slope = ((ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1])).abs();
        let j = regions.index_of(xs[i]);
        match best[j] {
            Some((best_slope, _)) if best_slope >= slope => {}
            _ => best[j] = Some((slope, xs[i])),
        }
    }
    let (a, b) = (regions.lower, regions.upper);
    let nudge = BOUNDARY_NUDGE * (b - a);
    let knots: Vec<f64> = best
        .iter()
        .enumerate()
        .map(|(j, entry)| {
            let x = entry.map_or_else(|| regions.midpoint(j), |(_, x)| x);
            x.clamp(a + nudge, b - nudge)
        })
        .collect();
    debug_assert!(knots.windows(2).all(|w| w[0] < w[1]));
    Ok(knots)
}

/// Run the full selection for one coordinate and wrap the result as a
/// (p+1)-open vector with I - 1 chosen interior knots.
pub fn build_optimal_knots(
    dataset: &Dataset,
    k: usize,
    degree: usize,
    subintervals: usize,
    bounds: (f64, f64),
) -> Result<KnotVector> {
    if subintervals == 0 {
        return Err(Error::InvalidKnots("subinterval count must be >= 1".into()));
    }
    let (a, b) = bounds;
    if subintervals == 1 {
        return KnotVector::open_uniform(a, b, degree, 1);
    }
    let profile = build_profile(dataset, k)?;
    let regions = ReferenceRegions::new(a, b, subintervals - 1)?;
    let interior = select_internal_knots(&profile, &regions)?;
    KnotVector::from_interior(a, b, degree, &interior)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dataset_1d(pairs: &[(f64, f64)]) -> Dataset {
        let inputs: Vec<f64> = pairs.iter().map(|&(x, _)| x).collect();
        let outputs: Vec<f64> = pairs.iter().map(|&(_, y)| y).collect();
        Dataset::from_parts(1, inputs, outputs, "test").unwrap()
    }

    #[test]
    fn profile_sorts_by_the_requested_coordinate() {
        let ds = dataset_1d(&[(2.0, 4.0), (1.0, 1.0), (3.0, 9.0)]);
        let profile = build_profile(&ds, 0).unwrap();
        assert_eq!(profile.abscissae(), &[1.0, 2.0, 3.0]);
        assert_eq!(profile.ordinates(), &[1.0, 4.0, 9.0]);
    }

    #[test]
    fn duplicate_abscissae_collapse_to_the_mean_output() {
        let ds = dataset_1d(&[(1.0, 2.0), (1.0, 4.0), (2.0, 5.0)]);
        let profile = build_profile(&ds, 0).unwrap();
        assert_eq!(profile.abscissae(), &[1.0, 2.0]);
        assert_relative_eq!(profile.ordinates()[0], 3.0);
    }

    #[test]
    fn single_distinct_abscissa_is_degenerate() {
        let ds = dataset_1d(&[(1.0, 2.0), (1.0, 4.0)]);
        assert!(matches!(
            build_profile(&ds, 0),
            Err(Error::DegenerateProfile { distinct: 1, .. })
        ));
    }

    #[test]
    fn constant_gradient_keeps_the_leftmost_candidate_per_region() {
        let pairs: Vec<(f64, f64)> = (0..=10).map(|i| (i as f64 / 10.0, i as f64 / 10.0)).collect();
        let ds = dataset_1d(&pairs);
        let profile = build_profile(&ds, 0).unwrap();
        let regions = ReferenceRegions::new(0.0, 1.0, 2).unwrap();
        let knots = select_internal_knots(&profile, &regions).unwrap();
        // First right endpoint in (0, 0.5] is 0.1; in (0.5, 1.0] it is 0.6.
        assert_relative_eq!(knots[0], 0.1);
        assert_relative_eq!(knots[1], 0.6);
    }

    #[test]
    fn kink_attracts_the_knot() {
        // Steep segment (slope 10) ends at the kink x = 0.3, flat afterwards.
        let ds = dataset_1d(&[(0.0, 0.0), (0.3, 3.0), (0.6, 3.0), (1.0, 3.0)]);
        let profile = build_profile(&ds, 0).unwrap();
        let regions = ReferenceRegions::new(0.0, 1.0, 1).unwrap();
        let knots = select_internal_knots(&profile, &regions).unwrap();
        assert_relative_eq!(knots[0], 0.3);
    }

    #[test]
    fn step_profile_matches_the_worked_example() {
        let ds = dataset_1d(&[
            (0.0, 0.0),
            (0.25, 0.0),
            (0.5, 1.0),
            (0.75, 1.0),
            (1.0, 1.0),
        ]);
        let profile = build_profile(&ds, 0).unwrap();
        let regions = ReferenceRegions::new(0.0, 1.0, 2).unwrap();
        let knots = select_internal_knots(&profile, &regions).unwrap();
        assert_relative_eq!(knots[0], 0.5);
        assert_relative_eq!(knots[1], 0.75);
    }

    #[test]
    fn empty_regions_fall_back_to_their_midpoints() {
        let ds = dataset_1d(&[(0.0, 0.0), (0.05, 1.0), (1.0, 1.5)]);
        let profile = build_profile(&ds, 0).unwrap();
        let regions = ReferenceRegions::new(0.0, 1.0, 4).unwrap();
        let knots = select_internal_knots(&profile, &regions).unwrap();
        // Candidates: 0.05 (slope 20) in region 0 and 1.0 (slope ~0.53) in
        // region 3; regions 1 and 2 are empty.
        assert_relative_eq!(knots[0], 0.05);
        assert_relative_eq!(knots[1], 0.375);
        assert_relative_eq!(knots[2], 0.625);
        assert!(knots[3] < 1.0 && knots[3] > 1.0 - 1e-8);
    }

    #[test]
    fn optimal_vector_has_one_knot_per_region() {
        let pairs: Vec<(f64, f64)> = (0..=40)
            .map(|i| {
                let x = -3.0 + 6.0 * i as f64 / 40.0;
                (x, x)
            })
            .collect();
        let ds = dataset_1d(&pairs);
        let kv = build_optimal_knots(&ds, 0, 1, 9, (-3.0, 3.0)).unwrap();
        assert_eq!(kv.interior().len(), 8);
        assert_eq!(kv.knots().len(), 12);
        assert_eq!(kv.basis_count(), 10);

        let trivial = build_optimal_knots(&ds, 0, 2, 1, (-3.0, 3.0)).unwrap();
        assert!(trivial.interior().is_empty());
    }

    #[test]
    fn non_finite_outputs_are_rejected_by_selection() {
        let profile = CoordinateProfile {
            coordinate: 0,
            abscissae: vec![0.0, 0.5, 1.0],
            ordinates: vec![0.0, f64::INFINITY, 1.0],
        };
        let regions = ReferenceRegions::new(0.0, 1.0, 2).unwrap();
        assert!(select_internal_knots(&profile, &regions).is_err());
    }
}
