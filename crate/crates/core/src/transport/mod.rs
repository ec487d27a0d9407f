//! Optimal transport between finite diagram measures with uniform weights.
//!
//! Ground cost everywhere is the squared Euclidean distance between diagram
//! points treated as plain points of the plane.

mod exact;
mod sinkhorn;
mod sliced;

pub use exact::{assignment, exact_plan, EXACT_CELL_LIMIT};
pub use sinkhorn::{sinkhorn_plan, SINKHORN_MAX_ITERS, SINKHORN_TOL};
pub use sliced::{sliced_w2, SlicedW2};

use crate::error::{Error, Result};

/// A point of the plane; for diagrams `[birth, death]`.
pub type Point2 = [f64; 2];

pub fn sq_dist(a: Point2, b: Point2) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Uniform empirical measure on diagram points.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagramMeasure {
    points: Vec<Point2>,
}

impl DiagramMeasure {
    /// Rejects non-finite points and points below the diagonal.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidInput(format!("non-finite diagram point {i}")));
            }
            if p[1] < p[0] {
                return Err(Error::InvalidInput(format!(
                    "diagram point {i} = ({}, {}) lies below the diagonal",
                    p[0], p[1]
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.points.len() as f64
    }
}

fn cost_matrix(a: &[Point2], b: &[Point2]) -> Vec<f64> {
    a.iter().flat_map(|&x| b.iter().map(move |&z| sq_dist(x, z))).collect()
}

/// Coupling between an `n`-point and an `m`-point uniform measure, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl TransportPlan {
    /// Wraps a row-major matrix. Entries must be finite and nonnegative;
    /// marginals are not checked here (see [`TransportPlan::marginal_violation`]).
    pub fn from_matrix(n: usize, m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * m {
            return Err(Error::Shape(format!("{} entries for a {n}x{m} plan", data.len())));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("plan entries must be finite and nonnegative".into()));
        }
        Ok(Self { n, m, data })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn cols(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for i in 0..self.n {
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += v;
            }
        }
        out
    }

    /// Largest deviation of a row or column sum from `1/n` resp. `1/m`.
    pub fn marginal_violation(&self) -> f64 {
        let (a, b) = (1.0 / self.n as f64, 1.0 / self.m as f64);
        let rows = self.row_sums().into_iter().map(|s| (s - a).abs());
        let cols = self.col_sums().into_iter().map(|s| (s - b).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }

    /// `sum_ij pi_ij |x_i - z_j|^2`.
    pub fn cost(&self, source: &[Point2], target: &[Point2]) -> f64 {
        cost_matrix(source, target).iter().zip(&self.data).map(|(c, p)| c * p).sum()
    }

    /// Same plan with its columns permuted: column `j` of the result is
    /// column `perm[j]` of `self`.
    pub fn permute_cols(&self, perm: &[usize]) -> Self {
        let data = (0..self.n)
            .flat_map(|i| perm.iter().map(move |&j| self.get(i, j)))
            .collect();
        Self { n: self.n, m: self.m, data }
    }
}

/// Projects a point below the diagonal onto its nearest diagonal point.
pub fn clamp_above_diagonal(p: Point2) -> Point2 {
    if p[1] >= p[0] {
        p
    } else {
        let mid = 0.5 * (p[0] + p[1]);
        [mid, mid]
    }
}

/// Row-normalized barycentric image of every source point:
/// `x_i = sum_j pi_ij z_j / sum_j pi_ij`, clamped to `death >= birth`.
pub fn barycenter_targets(plan: &TransportPlan, target: &DiagramMeasure) -> Result<Vec<Point2>> {
    if plan.cols() != target.len() {
        return Err(Error::Shape(format!(
            "plan has {} columns, target has {} points",
            plan.cols(),
            target.len()
        )));
    }
    (0..plan.rows())
        .map(|i| {
            let row = plan.row(i);
            let mass: f64 = row.iter().sum();
            if !(mass > 0.0) {
                return Err(Error::DegeneratePlan(i));
            }
            let mut acc = [0.0; 2];
            for (w, z) in row.iter().zip(target.points()) {
                acc[0] += w * z[0];
                acc[1] += w * z[1];
            }
            Ok(clamp_above_diagonal([acc[0] / mass, acc[1] / mass]))
        })
        .collect()
}

/// Displacement interpolation `(1 - t) x + t y`, pointwise.
pub fn mccann_interpolate(source: &[Point2], targets: &[Point2], t: f64) -> Result<Vec<Point2>> {
    if source.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} source points but {} targets",
            source.len(),
            targets.len()
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidInput(format!("interpolation time {t} outside [0, 1]")));
    }
    if t == 1.0 {
        return Ok(targets.to_vec());
    }
    Ok(source
        .iter()
        .zip(targets)
        .map(|(x, y)| [(1.0 - t) * x[0] + t * y[0], (1.0 - t) * x[1] + t * y[1]])
        .collect())
}

/// Exact 2-Wasserstein distance.
pub fn w2_distance(a: &DiagramMeasure, b: &DiagramMeasure) -> Result<f64> {
    let plan = exact_plan(a, b)?;
    Ok(plan.cost(a.points(), b.points()).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn measure(p: &[Point2]) -> DiagramMeasure {
        DiagramMeasure::new(p.to_vec()).unwrap()
    }

    #[test]
    fn barycenter_of_identity_plan_returns_targets() {
        let z = measure(&[[0.0, 1.0], [0.5, 2.0], [0.1, 0.3]]);
        let mut data = vec![0.0; 9];
        for i in 0..3 {
            data[i * 3 + i] = 1.0 / 3.0;
        }
        let plan = TransportPlan::from_matrix(3, 3, data).unwrap();
        let x = barycenter_targets(&plan, &z).unwrap();
        for (a, b) in x.iter().zip(z.points()) {
            assert_relative_eq!(a[0], b[0], epsilon = 1e-15);
            assert_relative_eq!(a[1], b[1], epsilon = 1e-15);
        }
    }

    #[test]
    fn barycenter_midpoint_and_weighted_rows() {
        let z = measure(&[[0.0, 1.0], [0.0, 3.0]]);
        let plan = TransportPlan::from_matrix(1, 2, vec![0.5, 0.5]).unwrap();
        assert_eq!(barycenter_targets(&plan, &z).unwrap(), vec![[0.0, 2.0]]);

        let z = measure(&[[0.0, 1.0], [0.0, 2.0], [0.0, 4.0]]);
        let plan = TransportPlan::from_matrix(2, 3, vec![0.3, 0.2, 0.0, 0.0, 0.1, 0.4]).unwrap();
        let x = barycenter_targets(&plan, &z).unwrap();
        assert_relative_eq!(x[0][1], 1.4, epsilon = 1e-12);
        assert_relative_eq!(x[1][1], 3.6, epsilon = 1e-12);
        assert_eq!((x[0][0], x[1][0]), (0.0, 0.0));
    }

    #[test]
    fn barycenter_rejects_empty_rows() {
        let z = measure(&[[0.0, 1.0]]);
        let plan = TransportPlan::from_matrix(2, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(barycenter_targets(&plan, &z).unwrap_err(), Error::DegeneratePlan(1));
    }

    #[test]
    fn clamping_projects_onto_diagonal() {
        assert_eq!(clamp_above_diagonal([1.0, 0.0]), [0.5, 0.5]);
        assert_eq!(clamp_above_diagonal([0.0, 1.0]), [0.0, 1.0]);
    }

    #[test]
    fn interpolation_endpoints_and_midpoint() {
        let src = [[0.0, 0.0], [1.0, 3.0]];
        let tgt = [[2.0, 4.0], [0.5, 0.5]];
        assert_eq!(mccann_interpolate(&src, &tgt, 0.0).unwrap(), src.to_vec());
        assert_eq!(mccann_interpolate(&src, &tgt, 1.0).unwrap(), tgt.to_vec());
        assert_eq!(mccann_interpolate(&src, &tgt, 0.5).unwrap()[0], [1.0, 2.0]);
        assert!(matches!(mccann_interpolate(&src, &tgt[..1], 0.5), Err(Error::Shape(_))));
    }

    #[test]
    fn w2_small_cases() {
        let a = measure(&[[0.0, 1.0], [0.2, 0.7]]);
        assert_eq!(w2_distance(&a, &a).unwrap(), 0.0);
        let p = measure(&[[0.0, 0.0]]);
        let q = measure(&[[3.0, 4.0]]);
        assert_relative_eq!(w2_distance(&p, &q).unwrap(), 5.0, epsilon = 1e-12);
    }

    #[test]
    fn below_diagonal_measure_rejected() {
        assert!(DiagramMeasure::new(vec![[1.0, 0.5]]).is_err());
    }
}
