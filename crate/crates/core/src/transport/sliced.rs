use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Point2;
use crate::error::{Error, Result};

/// Squared sliced 2-Wasserstein value and its gradient with respect to the
/// first point set.
#[derive(Debug, Clone, PartialEq)]
pub struct SlicedW2 {
    pub value: f64,
    pub grad: Vec<Point2>,
}

/// Unit directions drawn uniformly on the circle from `seed`.
pub(crate) fn directions(n_projections: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_projections)
        .map(|_| {
            let angle = rng.gen::<f64>() * std::f64::consts::TAU;
            [angle.cos(), angle.sin()]
        })
        .collect()
}

fn sorted_projection(points: &[Point2], dir: Point2) -> (Vec<f64>, Vec<usize>) {
    let proj: Vec<f64> = points.iter().map(|p| p[0] * dir[0] + p[1] * dir[1]).collect();
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| proj[i].total_cmp(&proj[j]).then(i.cmp(&j)));
    (proj, idx)
}

/// Monte-Carlo sliced W2 squared between two equal-size uniform point sets:
/// the mean over random directions of the 1-D squared W2 between the
/// projections, where 1-D transport pairs sorted projections.
pub fn sliced_w2(a: &[Point2], b: &[Point2], n_projections: usize, seed: u64) -> Result<SlicedW2> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "sliced W2 needs equal cardinalities, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if n_projections == 0 {
        return Err(Error::InvalidInput("n_projections must be at least 1".into()));
    }
    let n = a.len();
    let mut grad = vec![[0.0; 2]; n];
    if n == 0 {
        return Ok(SlicedW2 { value: 0.0, grad });
    }
    let dirs = directions(n_projections, seed);
    let scale = 1.0 / (n_projections as f64 * n as f64);
    let mut value = 0.0;
    for dir in dirs {
        let (pa, ia) = sorted_projection(a, dir);
        let (pb, ib) = sorted_projection(b, dir);
        for (&i, &j) in ia.iter().zip(&ib) {
            let diff = pa[i] - pb[j];
            value += diff * diff * scale;
            grad[i][0] += 2.0 * diff * dir[0] * scale;
            grad[i][1] += 2.0 * diff * dir[1] * scale;
        }
    }
    Ok(SlicedW2 { value, grad })
}
