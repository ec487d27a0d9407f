//! Gradients from diagram-space losses back to filtration values and point
//! coordinates, plus the auxiliary losses used by the flows.
//!
//! The filtration gradient is the persistence-pair subgradient: a diagram
//! point's birth is the value of its birth simplex and its death the value of
//! its death simplex, so each coordinate routes to exactly one simplex.

use std::collections::HashMap;

use crate::complex::{FilteredComplex, PointCloud, SimplexId};
use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;
use crate::transport::{assignment, sq_dist, Point2};

/// `(d loss / d birth, d loss / d death)` per diagram point.
pub type DiagramGradient = Vec<[f64; 2]>;

/// Loss gradient per simplex, indexed by stable simplex id.
#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationGradient {
    values: Vec<f64>,
}

impl FiltrationGradient {
    pub fn zeros(len: usize) -> Self {
        Self { values: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: SimplexId) -> f64 {
        self.values[id]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &FiltrationGradient) -> Result<()> {
        if other.len() != self.len() {
            return Err(Error::Shape(format!(
                "filtration gradients over {} and {} simplices",
                self.len(),
                other.len()
            )));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }
}

/// Correspondence between diagram points and targets, as
/// `(diagram index, target index)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn new(pairs: Vec<(usize, usize)>) -> Self {
        Self { pairs }
    }

    /// Point `i` matched to target `i`.
    pub fn identity(n: usize) -> Self {
        Self { pairs: (0..n).map(|i| (i, i)).collect() }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Matches targets to the points of `dgm`.
///
/// Target `i` was derived from a diagram point whose simplex pair is
/// `provenance[i]`; it is matched to the current point with the same pair
/// when one exists. Targets whose point has disappeared are assigned to the
/// unclaimed points by a minimum squared-distance assignment.
pub fn match_by_provenance(
    dgm: &PersistenceDiagram,
    provenance: &[(SimplexId, SimplexId)],
    targets: &[Point2],
) -> Result<Matching> {
    if provenance.len() != targets.len() {
        return Err(Error::Shape(format!(
            "{} provenance entries for {} targets",
            provenance.len(),
            targets.len()
        )));
    }
    let by_pair: HashMap<(SimplexId, SimplexId), usize> =
        dgm.points.iter().enumerate().map(|(i, p)| (p.provenance(), i)).collect();
    let mut claimed = vec![false; dgm.len()];
    let mut pairs = Vec::with_capacity(targets.len());
    let mut orphans = Vec::new();
    for (t, key) in provenance.iter().enumerate() {
        match by_pair.get(key) {
            Some(&i) if !claimed[i] => {
                claimed[i] = true;
                pairs.push((i, t));
            }
            _ => orphans.push(t),
        }
    }
    let free: Vec<usize> = (0..dgm.len()).filter(|&i| !claimed[i]).collect();
    if !orphans.is_empty() && !free.is_empty() {
        let cost: Vec<f64> = orphans
            .iter()
            .flat_map(|&t| free.iter().map(move |&i| (t, i)))
            .map(|(t, i)| sq_dist(targets[t], dgm.points[i].coords()))
            .collect();
        for (k, slot) in assignment(&cost, orphans.len(), free.len()).into_iter().enumerate() {
            if let Some(j) = slot {
                pairs.push((free[j], orphans[k]));
            }
        }
    }
    pairs.sort_unstable_by_key(|&(_, t)| t);
    Ok(Matching { pairs })
}

/// Sum of squared distances between matched points and targets.
pub fn diagram_matching_loss(
    dgm: &PersistenceDiagram,
    targets: &[Point2],
    matching: &Matching,
) -> Result<(f64, DiagramGradient)> {
    let mut grad = vec![[0.0; 2]; dgm.len()];
    let mut value = 0.0;
    for &(i, t) in matching.pairs() {
        if i >= dgm.len() || t >= targets.len() {
            return Err(Error::Shape(format!(
                "matching pair ({i}, {t}) out of range for {} points and {} targets",
                dgm.len(),
                targets.len()
            )));
        }
        let (x, y) = (dgm.points[i].coords(), targets[t]);
        value += sq_dist(x, y);
        grad[i][0] += 2.0 * (x[0] - y[0]);
        grad[i][1] += 2.0 * (x[1] - y[1]);
    }
    Ok((value, grad))
}

/// Routes each diagram-point gradient to the birth and death simplices of
/// the point.
pub fn diagram_to_filtration_grad(
    grad: &[[f64; 2]],
    dgm: &PersistenceDiagram,
    complex: &FilteredComplex,
) -> Result<FiltrationGradient> {
    if grad.len() != dgm.len() {
        return Err(Error::Shape(format!(
            "{} gradient entries for a diagram of {} points",
            grad.len(),
            dgm.len()
        )));
    }
    let mut out = FiltrationGradient::zeros(complex.len());
    for (g, p) in grad.iter().zip(&dgm.points) {
        for id in [p.birth_simplex, p.death_simplex] {
            if id >= complex.len() {
                return Err(Error::Provenance { index: id, len: complex.len() });
            }
        }
        out.values[p.birth_simplex] += g[0];
        out.values[p.death_simplex] += g[1];
    }
    Ok(out)
}

/// Coordinate gradient of a Rips-filtration loss, row-major like the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct PointGradient {
    pub grad: Vec<f64>,
    /// Simplices with nonzero gradient whose longest edge has zero length;
    /// their contribution is dropped.
    pub singular: Vec<SimplexId>,
}

/// Longest edge of a simplex under the current coordinates; ties go to the
/// lexicographically smallest edge.
fn longest_edge(complex: &FilteredComplex, cloud: &PointCloud, id: SimplexId) -> (u32, u32) {
    let s = complex.simplex(id);
    let mut best: Option<((u32, u32), f64)> = None;
    for (a, b) in s.edges() {
        let len = cloud.distance(a as usize, b as usize);
        best = match best {
            Some((e, l)) if l > len || (l == len && e < (a, b)) => Some((e, l)),
            _ => Some(((a, b), len)),
        };
    }
    best.expect("simplex of dimension at least one has an edge").0
}

/// Chain rule through the Rips filtration: the value of a simplex is the
/// length of its longest edge, whose derivative with respect to the
/// endpoints is the unit vector along the edge.
pub fn filtration_to_points_grad(
    grad: &FiltrationGradient,
    complex: &FilteredComplex,
    cloud: &PointCloud,
) -> Result<PointGradient> {
    if grad.len() != complex.len() {
        return Err(Error::Shape(format!(
            "filtration gradient over {} simplices for a complex of {}",
            grad.len(),
            complex.len()
        )));
    }
    if cloud.len() != complex.n_vertices() {
        return Err(Error::Shape(format!(
            "cloud has {} points, complex has {} vertices",
            cloud.len(),
            complex.n_vertices()
        )));
    }
    let d = cloud.dim();
    let mut out = vec![0.0; cloud.coords().len()];
    let mut singular = Vec::new();
    for (id, &g) in grad.values().iter().enumerate() {
        if g == 0.0 || complex.simplex(id).dim() == 0 {
            continue;
        }
        let (u, v) = longest_edge(complex, cloud, id);
        let (u, v) = (u as usize, v as usize);
        let len = cloud.distance(u, v);
        if len == 0.0 {
            singular.push(id);
            continue;
        }
        for c in 0..d {
            let unit = (cloud.point(u)[c] - cloud.point(v)[c]) / len;
            out[u * d + c] += g * unit;
            out[v * d + c] -= g * unit;
        }
    }
    Ok(PointGradient { grad: out, singular })
}

/// `sum_i sum_{j != i} 1 / (|x_i - x_j|^2 + eps)` and its gradient.
pub fn repulsion_loss(cloud: &PointCloud, eps: f64) -> Result<(f64, Vec<f64>)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("repulsion eps must be positive, got {eps}")));
    }
    let (n, d) = (cloud.len(), cloud.dim());
    let mut value = 0.0;
    let mut grad = vec![0.0; n * d];
    for i in 0..n {
        for j in i + 1..n {
            let (pi, pj) = (cloud.point(i), cloud.point(j));
            let r2: f64 = pi.iter().zip(pj).map(|(a, b)| (a - b) * (a - b)).sum();
            let inv = 1.0 / (r2 + eps);
            value += 2.0 * inv;
            // both ordered pairs contribute -2 (x_i - x_j) / (r2 + eps)^2
            let w = -4.0 * inv * inv;
            for c in 0..d {
                let diff = pi[c] - pj[c];
                grad[i * d + c] += w * diff;
                grad[j * d + c] -= w * diff;
            }
        }
    }
    Ok((value, grad))
}

/// Pulls every point except the `keep_top` most persistent ones to the
/// diagonal: `sum (d - b)^2 / 2` over the others. Persistence ties keep the
/// earlier point.
pub fn diagonal_denoise_loss(dgm: &PersistenceDiagram, keep_top: usize) -> (f64, DiagramGradient) {
    let mut grad = vec![[0.0; 2]; dgm.len()];
    let mut value = 0.0;
    for &i in denoised_points(dgm, keep_top).iter() {
        let p = &dgm.points[i];
        let gap = p.death - p.birth;
        value += 0.5 * gap * gap;
        grad[i] = [-gap, gap];
    }
    (value, grad)
}

/// Indices of the points that [`diagonal_denoise_loss`] pulls to the
/// diagonal, ascending.
pub fn denoised_points(dgm: &PersistenceDiagram, keep_top: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dgm.len()).collect();
    idx.sort_by(|&a, &b| dgm.points[b].persistence().total_cmp(&dgm.points[a].persistence()).then(a.cmp(&b)));
    let mut rest: Vec<usize> = idx.into_iter().skip(keep_top).collect();
    rest.sort_unstable();
    rest
}
