//! Point clouds and Vietoris–Rips filtrations.
//!
//! A [`FilteredComplex`] keeps its simplices in a stable list (the simplex
//! *id*) and separately records the filtration order. Re-evaluating the
//! filtration after points move re-sorts the order but never touches ids, so
//! persistence provenance stays comparable across inner optimization steps.

use std::cmp::Ordering;
use std::sync::Arc;

use crate::error::{Error, Result};

/// `n` points in `R^d`, stored row-major. Point ids are the row indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    coords: Vec<f64>,
    dim: usize,
}

impl PointCloud {
    pub fn new(coords: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("point dimension must be at least 1".into()));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} coordinates do not form a nonempty cloud of {dim}-dimensional points",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate at point {}",
                pos / dim
            )));
        }
        Ok(Self { coords, dim })
    }

    pub fn from_points<const D: usize>(points: &[[f64; D]]) -> Result<Self> {
        Self::new(points.iter().flatten().copied().collect(), D)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Applies `coords -= step * grad`, rejecting updates that would leave
    /// the cloud non-finite.
    pub fn descend(&mut self, grad: &[f64], step: f64) -> Result<()> {
        if grad.len() != self.coords.len() {
            return Err(Error::Shape(format!(
                "gradient has {} entries, cloud has {}",
                grad.len(),
                self.coords.len()
            )));
        }
        let next: Vec<f64> = self.coords.iter().zip(grad).map(|(c, g)| c - step * g).collect();
        if next.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("descent step produced non-finite coordinates".into()));
        }
        self.coords = next;
        Ok(())
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.point(i)
            .iter()
            .zip(self.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Largest pairwise distance.
    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                best = best.max(self.distance(i, j));
            }
        }
        best
    }
}

/// Symmetric `n x n` Euclidean distance matrix, row-major.
pub fn pairwise_distances(cloud: &PointCloud) -> Vec<f64> {
    let n = cloud.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = cloud.distance(i, j);
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}

/// A simplex of dimension at most 2, vertices sorted ascending.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Simplex {
    verts: [u32; 3],
    dim: u8,
}

impl Simplex {
    pub fn vertex(v: u32) -> Self {
        Self { verts: [v, 0, 0], dim: 0 }
    }

    pub fn edge(a: u32, b: u32) -> Self {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Self { verts: [a, b, 0], dim: 1 }
    }

    pub fn triangle(a: u32, b: u32, c: u32) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        Self { verts: v, dim: 2 }
    }

    pub fn from_vertices(vs: &[u32]) -> Result<Self> {
        match *vs {
            [a] => Ok(Self::vertex(a)),
            [a, b] if a != b => Ok(Self::edge(a, b)),
            [a, b, c] if a != b && b != c && a != c => Ok(Self::triangle(a, b, c)),
            [_, _] | [_, _, _] => Err(Error::InvalidInput(format!("repeated vertex in {vs:?}"))),
            _ => Err(Error::UnsupportedDimension(vs.len().saturating_sub(1))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..=self.dim as usize]
    }

    /// Codimension-one faces, in lexicographic order.
    pub fn faces(&self) -> Vec<Simplex> {
        let [a, b, c] = self.verts;
        match self.dim {
            0 => vec![],
            1 => vec![Self::vertex(a), Self::vertex(b)],
            _ => vec![Self::edge(a, b), Self::edge(a, c), Self::edge(b, c)],
        }
    }

    /// Edges of the simplex (itself for an edge, none for a vertex).
    pub fn edges(&self) -> Vec<(u32, u32)> {
        let [a, b, c] = self.verts;
        match self.dim {
            0 => vec![],
            1 => vec![(a, b)],
            _ => vec![(a, b), (a, c), (b, c)],
        }
    }

    fn cmp_lex(&self, other: &Self) -> Ordering {
        self.dim.cmp(&other.dim).then_with(|| self.vertices().cmp(other.vertices()))
    }
}

/// Index of a simplex in the stable simplex list of a [`FilteredComplex`].
pub type SimplexId = usize;

const ABSENT: u32 = u32::MAX;

/// The fixed combinatorial part of a complex: simplices, faces, cofaces.
#[derive(Debug, PartialEq)]
struct Skeleton {
    n_vertices: usize,
    max_dim: usize,
    simplices: Vec<Simplex>,
    /// face ids; only the first `dim + 1` entries are meaningful
    faces: Vec<[u32; 3]>,
    /// rank of each simplex in (dimension, lexicographic) order
    lex_rank: Vec<u32>,
    /// dense n x n table of edge ids
    edge_ids: Vec<u32>,
    coface_start: Vec<u32>,
    cofaces: Vec<u32>,
}

impl Skeleton {
    fn new(n_vertices: usize, simplices: Vec<Simplex>) -> Result<Self> {
        let len = simplices.len();
        if len >= ABSENT as usize {
            return Err(Error::InvalidInput(format!("complex too large ({len} simplices)")));
        }
        let mut vertex_ids = vec![ABSENT; n_vertices];
        let mut edge_ids = vec![ABSENT; n_vertices * n_vertices];
        let mut max_dim = 0;
        for (id, s) in simplices.iter().enumerate() {
            if let Some(&v) = s.vertices().iter().find(|&&v| v as usize >= n_vertices) {
                return Err(Error::InvalidInput(format!("simplex {id} references vertex {v} >= {n_vertices}")));
            }
            max_dim = max_dim.max(s.dim());
            let slot = match s.dim() {
                0 => &mut vertex_ids[s.verts[0] as usize],
                1 => &mut edge_ids[s.verts[0] as usize * n_vertices + s.verts[1] as usize],
                _ => continue,
            };
            if *slot != ABSENT {
                return Err(Error::InvalidInput(format!("duplicate simplex {:?}", s.vertices())));
            }
            *slot = id as u32;
            if s.dim() == 1 {
                edge_ids[s.verts[1] as usize * n_vertices + s.verts[0] as usize] = id as u32;
            }
        }
        if vertex_ids.iter().enumerate().any(|(v, &id)| id as usize != v) {
            return Err(Error::InvalidInput(
                "vertex simplices must occupy ids 0..n_vertices in vertex order".into(),
            ));
        }
        let mut faces = vec![[ABSENT; 3]; len];
        let mut coface_count = vec![0u32; len + 1];
        for (id, s) in simplices.iter().enumerate() {
            for (slot, face) in s.faces().into_iter().enumerate() {
                let fid = match face.dim() {
                    0 => face.verts[0],
                    _ => edge_ids[face.verts[0] as usize * n_vertices + face.verts[1] as usize],
                };
                if fid == ABSENT {
                    return Err(Error::Structural(format!(
                        "face {:?} of simplex {id} missing",
                        face.vertices()
                    )));
                }
                faces[id][slot] = fid;
                coface_count[fid as usize + 1] += 1;
            }
        }
        let mut coface_start = coface_count;
        for i in 0..len {
            coface_start[i + 1] += coface_start[i];
        }
        let mut fill = coface_start.clone();
        let mut cofaces = vec![0u32; coface_start[len] as usize];
        for (id, s) in simplices.iter().enumerate() {
            for &f in &faces[id][..n_faces(s.dim())] {
                let slot = &mut fill[f as usize];
                cofaces[*slot as usize] = id as u32;
                *slot += 1;
            }
        }
        let mut by_lex: Vec<usize> = (0..len).collect();
        by_lex.sort_unstable_by(|&a, &b| simplices[a].cmp_lex(&simplices[b]));
        let mut lex_rank = vec![0u32; len];
        for (rank, &id) in by_lex.iter().enumerate() {
            lex_rank[id] = rank as u32;
        }
        Ok(Self { n_vertices, max_dim, simplices, faces, lex_rank, edge_ids, coface_start, cofaces })
    }
}

/// Simplices of dimension <= 2 with filtration values and a total order.
///
/// The order sorts by (value, dimension, lexicographic vertex tuple). The
/// simplex set is shared between re-evaluations of the same complex.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredComplex {
    skel: Arc<Skeleton>,
    values: Vec<f64>,
    /// simplex ids in filtration order
    sorted: Vec<SimplexId>,
    /// position in filtration order, per simplex id
    order: Vec<usize>,
}

fn n_faces(dim: usize) -> usize {
    if dim == 0 { 0 } else { dim + 1 }
}

/// Order-preserving map from `f64` (total order) to `u64`.
fn ordered_bits(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 { !b } else { b | (1 << 63) }
}

impl FilteredComplex {
    /// Builds a complex from an explicit simplex list. Vertices must come
    /// first, in vertex order; the list must be closed under faces and the
    /// values monotone along faces.
    pub fn from_simplices(n_vertices: usize, simplices: Vec<Simplex>, values: Vec<f64>) -> Result<Self> {
        if simplices.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} simplices but {} filtration values",
                simplices.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite filtration value on simplex {i}")));
        }
        let skel = Skeleton::new(n_vertices, simplices)?;
        for id in 0..skel.simplices.len() {
            for &f in &skel.faces[id][..n_faces(skel.simplices[id].dim())] {
                if values[f as usize] > values[id] {
                    return Err(Error::InvalidInput(format!(
                        "filtration not monotone: face {f} ({}) above simplex {id} ({})",
                        values[f as usize], values[id]
                    )));
                }
            }
        }
        Ok(Self::assemble(Arc::new(skel), values))
    }

    fn assemble(skel: Arc<Skeleton>, values: Vec<f64>) -> Self {
        let mut sorted: Vec<SimplexId> = (0..values.len()).collect();
        sorted.sort_unstable_by_key(|&id| ((ordered_bits(values[id]) as u128) << 32) | skel.lex_rank[id] as u128);
        let mut order = vec![0; sorted.len()];
        for (pos, &id) in sorted.iter().enumerate() {
            order[id] = pos;
        }
        Self { skel, values, sorted, order }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_vertices(&self) -> usize {
        self.skel.n_vertices
    }

    /// Dimension of the complex; for a Rips complex the requested one even
    /// when no simplex of that dimension survived the radius cutoff.
    pub fn max_dim(&self) -> usize {
        self.skel.max_dim
    }

    pub fn simplex(&self, id: SimplexId) -> &Simplex {
        &self.skel.simplices[id]
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.skel.simplices
    }

    pub fn value(&self, id: SimplexId) -> f64 {
        self.values[id]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Position of simplex `id` in the filtration order.
    pub fn order_of(&self, id: SimplexId) -> usize {
        self.order[id]
    }

    /// Simplex id at filtration position `pos`.
    pub fn id_at(&self, pos: usize) -> SimplexId {
        self.sorted[pos]
    }

    pub fn filtration_order(&self) -> &[SimplexId] {
        &self.sorted
    }

    pub fn edge_id(&self, a: u32, b: u32) -> Option<SimplexId> {
        let n = self.skel.n_vertices;
        if a as usize >= n || b as usize >= n {
            return None;
        }
        let id = self.skel.edge_ids[a as usize * n + b as usize];
        (id != ABSENT).then_some(id as usize)
    }

    /// Stable id of a simplex given by its vertices.
    pub fn find(&self, s: &Simplex) -> Option<SimplexId> {
        match s.dim() {
            0 => ((s.verts[0] as usize) < self.n_vertices()).then_some(s.verts[0] as usize),
            1 => self.edge_id(s.verts[0], s.verts[1]),
            _ => {
                let e = self.edge_id(s.verts[0], s.verts[1])?;
                self.cofaces(e).iter().map(|&t| t as usize).find(|&t| self.simplex(t) == s)
            }
        }
    }

    /// Ids of the codimension-one faces of simplex `id`.
    pub fn boundary(&self, id: SimplexId) -> &[u32] {
        &self.skel.faces[id][..n_faces(self.skel.simplices[id].dim())]
    }

    /// Ids of the simplices having `id` as a codimension-one face.
    pub fn cofaces(&self, id: SimplexId) -> &[u32] {
        let (a, b) = (self.skel.coface_start[id], self.skel.coface_start[id + 1]);
        &self.skel.cofaces[a as usize..b as usize]
    }

    /// Replaces the filtration values, keeping the simplex set, and re-sorts.
    /// Values must be monotone along faces.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.len() {
            return Err(Error::Shape(format!(
                "{} values for a complex of {} simplices",
                values.len(),
                self.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite filtration value on simplex {i}")));
        }
        for id in 0..self.len() {
            if let Some(&f) = self.boundary(id).iter().find(|&&f| values[f as usize] > values[id]) {
                return Err(Error::InvalidInput(format!(
                    "filtration not monotone: face {f} above simplex {id}"
                )));
            }
        }
        Ok(Self::assemble(Arc::clone(&self.skel), values))
    }

    /// Raises every simplex to the maximum of its faces so the filtration is
    /// monotone again after an unconstrained update of raw values.
    pub fn monotone_closure(&self, values: &mut [f64]) {
        for dim in 1..=2 {
            for id in 0..self.len() {
                if self.simplex(id).dim() == dim {
                    values[id] = self.boundary(id).iter().map(|&f| values[f as usize]).fold(values[id], f64::max);
                }
            }
        }
    }
}

/// Default Rips threshold: 1.1 times the cloud diameter.
pub fn default_max_radius(cloud: &PointCloud) -> f64 {
    let d = cloud.diameter();
    if d > 0.0 { d * 1.1 } else { 1.0 }
}

/// Vietoris–Rips filtration up to `max_dim`, keeping simplices whose
/// diameter is at most `max_radius`.
pub fn build_rips(cloud: &PointCloud, max_dim: usize, max_radius: f64) -> Result<FilteredComplex> {
    if max_dim > 2 {
        return Err(Error::UnsupportedDimension(max_dim));
    }
    if max_dim == 0 {
        return Err(Error::InvalidInput("Rips construction needs max_dim in {1, 2}".into()));
    }
    if !(max_radius > 0.0) {
        return Err(Error::InvalidInput(format!("max_radius must be positive, got {max_radius}")));
    }
    let n = cloud.len();
    let dist = pairwise_distances(cloud);
    let mut simplices: Vec<Simplex> = (0..n as u32).map(Simplex::vertex).collect();
    let mut values = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = dist[i * n + j];
            if d <= max_radius {
                simplices.push(Simplex::edge(i as u32, j as u32));
                values.push(d);
            }
        }
    }
    if max_dim == 2 {
        for i in 0..n {
            for j in i + 1..n {
                let dij = dist[i * n + j];
                if dij > max_radius {
                    continue;
                }
                for k in j + 1..n {
                    let top = dij.max(dist[i * n + k]).max(dist[j * n + k]);
                    if top <= max_radius {
                        simplices.push(Simplex::triangle(i as u32, j as u32, k as u32));
                        values.push(top);
                    }
                }
            }
        }
    }
    let mut skel = Skeleton::new(n, simplices)?;
    // a Rips complex of dimension 2 without triangles still has an H1
    skel.max_dim = skel.max_dim.max(max_dim);
    Ok(FilteredComplex::assemble(Arc::new(skel), values))
}

/// Recomputes Rips filtration values from the current coordinates on a fixed
/// simplex set.
pub fn rips_filtration_values(cloud: &PointCloud, complex: &FilteredComplex) -> Result<FilteredComplex> {
    if cloud.len() != complex.n_vertices() {
        return Err(Error::Shape(format!(
            "cloud has {} points, complex has {} vertices",
            cloud.len(),
            complex.n_vertices()
        )));
    }
    let mut values = vec![0.0; complex.len()];
    for dim in 1..=2 {
        for (id, s) in complex.simplices().iter().enumerate() {
            if s.dim() != dim {
                continue;
            }
            values[id] = if dim == 1 {
                cloud.distance(s.verts[0] as usize, s.verts[1] as usize)
            } else {
                complex.boundary(id).iter().map(|&f| values[f as usize]).fold(0.0, f64::max)
            };
        }
    }
    Ok(FilteredComplex::assemble(Arc::clone(&complex.skel), values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn collinear() -> PointCloud {
        PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]]).unwrap()
    }

    #[test]
    fn distances_of_small_clouds() {
        let c = PointCloud::from_points(&[[0.0, 0.0], [3.0, 4.0]]).unwrap();
        assert_eq!(pairwise_distances(&c)[1], 5.0);

        let single = PointCloud::from_points(&[[2.0, -1.0]]).unwrap();
        assert_eq!(pairwise_distances(&single), vec![0.0]);

        let d = pairwise_distances(&collinear());
        assert_eq!((d[1], d[2], d[5]), (1.0, 3.0, 2.0));
        assert_eq!(d[3], d[1]);
    }

    #[test]
    fn non_finite_coordinates_rejected() {
        assert!(matches!(
            PointCloud::from_points(&[[0.0, f64::NAN]]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn equilateral_triangle() {
        let h = 3f64.sqrt() / 2.0;
        let c = PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let k = build_rips(&c, 2, 2.0).unwrap();
        let by_dim = |d: usize| -> Vec<f64> {
            k.simplices()
                .iter()
                .enumerate()
                .filter(|(_, s)| s.dim() == d)
                .map(|(i, _)| k.value(i))
                .collect()
        };
        assert_eq!(by_dim(0), vec![0.0; 3]);
        for v in by_dim(1).into_iter().chain(by_dim(2)) {
            assert_relative_eq!(v, 1.0, epsilon = 1e-12);
        }
        assert_eq!(by_dim(2).len(), 1);
    }

    #[test]
    fn collinear_rips_values_and_cutoff() {
        let k = build_rips(&collinear(), 2, 4.0).unwrap();
        let edges: Vec<f64> = (3..6).map(|i| k.value(i)).collect();
        assert_eq!(edges, vec![1.0, 3.0, 2.0]);
        assert_eq!(k.value(6), 3.0);
        assert_eq!(k.len(), 7);

        let k = build_rips(&collinear(), 2, 1.5).unwrap();
        assert_eq!(k.len(), 4);
        assert_eq!(k.simplex(3).vertices(), &[0, 1]);
    }

    #[test]
    fn unsupported_dimension() {
        assert_eq!(build_rips(&collinear(), 3, 1.0).unwrap_err(), Error::UnsupportedDimension(3));
    }

    #[test]
    fn order_breaks_ties_by_dimension_then_lex() {
        let k = build_rips(&collinear(), 2, 4.0).unwrap();
        let order: Vec<&[u32]> = k.filtration_order().iter().map(|&id| k.simplex(id).vertices()).collect();
        assert_eq!(
            order,
            vec![&[0][..], &[1], &[2], &[0, 1], &[1, 2], &[0, 2], &[0, 1, 2]]
        );
    }

    #[test]
    fn reevaluation() {
        let cloud = collinear();
        let k = build_rips(&cloud, 2, 4.0).unwrap();
        assert_eq!(rips_filtration_values(&cloud, &k).unwrap(), k);

        let moved = PointCloud::from_points(&[[0.0, 0.0], [2.0, 0.0], [3.0, 0.0]]).unwrap();
        let k2 = rips_filtration_values(&moved, &k).unwrap();
        assert_eq!(k2.value(k.edge_id(0, 1).unwrap()), 2.0);
        assert_eq!(k2.simplices(), k.simplices());

        let scaled = PointCloud::new(cloud.coords().iter().map(|c| c * 2.5).collect(), 2).unwrap();
        let k3 = rips_filtration_values(&scaled, &k).unwrap();
        for id in 0..k.len() {
            assert_relative_eq!(k3.value(id), 2.5 * k.value(id));
        }
    }

    #[test]
    fn from_simplices_rejects_missing_faces() {
        let s = vec![Simplex::vertex(0), Simplex::vertex(1), Simplex::triangle(0, 1, 2)];
        assert!(FilteredComplex::from_simplices(3, s, vec![0.0; 3]).is_err());
        let s = vec![Simplex::vertex(0), Simplex::vertex(1), Simplex::edge(0, 1)];
        assert!(matches!(
            FilteredComplex::from_simplices(2, s, vec![0.0, 2.0, 1.0]),
            Err(Error::InvalidInput(_))
        ));
    }
}
