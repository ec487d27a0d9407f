//! Boundary-matrix reduction over Z/2 and persistence diagrams with
//! simplex provenance.

use serde::Serialize;

use crate::complex::{FilteredComplex, SimplexId};
use crate::error::{Error, Result};

/// Pairs with `death - birth` at or below this are dropped from diagrams.
pub const ZERO_PERSISTENCE: f64 = 1e-12;

/// Persistence pairing in filtration-order positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PersistencePairing {
    /// `(birth position, death position)`, sorted by death position.
    pub pairs: Vec<(usize, usize)>,
    /// Positions of simplices that are never paired, ascending.
    pub essential: Vec<usize>,
}

/// One finite point of a diagram together with the simplices that created
/// and destroyed the class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
    pub birth_simplex: SimplexId,
    pub death_simplex: SimplexId,
}

impl DiagramPoint {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.birth, self.death]
    }

    pub fn provenance(&self) -> (SimplexId, SimplexId) {
        (self.birth_simplex, self.death_simplex)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceDiagram {
    pub degree: usize,
    pub points: Vec<DiagramPoint>,
}

impl PersistenceDiagram {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(DiagramPoint::coords).collect()
    }

    pub fn max_persistence(&self) -> f64 {
        self.points.iter().map(DiagramPoint::persistence).fold(0.0, f64::max)
    }
}

/// `a ^= b` for sorted index sets.
fn add_column(a: &mut Vec<u32>, b: &[u32], scratch: &mut Vec<u32>) {
    scratch.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                scratch.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                scratch.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    scratch.extend_from_slice(&a[i..]);
    scratch.extend_from_slice(&b[j..]);
    std::mem::swap(a, scratch);
}

/// Standard left-to-right column reduction `R = D V`.
///
/// Columns of different dimensions never interact, so dimensions are reduced
/// one at a time. Once every positive edge has been killed, the remaining
/// triangle columns must reduce to zero and are recorded as essential
/// without further work.
pub fn reduce_boundary_matrix(complex: &FilteredComplex) -> Result<PersistencePairing> {
    let len = complex.len();
    let mut by_dim: [Vec<usize>; 3] = Default::default();
    for pos in 0..len {
        by_dim[complex.simplex(complex.id_at(pos)).dim()].push(pos);
    }

    const NONE: u32 = u32::MAX;
    // row position -> index into `stored` of the reduced column with that low
    let mut owner = vec![NONE; len];
    let mut stored: Vec<Vec<u32>> = Vec::new();
    let mut paired = vec![false; len];
    let mut pairs = Vec::new();
    let mut scratch = Vec::new();
    let mut col: Vec<u32> = Vec::with_capacity(3);

    let mut negative_edges = 0usize;
    for dim in 1..=2 {
        let budget = if dim == 2 { by_dim[1].len() - negative_edges } else { usize::MAX };
        let mut killed = 0usize;
        for &pos in &by_dim[dim] {
            if killed == budget {
                break;
            }
            let id = complex.id_at(pos);
            col.clear();
            for &face in complex.boundary(id) {
                let fpos = complex.order_of(face as usize);
                if fpos >= pos {
                    return Err(Error::Structural(format!(
                        "face {face} of simplex {id} does not precede it in the filtration"
                    )));
                }
                col.push(fpos as u32);
            }
            col.sort_unstable();
            while let Some(&low) = col.last() {
                let o = owner[low as usize];
                if o == NONE {
                    break;
                }
                add_column(&mut col, &stored[o as usize], &mut scratch);
            }
            if let Some(&low) = col.last() {
                owner[low as usize] = stored.len() as u32;
                stored.push(col.clone());
                paired[low as usize] = true;
                paired[pos] = true;
                pairs.push((low as usize, pos));
                killed += 1;
            }
        }
        if dim == 1 {
            negative_edges = killed;
        }
    }
    pairs.sort_unstable_by_key(|&(_, d)| d);
    let essential = (0..len).filter(|&p| !paired[p]).collect();
    Ok(PersistencePairing { pairs, essential })
}

/// Same pairing as [`reduce_boundary_matrix`], computed the fast way:
/// union-find with the elder rule for degree 0, then reduction of the
/// coboundary matrix over the surviving (positive) edges in reverse
/// filtration order. Edges that kill a component are cleared from the
/// degree-1 reduction. Persistent homology and cohomology share their
/// pairs, so the result is identical.
pub fn compute_pairing(complex: &FilteredComplex) -> Result<PersistencePairing> {
    let len = complex.len();
    let n = complex.n_vertices();
    let order = complex.filtration_order();
    let mut paired = vec![false; len];
    let mut pairs = Vec::new();

    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut positive_edges = Vec::new();
    for (pos, &id) in order.iter().enumerate() {
        let s = complex.simplex(id);
        if s.dim() != 1 {
            continue;
        }
        let [u, v] = [s.vertices()[0] as usize, s.vertices()[1] as usize];
        if complex.order_of(u) >= pos || complex.order_of(v) >= pos {
            return Err(Error::Structural(format!(
                "vertex of edge {id} does not precede it in the filtration"
            )));
        }
        let (ru, rv) = (root(&mut parent, u), root(&mut parent, v));
        if ru == rv {
            positive_edges.push(pos);
            continue;
        }
        let (elder, younger) = if complex.order_of(ru) < complex.order_of(rv) { (ru, rv) } else { (rv, ru) };
        parent[younger] = elder;
        let ypos = complex.order_of(younger);
        paired[ypos] = true;
        paired[pos] = true;
        pairs.push((ypos, pos));
    }

    if complex.max_dim() >= 2 {
        const NONE: u32 = u32::MAX;
        let mut owner = vec![NONE; len];
        let mut stored: Vec<Vec<u32>> = Vec::new();
        let mut col: Vec<u32> = Vec::new();
        let mut scratch = Vec::new();
        for &pos in positive_edges.iter().rev() {
            let id = order[pos];
            col.clear();
            for &t in complex.cofaces(id) {
                let tpos = complex.order_of(t as usize);
                if tpos <= pos {
                    return Err(Error::Structural(format!(
                        "edge {id} does not precede its coface {t} in the filtration"
                    )));
                }
                col.push(tpos as u32);
            }
            col.sort_unstable();
            while let Some(&pivot) = col.first() {
                let o = owner[pivot as usize];
                if o == NONE {
                    break;
                }
                add_column(&mut col, &stored[o as usize], &mut scratch);
            }
            if let Some(&pivot) = col.first() {
                owner[pivot as usize] = stored.len() as u32;
                stored.push(col.clone());
                paired[pivot as usize] = true;
                paired[pos] = true;
                pairs.push((pos, pivot as usize));
            }
        }
    }
    pairs.sort_unstable_by_key(|&(_, d)| d);
    let essential = (0..len).filter(|&p| !paired[p]).collect();
    Ok(PersistencePairing { pairs, essential })
}

/// Finite diagram of degree `p`, zero-persistence points dropped.
pub fn extract_diagram(pairing: &PersistencePairing, complex: &FilteredComplex, p: usize) -> Result<PersistenceDiagram> {
    if p > 1 || (complex.max_dim() > 0 && p + 1 > complex.max_dim()) {
        return Err(Error::InvalidDegree { degree: p, max_dim: complex.max_dim() });
    }
    let mut points = Vec::new();
    for &(b, d) in &pairing.pairs {
        let (bid, did) = (complex.id_at(b), complex.id_at(d));
        if complex.simplex(bid).dim() != p {
            continue;
        }
        let (birth, death) = (complex.value(bid), complex.value(did));
        if death - birth <= ZERO_PERSISTENCE {
            continue;
        }
        points.push(DiagramPoint { birth, death, birth_simplex: bid, death_simplex: did });
    }
    Ok(PersistenceDiagram { degree: p, points })
}

/// Pairing followed by extraction of every requested degree.
pub fn diagrams(complex: &FilteredComplex, degrees: &[usize]) -> Result<Vec<PersistenceDiagram>> {
    let pairing = compute_pairing(complex)?;
    degrees.iter().map(|&p| extract_diagram(&pairing, complex, p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_rips, PointCloud, Simplex};
    use approx::assert_relative_eq;

    fn rips(points: &[[f64; 2]], r: f64) -> FilteredComplex {
        build_rips(&PointCloud::from_points(points).unwrap(), 2, r).unwrap()
    }

    fn both(k: &FilteredComplex) -> PersistencePairing {
        let a = reduce_boundary_matrix(k).unwrap();
        assert_eq!(a, compute_pairing(k).unwrap());
        a
    }

    #[test]
    fn single_vertex() {
        let k = FilteredComplex::from_simplices(1, vec![Simplex::vertex(0)], vec![0.0]).unwrap();
        let pairing = both(&k);
        assert!(pairing.pairs.is_empty());
        assert_eq!(pairing.essential, vec![0]);
    }

    #[test]
    fn two_vertices_one_edge() {
        let k = FilteredComplex::from_simplices(
            2,
            vec![Simplex::vertex(0), Simplex::vertex(1), Simplex::edge(0, 1)],
            vec![0.0, 0.0, 1.0],
        )
        .unwrap();
        let pairing = both(&k);
        assert_eq!(pairing.pairs, vec![(1, 2)]);
        assert_eq!(pairing.essential, vec![0]);
    }

    #[test]
    fn collinear_h0() {
        let k = rips(&[[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]], 4.0);
        let pairing = both(&k);
        let h0 = extract_diagram(&pairing, &k, 0).unwrap();
        assert_eq!(h0.coords(), vec![[0.0, 1.0], [0.0, 2.0]]);
        // the global component is the only essential vertex
        assert_eq!(pairing.essential.iter().filter(|&&p| k.simplex(k.id_at(p)).dim() == 0).count(), 1);
    }

    #[test]
    fn unit_square_h1() {
        let k = rips(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 2.0);
        assert_eq!(k.len(), 4 + 6 + 4);
        let h1 = extract_diagram(&both(&k), &k, 1).unwrap();
        assert_eq!(h1.len(), 1);
        assert_relative_eq!(h1.points[0].birth, 1.0);
        assert_relative_eq!(h1.points[0].death, 2f64.sqrt());
    }

    #[test]
    fn equilateral_triangle_h1_empty() {
        let h = 3f64.sqrt() / 2.0;
        let k = rips(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]], 2.0);
        let h1 = extract_diagram(&both(&k), &k, 1).unwrap();
        assert!(h1.is_empty());
    }

    #[test]
    fn degree_out_of_range() {
        let k = rips(&[[0.0, 0.0], [1.0, 0.0]], 2.0);
        let pairing = both(&k);
        assert!(matches!(extract_diagram(&pairing, &k, 2), Err(Error::InvalidDegree { .. })));
        assert!(extract_diagram(&pairing, &k, 1).unwrap().is_empty());
        let k1 = build_rips(&PointCloud::from_points(&[[0.0, 0.0], [1.0, 0.0]]).unwrap(), 1, 2.0).unwrap();
        assert!(extract_diagram(&reduce_boundary_matrix(&k1).unwrap(), &k1, 1).is_err());
    }

    #[test]
    fn pairing_invariants_on_a_circle() {
        let pts: Vec<[f64; 2]> = (0..12)
            .map(|i| {
                let a = i as f64 * 0.53 + 0.01 * (i * i) as f64;
                [a.cos(), a.sin()]
            })
            .collect();
        let k = rips(&pts, 3.0);
        let pairing = both(&k);
        let mut seen = vec![false; k.len()];
        for &(b, d) in &pairing.pairs {
            assert!(b < d);
            assert_eq!(k.simplex(k.id_at(d)).dim(), k.simplex(k.id_at(b)).dim() + 1);
            assert!(!seen[b] && !seen[d]);
            seen[b] = true;
            seen[d] = true;
        }
        for &e in &pairing.essential {
            assert!(!seen[e]);
        }
        // 12 vertices, full complex: H0 has n - 1 finite points, one circle in H1
        let h0 = extract_diagram(&pairing, &k, 0).unwrap();
        assert_eq!(h0.len(), 11);
        let h1 = extract_diagram(&pairing, &k, 1).unwrap();
        assert!(h1.max_persistence() > 1.0);
    }
}
