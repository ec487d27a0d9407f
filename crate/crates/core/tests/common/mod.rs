#![allow(dead_code)]

use dynph::complex::{build_rips, default_max_radius, rips_filtration_values, PointCloud};
use dynph::diffph::{
    diagram_matching_loss, diagram_to_filtration_grad, filtration_to_points_grad, match_by_provenance, repulsion_loss,
    FiltrationGradient,
};
use dynph::persistence::{compute_pairing, extract_diagram, reduce_boundary_matrix, PersistenceDiagram};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Pt = [f64; 2];

pub fn random_cloud<R: Rng>(rng: &mut R, n: usize) -> Vec<Pt> {
    (0..n).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect()
}

pub fn random_diagram<R: Rng>(rng: &mut R, n: usize) -> Vec<Pt> {
    (0..n)
        .map(|_| {
            let b: f64 = rng.gen_range(0.0..1.0);
            [b, b + rng.gen_range(0.0..1.0)]
        })
        .collect()
}

fn dist(a: Pt, b: Pt) -> f64 {
    ((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])).sqrt()
}

pub fn sorted(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    v
}

pub fn pairs_of(dgm: &PersistenceDiagram) -> Vec<(f64, f64)> {
    sorted(dgm.points.iter().map(|p| (p.birth, p.death)).collect())
}

/// Diagram of the full Rips complex by boundary-matrix reduction.
pub fn reduction_diagram(points: &[Pt], p: usize) -> Vec<(f64, f64)> {
    let cloud = PointCloud::from_points(points).unwrap();
    let complex = build_rips(&cloud, 2, default_max_radius(&cloud)).unwrap();
    let pairing = reduce_boundary_matrix(&complex).unwrap();
    pairs_of(&extract_diagram(&pairing, &complex, p).unwrap())
}

fn rank(vectors: impl IntoIterator<Item = u64>) -> usize {
    let mut basis = [0u64; 64];
    let mut r = 0;
    for mut v in vectors {
        while v != 0 {
            let h = 63 - v.leading_zeros() as usize;
            if basis[h] == 0 {
                basis[h] = v;
                r += 1;
                break;
            }
            v ^= basis[h];
        }
    }
    r
}

/// Cycle space of the chains spanned by `cells`, each given as
/// (index bit, boundary).
fn cycles(cells: impl IntoIterator<Item = (u64, u64)>) -> Vec<u64> {
    let mut basis: [Option<(u64, u64)>; 64] = [None; 64];
    let mut out = Vec::new();
    for (mut comb, mut v) in cells {
        loop {
            if v == 0 {
                out.push(comb);
                break;
            }
            let h = 63 - v.leading_zeros() as usize;
            match basis[h] {
                Some((bv, bc)) => {
                    v ^= bv;
                    comb ^= bc;
                }
                None => {
                    basis[h] = Some((v, comb));
                    break;
                }
            }
        }
    }
    out
}

/// Degree-`p` diagram of the full Rips complex of at most 8 points, read off
/// the ranks of `H_p(K_s) -> H_p(K_t)` over all pairs of thresholds.
pub fn rank_diagram(points: &[Pt], p: usize) -> Vec<(f64, f64)> {
    let n = points.len();
    assert!(n <= 8 && p <= 1);
    let mut edge_index = vec![vec![0usize; n]; n];
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            edge_index[i][j] = edges.len();
            edges.push((1u64 << i | 1u64 << j, dist(points[i], points[j])));
        }
    }
    let mut triangles = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let boundary = 1u64 << edge_index[i][j] | 1u64 << edge_index[i][k] | 1u64 << edge_index[j][k];
                let value = edges[edge_index[i][j]].1.max(edges[edge_index[i][k]].1).max(edges[edge_index[j][k]].1);
                triangles.push((boundary, value));
            }
        }
    }
    let vertices: Vec<(u64, f64)> = (0..n).map(|_| (0, 0.0)).collect();
    let (cells, cofaces) = if p == 0 { (&vertices, &edges) } else { (&edges, &triangles) };

    let mut values: Vec<f64> = cells.iter().chain(cofaces.iter()).map(|c| c.1).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();

    let z: Vec<Vec<u64>> = values
        .iter()
        .map(|&s| cycles(cells.iter().enumerate().filter(|c| c.1 .1 <= s).map(|(k, c)| (1u64 << k, c.0))))
        .collect();
    let b: Vec<Vec<u64>> = values.iter().map(|&t| cofaces.iter().filter(|c| c.1 <= t).map(|c| c.0).collect()).collect();
    let beta = |s: usize, t: usize| -> i64 {
        (rank(z[s].iter().chain(&b[t]).copied()) - rank(b[t].iter().copied())) as i64
    };
    let beta_before = |s: usize, t: usize| if s == 0 { 0 } else { beta(s - 1, t) };

    let mut out = Vec::new();
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let mu = beta(i, j - 1) - beta(i, j) - beta_before(i, j - 1) + beta_before(i, j);
            assert!(mu >= 0, "negative multiplicity {mu}");
            out.extend(std::iter::repeat_n((values[i], values[j]), mu as usize));
        }
    }
    sorted(out)
}

/// Bottleneck distance between two diagrams (L-infinity ground metric,
/// diagonal allowed as a partner).
pub fn bottleneck(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let linf = |x: (f64, f64), y: (f64, f64)| (x.0 - y.0).abs().max((x.1 - y.1).abs());
    let half = |x: (f64, f64)| 0.5 * (x.1 - x.0);
    let mut candidates = vec![0.0];
    candidates.extend(a.iter().flat_map(|&x| b.iter().map(move |&y| linf(x, y))));
    candidates.extend(a.iter().chain(b).map(|&x| half(x)));
    candidates.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let feasible = |r: f64| {
        let size = na + nb;
        let adjacent = |l: usize, rt: usize| match (l < na, rt < nb) {
            (true, true) => linf(a[l], b[rt]) <= r,
            (true, false) => rt - nb == l && half(a[l]) <= r,
            (false, true) => rt == l - na && half(b[rt]) <= r,
            (false, false) => true,
        };
        let mut owner = vec![usize::MAX; size];
        fn augment(l: usize, size: usize, adj: &dyn Fn(usize, usize) -> bool, seen: &mut [bool], owner: &mut [usize]) -> bool {
            for rt in 0..size {
                if adj(l, rt) && !seen[rt] {
                    seen[rt] = true;
                    if owner[rt] == usize::MAX || augment(owner[rt], size, adj, seen, owner) {
                        owner[rt] = l;
                        return true;
                    }
                }
            }
            false
        }
        (0..size).all(|l| augment(l, size, &adjacent, &mut vec![false; size], &mut owner))
    };
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if feasible(candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    candidates[lo]
}

/// Cloud whose pairwise distances are separated by at least `gap`.
pub fn tie_free_cloud<R: Rng>(rng: &mut R, n: usize, gap: f64) -> Vec<Pt> {
    loop {
        let pts = random_cloud(rng, n);
        let mut d: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| dist(pts[i], pts[j])).collect();
        d.sort_by(f64::total_cmp);
        if d.windows(2).all(|w| w[1] - w[0] > gap) && d[0] > gap {
            return pts;
        }
    }
}

pub const LAMBDA_REP: f64 = 1e-4;
pub const REPULSION_EPS: f64 = 0.01;

/// Relative error (Euclidean norm) between the analytic coordinate
/// gradient of H0 + H1 matching loss plus repulsion and its central
/// finite differences, on one random tie-free cloud.
pub fn gradient_check(seed: u64, n: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = tie_free_cloud(&mut rng, n, 1e-4);
    let cloud = PointCloud::from_points(&pts).unwrap();
    let complex = build_rips(&cloud, 2, default_max_radius(&cloud)).unwrap();
    let pairing = compute_pairing(&complex).unwrap();
    let dgms: Vec<_> = (0..2).map(|p| extract_diagram(&pairing, &complex, p).unwrap()).collect();
    let provenance: Vec<Vec<_>> = dgms.iter().map(|d| d.points.iter().map(|q| q.provenance()).collect()).collect();
    let targets: Vec<Vec<Pt>> = dgms
        .iter()
        .map(|d| {
            d.points
                .iter()
                .map(|q| {
                    let b = (q.birth + rng.gen_range(-0.1..0.1)).max(0.0);
                    [b, (q.death + rng.gen_range(-0.1..0.1)).max(b)]
                })
                .collect()
        })
        .collect();

    let loss = |coords: &[f64]| -> f64 {
        let moved = PointCloud::new(coords.to_vec(), 2).unwrap();
        let k = rips_filtration_values(&moved, &complex).unwrap();
        let pairing = compute_pairing(&k).unwrap();
        let mut total = LAMBDA_REP * repulsion_loss(&moved, REPULSION_EPS).unwrap().0;
        for p in 0..2 {
            let dgm = extract_diagram(&pairing, &k, p).unwrap();
            let m = match_by_provenance(&dgm, &provenance[p], &targets[p]).unwrap();
            total += diagram_matching_loss(&dgm, &targets[p], &m).unwrap().0;
        }
        total
    };

    let mut fgrad = FiltrationGradient::zeros(complex.len());
    for p in 0..2 {
        let m = match_by_provenance(&dgms[p], &provenance[p], &targets[p]).unwrap();
        let (_, g) = diagram_matching_loss(&dgms[p], &targets[p], &m).unwrap();
        fgrad.accumulate(&diagram_to_filtration_grad(&g, &dgms[p], &complex).unwrap()).unwrap();
    }
    let pg = filtration_to_points_grad(&fgrad, &complex, &cloud).unwrap();
    assert!(pg.singular.is_empty());
    let (_, rep) = repulsion_loss(&cloud, REPULSION_EPS).unwrap();
    let analytic: Vec<f64> = pg.grad.iter().zip(&rep).map(|(g, r)| g + LAMBDA_REP * r).collect();

    let h = 1e-6;
    let base = cloud.coords().to_vec();
    let (mut err, mut norm) = (0.0, 0.0);
    for c in 0..base.len() {
        let (mut up, mut down) = (base.clone(), base.clone());
        up[c] += h;
        down[c] -= h;
        let fd = (loss(&up) - loss(&down)) / (2.0 * h);
        err += (fd - analytic[c]).powi(2);
        norm += fd * fd;
    }
    err.sqrt() / norm.sqrt().max(1e-12)
}
