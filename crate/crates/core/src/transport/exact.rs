use super::{cost_matrix, DiagramMeasure, TransportPlan};
use crate::error::{Error, Result};

/// Size guard for exact solves, in plan cells.
pub const EXACT_CELL_LIMIT: usize = 10_000;

/// Minimum-cost assignment for a row-major `n x m` cost matrix.
///
/// Every row is assigned when `n <= m`, every column when `n > m`; the
/// result maps rows to their column.
pub fn assignment(cost: &[f64], n: usize, m: usize) -> Vec<Option<usize>> {
    assert_eq!(cost.len(), n * m, "cost matrix shape");
    if n == 0 || m == 0 {
        return vec![None; n];
    }
    if n <= m {
        hungarian(cost, n, m).into_iter().map(Some).collect()
    } else {
        let transposed: Vec<f64> = (0..m).flat_map(|j| (0..n).map(move |i| cost[i * m + j])).collect();
        let mut out = vec![None; n];
        for (j, i) in hungarian(&transposed, m, n).into_iter().enumerate() {
            out[i] = Some(j);
        }
        out
    }
}

/// Shortest-augmenting-path Hungarian method with potentials, `n <= m`.
fn hungarian(cost: &[f64], n: usize, m: usize) -> Vec<usize> {
    // 1-based with a virtual column 0, following the classical formulation
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=m {
        if row_of[j] != 0 {
            out[row_of[j] - 1] = j - 1;
        }
    }
    out
}

/// Balanced transportation problem with integer supplies solved by
/// successive shortest paths (Dijkstra with potentials) on the dense
/// bipartite residual graph. Returns integral flows, row-major.
fn min_cost_flow(cost: &[f64], supply: &[u64], demand: &[u64]) -> Vec<u64> {
    let (n, m) = (supply.len(), demand.len());
    let nodes = n + m;
    let mut flow = vec![0u64; n * m];
    let mut left = supply.to_vec();
    let mut need = demand.to_vec();
    let mut pot = vec![0.0; nodes];
    let mut dist = vec![0.0; nodes];
    let mut prev = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    while left.iter().any(|&s| s > 0) {
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        prev.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..n {
            if left[i] > 0 {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut best = usize::MAX;
            for v in 0..nodes {
                if !done[v] && dist[v].is_finite() && (best == usize::MAX || dist[v] < dist[best]) {
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best < n {
                let i = best;
                for j in 0..m {
                    let r = (cost[i * m + j] + pot[i] - pot[n + j]).max(0.0);
                    if dist[i] + r < dist[n + j] {
                        dist[n + j] = dist[i] + r;
                        prev[n + j] = i;
                    }
                }
            } else {
                let j = best - n;
                for i in 0..n {
                    if flow[i * m + j] == 0 {
                        continue;
                    }
                    let r = (-cost[i * m + j] + pot[n + j] - pot[i]).max(0.0);
                    if dist[best] + r < dist[i] {
                        dist[i] = dist[best] + r;
                        prev[i] = best;
                    }
                }
            }
        }
        let sink = (0..m)
            .filter(|&j| need[j] > 0 && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]))
            .expect("balanced transportation problem always has an augmenting path");
        // bottleneck along the path
        let mut amount = need[sink];
        let mut v = n + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u >= n {
                amount = amount.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        amount = amount.min(left[v]);
        let origin = v;
        let mut v = n + sink;
        while prev[v] != usize::MAX {
            let u = prev[v];
            if u < n {
                flow[u * m + (v - n)] += amount;
            } else {
                flow[v * m + (u - n)] -= amount;
            }
            v = u;
        }
        left[origin] -= amount;
        need[sink] -= amount;
        let cap = dist[n + sink];
        for k in 0..nodes {
            pot[k] += dist[k].min(cap);
        }
    }
    flow
}

/// Optimal plan for the squared-Euclidean cost between two uniform measures.
/// For `n == m` the result is a permutation matrix scaled by `1/n`.
pub fn exact_plan(source: &DiagramMeasure, target: &DiagramMeasure) -> Result<TransportPlan> {
    let (n, m) = (source.len(), target.len());
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("exact transport needs two nonempty measures".into()));
    }
    if n * m > EXACT_CELL_LIMIT {
        return Err(Error::TooLarge { n, m, limit: EXACT_CELL_LIMIT });
    }
    let cost = cost_matrix(source.points(), target.points());
    let mut data = vec![0.0; n * m];
    if n == m {
        for (i, j) in assignment(&cost, n, m).into_iter().enumerate() {
            data[i * m + j.expect("square assignment is total")] = 1.0 / n as f64;
        }
    } else {
        // source i ships m units, target j receives n units; total n*m
        let flow = min_cost_flow(&cost, &vec![m as u64; n], &vec![n as u64; m]);
        let total = (n * m) as f64;
        for (d, f) in data.iter_mut().zip(flow) {
            *d = f as f64 / total;
        }
    }
    TransportPlan::from_matrix(n, m, data)
}
