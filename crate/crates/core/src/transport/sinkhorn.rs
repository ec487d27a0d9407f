use super::{cost_matrix, DiagramMeasure, TransportPlan};
use crate::error::{Error, Result};

pub const SINKHORN_MAX_ITERS: usize = 10_000;
pub const SINKHORN_TOL: f64 = 1e-9;

/// Each stage starts with plain iterations; the observed contraction rate
/// between these two iterations sets the over-relaxation factor, which is
/// halved towards 1 whenever the violation fails to halve over 100 iterations.
const PROBE_START: usize = 10;
const PROBE_END: usize = 30;
const MAX_OVERRELAXATION: f64 = 1.9;

/// Once the last stage is below this violation but its recent rate of
/// progress cannot reach `tol` within the iteration budget, the iterate is
/// rounded onto the transport polytope.
const ROUNDING_THRESHOLD: f64 = 1e-5;
const STALL_WINDOW: usize = 200;

/// Projects a nearly feasible plan onto the exact marginals: rows and
/// columns are scaled down where they carry too much mass, and the missing
/// mass is added back as a rank-one correction.
fn round_to_marginals(plan: &mut [f64], n: usize, m: usize) {
    let (a, b) = (1.0 / n as f64, 1.0 / m as f64);
    for row in plan.chunks_mut(m) {
        let s: f64 = row.iter().sum();
        if s > a {
            row.iter_mut().for_each(|p| *p *= a / s);
        }
    }
    for j in 0..m {
        let s: f64 = (0..n).map(|i| plan[i * m + j]).sum();
        if s > b {
            (0..n).for_each(|i| plan[i * m + j] *= b / s);
        }
    }
    let err_r: Vec<f64> = plan.chunks(m).map(|row| (a - row.iter().sum::<f64>()).max(0.0)).collect();
    let err_c: Vec<f64> = (0..m).map(|j| (b - (0..n).map(|i| plan[i * m + j]).sum::<f64>()).max(0.0)).collect();
    let total: f64 = err_r.iter().sum();
    if total > 0.0 {
        for i in 0..n {
            for j in 0..m {
                plan[i * m + j] += err_r[i] * err_c[j] / total;
            }
        }
    }
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let top = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + xs.map(|x| (x - top).exp()).sum::<f64>().ln()
}

fn marginal_violation(f: &[f64], g: &[f64], cost: &[f64], eps: f64, n: usize, m: usize) -> f64 {
    let mut cols = vec![0.0; m];
    let mut worst = 0.0f64;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..m {
            let p = ((f[i] + g[j] - cost[i * m + j]) / eps).exp();
            row += p;
            cols[j] += p;
        }
        worst = worst.max((row - 1.0 / n as f64).abs());
    }
    cols.into_iter().map(|c| (c - 1.0 / m as f64).abs()).fold(worst, f64::max)
}

/// Entropic optimal transport plan, computed with log-domain Sinkhorn
/// iterations on the dual potentials.
///
/// The regularization is annealed geometrically from the scale of the cost
/// down to `reg`, warm-starting each stage from the previous potentials; only
/// the last stage is run to `tol`. Updates are over-relaxed. Every iteration
/// of every stage counts against `max_iters`. The returned plan has row and
/// column marginals within `tol`. When the final stage is already below a
/// violation of 1e-5 but converging too slowly to reach `tol` in the
/// remaining budget (nearly block-diagonal plans do this), the iterate is
/// rounded onto the exact marginals.
pub fn sinkhorn_plan(
    source: &DiagramMeasure,
    target: &DiagramMeasure,
    reg: f64,
    max_iters: usize,
    tol: f64,
) -> Result<TransportPlan> {
    if !(reg > 0.0) {
        return Err(Error::InvalidInput(format!("Sinkhorn regularization must be positive, got {reg}")));
    }
    if source.is_empty() || target.is_empty() {
        return Err(Error::InvalidInput("Sinkhorn needs two nonempty measures".into()));
    }
    let (n, m) = (source.len(), target.len());
    let cost = cost_matrix(source.points(), target.points());
    let (log_a, log_b) = (-(n as f64).ln(), -(m as f64).ln());

    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let scale = cost.iter().copied().fold(0.0, f64::max);
    let mut eps = scale.max(reg);
    let mut iters = 0usize;
    let mut violation = f64::INFINITY;
    let mut stalled = false;

    loop {
        let last = eps <= reg;
        let stage_tol = if last { tol } else { 1e-3 / n as f64 };
        let mut omega = 1.0;
        let mut probe = f64::NAN;
        let mut checkpoint = f64::INFINITY;
        let mut stage_iters = 0usize;
        let mut window_start = f64::INFINITY;
        loop {
            if iters >= max_iters {
                return Err(Error::Convergence { iterations: iters, violation });
            }
            iters += 1;
            for i in 0..n {
                let row = &cost[i * m..(i + 1) * m];
                let next = eps * log_a - eps * log_sum_exp(row.iter().zip(&g).map(|(c, gj)| (gj - c) / eps));
                f[i] += omega * (next - f[i]);
            }
            for j in 0..m {
                let next = eps * log_b - eps * log_sum_exp((0..n).map(|i| (f[i] - cost[i * m + j]) / eps));
                g[j] += omega * (next - g[j]);
            }
            violation = marginal_violation(&f, &g, &cost, eps, n, m);
            if !violation.is_finite() {
                return Err(Error::Convergence { iterations: iters, violation });
            }
            stage_iters += 1;
            if stage_iters == PROBE_START {
                probe = violation;
            } else if stage_iters == PROBE_END {
                let rate = (violation / probe).powf(1.0 / (PROBE_END - PROBE_START) as f64);
                if rate < 1.0 {
                    omega = (2.0 / (1.0 + (1.0 - rate).sqrt())).min(MAX_OVERRELAXATION);
                }
            }
            if stage_iters % 100 == 0 {
                if omega > 1.0 && violation > 0.5 * checkpoint {
                    omega = 1.0 + 0.5 * (omega - 1.0);
                }
                checkpoint = violation;
            }
            if violation <= stage_tol {
                break;
            }
            if last && stage_iters % STALL_WINDOW == 0 {
                // at the rate of the last window, can tol still be reached?
                let rate = violation / window_start;
                let needed = if rate < 1.0 { (tol / violation).ln() / rate.ln() * STALL_WINDOW as f64 } else { f64::INFINITY };
                if violation <= ROUNDING_THRESHOLD && needed > (max_iters - iters) as f64 {
                    stalled = true;
                    break;
                }
                window_start = violation;
            }
        }
        if last {
            break;
        }
        eps = (eps * 0.5).max(reg);
    }

    let mut data: Vec<f64> = (0..n * m)
        .map(|k| ((f[k / m] + g[k % m] - cost[k]) / eps).exp())
        .collect();
    if stalled {
        round_to_marginals(&mut data, n, m);
    }
    TransportPlan::from_matrix(n, m, data)
}
