//! Transport between two persistence diagrams: exact and entropic plans,
//! barycentric targets and the displacement interpolation between them.

use dynph::transport::{
    barycenter_targets, exact_plan, mccann_interpolate, sinkhorn_plan, sliced_w2, w2_distance, DiagramMeasure,
    SINKHORN_MAX_ITERS, SINKHORN_TOL,
};

fn main() -> dynph::error::Result<()> {
    let source = DiagramMeasure::new(vec![[0.0, 0.3], [0.1, 0.9], [0.4, 0.5], [0.2, 0.25]])?;
    let target = DiagramMeasure::new(vec![[0.0, 1.0], [0.0, 0.05], [0.05, 0.1]])?;

    let exact = exact_plan(&source, &target)?;
    println!("exact cost    {:.6}", exact.cost(source.points(), target.points()));
    for reg in [1e-1, 1e-2, 1e-3] {
        let plan = sinkhorn_plan(&source, &target, reg, SINKHORN_MAX_ITERS, SINKHORN_TOL)?;
        println!(
            "sinkhorn {reg:<5} cost {:.6}, marginal violation {:.1e}",
            plan.cost(source.points(), target.points()),
            plan.marginal_violation()
        );
    }

    let bary = barycenter_targets(&exact, &target)?;
    println!("barycentric targets {bary:.3?}");
    for t in [0.0, 0.5, 1.0] {
        let mid = DiagramMeasure::new(mccann_interpolate(source.points(), &bary, t)?)?;
        println!("t = {t}: W2 from source {:.4}", w2_distance(&source, &mid)?);
    }

    let a = [[0.0, 0.3], [0.1, 0.9], [0.4, 0.5]];
    let b = [[0.0, 1.0], [0.0, 0.05], [0.05, 0.1]];
    let exact = w2_distance(&DiagramMeasure::new(a.to_vec())?, &DiagramMeasure::new(b.to_vec())?)?;
    let sliced = sliced_w2(&a, &b, 256, 0)?;
    println!("W2^2 {:.4} vs sliced {:.4}", exact * exact, sliced.value);
    Ok(())
}
