//! Drive the H0 diagram of a random cloud along a McCann geodesic towards a
//! single target point, using exact transport plans.

use dynph::cli::generate_uniform_square;
use dynph::dynamics::{mccann_flow, FlowConfig, FlowState, PlanMethod};

fn main() -> dynph::error::Result<()> {
    let cloud = generate_uniform_square(40, 11)?;
    let config = FlowConfig { k: 10, s: 30, eta: 0.02, plan: PlanMethod::Exact, max_dim: 1, lambda_rep: 0.0, ..FlowConfig::default() };
    let traj = mccann_flow(FlowState::Cloud(cloud), &config, vec![[0.0, 0.1]], 0)?;

    for step in &traj.steps {
        let rec = &step.degrees[0];
        let mean_death = rec.diagram.points.iter().map(|p| p.death).sum::<f64>() / rec.diagram.len() as f64;
        println!("step {:>2}  t = {:.3}  mean H0 death {mean_death:.4}  loss {:.5}", step.step, rec.t.unwrap(), step.losses.last().unwrap());
    }
    let last = traj.final_diagram(0).unwrap();
    println!("final mean H0 death {:.4}", last.points.iter().map(|p| p.death).sum::<f64>() / last.len() as f64);
    Ok(())
}
