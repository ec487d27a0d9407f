//! Minimizing movements of an energy functional, first on a bare diagram and
//! then through the data.

use dynph::cli::generate_noisy_circle;
use dynph::dynamics::{energy_flow, eval_energy, jko_step, EnergyFunctional, FlowConfig, FlowState, JkoOptions, ProximalTerm};

fn main() -> dynph::error::Result<()> {
    // a diagram on its own: one loop and some noise
    let mut points = vec![[0.3, 0.9], [0.2, 0.3], [0.5, 0.55], [0.1, 0.2]];
    let f = EnergyFunctional::DenoiseCircle;
    for k in 0..5 {
        let opts = JkoOptions { tau: 0.1, inner_iters: 200, lr: 0.05, proximal: ProximalTerm::Sliced { n_projections: 64, seed: k } };
        let out = jko_step(&points, &f, &opts)?;
        println!("step {k}: J {:.5} -> {:.5}", eval_energy(&f, &points).0, eval_energy(&f, &out.points).0);
        points = out.points;
    }
    println!("diagram after five steps {points:.3?}");

    // the same functional pulling on the H1 diagram of a cloud
    let cloud = generate_noisy_circle(50, 0.7, 0.03, 1)?;
    let config = FlowConfig { k: 5, s: 20, ..FlowConfig::default() };
    let traj = energy_flow(FlowState::Cloud(cloud), &config, f, 1)?;
    for step in &traj.steps {
        let rec = &step.degrees[0];
        println!(
            "outer step {}: J(X) {:.5}, J(Y) {:.5}, top persistence {:.4}",
            step.step,
            rec.energy_before.unwrap(),
            rec.energy_after.unwrap(),
            rec.diagram.max_persistence()
        );
    }
    Ok(())
}
