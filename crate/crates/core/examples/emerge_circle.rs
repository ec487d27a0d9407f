//! The circle emerging experiment on 250 uniform points, written to
//! `runs/emerge-circle`.

use dynph::cli::{run_preset, ConfigLayer};

fn main() -> dynph::error::Result<()> {
    let traj = run_preset("emerge-circle", ConfigLayer::default())?;
    for step in &traj.steps {
        let h1 = &step.degrees[1];
        println!(
            "step {:>2}: {:>3} H1 points, max persistence {:.4}, J {:.5}",
            step.step,
            h1.diagram.len(),
            h1.diagram.max_persistence(),
            h1.energy_after.unwrap()
        );
    }
    println!("final max H1 persistence {:.4}", traj.final_diagram(1).unwrap().max_persistence());
    Ok(())
}
