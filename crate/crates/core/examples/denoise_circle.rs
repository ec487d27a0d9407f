//! The circle denoising experiment with artifacts written to
//! `runs/denoise-circle`. Pass a number to shorten the run.
//!
//! ```text
//! cargo run --release --example denoise_circle -- 5
//! ```

use dynph::cli::{resolve, execute, ConfigLayer};

fn main() -> dynph::error::Result<()> {
    let k = std::env::args().nth(1).map(|s| s.parse().expect("K must be a number"));
    let config = resolve(ConfigLayer { k, ..ConfigLayer::default() }, Some("denoise-circle"))?;
    let traj = execute(&config)?;

    let first = &traj.steps[0];
    let h0 = traj.final_diagram(0).unwrap();
    let near = h0.points.iter().filter(|p| (p.death - 0.05).abs() <= 0.02).count();
    println!("H0 deaths within 0.05 +- 0.02: {near} of {}", h0.len());
    println!(
        "top H1 persistence {:.4} -> {:.4}",
        first.degrees[1].diagram.max_persistence(),
        traj.final_diagram(1).unwrap().max_persistence()
    );
    println!("artifacts in {}", config.out.display());
    Ok(())
}
