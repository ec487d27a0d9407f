//! Persistence diagrams of a noisy circle.
//!
//! ```text
//! cargo run --example rips_persistence
//! ```

use dynph::cli::generate_noisy_circle;
use dynph::complex::{build_rips, default_max_radius};
use dynph::persistence::{compute_pairing, extract_diagram};

fn main() -> dynph::error::Result<()> {
    let cloud = generate_noisy_circle(40, 1.0, 0.05, 3)?;
    let complex = build_rips(&cloud, 2, default_max_radius(&cloud))?;
    println!("{} points, {} simplices", cloud.len(), complex.len());

    let pairing = compute_pairing(&complex)?;
    for p in 0..2 {
        let dgm = extract_diagram(&pairing, &complex, p)?;
        println!("H{p}: {} points, max persistence {:.4}", dgm.len(), dgm.max_persistence());
    }

    let h1 = extract_diagram(&pairing, &complex, 1)?;
    let top = h1.points.iter().max_by(|a, b| a.persistence().total_cmp(&b.persistence())).unwrap();
    let (b, d) = top.provenance();
    println!(
        "the circle: born at {:.4} by edge {:?}, killed at {:.4} by triangle {:?}",
        top.birth,
        complex.simplex(b).vertices(),
        top.death,
        complex.simplex(d).vertices()
    );
    Ok(())
}
