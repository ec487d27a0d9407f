mod common;

use common::gradient_check;
use dynph::complex::{build_rips, PointCloud};
use dynph::diffph::diagram_to_filtration_grad;
use dynph::persistence::{compute_pairing, extract_diagram};
use proptest::prelude::*;

#[test]
fn coordinate_gradients_match_finite_differences() {
    for seed in 100..110 {
        let err = gradient_check(seed, 7);
        assert!(err < 1e-3, "seed {seed}: relative error {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filtration_gradient_is_linear(
        points in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(x, y)| [x, y]), 4..10),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = build_rips(&PointCloud::from_points(&points).unwrap(), 2, 10.0).unwrap();
        let pairing = compute_pairing(&k).unwrap();
        for p in 0..2 {
            let dgm = extract_diagram(&pairing, &k, p).unwrap();
            let g1: Vec<[f64; 2]> = (0..dgm.len()).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let g2: Vec<[f64; 2]> = (0..dgm.len()).map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]).collect();
            let mix: Vec<[f64; 2]> = g1.iter().zip(&g2).map(|(x, y)| [a * x[0] + b * y[0], a * x[1] + b * y[1]]).collect();
            let f1 = diagram_to_filtration_grad(&g1, &dgm, &k).unwrap();
            let f2 = diagram_to_filtration_grad(&g2, &dgm, &k).unwrap();
            let fm = diagram_to_filtration_grad(&mix, &dgm, &k).unwrap();
            for id in 0..k.len() {
                prop_assert!((fm.get(id) - (a * f1.get(id) + b * f2.get(id))).abs() < 1e-12);
            }
        }
    }
}
