mod common;

use common::random_diagram;
use dynph::transport::{
    barycenter_targets, exact_plan, mccann_interpolate, sinkhorn_plan, w2_distance, DiagramMeasure, SINKHORN_MAX_ITERS,
    SINKHORN_TOL,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn measure(points: &[[f64; 2]]) -> DiagramMeasure {
    DiagramMeasure::new(points.to_vec()).unwrap()
}

#[test]
fn triangle_inequality() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let [a, b, c] = [0; 3].map(|_| measure(&random_diagram(&mut rng, 4)));
        let ab = w2_distance(&a, &b).unwrap();
        let bc = w2_distance(&b, &c).unwrap();
        assert!(w2_distance(&a, &c).unwrap() <= ab + bc + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interpolation_is_a_constant_speed_geodesic(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source = measure(&random_diagram(&mut rng, n));
        let target = measure(&random_diagram(&mut rng, n));
        let plan = exact_plan(&source, &target).unwrap();
        let image = barycenter_targets(&plan, &target).unwrap();
        let total = w2_distance(&source, &measure(&image)).unwrap();
        prop_assert!((total - w2_distance(&source, &target).unwrap()).abs() < 1e-12);
        for t in [0.25, 0.5, 0.75] {
            let mid = measure(&mccann_interpolate(source.points(), &image, t).unwrap());
            prop_assert!((w2_distance(&source, &mid).unwrap() - t * total).abs() < 1e-8);
        }
    }

    #[test]
    fn barycenter_ignores_target_order(seed in any::<u64>(), n in 1usize..6, m in 1usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source = measure(&random_diagram(&mut rng, n));
        let target = random_diagram(&mut rng, m);
        let plan = sinkhorn_plan(&source, &measure(&target), 0.05, SINKHORN_MAX_ITERS, SINKHORN_TOL).unwrap();
        let mut perm: Vec<usize> = (0..m).collect();
        perm.shuffle(&mut rng);
        let shuffled: Vec<[f64; 2]> = perm.iter().map(|&j| target[j]).collect();
        let a = barycenter_targets(&plan, &measure(&target)).unwrap();
        let b = barycenter_targets(&plan.permute_cols(&perm), &measure(&shuffled)).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x[0] - y[0]).abs() < 1e-12 && (x[1] - y[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn entropic_cost_bounds_exact_cost(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let source = measure(&random_diagram(&mut rng, n));
        let target = measure(&random_diagram(&mut rng, m));
        let exact = exact_plan(&source, &target).unwrap().cost(source.points(), target.points());
        for reg in [1e-1, 1e-2, 1e-3] {
            let plan = sinkhorn_plan(&source, &target, reg, SINKHORN_MAX_ITERS, SINKHORN_TOL).unwrap();
            prop_assert!(plan.marginal_violation() <= 1e-6);
            let cost = plan.cost(source.points(), target.points());
            // a plan off its marginals by v can undercut the optimum by v times the largest cost
            prop_assert!(cost >= exact - 8.0 * plan.marginal_violation() - 1e-12);
            prop_assert!(cost <= exact + 5.0 * reg * ((n * m) as f64).ln().max(1.0));
        }
    }
}
