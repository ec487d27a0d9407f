use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::complex::PointCloud;
use crate::error::{Error, Result};

/// `n` points at uniformly random angles on a circle of `radius` around the
/// origin, each displaced by isotropic Gaussian noise of standard deviation
/// `sigma`.
pub fn generate_noisy_circle(n: usize, radius: f64, sigma: f64, seed: u64) -> Result<PointCloud> {
    if n < 3 {
        return Err(Error::Config(format!("noisy circle needs at least 3 points, got {n}")));
    }
    if !(radius > 0.0) || !(sigma >= 0.0) {
        return Err(Error::Config(format!("noisy circle needs radius > 0 and sigma >= 0, got {radius} and {sigma}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
    let mut coords = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let angle = rng.gen::<f64>() * std::f64::consts::TAU;
        coords.push(radius * angle.cos() + noise.sample(&mut rng));
        coords.push(radius * angle.sin() + noise.sample(&mut rng));
    }
    PointCloud::new(coords, 2)
}

/// `n` i.i.d. uniform points in `[-1, 1]^2`.
pub fn generate_uniform_square(n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::Config("uniform square needs at least 1 point".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coords = (0..2 * n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    PointCloud::new(coords, 2)
}
