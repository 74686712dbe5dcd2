//! Counter-based per-shot random streams and environment sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dephasing_analytics::{DephasingError, NoiseSpec};
use crate::spin_model::EnvironmentSample;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one shot at one grid point. The key depends only on
/// the counters, so results do not depend on scheduling.
pub fn shot_rng(seed: u64, point: u64, shot: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ point) ^ shot.rotate_left(32));
    ChaCha8Rng::seed_from_u64(key)
}

/// Draws one quasi-static environment. Zero widths draw nothing and return 0.
pub fn sample_environment<R: rand::Rng + ?Sized>(
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<EnvironmentSample, DephasingError> {
    noise.validate()?;
    let sigma_omega = noise.sigma_omega()?;
    let mut draw = |sigma: f64| {
        if sigma == 0.0 {
            0.0
        } else {
            Normal::new(0.0, sigma).expect("validated sigma").sample(rng)
        }
    };
    Ok(EnvironmentSample { delta_b: draw(noise.sigma_b), delta_omega: draw(sigma_omega), delta_t: draw(noise.sigma_t) })
}
