//! Seeded sampling helpers used by the built-in check suites and tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::clifford::CouplingPair;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo..hi)
}

/// Uniform direction on the unit sphere (Gaussian normalization).
pub fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v = [
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
            uniform(rng, -1.0, 1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

/// Coupling with eta, tau in [-3, 3], rejecting the critical set
/// |d -+ 4| <= 0.1 and the excluded set |d - (2k+1)^2 pi^2| <= 0.1.
pub fn random_coupling(rng: &mut ChaCha8Rng) -> CouplingPair {
    loop {
        let c = CouplingPair::new(uniform(rng, -3.0, 3.0), uniform(rng, -3.0, 3.0));
        let d = c.d();
        if (d + 4.0).abs() <= 0.1 || (d - 4.0).abs() <= 0.1 {
            continue;
        }
        if (0..=64).any(|k| {
            let pole = ((2 * k + 1) as f64 * std::f64::consts::PI).powi(2);
            (d - pole).abs() <= 0.1
        }) {
            continue;
        }
        return c;
    }
}
