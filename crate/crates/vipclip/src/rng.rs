//! Deterministic RNG stream derivation.
//!
//! Every random draw in this crate is a pure function of a base seed plus a
//! short tuple of stream indices (seed fan-out index, iteration, batch side).
//! Streams are derived by folding the indices through a splitmix64 finalizer
//! into a ChaCha8 key, so results replay bit-exactly regardless of thread
//! scheduling or batch-size changes elsewhere in the run.

use crate::linalg::{norm, scale, Vector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(STREAM_SALT);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent ChaCha8 stream from `seed` and a list of stream ids.
pub fn substream(seed: u64, ids: &[u64]) -> ChaCha8Rng {
    let mut state = splitmix(seed);
    for &id in ids {
        state = splitmix(state ^ splitmix(id));
    }
    ChaCha8Rng::seed_from_u64(state)
}

/// Uniform sample from the closed ball of radius `radius` around `center`:
/// normalized Gaussian direction times radius * u^(1/d).
pub fn sample_in_ball<R: Rng>(rng: &mut R, center: &[f64], radius: f64) -> Vector {
    let d = center.len();
    let mut dir: Vector = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut n = norm(&dir);
    while n < 1e-300 {
        dir = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        n = norm(&dir);
    }
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / d as f64);
    let mut out = scale(&dir, r / n);
    for (o, c) in out.iter_mut().zip(center) {
        *o += c;
    }
    out
}

/// Point at exactly `radius` from `center`, in a seeded uniform direction.
pub fn point_on_sphere(seed: u64, center: &[f64], radius: f64) -> Vector {
    let mut rng = substream(seed, &[stream_id::SPHERE_POINT]);
    let d = center.len();
    let mut dir: Vector = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let mut n = norm(&dir);
    while n < 1e-300 {
        dir = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        n = norm(&dir);
    }
    let mut out = scale(&dir, radius / n);
    for (o, c) in out.iter_mut().zip(center) {
        *o += c;
    }
    out
}

/// Well-known stream ids, so independent subsystems never collide.
pub mod stream_id {
    pub const ZOO_ORTHOGONAL: u64 = 1;
    pub const ZOO_SOLUTION: u64 = 2;
    pub const ZOO_SPECTRUM: u64 = 3;
    pub const PROBE: u64 = 4;
    pub const SOLVER_EXTRAPOLATION: u64 = 5;
    pub const SOLVER_UPDATE: u64 = 6;
    pub const ESTIMATOR: u64 = 7;
    pub const NOISE_NORMS: u64 = 8;
    pub const GAP_BRUTEFORCE: u64 = 9;
    pub const SPHERE_POINT: u64 = 10;
}
