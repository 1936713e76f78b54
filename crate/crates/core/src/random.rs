//! Seeded random states and deterministic RNG stream derivation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMatrix, C64};
use crate::qstate::{BlochVector, DensityMatrix};

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th independent stream derived from `seed`.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(0x51_7cc1_b727_220a)))
}

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, index))
}

/// Uniform point in the Bloch ball of radius `max_radius`.
pub fn bloch_in_ball<R: Rng + ?Sized>(rng: &mut R, max_radius: f64) -> BlochVector {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let r2: f64 = v.iter().map(|x| x * x).sum();
        if r2 <= 1.0 {
            return BlochVector::new(v[0] * max_radius, v[1] * max_radius, v[2] * max_radius);
        }
    }
}

/// Haar-random pure state vector.
pub fn pure_amplitudes<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    loop {
        if let Ok(s) = DensityMatrix::pure(&pure_amplitudes(rng, dim)) {
            return s;
        }
    }
}

/// Hilbert–Schmidt random mixed state G G† / Tr(G G†).
pub fn mixed_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::from_trusted(m.unscale(tr))
}
