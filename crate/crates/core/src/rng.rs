//! Keyed random streams.
//!
//! Every stochastic quantity in the crate is drawn from a generator whose seed is
//! derived from a tuple of integers, so results never depend on the order in which
//! work items are executed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed with a path of indices into a child seed.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(master), |acc, &p| {
            splitmix64(acc.rotate_left(23) ^ splitmix64(p))
        })
}

pub fn keyed_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, path))
}

/// Fill `out[i] = base[i] + scale * N(0, 1)`.
pub(crate) fn add_gaussian<R: rand::Rng>(rng: &mut R, base: &[f64], scale: f64, out: &mut Vec<f64>) {
    out.clear();
    out.extend(base.iter().map(|b| {
        let z: f64 = StandardNormal.sample(rng);
        b + scale * z
    }));
}
