//! Seeded randomness. Every generic choice is drawn from a ChaCha stream
//! derived from the job seed and a tag path, so results do not depend on the
//! order in which work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::poly::C64;

pub type JobRng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent stream for `(seed, tags...)`.
pub fn substream(seed: u64, tags: &[u64]) -> JobRng {
    let stream = tags.iter().fold(0x5eed_u64, |acc, &t| splitmix(acc ^ t));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn unit_circle<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    C64::from_polar(1.0, theta)
}

pub fn unit_circle_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| unit_circle(rng)).collect()
}
