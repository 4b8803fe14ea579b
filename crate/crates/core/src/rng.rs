//! Deterministic RNG streams.
//!
//! Every stochastic component draws from a `ChaCha8Rng` derived from a user
//! seed and a fixed stream id, so independent units (trajectories, shots,
//! sweep runs) get independent streams and identical configs reproduce
//! bit-identical results.

use ndarray::{Array, Dimension, ShapeBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Stream ids used by the dataset generators.
pub mod streams {
    pub const LATENT_DYNAMICS: u64 = 0x01;
    pub const OBSERVATION_NOISE: u64 = 0x02;
    pub const LABEL_FLIPS: u64 = 0x03;
    pub const BALANCE: u64 = 0x04;
    pub const KMEANS: u64 = 0x05;
    pub const TOKAMAK_SHOT_BASE: u64 = 0x100;
    pub const TOKAMAK_MIXING: u64 = 0x06;
    pub const PARAM_INIT: u64 = 0x20;
    pub const BATCH_ORDER: u64 = 0x21;
    pub const REPARAM_NOISE: u64 = 0x22;
    pub const PROBE_SPLIT: u64 = 0x23;
    pub const CAP_PER_CLASS: u64 = 0x24;
}

/// RNG for `(seed, stream)`. Distinct streams from the same seed never
/// overlap.
pub fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard-normal array of the given shape, scaled by `std`.
pub fn normal<F, D, Sh>(rng: &mut ChaCha8Rng, shape: Sh, std: f64) -> Array<F, D>
where
    F: ndarray::NdFloat,
    D: Dimension,
    Sh: ShapeBuilder<Dim = D>,
{
    Array::from_shape_simple_fn(shape, || {
        let x: f64 = StandardNormal.sample(rng);
        F::from(x * std).unwrap()
    })
}

/// Uniform array on `(-bound, bound)`.
pub fn uniform<F, D, Sh>(rng: &mut ChaCha8Rng, shape: Sh, bound: f64) -> Array<F, D>
where
    F: ndarray::NdFloat,
    D: Dimension,
    Sh: ShapeBuilder<Dim = D>,
{
    Array::from_shape_simple_fn(shape, || {
        let x: f64 = rng.gen_range(-bound..bound);
        F::from(x).unwrap()
    })
}
