//! Shared fixtures for the decoder and protocol benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tracking_qec::decoder::random_codeword;
use tracking_qec::{analog_likelihoods, ConcatLevel, LikelihoodPair, Quadrature};

/// A noisy level-`l` block ready to decode: leaf bits with some flips and
/// their analog likelihoods.
pub struct DecodeInput {
    pub level: ConcatLevel,
    pub bits: Vec<u8>,
    pub likelihoods: Vec<LikelihoodPair>,
}

pub fn decode_input(level: u32, sigma: f64, seed: u64) -> DecodeInput {
    let level = ConcatLevel::new(level).expect("level >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut bits, _) = random_codeword(level, Quadrature::Q, &mut rng);
    let noise = Normal::new(0.0, sigma).expect("finite sigma");
    let likelihoods = bits
        .iter_mut()
        .map(|b| {
            let x: f64 = noise.sample(&mut rng);
            let k = (x / tracking_qec::SQRT_PI).round();
            if k.rem_euclid(2.0) == 1.0 {
                *b ^= 1;
            }
            analog_likelihoods(x - k * tracking_qec::SQRT_PI, sigma).expect("valid sigma")
        })
        .collect();
    DecodeInput {
        level,
        bits,
        likelihoods,
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
