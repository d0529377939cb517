//! Single-qubit-level QEC: ancilla-assisted readout and displacement
//! correction of one GKP qubit's deviation, first in p then in q.
//!
//! A [`QubitTrack`] carries the hidden state of a physical qubit. Its total
//! displacement in a quadrature is `dev + flips * sqrt(pi)` (mod `2 sqrt(pi)`),
//! so flips propagate through CNOTs exactly like deviations do.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gkp::{centered_residual, sample_channel, NoiseParams, TrueDeviation};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QubitTrack {
    pub dev_q: TrueDeviation,
    pub dev_p: TrueDeviation,
    /// Accumulated hidden bit flip in q (X error).
    pub flips_q: u8,
    /// Accumulated hidden bit flip in p (Z error).
    pub flips_p: u8,
}

impl QubitTrack {
    pub fn new(dev_q: f64, dev_p: f64) -> Self {
        Self {
            dev_q: TrueDeviation(dev_q),
            dev_p: TrueDeviation(dev_p),
            flips_q: 0,
            flips_p: 0,
        }
    }

    /// Adds an independent channel displacement to both quadratures.
    pub fn apply_channel<R: Rng + ?Sized>(&mut self, sigma: f64, rng: &mut R) {
        self.dev_q.0 += sample_channel(sigma, rng).expect("validated sigma").0;
        self.dev_p.0 += sample_channel(sigma, rng).expect("validated sigma").0;
    }
}

/// Measured deviations of one tracked cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqecRecord {
    pub cycle_index: u32,
    pub meas_dev_q: f64,
    pub meas_dev_p: f64,
}

/// CNOT (`exp(-i q_c p_t)`) acting on deviations: the control's q is added
/// to the target's q and the target's p is subtracted from the control's p.
pub fn cnot_propagate(control: QubitTrack, target: QubitTrack) -> (QubitTrack, QubitTrack) {
    let mut c = control;
    let mut t = target;
    t.dev_q.0 += control.dev_q.0;
    t.flips_q ^= control.flips_q;
    c.dev_p.0 -= target.dev_p.0;
    c.flips_p ^= target.flips_p;
    (c, t)
}

/// A perfect ancilla quadrature consumes no randomness.
fn fresh_ancilla<R: Rng + ?Sized>(sigma_q: f64, sigma_p: f64, rng: &mut R) -> QubitTrack {
    let mut draw = |s: f64| {
        if s == 0.0 {
            0.0
        } else {
            sample_channel(s, rng).expect("validated sigma").0
        }
    };
    let q = draw(sigma_q);
    let p = draw(sigma_p);
    QubitTrack::new(q, p)
}

/// p-quadrature correction with a `|0>` ancilla as CNOT control.
///
/// The ancilla's p readout is only defined modulo `sqrt(pi)`, so it reveals the
/// data deviation but not its bit. Shifting the data back by the readout
/// leaves the ancilla's p deviation behind, plus a flip when the readout
/// wrapped past `sqrt(pi)/2`.
pub fn sqec_p<R: Rng + ?Sized>(
    data: QubitTrack,
    noise: &NoiseParams,
    rng: &mut R,
) -> (QubitTrack, f64) {
    let ancilla = fresh_ancilla(noise.sigma_ancilla_q, noise.sigma_ancilla_p, rng);
    let a_p = ancilla.dev_p.0;
    let (ancilla, mut data) = cnot_propagate(ancilla, data);
    let (shift, measured) = centered_residual(ancilla.dev_p.0);
    // p_D + (p_a - p_D - shift*sqrt(pi)) = p_a - shift*sqrt(pi)
    data.dev_p.0 = a_p;
    data.flips_p ^= shift.rem_euclid(2) as u8;
    (data, measured)
}

/// q-quadrature correction with a `|+>` ancilla as CNOT target.
pub fn sqec_q<R: Rng + ?Sized>(
    data: QubitTrack,
    noise: &NoiseParams,
    rng: &mut R,
) -> (QubitTrack, f64) {
    let ancilla = fresh_ancilla(noise.sigma_ancilla_q, noise.sigma_ancilla_p, rng);
    let a2_q = ancilla.dev_q.0;
    let (mut data, ancilla) = cnot_propagate(data, ancilla);
    let (shift, measured) = centered_residual(ancilla.dev_q.0);
    // q_D - (q_a2 + q_D - shift*sqrt(pi)) = -q_a2 + shift*sqrt(pi)
    data.dev_q.0 = -a2_q;
    data.flips_q ^= shift.rem_euclid(2) as u8;
    (data, measured)
}

/// One full single-qubit QEC cycle: p correction, then q correction.
pub fn sqec_cycle<R: Rng + ?Sized>(
    data: QubitTrack,
    noise: &NoiseParams,
    cycle_index: u32,
    rng: &mut R,
) -> (QubitTrack, SqecRecord) {
    let (data, meas_dev_p) = sqec_p(data, noise, rng);
    let (data, meas_dev_q) = sqec_q(data, noise, rng);
    (
        data,
        SqecRecord {
            cycle_index,
            meas_dev_q,
            meas_dev_p,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gkp::{true_flip, HALF_SQRT_PI, SQRT_PI};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn perfect() -> NoiseParams {
        NoiseParams::default()
    }

    #[test]
    fn cnot_example() {
        let (c, t) = cnot_propagate(QubitTrack::new(0.1, 0.2), QubitTrack::new(0.3, 0.4));
        assert!((c.dev_q.0 - 0.1).abs() < 1e-15 && (c.dev_p.0 + 0.2).abs() < 1e-15);
        assert!((t.dev_q.0 - 0.4).abs() < 1e-15 && (t.dev_p.0 - 0.4).abs() < 1e-15);

        let z = QubitTrack::default();
        assert_eq!(cnot_propagate(z, z), (z, z));
    }

    #[test]
    fn cnot_inverts_with_reversed_control() {
        let control = QubitTrack::new(0.37, -0.21);
        let target = QubitTrack::new(-0.52, 0.11);
        let (_, t) = cnot_propagate(control, target);
        let (_, back) = cnot_propagate(QubitTrack::new(-0.37, 0.0), t);
        assert!((back.dev_q.0 - target.dev_q.0).abs() < 1e-15);
    }

    #[test]
    fn sqec_p_small_deviation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, m) = sqec_p(QubitTrack::new(0.0, 0.3), &perfect(), &mut rng);
        assert!((m + 0.3).abs() < 1e-15);
        assert_eq!(d.dev_p.0, 0.0);
        assert_eq!(d.flips_p, 0);
    }

    #[test]
    fn sqec_p_wraps_into_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (d, m) = sqec_p(QubitTrack::new(0.0, 0.9 * SQRT_PI), &perfect(), &mut rng);
        assert_eq!(d.dev_p.0, 0.0);
        assert_eq!(d.flips_p, 1);
        assert!((m.abs() - 0.1 * SQRT_PI).abs() < 1e-12);
    }

    #[test]
    fn sqec_q_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (d, m) = sqec_q(QubitTrack::new(0.2, 0.0), &perfect(), &mut rng);
        assert!((m.abs() - 0.2).abs() < 1e-15);
        assert_eq!(d.dev_q.0, 0.0);
        assert_eq!(d.flips_q, 0);

        let (d, _) = sqec_q(QubitTrack::new(0.7 * SQRT_PI, 0.0), &perfect(), &mut rng);
        assert_eq!(d.flips_q, 1);
        assert_eq!(d.dev_q.0, 0.0);
    }

    #[test]
    fn cycle_with_perfect_ancillas() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (d, r) = sqec_cycle(QubitTrack::new(0.3, -0.2), &perfect(), 1, &mut rng);
        assert!((r.meas_dev_q.abs() - 0.3).abs() < 1e-15);
        assert!((r.meas_dev_p.abs() - 0.2).abs() < 1e-15);
        assert_eq!(
            (d.dev_q.0, d.dev_p.0, d.flips_q, d.flips_p),
            (0.0, 0.0, 0, 0)
        );

        let (d, r) = sqec_cycle(QubitTrack::new(0.8 * SQRT_PI, 0.0), &perfect(), 1, &mut rng);
        assert_eq!(d.flips_q, 1);
        assert!((r.meas_dev_q.abs() - 0.2 * SQRT_PI).abs() < 1e-12);
    }

    /// Sample second moments of the residual deviations after one cycle.
    fn residual_variances(noise: NoiseParams, trials: usize, seed: u64) -> (f64, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut sq, mut sp) = (0.0, 0.0);
        for _ in 0..trials {
            let mut d = QubitTrack::default();
            d.apply_channel(0.5, &mut rng);
            let (d, _) = sqec_cycle(d, &noise, 1, &mut rng);
            sq += d.dev_q.0 * d.dev_q.0;
            sp += d.dev_p.0 * d.dev_p.0;
        }
        (sq / trials as f64, sp / trials as f64)
    }

    #[test]
    fn one_quadrature_variance_law() {
        let noise = NoiseParams::new(0.0, 0.1, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut s = 0.0;
        for _ in 0..n {
            let mut d = QubitTrack::default();
            d.dev_p.0 = sample_channel(0.5, &mut rng).unwrap().0;
            let (d, _) = sqec_p(d, &noise, &mut rng);
            s += d.dev_p.0 * d.dev_p.0;
        }
        let var = s / n as f64;
        // Var of a sample variance of N(0, v): 2 v^2 / n
        let se = (2.0f64).sqrt() * 0.01 / (n as f64).sqrt();
        assert!((var - 0.01).abs() < 4.0 * se, "{var}");
    }

    #[test]
    fn cycle_variance_law() {
        let noise = NoiseParams::new(0.0, 0.1, 0.1).unwrap();
        let n = 200_000;
        let (vq, vp) = residual_variances(noise, n, 12);
        let se_q = (2.0f64).sqrt() * 0.01 / (n as f64).sqrt();
        let se_p = (2.0f64).sqrt() * 0.02 / (n as f64).sqrt();
        assert!((vq - 0.01).abs() < 4.0 * se_q, "{vq}");
        assert!((vp - 0.02).abs() < 4.0 * se_p, "{vp}");
    }

    proptest! {
        #[test]
        fn perfect_cycle_clears_deviation(q in -6.0f64..6.0, p in -6.0f64..6.0, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (d, r) = sqec_cycle(QubitTrack::new(q, p), &perfect(), 1, &mut rng);
            prop_assert_eq!(d.dev_q.0, 0.0);
            prop_assert_eq!(d.dev_p.0, 0.0);
            prop_assert_eq!(d.flips_q, true_flip(TrueDeviation(q)));
            prop_assert_eq!(d.flips_p, true_flip(TrueDeviation(p)));
            prop_assert!(r.meas_dev_q.abs() <= HALF_SQRT_PI);
            prop_assert!(r.meas_dev_p.abs() <= HALF_SQRT_PI);
        }
    }
}
