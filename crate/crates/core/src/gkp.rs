//! GKP primitives: Gaussian displacement noise, lattice binning of quadrature
//! measurements, and the per-qubit likelihoods used by the decoders.
//!
//! Quadrature values are dimensionless with lattice spacing `sqrt(pi)`. Even
//! multiples of `sqrt(pi)` carry bit 0 and odd multiples carry bit 1.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erf, erfc};

use crate::error::{Error, Result};

/// Lattice spacing of a GKP qubit in either quadrature.
pub const SQRT_PI: f64 = 1.772_453_850_905_516;
/// Half the lattice spacing; the decision boundary of a bit measurement.
pub const HALF_SQRT_PI: f64 = 0.5 * SQRT_PI;
/// Limit of [`p_corr`] as sigma goes to zero.
pub const P_CORR_NOISELESS: f64 = 1.0;

/// Gaussian noise strengths, all standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Displacement per cycle per quadrature from the channel.
    pub sigma_channel: f64,
    pub sigma_ancilla_q: f64,
    pub sigma_ancilla_p: f64,
}

impl NoiseParams {
    pub fn new(sigma_channel: f64, sigma_ancilla_q: f64, sigma_ancilla_p: f64) -> Result<Self> {
        for s in [sigma_channel, sigma_ancilla_q, sigma_ancilla_p] {
            check_sigma(s)?;
        }
        Ok(Self {
            sigma_channel,
            sigma_ancilla_q,
            sigma_ancilla_p,
        })
    }

    /// Channel noise only, perfect ancillas.
    pub fn channel(sigma_channel: f64) -> Result<Self> {
        Self::new(sigma_channel, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        Self::new(
            self.sigma_channel,
            self.sigma_ancilla_q,
            self.sigma_ancilla_p,
        )
        .map(|_| ())
    }
}

/// An unbounded quadrature displacement (the hidden truth, not a measurement).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
pub struct TrueDeviation(pub f64);

impl TrueDeviation {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// A measured bit plus the residual offset from the nearest lattice point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinnedOutcome {
    pub bit: u8,
    /// Always in `(-sqrt(pi)/2, sqrt(pi)/2]`.
    pub deviation: f64,
}

/// Log-likelihoods that a unit's decided bit is right (`l_match`) or wrong
/// (`l_flip`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LikelihoodPair {
    pub l_match: f64,
    pub l_flip: f64,
}

impl LikelihoodPair {
    pub fn new(l_match: f64, l_flip: f64) -> Self {
        Self { l_match, l_flip }
    }

    /// Log-likelihood of the unit being read as `bit` given that it was
    /// decided as `decided`.
    #[inline]
    pub fn for_bits(&self, decided: u8, bit: u8) -> f64 {
        if decided == bit {
            self.l_match
        } else {
            self.l_flip
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma >= 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeSigma(sigma))
    }
}

fn check_positive(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveSigma(sigma))
    }
}

/// Draws one channel displacement from `N(0, sigma^2)`.
///
/// A normal variate is consumed even for `sigma == 0` so that random streams
/// stay aligned across noise levels.
pub fn sample_channel<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> Result<TrueDeviation> {
    check_sigma(sigma)?;
    let z: f64 = rng.sample(StandardNormal);
    if sigma == 0.0 {
        return Ok(TrueDeviation(0.0));
    }
    Ok(TrueDeviation(sigma * z))
}

/// Index of the nearest lattice point; halfway points go to the lower one.
#[inline]
fn nearest_lattice(q: f64) -> (i64, f64) {
    let mut k = (q / SQRT_PI - 0.5).ceil();
    let mut dev = q - k * SQRT_PI;
    // Guard against rounding at the bin edges.
    if dev > HALF_SQRT_PI {
        k += 1.0;
        dev -= SQRT_PI;
    } else if dev <= -HALF_SQRT_PI {
        k -= 1.0;
        dev += SQRT_PI;
    }
    (k as i64, dev)
}

/// Bins a measured quadrature value to the nearest multiple of `sqrt(pi)`.
pub fn bin_measurement(q_m: f64) -> Result<BinnedOutcome> {
    if !q_m.is_finite() {
        return Err(Error::NonFinite(q_m));
    }
    let (k, deviation) = nearest_lattice(q_m);
    Ok(BinnedOutcome {
        bit: k.rem_euclid(2) as u8,
        deviation,
    })
}

/// Residual of `q` modulo the lattice spacing, centred on zero. Used for
/// ancilla readouts that carry no bit information.
#[inline]
pub(crate) fn centered_residual(q: f64) -> (i64, f64) {
    nearest_lattice(q)
}

/// 1 iff the displacement moves a peak onto an odd lattice shift.
#[inline]
pub fn true_flip(delta: TrueDeviation) -> u8 {
    nearest_lattice(delta.0).0.rem_euclid(2) as u8
}

/// Probability that a measurement decides the correct bit: the mass of
/// `N(0, sigma^2)` within `(-sqrt(pi)/2, sqrt(pi)/2)`.
pub fn p_corr(sigma: f64) -> Result<f64> {
    check_positive(sigma)?;
    Ok(erf(HALF_SQRT_PI / (sigma * std::f64::consts::SQRT_2)))
}

/// `1 - p_corr(sigma)`, evaluated without cancellation.
pub fn p_error(sigma: f64) -> Result<f64> {
    check_positive(sigma)?;
    Ok(erfc(HALF_SQRT_PI / (sigma * std::f64::consts::SQRT_2)))
}

/// Log of the zero-mean Gaussian density with standard deviation `sigma`.
#[inline]
pub fn log_gaussian(x: f64, sigma: f64) -> f64 {
    const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
    -0.5 * (x / sigma) * (x / sigma) - sigma.ln() - LN_SQRT_2PI
}

/// Analog likelihoods of a binned deviation: the density at `|d|` for a
/// correct decision and at `sqrt(pi) - |d|` for a flipped one.
pub fn analog_likelihoods(deviation: f64, sigma: f64) -> Result<LikelihoodPair> {
    check_positive(sigma)?;
    if deviation.is_nan() || deviation.abs() > HALF_SQRT_PI {
        return Err(Error::DeviationOutOfRange(deviation));
    }
    Ok(analog_unchecked(deviation, sigma))
}

#[inline]
pub(crate) fn analog_unchecked(deviation: f64, sigma: f64) -> LikelihoodPair {
    let d = deviation.abs();
    LikelihoodPair {
        l_match: log_gaussian(d, sigma),
        l_flip: log_gaussian(SQRT_PI - d, sigma),
    }
}

/// Deviation-independent likelihoods `(ln p_corr, ln(1 - p_corr))`.
pub fn digital_likelihoods(sigma: f64) -> Result<LikelihoodPair> {
    Ok(LikelihoodPair {
        l_match: p_corr(sigma)?.ln(),
        l_flip: p_error(sigma)?.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sqrt_pi_constant() {
        // the literal is the correctly rounded value; PI.sqrt() is one ulp low
        let ulp = f64::EPSILON * SQRT_PI;
        assert!((SQRT_PI - std::f64::consts::PI.sqrt()).abs() <= ulp);
        assert_eq!(HALF_SQRT_PI * 2.0, SQRT_PI);
    }

    #[test]
    fn zero_sigma_channel_is_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_channel(0.0, &mut rng).unwrap().value(), 0.0);
        }
    }

    #[test]
    fn negative_sigma_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_channel(-0.1, &mut rng),
            Err(Error::NegativeSigma(_))
        ));
        assert!(NoiseParams::new(0.1, -1.0, 0.0).is_err());
        assert!(NoiseParams::new(f64::NAN, 0.0, 0.0).is_err());
    }

    #[test]
    fn channel_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = sample_channel(0.5, &mut rng).unwrap().value();
            s1 += x;
            s2 += x * x;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 * 0.5 / 1e3, "mean {mean}");
        assert!((var - 0.25).abs() < 0.25 * 0.005, "var {var}");
    }

    #[test]
    fn binning_examples() {
        let b = bin_measurement(0.0).unwrap();
        assert_eq!((b.bit, b.deviation), (0, 0.0));
        let b = bin_measurement(SQRT_PI).unwrap();
        assert_eq!((b.bit, b.deviation), (1, 0.0));
        let b = bin_measurement(-0.6 * SQRT_PI).unwrap();
        assert_eq!(b.bit, 1);
        assert!((b.deviation - 0.4 * SQRT_PI).abs() < 1e-12);
        let b = bin_measurement(2.0 * SQRT_PI + 0.3).unwrap();
        assert_eq!(b.bit, 0);
        assert!((b.deviation - 0.3).abs() < 1e-12);
    }

    #[test]
    fn binning_tie_goes_to_lower_point() {
        let b = bin_measurement(HALF_SQRT_PI).unwrap();
        assert_eq!(b.bit, 0);
        assert_eq!(b.deviation, HALF_SQRT_PI);
        let b = bin_measurement(-HALF_SQRT_PI).unwrap();
        assert_eq!(b.bit, 1);
        assert!((b.deviation - HALF_SQRT_PI).abs() < 1e-15);
    }

    #[test]
    fn binning_rejects_non_finite() {
        assert!(bin_measurement(f64::NAN).is_err());
        assert!(bin_measurement(f64::INFINITY).is_err());
    }

    #[test]
    fn true_flip_examples() {
        assert_eq!(true_flip(TrueDeviation(0.0)), 0);
        assert_eq!(true_flip(TrueDeviation(0.9 * SQRT_PI)), 1);
        assert_eq!(true_flip(TrueDeviation(2.1 * SQRT_PI)), 0);
        assert_eq!(true_flip(TrueDeviation(-1.2 * SQRT_PI)), 1);
    }

    /// Midpoint-rule integral of the Gaussian density over the central bin.
    fn p_corr_quadrature(sigma: f64) -> f64 {
        let n = 200_000;
        let h = SQRT_PI / n as f64;
        (0..n)
            .map(|i| {
                let x = -HALF_SQRT_PI + (i as f64 + 0.5) * h;
                log_gaussian(x, sigma).exp() * h
            })
            .sum()
    }

    #[test]
    fn p_corr_matches_quadrature() {
        for s in [0.05, 0.3, 0.555, 0.607, 1.0] {
            let q = p_corr_quadrature(s);
            assert!((p_corr(s).unwrap() - q).abs() < 1e-9, "sigma {s}");
        }
        assert!(1.0 - p_corr(0.05).unwrap() < 1e-6);
        assert!(p_error(0.05).unwrap() < 1e-6);
    }

    #[test]
    fn p_corr_reported_rates() {
        assert!((p_error(0.555).unwrap() - 0.110).abs() < 1e-3);
        assert!((p_corr(0.555).unwrap() - 0.890).abs() < 1e-3);
    }

    #[test]
    fn p_corr_rejects_nonpositive() {
        assert!(matches!(p_corr(0.0), Err(Error::NonPositiveSigma(_))));
        assert!(p_corr(-1.0).is_err());
        assert_eq!(P_CORR_NOISELESS, 1.0);
    }

    #[test]
    fn p_corr_strictly_decreasing() {
        let grid: Vec<f64> = (0..100).map(|i| 0.05 + 1.95 * i as f64 / 99.0).collect();
        for w in grid.windows(2) {
            // p_corr rounds to 1.0 below sigma ~ 0.1; the tail keeps full precision
            assert!(p_error(w[1]).unwrap() > p_error(w[0]).unwrap());
            assert!(p_corr(w[1]).unwrap() <= p_corr(w[0]).unwrap());
        }
    }

    #[test]
    fn p_corr_matches_central_bin_mc() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 1_000_000;
        for s in [0.3, 0.555, 0.607] {
            let hits = (0..n)
                .filter(|_| sample_channel(s, &mut rng).unwrap().value().abs() < HALF_SQRT_PI)
                .count();
            let p = p_corr(s).unwrap();
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let frac = hits as f64 / n as f64;
            assert!((frac - p).abs() < 4.0 * se, "sigma {s}: {frac} vs {p}");
        }
    }

    #[test]
    fn analog_examples() {
        let s = 0.5;
        let lp = analog_likelihoods(0.0, s).unwrap();
        let mode = -(2.0 * std::f64::consts::PI * s * s).sqrt().ln();
        assert!((lp.l_match - mode).abs() < 1e-14);
        assert!((lp.l_flip - log_gaussian(SQRT_PI, s)).abs() < 1e-14);

        let lp = analog_likelihoods(HALF_SQRT_PI, s).unwrap();
        assert_eq!(lp.l_match, lp.l_flip);

        // direct density evaluation
        let dens =
            |x: f64| (-x * x / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s).sqrt();
        let lp = analog_likelihoods(0.3, s).unwrap();
        let ratio = (lp.l_match - lp.l_flip).exp();
        let expect = dens(0.3) / dens(SQRT_PI - 0.3);
        assert!((ratio / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn analog_rejects_out_of_bin() {
        assert!(matches!(
            analog_likelihoods(1.0, 0.5),
            Err(Error::DeviationOutOfRange(_))
        ));
        assert!(analog_likelihoods(0.1, 0.0).is_err());
    }

    #[test]
    fn digital_examples() {
        let lp = digital_likelihoods(0.555).unwrap();
        assert!((lp.l_match.exp() - 0.890).abs() < 1e-3);
        assert!((lp.l_flip.exp() - 0.110).abs() < 1e-3);
        let lp = digital_likelihoods(0.607).unwrap();
        assert!((lp.l_match.exp() - 0.857).abs() < 2e-3);
        assert!((lp.l_flip.exp() - 0.143).abs() < 2e-3);
        // l_flip heads to -inf as sigma -> 0
        let flips: Vec<f64> = [0.2, 0.1, 0.05, 0.03]
            .iter()
            .map(|&s| digital_likelihoods(s).unwrap().l_flip)
            .collect();
        assert!(flips.windows(2).all(|w| w[1] < w[0]));
        assert!(flips[3] < -400.0);
        assert_eq!(digital_likelihoods(0.01).unwrap().l_flip, f64::NEG_INFINITY);
    }

    proptest! {
        #[test]
        fn binning_idempotent(k in -50i64..50, d in -0.88f64..0.88) {
            let b = bin_measurement(k as f64 * SQRT_PI + d).unwrap();
            prop_assert!((b.deviation - d).abs() < 1e-12);
            prop_assert_eq!(b.bit as i64, k.rem_euclid(2));
        }

        #[test]
        fn binning_agrees_with_true_flip(q in -40.0f64..40.0) {
            let b = bin_measurement(q).unwrap();
            prop_assert_eq!(b.bit, true_flip(TrueDeviation(q)));
            prop_assert!(b.deviation.abs() <= HALF_SQRT_PI);
            prop_assert!(b.deviation > -HALF_SQRT_PI);
        }

        #[test]
        fn analog_symmetric(d in -HALF_SQRT_PI..HALF_SQRT_PI, s in 0.05f64..2.0) {
            prop_assert_eq!(analog_likelihoods(d, s).unwrap(), analog_likelihoods(-d, s).unwrap());
        }
    }
}
