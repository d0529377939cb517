//! End-to-end QEC trials.
//!
//! * Conventional: every cycle is a teleportation-based logical QEC. Each
//!   physical qubit picks up a channel displacement, the Bell measurement
//!   bins it, the block is decoded, and the data moves to a fresh Bell pair
//!   with zero deviation. Logical failures of successive cycles compose by
//!   XOR.
//! * Tracking: cycles `1..n-1` are single-qubit QECs whose measured
//!   deviations are recorded; only cycle `n` is a logical QEC. Each physical
//!   qubit's records are fused into a joint flip-parity likelihood before the
//!   one and only decode.
//!
//! One quadrature is decoded per trial; the transmitted codeword is all
//! zeros, so a trial fails when the decoded logical bit is 1.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::decoder::{decode, ConcatLevel, Quadrature};
use crate::error::{Error, Result};
use crate::gkp::{
    analog_unchecked, bin_measurement, digital_likelihoods, sample_channel, true_flip,
    LikelihoodPair, NoiseParams, TrueDeviation, HALF_SQRT_PI,
};
use crate::logspace::log_add;
use crate::single_qec::{sqec_cycle, QubitTrack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Conventional,
    Tracking,
}

impl ProtocolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolKind::Conventional => "conventional",
            ProtocolKind::Tracking => "tracking",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conventional" => Ok(ProtocolKind::Conventional),
            "tracking" => Ok(ProtocolKind::Tracking),
            other => Err(Error::InvalidConfig(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub analog: bool,
    pub level: ConcatLevel,
    /// Number of QEC cycles `n`.
    pub cycles: u32,
    /// `sigma_channel` is the per-cycle standard deviation.
    pub noise: NoiseParams,
    pub quadrature: Quadrature,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        match self.kind {
            ProtocolKind::Conventional if self.cycles < 1 => Err(Error::InvalidConfig(
                "conventional protocol needs at least one cycle".into(),
            )),
            ProtocolKind::Tracking if self.cycles < 2 => Err(Error::InvalidConfig(
                "tracking protocol needs at least two cycles".into(),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub failed: bool,
    pub decoded_bit: u8,
    pub true_bit: u8,
}

pub fn score_trial(decoded: u8, truth: u8) -> TrialOutcome {
    TrialOutcome {
        failed: decoded != truth,
        decoded_bit: decoded,
        true_bit: truth,
    }
}

/// Per-cycle leaf likelihood model. A zero sigma means no error can have
/// happened.
#[derive(Debug, Clone, Copy)]
struct CycleModel {
    sigma: f64,
    analog: bool,
    digital: LikelihoodPair,
}

impl CycleModel {
    fn new(sigma: f64, analog: bool) -> Self {
        let digital = if sigma == 0.0 {
            LikelihoodPair::new(0.0, f64::NEG_INFINITY)
        } else {
            digital_likelihoods(sigma).expect("positive sigma")
        };
        Self {
            sigma,
            analog,
            digital,
        }
    }

    #[inline]
    fn pair(&self, deviation: f64) -> LikelihoodPair {
        if self.analog && self.sigma > 0.0 {
            analog_unchecked(deviation, self.sigma)
        } else {
            self.digital
        }
    }
}

/// Flip-parity convolution of two independent cycles' pairs.
#[inline]
fn combine(a: LikelihoodPair, b: LikelihoodPair) -> LikelihoodPair {
    LikelihoodPair {
        l_match: log_add(a.l_match + b.l_match, a.l_flip + b.l_flip),
        l_flip: log_add(a.l_match + b.l_flip, a.l_flip + b.l_match),
    }
}

/// Joint likelihoods that a qubit's flips over all recorded cycles have even
/// (`l_match`) or odd (`l_flip`) parity, from each cycle's binned deviation.
pub fn joint_likelihood(deviations: &[f64], sigma: f64, analog: bool) -> Result<LikelihoodPair> {
    let records: Vec<(f64, f64)> = deviations.iter().map(|&d| (d, sigma)).collect();
    joint_likelihood_with_sigmas(&records, analog)
}

/// As [`joint_likelihood`] with a separate standard deviation per record.
pub fn joint_likelihood_with_sigmas(
    records: &[(f64, f64)],
    analog: bool,
) -> Result<LikelihoodPair> {
    let Some(&(d0, s0)) = records.first() else {
        return Err(Error::EmptyRecords);
    };
    for &(d, s) in records {
        if d.is_nan() || d.abs() > HALF_SQRT_PI {
            return Err(Error::DeviationOutOfRange(d));
        }
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::NegativeSigma(s));
        }
    }
    let first = CycleModel::new(s0, analog).pair(d0);
    Ok(records[1..].iter().fold(first, |acc, &(d, s)| {
        combine(acc, CycleModel::new(s, analog).pair(d))
    }))
}

/// Standard deviation of the value read out at tracked cycle `k` (1-based),
/// where cycle `cycles` is the final Bell measurement. Ancilla noise enters
/// through the CNOT back-action and the residual left by the previous
/// correction.
pub fn record_sigma(noise: &NoiseParams, quadrature: Quadrature, k: u32, cycles: u32) -> f64 {
    let c2 = noise.sigma_channel * noise.sigma_channel;
    let (aq, ap) = (
        noise.sigma_ancilla_q * noise.sigma_ancilla_q,
        noise.sigma_ancilla_p * noise.sigma_ancilla_p,
    );
    let later = (k > 1) as u8 as f64;
    let var = match (quadrature, k == cycles) {
        (Quadrature::Q, false) => c2 + 2.0 * aq + later * aq,
        (Quadrature::Q, true) => c2 + later * aq,
        (Quadrature::P, false) => c2 + ap + later * 2.0 * ap,
        (Quadrature::P, true) => c2 + later * 2.0 * ap,
    };
    var.sqrt()
}

fn check_kind(cfg: &ProtocolConfig, kind: ProtocolKind) -> Result<()> {
    cfg.validate()?;
    if cfg.kind != kind {
        return Err(Error::InvalidConfig(format!(
            "expected a {kind} configuration, got {}",
            cfg.kind
        )));
    }
    Ok(())
}

/// Runs one conventional trial of `cfg.cycles` independent logical QECs.
pub fn run_conventional<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    rng: &mut R,
) -> Result<TrialOutcome> {
    check_kind(cfg, ProtocolKind::Conventional)?;
    let n = cfg.level.block_size();
    let sigma = cfg.noise.sigma_channel;
    let mut bits = vec![0u8; n];
    let mut lps = vec![LikelihoodPair::new(0.0, 0.0); n];
    let model = CycleModel::new(sigma, cfg.analog);
    let mut parity = 0u8;
    for _ in 0..cfg.cycles {
        for (b, lp) in bits.iter_mut().zip(lps.iter_mut()) {
            let delta = sample_channel(sigma, rng)?;
            let out = bin_measurement(delta.0)?;
            *b = out.bit;
            *lp = model.pair(out.deviation);
        }
        parity ^= decode(cfg.level, cfg.quadrature, &bits, &lps, rng)?.logical_bit;
    }
    Ok(score_trial(parity, 0))
}

/// Runs one tracking trial: `cycles - 1` tracked single-qubit QECs followed
/// by a single logical QEC that decodes with the fused records.
pub fn run_tracking<R: Rng + ?Sized>(cfg: &ProtocolConfig, rng: &mut R) -> Result<TrialOutcome> {
    check_kind(cfg, ProtocolKind::Tracking)?;
    let n = cfg.level.block_size();
    let cycles = cfg.cycles;
    let models: Vec<CycleModel> = (1..=cycles)
        .map(|k| {
            CycleModel::new(
                record_sigma(&cfg.noise, cfg.quadrature, k, cycles),
                cfg.analog,
            )
        })
        .collect();
    let mut bits = vec![0u8; n];
    let mut lps = Vec::with_capacity(n);
    for b in bits.iter_mut() {
        let mut joint: Option<LikelihoodPair> = None;
        let mut fold = |lp: LikelihoodPair| {
            joint = Some(match joint {
                None => lp,
                Some(acc) => combine(acc, lp),
            })
        };
        let mut track = QubitTrack::default();
        for k in 1..cycles {
            track.apply_channel(cfg.noise.sigma_channel, rng);
            let (t, rec) = sqec_cycle(track, &cfg.noise, k, rng);
            track = t;
            let d = match cfg.quadrature {
                Quadrature::Q => rec.meas_dev_q,
                Quadrature::P => rec.meas_dev_p,
            };
            fold(models[k as usize - 1].pair(d));
        }
        track.apply_channel(cfg.noise.sigma_channel, rng);
        let (dev, flips) = match cfg.quadrature {
            Quadrature::Q => (track.dev_q, track.flips_q),
            Quadrature::P => (track.dev_p, track.flips_p),
        };
        let out = bin_measurement(dev.0)?;
        *b = out.bit ^ flips;
        fold(models[cycles as usize - 1].pair(out.deviation));
        lps.push(joint.expect("at least one record"));
    }
    let decoded = decode(cfg.level, cfg.quadrature, &bits, &lps, rng)?;
    Ok(score_trial(decoded.logical_bit, 0))
}

/// Dispatches on `cfg.kind`.
pub fn run_trial<R: Rng + ?Sized>(cfg: &ProtocolConfig, rng: &mut R) -> Result<TrialOutcome> {
    match cfg.kind {
        ProtocolKind::Conventional => run_conventional(cfg, rng),
        ProtocolKind::Tracking => run_tracking(cfg, rng),
    }
}

/// Hidden flip parity a tracked qubit accumulates over per-cycle channel
/// displacements with perfect ancillas.
pub fn tracked_flip_parity(deltas: &[f64]) -> u8 {
    deltas
        .iter()
        .fold(0, |acc, &d| acc ^ true_flip(TrueDeviation(d)))
}
