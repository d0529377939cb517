//! Monte Carlo failure-probability estimation, sweeps and threshold location.
//!
//! Every trial draws from its own ChaCha8 stream keyed by the master seed, a
//! content hash of the point being estimated, and the trial index. Trials are
//! grouped into fixed-size blocks that run in parallel; since each block's
//! failure count is a pure function of its key, results do not depend on
//! scheduling or on the number of threads.

use std::collections::{BTreeMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoder::{ConcatLevel, Quadrature};
use crate::error::{Error, Result};
use crate::gkp::NoiseParams;
use crate::protocols::{run_trial, ProtocolConfig, ProtocolKind};

/// Trials per parallel work unit.
pub const TRIAL_BLOCK: u64 = 1024;
/// Blocks evaluated between early-stopping checks.
const BLOCKS_PER_BATCH: u64 = 64;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Everything about an experiment except level and noise strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentTemplate {
    pub kind: ProtocolKind,
    pub analog: bool,
    pub cycles: u32,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default)]
    pub sigma_ancilla_q: f64,
    #[serde(default)]
    pub sigma_ancilla_p: f64,
}

impl ExperimentTemplate {
    pub fn new(kind: ProtocolKind, analog: bool, cycles: u32) -> Self {
        Self {
            kind,
            analog,
            cycles,
            quadrature: Quadrature::Q,
            sigma_ancilla_q: 0.0,
            sigma_ancilla_p: 0.0,
        }
    }

    /// Protocol configuration with the total noise split evenly over cycles.
    pub fn protocol(&self, level: u32, sigma_total: f64) -> Result<ProtocolConfig> {
        if !(sigma_total.is_finite() && sigma_total >= 0.0) {
            return Err(Error::NegativeSigma(sigma_total));
        }
        if self.cycles == 0 {
            return Err(Error::InvalidConfig("cycles must be at least 1".into()));
        }
        let cfg = ProtocolConfig {
            kind: self.kind,
            analog: self.analog,
            level: ConcatLevel::new(level)?,
            cycles: self.cycles,
            noise: NoiseParams::new(
                sigma_total / self.cycles as f64,
                self.sigma_ancilla_q,
                self.sigma_ancilla_p,
            )?,
            quadrature: self.quadrature,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One point of a sweep: a template at a level and total noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    pub template: ExperimentTemplate,
    pub level: u32,
    /// Sum over cycles of the per-cycle standard deviation.
    pub sigma_total: f64,
}

impl PointConfig {
    /// Stable 64-bit key of the point's content.
    pub fn key(&self) -> u64 {
        let t = &self.template;
        let words = [
            t.kind as u64,
            t.analog as u64,
            t.cycles as u64,
            t.quadrature as u64,
            t.sigma_ancilla_q.to_bits(),
            t.sigma_ancilla_p.to_bits(),
            self.level as u64,
            self.sigma_total.to_bits(),
        ];
        words
            .iter()
            .fold(0x243f_6a88_85a3_08d3, |h, &w| splitmix64(h ^ w))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub template: ExperimentTemplate,
    /// Ascending total-noise grid.
    pub sigma_total_grid: Vec<f64>,
    pub levels: Vec<u32>,
    pub trials_per_point: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub max_failures_stop: Option<u64>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(Error::InvalidConfig(
                "trials per point must be at least 1".into(),
            ));
        }
        if self.levels.is_empty() || self.sigma_total_grid.is_empty() {
            return Err(Error::InvalidConfig("empty grid or level list".into()));
        }
        if self
            .sigma_total_grid
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidConfig(
                "sigma grid must be strictly ascending".into(),
            ));
        }
        for p in self.points() {
            p.template.protocol(p.level, p.sigma_total)?;
        }
        Ok(())
    }

    /// Points in sweep order: levels outer, noise inner.
    pub fn points(&self) -> Vec<PointConfig> {
        self.levels
            .iter()
            .flat_map(|&level| {
                self.sigma_total_grid
                    .iter()
                    .map(move |&sigma_total| PointConfig {
                        template: self.template,
                        level,
                        sigma_total,
                    })
            })
            .collect()
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEstimate {
    pub protocol: ProtocolKind,
    pub analog: bool,
    pub cycles: u32,
    pub level: u32,
    pub sigma_total: f64,
    pub trials: u64,
    pub failures: u64,
    pub p_fail: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub master_seed: u64,
}

impl PointEstimate {
    fn resume_key(&self) -> (ProtocolKind, bool, u32, u32, u64, u64) {
        (
            self.protocol,
            self.analog,
            self.cycles,
            self.level,
            self.sigma_total.to_bits(),
            self.master_seed,
        )
    }

    /// Binomial standard error of `p_fail`.
    pub fn std_error(&self) -> f64 {
        (self.p_fail * (1.0 - self.p_fail) / self.trials as f64).sqrt()
    }
}

pub const CSV_HEADER: &str =
    "protocol,analog,cycles,level,sigma_total,trials,failures,p_fail,ci_low,ci_high,master_seed";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The random stream of one trial.
pub fn trial_rng(master_seed: u64, point_key: u64, trial: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut h = splitmix64(master_seed);
    for chunk in seed.chunks_exact_mut(8) {
        h = splitmix64(h ^ point_key);
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    rng.set_stream(trial);
    rng
}

/// Wilson score interval at 95%.
pub fn wilson_interval(failures: u64, trials: u64) -> (f64, f64) {
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).clamp(0.0, p), (center + half).clamp(p, 1.0))
}

fn count_block(
    cfg: &ProtocolConfig,
    master_seed: u64,
    key: u64,
    start: u64,
    end: u64,
) -> Result<u64> {
    let mut failures = 0;
    for trial in start..end {
        let mut rng = trial_rng(master_seed, key, trial);
        failures += run_trial(cfg, &mut rng)?.failed as u64;
    }
    Ok(failures)
}

/// Estimates the failure probability of one point.
///
/// With `max_failures_stop`, trials stop at the end of the first block whose
/// cumulative failure count reaches the limit, so the trial count is still
/// independent of scheduling.
pub fn estimate_point_with_stop(
    point: &PointConfig,
    trials: u64,
    master_seed: u64,
    max_failures_stop: Option<u64>,
) -> Result<PointEstimate> {
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let cfg = point.template.protocol(point.level, point.sigma_total)?;
    let key = point.key();
    let n_blocks = trials.div_ceil(TRIAL_BLOCK);
    let batch = if max_failures_stop.is_some() {
        BLOCKS_PER_BATCH
    } else {
        n_blocks
    };
    let (mut done, mut failures) = (0u64, 0u64);
    let mut next_block = 0;
    'outer: while next_block < n_blocks {
        let last = (next_block + batch).min(n_blocks);
        let counts: Vec<(u64, u64)> = (next_block..last)
            .into_par_iter()
            .map(|b| {
                let start = b * TRIAL_BLOCK;
                let end = (start + TRIAL_BLOCK).min(trials);
                count_block(&cfg, master_seed, key, start, end).map(|f| (end - start, f))
            })
            .collect::<Result<_>>()?;
        for (n, f) in counts {
            done += n;
            failures += f;
            if max_failures_stop.is_some_and(|m| failures >= m) {
                break 'outer;
            }
        }
        next_block = last;
    }
    let (ci_low, ci_high) = wilson_interval(failures, done);
    Ok(PointEstimate {
        protocol: point.template.kind,
        analog: point.template.analog,
        cycles: point.template.cycles,
        level: point.level,
        sigma_total: point.sigma_total,
        trials: done,
        failures,
        p_fail: failures as f64 / done as f64,
        ci_low,
        ci_high,
        master_seed,
    })
}

pub fn estimate_point(point: &PointConfig, trials: u64, master_seed: u64) -> Result<PointEstimate> {
    estimate_point_with_stop(point, trials, master_seed, None)
}

/// Destination for sweep results.
pub trait PointSink {
    /// Points already persisted by an earlier run.
    fn existing(&mut self) -> Result<Vec<PointEstimate>>;
    fn record(&mut self, point: &PointEstimate) -> Result<()>;
}

#[derive(Debug, Default)]
pub struct MemorySink {
    pub rows: Vec<PointEstimate>,
}

impl PointSink for MemorySink {
    fn existing(&mut self) -> Result<Vec<PointEstimate>> {
        Ok(self.rows.clone())
    }

    fn record(&mut self, point: &PointEstimate) -> Result<()> {
        self.rows.push(point.clone());
        Ok(())
    }
}

/// Appends rows to a CSV file, flushing after each one.
#[derive(Debug)]
pub struct CsvSink {
    path: PathBuf,
    file: Option<File>,
}

impl CsvSink {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            file: None,
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl PointSink for CsvSink {
    fn existing(&mut self) -> Result<Vec<PointEstimate>> {
        if !self.path.exists() {
            return Ok(Vec::new());
        }
        read_results_csv(&self.path)
    }

    fn record(&mut self, point: &PointEstimate) -> Result<()> {
        if self.file.is_none() {
            let fresh = !self.path.exists() || std::fs::metadata(&self.path)?.len() == 0;
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&self.path)?;
            if fresh {
                writeln!(f, "{CSV_HEADER}")?;
            }
            self.file = Some(f);
        }
        let f = self.file.as_mut().expect("opened above");
        f.write_all(format_row(point).as_bytes())?;
        f.flush()?;
        Ok(())
    }
}

/// One CSV line, newline included. Floats use the shortest round-trip form.
pub fn format_row(p: &PointEstimate) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        p.protocol,
        p.analog,
        p.cycles,
        p.level,
        p.sigma_total,
        p.trials,
        p.failures,
        p.p_fail,
        p.ci_low,
        p.ci_high,
        p.master_seed
    )
}

pub fn write_results_csv<W: Write>(rows: &[PointEstimate], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        out.write_all(format_row(r).as_bytes())?;
    }
    Ok(())
}

/// Parses a results CSV, reporting the 1-based line of the first bad row.
pub fn parse_results_csv<R: std::io::Read>(input: R) -> Result<Vec<PointEstimate>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::MalformedRow {
            line: 1,
            msg: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::MalformedRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: PointEstimate =
            rec.deserialize(Some(&headers))
                .map_err(|e| Error::MalformedRow {
                    line,
                    msg: e.to_string(),
                })?;
        if row.failures > row.trials
            || row.trials == 0
            || row.sigma_total.is_nan()
            || row.sigma_total < 0.0
        {
            return Err(Error::MalformedRow {
                line,
                msg: "inconsistent counts".into(),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_results_csv(path: &Path) -> Result<Vec<PointEstimate>> {
    parse_results_csv(File::open(path)?)
}

/// Runs every point of the sweep not already present in `sink`, recording
/// each as it completes. Returns all rows in sweep order.
pub fn sweep(cfg: &SweepConfig, sink: &mut dyn PointSink) -> Result<Vec<PointEstimate>> {
    cfg.validate()?;
    let existing = sink.existing()?;
    let done: HashSet<_> = existing.iter().map(PointEstimate::resume_key).collect();
    let mut by_key: BTreeMap<_, PointEstimate> =
        existing.into_iter().map(|p| (p.resume_key(), p)).collect();
    let mut out = Vec::new();
    for point in cfg.points() {
        let key = (
            point.template.kind,
            point.template.analog,
            point.template.cycles,
            point.level,
            point.sigma_total.to_bits(),
            cfg.master_seed,
        );
        if done.contains(&key) {
            out.push(by_key.remove(&key).expect("present"));
            continue;
        }
        let est = estimate_point_with_stop(
            &point,
            cfg.trials_per_point,
            cfg.master_seed,
            cfg.max_failures_stop,
        )?;
        sink.record(&est)?;
        out.push(est);
    }
    Ok(out)
}

/// Where two consecutive levels' failure curves cross.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub level_a: u32,
    pub level_b: u32,
    pub sigma_cross: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub sigma_star: f64,
    pub crossings: Vec<Crossing>,
    pub spread: f64,
}

/// Roots of `ln p_a - ln p_b` by linear interpolation between shared grid
/// points where both estimates are nonzero.
fn crossings_between(a: &[&PointEstimate], b: &[&PointEstimate]) -> Vec<f64> {
    let lookup: BTreeMap<u64, f64> = b
        .iter()
        .filter(|p| p.failures > 0)
        .map(|p| (p.sigma_total.to_bits(), p.p_fail))
        .collect();
    let mut diffs: Vec<(f64, f64)> = a
        .iter()
        .filter(|p| p.failures > 0)
        .filter_map(|p| {
            lookup
                .get(&p.sigma_total.to_bits())
                .map(|&pb| (p.sigma_total, p.p_fail.ln() - pb.ln()))
        })
        .collect();
    diffs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut roots = Vec::new();
    for w in diffs.windows(2) {
        let ((s0, d0), (s1, d1)) = (w[0], w[1]);
        if d0 == 0.0 {
            roots.push(s0);
        } else if d0.signum() != d1.signum() && d1 != 0.0 {
            roots.push(s0 + (s1 - s0) * d0 / (d0 - d1));
        }
    }
    if let Some(&(s, d)) = diffs.last() {
        if d == 0.0 {
            roots.push(s);
        }
    }
    roots
}

/// Locates the threshold from crossings of consecutive levels' curves.
///
/// All estimates must share protocol, analog flag and cycle count. When noise
/// makes a pair cross more than once, its crossing is the mean of the roots.
pub fn find_threshold(estimates: &[PointEstimate]) -> Result<ThresholdEstimate> {
    let Some(first) = estimates.first() else {
        return Err(Error::NoCrossing("no estimates".into()));
    };
    if estimates
        .iter()
        .any(|e| (e.protocol, e.analog, e.cycles) != (first.protocol, first.analog, first.cycles))
    {
        return Err(Error::InvalidConfig(
            "threshold estimation needs a single protocol, analog flag and cycle count".into(),
        ));
    }
    let mut by_level: BTreeMap<u32, Vec<&PointEstimate>> = BTreeMap::new();
    for e in estimates {
        by_level.entry(e.level).or_default().push(e);
    }
    if by_level.len() < 2 {
        return Err(Error::NoCrossing(
            "need at least two concatenation levels".into(),
        ));
    }
    let levels: Vec<u32> = by_level.keys().copied().collect();
    let mut crossings = Vec::new();
    for w in levels.windows(2) {
        let roots = crossings_between(&by_level[&w[0]], &by_level[&w[1]]);
        if roots.is_empty() {
            return Err(Error::NoCrossing(format!(
                "levels {} and {} do not cross",
                w[0], w[1]
            )));
        }
        crossings.push(Crossing {
            level_a: w[0],
            level_b: w[1],
            sigma_cross: roots.iter().sum::<f64>() / roots.len() as f64,
        });
    }
    let xs: Vec<f64> = crossings.iter().map(|c| c.sigma_cross).collect();
    let sigma_star = xs.iter().sum::<f64>() / xs.len() as f64;
    let spread =
        xs.iter().cloned().fold(f64::MIN, f64::max) - xs.iter().cloned().fold(f64::MAX, f64::min);
    Ok(ThresholdEstimate {
        sigma_star,
        crossings,
        spread,
    })
}

/// Run manifest written next to a results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Sweep parameters; `template.quadrature` is that of the first file.
    pub config: SweepConfig,
    #[serde(default)]
    pub quadratures: Vec<Quadrature>,
    #[serde(default)]
    pub output_dir: String,
    /// Result files written, relative to `output_dir`.
    #[serde(default)]
    pub files: Vec<String>,
    pub software_version: String,
    pub started_at: String,
    pub finished_at: String,
    pub wall_seconds: f64,
    pub points: usize,
}
