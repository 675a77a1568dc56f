//! Frequency-domain Monte-Carlo BER engine.
//!
//! One iteration for symbol `(m, l)`: draw uniform bits for every used
//! subcarrier, Gray-map them, form
//! `Y = X_l·H + Σ_{k≠l} X_k·H_ici[k] + √(N_0/2)·(g_re + j·g_im)` with
//! `g_re, g_im ~ N(0, 1)`, equalize `Y/H` and count bit errors on `l`.
//!
//! Iterations run in fixed-size blocks. Each block owns an RNG stream derived
//! from the `SimSpec` seed and the block index, and blocks reduce by integer
//! histogram addition, so results depend neither on thread count nor on
//! scheduling.

use num_complex::Complex64;
use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{symbol_bep, LinkMetrics};
use crate::channel::{realize, DopplerConfig, TapProfile};
use crate::error::{Error, Result};
use crate::modem::Constellation;
use crate::ofdm::{coefficient_set, ChannelRealization, CoefficientSet, OfdmConfig};
use crate::rng::{derive_seed, stream, stream_rng};

const BLOCK: u64 = 2048;

pub const DEFAULT_MIN_ERROR_BITS: u64 = 10;
pub const DEFAULT_RESAMPLES: u32 = 1000;
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub cfg: OfdmConfig,
    /// `(m, l)` symbols to simulate.
    pub targets: Vec<(i64, i32)>,
    pub iterations: u64,
    pub seed: u64,
    /// Results with fewer error bits are flagged as discarded.
    pub min_error_bits: u64,
    pub bootstrap_resamples: u32,
    pub confidence: f64,
}

impl SimSpec {
    pub fn new(cfg: OfdmConfig, targets: Vec<(i64, i32)>, iterations: u64, seed: u64) -> Self {
        Self {
            cfg,
            targets,
            iterations,
            seed,
            min_error_bits: DEFAULT_MIN_ERROR_BITS,
            bootstrap_resamples: DEFAULT_RESAMPLES,
            confidence: DEFAULT_CONFIDENCE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidSim("iterations must be at least 1".into()));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidSim(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if self.bootstrap_resamples < 100 {
            return Err(Error::InvalidSim("at least 100 bootstrap resamples are required".into()));
        }
        if self.targets.is_empty() {
            return Err(Error::InvalidSim("no target symbols".into()));
        }
        for &(_, l) in &self.targets {
            if !self.cfg.contains(l) {
                return Err(Error::UnknownSubcarrier(l));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerResult {
    pub symbol_index: i64,
    pub subcarrier: i32,
    pub ber: f64,
    pub error_bits: u64,
    pub total_bits: u64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub discarded: bool,
    /// `BER / BEP` when the estimate is kept and the BEP is positive.
    pub rho: Option<f64>,
}

/// Per-iteration error-count histogram: `counts[e]` iterations had `e`
/// erroneous bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorHistogram {
    pub counts: Vec<u64>,
}

impl ErrorHistogram {
    fn new(bits: usize) -> Self {
        Self {
            counts: vec![0; bits + 1],
        }
    }

    pub fn from_counts(per_iteration: &[u32], bits_per_iteration: u32) -> Self {
        let mut h = Self::new(bits_per_iteration as usize);
        for &e in per_iteration {
            let e = (e as usize).min(bits_per_iteration as usize);
            h.counts[e] += 1;
        }
        h
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(other.counts) {
            *a += b;
        }
        self
    }

    pub fn iterations(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn error_bits(&self) -> u64 {
        self.counts.iter().enumerate().map(|(e, &c)| e as u64 * c).sum()
    }
}

/// Buffered uniform bits drawn from a 64-bit generator.
struct BitSource<R> {
    rng: R,
    word: u64,
    left: u32,
}

impl<R: RngCore> BitSource<R> {
    fn new(rng: R) -> Self {
        Self { rng, word: 0, left: 0 }
    }

    #[inline]
    fn take(&mut self, bits: u32) -> u32 {
        if self.left < bits {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        let v = (self.word & ((1u64 << bits) - 1)) as u32;
        self.word >>= bits;
        self.left -= bits;
        v
    }
}

/// Everything needed to simulate one symbol `(m, l)`.
struct SymbolLink<'a> {
    constellation: &'a Constellation,
    h: Complex64,
    ici: Vec<Complex64>,
}

impl<'a> SymbolLink<'a> {
    fn new(constellation: &'a Constellation, cs: &CoefficientSet) -> Result<Self> {
        if cs.channel_coeff.norm_sqr() == 0.0 {
            return Err(Error::ZeroChannel);
        }
        Ok(Self {
            constellation,
            h: cs.channel_coeff,
            ici: cs.ici_coeffs.iter().map(|&(_, c)| c).collect(),
        })
    }

    /// Runs `iterations` iterations, evaluating every noise level on the same
    /// symbol and noise draws. Returns one histogram per level.
    fn simulate(&self, noise_std: &[f64], iterations: u64, seed: u64, tags: &[u64]) -> Vec<ErrorHistogram> {
        let bits = self.constellation.bits_per_symbol();
        let blocks = iterations.div_ceil(BLOCK);
        let empty = || vec![ErrorHistogram::new(bits); noise_std.len()];
        (0..blocks)
            .into_par_iter()
            .map(|b| {
                let n = BLOCK.min(iterations - b * BLOCK);
                let mut block_tags = tags.to_vec();
                block_tags.extend([stream::ITERATIONS, b]);
                self.simulate_block(noise_std, n, stream_rng(seed, &block_tags))
            })
            .reduce(empty, |a, b| a.into_iter().zip(b).map(|(x, y)| x.merge(y)).collect())
    }

    fn simulate_block<R: RngCore>(&self, noise_std: &[f64], n: u64, rng: R) -> Vec<ErrorHistogram> {
        let c = self.constellation;
        let bits = c.bits_per_symbol();
        let width = bits as u32;
        let mut hist = vec![ErrorHistogram::new(bits); noise_std.len()];
        let mut src = BitSource::new(rng);
        let inv_h = 1.0 / self.h;
        for _ in 0..n {
            let sent = src.take(width);
            let mut acc = c.point_for_label(sent) * self.h;
            for coeff in &self.ici {
                acc += c.point_for_label(src.take(width)) * coeff;
            }
            let g = Complex64::new(
                src.rng.sample::<f64, _>(StandardNormal),
                src.rng.sample::<f64, _>(StandardNormal),
            );
            for (h, &s) in hist.iter_mut().zip(noise_std) {
                let y = acc + g * s;
                let decided = c.label(c.nearest_index(y * inv_h));
                h.counts[(decided ^ sent).count_ones() as usize] += 1;
            }
        }
        hist
    }
}

fn noise_std(noise_density: f64) -> f64 {
    (noise_density / 2.0).sqrt()
}

fn symbol_tags(m: i64, l: i32) -> [u64; 2] {
    [m as u64, l as i64 as u64]
}

fn summarize(
    spec: &SimSpec,
    m: i64,
    l: i32,
    hist: &ErrorHistogram,
    bits_per_symbol: u32,
    bep: Option<f64>,
    boot_tags: &[u64],
) -> BerResult {
    let total_bits = hist.iterations() * u64::from(bits_per_symbol);
    let error_bits = hist.error_bits();
    let ber = error_bits as f64 / total_bits as f64;
    let mut tags = vec![stream::BOOTSTRAP];
    tags.extend_from_slice(boot_tags);
    let (lo, hi) = bootstrap_histogram(
        hist,
        bits_per_symbol,
        spec.bootstrap_resamples,
        spec.confidence,
        derive_seed(spec.seed, &tags),
    );
    let discarded = error_bits < spec.min_error_bits;
    let rho = match bep {
        Some(p) if !discarded && p > 0.0 => Some(ber / p),
        _ => None,
    };
    BerResult {
        symbol_index: m,
        subcarrier: l,
        ber,
        error_bits,
        total_bits,
        ci_low: lo.min(ber),
        ci_high: hi.max(ber),
        discarded,
        rho,
    }
}

/// Simulates every target symbol of `spec` over `chan`.
pub fn run_ber(spec: &SimSpec, chan: &ChannelRealization) -> Result<Vec<BerResult>> {
    Ok(run_with_metrics(spec, chan, &[])?.into_iter().map(|(_, b)| b).collect())
}

/// As [`run_ber`], also returning the analytic metrics of each symbol (absent
/// when ICI and noise both vanish). `tags` separates the random streams of
/// different callers sharing a seed.
pub fn run_with_metrics(
    spec: &SimSpec,
    chan: &ChannelRealization,
    tags: &[u64],
) -> Result<Vec<(Option<LinkMetrics>, BerResult)>> {
    spec.validate()?;
    let constellation = Constellation::new(spec.cfg.constellation_order, spec.cfg.symbol_variance)?;
    let bits = spec.cfg.bits_per_symbol();
    spec.targets
        .iter()
        .map(|&(m, l)| {
            let cs = coefficient_set(&spec.cfg, chan, m, l)?;
            let link = SymbolLink::new(&constellation, &cs)?;
            let metrics = symbol_bep(&spec.cfg, &cs).ok();
            let mut t = tags.to_vec();
            t.extend(symbol_tags(m, l));
            let hist = link
                .simulate(&[noise_std(spec.cfg.noise_density)], spec.iterations, spec.seed, &t)
                .pop()
                .expect("one noise level");
            let result = summarize(spec, m, l, &hist, bits, metrics.map(|x| x.bep), &t);
            Ok((metrics, result))
        })
        .collect()
}

/// `ρ = BER / BEP`.
pub fn error_factor(ber: &BerResult, metrics: &LinkMetrics) -> Result<f64> {
    if ber.discarded {
        return Err(Error::Discarded);
    }
    if metrics.bep <= 0.0 {
        return Err(Error::ZeroBep);
    }
    Ok(ber.ber / metrics.bep)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn percentile_interval(mut stats: Vec<f64>, confidence: f64) -> (f64, f64) {
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    (quantile_sorted(&stats, tail), quantile_sorted(&stats, 1.0 - tail))
}

/// Percentile bootstrap confidence interval of the BER from iteration-level
/// error counts.
pub fn bootstrap_ci(
    per_iteration_errors: &[u32],
    bits_per_iteration: u32,
    resamples: u32,
    confidence: f64,
    seed: u64,
) -> (f64, f64) {
    let hist = ErrorHistogram::from_counts(per_iteration_errors, bits_per_iteration);
    bootstrap_histogram(&hist, bits_per_iteration, resamples, confidence, seed)
}

/// Bootstrap over a histogram of per-iteration error counts.
///
/// Resampling `n` iterations with replacement only matters through how many
/// draws land in each error-count class, which is multinomial with the
/// observed class frequencies. Each resample draws that multinomial directly
/// via conditional binomials.
pub fn bootstrap_histogram(
    hist: &ErrorHistogram,
    bits_per_iteration: u32,
    resamples: u32,
    confidence: f64,
    seed: u64,
) -> (f64, f64) {
    let n = hist.iterations();
    if n == 0 {
        return (0.0, 0.0);
    }
    let total_bits = (n * u64::from(bits_per_iteration)) as f64;
    let mut rng = stream_rng(seed, &[stream::BOOTSTRAP]);
    let stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let mut remaining_draws = n;
            let mut remaining_mass = n;
            let mut errors = 0u64;
            for (e, &c) in hist.counts.iter().enumerate() {
                if remaining_draws == 0 || remaining_mass == 0 {
                    break;
                }
                let x = if c == remaining_mass {
                    remaining_draws
                } else if c == 0 {
                    0
                } else {
                    Binomial::new(remaining_draws, c as f64 / remaining_mass as f64)
                        .expect("valid binomial")
                        .sample(&mut rng)
                };
                errors += e as u64 * x;
                remaining_draws -= x;
                remaining_mass -= c;
            }
            errors as f64 / total_bits
        })
        .collect();
    percentile_interval(stats, confidence)
}

/// Percentile bootstrap interval of the sample mean.
pub fn bootstrap_mean_ci(values: &[f64], resamples: u32, confidence: f64, seed: u64) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut rng = stream_rng(seed, &[stream::BOOTSTRAP]);
    let n = values.len();
    let stats: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    percentile_interval(stats, confidence)
}

/// One simulated symbol of one channel realization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstantRow {
    pub realization: u64,
    pub metrics: Option<LinkMetrics>,
    pub ber: BerResult,
}

/// Instantaneous BER/BEP over `n_realizations` realizations of `profile`.
/// Realization `r` is drawn with seed `derive_seed(dop.seed, [r])`.
pub fn instantaneous(
    spec: &SimSpec,
    profile: &TapProfile,
    dop: &DopplerConfig,
    n_realizations: u64,
) -> Result<Vec<InstantRow>> {
    spec.validate()?;
    let per_realization: Vec<Result<Vec<InstantRow>>> = (0..n_realizations)
        .into_par_iter()
        .map(|r| {
            let chan = realize(profile, &dop.with_seed(derive_seed(dop.seed, &[r])), 0.0);
            Ok(run_with_metrics(spec, &chan, &[r])?
                .into_iter()
                .map(|(metrics, ber)| InstantRow {
                    realization: r,
                    metrics,
                    ber,
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_realization {
        rows.extend(r?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// `E_b^TX/N_0` grid in dB, at the Doppler of the supplied config.
    EbNoDb(Vec<f64>),
    /// `ν_max·T` grid at a fixed `E_b^TX/N_0`.
    NormalizedDoppler { values: Vec<f64>, ebno_db: f64 },
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::EbNoDb(_) => "ebno_db",
            SweepAxis::NormalizedDoppler { .. } => "normalized_doppler",
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            SweepAxis::EbNoDb(v) => v,
            SweepAxis::NormalizedDoppler { values, .. } => values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub constellation_order: u32,
    pub symbol_index: i64,
    pub subcarrier: i32,
    pub mean_bep: f64,
    pub mean_ber: f64,
    /// Bootstrap interval of the mean BER over realizations.
    pub ci_low: f64,
    pub ci_high: f64,
    pub realizations: u64,
    pub error_bits: u64,
    pub total_bits: u64,
}

struct PointSample {
    bep: f64,
    error_bits: u64,
    total_bits: u64,
}

/// Average BEP and BER over channel realizations along one sweep axis.
///
/// On the `E_b/N_0` axis every grid point reuses the same symbol and noise
/// draws of a realization (common random numbers); on the Doppler axis every
/// grid point reuses the same realization seeds.
pub fn average_sweep(
    spec: &SimSpec,
    profile: &TapProfile,
    dop: &DopplerConfig,
    n_realizations: u64,
    sweep: &SweepAxis,
) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grid = sweep.values();
    if grid.is_empty() {
        return Err(Error::InvalidSim("sweep grid is empty".into()));
    }
    if n_realizations == 0 {
        return Err(Error::InvalidSim("at least one realization is required".into()));
    }
    let constellation = Constellation::new(spec.cfg.constellation_order, spec.cfg.symbol_variance)?;
    let bits = spec.cfg.bits_per_symbol();

    let cfgs: Vec<OfdmConfig> = match sweep {
        SweepAxis::EbNoDb(v) => v.iter().map(|&e| spec.cfg.with_ebno_db(e)).collect::<Result<_>>()?,
        SweepAxis::NormalizedDoppler { ebno_db, .. } => {
            vec![spec.cfg.with_ebno_db(*ebno_db)?; grid.len()]
        }
    };

    // samples[r][target][grid]
    let samples: Vec<Result<Vec<Vec<PointSample>>>> = (0..n_realizations)
        .into_par_iter()
        .map(|r| {
            let seed_r = derive_seed(dop.seed, &[r]);
            let mut per_target = Vec::with_capacity(spec.targets.len());
            for &(m, l) in &spec.targets {
                let mut tags = vec![r];
                tags.extend(symbol_tags(m, l));
                let points = match sweep {
                    SweepAxis::EbNoDb(_) => {
                        let chan = realize(profile, &dop.with_seed(seed_r), 0.0);
                        let cs = coefficient_set(&spec.cfg, &chan, m, l)?;
                        let link = SymbolLink::new(&constellation, &cs)?;
                        let stds: Vec<f64> = cfgs.iter().map(|c| noise_std(c.noise_density)).collect();
                        let hists = link.simulate(&stds, spec.iterations, spec.seed, &tags);
                        cfgs.iter()
                            .zip(hists)
                            .map(|(c, h)| {
                                Ok(PointSample {
                                    bep: symbol_bep(c, &cs)?.bep,
                                    error_bits: h.error_bits(),
                                    total_bits: h.iterations() * u64::from(bits),
                                })
                            })
                            .collect::<Result<Vec<_>>>()?
                    }
                    SweepAxis::NormalizedDoppler { values, .. } => values
                        .iter()
                        .zip(&cfgs)
                        .map(|(&nd, c)| {
                            let d = DopplerConfig {
                                max_doppler: nd * c.subcarrier_spacing,
                                ..dop.with_seed(seed_r)
                            };
                            let chan = realize(profile, &d, 0.0);
                            let cs = coefficient_set(c, &chan, m, l)?;
                            let link = SymbolLink::new(&constellation, &cs)?;
                            let h = link
                                .simulate(&[noise_std(c.noise_density)], spec.iterations, spec.seed, &tags)
                                .pop()
                                .expect("one noise level");
                            Ok(PointSample {
                                bep: symbol_bep(c, &cs)?.bep,
                                error_bits: h.error_bits(),
                                total_bits: h.iterations() * u64::from(bits),
                            })
                        })
                        .collect::<Result<Vec<_>>>()?,
                };
                per_target.push(points);
            }
            Ok(per_target)
        })
        .collect();
    let samples: Vec<Vec<Vec<PointSample>>> = samples.into_iter().collect::<Result<_>>()?;

    let n = n_realizations as f64;
    let mut rows = Vec::with_capacity(spec.targets.len() * grid.len());
    for (t, &(m, l)) in spec.targets.iter().enumerate() {
        for (g, &value) in grid.iter().enumerate() {
            let pts: Vec<&PointSample> = samples.iter().map(|s| &s[t][g]).collect();
            let bers: Vec<f64> = pts.iter().map(|p| p.error_bits as f64 / p.total_bits as f64).collect();
            let mean_ber = bers.iter().sum::<f64>() / n;
            let (lo, hi) = bootstrap_mean_ci(
                &bers,
                spec.bootstrap_resamples,
                spec.confidence,
                derive_seed(spec.seed, &[stream::BOOTSTRAP, m as u64, l as i64 as u64, g as u64]),
            );
            rows.push(SweepRow {
                axis_value: value,
                constellation_order: spec.cfg.constellation_order,
                symbol_index: m,
                subcarrier: l,
                mean_bep: pts.iter().map(|p| p.bep).sum::<f64>() / n,
                mean_ber,
                ci_low: lo.min(mean_ber),
                ci_high: hi.max(mean_ber),
                realizations: n_realizations,
                error_bits: pts.iter().map(|p| p.error_bits).sum(),
                total_bits: pts.iter().map(|p| p.total_bits).sum(),
            });
        }
    }
    Ok(rows)
}
