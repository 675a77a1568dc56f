//! Mardia multivariate skewness and kurtosis of ICI samples.

use num_complex::Complex64;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{realize, DopplerConfig, TapProfile};
use crate::error::{Error, Result};
use crate::modem::Constellation;
use crate::montecarlo::quantile_sorted;
use crate::ofdm::{coefficient_set, ChannelRealization, CoefficientSet, OfdmConfig};
use crate::rng::{derive_seed, stream, stream_rng};

/// Largest accepted condition number of the sample covariance.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleContext {
    pub channel_label: String,
    pub symbol_index: i64,
    pub subcarrier: i32,
    pub constellation_order: u32,
}

/// Bivariate samples `[Re, Im]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub samples: Vec<[f64; 2]>,
    pub context: Option<SampleContext>,
}

impl SampleSet {
    pub fn new(samples: Vec<[f64; 2]>) -> Self {
        Self { samples, context: None }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> [f64; 2] {
        let n = self.samples.len() as f64;
        let (a, b) = self
            .samples
            .iter()
            .fold((0.0, 0.0), |(a, b), z| (a + z[0], b + z[1]));
        [a / n, b / n]
    }

    /// Maximum-likelihood covariance `[s_xx, s_xy, s_yy]` (divides by n).
    pub fn covariance(&self) -> [f64; 3] {
        let n = self.samples.len() as f64;
        let mu = self.mean();
        let mut c = [0.0; 3];
        for z in &self.samples {
            let (dx, dy) = (z[0] - mu[0], z[1] - mu[1]);
            c[0] += dx * dx;
            c[1] += dx * dy;
            c[2] += dy * dy;
        }
        c.map(|v| v / n)
    }

    /// Centered samples premultiplied by the inverse covariance, alongside
    /// the centered samples themselves.
    fn whitening(&self) -> Result<(Vec<[f64; 2]>, Vec<[f64; 2]>)> {
        if self.samples.len() < 3 {
            return Err(Error::InvalidSim(format!(
                "at least 3 samples are required, got {}",
                self.samples.len()
            )));
        }
        let [a, b, d] = self.covariance();
        let cond = condition_number(a, b, d);
        if cond > MAX_CONDITION {
            return Err(Error::SingularCovariance(cond));
        }
        let det = a * d - b * b;
        let inv = [d / det, -b / det, a / det];
        let mu = self.mean();
        let centered: Vec<[f64; 2]> = self.samples.iter().map(|z| [z[0] - mu[0], z[1] - mu[1]]).collect();
        let weighted = centered
            .iter()
            .map(|c| [inv[0] * c[0] + inv[1] * c[1], inv[1] * c[0] + inv[2] * c[1]])
            .collect();
        Ok((centered, weighted))
    }
}

/// Condition number of the symmetric matrix `[[a, b], [b, d]]`; infinite
/// unless it is positive definite.
fn condition_number(a: f64, b: f64, d: f64) -> f64 {
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (hi, lo) = (mean + radius, mean - radius);
    if !(lo > 0.0) || !hi.is_finite() {
        return f64::INFINITY;
    }
    hi / lo
}

/// `b_1 = n⁻² Σ_i Σ_j [(Z_i − Z̄)ᵀ S⁻¹ (Z_j − Z̄)]³`, full double sum.
pub fn mardia_skewness(s: &SampleSet) -> Result<f64> {
    let (centered, weighted) = s.whitening()?;
    let n = centered.len() as f64;
    let total: f64 = centered
        .par_iter()
        .map(|ci| {
            weighted
                .iter()
                .map(|wj| {
                    let g = ci[0] * wj[0] + ci[1] * wj[1];
                    g * g * g
                })
                .sum::<f64>()
        })
        .sum();
    Ok(total / (n * n))
}

/// `b_2 = n⁻¹ Σ_i [(Z_i − Z̄)ᵀ S⁻¹ (Z_i − Z̄)]²`.
pub fn mardia_kurtosis(s: &SampleSet) -> Result<f64> {
    let (centered, weighted) = s.whitening()?;
    let n = centered.len() as f64;
    let total: f64 = centered
        .iter()
        .zip(&weighted)
        .map(|(c, w)| {
            let g = c[0] * w[0] + c[1] * w[1];
            g * g
        })
        .sum();
    Ok(total / n)
}

/// `n` independent draws of `Σ_{k≠l} X_k·H_ici[k]` with uniform symbols.
pub fn sample_ici(cfg: &OfdmConfig, cs: &CoefficientSet, n: usize, seed: u64) -> Result<SampleSet> {
    let c = Constellation::new(cfg.constellation_order, cfg.symbol_variance)?;
    let bits = c.bits_per_symbol() as u32;
    let mask = (1u64 << bits) - 1;
    let per_word = 64 / bits;
    let coeffs: Vec<Complex64> = cs.ici_coeffs.iter().map(|&(_, h)| h).collect();
    let mut rng = stream_rng(seed, &[stream::SYMBOLS]);
    let samples = (0..n)
        .map(|_| {
            let mut acc = Complex64::default();
            let mut word = 0u64;
            let mut left = 0;
            for h in &coeffs {
                if left == 0 {
                    word = rng.next_u64();
                    left = per_word;
                }
                acc += c.point_for_label((word & mask) as u32) * h;
                word >>= bits;
                left -= 1;
            }
            [acc.re, acc.im]
        })
        .collect();
    Ok(SampleSet {
        samples,
        context: None,
    })
}

/// Sample dump as `re,im` CSV with a header. Floats round-trip exactly.
pub fn samples_to_csv(s: &SampleSet) -> String {
    let mut out = String::from("re,im\n");
    for z in &s.samples {
        out.push_str(&format!("{:?},{:?}\n", z[0], z[1]));
    }
    out
}

/// Binned 2D histogram over a symmetric square window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2d {
    pub half_width: f64,
    pub bins: usize,
    /// Row-major `counts[ix * bins + iy]`.
    pub counts: Vec<u64>,
    /// Samples outside the window.
    pub outside: u64,
}

/// Histogram on `[-half_width, half_width)²` with `bins × bins` cells.
pub fn histogram_2d(s: &SampleSet, bins: usize, half_width: f64) -> Result<Histogram2d> {
    if bins == 0 || !(half_width > 0.0) {
        return Err(Error::InvalidSim("histogram needs bins > 0 and a positive width".into()));
    }
    let mut counts = vec![0; bins * bins];
    let mut outside = 0;
    let scale = bins as f64 / (2.0 * half_width);
    for z in &s.samples {
        let ix = ((z[0] + half_width) * scale).floor();
        let iy = ((z[1] + half_width) * scale).floor();
        if ix < 0.0 || iy < 0.0 || ix >= bins as f64 || iy >= bins as f64 {
            outside += 1;
        } else {
            counts[ix as usize * bins + iy as usize] += 1;
        }
    }
    Ok(Histogram2d {
        half_width,
        bins,
        counts,
        outside,
    })
}

/// Where a kurtosis profile moves: across subcarriers, or across `ν_max·T`
/// at one subcarrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ProfileAxis {
    Subcarriers(Vec<i32>),
    NormalizedDoppler { subcarrier: i32, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityStudy {
    pub symbol_index: i64,
    pub orders: Vec<u32>,
    pub n_samples: usize,
    pub n_realizations: u64,
    /// Base seed of the symbol draws. Channel realization `r` uses
    /// `derive_seed(dop.seed, [r])`, independent of this.
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KurtosisRow {
    pub subcarrier: i32,
    pub normalized_doppler: f64,
    pub constellation_order: u32,
    pub realizations: u64,
    pub skewness_mean: f64,
    pub skewness_var: f64,
    pub kurtosis_mean: f64,
    pub kurtosis_var: f64,
    pub kurtosis_p05: f64,
    pub kurtosis_p95: f64,
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var)
}

fn sample_seed(study: &NormalityStudy, r: u64, l: i32, order: u32, nd: f64) -> u64 {
    derive_seed(
        study.seed,
        &[stream::SYMBOLS, r, l as i64 as u64, u64::from(order), nd.to_bits()],
    )
}

fn study_channel(cfg: &OfdmConfig, profile: &TapProfile, dop: &DopplerConfig, r: u64, nd: f64) -> ChannelRealization {
    let d = DopplerConfig {
        max_doppler: nd * cfg.subcarrier_spacing,
        ..dop.with_seed(derive_seed(dop.seed, &[r]))
    };
    realize(profile, &d, 0.0)
}

/// The exact ICI samples [`kurtosis_profile`] draws for realization `r`,
/// subcarrier `l` and normalized Doppler `nd`, with the order taken from `cfg`.
pub fn normality_samples(
    cfg: &OfdmConfig,
    profile: &TapProfile,
    dop: &DopplerConfig,
    study: &NormalityStudy,
    r: u64,
    l: i32,
    nd: f64,
) -> Result<SampleSet> {
    let chan = study_channel(cfg, profile, dop, r, nd);
    let cs = coefficient_set(cfg, &chan, study.symbol_index, l)?;
    let seed = sample_seed(study, r, l, cfg.constellation_order, nd);
    let mut s = sample_ici(cfg, &cs, study.n_samples, seed)?;
    s.context = Some(SampleContext {
        channel_label: chan.label,
        symbol_index: study.symbol_index,
        subcarrier: l,
        constellation_order: cfg.constellation_order,
    });
    Ok(s)
}

/// Statistics of Mardia skewness and kurtosis across channel realizations,
/// one row per (axis point, constellation order).
pub fn kurtosis_profile(
    cfg: &OfdmConfig,
    profile: &TapProfile,
    dop: &DopplerConfig,
    axis: &ProfileAxis,
    study: &NormalityStudy,
) -> Result<Vec<KurtosisRow>> {
    if study.orders.is_empty() || study.n_realizations == 0 {
        return Err(Error::InvalidSim("empty order list or zero realizations".into()));
    }
    // (subcarrier, ν_max·T) grid
    let points: Vec<(i32, f64)> = match axis {
        ProfileAxis::Subcarriers(ls) => {
            let nd = dop.max_doppler / cfg.subcarrier_spacing;
            ls.iter().map(|&l| (l, nd)).collect()
        }
        ProfileAxis::NormalizedDoppler { subcarrier, values } => values.iter().map(|&v| (*subcarrier, v)).collect(),
    };
    if points.is_empty() {
        return Err(Error::InvalidSim("empty profile axis".into()));
    }
    for &(l, _) in &points {
        if !cfg.contains(l) {
            return Err(Error::UnknownSubcarrier(l));
        }
    }
    let cfgs: Vec<OfdmConfig> = study.orders.iter().map(|&m| cfg.with_order(m)).collect::<Result<_>>()?;

    // stats[r][point][order] = (b1, b2)
    let stats: Vec<Result<Vec<Vec<(f64, f64)>>>> = (0..study.n_realizations)
        .into_par_iter()
        .map(|r| {
            let mut chan_cache: Option<(f64, ChannelRealization)> = None;
            points
                .iter()
                .map(|&(l, nd)| {
                    let chan = match &chan_cache {
                        Some((v, ch)) if *v == nd => ch.clone(),
                        _ => {
                            let ch = study_channel(cfg, profile, dop, r, nd);
                            chan_cache = Some((nd, ch.clone()));
                            ch
                        }
                    };
                    let cs = coefficient_set(cfg, &chan, study.symbol_index, l)?;
                    cfgs.iter()
                        .map(|c| {
                            let seed = sample_seed(study, r, l, c.constellation_order, nd);
                            let s = sample_ici(c, &cs, study.n_samples, seed)?;
                            Ok((mardia_skewness(&s)?, mardia_kurtosis(&s)?))
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    let stats: Vec<Vec<Vec<(f64, f64)>>> = stats.into_iter().collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (p, &(l, nd)) in points.iter().enumerate() {
        for (o, c) in cfgs.iter().enumerate() {
            let b1: Vec<f64> = stats.iter().map(|s| s[p][o].0).collect();
            let mut b2: Vec<f64> = stats.iter().map(|s| s[p][o].1).collect();
            let (skewness_mean, skewness_var) = mean_var(&b1);
            let (kurtosis_mean, kurtosis_var) = mean_var(&b2);
            b2.sort_by(f64::total_cmp);
            rows.push(KurtosisRow {
                subcarrier: l,
                normalized_doppler: nd,
                constellation_order: c.constellation_order,
                realizations: study.n_realizations,
                skewness_mean,
                skewness_var,
                kurtosis_mean,
                kurtosis_var,
                kurtosis_p05: quantile_sorted(&b2, 0.05),
                kurtosis_p95: quantile_sorted(&b2, 0.95),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::ici_variance;
    use crate::ofdm::{ChannelRealization, PathParams};
    use approx::assert_relative_eq;

    #[test]
    fn symmetric_four_points_have_zero_skewness() {
        let s = SampleSet::new(vec![[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]);
        assert_eq!(mardia_skewness(&s).unwrap(), 0.0);
        // Each point has Mahalanobis distance 2, so b2 = 4.
        assert_relative_eq!(mardia_kurtosis(&s).unwrap(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        let zeros = SampleSet::new(vec![[0.0, 0.0]; 10]);
        assert!(matches!(mardia_kurtosis(&zeros), Err(Error::SingularCovariance(_))));
        let line = SampleSet::new((0..10).map(|i| [f64::from(i), 2.0 * f64::from(i)]).collect());
        assert!(matches!(mardia_skewness(&line), Err(Error::SingularCovariance(_))));
        assert!(mardia_skewness(&SampleSet::new(vec![[0.0, 1.0], [1.0, 0.0]])).is_err());
    }

    #[test]
    fn condition_number_of_diagonal() {
        assert_relative_eq!(condition_number(4.0, 0.0, 1.0), 4.0);
        assert_eq!(condition_number(1.0, 1.0, 1.0), f64::INFINITY);
    }

    fn lte_cs(order: u32, chan: &ChannelRealization) -> (OfdmConfig, CoefficientSet) {
        let cfg = OfdmConfig::lte_10mhz(order).unwrap();
        let cs = coefficient_set(&cfg, chan, 0, 150).unwrap();
        (cfg, cs)
    }

    #[test]
    fn static_channel_gives_zero_ici_samples() {
        let chan = ChannelRealization::new(vec![PathParams::new(1e-6, 0.0, Complex64::new(0.3, 0.9))], "static").unwrap();
        let (cfg, cs) = lte_cs(16, &chan);
        let s = sample_ici(&cfg, &cs, 50, 1).unwrap();
        assert!(s.samples.iter().all(|z| *z == [0.0, 0.0]));
    }

    #[test]
    fn single_coefficient_gives_four_values() {
        let (cfg, mut cs) = lte_cs(4, &ChannelRealization::identity());
        for (k, c) in cs.ici_coeffs.iter_mut() {
            *c = if *k == 151 { Complex64::new(0.4, 0.1) } else { Complex64::default() };
        }
        let s = sample_ici(&cfg, &cs, 2000, 7).unwrap();
        let mut distinct: Vec<[u64; 2]> = s.samples.iter().map(|z| [z[0].to_bits(), z[1].to_bits()]).collect();
        distinct.sort_unstable();
        distinct.dedup();
        assert_eq!(distinct.len(), 4);
    }

    #[test]
    fn sample_variance_matches_ici_variance() {
        let chan = ChannelRealization::new(
            vec![
                PathParams::new(0.0, 900.0, Complex64::new(0.8, 0.0)),
                PathParams::new(1e-6, -500.0, Complex64::new(0.0, 0.6)),
            ],
            "two",
        )
        .unwrap();
        let (cfg, cs) = lte_cs(16, &chan);
        let n = 100_000;
        let s = sample_ici(&cfg, &cs, n, 3).unwrap();
        let var: f64 = s.samples.iter().map(|z| z[0] * z[0] + z[1] * z[1]).sum::<f64>() / n as f64;
        let expect = ici_variance(&cs, cfg.symbol_variance);
        // |ICI|² has relative spread below 1.5 for near-Gaussian ICI.
        assert!((var / expect - 1.0).abs() < 3.0 * 1.5 / (n as f64).sqrt(), "{var} vs {expect}");
    }

    #[test]
    fn histogram_counts_every_sample() {
        let s = SampleSet::new(vec![[0.0, 0.0], [0.99, -0.99], [-1.0, 0.5], [1.0, 0.0], [5.0, 5.0]]);
        let h = histogram_2d(&s, 4, 1.0).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>() + h.outside, 5);
        assert_eq!(h.outside, 2);
        assert_eq!(h.counts[2 * 4 + 2], 1);
        assert_eq!(h.counts[3 * 4], 1);
    }

    #[test]
    fn csv_dump_round_trips() {
        let s = SampleSet::new(vec![[0.1, -2.5e-7], [1.0 / 3.0, 4.0]]);
        let text = samples_to_csv(&s);
        let back: Vec<[f64; 2]> = text
            .lines()
            .skip(1)
            .map(|l| {
                let (a, b) = l.split_once(',').unwrap();
                [a.parse().unwrap(), b.parse().unwrap()]
            })
            .collect();
        assert_eq!(back, s.samples);
    }

    #[test]
    fn exposed_samples_are_the_study_samples() {
        let cfg = OfdmConfig::lte_10mhz(4).unwrap();
        let prof = crate::channel::builtin_profile("tux").unwrap();
        let dop = DopplerConfig::new(750.0, 8, 21).unwrap();
        let study = NormalityStudy {
            symbol_index: 1,
            orders: vec![16],
            n_samples: 300,
            n_realizations: 3,
            seed: 4,
        };
        let row = kurtosis_profile(&cfg, &prof, &dop, &ProfileAxis::Subcarriers(vec![-7]), &study).unwrap()[0];
        let c16 = cfg.with_order(16).unwrap();
        let mean = (0..3)
            .map(|r| mardia_kurtosis(&normality_samples(&c16, &prof, &dop, &study, r, -7, 0.05).unwrap()).unwrap())
            .sum::<f64>()
            / 3.0;
        assert_relative_eq!(mean, row.kurtosis_mean, max_relative = 1e-14);
    }
}
