//! Closed-form channel and ICI coefficients of an OFDM link over a
//! deterministic tapped-delay-line channel.
//!
//! For a channel `h(t, τ) = Σ α_i e^{j2πν_i t} δ(τ − τ_i)` with every delay
//! inside the cyclic prefix, the demodulated symbol on subcarrier `l` of OFDM
//! symbol `m` is
//!
//! ```text
//! Y[m,l] = X[m,l]·H[m,l] + Σ_{k≠l} X[m,k]·H_ici[m,l,k] + noise
//! H[m,l]       = Σ_i α_i e^{−j2πlτ_i/T} e^{j2πν_i t_m} D(ν_i T)
//! H_ici[m,l,k] = Σ_i α_i e^{−j2πkτ_i/T} e^{j2πν_i t_m} D((k−l) + ν_i T)
//! ```
//!
//! where `D(x) = (e^{j2πx} − 1)/(j2πx)` is the normalized Dirichlet-type
//! kernel and `t_m = m·(T + T_cp)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this |2π·fT| the kernel switches to its second-order series.
const SERIES_THRESHOLD: f64 = 1e-8;

/// Static OFDM link parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OfdmConfig {
    /// Subcarrier spacing `1/T` in Hz.
    pub subcarrier_spacing: f64,
    /// Cyclic prefix length in seconds.
    pub cp_length: f64,
    /// Used subcarrier indices, ascending.
    pub used_subcarriers: Vec<i32>,
    /// Square QAM order `M`.
    pub constellation_order: u32,
    /// Average transmit symbol energy `σ_x²`.
    pub symbol_variance: f64,
    /// Noise power spectral density `N_0`.
    pub noise_density: f64,
}

/// Returns `log2(sqrt(M))` when `M` is a square of a power of two (M ≥ 4).
pub fn bits_per_axis(order: u32) -> Option<u32> {
    if order < 4 || !order.is_power_of_two() {
        return None;
    }
    let bits = order.trailing_zeros();
    (bits % 2 == 0).then_some(bits / 2)
}

impl OfdmConfig {
    pub fn new(
        subcarrier_spacing: f64,
        cp_length: f64,
        mut used_subcarriers: Vec<i32>,
        constellation_order: u32,
        symbol_variance: f64,
        noise_density: f64,
    ) -> Result<Self> {
        if !(subcarrier_spacing.is_finite() && subcarrier_spacing > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "subcarrier spacing must be positive, got {subcarrier_spacing}"
            )));
        }
        if !(cp_length.is_finite() && cp_length >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "cyclic prefix length must be non-negative, got {cp_length}"
            )));
        }
        if used_subcarriers.is_empty() {
            return Err(Error::InvalidConfig("used subcarrier set is empty".into()));
        }
        used_subcarriers.sort_unstable();
        if let Some(w) = used_subcarriers.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidConfig(format!(
                "duplicate subcarrier {}",
                w[0]
            )));
        }
        if bits_per_axis(constellation_order).is_none() {
            return Err(Error::InvalidOrder(constellation_order));
        }
        if !(symbol_variance.is_finite() && symbol_variance > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "symbol variance must be positive, got {symbol_variance}"
            )));
        }
        if !(noise_density.is_finite() && noise_density >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise density must be non-negative, got {noise_density}"
            )));
        }
        Ok(Self {
            subcarrier_spacing,
            cp_length,
            used_subcarriers,
            constellation_order,
            symbol_variance,
            noise_density,
        })
    }

    /// LTE 10 MHz downlink numerology: 15 kHz spacing, normal CP of
    /// 72 samples at 15.36 MHz, subcarriers ±1..±300 (DC unused).
    pub fn lte_10mhz(constellation_order: u32) -> Result<Self> {
        Self::new(
            15_000.0,
            72.0 / 15.36e6,
            lte_subcarriers(300),
            constellation_order,
            1.0,
            0.0,
        )
    }

    /// Useful symbol duration `T`.
    pub fn symbol_period(&self) -> f64 {
        1.0 / self.subcarrier_spacing
    }

    /// Start time `t_m = m·(T + T_cp)` of OFDM symbol `m`, excluding its CP.
    pub fn symbol_start(&self, m: i64) -> f64 {
        m as f64 * (self.symbol_period() + self.cp_length)
    }

    /// Spectral efficiency factor `T/(T + T_cp)`.
    pub fn cp_efficiency(&self) -> f64 {
        let t = self.symbol_period();
        t / (t + self.cp_length)
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.constellation_order.trailing_zeros()
    }

    /// Transmit energy per bit `σ_x²/log2(M)`.
    pub fn energy_per_bit(&self) -> f64 {
        self.symbol_variance / f64::from(self.bits_per_symbol())
    }

    pub fn position(&self, subcarrier: i32) -> Option<usize> {
        self.used_subcarriers.binary_search(&subcarrier).ok()
    }

    pub fn contains(&self, subcarrier: i32) -> bool {
        self.position(subcarrier).is_some()
    }

    pub fn with_order(&self, constellation_order: u32) -> Result<Self> {
        if bits_per_axis(constellation_order).is_none() {
            return Err(Error::InvalidOrder(constellation_order));
        }
        Ok(Self {
            constellation_order,
            ..self.clone()
        })
    }

    pub fn with_noise_density(&self, noise_density: f64) -> Result<Self> {
        if !(noise_density.is_finite() && noise_density >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise density must be non-negative, got {noise_density}"
            )));
        }
        Ok(Self {
            noise_density,
            ..self.clone()
        })
    }

    /// Sets `N_0` so that `E_b^TX/N_0` equals `ebno_db` (in dB).
    pub fn with_ebno_db(&self, ebno_db: f64) -> Result<Self> {
        self.with_noise_density(self.energy_per_bit() / 10f64.powf(ebno_db / 10.0))
    }
}

/// `{−half..−1, 1..half}`.
pub fn lte_subcarriers(half: i32) -> Vec<i32> {
    (-half..=half).filter(|&k| k != 0).collect()
}

/// One propagation path: delay (s), Doppler shift (Hz), complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub delay: f64,
    pub doppler: f64,
    pub amplitude: Complex64,
}

impl PathParams {
    pub fn new(delay: f64, doppler: f64, amplitude: Complex64) -> Self {
        Self {
            delay,
            doppler,
            amplitude,
        }
    }
}

/// A deterministic channel given as a finite set of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub paths: Vec<PathParams>,
    pub label: String,
}

impl ChannelRealization {
    pub fn new(paths: Vec<PathParams>, label: impl Into<String>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::EmptyChannel);
        }
        for (i, p) in paths.iter().enumerate() {
            if !(p.delay.is_finite() && p.delay >= 0.0) {
                return Err(Error::InvalidPath(format!(
                    "path {i}: delay must be finite and non-negative, got {}",
                    p.delay
                )));
            }
            if !p.doppler.is_finite() || !p.amplitude.re.is_finite() || !p.amplitude.im.is_finite() {
                return Err(Error::InvalidPath(format!("path {i}: non-finite parameter")));
            }
        }
        Ok(Self {
            paths,
            label: label.into(),
        })
    }

    /// Single path with zero delay, zero Doppler and unit gain.
    pub fn identity() -> Self {
        Self {
            paths: vec![PathParams::new(0.0, 0.0, Complex64::new(1.0, 0.0))],
            label: "identity".into(),
        }
    }

    pub fn max_delay(&self) -> f64 {
        self.paths.iter().map(|p| p.delay).fold(0.0, f64::max)
    }

    /// Total instantaneous power `Σ |α_i|²`.
    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.amplitude.norm_sqr()).sum()
    }

    /// Checks the no-ISI assumption against `cfg`.
    pub fn check_delays(&self, cfg: &OfdmConfig) -> Result<()> {
        match self.paths.iter().find(|p| p.delay >= cfg.cp_length) {
            Some(p) => Err(Error::DelayExceedsCp {
                delay_s: p.delay,
                cp_s: cfg.cp_length,
            }),
            None => Ok(()),
        }
    }
}

/// Kernel `D(f)` evaluated at `x = f·T`: `(e^{j2πx} − 1)/(j2πx)`, and `1` at `x = 0`.
pub fn dirichlet_kernel(f_times_t: f64) -> Complex64 {
    if f_times_t == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let w = 2.0 * PI * f_times_t;
    if w.abs() < SERIES_THRESHOLD {
        // e^{jw} − 1 ≈ jw(1 + jw/2)
        return Complex64::new(1.0, w / 2.0);
    }
    // e^{jw} − 1 = −2 sin²(w/2) + j sin(w), with exact zeros at integer f·T.
    let half = sin_pi(f_times_t);
    let num = Complex64::new(-2.0 * half * half, sin_pi(2.0 * f_times_t));
    // divide by jw
    Complex64::new(num.im / w, -num.re / w)
}

/// `sin(πx)` with exact range reduction; exactly zero at integers.
fn sin_pi(x: f64) -> f64 {
    if x.fract() == 0.0 {
        return 0.0;
    }
    let r = x - 2.0 * (x / 2.0).round();
    (PI * r).sin()
}

fn rotation(path: &PathParams, cfg: &OfdmConfig, m: i64) -> Complex64 {
    path.amplitude * Complex64::from_polar(1.0, 2.0 * PI * path.doppler * cfg.symbol_start(m))
}

fn delay_phase(path: &PathParams, cfg: &OfdmConfig, subcarrier: i32) -> Complex64 {
    Complex64::from_polar(
        1.0,
        -2.0 * PI * f64::from(subcarrier) * path.delay * cfg.subcarrier_spacing,
    )
}

fn require_subcarrier(cfg: &OfdmConfig, subcarrier: i32) -> Result<()> {
    if cfg.contains(subcarrier) {
        Ok(())
    } else {
        Err(Error::UnknownSubcarrier(subcarrier))
    }
}

/// Channel coefficient `H[m,l]`.
pub fn channel_coefficient(
    cfg: &OfdmConfig,
    chan: &ChannelRealization,
    m: i64,
    l: i32,
) -> Result<Complex64> {
    require_subcarrier(cfg, l)?;
    chan.check_delays(cfg)?;
    let t = cfg.symbol_period();
    Ok(chan
        .paths
        .iter()
        .map(|p| rotation(p, cfg, m) * delay_phase(p, cfg, l) * dirichlet_kernel(p.doppler * t))
        .sum())
}

/// ICI coefficient `H_ici[m,l,k]`: leakage of subcarrier `k` into `l`.
pub fn ici_coefficient(
    cfg: &OfdmConfig,
    chan: &ChannelRealization,
    m: i64,
    l: i32,
    k: i32,
) -> Result<Complex64> {
    if k == l {
        return Err(Error::SameSubcarrier(l));
    }
    require_subcarrier(cfg, l)?;
    require_subcarrier(cfg, k)?;
    chan.check_delays(cfg)?;
    let t = cfg.symbol_period();
    let offset = f64::from(k - l);
    Ok(chan
        .paths
        .iter()
        .map(|p| {
            rotation(p, cfg, m) * delay_phase(p, cfg, k) * dirichlet_kernel(offset + p.doppler * t)
        })
        .sum())
}

/// Channel coefficient and every ICI coefficient affecting one symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub symbol_index: i64,
    pub subcarrier: i32,
    pub channel_coeff: Complex64,
    /// `(k, H_ici[m,l,k])` for every used `k ≠ l`, ascending in `k`.
    pub ici_coeffs: Vec<(i32, Complex64)>,
    pub symbol_start_time: f64,
}

impl CoefficientSet {
    pub fn ici(&self, k: i32) -> Option<Complex64> {
        self.ici_coeffs
            .binary_search_by_key(&k, |&(kk, _)| kk)
            .ok()
            .map(|i| self.ici_coeffs[i].1)
    }

    /// `Σ_k |H_ici[m,l,k]|²`.
    pub fn ici_power(&self) -> f64 {
        self.ici_coeffs.iter().map(|(_, c)| c.norm_sqr()).sum()
    }
}

/// Computes `H[m,l]` and all `H_ici[m,l,k]` in one pass over the paths.
pub fn coefficient_set(
    cfg: &OfdmConfig,
    chan: &ChannelRealization,
    m: i64,
    l: i32,
) -> Result<CoefficientSet> {
    require_subcarrier(cfg, l)?;
    chan.check_delays(cfg)?;
    let t = cfg.symbol_period();
    let rotated: Vec<Complex64> = chan.paths.iter().map(|p| rotation(p, cfg, m)).collect();

    let channel_coeff = chan
        .paths
        .iter()
        .zip(&rotated)
        .map(|(p, r)| r * delay_phase(p, cfg, l) * dirichlet_kernel(p.doppler * t))
        .sum();

    let ici_coeffs = cfg
        .used_subcarriers
        .iter()
        .filter(|&&k| k != l)
        .map(|&k| {
            let offset = f64::from(k - l);
            let c = chan
                .paths
                .iter()
                .zip(&rotated)
                .map(|(p, r)| r * delay_phase(p, cfg, k) * dirichlet_kernel(offset + p.doppler * t))
                .sum();
            (k, c)
        })
        .collect();

    Ok(CoefficientSet {
        symbol_index: m,
        subcarrier: l,
        channel_coeff,
        ici_coeffs,
        symbol_start_time: cfg.symbol_start(m),
    })
}
