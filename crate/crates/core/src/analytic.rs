//! Per-symbol link metrics under a Gaussian model of ICI plus noise.
//!
//! `erfc` comes from the `libm` crate (a port of the FreeBSD/musl
//! implementation, accurate to about one ulp).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::{bits_per_axis, CoefficientSet, OfdmConfig};

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Metrics for one symbol `(m, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkMetrics {
    pub symbol_index: i64,
    pub subcarrier: i32,
    /// `|H[m,l]|²`.
    pub channel_power: f64,
    /// `Var(ICI[m,l]) = σ_x² Σ_k |H_ici[m,l,k]|²`.
    pub ici_variance: f64,
    pub noise_density: f64,
    /// `Var(ICI[m,l]) + N_0`.
    pub noise_plus_ici_variance: f64,
    /// Received energy per bit `E_b^TX·|H|²`.
    pub ebrx: f64,
    /// `E_b^RX / (Var(ICI) + N_0)`.
    pub ratio: f64,
    pub bep: f64,
    /// Lower bound on capacity in bit/s/Hz.
    pub capacity_lower_bound: f64,
}

pub fn ici_variance(cs: &CoefficientSet, symbol_variance: f64) -> f64 {
    symbol_variance * cs.ici_power()
}

/// SINR-per-bit ratio `r = σ_x²|H|² / ((Var(ICI) + N_0)·log2 M)`.
pub fn sinr_ratio(cfg: &OfdmConfig, cs: &CoefficientSet) -> Result<f64> {
    let denom = ici_variance(cs, cfg.symbol_variance) + cfg.noise_density;
    if denom <= 0.0 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(cfg.energy_per_bit() * cs.channel_coeff.norm_sqr() / denom)
}

/// `T/(T + T_cp) · log2(1 + r·log2 M)`.
pub fn capacity_lower_bound(cfg: &OfdmConfig, r: f64) -> f64 {
    cfg.cp_efficiency() * (r * f64::from(cfg.bits_per_symbol())).ln_1p() / std::f64::consts::LN_2
}

/// Exact bit error probability of Gray-labelled square M-QAM over AWGN as a
/// function of `r = E_b/N_0`.
///
/// Averages the per-bit probabilities
/// `P_j = (1/√M) Σ_{k=0}^{(1−2^{−j})√M−1} (−1)^{⌊k2^{j−1}/√M⌋}
///        (2^{j−1} − ⌊k2^{j−1}/√M + 1/2⌋) erfc((2k+1)√(3 log2M · r / (2(M−1))))`
/// over `j = 1..log2√M`. All index arithmetic is integer.
pub fn awgn_qam_bep(order: u32, r: f64) -> Result<f64> {
    let axis_bits = bits_per_axis(order).ok_or(Error::InvalidOrder(order))?;
    if !(r >= 0.0) {
        return Err(Error::InvalidSim(format!("SINR ratio must be non-negative, got {r}")));
    }
    let side = 1i64 << axis_bits;
    let m = f64::from(order);
    let scale = (3.0 * f64::from(2 * axis_bits) * r / (2.0 * (m - 1.0))).sqrt();

    let mut total = 0.0;
    for j in 1..=axis_bits {
        let weight = 1i64 << (j - 1);
        let upper = side - side / (1i64 << j) - 1;
        let mut pj = 0.0;
        for k in 0..=upper {
            let sign = if (k * weight / side) % 2 == 0 { 1.0 } else { -1.0 };
            // ⌊k·2^{j−1}/√M + 1/2⌋ == ⌊(k·2^j + √M) / (2√M)⌋
            let mult = weight - (k * 2 * weight + side) / (2 * side);
            pj += sign * mult as f64 * erfc((2 * k + 1) as f64 * scale);
        }
        total += pj / side as f64;
    }
    Ok((total / f64::from(axis_bits)).clamp(0.0, 0.5))
}

/// Full metric set for the symbol described by `cs`.
pub fn symbol_bep(cfg: &OfdmConfig, cs: &CoefficientSet) -> Result<LinkMetrics> {
    let ratio = sinr_ratio(cfg, cs)?;
    let ici = ici_variance(cs, cfg.symbol_variance);
    let channel_power = cs.channel_coeff.norm_sqr();
    Ok(LinkMetrics {
        symbol_index: cs.symbol_index,
        subcarrier: cs.subcarrier,
        channel_power,
        ici_variance: ici,
        noise_density: cfg.noise_density,
        noise_plus_ici_variance: ici + cfg.noise_density,
        ebrx: cfg.energy_per_bit() * channel_power,
        ratio,
        bep: awgn_qam_bep(cfg.constellation_order, ratio)?,
        capacity_lower_bound: capacity_lower_bound(cfg, ratio),
    })
}
