//! Independent reference implementations shared by integration tests and the
//! acceptance harness.
#![allow(dead_code)]

use num_complex::Complex64;
use ofdm_ici::{ChannelRealization, OfdmConfig};
use std::f64::consts::PI;

/// Composite Simpson rule on `[a, b]` with `intervals` (even) subintervals.
pub fn simpson<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, intervals: usize) -> Complex64 {
    assert!(intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut acc = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + i as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// `(1/T) ∫_0^T e^{j2πft} dt` by quadrature, with `x = fT`.
pub fn kernel_by_quadrature(x: f64) -> Complex64 {
    simpson(|u| Complex64::from_polar(1.0, 2.0 * PI * x * u), 0.0, 1.0, 4096)
}

/// Noise-free received sample of OFDM symbol `m` at absolute time `t`
/// (within the useful part) for symbols `x[k]` on subcarriers `cfg.used_subcarriers`.
pub fn received_waveform(
    cfg: &OfdmConfig,
    chan: &ChannelRealization,
    m: i64,
    symbols: &[Complex64],
    t: f64,
) -> Complex64 {
    let big_t = 1.0 / cfg.subcarrier_spacing;
    let t_m = m as f64 * (big_t + cfg.cp_length);
    let mut y = Complex64::default();
    for p in &chan.paths {
        let doppler = Complex64::from_polar(1.0, 2.0 * PI * p.doppler * t);
        let mut u = Complex64::default();
        for (&l, &x) in cfg.used_subcarriers.iter().zip(symbols) {
            u += x * Complex64::from_polar(1.0, 2.0 * PI * f64::from(l) * (t - p.delay - t_m) / big_t);
        }
        y += p.amplitude * doppler * u;
    }
    y
}

/// `(1/T) ∫_0^T y_m(t + t_m) e^{-j2πlt/T} dt` by dense quadrature.
pub fn project(cfg: &OfdmConfig, chan: &ChannelRealization, m: i64, symbols: &[Complex64], l: i32) -> Complex64 {
    let big_t = 1.0 / cfg.subcarrier_spacing;
    let t_m = m as f64 * (big_t + cfg.cp_length);
    let f = |u: f64| {
        let t = u * big_t;
        received_waveform(cfg, chan, m, symbols, t_m + t) * Complex64::from_polar(1.0, -2.0 * PI * f64::from(l) * u)
    };
    simpson(f, 0.0, 1.0, 8192)
}

/// Coefficient of the symbol on subcarrier `k` in the received symbol on `l`
/// (the channel coefficient when `k == l`).
pub fn coefficient_by_projection(cfg: &OfdmConfig, chan: &ChannelRealization, m: i64, l: i32, k: i32) -> Complex64 {
    let symbols: Vec<Complex64> = cfg
        .used_subcarriers
        .iter()
        .map(|&s| if s == k { Complex64::new(1.0, 0.0) } else { Complex64::default() })
        .collect();
    project(cfg, chan, m, &symbols, l)
}

pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Bit error probability of square Gray-coded M-QAM with unit symbol energy
/// over AWGN, by enumerating every (sent point, decision region) pair and
/// weighting its probability with the Hamming distance of the labels.
/// `r` is the received energy per bit over the total noise variance.
pub fn qam_bep_by_enumeration(order: usize, r: f64) -> f64 {
    let levels = (order as f64).sqrt().round() as usize;
    assert_eq!(levels * levels, order);
    let axis_bits = levels.trailing_zeros() as usize;
    let bits = 2 * axis_bits;
    // Unit average energy: E = 2·d²·(L²−1)/3 with levels at ±d, ±3d, ...
    let d = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
    let sigma_axis = (1.0 / (2.0 * r * bits as f64)).sqrt();
    let level = |i: usize| (2.0 * i as f64 - (levels as f64 - 1.0)) * d;
    // P(decide j | sent i) along one axis
    let axis_prob = |i: usize, j: usize| {
        let s = level(i);
        let lo = if j == 0 { f64::NEG_INFINITY } else { level(j) - d };
        let hi = if j == levels - 1 { f64::INFINITY } else { level(j) + d };
        let upper = if hi.is_infinite() { 0.0 } else { q_function((hi - s) / sigma_axis) };
        let lower = if lo.is_infinite() { 1.0 } else { q_function((lo - s) / sigma_axis) };
        lower - upper
    };
    let label = |i: usize, q: usize| (gray(i) << axis_bits) | gray(q);
    let mut total = 0.0;
    for si in 0..levels {
        for sq in 0..levels {
            for di in 0..levels {
                let pi = axis_prob(si, di);
                for dq in 0..levels {
                    let ham = (label(si, sq) ^ label(di, dq)).count_ones();
                    if ham > 0 {
                        total += pi * axis_prob(sq, dq) * f64::from(ham);
                    }
                }
            }
        }
    }
    total / (order * bits) as f64
}

/// Mardia statistics through Cholesky whitening and the third-moment tensor:
/// `b1 = Σ_{rst} (mean z_r z_s z_t)²`, `b2 = mean |z|⁴`.
pub fn mardia_by_whitening(samples: &[[f64; 2]]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mx = samples.iter().map(|z| z[0]).sum::<f64>() / n;
    let my = samples.iter().map(|z| z[1]).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for z in samples {
        let (a, b) = (z[0] - mx, z[1] - my);
        sxx += a * a;
        sxy += a * b;
        syy += b * b;
    }
    let (sxx, sxy, syy) = (sxx / n, sxy / n, syy / n);
    let l11 = sxx.sqrt();
    let l21 = sxy / l11;
    let l22 = (syy - l21 * l21).sqrt();
    let z: Vec<[f64; 2]> = samples
        .iter()
        .map(|s| {
            let u = (s[0] - mx) / l11;
            let v = (s[1] - my - l21 * u) / l22;
            [u, v]
        })
        .collect();
    let mut b1 = 0.0;
    for r in 0..2 {
        for s in 0..2 {
            for t in 0..2 {
                let m3 = z.iter().map(|w| w[r] * w[s] * w[t]).sum::<f64>() / n;
                b1 += m3 * m3;
            }
        }
    }
    let b2 = z
        .iter()
        .map(|w| {
            let q = w[0] * w[0] + w[1] * w[1];
            q * q
        })
        .sum::<f64>()
        / n;
    (b1, b2)
}

/// An 8-subcarrier test system: 1 kHz spacing, 0.2 ms cyclic prefix.
pub fn small_config(order: u32) -> OfdmConfig {
    OfdmConfig::new(1000.0, 2e-4, vec![-4, -3, -2, -1, 1, 2, 3, 4], order, 1.0, 0.0).unwrap()
}

pub fn relative_error(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}
