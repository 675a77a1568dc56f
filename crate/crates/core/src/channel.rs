//! Channel realizations from standardized power-delay profiles.
//!
//! Jakes-spectrum taps are synthesized as sums of complex sinusoids; each
//! sinusoid becomes one path of the realization, so the time evolution over
//! OFDM symbols is carried exactly by the per-path Doppler phase.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ofdm::{ChannelRealization, PathParams};
use crate::rng::{stream, stream_rng};

const TUX: &str = include_str!("../data/profiles/tux.csv");
const RAX: &str = include_str!("../data/profiles/rax.csv");
const ITU_VEHICULAR: &str = include_str!("../data/profiles/itu_vehicular.csv");

pub const BUILTIN_PROFILES: [&str; 3] = ["tux", "rax", "itu_vehicular"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DopplerSpectrum {
    Jakes,
    /// Single line-of-sight sinusoid.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    /// Seconds.
    pub delay: f64,
    /// Average power in dB.
    pub average_power_db: f64,
    pub spectrum: DopplerSpectrum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TapProfile {
    pub name: String,
    pub taps: Vec<Tap>,
}

impl TapProfile {
    pub fn new(name: impl Into<String>, taps: Vec<Tap>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidProfile("profile has no taps".into()));
        }
        if taps.iter().any(|t| !(t.delay.is_finite() && t.delay >= 0.0) || !t.average_power_db.is_finite()) {
            return Err(Error::InvalidProfile("tap delays and powers must be finite, delays non-negative".into()));
        }
        if taps.windows(2).any(|w| w[1].delay <= w[0].delay) {
            return Err(Error::InvalidProfile("tap delays must be strictly increasing".into()));
        }
        Ok(Self {
            name: name.into(),
            taps,
        })
    }

    /// Linear tap powers scaled to unit sum.
    pub fn normalized_powers(&self) -> Vec<f64> {
        let lin: Vec<f64> = self
            .taps
            .iter()
            .map(|t| 10f64.powf(t.average_power_db / 10.0))
            .collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }

    pub fn max_delay(&self) -> f64 {
        self.taps.last().map_or(0.0, |t| t.delay)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerConfig {
    /// Maximum Doppler shift in Hz.
    pub max_doppler: f64,
    /// Sinusoids per Jakes tap.
    pub n_sinusoids: u32,
    pub seed: u64,
}

impl DopplerConfig {
    pub fn new(max_doppler: f64, n_sinusoids: u32, seed: u64) -> Result<Self> {
        if !(max_doppler.is_finite() && max_doppler >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "maximum Doppler must be non-negative, got {max_doppler}"
            )));
        }
        if n_sinusoids == 0 {
            return Err(Error::InvalidConfig("at least one sinusoid per tap is required".into()));
        }
        Ok(Self {
            max_doppler,
            n_sinusoids,
            seed,
        })
    }

    /// Same process parameters, different realization stream.
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Parses the bundled tap-table format: `#` comment lines (a `# name:` line
/// names the profile) and a `delay_us,power_db,spectrum` table.
pub fn parse_profile(text: &str) -> Result<TapProfile> {
    let mut name = String::from("custom");
    let mut taps = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(n) = comment.trim().strip_prefix("name:") {
                name = n.trim().to_string();
            }
            continue;
        }
        if line.starts_with("delay_us") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                field: "record".into(),
                message: format!("expected 3 fields, found {}", fields.len()),
            });
        }
        let delay_us = parse_f64(fields[0], line_no, "delay_us")?;
        let power_db = parse_f64(fields[1], line_no, "power_db")?;
        let spectrum = match fields[2] {
            "jakes" => DopplerSpectrum::Jakes,
            "direct" => DopplerSpectrum::Direct,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    field: "spectrum".into(),
                    message: format!("unknown spectrum '{other}'"),
                })
            }
        };
        taps.push(Tap {
            delay: delay_us * 1e-6,
            average_power_db: power_db,
            spectrum,
        });
    }
    TapProfile::new(name, taps)
}

pub fn builtin_profile(name: &str) -> Result<TapProfile> {
    let text = match name {
        "tux" => TUX,
        "rax" => RAX,
        "itu_vehicular" => ITU_VEHICULAR,
        other => return Err(Error::UnknownProfile(other.to_string())),
    };
    parse_profile(text)
}

/// Draws one channel realization, with sinusoid phases evaluated at `t_eval`.
///
/// A Jakes tap of normalized power `P` becomes `n` paths at the tap delay,
/// path `p` with Doppler `ν_max cos θ_p` and amplitude `√(P/n) e^{jφ_p}`,
/// where `θ_p = (2πp − π + ψ)/n`. `ψ` and every `φ_p` are uniform on
/// `[−π, π)`. A direct tap becomes one path with Doppler `ν_max cos θ`
/// (`θ` uniform) and real amplitude `√P`.
pub fn realize(profile: &TapProfile, dop: &DopplerConfig, t_eval: f64) -> ChannelRealization {
    let mut rng = stream_rng(dop.seed, &[stream::CHANNEL]);
    let n = dop.n_sinusoids.max(1);
    let powers = profile.normalized_powers();
    let mut paths = Vec::with_capacity(profile.taps.len() * n as usize);

    for (tap, power) in profile.taps.iter().zip(powers) {
        match tap.spectrum {
            DopplerSpectrum::Jakes => {
                let psi: f64 = rng.random_range(-PI..PI);
                let amp = (power / f64::from(n)).sqrt();
                for p in 1..=n {
                    let theta = (2.0 * PI * f64::from(p) - PI + psi) / f64::from(n);
                    let phi: f64 = rng.random_range(-PI..PI);
                    let doppler = dop.max_doppler * theta.cos();
                    paths.push(PathParams::new(
                        tap.delay,
                        doppler,
                        Complex64::from_polar(amp, phi + 2.0 * PI * doppler * t_eval),
                    ));
                }
            }
            DopplerSpectrum::Direct => {
                let theta: f64 = rng.random_range(-PI..PI);
                let doppler = dop.max_doppler * theta.cos();
                paths.push(PathParams::new(
                    tap.delay,
                    doppler,
                    Complex64::from_polar(power.sqrt(), 2.0 * PI * doppler * t_eval),
                ));
            }
        }
    }

    ChannelRealization {
        paths,
        label: format!(
            "{} nu_max={}Hz sinusoids={} seed={}",
            profile.name, dop.max_doppler, n, dop.seed
        ),
    }
}

fn parse_f64(s: &str, line: usize, field: &str) -> Result<f64> {
    let v: f64 = s.parse().map_err(|e| Error::Parse {
        line,
        field: field.to_string(),
        message: format!("'{s}': {e}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            field: field.to_string(),
            message: format!("'{s}' is not finite"),
        });
    }
    Ok(v)
}

pub const REALIZATION_HEADER: &str = "delay_s,doppler_hz,amp_re,amp_im";

/// Serializes a realization in the path-record text format. Values are
/// written in shortest round-trip form, so loading reproduces them exactly.
pub fn save_realization(chan: &ChannelRealization) -> String {
    let mut out = String::new();
    for line in chan.label.lines() {
        let _ = writeln!(out, "# label: {line}");
    }
    let _ = writeln!(out, "{REALIZATION_HEADER}");
    for p in &chan.paths {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?}",
            p.delay, p.doppler, p.amplitude.re, p.amplitude.im
        );
    }
    out
}

/// Parses the path-record text format written by [`save_realization`].
pub fn load_realization(text: &str) -> Result<ChannelRealization> {
    const FIELDS: [&str; 4] = ["delay_s", "doppler_hz", "amp_re", "amp_im"];
    let mut label = Vec::new();
    let mut paths = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(l) = comment.strip_prefix(" label:") {
                label.push(l.trim().to_string());
            }
            continue;
        }
        if line == REALIZATION_HEADER {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != FIELDS.len() {
            return Err(Error::Parse {
                line: line_no,
                field: FIELDS.get(fields.len()).copied().unwrap_or("record").to_string(),
                message: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let mut v = [0.0; 4];
        for (slot, (s, name)) in v.iter_mut().zip(fields.iter().zip(FIELDS)) {
            *slot = parse_f64(s, line_no, name)?;
        }
        if v[0] < 0.0 {
            return Err(Error::Parse {
                line: line_no,
                field: "delay_s".into(),
                message: format!("negative delay {}", v[0]),
            });
        }
        paths.push(PathParams::new(v[0], v[1], Complex64::new(v[2], v[3])));
    }
    ChannelRealization::new(paths, label.join("\n"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn dop(nu: f64, n: u32, seed: u64) -> DopplerConfig {
        DopplerConfig::new(nu, n, seed).unwrap()
    }

    #[test]
    fn builtin_tap_counts() {
        assert_eq!(builtin_profile("itu_vehicular").unwrap().taps.len(), 6);
        assert_eq!(builtin_profile("tux").unwrap().taps.len(), 20);
        assert_eq!(builtin_profile("rax").unwrap().taps.len(), 10);
    }

    #[test]
    fn rax_starts_with_direct_path() {
        let rax = builtin_profile("rax").unwrap();
        assert_eq!(rax.taps[0].spectrum, DopplerSpectrum::Direct);
        assert!(rax.taps[1..].iter().all(|t| t.spectrum == DopplerSpectrum::Jakes));
    }

    #[test]
    fn builtin_profiles_fit_lte_cp() {
        for name in BUILTIN_PROFILES {
            let p = builtin_profile(name).unwrap();
            assert_eq!(p.name, name);
            assert!(p.max_delay() < 72.0 / 15.36e6, "{name}");
        }
    }

    #[test]
    fn unknown_profile() {
        assert_eq!(
            builtin_profile("pedestrian_b"),
            Err(Error::UnknownProfile("pedestrian_b".into()))
        );
    }

    #[test]
    fn profile_validation() {
        let t = |d: f64| Tap {
            delay: d,
            average_power_db: 0.0,
            spectrum: DopplerSpectrum::Jakes,
        };
        assert!(TapProfile::new("x", vec![]).is_err());
        assert!(TapProfile::new("x", vec![t(1e-6), t(1e-6)]).is_err());
        assert!(TapProfile::new("x", vec![t(2e-6), t(1e-6)]).is_err());
        assert!(TapProfile::new("x", vec![t(0.0), t(1e-6)]).is_ok());
    }

    #[test]
    fn normalized_power_sums_to_one() {
        for name in BUILTIN_PROFILES {
            let s: f64 = builtin_profile(name).unwrap().normalized_powers().iter().sum();
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
        }
        let veh = builtin_profile("itu_vehicular").unwrap().normalized_powers();
        let lin = [1.0, 10f64.powf(-0.1), 10f64.powf(-0.9), 0.1, 10f64.powf(-1.5), 0.01];
        let total: f64 = lin.iter().sum();
        for (a, b) in veh.iter().zip(lin) {
            assert_abs_diff_eq!(*a, b / total, epsilon = 1e-15);
        }
    }

    #[test]
    fn one_jakes_tap_expands_to_n_paths() {
        let prof = TapProfile::new(
            "one",
            vec![Tap {
                delay: 1e-6,
                average_power_db: -3.0,
                spectrum: DopplerSpectrum::Jakes,
            }],
        )
        .unwrap();
        let ch = realize(&prof, &dop(750.0, 8, 3), 0.0);
        assert_eq!(ch.paths.len(), 8);
        assert!(ch.paths.iter().all(|p| p.delay == 1e-6));
        assert!(ch.paths.iter().all(|p| p.doppler.abs() <= 750.0));
        assert_abs_diff_eq!(ch.total_power(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn direct_tap_is_single_path() {
        let rax = builtin_profile("rax").unwrap();
        let ch = realize(&rax, &dop(100.0, 8, 1), 0.0);
        assert_eq!(ch.paths.len(), 1 + 9 * 8);
        assert_eq!(ch.paths[0].delay, 0.0);
        assert_abs_diff_eq!(ch.paths[0].amplitude.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_doppler_means_static_paths() {
        let ch = realize(&builtin_profile("tux").unwrap(), &dop(0.0, 8, 9), 0.0);
        assert!(ch.paths.iter().all(|p| p.doppler == 0.0));
    }

    #[test]
    fn realization_is_seed_deterministic() {
        let p = builtin_profile("itu_vehicular").unwrap();
        assert_eq!(realize(&p, &dop(750.0, 8, 42), 0.0), realize(&p, &dop(750.0, 8, 42), 0.0));
        assert_ne!(realize(&p, &dop(750.0, 8, 42), 0.0), realize(&p, &dop(750.0, 8, 43), 0.0));
    }

    #[test]
    fn t_eval_rotates_phases() {
        let p = builtin_profile("itu_vehicular").unwrap();
        let d = dop(750.0, 8, 5);
        let a = realize(&p, &d, 0.0);
        let b = realize(&p, &d, 1e-3);
        for (x, y) in a.paths.iter().zip(&b.paths) {
            let expect = x.amplitude * Complex64::from_polar(1.0, 2.0 * PI * x.doppler * 1e-3);
            assert_abs_diff_eq!((expect - y.amplitude).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn load_single_identity_record() {
        let ch = load_realization("0,0,1,0\n").unwrap();
        assert_eq!(ch.paths, ChannelRealization::identity().paths);
    }

    #[test]
    fn load_reports_bad_field() {
        let err = load_realization("delay_s,doppler_hz,amp_re,amp_im\n0,0,1,0\n1e-6,abc,0.5,0\n").unwrap_err();
        match err {
            Error::Parse { line, field, .. } => {
                assert_eq!(line, 3);
                assert_eq!(field, "doppler_hz");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_realization("0,0,1\n"),
            Err(Error::Parse { ref field, .. }) if field == "amp_im"
        ));
        assert!(matches!(
            load_realization("-1e-6,0,1,0\n"),
            Err(Error::Parse { ref field, .. }) if field == "delay_s"
        ));
        assert_eq!(load_realization("# nothing\n"), Err(Error::EmptyChannel));
    }

    #[test]
    fn save_load_is_bit_exact() {
        let p = builtin_profile("rax").unwrap();
        let ch = realize(&p, &dop(1234.5678, 8, 77), 0.0);
        let text = save_realization(&ch);
        let back = load_realization(&text).unwrap();
        assert_eq!(back, ch);
    }

    #[test]
    fn parse_profile_errors() {
        assert!(matches!(
            parse_profile("0.0,-1,jakes\n0.1,x,jakes\n"),
            Err(Error::Parse { line: 2, ref field, .. }) if field == "power_db"
        ));
        assert!(matches!(
            parse_profile("0.0,-1,rician\n"),
            Err(Error::Parse { ref field, .. }) if field == "spectrum"
        ));
    }
}
