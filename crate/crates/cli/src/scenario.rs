//! Scenario files: TOML documents describing one study.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ofdm_ici::channel::{builtin_profile, load_realization, parse_profile, DopplerConfig, TapProfile};
use ofdm_ici::ofdm::lte_subcarriers;
use ofdm_ici::{ChannelRealization, OfdmConfig};
use serde::{Deserialize, Serialize};

pub const LTE_SPACING_HZ: f64 = 15_000.0;
pub const LTE_CP_S: f64 = 72.0 / 15.36e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Coefficients,
    Normality,
    Instantaneous,
    AverageSweep,
}

impl StudyKind {
    pub fn name(self) -> &'static str {
        match self {
            StudyKind::Coefficients => "coefficients",
            StudyKind::Normality => "normality",
            StudyKind::Instantaneous => "instantaneous",
            StudyKind::AverageSweep => "average_sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisKind {
    Subcarrier,
    EbnoDb,
    NormalizedDoppler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

/// The document as written. Every field is optional where a default exists;
/// [`ScenarioFile::resolve`] fills and validates them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub ofdm: OfdmSection,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub study: StudySection,
    #[serde(default)]
    pub output: OutputSection,
    /// Free-form run information written into manifests; ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<toml::Table>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OfdmSection {
    pub subcarrier_spacing_hz: Option<f64>,
    pub cp_length_s: Option<f64>,
    /// Explicit used-subcarrier list.
    pub subcarriers: Option<Vec<i32>>,
    /// Shorthand for `{-n..-1, 1..n}`.
    pub max_subcarrier: Option<i32>,
    pub symbol_variance: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub profile: Option<String>,
    pub profile_file: Option<PathBuf>,
    /// Fixed realization in the channel dump format.
    pub file: Option<PathBuf>,
    pub normalized_doppler: Option<f64>,
    pub max_doppler_hz: Option<f64>,
    pub n_sinusoids: Option<u32>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub kind: Option<StudyKind>,
    pub orders: Option<Vec<u32>>,
    pub symbols: Option<Vec<i64>>,
    pub subcarriers: Option<Vec<i32>>,
    pub ebno_db: Option<f64>,
    pub axis: Option<AxisKind>,
    pub grid: Option<Vec<f64>>,
    pub realizations: Option<u64>,
    pub iterations: Option<u64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub min_error_bits: Option<u64>,
    pub bootstrap_resamples: Option<u32>,
    pub confidence: Option<f64>,
    pub dump_samples: Option<bool>,
    pub histogram_bins: Option<usize>,
    pub dump_channels: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSource {
    Profile { profile: TapProfile, doppler: DopplerConfig },
    Fixed(ChannelRealization),
}

/// A validated scenario with every default applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub kind: StudyKind,
    /// Order field is a placeholder; studies iterate `orders`.
    pub cfg: OfdmConfig,
    pub channel: ChannelSource,
    pub orders: Vec<u32>,
    pub symbols: Vec<i64>,
    pub subcarriers: Vec<i32>,
    pub ebno_db: f64,
    pub axis: AxisKind,
    pub grid: Vec<f64>,
    pub realizations: u64,
    pub iterations: u64,
    pub samples: usize,
    pub seed: u64,
    pub min_error_bits: u64,
    pub bootstrap_resamples: u32,
    pub confidence: f64,
    pub dump_samples: bool,
    pub histogram_bins: usize,
    pub dump_channels: bool,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    /// The fully resolved document, suitable for a manifest.
    pub resolved: ScenarioFile,
}

/// Run-size defaults; `full` raises them to the full published study sizes.
pub fn default_realizations(kind: StudyKind, full: bool) -> u64 {
    match (kind, full) {
        (StudyKind::Coefficients, _) => 1,
        (StudyKind::Normality, true) => 1000,
        (StudyKind::AverageSweep, true) => 10_000,
        (_, true) => 100,
        (_, false) => 100,
    }
}

pub fn default_iterations(full: bool) -> u64 {
    if full {
        1_000_000
    } else {
        10_000
    }
}

/// Command-line adjustments applied on top of the document.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub kind: Option<StudyKind>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub full_scale: bool,
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    toml::from_str(text).map_err(|e| anyhow!("scenario: {}", e.message()).context(e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<ScenarioFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_scenario(&text).with_context(|| format!("parsing {}", path.display()))
}

fn check_subcarriers(cfg: &OfdmConfig, key: &str, list: &[i32]) -> Result<()> {
    for &l in list {
        if !cfg.contains(l) {
            bail!("{key}: subcarrier {l} is not in the used subcarrier set");
        }
    }
    Ok(())
}

fn resolve_path(base: Option<&Path>, p: &Path) -> PathBuf {
    match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p.to_path_buf(),
    }
}

impl ScenarioFile {
    /// Validates the document and applies defaults. Relative paths are taken
    /// from `base_dir` when given.
    pub fn resolve(&self, ov: &Overrides, base_dir: Option<&Path>) -> Result<Scenario> {
        if self.name.trim().is_empty() {
            bail!("name: must not be empty");
        }
        let kind = match (self.study.kind, ov.kind) {
            (Some(a), Some(b)) if a != b => {
                bail!("study.kind: scenario declares `{}` but `{}` was requested", a.name(), b.name())
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => bail!("study.kind: missing (or pick a subcommand)"),
        };

        // [ofdm]
        let o = &self.ofdm;
        let used = match (&o.subcarriers, o.max_subcarrier) {
            (Some(_), Some(_)) => bail!("ofdm: give either `subcarriers` or `max_subcarrier`, not both"),
            (Some(list), None) => list.clone(),
            (None, Some(n)) => {
                if n < 1 {
                    bail!("ofdm.max_subcarrier: must be at least 1, got {n}");
                }
                lte_subcarriers(n)
            }
            (None, None) => lte_subcarriers(300),
        };
        let spacing = o.subcarrier_spacing_hz.unwrap_or(LTE_SPACING_HZ);
        let cp = o.cp_length_s.unwrap_or(LTE_CP_S);
        let variance = o.symbol_variance.unwrap_or(1.0);
        let cfg = OfdmConfig::new(spacing, cp, used.clone(), 4, variance, 0.0).context("ofdm")?;

        // [study]
        let s = &self.study;
        let orders = s.orders.clone().unwrap_or_else(|| vec![4, 16, 64]);
        if orders.is_empty() {
            bail!("study.orders: must not be empty");
        }
        for &m in &orders {
            cfg.with_order(m).with_context(|| format!("study.orders: {m}"))?;
        }
        let symbols = s.symbols.clone().unwrap_or_else(|| match kind {
            StudyKind::Instantaneous => (0..10).collect(),
            _ => vec![0],
        });
        if symbols.is_empty() {
            bail!("study.symbols: must not be empty");
        }
        let subcarriers = s.subcarriers.clone().unwrap_or_else(|| match kind {
            StudyKind::Instantaneous => vec![150],
            _ => vec![150, 300],
        });
        if subcarriers.is_empty() {
            bail!("study.subcarriers: must not be empty");
        }
        check_subcarriers(&cfg, "study.subcarriers", &subcarriers)?;
        let ebno_db = s.ebno_db.unwrap_or(50.0);
        if !ebno_db.is_finite() {
            bail!("study.ebno_db: must be finite");
        }
        let axis = s.axis.unwrap_or(match kind {
            StudyKind::AverageSweep => AxisKind::EbnoDb,
            _ => AxisKind::Subcarrier,
        });
        let grid = match (kind, axis) {
            (StudyKind::AverageSweep, AxisKind::EbnoDb) => {
                s.grid.clone().unwrap_or_else(|| vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0])
            }
            (StudyKind::AverageSweep | StudyKind::Normality, AxisKind::NormalizedDoppler) => s
                .grid
                .clone()
                .unwrap_or_else(|| vec![0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1]),
            (_, AxisKind::Subcarrier) if kind != StudyKind::AverageSweep => {
                if s.grid.is_some() {
                    bail!("study.grid: not used on the subcarrier axis");
                }
                Vec::new()
            }
            (k, a) => bail!("study.axis: `{a:?}` is not available for the {} study", k.name()),
        };
        if matches!(kind, StudyKind::AverageSweep | StudyKind::Normality) && axis != AxisKind::Subcarrier {
            if grid.is_empty() {
                bail!("study.grid: must not be empty");
            }
            if grid.iter().any(|v| !v.is_finite()) {
                bail!("study.grid: values must be finite");
            }
            if axis == AxisKind::NormalizedDoppler && grid.iter().any(|&v| v < 0.0) {
                bail!("study.grid: normalized Doppler values must be non-negative");
            }
        }
        if kind == StudyKind::Normality && axis == AxisKind::NormalizedDoppler && subcarriers.len() != 1 {
            bail!("study.subcarriers: the normalized Doppler axis takes exactly one subcarrier");
        }
        let realizations = s.realizations.unwrap_or(default_realizations(kind, ov.full_scale));
        if realizations == 0 {
            bail!("study.realizations: must be at least 1");
        }
        let iterations = s.iterations.unwrap_or(default_iterations(ov.full_scale));
        if iterations == 0 {
            bail!("study.iterations: must be at least 1");
        }
        let samples = s.samples.unwrap_or(1000);
        if samples < 3 {
            bail!("study.samples: must be at least 3");
        }
        let seed = ov.seed.or(s.seed).unwrap_or(1);
        let confidence = s.confidence.unwrap_or(0.95);
        if !(confidence > 0.0 && confidence < 1.0) {
            bail!("study.confidence: must lie in (0, 1), got {confidence}");
        }
        let bootstrap_resamples = s.bootstrap_resamples.unwrap_or(1000);
        if bootstrap_resamples < 100 {
            bail!("study.bootstrap_resamples: must be at least 100");
        }
        let min_error_bits = s.min_error_bits.unwrap_or(10);
        let histogram_bins = s.histogram_bins.unwrap_or(0);
        let dump_samples = s.dump_samples.unwrap_or(false);
        let dump_channels = s.dump_channels.unwrap_or(false);

        // [channel]
        let c = &self.channel;
        let sources = [c.profile.is_some(), c.profile_file.is_some(), c.file.is_some()];
        if sources.iter().filter(|&&x| x).count() != 1 {
            bail!("channel: give exactly one of `profile`, `profile_file` or `file`");
        }
        let mut resolved_channel = c.clone();
        let channel = if let Some(file) = &c.file {
            if c.normalized_doppler.is_some() || c.max_doppler_hz.is_some() || c.n_sinusoids.is_some() || c.seed.is_some() {
                bail!("channel: Doppler settings do not apply to a fixed realization `file`");
            }
            if matches!(kind, StudyKind::Normality | StudyKind::AverageSweep) {
                bail!("channel.file: the {} study averages over realizations and needs a profile", kind.name());
            }
            let path = resolve_path(base_dir, file);
            let text = std::fs::read_to_string(&path).with_context(|| format!("channel.file: reading {}", path.display()))?;
            let chan = load_realization(&text).with_context(|| format!("channel.file: {}", path.display()))?;
            chan.check_delays(&cfg).context("channel.file")?;
            resolved_channel.file = Some(std::path::absolute(&path).unwrap_or(path));
            ChannelSource::Fixed(chan)
        } else {
            let profile = if let Some(name) = &c.profile {
                builtin_profile(name).context("channel.profile")?
            } else {
                let file = c.profile_file.as_ref().expect("checked above");
                let path = resolve_path(base_dir, file);
                let text =
                    std::fs::read_to_string(&path).with_context(|| format!("channel.profile_file: reading {}", path.display()))?;
                resolved_channel.profile_file = Some(std::path::absolute(&path).unwrap_or(path));
                parse_profile(&text).context("channel.profile_file")?
            };
            if profile.max_delay() >= cfg.cp_length {
                bail!(
                    "channel: profile delay {} s is not below the cyclic prefix {} s",
                    profile.max_delay(),
                    cfg.cp_length
                );
            }
            let max_doppler = match (c.normalized_doppler, c.max_doppler_hz) {
                (Some(_), Some(_)) => bail!("channel: give `normalized_doppler` or `max_doppler_hz`, not both"),
                (Some(nd), None) => nd * spacing,
                (None, Some(hz)) => hz,
                (None, None) => 0.05 * spacing,
            };
            let n_sinusoids = c.n_sinusoids.unwrap_or(8);
            let seed = ov.seed.or(c.seed).unwrap_or(1);
            let doppler = DopplerConfig::new(max_doppler, n_sinusoids, seed).context("channel")?;
            resolved_channel.normalized_doppler = None;
            resolved_channel.max_doppler_hz = Some(max_doppler);
            resolved_channel.n_sinusoids = Some(n_sinusoids);
            resolved_channel.seed = Some(seed);
            ChannelSource::Profile { profile, doppler }
        };

        let out_dir = ov
            .out_dir
            .clone()
            .or_else(|| self.output.dir.as_ref().map(|d| resolve_path(base_dir, d)))
            .unwrap_or_else(|| PathBuf::from("out").join(&self.name));
        let formats = ov
            .formats
            .clone()
            .or_else(|| self.output.formats.clone())
            .unwrap_or_else(|| vec![Format::Csv]);
        if formats.is_empty() {
            bail!("output.formats: must not be empty");
        }

        let resolved = ScenarioFile {
            name: self.name.clone(),
            ofdm: OfdmSection {
                subcarrier_spacing_hz: Some(spacing),
                cp_length_s: Some(cp),
                subcarriers: Some(used),
                max_subcarrier: None,
                symbol_variance: Some(variance),
            },
            channel: resolved_channel,
            study: StudySection {
                kind: Some(kind),
                orders: Some(orders.clone()),
                symbols: Some(symbols.clone()),
                subcarriers: Some(subcarriers.clone()),
                ebno_db: Some(ebno_db),
                axis: Some(axis),
                grid: (!grid.is_empty()).then(|| grid.clone()),
                realizations: Some(realizations),
                iterations: Some(iterations),
                samples: Some(samples),
                seed: Some(seed),
                min_error_bits: Some(min_error_bits),
                bootstrap_resamples: Some(bootstrap_resamples),
                confidence: Some(confidence),
                dump_samples: Some(dump_samples),
                histogram_bins: Some(histogram_bins),
                dump_channels: Some(dump_channels),
            },
            output: OutputSection {
                dir: Some(std::path::absolute(&out_dir).unwrap_or(out_dir.clone())),
                formats: Some(formats.clone()),
            },
            provenance: None,
        };

        Ok(Scenario {
            name: self.name.clone(),
            kind,
            cfg,
            channel,
            orders,
            symbols,
            subcarriers,
            ebno_db,
            axis,
            grid,
            realizations,
            iterations,
            samples,
            seed,
            min_error_bits,
            bootstrap_resamples,
            confidence,
            dump_samples,
            histogram_bins,
            dump_channels,
            out_dir,
            formats,
            resolved,
        })
    }
}
