//! Study execution and artifact writing.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ofdm_ici::analytic::symbol_bep;
use ofdm_ici::channel::{realize, save_realization, DopplerConfig, TapProfile};
use ofdm_ici::montecarlo::{average_sweep, instantaneous, run_with_metrics, InstantRow, SimSpec, SweepAxis};
use ofdm_ici::rng::derive_seed;
use ofdm_ici::stats::{histogram_2d, kurtosis_profile, normality_samples, samples_to_csv, NormalityStudy, ProfileAxis};
use ofdm_ici::{coefficient_set, ChannelRealization, OfdmConfig};

use crate::output::{write_file, Table};
use crate::scenario::{AxisKind, ChannelSource, Format, Scenario, StudyKind};

/// Written into the output directory when a run stops early; its presence
/// marks every other file there as partial.
pub const FAILED_MARKER: &str = "FAILED";
pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

struct Artifacts {
    tables: Vec<(String, Table)>,
    /// Raw text files (channel and sample dumps).
    files: Vec<(String, String)>,
}

impl Artifacts {
    fn new() -> Self {
        Self {
            tables: Vec::new(),
            files: Vec::new(),
        }
    }
}

fn channel_name(s: &Scenario) -> String {
    match &s.channel {
        ChannelSource::Profile { profile, .. } => profile.name.clone(),
        ChannelSource::Fixed(c) => c.label.clone(),
    }
}

fn sim_spec(s: &Scenario, cfg: OfdmConfig) -> SimSpec {
    let targets = s.symbols.iter().flat_map(|&m| s.subcarriers.iter().map(move |&l| (m, l))).collect();
    SimSpec {
        min_error_bits: s.min_error_bits,
        bootstrap_resamples: s.bootstrap_resamples,
        confidence: s.confidence,
        ..SimSpec::new(cfg, targets, s.iterations, s.seed)
    }
}

fn coefficients(s: &Scenario) -> Result<Artifacts> {
    let chan: ChannelRealization = match &s.channel {
        ChannelSource::Profile { profile, doppler } => realize(profile, doppler, 0.0),
        ChannelSource::Fixed(c) => c.clone(),
    };
    let mut coeffs = Table::new(vec!["symbol", "subcarrier", "k", "kind", "re", "im", "power"]);
    let mut metrics = Table::new(vec![
        "order",
        "symbol",
        "subcarrier",
        "ebno_db",
        "channel_power",
        "ici_variance",
        "noise_density",
        "noise_plus_ici_variance",
        "ebrx",
        "sinr_ratio",
        "bep",
        "capacity_lower_bound",
    ]);
    for &m in &s.symbols {
        for &l in &s.subcarriers {
            let cs = coefficient_set(&s.cfg, &chan, m, l)?;
            let h = cs.channel_coeff;
            coeffs.push(vec![m.into(), l.into(), l.into(), "channel".into(), h.re.into(), h.im.into(), h.norm_sqr().into()]);
            for &(k, c) in &cs.ici_coeffs {
                coeffs.push(vec![m.into(), l.into(), k.into(), "ici".into(), c.re.into(), c.im.into(), c.norm_sqr().into()]);
            }
            for &order in &s.orders {
                let cfg = s.cfg.with_order(order)?.with_ebno_db(s.ebno_db)?;
                let x = symbol_bep(&cfg, &cs).with_context(|| format!("metrics for symbol {m}, subcarrier {l}"))?;
                metrics.push(vec![
                    order.into(),
                    m.into(),
                    l.into(),
                    s.ebno_db.into(),
                    x.channel_power.into(),
                    x.ici_variance.into(),
                    x.noise_density.into(),
                    x.noise_plus_ici_variance.into(),
                    x.ebrx.into(),
                    x.ratio.into(),
                    x.bep.into(),
                    x.capacity_lower_bound.into(),
                ]);
            }
        }
    }
    let mut a = Artifacts::new();
    a.tables.push(("coefficients".into(), coeffs));
    a.tables.push(("metrics".into(), metrics));
    a.files.push(("channel.csv".into(), save_realization(&chan)));
    Ok(a)
}

fn profile_source(s: &Scenario) -> Result<(&TapProfile, &DopplerConfig)> {
    match &s.channel {
        ChannelSource::Profile { profile, doppler } => Ok((profile, doppler)),
        ChannelSource::Fixed(_) => anyhow::bail!("the {} study needs a channel profile", s.kind.name()),
    }
}

fn normality(s: &Scenario) -> Result<Artifacts> {
    let (profile, dop) = profile_source(s)?;
    let axis = match s.axis {
        AxisKind::NormalizedDoppler => ProfileAxis::NormalizedDoppler {
            subcarrier: s.subcarriers[0],
            values: s.grid.clone(),
        },
        _ => ProfileAxis::Subcarriers(s.subcarriers.clone()),
    };
    let mut table = Table::new(vec![
        "profile",
        "symbol",
        "order",
        "subcarrier",
        "normalized_doppler",
        "realizations",
        "samples",
        "mean_skew",
        "var_skew",
        "mean_kurt",
        "var_kurt",
        "p05_kurt",
        "p95_kurt",
    ]);
    let mut a = Artifacts::new();
    for &m in &s.symbols {
        let study = NormalityStudy {
            symbol_index: m,
            orders: s.orders.clone(),
            n_samples: s.samples,
            n_realizations: s.realizations,
            seed: s.seed,
        };
        let rows = kurtosis_profile(&s.cfg, profile, dop, &axis, &study)?;
        for r in &rows {
            table.push(vec![
                profile.name.as_str().into(),
                m.into(),
                r.constellation_order.into(),
                r.subcarrier.into(),
                r.normalized_doppler.into(),
                r.realizations.into(),
                s.samples.into(),
                r.skewness_mean.into(),
                r.skewness_var.into(),
                r.kurtosis_mean.into(),
                r.kurtosis_var.into(),
                r.kurtosis_p05.into(),
                r.kurtosis_p95.into(),
            ]);
            if s.dump_samples || s.histogram_bins > 0 {
                let cfg = s.cfg.with_order(r.constellation_order)?;
                let set = normality_samples(&cfg, profile, dop, &study, 0, r.subcarrier, r.normalized_doppler)?;
                let stem = format!(
                    "m{m}_M{}_l{}_nd{}",
                    r.constellation_order, r.subcarrier, r.normalized_doppler
                );
                if s.dump_samples {
                    a.files.push((format!("samples/{stem}.csv"), samples_to_csv(&set)));
                }
                if s.histogram_bins > 0 {
                    let cov = set.covariance();
                    let half_width = 4.0 * cov[0].max(cov[2]).sqrt();
                    let h = histogram_2d(&set, s.histogram_bins, half_width)?;
                    let mut t = Table::new(vec!["re_center", "im_center", "count"]);
                    let step = 2.0 * half_width / h.bins as f64;
                    for ix in 0..h.bins {
                        for iy in 0..h.bins {
                            t.push(vec![
                                (-half_width + (ix as f64 + 0.5) * step).into(),
                                (-half_width + (iy as f64 + 0.5) * step).into(),
                                h.counts[ix * h.bins + iy].into(),
                            ]);
                        }
                    }
                    a.tables.push((format!("histograms/{stem}"), t));
                }
            }
        }
    }
    a.tables.insert(0, ("normality".into(), table));
    Ok(a)
}

fn instant(s: &Scenario) -> Result<Artifacts> {
    let mut table = Table::new(vec![
        "channel",
        "realization",
        "order",
        "symbol",
        "subcarrier",
        "ebno_db",
        "channel_power",
        "ici_variance",
        "noise_density",
        "ebrx_over_noise_ici",
        "bep",
        "ber",
        "ci_low",
        "ci_high",
        "error_bits",
        "total_bits",
        "discarded",
        "rho",
    ]);
    let mut a = Artifacts::new();
    for &order in &s.orders {
        let spec = sim_spec(s, s.cfg.with_order(order)?.with_ebno_db(s.ebno_db)?);
        let rows: Vec<InstantRow> = match &s.channel {
            ChannelSource::Profile { profile, doppler } => instantaneous(&spec, profile, doppler, s.realizations)?,
            ChannelSource::Fixed(chan) => run_with_metrics(&spec, chan, &[0])?
                .into_iter()
                .map(|(metrics, ber)| InstantRow {
                    realization: 0,
                    metrics,
                    ber,
                })
                .collect(),
        };
        for row in rows {
            let x = row.metrics;
            let b = row.ber;
            table.push(vec![
                channel_name(s).into(),
                row.realization.into(),
                order.into(),
                b.symbol_index.into(),
                b.subcarrier.into(),
                s.ebno_db.into(),
                x.map(|x| x.channel_power).into(),
                x.map(|x| x.ici_variance).into(),
                spec.cfg.noise_density.into(),
                x.map(|x| x.ratio).into(),
                x.map(|x| x.bep).into(),
                b.ber.into(),
                b.ci_low.into(),
                b.ci_high.into(),
                b.error_bits.into(),
                b.total_bits.into(),
                b.discarded.into(),
                b.rho.into(),
            ]);
        }
    }
    if s.dump_channels {
        if let ChannelSource::Profile { profile, doppler } = &s.channel {
            for r in 0..s.realizations {
                let chan = realize(profile, &doppler.with_seed(derive_seed(doppler.seed, &[r])), 0.0);
                a.files.push((format!("channels/realization_{r}.csv"), save_realization(&chan)));
            }
        }
    }
    a.tables.insert(0, ("instant".into(), table));
    Ok(a)
}

fn sweep(s: &Scenario) -> Result<Artifacts> {
    let (profile, dop) = profile_source(s)?;
    let axis = match s.axis {
        AxisKind::NormalizedDoppler => SweepAxis::NormalizedDoppler {
            values: s.grid.clone(),
            ebno_db: s.ebno_db,
        },
        _ => SweepAxis::EbNoDb(s.grid.clone()),
    };
    let mut table = Table::new(vec![
        "profile",
        "axis",
        "axis_value",
        "order",
        "symbol",
        "subcarrier",
        "mean_bep",
        "mean_ber",
        "ci_low",
        "ci_high",
        "realizations",
        "error_bits",
        "total_bits",
    ]);
    for &order in &s.orders {
        let spec = sim_spec(s, s.cfg.with_order(order)?);
        for r in average_sweep(&spec, profile, dop, s.realizations, &axis)? {
            table.push(vec![
                profile.name.as_str().into(),
                axis.name().into(),
                r.axis_value.into(),
                r.constellation_order.into(),
                r.symbol_index.into(),
                r.subcarrier.into(),
                r.mean_bep.into(),
                r.mean_ber.into(),
                r.ci_low.into(),
                r.ci_high.into(),
                r.realizations.into(),
                r.error_bits.into(),
                r.total_bits.into(),
            ]);
        }
    }
    let mut a = Artifacts::new();
    a.tables.push(("sweep".into(), table));
    Ok(a)
}

fn manifest(s: &Scenario, files: &[PathBuf], out: &Path) -> Result<String> {
    let mut doc = s.resolved.clone();
    let mut prov = toml::Table::new();
    prov.insert("tool".into(), env!("CARGO_PKG_NAME").into());
    prov.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    prov.insert(
        "files".into(),
        toml::Value::Array(
            files
                .iter()
                .map(|f| f.strip_prefix(out).unwrap_or(f).display().to_string().into())
                .collect(),
        ),
    );
    doc.provenance = Some(prov);
    Ok(format!(
        "# Resolved scenario. Rerun with:\n#   ofdm-ici {} --scenario {MANIFEST}\n{}",
        match s.kind {
            StudyKind::Coefficients => "coeffs",
            StudyKind::Normality => "normality",
            StudyKind::Instantaneous => "instant",
            StudyKind::AverageSweep => "sweep",
        },
        toml::to_string(&doc)?
    ))
}

fn execute(s: &Scenario) -> Result<Vec<PathBuf>> {
    let artifacts = match s.kind {
        StudyKind::Coefficients => coefficients(s)?,
        StudyKind::Normality => normality(s)?,
        StudyKind::Instantaneous => instant(s)?,
        StudyKind::AverageSweep => sweep(s)?,
    };
    let mut written = Vec::new();
    for (stem, table) in &artifacts.tables {
        for f in &s.formats {
            let (ext, text) = match f {
                Format::Csv => ("csv", table.to_csv()?),
                Format::Json => ("json", table.to_json()?),
            };
            let path = s.out_dir.join(format!("{stem}.{ext}"));
            write_file(&path, &text)?;
            written.push(path);
        }
    }
    for (name, text) in &artifacts.files {
        let path = s.out_dir.join(name);
        write_file(&path, text)?;
        written.push(path);
    }
    let path = s.out_dir.join(MANIFEST);
    write_file(&path, &manifest(s, &written, &s.out_dir)?)?;
    written.push(path);
    Ok(written)
}

/// Runs the study and writes its artifacts. On failure a [`FAILED_MARKER`]
/// file with the diagnostic is left in the output directory.
pub fn run_scenario(s: &Scenario) -> Result<RunReport> {
    std::fs::create_dir_all(&s.out_dir).with_context(|| format!("creating {}", s.out_dir.display()))?;
    let marker = s.out_dir.join(FAILED_MARKER);
    let _ = std::fs::remove_file(&marker);
    match execute(s) {
        Ok(files) => Ok(RunReport {
            out_dir: s.out_dir.clone(),
            files,
        }),
        Err(e) => {
            let _ = std::fs::remove_file(s.out_dir.join(MANIFEST));
            let _ = std::fs::write(&marker, format!("{e:#}\n"));
            Err(e)
        }
    }
}
