use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use ofdm_ici_cli::scenario::{ChannelSource, Format, StudyKind};
use ofdm_ici_cli::{load_scenario, run_scenario, Overrides};

#[derive(Parser)]
#[command(name = "ofdm-ici", version, about = "OFDM ICI, BEP and capacity studies over doubly-selective channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// Overrides both the channel and the study seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "OFDM_ICI_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "OFDM_ICI_THREADS")]
    threads: Option<usize>,
    /// Output formats; repeat or comma-separate for several.
    #[arg(long, global = true, value_enum, value_delimiter = ',')]
    format: Vec<CliFormat>,
    /// Use the published study sizes for unset realization and iteration counts.
    #[arg(long = "paper-scale", global = true)]
    full_scale: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Channel and ICI coefficients with per-symbol BEP and capacity.
    Coeffs,
    /// Mardia skewness and kurtosis of ICI samples.
    Normality,
    /// Instantaneous BER, BEP and error factors.
    Instant,
    /// BEP and BER averaged over channel realizations.
    Sweep,
    /// Check a scenario and print its resolved form.
    Validate,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFormat {
    Csv,
    Json,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let Some(path) = &cli.scenario else {
        bail!("--scenario <file> is required");
    };
    let doc = load_scenario(path)?;
    let kind = match cli.command {
        Command::Coeffs => Some(StudyKind::Coefficients),
        Command::Normality => Some(StudyKind::Normality),
        Command::Instant => Some(StudyKind::Instantaneous),
        Command::Sweep => Some(StudyKind::AverageSweep),
        Command::Validate => None,
    };
    let formats = (!cli.format.is_empty()).then(|| {
        cli.format
            .iter()
            .map(|f| match f {
                CliFormat::Csv => Format::Csv,
                CliFormat::Json => Format::Json,
            })
            .collect()
    });
    let ov = Overrides {
        kind,
        seed: cli.seed,
        out_dir: cli.out.clone(),
        formats,
        full_scale: cli.full_scale,
    };
    let scenario = doc.resolve(&ov, path.parent())?;
    if matches!(cli.command, Command::Validate) {
        let source = match &scenario.channel {
            ChannelSource::Profile { profile, doppler } => format!(
                "profile {} ({} taps), max Doppler {} Hz, {} sinusoids, seed {}",
                profile.name,
                profile.taps.len(),
                doppler.max_doppler,
                doppler.n_sinusoids,
                doppler.seed
            ),
            ChannelSource::Fixed(c) => format!("fixed realization `{}` ({} paths)", c.label, c.paths.len()),
        };
        println!("scenario `{}` is valid: {} study", scenario.name, scenario.kind.name());
        println!("channel: {source}");
        print!("{}", toml::to_string(&scenario.resolved)?);
        return Ok(());
    }
    let report = run_scenario(&scenario)?;
    for f in &report.files {
        println!("{}", f.display());
    }
    Ok(())
}
