use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nilm_core::harness::{
    load_houses, prepare_dataset, render_report, run_experiment, select_by_label, ExperimentConfig,
    HarnessError, ReportFormat,
};
use nilm_core::redd::load_house;
use nilm_core::synth::{generate_corpus, reference_profiles};
use nilm_core::Normalize;

#[derive(Parser)]
#[command(
    name = "nilm",
    version,
    about = "Appliance classification from sub-metered power traces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate house directories and print a per-channel summary
    Ingest(Opts),
    /// Write the windowed dataset as CSV plus a class-names file
    Windows(Opts),
    /// Run the experiment and print the evaluation report
    Eval(Opts),
    /// Write synthetic houses in the REDD layout
    Synth(SynthOpts),
}

/// Shared options. Flags override values read from `--config`.
#[derive(Args)]
struct Opts {
    /// JSON experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// House directory; repeat for several houses
    #[arg(long = "house-dir")]
    house_dirs: Vec<PathBuf>,
    #[arg(long)]
    threshold_watts: Option<f64>,
    #[arg(long)]
    min_gap: Option<usize>,
    #[arg(long)]
    window_len: Option<usize>,
    /// none, max or zscore
    #[arg(long)]
    normalize: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    train_frac: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// json, csv or text
    #[arg(long)]
    format: Option<String>,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthOpts {
    /// Directory receiving house_1, house_2, ...
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    houses: usize,
    #[arg(long, default_value_t = 20_000)]
    n_samples: usize,
    #[arg(long, default_value_t = nilm_core::harness::DEFAULT_SEED)]
    seed: u64,
}

impl Opts {
    fn resolve(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::from_file(path)?,
            None => ExperimentConfig::default(),
        };
        if !self.house_dirs.is_empty() {
            config.house_dirs = self.house_dirs.clone();
        }
        if let Some(v) = self.threshold_watts {
            config.threshold_watts = v;
        }
        if let Some(v) = self.min_gap {
            config.min_gap = v;
        }
        if let Some(v) = self.window_len {
            config.window_len = v;
        }
        if let Some(v) = &self.normalize {
            config.normalize = v.parse::<Normalize>()?;
        }
        if let Some(v) = self.k {
            config.k = v;
        }
        if let Some(v) = self.train_frac {
            config.train_frac = v;
        }
        if let Some(v) = self.seed {
            config.seed = v;
        }
        if let Some(v) = &self.format {
            config.format = v.parse::<ReportFormat>()?;
        }
        if self.out.is_some() {
            config.output = self.out.clone();
        }
        if config.house_dirs.is_empty() {
            return Err(HarnessError::Config(
                "no house directories (use --house-dir or --config)".into(),
            ));
        }
        // Without a config file, every labeled non-mains channel is its own appliance.
        if self.config.is_none() && config.channel_selection.is_empty() {
            config.channel_selection = select_by_label(&load_houses(&config.house_dirs)?);
        }
        config.validate()?;
        Ok(config)
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), HarnessError> {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| HarnessError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn ingest(opts: &Opts) -> Result<(), HarnessError> {
    let dirs = if opts.house_dirs.is_empty() {
        opts.resolve()?.house_dirs
    } else {
        opts.house_dirs.clone()
    };
    let mut text = String::new();
    for dir in &dirs {
        let loaded = load_house(dir).map_err(|source| HarnessError::Ingest {
            path: dir.clone(),
            source,
        })?;
        let _ = writeln!(text, "{}", dir.display());
        for trace in loaded.house.traces() {
            let name = loaded.house.labels().get(trace.channel()).unwrap_or("?");
            let samples = trace.samples();
            let mean = samples.iter().map(|s| s.watts).sum::<f64>() / samples.len().max(1) as f64;
            let span = match (samples.first(), samples.last()) {
                (Some(a), Some(b)) => format!("{}..{}", a.timestamp, b.timestamp),
                _ => "-".into(),
            };
            let _ = writeln!(
                text,
                "  channel {:>3}  {:<18} {:>9} samples  {:<23}  mean {:.1} W",
                trace.channel(),
                name,
                samples.len(),
                span,
                mean
            );
        }
        for c in &loaded.skipped_channels {
            let _ = writeln!(text, "  channel {c:>3}  (unlabeled, skipped)");
        }
    }
    emit(opts.out.as_deref(), text.as_bytes())
}

fn windows(opts: &Opts) -> Result<(), HarnessError> {
    let config = opts.resolve()?;
    let houses = load_houses(&config.house_dirs)?;
    let dataset = prepare_dataset(&config, &houses)?;
    emit(config.output.as_deref(), dataset.to_csv().as_bytes())?;
    match &config.output {
        Some(path) => {
            let names = path.with_extension("classes.txt");
            emit(Some(&names), dataset.class_names_text().as_bytes())?;
            log::info!(
                "{} windows of length {} over {} classes -> {} and {}",
                dataset.len(),
                dataset.window_len(),
                dataset.n_classes(),
                path.display(),
                names.display()
            );
        }
        None => log::warn!(
            "writing to stdout; class names: {:?}",
            dataset.class_names()
        ),
    }
    Ok(())
}

fn eval(opts: &Opts) -> Result<(), HarnessError> {
    let config = opts.resolve()?;
    let report = run_experiment(&config)?;
    emit(
        config.output.as_deref(),
        &render_report(&report, config.format),
    )
}

fn synth(opts: &SynthOpts) -> Result<(), HarnessError> {
    let profiles = reference_profiles();
    for i in 1..=opts.houses {
        let dir = opts.out.join(format!("house_{i}"));
        let seed = opts.seed.wrapping_add(i as u64 - 1);
        generate_corpus(&dir, &profiles, opts.n_samples, seed)?;
        log::info!("wrote {}", dir.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Ingest(o) => ingest(o),
        Command::Windows(o) => windows(o),
        Command::Eval(o) => eval(o),
        Command::Synth(o) => synth(o),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
