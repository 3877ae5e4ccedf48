//! Command-line front end: `simulate`, `spectrogram`, `variance-curve`,
//! `inject-clicks`.
//!
//! Exit codes: 0 success, 2 configuration errors, 3 ingestion errors.

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use uosf::error::{Error, Result};
use uosf::osf::OsfKind;
use uosf::pipeline::kvconfig::KvFile;
use uosf::pipeline::manifest::{
    InjectClicksSpec, Manifest, RunSpec, SimulateSpec, SpectrogramSpec, VarianceCurveSpec,
};
use uosf::pipeline::{self, emit, ClickSpec};
use uosf::simulate::{self, run_study};
use uosf::spectral::TimeSeries;
use uosf::universal::UniversalConfig;

#[derive(Parser)]
#[command(name = "uosf", version, about = "Universal order-statistics filters for robust PSD estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mixture-noise Monte Carlo study: metrics.csv + blend_trace.csv.
    Simulate(SimulateArgs),
    /// Per-bin spectrogram estimation of a WAV file: one CSV per estimator.
    Spectrogram(SpectrogramArgs),
    /// Analytic normalized variance of both filter families by rank.
    VarianceCurve(VarianceCurveArgs),
    /// Add synthetic broadband clicks to a WAV file.
    InjectClicks(InjectClicksArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key-value config file (sections; unknown keys are errors).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run a recorded manifest byte-identically. Only --out-dir may be
    /// combined with this.
    #[arg(long, conflicts_with = "config")]
    from_manifest: Option<PathBuf>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Emit powers in dB (10 log10, floor -300).
    #[arg(long)]
    db: bool,
    /// Emit linear powers (the default).
    #[arg(long, conflicts_with = "db")]
    linear: bool,
}

impl CommonArgs {
    fn kv(&self) -> Result<Option<KvFile>> {
        self.config.as_deref().map(KvFile::load).transpose()
    }

    fn forbid_overrides_with_manifest(&self, extra_overrides: bool) -> Result<()> {
        if self.from_manifest.is_some()
            && (self.seed.is_some() || self.db || self.linear || extra_overrides)
        {
            return Err(Error::Config(
                "--from-manifest reruns the recorded configuration; only --out-dir may be \
                 combined with it"
                    .into(),
            ));
        }
        Ok(())
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Monte Carlo trials (smaller values loosen attainable tolerances by
    /// about 1/sqrt(trials)).
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Args)]
struct SpectrogramArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input WAV (PCM 16/24/32-bit int or 32-bit float; channel 0).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Comma-separated subset of raw,wosa,usawp,utlosf.
    #[arg(long)]
    estimators: Option<String>,
    /// One blend decision across all frequency bins.
    #[arg(long)]
    shared_blend: bool,
    /// Emit JSON instead of CSV matrices.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VarianceCurveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Window size R.
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Args)]
struct InjectClicksArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Input WAV.
    #[arg(long)]
    input: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Spectrogram(args) => cmd_spectrogram(args),
        Command::VarianceCurve(args) => cmd_variance_curve(args),
        Command::InjectClicks(args) => cmd_inject_clicks(args),
    };
    if let Err(err) = outcome {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn load_manifest_spec(path: &Path) -> Result<Manifest> {
    Manifest::load(path)
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    args.common.forbid_overrides_with_manifest(args.trials.is_some())?;
    let (spec, seed) = if let Some(path) = &args.common.from_manifest {
        let manifest = load_manifest_spec(path)?;
        match manifest.run {
            RunSpec::Simulate(spec) => (spec, manifest.seed),
            other => {
                return Err(Error::Config(format!(
                    "manifest records a '{}' run, not simulate",
                    other.command()
                )))
            }
        }
    } else {
        let mut spec = SimulateSpec::default();
        if let Some(mut kv) = args.common.kv()? {
            spec.apply_kv(&mut kv)?;
            kv.finish()?;
        }
        if let Some(trials) = args.trials {
            spec.trials = trials;
        }
        if args.common.db {
            spec.db = true;
        }
        (spec, args.common.seed.unwrap_or(DEFAULT_SEED))
    };

    let mix = spec.to_mixture(seed);
    let univ = UniversalConfig::new(spec.r, OsfKind::Tlosf, spec.c, spec.tau);
    let pool = pipeline::worker_pool()?;
    let study = pool.install(|| run_study(&mix, &univ, spec.trials, &spec.checkpoints))?;

    ensure_out_dir(&args.common.out_dir)?;
    let metrics_path = args.common.out_dir.join("metrics.csv");
    emit::write_metrics_csv(&metrics_path, &study.metrics)?;
    let blend_path = args.common.out_dir.join("blend_trace.csv");
    emit::write_blend_csv(&blend_path, &study.blends)?;
    let manifest = Manifest::new(RunSpec::Simulate(spec), seed);
    let manifest_path = args.common.out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    println!("wrote {}", metrics_path.display());
    println!("wrote {}", blend_path.display());
    println!("wrote {}", manifest_path.display());
    Ok(())
}

const DEFAULT_SEED: u64 = 42;

fn cmd_spectrogram(args: SpectrogramArgs) -> Result<()> {
    args.common.forbid_overrides_with_manifest(
        args.estimators.is_some() || args.shared_blend || args.json || args.input.is_some(),
    )?;
    let (spec, input_path) = if let Some(path) = &args.common.from_manifest {
        let manifest = load_manifest_spec(path)?;
        let input = manifest
            .input_path
            .clone()
            .ok_or_else(|| Error::Config("manifest lacks an input path".into()))?;
        match &manifest.run {
            RunSpec::Spectrogram(spec) => {
                let bytes = std::fs::read(&input).map_err(|e| {
                    Error::Ingestion(format!("cannot read {input}: {e}"))
                })?;
                manifest.check_input_digest(&bytes)?;
                (spec.clone(), PathBuf::from(input))
            }
            other => {
                return Err(Error::Config(format!(
                    "manifest records a '{}' run, not spectrogram",
                    other.command()
                )))
            }
        }
    } else {
        let input = args
            .input
            .clone()
            .ok_or_else(|| Error::Config("--input is required".into()))?;
        let mut spec = SpectrogramSpec::default();
        if let Some(mut kv) = args.common.kv()? {
            spec.apply_kv(&mut kv)?;
            kv.finish()?;
        }
        if let Some(text) = &args.estimators {
            spec.estimators = pipeline::parse_estimators(text)?;
        }
        if args.shared_blend {
            spec.shared_blend = true;
        }
        if args.json {
            spec.json = true;
        }
        if args.common.db {
            spec.db = true;
        }
        (spec, input)
    };

    let bytes = std::fs::read(&input_path)
        .map_err(|e| Error::Ingestion(format!("cannot read {}: {e}", input_path.display())))?;
    let series = pipeline::parse_wav(&bytes)?;
    let config = spec.to_pipeline_config();
    let results = pipeline::run_spectrogram(&series, &config)?;

    ensure_out_dir(&args.common.out_dir)?;
    for (estimator, sg) in &results {
        let name = if spec.json {
            format!("{estimator}.json")
        } else {
            format!("{estimator}.csv")
        };
        let path = args.common.out_dir.join(name);
        if spec.json {
            emit::write_spectrogram_json(&path, sg, spec.db)?;
        } else {
            emit::write_spectrogram_csv(&path, sg, spec.db)?;
        }
        println!("wrote {}", path.display());
    }
    let manifest = Manifest::new(RunSpec::Spectrogram(spec), 0)
        .with_input(&input_path, &bytes);
    let manifest_path = args.common.out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

fn cmd_variance_curve(args: VarianceCurveArgs) -> Result<()> {
    args.common.forbid_overrides_with_manifest(args.r.is_some())?;
    let spec = if let Some(path) = &args.common.from_manifest {
        match load_manifest_spec(path)?.run {
            RunSpec::VarianceCurve(spec) => spec,
            other => {
                return Err(Error::Config(format!(
                    "manifest records a '{}' run, not variance-curve",
                    other.command()
                )))
            }
        }
    } else {
        let mut spec = VarianceCurveSpec::default();
        if let Some(mut kv) = args.common.kv()? {
            spec.apply_kv(&mut kv)?;
            kv.finish()?;
        }
        if let Some(r) = args.r {
            spec.r = r;
        }
        if args.common.db {
            spec.db = true;
        }
        spec
    };

    let rows = pipeline::variance_curve(spec.r)?;
    ensure_out_dir(&args.common.out_dir)?;
    let path = args.common.out_dir.join("variance_curve.csv");
    emit::write_variance_curve_csv(&path, &rows, spec.db)?;
    Manifest::new(RunSpec::VarianceCurve(spec), 0)
        .save(&args.common.out_dir.join("manifest.json"))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_inject_clicks(args: InjectClicksArgs) -> Result<()> {
    args.common.forbid_overrides_with_manifest(args.input.is_some())?;
    let (spec, input_path, seed) = if let Some(path) = &args.common.from_manifest {
        let manifest = load_manifest_spec(path)?;
        let input = manifest
            .input_path
            .clone()
            .ok_or_else(|| Error::Config("manifest lacks an input path".into()))?;
        match manifest.run {
            RunSpec::InjectClicks(spec) => (spec, PathBuf::from(input), manifest.seed),
            other => {
                return Err(Error::Config(format!(
                    "manifest records a '{}' run, not inject-clicks",
                    other.command()
                )))
            }
        }
    } else {
        let input = args
            .input
            .clone()
            .ok_or_else(|| Error::Config("--input is required".into()))?;
        let mut spec = InjectClicksSpec::default();
        if let Some(mut kv) = args.common.kv()? {
            spec.apply_kv(&mut kv)?;
            kv.finish()?;
        }
        (spec, input, args.common.seed.unwrap_or(DEFAULT_SEED))
    };

    let bytes = std::fs::read(&input_path)
        .map_err(|e| Error::Ingestion(format!("cannot read {}: {e}", input_path.display())))?;
    if let Some(path) = &args.common.from_manifest {
        load_manifest_spec(path)?.check_input_digest(&bytes)?;
    }
    let series = pipeline::parse_wav(&bytes)?;

    let click_spec = if spec.onsets_s.is_empty() {
        let mut rng = simulate::stream_rng(seed, 0, b"clickpos");
        ClickSpec::random(
            spec.count,
            spec.duration_samples,
            spec.level_db,
            series.duration_s(),
            spec.min_gap_s,
            &mut rng,
        )?
    } else {
        ClickSpec {
            onsets_s: spec.onsets_s.clone(),
            duration_samples: spec.duration_samples,
            level_db: spec.level_db,
            waveform: Default::default(),
        }
    };
    let mut rng = simulate::stream_rng(seed, 1, b"clicknse");
    let clicked = pipeline::inject_clicks(&series, &click_spec, &mut rng)?;

    ensure_out_dir(&args.common.out_dir)?;
    let out_path = args.common.out_dir.join("clicked.wav");
    write_wav(&out_path, &clicked)?;
    let manifest =
        Manifest::new(RunSpec::InjectClicks(spec), seed).with_input(&input_path, &bytes);
    manifest.save(&args.common.out_dir.join("manifest.json"))?;
    println!("wrote {}", out_path.display());
    Ok(())
}

fn write_wav(path: &Path, series: &TimeSeries) -> Result<()> {
    pipeline::write_wav_f32(path, series)
}
