//! Command-line entry point: separate, eval, budget, filter, loss and
//! init-weights subcommands. Exit codes: 0 on success, 1 on domain errors,
//! 2 on usage errors (clap).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use devox::core::loss::{combined_loss, spectral_l1, time_l1, LossConfig};
use devox::core::metrics::FrameGrid;
use devox::core::model::{budget, build_model, random_init};
use devox::core::{Model, ModelConfig};
use devox::dataset::{filter_dataset, scan_dataset, silence_ratio, SilenceParams, VOCAL_STEM};
use devox::eval::{evaluate, EvalOptions, MonoEmulation, OfflineRunner, Separator, StreamingRunner};
use devox::files::{load_config, load_weights, save_weights};
use devox::wav::{read_wav, write_wav, SampleFormat};

#[derive(Parser)]
#[command(
    name = "devox",
    version,
    about = "Streaming stereo singing-voice cancellation engine",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the accompaniment of a stereo mix (remove the vocals)
    Separate(SeparateArgs),
    /// Print the receptive field, look-ahead and parameter count of a config
    Budget(BudgetArgs),
    /// Evaluate a model over a stem dataset and write a report
    Eval(EvalArgs),
    /// Apply the vocal-silence filter to a dataset and list the outcome
    Filter(FilterArgs),
    /// Compare two takes with the weighted time/spectral loss
    Loss(LossArgs),
    /// Write a seeded random-initialization weight container
    InitWeights(InitWeightsArgs),
}

#[derive(Args)]
struct SeparateArgs {
    /// Weight container produced by init-weights or a trainer
    #[arg(long)]
    model: PathBuf,
    /// Stereo WAV to process (44.1 kHz for the reference config)
    #[arg(long)]
    input: PathBuf,
    /// Where to write the accompaniment estimate
    #[arg(long)]
    output: PathBuf,
    /// Model config TOML; defaults to the built-in reference architecture
    #[arg(long)]
    config: Option<PathBuf>,
    /// Process block-by-block through the streaming engine
    #[arg(long)]
    streaming: bool,
    /// Push size in samples when --streaming is set
    #[arg(long, default_value_t = 4096)]
    block: usize,
    /// Output sample encoding
    #[arg(long, default_value = "float32")]
    format: SampleFormat,
}

#[derive(Args)]
struct BudgetArgs {
    /// Model config TOML; defaults to the built-in reference architecture
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Weight container to evaluate
    #[arg(long)]
    model: PathBuf,
    /// Model config TOML; defaults to the built-in reference architecture
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset root: one directory per track with mixture/vocals/bass/drums/other WAVs
    #[arg(long)]
    dataset: PathBuf,
    /// Metric window length in seconds
    #[arg(long, default_value_t = 1.5)]
    window: f64,
    /// Metric hop in seconds
    #[arg(long, default_value_t = 0.75)]
    hop: f64,
    /// Run each channel independently as dual mono (per-channel pipeline)
    #[arg(long)]
    mono_emulation: bool,
    /// Separate through the streaming engine instead of the offline pass
    #[arg(long)]
    streaming: bool,
    /// Push size in samples when --streaming is set
    #[arg(long, default_value_t = 4096)]
    block: usize,
    /// Remove tracks whose vocal stem is silent for more than this fraction
    #[arg(long, default_value_t = 0.5)]
    max_silent: f64,
    /// RMS level (dBFS) under which a frame counts as silent
    #[arg(long, default_value_t = -60.0, allow_negative_numbers = true)]
    silence_threshold: f64,
    /// Silence analysis frame length in milliseconds
    #[arg(long, default_value_t = 100)]
    frame_ms: u32,
    /// Also report the combined time/spectral loss per track
    #[arg(long)]
    with_loss: bool,
    /// Where to write the report (JSON)
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct FilterArgs {
    /// Dataset root to scan
    #[arg(long)]
    dataset: PathBuf,
    /// RMS level (dBFS) under which a frame counts as silent
    #[arg(long, default_value_t = -60.0, allow_negative_numbers = true)]
    silence_threshold: f64,
    /// Silence analysis frame length in milliseconds
    #[arg(long, default_value_t = 100)]
    frame_ms: u32,
    /// Remove tracks whose vocal stem is silent for more than this fraction
    #[arg(long, default_value_t = 0.5)]
    max_silent: f64,
}

#[derive(Args)]
struct LossArgs {
    /// First WAV (estimate)
    #[arg(long)]
    a: PathBuf,
    /// Second WAV (reference)
    #[arg(long)]
    b: PathBuf,
    /// Weight of the time-domain L1 term
    #[arg(long, default_value_t = 0.875)]
    time_weight: f64,
    /// Weight of the multi-resolution spectral L1 term
    #[arg(long, default_value_t = 0.125)]
    spec_weight: f64,
}

#[derive(Args)]
struct InitWeightsArgs {
    /// Model config TOML; defaults to the built-in reference architecture
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where to write the weight container
    #[arg(long)]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

type AnyError = Box<dyn std::error::Error>;

fn run(command: Command) -> Result<(), AnyError> {
    match command {
        Command::Separate(args) => cmd_separate(args),
        Command::Budget(args) => cmd_budget(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Filter(args) => cmd_filter(args),
        Command::Loss(args) => cmd_loss(args),
        Command::InitWeights(args) => cmd_init_weights(args),
    }
}

fn resolve_config(path: &Option<PathBuf>) -> Result<ModelConfig, AnyError> {
    Ok(match path {
        Some(p) => load_config(p)?,
        None => ModelConfig::reference(),
    })
}

fn load_model(weights: &Path, config: &Option<PathBuf>) -> Result<Model, AnyError> {
    let config = resolve_config(config)?;
    let store = load_weights(weights)?;
    Ok(build_model(&config, &store)?)
}

fn cmd_separate(args: SeparateArgs) -> Result<(), AnyError> {
    let model = load_model(&args.model, &args.config)?;
    let input = read_wav(&args.input)?;
    if !input.is_stereo() {
        return Err(format!(
            "input must be stereo; {} has {} channel(s)",
            args.input.display(),
            input.channels()
        )
        .into());
    }
    let estimate = if args.streaming {
        let stream = model.open_stream();
        let la = stream.lookahead_samples();
        let la_ms = la as f64 * 1000.0 / model.config().sample_rate as f64;
        eprintln!("realized look-ahead: {la} samples ({la_ms:.2} ms)");
        drop(stream);
        StreamingRunner { model: &model, block: args.block }.separate(&input)?
    } else {
        model.forward_offline(&input)?
    };
    write_wav(&args.output, &estimate, args.format)?;
    Ok(())
}

fn cmd_budget(args: BudgetArgs) -> Result<(), AnyError> {
    let config = resolve_config(&args.config)?;
    let report = budget(&config)?;
    println!(
        "receptive_field_s: {:.4} ({} samples)",
        report.receptive_field_s, report.receptive_field_samples
    );
    println!(
        "lookahead_s: {:.4} ({} samples)",
        report.lookahead_s, report.lookahead_samples
    );
    println!(
        "param_count: {} ({:.2} M)",
        report.param_count,
        report.param_count as f64 / 1e6
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), AnyError> {
    let model = load_model(&args.model, &args.config)?;
    let scan = scan_dataset(&args.dataset)?;
    let silence = SilenceParams {
        frame_ms: args.frame_ms,
        threshold_db: args.silence_threshold,
    };
    let filtered = filter_dataset(&scan.tracks, &silence, args.max_silent);
    if filtered.kept.is_empty() {
        return Err(format!(
            "no tracks left to evaluate ({} scanned, {} removed by the silence filter, {} failed)",
            scan.tracks.len(),
            filtered.removed.len(),
            filtered.failed.len()
        )
        .into());
    }

    let grid = FrameGrid::from_seconds(args.window, args.hop, model.config().sample_rate)?;
    let mut echo = BTreeMap::new();
    echo.insert("window_s".into(), args.window.to_string());
    echo.insert("hop_s".into(), args.hop.to_string());
    echo.insert("sample_rate".into(), model.config().sample_rate.to_string());
    echo.insert(
        "model_config_hash".into(),
        format!("{:016x}", model.config().config_hash()),
    );
    echo.insert("silence_frame_ms".into(), args.frame_ms.to_string());
    echo.insert("silence_threshold_db".into(), args.silence_threshold.to_string());
    echo.insert("max_silent".into(), args.max_silent.to_string());
    let mode = match (args.streaming, args.mono_emulation) {
        (false, false) => "offline".to_string(),
        (true, false) => format!("streaming(block={})", args.block),
        (false, true) => "offline+mono-emulation".to_string(),
        (true, true) => format!("streaming(block={})+mono-emulation", args.block),
    };
    echo.insert("mode".into(), mode);
    if !filtered.removed.is_empty() {
        let removed: Vec<String> = filtered
            .removed
            .iter()
            .map(|(t, r)| format!("{}({r:.3})", t.id))
            .collect();
        echo.insert("filter_removed".into(), removed.join(", "));
    }
    if !filtered.failed.is_empty() {
        let failed: Vec<String> =
            filtered.failed.iter().map(|(t, e)| format!("{}: {e}", t.id)).collect();
        echo.insert("filter_failed".into(), failed.join("; "));
    }
    if !scan.skipped.is_empty() {
        let skipped: Vec<String> =
            scan.skipped.iter().map(|s| format!("{}: {}", s.id, s.reason)).collect();
        echo.insert("scan_skipped".into(), skipped.join("; "));
    }

    let options = EvalOptions {
        with_loss: args.with_loss.then(LossConfig::default),
        echo,
    };

    let offline = OfflineRunner(&model);
    let streaming = StreamingRunner { model: &model, block: args.block };
    let report = match (args.streaming, args.mono_emulation) {
        (false, false) => evaluate(&offline, &filtered.kept, grid, &options),
        (true, false) => evaluate(&streaming, &filtered.kept, grid, &options),
        (false, true) => evaluate(&MonoEmulation(offline), &filtered.kept, grid, &options),
        (true, true) => evaluate(&MonoEmulation(streaming), &filtered.kept, grid, &options),
    };

    std::fs::write(&args.report, report.to_text())
        .map_err(|e| format!("cannot write report {}: {e}", args.report.display()))?;

    let agg = &report.aggregates;
    println!(
        "SI-SDR_mono: {:.3} ± {:.3} dB  (n={}, excluded={})",
        agg.si_sdr_mono.mean, agg.si_sdr_mono.std, agg.si_sdr_mono.count, agg.si_sdr_mono.excluded
    );
    println!(
        "SSA: {:.3} ± {:.3} dB  (n={}, excluded={})",
        agg.ssa.mean, agg.ssa.std, agg.ssa.count, agg.ssa.excluded
    );
    if let Some(loss) = &agg.loss {
        println!("loss: {:.6} ± {:.6}  (n={})", loss.mean, loss.std, loss.count);
    }
    println!(
        "evaluated {} track(s), {} skipped during evaluation; report written to {}",
        report.tracks.len(),
        report.skipped_tracks.len(),
        args.report.display()
    );
    Ok(())
}

fn cmd_filter(args: FilterArgs) -> Result<(), AnyError> {
    let scan = scan_dataset(&args.dataset)?;
    let silence = SilenceParams {
        frame_ms: args.frame_ms,
        threshold_db: args.silence_threshold,
    };
    for skipped in &scan.skipped {
        println!("unreadable {}: {}", skipped.id, skipped.reason);
    }
    // Measure every track explicitly so the listing carries the ratios.
    let mut kept = 0usize;
    let mut removed = 0usize;
    for entry in &scan.tracks {
        match entry.load_stem(VOCAL_STEM).and_then(|clip| silence_ratio(&clip, &silence)) {
            Ok(ratio) if ratio > args.max_silent => {
                removed += 1;
                println!("removed {}  silence_ratio={ratio:.4}", entry.id);
            }
            Ok(ratio) => {
                kept += 1;
                println!("kept    {}  silence_ratio={ratio:.4}", entry.id);
            }
            Err(err) => println!("failed  {}: {err}", entry.id),
        }
    }
    println!(
        "{kept} kept, {removed} removed, {} unreadable",
        scan.skipped.len() + scan.tracks.len() - kept - removed
    );
    Ok(())
}

fn cmd_loss(args: LossArgs) -> Result<(), AnyError> {
    let a = read_wav(&args.a)?;
    let b = read_wav(&args.b)?;
    let config = LossConfig {
        time_weight: args.time_weight,
        spec_weight: args.spec_weight,
        ..LossConfig::default()
    };
    config.validate()?;
    let time = time_l1(&a, &b)?;
    let spectral = spectral_l1(&a, &b, &config)?;
    let combined = combined_loss(&a, &b, &config)?;
    println!("time_l1: {time:.8}");
    println!("spectral_l1: {spectral:.8}");
    println!("combined: {combined:.8}");
    Ok(())
}

fn cmd_init_weights(args: InitWeightsArgs) -> Result<(), AnyError> {
    let config = resolve_config(&args.config)?;
    let store = random_init(&config, args.seed)?;
    save_weights(&store, &args.output)?;
    println!(
        "wrote {} tensors ({} parameters) to {}",
        store.len(),
        store.param_count(),
        args.output.display()
    );
    Ok(())
}
