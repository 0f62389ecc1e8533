use std::fs::File;
use std::io::{BufWriter, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use driftmeter::drift::ClusterMetric;
use driftmeter::figures::{PlotKind, UnknownPlotKind};
use driftmeter::histogram::{CentsConfig, FitSource};
use driftmeter::pipeline::{run_pipeline, InputKind, PipelineConfig, RunArtifacts};
use driftmeter::pitch_io::{write_pitch_csv, write_wav_mono16};
use driftmeter::segmentation::SegmentationMode;
use driftmeter::synth::{render_audio, synthesize_track, PlantedNote, SynthConfig};

#[derive(Parser)]
#[command(name = "driftmeter", version, about = "Measure pitch drift in unaccompanied singing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a recording or pitch track and write reports into a directory.
    Analyze(AnalyzeArgs),
    /// Generate a synthetic corpus with planted, drifting notes.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InputKindArg {
    Wav,
    Csv,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// WAV audio or a `time,f0[,confidence]` CSV pitch track.
    #[arg(long)]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    input_kind: Option<InputKindArg>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Histogram bin width in cents.
    #[arg(long, default_value_t = 5.0)]
    bin_width: f64,
    /// Moving-average window in bins (odd).
    #[arg(long, default_value_t = 7)]
    smooth_window: usize,
    /// Minimum silence separating sentences, in seconds.
    #[arg(long, default_value_t = 0.5)]
    min_silence: f64,
    /// Minimum sentence duration, in seconds.
    #[arg(long, default_value_t = 1.0)]
    min_sentence: f64,
    /// Split into fixed-length segments of this many seconds instead of
    /// splitting at silences.
    #[arg(long, value_name = "SEC")]
    fixed_segments: Option<f64>,
    /// DBSCAN neighborhood radius in scaled units.
    #[arg(long, default_value_t = 1.5)]
    eps: f64,
    /// DBSCAN minimum neighborhood size (including the point itself).
    #[arg(long, default_value_t = 2)]
    min_samples: usize,
    /// Cents per unit of clustering distance.
    #[arg(long, default_value_t = 25.0)]
    cents_scale: f64,
    /// Sentences per unit of clustering distance.
    #[arg(long, default_value_t = 1.0)]
    index_scale: f64,
    /// Cluster by cents only, ignoring sentence distance.
    #[arg(long)]
    cents_only: bool,
    /// Minimum cluster size counted as significant.
    #[arg(long, default_value_t = 3)]
    min_cluster: usize,
    /// Exclude this many leading sentences from drift analysis.
    #[arg(long, default_value_t = 0)]
    skip_leading: usize,
    /// Fit the smoothed histogram instead of the raw one.
    #[arg(long)]
    fit_smoothed: bool,
    /// YIN absolute threshold (WAV input).
    #[arg(long, default_value_t = 0.1)]
    yin_threshold: f64,
    /// Frame hop of a CSV track in seconds; inferred when omitted.
    #[arg(long)]
    hop: Option<f64>,
    /// Plots to write, comma separated: track,histogram,fit,scatter,clusters.
    #[arg(long, value_delimiter = ',', value_parser = parse_plot_kind)]
    plots: Vec<PlotKind>,
}

fn parse_plot_kind(s: &str) -> Result<PlotKind, UnknownPlotKind> {
    s.trim().parse()
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthFormat {
    Csv,
    Wav,
}

#[derive(Args)]
struct SynthArgs {
    /// Output file.
    #[arg(long)]
    out: PathBuf,
    /// Output format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    format: Option<SynthFormat>,
    #[arg(long, default_value_t = 16)]
    sentences: usize,
    /// Note offsets in cents from the base pitch, present in every sentence.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,200,500")]
    notes: Vec<f64>,
    /// A note present only in some sentences: `CENTS@I,J,...`. Repeatable.
    #[arg(long, value_parser = parse_sparse_note, allow_hyphen_values = true)]
    sparse_note: Vec<PlantedNote>,
    /// Pitch of offset 0 in cents above 16.3516 Hz.
    #[arg(long, default_value_t = 5700.0, allow_hyphen_values = true)]
    base_cents: f64,
    /// Drift in cents per sentence.
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    drift: f64,
    /// Standard deviation of per-frame jitter in cents.
    #[arg(long, default_value_t = 8.0)]
    jitter: f64,
    #[arg(long, default_value_t = 1.5)]
    note_sec: f64,
    #[arg(long, default_value_t = 1.0)]
    silence_sec: f64,
    /// Frame hop in seconds.
    #[arg(long, default_value_t = 256.0 / 44100.0)]
    hop: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sample rate for WAV output.
    #[arg(long, default_value_t = 44100)]
    sample_rate: u32,
}

fn parse_sparse_note(s: &str) -> Result<PlantedNote, String> {
    let (cents, list) = s.split_once('@').ok_or("expected CENTS@I,J,...")?;
    let cents = cents.trim().parse::<f64>().map_err(|e| format!("bad cents '{cents}': {e}"))?;
    let sentences = list
        .split(',')
        .map(|i| i.trim().parse::<usize>().map_err(|e| format!("bad sentence index '{i}': {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PlantedNote { cents, sentences: Some(sentences) })
}

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Self {
        let color = std::env::var_os("DRIFTMETER_NO_COLOR").is_none() && std::io::stderr().is_terminal();
        Self { color }
    }

    fn paint(&self, code: &str, text: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn error(&self, msg: &str) {
        eprintln!("{} {msg}", self.paint("1;31", "error:"));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let style = Style::detect();
    match cli.command {
        Command::Analyze(args) => analyze(args, &style),
        Command::Synth(args) => synth(args, &style),
    }
}

fn analyze(args: AnalyzeArgs, style: &Style) -> ExitCode {
    let mut cfg = PipelineConfig::new(&args.input, &args.out);
    cfg.input_kind = match args.input_kind {
        Some(InputKindArg::Wav) => InputKind::Wav,
        Some(InputKindArg::Csv) => InputKind::Csv,
        None => InputKind::from_path(&args.input),
    };
    cfg.hop_hint_sec = args.hop;
    cfg.yin.threshold = args.yin_threshold;
    cfg.histogram.bin_width_cents = args.bin_width;
    cfg.histogram.smooth_window = args.smooth_window;
    if args.fit_smoothed {
        cfg.histogram.fit_source = FitSource::Smoothed;
    }
    cfg.segmentation.min_silence_sec = args.min_silence;
    cfg.segmentation.min_sentence_sec = args.min_sentence;
    if let Some(len) = args.fixed_segments {
        cfg.segmentation.mode = SegmentationMode::Fixed;
        cfg.segmentation.fixed_len_sec = len;
    }
    cfg.cluster.eps = args.eps;
    cfg.cluster.min_samples = args.min_samples;
    cfg.cluster.cents_scale = args.cents_scale;
    cfg.cluster.index_scale = args.index_scale;
    cfg.cluster.min_significant_size = args.min_cluster;
    if args.cents_only {
        cfg.cluster.metric = ClusterMetric::CentsOnly;
    }
    cfg.skip_leading_sentences = args.skip_leading;
    cfg.plots = args.plots;

    match run_pipeline(&cfg) {
        Ok(a) => {
            print_summary(&a, style);
            ExitCode::SUCCESS
        }
        Err(e) => {
            style.error(&e.to_string());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_summary(a: &RunArtifacts, style: &Style) {
    let out = std::io::stdout();
    let mut out = out.lock();
    let r = &a.report;
    let _ = writeln!(
        out,
        "{} sentence(s), {} analyzed, {} peak(s), {} cluster(s) ({} significant), {} noise point(s)",
        a.sentences.len(),
        r.sentences,
        r.points.len(),
        r.clusters.len(),
        r.summary.n_significant_clusters,
        r.noise.len()
    );
    for c in &r.clusters {
        let tag = if c.cluster.significant { "" } else { " [insignificant]" };
        let line = match c.line {
            Some(l) => format!("slope {:+.3} cents/sentence, r² {:.3}", l.slope, l.r2),
            None => "no drift line (single sentence)".to_string(),
        };
        let _ = writeln!(out, "  cluster {}: {} point(s), {line}{tag}", c.cluster.id, c.cluster.points.len());
    }
    if let Some(m) = r.summary.mean_slope {
        let _ = writeln!(out, "mean drift {} cents/sentence", style.paint("1", &format!("{m:+.3}")));
    }
    for d in &a.diagnostics {
        let _ = writeln!(out, "note: {d}");
    }
    for p in &a.manifest {
        let _ = writeln!(out, "wrote {}", p.display());
    }
}

fn synth(args: SynthArgs, style: &Style) -> ExitCode {
    let mut notes: Vec<PlantedNote> = args.notes.iter().copied().map(PlantedNote::everywhere).collect();
    notes.extend(args.sparse_note);
    let cfg = SynthConfig {
        sentences: args.sentences,
        notes,
        base_cents: args.base_cents,
        drift_cents_per_sentence: args.drift,
        jitter_cents: args.jitter,
        note_sec: args.note_sec,
        silence_sec: args.silence_sec,
        hop_sec: args.hop,
        seed: args.seed,
    };
    let format = args.format.unwrap_or_else(|| match args.out.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("wav") => SynthFormat::Wav,
        _ => SynthFormat::Csv,
    });
    let result = synthesize_track(&cfg, &CentsConfig::default()).and_then(|track| {
        let file = File::create(&args.out)?;
        match format {
            SynthFormat::Csv => write_pitch_csv(BufWriter::new(file), &track),
            SynthFormat::Wav => write_wav_mono16(BufWriter::new(file), &render_audio(&track, args.sample_rate, 0.5)?),
        }
    });
    match result {
        Ok(()) => {
            println!("wrote {}", args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            style.error(&format!("synth: {e}"));
            let code = if matches!(e, driftmeter::pitch_io::PitchIoError::Config(_)) { 2 } else { 3 };
            ExitCode::from(code)
        }
    }
}
