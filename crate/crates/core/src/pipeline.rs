//! End-to-end orchestration: pitch track → sentences → per-sentence peaks →
//! drift, followed by the report files and plots.
//!
//! All analysis happens before anything is written; the output directory is
//! then filled by a single writer. If any write fails, the files written so
//! far are removed.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::{analyze_drift, ClusterConfig, DriftError, DriftReport, DriftSummary, PeakPoint};
use crate::figures::{build_chart, unique_kinds, PlotKind};
use crate::histogram::{hz_to_cents, CentsConfig, HistogramConfig};
use crate::peaks::{histogram_peaks, sentence_peaks, HistogramPeaks, PeakConfig, PeakError, PeakFit, SentencePeaks};
use crate::pitch_io::{estimate_pitch, load_pitch_csv_with_band, load_wav, PitchIoError, PitchTrack, YinConfig};
use crate::segmentation::{segment, SegmentationConfig, SegmentationError, Sentence};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    Wav,
    /// `time,f0[,confidence]` rows.
    Csv,
}

impl InputKind {
    /// Guess from the file extension; anything but `.wav` is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("wav") => InputKind::Wav,
            _ => InputKind::Csv,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub input_kind: InputKind,
    /// Frame hop for CSV input; inferred from the timestamps when absent.
    pub hop_hint_sec: Option<f64>,
    /// Detector settings for WAV input. Its frequency band also bounds the
    /// plausible f0 values of CSV input.
    pub yin: YinConfig,
    pub segmentation: SegmentationConfig,
    pub cents: CentsConfig,
    pub histogram: HistogramConfig,
    pub peaks: PeakConfig,
    pub cluster: ClusterConfig,
    /// Leading sentences excluded from drift analysis (they are still
    /// segmented, fitted and reported).
    pub skip_leading_sentences: usize,
    pub plots: Vec<PlotKind>,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        let input = input.into();
        Self {
            input_kind: InputKind::from_path(&input),
            input,
            hop_hint_sec: None,
            yin: YinConfig::default(),
            segmentation: SegmentationConfig::default(),
            cents: CentsConfig::default(),
            histogram: HistogramConfig::default(),
            peaks: PeakConfig::default(),
            cluster: ClusterConfig::default(),
            skip_leading_sentences: 0,
            plots: Vec::new(),
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let cfg_err = |e: &dyn fmt::Display| PipelineError::new(Stage::Config, e.to_string());
        self.segmentation.validate().map_err(|e| cfg_err(&e))?;
        self.peaks.validate().map_err(|e| cfg_err(&e))?;
        self.cluster.validate().map_err(|e| cfg_err(&e))?;
        let h = &self.histogram;
        if !(h.bin_width_cents.is_finite() && h.bin_width_cents > 0.0) {
            return Err(cfg_err(&format!("invalid-config: bin width must be positive, got {}", h.bin_width_cents)));
        }
        if h.smooth_window.is_multiple_of(2) {
            return Err(cfg_err(&format!("invalid-config: smoothing window must be odd, got {}", h.smooth_window)));
        }
        if !(self.cents.ref_hz.is_finite() && self.cents.ref_hz > 0.0) {
            return Err(cfg_err(&format!("invalid-config: reference must be positive, got {} Hz", self.cents.ref_hz)));
        }
        if !(self.yin.f0_min_hz > 0.0 && self.yin.f0_min_hz < self.yin.f0_max_hz) {
            return Err(cfg_err(&format!(
                "invalid-config: need 0 < f0 min < f0 max, got [{}, {}] Hz",
                self.yin.f0_min_hz, self.yin.f0_max_hz
            )));
        }
        Ok(())
    }
}

/// Pipeline stage an error came from; used as the message prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    PitchIo,
    Segmentation,
    Peaks,
    Drift,
    Output,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::PitchIo => "pitch_io",
            Stage::Segmentation => "segmentation",
            Stage::Peaks => "peaks",
            Stage::Drift => "drift",
            Stage::Output => "output",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineError {
    pub stage: Stage,
    pub message: String,
    /// Set for configuration problems reported by a module.
    pub usage: bool,
}

impl PipelineError {
    fn new(stage: Stage, message: String) -> Self {
        Self { usage: stage == Stage::Config, stage, message }
    }

    /// 2 usage error, 3 input/output error, 4 analysis error.
    pub fn exit_code(&self) -> i32 {
        if self.usage {
            return 2;
        }
        match self.stage {
            Stage::Config => 2,
            Stage::PitchIo | Stage::Output => 3,
            Stage::Segmentation | Stage::Peaks | Stage::Drift => 4,
        }
    }
}

impl fmt::Display for PipelineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.stage.name(), self.message)
    }
}

impl std::error::Error for PipelineError {}

impl From<PitchIoError> for PipelineError {
    fn from(e: PitchIoError) -> Self {
        let usage = matches!(e, PitchIoError::Config(_));
        Self { stage: Stage::PitchIo, message: e.to_string(), usage }
    }
}

impl From<SegmentationError> for PipelineError {
    fn from(e: SegmentationError) -> Self {
        Self { stage: Stage::Segmentation, message: e.to_string(), usage: true }
    }
}

impl From<PeakError> for PipelineError {
    fn from(e: PeakError) -> Self {
        let usage = matches!(e, PeakError::Config(_));
        Self { stage: Stage::Peaks, message: e.to_string(), usage }
    }
}

impl From<DriftError> for PipelineError {
    fn from(e: DriftError) -> Self {
        let usage = matches!(e, DriftError::Config(_));
        Self { stage: Stage::Drift, message: e.to_string(), usage }
    }
}

/// Everything a run produced. `sentence_peaks` covers every sentence,
/// including skipped leading ones; `manifest` lists the files written, in
/// order.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub config: PipelineConfig,
    pub track: PitchTrack,
    pub sentences: Vec<Sentence>,
    pub sentence_peaks: Vec<SentencePeaks>,
    pub report: DriftReport,
    /// Peaks of the pooled histogram of all analyzed sentences.
    pub pooled: Option<HistogramPeaks>,
    pub diagnostics: Vec<String>,
    pub manifest: Vec<PathBuf>,
}

/// Run the analysis without touching the file system beyond reading input.
pub fn analyze(cfg: &PipelineConfig) -> Result<RunArtifacts, PipelineError> {
    cfg.validate()?;
    let track = load_track(cfg)?;
    let sentences = segment(&track, &cfg.segmentation)?;

    let sentence_peaks: Vec<SentencePeaks> = sentences
        .par_iter()
        .map(|s| sentence_peaks(s, &cfg.cents, &cfg.histogram, &cfg.peaks))
        .collect::<Result<_, _>>()?;
    let mut diagnostics: Vec<String> = sentence_peaks.iter().flat_map(|p| p.diagnostics.iter().cloned()).collect();

    let analyzed: Vec<(&Sentence, &[PeakFit])> =
        sentences.iter().zip(&sentence_peaks).skip(cfg.skip_leading_sentences).map(|(s, p)| (s, p.fits())).collect();
    if sentences.is_empty() {
        diagnostics.push("no sentences found".into());
    } else if analyzed.is_empty() {
        diagnostics.push(format!("all {} sentence(s) skipped as leading sentences", sentences.len()));
    }
    let report = analyze_drift(&analyzed, &cfg.cluster)?;

    let pooled_cents = analyzed
        .iter()
        .flat_map(|(s, _)| s.f0_values())
        .map(|f| hz_to_cents(f, &cfg.cents))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| PipelineError::from(PeakError::from(e)))?;
    let pooled = histogram_peaks(&pooled_cents, &cfg.histogram, &cfg.peaks).ok();

    Ok(RunArtifacts {
        config: cfg.clone(),
        track,
        sentences,
        sentence_peaks,
        report,
        pooled,
        diagnostics,
        manifest: Vec::new(),
    })
}

fn load_track(cfg: &PipelineConfig) -> Result<PitchTrack, PipelineError> {
    let file = File::open(&cfg.input)
        .map_err(|e| PipelineError::new(Stage::PitchIo, format!("io-error: {}: {e}", cfg.input.display())))?;
    let reader = std::io::BufReader::new(file);
    let track = match cfg.input_kind {
        InputKind::Csv => load_pitch_csv_with_band(reader, cfg.hop_hint_sec, (cfg.yin.f0_min_hz, cfg.yin.f0_max_hz))?,
        InputKind::Wav => estimate_pitch(&load_wav(reader)?, &cfg.yin)?,
    };
    if track.is_empty() {
        return Err(PitchIoError::EmptyTrack.into());
    }
    Ok(track)
}

/// Analyze, then write `report.json`, `peaks.csv`, `clusters.csv`,
/// `histogram.csv` (pooled histogram, when there is one) and the requested
/// plots into `cfg.out_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunArtifacts, PipelineError> {
    let mut artifacts = analyze(cfg)?;
    let mut writer = OutputWriter::create(&cfg.out_dir)?;
    match write_outputs(&artifacts, &mut writer) {
        Ok(()) => {
            artifacts.manifest = writer.finish();
            Ok(artifacts)
        }
        Err(e) => {
            writer.rollback();
            Err(e)
        }
    }
}

fn write_outputs(a: &RunArtifacts, w: &mut OutputWriter) -> Result<(), PipelineError> {
    w.write("report.json", |f| {
        serde_json::to_writer_pretty(&mut *f, &ReportJson::from_artifacts(a)).map_err(std::io::Error::other)?;
        writeln!(f)
    })?;
    w.write("peaks.csv", |f| write_peaks_csv(f, &a.sentence_peaks))?;
    w.write("clusters.csv", |f| write_clusters_csv(f, &a.report))?;
    if let Some(p) = &a.pooled {
        w.write("histogram.csv", |f| p.raw.write_csv(f).map_err(std::io::Error::other))?;
    }
    for kind in unique_kinds(&a.config.plots) {
        let svg = build_chart(a, kind).to_svg();
        w.write(kind.file_name(), |f| f.write_all(svg.as_bytes()))?;
    }
    Ok(())
}

/// Tracks written files so a failed run can remove them.
struct OutputWriter {
    dir: PathBuf,
    created_dir: bool,
    written: Vec<PathBuf>,
}

impl OutputWriter {
    fn create(dir: &Path) -> Result<Self, PipelineError> {
        let existed = dir.is_dir();
        fs::create_dir_all(dir)
            .map_err(|e| PipelineError::new(Stage::Output, format!("io-error: {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), created_dir: !existed, written: Vec::new() })
    }

    fn write(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), PipelineError> {
        let path = self.dir.join(name);
        let err = |e: std::io::Error| PipelineError::new(Stage::Output, format!("io-error: {}: {e}", path.display()));
        let file = File::create(&path).map_err(err)?;
        self.written.push(path.clone());
        let mut out = BufWriter::new(file);
        body(&mut out).map_err(err)?;
        out.flush().map_err(err)
    }

    fn finish(self) -> Vec<PathBuf> {
        self.written
    }

    fn rollback(self) {
        for p in &self.written {
            let _ = fs::remove_file(p);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceRow {
    pub index: usize,
    pub start_sec: f64,
    pub end_sec: f64,
    pub n_voiced_frames: usize,
    /// Excluded from drift analysis as a leading sentence.
    pub skipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePeaksRow {
    pub sentence_index: usize,
    /// Accepted fits, ascending by peak.
    pub fits: Vec<PeakFit>,
    /// Mountains whose fit was rejected.
    pub rejected: Vec<PeakFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRow {
    pub sentence_index: usize,
    pub cents: f64,
}

impl From<&PeakPoint> for MemberRow {
    fn from(p: &PeakPoint) -> Self {
        Self { sentence_index: p.sentence_index, cents: p.cents }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterRow {
    pub id: usize,
    pub significant: bool,
    pub members: Vec<MemberRow>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub r2: Option<f64>,
    pub slope_cents_per_minute: Option<f64>,
}

/// The `report.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportJson {
    pub config: PipelineConfig,
    pub sentences: Vec<SentenceRow>,
    pub peaks: Vec<SentencePeaksRow>,
    pub clusters: Vec<ClusterRow>,
    pub noise: Vec<MemberRow>,
    pub summary: DriftSummary,
    pub diagnostics: Vec<String>,
}

impl ReportJson {
    pub fn from_artifacts(a: &RunArtifacts) -> Self {
        let skip = a.config.skip_leading_sentences;
        let sentences = a
            .sentences
            .iter()
            .enumerate()
            .map(|(k, s)| SentenceRow {
                index: s.index,
                start_sec: s.start_sec,
                end_sec: s.end_sec,
                n_voiced_frames: s.frames.iter().filter(|f| f.is_voiced()).count(),
                skipped: k < skip,
            })
            .collect();
        let peaks = a
            .sentence_peaks
            .iter()
            .map(|p| SentencePeaksRow {
                sentence_index: p.sentence_index,
                fits: p.fits().to_vec(),
                rejected: p.rejected().to_vec(),
            })
            .collect();
        let clusters = a
            .report
            .clusters
            .iter()
            .map(|c| ClusterRow {
                id: c.cluster.id,
                significant: c.cluster.significant,
                members: c.cluster.points.iter().map(MemberRow::from).collect(),
                slope: c.line.map(|l| l.slope),
                intercept: c.line.map(|l| l.intercept),
                r2: c.line.map(|l| l.r2),
                slope_cents_per_minute: c.line.and_then(|l| l.slope_cents_per_minute),
            })
            .collect();
        Self {
            config: a.config.clone(),
            sentences,
            peaks,
            clusters,
            noise: a.report.noise.iter().map(MemberRow::from).collect(),
            summary: a.report.summary.clone(),
            diagnostics: a.diagnostics.clone(),
        }
    }
}

/// One row per fitted or rejected mountain.
pub fn write_peaks_csv<W: Write>(sink: W, peaks: &[SentencePeaks]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([
        "sentence_index",
        "lo_cents",
        "hi_cents",
        "apex_cents",
        "c1",
        "c2",
        "c3",
        "c4",
        "c5",
        "peak_cents",
        "rmse",
        "n_bins",
        "converged",
        "issue",
    ])?;
    for p in peaks {
        for f in p.fits().iter().chain(p.rejected()) {
            w.write_record([
                p.sentence_index.to_string(),
                f.lo_cents.to_string(),
                f.hi_cents.to_string(),
                f.apex_cents.to_string(),
                f.c1.to_string(),
                f.c2.to_string(),
                f.c3.to_string(),
                f.c4.to_string(),
                f.c5.to_string(),
                f.peak_cents.to_string(),
                f.rmse.to_string(),
                f.n_bins.to_string(),
                f.converged.to_string(),
                f.issue.map_or_else(String::new, |i| i.to_string()),
            ])?;
        }
    }
    w.flush()
}

/// `cluster_id,sentence_index,cents,significant`; noise rows have an empty
/// cluster id.
pub fn write_clusters_csv<W: Write>(sink: W, report: &DriftReport) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["cluster_id", "sentence_index", "cents", "significant"])?;
    for c in &report.clusters {
        for p in &c.cluster.points {
            w.write_record([
                c.cluster.id.to_string(),
                p.sentence_index.to_string(),
                p.cents.to_string(),
                c.cluster.significant.to_string(),
            ])?;
        }
    }
    for p in &report.noise {
        w.write_record([String::new(), p.sentence_index.to_string(), p.cents.to_string(), "false".into()])?;
    }
    w.flush()
}
