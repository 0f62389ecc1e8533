//! Splitting a pitch track into sentences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pitch_io::{PitchFrame, PitchTrack};

/// Sentences with fewer voiced frames than this are dropped.
pub const MIN_VOICED_FRAMES: usize = 10;

#[derive(Debug, Error)]
pub enum SegmentationError {
    #[error("invalid-config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SegmentationMode {
    Silence,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationConfig {
    pub mode: SegmentationMode,
    pub min_silence_sec: f64,
    pub min_sentence_sec: f64,
    pub fixed_len_sec: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self { mode: SegmentationMode::Silence, min_silence_sec: 0.5, min_sentence_sec: 1.0, fixed_len_sec: 20.0 }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<(), SegmentationError> {
        for (name, v) in [
            ("min_silence_sec", self.min_silence_sec),
            ("min_sentence_sec", self.min_sentence_sec),
            ("fixed_len_sec", self.fixed_len_sec),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SegmentationError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One musical phrase. `frames` holds only voiced frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub index: usize,
    pub start_sec: f64,
    pub end_sec: f64,
    pub frames: Vec<PitchFrame>,
}

impl Sentence {
    pub fn mid_sec(&self) -> f64 {
        0.5 * (self.start_sec + self.end_sec)
    }

    pub fn f0_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.frames.iter().filter_map(|f| f.f0_hz)
    }
}

/// Dispatch on `cfg.mode`.
pub fn segment(track: &PitchTrack, cfg: &SegmentationConfig) -> Result<Vec<Sentence>, SegmentationError> {
    match cfg.mode {
        SegmentationMode::Silence => segment_by_silence(track, cfg),
        SegmentationMode::Fixed => segment_fixed(track, cfg),
    }
}

/// Runs of voiced frames separated by silences of at least `min_silence_sec`,
/// before any length filtering.
///
/// The silence between two consecutive voiced frames is the time they are
/// apart minus one hop, i.e. the span the missing or unvoiced frames cover.
pub fn candidate_runs(track: &PitchTrack, min_silence_sec: f64) -> Vec<Vec<PitchFrame>> {
    let hop = track.hop_sec();
    let mut runs: Vec<Vec<PitchFrame>> = Vec::new();
    let mut current: Vec<PitchFrame> = Vec::new();
    for frame in track.voiced() {
        if let Some(prev) = current.last() {
            let silence = frame.time_sec - prev.time_sec - hop;
            if silence >= min_silence_sec {
                runs.push(std::mem::take(&mut current));
            }
        }
        current.push(*frame);
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

/// Split on long silences; keep runs lasting at least `min_sentence_sec` with
/// at least ten voiced frames, re-indexed from zero.
pub fn segment_by_silence(track: &PitchTrack, cfg: &SegmentationConfig) -> Result<Vec<Sentence>, SegmentationError> {
    cfg.validate()?;
    let sentences = candidate_runs(track, cfg.min_silence_sec)
        .into_iter()
        .filter(|run| run.len() >= MIN_VOICED_FRAMES)
        .filter_map(|run| {
            let start = run.first()?.time_sec;
            let end = run.last()?.time_sec;
            (end - start >= cfg.min_sentence_sec && end > start).then_some((start, end, run))
        })
        .enumerate()
        .map(|(index, (start_sec, end_sec, frames))| Sentence { index, start_sec, end_sec, frames })
        .collect();
    Ok(sentences)
}

/// Consecutive windows `[k·L, (k+1)·L)`; the last one is cut at the end of the
/// track. Windows with fewer than ten voiced frames are dropped.
pub fn segment_fixed(track: &PitchTrack, cfg: &SegmentationConfig) -> Result<Vec<Sentence>, SegmentationError> {
    cfg.validate()?;
    let len = cfg.fixed_len_sec;
    let track_end = track.end_sec();
    let mut windows: Vec<Vec<PitchFrame>> = Vec::new();
    for frame in track.voiced() {
        let k = (frame.time_sec / len).floor() as usize;
        if windows.len() <= k {
            windows.resize_with(k + 1, Vec::new);
        }
        windows[k].push(*frame);
    }
    let sentences = windows
        .into_iter()
        .enumerate()
        .filter(|(_, frames)| frames.len() >= MIN_VOICED_FRAMES)
        .enumerate()
        .map(|(index, (k, frames))| Sentence {
            index,
            start_sec: k as f64 * len,
            end_sec: ((k + 1) as f64 * len).min(track_end),
            frames,
        })
        .collect();
    Ok(sentences)
}
