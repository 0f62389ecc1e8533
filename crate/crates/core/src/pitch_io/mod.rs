//! Fundamental-frequency tracks: loading them from CSV, decoding WAV audio and
//! estimating f0 from audio with a YIN-style detector.

mod csv_track;
mod wav;
mod yin;

pub use csv_track::{load_pitch_csv, load_pitch_csv_with_band, write_pitch_csv};
pub use wav::{load_wav, write_wav_mono16};
pub use yin::{estimate_pitch, YinConfig};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default vocal plausibility band in Hz.
pub const DEFAULT_F0_BAND: (f64, f64) = (60.0, 1500.0);

#[derive(Debug, Error)]
pub enum PitchIoError {
    #[error("format-error: {0}")]
    Format(String),
    #[error("unsupported-format: {0}")]
    Unsupported(String),
    #[error("parse-error: row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error("order-error: row {row}: timestamp {time} does not increase")]
    Order { row: usize, time: f64 },
    #[error("empty-track")]
    EmptyTrack,
    #[error("insufficient-input: {got} samples, need at least {need}")]
    InsufficientInput { got: usize, need: usize },
    #[error("invalid-config: {0}")]
    Config(String),
    #[error("io-error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PitchIoError> = std::result::Result<T, E>;

/// Mono audio normalized to [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    sample_rate_hz: u32,
    samples: Vec<f32>,
}

impl AudioBuffer {
    pub const MIN_SAMPLE_RATE: u32 = 8000;

    /// Samples are clamped to [-1, 1]; non-finite samples are rejected.
    pub fn new(sample_rate_hz: u32, samples: Vec<f32>) -> Result<Self> {
        if sample_rate_hz < Self::MIN_SAMPLE_RATE {
            return Err(PitchIoError::Unsupported(format!(
                "sample rate {sample_rate_hz} Hz is below {} Hz",
                Self::MIN_SAMPLE_RATE
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(PitchIoError::Format("non-finite sample".into()));
        }
        let samples = samples.into_iter().map(|s| s.clamp(-1.0, 1.0)).collect();
        Ok(Self { sample_rate_hz, samples })
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn duration_sec(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// One time-stamped pitch estimate. `f0_hz` is `None` for unvoiced frames.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchFrame {
    pub time_sec: f64,
    pub f0_hz: Option<f64>,
    pub confidence: f64,
}

impl PitchFrame {
    pub fn voiced(time_sec: f64, f0_hz: f64, confidence: f64) -> Self {
        Self { time_sec, f0_hz: Some(f0_hz), confidence }
    }

    pub fn unvoiced(time_sec: f64) -> Self {
        Self { time_sec, f0_hz: None, confidence: 0.0 }
    }

    pub fn is_voiced(&self) -> bool {
        self.f0_hz.is_some()
    }
}

/// Frames strictly increasing in time, with a nominal hop.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    frames: Vec<PitchFrame>,
    hop_sec: f64,
}

impl PitchTrack {
    pub fn new(frames: Vec<PitchFrame>, hop_sec: f64) -> Result<Self> {
        if !(hop_sec.is_finite() && hop_sec > 0.0) {
            return Err(PitchIoError::Config(format!("hop must be positive, got {hop_sec}")));
        }
        for (i, f) in frames.iter().enumerate() {
            if !f.time_sec.is_finite() {
                return Err(PitchIoError::Parse { row: i + 1, msg: "non-finite time".into() });
            }
            if i > 0 && f.time_sec <= frames[i - 1].time_sec {
                return Err(PitchIoError::Order { row: i + 1, time: f.time_sec });
            }
        }
        Ok(Self { frames, hop_sec })
    }

    pub fn frames(&self) -> &[PitchFrame] {
        &self.frames
    }

    pub fn hop_sec(&self) -> f64 {
        self.hop_sec
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn voiced(&self) -> impl Iterator<Item = &PitchFrame> {
        self.frames.iter().filter(|f| f.is_voiced())
    }

    /// Time just past the last frame.
    pub fn end_sec(&self) -> f64 {
        self.frames.last().map_or(0.0, |f| f.time_sec + self.hop_sec)
    }
}
