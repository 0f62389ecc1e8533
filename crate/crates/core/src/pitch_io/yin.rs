//! YIN fundamental-frequency estimation.
//!
//! For each frame the squared difference function
//! `d(τ) = Σ_{j<W} (x_j − x_{j+τ})²` is computed through the identity
//! `d(τ) = e₀ + e_τ − 2·r(τ)`, with the cross term `r` taken from one FFT
//! correlation. It is normalized by its cumulative mean, the first lag that
//! dips below the threshold is walked down to its local minimum, and the lag is
//! refined by a parabola through the raw difference values around it.
//!
//! There is no probabilistic candidate tracking; every frame is decided on its
//! own.

use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::{AudioBuffer, PitchFrame, PitchIoError, PitchTrack, Result, DEFAULT_F0_BAND};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YinConfig {
    pub frame_size: usize,
    pub hop_size: usize,
    pub threshold: f64,
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
}

impl Default for YinConfig {
    fn default() -> Self {
        Self {
            frame_size: 2048,
            hop_size: 256,
            threshold: 0.1,
            f0_min_hz: DEFAULT_F0_BAND.0,
            f0_max_hz: DEFAULT_F0_BAND.1,
        }
    }
}

impl YinConfig {
    pub fn validate(&self, sample_rate_hz: u32) -> Result<()> {
        let bad = |m: String| Err(PitchIoError::Config(m));
        if self.hop_size == 0 || self.hop_size > self.frame_size {
            return bad(format!("hop {} must be in 1..={}", self.hop_size, self.frame_size));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return bad(format!("threshold {} must be in (0, 1)", self.threshold));
        }
        if !(self.f0_min_hz > 0.0 && self.f0_min_hz < self.f0_max_hz) {
            return bad(format!("bad f0 band [{}, {}]", self.f0_min_hz, self.f0_max_hz));
        }
        let longest_period = sample_rate_hz as f64 / self.f0_min_hz;
        if (self.frame_size as f64) < 2.0 * longest_period + 2.0 {
            return bad(format!(
                "frame of {} samples cannot hold two periods of {} Hz at {} Hz",
                self.frame_size, self.f0_min_hz, sample_rate_hz
            ));
        }
        Ok(())
    }
}

/// Run YIN over `audio`, one frame per hop.
///
/// Frame `i` covers samples `[i·hop, i·hop + frame_size)` and is stamped at its
/// center. Voiced frames carry `confidence = 1 − d'(τ)`.
pub fn estimate_pitch(audio: &AudioBuffer, cfg: &YinConfig) -> Result<PitchTrack> {
    let sr = audio.sample_rate_hz();
    cfg.validate(sr)?;
    let samples = audio.samples();
    if samples.len() < cfg.frame_size {
        return Err(PitchIoError::InsufficientInput { got: samples.len(), need: cfg.frame_size });
    }

    let mut detector = FrameDetector::new(cfg, sr);
    let n_frames = (samples.len() - cfg.frame_size) / cfg.hop_size + 1;
    let sr_f = sr as f64;
    let frames = (0..n_frames)
        .map(|i| {
            let start = i * cfg.hop_size;
            let time = (start as f64 + cfg.frame_size as f64 / 2.0) / sr_f;
            match detector.detect(&samples[start..start + cfg.frame_size]) {
                Some((f0, conf)) => PitchFrame::voiced(time, f0, conf),
                None => PitchFrame::unvoiced(time),
            }
        })
        .collect();
    PitchTrack::new(frames, cfg.hop_size as f64 / sr_f)
}

struct FrameDetector {
    sample_rate: f64,
    threshold: f64,
    band: (f64, f64),
    tau_min: usize,
    tau_max: usize,
    window: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    frame_spec: Vec<Complex<f64>>,
    window_spec: Vec<Complex<f64>>,
    energy: Vec<f64>,
    diff: Vec<f64>,
    cmnd: Vec<f64>,
}

impl FrameDetector {
    fn new(cfg: &YinConfig, sample_rate: u32) -> Self {
        let sr = sample_rate as f64;
        let tau_min = ((sr / cfg.f0_max_hz).floor() as usize).max(2);
        let tau_max = (sr / cfg.f0_min_hz).ceil() as usize;
        // One lag past tau_max is needed for the parabola.
        let window = cfg.frame_size - tau_max - 1;
        let fft_len = (cfg.frame_size + window).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            sample_rate: sr,
            threshold: cfg.threshold,
            band: (cfg.f0_min_hz, cfg.f0_max_hz),
            tau_min,
            tau_max,
            window,
            forward: planner.plan_fft_forward(fft_len),
            inverse: planner.plan_fft_inverse(fft_len),
            frame_spec: vec![Complex::default(); fft_len],
            window_spec: vec![Complex::default(); fft_len],
            energy: vec![0.0; cfg.frame_size + 1],
            diff: vec![0.0; tau_max + 2],
            cmnd: vec![0.0; tau_max + 2],
        }
    }

    fn difference(&mut self, frame: &[f32]) {
        let n = self.frame_spec.len();
        let w = self.window;
        for (i, slot) in self.frame_spec.iter_mut().enumerate() {
            *slot = Complex::new(frame.get(i).map_or(0.0, |&s| s as f64), 0.0);
        }
        for (i, slot) in self.window_spec.iter_mut().enumerate() {
            *slot = if i < w { self.frame_spec[i] } else { Complex::default() };
        }
        self.energy[0] = 0.0;
        for (i, &s) in frame.iter().enumerate() {
            let s = s as f64;
            self.energy[i + 1] = self.energy[i] + s * s;
        }
        self.forward.process(&mut self.frame_spec);
        self.forward.process(&mut self.window_spec);
        for (a, b) in self.frame_spec.iter_mut().zip(&self.window_spec) {
            *a *= b.conj();
        }
        self.inverse.process(&mut self.frame_spec);

        let e0 = self.energy[w];
        let scale = 1.0 / n as f64;
        for tau in 0..self.diff.len() {
            let etau = self.energy[tau + w] - self.energy[tau];
            let cross = self.frame_spec[tau].re * scale;
            self.diff[tau] = (e0 + etau - 2.0 * cross).max(0.0);
        }
        self.diff[0] = 0.0;
    }

    fn normalize(&mut self) {
        self.cmnd[0] = 1.0;
        let mut running = 0.0;
        for tau in 1..self.diff.len() {
            running += self.diff[tau];
            self.cmnd[tau] = if running > 0.0 { self.diff[tau] * tau as f64 / running } else { 1.0 };
        }
    }

    fn detect(&mut self, frame: &[f32]) -> Option<(f64, f64)> {
        self.difference(frame);
        self.normalize();

        let mut tau = (self.tau_min..=self.tau_max).find(|&t| self.cmnd[t] < self.threshold)?;
        while tau < self.tau_max && self.cmnd[tau + 1] < self.cmnd[tau] {
            tau += 1;
        }
        let dip = self.cmnd[tau];

        let (a, b, c) = (self.diff[tau - 1], self.diff[tau], self.diff[tau + 1]);
        let curvature = a - 2.0 * b + c;
        let shift = if curvature > 0.0 { (0.5 * (a - c) / curvature).clamp(-1.0, 1.0) } else { 0.0 };
        let f0 = self.sample_rate / (tau as f64 + shift);
        if f0 < self.band.0 || f0 > self.band.1 {
            return None;
        }
        Some((f0, (1.0 - dip).clamp(0.0, 1.0)))
    }
}
