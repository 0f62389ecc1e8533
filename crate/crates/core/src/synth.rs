//! Planted-drift corpora: pitch tracks (and optionally audio) whose sentences
//! contain known notes drifting at a known rate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::histogram::{cents_to_hz, CentsConfig};
use crate::pitch_io::{AudioBuffer, PitchFrame, PitchIoError, PitchTrack};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedNote {
    /// Offset from `base_cents` at sentence 0.
    pub cents: f64,
    /// Sentences the note appears in; `None` means all of them.
    pub sentences: Option<Vec<usize>>,
}

impl PlantedNote {
    pub fn everywhere(cents: f64) -> Self {
        Self { cents, sentences: None }
    }

    fn sounds_in(&self, sentence: usize) -> bool {
        self.sentences.as_ref().is_none_or(|s| s.contains(&sentence))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub sentences: usize,
    pub notes: Vec<PlantedNote>,
    /// Pitch of offset 0, in cents above the reference (5700 ≈ A4 over C0).
    pub base_cents: f64,
    pub drift_cents_per_sentence: f64,
    /// Standard deviation of per-frame Gaussian jitter.
    pub jitter_cents: f64,
    pub note_sec: f64,
    pub silence_sec: f64,
    pub hop_sec: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sentences: 16,
            notes: [0.0, 200.0, 500.0].into_iter().map(PlantedNote::everywhere).collect(),
            base_cents: 5700.0,
            drift_cents_per_sentence: -2.0,
            jitter_cents: 8.0,
            note_sec: 1.5,
            silence_sec: 1.0,
            hop_sec: 256.0 / 44100.0,
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// Cents of `note` in `sentence` before jitter.
    pub fn planted_cents(&self, note: &PlantedNote, sentence: usize) -> f64 {
        self.base_cents + note.cents + self.drift_cents_per_sentence * sentence as f64
    }
}

/// Sentences are separated by `silence_sec` of unvoiced frames (plus a leading
/// silence); within a sentence each present note sounds for `note_sec`, in
/// the order listed.
pub fn synthesize_track(cfg: &SynthConfig, cents_cfg: &CentsConfig) -> Result<PitchTrack, PitchIoError> {
    if !(cfg.hop_sec > 0.0 && cfg.note_sec > 0.0 && cfg.silence_sec >= 0.0 && cfg.jitter_cents >= 0.0) {
        return Err(PitchIoError::Config("synth durations must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let jitter = Normal::new(0.0, cfg.jitter_cents).map_err(|e| PitchIoError::Config(e.to_string()))?;
    let note_frames = (cfg.note_sec / cfg.hop_sec).round() as usize;
    let silence_frames = (cfg.silence_sec / cfg.hop_sec).round() as usize;

    let mut frames = Vec::new();
    let mut push = |f0: Option<f64>| {
        let t = frames.len() as f64 * cfg.hop_sec;
        frames.push(match f0 {
            Some(f) => PitchFrame::voiced(t, f, 1.0),
            None => PitchFrame::unvoiced(t),
        });
    };
    for _ in 0..silence_frames {
        push(None);
    }
    for s in 0..cfg.sentences {
        for note in cfg.notes.iter().filter(|n| n.sounds_in(s)) {
            let center = cfg.planted_cents(note, s);
            for _ in 0..note_frames {
                push(Some(cents_to_hz(center + jitter.sample(&mut rng), cents_cfg)));
            }
        }
        for _ in 0..silence_frames {
            push(None);
        }
    }
    PitchTrack::new(frames, cfg.hop_sec)
}

/// Render a track as a sine whose frequency follows the voiced frames; unvoiced
/// frames are silent. Phase is continuous across frames.
pub fn render_audio(track: &PitchTrack, sample_rate_hz: u32, amplitude: f32) -> Result<AudioBuffer, PitchIoError> {
    let sr = sample_rate_hz as f64;
    let total = (track.end_sec() * sr).round() as usize;
    let mut samples = Vec::with_capacity(total);
    let mut phase = 0.0f64;
    let frames = track.frames();
    let mut k = 0;
    for i in 0..total {
        let t = i as f64 / sr;
        while k + 1 < frames.len() && frames[k + 1].time_sec <= t {
            k += 1;
        }
        match frames.get(k).and_then(|f| f.f0_hz) {
            Some(f0) => {
                phase = (phase + std::f64::consts::TAU * f0 / sr) % std::f64::consts::TAU;
                samples.push(amplitude * phase.sin() as f32);
            }
            None => samples.push(0.0),
        }
    }
    AudioBuffer::new(sample_rate_hz, samples)
}
