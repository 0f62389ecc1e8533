//! Mountain detection on smoothed pitch histograms and per-sentence peak
//! extraction.

mod fit;

pub use fit::{fit_tilted_gaussian, FitIssue, PeakFit, TiltedGaussian};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::histogram::{
    build_histogram, hz_to_cents, smooth_moving_average, CentsConfig, FitSource, Histogram, HistogramConfig,
    HistogramError,
};
use crate::segmentation::Sentence;

/// Five parameters need at least six points.
pub const MIN_FIT_BINS: usize = 6;

#[derive(Debug, Error)]
pub enum PeakError {
    #[error("invalid-config: {0}")]
    Config(String),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakConfig {
    /// Apex must reach this fraction of the histogram's global max.
    pub min_height_fraction: f64,
    /// Absolute floor on apex height, in frames.
    pub min_height_frames: f64,
    /// A mountain ends where the count drops below this fraction of its apex.
    pub valley_fraction: f64,
    /// Apexes less prominent than this fraction of their height are ripples
    /// on a larger mountain.
    pub min_prominence_fraction: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            min_height_fraction: 0.1,
            min_height_frames: 5.0,
            valley_fraction: 0.1,
            min_prominence_fraction: 0.2,
            max_iter: 200,
            tol: 1e-8,
        }
    }
}

impl PeakConfig {
    pub fn validate(&self) -> Result<(), PeakError> {
        let bad = |m: String| Err(PeakError::Config(m));
        if !(self.min_height_fraction > 0.0 && self.min_height_fraction <= 1.0) {
            return bad(format!("min_height_fraction {} not in (0, 1]", self.min_height_fraction));
        }
        if !(self.min_height_frames > 0.0) {
            return bad(format!("min_height_frames {} must be positive", self.min_height_frames));
        }
        if !(self.valley_fraction > 0.0 && self.valley_fraction < 1.0) {
            return bad(format!("valley_fraction {} not in (0, 1)", self.valley_fraction));
        }
        if !(self.min_prominence_fraction >= 0.0 && self.min_prominence_fraction <= 1.0) {
            return bad(format!("min_prominence_fraction {} not in [0, 1]", self.min_prominence_fraction));
        }
        if self.max_iter == 0 || !(self.tol > 0.0) {
            return bad("max_iter and tol must be positive".into());
        }
        Ok(())
    }
}

/// Inclusive bin range of one histogram bump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mountain {
    pub lo_bin: usize,
    pub hi_bin: usize,
    pub apex_bin: usize,
    pub apex_height: f64,
}

impl Mountain {
    pub fn width(&self) -> usize {
        self.hi_bin - self.lo_bin + 1
    }
}

/// Local maxima of `counts`. A plateau counts once, at its middle bin, when
/// both of its sides are lower or the histogram edge. A plateau spanning the
/// whole histogram is not a maximum.
fn local_maxima(counts: &[f64]) -> Vec<usize> {
    let n = counts.len();
    let mut out = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && counts[j + 1] == counts[i] {
            j += 1;
        }
        let left_lower = i == 0 || counts[i - 1] < counts[i];
        let right_lower = j + 1 == n || counts[j + 1] < counts[i];
        let whole = i == 0 && j + 1 == n;
        if left_lower && right_lower && !whole && counts[i] > 0.0 {
            out.push((i + j) / 2);
        }
        i = j + 1;
    }
    out
}

/// Height above the higher of the two cols separating `apex` from the nearest
/// higher maximum on each side (or from the histogram edge).
fn prominence(counts: &[f64], maxima: &[usize], k: usize) -> f64 {
    let apex = maxima[k];
    let h = counts[apex];
    let left_stop = maxima[..k].iter().rev().find(|&&m| counts[m] > h).copied().unwrap_or(0);
    let right_stop = maxima[k + 1..].iter().find(|&&m| counts[m] > h).copied().unwrap_or(counts.len() - 1);
    let col = |a: usize, b: usize| counts[a..=b].iter().copied().fold(f64::INFINITY, f64::min);
    h - col(left_stop, apex).max(col(apex, right_stop))
}

/// Find the mountains of a smoothed histogram.
///
/// Apexes are local maxima at least `max(min_height_frames,
/// min_height_fraction · global_max)` high whose prominence is at least
/// `min_prominence_fraction` of their height. Neighbouring apexes are
/// separated at the lowest bin between them; that bin goes to the left
/// mountain. Within those limits a mountain grows outward from its apex until
/// the count drops below `valley_fraction · apex_height` (that bin is
/// included).
pub fn find_mountains(smoothed: &Histogram, cfg: &PeakConfig) -> Vec<Mountain> {
    let c = &smoothed.counts;
    let n = c.len();
    let global_max = smoothed.max_count();
    if n == 0 || !(global_max > 0.0) {
        return Vec::new();
    }
    let threshold = cfg.min_height_frames.max(cfg.min_height_fraction * global_max);
    let maxima = local_maxima(c);
    let apexes: Vec<usize> = (0..maxima.len())
        .filter(|&k| {
            let a = maxima[k];
            c[a] >= threshold && prominence(c, &maxima, k) >= cfg.min_prominence_fraction * c[a]
        })
        .map(|k| maxima[k])
        .collect();

    let valleys: Vec<usize> =
        apexes.windows(2).map(|w| (w[0]..=w[1]).min_by(|&a, &b| c[a].total_cmp(&c[b])).expect("non-empty")).collect();

    apexes
        .iter()
        .enumerate()
        .map(|(k, &apex)| {
            let left_limit = if k == 0 { 0 } else { valleys[k - 1] + 1 };
            let right_limit = valleys.get(k).copied().unwrap_or(n - 1);
            let floor = cfg.valley_fraction * c[apex];
            let mut lo = apex;
            while lo > left_limit && c[lo] >= floor {
                lo -= 1;
            }
            let mut hi = apex;
            while hi < right_limit && c[hi] >= floor {
                hi += 1;
            }
            Mountain { lo_bin: lo, hi_bin: hi, apex_bin: apex, apex_height: c[apex] }
        })
        .collect()
}

/// Histograms, mountains and fits for one set of pitch values.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramPeaks {
    pub raw: Histogram,
    pub smoothed: Histogram,
    pub mountains: Vec<Mountain>,
    /// Converged fits, ascending by `peak_cents`.
    pub fits: Vec<PeakFit>,
    /// Mountains whose fit was rejected; `peak_cents` is the apex center.
    pub rejected: Vec<PeakFit>,
}

pub fn histogram_peaks(
    cents: &[f64],
    hist_cfg: &HistogramConfig,
    peak_cfg: &PeakConfig,
) -> Result<HistogramPeaks, PeakError> {
    peak_cfg.validate()?;
    if cents.is_empty() {
        return Err(HistogramError::Empty.into());
    }
    // Pad with empty bins so mountains near the data extremes get tails and
    // the smoothing window never runs off the edge of the data.
    let pad = (hist_cfg.smooth_window + MIN_FIT_BINS) as f64 * hist_cfg.bin_width_cents;
    let lo = cents.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = cents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw = build_histogram(cents, hist_cfg.bin_width_cents, Some((lo - pad, hi + pad)))?;
    let smoothed = smooth_moving_average(&raw, hist_cfg.smooth_window)?;
    let mountains = find_mountains(&smoothed, peak_cfg);
    let source = match hist_cfg.fit_source {
        FitSource::Raw => &raw,
        FitSource::Smoothed => &smoothed,
    };
    let (mut fits, rejected): (Vec<_>, Vec<_>) =
        mountains.iter().map(|m| fit_tilted_gaussian(source, m, peak_cfg)).partition(|f| f.converged);
    fits.sort_by(|a, b| a.peak_cents.total_cmp(&b.peak_cents));
    Ok(HistogramPeaks { raw, smoothed, mountains, fits, rejected })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentencePeaks {
    pub sentence_index: usize,
    /// `None` when the sentence had no usable pitch values.
    pub analysis: Option<HistogramPeaks>,
    pub diagnostics: Vec<String>,
}

impl SentencePeaks {
    pub fn fits(&self) -> &[PeakFit] {
        self.analysis.as_ref().map_or(&[], |a| &a.fits)
    }

    pub fn rejected(&self) -> &[PeakFit] {
        self.analysis.as_ref().map_or(&[], |a| &a.rejected)
    }
}

/// Cents → histogram → smoothing → mountains → fits for one sentence.
/// An empty histogram yields no peaks and a diagnostic, not an error.
pub fn sentence_peaks(
    sentence: &Sentence,
    cents_cfg: &CentsConfig,
    hist_cfg: &HistogramConfig,
    peak_cfg: &PeakConfig,
) -> Result<SentencePeaks, PeakError> {
    let cents = sentence.f0_values().map(|f| hz_to_cents(f, cents_cfg)).collect::<Result<Vec<_>, _>>()?;
    let mut diagnostics = Vec::new();
    let analysis = match histogram_peaks(&cents, hist_cfg, peak_cfg) {
        Ok(a) => {
            for r in &a.rejected {
                diagnostics.push(format!(
                    "sentence {}: mountain at {:.1} cents unfitted ({})",
                    sentence.index,
                    r.apex_cents,
                    r.issue.map_or_else(String::new, |i| i.to_string())
                ));
            }
            Some(a)
        }
        Err(PeakError::Histogram(HistogramError::Empty)) => {
            diagnostics.push(format!("sentence {}: empty-histogram", sentence.index));
            None
        }
        Err(e) => return Err(e),
    };
    Ok(SentencePeaks { sentence_index: sentence.index, analysis, diagnostics })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::cents_to_hz;
    use crate::pitch_io::PitchFrame;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal, Uniform};

    fn hist(counts: &[f64]) -> Histogram {
        Histogram { bin_width_cents: 5.0, origin_cents: 0.0, counts: counts.to_vec(), total_frames: 0 }
    }

    fn permissive() -> PeakConfig {
        PeakConfig { min_height_frames: 0.5, min_height_fraction: 0.1, ..Default::default() }
    }

    fn spans(ms: &[Mountain]) -> Vec<(usize, usize, usize)> {
        ms.iter().map(|m| (m.lo_bin, m.apex_bin, m.hi_bin)).collect()
    }

    #[test]
    fn single_mountain() {
        let ms = find_mountains(&hist(&[0.0, 1.0, 5.0, 1.0, 0.0]), &permissive());
        assert_eq!(spans(&ms), vec![(0, 2, 4)]);
        assert_eq!(ms[0].apex_height, 5.0);
    }

    #[test]
    fn two_mountains_split_at_zero_valley() {
        let ms = find_mountains(&hist(&[0.0, 5.0, 0.0, 0.0, 6.0, 0.0]), &permissive());
        assert_eq!(spans(&ms), vec![(0, 1, 2), (3, 4, 5)]);
    }

    #[test]
    fn adjacent_mountains_share_interior_minimum() {
        let ms = find_mountains(&hist(&[0.0, 5.0, 3.0, 6.0, 0.0]), &permissive());
        assert_eq!(ms.len(), 2);
        assert_eq!((ms[0].apex_bin, ms[1].apex_bin), (1, 3));
        assert_eq!(ms[0].hi_bin, 2);
        assert_eq!(ms[1].lo_bin, 3);
    }

    #[test]
    fn flat_histogram_has_no_mountains() {
        assert!(find_mountains(&hist(&[3.0; 8]), &permissive()).is_empty());
        assert!(find_mountains(&hist(&[0.0; 8]), &permissive()).is_empty());
    }

    #[test]
    fn low_apexes_are_dropped() {
        let cfg = PeakConfig { min_height_frames: 5.0, ..Default::default() };
        let ms = find_mountains(&hist(&[0.0, 4.0, 0.0, 50.0, 0.0, 6.0, 0.0]), &cfg);
        assert_eq!(ms.iter().map(|m| m.apex_bin).collect::<Vec<_>>(), vec![3, 5]);
    }

    #[test]
    fn shallow_ripple_is_not_a_mountain() {
        let ms = find_mountains(&hist(&[0.0, 2.0, 10.0, 9.0, 9.5, 10.2, 3.0, 0.0]), &permissive());
        assert_eq!(spans(&ms), vec![(0, 5, 7)]);
    }

    #[test]
    fn plateau_apex_in_middle() {
        let ms = find_mountains(&hist(&[0.0, 1.0, 1.0, 1.0, 0.0]), &permissive());
        assert_eq!(spans(&ms), vec![(0, 2, 4)]);
    }

    /// Voiced frames at planted notes (cents above C0) with per-frame jitter
    /// drawn from `noise`, `n` frames per note.
    fn planted(notes: &[(f64, usize)], noise: impl Distribution<f64>, seed: u64) -> Sentence {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let cfg = CentsConfig::default();
        let mut t = 0.0;
        let mut frames = Vec::new();
        for &(cents, n) in notes {
            for _ in 0..n {
                frames.push(PitchFrame::voiced(t, cents_to_hz(cents + noise.sample(&mut rng), &cfg), 1.0));
                t += 256.0 / 44100.0;
            }
        }
        Sentence { index: 0, start_sec: 0.0, end_sec: t, frames }
    }

    fn peaks_of(s: &Sentence) -> SentencePeaks {
        sentence_peaks(s, &CentsConfig::default(), &HistogramConfig::default(), &PeakConfig::default()).unwrap()
    }

    #[test]
    fn two_planted_notes() {
        let base = 5700.0;
        for seed in 0..5 {
            let s = planted(&[(base, 344), (base + 200.0, 344)], Uniform::new_inclusive(-10.0, 10.0).unwrap(), seed);
            let p = peaks_of(&s);
            let got: Vec<f64> = p.fits().iter().map(|f| f.peak_cents).collect();
            assert_eq!(got.len(), 2, "{got:?}");
            assert!((got[0] - base).abs() <= 3.0 && (got[1] - base - 200.0).abs() <= 3.0, "{got:?}");
        }
    }

    #[test]
    fn single_note() {
        let p = peaks_of(&planted(&[(6123.0, 500)], Normal::new(0.0, 8.0).unwrap(), 3));
        assert_eq!(p.fits().len(), 1);
        assert!((p.fits()[0].peak_cents - 6123.0).abs() <= 2.0);
    }

    #[test]
    fn three_frame_note_ignored() {
        let p = peaks_of(&planted(&[(5700.0, 400), (6000.0, 3)], Normal::new(0.0, 5.0).unwrap(), 4));
        assert_eq!(p.fits().len(), 1);
        assert!(p.rejected().is_empty());
    }

    #[test]
    fn empty_sentence_is_diagnostic() {
        let s = Sentence { index: 4, start_sec: 0.0, end_sec: 1.0, frames: vec![] };
        let p = peaks_of(&s);
        assert!(p.analysis.is_none());
        assert_eq!(p.diagnostics, vec!["sentence 4: empty-histogram".to_string()]);
    }

    fn arb_curve_hist() -> impl Strategy<Value = (Histogram, Mountain, Vec<f64>)> {
        (
            0.0f64..10.0,
            -0.05f64..0.05,
            20.0f64..200.0,
            -10.0f64..10.0,
            200.0f64..2000.0,
            proptest::collection::vec(-1.0f64..1.0, 41),
        )
            .prop_map(|(b, c2, c3, off, c5, noise)| {
                let center = 5700.0 + off;
                let curve = TiltedGaussian { c1: b + 5.0 - c2 * 5700.0, c2, c3, c4: center, c5 };
                let origin = 5700.0 - 20.5 * 5.0;
                let counts: Vec<f64> = (0..41)
                    .map(|i| (curve.eval(origin + (i as f64 + 0.5) * 5.0) + noise[i] * 0.02 * c3).max(0.0))
                    .collect();
                let apex = (0..41).max_by(|&a, &b| counts[a].total_cmp(&counts[b])).unwrap();
                let h =
                    Histogram { bin_width_cents: 5.0, origin_cents: origin, counts: counts.clone(), total_frames: 0 };
                let m = Mountain { lo_bin: 0, hi_bin: 40, apex_bin: apex, apex_height: counts[apex] };
                (h, m, counts)
            })
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn fit_beats_constant_and_peak_is_max((h, m, counts) in arb_curve_hist()) {
            let fit = fit_tilted_gaussian(&h, &m, &PeakConfig::default());
            prop_assume!(fit.converged);
            let mean = counts.iter().sum::<f64>() / counts.len() as f64;
            let const_rmse = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / counts.len() as f64).sqrt();
            prop_assert!(fit.rmse <= const_rmse + 1e-9);
            let curve = fit.curve();
            let top = curve.eval(fit.peak_cents);
            for i in m.lo_bin..=m.hi_bin {
                prop_assert!(top >= curve.eval(h.bin_center(i)) - 1e-9 * top.abs());
            }
            prop_assert!(fit.peak_cents >= fit.lo_cents && fit.peak_cents <= fit.hi_cents);
        }

        #[test]
        fn fit_translation_equivariant((h, m, _) in arb_curve_hist(), delta in -3000.0f64..3000.0) {
            let cfg = PeakConfig::default();
            let a = fit_tilted_gaussian(&h, &m, &cfg);
            let b = fit_tilted_gaussian(&h.shifted(delta), &m, &cfg);
            prop_assert_eq!(a.converged, b.converged);
            prop_assume!(a.converged);
            prop_assert!(close(b.c4, a.c4 + delta, 1e-6), "c4 {} {}", a.c4, b.c4);
            prop_assert!(close(b.peak_cents, a.peak_cents + delta, 1e-6));
            prop_assert!(close(b.c3, a.c3, 1e-6) && close(b.c5, a.c5, 1e-6) && close(b.rmse, a.rmse, 1e-6));
            prop_assert!(close(b.c2, a.c2, 1e-6));
            prop_assert!(close(b.c1, a.c1 - a.c2 * delta, 1e-6));
        }

        #[test]
        fn fit_scale_equivariant((h, m, _) in arb_curve_hist(), k in 0.1f64..10.0) {
            let cfg = PeakConfig::default();
            let a = fit_tilted_gaussian(&h, &m, &cfg);
            let scaled = Histogram { counts: h.counts.iter().map(|c| c * k).collect(), ..h.clone() };
            let b = fit_tilted_gaussian(&scaled, &m, &cfg);
            prop_assume!(a.converged && b.converged);
            prop_assert!(close(b.c1, k * a.c1, 1e-6) && close(b.c2, k * a.c2, 1e-6));
            prop_assert!(close(b.c3, k * a.c3, 1e-6) && close(b.rmse, k * a.rmse, 1e-6));
            prop_assert!(close(b.c4, a.c4, 1e-6) && close(b.c5, a.c5, 1e-6));
            prop_assert!(close(b.peak_cents, a.peak_cents, 1e-6));
        }

        #[test]
        fn mountains_disjoint_and_cover_apexes(counts in proptest::collection::vec(0.0f64..30.0, 1..120)) {
            let cfg = PeakConfig { min_height_frames: 1.0, ..Default::default() };
            let h = hist(&counts);
            let ms = find_mountains(&h, &cfg);
            for w in ms.windows(2) {
                prop_assert!(w[0].hi_bin < w[1].lo_bin);
            }
            for m in &ms {
                prop_assert!(m.lo_bin <= m.apex_bin && m.apex_bin <= m.hi_bin && m.apex_height > 0.0);
            }
            let threshold = cfg.min_height_frames.max(cfg.min_height_fraction * h.max_count());
            let maxima = local_maxima(&counts);
            for k in 0..maxima.len() {
                let a = maxima[k];
                if counts[a] >= threshold && prominence(&counts, &maxima, k) >= cfg.min_prominence_fraction * counts[a] {
                    prop_assert!(ms.iter().any(|m| m.apex_bin == a));
                }
            }
        }
    }
}
