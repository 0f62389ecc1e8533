//! Cents conversion, pitch histograms and moving-average smoothing.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// C0 in Hz.
pub const C0_HZ: f64 = 16.3516;

#[derive(Debug, Error)]
pub enum HistogramError {
    #[error("domain-error: frequency {0} Hz is not positive")]
    Domain(f64),
    #[error("empty-histogram")]
    Empty,
    #[error("argument-error: {0}")]
    Argument(String),
    #[error("io-error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentsConfig {
    pub ref_hz: f64,
}

impl Default for CentsConfig {
    fn default() -> Self {
        Self { ref_hz: C0_HZ }
    }
}

/// Which histogram the tilted-Gaussian fit consumes. Mountain detection always
/// runs on the smoothed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitSource {
    Raw,
    Smoothed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub bin_width_cents: f64,
    pub smooth_window: usize,
    pub fit_source: FitSource,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        Self { bin_width_cents: 5.0, smooth_window: 7, fit_source: FitSource::Raw }
    }
}

pub fn hz_to_cents(f0_hz: f64, cfg: &CentsConfig) -> Result<f64, HistogramError> {
    if !(f0_hz > 0.0) || !f0_hz.is_finite() {
        return Err(HistogramError::Domain(f0_hz));
    }
    Ok(1200.0 * (f0_hz / cfg.ref_hz).log2())
}

pub fn cents_to_hz(cents: f64, cfg: &CentsConfig) -> f64 {
    cfg.ref_hz * (cents / 1200.0).exp2()
}

/// Binned pitch counts. Bin `i` covers
/// `[origin_cents + i·width, origin_cents + (i+1)·width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width_cents: f64,
    pub origin_cents: f64,
    pub counts: Vec<f64>,
    pub total_frames: usize,
}

impl Histogram {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn bin_center(&self, i: usize) -> f64 {
        self.origin_cents + (i as f64 + 0.5) * self.bin_width_cents
    }

    pub fn max_count(&self) -> f64 {
        self.counts.iter().copied().fold(0.0, f64::max)
    }

    /// Same counts, bin edges moved by `delta` cents.
    pub fn shifted(&self, delta: f64) -> Self {
        Self { origin_cents: self.origin_cents + delta, ..self.clone() }
    }

    /// `bin_center_cents,count` rows.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<(), HistogramError> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["bin_center_cents", "count"]).map_err(csv_io)?;
        for (i, c) in self.counts.iter().enumerate() {
            w.write_record([self.bin_center(i).to_string(), c.to_string()]).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_io(e: csv::Error) -> HistogramError {
    HistogramError::Io(e.into())
}

/// Count `values` into bins of `bin_width_cents`.
///
/// Bin 0 starts at the largest multiple of the width not above the data
/// minimum (or `range.0`). With an explicit `[lo, hi)` range, values outside
/// it are discarded and not counted in `total_frames`.
pub fn build_histogram(
    values: &[f64],
    bin_width_cents: f64,
    range: Option<(f64, f64)>,
) -> Result<Histogram, HistogramError> {
    if !(bin_width_cents.is_finite() && bin_width_cents > 0.0) {
        return Err(HistogramError::Argument(format!("bin width must be positive, got {bin_width_cents}")));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(HistogramError::Argument(format!("non-finite value {v}")));
    }
    let (lo, hi) = match range {
        Some((lo, hi)) if lo.is_finite() && hi.is_finite() && lo < hi => (lo, hi),
        Some((lo, hi)) => return Err(HistogramError::Argument(format!("bad range [{lo}, {hi})"))),
        None if values.is_empty() => return Err(HistogramError::Empty),
        None => {
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        }
    };
    let first_bin = (lo / bin_width_cents).floor() as i64;
    let origin = first_bin as f64 * bin_width_cents;
    let n_bins = if range.is_some() {
        (((hi / bin_width_cents).ceil() as i64 - first_bin).max(1)) as usize
    } else {
        ((hi / bin_width_cents).floor() as i64 - first_bin + 1) as usize
    };

    let mut counts = vec![0.0; n_bins];
    let mut total = 0;
    for &v in values {
        if range.is_some() && !(v >= lo && v < hi) {
            continue;
        }
        let idx = (v / bin_width_cents).floor() as i64 - first_bin;
        if idx < 0 || idx as usize >= n_bins {
            continue;
        }
        counts[idx as usize] += 1.0;
        total += 1;
    }
    Ok(Histogram { bin_width_cents, origin_cents: origin, counts, total_frames: total })
}

/// Centered moving average over `window_bins` (odd) bins. Near the edges the
/// mean is over the bins that exist.
pub fn smooth_moving_average(h: &Histogram, window_bins: usize) -> Result<Histogram, HistogramError> {
    if window_bins == 0 || window_bins.is_multiple_of(2) {
        return Err(HistogramError::Argument(format!("smoothing window must be odd, got {window_bins}")));
    }
    let half = window_bins / 2;
    let n = h.counts.len();
    let mut prefix = vec![0.0; n + 1];
    for (i, c) in h.counts.iter().enumerate() {
        prefix[i + 1] = prefix[i] + c;
    }
    let counts = (0..n)
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half + 1).min(n);
            if window_bins == 1 {
                h.counts[i]
            } else {
                ((prefix[b] - prefix[a]) / (b - a) as f64).max(0.0)
            }
        })
        .collect();
    Ok(Histogram { counts, ..h.clone() })
}
