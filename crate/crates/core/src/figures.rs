//! The five figure types: pitch track, pooled histogram, mountain fits,
//! per-sentence peaks and drift clusters. Each chart's series are built
//! directly from the run's tables, so the data embedded in the SVG equals
//! what the reports contain.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::histogram::Histogram;
use crate::peaks::PeakFit;
use crate::pipeline::RunArtifacts;
use crate::plot::{palette, Chart, Series, SeriesKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotKind {
    Track,
    Histogram,
    Fit,
    Scatter,
    Clusters,
}

impl PlotKind {
    pub const ALL: [PlotKind; 5] =
        [PlotKind::Track, PlotKind::Histogram, PlotKind::Fit, PlotKind::Scatter, PlotKind::Clusters];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::Track => "track",
            PlotKind::Histogram => "histogram",
            PlotKind::Fit => "fit",
            PlotKind::Scatter => "scatter",
            PlotKind::Clusters => "clusters",
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::Track => "track.svg",
            PlotKind::Histogram => "histogram.svg",
            PlotKind::Fit => "fit.svg",
            PlotKind::Scatter => "scatter.svg",
            PlotKind::Clusters => "clusters.svg",
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown plot kind '{0}' (expected track, histogram, fit, scatter or clusters)")]
pub struct UnknownPlotKind(pub String);

impl FromStr for PlotKind {
    type Err = UnknownPlotKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PlotKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| UnknownPlotKind(s.to_string()))
    }
}

/// Parse a comma-separated list such as `histogram,clusters`. Empty items are
/// ignored.
pub fn parse_plot_kinds(list: &str) -> Result<Vec<PlotKind>, UnknownPlotKind> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PlotKind::from_str).collect()
}

/// Requested kinds without repeats, in first-requested order.
pub fn unique_kinds(which: &[PlotKind]) -> Vec<PlotKind> {
    let mut out: Vec<PlotKind> = Vec::new();
    for k in which {
        if !out.contains(k) {
            out.push(*k);
        }
    }
    out
}

/// Write one SVG per requested kind into `out_dir` and return the files
/// written. On failure the files written by this call are removed.
pub fn emit_plots(artifacts: &RunArtifacts, which: &[PlotKind], out_dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for kind in unique_kinds(which) {
        let path = out_dir.join(kind.file_name());
        if let Err(e) = fs::write(&path, build_chart(artifacts, kind).to_svg()) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

pub fn build_chart(a: &RunArtifacts, kind: PlotKind) -> Chart {
    match kind {
        PlotKind::Track => track_chart(a),
        PlotKind::Histogram => histogram_chart(a),
        PlotKind::Fit => fit_chart(a),
        PlotKind::Scatter => scatter_chart(a),
        PlotKind::Clusters => clusters_chart(a),
    }
}

fn track_chart(a: &RunArtifacts) -> Chart {
    let mut chart = Chart::new("Pitch track", "time (s)", "f0 (Hz)");
    let points = a.track.voiced().filter_map(|f| f.f0_hz.map(|hz| (f.time_sec, hz))).collect();
    chart.push(Series::new("f0", SeriesKind::Points, palette(1), points));
    chart
}

fn histogram_points(h: &Histogram, range: std::ops::RangeInclusive<usize>) -> Vec<(f64, f64)> {
    range.map(|i| (h.bin_center(i), h.counts[i])).collect()
}

/// Raw counts as bars, the smoothed histogram as a line and one shaded region
/// (smoothed counts) per detected mountain.
fn histogram_chart(a: &RunArtifacts) -> Chart {
    let mut chart = Chart::new("Pitch histogram", "cents", "frames");
    if let Some(p) = &a.pooled {
        let all = 0..=p.raw.len().saturating_sub(1);
        chart.push(Series::new("raw", SeriesKind::Bars, "#999999", histogram_points(&p.raw, all.clone())));
        chart.push(Series::new("smoothed", SeriesKind::Line, "#000000", histogram_points(&p.smoothed, all)));
        for (k, m) in p.mountains.iter().enumerate() {
            chart.push(Series::new(
                format!("mountain {k}"),
                SeriesKind::Region,
                palette(k),
                histogram_points(&p.smoothed, m.lo_bin..=m.hi_bin),
            ));
        }
    }
    chart
}

/// Bins of `h` whose centers lie in the fit's mountain.
fn fit_bins(h: &Histogram, fit: &PeakFit) -> Vec<(f64, f64)> {
    let tol = 1e-9 * h.bin_width_cents;
    (0..h.len())
        .filter(|&i| {
            let c = h.bin_center(i);
            c >= fit.lo_cents - tol && c <= fit.hi_cents + tol
        })
        .map(|i| (h.bin_center(i), h.counts[i]))
        .collect()
}

/// Fitted curve sampled at ten points per bin over the mountain.
pub fn fit_curve_points(fit: &PeakFit, bin_width: f64) -> Vec<(f64, f64)> {
    let steps = (((fit.hi_cents - fit.lo_cents) / bin_width) * 10.0).round().max(1.0) as usize;
    let curve = fit.curve();
    (0..=steps)
        .map(|k| {
            let x = fit.lo_cents + (fit.hi_cents - fit.lo_cents) * k as f64 / steps as f64;
            (x, curve.eval(x))
        })
        .collect()
}

/// Bins of every pooled mountain with the fitted curve over accepted ones.
fn fit_chart(a: &RunArtifacts) -> Chart {
    let mut chart = Chart::new("Tilted-Gaussian fits", "cents", "frames");
    if let Some(p) = &a.pooled {
        let source = match a.config.histogram.fit_source {
            crate::histogram::FitSource::Raw => &p.raw,
            crate::histogram::FitSource::Smoothed => &p.smoothed,
        };
        for (k, fit) in p.fits.iter().enumerate() {
            chart.push(Series::new(format!("bins {k}"), SeriesKind::Points, palette(k), fit_bins(source, fit)));
            chart.push(Series::new(
                format!("fit {k}"),
                SeriesKind::Line,
                palette(k),
                fit_curve_points(fit, source.bin_width_cents),
            ));
        }
        for (k, fit) in p.rejected.iter().enumerate() {
            chart.push(Series::new(format!("unfitted {k}"), SeriesKind::Crosses, "#7f7f7f", fit_bins(source, fit)));
        }
    }
    chart
}

fn scatter_chart(a: &RunArtifacts) -> Chart {
    let mut chart = Chart::new("Peaks per sentence", "sentence", "cents");
    let points = a.report.points.iter().map(|p| (p.sentence_index as f64, p.cents)).collect();
    chart.push(Series::new("peaks", SeriesKind::Points, palette(1), points));
    chart
}

/// Members colored by cluster, one drift line per cluster that has one
/// (evaluated at its first and last sentence) and noise as crosses.
fn clusters_chart(a: &RunArtifacts) -> Chart {
    let mut chart = Chart::new("Drift clusters", "sentence", "cents");
    for c in &a.report.clusters {
        let id = c.cluster.id;
        let color = palette(id);
        let label =
            if c.cluster.significant { format!("cluster {id}") } else { format!("cluster {id} (insignificant)") };
        let points: Vec<(f64, f64)> = c.cluster.points.iter().map(|p| (p.sentence_index as f64, p.cents)).collect();
        chart.push(Series::new(label, SeriesKind::Points, color, points.clone()));
        if let Some(line) = c.line {
            let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            chart.push(Series::new(
                format!("drift {id}"),
                SeriesKind::Line,
                color,
                vec![(lo, line.at(lo)), (hi, line.at(hi))],
            ));
        }
    }
    if !a.report.noise.is_empty() {
        let noise = a.report.noise.iter().map(|p| (p.sentence_index as f64, p.cents)).collect();
        chart.push(Series::new("noise", SeriesKind::Crosses, "#000000", noise));
    }
    chart
}
