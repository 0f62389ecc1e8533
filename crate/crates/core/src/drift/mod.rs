//! Clustering of per-sentence peaks and per-cluster drift lines.

mod dbscan;
mod regression;

pub use dbscan::dbscan_labels;
pub use regression::{fit_line, DriftLine};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::peaks::PeakFit;
use crate::segmentation::Sentence;

#[derive(Debug, Error)]
pub enum DriftError {
    #[error("degenerate-regression: {0} point(s) without two distinct sentence indices")]
    Degenerate(usize),
    #[error("empty-report: no peaks in any sentence")]
    EmptyReport,
    #[error("invalid-config: {0}")]
    Config(String),
}

/// Where a peak point came from: `fit_index` indexes the sentence's accepted
/// fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeakRef {
    pub sentence_index: usize,
    pub fit_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPoint {
    pub sentence_index: usize,
    pub cents: f64,
    pub source: PeakRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMetric {
    /// Euclidean distance over (sentence / index_scale, cents / cents_scale).
    Joint,
    /// Distance over cents / cents_scale only.
    CentsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterConfig {
    pub eps: f64,
    pub min_samples: usize,
    pub cents_scale: f64,
    pub index_scale: f64,
    pub min_significant_size: usize,
    pub metric: ClusterMetric,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            eps: 1.5,
            min_samples: 2,
            cents_scale: 25.0,
            index_scale: 1.0,
            min_significant_size: 3,
            metric: ClusterMetric::Joint,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<(), DriftError> {
        if !(self.eps > 0.0) || self.min_samples == 0 || !(self.cents_scale > 0.0) || !(self.index_scale > 0.0) {
            return Err(DriftError::Config(format!(
                "need eps > 0, min_samples >= 1 and positive scales (eps={}, min_samples={}, cents_scale={}, index_scale={})",
                self.eps, self.min_samples, self.cents_scale, self.index_scale
            )));
        }
        Ok(())
    }

    fn coords(&self, p: &PeakPoint) -> [f64; 2] {
        let x = match self.metric {
            ClusterMetric::Joint => p.sentence_index as f64 / self.index_scale,
            ClusterMetric::CentsOnly => 0.0,
        };
        [x, p.cents / self.cents_scale]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: usize,
    pub points: Vec<PeakPoint>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Clustering {
    pub clusters: Vec<Cluster>,
    pub noise: Vec<PeakPoint>,
}

/// Run DBSCAN on the scaled peak coordinates. Members keep input order.
pub fn dbscan(points: &[PeakPoint], cfg: &ClusterConfig) -> Result<Clustering, DriftError> {
    cfg.validate()?;
    let coords: Vec<[f64; 2]> = points.iter().map(|p| cfg.coords(p)).collect();
    let labels = dbscan_labels(&coords, cfg.eps, cfg.min_samples);
    let n_clusters = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut clusters: Vec<Cluster> =
        (0..n_clusters).map(|id| Cluster { id, points: Vec::new(), significant: false }).collect();
    let mut noise = Vec::new();
    for (p, label) in points.iter().zip(labels) {
        match label {
            Some(id) => clusters[id].points.push(*p),
            None => noise.push(*p),
        }
    }
    for c in &mut clusters {
        c.significant = c.points.len() >= cfg.min_significant_size;
    }
    Ok(Clustering { clusters, noise })
}

/// OLS of cents on sentence index over the cluster's members.
pub fn fit_drift_line(cluster: &Cluster) -> Result<DriftLine, DriftError> {
    let xs: Vec<f64> = cluster.points.iter().map(|p| p.sentence_index as f64).collect();
    let ys: Vec<f64> = cluster.points.iter().map(|p| p.cents).collect();
    fit_line(&xs, &ys)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDrift {
    pub cluster: Cluster,
    /// `None` when the members do not span two sentences.
    pub line: Option<DriftLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSummary {
    pub n_significant_clusters: usize,
    /// Slopes of significant clusters that have a line, in cluster order.
    pub slopes: Vec<f64>,
    pub mean_slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub sentences: usize,
    pub points: Vec<PeakPoint>,
    pub clusters: Vec<ClusterDrift>,
    pub noise: Vec<PeakPoint>,
    pub config: ClusterConfig,
    pub summary: DriftSummary,
}

/// Cluster every peak of every sentence and fit a drift line per cluster.
///
/// Sentence indices are taken from the sentences as given, so dropping
/// leading sentences leaves the x positions of the others unchanged. When at
/// least two sentences are given, slopes are also converted to cents per
/// minute using the mean spacing of sentence mid-times.
pub fn analyze_drift(
    peaks_by_sentence: &[(&Sentence, &[PeakFit])],
    cfg: &ClusterConfig,
) -> Result<DriftReport, DriftError> {
    cfg.validate()?;
    let points: Vec<PeakPoint> = peaks_by_sentence
        .iter()
        .flat_map(|(s, fits)| {
            fits.iter().enumerate().map(move |(k, f)| PeakPoint {
                sentence_index: s.index,
                cents: f.peak_cents,
                source: PeakRef { sentence_index: s.index, fit_index: k },
            })
        })
        .collect();
    if points.is_empty() {
        return Err(DriftError::EmptyReport);
    }

    let minutes_per_sentence = match peaks_by_sentence {
        [first, .., last] if last.0.index > first.0.index => {
            let span = last.0.mid_sec() - first.0.mid_sec();
            let per = span / (last.0.index - first.0.index) as f64 / 60.0;
            (per > 0.0).then_some(per)
        }
        _ => None,
    };

    let Clustering { clusters, noise } = dbscan(&points, cfg)?;
    let clusters: Vec<ClusterDrift> = clusters
        .into_iter()
        .map(|cluster| {
            let line = fit_drift_line(&cluster).ok().map(|mut l| {
                l.slope_cents_per_minute = minutes_per_sentence.map(|m| l.slope / m);
                l
            });
            ClusterDrift { cluster, line }
        })
        .collect();

    let slopes: Vec<f64> =
        clusters.iter().filter(|c| c.cluster.significant).filter_map(|c| c.line.map(|l| l.slope)).collect();
    let mean_slope = (!slopes.is_empty()).then(|| slopes.iter().sum::<f64>() / slopes.len() as f64);
    let summary = DriftSummary {
        n_significant_clusters: clusters.iter().filter(|c| c.cluster.significant).count(),
        slopes,
        mean_slope,
    };
    Ok(DriftReport { sentences: peaks_by_sentence.len(), points, clusters, noise, config: cfg.clone(), summary })
}

#[cfg(test)]
mod tests;
