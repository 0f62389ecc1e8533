use serde::{Deserialize, Serialize};

use super::DriftError;

/// Ordinary least-squares line of cents against sentence index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftLine {
    /// Cents per sentence.
    pub slope: f64,
    /// Cents at sentence 0.
    pub intercept: f64,
    pub r2: f64,
    pub slope_cents_per_minute: Option<f64>,
}

impl DriftLine {
    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Closed-form OLS of `ys` on `xs`. `r2` is 1 when the data are constant.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<DriftLine, DriftError> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(DriftError::Degenerate(xs.len()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(DriftError::Degenerate(xs.len()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let ss_res: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(DriftLine { slope, intercept, r2, slope_cents_per_minute: None })
}
