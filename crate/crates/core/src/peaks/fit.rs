//! Tilted-Gaussian fit of one histogram mountain:
//!
//! ```text
//! y = c1 + c2·x + c3·exp(−(x − c4)² / c5)
//! ```
//!
//! Damped Gauss–Newton (Levenberg–Marquardt with Marquardt's diagonal
//! scaling). Internally the linear part is expressed around the apex bin
//! center so `c1` and `c2` are not nearly collinear at x ≈ 5000 cents; the
//! Gaussian width `c5` is fitted directly and kept positive by step halving.

use nalgebra::{Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use super::{Mountain, PeakConfig, MIN_FIT_BINS};
use crate::histogram::Histogram;

/// Coefficients of the tilted Gaussian in absolute cents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltedGaussian {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
}

impl TiltedGaussian {
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.c4;
        self.c1 + self.c2 * x + self.c3 * (-d * d / self.c5).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let d = x - self.c4;
        self.c2 - self.c3 * 2.0 * d / self.c5 * (-d * d / self.c5).exp()
    }

    /// Location of the curve's maximum on `[lo, hi]`: scan a grid of step
    /// `step`, then bisect the derivative between the neighbours of the best
    /// grid point.
    pub fn argmax_on(&self, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round().max(1.0) as usize;
        let grid = |i: usize| if i == n { hi } else { lo + i as f64 * step };
        let best = (0..=n).max_by(|&a, &b| self.eval(grid(a)).total_cmp(&self.eval(grid(b)))).unwrap_or(0);
        let grid_best = grid(best);
        let mut left = grid(best.saturating_sub(1));
        let mut right = grid((best + 1).min(n));
        if !(self.derivative(left) > 0.0 && self.derivative(right) < 0.0) {
            return grid_best;
        }
        for _ in 0..100 {
            let mid = 0.5 * (left + right);
            if mid <= left || mid >= right {
                break;
            }
            if self.derivative(mid) > 0.0 {
                left = mid;
            } else {
                right = mid;
            }
        }
        let refined = 0.5 * (left + right);
        if self.eval(refined) >= self.eval(grid_best) {
            refined
        } else {
            grid_best
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitIssue {
    TooNarrow,
    NotConverged,
    NonPositiveAmplitude,
    NonPositiveWidth,
    CenterOutsideMountain,
    Singular,
}

impl std::fmt::Display for FitIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitIssue::TooNarrow => "too-narrow",
            FitIssue::NotConverged => "not-converged",
            FitIssue::NonPositiveAmplitude => "non-positive-amplitude",
            FitIssue::NonPositiveWidth => "non-positive-width",
            FitIssue::CenterOutsideMountain => "center-outside-mountain",
            FitIssue::Singular => "singular",
        })
    }
}

/// Result of fitting one mountain. When `converged` is false, `peak_cents` is
/// the apex bin center and `issue` says why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakFit {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub peak_cents: f64,
    pub rmse: f64,
    pub n_bins: usize,
    pub converged: bool,
    pub iterations: usize,
    pub lo_cents: f64,
    pub hi_cents: f64,
    pub apex_cents: f64,
    pub issue: Option<FitIssue>,
}

impl PeakFit {
    pub fn curve(&self) -> TiltedGaussian {
        TiltedGaussian { c1: self.c1, c2: self.c2, c3: self.c3, c4: self.c4, c5: self.c5 }
    }
}

/// Parameters in apex-centered coordinates: baseline, tilt, amplitude,
/// center offset, width.
type Params = Vector5<f64>;

struct Problem<'a> {
    u: &'a [f64],
    y: &'a [f64],
}

impl Problem<'_> {
    fn model(p: &Params, u: f64) -> (f64, f64) {
        let d = u - p[3];
        let e = (-d * d / p[4]).exp();
        (p[0] + p[1] * u + p[2] * e, e)
    }

    fn cost(&self, p: &Params) -> f64 {
        self.u
            .iter()
            .zip(self.y)
            .map(|(&u, &y)| {
                let r = y - Self::model(p, u).0;
                r * r
            })
            .sum()
    }

    /// Returns (JᵀJ, Jᵀr, cost).
    fn normal_equations(&self, p: &Params) -> (Matrix5<f64>, Vector5<f64>, f64) {
        let mut jtj = Matrix5::zeros();
        let mut jtr = Vector5::zeros();
        let mut cost = 0.0;
        for (&u, &y) in self.u.iter().zip(self.y) {
            let (m, e) = Self::model(p, u);
            let d = u - p[3];
            let ae = p[2] * e;
            let row = Vector5::new(1.0, u, e, ae * 2.0 * d / p[4], ae * d * d / (p[4] * p[4]));
            let r = y - m;
            cost += r * r;
            jtj += row * row.transpose();
            jtr += row * r;
        }
        (jtj, jtr, cost)
    }
}

struct Solution {
    params: Params,
    cost: f64,
    converged: bool,
    singular: bool,
    iterations: usize,
}

fn levenberg_marquardt(problem: &Problem<'_>, start: Params, max_iter: usize, tol: f64) -> Solution {
    let mut p = start;
    let mut lambda = 1e-3;
    let (mut jtj, mut jtr, mut cost) = problem.normal_equations(&p);
    // A residual this small relative to the data is an exact fit; this also
    // stops the width from chasing zero on a single-bin spike.
    let exact = tol * tol * problem.y.iter().map(|y| y * y).sum::<f64>();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        if cost <= exact {
            return Solution { params: p, cost, converged: true, singular: false, iterations };
        }
        let max_diag = (0..5).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        if !(max_diag > 0.0) || !max_diag.is_finite() {
            return Solution { params: p, cost, converged: false, singular: true, iterations };
        }
        let mut a = jtj;
        for i in 0..5 {
            a[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * max_diag);
        }
        let Some(mut step) = a.cholesky().map(|c| c.solve(&jtr)).or_else(|| a.lu().solve(&jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let mut halvings = 0;
        while p[4] + step[4] <= 0.0 && halvings < 60 {
            step *= 0.5;
            halvings += 1;
        }
        let candidate = p + step;
        let small = step.norm() <= tol * (p.norm() + tol);
        let new_cost = problem.cost(&candidate);
        if new_cost.is_finite() && new_cost <= cost && candidate[4] > 0.0 {
            p = candidate;
            (jtj, jtr, cost) = problem.normal_equations(&p);
            lambda = (lambda / 10.0).max(1e-15);
            if small {
                return Solution { params: p, cost, converged: true, singular: false, iterations };
            }
        } else {
            if small {
                // already at the bottom within roundoff
                return Solution { params: p, cost, converged: true, singular: false, iterations };
            }
            lambda *= 10.0;
            if lambda > 1e20 {
                break;
            }
        }
    }
    Solution { params: p, cost, converged: false, singular: false, iterations }
}

/// Initial guess in apex-centered coordinates.
fn initial_guess(u: &[f64], y: &[f64], apex: usize, bin_width: f64) -> Params {
    let last = y.len() - 1;
    let span = u[last] - u[0];
    let baseline = y[0].min(y[last]);
    let tilt = if span > 0.0 { (y[last] - y[0]) / span } else { 0.0 };
    let amplitude = y[apex] - baseline;

    let half = baseline + 0.5 * amplitude;
    let crossing = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = apex;
        for i in range {
            if y[i] < half {
                let t = if y[prev] != y[i] { (y[prev] - half) / (y[prev] - y[i]) } else { 0.5 };
                return Some((u[prev] + t * (u[i] - u[prev])).abs());
            }
            prev = i;
        }
        None
    };
    let left = crossing(&mut (0..apex).rev());
    let right = crossing(&mut (apex + 1..=last));
    let hwhm = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (l + r),
        (Some(h), None) | (None, Some(h)) => h,
        (None, None) => 0.5 * span,
    };
    let width = (hwhm * hwhm / std::f64::consts::LN_2).max((2.0 * bin_width).powi(2));
    Params::new(baseline, tilt, amplitude, 0.0, width)
}

/// Fit the tilted Gaussian to `hist` over the mountain's bins.
///
/// Mountains narrower than six bins, fits that do not converge, and fits with
/// non-positive amplitude or width or a center outside the mountain are
/// reported with `converged = false` and the apex bin center as the peak.
pub fn fit_tilted_gaussian(hist: &Histogram, m: &Mountain, cfg: &PeakConfig) -> PeakFit {
    let w = hist.bin_width_cents;
    let x_ref = hist.bin_center(m.apex_bin);
    let lo_cents = hist.bin_center(m.lo_bin);
    let hi_cents = hist.bin_center(m.hi_bin);
    let u: Vec<f64> = (m.lo_bin..=m.hi_bin).map(|i| hist.bin_center(i) - x_ref).collect();
    let y: Vec<f64> = hist.counts[m.lo_bin..=m.hi_bin].to_vec();
    let problem = Problem { u: &u, y: &y };
    let start = initial_guess(&u, &y, m.apex_bin - m.lo_bin, w);

    let (solution, mut issue) = if u.len() < MIN_FIT_BINS {
        let cost = problem.cost(&start);
        (Solution { params: start, cost, converged: false, singular: false, iterations: 0 }, Some(FitIssue::TooNarrow))
    } else {
        let s = levenberg_marquardt(&problem, start, cfg.max_iter, cfg.tol);
        let issue = if s.singular {
            Some(FitIssue::Singular)
        } else if !s.converged {
            Some(FitIssue::NotConverged)
        } else {
            None
        };
        (s, issue)
    };

    let p = solution.params;
    let curve = TiltedGaussian { c1: p[0] - p[1] * x_ref, c2: p[1], c3: p[2], c4: p[3] + x_ref, c5: p[4] };
    if issue.is_none() {
        if !(curve.c3 > 0.0) {
            issue = Some(FitIssue::NonPositiveAmplitude);
        } else if !(curve.c5 > 0.0) {
            issue = Some(FitIssue::NonPositiveWidth);
        } else if !(p[3] + x_ref >= lo_cents && p[3] + x_ref <= hi_cents) {
            issue = Some(FitIssue::CenterOutsideMountain);
        }
    }
    let peak_cents = if issue.is_none() {
        // evaluate in centered coordinates, then shift back
        let centered = TiltedGaussian { c1: p[0], c2: p[1], c3: p[2], c4: p[3], c5: p[4] };
        centered.argmax_on(lo_cents - x_ref, hi_cents - x_ref, w / 10.0) + x_ref
    } else {
        x_ref
    };

    PeakFit {
        c1: curve.c1,
        c2: curve.c2,
        c3: curve.c3,
        c4: curve.c4,
        c5: curve.c5,
        peak_cents,
        rmse: (solution.cost / u.len() as f64).sqrt(),
        n_bins: u.len(),
        converged: issue.is_none(),
        iterations: solution.iterations,
        lo_cents,
        hi_cents,
        apex_cents: x_ref,
        issue,
    }
}
