//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use std::collections::BTreeSet;

/// Reference DBSCAN by transitive closure: core points are linked when within
/// `eps`, the link relation is closed with Floyd–Warshall, and each non-core
/// point joins the component of any core point within `eps`.
///
/// Returns the clusters as sets of point indices, plus a flag telling whether
/// some border point touches cores of two different clusters (a tie whose
/// resolution depends on scan order).
pub fn closure_dbscan(points: &[[f64; 2]], eps: f64, min_samples: usize) -> (BTreeSet<BTreeSet<usize>>, bool) {
    let n = points.len();
    let near = |i: usize, j: usize| {
        let dx = points[i][0] - points[j][0];
        let dy = points[i][1] - points[j][1];
        (dx * dx + dy * dy).sqrt() <= eps
    };
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_samples).collect();
    let mut reach = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            reach[i][j] = core[i] && core[j] && near(i, j);
        }
    }
    for k in 0..n {
        let via = reach[k].clone();
        for row in reach.iter_mut().filter(|row| row[k]) {
            for (r, &v) in row.iter_mut().zip(&via) {
                *r |= v;
            }
        }
    }
    // Component representative: smallest core index reachable.
    let rep: Vec<Option<usize>> = (0..n).map(|i| if core[i] { (0..n).find(|&j| reach[i][j]) } else { None }).collect();
    let mut clusters: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
    let mut tie = false;
    for i in 0..n {
        if let Some(r) = rep[i] {
            clusters.entry(r).or_default().insert(i);
            continue;
        }
        let owners: BTreeSet<usize> = (0..n).filter(|&j| core[j] && near(i, j)).filter_map(|j| rep[j]).collect();
        tie |= owners.len() > 1;
        if let Some(&r) = owners.iter().next() {
            clusters.entry(r).or_default().insert(i);
        }
    }
    (clusters.into_values().collect(), tie)
}

/// Clusters of a label vector as sets of point indices.
pub fn partition(labels: &[Option<usize>]) -> BTreeSet<BTreeSet<usize>> {
    let mut by_id: std::collections::BTreeMap<usize, BTreeSet<usize>> = Default::default();
    for (i, l) in labels.iter().enumerate() {
        if let Some(id) = l {
            by_id.entry(*id).or_default().insert(i);
        }
    }
    by_id.into_values().collect()
}

/// Least squares through closed-form sums, written independently of the
/// library's fit.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (slope, (sy - slope * sx) / n)
}
