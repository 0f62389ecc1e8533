use super::*;
use proptest::prelude::*;

fn pt(sentence_index: usize, cents: f64) -> PeakPoint {
    PeakPoint { sentence_index, cents, source: PeakRef { sentence_index, fit_index: 0 } }
}

fn cluster_of(points: Vec<PeakPoint>) -> Cluster {
    Cluster { id: 0, points, significant: true }
}

fn sentence(index: usize, start: f64) -> Sentence {
    Sentence { index, start_sec: start, end_sec: start + 10.0, frames: Vec::new() }
}

fn fit_at(cents: f64) -> PeakFit {
    PeakFit {
        c1: 0.0,
        c2: 0.0,
        c3: 1.0,
        c4: cents,
        c5: 100.0,
        peak_cents: cents,
        rmse: 0.0,
        n_bins: 10,
        converged: true,
        iterations: 1,
        lo_cents: cents - 20.0,
        hi_cents: cents + 20.0,
        apex_cents: cents,
        issue: None,
    }
}

#[test]
fn identical_points_one_cluster() {
    let pts = vec![pt(3, 100.0); 5];
    let c = dbscan(&pts, &ClusterConfig::default()).unwrap();
    assert_eq!(c.clusters.len(), 1);
    assert_eq!(c.clusters[0].points.len(), 5);
    assert!(c.noise.is_empty());
}

#[test]
fn line_of_points_with_outlier() {
    let cfg = ClusterConfig { cents_scale: 1.0, ..Default::default() };
    let pts = vec![pt(0, 0.0), pt(1, 0.0), pt(2, 0.0), pt(10, 0.0)];
    let c = dbscan(&pts, &cfg).unwrap();
    assert_eq!(c.clusters.len(), 1);
    assert_eq!(c.clusters[0].points, pts[..3].to_vec());
    assert_eq!(c.noise, vec![pts[3]]);
}

#[test]
fn border_tie_goes_to_first_cluster() {
    // x=1 is within eps of the cores at x=0 (cluster 0) and x=2 (cluster 1);
    // with min_samples 4 it is a border point of both.
    let coords = [[-1.0, 0.0], [-0.5, 0.0], [0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [2.5, 0.0], [3.0, 0.0]];
    let labels = dbscan_labels(&coords, 1.0, 4);
    assert_eq!(labels[3], Some(0));
}

#[test]
fn cents_only_metric_ignores_sentence() {
    let cfg = ClusterConfig { metric: ClusterMetric::CentsOnly, ..Default::default() };
    let pts = vec![pt(0, 500.0), pt(9, 505.0), pt(20, 498.0)];
    let c = dbscan(&pts, &cfg).unwrap();
    assert_eq!(c.clusters.len(), 1);
    let joint = dbscan(&pts, &ClusterConfig::default()).unwrap();
    assert_eq!(joint.noise.len(), 3);
}

#[test]
fn bad_config_rejected() {
    let cfg = ClusterConfig { eps: 0.0, ..Default::default() };
    assert!(matches!(dbscan(&[], &cfg), Err(DriftError::Config(_))));
    let cfg = ClusterConfig { min_samples: 0, ..Default::default() };
    assert!(dbscan(&[], &cfg).is_err());
    assert_eq!(dbscan(&[], &ClusterConfig::default()).unwrap(), Clustering::default());
}

#[test]
fn exact_line() {
    let l = fit_drift_line(&cluster_of(vec![pt(0, 0.0), pt(1, 1.0), pt(2, 2.0)])).unwrap();
    assert_eq!((l.slope, l.intercept, l.r2), (1.0, 0.0, 1.0));
}

#[test]
fn constant_line() {
    let l = fit_drift_line(&cluster_of(vec![pt(0, 100.0), pt(1, 100.0), pt(2, 100.0)])).unwrap();
    assert_eq!((l.slope, l.intercept, l.r2), (0.0, 100.0, 1.0));
}

#[test]
fn hand_computed_line() {
    // x̄=1, ȳ=1, Sxy=1, Sxx=2 → slope 0.5, intercept 0.5; SS_res=1.5, SS_tot=2
    let l = fit_drift_line(&cluster_of(vec![pt(0, 0.0), pt(1, 2.0), pt(2, 1.0)])).unwrap();
    assert!((l.slope - 0.5).abs() < 1e-12);
    assert!((l.intercept - 0.5).abs() < 1e-12);
    assert!((l.r2 - 0.25).abs() < 1e-12);
}

#[test]
fn single_sentence_is_degenerate() {
    let r = fit_drift_line(&cluster_of(vec![pt(4, 0.0), pt(4, 10.0)]));
    assert!(matches!(r, Err(DriftError::Degenerate(2))));
    assert!(fit_drift_line(&cluster_of(vec![pt(4, 0.0)])).is_err());
}

#[test]
fn two_point_cluster_is_insignificant() {
    let sentences: Vec<Sentence> = (0..6).map(|i| sentence(i, i as f64 * 20.0)).collect();
    let fits: Vec<Vec<PeakFit>> = (0..6)
        .map(|i| {
            let mut f = vec![fit_at(5000.0 - i as f64)];
            if i == 2 || i == 3 {
                f.push(fit_at(5400.0));
            }
            f
        })
        .collect();
    let input: Vec<(&Sentence, &[PeakFit])> = sentences.iter().zip(&fits).map(|(s, f)| (s, f.as_slice())).collect();
    let report = analyze_drift(&input, &ClusterConfig::default()).unwrap();
    assert_eq!(report.clusters.len(), 2);
    let small = report.clusters.iter().find(|c| c.cluster.points.len() == 2).unwrap();
    assert!(!small.cluster.significant);
    assert!(small.line.is_some());
    assert_eq!(report.summary.n_significant_clusters, 1);
    assert_eq!(report.summary.slopes.len(), 1);
    assert!((report.summary.slopes[0] + 1.0).abs() < 1e-9);
    assert_eq!(report.summary.mean_slope, report.summary.slopes.first().copied());
    // 20 s between sentences: -1 cent/sentence is -3 cents/minute
    let big = report.clusters.iter().find(|c| c.cluster.significant).unwrap();
    assert!((big.line.unwrap().slope_cents_per_minute.unwrap() + 3.0).abs() < 1e-9);
}

#[test]
fn constant_note_has_no_drift() {
    let sentences: Vec<Sentence> = (0..8).map(|i| sentence(i, i as f64 * 12.0)).collect();
    let fits: Vec<Vec<PeakFit>> = (0..8).map(|_| vec![fit_at(6000.0)]).collect();
    let input: Vec<(&Sentence, &[PeakFit])> = sentences.iter().zip(&fits).map(|(s, f)| (s, f.as_slice())).collect();
    let report = analyze_drift(&input, &ClusterConfig::default()).unwrap();
    assert_eq!(report.clusters.len(), 1);
    assert_eq!(report.clusters[0].line.unwrap().slope, 0.0);
}

#[test]
fn no_peaks_is_empty_report() {
    let s = sentence(0, 0.0);
    let input: Vec<(&Sentence, &[PeakFit])> = vec![(&s, &[])];
    assert!(matches!(analyze_drift(&input, &ClusterConfig::default()), Err(DriftError::EmptyReport)));
}

#[test]
fn same_sentence_pair_has_no_line() {
    let s = sentence(0, 0.0);
    let fits = vec![fit_at(5000.0), fit_at(5010.0)];
    let input: Vec<(&Sentence, &[PeakFit])> = vec![(&s, &fits)];
    let report = analyze_drift(&input, &ClusterConfig::default()).unwrap();
    assert_eq!(report.clusters.len(), 1);
    assert!(report.clusters[0].line.is_none());
    assert_eq!(report.summary.mean_slope, None);
}

fn arb_points() -> impl Strategy<Value = Vec<[f64; 2]>> {
    proptest::collection::vec((0.0f64..10.0, 0.0f64..10.0).prop_map(|(x, y)| [x, y]), 0..60)
}

/// Canonical form of a partition: sorted member lists plus noise.
fn canonical(labels: &[Option<usize>]) -> (Vec<Vec<usize>>, Vec<usize>) {
    let k = labels.iter().flatten().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); k];
    let mut noise = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match l {
            Some(c) => groups[*c].push(i),
            None => noise.push(i),
        }
    }
    groups.sort();
    (groups, noise)
}

fn has_border_ties(points: &[[f64; 2]], eps: f64, min_samples: usize, labels: &[Option<usize>]) -> bool {
    let near = |a: usize, b: usize| (points[a][0] - points[b][0]).hypot(points[a][1] - points[b][1]) <= eps;
    let n = points.len();
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_samples).collect();
    (0..n).filter(|&i| !core[i]).any(|i| {
        let mut ids: Vec<_> = (0..n).filter(|&j| core[j] && near(i, j)).filter_map(|j| labels[j]).collect();
        ids.sort();
        ids.dedup();
        ids.len() > 1
    })
}

proptest! {
    #[test]
    fn partition_covers_input(points in arb_points(), eps in 0.1f64..3.0, min_samples in 1usize..6) {
        let labels = dbscan_labels(&points, eps, min_samples);
        prop_assert_eq!(labels.len(), points.len());
        let (groups, noise) = canonical(&labels);
        prop_assert_eq!(groups.iter().map(Vec::len).sum::<usize>() + noise.len(), points.len());
        prop_assert!(groups.iter().all(|g| !g.is_empty()));
        // ids are numbered in order of their founding (lowest-index) core point
        let is_core = |i: usize| points.iter().filter(|q| (q[0] - points[i][0]).hypot(q[1] - points[i][1]) <= eps).count() >= min_samples;
        let firsts: Vec<usize> = (0..groups.len())
            .map(|id| (0..points.len()).find(|&i| labels[i] == Some(id) && is_core(i)).unwrap())
            .collect();
        prop_assert!(firsts.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn permutation_invariant_without_ties(points in arb_points(), eps in 0.1f64..3.0, min_samples in 1usize..6, seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let labels = dbscan_labels(&points, eps, min_samples);
        prop_assume!(!has_border_ties(&points, eps, min_samples, &labels));
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let shuffled: Vec<[f64; 2]> = order.iter().map(|&i| points[i]).collect();
        let shuffled_labels = dbscan_labels(&shuffled, eps, min_samples);
        let mut back = vec![None; points.len()];
        for (pos, &orig) in order.iter().enumerate() {
            back[orig] = shuffled_labels[pos];
        }
        prop_assert_eq!(canonical(&labels), canonical(&back));
    }

    #[test]
    fn growing_eps_never_adds_noise(points in arb_points(), eps in 0.1f64..3.0, grow in 0.0f64..2.0, min_samples in 1usize..6) {
        let noise = |e: f64| dbscan_labels(&points, e, min_samples).iter().filter(|l| l.is_none()).count();
        prop_assert!(noise(eps + grow) <= noise(eps));
    }

    #[test]
    fn ols_residuals_sum_to_zero(ys in proptest::collection::vec(-3000.0f64..3000.0, 2..40)) {
        let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
        let l = fit_line(&xs, &ys).unwrap();
        let res: Vec<f64> = xs.iter().zip(&ys).map(|(x, y)| y - l.at(*x)).collect();
        let scale: f64 = ys.iter().map(|y| y.abs()).sum::<f64>() + 1.0;
        prop_assert!(res.iter().sum::<f64>().abs() <= 1e-9 * scale);
        prop_assert!(res.iter().zip(&xs).map(|(r, x)| r * x).sum::<f64>().abs() <= 1e-9 * scale * xs.len() as f64);
        prop_assert!((0.0..=1.0).contains(&l.r2));
    }

    #[test]
    fn ols_equivariance(ys in proptest::collection::vec(-3000.0f64..3000.0, 2..40), k in -1000.0f64..1000.0, m in 1usize..5) {
        let xs: Vec<f64> = (0..ys.len()).map(|i| i as f64).collect();
        let base = fit_line(&xs, &ys).unwrap();
        let lifted: Vec<f64> = ys.iter().map(|y| y + k).collect();
        let l = fit_line(&xs, &lifted).unwrap();
        prop_assert!((l.slope - base.slope).abs() <= 1e-9 * (1.0 + base.slope.abs()) * 1e3);
        prop_assert!((l.intercept - base.intercept - k).abs() <= 1e-6);
        let stretched: Vec<f64> = xs.iter().map(|x| x * m as f64).collect();
        let s = fit_line(&stretched, &ys).unwrap();
        prop_assert!((s.slope - base.slope / m as f64).abs() <= 1e-9 * (1.0 + base.slope.abs()));
    }
}
