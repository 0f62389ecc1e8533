//! DBSCAN over 2-D points.
//!
//! Points are scanned in ascending index order. Each unlabelled core point
//! starts a new cluster that is expanded breadth-first; a border point that
//! could belong to several clusters stays with the first one that reaches it.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Label {
    Unvisited,
    Noise,
    Cluster(usize),
}

fn neighbors(points: &[[f64; 2]], i: usize, eps: f64) -> Vec<usize> {
    let [x, y] = points[i];
    points.iter().enumerate().filter(|(_, p)| (p[0] - x).hypot(p[1] - y) <= eps).map(|(j, _)| j).collect()
}

/// Cluster id per point, `None` for noise. The eps-neighbourhood is closed and
/// includes the point itself, so a point is core when at least `min_samples`
/// points lie within `eps`. Cluster ids are numbered in order of the first
/// core point that founds them.
pub fn dbscan_labels(points: &[[f64; 2]], eps: f64, min_samples: usize) -> Vec<Option<usize>> {
    let n = points.len();
    let mut labels = vec![Label::Unvisited; n];
    let mut next_id = 0;
    let mut queue = std::collections::VecDeque::new();

    for i in 0..n {
        if labels[i] != Label::Unvisited {
            continue;
        }
        let seeds = neighbors(points, i, eps);
        if seeds.len() < min_samples {
            labels[i] = Label::Noise;
            continue;
        }
        let id = next_id;
        next_id += 1;
        labels[i] = Label::Cluster(id);
        queue.extend(seeds);
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                Label::Noise => labels[j] = Label::Cluster(id),
                Label::Unvisited => {
                    labels[j] = Label::Cluster(id);
                    let nb = neighbors(points, j, eps);
                    if nb.len() >= min_samples {
                        queue.extend(nb);
                    }
                }
                Label::Cluster(_) => {}
            }
        }
    }

    labels
        .into_iter()
        .map(|l| match l {
            Label::Cluster(id) => Some(id),
            _ => None,
        })
        .collect()
}
