//! Density-based clustering with a caller-supplied metric.
//!
//! Classic DBSCAN over item indices: core points have at least `min_pts`
//! neighbors (themselves included) within `eps`; clusters grow through core
//! points; everything unreachable is noise. Scan and queue order are fixed,
//! so cluster ids are deterministic for a given input order.

/// Cluster id per item, `None` for noise. Ids are dense and start at 0 in
/// discovery order.
pub fn dbscan<M>(n: usize, metric: M, eps: f64, min_pts: usize) -> Vec<Option<usize>>
where
    M: Fn(usize, usize) -> f64,
{
    #[derive(Clone, Copy, PartialEq)]
    enum Label {
        Unvisited,
        Noise,
        Cluster(usize),
    }

    let neighbors = |i: usize| -> Vec<usize> {
        (0..n).filter(|&j| metric(i, j) <= eps).collect()
    };

    let mut labels = vec![Label::Unvisited; n];
    let mut next_id = 0;
    for i in 0..n {
        if labels[i] != Label::Unvisited {
            continue;
        }
        let seeds = neighbors(i);
        if seeds.len() < min_pts {
            labels[i] = Label::Noise;
            continue;
        }
        let id = next_id;
        next_id += 1;
        labels[i] = Label::Cluster(id);
        let mut queue: std::collections::VecDeque<usize> = seeds.into();
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                Label::Cluster(_) => continue,
                Label::Noise => {
                    // Border point claimed by this cluster.
                    labels[j] = Label::Cluster(id);
                    continue;
                }
                Label::Unvisited => {
                    labels[j] = Label::Cluster(id);
                    let nj = neighbors(j);
                    if nj.len() >= min_pts {
                        queue.extend(nj);
                    }
                }
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

/// Groups item indices by cluster id. Clusters come out in id order; items
/// keep their index order within each cluster.
pub fn group_clusters(labels: &[Option<usize>]) -> Vec<Vec<usize>> {
    let count = labels.iter().flatten().copied().max().map_or(0, |m| m + 1);
    let mut groups = vec![Vec::new(); count];
    for (i, l) in labels.iter().enumerate() {
        if let Some(id) = l {
            groups[*id].push(i);
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    fn metric_1d(xs: &[f64]) -> impl Fn(usize, usize) -> f64 + '_ {
        move |i, j| (xs[i] - xs[j]).abs()
    }

    #[test]
    fn tight_group_of_min_pts_is_one_cluster() {
        let xs = [0.0, 0.01, 0.02, 0.03, 0.04];
        let labels = dbscan(xs.len(), metric_1d(&xs), 0.08, 5);
        assert!(labels.iter().all(|l| *l == Some(0)));
    }

    #[test]
    fn sparse_points_are_noise() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let labels = dbscan(xs.len(), metric_1d(&xs), 0.08, 3);
        assert!(labels.iter().all(|l| l.is_none()));
    }

    #[test]
    fn two_separated_groups() {
        let xs = [0.0, 0.02, 0.04, 0.06, 5.0, 5.02, 5.04, 5.06];
        let labels = dbscan(xs.len(), metric_1d(&xs), 0.1, 4);
        assert_eq!(&labels[..4], &[Some(0); 4]);
        assert_eq!(&labels[4..], &[Some(1); 4]);
        let groups = group_clusters(&labels);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0], vec![0, 1, 2, 3]);
    }

    #[test]
    fn chain_connects_through_cores() {
        // Every point within eps of its neighbors; density carries the
        // cluster across the whole chain.
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.05).collect();
        let labels = dbscan(xs.len(), metric_1d(&xs), 0.11, 3);
        assert!(labels.iter().all(|l| *l == Some(0)));
    }

    #[test]
    fn border_point_joins_first_cluster() {
        // 0.0..0.06 is dense; 0.13 is reachable from the last core point
        // but not core itself.
        let xs = [0.0, 0.02, 0.04, 0.06, 0.13];
        let labels = dbscan(xs.len(), metric_1d(&xs), 0.08, 4);
        assert_eq!(labels[4], Some(0));
    }
}
