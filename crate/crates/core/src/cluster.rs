//! k-means++ seeded Lloyd clustering of fixed-dimension points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering<const D: usize = 2> {
    pub labels: Vec<usize>,
    pub centers: Vec<[f64; D]>,
    pub inertia: f64,
    /// Inertia after every assignment step, first entry from the seeds.
    pub inertia_trace: Vec<f64>,
}

fn d2<const D: usize>(a: [f64; D], b: [f64; D]) -> f64 {
    a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; the lowest index wins ties.
pub fn nearest_center<const D: usize>(p: [f64; D], centers: &[[f64; D]]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, &c) in centers.iter().enumerate() {
        let d = d2(p, c);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

fn plus_plus_seeds<const D: usize>(points: &[[f64; D]], k: usize, rng: &mut ChaCha8Rng) -> Vec<[f64; D]> {
    let mut chosen = vec![rng.random_range(0..points.len())];
    let mut dist: Vec<f64> = points.iter().map(|&p| d2(p, points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, &d) in dist.iter().enumerate() {
                if d <= 0.0 {
                    continue;
                }
                if target < d {
                    pick = Some(i);
                    break;
                }
                target -= d;
            }
            // rounding can exhaust the scan; fall back to the last positive
            pick.unwrap_or_else(|| dist.iter().rposition(|&d| d > 0.0).unwrap())
        } else {
            // every remaining point coincides with a seed
            (0..points.len()).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (d, &p) in dist.iter_mut().zip(points) {
            *d = d.min(d2(p, points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i]).collect()
}

fn assign<const D: usize>(points: &[[f64; D]], centers: &[[f64; D]], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (l, &p) in labels.iter_mut().zip(points) {
        *l = nearest_center(p, centers);
        inertia += d2(p, centers[*l]);
    }
    inertia
}

/// Recomputes means; an empty cluster takes the point farthest from its own
/// center. Returns the new centers.
fn update<const D: usize>(points: &[[f64; D]], labels: &mut [usize], centers: &[[f64; D]]) -> Vec<[f64; D]> {
    let k = centers.len();
    loop {
        let mut sums = vec![[0.0; D]; k];
        let mut counts = vec![0usize; k];
        for (&l, p) in labels.iter().zip(points) {
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return sums
                .iter()
                .zip(&counts)
                .map(|(s, &c)| s.map(|v| v / c as f64))
                .collect();
        };
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&i, &j| {
                d2(points[i], centers[labels[i]])
                    .total_cmp(&d2(points[j], centers[labels[j]]))
                    .then(j.cmp(&i))
            })
            .expect("points.len() >= k guarantees a donor cluster");
        labels[far] = empty;
    }
}

pub fn kmeans<const D: usize>(
    points: &[[f64; D]],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<Clustering<D>> {
    if k == 0 {
        return Err(Error::Config("k must be >= 1".into()));
    }
    if points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k,
            got: points.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seeds(points, k, &mut rng);
    let mut labels = vec![0; points.len()];
    let mut inertia = assign(points, &centers, &mut labels);
    let mut trace = vec![inertia];

    for _ in 0..max_iters {
        let mut next_labels = labels.clone();
        centers = update(points, &mut next_labels, &centers);
        let reseeded = next_labels != labels;
        labels = next_labels;
        let mut relabeled = labels.clone();
        inertia = assign(points, &centers, &mut relabeled);
        trace.push(inertia);
        if relabeled == labels && !reseeded {
            break;
        }
        labels = relabeled;
    }
    // centers are the means of the final assignment
    centers = update(points, &mut labels, &centers);
    inertia = points
        .iter()
        .zip(&labels)
        .map(|(&p, &l)| d2(p, centers[l]))
        .sum();

    Ok(Clustering {
        labels,
        centers,
        inertia,
        inertia_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs(seed: u64) -> Vec<[f64; 2]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::new();
        for center in [[0.0, 0.0], [100.0, 100.0]] {
            for _ in 0..50 {
                let r = rng.random_range(0.0..5.0f64);
                let t = rng.random_range(0.0..std::f64::consts::TAU);
                pts.push([center[0] + r * t.cos(), center[1] + r * t.sin()]);
            }
        }
        pts
    }

    #[test]
    fn single_cluster_is_centroid() {
        let pts = blobs(1);
        let c = kmeans(&pts, 1, 0, 100).unwrap();
        let n = pts.len() as f64;
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        assert!((c.centers[0][0] - cx).abs() < 1e-9 && (c.centers[0][1] - cy).abs() < 1e-9);
        assert!(c.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn two_blobs_are_separated() {
        for seed in 0..10 {
            let pts = blobs(seed + 100);
            let c = kmeans(&pts, 2, seed, 100).unwrap();
            let first = c.labels[0];
            assert!(c.labels[..50].iter().all(|&l| l == first));
            assert!(c.labels[50..].iter().all(|&l| l != first));
            for (blob, range) in [(0, 0..50), (1, 50..100)] {
                let n = 50.0;
                let mx = pts[range.clone()].iter().map(|p| p[0]).sum::<f64>() / n;
                let my = pts[range.clone()].iter().map(|p| p[1]).sum::<f64>() / n;
                let label = c.labels[range.start];
                let center = c.centers[label];
                assert!(d2(center, [mx, my]).sqrt() < 2.0, "blob {blob}");
            }
        }
    }

    #[test]
    fn one_point_per_cluster() {
        let pts = [[0.0, 0.0], [3.0, 1.0], [-2.0, 7.0]];
        let c = kmeans(&pts, 3, 5, 100).unwrap();
        let mut labels = c.labels.clone();
        labels.sort();
        assert_eq!(labels, vec![0, 1, 2]);
        assert_eq!(c.inertia, 0.0);
    }

    #[test]
    fn duplicates_still_yield_k_clusters() {
        let pts = [[1.0, 1.0]; 4];
        let c = kmeans(&pts, 2, 0, 10).unwrap();
        assert_eq!(c.centers.len(), 2);
        assert!(c.labels.iter().all(|&l| l < 2));
    }

    #[test]
    fn too_few_points() {
        assert!(matches!(
            kmeans(&[[0.0, 0.0]], 2, 0, 10),
            Err(Error::TooFewPoints { needed: 2, got: 1 })
        ));
    }

    #[test]
    fn inertia_never_increases_and_fixed_point_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pts: Vec<[f64; 2]> = (0..300)
            .map(|_| [rng.random_range(0.0..200.0), rng.random_range(0.0..150.0)])
            .collect();
        for k in 1..6 {
            let c = kmeans(&pts, k, k as u64, 100).unwrap();
            for w in c.inertia_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
            }
            for (p, &l) in pts.iter().zip(&c.labels) {
                assert_eq!(nearest_center(*p, &c.centers), l);
            }
            // centers are member means and inertia re-derives
            let mut recomputed = 0.0;
            for (j, center) in c.centers.iter().enumerate() {
                let members: Vec<_> = pts.iter().zip(&c.labels).filter(|(_, &l)| l == j).map(|(p, _)| *p).collect();
                if members.is_empty() {
                    continue;
                }
                let n = members.len() as f64;
                let mx = members.iter().map(|p| p[0]).sum::<f64>() / n;
                let my = members.iter().map(|p| p[1]).sum::<f64>() / n;
                assert!((center[0] - mx).abs() < 1e-9 && (center[1] - my).abs() < 1e-9);
                recomputed += members.iter().map(|&p| d2(p, *center)).sum::<f64>();
            }
            assert!((recomputed - c.inertia).abs() < 1e-6);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let pts = blobs(9);
        assert_eq!(kmeans(&pts, 3, 42, 100).unwrap(), kmeans(&pts, 3, 42, 100).unwrap());
    }
}
