//! Seeded k-means++ / Lloyd clustering of 7-dimensional feature vectors.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Point = [f64; 7];

pub const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub centroids: Vec<Point>,
    /// Cluster id per input point, indexing `centroids`.
    pub assignment: Vec<usize>,
    pub inertia: f64,
    /// Inertia after every assignment step, in order.
    pub inertia_history: Vec<f64>,
}

fn sq_dist(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index and squared distance of the nearest centroid; ties go to the lower index.
fn nearest(p: &Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn plus_plus_init(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centroids = vec![points[rng.random_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        if total <= 0.0 {
            // Every point coincides with a chosen centre.
            break;
        }
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = points.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            acc += d;
            if acc > target && *d > 0.0 {
                pick = i;
                break;
            }
        }
        let c = points[pick];
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Deterministic for a given seed. `k` is clamped to the number of points and
/// clusters that end up empty are dropped.
pub fn kmeans(points: &[Point], k: usize, seed: u64) -> KMeansResult {
    assert!(!points.is_empty(), "kmeans on an empty point set");
    let k = k.clamp(1, points.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);
    let mut assignment: Vec<usize> = Vec::new();
    let mut history = Vec::new();

    for _ in 0..MAX_ITERATIONS {
        let mut inertia = 0.0;
        let next: Vec<usize> = points
            .iter()
            .map(|p| {
                let (c, d) = nearest(p, &centroids);
                inertia += d;
                c
            })
            .collect();
        history.push(inertia);
        let converged = next == assignment;
        assignment = next;
        if converged {
            break;
        }

        let mut sums = vec![[0.0; 7]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (p, &c) in points.iter().zip(&assignment) {
            counts[c] += 1;
            for (s, x) in sums[c].iter_mut().zip(p) {
                *s += x;
            }
        }
        // Drop empty clusters and renumber the survivors.
        let mut remap = vec![usize::MAX; centroids.len()];
        let mut kept = Vec::with_capacity(centroids.len());
        for (c, (sum, &count)) in sums.iter().zip(&counts).enumerate() {
            if count > 0 {
                remap[c] = kept.len();
                kept.push(sum.map(|s| s / count as f64));
            }
        }
        for a in &mut assignment {
            *a = remap[*a];
        }
        centroids = kept;
    }

    let inertia = points
        .iter()
        .zip(&assignment)
        .map(|(p, &c)| sq_dist(p, &centroids[c]))
        .sum();
    KMeansResult {
        centroids,
        assignment,
        inertia,
        inertia_history: history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn cloud(center: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
        let noise = Normal::new(0.0, 0.05).unwrap();
        (0..n)
            .map(|_| {
                let mut p = [center; 7];
                for x in &mut p {
                    *x += noise.sample(rng);
                }
                p
            })
            .collect()
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts = cloud(0.3, 25, &mut rng);
        let r = kmeans(&pts, 1, 7);
        assert_eq!(r.centroids.len(), 1);
        let n = pts.len() as f64;
        let mut variance_sum = 0.0;
        for d in 0..7 {
            let mean = pts.iter().map(|p| p[d]).sum::<f64>() / n;
            assert!((r.centroids[0][d] - mean).abs() < 1e-12);
            variance_sum += pts.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n;
        }
        assert!((r.inertia - variance_sum * n).abs() < 1e-10);
    }

    #[test]
    fn separated_clouds_are_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pts = cloud(0.0, 30, &mut rng);
        pts.extend(cloud(5.0, 20, &mut rng));
        let r = kmeans(&pts, 2, 0x5EED);
        let first = r.assignment[0];
        assert!(r.assignment[..30].iter().all(|&a| a == first));
        assert!(r.assignment[30..].iter().all(|&a| a != first));
    }

    #[test]
    fn deterministic_for_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts = cloud(1.0, 10, &mut rng);
        assert_eq!(kmeans(&pts, 3, 42), kmeans(&pts, 3, 42));
    }

    #[test]
    fn k_is_clamped_and_duplicates_collapse() {
        let pts = vec![[1.0; 7]; 5];
        let r = kmeans(&pts, 40, 1);
        assert_eq!(r.centroids.len(), 1);
        assert_eq!(r.inertia, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = cloud(0.0, 3, &mut rng);
        assert_eq!(kmeans(&pts, 10, 1).centroids.len(), 3);
    }

    #[test]
    fn inertia_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pts = Vec::new();
        for c in 0..6 {
            pts.extend(cloud(c as f64 * 0.15, 40, &mut rng));
        }
        for seed in 0..10 {
            let r = kmeans(&pts, 8, seed);
            for w in r.inertia_history.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12), "{w:?}");
            }
            for c in 0..r.centroids.len() {
                assert!(r.assignment.contains(&c));
            }
        }
    }
}
