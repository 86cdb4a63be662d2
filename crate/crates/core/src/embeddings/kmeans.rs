use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EmbeddingError;
use crate::scalar::Scalar;

pub const MAX_LLOYD_ITERATIONS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel<T> {
    pub k: usize,
    pub centroids: Vec<Vec<T>>,
    /// Topic index per document.
    pub assignment: Vec<usize>,
    /// Inertia after the initial assignment and after every Lloyd iteration.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x.as_f64() - y).powi(2)).sum()
}

/// Index of the nearest centroid, lowest index on ties, and the distance.
fn nearest<T: Scalar>(v: &[T], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(v, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

impl<T: Scalar> TopicModel<T> {
    /// Nearest centroid by squared Euclidean distance, lowest index on ties.
    pub fn nearest(&self, v: &[T]) -> usize {
        let cs: Vec<Vec<f64>> = self.centroids.iter().map(|c| c.iter().map(|x| x.as_f64()).collect()).collect();
        nearest(v, &cs).0
    }

    pub fn topic_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

fn assign<T: Scalar>(vectors: &[Vec<T>], centroids: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    vectors.iter().map(|v| nearest(v, centroids)).unzip()
}

/// k-means++ seeding followed by Lloyd iterations until the assignment stops
/// changing. A cluster left empty is re-seeded at the point farthest from its
/// current centroid.
pub fn kmeans_cluster<T: Scalar>(vectors: &[Vec<T>], k: usize, seed: u64) -> Result<TopicModel<T>, EmbeddingError> {
    if k == 0 {
        return Err(EmbeddingError::InvalidConfig("k must be positive".into()));
    }
    if vectors.len() < k {
        return Err(EmbeddingError::TooFewVectors { k, got: vectors.len() });
    }
    let dim = vectors[0].len();
    if let Some((index, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != dim) {
        return Err(EmbeddingError::DimensionMismatch { index, expected: dim, got: v.len() });
    }
    let n = vectors.len();
    let to_f64 = |v: &[T]| v.iter().map(|x| x.as_f64()).collect::<Vec<f64>>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut centroids = vec![to_f64(&vectors[rng.random_range(0..n)])];
    let mut d2: Vec<f64> = vectors.iter().map(|v| sq_dist(v, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > u {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        let c = to_f64(&vectors[pick]);
        for (d, v) in d2.iter_mut().zip(vectors) {
            *d = d.min(sq_dist(v, &c));
        }
        centroids.push(c);
    }

    let (mut assignment, mut dists) = assign(vectors, &centroids);
    let mut inertia_history = vec![dists.iter().sum()];
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (v, &a) in vectors.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(v) {
                *s += x.as_f64();
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        for j in 0..k {
            if counts[j] == 0 {
                let mut far = 0;
                for i in 1..n {
                    if dists[i] > dists[far] {
                        far = i;
                    }
                }
                centroids[j] = to_f64(&vectors[far]);
                dists[far] = 0.0;
            }
        }
        let (next, next_d) = assign(vectors, &centroids);
        inertia_history.push(next_d.iter().sum());
        let stable = next == assignment;
        assignment = next;
        dists = next_d;
        if stable {
            break;
        }
    }

    let centroids: Vec<Vec<T>> = centroids.iter().map(|c| c.iter().map(|&x| T::of(x)).collect()).collect();
    let mut model = TopicModel { k, centroids, assignment, inertia_history, iterations };
    let stored: Vec<Vec<f64>> = model.centroids.iter().map(|c| to_f64(c)).collect();
    model.assignment = assign(vectors, &stored).0;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn k_equals_n_gives_zero_inertia() {
        let v = vec![vec![0.0f64, 1.0], vec![5.0, 5.0], vec![-3.0, 2.0]];
        let m = kmeans_cluster(&v, 3, 1).unwrap();
        assert_eq!(m.inertia(), 0.0);
        let mut a = m.assignment.clone();
        a.sort();
        assert_eq!(a, vec![0, 1, 2]);
    }

    #[test]
    fn identical_points_with_two_clusters() {
        let v = vec![vec![1.0f32, 1.0]; 5];
        let m = kmeans_cluster(&v, 2, 3).unwrap();
        assert!(m.assignment.iter().all(|&a| a == 0));
        assert_eq!(m.inertia(), 0.0);
        assert_eq!(m.centroids.len(), 2);
    }

    #[test]
    fn separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut v = Vec::new();
        for i in 0..60 {
            let c = if i % 2 == 0 { -10.0 } else { 10.0 };
            v.push((0..4).map(|_| c + rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
        }
        let m = kmeans_cluster(&v, 2, 5).unwrap();
        let even = m.assignment[0];
        for (i, &a) in m.assignment.iter().enumerate() {
            assert_eq!(a == even, i % 2 == 0);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(kmeans_cluster(&[vec![1.0f64]], 2, 0), Err(EmbeddingError::TooFewVectors { k: 2, got: 1 })));
        assert!(kmeans_cluster(&[vec![1.0f64], vec![1.0, 2.0]], 1, 0).is_err());
    }

    proptest! {
        #[test]
        fn inertia_non_increasing_and_assignment_is_argmin(
            pts in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 4..40),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            let k = k.min(pts.len());
            let m = kmeans_cluster(&pts, k, seed).unwrap();
            for w in m.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
            }
            for (p, &a) in pts.iter().zip(&m.assignment) {
                let d: Vec<f64> = m.centroids.iter().map(|c| c.iter().zip(p).map(|(x, y)| (x - y).powi(2)).sum()).collect();
                let best = d.iter().cloned().fold(f64::INFINITY, f64::min);
                let first = d.iter().position(|&x| x == best).unwrap();
                prop_assert_eq!(a, first);
            }
        }
    }
}
