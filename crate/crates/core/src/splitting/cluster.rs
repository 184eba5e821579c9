//! Average-linkage agglomerative clustering under cosine distance, and the
//! degree of isolation of each resulting cluster.

use serde::{Deserialize, Serialize};

use super::SplitError;
use crate::exec::Exec;

pub type EmbeddingVector = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Index of the cluster's first member in the input order.
    pub id: usize,
    pub member_ids: Vec<String>,
    pub centroid: EmbeddingVector,
    /// Cosine distance to the nearest other centroid.
    pub doi: f64,
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>()
}

/// `1 - cos(u, v)`, clamped to `[0, 2]`. A zero vector is treated as
/// orthogonal to everything.
pub fn cosine_distance(u: &[f64], v: &[f64]) -> f64 {
    let (nu, nv) = (norm_sq(u), norm_sq(v));
    if nu == 0.0 || nv == 0.0 {
        return 1.0;
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    // sqrt(x * x) == x exactly, so identical vectors give exactly 0
    (1.0 - dot / (nu * nv).sqrt()).clamp(0.0, 2.0)
}

/// Upper-triangular distance matrix without the diagonal.
struct Condensed {
    n: usize,
    data: Vec<f64>,
}

impl Condensed {
    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + (j - i - 1)
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.index(i, j)]
    }

    fn set(&mut self, i: usize, j: usize, d: f64) {
        let idx = self.index(i, j);
        self.data[idx] = d;
    }
}

fn check_inputs(items: &[(String, EmbeddingVector)]) -> Result<(), SplitError> {
    let dim = items.first().map(|(_, v)| v.len()).unwrap_or(0);
    for (id, v) in items {
        if v.len() != dim {
            return Err(SplitError::DimensionMismatch {
                id: id.clone(),
                expected: dim,
                got: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(SplitError::NonFinite(id.clone()));
        }
        if norm_sq(v) == 0.0 {
            return Err(SplitError::ZeroVector(id.clone()));
        }
    }
    Ok(())
}

/// Merges the closest pair of clusters (average of pairwise cosine
/// distances between members) until `k` clusters remain. Ties go to the
/// pair with the lowest cluster ids, a cluster's id being the input index
/// of its first member. Returned clusters are ordered by id, with centroids
/// (mean of raw member vectors) and degree of isolation filled in.
///
/// The merge loop is sequential; `exec` only parallelizes the initial
/// distance matrix, whose entries are independent of the schedule.
pub fn agglomerative_cluster(
    items: &[(String, EmbeddingVector)],
    k: usize,
    exec: Exec,
) -> Result<Vec<Cluster>, SplitError> {
    let n = items.len();
    if k == 0 || k > n {
        return Err(SplitError::ClusterCount { k, n });
    }
    check_inputs(items)?;

    let sq: Vec<f64> = items.iter().map(|(_, v)| norm_sq(v)).collect();
    let rows: Vec<usize> = (0..n).collect();
    let row_data = exec.map(&rows, |&i| {
        ((i + 1)..n)
            .map(|j| {
                let dot: f64 = items[i].1.iter().zip(&items[j].1).map(|(a, b)| a * b).sum();
                (1.0 - dot / (sq[i] * sq[j]).sqrt()).clamp(0.0, 2.0)
            })
            .collect::<Vec<f64>>()
    });
    let mut dist = Condensed {
        n,
        data: row_data.into_iter().flatten().collect(),
    };

    let mut active = vec![true; n];
    let mut size = vec![1usize; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();

    let nearest = |dist: &Condensed, active: &[bool], i: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for (j, &on) in active.iter().enumerate() {
            if j != i && on {
                let d = dist.get(i, j);
                if d < best.0 {
                    best = (d, j);
                }
            }
        }
        best
    };
    let mut nn: Vec<(f64, usize)> = (0..n).map(|i| nearest(&dist, &active, i)).collect();

    let mut remaining = n;
    while remaining > k {
        // lowest row index holding the global minimum; its nearest neighbour
        // is then the lowest partner, so (a, b) is the lowest tied pair
        let mut a = usize::MAX;
        for i in 0..n {
            if active[i] && (a == usize::MAX || nn[i].0 < nn[a].0) {
                a = i;
            }
        }
        let b = nn[a].1;
        let (a, b) = if a < b { (a, b) } else { (b, a) };

        let (sa, sb) = (size[a] as f64, size[b] as f64);
        for (x, &on) in active.iter().enumerate() {
            if on && x != a && x != b {
                let d = (sa * dist.get(a, x) + sb * dist.get(b, x)) / (sa + sb);
                dist.set(a, x, d);
            }
        }
        active[b] = false;
        size[a] += size[b];
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        remaining -= 1;

        for x in 0..n {
            if !active[x] || x == a {
                continue;
            }
            if nn[x].1 == a || nn[x].1 == b {
                nn[x] = nearest(&dist, &active, x);
            } else {
                let d = dist.get(a, x);
                if d < nn[x].0 || (d == nn[x].0 && a < nn[x].1) {
                    nn[x] = (d, a);
                }
            }
        }
        nn[a] = nearest(&dist, &active, a);
    }

    let dim = items[0].1.len();
    let clusters: Vec<Cluster> = (0..n)
        .filter(|&i| active[i])
        .map(|i| {
            let mut idx = members[i].clone();
            idx.sort_unstable();
            let mut centroid = vec![0.0; dim];
            for &m in &idx {
                for (c, x) in centroid.iter_mut().zip(&items[m].1) {
                    *c += x;
                }
            }
            for c in &mut centroid {
                *c /= idx.len() as f64;
            }
            Cluster {
                id: i,
                member_ids: idx.iter().map(|&m| items[m].0.clone()).collect(),
                centroid,
                doi: 0.0,
            }
        })
        .collect();

    if clusters.len() < 2 {
        return Ok(clusters);
    }
    degree_of_isolation(clusters)
}

/// Sets each cluster's `doi` to the cosine distance between its centroid and
/// the nearest other centroid.
pub fn degree_of_isolation(mut clusters: Vec<Cluster>) -> Result<Vec<Cluster>, SplitError> {
    if clusters.len() < 2 {
        return Err(SplitError::TooFewClusters(clusters.len()));
    }
    let dois: Vec<f64> = (0..clusters.len())
        .map(|i| {
            clusters
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, c)| cosine_distance(&clusters[i].centroid, &c.centroid))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    for (c, d) in clusters.iter_mut().zip(dois) {
        c.doi = d;
    }
    Ok(clusters)
}
