//! Point-cloud denoising: k-NN statistics, statistical outlier removal, and
//! density clustering.
//!
//! Every routine here is deterministic: neighbor sets are ordered by
//! (distance, index), clusters are numbered in first-discovery order, and the
//! accelerated search paths return bit-identical results to their exhaustive
//! counterparts.

use std::collections::{HashMap, VecDeque};

use nalgebra::Vector3;

use crate::camera::PointCloud;
use crate::{Error, Result};

/// Statistical outlier removal parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SorParams {
    /// Neighbors per point used for the mean-distance statistic.
    pub k_neighbors: usize,
    /// A point survives iff its mean neighbor distance is at most
    /// mean + std_ratio * std over the whole cloud.
    pub std_ratio: f64,
}

impl Default for SorParams {
    fn default() -> Self {
        Self { k_neighbors: 6, std_ratio: 4.0 }
    }
}

/// Density clustering parameters. `eps` is in the units of the input points
/// (meters throughout this crate).
#[derive(Debug, Clone, PartialEq)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_samples: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        Self { eps: 0.00025, min_samples: 5 }
    }
}

/// Per-point cluster assignment: `labels[i]` is a cluster id in
/// `0..n_clusters`, or -1 for noise. Ids are assigned in the order clusters
/// are first discovered when scanning points by index.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterLabeling {
    pub labels: Vec<i32>,
    pub n_clusters: usize,
}

/// Below this point count the k-NN query scans all pairs; above it a uniform
/// grid prunes the search. Both paths produce identical output.
pub const KNN_BRUTE_FORCE_MAX: usize = 2000;

/// Squared Euclidean distance, fixed evaluation order. Both the exhaustive
/// and the grid-accelerated paths use this exact expression so their results
/// can be compared bitwise.
#[inline]
fn dist2_3(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

#[inline]
fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut acc = 0.0;
    for i in 0..D {
        let d = a[i] - b[i];
        acc += d * d;
    }
    acc
}

/// Neighbor candidate ordered by (squared distance, index).
#[derive(PartialEq)]
struct Cand {
    d2: f64,
    idx: usize,
}

impl Eq for Cand {}

impl Ord for Cand {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.d2.total_cmp(&other.d2).then(self.idx.cmp(&other.idx))
    }
}

impl PartialOrd for Cand {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn knn_preconditions(n: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::InvalidParameter("k-NN requires k >= 1".into()));
    }
    if n <= k {
        return Err(Error::TooFewPoints(format!(
            "k-NN with k = {k} needs more than {k} points, got {n}"
        )));
    }
    Ok(())
}

/// Mean of each point's sqrt-distances to the k nearest other points; the k
/// distances are accumulated in ascending (distance, index) order.
fn mean_of_sorted(cands: &[Cand], k: usize) -> f64 {
    let mut sum = 0.0;
    for c in &cands[..k] {
        sum += c.d2.sqrt();
    }
    sum / k as f64
}

/// Mean distance to the k nearest neighbors of every point, exhaustive scan.
pub fn knn_mean_distances_brute(points: &[Vector3<f64>], k: usize) -> Result<Vec<f64>> {
    knn_preconditions(points.len(), k)?;
    let mut out = Vec::with_capacity(points.len());
    let mut cands: Vec<Cand> = Vec::with_capacity(points.len() - 1);
    for (i, p) in points.iter().enumerate() {
        cands.clear();
        for (j, q) in points.iter().enumerate() {
            if j != i {
                cands.push(Cand { d2: dist2_3(p, q), idx: j });
            }
        }
        cands.select_nth_unstable(k - 1);
        cands[..k].sort_unstable();
        out.push(mean_of_sorted(&cands, k));
    }
    Ok(out)
}

/// Uniform grid over 3-space. Cells hold point indices in ascending order.
struct Grid3 {
    cells: HashMap<[i64; 3], Vec<usize>>,
    /// Largest per-axis cell-index span; bounds the ring search.
    span: i64,
}

impl Grid3 {
    fn key(cell: f64, p: &Vector3<f64>) -> [i64; 3] {
        [
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        ]
    }

    fn build(points: &[Vector3<f64>], cell: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(cell, p)).or_default().push(i);
        }
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for key in cells.keys() {
            for a in 0..3 {
                lo[a] = lo[a].min(key[a]);
                hi[a] = hi[a].max(key[a]);
            }
        }
        let span = (0..3).map(|a| hi[a] - lo[a]).max().unwrap_or(0);
        Self { cells, span }
    }
}

/// Mean distance to the k nearest neighbors, grid-accelerated.
///
/// The ring search stops one ring later than strictly necessary, which keeps
/// the result exact even when a candidate sits within rounding error of the
/// pruning boundary.
pub fn knn_mean_distances_grid(points: &[Vector3<f64>], k: usize) -> Result<Vec<f64>> {
    knn_preconditions(points.len(), k)?;
    let n = points.len();

    let mut lo = Vector3::repeat(f64::INFINITY);
    let mut hi = Vector3::repeat(f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let max_extent = (hi - lo).max();
    let cells_per_axis = (n as f64).cbrt().ceil().max(1.0);
    let cell = (max_extent / cells_per_axis).max(1e-12);
    let grid = Grid3::build(points, cell);

    let mut out = Vec::with_capacity(n);
    for (i, p) in points.iter().enumerate() {
        let center = Grid3::key(cell, p);
        let mut heap: std::collections::BinaryHeap<Cand> =
            std::collections::BinaryHeap::with_capacity(k + 1);
        let mut m: i64 = 0;
        loop {
            // Cells at Chebyshev ring m around the query's cell.
            for dx in -m..=m {
                for dy in -m..=m {
                    for dz in -m..=m {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != m {
                            continue;
                        }
                        let key = [center[0] + dx, center[1] + dy, center[2] + dz];
                        let Some(bucket) = grid.cells.get(&key) else {
                            continue;
                        };
                        for &j in bucket {
                            if j == i {
                                continue;
                            }
                            let cand = Cand { d2: dist2_3(p, &points[j]), idx: j };
                            if heap.len() < k {
                                heap.push(cand);
                            } else if cand < *heap.peek().expect("heap is non-empty") {
                                heap.pop();
                                heap.push(cand);
                            }
                        }
                    }
                }
            }
            let scanned_all = m >= grid.span;
            if scanned_all {
                break;
            }
            if heap.len() == k {
                // Points in unscanned rings are at least (m-1) cell widths
                // away (one ring of slack absorbs cell-assignment rounding).
                let safe = (m - 1).max(0) as f64 * cell;
                let worst = heap.peek().expect("heap is full").d2;
                if safe * safe > worst {
                    break;
                }
            }
            m += 1;
        }
        debug_assert_eq!(heap.len(), k);
        let sorted = heap.into_sorted_vec();
        out.push(mean_of_sorted(&sorted, k));
    }
    Ok(out)
}

/// Mean distance to the k nearest neighbors of every point (self excluded).
/// Ties are broken by index; see [`KNN_BRUTE_FORCE_MAX`] for path selection.
pub fn knn_mean_distances(points: &[Vector3<f64>], k: usize) -> Result<Vec<f64>> {
    if points.len() < KNN_BRUTE_FORCE_MAX {
        knn_mean_distances_brute(points, k)
    } else {
        knn_mean_distances_grid(points, k)
    }
}

/// Indices surviving statistical outlier removal, in input order.
///
/// A point is kept iff its mean k-NN distance m_i satisfies
/// m_i <= mean(m) + std_ratio * std(m), with the population standard
/// deviation and a one-sided upper threshold.
pub fn sor_kept_indices(points: &[Vector3<f64>], params: &SorParams) -> Result<Vec<usize>> {
    if !params.std_ratio.is_finite() || params.std_ratio < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "SOR std_ratio must be finite and non-negative, got {}",
            params.std_ratio
        )));
    }
    let means = knn_mean_distances(points, params.k_neighbors)?;
    let n = means.len() as f64;
    let mu = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mu) * (m - mu)).sum::<f64>() / n;
    let threshold = mu + params.std_ratio * var.sqrt();
    Ok(means
        .iter()
        .enumerate()
        .filter(|(_, &m)| m <= threshold)
        .map(|(i, _)| i)
        .collect())
}

/// Statistical outlier removal. Point order is preserved and colors follow
/// their points.
pub fn sor_filter(cloud: &PointCloud, params: &SorParams) -> Result<PointCloud> {
    let kept = sor_kept_indices(&cloud.points, params)?;
    Ok(cloud.select(&kept))
}

/// Uniform grid with eps-sized cells over D-space.
struct EpsGrid<const D: usize> {
    eps: f64,
    eps2: f64,
    cells: HashMap<[i64; D], Vec<usize>>,
}

impl<const D: usize> EpsGrid<D> {
    fn key(eps: f64, p: &[f64; D]) -> [i64; D] {
        let mut k = [0i64; D];
        for a in 0..D {
            k[a] = (p[a] / eps).floor() as i64;
        }
        k
    }

    fn build(points: &[[f64; D]], eps: f64) -> Self {
        let mut cells: HashMap<[i64; D], Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells.entry(Self::key(eps, p)).or_default().push(i);
        }
        Self { eps, eps2: eps * eps, cells }
    }

    /// Indices within eps of `p` (closed ball), ascending. The query point
    /// itself is included when it belongs to the set.
    fn neighbors(&self, points: &[[f64; D]], p: &[f64; D]) -> Vec<usize> {
        let center = Self::key(self.eps, p);
        let mut found = Vec::new();
        // 3^D block around the center cell.
        for combo in 0..3usize.pow(D as u32) {
            let mut key = center;
            let mut c = combo;
            for slot in key.iter_mut() {
                *slot += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(bucket) = self.cells.get(&key) {
                for &j in bucket {
                    if dist2(p, &points[j]) <= self.eps2 {
                        found.push(j);
                    }
                }
            }
        }
        found.sort_unstable();
        found
    }
}

const UNVISITED: i32 = -2;
/// Noise label in [`ClusterLabeling::labels`].
pub const NOISE: i32 = -1;

/// Classic density clustering over D-dimensional points.
///
/// A point is core iff its closed eps-ball contains at least `min_samples`
/// points counting itself. Points are scanned in index order, clusters grow
/// breadth-first with neighbor lists sorted by index, and a border point
/// belongs to the first cluster that reaches it, so the labeling is a pure
/// function of the input order.
pub fn dbscan<const D: usize>(points: &[[f64; D]], params: &DbscanParams) -> Result<ClusterLabeling> {
    if !params.eps.is_finite() || params.eps <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "DBSCAN eps must be finite and positive, got {}",
            params.eps
        )));
    }
    if params.min_samples == 0 {
        return Err(Error::InvalidParameter(
            "DBSCAN min_samples must be at least 1".into(),
        ));
    }
    let n = points.len();
    let grid = EpsGrid::build(points, params.eps);
    let mut labels = vec![UNVISITED; n];
    let mut next_cluster: i32 = 0;
    let mut queue = VecDeque::new();

    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        let nbrs = grid.neighbors(points, &points[i]);
        if nbrs.len() < params.min_samples {
            labels[i] = NOISE;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[i] = cluster;
        queue.extend(nbrs);
        while let Some(j) = queue.pop_front() {
            if labels[j] == NOISE {
                // Border point: claimed by the first cluster to reach it.
                // It cannot be core, otherwise it would have started its own
                // cluster when scanned.
                labels[j] = cluster;
                continue;
            }
            if labels[j] != UNVISITED {
                continue;
            }
            labels[j] = cluster;
            let jn = grid.neighbors(points, &points[j]);
            if jn.len() >= params.min_samples {
                queue.extend(jn);
            }
        }
    }
    Ok(ClusterLabeling { labels, n_clusters: next_cluster as usize })
}

/// Indices of the most populous cluster, ascending. Ties go to the lowest
/// cluster id; an all-noise labeling yields an empty vector.
pub fn largest_cluster(labeling: &ClusterLabeling) -> Vec<usize> {
    if labeling.n_clusters == 0 {
        return Vec::new();
    }
    let mut counts = vec![0usize; labeling.n_clusters];
    for &l in &labeling.labels {
        if l >= 0 {
            counts[l as usize] += 1;
        }
    }
    let best = counts
        .iter()
        .enumerate()
        .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
        .map(|(i, _)| i as i32)
        .expect("n_clusters > 0");
    labeling
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == best)
        .map(|(i, _)| i)
        .collect()
}
