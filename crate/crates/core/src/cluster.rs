//! Downstream analysis: agglomerative clustering on distance matrices,
//! classical MDS embeddings, k-means, and internal validity indices.

use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::metrics::{euclidean, DistanceMatrix};
use crate::preprocess::{CloudProvenance, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Linkage {
    Single,
    Complete,
    Average,
}

impl Linkage {
    pub fn name(&self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }
}

impl FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::Config(format!(
                "unknown linkage {other:?} (single|complete|average)"
            ))),
        }
    }
}

/// One agglomerative merge; `id` is the new cluster's node id in the
/// scipy convention (leaves are `0..n`, the i-th merge creates `n + i`).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub id: usize,
}

/// Stepwise dendrogram: exactly `n - 1` merges with non-decreasing
/// heights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub linkage: Linkage,
    pub n_leaves: usize,
}

impl Dendrogram {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "linkage": self.linkage.name(),
            "n_leaves": self.n_leaves,
            "merges": self.merges.iter().map(|m| json!({
                "left": m.left,
                "right": m.right,
                "height": m.height,
                "id": m.id,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Flat cluster labels in `[0, k)`; every cluster is non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::Validation("need at least one cluster".into()));
        }
        let mut seen = vec![false; k];
        for l in &labels {
            if *l >= k {
                return Err(Error::Validation(format!("label {l} out of range for k={k}")));
            }
            seen[*l] = true;
        }
        if !seen.iter().all(|s| *s) {
            return Err(Error::Validation("every cluster must be non-empty".into()));
        }
        Ok(ClusterAssignment { labels, k })
    }

    fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k];
        for (i, l) in self.labels.iter().enumerate() {
            m[*l].push(i);
        }
        m
    }
}

/// Agglomerative clustering with Lance–Williams updates. At equal
/// heights the lexicographically smallest active pair (by node id)
/// merges first, which makes the dendrogram reproducible.
pub fn hierarchical(dm: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = dm.n();
    if n < 2 {
        return Err(Error::Validation("hierarchical clustering needs n >= 2".into()));
    }
    // Active cluster list: (node id, member count). Distances kept in a
    // dense map keyed by position in `active`.
    let mut active: Vec<(usize, usize)> = (0..n).map(|i| (i, 1)).collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| dm.get(i, j)).collect())
        .collect();
    let mut merges = Vec::with_capacity(n - 1);
    let mut next_id = n;
    while active.len() > 1 {
        let mut bi = 0;
        let mut bj = 1;
        let mut best = f64::INFINITY;
        for i in 0..active.len() {
            for j in (i + 1)..active.len() {
                let d = dist[i][j];
                let better = d < best
                    || (d == best
                        && (active[i].0, active[j].0) < (active[bi].0, active[bj].0));
                if better {
                    best = d;
                    bi = i;
                    bj = j;
                }
            }
        }
        let (id_i, size_i) = active[bi];
        let (id_j, size_j) = active[bj];
        merges.push(Merge {
            left: id_i.min(id_j),
            right: id_i.max(id_j),
            height: best,
            id: next_id,
        });
        // Lance-Williams update of distances from the merged cluster to
        // every other active cluster.
        let merged_size = size_i + size_j;
        for k in 0..active.len() {
            if k == bi || k == bj {
                continue;
            }
            let dik = dist[bi][k];
            let djk = dist[bj][k];
            let updated = match linkage {
                Linkage::Single => dik.min(djk),
                Linkage::Complete => dik.max(djk),
                Linkage::Average => {
                    (size_i as f64 * dik + size_j as f64 * djk) / merged_size as f64
                }
            };
            dist[bi][k] = updated;
            dist[k][bi] = updated;
        }
        active[bi] = (next_id, merged_size);
        next_id += 1;
        // Drop row/column bj.
        active.remove(bj);
        dist.remove(bj);
        for row in &mut dist {
            row.remove(bj);
        }
    }
    let dend = Dendrogram {
        merges,
        linkage,
        n_leaves: n,
    };
    for w in dend.merges.windows(2) {
        if w[1].height < w[0].height {
            return Err(Error::Internal(format!(
                "dendrogram heights decreased: {} after {}",
                w[1].height, w[0].height
            )));
        }
    }
    Ok(dend)
}

/// Cut a dendrogram into `k` flat clusters by undoing the last `k - 1`
/// merges. Labels are assigned in order of each cluster's smallest leaf.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<ClusterAssignment> {
    let n = dend.n_leaves;
    if k == 0 || k > n {
        return Err(Error::Validation(format!("cut k={k} outside [1, {n}]")));
    }
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for m in &dend.merges[..n - k] {
        let rl = find(&mut parent, m.left);
        let rr = find(&mut parent, m.right);
        parent[rl] = m.id;
        parent[rr] = m.id;
    }
    // Map roots to labels ordered by smallest leaf index.
    let mut root_min_leaf: std::collections::BTreeMap<usize, usize> = Default::default();
    for leaf in 0..n {
        let r = find(&mut parent, leaf);
        root_min_leaf.entry(r).or_insert(leaf);
    }
    let mut roots: Vec<(usize, usize)> = root_min_leaf.into_iter().map(|(r, l)| (l, r)).collect();
    roots.sort_unstable();
    let label_of_root: std::collections::HashMap<usize, usize> = roots
        .iter()
        .enumerate()
        .map(|(label, (_, root))| (*root, label))
        .collect();
    let labels = (0..n)
        .map(|leaf| label_of_root[&find(&mut parent, leaf)])
        .collect();
    ClusterAssignment::new(labels, k)
}

/// Classical (Torgerson) MDS embedding of a distance matrix.
#[derive(Debug, Clone)]
pub struct MdsResult {
    pub cloud: PointCloud,
    pub requested_dims: usize,
    /// Dimensions actually embedded (positive eigenvalues only).
    pub kept_dims: usize,
    /// Eigenvalues of the double-centered Gram matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Total magnitude of discarded negative eigenvalues; nonzero for
    /// non-Euclidean inputs such as DTW matrices.
    pub dropped_negative_mass: f64,
    /// RMS error between input distances and embedded distances.
    pub reconstruction_rms: f64,
}

/// Double-center the squared distances, eigendecompose, and embed along
/// the top non-negative eigenvalues. Each eigenvector's sign is fixed by
/// making its largest-magnitude coordinate positive, so the embedding is
/// deterministic. Requesting more dimensions than there are positive
/// eigenvalues yields fewer columns (see `kept_dims`), never NaN.
pub fn classical_mds(dm: &DistanceMatrix, dims: usize) -> Result<MdsResult> {
    let n = dm.n();
    if n < 2 {
        return Err(Error::Validation("mds needs n >= 2".into()));
    }
    if dims == 0 || dims > n - 1 {
        return Err(Error::Validation(format!("mds dims {dims} outside [1, {}]", n - 1)));
    }
    let mut b = DMatrix::<f64>::zeros(n, n);
    // B = -1/2 J D^2 J with J = I - 11^T/n, computed via row/col means.
    let d2 = |i: usize, j: usize| dm.get(i, j).powi(2);
    let mut row_mean = vec![0.0; n];
    let mut grand = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for j in 0..n {
            s += d2(i, j);
        }
        row_mean[i] = s / n as f64;
        grand += s;
    }
    grand /= (n * n) as f64;
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = -0.5 * (d2(i, j) - row_mean[i] - row_mean[j] + grand);
        }
    }
    let eig = b.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, c| eig.eigenvalues[*c].partial_cmp(&eig.eigenvalues[*a]).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|i| eig.eigenvalues[*i]).collect();
    let tol = eigenvalues[0].abs().max(1.0) * 1e-12;
    let positive = eigenvalues.iter().filter(|l| **l > tol).count();
    let kept = positive.min(dims);
    if kept == 0 {
        return Err(Error::DegenerateInput(
            "no positive eigenvalue; matrix carries no Euclidean structure".into(),
        ));
    }
    let dropped_negative_mass: f64 = eigenvalues.iter().filter(|l| **l < 0.0).map(|l| -l).sum();
    let mut points = vec![vec![0.0; kept]; n];
    for (col, &oi) in order.iter().take(kept).enumerate() {
        let lambda_sqrt = eigenvalues[col].sqrt();
        let v = eig.eigenvectors.column(oi);
        // Deterministic sign: largest-magnitude entry positive.
        let mut pivot = 0;
        for r in 1..n {
            if v[r].abs() > v[pivot].abs() {
                pivot = r;
            }
        }
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            points[r][col] = sign * v[r] * lambda_sqrt;
        }
    }
    let cloud = PointCloud::new(points, CloudProvenance::RawFeatures)?;
    let mut err = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(&cloud.points[i], &cloud.points[j]);
            err += (d - dm.get(i, j)).powi(2);
            count += 1;
        }
    }
    Ok(MdsResult {
        cloud,
        requested_dims: dims,
        kept_dims: kept,
        eigenvalues,
        dropped_negative_mass,
        reconstruction_rms: (err / count.max(1) as f64).sqrt(),
    })
}

/// k-means output: labels plus the inertia that selected them.
#[derive(Debug, Clone)]
pub struct KmeansResult {
    pub assignment: ClusterAssignment,
    pub inertia: f64,
    pub centroids: Vec<Vec<f64>>,
}

const KMEANS_TOL: f64 = 1e-9;
const KMEANS_MAX_ITER: usize = 300;

fn kmeans_once(cloud: &PointCloud, k: usize, rng: &mut ChaCha8Rng) -> KmeansResult {
    let n = cloud.len();
    let dim = cloud.dim();
    // k-means++ seeding.
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(cloud.points[rng.gen_range(0..n)].clone());
    let mut best_sq: Vec<f64> = cloud
        .points
        .iter()
        .map(|p| euclidean(p, &centroids[0]).powi(2))
        .collect();
    while centroids.len() < k {
        let total: f64 = best_sq.iter().sum();
        let next = if total <= 0.0 {
            rng.gen_range(0..n)
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = n - 1;
            for (i, w) in best_sq.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        centroids.push(cloud.points[next].clone());
        for (i, p) in cloud.points.iter().enumerate() {
            best_sq[i] = best_sq[i].min(euclidean(p, centroids.last().unwrap()).powi(2));
        }
    }
    let mut labels = vec![0usize; n];
    for _ in 0..KMEANS_MAX_ITER {
        for (i, p) in cloud.points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = euclidean(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            labels[i] = best;
        }
        // Recompute centroids; an emptied cluster re-seeds at the point
        // farthest from its centroid.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, l) in cloud.points.iter().zip(&labels) {
            counts[*l] += 1;
            for (s, x) in sums[*l].iter_mut().zip(p) {
                *s += x;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|a, b| {
                        euclidean(&cloud.points[*a], &centroids[labels[*a]])
                            .partial_cmp(&euclidean(&cloud.points[*b], &centroids[labels[*b]]))
                            .unwrap()
                            .then(b.cmp(a)) // lowest index on ties
                    })
                    .unwrap();
                shift = f64::INFINITY;
                centroids[c] = cloud.points[far].clone();
                labels[far] = c;
                continue;
            }
            let new: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(euclidean(&new, &centroids[c]));
            centroids[c] = new;
        }
        if shift < KMEANS_TOL {
            break;
        }
    }
    let inertia = cloud
        .points
        .iter()
        .zip(&labels)
        .map(|(p, l)| euclidean(p, &centroids[*l]).powi(2))
        .sum();
    KmeansResult {
        assignment: ClusterAssignment { labels, k },
        inertia,
        centroids,
    }
}

/// Seeded k-means++ with Lloyd iterations. Restarts run in parallel on
/// independent RNG streams derived from `(seed, restart)`; the winner is
/// the lowest `(inertia, restart index)`, so results are reproducible.
pub fn kmeans(cloud: &PointCloud, k: usize, seed: u64, restarts: usize) -> Result<KmeansResult> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::Validation(format!("kmeans k={k} outside [1, {n}]")));
    }
    if restarts == 0 {
        return Err(Error::Validation("kmeans needs at least one restart".into()));
    }
    let runs: Vec<(usize, KmeansResult)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64 + 1);
            (r, kmeans_once(cloud, k, &mut rng))
        })
        .collect();
    let best = runs
        .into_iter()
        .min_by(|(ra, a), (rb, b)| {
            a.inertia
                .partial_cmp(&b.inertia)
                .unwrap()
                .then(ra.cmp(rb))
        })
        .map(|(_, r)| r)
        .expect("at least one restart");
    ClusterAssignment::new(best.assignment.labels.clone(), k)?;
    Ok(best)
}

/// Mean silhouette from a distance matrix: per point,
/// `(b - a) / max(a, b)` with `a` the mean intra-cluster distance
/// (excluding self) and `b` the best mean distance to another cluster.
/// Singletons and all-zero neighborhoods contribute 0.
pub fn silhouette(dm: &DistanceMatrix, assignment: &ClusterAssignment) -> Result<f64> {
    let n = dm.n();
    if assignment.labels.len() != n {
        return Err(Error::Validation("assignment length mismatch".into()));
    }
    if assignment.k < 2 {
        return Err(Error::Validation("silhouette needs at least 2 clusters".into()));
    }
    let members = assignment.members();
    let mut total = 0.0;
    for i in 0..n {
        let own = &members[assignment.labels[i]];
        if own.len() == 1 {
            continue; // singleton contributes 0
        }
        let a = own
            .iter()
            .filter(|j| **j != i)
            .map(|j| dm.get(i, *j))
            .sum::<f64>()
            / (own.len() - 1) as f64;
        let mut b = f64::INFINITY;
        for (c, cluster) in members.iter().enumerate() {
            if c == assignment.labels[i] || cluster.is_empty() {
                continue;
            }
            let mean = cluster.iter().map(|j| dm.get(i, *j)).sum::<f64>() / cluster.len() as f64;
            b = b.min(mean);
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

fn centroids_of(cloud: &PointCloud, assignment: &ClusterAssignment) -> Vec<Vec<f64>> {
    let dim = cloud.dim();
    let mut sums = vec![vec![0.0; dim]; assignment.k];
    let mut counts = vec![0usize; assignment.k];
    for (p, l) in cloud.points.iter().zip(&assignment.labels) {
        counts[*l] += 1;
        for (s, x) in sums[*l].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, c)| s.iter().map(|x| x / (*c).max(1) as f64).collect())
        .collect()
}

/// Davies–Bouldin index: mean over clusters of the worst
/// `(s_i + s_j) / d(c_i, c_j)` ratio, `s` being mean distance to the
/// centroid. Lower is better.
pub fn davies_bouldin(cloud: &PointCloud, assignment: &ClusterAssignment) -> Result<f64> {
    if assignment.labels.len() != cloud.len() {
        return Err(Error::Validation("assignment length mismatch".into()));
    }
    if assignment.k < 2 {
        return Err(Error::Validation("davies_bouldin needs at least 2 clusters".into()));
    }
    let centroids = centroids_of(cloud, assignment);
    let members = assignment.members();
    let scatter: Vec<f64> = members
        .iter()
        .enumerate()
        .map(|(c, m)| {
            m.iter()
                .map(|i| euclidean(&cloud.points[*i], &centroids[c]))
                .sum::<f64>()
                / m.len() as f64
        })
        .collect();
    let mut total = 0.0;
    for i in 0..assignment.k {
        let mut worst: f64 = 0.0;
        for j in 0..assignment.k {
            if i == j {
                continue;
            }
            let sep = euclidean(&centroids[i], &centroids[j]);
            if sep <= 0.0 {
                return Err(Error::DegenerateInput(format!(
                    "clusters {i} and {j} have coincident centroids"
                )));
            }
            worst = worst.max((scatter[i] + scatter[j]) / sep);
        }
        total += worst;
    }
    Ok(total / assignment.k as f64)
}

/// Calinski–Harabasz index: between-group over within-group dispersion,
/// each normalized by its degrees of freedom. Returns `+inf` when the
/// within-group dispersion is exactly zero (perfect fit).
pub fn calinski_harabasz(cloud: &PointCloud, assignment: &ClusterAssignment) -> Result<f64> {
    let n = cloud.len();
    if assignment.labels.len() != n {
        return Err(Error::Validation("assignment length mismatch".into()));
    }
    if assignment.k < 2 || n <= assignment.k {
        return Err(Error::Validation(
            "calinski_harabasz needs k >= 2 and n > k".into(),
        ));
    }
    let dim = cloud.dim();
    let mut grand = vec![0.0; dim];
    for p in &cloud.points {
        for (g, x) in grand.iter_mut().zip(p) {
            *g += x;
        }
    }
    for g in &mut grand {
        *g /= n as f64;
    }
    let centroids = centroids_of(cloud, assignment);
    let members = assignment.members();
    let mut between = 0.0;
    let mut within = 0.0;
    for (c, m) in members.iter().enumerate() {
        between += m.len() as f64 * euclidean(&centroids[c], &grand).powi(2);
        for i in m {
            within += euclidean(&cloud.points[*i], &centroids[c]).powi(2);
        }
    }
    let k = assignment.k as f64;
    if within <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((between / (k - 1.0)) / (within / (n as f64 - k)))
}

/// Internal validity summary for one clustering. `davies_bouldin` and
/// `calinski_harabasz` require coordinates and are absent for
/// matrix-only clusterings; an infinite CH marks a perfect fit.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidityReport {
    pub silhouette: f64,
    pub davies_bouldin: Option<f64>,
    pub calinski_harabasz: Option<f64>,
}

impl ValidityReport {
    pub fn to_json(&self) -> serde_json::Value {
        fn num(v: Option<f64>) -> serde_json::Value {
            match v {
                None => serde_json::Value::Null,
                Some(x) if x.is_infinite() => json!("inf"),
                Some(x) => json!(x),
            }
        }
        json!({
            "silhouette": self.silhouette,
            "davies_bouldin": num(self.davies_bouldin),
            "calinski_harabasz": num(self.calinski_harabasz),
        })
    }
}

/// Compute the full validity report for a clustering over a distance
/// matrix, optionally with coordinates for the centroid-based indices.
pub fn validity_report(
    dm: &DistanceMatrix,
    cloud: Option<&PointCloud>,
    assignment: &ClusterAssignment,
) -> Result<ValidityReport> {
    Ok(ValidityReport {
        silhouette: silhouette(dm, assignment)?,
        davies_bouldin: match cloud {
            Some(c) => Some(davies_bouldin(c, assignment)?),
            None => None,
        },
        calinski_harabasz: match cloud {
            Some(c) => Some(calinski_harabasz(c, assignment)?),
            None => None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::euclidean_matrix;

    fn line_fixture() -> DistanceMatrix {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        euclidean_matrix(&cloud).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn average_linkage_line_fixture() {
        let dend = hierarchical(&line_fixture(), Linkage::Average).unwrap();
        assert_eq!(dend.merges.len(), 3);
        assert_close(dend.merges[0].height, 0.1, 1e-12);
        assert_close(dend.merges[1].height, 0.1, 1e-12);
        // mean of {9.9, 10.0, 10.0, 10.1}
        assert_close(dend.merges[2].height, 10.0, 1e-12);
        let first_two: std::collections::BTreeSet<(usize, usize)> = dend.merges[..2]
            .iter()
            .map(|m| (m.left, m.right))
            .collect();
        assert_eq!(first_two, [(0, 1), (2, 3)].into_iter().collect());
    }

    #[test]
    fn equal_height_tie_breaks_lexicographically() {
        // integer coordinates make the two intra-blob distances exactly equal
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let dend = hierarchical(&dm, Linkage::Average).unwrap();
        assert_eq!((dend.merges[0].left, dend.merges[0].right), (0, 1));
        assert_eq!((dend.merges[1].left, dend.merges[1].right), (2, 3));
    }

    #[test]
    fn two_point_merge() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![3.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let dend = hierarchical(&dm, Linkage::Single).unwrap();
        assert_eq!(dend.merges.len(), 1);
        assert_close(dend.merges[0].height, 3.0, 1e-12);
        assert!(matches!(
            hierarchical(
                &euclidean_matrix(
                    &PointCloud::new(vec![vec![0.0]], CloudProvenance::RawFeatures).unwrap()
                )
                .unwrap(),
                Linkage::Single
            ),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn single_heights_below_complete() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let pts: Vec<Vec<f64>> = (0..7)
                .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let dm =
                euclidean_matrix(&PointCloud::new(pts, CloudProvenance::RawFeatures).unwrap())
                    .unwrap();
            let s = hierarchical(&dm, Linkage::Single).unwrap();
            let c = hierarchical(&dm, Linkage::Complete).unwrap();
            for (ms, mc) in s.merges.iter().zip(&c.merges) {
                assert!(ms.height <= mc.height + 1e-12);
            }
        }
    }

    #[test]
    fn hierarchical_permutation_equivariant() {
        use rand::{seq::SliceRandom, Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let pts: Vec<Vec<f64>> = (0..6)
            .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let dm = euclidean_matrix(&PointCloud::new(pts.clone(), CloudProvenance::RawFeatures).unwrap())
            .unwrap();
        let base_cut = cut(&hierarchical(&dm, Linkage::Average).unwrap(), 3).unwrap();
        let mut perm: Vec<usize> = (0..6).collect();
        perm.shuffle(&mut rng);
        let permuted: Vec<Vec<f64>> = perm.iter().map(|i| pts[*i].clone()).collect();
        let dmp =
            euclidean_matrix(&PointCloud::new(permuted, CloudProvenance::RawFeatures).unwrap())
                .unwrap();
        let perm_cut = cut(&hierarchical(&dmp, Linkage::Average).unwrap(), 3).unwrap();
        // partitions match up to label names: same co-membership matrix
        for a in 0..6 {
            for b in 0..6 {
                let same_base = base_cut.labels[perm[a]] == base_cut.labels[perm[b]];
                let same_perm = perm_cut.labels[a] == perm_cut.labels[b];
                assert_eq!(same_base, same_perm);
            }
        }
    }

    #[test]
    fn cut_extremes_and_blobs() {
        let dend = hierarchical(&line_fixture(), Linkage::Average).unwrap();
        let all = cut(&dend, 1).unwrap();
        assert!(all.labels.iter().all(|l| *l == 0));
        let singletons = cut(&dend, 4).unwrap();
        assert_eq!(singletons.labels, vec![0, 1, 2, 3]);
        let blobs = cut(&dend, 2).unwrap();
        assert_eq!(blobs.labels, vec![0, 0, 1, 1]);
        assert!(matches!(cut(&dend, 5), Err(Error::Validation(_))));
    }

    #[test]
    fn mds_two_points() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![4.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let mds = classical_mds(&dm, 1).unwrap();
        let xs: Vec<f64> = mds.cloud.points.iter().map(|p| p[0]).collect();
        assert_close((xs[0] - xs[1]).abs(), 4.0, 1e-10);
        assert_close(xs[0] + xs[1], 0.0, 1e-10);
    }

    #[test]
    fn mds_reconstructs_planar_cloud() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let dm = euclidean_matrix(&PointCloud::new(pts, CloudProvenance::RawFeatures).unwrap())
            .unwrap();
        let mds = classical_mds(&dm, 2).unwrap();
        assert_eq!(mds.kept_dims, 2);
        for i in 0..dm.n() {
            for j in 0..dm.n() {
                let d = euclidean(&mds.cloud.points[i], &mds.cloud.points[j]);
                assert_close(d, dm.get(i, j), 1e-8);
            }
        }
        assert!(mds.reconstruction_rms < 1e-8);
    }

    #[test]
    fn mds_handles_pseudo_metric_without_nan() {
        // a DTW matrix can have negative Gram eigenvalues
        let series: Vec<Vec<f64>> = vec![
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 0.0, 2.0],
            vec![2.0, 0.0, 0.0],
        ];
        let dm = crate::metrics::dtw_matrix(&series, None).unwrap();
        let mds = classical_mds(&dm, 3).unwrap();
        assert!(mds
            .cloud
            .points
            .iter()
            .flatten()
            .all(|x| x.is_finite()));
        assert!(mds.reconstruction_rms.is_finite());
    }

    #[test]
    fn kmeans_separates_blobs() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut pts = Vec::new();
        for _ in 0..8 {
            pts.push(vec![rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]);
        }
        for _ in 0..8 {
            pts.push(vec![10.0 + rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]);
        }
        let cloud = PointCloud::new(pts, CloudProvenance::RawFeatures).unwrap();
        for seed in [0u64, 1, 42] {
            let r = kmeans(&cloud, 2, seed, 4).unwrap();
            let first = r.assignment.labels[0];
            assert!(r.assignment.labels[..8].iter().all(|l| *l == first));
            assert!(r.assignment.labels[8..].iter().all(|l| *l != first));
        }
    }

    #[test]
    fn kmeans_extremes() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![1.0], vec![5.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let singletons = kmeans(&cloud, 3, 7, 2).unwrap();
        assert_close(singletons.inertia, 0.0, 1e-18);
        let one = kmeans(&cloud, 1, 7, 2).unwrap();
        assert_close(one.centroids[0][0], 2.0, 1e-9);
        // inertia = n * population variance
        let var = ((0.0f64 - 2.0).powi(2) + (1.0f64 - 2.0).powi(2) + (5.0f64 - 2.0).powi(2)) / 3.0;
        assert_close(one.inertia, 3.0 * var, 1e-9);
        assert!(matches!(kmeans(&cloud, 4, 7, 2), Err(Error::Validation(_))));
    }

    #[test]
    fn kmeans_deterministic_given_seed() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let cloud = PointCloud::new(pts, CloudProvenance::RawFeatures).unwrap();
        let a = kmeans(&cloud, 3, 5, 6).unwrap();
        let b = kmeans(&cloud, 3, 5, 6).unwrap();
        assert_eq!(a.assignment.labels, b.assignment.labels);
        assert_eq!(a.inertia, b.inertia);
    }

    #[test]
    fn silhouette_two_blob_fixture() {
        let labels = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let s = silhouette(&line_fixture(), &labels).unwrap();
        // hand computation: (9.95/10.05 + 9.85/9.95) / 2
        let expect = (9.95 / 10.05 + 9.85 / 9.95) / 2.0;
        assert_close(s, expect, 1e-12);
        assert_close(s, 0.98999975, 1e-6);
    }

    #[test]
    fn silhouette_degenerate_conventions() {
        // identical points split arbitrarily: a = b = 0 scores 0
        let cloud = PointCloud::new(
            vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let labels = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        assert_close(silhouette(&dm, &labels).unwrap(), 0.0, 0.0);
        // every point a singleton scores 0
        let singles = ClusterAssignment::new(vec![0, 1, 2, 3], 4).unwrap();
        assert_close(silhouette(&line_fixture(), &singles).unwrap(), 0.0, 0.0);
        let one = ClusterAssignment::new(vec![0, 0, 0, 0], 1).unwrap();
        assert!(matches!(
            silhouette(&line_fixture(), &one),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn davies_bouldin_fixture_and_scaling() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let labels = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let dbi = davies_bouldin(&cloud, &labels).unwrap();
        assert_close(dbi, 0.01, 1e-12); // (0.05 + 0.05) / 10
        // moving the same blobs farther apart lowers the index
        let wider = PointCloud::new(
            vec![vec![0.0], vec![0.1], vec![100.0], vec![100.1]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dbi_wide = davies_bouldin(&wider, &labels).unwrap();
        assert!(dbi_wide < dbi);
        assert_close(dbi_wide * 10.0, dbi, 1e-12);
    }

    #[test]
    fn davies_bouldin_singletons_and_coincident() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![1.0], vec![5.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let singles = ClusterAssignment::new(vec![0, 1, 2], 3).unwrap();
        assert_close(davies_bouldin(&cloud, &singles).unwrap(), 0.0, 0.0);
        let dup = PointCloud::new(
            vec![vec![0.0], vec![0.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let two = ClusterAssignment::new(vec![0, 1], 2).unwrap();
        assert!(matches!(
            davies_bouldin(&dup, &two),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn calinski_harabasz_fixture() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let labels = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let ch = calinski_harabasz(&cloud, &labels).unwrap();
        assert_close(ch, 20000.0, 1e-6);
    }

    #[test]
    fn calinski_harabasz_boundary_and_infinite() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![1.0], vec![5.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        // n = k + 1 computes without error
        let labels = ClusterAssignment::new(vec![0, 0, 1], 2).unwrap();
        assert!(calinski_harabasz(&cloud, &labels).unwrap().is_finite());
        // zero within-group dispersion yields the +inf sentinel
        let dup = PointCloud::new(
            vec![vec![0.0], vec![0.0], vec![5.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        assert!(calinski_harabasz(&dup, &labels).unwrap().is_infinite());
    }

    #[test]
    fn calinski_harabasz_random_labels_near_one() {
        use rand::{Rng, SeedableRng};
        let mut total = 0.0;
        let trials = 30;
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let pts: Vec<Vec<f64>> = (0..60)
                .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let cloud = PointCloud::new(pts, CloudProvenance::RawFeatures).unwrap();
            let labels: Vec<usize> = (0..60).map(|_| rng.gen_range(0..2)).collect();
            let Ok(assignment) = ClusterAssignment::new(labels, 2) else {
                continue;
            };
            total += calinski_harabasz(&cloud, &assignment).unwrap();
        }
        let mean = total / trials as f64;
        assert!(mean > 0.3 && mean < 3.0, "mean CH {mean}");
    }

    #[test]
    fn indices_invariant_under_isometry() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let theta: f64 = 0.7;
        let (c, s) = (theta.cos(), theta.sin());
        let moved: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| vec![c * p[0] - s * p[1] + 5.0, s * p[0] + c * p[1] - 3.0])
            .collect();
        let cloud_a = PointCloud::new(pts, CloudProvenance::RawFeatures).unwrap();
        let cloud_b = PointCloud::new(moved, CloudProvenance::RawFeatures).unwrap();
        let labels = ClusterAssignment::new(
            (0..10).map(|i| if i < 5 { 0 } else { 1 }).collect(),
            2,
        )
        .unwrap();
        let dm_a = euclidean_matrix(&cloud_a).unwrap();
        let dm_b = euclidean_matrix(&cloud_b).unwrap();
        assert_close(
            silhouette(&dm_a, &labels).unwrap(),
            silhouette(&dm_b, &labels).unwrap(),
            1e-9,
        );
        assert_close(
            davies_bouldin(&cloud_a, &labels).unwrap(),
            davies_bouldin(&cloud_b, &labels).unwrap(),
            1e-9,
        );
        assert_close(
            calinski_harabasz(&cloud_a, &labels).unwrap(),
            calinski_harabasz(&cloud_b, &labels).unwrap(),
            1e-6,
        );
    }

    #[test]
    fn validity_report_json() {
        let labels = ClusterAssignment::new(vec![0, 0, 1, 1], 2).unwrap();
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let report = validity_report(&line_fixture(), Some(&cloud), &labels).unwrap();
        let v = report.to_json();
        assert!(v["silhouette"].as_f64().unwrap() > 0.9);
        assert!(v["davies_bouldin"].as_f64().is_some());
        let matrix_only = validity_report(&line_fixture(), None, &labels).unwrap();
        assert!(matrix_only.to_json()["davies_bouldin"].is_null());
    }
}
