//! Slow, simple reference implementations used as oracles by the test
//! suites. Everything here is written independently of the production
//! code paths it checks: plain definitions, exhaustive enumeration and
//! numerical quadrature, with no optimizations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use tda_core::complex::Filtration;
use tda_core::preprocess::{CloudProvenance, PointCloud};

/// An index pairing extracted from a reduction: `(birth simplex,
/// death simplex)` for finite classes and lone creators for essential
/// ones.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndexPairing {
    pub finite: Vec<(u32, u32)>,
    pub essential: Vec<u32>,
}

/// Plain left-to-right boundary-matrix reduction over GF(2) with no
/// clearing, no dimension ordering and dense-ish columns. The textbook
/// algorithm, kept deliberately naive.
pub fn naive_reduce(f: &Filtration) -> IndexPairing {
    let simplices = f.simplices();
    let m = simplices.len();
    let mut position = std::collections::HashMap::new();
    for (i, s) in simplices.iter().enumerate() {
        position.insert(s.vertices.clone(), i as u32);
    }
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(m);
    for s in simplices {
        let mut col = Vec::new();
        if s.vertices.len() > 1 {
            for skip in 0..s.vertices.len() {
                let face: SmallVec<[u32; 4]> = s
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, v)| *v)
                    .collect();
                col.push(position[&face]);
            }
            col.sort_unstable();
        }
        columns.push(col);
    }
    let mut low_to_col: Vec<Option<u32>> = vec![None; m];
    let mut finite = Vec::new();
    for j in 0..m {
        loop {
            let Some(&low) = columns[j].last() else { break };
            let Some(earlier) = low_to_col[low as usize] else { break };
            // symmetric difference with the earlier column
            let other = columns[earlier as usize].clone();
            let mut merged = Vec::new();
            let (a, b) = (&columns[j], &other);
            let (mut x, mut y) = (0usize, 0usize);
            while x < a.len() && y < b.len() {
                match a[x].cmp(&b[y]) {
                    std::cmp::Ordering::Less => {
                        merged.push(a[x]);
                        x += 1;
                    }
                    std::cmp::Ordering::Greater => {
                        merged.push(b[y]);
                        y += 1;
                    }
                    std::cmp::Ordering::Equal => {
                        x += 1;
                        y += 1;
                    }
                }
            }
            merged.extend_from_slice(&a[x..]);
            merged.extend_from_slice(&b[y..]);
            columns[j] = merged;
        }
        if let Some(&low) = columns[j].last() {
            low_to_col[low as usize] = Some(j as u32);
            finite.push((low, j as u32));
        }
    }
    let paired_rows: std::collections::HashSet<u32> = finite.iter().map(|(r, _)| *r).collect();
    let paired_cols: std::collections::HashSet<u32> = finite.iter().map(|(_, c)| *c).collect();
    let essential = (0..m as u32)
        .filter(|j| !paired_rows.contains(j) && !paired_cols.contains(j))
        .collect();
    let mut finite = finite;
    finite.sort_unstable();
    IndexPairing { finite, essential }
}

/// Multiset of `(dim, birth, death)` triples with positive persistence,
/// plus essential classes, read off an [`IndexPairing`]. Dimensions
/// above `hom_max` are dropped, mirroring the diagram convention.
pub fn pairing_to_triples(
    f: &Filtration,
    pairing: &IndexPairing,
    hom_max: usize,
) -> Vec<(usize, f64, Option<f64>)> {
    let simplices = f.simplices();
    let mut out = Vec::new();
    for &(r, c) in &pairing.finite {
        let birth = &simplices[r as usize];
        let death = &simplices[c as usize];
        if birth.dim() <= hom_max && death.value > birth.value {
            out.push((birth.dim(), birth.value, Some(death.value)));
        }
    }
    for &e in &pairing.essential {
        let s = &simplices[e as usize];
        if s.dim() <= hom_max {
            out.push((s.dim(), s.value, None));
        }
    }
    out.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.partial_cmp(&b.1).unwrap())
            .then_with(|| {
                let da = a.2.unwrap_or(f64::INFINITY);
                let db = b.2.unwrap_or(f64::INFINITY);
                da.partial_cmp(&db).unwrap()
            })
    });
    out
}

/// Brute-force diagram distance by enumerating every partial matching
/// between two small finite-pair lists; unmatched points pay their
/// diagonal cost. `q = None` gives the bottleneck (max) flavor,
/// `q = Some(q)` the q-Wasserstein sum flavor. Essential classes must be
/// handled by the caller.
pub fn brute_force_matching_distance(
    a: &[(f64, f64)],
    b: &[(f64, f64)],
    q: Option<f64>,
) -> f64 {
    fn linf(p: (f64, f64), r: (f64, f64)) -> f64 {
        (p.0 - r.0).abs().max((p.1 - r.1).abs())
    }
    fn diag(p: (f64, f64)) -> f64 {
        (p.1 - p.0) / 2.0
    }
    fn combine(q: Option<f64>, costs: &[f64]) -> f64 {
        match q {
            None => costs.iter().cloned().fold(0.0, f64::max),
            Some(q) => costs.iter().map(|c| c.powf(q)).sum::<f64>().powf(1.0 / q),
        }
    }
    fn recurse(
        a: &[(f64, f64)],
        b: &[(f64, f64)],
        i: usize,
        used: &mut Vec<bool>,
        costs: &mut Vec<f64>,
        q: Option<f64>,
        best: &mut f64,
    ) {
        if i == a.len() {
            // remaining unmatched b points go to the diagonal
            let mut all = costs.clone();
            for (j, u) in used.iter().enumerate() {
                if !u {
                    all.push(diag(b[j]));
                }
            }
            let total = combine(q, &all);
            if total < *best {
                *best = total;
            }
            return;
        }
        // match a[i] with the diagonal
        costs.push(diag(a[i]));
        recurse(a, b, i + 1, used, costs, q, best);
        costs.pop();
        // or with any unused b point
        for j in 0..b.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            costs.push(linf(a[i], b[j]));
            recurse(a, b, i + 1, used, costs, q, best);
            costs.pop();
            used[j] = false;
        }
    }
    let mut best = f64::INFINITY;
    let mut used = vec![false; b.len()];
    let mut costs = Vec::new();
    recurse(a, b, 0, &mut used, &mut costs, q, &mut best);
    best
}

/// Standard normal CDF by Simpson quadrature of the density from -12.
pub fn normal_cdf_quadrature(x: f64) -> f64 {
    let lo = -12.0f64;
    if x <= lo {
        return 0.0;
    }
    let steps = 20_000usize;
    let h = (x - lo) / steps as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut acc = pdf(lo) + pdf(x);
    for k in 1..steps {
        let t = lo + k as f64 * h;
        acc += if k % 2 == 1 { 4.0 * pdf(t) } else { 2.0 * pdf(t) };
    }
    acc * h / 3.0
}

/// Standard normal quantile by bisection on the quadrature CDF.
pub fn normal_quantile_bisection(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let (mut lo, mut hi) = (-10.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf_quadrature(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// PAA by explicit mass splitting: upsample each sample into `w` equal
/// sub-samples, then average exact blocks of `n` sub-samples.
pub fn paa_split_mass(v: &[f64], w: usize) -> Vec<f64> {
    let n = v.len();
    let mut fine = Vec::with_capacity(n * w);
    for x in v {
        for _ in 0..w {
            fine.push(*x);
        }
    }
    (0..w)
        .map(|i| fine[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect()
}

/// DTW by exhaustive enumeration of every monotone warping path;
/// exponential, for tiny inputs only.
pub fn dtw_enumerate(a: &[f64], b: &[f64]) -> f64 {
    fn walk(a: &[f64], b: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let cost = acc + (a[i] - b[j]).abs();
        if cost >= *best {
            return;
        }
        if i == a.len() - 1 && j == b.len() - 1 {
            *best = cost;
            return;
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, cost, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, cost, best);
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, cost, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(a, b, 0, 0, 0.0, &mut best);
    best
}

/// Minimum enclosing ball radius of up to three planar points by
/// candidate enumeration: the optimal ball is supported by two points
/// (center at their midpoint) or by all three (center equidistant,
/// found by solving the 2x2 linear system). The smallest covering
/// candidate is the answer.
pub fn min_enclosing_radius_grid(points: &[Vec<f64>]) -> f64 {
    assert!(points.iter().all(|p| p.len() == 2), "planar oracle");
    assert!((1..=3).contains(&points.len()));
    let radius_at = |c: [f64; 2]| -> f64 {
        points
            .iter()
            .map(|p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    };
    let mut candidates: Vec<[f64; 2]> = vec![[points[0][0], points[0][1]]];
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            candidates.push([
                0.5 * (points[i][0] + points[j][0]),
                0.5 * (points[i][1] + points[j][1]),
            ]);
        }
    }
    if points.len() == 3 {
        // equidistant center: |c-A|^2 = |c-B|^2 and |c-A|^2 = |c-C|^2
        let (a, b, c) = (&points[0], &points[1], &points[2]);
        let a11 = 2.0 * (b[0] - a[0]);
        let a12 = 2.0 * (b[1] - a[1]);
        let a21 = 2.0 * (c[0] - a[0]);
        let a22 = 2.0 * (c[1] - a[1]);
        let r1 = b[0] * b[0] + b[1] * b[1] - a[0] * a[0] - a[1] * a[1];
        let r2 = c[0] * c[0] + c[1] * c[1] - a[0] * a[0] - a[1] * a[1];
        let det = a11 * a22 - a12 * a21;
        if det.abs() > 1e-12 {
            candidates.push([(r1 * a22 - r2 * a12) / det, (a11 * r2 - a21 * r1) / det]);
        }
    }
    candidates
        .into_iter()
        .map(radius_at)
        .fold(f64::INFINITY, f64::min)
}

/// Agglomerative clustering heights computed from first principles: at
/// every step the cross-cluster distance is recomputed from the original
/// matrix (min / max / mean over all cross pairs), no recurrences.
pub fn linkage_heights_from_definition(
    dm: &tda_core::metrics::DistanceMatrix,
    linkage: tda_core::cluster::Linkage,
) -> Vec<f64> {
    use tda_core::cluster::Linkage;
    let n = dm.n();
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut next_id = n;
    let mut heights = Vec::with_capacity(n - 1);
    while clusters.len() > 1 {
        let cluster_distance = |a: &[usize], b: &[usize]| -> f64 {
            let all: Vec<f64> = a
                .iter()
                .flat_map(|i| b.iter().map(move |j| dm.get(*i, *j)))
                .collect();
            match linkage {
                Linkage::Single => all.iter().cloned().fold(f64::INFINITY, f64::min),
                Linkage::Complete => all.iter().cloned().fold(0.0, f64::max),
                Linkage::Average => all.iter().sum::<f64>() / all.len() as f64,
            }
        };
        let mut best = f64::INFINITY;
        let mut pair = (0usize, 1usize);
        for i in 0..clusters.len() {
            for j in (i + 1)..clusters.len() {
                let d = cluster_distance(&clusters[i].1, &clusters[j].1);
                let better = d < best
                    || (d == best
                        && (clusters[i].0, clusters[j].0) < (clusters[pair.0].0, clusters[pair.1].0));
                if better {
                    best = d;
                    pair = (i, j);
                }
            }
        }
        heights.push(best);
        let (_, members_j) = clusters.remove(pair.1);
        clusters[pair.0].1.extend(members_j);
        clusters[pair.0].0 = next_id;
        next_id += 1;
    }
    heights
}

/// Seeded uniform point cloud for randomized tests.
pub fn random_cloud(n: usize, dim: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    PointCloud::new(points, CloudProvenance::RawFeatures).expect("finite random cloud")
}

/// Seeded random persistence diagram with `n` finite pairs in dim `k`.
pub fn random_diagram(
    n: usize,
    dim: usize,
    seed: u64,
) -> tda_core::persistence::PersistenceDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..n)
        .map(|_| {
            let birth = rng.gen_range(0.0..2.0);
            let death = birth + rng.gen_range(0.01..2.0);
            tda_core::persistence::PersistencePair {
                dim,
                birth,
                death: Some(death),
                birth_simplex: 0,
                death_simplex: None,
            }
        })
        .collect();
    tda_core::persistence::PersistenceDiagram {
        pairs,
        max_dim: dim.max(1),
        filtration_max: 5.0,
    }
}
