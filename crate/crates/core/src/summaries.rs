//! Derived representations and indicators built from persistence
//! diagrams: landscapes, Betti curves, total persistence, lifetime
//! statistics, diagram distances, and the stability index series.
//!
//! Convention used throughout: essential classes are excluded from
//! lifetime multisets, total persistence and variance/entropy (an
//! infinite lifetime would dominate them); landscapes and Betti curves
//! instead truncate essential deaths at the filtration bound. Variance
//! is population variance so single-feature windows are well-defined.

use serde_json::json;
use std::io::Write;

use crate::error::{Error, Result};
use crate::persistence::{betti_at, PersistenceDiagram};

/// Size cap for the exact bottleneck solver.
pub const BOTTLENECK_MAX_POINTS: usize = 64;
/// Size cap for the exact Wasserstein solver.
pub const WASSERSTEIN_MAX_POINTS: usize = 256;

/// Total persistence: the sum of finite lifetimes in dimension `k`.
pub fn total_persistence(dgm: &PersistenceDiagram, k: usize) -> Result<f64> {
    if k > dgm.max_dim {
        return Err(Error::Validation(format!(
            "dimension {k} exceeds diagram max_dim {}",
            dgm.max_dim
        )));
    }
    Ok(dgm.pairs_in_dim(k).filter_map(|p| p.lifetime()).sum())
}

fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64
}

/// Variance and entropy of pooled finite lifetimes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifetimeStats {
    pub variance: f64,
    pub entropy: f64,
    /// Set when no finite pair existed in the requested dimensions; the
    /// zeros are then a convention, not a measurement.
    pub empty: bool,
}

/// Population variance and Shannon entropy (natural log, lifetimes
/// normalized to a distribution) of the finite lifetimes pooled over
/// `dims`.
pub fn lifetime_stats(dgm: &PersistenceDiagram, dims: &[usize]) -> Result<LifetimeStats> {
    for k in dims {
        if *k > dgm.max_dim {
            return Err(Error::Validation(format!(
                "dimension {k} exceeds diagram max_dim {}",
                dgm.max_dim
            )));
        }
    }
    let lifetimes: Vec<f64> = dgm
        .pairs
        .iter()
        .filter(|p| dims.contains(&p.dim))
        .filter_map(|p| p.lifetime())
        .collect();
    if lifetimes.is_empty() {
        return Ok(LifetimeStats {
            variance: 0.0,
            entropy: 0.0,
            empty: true,
        });
    }
    let total: f64 = lifetimes.iter().sum();
    let entropy = if total > 0.0 {
        -lifetimes
            .iter()
            .map(|l| l / total)
            .filter(|p| *p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    } else {
        0.0
    };
    Ok(LifetimeStats {
        variance: population_variance(&lifetimes),
        entropy,
        empty: false,
    })
}

/// Finite lifetimes of one window, pooled over homology dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeSet {
    pub window_id: String,
    pub lifetimes: Vec<f64>,
}

/// Pool the finite lifetimes of `dgm` over `dims`.
pub fn lifetimes(dgm: &PersistenceDiagram, dims: &[usize], window_id: impl Into<String>) -> LifetimeSet {
    LifetimeSet {
        window_id: window_id.into(),
        lifetimes: dgm
            .pairs
            .iter()
            .filter(|p| dims.contains(&p.dim))
            .filter_map(|p| p.lifetime())
            .collect(),
    }
}

/// Stability index of one window: the population variance of its pooled
/// lifetimes. An empty window scores 0.
pub fn tsi(set: &LifetimeSet) -> f64 {
    population_variance(&set.lifetimes)
}

/// Normalized stability index: `tsi / (tp + epsilon)`.
pub fn ntsi(set: &LifetimeSet, tp: f64, epsilon: f64) -> Result<f64> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Config(format!("tsi epsilon must be positive, got {epsilon}")));
    }
    Ok(tsi(set) / (tp + epsilon))
}

/// Aligned per-window stability indicators. `ntsi[i]` always equals
/// `tsi[i] / (total_persistence[i] + epsilon)`, so the normalized series
/// can be recomputed from the stored totals.
#[derive(Debug, Clone, PartialEq)]
pub struct TsiSeries {
    pub window_ids: Vec<String>,
    pub tsi: Vec<f64>,
    pub ntsi: Vec<f64>,
    pub total_persistence: Vec<f64>,
    pub epsilon: f64,
}

impl TsiSeries {
    pub fn len(&self) -> usize {
        self.tsi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tsi.is_empty()
    }

    pub fn with_window_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.tsi.len() {
            return Err(Error::Validation(format!(
                "{} ids for {} windows",
                ids.len(),
                self.tsi.len()
            )));
        }
        self.window_ids = ids;
        Ok(self)
    }
}

/// Per-window TSI and nTSI over a stream of diagrams, pooling finite
/// lifetimes over `dims`.
pub fn rolling_tsi(diagrams: &[PersistenceDiagram], dims: &[usize], epsilon: f64) -> Result<TsiSeries> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Config(format!("tsi epsilon must be positive, got {epsilon}")));
    }
    let mut out = TsiSeries {
        window_ids: Vec::with_capacity(diagrams.len()),
        tsi: Vec::with_capacity(diagrams.len()),
        ntsi: Vec::with_capacity(diagrams.len()),
        total_persistence: Vec::with_capacity(diagrams.len()),
        epsilon,
    };
    for (i, dgm) in diagrams.iter().enumerate() {
        let set = lifetimes(dgm, dims, i.to_string());
        let tp: f64 = set.lifetimes.iter().sum();
        let t = tsi(&set);
        out.window_ids.push(set.window_id.clone());
        out.tsi.push(t);
        out.ntsi.push(t / (tp + epsilon));
        out.total_persistence.push(tp);
    }
    Ok(out)
}

/// Persistence landscape sampled on a uniform grid over
/// `[0, filtration_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub k_max: usize,
    pub grid: Vec<f64>,
    /// `values[j][g]` is the (j+1)-th landscape level at grid point `g`.
    pub values: Vec<Vec<f64>>,
}

impl Landscape {
    /// CSV matrix: grid header row, one row per level.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "grid")?;
        for g in &self.grid {
            write!(out, ",{g}")?;
        }
        writeln!(out)?;
        for (j, level) in self.values.iter().enumerate() {
            write!(out, "lambda_{}", j + 1)?;
            for v in level {
                write!(out, ",{v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Landscape of dimension `k`: level `j` at `t` is the j-th largest tent
/// value `max(0, min(t - birth, death - t))` over the diagram's pairs,
/// with essential deaths truncated at the filtration bound.
pub fn landscape(dgm: &PersistenceDiagram, k: usize, k_max: usize, grid_n: usize) -> Result<Landscape> {
    if grid_n < 2 {
        return Err(Error::Validation("landscape grid needs at least 2 points".into()));
    }
    if k_max == 0 {
        return Err(Error::Validation("landscape needs k_max >= 1".into()));
    }
    let fmax = dgm.filtration_max;
    let grid: Vec<f64> = (0..grid_n)
        .map(|i| fmax * i as f64 / (grid_n - 1) as f64)
        .collect();
    let pairs: Vec<(f64, f64)> = dgm
        .pairs_in_dim(k)
        .map(|p| (p.birth, p.death.unwrap_or(fmax)))
        .collect();
    let mut values = vec![vec![0.0; grid_n]; k_max];
    let mut tents = Vec::with_capacity(pairs.len());
    for (g, t) in grid.iter().enumerate() {
        tents.clear();
        for (b, d) in &pairs {
            let v = (t - b).min(d - t).max(0.0);
            if v > 0.0 {
                tents.push(v);
            }
        }
        tents.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (j, level) in values.iter_mut().enumerate() {
            level[g] = tents.get(j).copied().unwrap_or(0.0);
        }
    }
    Ok(Landscape {
        k_max,
        grid,
        values,
    })
}

/// Betti curve: `betti_at` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BettiCurve {
    pub dim: usize,
    pub grid: Vec<f64>,
    pub counts: Vec<usize>,
}

impl BettiCurve {
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "grid")?;
        for g in &self.grid {
            write!(out, ",{g}")?;
        }
        writeln!(out)?;
        write!(out, "betti_{}", self.dim)?;
        for c in &self.counts {
            write!(out, ",{c}")?;
        }
        writeln!(out)?;
        Ok(())
    }
}

pub fn betti_curve(dgm: &PersistenceDiagram, k: usize, grid_n: usize) -> Result<BettiCurve> {
    if grid_n < 2 {
        return Err(Error::Validation("betti grid needs at least 2 points".into()));
    }
    let fmax = dgm.filtration_max;
    let grid: Vec<f64> = (0..grid_n)
        .map(|i| fmax * i as f64 / (grid_n - 1) as f64)
        .collect();
    let counts = grid
        .iter()
        .map(|t| betti_at(dgm, *t, k))
        .collect::<Result<Vec<usize>>>()?;
    Ok(BettiCurve {
        dim: k,
        grid,
        counts,
    })
}

/// Split a diagram's dimension-k points into finite `(b, d)` pairs and
/// essential births.
fn split_dim(dgm: &PersistenceDiagram, k: usize) -> Result<(Vec<(f64, f64)>, Vec<f64>)> {
    if k > dgm.max_dim {
        return Err(Error::Validation(format!(
            "dimension {k} exceeds diagram max_dim {}",
            dgm.max_dim
        )));
    }
    let mut finite = Vec::new();
    let mut essential = Vec::new();
    for p in dgm.pairs_in_dim(k) {
        match p.death {
            Some(d) => finite.push((p.birth, d)),
            None => essential.push(p.birth),
        }
    }
    Ok((finite, essential))
}

fn linf(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

fn diag_cost(p: (f64, f64)) -> f64 {
    (p.1 - p.0) / 2.0
}

/// Essential classes can only match essential classes. With equal counts
/// the optimal pairing on the line is sorted order; unequal counts make
/// the distance infinite.
fn essential_costs(mut ea: Vec<f64>, mut eb: Vec<f64>) -> Option<Vec<f64>> {
    if ea.len() != eb.len() {
        return None;
    }
    ea.sort_by(f64::total_cmp);
    eb.sort_by(f64::total_cmp);
    Some(ea.iter().zip(&eb).map(|(a, b)| (a - b).abs()).collect())
}

/// Feasibility of a perfect matching at radius `r` between
/// `A + diagonal(B)` and `B + diagonal(A)` (Kuhn's augmenting paths).
fn bottleneck_feasible(a: &[(f64, f64)], b: &[(f64, f64)], r: f64) -> bool {
    let (na, nb) = (a.len(), b.len());
    let size = na + nb;
    if size == 0 {
        return true;
    }
    // Left nodes: 0..na real A points, na..size diagonal slots for B.
    // Right nodes: 0..nb real B points, nb..size diagonal slots for A.
    let edge = |u: usize, v: usize| -> bool {
        match (u < na, v < nb) {
            (true, true) => linf(a[u], b[v]) <= r,
            (true, false) => diag_cost(a[u]) <= r,
            (false, true) => diag_cost(b[v]) <= r,
            (false, false) => true,
        }
    };
    let mut match_right: Vec<Option<usize>> = vec![None; size];
    fn try_augment(
        u: usize,
        size: usize,
        edge: &dyn Fn(usize, usize) -> bool,
        visited: &mut [bool],
        match_right: &mut [Option<usize>],
    ) -> bool {
        for v in 0..size {
            if visited[v] || !edge(u, v) {
                continue;
            }
            visited[v] = true;
            let free = match match_right[v] {
                None => true,
                Some(w) => try_augment(w, size, edge, visited, match_right),
            };
            if free {
                match_right[v] = Some(u);
                return true;
            }
        }
        false
    }
    for u in 0..size {
        let mut visited = vec![false; size];
        if !try_augment(u, size, &edge, &mut visited, &mut match_right) {
            return false;
        }
    }
    true
}

/// Bottleneck distance between the dimension-k parts of two diagrams:
/// the smallest radius admitting a perfect partial matching with
/// unmatched points paired to the diagonal. Exact, via binary search
/// over candidate radii plus bipartite feasibility.
pub fn bottleneck(a: &PersistenceDiagram, b: &PersistenceDiagram, k: usize) -> Result<f64> {
    let (fa, ea) = split_dim(a, k)?;
    let (fb, eb) = split_dim(b, k)?;
    if fa.len() > BOTTLENECK_MAX_POINTS || fb.len() > BOTTLENECK_MAX_POINTS {
        return Err(Error::Scale(format!(
            "bottleneck solver capped at {BOTTLENECK_MAX_POINTS} points per diagram; \
             use wasserstein for larger diagrams"
        )));
    }
    let Some(ess) = essential_costs(ea, eb) else {
        return Ok(f64::INFINITY);
    };
    let ess_max = ess.iter().cloned().fold(0.0, f64::max);
    let mut candidates: Vec<f64> = vec![0.0];
    for p in &fa {
        candidates.push(diag_cost(*p));
        for q in &fb {
            candidates.push(linf(*p, *q));
        }
    }
    for q in &fb {
        candidates.push(diag_cost(*q));
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // Smallest feasible candidate radius for the finite part.
    let mut lo = 0usize;
    let mut hi = candidates.len() - 1;
    if !bottleneck_feasible(&fa, &fb, candidates[hi]) {
        return Err(Error::Internal("no feasible matching at the largest candidate".into()));
    }
    while lo < hi {
        let mid = (lo + hi) / 2;
        if bottleneck_feasible(&fa, &fb, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo].max(ess_max))
}

/// Exact square-assignment minimum via shortest augmenting paths
/// (Hungarian algorithm with potentials, O(n^3)).
fn hungarian_min_cost(cost: &[Vec<f64>]) -> f64 {
    let n = cost.len();
    if n == 0 {
        return 0.0;
    }
    const INF: f64 = f64::INFINITY;
    // 1-based arrays per the classic formulation.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut p = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut total = 0.0;
    for j in 1..=n {
        if p[j] != 0 {
            total += cost[p[j] - 1][j - 1];
        }
    }
    total
}

/// q-Wasserstein distance between the dimension-k parts of two diagrams
/// (ground metric L-infinity, unmatched points to the diagonal). Exact,
/// via assignment on the diagonal-augmented square cost matrix.
pub fn wasserstein(a: &PersistenceDiagram, b: &PersistenceDiagram, k: usize, q: f64) -> Result<f64> {
    if q < 1.0 {
        return Err(Error::Config(format!("wasserstein order q must be >= 1, got {q}")));
    }
    let (fa, ea) = split_dim(a, k)?;
    let (fb, eb) = split_dim(b, k)?;
    if fa.len() > WASSERSTEIN_MAX_POINTS || fb.len() > WASSERSTEIN_MAX_POINTS {
        return Err(Error::Scale(format!(
            "wasserstein solver capped at {WASSERSTEIN_MAX_POINTS} points per diagram"
        )));
    }
    let Some(ess) = essential_costs(ea, eb) else {
        return Ok(f64::INFINITY);
    };
    let (na, nb) = (fa.len(), fb.len());
    let size = na + nb;
    let mut total = ess.iter().map(|c| c.powf(q)).sum::<f64>();
    if size > 0 {
        let mut cost = vec![vec![0.0; size]; size];
        for (i, row) in cost.iter_mut().enumerate() {
            for (j, slot) in row.iter_mut().enumerate() {
                *slot = match (i < na, j < nb) {
                    (true, true) => linf(fa[i], fb[j]).powf(q),
                    (true, false) => diag_cost(fa[i]).powf(q),
                    (false, true) => diag_cost(fb[j]).powf(q),
                    (false, false) => 0.0,
                };
            }
        }
        total += hungarian_min_cost(&cost);
    }
    Ok(total.powf(1.0 / q))
}

/// One row of the indicator JSON stream.
pub fn indicator_json(
    window_id: &str,
    tsi: f64,
    ntsi: f64,
    tp_by_dim: &[(usize, f64)],
    entropy: f64,
    variance: f64,
) -> serde_json::Value {
    let tp: serde_json::Map<String, serde_json::Value> = tp_by_dim
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    json!({
        "window_id": window_id,
        "tsi": tsi,
        "ntsi": ntsi,
        "tp_by_dim": tp,
        "entropy": entropy,
        "variance": variance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::PersistencePair;

    fn diagram(pairs: &[(usize, f64, Option<f64>)], max_dim: usize, fmax: f64) -> PersistenceDiagram {
        PersistenceDiagram {
            pairs: pairs
                .iter()
                .map(|(dim, b, d)| PersistencePair {
                    dim: *dim,
                    birth: *b,
                    death: *d,
                    birth_simplex: 0,
                    death_simplex: None,
                })
                .collect(),
            max_dim,
            filtration_max: fmax,
        }
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn total_persistence_examples() {
        let d = diagram(&[(0, 0.0, Some(1.0)), (0, 0.5, Some(2.0))], 1, 2.0);
        assert_close(total_persistence(&d, 0).unwrap(), 2.5, 1e-15);
        assert_close(total_persistence(&d, 1).unwrap(), 0.0, 0.0);
        assert!(matches!(total_persistence(&d, 3), Err(Error::Validation(_))));
    }

    #[test]
    fn total_persistence_excludes_essential() {
        let d = diagram(&[(0, 0.0, Some(1.0)), (0, 0.0, None)], 1, 2.0);
        assert_close(total_persistence(&d, 0).unwrap(), 1.0, 1e-15);
    }

    #[test]
    fn total_persistence_square_fixture_h1() {
        use crate::complex::rips_filtration;
        use crate::metrics::euclidean_matrix;
        use crate::preprocess::{CloudProvenance, PointCloud};
        let square = PointCloud::new(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
            ],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dm = euclidean_matrix(&square).unwrap();
        let dgm = crate::persistence::reduce(&rips_filtration(&dm, 2, 2.0).unwrap()).unwrap();
        let tp = total_persistence(&dgm, 1).unwrap();
        assert_close(tp, 2f64.sqrt() - 1.0, 1e-12);
        assert_close(tp, 0.4142, 1e-4);
    }

    #[test]
    fn total_persistence_additive_over_disjoint_union() {
        let a = diagram(&[(0, 0.0, Some(1.0)), (1, 0.5, Some(2.0))], 1, 2.0);
        let b = diagram(&[(0, 0.25, Some(0.75)), (1, 1.0, Some(1.5))], 1, 2.0);
        let mut pairs: Vec<_> = a.pairs.clone();
        pairs.extend(b.pairs.clone());
        let union = PersistenceDiagram {
            pairs,
            max_dim: 1,
            filtration_max: 2.0,
        };
        for k in 0..=1 {
            assert_close(
                total_persistence(&union, k).unwrap(),
                total_persistence(&a, k).unwrap() + total_persistence(&b, k).unwrap(),
                1e-12,
            );
        }
    }

    #[test]
    fn lifetime_stats_examples() {
        let d = diagram(
            &[(0, 0.0, Some(1.0)), (0, 0.0, Some(1.0)), (0, 0.0, Some(1.0))],
            1,
            2.0,
        );
        let s = lifetime_stats(&d, &[0]).unwrap();
        assert_close(s.variance, 0.0, 1e-15);
        assert_close(s.entropy, 3f64.ln(), 1e-12);
        assert!(!s.empty);

        let d2 = diagram(
            &[(0, 0.0, Some(1.0)), (0, 0.0, Some(2.0)), (0, 0.0, Some(3.0))],
            1,
            3.0,
        );
        assert_close(lifetime_stats(&d2, &[0]).unwrap().variance, 2.0 / 3.0, 1e-12);

        let single = diagram(&[(0, 0.0, Some(1.0))], 1, 2.0);
        let s = lifetime_stats(&single, &[0]).unwrap();
        assert_close(s.variance, 0.0, 1e-15);
        assert_close(s.entropy, 0.0, 1e-15);

        let none = diagram(&[(0, 0.0, None)], 1, 2.0);
        let s = lifetime_stats(&none, &[0]).unwrap();
        assert!(s.empty);
        assert_eq!((s.variance, s.entropy), (0.0, 0.0));
    }

    #[test]
    fn tsi_examples() {
        let flat = LifetimeSet {
            window_id: "w".into(),
            lifetimes: vec![0.7, 0.7, 0.7],
        };
        assert_close(tsi(&flat), 0.0, 1e-15);
        let spread = LifetimeSet {
            window_id: "w".into(),
            lifetimes: vec![1.0, 2.0, 3.0],
        };
        assert_close(tsi(&spread), 2.0 / 3.0, 1e-12);
        let empty = LifetimeSet {
            window_id: "w".into(),
            lifetimes: vec![],
        };
        assert_close(tsi(&empty), 0.0, 0.0);
    }

    #[test]
    fn tsi_strictly_increases_with_dispersion() {
        let windows = [
            vec![1.0, 1.0, 1.0],
            vec![0.8, 1.0, 1.2],
            vec![0.5, 1.0, 1.5],
            vec![0.1, 1.0, 1.9],
        ];
        let values: Vec<f64> = windows
            .iter()
            .map(|l| {
                tsi(&LifetimeSet {
                    window_id: "w".into(),
                    lifetimes: l.clone(),
                })
            })
            .collect();
        for w in values.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn tsi_translation_invariant_in_births() {
        let base = diagram(&[(0, 0.0, Some(1.0)), (1, 0.5, Some(2.5))], 1, 3.0);
        let shifted = diagram(&[(0, 10.0, Some(11.0)), (1, 10.5, Some(12.5))], 1, 13.0);
        let a = lifetimes(&base, &[0, 1], "a");
        let b = lifetimes(&shifted, &[0, 1], "b");
        assert_close(tsi(&a), tsi(&b), 1e-12);
    }

    #[test]
    fn ntsi_examples() {
        let set = LifetimeSet {
            window_id: "w".into(),
            lifetimes: vec![1.0, 2.0, 3.0],
        };
        let v = ntsi(&set, 6.0, 1e-9).unwrap();
        assert_close(v, (2.0 / 3.0) / (6.0 + 1e-9), 1e-12);
        assert_close(v, 0.1111, 1e-3);
        let empty = LifetimeSet {
            window_id: "w".into(),
            lifetimes: vec![],
        };
        assert_close(ntsi(&empty, 0.0, 1e-9).unwrap(), 0.0, 0.0);
        assert!(matches!(ntsi(&set, 1.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn ntsi_scales_linearly_with_lifetimes() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let lifetimes: Vec<f64> = (0..6).map(|_| rng.gen_range(0.5..4.0)).collect();
            let c = rng.gen_range(1.5..5.0);
            let set = LifetimeSet {
                window_id: "w".into(),
                lifetimes: lifetimes.clone(),
            };
            let scaled = LifetimeSet {
                window_id: "w".into(),
                lifetimes: lifetimes.iter().map(|l| c * l).collect(),
            };
            let tp: f64 = set.lifetimes.iter().sum();
            let eps = 1e-12;
            let r1 = ntsi(&set, tp, eps).unwrap();
            let r2 = ntsi(&scaled, c * tp, eps).unwrap();
            assert_close(r2 / r1, c, 1e-6);
        }
    }

    #[test]
    fn rolling_tsi_pools_dims() {
        let d1 = diagram(&[(0, 0.0, Some(1.0)), (1, 0.0, Some(3.0))], 1, 3.0);
        let d2 = diagram(&[(0, 0.0, Some(1.0))], 1, 3.0);
        let both = rolling_tsi(&[d1.clone(), d2.clone()], &[0, 1], 1e-9).unwrap();
        let only0 = rolling_tsi(&[d1, d2], &[0], 1e-9).unwrap();
        assert!(both.tsi[0] > only0.tsi[0]);
        assert_close(both.tsi[1], only0.tsi[1], 0.0);
        // nTSI recomputes from the stored totals
        for i in 0..both.len() {
            assert_close(
                both.ntsi[i],
                both.tsi[i] / (both.total_persistence[i] + both.epsilon),
                1e-15,
            );
        }
    }

    #[test]
    fn rolling_tsi_flat_stream() {
        let d = diagram(&[(0, 0.0, Some(1.0)), (0, 0.0, Some(1.0))], 1, 2.0);
        let series = rolling_tsi(&[d.clone(), d.clone(), d], &[0, 1], 1e-9).unwrap();
        assert!(series.tsi.iter().all(|t| *t == 0.0));
    }

    #[test]
    fn landscape_tent() {
        let d = diagram(&[(0, 0.0, Some(2.0))], 1, 2.0);
        let l = landscape(&d, 0, 2, 5).unwrap();
        assert_eq!(l.grid, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(l.values[0], vec![0.0, 0.5, 1.0, 0.5, 0.0]);
        assert!(l.values[1].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn landscape_empty_and_duplicates() {
        let empty = diagram(&[], 1, 2.0);
        let l = landscape(&empty, 0, 2, 4).unwrap();
        assert!(l.values.iter().flatten().all(|v| *v == 0.0));

        let dup = diagram(&[(0, 0.0, Some(2.0)), (0, 0.0, Some(2.0))], 1, 2.0);
        let l = landscape(&dup, 0, 2, 9).unwrap();
        assert_eq!(l.values[0], l.values[1]);
    }

    #[test]
    fn landscape_levels_are_ordered() {
        let d = diagram(
            &[
                (1, 0.0, Some(2.0)),
                (1, 0.5, Some(1.5)),
                (1, 1.0, Some(1.75)),
            ],
            1,
            2.0,
        );
        let l = landscape(&d, 1, 3, 33).unwrap();
        for g in 0..33 {
            assert!(l.values[0][g] >= l.values[1][g]);
            assert!(l.values[1][g] >= l.values[2][g]);
        }
        // peak bound: half the largest lifetime
        let peak = l.values[0].iter().cloned().fold(0.0, f64::max);
        assert!(peak <= 1.0 + 1e-12);
    }

    #[test]
    fn betti_curve_square_window() {
        let d = diagram(
            &[
                (0, 0.0, None),
                (0, 0.0, Some(1.0)),
                (0, 0.0, Some(1.0)),
                (0, 0.0, Some(1.0)),
                (1, 1.0, Some(2f64.sqrt())),
            ],
            1,
            2.0,
        );
        let c = betti_curve(&d, 1, 21).unwrap();
        for (g, count) in c.grid.iter().zip(&c.counts) {
            let expect = if *g >= 1.0 && *g < 2f64.sqrt() { 1 } else { 0 };
            assert_eq!(*count, expect, "grid {g}");
        }
        let c0 = betti_curve(&d, 0, 21).unwrap();
        assert_eq!(c0.counts[0], 4);
        assert_eq!(*c0.counts.last().unwrap(), 1);
    }

    #[test]
    fn bottleneck_examples() {
        let a = diagram(&[(0, 0.0, Some(2.0))], 1, 2.0);
        let empty = diagram(&[], 1, 2.0);
        assert_close(bottleneck(&a, &a, 0).unwrap(), 0.0, 1e-15);
        assert_close(bottleneck(&a, &empty, 0).unwrap(), 1.0, 1e-15);
        let b = diagram(&[(0, 0.5, Some(2.0))], 1, 2.0);
        assert_close(bottleneck(&a, &b, 0).unwrap(), 0.5, 1e-15);
    }

    #[test]
    fn bottleneck_essential_counts() {
        let a = diagram(&[(0, 0.0, None)], 1, 2.0);
        let b = diagram(&[], 1, 2.0);
        assert!(bottleneck(&a, &b, 0).unwrap().is_infinite());
        let c = diagram(&[(0, 0.25, None)], 1, 2.0);
        assert_close(bottleneck(&a, &c, 0).unwrap(), 0.25, 1e-15);
    }

    #[test]
    fn wasserstein_examples() {
        let a = diagram(&[(0, 0.0, Some(2.0))], 1, 3.0);
        let empty = diagram(&[], 1, 3.0);
        assert_close(wasserstein(&a, &a, 0, 1.0).unwrap(), 0.0, 1e-15);
        assert_close(wasserstein(&a, &empty, 0, 1.0).unwrap(), 1.0, 1e-15);
        let two = diagram(&[(0, 0.0, Some(2.0)), (0, 1.0, Some(3.0))], 1, 3.0);
        assert_close(wasserstein(&two, &a, 0, 1.0).unwrap(), 1.0, 1e-12);
        assert!(matches!(
            wasserstein(&a, &empty, 0, 0.5),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn bottleneck_below_wasserstein() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let mk = |rng: &mut rand_chacha::ChaCha8Rng| {
                let n = rng.gen_range(0..5);
                let pairs: Vec<(usize, f64, Option<f64>)> = (0..n)
                    .map(|_| {
                        let b = rng.gen_range(0.0..2.0);
                        let d = b + rng.gen_range(0.01..2.0);
                        (0usize, b, Some(d))
                    })
                    .collect();
                diagram(&pairs, 1, 5.0)
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let bn = bottleneck(&a, &b, 0).unwrap();
            for q in [1.0, 2.0] {
                let w = wasserstein(&a, &b, 0, q).unwrap();
                assert!(bn <= w + 1e-9, "bottleneck {bn} > wasserstein_q{q} {w}");
            }
        }
    }

    #[test]
    fn indicator_json_shape() {
        let v = indicator_json("7", 0.5, 0.25, &[(0, 1.5), (1, 0.5)], 0.9, 0.5);
        assert_eq!(v["window_id"], "7");
        assert_eq!(v["tp_by_dim"]["0"], 1.5);
        assert_eq!(v["tp_by_dim"]["1"], 0.5);
    }
}
