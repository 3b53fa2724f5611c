//! Normalization, returns, windowing and phase-space embedding.
//!
//! Everything here is a pure function over immutable inputs; window sets
//! and embeddings for different series can be computed in parallel
//! without coordination.

use crate::error::{Error, Result};
use crate::ingest::TimeSeries;

/// Standard deviations below this are treated as a constant series.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population (1/n) standard deviation, the z-score convention used by
/// the symbolic layer.
pub fn population_std(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

/// Z-score a vector with population standard deviation. A constant
/// vector maps to the zero vector instead of erroring so that flat
/// stretches of a panel do not abort whole runs.
pub fn z_normalize(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::Validation(format!(
            "z_normalize needs at least 2 samples, got {}",
            v.len()
        )));
    }
    let m = mean(v);
    let sd = population_std(v);
    if sd <= DEGENERACY_THRESHOLD {
        return Ok(vec![0.0; v.len()]);
    }
    Ok(v.iter().map(|x| (x - m) / sd).collect())
}

/// Log returns `ln(p[i+1] / p[i])`; output is one shorter than the input.
pub fn log_returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::Validation(format!(
            "log_returns needs at least 2 prices, got {}",
            prices.len()
        )));
    }
    if let Some(p) = prices.iter().find(|p| **p <= 0.0) {
        return Err(Error::Domain(format!(
            "log_returns requires positive prices, found {p}"
        )));
    }
    Ok(prices.windows(2).map(|w| (w[1] / w[0]).ln()).collect())
}

/// Overlapping fixed-length segments of one series.
#[derive(Debug, Clone)]
pub struct WindowSet {
    pub source_id: String,
    pub windows: Vec<Vec<f64>>,
    pub start_indices: Vec<usize>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Slice a series into `floor((n - length) / stride) + 1` contiguous
/// windows starting at `0, stride, 2*stride, ...`.
pub fn sliding_windows(series: &TimeSeries, length: usize, stride: usize) -> Result<WindowSet> {
    if length == 0 || stride == 0 {
        return Err(Error::Validation("window length and stride must be positive".into()));
    }
    let n = series.values.len();
    if length > n {
        return Err(Error::Validation(format!(
            "window length {length} exceeds series {:?} length {n}",
            series.id
        )));
    }
    let count = (n - length) / stride + 1;
    let mut windows = Vec::with_capacity(count);
    let mut start_indices = Vec::with_capacity(count);
    for w in 0..count {
        let start = w * stride;
        windows.push(series.values[start..start + length].to_vec());
        start_indices.push(start);
    }
    Ok(WindowSet {
        source_id: series.id.clone(),
        windows,
        start_indices,
    })
}

/// Where the points of a cloud came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudProvenance {
    /// Rows of the input were already feature vectors.
    RawFeatures,
    /// Sliding windows used as points.
    WindowEmbedding,
    /// Takens-style delay embedding of a scalar series.
    DelayEmbedding,
}

/// A finite set of points in `R^d` with uniform dimension.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub points: Vec<Vec<f64>>,
    pub provenance: CloudProvenance,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, provenance: CloudProvenance) -> Result<Self> {
        if let Some(first) = points.first() {
            let d = first.len();
            if d == 0 {
                return Err(Error::Validation("points must have dimension >= 1".into()));
            }
            for (i, p) in points.iter().enumerate() {
                if p.len() != d {
                    return Err(Error::Validation(format!(
                        "point {i} has dimension {} but point 0 has {d}",
                        p.len()
                    )));
                }
                if let Some(x) = p.iter().find(|x| !x.is_finite()) {
                    return Err(Error::Validation(format!(
                        "point {i} contains non-finite coordinate {x}"
                    )));
                }
            }
        }
        Ok(PointCloud { points, provenance })
    }

    /// Transpose a set of aligned series so that each row (one value per
    /// series at a fixed time) becomes a point.
    pub fn from_series_rows(series: &[TimeSeries]) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::Validation("no series given".into()))?;
        let n = first.len();
        if series.iter().any(|s| s.len() != n) {
            return Err(Error::Validation(
                "row view requires all series to have equal length".into(),
            ));
        }
        let points = (0..n)
            .map(|i| series.iter().map(|s| s.values[i]).collect())
            .collect();
        PointCloud::new(points, CloudProvenance::RawFeatures)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Deterministic even-index subsample down to at most `max_points`.
    pub fn subsample(&self, max_points: usize) -> PointCloud {
        let n = self.points.len();
        if n <= max_points || max_points == 0 {
            return self.clone();
        }
        let points = (0..max_points)
            .map(|i| self.points[i * n / max_points].clone())
            .collect();
        PointCloud {
            points,
            provenance: self.provenance,
        }
    }
}

/// Delay embedding: point `j` is `(v[j], v[j+tau], ..., v[j+(m-1)tau])`,
/// giving `len(v) - (m-1)*tau` points in `R^m`.
pub fn delay_embed(v: &[f64], m: usize, tau: usize) -> Result<PointCloud> {
    if m == 0 || tau == 0 {
        return Err(Error::Validation("embedding dimension and delay must be positive".into()));
    }
    let span = (m - 1) * tau + 1;
    if span > v.len() {
        return Err(Error::Validation(format!(
            "delay embedding needs (m-1)*tau+1 = {span} samples, series has {}",
            v.len()
        )));
    }
    let count = v.len() - (m - 1) * tau;
    let points = (0..count)
        .map(|j| (0..m).map(|k| v[j + k * tau]).collect())
        .collect();
    PointCloud::new(points, CloudProvenance::DelayEmbedding)
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Kennel-style false-nearest-neighbor ratio: the fraction of embedded
/// points whose nearest neighbor at dimension `m` separates by more than
/// `r_tol` times their distance once the `(m+1)`-th coordinate is added.
/// Euclidean distances throughout; ties break to the lowest index.
pub fn fnn_ratio(v: &[f64], m: usize, tau: usize, r_tol: f64) -> Result<f64> {
    if r_tol <= 0.0 {
        return Err(Error::Validation("r_tol must be positive".into()));
    }
    let lifted = delay_embed(v, m + 1, tau)?;
    // Only points that survive the lift can be tested.
    let count = lifted.len();
    if count < 2 {
        return Err(Error::Validation(format!(
            "fnn_ratio needs at least 2 liftable points, got {count}"
        )));
    }
    let base: Vec<&[f64]> = lifted.points.iter().map(|p| &p[..m]).collect();
    let mut false_neighbors = 0usize;
    for j in 0..count {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for k in 0..count {
            if k == j {
                continue;
            }
            let d = sq_dist(base[j], base[k]);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        let d_m = best_d.sqrt();
        let extra = (lifted.points[j][m] - lifted.points[best][m]).abs();
        let is_false = if d_m <= DEGENERACY_THRESHOLD {
            extra > DEGENERACY_THRESHOLD
        } else {
            extra / d_m > r_tol
        };
        if is_false {
            false_neighbors += 1;
        }
    }
    Ok(false_neighbors as f64 / count as f64)
}

/// Grid-search `(m, tau)` minimizing the false-nearest-neighbor ratio;
/// ties break toward smaller `m`, then smaller `tau`. A constant series
/// short-circuits to `(1, 1)` with all ratios defined as zero.
pub fn select_embedding(v: &[f64], m_max: usize, tau_max: usize, r_tol: f64) -> Result<(usize, usize)> {
    if m_max == 0 || tau_max == 0 {
        return Err(Error::Validation("m_max and tau_max must be at least 1".into()));
    }
    if population_std(v) <= DEGENERACY_THRESHOLD {
        return Ok((1, 1));
    }
    let mut best: Option<((usize, usize), f64)> = None;
    for m in 1..=m_max {
        for tau in 1..=tau_max {
            let Ok(ratio) = fnn_ratio(v, m, tau, r_tol) else {
                continue; // grid cell infeasible for this series length
            };
            let better = match &best {
                None => true,
                Some((_, r)) => ratio < *r,
            };
            if better {
                best = Some(((m, tau), ratio));
            }
        }
    }
    best.map(|(mt, _)| mt)
        .ok_or_else(|| Error::Validation("no feasible (m, tau) grid cell for this series".into()))
}

/// Panel-average variant: minimizes the mean ratio across all series,
/// over grid cells feasible for every series. The manifest records which
/// of the two selection modes a run used.
pub fn select_embedding_panel(
    series: &[Vec<f64>],
    m_max: usize,
    tau_max: usize,
    r_tol: f64,
) -> Result<(usize, usize)> {
    if series.is_empty() {
        return Err(Error::Validation("empty panel".into()));
    }
    if series.iter().all(|v| population_std(v) <= DEGENERACY_THRESHOLD) {
        return Ok((1, 1));
    }
    let mut best: Option<((usize, usize), f64)> = None;
    for m in 1..=m_max {
        for tau in 1..=tau_max {
            let mut total = 0.0;
            let mut feasible = true;
            for v in series {
                match fnn_ratio(v, m, tau, r_tol) {
                    Ok(r) => total += r,
                    Err(_) => {
                        feasible = false;
                        break;
                    }
                }
            }
            if !feasible {
                continue;
            }
            let avg = total / series.len() as f64;
            let better = match &best {
                None => true,
                Some((_, r)) => avg < *r,
            };
            if better {
                best = Some(((m, tau), avg));
            }
        }
    }
    best.map(|(mt, _)| mt)
        .ok_or_else(|| Error::Validation("no grid cell feasible for every series".into()))
}
