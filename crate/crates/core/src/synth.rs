//! Deterministic synthetic datasets for tests and demos: the canonical
//! circle and two-cluster point clouds, a two-regime panel whose
//! lifetime dispersion rises after the break, and a noisy sine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ingest::TimeSeries;
use crate::preprocess::{CloudProvenance, PointCloud};

/// Points on the unit circle with optional Gaussian-ish jitter, encoded
/// as two coordinate series `x`, `y` (one row per point).
pub fn circle(n: usize, noise: f64, seed: u64) -> Result<Vec<TimeSeries>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for i in 0..n {
        let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
        let (mut x, mut y) = (t.cos(), t.sin());
        if noise > 0.0 {
            x += rng.gen_range(-noise..noise);
            y += rng.gen_range(-noise..noise);
        }
        xs.push(x);
        ys.push(y);
    }
    Ok(vec![
        TimeSeries::from_values("x", xs)?,
        TimeSeries::from_values("y", ys)?,
    ])
}

/// Two blobs of `n_per` points separated by `separation` along the first
/// axis, each with uniform jitter of radius `spread`.
pub fn two_clusters(n_per: usize, separation: f64, spread: f64, seed: u64) -> Result<Vec<TimeSeries>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(2 * n_per);
    let mut ys = Vec::with_capacity(2 * n_per);
    for center in [0.0, separation] {
        for _ in 0..n_per {
            xs.push(center + rng.gen_range(-spread..spread));
            ys.push(rng.gen_range(-spread..spread));
        }
    }
    Ok(vec![
        TimeSeries::from_values("x", xs)?,
        TimeSeries::from_values("y", ys)?,
    ])
}

/// Interpret coordinate series (as produced by [`circle`] and
/// [`two_clusters`]) as a static point cloud.
pub fn as_point_cloud(series: &[TimeSeries]) -> Result<PointCloud> {
    let cloud = PointCloud::from_series_rows(series)?;
    PointCloud::new(cloud.points, CloudProvenance::RawFeatures)
}

/// A panel of `n_series` series that is piecewise constant over
/// consecutive blocks of `window` samples. For the first
/// `phase1_windows` blocks the series sit at equally spaced levels
/// (gap `gap`), so every window's component lifetimes are identical
/// and their variance is exactly zero. Over the remaining
/// `phase2_windows` blocks the level gaps fan out linearly up to
/// `max_spread`, so lifetime dispersion rises strictly window over
/// window. No randomness is involved.
pub fn regime_shift(
    n_series: usize,
    window: usize,
    phase1_windows: usize,
    phase2_windows: usize,
    gap: f64,
    max_spread: f64,
) -> Result<Vec<TimeSeries>> {
    let total = phase1_windows + phase2_windows;
    let len = total * window;
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(len); n_series];
    for w in 0..total {
        let alpha = if w < phase1_windows {
            0.0
        } else {
            max_spread * (w - phase1_windows + 1) as f64 / phase2_windows as f64
        };
        for (i, col) in columns.iter_mut().enumerate() {
            // level_i = sum of gaps below: gap * (i + alpha * i(i-1)/2)
            let level = gap * (i as f64 + alpha * (i * i.saturating_sub(1)) as f64 / 2.0);
            for _ in 0..window {
                col.push(level);
            }
        }
    }
    columns
        .into_iter()
        .enumerate()
        .map(|(i, values)| TimeSeries::from_values(format!("s{i}"), values))
        .collect()
}

/// A single sine series with uniform additive noise.
pub fn noisy_sine(n: usize, period: f64, noise: f64, seed: u64) -> Result<Vec<TimeSeries>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|i| {
            let base = (2.0 * std::f64::consts::PI * i as f64 / period).sin();
            if noise > 0.0 {
                base + rng.gen_range(-noise..noise)
            } else {
                base
            }
        })
        .collect();
    Ok(vec![TimeSeries::from_values("sine", values)?])
}
