//! Piecewise aggregate approximation and symbolic encodings.
//!
//! PAA reduces a z-normalized vector to `w` segment means; SAX quantizes
//! those means against standard-normal breakpoints; eSAX additionally
//! quantizes each segment's minimum and maximum, preserving volatility
//! information. Feature vectors for clustering stay in PAA reals; the
//! symbol strings are for reporting.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Segment means of a (z-normalized) vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PaaVector {
    pub values: Vec<f64>,
}

impl PaaVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A SAX word: one symbol in `[0, a)` per segment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SaxWord {
    pub symbols: Vec<u8>,
    pub alphabet: u8,
}

impl SaxWord {
    /// Render with lowercase letters `a..t` (alphabet sizes up to 20).
    pub fn to_letters(&self) -> String {
        self.symbols.iter().map(|s| (b'a' + s) as char).collect()
    }
}

/// Within-segment order of an eSAX triple when flattened to a string or
/// feature vector. The internal representation is always (min, mean, max).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EsaxOrder {
    MinMeanMax,
    MaxMinMean,
}

/// An eSAX word: per segment the quantized (min, mean, max) of the
/// segment's samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EsaxWord {
    pub triples: Vec<(u8, u8, u8)>,
    pub alphabet: u8,
}

impl EsaxWord {
    pub fn flatten(&self, order: EsaxOrder) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.triples.len() * 3);
        for (lo, mid, hi) in &self.triples {
            match order {
                EsaxOrder::MinMeanMax => out.extend_from_slice(&[*lo, *mid, *hi]),
                EsaxOrder::MaxMinMean => out.extend_from_slice(&[*hi, *lo, *mid]),
            }
        }
        out
    }

    pub fn to_letters(&self, order: EsaxOrder) -> String {
        self.flatten(order).iter().map(|s| (b'a' + s) as char).collect()
    }
}

/// Piecewise aggregate approximation with `w` equal frames. When `w`
/// does not divide `n`, each sample's mass is split proportionally
/// across the frames it overlaps, so segment means stay exact.
pub fn paa(v: &[f64], w: usize) -> Result<PaaVector> {
    if w == 0 {
        return Err(Error::Validation("paa needs at least one segment".into()));
    }
    if w > v.len() {
        return Err(Error::Validation(format!(
            "paa segment count {w} exceeds input length {}",
            v.len()
        )));
    }
    let n = v.len();
    let frame = n as f64 / w as f64;
    let mut values = Vec::with_capacity(w);
    for i in 0..w {
        let start = i as f64 * frame;
        let end = (i + 1) as f64 * frame;
        let mut acc = 0.0;
        let lo = start.floor() as usize;
        let hi = (end.ceil() as usize).min(n);
        for (j, x) in v.iter().enumerate().take(hi).skip(lo) {
            let overlap = (end.min((j + 1) as f64) - start.max(j as f64)).max(0.0);
            acc += overlap * x;
        }
        values.push(acc / frame);
    }
    Ok(PaaVector { values })
}

/// Whole-sample frame boundaries used by eSAX: segment `i` owns samples
/// `[floor(i*n/w), floor((i+1)*n/w))`, always non-empty for `w <= n`.
fn frame_bounds(n: usize, w: usize, i: usize) -> (usize, usize) {
    (i * n / w, (i + 1) * n / w)
}

/// Standard-normal quantiles `Phi^-1(i/a)` for `i = 1..a-1`: the
/// equiprobable breakpoints of the SAX alphabet.
pub fn gaussian_breakpoints(a: usize) -> Result<Vec<f64>> {
    if !(2..=20).contains(&a) {
        return Err(Error::Validation(format!("alphabet size {a} outside [2, 20]")));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    Ok((1..a).map(|i| normal.inverse_cdf(i as f64 / a as f64)).collect())
}

/// Number of breakpoints at or below `x`; values exactly on a breakpoint
/// go to the upper bucket, keeping quantization right-continuous.
fn quantize(x: f64, breakpoints: &[f64]) -> u8 {
    breakpoints.iter().filter(|b| **b <= x).count() as u8
}

/// Quantize a PAA vector into a SAX word with alphabet size `a`.
pub fn sax(p: &PaaVector, a: usize) -> Result<SaxWord> {
    let breakpoints = gaussian_breakpoints(a)?;
    Ok(SaxWord {
        symbols: p.values.iter().map(|x| quantize(*x, &breakpoints)).collect(),
        alphabet: a as u8,
    })
}

/// eSAX: per whole-sample frame, quantize the segment's (min, mean, max)
/// with the same breakpoints. Using one sample set per segment keeps the
/// quantized triple ordered, since quantization is monotone.
pub fn esax(v: &[f64], w: usize, a: usize) -> Result<EsaxWord> {
    if w == 0 || w > v.len() {
        return Err(Error::Validation(format!(
            "esax segment count {w} invalid for input length {}",
            v.len()
        )));
    }
    let breakpoints = gaussian_breakpoints(a)?;
    let n = v.len();
    let mut triples = Vec::with_capacity(w);
    for i in 0..w {
        let (lo, hi) = frame_bounds(n, w, i);
        let seg = &v[lo..hi];
        let min = seg.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = seg.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = seg.iter().sum::<f64>() / seg.len() as f64;
        triples.push((
            quantize(min, &breakpoints),
            quantize(mean, &breakpoints),
            quantize(max, &breakpoints),
        ));
    }
    Ok(EsaxWord {
        triples,
        alphabet: a as u8,
    })
}

/// Euclidean distance between PAA feature vectors.
pub fn symbolic_distance(x: &PaaVector, y: &PaaVector) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "symbolic_distance length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(x.values
        .iter()
        .zip(&y.values)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}
