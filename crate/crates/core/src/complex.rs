//! Vietoris–Rips filtrations and a desk-scale Čech inclusion check.
//!
//! A Rips filtration contains every vertex at scale 0, every edge at its
//! pairwise distance, and every higher simplex at the maximum of its
//! edge values (clique rule). Simplices are stored as a flat stream
//! sorted by `(value, dim, lexicographic vertices)`, so that every face
//! precedes each of its cofaces and the boundary reduction can consume
//! the stream directly.

use std::io::Write;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::metrics::{euclidean, euclidean_matrix, DistanceMatrix};
use crate::preprocess::PointCloud;

/// Largest vertex count accepted by the exact Čech inclusion check.
pub const INCLUSION_MAX_POINTS: usize = 12;

/// One simplex of a filtration: sorted vertices and the scale at which
/// it appears.
#[derive(Debug, Clone, PartialEq)]
pub struct FiltrationSimplex {
    pub vertices: SmallVec<[u32; 4]>,
    pub value: f64,
}

impl FiltrationSimplex {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }
}

/// Ordered stream of simplices forming a nested family of complexes.
#[derive(Debug, Clone)]
pub struct Filtration {
    simplices: Vec<FiltrationSimplex>,
    n_vertices: usize,
    max_value: f64,
    dim_cap: usize,
}

impl Filtration {
    pub fn simplices(&self) -> &[FiltrationSimplex] {
        &self.simplices
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    /// The simplex dimension the construction was asked for. Homology is
    /// reliable up to `dim_cap - 1` even when the threshold left no
    /// simplices of the top dimension.
    pub fn dim_cap(&self) -> usize {
        self.dim_cap
    }

    /// Largest simplex dimension present.
    pub fn max_dim(&self) -> usize {
        self.simplices.iter().map(FiltrationSimplex::dim).max().unwrap_or(0)
    }

    /// Check the face-monotonicity invariant: no simplex appears before
    /// any of its faces, and values never decrease along the stream.
    pub fn check_monotone(&self) -> Result<()> {
        let mut last = f64::NEG_INFINITY;
        for s in &self.simplices {
            if s.value < last {
                return Err(Error::Internal(format!(
                    "filtration values decrease at {:?}",
                    s.vertices
                )));
            }
            last = s.value;
        }
        let position: std::collections::HashMap<&[u32], usize> = self
            .simplices
            .iter()
            .enumerate()
            .map(|(i, s)| (s.vertices.as_slice(), i))
            .collect();
        for (i, s) in self.simplices.iter().enumerate() {
            if s.dim() == 0 {
                continue;
            }
            for skip in 0..s.vertices.len() {
                let face: SmallVec<[u32; 4]> = s
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, v)| *v)
                    .collect();
                match position.get(face.as_slice()) {
                    Some(&fi) if fi < i => {
                        if self.simplices[fi].value > s.value {
                            return Err(Error::Internal(format!(
                                "face {:?} has larger value than coface {:?}",
                                face, s.vertices
                            )));
                        }
                    }
                    _ => {
                        return Err(Error::Internal(format!(
                            "face {face:?} missing or after coface {:?}",
                            s.vertices
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    /// Debug dump: one line per simplex, `value dim v0 v1 [v2]`.
    pub fn write_dump(&self, out: &mut impl Write) -> Result<()> {
        for s in &self.simplices {
            write!(out, "{} {}", s.value, s.dim())?;
            for v in &s.vertices {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Build the Vietoris–Rips filtration of a distance matrix up to
/// simplex dimension `max_dim` (1, 2 or 3) and scale `max_value`.
pub fn rips_filtration(dm: &DistanceMatrix, max_dim: usize, max_value: f64) -> Result<Filtration> {
    if !(1..=3).contains(&max_dim) {
        return Err(Error::Config(format!(
            "rips max_dim must be 1, 2 or 3, got {max_dim}"
        )));
    }
    if max_value.is_nan() || max_value <= 0.0 {
        return Err(Error::Config(format!("rips max_value must be positive, got {max_value}")));
    }
    let n = dm.n();
    let mut simplices: Vec<FiltrationSimplex> = Vec::new();
    for v in 0..n as u32 {
        simplices.push(FiltrationSimplex {
            vertices: SmallVec::from_slice(&[v]),
            value: 0.0,
        });
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = dm.get(i, j);
            if d <= max_value {
                simplices.push(FiltrationSimplex {
                    vertices: SmallVec::from_slice(&[i as u32, j as u32]),
                    value: d,
                });
            }
        }
    }
    if max_dim >= 2 {
        for i in 0..n {
            for j in (i + 1)..n {
                let dij = dm.get(i, j);
                if dij > max_value {
                    continue;
                }
                for k in (j + 1)..n {
                    let v = dij.max(dm.get(i, k)).max(dm.get(j, k));
                    if v <= max_value {
                        simplices.push(FiltrationSimplex {
                            vertices: SmallVec::from_slice(&[i as u32, j as u32, k as u32]),
                            value: v,
                        });
                    }
                }
            }
        }
    }
    if max_dim >= 3 {
        for i in 0..n {
            for j in (i + 1)..n {
                let dij = dm.get(i, j);
                if dij > max_value {
                    continue;
                }
                for k in (j + 1)..n {
                    let vijk = dij.max(dm.get(i, k)).max(dm.get(j, k));
                    if vijk > max_value {
                        continue;
                    }
                    for l in (k + 1)..n {
                        let v = vijk
                            .max(dm.get(i, l))
                            .max(dm.get(j, l))
                            .max(dm.get(k, l));
                        if v <= max_value {
                            simplices.push(FiltrationSimplex {
                                vertices: SmallVec::from_slice(&[
                                    i as u32, j as u32, k as u32, l as u32,
                                ]),
                                value: v,
                            });
                        }
                    }
                }
            }
        }
    }
    // Total order: scale, then dimension, then lexicographic vertices.
    // Faces share or precede the value of every coface, and at equal
    // value the lower dimension comes first, so faces always precede
    // cofaces and identical inputs produce bit-identical streams.
    simplices.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .expect("finite filtration values")
            .then(a.vertices.len().cmp(&b.vertices.len()))
            .then_with(|| a.vertices.cmp(&b.vertices))
    });
    Ok(Filtration {
        simplices,
        n_vertices: n,
        max_value,
        dim_cap: max_dim,
    })
}

/// Scale at which the Čech simplex on at most three points appears:
/// twice the minimum enclosing ball radius. For a pair that is the
/// distance; for a triangle the circumdiameter when the circumcenter
/// lies inside, otherwise the longest edge.
pub fn cech_value(points: &[Vec<f64>]) -> Result<f64> {
    match points.len() {
        1 => Ok(0.0),
        2 => Ok(euclidean(&points[0], &points[1])),
        3 => {
            let a = euclidean(&points[1], &points[2]);
            let b = euclidean(&points[0], &points[2]);
            let c = euclidean(&points[0], &points[1]);
            let longest = a.max(b).max(c);
            let others_sq = a * a + b * b + c * c - longest * longest;
            if longest * longest >= others_sq {
                // Right or obtuse: the ball on the longest edge covers
                // the third point.
                return Ok(longest);
            }
            // Acute: circumdiameter a*b*c / (2 * area), by Heron.
            let s = 0.5 * (a + b + c);
            let area_sq = s * (s - a) * (s - b) * (s - c);
            if area_sq <= 0.0 {
                return Ok(longest); // collinear
            }
            Ok(a * b * c / (2.0 * area_sq.sqrt()))
        }
        0 => Err(Error::Validation("cech_value needs at least one point".into())),
        n => Err(Error::Scale(format!(
            "cech_value supports at most 3 points (simplex dim <= 2), got {n}"
        ))),
    }
}

/// Exact desk-scale check that every Čech simplex (dim <= 2) at scale
/// `eps` already appears in the Rips filtration at scale `2 * eps`.
pub fn verify_inclusion(cloud: &PointCloud, eps: f64) -> Result<bool> {
    let n = cloud.len();
    if n > INCLUSION_MAX_POINTS {
        return Err(Error::Scale(format!(
            "inclusion check capped at {INCLUSION_MAX_POINTS} points, got {n}"
        )));
    }
    if n == 0 || eps.is_nan() || eps <= 0.0 {
        return Err(Error::Validation("need a non-empty cloud and eps > 0".into()));
    }
    let dm = euclidean_matrix(cloud)?;
    let rips_at = |vertices: &[usize]| -> f64 {
        let mut v = 0.0f64;
        for (a, i) in vertices.iter().enumerate() {
            for j in &vertices[a + 1..] {
                v = v.max(dm.get(*i, *j));
            }
        }
        v
    };
    let bound = 2.0 * eps;
    for i in 0..n {
        for j in (i + 1)..n {
            let cech = cech_value(&[cloud.points[i].clone(), cloud.points[j].clone()])?;
            if cech <= eps && rips_at(&[i, j]) > bound {
                return Ok(false);
            }
            for k in (j + 1)..n {
                let cech = cech_value(&[
                    cloud.points[i].clone(),
                    cloud.points[j].clone(),
                    cloud.points[k].clone(),
                ])?;
                if cech <= eps && rips_at(&[i, j, k]) > bound {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}
