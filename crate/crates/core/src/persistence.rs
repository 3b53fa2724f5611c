//! Persistent homology over the two-element field.
//!
//! `reduce` runs the standard boundary-matrix column reduction in
//! filtration order, processing dimensions from high to low with the
//! clearing (twist) optimization; the output is identical to the plain
//! left-to-right reduction because the persistence pairing is unique.
//! `h0_union_find` is a fast path for dimension zero implementing the
//! elder rule, cross-checked against the reduction in tests.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::complex::Filtration;
use crate::error::{Error, Result};

/// One feature: born at `birth`, dead at `death` (`None` for essential
/// classes that survive the whole filtration). Simplex fields index into
/// the filtration stream that produced the diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    pub death: Option<f64>,
    #[serde(skip_serializing, default)]
    pub birth_simplex: usize,
    #[serde(skip_serializing, default)]
    pub death_simplex: Option<usize>,
}

impl PersistencePair {
    pub fn is_essential(&self) -> bool {
        self.death.is_none()
    }

    /// Finite lifetime, `None` for essential classes.
    pub fn lifetime(&self) -> Option<f64> {
        self.death.map(|d| d - self.birth)
    }
}

/// Multiset of persistence pairs per homology dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
    pub max_dim: usize,
    pub filtration_max: f64,
}

impl PersistenceDiagram {
    pub fn pairs_in_dim(&self, k: usize) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |p| p.dim == k)
    }

    /// `{max_dim, pairs: [{dim, birth, death|null}]}`, key-sorted.
    pub fn to_json(&self) -> Result<String> {
        let value = serde_json::json!({
            "max_dim": self.max_dim,
            "pairs": self.pairs,
        });
        serde_json::to_string_pretty(&value)
            .map_err(|e| Error::Internal(format!("diagram serialization: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Wire {
            max_dim: usize,
            pairs: Vec<PersistencePair>,
        }
        let wire: Wire = serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("bad diagram json: {e}")))?;
        let filtration_max = wire
            .pairs
            .iter()
            .filter_map(|p| p.death)
            .fold(0.0f64, f64::max);
        Ok(PersistenceDiagram {
            pairs: wire.pairs,
            max_dim: wire.max_dim,
            filtration_max,
        })
    }
}

/// Sparse GF(2) column: sorted row indices; the pivot is the last entry.
#[derive(Debug, Clone, Default)]
struct Column(Vec<u32>);

impl Column {
    fn low(&self) -> Option<u32> {
        self.0.last().copied()
    }

    /// Symmetric difference (addition over GF(2)).
    fn add(&mut self, other: &Column) {
        let mut merged = Vec::with_capacity(self.0.len() + other.0.len());
        let (a, b) = (&self.0, &other.0);
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    merged.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    merged.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
            }
        }
        merged.extend_from_slice(&a[i..]);
        merged.extend_from_slice(&b[j..]);
        self.0 = merged;
    }
}

fn boundary_columns(f: &Filtration) -> Result<Vec<Column>> {
    let mut position: HashMap<&[u32], u32> = HashMap::with_capacity(f.len());
    for (i, s) in f.simplices().iter().enumerate() {
        position.insert(s.vertices.as_slice(), i as u32);
    }
    let mut columns = Vec::with_capacity(f.len());
    for s in f.simplices() {
        let mut rows = Vec::with_capacity(s.vertices.len());
        if s.dim() > 0 {
            for skip in 0..s.vertices.len() {
                let face: SmallVec<[u32; 4]> = s
                    .vertices
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, v)| *v)
                    .collect();
                let idx = position.get(face.as_slice()).ok_or_else(|| {
                    Error::Internal(format!(
                        "face {face:?} of {:?} missing from filtration",
                        s.vertices
                    ))
                })?;
                rows.push(*idx);
            }
            rows.sort_unstable();
            // A face appearing after its coface breaks the reduction.
            if rows.last().copied().unwrap_or(0) >= position[s.vertices.as_slice()] {
                return Err(Error::Internal(format!(
                    "filtration order violated at {:?}",
                    s.vertices
                )));
            }
        }
        columns.push(Column(rows));
    }
    Ok(columns)
}

fn assemble_diagram(
    f: &Filtration,
    pairings: &[(u32, u32)],
    essential: &[u32],
    keep_zero: bool,
) -> PersistenceDiagram {
    let simplices = f.simplices();
    let hom_max = f.dim_cap().saturating_sub(1);
    let mut pairs = Vec::new();
    for &(row, col) in pairings {
        let birth_s = &simplices[row as usize];
        let death_s = &simplices[col as usize];
        if birth_s.dim() > hom_max {
            continue;
        }
        if !keep_zero && death_s.value == birth_s.value {
            continue;
        }
        pairs.push(PersistencePair {
            dim: birth_s.dim(),
            birth: birth_s.value,
            death: Some(death_s.value),
            birth_simplex: row as usize,
            death_simplex: Some(col as usize),
        });
    }
    for &idx in essential {
        let s = &simplices[idx as usize];
        // Classes of the top simplex dimension need one dimension more
        // to die and are not trustworthy; drop them.
        if s.dim() > hom_max {
            continue;
        }
        pairs.push(PersistencePair {
            dim: s.dim(),
            birth: s.value,
            death: None,
            birth_simplex: idx as usize,
            death_simplex: None,
        });
    }
    pairs.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.partial_cmp(&b.birth).unwrap())
            .then_with(|| {
                let da = a.death.unwrap_or(f64::INFINITY);
                let db = b.death.unwrap_or(f64::INFINITY);
                da.partial_cmp(&db).unwrap()
            })
            .then(a.birth_simplex.cmp(&b.birth_simplex))
    });
    PersistenceDiagram {
        pairs,
        max_dim: hom_max,
        filtration_max: f.max_value(),
    }
}

/// Persistent homology of a filtration; zero-persistence pairs are
/// dropped from the diagram.
pub fn reduce(f: &Filtration) -> Result<PersistenceDiagram> {
    reduce_with_options(f, false)
}

/// As [`reduce`], optionally retaining zero-persistence pairs for
/// debugging.
pub fn reduce_with_options(f: &Filtration, keep_zero: bool) -> Result<PersistenceDiagram> {
    let mut columns = boundary_columns(f)?;
    let dims: Vec<usize> = f.simplices().iter().map(|s| s.dim()).collect();
    let top = f.max_dim();
    let mut pivot_of_row: HashMap<u32, u32> = HashMap::new();
    let mut pairings: Vec<(u32, u32)> = Vec::new();
    let mut cleared = vec![false; columns.len()];
    for dim in (1..=top).rev() {
        for j in 0..columns.len() {
            if dims[j] != dim || cleared[j] {
                continue;
            }
            loop {
                match columns[j].low() {
                    None => break,
                    Some(low) => match pivot_of_row.get(&low) {
                        Some(&earlier) => {
                            let other = columns[earlier as usize].clone();
                            columns[j].add(&other);
                        }
                        None => break,
                    },
                }
            }
            if let Some(low) = columns[j].low() {
                pivot_of_row.insert(low, j as u32);
                pairings.push((low, j as u32));
                // The paired row's own column is a cycle column; clear it
                // so the next (lower) dimension skips its reduction.
                cleared[low as usize] = true;
                columns[low as usize] = Column::default();
            }
        }
    }
    let mut essential: Vec<u32> = Vec::new();
    for j in 0..columns.len() {
        let is_creator = cleared[j] || columns[j].low().is_none();
        if is_creator && !cleared[j] && !pivot_of_row.contains_key(&(j as u32)) {
            essential.push(j as u32);
        }
    }
    pairings.sort_unstable();
    essential.sort_unstable();
    Ok(assemble_diagram(f, &pairings, &essential, keep_zero))
}

/// Dimension-zero pairs by union-find with the elder rule: when an edge
/// joins two components, the younger root (later birth; higher index on
/// ties) dies at the edge value. Matches the reduction output exactly.
pub fn h0_union_find(f: &Filtration) -> Result<Vec<PersistencePair>> {
    let simplices = f.simplices();
    let n = f.len();
    let mut parent: Vec<u32> = (0..n as u32).collect();
    // Vertex positions in the stream; roots are always vertex positions.
    fn find(parent: &mut [u32], mut x: u32) -> u32 {
        while parent[x as usize] != x {
            parent[x as usize] = parent[parent[x as usize] as usize];
            x = parent[x as usize];
        }
        x
    }
    let mut vertex_position: HashMap<u32, u32> = HashMap::new();
    for (i, s) in simplices.iter().enumerate() {
        if s.dim() == 0 {
            vertex_position.insert(s.vertices[0], i as u32);
        }
    }
    let mut pairs = Vec::new();
    for (i, s) in simplices.iter().enumerate() {
        if s.dim() != 1 {
            continue;
        }
        let pu = *vertex_position
            .get(&s.vertices[0])
            .ok_or_else(|| Error::Internal("edge endpoint missing vertex simplex".into()))?;
        let pv = *vertex_position
            .get(&s.vertices[1])
            .ok_or_else(|| Error::Internal("edge endpoint missing vertex simplex".into()))?;
        let ru = find(&mut parent, pu);
        let rv = find(&mut parent, pv);
        if ru == rv {
            continue;
        }
        // Later stream position means equal-or-later birth; on equal
        // birth values the higher index is the younger component.
        let (elder, younger) = if ru < rv { (ru, rv) } else { (rv, ru) };
        parent[younger as usize] = elder;
        let birth_s = &simplices[younger as usize];
        if s.value > birth_s.value {
            pairs.push(PersistencePair {
                dim: 0,
                birth: birth_s.value,
                death: Some(s.value),
                birth_simplex: younger as usize,
                death_simplex: Some(i),
            });
        }
    }
    for &pos in vertex_position.values() {
        if find(&mut parent, pos) == pos {
            pairs.push(PersistencePair {
                dim: 0,
                birth: simplices[pos as usize].value,
                death: None,
                birth_simplex: pos as usize,
                death_simplex: None,
            });
        }
    }
    pairs.sort_by(|a, b| {
        a.birth
            .partial_cmp(&b.birth)
            .unwrap()
            .then_with(|| {
                let da = a.death.unwrap_or(f64::INFINITY);
                let db = b.death.unwrap_or(f64::INFINITY);
                da.partial_cmp(&db).unwrap()
            })
            .then(a.birth_simplex.cmp(&b.birth_simplex))
    });
    Ok(pairs)
}

/// Betti number at scale `eps`: features with `birth <= eps < death`,
/// essential classes counting for every `eps >= birth`.
pub fn betti_at(dgm: &PersistenceDiagram, eps: f64, k: usize) -> Result<usize> {
    if k > dgm.max_dim {
        return Err(Error::Validation(format!(
            "homology dimension {k} exceeds diagram max_dim {}",
            dgm.max_dim
        )));
    }
    Ok(dgm
        .pairs_in_dim(k)
        .filter(|p| p.birth <= eps && p.death.is_none_or(|d| eps < d))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::rips_filtration;
    use crate::metrics::euclidean_matrix;
    use crate::preprocess::{CloudProvenance, PointCloud};

    fn diagram_of(points: Vec<Vec<f64>>, max_dim: usize) -> PersistenceDiagram {
        let cloud = PointCloud::new(points, CloudProvenance::RawFeatures).unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let f = rips_filtration(&dm, max_dim, dm.max_entry().max(1e-9)).unwrap();
        reduce(&f).unwrap()
    }

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn unit_square_diagram() {
        let dgm = diagram_of(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
            ],
            2,
        );
        let h0: Vec<_> = dgm.pairs_in_dim(0).collect();
        let finite: Vec<f64> = h0.iter().filter_map(|p| p.death).collect();
        assert_eq!(finite.len(), 3);
        assert!(finite.iter().all(|d| (d - 1.0).abs() < 1e-12));
        assert_eq!(h0.iter().filter(|p| p.is_essential()).count(), 1);

        let h1: Vec<_> = dgm.pairs_in_dim(1).collect();
        assert_eq!(h1.len(), 1);
        assert_close(h1[0].birth, 1.0, 1e-12);
        assert_close(h1[0].death.unwrap(), 2f64.sqrt(), 1e-12);
    }

    #[test]
    fn two_clusters_on_a_line() {
        let dgm = diagram_of(vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]], 2);
        let mut deaths: Vec<f64> = dgm.pairs_in_dim(0).filter_map(|p| p.death).collect();
        deaths.sort_by(f64::total_cmp);
        assert_eq!(deaths.len(), 3);
        assert_close(deaths[0], 0.1, 1e-12);
        assert_close(deaths[1], 0.1, 1e-12);
        assert_close(deaths[2], 9.9, 1e-12);
        assert_eq!(dgm.pairs_in_dim(0).filter(|p| p.is_essential()).count(), 1);
        assert_eq!(dgm.pairs_in_dim(1).count(), 0);
    }

    #[test]
    fn circle_has_one_dominant_loop() {
        let n = 20;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let dgm = diagram_of(pts, 2);
        let mut lifetimes: Vec<f64> = dgm
            .pairs_in_dim(1)
            .filter_map(PersistencePair::lifetime)
            .collect();
        lifetimes.sort_by(f64::total_cmp);
        let top = lifetimes.last().copied().unwrap();
        let runner_up = if lifetimes.len() > 1 {
            lifetimes[lifetimes.len() - 2]
        } else {
            0.0
        };
        assert!(top > 5.0 * runner_up.max(1e-12), "top={top} runner_up={runner_up}");
    }

    #[test]
    fn union_find_chain() {
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![1.0], vec![2.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let f = rips_filtration(&dm, 1, 3.0).unwrap();
        let pairs = h0_union_find(&f).unwrap();
        let finite: Vec<f64> = pairs.iter().filter_map(|p| p.death).collect();
        assert_eq!(finite, vec![1.0, 1.0]);
        assert_eq!(pairs.iter().filter(|p| p.is_essential()).count(), 1);
    }

    #[test]
    fn union_find_single_point() {
        let cloud = PointCloud::new(vec![vec![0.0]], CloudProvenance::RawFeatures).unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let f = rips_filtration(&dm, 1, 1.0).unwrap();
        let pairs = h0_union_find(&f).unwrap();
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].is_essential());
    }

    #[test]
    fn union_find_matches_reduction() {
        use rand::{Rng, SeedableRng};
        for seed in 0..20u64 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(2..=12);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            let cloud = PointCloud::new(pts, CloudProvenance::RawFeatures).unwrap();
            let dm = euclidean_matrix(&cloud).unwrap();
            let f = rips_filtration(&dm, 2, dm.max_entry()).unwrap();
            let dgm = reduce(&f).unwrap();
            let mut from_reduce: Vec<(u64, u64)> = dgm
                .pairs_in_dim(0)
                .map(|p| (p.birth.to_bits(), p.death.unwrap_or(f64::INFINITY).to_bits()))
                .collect();
            let mut from_uf: Vec<(u64, u64)> = h0_union_find(&f)
                .unwrap()
                .iter()
                .map(|p| (p.birth.to_bits(), p.death.unwrap_or(f64::INFINITY).to_bits()))
                .collect();
            from_reduce.sort_unstable();
            from_uf.sort_unstable();
            assert_eq!(from_reduce, from_uf, "seed {seed}");
        }
    }

    #[test]
    fn betti_examples() {
        let dgm = diagram_of(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
            ],
            2,
        );
        assert_eq!(betti_at(&dgm, 1.2, 0).unwrap(), 1);
        assert_eq!(betti_at(&dgm, 1.2, 1).unwrap(), 1);
        // below all edges every point is isolated; zero-persistence drops
        // never hide positive-persistence classes
        assert_eq!(betti_at(&dgm, 0.5, 0).unwrap(), 4);
        assert_eq!(betti_at(&dgm, 2.0, 0).unwrap(), 1);
        assert_eq!(betti_at(&dgm, 2.0, 1).unwrap(), 0);
        assert!(matches!(betti_at(&dgm, 1.0, 5), Err(Error::Validation(_))));
    }

    #[test]
    fn pair_count_conservation_and_dims() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 10;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let cloud = PointCloud::new(pts, CloudProvenance::RawFeatures).unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let f = rips_filtration(&dm, 2, dm.max_entry()).unwrap();
        // keep zero-persistence pairs so the count identity is exact
        let dgm = reduce_with_options(&f, true).unwrap();
        let finite_h0 = dgm.pairs_in_dim(0).filter(|p| !p.is_essential()).count();
        let essential_h0 = dgm.pairs_in_dim(0).filter(|p| p.is_essential()).count();
        assert_eq!(finite_h0 + essential_h0, n);
        for p in &dgm.pairs {
            if let Some(death_idx) = p.death_simplex {
                assert_eq!(f.simplices()[death_idx].dim(), p.dim + 1);
                assert_eq!(f.simplices()[p.birth_simplex].dim(), p.dim);
            }
        }
    }

    #[test]
    fn keep_zero_flag() {
        // an equilateral pair of coincident points yields zero-persistence pairs
        let dgm_drop = diagram_of(vec![vec![0.0], vec![0.0], vec![1.0]], 2);
        assert!(dgm_drop
            .pairs
            .iter()
            .all(|p| p.lifetime().map_or(true, |l| l > 0.0)));
        let cloud = PointCloud::new(
            vec![vec![0.0], vec![0.0], vec![1.0]],
            CloudProvenance::RawFeatures,
        )
        .unwrap();
        let dm = euclidean_matrix(&cloud).unwrap();
        let f = rips_filtration(&dm, 2, 2.0).unwrap();
        let dgm_keep = reduce_with_options(&f, true).unwrap();
        assert!(dgm_keep.pairs.len() > dgm_drop.pairs.len());
    }

    #[test]
    fn diagram_json_round_trip() {
        let dgm = diagram_of(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
            ],
            2,
        );
        let json = dgm.to_json().unwrap();
        assert!(json.contains("\"max_dim\""));
        assert!(json.contains("null")); // the essential class
        let back = PersistenceDiagram::from_json(&json).unwrap();
        assert_eq!(back.pairs.len(), dgm.pairs.len());
        assert_eq!(back.max_dim, dgm.max_dim);
        for (a, b) in back.pairs.iter().zip(&dgm.pairs) {
            assert_eq!(a.dim, b.dim);
            assert_eq!(a.birth, b.birth);
            assert_eq!(a.death, b.death);
        }
    }
}
