//! End-to-end pipeline execution: ingest -> preprocess -> distance
//! matrices -> Rips filtrations -> persistence -> summaries -> clustering
//! -> report, with every artifact written under one run directory named
//! by the hash of the resolved configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};

use tda_core::cluster::{
    self, classical_mds, cut, hierarchical, kmeans, ClusterAssignment, ValidityReport,
};
use tda_core::complex::rips_filtration;
use tda_core::ingest::{
    self, CsvLayout, FiltrationMax, Metric, Normalize, PipelineConfig, PipelineMode, RunManifest,
    TimeSeries, Transform,
};
use tda_core::metrics::{
    correlation_matrix, cosine_matrix, dtw_matrix, euclidean_matrix, matrix_from_paa,
    DistanceMatrix,
};
use tda_core::persistence::{reduce, PersistenceDiagram};
use tda_core::preprocess::{
    delay_embed, sliding_windows, z_normalize, CloudProvenance, PointCloud,
};
use tda_core::summaries::{
    betti_curve, indicator_json, landscape, lifetime_stats, rolling_tsi, total_persistence,
    wasserstein, TsiSeries,
};
use tda_core::symbolic::{esax, paa, sax, PaaVector};
use tda_core::{Error, Result};

use crate::plot;

/// Per-series embedding clouds are thinned to this many points before
/// the Rips construction; keeps the exact solvers at desk scale.
const SERIES_CLOUD_CAP: usize = 64;
const LANDSCAPE_LEVELS: usize = 5;
const SUMMARY_GRID: usize = 100;

pub type StageResult<T> = std::result::Result<T, (String, Error)>;

fn stage<T>(name: &str, r: Result<T>) -> StageResult<T> {
    r.map_err(|e| (name.to_string(), e))
}

fn pretty_stage(v: &serde_json::Value) -> StageResult<String> {
    stage("report", pretty(v))
}

pub struct RunSummary {
    pub run_dir: PathBuf,
    pub headline: Vec<String>,
}

/// Relative data paths are resolved against the config file's directory.
pub fn resolve_data_path(config_path: &Path, data: &Path) -> PathBuf {
    if data.is_absolute() {
        data.to_path_buf()
    } else {
        config_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join(data)
    }
}

/// Canonical `key = value` rendering of a resolved config; the run
/// directory name hashes this text, so identical effective settings land
/// in the same directory.
pub fn canonical_config_text(cfg: &PipelineConfig) -> String {
    let layout = match cfg.layout {
        CsvLayout::Wide => "wide",
        CsvLayout::Long => "long",
    };
    let mode = match cfg.mode {
        PipelineMode::Panel => "panel",
        PipelineMode::Cloud => "cloud",
    };
    let normalize = match cfg.normalize {
        Normalize::None => "none",
        Normalize::ZScore => "z",
    };
    let filtration_max = match cfg.filtration_max {
        FiltrationMax::Auto => "auto".to_string(),
        FiltrationMax::Value(v) => v.to_string(),
    };
    let esax_order = match cfg.esax_order {
        tda_core::EsaxOrder::MinMeanMax => "min-mean-max",
        tda_core::EsaxOrder::MaxMinMean => "max-min-mean",
    };
    let dtw_band = cfg
        .dtw_band
        .map(|b| b.to_string())
        .unwrap_or_else(|| "none".to_string());
    let mut lines = vec![
        format!("cluster_k = {}", cfg.cluster_k),
        format!("complex = {}", cfg.complex),
        format!("data = {}", cfg.data.display()),
        format!("dtw_band = {dtw_band}"),
        format!("embedding_delay = {}", cfg.embedding_delay),
        format!("embedding_dim = {}", cfg.embedding_dim),
        format!("esax_order = {esax_order}"),
        format!("filtration_max = {filtration_max}"),
        format!("kmeans_restarts = {}", cfg.kmeans_restarts),
        format!("layout = {layout}"),
        format!("linkage = {}", cfg.linkage.name()),
        format!("max_homology_dim = {}", cfg.max_homology_dim),
        format!("mds_dims = {}", cfg.mds_dims),
        format!("metric = {}", cfg.metric.name()),
        format!("mode = {mode}"),
        format!("normalize = {normalize}"),
        format!("rng_seed = {}", cfg.rng_seed),
        format!("sax_alphabet = {}", cfg.sax_alphabet),
        format!("sax_segments = {}", cfg.sax_segments),
        format!("stride = {}", cfg.stride),
        format!("transform = {}", cfg.transform_name()),
        format!("tsi_epsilon = {}", cfg.tsi_epsilon),
        format!("window_length = {}", cfg.window_length),
    ];
    lines.sort();
    lines.join("\n") + "\n"
}

trait TransformName {
    fn transform_name(&self) -> &'static str;
}

impl TransformName for PipelineConfig {
    fn transform_name(&self) -> &'static str {
        match self.transform {
            Transform::None => "none",
            Transform::LogReturns => "log_returns",
        }
    }
}

fn config_hash(cfg: &PipelineConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_config_text(cfg).as_bytes());
    let digest = hasher.finalize();
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Build the configured distance matrix over a set of equal-length
/// vectors (windows of a panel slice, or rows of a static cloud).
fn build_matrix(
    vectors: &[Vec<f64>],
    labels: &[String],
    cfg: &PipelineConfig,
) -> Result<DistanceMatrix> {
    let dm = match cfg.metric {
        Metric::Euclidean => euclidean_matrix(&PointCloud::new(
            vectors.to_vec(),
            CloudProvenance::WindowEmbedding,
        )?)?,
        Metric::Cosine => cosine_matrix(&PointCloud::new(
            vectors.to_vec(),
            CloudProvenance::WindowEmbedding,
        )?)?,
        Metric::Correlation => correlation_matrix(vectors)?,
        Metric::Dtw => dtw_matrix(vectors, cfg.dtw_band)?,
        Metric::SaxPaa => {
            let feats = vectors
                .iter()
                .map(|v| paa(v, cfg.sax_segments.min(v.len())))
                .collect::<Result<Vec<PaaVector>>>()?;
            matrix_from_paa(&feats)?
        }
    };
    dm.with_labels(labels.to_vec())
}

fn resolve_fmax(cfg: &PipelineConfig, dm: &DistanceMatrix) -> f64 {
    match cfg.filtration_max {
        FiltrationMax::Value(v) => v,
        FiltrationMax::Auto => dm.max_entry().max(1e-12),
    }
}

fn diagram_of(cfg: &PipelineConfig, dm: &DistanceMatrix) -> Result<(PersistenceDiagram, usize, f64)> {
    let fmax = resolve_fmax(cfg, dm);
    let f = rips_filtration(dm, cfg.max_homology_dim + 1, fmax)?;
    let n_simplices = f.len();
    let dgm = reduce(&f)?;
    Ok((dgm, n_simplices, fmax))
}

fn normalize_vec(cfg: &PipelineConfig, v: &[f64]) -> Result<Vec<f64>> {
    match cfg.normalize {
        Normalize::None => Ok(v.to_vec()),
        Normalize::ZScore => z_normalize(v),
    }
}

struct Outputs {
    root: PathBuf,
    diagram_paths: Vec<String>,
    landscape_paths: Vec<String>,
    betti_paths: Vec<String>,
    matrix_paths: Vec<String>,
    clustering_paths: Vec<String>,
    plot_paths: Vec<String>,
}

impl Outputs {
    fn new(root: PathBuf) -> Result<Self> {
        for sub in ["diagrams", "landscapes", "betti", "matrices", "clustering", "plots"] {
            std::fs::create_dir_all(root.join(sub))?;
        }
        Ok(Outputs {
            root,
            diagram_paths: Vec::new(),
            landscape_paths: Vec::new(),
            betti_paths: Vec::new(),
            matrix_paths: Vec::new(),
            clustering_paths: Vec::new(),
            plot_paths: Vec::new(),
        })
    }

    fn write(&self, rel: &str, content: &str) -> Result<()> {
        std::fs::write(self.root.join(rel), content)?;
        Ok(())
    }

    fn write_diagram(&mut self, rel: String, dgm: &PersistenceDiagram) -> Result<()> {
        self.write(&rel, &dgm.to_json()?)?;
        self.diagram_paths.push(rel);
        Ok(())
    }

    fn write_summaries(
        &mut self,
        tag: &str,
        cfg: &PipelineConfig,
        dgm: &PersistenceDiagram,
    ) -> Result<()> {
        for k in 0..=cfg.max_homology_dim.min(dgm.max_dim) {
            let l = landscape(dgm, k, LANDSCAPE_LEVELS, SUMMARY_GRID)?;
            let mut buf = Vec::new();
            l.write_csv(&mut buf)?;
            let rel = format!("landscapes/{tag}_dim{k}.csv");
            self.write(&rel, std::str::from_utf8(&buf).expect("utf8 csv"))?;
            self.landscape_paths.push(rel);

            let b = betti_curve(dgm, k, SUMMARY_GRID)?;
            let mut buf = Vec::new();
            b.write_csv(&mut buf)?;
            let rel = format!("betti/{tag}_dim{k}.csv");
            self.write(&rel, std::str::from_utf8(&buf).expect("utf8 csv"))?;
            self.betti_paths.push(rel);
        }
        Ok(())
    }

    fn write_matrix(&mut self, tag: &str, dm: &DistanceMatrix) -> Result<()> {
        let mut buf = Vec::new();
        dm.write_csv(&mut buf)?;
        let csv_rel = format!("matrices/{tag}.csv");
        self.write(&csv_rel, std::str::from_utf8(&buf).expect("utf8 csv"))?;
        self.matrix_paths.push(csv_rel);
        let json_rel = format!("matrices/{tag}.json");
        self.write(&json_rel, &pretty(&dm.to_json())?)?;
        self.matrix_paths.push(json_rel);
        Ok(())
    }

    fn write_clustering(&mut self, rel: String, content: &str) -> Result<()> {
        self.write(&rel, content)?;
        self.clustering_paths.push(rel);
        Ok(())
    }

    fn write_plot(&mut self, rel: String, svg: String) -> Result<()> {
        self.write(&rel, &svg)?;
        self.plot_paths.push(rel);
        Ok(())
    }
}

fn pretty(v: &serde_json::Value) -> Result<String> {
    serde_json::to_string_pretty(v).map_err(|e| Error::Internal(format!("json: {e}")))
}

fn assignment_csv(ids: &[String], a: &ClusterAssignment) -> String {
    let mut out = String::from("id,cluster\n");
    for (id, l) in ids.iter().zip(&a.labels) {
        out.push_str(&format!("{id},{l}\n"));
    }
    out
}

/// Validity indices for one clustering; the centroid-based indices
/// degrade to absent (rather than failing the run) on degenerate
/// geometry, and the degradation is noted in the manifest.
fn validity_row(
    space: &str,
    method: &str,
    dm: &DistanceMatrix,
    cloud: Option<&PointCloud>,
    a: &ClusterAssignment,
    notes: &mut Vec<String>,
) -> Result<serde_json::Value> {
    let silhouette = cluster::silhouette(dm, a)?;
    let mut report = ValidityReport {
        silhouette,
        davies_bouldin: None,
        calinski_harabasz: None,
    };
    if let Some(c) = cloud {
        match cluster::davies_bouldin(c, a) {
            Ok(v) => report.davies_bouldin = Some(v),
            Err(Error::DegenerateInput(msg)) => {
                notes.push(format!("davies-bouldin absent for {space}/{method}: {msg}"));
            }
            Err(e) => return Err(e),
        }
        match cluster::calinski_harabasz(c, a) {
            Ok(v) => report.calinski_harabasz = Some(v),
            Err(Error::Validation(msg)) => {
                notes.push(format!("calinski-harabasz absent for {space}/{method}: {msg}"));
            }
            Err(e) => return Err(e),
        }
    }
    let mut row = report.to_json();
    row["space"] = json!(space);
    row["method"] = json!(method);
    Ok(row)
}

pub fn run(
    config_path: &Path,
    out_root: &Path,
    seed_override: Option<u64>,
    threads: Option<usize>,
) -> StageResult<RunSummary> {
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| ("config".to_string(), Error::Config(format!("thread pool: {e}"))))?;
            pool.install(|| run_inner(config_path, out_root, seed_override))
        }
        None => run_inner(config_path, out_root, seed_override),
    }
}

fn run_inner(
    config_path: &Path,
    out_root: &Path,
    seed_override: Option<u64>,
) -> StageResult<RunSummary> {
    let started = Instant::now();
    let mut timings: Vec<(String, u128)> = Vec::new();
    let mut mark = Instant::now();
    let mut lap = |name: &str, timings: &mut Vec<(String, u128)>| {
        timings.push((name.to_string(), mark.elapsed().as_millis()));
        mark = Instant::now();
    };

    // config
    let text = stage("config", std::fs::read_to_string(config_path).map_err(Error::from))?;
    let mut cfg = stage("config", ingest::parse_config(&text))?;
    if let Some(seed) = seed_override {
        cfg.rng_seed = seed;
    }

    // ingest
    let data_path = resolve_data_path(config_path, &cfg.data);
    let series = stage("ingest", ingest::load_csv(&data_path, cfg.layout))?;
    let cfg = stage("ingest", ingest::validate_config(cfg, &series))?;
    lap("config+ingest", &mut timings);

    let run_dir = out_root.join(format!("run-{}", config_hash(&cfg)));
    if run_dir.exists() {
        stage("report", std::fs::remove_dir_all(&run_dir).map_err(Error::from))?;
    }
    let mut out = stage("report", Outputs::new(run_dir.clone()))?;

    let result = execute(&cfg, &series, &mut out, &mut timings, lap);
    match result {
        Ok(mut headline) => {
            timings.push(("total".to_string(), started.elapsed().as_millis()));
            let mut t = String::new();
            for (name, ms) in &timings {
                t.push_str(&format!("{name}: {ms} ms\n"));
            }
            if let Err(e) = out.write("timings.txt", &t) {
                let _ = std::fs::remove_dir_all(&run_dir);
                return Err(("report".to_string(), e));
            }
            headline.insert(0, format!("config hash {}", config_hash(&cfg)));
            Ok(RunSummary {
                run_dir,
                headline,
            })
        }
        Err((stage_name, e)) => {
            // partial outputs are removed on failure
            let _ = std::fs::remove_dir_all(&run_dir);
            Err((stage_name, e))
        }
    }
}

fn execute(
    cfg: &PipelineConfig,
    series: &[TimeSeries],
    out: &mut Outputs,
    timings: &mut Vec<(String, u128)>,
    mut lap: impl FnMut(&str, &mut Vec<(String, u128)>),
) -> StageResult<Vec<String>> {
    use rayon::prelude::*;

    let mut notes: Vec<String> = vec![
        "missing values are rejected at load time, never imputed".to_string(),
        "essential classes are excluded from lifetime statistics and total persistence; \
         landscapes and betti curves truncate essential deaths at the filtration bound"
            .to_string(),
        "population (1/n) variance and standard deviation conventions throughout".to_string(),
        format!(
            "embedding (m={}, tau={}) taken from config; fnn selection available in the library \
             (per-series and panel-average)",
            cfg.embedding_dim, cfg.embedding_delay
        ),
    ];
    if cfg.metric == Metric::Dtw {
        notes.push("dtw is a pseudo-metric; diagram stability is not guaranteed".to_string());
    }

    // preprocess
    let transformed: Vec<TimeSeries> = stage(
        "preprocess",
        series
            .iter()
            .map(|s| match cfg.transform {
                Transform::None => Ok(s.clone()),
                Transform::LogReturns => {
                    let values = tda_core::preprocess::log_returns(&s.values)?;
                    TimeSeries::new(s.id.clone(), s.timestamps[1..].to_vec(), values)
                }
            })
            .collect::<Result<Vec<_>>>(),
    )?;
    let ids: Vec<String> = transformed.iter().map(|s| s.id.clone()).collect();
    lap("preprocess", timings);

    let tsi_dims: Vec<usize> = (0..=cfg.max_homology_dim.min(1)).collect();
    let hom_dims: Vec<usize> = (0..=cfg.max_homology_dim).collect();

    let headline;
    let manifest;
    match cfg.mode {
        PipelineMode::Panel => {
            if transformed.len() < 2 {
                return Err((
                    "preprocess".to_string(),
                    Error::Validation("panel mode needs at least 2 series".into()),
                ));
            }
            let len = transformed[0].len();
            if transformed.iter().any(|s| s.len() != len) {
                return Err((
                    "preprocess".to_string(),
                    Error::Validation("panel mode requires equal-length series".into()),
                ));
            }
            let window_sets = stage(
                "preprocess",
                transformed
                    .iter()
                    .map(|s| sliding_windows(s, cfg.window_length, cfg.stride))
                    .collect::<Result<Vec<_>>>(),
            )?;
            let n_windows = window_sets[0].len();
            let starts = window_sets[0].start_indices.clone();

            // per-window distance matrix -> filtration -> diagram
            let per_window: Vec<(PersistenceDiagram, usize, f64)> = stage(
                "persistence",
                (0..n_windows)
                    .into_par_iter()
                    .map(|w| {
                        let vectors = window_sets
                            .iter()
                            .map(|ws| normalize_vec(cfg, &ws.windows[w]))
                            .collect::<Result<Vec<_>>>()?;
                        let dm = build_matrix(&vectors, &ids, cfg)?;
                        diagram_of(cfg, &dm)
                    })
                    .collect::<Result<Vec<_>>>(),
            )?;
            lap("window-topology", timings);

            let window_ids: Vec<String> = starts.iter().map(|s| format!("w{s}")).collect();
            let diagrams: Vec<PersistenceDiagram> =
                per_window.iter().map(|(d, _, _)| d.clone()).collect();
            let simplex_total: usize = per_window.iter().map(|(_, n, _)| n).sum();
            let simplex_max = per_window.iter().map(|(_, n, _)| *n).max().unwrap_or(0);
            let fmax_lo = per_window.iter().map(|(_, _, f)| *f).fold(f64::INFINITY, f64::min);
            let fmax_hi = per_window.iter().map(|(_, _, f)| *f).fold(0.0, f64::max);

            // summaries
            let tsi_series = stage(
                "summaries",
                rolling_tsi(&diagrams, &tsi_dims, cfg.tsi_epsilon)
                    .and_then(|t| t.with_window_ids(window_ids.clone())),
            )?;
            let mut indicator_rows = Vec::with_capacity(n_windows);
            for (w, dgm) in diagrams.iter().enumerate() {
                let stats = stage("summaries", lifetime_stats(dgm, &tsi_dims))?;
                let tp_by_dim: Vec<(usize, f64)> = stage(
                    "summaries",
                    hom_dims
                        .iter()
                        .map(|k| total_persistence(dgm, *k).map(|tp| (*k, tp)))
                        .collect::<Result<Vec<_>>>(),
                )?;
                indicator_rows.push(indicator_json(
                    &window_ids[w],
                    tsi_series.tsi[w],
                    tsi_series.ntsi[w],
                    &tp_by_dim,
                    stats.entropy,
                    stats.variance,
                ));
            }
            let indicators_json = pretty_stage(&json!(indicator_rows))?;
            stage("report", out.write("indicators.json", &indicators_json))?;
            for (w, dgm) in diagrams.iter().enumerate() {
                stage(
                    "report",
                    out.write_diagram(format!("diagrams/window_{:03}.json", w), dgm),
                )?;
                stage("report", out.write_summaries(&format!("window_{w:03}"), cfg, dgm))?;
            }
            lap("summaries", timings);

            // per-series topology for diagram-distance clustering
            let series_diagrams: Vec<PersistenceDiagram> = stage(
                "persistence",
                transformed
                    .par_iter()
                    .map(|s| {
                        let values = normalize_vec(cfg, &s.values)?;
                        let cloud = delay_embed(&values, cfg.embedding_dim, cfg.embedding_delay)?
                            .subsample(SERIES_CLOUD_CAP);
                        let dm = euclidean_matrix(&cloud)?;
                        diagram_of(cfg, &dm).map(|(d, _, _)| d)
                    })
                    .collect::<Result<Vec<_>>>(),
            )?;
            for (s, dgm) in series_diagrams.iter().enumerate() {
                stage(
                    "report",
                    out.write_diagram(format!("diagrams/series_{}.json", ids[s]), dgm),
                )?;
            }
            let n = series_diagrams.len();
            let pairs: Vec<(usize, usize)> =
                (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
            let wass_entries: Vec<((usize, usize), f64)> = stage(
                "summaries",
                pairs
                    .par_iter()
                    .map(|&(i, j)| {
                        let mut total = 0.0;
                        for k in &hom_dims {
                            total +=
                                wasserstein(&series_diagrams[i], &series_diagrams[j], *k, 1.0)?;
                        }
                        Ok(((i, j), total))
                    })
                    .collect::<Result<Vec<_>>>(),
            )?;
            let mut wass_data = vec![0.0; n * n];
            for ((i, j), v) in wass_entries {
                wass_data[i * n + j] = v;
                wass_data[j * n + i] = v;
            }
            let wass = stage(
                "summaries",
                DistanceMatrix::new(ids.clone(), wass_data, "wasserstein-q1-sum", true),
            )?;
            stage("report", out.write_matrix("tda_wasserstein", &wass))?;
            lap("series-topology", timings);

            // symbolic features per series
            let symbolic_feats: Vec<PaaVector> = stage(
                "summaries",
                transformed
                    .iter()
                    .map(|s| {
                        let z = z_normalize(&s.values)?;
                        paa(&z, cfg.sax_segments.min(z.len()))
                    })
                    .collect::<Result<Vec<_>>>(),
            )?;
            let mut symbolic_rows = Vec::with_capacity(n);
            for (s, feats) in symbolic_feats.iter().enumerate() {
                let word = stage("summaries", sax(feats, cfg.sax_alphabet))?;
                let z = stage("summaries", z_normalize(&transformed[s].values))?;
                let eword = stage(
                    "summaries",
                    esax(&z, cfg.sax_segments.min(z.len()), cfg.sax_alphabet),
                )?;
                symbolic_rows.push(json!({
                    "id": ids[s],
                    "sax": word.to_letters(),
                    "esax": eword.to_letters(cfg.esax_order),
                }));
            }
            let words_json = pretty_stage(&json!(symbolic_rows))?;
            stage("report", out.write("clustering/symbolic_words.json", &words_json))?;
            let paa_matrix = stage("summaries", matrix_from_paa(&symbolic_feats))?
                .with_labels(ids.clone())
                .map_err(|e| ("summaries".to_string(), e))?;
            stage("report", out.write_matrix("symbolic_paa", &paa_matrix))?;
            let paa_cloud = stage(
                "summaries",
                PointCloud::new(
                    symbolic_feats.iter().map(|p| p.values.clone()).collect(),
                    CloudProvenance::RawFeatures,
                ),
            )?;

            // clustering in both feature spaces
            if cfg.cluster_k > n {
                return Err((
                    "cluster".to_string(),
                    Error::Config(format!("cluster_k {} exceeds series count {n}", cfg.cluster_k)),
                ));
            }
            let sym_dend = stage("cluster", hierarchical(&paa_matrix, cfg.linkage))?;
            let sym_hier = stage("cluster", cut(&sym_dend, cfg.cluster_k))?;
            let sym_km = stage(
                "cluster",
                kmeans(&paa_cloud, cfg.cluster_k, cfg.rng_seed, cfg.kmeans_restarts),
            )?;
            let tda_dend = stage("cluster", hierarchical(&wass, cfg.linkage))?;
            let tda_hier = stage("cluster", cut(&tda_dend, cfg.cluster_k))?;
            let mds = stage("cluster", classical_mds(&wass, cfg.mds_dims.min(n - 1)))?;
            if mds.kept_dims < cfg.mds_dims.min(n - 1) {
                notes.push(format!(
                    "mds kept {} of {} requested dims (non-positive eigenvalues dropped, mass {:.3e})",
                    mds.kept_dims,
                    cfg.mds_dims.min(n - 1),
                    mds.dropped_negative_mass
                ));
            }
            let tda_km = stage(
                "cluster",
                kmeans(&mds.cloud, cfg.cluster_k, cfg.rng_seed, cfg.kmeans_restarts),
            )?;

            let sym_dend_json = pretty_stage(&sym_dend.to_json())?;
            stage(
                "report",
                out.write_clustering("clustering/symbolic_hierarchical.json".into(), &sym_dend_json),
            )?;
            let tda_dend_json = pretty_stage(&tda_dend.to_json())?;
            stage(
                "report",
                out.write_clustering("clustering/tda_hierarchical.json".into(), &tda_dend_json),
            )?;
            stage(
                "report",
                out.write_clustering(
                    "clustering/symbolic_assignment.csv".into(),
                    &assignment_csv(&ids, &sym_hier),
                ),
            )?;
            stage(
                "report",
                out.write_clustering(
                    "clustering/symbolic_kmeans.csv".into(),
                    &assignment_csv(&ids, &sym_km.assignment),
                ),
            )?;
            stage(
                "report",
                out.write_clustering(
                    "clustering/tda_assignment.csv".into(),
                    &assignment_csv(&ids, &tda_hier),
                ),
            )?;
            stage(
                "report",
                out.write_clustering(
                    "clustering/tda_kmeans.csv".into(),
                    &assignment_csv(&ids, &tda_km.assignment),
                ),
            )?;

            let validity = stage(
                "cluster",
                (|| {
                    Ok(json!([
                        validity_row("symbolic", "kmeans", &paa_matrix, Some(&paa_cloud), &sym_km.assignment, &mut notes)?,
                        validity_row("symbolic", "hierarchical", &paa_matrix, Some(&paa_cloud), &sym_hier, &mut notes)?,
                        validity_row("tda", "kmeans", &wass, Some(&mds.cloud), &tda_km.assignment, &mut notes)?,
                        validity_row("tda", "hierarchical", &wass, Some(&mds.cloud), &tda_hier, &mut notes)?,
                    ]))
                })(),
            )?;
            let validity_json = pretty_stage(&validity)?;
            stage(
                "report",
                out.write_clustering("clustering/validity.json".into(), &validity_json),
            )?;
            lap("cluster", timings);

            // plots for the last window plus the indicator series
            let last = diagrams.last().expect("at least one window");
            stage("report", out.write_plot("plots/diagram.svg".into(), plot::diagram_svg(last)))?;
            stage("report", out.write_plot("plots/barcode.svg".into(), plot::barcode_svg(last)))?;
            let level_dim = cfg.max_homology_dim.min(1);
            let l = stage("summaries", landscape(last, level_dim, LANDSCAPE_LEVELS, SUMMARY_GRID))?;
            stage(
                "report",
                out.write_plot(
                    "plots/landscape.svg".into(),
                    plot::landscape_svg(&plot::levels_from_landscape(&l)),
                ),
            )?;
            let bc = stage("summaries", betti_curve(last, 0, SUMMARY_GRID))?;
            stage(
                "report",
                out.write_plot(
                    "plots/betti.svg".into(),
                    plot::betti_svg(&plot::levels_from_betti(&bc)),
                ),
            )?;
            stage(
                "report",
                out.write_plot("plots/tsi.svg".into(), plot::tsi_svg_from_series(&tsi_series)),
            )?;

            let mean_tsi = tsi_series.tsi.iter().sum::<f64>() / tsi_series.len().max(1) as f64;
            headline = vec![
                format!("{} series, {} windows", n, n_windows),
                format!("mean TSI {:.6}, final TSI {:.6}", mean_tsi, tsi_series.tsi.last().copied().unwrap_or(0.0)),
            ];
            manifest = build_manifest(
                cfg,
                series,
                &notes,
                json_stats_panel(cfg, n, len, n_windows, simplex_total, simplex_max, &tsi_series),
                format!(
                    "{} (resolved per window over [{:.6}, {:.6}])",
                    match cfg.filtration_max {
                        FiltrationMax::Auto => "auto: max pairwise distance".to_string(),
                        FiltrationMax::Value(v) => format!("fixed at {v}"),
                    },
                    fmax_lo,
                    fmax_hi
                ),
            );
            write_report(out, cfg, &manifest, simplex_total, simplex_max)
                .map_err(|e| ("report".to_string(), e))?;
        }
        PipelineMode::Cloud => {
            let cloud_rows = stage("preprocess", PointCloud::from_series_rows(&transformed))?;
            let vectors: Vec<Vec<f64>> = cloud_rows.points.clone();
            let labels: Vec<String> = (0..vectors.len()).map(|i| i.to_string()).collect();
            let dm = stage("metrics", build_matrix(&vectors, &labels, cfg))?;
            let (dgm, n_simplices, fmax) = stage("persistence", diagram_of(cfg, &dm))?;
            lap("cloud-topology", timings);

            stage("report", out.write_diagram("diagrams/diagram.json".into(), &dgm))?;
            stage("report", out.write_summaries("cloud", cfg, &dgm))?;
            stage("report", out.write_matrix("distance", &dm))?;

            let stats = stage("summaries", lifetime_stats(&dgm, &tsi_dims))?;
            let tp_by_dim: Vec<(usize, f64)> = stage(
                "summaries",
                hom_dims
                    .iter()
                    .map(|k| total_persistence(&dgm, *k).map(|tp| (*k, tp)))
                    .collect::<Result<Vec<_>>>(),
            )?;
            let set = tda_core::summaries::lifetimes(&dgm, &tsi_dims, "0");
            let tsi_v = tda_core::summaries::tsi(&set);
            let tp_total: f64 = set.lifetimes.iter().sum();
            let indicator = indicator_json(
                "0",
                tsi_v,
                tsi_v / (tp_total + cfg.tsi_epsilon),
                &tp_by_dim,
                stats.entropy,
                stats.variance,
            );
            let indicators_json = pretty_stage(&json!([indicator]))?;
            stage("report", out.write("indicators.json", &indicators_json))?;

            if cfg.cluster_k > vectors.len() {
                return Err((
                    "cluster".to_string(),
                    Error::Config(format!(
                        "cluster_k {} exceeds point count {}",
                        cfg.cluster_k,
                        vectors.len()
                    )),
                ));
            }
            let dend = stage("cluster", hierarchical(&dm, cfg.linkage))?;
            let flat = stage("cluster", cut(&dend, cfg.cluster_k))?;
            let km = stage(
                "cluster",
                kmeans(&cloud_rows, cfg.cluster_k, cfg.rng_seed, cfg.kmeans_restarts),
            )?;
            let dend_json = pretty_stage(&dend.to_json())?;
            stage(
                "report",
                out.write_clustering("clustering/dendrogram.json".into(), &dend_json),
            )?;
            stage(
                "report",
                out.write_clustering(
                    "clustering/assignment.csv".into(),
                    &assignment_csv(&labels, &flat),
                ),
            )?;
            stage(
                "report",
                out.write_clustering(
                    "clustering/kmeans.csv".into(),
                    &assignment_csv(&labels, &km.assignment),
                ),
            )?;
            let validity = stage(
                "cluster",
                (|| {
                    Ok(json!([
                        validity_row("cloud", "kmeans", &dm, Some(&cloud_rows), &km.assignment, &mut notes)?,
                        validity_row("cloud", "hierarchical", &dm, Some(&cloud_rows), &flat, &mut notes)?,
                    ]))
                })(),
            )?;
            let validity_json = pretty_stage(&validity)?;
            stage(
                "report",
                out.write_clustering("clustering/validity.json".into(), &validity_json),
            )?;
            lap("cluster", timings);

            stage("report", out.write_plot("plots/diagram.svg".into(), plot::diagram_svg(&dgm)))?;
            stage("report", out.write_plot("plots/barcode.svg".into(), plot::barcode_svg(&dgm)))?;
            let level_dim = cfg.max_homology_dim.min(1);
            let l = stage("summaries", landscape(&dgm, level_dim, LANDSCAPE_LEVELS, SUMMARY_GRID))?;
            stage(
                "report",
                out.write_plot(
                    "plots/landscape.svg".into(),
                    plot::landscape_svg(&plot::levels_from_landscape(&l)),
                ),
            )?;
            let bc = stage("summaries", betti_curve(&dgm, 0, SUMMARY_GRID))?;
            stage(
                "report",
                out.write_plot(
                    "plots/betti.svg".into(),
                    plot::betti_svg(&plot::levels_from_betti(&bc)),
                ),
            )?;

            let h0 = dgm.pairs_in_dim(0).count();
            let h1 = if cfg.max_homology_dim >= 1 {
                dgm.pairs_in_dim(1).count()
            } else {
                0
            };
            headline = vec![format!(
                "{} points: {} H0 pairs, {} H1 pairs",
                vectors.len(),
                h0,
                h1
            )];
            let mut summary_stats = BTreeMap::new();
            summary_stats.insert("points".to_string(), vectors.len().to_string());
            summary_stats.insert("h0_pairs".to_string(), h0.to_string());
            summary_stats.insert("h1_pairs".to_string(), h1.to_string());
            summary_stats.insert("simplices".to_string(), n_simplices.to_string());
            summary_stats.insert("tsi".to_string(), format!("{tsi_v:.9}"));
            manifest = build_manifest(
                cfg,
                series,
                &notes,
                summary_stats,
                format!(
                    "{} (resolved to [0, {:.6}])",
                    match cfg.filtration_max {
                        FiltrationMax::Auto => "auto: max pairwise distance".to_string(),
                        FiltrationMax::Value(v) => format!("fixed at {v}"),
                    },
                    fmax
                ),
            );
            write_report(out, cfg, &manifest, n_simplices, n_simplices)
                .map_err(|e| ("report".to_string(), e))?;
        }
    }

    stage("report", manifest.to_json().and_then(|j| out.write("manifest.json", &j)))?;
    Ok(headline)
}

fn json_stats_panel(
    cfg: &PipelineConfig,
    n_series: usize,
    len: usize,
    n_windows: usize,
    simplex_total: usize,
    simplex_max: usize,
    tsi: &TsiSeries,
) -> BTreeMap<String, String> {
    let mean_tsi = tsi.tsi.iter().sum::<f64>() / tsi.len().max(1) as f64;
    let max_tsi = tsi.tsi.iter().cloned().fold(0.0, f64::max);
    let mean_tp = tsi.total_persistence.iter().sum::<f64>() / tsi.len().max(1) as f64;
    let mut m = BTreeMap::new();
    m.insert("series".into(), n_series.to_string());
    m.insert("series_length".into(), len.to_string());
    m.insert("windows".into(), n_windows.to_string());
    m.insert(
        "window_scheme".into(),
        format!("length {} stride {}", cfg.window_length, cfg.stride),
    );
    m.insert("simplices_total".into(), simplex_total.to_string());
    m.insert("simplices_max_per_window".into(), simplex_max.to_string());
    m.insert("tsi_mean".into(), format!("{mean_tsi:.9}"));
    m.insert("tsi_max".into(), format!("{max_tsi:.9}"));
    m.insert("total_persistence_mean".into(), format!("{mean_tp:.9}"));
    m
}

fn build_manifest(
    cfg: &PipelineConfig,
    series: &[TimeSeries],
    notes: &[String],
    summary_stats: BTreeMap<String, String>,
    filtration_range: String,
) -> RunManifest {
    let mut metric_params = BTreeMap::new();
    metric_params.insert("metric".to_string(), cfg.metric.name().to_string());
    match cfg.metric {
        Metric::Dtw => {
            metric_params.insert(
                "dtw_band".to_string(),
                cfg.dtw_band.map(|b| b.to_string()).unwrap_or_else(|| "unbanded".into()),
            );
        }
        Metric::SaxPaa => {
            metric_params.insert("sax_segments".to_string(), cfg.sax_segments.to_string());
            metric_params.insert("sax_alphabet".to_string(), cfg.sax_alphabet.to_string());
        }
        _ => {}
    }
    metric_params.insert(
        "series_diagram_distance".to_string(),
        "wasserstein q=1 summed over homology dims".to_string(),
    );
    let preprocessing_steps = vec![
        "missing data: blank or non-finite cells rejected at load, never imputed; \
         calendar gaps (non-trading days, skipped weeks) are not detected"
            .to_string(),
        format!("transform: {}", cfg.transform_name()),
        format!(
            "normalize: {}",
            match cfg.normalize {
                Normalize::None => "none",
                Normalize::ZScore => "z-score (population std), constants map to zero vectors",
            }
        ),
        format!("windowing: length {} stride {}", cfg.window_length, cfg.stride),
        format!(
            "delay embedding: m={} tau={} (series clouds capped at {} points)",
            cfg.embedding_dim, cfg.embedding_delay, SERIES_CLOUD_CAP
        ),
    ];
    RunManifest {
        data_descriptor: format!(
            "{}: {} series, layout {}",
            cfg.data.display(),
            series.len(),
            match cfg.layout {
                CsvLayout::Wide => "wide",
                CsvLayout::Long => "long",
            }
        ),
        preprocessing_steps,
        metric_params,
        complex_type: "vietoris-rips (clique rule, closed thresholds)".to_string(),
        filtration_range,
        homology_dims: (0..=cfg.max_homology_dim).collect(),
        software_version: format!("tda-cli {}", env!("CARGO_PKG_VERSION")),
        summary_stats,
        validation_notes: notes.to_vec(),
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    }
}

fn write_report(
    out: &mut Outputs,
    cfg: &PipelineConfig,
    _manifest: &RunManifest,
    simplex_total: usize,
    simplex_max: usize,
) -> Result<()> {
    let report = json!({
        "mode": match cfg.mode {
            PipelineMode::Panel => "panel",
            PipelineMode::Cloud => "cloud",
        },
        "manifest": "manifest.json",
        "indicators": "indicators.json",
        "diagrams": out.diagram_paths,
        "landscapes": out.landscape_paths,
        "betti_curves": out.betti_paths,
        "matrices": out.matrix_paths,
        "clustering": out.clustering_paths,
        "plots": out.plot_paths,
        "stats": {
            "simplices_total": simplex_total,
            "simplices_max_per_filtration": simplex_max,
        },
    });
    out.write("report.json", &pretty(&report)?)
}
