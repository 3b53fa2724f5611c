//! Data loading, validation and pipeline configuration.
//!
//! Input is RFC-4180 CSV in one of two layouts: `wide` (first column is
//! the time axis, one further column per series) or `long` (`id`,
//! `timestamp`, `value` triples). Blank and non-finite cells are rejected
//! rather than imputed so that missing-data handling stays an explicit,
//! reportable user decision.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::cluster::Linkage;
use crate::error::{Error, Result};
use crate::symbolic::EsaxOrder;

/// A point on the time axis: either a plain integer index or an
/// ISO-8601 calendar timestamp. Only the ordering is ever used by the
/// pipeline; distances are index-based throughout.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum TimePoint {
    Index(i64),
    Date(NaiveDate),
    DateTime(NaiveDateTime),
}

impl TimePoint {
    pub fn parse(s: &str) -> Result<TimePoint> {
        let s = s.trim();
        if let Ok(i) = s.parse::<i64>() {
            return Ok(TimePoint::Index(i));
        }
        if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
            return Ok(TimePoint::Date(d));
        }
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
            return Ok(TimePoint::DateTime(dt));
        }
        Err(Error::Validation(format!(
            "unparseable timestamp {s:?} (expected integer index, YYYY-MM-DD or YYYY-MM-DDTHH:MM:SS)"
        )))
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePoint::Index(i) => write!(f, "{i}"),
            TimePoint::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            TimePoint::DateTime(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%S")),
        }
    }
}

/// A single labelled series with strictly increasing timestamps and
/// finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub id: String,
    pub timestamps: Vec<TimePoint>,
    pub values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, timestamps: Vec<TimePoint>, values: Vec<f64>) -> Result<Self> {
        let s = TimeSeries {
            id: id.into(),
            timestamps,
            values,
        };
        s.validate()?;
        Ok(s)
    }

    /// Convenience constructor for index-stamped series.
    pub fn from_values(id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        let timestamps = (0..values.len() as i64).map(TimePoint::Index).collect();
        TimeSeries::new(id, timestamps, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.timestamps.len() {
            return Err(Error::Validation(format!(
                "series {:?}: {} timestamps but {} values",
                self.id,
                self.timestamps.len(),
                self.values.len()
            )));
        }
        if self.values.len() < 2 {
            return Err(Error::Validation(format!(
                "series {:?} has length {}, need at least 2",
                self.id,
                self.values.len()
            )));
        }
        for w in self.timestamps.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Validation(format!(
                    "series {:?}: timestamps not strictly increasing at {} -> {}",
                    self.id, w[0], w[1]
                )));
            }
        }
        if let Some(v) = self.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "series {:?} contains non-finite value {v}",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsvLayout {
    Wide,
    Long,
}

impl FromStr for CsvLayout {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wide" => Ok(CsvLayout::Wide),
            "long" => Ok(CsvLayout::Long),
            other => Err(Error::Config(format!("unknown layout {other:?} (wide|long)"))),
        }
    }
}

fn parse_cell(raw: &str, row: usize, column: &str) -> Result<f64> {
    let t = raw.trim();
    if t.is_empty() {
        return Err(Error::Parse {
            row,
            column: column.to_string(),
            message: "blank cell (missing values are rejected, not imputed)".into(),
        });
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("non-finite value {v}"),
        }),
        Err(_) => Err(Error::Parse {
            row,
            column: column.to_string(),
            message: format!("invalid number {t:?}"),
        }),
    }
}

/// Load a CSV file into one [`TimeSeries`] per column (`wide`) or per id
/// (`long`). Wide rows keep file order; long rows are sorted by timestamp
/// within each id and the series are ordered by id, making the result
/// independent of row order.
pub fn load_csv(path: impl AsRef<Path>, layout: CsvLayout) -> Result<Vec<TimeSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())
        .map_err(csv_err)?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    match layout {
        CsvLayout::Wide => load_wide(&mut reader, &headers),
        CsvLayout::Long => load_long(&mut reader, &headers),
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => Error::Io(std::io::Error::other(e)),
        _ => Error::Validation(format!("malformed csv: {e}")),
    }
}

fn load_wide(reader: &mut csv::Reader<std::fs::File>, headers: &[String]) -> Result<Vec<TimeSeries>> {
    if headers.len() < 2 {
        return Err(Error::Validation(
            "wide layout needs a time column plus at least one series column".into(),
        ));
    }
    let ids = &headers[1..];
    let mut timestamps: Vec<TimePoint> = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = r + 2; // 1-based, after the header line
        if record.len() != headers.len() {
            return Err(Error::Validation(format!(
                "row {row}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        timestamps.push(TimePoint::parse(&record[0])?);
        for (c, id) in ids.iter().enumerate() {
            columns[c].push(parse_cell(&record[c + 1], row, id)?);
        }
    }
    check_unique_timestamps("<time column>", &mut timestamps.clone())?;
    ids.iter()
        .zip(columns)
        .map(|(id, values)| TimeSeries::new(id.clone(), timestamps.clone(), values))
        .collect()
}

fn load_long(reader: &mut csv::Reader<std::fs::File>, headers: &[String]) -> Result<Vec<TimeSeries>> {
    if headers.len() != 3 {
        return Err(Error::Validation(format!(
            "long layout needs exactly (id, timestamp, value) columns, found {}",
            headers.len()
        )));
    }
    let value_col = headers[2].clone();
    let mut by_id: BTreeMap<String, Vec<(TimePoint, f64)>> = BTreeMap::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = r + 2;
        if record.len() != 3 {
            return Err(Error::Validation(format!(
                "row {row}: expected 3 fields, found {}",
                record.len()
            )));
        }
        let id = record[0].to_string();
        let ts = TimePoint::parse(&record[1])?;
        let value = parse_cell(&record[2], row, &value_col)?;
        by_id.entry(id).or_default().push((ts, value));
    }
    by_id
        .into_iter()
        .map(|(id, mut rows)| {
            rows.sort_by(|a, b| a.0.cmp(&b.0));
            let mut timestamps: Vec<TimePoint> = rows.iter().map(|(t, _)| t.clone()).collect();
            check_unique_timestamps(&id, &mut timestamps)?;
            let values = rows.into_iter().map(|(_, v)| v).collect();
            TimeSeries::new(id, timestamps, values)
        })
        .collect()
}

fn check_unique_timestamps(id: &str, sorted: &mut [TimePoint]) -> Result<()> {
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            return Err(Error::Validation(format!(
                "series {id:?}: duplicate timestamp {}",
                w[0]
            )));
        }
    }
    Ok(())
}

/// Write series back to CSV. `wide` requires all series to share one time
/// axis; `long` always works. Values use the shortest round-tripping
/// decimal form, so `load_csv(write_csv(s)) == s`.
pub fn write_csv(path: impl AsRef<Path>, series: &[TimeSeries], layout: CsvLayout) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref()).map_err(csv_err)?;
    match layout {
        CsvLayout::Wide => {
            let first = series
                .first()
                .ok_or_else(|| Error::Validation("nothing to write".into()))?;
            for s in series {
                if s.timestamps != first.timestamps {
                    return Err(Error::Validation(format!(
                        "series {:?} and {:?} have different time axes; use long layout",
                        first.id, s.id
                    )));
                }
            }
            let mut header = vec!["t".to_string()];
            header.extend(series.iter().map(|s| s.id.clone()));
            w.write_record(&header).map_err(csv_err)?;
            for (i, ts) in first.timestamps.iter().enumerate() {
                let mut rec = vec![ts.to_string()];
                rec.extend(series.iter().map(|s| s.values[i].to_string()));
                w.write_record(&rec).map_err(csv_err)?;
            }
        }
        CsvLayout::Long => {
            w.write_record(["id", "timestamp", "value"]).map_err(csv_err)?;
            for s in series {
                for (ts, v) in s.timestamps.iter().zip(&s.values) {
                    w.write_record([s.id.as_str(), &ts.to_string(), &v.to_string()])
                        .map_err(csv_err)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Metric {
    Euclidean,
    Correlation,
    Cosine,
    Dtw,
    SaxPaa,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Correlation => "correlation",
            Metric::Cosine => "cosine",
            Metric::Dtw => "dtw",
            Metric::SaxPaa => "sax-paa",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "correlation" => Ok(Metric::Correlation),
            "cosine" => Ok(Metric::Cosine),
            "dtw" => Ok(Metric::Dtw),
            "sax-paa" => Ok(Metric::SaxPaa),
            other => Err(Error::Config(format!(
                "unknown metric {other:?} (euclidean|correlation|cosine|dtw|sax-paa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiltrationMax {
    /// Resolve to the largest pairwise distance of each matrix, which
    /// guarantees the complex ends connected.
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transform {
    None,
    LogReturns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalize {
    None,
    ZScore,
}

/// How observations are formed from the CSV.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PipelineMode {
    /// Columns are series of a panel; sliding windows drive per-window
    /// topology and the stability index, per-series embeddings drive
    /// diagram-distance clustering.
    Panel,
    /// Rows are observations of a static point cloud; a single
    /// filtration and diagram is computed.
    Cloud,
}

/// Declarative pipeline configuration, parsed from a flat key/value file.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub data: PathBuf,
    pub layout: CsvLayout,
    pub mode: PipelineMode,
    pub metric: Metric,
    pub complex: String,
    pub max_homology_dim: usize,
    pub window_length: usize,
    pub stride: usize,
    pub embedding_dim: usize,
    pub embedding_delay: usize,
    pub sax_segments: usize,
    pub sax_alphabet: usize,
    pub esax_order: EsaxOrder,
    pub filtration_max: FiltrationMax,
    pub tsi_epsilon: f64,
    pub rng_seed: u64,
    pub transform: Transform,
    pub normalize: Normalize,
    pub cluster_k: usize,
    pub linkage: Linkage,
    pub kmeans_restarts: usize,
    pub mds_dims: usize,
    pub dtw_band: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            data: PathBuf::new(),
            layout: CsvLayout::Wide,
            mode: PipelineMode::Panel,
            metric: Metric::Euclidean,
            complex: "rips".into(),
            max_homology_dim: 1,
            window_length: 12,
            stride: 1,
            embedding_dim: 4,
            embedding_delay: 1,
            sax_segments: 8,
            sax_alphabet: 7,
            esax_order: EsaxOrder::MinMeanMax,
            filtration_max: FiltrationMax::Auto,
            tsi_epsilon: 1e-9,
            rng_seed: 0,
            transform: Transform::None,
            normalize: Normalize::ZScore,
            cluster_k: 2,
            linkage: Linkage::Average,
            kmeans_restarts: 8,
            mds_dims: 2,
            dtw_band: None,
        }
    }
}

/// Every key the configuration file accepts, with its documentation.
/// Unknown keys are rejected to catch typos.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("data", "path to the input CSV (required)"),
    ("layout", "csv layout: wide|long (default wide)"),
    ("mode", "panel|cloud (default panel)"),
    ("metric", "euclidean|correlation|cosine|dtw|sax-paa (required)"),
    ("complex", "complex construction, only rips (default rips)"),
    ("max_homology_dim", "0|1|2 (default 1)"),
    ("window_length", "sliding window length (default 12)"),
    ("stride", "window stride (default 1)"),
    ("embedding_dim", "delay-embedding dimension m (default 4)"),
    ("embedding_delay", "delay-embedding lag tau (default 1)"),
    ("sax_segments", "PAA segment count w (default 8)"),
    ("sax_alphabet", "SAX alphabet size a, 2..=20 (default 7)"),
    ("esax_order", "eSAX flattening order: min-mean-max|max-min-mean (default min-mean-max)"),
    ("filtration_max", "positive real or auto (default auto)"),
    ("tsi_epsilon", "nTSI denominator guard (default 1e-9)"),
    ("rng_seed", "seed for all randomized steps (default 0)"),
    ("transform", "none|log_returns (default none)"),
    ("normalize", "none|z (default z)"),
    ("cluster_k", "cluster count for cut and k-means (default 2)"),
    ("linkage", "single|complete|average (default average)"),
    ("kmeans_restarts", "k-means restarts (default 8)"),
    ("mds_dims", "MDS embedding dimension (default 2)"),
    ("dtw_band", "optional Sakoe-Chiba band width (default unbanded)"),
];

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: expected non-negative integer, got {v:?}")))
}

fn parse_positive(key: &str, v: &str) -> Result<usize> {
    let n = parse_usize(key, v)?;
    if n == 0 {
        return Err(Error::Config(format!("{key} must be positive")));
    }
    Ok(n)
}

/// Parse a flat `key = value` configuration file. `#` starts a comment;
/// blank lines are ignored; keys may appear at most once.
pub fn parse_config(text: &str) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    let mut seen: Vec<String> = Vec::new();
    let mut have_data = false;
    let mut have_metric = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value, got {raw:?}", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        if seen.iter().any(|k| k == key) {
            return Err(Error::Config(format!("duplicate key {key:?}")));
        }
        seen.push(key.to_string());
        match key {
            "data" => {
                cfg.data = PathBuf::from(value);
                have_data = true;
            }
            "layout" => cfg.layout = value.parse()?,
            "mode" => {
                cfg.mode = match value {
                    "panel" => PipelineMode::Panel,
                    "cloud" => PipelineMode::Cloud,
                    other => {
                        return Err(Error::Config(format!("unknown mode {other:?} (panel|cloud)")))
                    }
                }
            }
            "metric" => {
                cfg.metric = value.parse()?;
                have_metric = true;
            }
            "complex" => {
                if value != "rips" {
                    return Err(Error::Config(format!(
                        "unknown complex {value:?} (only rips is implemented)"
                    )));
                }
                cfg.complex = value.to_string();
            }
            "max_homology_dim" => {
                let d = parse_usize(key, value)?;
                if d > 2 {
                    return Err(Error::Config("max_homology_dim must be 0, 1 or 2".into()));
                }
                cfg.max_homology_dim = d;
            }
            "window_length" => cfg.window_length = parse_positive(key, value)?,
            "stride" => cfg.stride = parse_positive(key, value)?,
            "embedding_dim" => cfg.embedding_dim = parse_positive(key, value)?,
            "embedding_delay" => cfg.embedding_delay = parse_positive(key, value)?,
            "sax_segments" => cfg.sax_segments = parse_positive(key, value)?,
            "sax_alphabet" => cfg.sax_alphabet = parse_positive(key, value)?,
            "esax_order" => {
                cfg.esax_order = match value {
                    "min-mean-max" => EsaxOrder::MinMeanMax,
                    "max-min-mean" => EsaxOrder::MaxMinMean,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown esax_order {other:?} (min-mean-max|max-min-mean)"
                        )))
                    }
                }
            }
            "filtration_max" => {
                cfg.filtration_max = if value == "auto" {
                    FiltrationMax::Auto
                } else {
                    let v: f64 = value.parse().map_err(|_| {
                        Error::Config(format!("filtration_max: expected auto or a number, got {value:?}"))
                    })?;
                    if !v.is_finite() || v <= 0.0 {
                        return Err(Error::Config("filtration_max must be positive".into()));
                    }
                    FiltrationMax::Value(v)
                }
            }
            "tsi_epsilon" => {
                let v: f64 = value
                    .parse()
                    .map_err(|_| Error::Config(format!("tsi_epsilon: bad number {value:?}")))?;
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::Config("tsi_epsilon must be positive".into()));
                }
                cfg.tsi_epsilon = v;
            }
            "rng_seed" => {
                cfg.rng_seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("rng_seed: bad integer {value:?}")))?
            }
            "transform" => {
                cfg.transform = match value {
                    "none" => Transform::None,
                    "log_returns" => Transform::LogReturns,
                    other => {
                        return Err(Error::Config(format!(
                            "unknown transform {other:?} (none|log_returns)"
                        )))
                    }
                }
            }
            "normalize" => {
                cfg.normalize = match value {
                    "none" => Normalize::None,
                    "z" => Normalize::ZScore,
                    other => return Err(Error::Config(format!("unknown normalize {other:?} (none|z)"))),
                }
            }
            "cluster_k" => cfg.cluster_k = parse_positive(key, value)?,
            "linkage" => cfg.linkage = value.parse()?,
            "kmeans_restarts" => cfg.kmeans_restarts = parse_positive(key, value)?,
            "mds_dims" => cfg.mds_dims = parse_positive(key, value)?,
            "dtw_band" => cfg.dtw_band = Some(parse_positive(key, value)?),
            other => {
                return Err(Error::Config(format!(
                    "unknown config key {other:?}; known keys: {}",
                    CONFIG_KEYS
                        .iter()
                        .map(|(k, _)| *k)
                        .collect::<Vec<_>>()
                        .join(", ")
                )))
            }
        }
    }
    if !have_data {
        return Err(Error::Config("missing required key: data".into()));
    }
    if !have_metric {
        return Err(Error::Config("missing required key: metric".into()));
    }
    Ok(cfg)
}

/// Check configuration invariants against the loaded data. `auto`
/// filtration bounds stay symbolic here; they resolve per distance
/// matrix and are recorded in the manifest.
pub fn validate_config(cfg: PipelineConfig, series: &[TimeSeries]) -> Result<PipelineConfig> {
    if !(2..=20).contains(&cfg.sax_alphabet) {
        return Err(Error::Config(format!(
            "sax_alphabet {} outside [2, 20]",
            cfg.sax_alphabet
        )));
    }
    if cfg.stride > cfg.window_length {
        return Err(Error::Config(format!(
            "stride {} exceeds window_length {}",
            cfg.stride, cfg.window_length
        )));
    }
    if cfg.embedding_dim * cfg.embedding_delay > cfg.window_length {
        return Err(Error::Config(format!(
            "embedding_dim * embedding_delay = {} exceeds window_length {}",
            cfg.embedding_dim * cfg.embedding_delay,
            cfg.window_length
        )));
    }
    if cfg.sax_segments > cfg.window_length {
        return Err(Error::Config(format!(
            "sax_segments {} exceeds window_length {}",
            cfg.sax_segments, cfg.window_length
        )));
    }
    if cfg.mode == PipelineMode::Panel {
        let min_len = series.iter().map(TimeSeries::len).min().unwrap_or(0);
        let effective = match cfg.transform {
            Transform::LogReturns => min_len.saturating_sub(1),
            Transform::None => min_len,
        };
        if cfg.window_length > effective {
            return Err(Error::Config(format!(
                "window_length {} exceeds shortest usable series length {effective}",
                cfg.window_length
            )));
        }
    }
    for s in series {
        s.validate()?;
    }
    Ok(cfg)
}

/// Machine-readable record of the reporting checklist: what data went
/// in, how it was prepared, which metric/complex/dimensions were used,
/// software settings, headline statistics and validation notes. Every
/// field must be populated before the manifest is written.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub data_descriptor: String,
    pub preprocessing_steps: Vec<String>,
    pub metric_params: BTreeMap<String, String>,
    pub complex_type: String,
    pub filtration_range: String,
    pub homology_dims: Vec<usize>,
    pub software_version: String,
    pub summary_stats: BTreeMap<String, String>,
    pub validation_notes: Vec<String>,
    /// Emission timestamp; the only field excluded from determinism
    /// comparisons.
    pub generated_at: String,
}

impl RunManifest {
    pub fn validate_complete(&self) -> Result<()> {
        let mut missing = Vec::new();
        if self.data_descriptor.is_empty() {
            missing.push("data_descriptor");
        }
        if self.preprocessing_steps.is_empty() {
            missing.push("preprocessing_steps");
        }
        if self.metric_params.is_empty() {
            missing.push("metric_params");
        }
        if self.complex_type.is_empty() {
            missing.push("complex_type");
        }
        if self.filtration_range.is_empty() {
            missing.push("filtration_range");
        }
        if self.homology_dims.is_empty() {
            missing.push("homology_dims");
        }
        if self.software_version.is_empty() {
            missing.push("software_version");
        }
        if self.summary_stats.is_empty() {
            missing.push("summary_stats");
        }
        if self.validation_notes.is_empty() {
            missing.push("validation_notes");
        }
        if self.generated_at.is_empty() {
            missing.push("generated_at");
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Internal(format!(
                "manifest incomplete, empty fields: {}",
                missing.join(", ")
            )))
        }
    }

    /// Key-sorted JSON; byte-stable across runs except `generated_at`.
    pub fn to_json(&self) -> Result<String> {
        self.validate_complete()?;
        let value = serde_json::to_value(self)
            .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
        serde_json::to_string_pretty(&value)
            .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))
    }
}
