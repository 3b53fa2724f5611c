//! Topological analysis of time series.
//!
//! The crate implements a full pipeline from raw multivariate series to
//! topological summaries and persistence-based clustering:
//!
//! * [`ingest`] — CSV loading, validation and pipeline configuration;
//! * [`preprocess`] — normalization, returns, windowing, delay embedding
//!   and false-nearest-neighbor embedding selection;
//! * [`symbolic`] — PAA, SAX and eSAX encodings with Gaussian breakpoints;
//! * [`metrics`] — distance matrices (Euclidean, correlation, cosine,
//!   DTW, symbolic) and seeded perturbation;
//! * [`complex`] — Vietoris–Rips filtrations plus a small exact Čech
//!   check of the Rips inclusion;
//! * [`persistence`] — persistent homology over GF(2) by boundary
//!   reduction, with a union-find fast path for dimension zero;
//! * [`summaries`] — landscapes, Betti curves, total persistence,
//!   lifetime statistics, diagram distances and the stability index
//!   series (TSI / nTSI);
//! * [`cluster`] — hierarchical clustering, classical MDS, k-means and
//!   internal validity indices;
//! * [`synth`] — deterministic synthetic datasets for tests and demos.

pub mod cluster;
pub mod complex;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod persistence;
pub mod preprocess;
pub mod summaries;
pub mod symbolic;
pub mod synth;

pub use cluster::{ClusterAssignment, Dendrogram, Linkage, MdsResult, ValidityReport};
pub use complex::{Filtration, FiltrationSimplex};
pub use error::{Error, Result};
pub use ingest::{CsvLayout, PipelineConfig, RunManifest, TimePoint, TimeSeries};
pub use metrics::DistanceMatrix;
pub use persistence::{PersistenceDiagram, PersistencePair};
pub use preprocess::{CloudProvenance, PointCloud, WindowSet};
pub use summaries::{BettiCurve, Landscape, LifetimeSet, TsiSeries};
pub use symbolic::{EsaxOrder, EsaxWord, PaaVector, SaxWord};
