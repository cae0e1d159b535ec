//! Waterbody-aware hydrological connectivity graphs.
//!
//! The pipeline reads NHDPlusV2-style flow tables and GeoJSON geometry,
//! substitutes river segments by the waterbodies they intersect, optionally
//! aggregates river nodes within HUC12 watersheds, and answers upstream and
//! downstream questions about pollutant sources and impacted waterbodies.
//!
//! Geometry and analytics are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod aggregate;
pub mod analysis;
pub mod builder;
pub mod geo;
pub mod graph;
pub mod ingest;
pub mod num;

pub use aggregate::{aggregate, aggregate_with_log, verify_connectivity, MergeContext, VerifyReport};
pub use analysis::{classify_lakes, tsi_chla, tsi_tp, AnalysisError, ClassifyConfig, LakeClass};
pub use graph::{build_graph, Direction, GraphError, HydroGraph, Neighborhood, NodeInfo, NodeKind};
pub use ingest::{Comid, FeatureKind, FlowEdge, HucCode, IngestError};
pub use num::Scalar;

pub type Point = geo::Point<f64>;
pub type PolyLine = geo::PolyLine<f64>;
pub type Polygon = geo::Polygon<f64>;
pub type MultiPolygon = geo::MultiPolygon<f64>;
pub type Geometry = geo::Geometry<f64>;
pub type FeatureRecord = ingest::FeatureRecord<f64>;
pub type LakeSamples = analysis::LakeSamples<f64>;
pub type UpstreamSummary = analysis::UpstreamSummary<f64>;
