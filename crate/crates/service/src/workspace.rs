//! On-disk workspace layout and the immutable snapshot loaded from it.
//!
//! | file                          | content                                   |
//! |-------------------------------|-------------------------------------------|
//! | `edges.csv`                   | `FROMCOMID,TOCOMID`                       |
//! | `kinds.csv`                   | `COMID,KIND` for every node               |
//! | `hucs.csv`                    | `COMID,HUC12`                             |
//! | `rivers.geojson`              | river segment geometry (optional)         |
//! | `waterbodies.geojson`         | waterbody geometry (optional)             |
//! | `watersheds.geojson`          | HUC12 polygons (optional)                 |
//! | `ag.geojson`, `urban.geojson` | land cover polygons (optional)            |
//! | `sources.csv`                 | `SOURCE_ID,LABEL,X,Y,HUC12` (optional)    |
//! | `edges_agg.csv`, `merges.csv` | aggregated graph and survivors (optional) |
//! | `build.toml`                  | build configuration (optional)            |

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};

use hydrograph::builder::{locate_point_sources, parse_point_sources, PointSourceRecord};
use hydrograph::geo::{Geometry, Point, Polygon};
use hydrograph::ingest::FeatureRecord;
use hydrograph::ingest::{
    parse_features, parse_flow_table, parse_huc_table, parse_kind_table, parse_merge_table, BuildConfig,
};
use hydrograph::{Comid, FeatureKind, HucCode, HydroGraph, NodeKind};

use crate::error::ServiceError;

pub const EDGES: &str = "edges.csv";
pub const KINDS: &str = "kinds.csv";
pub const HUCS: &str = "hucs.csv";
pub const RIVERS: &str = "rivers.geojson";
pub const WATERBODIES: &str = "waterbodies.geojson";
pub const WATERSHEDS: &str = "watersheds.geojson";
pub const AG_COVER: &str = "ag.geojson";
pub const URBAN_COVER: &str = "urban.geojson";
pub const SOURCES: &str = "sources.csv";
pub const EDGES_AGG: &str = "edges_agg.csv";
pub const MERGES: &str = "merges.csv";
pub const CONFIG: &str = "build.toml";

/// Files copied verbatim when a workspace is rewritten elsewhere.
pub const STATIC_FILES: [&str; 6] = [RIVERS, WATERBODIES, WATERSHEDS, AG_COVER, URBAN_COVER, CONFIG];

pub fn read_text(path: &Path) -> Result<String, ServiceError> {
    std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ServiceError> {
    std::fs::write(path, text).map_err(|e| ServiceError::io(path, e))
}

/// Aggregated graph plus the survivor of every merged node.
#[derive(Debug, Clone)]
pub struct Aggregated {
    pub graph: HydroGraph,
    pub merged_into: BTreeMap<Comid, Comid>,
}

impl Aggregated {
    pub fn survivor(&self, mut c: Comid) -> Comid {
        while let Some(&next) = self.merged_into.get(&c) {
            c = next;
        }
        c
    }
}

#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    /// Hash of every file read, hex encoded; echoed as `x-snapshot-id`.
    pub id: String,
    pub graph: HydroGraph,
    pub aggregated: Option<Aggregated>,
    pub geometries: BTreeMap<Comid, Geometry<f64>>,
    pub centroids: BTreeMap<Comid, Point<f64>>,
    pub watersheds: Vec<FeatureRecord<f64>>,
    pub watershed_index: BTreeMap<HucCode, Vec<Polygon<f64>>>,
    pub ag_cover: Vec<Polygon<f64>>,
    pub urban_cover: Vec<Polygon<f64>>,
    pub sources: Vec<PointSourceRecord<f64>>,
    pub config: BuildConfig,
}

struct Loader<'a> {
    dir: &'a Path,
    hasher: DefaultHasher,
}

impl Loader<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn required(&mut self, name: &str) -> Result<String, ServiceError> {
        let text = read_text(&self.path(name))?;
        (name, &text).hash(&mut self.hasher);
        Ok(text)
    }

    fn optional(&mut self, name: &str) -> Result<Option<String>, ServiceError> {
        if self.path(name).exists() {
            self.required(name).map(Some)
        } else {
            Ok(None)
        }
    }

    fn features(&mut self, name: &str, kind: FeatureKind) -> Result<Vec<FeatureRecord<f64>>, ServiceError> {
        match self.optional(name)? {
            Some(text) => parse_features(&text, kind).map_err(|e| ServiceError::input(&self.path(name), e)),
            None => Ok(Vec::new()),
        }
    }
}

impl Snapshot {
    /// Snapshot over a bare graph, as the CLI uses for edge-list inputs.
    pub fn from_graph(graph: HydroGraph) -> Self {
        let mut hasher = DefaultHasher::new();
        graph.edge_list().hash(&mut hasher);
        Snapshot { id: format!("{:016x}", hasher.finish()), graph, ..Snapshot::default() }
    }

    pub fn load(dir: &Path) -> Result<Self, ServiceError> {
        let mut ld = Loader { dir, hasher: DefaultHasher::new() };
        let bad = |name: &str| {
            let path = dir.join(name);
            move |e| ServiceError::input(&path, e)
        };

        let edges = parse_flow_table(ld.required(EDGES)?.as_bytes()).map_err(bad(EDGES))?;
        let kinds = parse_kind_table(ld.required(KINDS)?.as_bytes()).map_err(bad(KINDS))?;
        let hucs = parse_huc_table(ld.required(HUCS)?.as_bytes()).map_err(bad(HUCS))?;
        let graph = HydroGraph::from_parts(kinds.keys().copied(), &edges, &kinds, &hucs);

        let config = match ld.optional(CONFIG)? {
            Some(text) => BuildConfig::from_toml(&text).map_err(bad(CONFIG))?,
            None => BuildConfig::default(),
        };

        let mut geometries = BTreeMap::new();
        for rec in ld
            .features(RIVERS, FeatureKind::RiverSegment)?
            .into_iter()
            .chain(ld.features(WATERBODIES, FeatureKind::Waterbody)?)
        {
            geometries.insert(rec.comid, rec.geometry);
        }
        let centroids = geometries.iter().filter_map(|(c, g)| Some((*c, g.centroid().ok()?))).collect();

        let watersheds = ld.features(WATERSHEDS, FeatureKind::Watershed)?;
        let watershed_index = hydrograph::analysis::SummaryInputs::watershed_index(&watersheds);
        let ag_cover =
            hydrograph::analysis::SummaryInputs::flatten_cover(&ld.features(AG_COVER, FeatureKind::LandCover)?);
        let urban_cover =
            hydrograph::analysis::SummaryInputs::flatten_cover(&ld.features(URBAN_COVER, FeatureKind::LandCover)?);

        let sources = match ld.optional(SOURCES)? {
            Some(text) => {
                let rows = parse_point_sources(text.as_bytes()).map_err(bad(SOURCES))?;
                locate_point_sources(&rows, &watersheds).0
            }
            None => Vec::new(),
        };

        let aggregated = match (ld.optional(EDGES_AGG)?, ld.optional(MERGES)?) {
            (Some(e), Some(m)) => {
                let agg_edges = parse_flow_table(e.as_bytes()).map_err(bad(EDGES_AGG))?;
                let merged_into = parse_merge_table(m.as_bytes()).map_err(bad(MERGES))?;
                let survivors = graph.node_ids().filter(|c| !merged_into.contains_key(c));
                let graph = HydroGraph::from_parts(survivors, &agg_edges, &kinds, &hucs);
                Some(Aggregated { graph, merged_into })
            }
            (None, None) => None,
            _ => {
                return Err(ServiceError::Invalid(format!(
                    "{}: {EDGES_AGG} and {MERGES} must be present together",
                    dir.display()
                )))
            }
        };
        if let Some(agg) = &aggregated {
            if let Some(c) = agg.merged_into.keys().find(|c| kinds.get(c) == Some(&NodeKind::Waterbody)) {
                return Err(ServiceError::Invalid(format!("{MERGES}: waterbody {c} is recorded as merged")));
            }
        }

        Ok(Snapshot {
            id: format!("{:016x}", ld.hasher.finish()),
            graph,
            aggregated,
            geometries,
            centroids,
            watersheds,
            watershed_index,
            ag_cover,
            urban_cover,
            sources,
            config,
        })
    }
}

/// Writes `SOURCE_ID,LABEL,X,Y,HUC12`.
pub fn serialize_sources(sources: &[PointSourceRecord<f64>]) -> Result<String, ServiceError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let invalid = |e: csv::Error| ServiceError::Invalid(e.to_string());
    w.write_record(["SOURCE_ID", "LABEL", "X", "Y", "HUC12"]).map_err(invalid)?;
    for s in sources {
        w.write_record([
            s.source_id.to_string(),
            s.label.clone(),
            s.location.x.to_string(),
            s.location.y.to_string(),
            s.huc12.as_str().to_string(),
        ])
        .map_err(invalid)?;
    }
    let bytes = w.into_inner().map_err(|e| ServiceError::Invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ServiceError::Invalid(e.to_string()))
}
