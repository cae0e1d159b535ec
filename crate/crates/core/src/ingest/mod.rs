//! Input parsing and validation: flow tables, GeoJSON feature collections,
//! attribute tables and the build configuration.

mod config;
mod geojson;
pub(crate) mod tables;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::geo::{GeoError, Geometry};

pub use config::{BuildConfig, CrsUnits};
pub use geojson::{feature_collection, geometry_to_geojson, parse_features, parse_wbic_features, point_feature};
pub use tables::{
    parse_flow_table, parse_huc_table, parse_kind_table, parse_merge_table, serialize_flow_table, serialize_huc_table,
    serialize_kind_table, serialize_merge_table,
};

/// NHD swamp/marsh feature type, dropped from the waterbody set.
pub const SWAMP_MARSH: &str = "SwampMarsh";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing required column {0}")]
    MissingColumn(String),
    #[error("non-integer value {value:?} in column {column} at row {row}")]
    BadInteger { row: usize, column: String, value: String },
    #[error("bad value {value:?} in column {column} at row {row}: {reason}")]
    BadValue { row: usize, column: String, value: String, reason: String },
    #[error("missing {property} at feature index {index}")]
    MissingProperty { property: String, index: usize },
    #[error("empty geometry at feature index {index}")]
    EmptyGeometry { index: usize },
    #[error("malformed geometry at feature index {index}: {reason}")]
    MalformedGeometry { index: usize, reason: String },
    #[error("invalid geometry at feature index {index}: {source}")]
    InvalidGeometry { index: usize, source: GeoError },
    #[error("expected a GeoJSON FeatureCollection")]
    NotFeatureCollection,
    #[error("invalid COMID {0}: must be a positive integer")]
    InvalidComid(String),
    #[error("invalid HUC12 code {0:?}: expected 12 decimal digits")]
    InvalidHuc(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(#[from] toml::de::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl IngestError {
    /// True for failures of the underlying reader/writer rather than of the data.
    pub fn is_io(&self) -> bool {
        match self {
            IngestError::Io(_) => true,
            IngestError::Csv(e) => e.is_io_error(),
            IngestError::Json(e) => e.is_io(),
            _ => false,
        }
    }
}

/// NHDPlusV2 common identifier. Always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Comid(u64);

impl Comid {
    pub fn new(value: u64) -> Result<Self, IngestError> {
        if value == 0 {
            return Err(IngestError::InvalidComid(value.to_string()));
        }
        Ok(Comid(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

impl fmt::Display for Comid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Comid {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(self.0)
    }
}

impl std::str::FromStr for Comid {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let v: u64 = s.trim().parse().map_err(|_| IngestError::InvalidComid(s.to_string()))?;
        Comid::new(v)
    }
}

/// Twelve-digit watershed boundary code. HUC10 and HUC8 are its prefixes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct HucCode(String);

impl HucCode {
    pub fn new(digits: &str) -> Result<Self, IngestError> {
        let digits = digits.trim();
        if digits.len() != 12 || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(IngestError::InvalidHuc(digits.to_string()));
        }
        Ok(HucCode(digits.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn huc10(&self) -> &str {
        &self.0[..10]
    }

    pub fn huc8(&self) -> &str {
        &self.0[..8]
    }
}

impl fmt::Display for HucCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum FeatureKind {
    RiverSegment,
    Waterbody,
    Watershed,
    LandCover,
    PointSource,
}

/// One hydrological object: its identity, geometry and attributes.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord<T> {
    pub comid: Comid,
    pub kind: FeatureKind,
    pub geometry: Geometry<T>,
    pub ftype: Option<String>,
    pub huc12: Option<HucCode>,
    /// Wisconsin DNR waterbody id, set only for externally keyed lake polygons.
    pub wbic: Option<u64>,
    /// Intersecting objects of the other kind, filled in by the builder.
    pub intersecting: Vec<Comid>,
}

impl<T> FeatureRecord<T> {
    pub fn new(comid: Comid, kind: FeatureKind, geometry: Geometry<T>) -> Self {
        FeatureRecord { comid, kind, geometry, ftype: None, huc12: None, wbic: None, intersecting: Vec::new() }
    }
}

/// Directed drainage edge: water flows from `from` into `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FlowEdge {
    pub from: Comid,
    pub to: Comid,
}

impl FlowEdge {
    pub fn new(from: Comid, to: Comid) -> Self {
        FlowEdge { from, to }
    }
}

/// Drops swamps/marshes and any explicitly excluded waterbodies.
pub fn filter_waterbodies<T: Clone>(records: &[FeatureRecord<T>], exclude: &[Comid]) -> Vec<FeatureRecord<T>> {
    let exclude: BTreeSet<Comid> = exclude.iter().copied().collect();
    records.iter().filter(|r| r.ftype.as_deref() != Some(SWAMP_MARSH) && !exclude.contains(&r.comid)).cloned().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::Polygon;

    fn lake(comid: u64, ftype: Option<&str>) -> FeatureRecord<f64> {
        let mut r = FeatureRecord::new(
            Comid::new(comid).unwrap(),
            FeatureKind::Waterbody,
            Geometry::Polygon(Polygon::rect(0.0, 0.0, 1.0, 1.0).unwrap()),
        );
        r.ftype = ftype.map(str::to_string);
        r
    }

    #[test]
    fn comid_rejects_zero() {
        assert!(Comid::new(0).is_err());
        assert_eq!("42".parse::<Comid>().unwrap().get(), 42);
        assert!("-3".parse::<Comid>().is_err());
    }

    #[test]
    fn huc_prefixes() {
        let h = HucCode::new("070900020504").unwrap();
        assert_eq!(h.huc10(), "0709000205");
        assert_eq!(h.huc8(), "07090002");
        assert!(HucCode::new("07090002050").is_err());
        assert!(HucCode::new("07090002050x").is_err());
    }

    #[test]
    fn filter_drops_marsh_and_excluded() {
        let recs = vec![lake(1, Some("LakePond")), lake(2, Some("SwampMarsh")), lake(3, Some("Reservoir"))];
        let kept = filter_waterbodies(&recs, &[]);
        assert_eq!(kept.iter().map(|r| r.comid.get()).collect::<Vec<_>>(), vec![1, 3]);

        let recs = vec![lake(904140247, None), lake(5, None)];
        let kept = filter_waterbodies(&recs, &[Comid::new(904140247).unwrap()]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].comid.get(), 5);

        let recs = vec![lake(7, Some("LakePond")), lake(8, None)];
        assert_eq!(filter_waterbodies(&recs, &[]), recs);
    }
}
