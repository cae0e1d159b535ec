use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use serde::Serialize;

use super::locate_huc;
use crate::geo::{self, Point};
use crate::graph::{HydroGraph, NodeInfo, NodeKind};
use crate::ingest::{Comid, FeatureRecord, HucCode, IngestError};
use crate::num::Scalar;

/// Synthetic point-source ids start here, above the NHD COMID space.
pub const SYNTHETIC_ID_BASE: u64 = 1_000_000_000_000;

/// One row of the point-source CSV (`SOURCE_ID` optional, `LABEL`, `X`, `Y`).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSourceRow<T> {
    pub source_id: Comid,
    pub label: String,
    pub location: Point<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSourceRecord<T> {
    pub source_id: Comid,
    pub label: String,
    pub location: Point<T>,
    pub huc12: HucCode,
}

fn bad(row: usize, column: &str, value: &str, reason: &str) -> IngestError {
    IngestError::BadValue { row, column: column.to_string(), value: value.to_string(), reason: reason.to_string() }
}

/// Reads point sources. Rows without a `SOURCE_ID` get sequential ids from
/// [`SYNTHETIC_ID_BASE`], skipping ids already claimed by other rows.
pub fn parse_point_sources<T: Scalar, R: Read>(input: R) -> Result<Vec<PointSourceRow<T>>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let id_col = find("SOURCE_ID");
    let label_col = find("LABEL").ok_or_else(|| IngestError::MissingColumn("LABEL".into()))?;
    let x_col = find("X").ok_or_else(|| IngestError::MissingColumn("X".into()))?;
    let y_col = find("Y").ok_or_else(|| IngestError::MissingColumn("Y".into()))?;

    let mut raw = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let cell = |col: usize| rec.get(col).unwrap_or("");
        let coord = |col: usize, name: &str| -> Result<T, IngestError> {
            let v: f64 = cell(col).parse().map_err(|_| bad(row, name, cell(col), "expected a number"))?;
            if !v.is_finite() {
                return Err(bad(row, name, cell(col), "coordinate must be finite"));
            }
            Ok(T::from_f64_lossy(v))
        };
        let id = match id_col.map(cell).filter(|s| !s.is_empty()) {
            Some(s) => {
                let v: u64 = s.parse().map_err(|_| IngestError::BadInteger {
                    row,
                    column: "SOURCE_ID".into(),
                    value: s.to_string(),
                })?;
                if v < SYNTHETIC_ID_BASE {
                    return Err(bad(row, "SOURCE_ID", s, "point-source ids must be >= 10^12"));
                }
                Some(v)
            }
            None => None,
        };
        let location = Point::new(coord(x_col, "X")?, coord(y_col, "Y")?);
        raw.push((id, cell(label_col).to_string(), location));
    }

    let mut taken: BTreeSet<u64> = raw.iter().filter_map(|r| r.0).collect();
    if taken.len() != raw.iter().filter(|r| r.0.is_some()).count() {
        return Err(bad(0, "SOURCE_ID", "", "duplicate SOURCE_ID"));
    }
    let mut next = SYNTHETIC_ID_BASE;
    let mut out = Vec::with_capacity(raw.len());
    for (id, label, location) in raw {
        let id = match id {
            Some(v) => v,
            None => {
                while taken.contains(&next) {
                    next += 1;
                }
                taken.insert(next);
                next
            }
        };
        out.push(PointSourceRow { source_id: Comid::new(id)?, label, location });
    }
    Ok(out)
}

/// Resolves each source's HUC12 from the watershed polygons. Sources outside
/// every watershed are returned separately.
pub fn locate_point_sources<T: Scalar>(
    rows: &[PointSourceRow<T>],
    watersheds: &[FeatureRecord<T>],
) -> (Vec<PointSourceRecord<T>>, Vec<Comid>) {
    let mut located = Vec::new();
    let mut outside = Vec::new();
    for r in rows {
        match locate_huc(&r.location, watersheds) {
            Some(h) => located.push(PointSourceRecord {
                source_id: r.source_id,
                label: r.label.clone(),
                location: r.location,
                huc12: h.clone(),
            }),
            None => outside.push(r.source_id),
        }
    }
    (located, outside)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AttachReport {
    /// `(source, node)` pairs that received an edge.
    pub attached: Vec<(Comid, Comid)>,
    /// Sources with no same-HUC12 node, or whose id is already a graph node.
    pub skipped: Vec<Comid>,
}

/// Adds one node per source with a single edge to the nearest same-HUC12 node
/// (by centroid, ties to the lower COMID).
pub fn attach_point_sources<T: Scalar>(
    g: &HydroGraph,
    sources: &[PointSourceRecord<T>],
    node_centroids: &BTreeMap<Comid, Point<T>>,
) -> (HydroGraph, AttachReport) {
    let mut by_huc: BTreeMap<&HucCode, Vec<(Comid, Point<T>)>> = BTreeMap::new();
    for (c, info) in g.nodes() {
        if info.kind == NodeKind::PointSource {
            continue;
        }
        if let (Some(h), Some(p)) = (info.huc12.as_ref(), node_centroids.get(&c)) {
            by_huc.entry(h).or_default().push((c, *p));
        }
    }

    let mut out = g.clone();
    let mut report = AttachReport::default();
    for s in sources {
        let nearest = by_huc.get(&s.huc12).and_then(|cands| {
            cands
                .iter()
                .map(|(c, p)| (geo::squared_distance(p, &s.location), *c))
                .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal).then(a.1.cmp(&b.1)))
        });
        match nearest {
            Some((_, node)) if !out.contains(s.source_id) => {
                let info = NodeInfo { kind: NodeKind::PointSource, huc12: Some(s.huc12.clone()) };
                out = out.with_source(s.source_id, info, &[node]);
                report.attached.push((s.source_id, node));
            }
            _ => report.skipped.push(s.source_id),
        }
    }
    (out, report)
}
