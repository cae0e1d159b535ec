//! JSON documents shared by the CLI and the HTTP API. Both render through
//! these functions so the same snapshot yields the same bytes.

use std::collections::BTreeSet;

use hydrograph::analysis::{upstream_summary, SummaryInputs};
use hydrograph::builder::{attach_point_sources, locate_point_sources, PointSourceRow, SYNTHETIC_ID_BASE};
use hydrograph::geo::{BBox, Point};
use hydrograph::ingest::{feature_collection, geometry_to_geojson, point_feature};
use hydrograph::{Comid, Direction, HydroGraph, NodeKind};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::error::ServiceError;
use crate::workspace::Snapshot;

/// Default cap on features returned by a bounding-box listing.
pub const NODE_CAP: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum View {
    #[default]
    Original,
    Aggregated,
}

impl View {
    fn as_str(self) -> &'static str {
        match self {
            View::Original => "original",
            View::Aggregated => "aggregated",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum QueryError {
    #[error("unknown node {0}")]
    UnknownNode(Comid),
    #[error("no aggregated graph in this workspace")]
    NoAggregation,
    #[error("no HUC12 contains this point")]
    OutsideWatersheds,
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Failed(#[from] ServiceError),
}

impl From<hydrograph::AnalysisError> for QueryError {
    fn from(e: hydrograph::AnalysisError) -> Self {
        match e {
            hydrograph::AnalysisError::Graph(hydrograph::GraphError::UnknownNode(c)) => QueryError::UnknownNode(c),
            other => QueryError::Failed(other.into()),
        }
    }
}

fn graph_for(s: &Snapshot, view: View, c: Comid) -> Result<(&HydroGraph, Comid), QueryError> {
    match view {
        View::Original => Ok((&s.graph, c)),
        View::Aggregated => {
            let agg = s.aggregated.as_ref().ok_or(QueryError::NoAggregation)?;
            Ok((&agg.graph, agg.survivor(c)))
        }
    }
}

fn direction_str(d: Direction) -> &'static str {
    match d {
        Direction::Upstream => "upstream",
        Direction::Downstream => "downstream",
    }
}

pub fn node_properties(g: &HydroGraph, c: Comid) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("comid".into(), json!(c.get()));
    m.insert("kind".into(), json!(g.kind(c).map(NodeKind::as_str)));
    m.insert("huc12".into(), json!(g.huc12(c).map(|h| h.as_str())));
    m
}

fn geojson_for<'a>(s: &'a Snapshot, g: &'a HydroGraph, nodes: impl IntoIterator<Item = Comid>) -> Value {
    feature_collection(nodes.into_iter().filter_map(|c| s.geometries.get(&c).map(|geom| (node_properties(g, c), geom))))
}

fn edges_json(g: &HydroGraph) -> Value {
    Value::Array(g.edges().map(|e| json!({"from": e.from.get(), "to": e.to.get()})).collect())
}

fn ids(it: impl IntoIterator<Item = Comid>) -> Value {
    Value::Array(it.into_iter().map(|c| json!(c.get())).collect())
}

pub fn node(s: &Snapshot, view: View, c: Comid) -> Result<Value, QueryError> {
    let (g, id) = graph_for(s, view, c)?;
    if !g.contains(id) {
        return Err(QueryError::UnknownNode(c));
    }
    let mut m = node_properties(g, id);
    m.insert("requested".into(), json!(c.get()));
    m.insert("view".into(), json!(view.as_str()));
    m.insert("successors".into(), ids(g.successors(id)));
    m.insert("predecessors".into(), ids(g.predecessors(id)));
    m.insert("geometry".into(), s.geometries.get(&id).map(geometry_to_geojson).unwrap_or(Value::Null));
    Ok(Value::Object(m))
}

/// Upstream or downstream graph of a node.
pub fn neighborhood(s: &Snapshot, view: View, c: Comid, direction: Direction) -> Result<Value, QueryError> {
    let (g, id) = graph_for(s, view, c)?;
    if !g.contains(id) {
        return Err(QueryError::UnknownNode(c));
    }
    let nb = g.neighborhood(id, direction).map_err(|_| QueryError::UnknownNode(c))?;
    let sub = &nb.subgraph;
    Ok(json!({
        "source": id.get(),
        "requested": c.get(),
        "direction": direction_str(direction),
        "view": view.as_str(),
        "reachable_count": nb.reachable.len(),
        "waterbodies": ids(nb.reachable_of_kind(NodeKind::Waterbody)),
        "point_sources": ids(nb.reachable_of_kind(NodeKind::PointSource)),
        "nodes": Value::Array(sub.node_ids().map(|n| Value::Object(node_properties(sub, n))).collect()),
        "edges": edges_json(sub),
        "geojson": geojson_for(s, sub, sub.node_ids()),
    }))
}

pub fn summary(s: &Snapshot, c: Comid) -> Result<Value, QueryError> {
    if !s.graph.contains(c) {
        return Err(QueryError::UnknownNode(c));
    }
    let inputs = SummaryInputs {
        geometries: &s.geometries,
        watersheds: &s.watershed_index,
        ag_cover: &s.ag_cover,
        urban_cover: &s.urban_cover,
        units: s.config.units,
        grid_step: s.config.grid_step,
        min_samples: s.config.min_samples,
    };
    let sum = upstream_summary(&s.graph, c, &inputs)?;
    serde_json::to_value(sum).map_err(|e| QueryError::Failed(ServiceError::Invalid(e.to_string())))
}

/// Nodes whose geometry bounding box meets `bbox` (all nodes with geometry when
/// `None`), at most `cap` of them in COMID order.
pub fn nodes_in_bbox(s: &Snapshot, view: View, bbox: Option<BBox<f64>>, cap: usize) -> Result<Value, QueryError> {
    let g = match view {
        View::Original => &s.graph,
        View::Aggregated => &s.aggregated.as_ref().ok_or(QueryError::NoAggregation)?.graph,
    };
    let matched: Vec<Comid> = g
        .node_ids()
        .filter(|c| s.geometries.get(c).is_some_and(|geom| bbox.as_ref().is_none_or(|b| b.intersects(&geom.bbox()))))
        .collect();
    let truncated = matched.len() > cap;
    let mut fc = geojson_for(s, g, matched.iter().copied().take(cap));
    fc["truncated"] = json!(truncated);
    fc["matched"] = json!(matched.len());
    Ok(fc)
}

pub fn parse_bbox(text: &str) -> Result<BBox<f64>, QueryError> {
    let v: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| QueryError::BadRequest(format!("bbox {text:?} is not four numbers")))?;
    match v[..] {
        [a, b, c, d] if a <= c && b <= d && v.iter().all(|x| x.is_finite()) => Ok(BBox::new(a, b, c, d)),
        _ => Err(QueryError::BadRequest("bbox must be minx,miny,maxx,maxy".into())),
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct WhatIf {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub label: String,
}

/// Places a hypothetical source on a throwaway copy of the graph and reports
/// where its water goes. Nothing is persisted.
pub fn whatif(s: &Snapshot, req: &WhatIf) -> Result<Value, QueryError> {
    let location = Point::checked(req.x, req.y).map_err(|e| QueryError::BadRequest(e.to_string()))?;
    let next_id = s
        .graph
        .node_ids()
        .map(Comid::get)
        .filter(|&c| c >= SYNTHETIC_ID_BASE)
        .max()
        .map_or(SYNTHETIC_ID_BASE, |m| m + 1);
    let source_id = Comid::new(next_id).map_err(|e| QueryError::BadRequest(e.to_string()))?;
    let row = PointSourceRow { source_id, label: req.label.clone(), location };
    let (located, _) = locate_point_sources(&[row], &s.watersheds);
    let Some(record) = located.into_iter().next() else {
        return Err(QueryError::OutsideWatersheds);
    };
    let huc = record.huc12.clone();
    let (g, report) = attach_point_sources(&s.graph, &[record], &s.centroids);
    let attached = report.attached.first().map(|&(_, node)| node);

    let source_feature = {
        let mut p = Map::new();
        p.insert("comid".into(), json!(source_id.get()));
        p.insert("kind".into(), json!(NodeKind::PointSource.as_str()));
        p.insert("huc12".into(), json!(huc.as_str()));
        p.insert("label".into(), json!(req.label));
        point_feature(&location, p)
    };
    let (waterbodies, edges, mut fc) = match attached {
        Some(_) => {
            let nb = g.downstream_graph(source_id).map_err(|_| QueryError::UnknownNode(source_id))?;
            let sub = &nb.subgraph;
            let nodes: BTreeSet<Comid> = sub.node_ids().filter(|c| *c != source_id).collect();
            (nb.reachable_of_kind(NodeKind::Waterbody), edges_json(sub), geojson_for(s, sub, nodes))
        }
        None => (Vec::new(), json!([]), feature_collection::<f64>([])),
    };
    if let Some(features) = fc["features"].as_array_mut() {
        features.insert(0, source_feature);
    }
    Ok(json!({
        "label": req.label,
        "x": req.x,
        "y": req.y,
        "source_id": source_id.get(),
        "source_huc12": huc.as_str(),
        "attached_node": attached.map(Comid::get),
        "downstream_waterbodies": ids(waterbodies),
        "edges": edges,
        "subgraph": fc,
    }))
}
