use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::{assign_hucs, compute_intersections, insert_waterbodies, InsertionStats};
use crate::geo::{Geometry, Point};
use crate::graph::{build_graph, HydroGraph, NodeKind};
use crate::ingest::{filter_waterbodies, BuildConfig, Comid, FeatureRecord, FlowEdge, HucCode, SWAMP_MARSH};
use crate::num::Scalar;

pub struct BuildInputs<T> {
    pub rivers: Vec<FeatureRecord<T>>,
    pub waterbodies: Vec<FeatureRecord<T>>,
    pub watersheds: Vec<FeatureRecord<T>>,
    pub flow: Vec<FlowEdge>,
}

/// Counts gathered while building; serialized as the machine-readable report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct BuildReport {
    pub rivers_parsed: usize,
    pub waterbodies_parsed: usize,
    pub watersheds_parsed: usize,
    pub flow_edges_parsed: usize,
    pub marshes_dropped: usize,
    pub exclusions_applied: usize,
    pub huc_misses: usize,
    pub single_lake_substitutions: usize,
    pub multi_lake_substitutions: usize,
    pub multi_lake_waterbodies: usize,
    pub point_sources_attached: usize,
    pub point_sources_skipped: usize,
    pub nodes: usize,
    pub edges: usize,
    pub waterbody_nodes: usize,
}

impl BuildReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let rows: [(&str, usize); 15] = [
            ("rivers parsed", self.rivers_parsed),
            ("waterbodies parsed", self.waterbodies_parsed),
            ("watersheds parsed", self.watersheds_parsed),
            ("flow edges parsed", self.flow_edges_parsed),
            ("marshes dropped", self.marshes_dropped),
            ("exclusions applied", self.exclusions_applied),
            ("HUC misses", self.huc_misses),
            ("single-lake substitutions", self.single_lake_substitutions),
            ("multi-lake substitutions", self.multi_lake_substitutions),
            ("waterbodies from multi-lake segments", self.multi_lake_waterbodies),
            ("point sources attached", self.point_sources_attached),
            ("point sources skipped", self.point_sources_skipped),
            ("graph nodes", self.nodes),
            ("graph edges", self.edges),
            ("waterbody nodes", self.waterbody_nodes),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<38}{v:>10}");
        }
        s
    }

    fn absorb(&mut self, stats: &InsertionStats) {
        self.single_lake_substitutions = stats.single_lake_rivers;
        self.multi_lake_substitutions = stats.multi_lake_rivers;
        self.multi_lake_waterbodies = stats.multi_lake_waterbodies;
    }
}

pub struct BuildOutput<T> {
    pub edges: Vec<FlowEdge>,
    pub graph: HydroGraph,
    pub kinds: BTreeMap<Comid, NodeKind>,
    pub hucs: BTreeMap<Comid, HucCode>,
    /// Geometry of every graph node that has one.
    pub geometries: BTreeMap<Comid, Geometry<T>>,
    pub centroids: BTreeMap<Comid, Point<T>>,
    pub report: BuildReport,
}

/// Full construction: filter waterbodies, intersect, insert, tag HUC12s.
pub fn build_network<T: Scalar>(inputs: BuildInputs<T>, cfg: &BuildConfig) -> BuildOutput<T> {
    let BuildInputs { rivers, waterbodies, watersheds, flow } = inputs;
    let mut report = BuildReport {
        rivers_parsed: rivers.len(),
        waterbodies_parsed: waterbodies.len(),
        watersheds_parsed: watersheds.len(),
        flow_edges_parsed: flow.len(),
        ..Default::default()
    };

    let excluded = cfg.excluded();
    let excluded_set: BTreeSet<Comid> = excluded.iter().copied().collect();
    report.marshes_dropped = waterbodies.iter().filter(|w| w.ftype.as_deref() == Some(SWAMP_MARSH)).count();
    report.exclusions_applied = waterbodies
        .iter()
        .filter(|w| w.ftype.as_deref() != Some(SWAMP_MARSH) && excluded_set.contains(&w.comid))
        .count();
    let lakes = filter_waterbodies(&waterbodies, &excluded);

    let index = compute_intersections(&rivers, &lakes);
    let (edges, stats) = insert_waterbodies(&flow, &index);
    report.absorb(&stats);

    let endpoints: BTreeSet<Comid> = edges.iter().flat_map(|e| [e.from, e.to]).collect();
    let in_graph: Vec<FeatureRecord<T>> =
        rivers.iter().chain(&lakes).filter(|f| endpoints.contains(&f.comid)).cloned().collect();
    let assignment = assign_hucs(&in_graph, &watersheds);
    report.huc_misses = assignment.misses;

    let kinds: BTreeMap<Comid, NodeKind> =
        lakes.iter().filter(|l| endpoints.contains(&l.comid)).map(|l| (l.comid, NodeKind::Waterbody)).collect();
    let graph = build_graph(&edges, &kinds, &assignment.hucs);
    report.nodes = graph.node_count();
    report.edges = graph.edge_count();
    report.waterbody_nodes = kinds.len();

    let mut geometries = BTreeMap::new();
    let mut centroids = BTreeMap::new();
    for f in in_graph {
        if let Ok(c) = f.geometry.centroid() {
            centroids.insert(f.comid, c);
        }
        geometries.insert(f.comid, f.geometry);
    }

    BuildOutput { edges, graph, kinds, hucs: assignment.hucs, geometries, centroids, report }
}
