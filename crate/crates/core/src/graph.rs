//! Immutable directed connectivity graph and reachability queries.
//!
//! Iteration is always in ascending COMID order, so anything serialized from
//! a graph is deterministic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{Comid, FlowEdge, HucCode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(Comid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
pub enum NodeKind {
    #[default]
    River,
    Waterbody,
    PointSource,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::River => "River",
            NodeKind::Waterbody => "Waterbody",
            NodeKind::PointSource => "PointSource",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "river" => Some(NodeKind::River),
            "waterbody" => Some(NodeKind::Waterbody),
            "pointsource" | "point_source" => Some(NodeKind::PointSource),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Downstream,
    Upstream,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeInfo {
    pub kind: NodeKind,
    pub huc12: Option<HucCode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct HydroGraph {
    nodes: BTreeMap<Comid, NodeInfo>,
    out_adj: BTreeMap<Comid, BTreeSet<Comid>>,
    in_adj: BTreeMap<Comid, BTreeSet<Comid>>,
    edge_count: usize,
}

/// Builds a graph whose nodes are the edge endpoints. Unlisted kinds default to River.
pub fn build_graph(
    edges: &[FlowEdge],
    kinds: &BTreeMap<Comid, NodeKind>,
    hucs: &BTreeMap<Comid, HucCode>,
) -> HydroGraph {
    HydroGraph::from_parts(std::iter::empty(), edges, kinds, hucs)
}

impl HydroGraph {
    /// Like [`build_graph`] but also keeps `extra_nodes`, which may be isolated.
    pub fn from_parts(
        extra_nodes: impl IntoIterator<Item = Comid>,
        edges: &[FlowEdge],
        kinds: &BTreeMap<Comid, NodeKind>,
        hucs: &BTreeMap<Comid, HucCode>,
    ) -> Self {
        let mut g = HydroGraph::default();
        let info =
            |c: Comid| NodeInfo { kind: kinds.get(&c).copied().unwrap_or_default(), huc12: hucs.get(&c).cloned() };
        for c in extra_nodes {
            g.insert_node(c, info(c));
        }
        for e in edges {
            if e.from == e.to {
                continue;
            }
            g.insert_node(e.from, info(e.from));
            g.insert_node(e.to, info(e.to));
            g.insert_edge(e.from, e.to);
        }
        g
    }

    fn insert_node(&mut self, c: Comid, info: NodeInfo) {
        self.nodes.entry(c).or_insert(info);
        self.out_adj.entry(c).or_default();
        self.in_adj.entry(c).or_default();
    }

    fn insert_edge(&mut self, from: Comid, to: Comid) {
        if self.out_adj.entry(from).or_default().insert(to) {
            self.in_adj.entry(to).or_default().insert(from);
            self.edge_count += 1;
        }
    }

    /// Copy of the graph with one extra node and its outgoing edges.
    pub(crate) fn with_source(&self, node: Comid, info: NodeInfo, targets: &[Comid]) -> Self {
        let mut g = self.clone();
        g.insert_node(node, info);
        for &t in targets {
            if t != node && g.nodes.contains_key(&t) {
                g.insert_edge(node, t);
            }
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, c: Comid) -> bool {
        self.nodes.contains_key(&c)
    }

    pub fn node(&self, c: Comid) -> Option<&NodeInfo> {
        self.nodes.get(&c)
    }

    pub fn kind(&self, c: Comid) -> Option<NodeKind> {
        self.nodes.get(&c).map(|n| n.kind)
    }

    pub fn huc12(&self, c: Comid) -> Option<&HucCode> {
        self.nodes.get(&c).and_then(|n| n.huc12.as_ref())
    }

    pub fn nodes(&self) -> impl Iterator<Item = (Comid, &NodeInfo)> + '_ {
        self.nodes.iter().map(|(c, n)| (*c, n))
    }

    pub fn node_ids(&self) -> impl Iterator<Item = Comid> + '_ {
        self.nodes.keys().copied()
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = Comid> + '_ {
        self.nodes.iter().filter(move |(_, n)| n.kind == kind).map(|(c, _)| *c)
    }

    /// Edges in ascending (from, to) order.
    pub fn edges(&self) -> impl Iterator<Item = FlowEdge> + '_ {
        self.out_adj.iter().flat_map(|(f, ts)| ts.iter().map(move |t| FlowEdge::new(*f, *t)))
    }

    pub fn edge_list(&self) -> Vec<FlowEdge> {
        self.edges().collect()
    }

    pub fn successors(&self, c: Comid) -> impl Iterator<Item = Comid> + '_ {
        self.out_adj.get(&c).into_iter().flatten().copied()
    }

    pub fn predecessors(&self, c: Comid) -> impl Iterator<Item = Comid> + '_ {
        self.in_adj.get(&c).into_iter().flatten().copied()
    }

    pub fn has_edge(&self, from: Comid, to: Comid) -> bool {
        self.out_adj.get(&from).is_some_and(|s| s.contains(&to))
    }

    pub fn kinds(&self) -> BTreeMap<Comid, NodeKind> {
        self.nodes.iter().map(|(c, n)| (*c, n.kind)).collect()
    }

    pub fn hucs(&self) -> BTreeMap<Comid, HucCode> {
        self.nodes.iter().filter_map(|(c, n)| n.huc12.clone().map(|h| (*c, h))).collect()
    }

    /// Same nodes, every edge reversed.
    pub fn transpose(&self) -> Self {
        HydroGraph {
            nodes: self.nodes.clone(),
            out_adj: self.in_adj.clone(),
            in_adj: self.out_adj.clone(),
            edge_count: self.edge_count,
        }
    }

    fn require(&self, c: Comid) -> Result<(), GraphError> {
        if self.contains(c) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(c))
        }
    }

    fn adjacency(&self, direction: Direction) -> &BTreeMap<Comid, BTreeSet<Comid>> {
        match direction {
            Direction::Downstream => &self.out_adj,
            Direction::Upstream => &self.in_adj,
        }
    }

    /// Breadth-first closure from the neighbors of `src`. `src` itself is only
    /// included when it lies on a cycle.
    fn closure(&self, src: Comid, direction: Direction, stop_at: Option<Comid>) -> BTreeSet<Comid> {
        let adj = self.adjacency(direction);
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<Comid> = VecDeque::new();
        queue.push_back(src);
        while let Some(c) = queue.pop_front() {
            for &n in adj.get(&c).into_iter().flatten() {
                if seen.insert(n) {
                    if Some(n) == stop_at {
                        return seen;
                    }
                    queue.push_back(n);
                }
            }
        }
        seen
    }

    pub fn has_path(&self, src: Comid, dst: Comid) -> Result<bool, GraphError> {
        self.require(src)?;
        self.require(dst)?;
        if src == dst {
            return Ok(true);
        }
        Ok(self.closure(src, Direction::Downstream, Some(dst)).contains(&dst))
    }

    pub fn reachable_from(&self, src: Comid, direction: Direction) -> Result<BTreeSet<Comid>, GraphError> {
        self.require(src)?;
        Ok(self.closure(src, direction, None))
    }

    pub fn induced_subgraph(&self, keep: &BTreeSet<Comid>) -> Result<HydroGraph, GraphError> {
        if let Some(&c) = keep.iter().find(|c| !self.contains(**c)) {
            return Err(GraphError::UnknownNode(c));
        }
        let mut g = HydroGraph::default();
        for &c in keep {
            g.insert_node(c, self.nodes[&c].clone());
        }
        for &c in keep {
            for t in self.successors(c).filter(|t| keep.contains(t)) {
                g.insert_edge(c, t);
            }
        }
        Ok(g)
    }

    /// Reachable set plus the induced subgraph on that set and `src`.
    pub fn neighborhood(&self, src: Comid, direction: Direction) -> Result<Neighborhood, GraphError> {
        let reachable = self.reachable_from(src, direction)?;
        let mut keep = reachable.clone();
        keep.insert(src);
        let subgraph = self.induced_subgraph(&keep)?;
        Ok(Neighborhood { source: src, direction, reachable, subgraph })
    }

    pub fn upstream_graph(&self, src: Comid) -> Result<Neighborhood, GraphError> {
        self.neighborhood(src, Direction::Upstream)
    }

    pub fn downstream_graph(&self, src: Comid) -> Result<Neighborhood, GraphError> {
        self.neighborhood(src, Direction::Downstream)
    }
}

/// Result of an upstream or downstream query.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub source: Comid,
    pub direction: Direction,
    pub reachable: BTreeSet<Comid>,
    pub subgraph: HydroGraph,
}

impl Neighborhood {
    pub fn reachable_of_kind(&self, kind: NodeKind) -> Vec<Comid> {
        self.reachable.iter().copied().filter(|c| self.subgraph.kind(*c) == Some(kind)).collect()
    }
}
