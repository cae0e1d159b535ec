//! HUC12-respecting aggregation of river nodes, and the waterbody connectivity
//! check that the aggregated graph must pass.
//!
//! Every sweep walks the current edge list in ascending `(from, to)` order and
//! applies one decision per edge `F -> T`:
//!
//! * both waterbodies: nothing;
//! * waterbody to river: `T` folds into `F` when `F` is its only upstream node;
//! * river to waterbody: `F` folds into `T` when `T` is its only downstream node;
//! * river to river: `F` folds into `T`, provided any other upstream node of `T`
//!   is a river draining only into `T` (and `F` too drains only into `T`).
//!
//! Merges never cross a HUC12 boundary and never touch untagged nodes or point
//! sources. Sweeps repeat until one changes nothing.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Direction, HydroGraph, NodeKind};
use crate::ingest::{Comid, FlowEdge, HucCode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AggregateError {
    #[error("waterbody sets differ: {only_original} only in the original graph, {only_aggregated} only in the aggregated graph")]
    WaterbodySetsDiffer { only_original: usize, only_aggregated: usize },
}

/// Edge list plus node tags, and the survivor of every node merged so far.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MergeContext {
    pub edges: Vec<FlowEdge>,
    pub kind: BTreeMap<Comid, NodeKind>,
    pub huc12: BTreeMap<Comid, HucCode>,
    pub merged_into: BTreeMap<Comid, Comid>,
}

impl MergeContext {
    pub fn new(edges: Vec<FlowEdge>, kind: BTreeMap<Comid, NodeKind>, huc12: BTreeMap<Comid, HucCode>) -> Self {
        MergeContext { edges, kind, huc12, merged_into: BTreeMap::new() }
    }

    /// Context over every node of `g`, isolated ones included.
    pub fn from_graph(g: &HydroGraph) -> Self {
        MergeContext::new(g.edge_list(), g.kinds(), g.hucs())
    }

    pub fn kind_of(&self, c: Comid) -> NodeKind {
        self.kind.get(&c).copied().unwrap_or_default()
    }

    /// Node that `c` was folded into, or `c` itself.
    pub fn survivor(&self, mut c: Comid) -> Comid {
        while let Some(&next) = self.merged_into.get(&c) {
            c = next;
        }
        c
    }

    /// Edge endpoints and tagged nodes that have not been merged away.
    pub fn nodes(&self) -> BTreeSet<Comid> {
        self.edges
            .iter()
            .flat_map(|e| [e.from, e.to])
            .chain(self.kind.keys().copied())
            .filter(|c| !self.merged_into.contains_key(c))
            .collect()
    }

    pub fn waterbody_count(&self) -> usize {
        self.nodes().into_iter().filter(|c| self.kind_of(*c) == NodeKind::Waterbody).count()
    }

    pub fn to_graph(&self) -> HydroGraph {
        HydroGraph::from_parts(self.nodes(), &self.edges, &self.kind, &self.huc12)
    }
}

/// Which branch of the decision tree produced a merge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeRule {
    RiverIntoUpstreamWaterbody,
    RiverIntoDownstreamWaterbody,
    RiverIntoRiver,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MergeRecord {
    pub sweep: usize,
    pub merged: Comid,
    pub survivor: Comid,
    pub rule: MergeRule,
    pub merged_huc12: HucCode,
    pub survivor_huc12: HucCode,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Aggregation {
    pub context: MergeContext,
    /// Sweeps run, including the final one that changed nothing.
    pub sweeps: usize,
    /// Node count before the first sweep and after each sweep.
    pub node_counts: Vec<usize>,
    pub merges: Vec<MergeRecord>,
}

pub fn aggregate(ctx: MergeContext) -> MergeContext {
    aggregate_with_log(ctx).context
}

struct Work<'a> {
    ctx: &'a MergeContext,
    out: BTreeMap<Comid, BTreeSet<Comid>>,
    inn: BTreeMap<Comid, BTreeSet<Comid>>,
    alive: BTreeSet<Comid>,
    merged_into: BTreeMap<Comid, Comid>,
}

impl Work<'_> {
    fn only(set: Option<&BTreeSet<Comid>>, c: Comid) -> bool {
        set.is_some_and(|s| s.len() == 1 && s.contains(&c))
    }

    fn drains_only_into(&self, from: Comid, to: Comid) -> bool {
        Self::only(self.out.get(&from), to)
    }

    fn fed_only_by(&self, to: Comid, from: Comid) -> bool {
        Self::only(self.inn.get(&to), from)
    }

    fn find(&self, mut c: Comid) -> Comid {
        while let Some(&next) = self.merged_into.get(&c) {
            c = next;
        }
        c
    }

    fn decide(&self, f: Comid, t: Comid) -> Option<(Comid, Comid, MergeRule)> {
        let (kf, kt) = (self.ctx.kind_of(f), self.ctx.kind_of(t));
        if kf == NodeKind::PointSource || kt == NodeKind::PointSource {
            return None;
        }
        let hf = self.ctx.huc12.get(&f)?;
        let ht = self.ctx.huc12.get(&t)?;
        if hf != ht {
            return None;
        }
        match (kf, kt) {
            (NodeKind::Waterbody, NodeKind::Waterbody) => None,
            (NodeKind::Waterbody, _) => self.fed_only_by(t, f).then_some((t, f, MergeRule::RiverIntoUpstreamWaterbody)),
            (_, NodeKind::Waterbody) => {
                self.drains_only_into(f, t).then_some((f, t, MergeRule::RiverIntoDownstreamWaterbody))
            }
            _ => {
                let others: Vec<Comid> = self.inn.get(&t).into_iter().flatten().copied().filter(|&o| o != f).collect();
                let ok = others.is_empty()
                    || (self.drains_only_into(f, t)
                        && others.iter().all(|&o| {
                            self.drains_only_into(o, t)
                                && self.ctx.kind_of(o) != NodeKind::Waterbody
                                && self.ctx.huc12.get(&o) == Some(ht)
                        }));
                ok.then_some((f, t, MergeRule::RiverIntoRiver))
            }
        }
    }

    fn merge(&mut self, x: Comid, y: Comid) {
        let preds = self.inn.remove(&x).unwrap_or_default();
        let succs = self.out.remove(&x).unwrap_or_default();
        for p in preds {
            let po = self.out.entry(p).or_default();
            po.remove(&x);
            if p != y {
                po.insert(y);
                self.inn.entry(y).or_default().insert(p);
            }
        }
        for s in succs {
            let si = self.inn.entry(s).or_default();
            si.remove(&x);
            if s != y {
                si.insert(y);
                self.out.entry(y).or_default().insert(s);
            }
        }
        self.alive.remove(&x);
        self.merged_into.insert(x, y);
    }

    fn edges(&self) -> Vec<(Comid, Comid)> {
        self.out.iter().flat_map(|(&f, ts)| ts.iter().map(move |&t| (f, t))).collect()
    }
}

/// Runs sweeps to a fixpoint, keeping every merge in order.
pub fn aggregate_with_log(ctx: MergeContext) -> Aggregation {
    let mut w = Work {
        ctx: &ctx,
        out: BTreeMap::new(),
        inn: BTreeMap::new(),
        alive: ctx.nodes(),
        merged_into: ctx.merged_into.clone(),
    };
    for e in &ctx.edges {
        let (f, t) = (w.find(e.from), w.find(e.to));
        if f != t {
            w.out.entry(f).or_default().insert(t);
            w.inn.entry(t).or_default().insert(f);
        }
    }

    let mut node_counts = vec![w.alive.len()];
    let mut merges = Vec::new();
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let before = merges.len();
        for (f0, t0) in w.edges() {
            let (f, t) = (w.find(f0), w.find(t0));
            if f == t {
                continue;
            }
            if let Some((x, y, rule)) = w.decide(f, t) {
                merges.push(MergeRecord {
                    sweep: sweeps,
                    merged: x,
                    survivor: y,
                    rule,
                    merged_huc12: ctx.huc12[&x].clone(),
                    survivor_huc12: ctx.huc12[&y].clone(),
                });
                w.merge(x, y);
            }
        }
        node_counts.push(w.alive.len());
        if merges.len() == before {
            break;
        }
    }

    let edges = w.edges().into_iter().map(|(f, t)| FlowEdge::new(f, t)).collect();
    let compressed = w.merged_into.keys().map(|&c| (c, w.find(c))).collect();
    let context = MergeContext { edges, kind: ctx.kind.clone(), huc12: ctx.huc12.clone(), merged_into: compressed };
    Aggregation { context, sweeps, node_counts, merges }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Mismatch {
    pub from: Comid,
    pub to: Comid,
    pub original: bool,
    pub aggregated: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub checked_pairs: usize,
    pub mismatches: Vec<Mismatch>,
}

fn waterbodies_reached(g: &HydroGraph, u: Comid, all: &[Comid]) -> Vec<bool> {
    let mut reach = g.reachable_from(u, Direction::Downstream).unwrap_or_default();
    reach.insert(u);
    all.iter().map(|v| reach.contains(v)).collect()
}

/// Compares waterbody-to-waterbody reachability over every ordered pair,
/// `(u, u)` included. Waterbodies are never merged, so each is its own survivor.
pub fn verify_connectivity(original: &HydroGraph, aggregated: &HydroGraph) -> Result<VerifyReport, AggregateError> {
    let wo: Vec<Comid> = original.nodes_of_kind(NodeKind::Waterbody).collect();
    let wa: BTreeSet<Comid> = aggregated.nodes_of_kind(NodeKind::Waterbody).collect();
    let only_original = wo.iter().filter(|c| !wa.contains(c)).count();
    let only_aggregated = wa.len() - (wo.len() - only_original);
    if only_original > 0 || only_aggregated > 0 {
        return Err(AggregateError::WaterbodySetsDiffer { only_original, only_aggregated });
    }

    let mismatches: Vec<Vec<Mismatch>> = wo
        .par_iter()
        .map(|&u| {
            let a = waterbodies_reached(original, u, &wo);
            let b = waterbodies_reached(aggregated, u, &wo);
            wo.iter()
                .zip(a.into_iter().zip(b))
                .filter(|(_, (x, y))| x != y)
                .map(|(&v, (x, y))| Mismatch { from: u, to: v, original: x, aggregated: y })
                .collect()
        })
        .collect();
    Ok(VerifyReport { checked_pairs: wo.len() * wo.len(), mismatches: mismatches.into_iter().flatten().collect() })
}
