//! Graph construction: river/waterbody intersections, waterbody insertion into
//! the flow table, HUC12 tagging, point-source attachment and external lake
//! matching.

mod pipeline;
mod sources;

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::geo::{self, Geometry};
use crate::ingest::{Comid, FeatureRecord, FlowEdge, HucCode};
use crate::num::Scalar;

pub use pipeline::{build_network, BuildInputs, BuildOutput, BuildReport};
pub use sources::{
    attach_point_sources, locate_point_sources, parse_point_sources, AttachReport, PointSourceRecord, PointSourceRow,
    SYNTHETIC_ID_BASE,
};

/// Which waterbodies each river segment touches, and the reverse.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct IntersectionIndex {
    pub river_to_lakes: BTreeMap<Comid, Vec<Comid>>,
    pub lake_to_rivers: BTreeMap<Comid, Vec<Comid>>,
}

impl IntersectionIndex {
    /// Builds both directions from `(river, lake)` pairs, registering every id in
    /// `rivers`/`lakes` even when it has no partner.
    pub fn from_pairs(
        rivers: impl IntoIterator<Item = Comid>,
        lakes: impl IntoIterator<Item = Comid>,
        pairs: impl IntoIterator<Item = (Comid, Comid)>,
    ) -> Self {
        let mut idx = IntersectionIndex::default();
        for r in rivers {
            idx.river_to_lakes.entry(r).or_default();
        }
        for l in lakes {
            idx.lake_to_rivers.entry(l).or_default();
        }
        for (r, l) in pairs {
            idx.river_to_lakes.entry(r).or_default().push(l);
            idx.lake_to_rivers.entry(l).or_default().push(r);
        }
        for v in idx.river_to_lakes.values_mut().chain(idx.lake_to_rivers.values_mut()) {
            v.sort_unstable();
            v.dedup();
        }
        idx
    }

    pub fn lakes_of(&self, river: Comid) -> &[Comid] {
        self.river_to_lakes.get(&river).map_or(&[], Vec::as_slice)
    }

    pub fn is_symmetric(&self) -> bool {
        self.river_to_lakes
            .iter()
            .all(|(r, ls)| ls.iter().all(|l| self.lake_to_rivers.get(l).is_some_and(|rs| rs.contains(r))))
            && self
                .lake_to_rivers
                .iter()
                .all(|(l, rs)| rs.iter().all(|r| self.river_to_lakes.get(r).is_some_and(|ls| ls.contains(l))))
    }
}

/// Tests every river segment against every waterbody polygon (bounding-box
/// prefiltered, parallel over rivers).
pub fn compute_intersections<T: Scalar>(rivers: &[FeatureRecord<T>], lakes: &[FeatureRecord<T>]) -> IntersectionIndex {
    let lake_boxes: Vec<_> = lakes.iter().map(|l| l.geometry.bbox()).collect();
    let pairs: Vec<(Comid, Comid)> = rivers
        .par_iter()
        .flat_map_iter(|r| {
            let Geometry::Line(line) = &r.geometry else {
                return Vec::new();
            };
            let lb = line.bbox();
            lakes
                .iter()
                .zip(&lake_boxes)
                .filter(|(_, b)| lb.intersects(b))
                .filter_map(|(l, _)| {
                    let polys = l.geometry.polygons()?;
                    geo::intersects(line, polys).then_some((r.comid, l.comid))
                })
                .collect()
        })
        .collect();
    IntersectionIndex::from_pairs(rivers.iter().map(|r| r.comid), lakes.iter().map(|l| l.comid), pairs)
}

/// Copies the index into each record's `intersecting` list.
pub fn annotate_intersections<T>(records: &mut [FeatureRecord<T>], index: &IntersectionIndex) {
    for r in records {
        let list = index.river_to_lakes.get(&r.comid).or_else(|| index.lake_to_rivers.get(&r.comid));
        r.intersecting = list.cloned().unwrap_or_default();
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct InsertionStats {
    /// River segments replaced by their single intersecting waterbody.
    pub single_lake_rivers: usize,
    /// River segments replaced by two or more waterbodies.
    pub multi_lake_rivers: usize,
    /// Distinct waterbodies introduced through multi-lake replacement.
    pub multi_lake_waterbodies: usize,
}

/// Substitutes river segments by the waterbodies they intersect.
///
/// First every segment with exactly one waterbody is renamed to it. Then every
/// segment with several waterbodies is fanned out: each incoming and outgoing
/// edge is repeated once per waterbody, with no edges among those waterbodies.
/// Self-loops are dropped and the result is deduplicated and sorted.
pub fn insert_waterbodies(edges: &[FlowEdge], index: &IntersectionIndex) -> (Vec<FlowEdge>, InsertionStats) {
    let mut stats = InsertionStats::default();
    let mut multi_lakes = BTreeSet::new();
    let touched: BTreeSet<Comid> = edges.iter().flat_map(|e| [e.from, e.to]).collect();
    for r in &touched {
        match index.lakes_of(*r) {
            [] => {}
            [_] => stats.single_lake_rivers += 1,
            many => {
                stats.multi_lake_rivers += 1;
                multi_lakes.extend(many.iter().copied());
            }
        }
    }
    stats.multi_lake_waterbodies = multi_lakes.len();

    let single = |c: Comid| match index.lakes_of(c) {
        [only] => *only,
        _ => c,
    };
    let pass1: Vec<(Comid, Comid)> = edges.iter().map(|e| (single(e.from), single(e.to))).collect();

    let expand = |c: Comid| -> Vec<Comid> {
        match index.lakes_of(c) {
            many if many.len() >= 2 => many.to_vec(),
            _ => vec![c],
        }
    };
    let mut out: BTreeSet<FlowEdge> = BTreeSet::new();
    for (f, t) in pass1 {
        for nf in expand(f) {
            for &nt in &expand(t) {
                if nf != nt {
                    out.insert(FlowEdge::new(nf, nt));
                }
            }
        }
    }
    (out.into_iter().collect(), stats)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct HucAssignment {
    pub hucs: BTreeMap<Comid, HucCode>,
    /// Features whose centroid fell in no watershed (or had no centroid).
    pub misses: usize,
}

/// First watershed, in input order, whose polygon contains `p`.
pub(crate) fn locate_huc<'a, T: Scalar>(p: &geo::Point<T>, watersheds: &'a [FeatureRecord<T>]) -> Option<&'a HucCode> {
    watersheds.iter().find_map(|w| {
        let huc = w.huc12.as_ref()?;
        let polys = w.geometry.polygons()?;
        (w.geometry.bbox().contains(p) && geo::point_in_polygon(p, polys)).then_some(huc)
    })
}

/// Tags each feature with the HUC12 of the watershed containing its centroid.
pub fn assign_hucs<T: Scalar>(features: &[FeatureRecord<T>], watersheds: &[FeatureRecord<T>]) -> HucAssignment {
    let found: Vec<Option<(Comid, HucCode)>> = features
        .par_iter()
        .map(|f| {
            let c = f.geometry.centroid().ok()?;
            locate_huc(&c, watersheds).map(|h| (f.comid, h.clone()))
        })
        .collect();
    let misses = found.iter().filter(|f| f.is_none()).count();
    HucAssignment { hucs: found.into_iter().flatten().collect(), misses }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LakeMatches {
    pub by_wbic: BTreeMap<u64, Comid>,
    pub centroid_matches: usize,
    pub overlap_matches: usize,
    pub unmatched: Vec<u64>,
}

/// Matches externally keyed lake polygons to NHD waterbodies: first by the
/// external centroid falling inside a waterbody, then, for the rest, by
/// overlapping exactly one waterbody.
pub fn match_external_lakes<T: Scalar>(external: &[FeatureRecord<T>], lakes: &[FeatureRecord<T>]) -> LakeMatches {
    let mut out = LakeMatches::default();
    for ext in external {
        let Some(ext_polys) = ext.geometry.polygons() else {
            continue;
        };
        let wbic = ext.wbic.unwrap_or_else(|| ext.comid.get());
        let by_centroid = ext.geometry.centroid().ok().and_then(|c| {
            lakes.iter().find(|l| {
                l.geometry.bbox().contains(&c) && l.geometry.polygons().is_some_and(|p| geo::point_in_polygon(&c, p))
            })
        });
        if let Some(l) = by_centroid {
            out.by_wbic.insert(wbic, l.comid);
            out.centroid_matches += 1;
            continue;
        }
        let eb = ext.geometry.bbox();
        let overlapping: Vec<Comid> = lakes
            .iter()
            .filter(|l| eb.intersects(&l.geometry.bbox()))
            .filter(|l| l.geometry.polygons().is_some_and(|p| geo::polygons_intersect(ext_polys, p)))
            .map(|l| l.comid)
            .collect();
        if let [only] = overlapping.as_slice() {
            out.by_wbic.insert(wbic, *only);
            out.overlap_matches += 1;
        } else {
            out.unmatched.push(wbic);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{Point, PolyLine, Polygon};
    use crate::graph::{build_graph, Direction};
    use crate::ingest::FeatureKind;
    use proptest::prelude::*;

    fn c(v: u64) -> Comid {
        Comid::new(v).unwrap()
    }

    fn river(id: u64, pts: &[(f64, f64)]) -> FeatureRecord<f64> {
        let line = PolyLine::new(pts.iter().map(|&(x, y)| Point::new(x, y)).collect()).unwrap();
        FeatureRecord::new(c(id), FeatureKind::RiverSegment, Geometry::Line(line))
    }

    fn lake(id: u64, x0: f64, y0: f64, x1: f64, y1: f64) -> FeatureRecord<f64> {
        FeatureRecord::new(c(id), FeatureKind::Waterbody, Geometry::Polygon(Polygon::rect(x0, y0, x1, y1).unwrap()))
    }

    fn shed(huc: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> FeatureRecord<f64> {
        let h = HucCode::new(huc).unwrap();
        let mut r = FeatureRecord::new(
            c(h.as_str().parse().unwrap()),
            FeatureKind::Watershed,
            Geometry::Polygon(Polygon::rect(x0, y0, x1, y1).unwrap()),
        );
        r.huc12 = Some(h);
        r
    }

    fn e(a: u64, b: u64) -> FlowEdge {
        FlowEdge::new(c(a), c(b))
    }

    #[test]
    fn intersection_examples() {
        let idx = compute_intersections(&[river(1, &[(-1.0, 0.5), (2.0, 0.5)])], &[lake(100, 0.0, 0.0, 1.0, 1.0)]);
        assert_eq!(idx.river_to_lakes[&c(1)], vec![c(100)]);
        assert_eq!(idx.lake_to_rivers[&c(100)], vec![c(1)]);

        let idx = compute_intersections(&[river(1, &[(5.0, 5.0), (6.0, 6.0)])], &[lake(100, 0.0, 0.0, 1.0, 1.0)]);
        assert!(idx.river_to_lakes[&c(1)].is_empty());
        assert!(idx.lake_to_rivers[&c(100)].is_empty());
        assert!(idx.is_symmetric());
    }

    #[test]
    fn three_lake_geometry() {
        // River 4 runs through two lakes B (102) and C (103); river 1 through A (101).
        let rivers = vec![
            river(1, &[(0.0, 0.0), (3.0, 0.0)]),
            river(2, &[(3.0, 0.0), (5.0, 0.0)]),
            river(4, &[(5.0, 0.0), (12.0, 0.0)]),
            river(5, &[(12.0, 0.0), (14.0, 0.0)]),
        ];
        let lakes =
            vec![lake(101, 1.0, -1.0, 2.0, 1.0), lake(102, 6.0, -1.0, 7.0, 1.0), lake(103, 9.0, -1.0, 10.0, 1.0)];
        let idx = compute_intersections(&rivers, &lakes);
        assert_eq!(idx.river_to_lakes[&c(4)], vec![c(102), c(103)]);
        assert_eq!(idx.river_to_lakes[&c(1)], vec![c(101)]);
        assert!(idx.river_to_lakes[&c(2)].is_empty());
        assert!(idx.is_symmetric());
    }

    #[test]
    fn insertion_examples() {
        let idx = IntersectionIndex::from_pairs([], [], [(c(1), c(101)), (c(4), c(102)), (c(4), c(103))]);
        let (out, stats) = insert_waterbodies(&[e(1, 2), e(2, 4), e(4, 5)], &idx);
        let mut want = vec![e(101, 2), e(2, 102), e(2, 103), e(102, 5), e(103, 5)];
        want.sort();
        assert_eq!(out, want);
        assert_eq!(stats, InsertionStats { single_lake_rivers: 1, multi_lake_rivers: 1, multi_lake_waterbodies: 2 });

        let (out, _) = insert_waterbodies(&[e(1, 2), e(2, 3)], &IntersectionIndex::default());
        assert_eq!(out, vec![e(1, 2), e(2, 3)]);

        let idx = IntersectionIndex::from_pairs([], [], [(c(1), c(101)), (c(2), c(101))]);
        let (out, _) = insert_waterbodies(&[e(1, 2)], &idx);
        assert!(out.is_empty());
    }

    #[test]
    fn huc_assignment_examples() {
        let w1 = shed("070900020501", 0.0, 0.0, 1.0, 1.0);
        let w2 = shed("070900020502", 1.0, 0.0, 2.0, 1.0);
        let inside = lake(10, 0.2, 0.2, 0.6, 0.6);
        let outside = lake(11, 5.0, 5.0, 6.0, 6.0);
        // Centroid (1.0, 0.5) sits on the shared edge.
        let straddle = lake(12, 0.5, 0.25, 1.5, 0.75);
        let out = assign_hucs(&[inside, outside, straddle], &[w1.clone(), w2.clone()]);
        assert_eq!(out.hucs[&c(10)].as_str(), "070900020501");
        assert!(!out.hucs.contains_key(&c(11)));
        assert_eq!(out.misses, 1);
        assert_eq!(out.hucs[&c(12)].as_str(), "070900020501");
        // Order of watersheds decides the tie.
        let out = assign_hucs(&[lake(12, 0.5, 0.25, 1.5, 0.75)], &[w2, w1]);
        assert_eq!(out.hucs[&c(12)].as_str(), "070900020502");
    }

    /// C-shaped polygon open to the right, spanning [0,3]x[0,3]; its centroid lies in the notch.
    fn crescent(wbic: u64) -> FeatureRecord<f64> {
        let p = Point::new;
        let ring = vec![
            p(0.0, 0.0),
            p(3.0, 0.0),
            p(3.0, 1.0),
            p(1.0, 1.0),
            p(1.0, 2.0),
            p(3.0, 2.0),
            p(3.0, 3.0),
            p(0.0, 3.0),
            p(0.0, 0.0),
        ];
        let mut r =
            FeatureRecord::new(c(wbic), FeatureKind::Waterbody, Geometry::Polygon(Polygon::new(ring, vec![]).unwrap()));
        r.wbic = Some(wbic);
        r
    }

    #[test]
    fn external_lake_matching() {
        let mut concentric = lake(500, 1.0, 1.0, 2.0, 2.0);
        concentric.wbic = Some(500);
        let m = match_external_lakes(&[concentric], &[lake(10, 0.0, 0.0, 3.0, 3.0)]);
        assert_eq!(m.by_wbic[&500], c(10));
        assert_eq!(m.centroid_matches, 1);

        let cres = crescent(600);
        let centroid = cres.geometry.centroid().unwrap();
        let nhd = lake(20, -1.0, -1.0, 0.5, 4.0);
        assert!(!geo::point_in_polygon(&centroid, nhd.geometry.polygons().unwrap()));
        let m = match_external_lakes(std::slice::from_ref(&cres), &[nhd]);
        assert_eq!(m.by_wbic[&600], c(20));
        assert_eq!(m.overlap_matches, 1);

        // Overlapping two NHD lakes, centroid in neither.
        let m = match_external_lakes(&[cres], &[lake(30, 2.0, -1.0, 4.0, 0.5), lake(31, 2.0, 2.5, 4.0, 4.0)]);
        assert!(m.by_wbic.is_empty());
        assert_eq!(m.unmatched, vec![600]);
    }

    type Pairs = Vec<(u64, u64)>;

    /// Flow pairs and river-lake intersection pairs.
    fn arb_river_network() -> impl Strategy<Value = (Pairs, Pairs)> {
        (4u64..30).prop_flat_map(|n| {
            (prop::collection::vec((1..=n, 1..=n), 1..60), prop::collection::vec((1..=n, 1000u64..1008), 0..20))
        })
    }

    /// Lakes reachable from `x` when each multi-lake segment is kept as its own
    /// node linked both ways to its lakes (the unsimplified connectivity).
    fn unsimplified_lakes(edges: &[FlowEdge], idx: &IntersectionIndex, x: Comid) -> BTreeSet<Comid> {
        let image = |r: Comid| match idx.lakes_of(r) {
            [only] => *only,
            _ => r,
        };
        let mut oracle: Vec<FlowEdge> = edges.iter().map(|fe| FlowEdge::new(image(fe.from), image(fe.to))).collect();
        for (r, lakes) in &idx.river_to_lakes {
            if lakes.len() >= 2 {
                for l in lakes {
                    oracle.push(FlowEdge::new(*r, *l));
                    oracle.push(FlowEdge::new(*l, *r));
                }
            }
        }
        let g = build_graph(&oracle, &BTreeMap::new(), &BTreeMap::new());
        if !g.contains(x) {
            return BTreeSet::new();
        }
        g.reachable_from(x, Direction::Downstream).unwrap().into_iter().filter(|n| n.get() >= 1000).collect()
    }

    fn lakes_after(out: &[FlowEdge], x: Comid) -> BTreeSet<Comid> {
        let after = build_graph(out, &BTreeMap::new(), &BTreeMap::new());
        if !after.contains(x) {
            return BTreeSet::new();
        }
        after.reachable_from(x, Direction::Downstream).unwrap().into_iter().filter(|n| n.get() >= 1000).collect()
    }

    fn lakes_on_river_paths(edges: &[FlowEdge], idx: &IntersectionIndex, x: Comid) -> BTreeSet<Comid> {
        let before = build_graph(edges, &BTreeMap::new(), &BTreeMap::new());
        before
            .reachable_from(x, Direction::Downstream)
            .unwrap()
            .iter()
            .flat_map(|r| idx.lakes_of(*r).to_vec())
            .collect()
    }

    proptest! {
        /// Each lake on at most one segment: the lake set downstream of any plain
        /// river node is exactly the lakes of the segments it drained into.
        #[test]
        fn insertion_preserves_downstream_lakes((flow, hits) in arb_river_network()) {
            let edges: Vec<FlowEdge> = flow.iter().filter(|(a, b)| a != b).map(|&(a, b)| e(a, b)).collect();
            let mut owner = BTreeMap::new();
            for &(r, l) in &hits {
                owner.entry(l).or_insert(r);
            }
            let idx = IntersectionIndex::from_pairs([], [], owner.iter().map(|(&l, &r)| (c(r), c(l))));
            prop_assert!(idx.is_symmetric());
            let (out, _) = insert_waterbodies(&edges, &idx);
            for fe in &out {
                prop_assert!(idx.lakes_of(fe.from).is_empty() && idx.lakes_of(fe.to).is_empty());
            }
            let before = build_graph(&edges, &BTreeMap::new(), &BTreeMap::new());
            for x in before.node_ids().filter(|x| idx.lakes_of(*x).is_empty()) {
                prop_assert_eq!(lakes_after(&out, x), lakes_on_river_paths(&edges, &idx, x));
            }
        }

        /// Lakes shared between segments: never lose a lake on a river path, never
        /// gain one the unsimplified connectivity would not reach.
        #[test]
        fn insertion_is_bracketed_by_oracles((flow, hits) in arb_river_network()) {
            let edges: Vec<FlowEdge> = flow.iter().filter(|(a, b)| a != b).map(|&(a, b)| e(a, b)).collect();
            let idx = IntersectionIndex::from_pairs([], [], hits.iter().map(|&(r, l)| (c(r), c(l))));
            let (out, _) = insert_waterbodies(&edges, &idx);
            let before = build_graph(&edges, &BTreeMap::new(), &BTreeMap::new());
            for x in before.node_ids().filter(|x| idx.lakes_of(*x).is_empty()) {
                let got = lakes_after(&out, x);
                prop_assert!(lakes_on_river_paths(&edges, &idx, x).is_subset(&got));
                prop_assert!(got.is_subset(&unsimplified_lakes(&edges, &idx, x)));
            }
        }
    }
}
