use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use super::{AnalysisError, LakeClass};
use crate::builder::PointSourceRecord;
use crate::geo::{self, Geometry, Polygon};
use crate::graph::{Direction, HydroGraph, NodeKind};
use crate::ingest::{Comid, CrsUnits, FeatureRecord, HucCode};
use crate::num::Scalar;

/// Geometry and land-cover layers an upstream summary draws on.
#[derive(Debug, Clone)]
pub struct SummaryInputs<'a, T> {
    pub geometries: &'a BTreeMap<Comid, Geometry<T>>,
    pub watersheds: &'a BTreeMap<HucCode, Vec<Polygon<T>>>,
    pub ag_cover: &'a [Polygon<T>],
    pub urban_cover: &'a [Polygon<T>],
    pub units: CrsUnits,
    /// Fixed lattice spacing; `None` sizes it per region to `min_samples`.
    pub grid_step: Option<T>,
    pub min_samples: usize,
}

impl<T: Scalar> SummaryInputs<'_, T> {
    /// HUC12 code to polygon parts; the first record for a code wins.
    pub fn watershed_index(records: &[FeatureRecord<T>]) -> BTreeMap<HucCode, Vec<Polygon<T>>> {
        let mut out = BTreeMap::new();
        for r in records {
            if let (Some(h), Some(polys)) = (&r.huc12, r.geometry.polygons()) {
                out.entry(h.clone()).or_insert_with(|| polys.to_vec());
            }
        }
        out
    }

    /// Every polygon part of the given cover features.
    pub fn flatten_cover(records: &[FeatureRecord<T>]) -> Vec<Polygon<T>> {
        records.iter().filter_map(|r| r.geometry.polygons()).flatten().cloned().collect()
    }

    fn fractions(&self, target: Comid, hucs: &BTreeSet<HucCode>) -> Result<(T, T), AnalysisError> {
        let region: Vec<Polygon<T>> = hucs.iter().filter_map(|h| self.watersheds.get(h)).flatten().cloned().collect();
        if region.is_empty() {
            return Err(AnalysisError::NoWatershed(target));
        }
        let step = match self.grid_step {
            Some(s) => s,
            None => geo::auto_grid_step(&region, self.min_samples)?,
        };
        Ok((geo::land_fraction(&region, self.ag_cover, step)?, geo::land_fraction(&region, self.urban_cover, step)?))
    }

    fn area_km2(&self, c: Comid) -> Result<T, AnalysisError> {
        if self.units == CrsUnits::Degrees {
            return Err(AnalysisError::AreaUnits);
        }
        let polys = self.geometries.get(&c).and_then(Geometry::polygons).ok_or(AnalysisError::MissingGeometry(c))?;
        Ok(geo::area(polys)? / T::from_f64_lossy(1e6))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpstreamSummary<T> {
    pub target: Comid,
    pub in_graph: bool,
    /// HUC12 codes whose union the land fractions were sampled over.
    pub huc12s: Vec<HucCode>,
    /// Upstream nodes other than point sources.
    pub upstream_nodes: usize,
    pub upstream_waterbodies: usize,
    pub upstream_waterbody_area_km2: T,
    pub cafos: usize,
    pub ag_fraction: T,
    pub urban_fraction: T,
}

pub fn upstream_summary<T: Scalar>(
    g: &HydroGraph,
    target: Comid,
    inputs: &SummaryInputs<'_, T>,
) -> Result<UpstreamSummary<T>, AnalysisError> {
    let mut reach = g.reachable_from(target, Direction::Upstream)?;
    reach.remove(&target);
    if inputs.units == CrsUnits::Degrees {
        return Err(AnalysisError::AreaUnits);
    }

    let mut upstream_nodes = 0;
    let mut upstream_waterbodies = 0;
    let mut area = T::zero();
    let mut cafos = 0;
    for &c in &reach {
        match g.kind(c).unwrap_or_default() {
            NodeKind::PointSource => cafos += 1,
            NodeKind::Waterbody => {
                upstream_nodes += 1;
                upstream_waterbodies += 1;
                area = area + inputs.area_km2(c)?;
            }
            NodeKind::River => upstream_nodes += 1,
        }
    }

    let hucs: BTreeSet<HucCode> = reach.iter().chain([&target]).filter_map(|c| g.huc12(*c)).cloned().collect();
    let (ag_fraction, urban_fraction) = inputs.fractions(target, &hucs)?;
    Ok(UpstreamSummary {
        target,
        in_graph: true,
        huc12s: hucs.into_iter().collect(),
        upstream_nodes,
        upstream_waterbodies,
        upstream_waterbody_area_km2: area,
        cafos,
        ag_fraction,
        urban_fraction,
    })
}

/// Summary for a lake outside the graph: no upstream nodes, CAFOs counted over
/// its own HUC12, fractions over that HUC12 alone.
pub fn detached_summary<T: Scalar>(
    target: Comid,
    huc12: &HucCode,
    sources: &[PointSourceRecord<T>],
    inputs: &SummaryInputs<'_, T>,
) -> Result<UpstreamSummary<T>, AnalysisError> {
    if inputs.units == CrsUnits::Degrees {
        return Err(AnalysisError::AreaUnits);
    }
    let hucs = BTreeSet::from([huc12.clone()]);
    let (ag_fraction, urban_fraction) = inputs.fractions(target, &hucs)?;
    Ok(UpstreamSummary {
        target,
        in_graph: false,
        huc12s: vec![huc12.clone()],
        upstream_nodes: 0,
        upstream_waterbodies: 0,
        upstream_waterbody_area_km2: T::zero(),
        cafos: sources.iter().filter(|s| &s.huc12 == huc12).count(),
        ag_fraction,
        urban_fraction,
    })
}

/// Summaries for many lakes in parallel. Lakes missing from `g` fall back to
/// [`detached_summary`] using `lake_hucs`.
pub fn summarize_all<T: Scalar>(
    g: &HydroGraph,
    lakes: &[Comid],
    lake_hucs: &BTreeMap<Comid, HucCode>,
    sources: &[PointSourceRecord<T>],
    inputs: &SummaryInputs<'_, T>,
) -> Result<BTreeMap<Comid, UpstreamSummary<T>>, AnalysisError> {
    lakes
        .par_iter()
        .map(|&c| {
            let s = if g.contains(c) {
                upstream_summary(g, c, inputs)?
            } else {
                let h = lake_hucs.get(&c).ok_or(AnalysisError::NoWatershed(c))?;
                detached_summary(c, h, sources, inputs)?
            };
            Ok((c, s))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Cohort {
    Polluted,
    Clean,
}

impl Cohort {
    pub fn from_class(c: LakeClass) -> Option<Self> {
        match c {
            LakeClass::Polluted => Some(Cohort::Polluted),
            LakeClass::Clean => Some(Cohort::Clean),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Cohort::Polluted => "Polluted",
            Cohort::Clean => "Clean",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tally {
    pub count: usize,
    pub fraction: f64,
}

impl Tally {
    fn of(count: usize, total: usize) -> Self {
        Tally { count, fraction: count as f64 / total as f64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub cohort: Cohort,
    pub total: usize,
    pub cafo_connected: Tally,
    pub in_graph: Tally,
    pub headwater: Tally,
    pub ag_over_20pct: Tally,
    pub urban_over_2pct: Tally,
    pub upstream_10plus: Tally,
}

/// One row per non-empty cohort, polluted first.
pub fn metrics_table<T: Scalar>(
    cohorts: &BTreeMap<Comid, Cohort>,
    summaries: &BTreeMap<Comid, UpstreamSummary<T>>,
) -> Result<Vec<MetricsRow>, AnalysisError> {
    if cohorts.is_empty() {
        return Err(AnalysisError::EmptyCohorts);
    }
    let mut rows = Vec::new();
    for cohort in [Cohort::Polluted, Cohort::Clean] {
        let members: Vec<&UpstreamSummary<T>> = cohorts
            .iter()
            .filter(|(_, k)| **k == cohort)
            .map(|(c, _)| summaries.get(c).ok_or(AnalysisError::MissingSummary(*c)))
            .collect::<Result<_, _>>()?;
        let total = members.len();
        if total == 0 {
            continue;
        }
        let count = |f: &dyn Fn(&UpstreamSummary<T>) -> bool| Tally::of(members.iter().filter(|s| f(s)).count(), total);
        rows.push(MetricsRow {
            cohort,
            total,
            cafo_connected: count(&|s| s.cafos > 0),
            in_graph: count(&|s| s.in_graph),
            headwater: count(&|s| s.in_graph && s.upstream_nodes == 0),
            ag_over_20pct: count(&|s| s.ag_fraction.to_f64_lossy() > 0.20),
            urban_over_2pct: count(&|s| s.urban_fraction.to_f64_lossy() > 0.02),
            upstream_10plus: count(&|s| s.upstream_nodes >= 10),
        });
    }
    Ok(rows)
}

pub fn metrics_to_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from("cohort,total");
    let names = ["cafo", "in_graph", "headwater", "ag_over_20pct", "urban_over_2pct", "upstream_10plus"];
    for n in names {
        let _ = write!(s, ",{n},{n}_fraction");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(s, "{},{}", r.cohort.as_str(), r.total);
        for t in [r.cafo_connected, r.in_graph, r.headwater, r.ag_over_20pct, r.urban_over_2pct, r.upstream_10plus] {
            let _ = write!(s, ",{},{}", t.count, t.fraction);
        }
        s.push('\n');
    }
    s
}
