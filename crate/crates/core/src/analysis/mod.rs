//! Water-quality analytics: Carlson trophic state indices, lake cohort
//! classification, upstream summaries and cohort metrics.

mod samples;
mod summary;

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::geo::GeoError;
use crate::graph::GraphError;
use crate::ingest::{Comid, IngestError};
use crate::num::Scalar;

pub use samples::{load_sample_manifest, parse_samples};
pub use summary::{
    detached_summary, metrics_table, metrics_to_csv, summarize_all, upstream_summary, Cohort, MetricsRow,
    SummaryInputs, Tally, UpstreamSummary,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("invalid classification config: {0}")]
    InvalidConfig(String),
    #[error("area in km² needs a metre-based CRS; inputs are declared in degrees")]
    AreaUnits,
    #[error("no watershed polygon for any HUC12 around node {0}")]
    NoWatershed(Comid),
    #[error("no geometry for waterbody {0}")]
    MissingGeometry(Comid),
    #[error("no upstream summary for lake {0}")]
    MissingSummary(Comid),
    #[error("no lakes in any cohort")]
    EmptyCohorts,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
}

fn positive<T: Scalar>(what: &'static str, v: T) -> Result<T, AnalysisError> {
    if v > T::zero() && v.is_finite() {
        Ok(v)
    } else {
        Err(AnalysisError::NonPositive { what, value: v.to_f64_lossy() })
    }
}

/// Carlson TSI from total phosphorus (mg/m³).
pub fn tsi_tp<T: Scalar>(tp: T) -> Result<T, AnalysisError> {
    let tp = positive("total phosphorus", tp)?;
    Ok(T::from_f64_lossy(4.15) + T::from_f64_lossy(14.42) * tp.ln())
}

/// Carlson TSI from chlorophyll-a (mg/m³).
pub fn tsi_chla<T: Scalar>(chla: T) -> Result<T, AnalysisError> {
    let chla = positive("chlorophyll-a", chla)?;
    Ok(T::from_f64_lossy(30.6) + T::from_f64_lossy(9.81) * chla.ln())
}

/// All TP and chlorophyll-a measurements for one lake.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LakeSamples<T> {
    pub comid: Comid,
    pub tp: Vec<T>,
    pub chla: Vec<T>,
}

impl<T: Scalar> LakeSamples<T> {
    pub fn new(comid: Comid) -> Self {
        LakeSamples { comid, tp: Vec::new(), chla: Vec::new() }
    }

    pub fn is_valid(&self) -> bool {
        self.tp.iter().chain(&self.chla).all(|v| v.is_finite() && *v >= T::zero())
    }

    pub fn mean_tp(&self) -> Option<T> {
        mean(&self.tp)
    }

    pub fn mean_chla(&self) -> Option<T> {
        mean(&self.chla)
    }
}

fn mean<T: Scalar>(xs: &[T]) -> Option<T> {
    if xs.is_empty() {
        return None;
    }
    let sum = xs.iter().fold(T::zero(), |a, &b| a + b);
    Some(sum / T::from_usize(xs.len())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum LakeClass {
    Clean,
    Polluted,
    Neither,
    InsufficientData,
}

impl LakeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LakeClass::Clean => "Clean",
            LakeClass::Polluted => "Polluted",
            LakeClass::Neither => "Neither",
            LakeClass::InsufficientData => "InsufficientData",
        }
    }
}

/// Cohort thresholds in mg/m³; comparisons are strict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyConfig<T> {
    pub min_count: usize,
    pub clean_tp_max: T,
    pub clean_chla_max: T,
    pub polluted_tp_min: T,
    pub polluted_chla_min: T,
}

impl<T: Scalar> Default for ClassifyConfig<T> {
    fn default() -> Self {
        ClassifyConfig {
            min_count: 50,
            clean_tp_max: T::from_f64_lossy(15.0),
            clean_chla_max: T::from_f64_lossy(5.0),
            polluted_tp_min: T::from_f64_lossy(60.0),
            polluted_chla_min: T::from_f64_lossy(15.0),
        }
    }
}

impl<T: Scalar> ClassifyConfig<T> {
    pub fn validate(&self) -> Result<(), AnalysisError> {
        let all = [self.clean_tp_max, self.clean_chla_max, self.polluted_tp_min, self.polluted_chla_min];
        if all.iter().any(|v| !(v.is_finite() && *v > T::zero())) {
            return Err(AnalysisError::InvalidConfig("thresholds must be positive".into()));
        }
        if self.clean_tp_max >= self.polluted_tp_min || self.clean_chla_max >= self.polluted_chla_min {
            return Err(AnalysisError::InvalidConfig("clean maxima must lie below polluted minima".into()));
        }
        Ok(())
    }

    pub fn classify(&self, s: &LakeSamples<T>) -> LakeClass {
        if s.tp.len() < self.min_count || s.chla.len() < self.min_count {
            return LakeClass::InsufficientData;
        }
        let (Some(tp), Some(chla)) = (s.mean_tp(), s.mean_chla()) else {
            return LakeClass::InsufficientData;
        };
        if tp < self.clean_tp_max && chla < self.clean_chla_max {
            LakeClass::Clean
        } else if tp > self.polluted_tp_min && chla > self.polluted_chla_min {
            LakeClass::Polluted
        } else {
            LakeClass::Neither
        }
    }
}

pub fn classify_lakes<T: Scalar>(
    samples: &[LakeSamples<T>],
    cfg: &ClassifyConfig<T>,
) -> Result<BTreeMap<Comid, LakeClass>, AnalysisError> {
    cfg.validate()?;
    Ok(samples.iter().map(|s| (s.comid, cfg.classify(s))).collect())
}
