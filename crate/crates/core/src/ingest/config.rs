use serde::Deserialize;

use super::{Comid, IngestError};

/// Units of the shared planar CRS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrsUnits {
    #[default]
    Meters,
    Degrees,
}

/// Build configuration, read from TOML.
///
/// ```toml
/// exclude_comids = [904140247, 904140248]
/// grid_step = 30.0
/// units = "meters"
/// crs_note = "EPSG:3071"
/// ```
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildConfig {
    /// Waterbody COMIDs removed before graph construction (e.g. the Great Lakes).
    pub exclude_comids: Vec<u64>,
    /// Land-fraction lattice spacing in CRS units. `None` picks one per region.
    pub grid_step: Option<f64>,
    /// Minimum lattice samples per region when `grid_step` is unset.
    pub min_samples: usize,
    pub units: CrsUnits,
    pub crs_note: String,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            exclude_comids: Vec::new(),
            grid_step: None,
            min_samples: 10_000,
            units: CrsUnits::Meters,
            crs_note: String::new(),
        }
    }
}

impl BuildConfig {
    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        let cfg: BuildConfig = toml::from_str(text)?;
        for &c in &cfg.exclude_comids {
            Comid::new(c)?;
        }
        if let Some(step) = cfg.grid_step {
            if !(step > 0.0 && step.is_finite()) {
                return Err(IngestError::BadValue {
                    row: 0,
                    column: "grid_step".into(),
                    value: step.to_string(),
                    reason: "must be positive".into(),
                });
            }
        }
        Ok(cfg)
    }

    pub fn excluded(&self) -> Vec<Comid> {
        self.exclude_comids.iter().filter_map(|&c| Comid::new(c).ok()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_config() {
        let cfg = BuildConfig::from_toml(
            "exclude_comids = [904140247]\ngrid_step = 25.0\nunits = \"degrees\"\ncrs_note = \"EPSG:4326\"\n",
        )
        .unwrap();
        assert_eq!(cfg.excluded(), vec![Comid::new(904140247).unwrap()]);
        assert_eq!(cfg.grid_step, Some(25.0));
        assert_eq!(cfg.units, CrsUnits::Degrees);
        assert_eq!(cfg.min_samples, 10_000);
    }

    #[test]
    fn empty_config_is_default() {
        assert_eq!(BuildConfig::from_toml("").unwrap(), BuildConfig::default());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(BuildConfig::from_toml("grid_step = -1.0").is_err());
        assert!(BuildConfig::from_toml("exclude_comids = [0]").is_err());
        assert!(BuildConfig::from_toml("bogus = 1").is_err());
    }
}
