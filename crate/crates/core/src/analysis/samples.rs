use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::LakeSamples;
use crate::ingest::tables::{comid_cell, Table};
use crate::ingest::{Comid, IngestError};
use crate::num::Scalar;

enum Param {
    Tp,
    Chla,
}

fn param_cell(row: usize, value: &str) -> Result<Param, IngestError> {
    match value.to_ascii_uppercase().as_str() {
        "TP" => Ok(Param::Tp),
        "CHLA" => Ok(Param::Chla),
        _ => Err(IngestError::BadValue {
            row,
            column: "PARAM".into(),
            value: value.into(),
            reason: "expected TP or CHLA".into(),
        }),
    }
}

fn value_cell<T: Scalar>(row: usize, value: &str) -> Result<T, IngestError> {
    let bad = |reason: &str| IngestError::BadValue {
        row,
        column: "VALUE".into(),
        value: value.into(),
        reason: reason.into(),
    };
    let v: f64 = value.parse().map_err(|_| bad("expected a number"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(bad("concentrations must be finite and non-negative"));
    }
    Ok(T::from_f64_lossy(v))
}

fn push<T>(into: &mut LakeSamples<T>, param: Param, v: T) {
    match param {
        Param::Tp => into.tp.push(v),
        Param::Chla => into.chla.push(v),
    }
}

/// Reads a long-format sample table with columns `COMID,PARAM,VALUE`.
pub fn parse_samples<T: Scalar, R: Read>(input: R) -> Result<Vec<LakeSamples<T>>, IngestError> {
    let mut lakes: BTreeMap<Comid, LakeSamples<T>> = BTreeMap::new();
    Table::open(input, &["COMID", "PARAM", "VALUE"])?.for_each(|row, cells| {
        let comid = comid_cell(row, "COMID", cells[0])?;
        let param = param_cell(row, cells[1])?;
        let v = value_cell(row, cells[2])?;
        push(lakes.entry(comid).or_insert_with(|| LakeSamples::new(comid)), param, v);
        Ok(())
    })?;
    Ok(lakes.into_values().collect())
}

/// Reads a `COMID,FILE` manifest whose files (relative to the manifest) hold
/// `PARAM,VALUE` rows for one lake each.
pub fn load_sample_manifest<T: Scalar>(manifest: &Path) -> Result<Vec<LakeSamples<T>>, IngestError> {
    let dir = manifest.parent().unwrap_or(Path::new("."));
    let mut entries = Vec::new();
    Table::open(File::open(manifest)?, &["COMID", "FILE"])?.for_each(|row, cells| {
        entries.push((comid_cell(row, "COMID", cells[0])?, cells[1].to_string()));
        Ok(())
    })?;

    let mut lakes: BTreeMap<Comid, LakeSamples<T>> = BTreeMap::new();
    for (comid, file) in entries {
        let lake = lakes.entry(comid).or_insert_with(|| LakeSamples::new(comid));
        Table::open(File::open(dir.join(file))?, &["PARAM", "VALUE"])?.for_each(|row, cells| {
            let param = param_cell(row, cells[0])?;
            push(lake, param, value_cell(row, cells[1])?);
            Ok(())
        })?;
    }
    Ok(lakes.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_long_table_by_lake() {
        let csv = "COMID,PARAM,VALUE\n7,TP,10\n7,chla,2.5\n3,TP,80\n7,TP,20\n";
        let lakes = parse_samples::<f64, _>(csv.as_bytes()).unwrap();
        assert_eq!(lakes.len(), 2);
        assert_eq!(lakes[0].comid.get(), 3);
        assert_eq!(lakes[1].tp, vec![10.0, 20.0]);
        assert_eq!(lakes[1].mean_tp(), Some(15.0));
        assert_eq!(lakes[1].chla, vec![2.5]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse_samples::<f64, _>("COMID,PARAM,VALUE\n7,SECCHI,1\n".as_bytes()).is_err());
        assert!(parse_samples::<f64, _>("COMID,PARAM,VALUE\n7,TP,-1\n".as_bytes()).is_err());
        assert!(parse_samples::<f64, _>("COMID,PARAM,VALUE\n0,TP,1\n".as_bytes()).is_err());
        assert!(matches!(parse_samples::<f64, _>("COMID,VALUE\n7,1\n".as_bytes()), Err(IngestError::MissingColumn(_))));
    }

    #[test]
    fn reads_manifest_relative_to_its_directory() {
        let dir = std::env::temp_dir().join(format!("hg-manifest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        std::fs::write(dir.join("index.csv"), "WBIC,COMID,FILE\n11,5,a.csv\n12,6,b.csv\n").unwrap();
        std::fs::write(dir.join("a.csv"), "PARAM,VALUE\nTP,1\nCHLA,2\n").unwrap();
        std::fs::write(dir.join("b.csv"), "PARAM,VALUE\nTP,3\n").unwrap();
        let lakes = load_sample_manifest::<f64>(&dir.join("index.csv")).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
        assert_eq!(lakes.len(), 2);
        assert_eq!((lakes[0].tp.clone(), lakes[0].chla.clone()), (vec![1.0], vec![2.0]));
        assert_eq!(lakes[1].tp, vec![3.0]);
    }

    #[test]
    fn missing_manifest_is_io() {
        let err = load_sample_manifest::<f64>(Path::new("/nonexistent/index.csv")).unwrap_err();
        assert!(err.is_io());
    }
}
