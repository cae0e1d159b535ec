use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::io::Read;

use super::{Comid, FlowEdge, HucCode, IngestError};
use crate::graph::NodeKind;

/// CSV reader with a header row; required columns resolved case-insensitively.
pub(crate) struct Table<R: Read> {
    reader: csv::Reader<R>,
    columns: Vec<(String, usize)>,
}

impl<R: Read> Table<R> {
    pub(crate) fn open(input: R, required: &[&str]) -> Result<Self, IngestError> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
        let headers = reader.headers()?.clone();
        let mut columns = Vec::with_capacity(required.len());
        for name in required {
            let idx = headers
                .iter()
                .position(|h| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(name))
                .ok_or_else(|| IngestError::MissingColumn((*name).to_string()))?;
            columns.push((name.to_string(), idx));
        }
        Ok(Table { reader, columns })
    }

    /// Calls `f(row_number, cells)` for every data row; rows are numbered from 1.
    pub(crate) fn for_each(
        mut self,
        mut f: impl FnMut(usize, &[&str]) -> Result<(), IngestError>,
    ) -> Result<(), IngestError> {
        for (i, rec) in self.reader.records().enumerate() {
            let rec = rec?;
            let cells: Vec<&str> = self.columns.iter().map(|(_, idx)| rec.get(*idx).unwrap_or("")).collect();
            f(i + 1, &cells)?;
        }
        Ok(())
    }

    pub(crate) fn column(&self, i: usize) -> String {
        self.columns[i].0.clone()
    }
}

fn int_cell(row: usize, column: &str, value: &str) -> Result<u64, IngestError> {
    value.parse::<u64>().map_err(|_| IngestError::BadInteger {
        row,
        column: column.to_string(),
        value: value.to_string(),
    })
}

pub(crate) fn comid_cell(row: usize, column: &str, value: &str) -> Result<Comid, IngestError> {
    let v = int_cell(row, column, value)?;
    Comid::new(v).map_err(|_| IngestError::BadValue {
        row,
        column: column.to_string(),
        value: value.to_string(),
        reason: "COMID must be positive".into(),
    })
}

/// Reads a PlusFlow-style FROMCOMID/TOCOMID table.
///
/// Rows touching the 0 boundary sentinel, self-loops and exact duplicates are
/// dropped. Output keeps first-occurrence order.
pub fn parse_flow_table<R: Read>(input: R) -> Result<Vec<FlowEdge>, IngestError> {
    let table = Table::open(input, &["FROMCOMID", "TOCOMID"])?;
    let (from_col, to_col) = (table.column(0), table.column(1));
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    table.for_each(|row, cells| {
        let from = int_cell(row, &from_col, cells[0])?;
        let to = int_cell(row, &to_col, cells[1])?;
        if from == 0 || to == 0 || from == to {
            return Ok(());
        }
        let e = FlowEdge::new(Comid(from), Comid(to));
        if seen.insert(e) {
            edges.push(e);
        }
        Ok(())
    })?;
    Ok(edges)
}

pub fn serialize_flow_table(edges: &[FlowEdge]) -> String {
    let mut out = String::from("FROMCOMID,TOCOMID\n");
    for e in edges {
        let _ = writeln!(out, "{},{}", e.from, e.to);
    }
    out
}

/// COMID,KIND table. KIND is River, Waterbody or PointSource (case-insensitive).
pub fn parse_kind_table<R: Read>(input: R) -> Result<BTreeMap<Comid, NodeKind>, IngestError> {
    let table = Table::open(input, &["COMID", "KIND"])?;
    let (c0, c1) = (table.column(0), table.column(1));
    let mut out = BTreeMap::new();
    table.for_each(|row, cells| {
        let comid = comid_cell(row, &c0, cells[0])?;
        let kind = NodeKind::parse(cells[1]).ok_or_else(|| IngestError::BadValue {
            row,
            column: c1.clone(),
            value: cells[1].to_string(),
            reason: "expected River, Waterbody or PointSource".into(),
        })?;
        out.insert(comid, kind);
        Ok(())
    })?;
    Ok(out)
}

pub fn serialize_kind_table(kinds: &BTreeMap<Comid, NodeKind>) -> String {
    let mut out = String::from("COMID,KIND\n");
    for (c, k) in kinds {
        let _ = writeln!(out, "{c},{}", k.as_str());
    }
    out
}

/// COMID,HUC12 table.
pub fn parse_huc_table<R: Read>(input: R) -> Result<BTreeMap<Comid, HucCode>, IngestError> {
    let table = Table::open(input, &["COMID", "HUC12"])?;
    let (c0, c1) = (table.column(0), table.column(1));
    let mut out = BTreeMap::new();
    table.for_each(|row, cells| {
        let comid = comid_cell(row, &c0, cells[0])?;
        let huc = HucCode::new(cells[1]).map_err(|_| IngestError::BadValue {
            row,
            column: c1.clone(),
            value: cells[1].to_string(),
            reason: "expected 12 decimal digits".into(),
        })?;
        out.insert(comid, huc);
        Ok(())
    })?;
    Ok(out)
}

pub fn serialize_huc_table(hucs: &BTreeMap<Comid, HucCode>) -> String {
    let mut out = String::from("COMID,HUC12\n");
    for (c, h) in hucs {
        let _ = writeln!(out, "{c},{h}");
    }
    out
}

/// MERGED_COMID,SURVIVOR_COMID table written by aggregation.
pub fn parse_merge_table<R: Read>(input: R) -> Result<BTreeMap<Comid, Comid>, IngestError> {
    let table = Table::open(input, &["MERGED_COMID", "SURVIVOR_COMID"])?;
    let (c0, c1) = (table.column(0), table.column(1));
    let mut out = BTreeMap::new();
    table.for_each(|row, cells| {
        out.insert(comid_cell(row, &c0, cells[0])?, comid_cell(row, &c1, cells[1])?);
        Ok(())
    })?;
    Ok(out)
}

pub fn serialize_merge_table(merged_into: &BTreeMap<Comid, Comid>) -> String {
    let mut out = String::from("MERGED_COMID,SURVIVOR_COMID\n");
    for (m, s) in merged_into {
        let _ = writeln!(out, "{m},{s}");
    }
    out
}
