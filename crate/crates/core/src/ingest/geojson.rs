use serde_json::{json, Map, Value};

use super::{Comid, FeatureKind, FeatureRecord, HucCode, IngestError};
use crate::geo::{Geometry, MultiPolygon, Point, PolyLine, Polygon};
use crate::num::Scalar;

fn malformed(index: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedGeometry { index, reason: reason.into() }
}

/// Case-insensitive property lookup.
fn property<'a>(props: &'a Map<String, Value>, name: &str) -> Option<&'a Value> {
    props.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v).filter(|v| !v.is_null())
}

fn integer_property(props: &Map<String, Value>, name: &str, index: usize) -> Result<Option<u64>, IngestError> {
    let Some(v) = property(props, name) else {
        return Ok(None);
    };
    let parsed = match v {
        Value::Number(n) => {
            n.as_u64().or_else(|| n.as_f64().filter(|f| f.fract() == 0.0 && *f >= 0.0).map(|f| f as u64))
        }
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    };
    parsed.map(Some).ok_or_else(|| IngestError::MissingProperty { property: format!("integer {name}"), index })
}

fn comid_property(props: &Map<String, Value>, name: &str, index: usize) -> Result<Comid, IngestError> {
    let v = integer_property(props, name, index)?
        .ok_or_else(|| IngestError::MissingProperty { property: name.to_string(), index })?;
    Comid::new(v)
}

fn position<T: Scalar>(v: &Value, index: usize) -> Result<Point<T>, IngestError> {
    let arr = v.as_array().ok_or_else(|| malformed(index, "position is not an array"))?;
    if arr.len() < 2 {
        return Err(malformed(index, "position needs at least two coordinates"));
    }
    let coord =
        |c: &Value| c.as_f64().map(T::from_f64_lossy).ok_or_else(|| malformed(index, "coordinate is not a number"));
    Point::checked(coord(&arr[0])?, coord(&arr[1])?).map_err(|source| IngestError::InvalidGeometry { index, source })
}

fn positions<T: Scalar>(v: &Value, index: usize) -> Result<Vec<Point<T>>, IngestError> {
    v.as_array()
        .ok_or_else(|| malformed(index, "expected an array of positions"))?
        .iter()
        .map(|p| position(p, index))
        .collect()
}

fn polygon<T: Scalar>(v: &Value, index: usize) -> Result<Polygon<T>, IngestError> {
    let rings = v.as_array().ok_or_else(|| malformed(index, "expected an array of rings"))?;
    let Some((exterior, holes)) = rings.split_first() else {
        return Err(IngestError::EmptyGeometry { index });
    };
    let exterior = positions(exterior, index)?;
    let holes = holes.iter().map(|h| positions(h, index)).collect::<Result<Vec<_>, _>>()?;
    Polygon::new(exterior, holes).map_err(|source| IngestError::InvalidGeometry { index, source })
}

/// Removes consecutive repeated vertices, which NHD flowlines occasionally carry.
fn dedup_line<T: Scalar>(mut pts: Vec<Point<T>>) -> Vec<Point<T>> {
    pts.dedup();
    pts
}

fn geometry<T: Scalar>(v: Option<&Value>, index: usize) -> Result<Geometry<T>, IngestError> {
    let Some(g) = v.filter(|g| !g.is_null()) else {
        return Err(IngestError::EmptyGeometry { index });
    };
    let kind = g.get("type").and_then(Value::as_str).ok_or_else(|| malformed(index, "geometry has no type"))?;
    let coords = g.get("coordinates").ok_or_else(|| malformed(index, "geometry has no coordinates"))?;
    if coords.as_array().is_some_and(Vec::is_empty) {
        return Err(IngestError::EmptyGeometry { index });
    }
    let invalid = |source| IngestError::InvalidGeometry { index, source };
    match kind {
        "LineString" => {
            let pts = dedup_line(positions(coords, index)?);
            Ok(Geometry::Line(PolyLine::new(pts).map_err(invalid)?))
        }
        "MultiLineString" => {
            // Parts that chain end-to-start are joined into one line.
            let parts = coords.as_array().ok_or_else(|| malformed(index, "expected line parts"))?;
            let mut pts: Vec<Point<T>> = Vec::new();
            for part in parts {
                let part = positions(part, index)?;
                if let (Some(last), Some(first)) = (pts.last(), part.first()) {
                    if last != first {
                        return Err(malformed(index, "MultiLineString parts are not contiguous"));
                    }
                }
                pts.extend(part);
            }
            Ok(Geometry::Line(PolyLine::new(dedup_line(pts)).map_err(invalid)?))
        }
        "Polygon" => Ok(Geometry::Polygon(polygon(coords, index)?)),
        "MultiPolygon" => {
            let parts = coords
                .as_array()
                .ok_or_else(|| malformed(index, "expected polygon parts"))?
                .iter()
                .map(|p| polygon(p, index))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Geometry::MultiPolygon(MultiPolygon::new(parts).map_err(invalid)?))
        }
        other => Err(malformed(index, format!("unsupported geometry type {other}"))),
    }
}

fn features(text: &str) -> Result<Vec<Value>, IngestError> {
    let mut doc: Value = serde_json::from_str(text)?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(IngestError::NotFeatureCollection);
    }
    match doc.get_mut("features").map(Value::take) {
        Some(Value::Array(f)) => Ok(f),
        _ => Err(IngestError::NotFeatureCollection),
    }
}

fn properties(feature: &Value) -> Map<String, Value> {
    feature.get("properties").and_then(Value::as_object).cloned().unwrap_or_default()
}

/// Parses a FeatureCollection into records of one kind.
///
/// River segments and waterbodies are keyed by `COMID`. Watersheds are keyed
/// by `HUC12` and get the code's numeric value as identity. Land cover uses
/// `COMID` when present, else the 1-based feature position.
pub fn parse_features<T: Scalar>(text: &str, kind: FeatureKind) -> Result<Vec<FeatureRecord<T>>, IngestError> {
    let mut out = Vec::new();
    for (index, feature) in features(text)?.iter().enumerate() {
        let props = properties(feature);
        let (comid, huc12) = match kind {
            FeatureKind::Watershed => {
                let raw = property(&props, "HUC12")
                    .map(|v| match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    })
                    .ok_or_else(|| IngestError::MissingProperty { property: "HUC12".into(), index })?;
                let huc = HucCode::new(&raw)?;
                let id = huc.as_str().parse::<u64>().map_err(|_| IngestError::InvalidHuc(raw.clone()))?;
                (Comid::new(id)?, Some(huc))
            }
            FeatureKind::LandCover => {
                let id = integer_property(&props, "COMID", index)?.unwrap_or(index as u64 + 1);
                (Comid::new(id)?, None)
            }
            FeatureKind::PointSource => {
                return Err(malformed(index, "point sources are read from CSV, not GeoJSON"));
            }
            FeatureKind::RiverSegment | FeatureKind::Waterbody => {
                let huc = match property(&props, "HUC12").and_then(Value::as_str) {
                    Some(s) => Some(HucCode::new(s)?),
                    None => None,
                };
                (comid_property(&props, "COMID", index)?, huc)
            }
        };
        let geometry = geometry::<T>(feature.get("geometry"), index)?;
        let line_kind = kind == FeatureKind::RiverSegment;
        if line_kind == geometry.is_areal() {
            let want = if line_kind { "a line" } else { "a polygon" };
            return Err(malformed(index, format!("{kind:?} geometry must be {want}")));
        }
        let mut rec = FeatureRecord::new(comid, kind, geometry);
        rec.huc12 = huc12;
        rec.ftype = property(&props, "FTYPE").and_then(Value::as_str).map(str::to_string);
        out.push(rec);
    }
    Ok(out)
}

/// Parses externally keyed lake polygons (property `WBIC`); the WBIC doubles as identity.
pub fn parse_wbic_features<T: Scalar>(text: &str) -> Result<Vec<FeatureRecord<T>>, IngestError> {
    let mut out = Vec::new();
    for (index, feature) in features(text)?.iter().enumerate() {
        let props = properties(feature);
        let wbic = comid_property(&props, "WBIC", index)?;
        let geometry = geometry::<T>(feature.get("geometry"), index)?;
        if !geometry.is_areal() {
            return Err(malformed(index, "external lake geometry must be a polygon"));
        }
        let mut rec = FeatureRecord::new(wbic, FeatureKind::Waterbody, geometry);
        rec.wbic = Some(wbic.get());
        out.push(rec);
    }
    Ok(out)
}

fn coords<T: Scalar>(pts: &[Point<T>]) -> Value {
    Value::Array(pts.iter().map(|p| json!([p.x.to_f64_lossy(), p.y.to_f64_lossy()])).collect())
}

fn polygon_coords<T: Scalar>(p: &Polygon<T>) -> Value {
    let mut rings = vec![coords(p.exterior())];
    rings.extend(p.holes().iter().map(|h| coords(h)));
    Value::Array(rings)
}

pub fn geometry_to_geojson<T: Scalar>(g: &Geometry<T>) -> Value {
    match g {
        Geometry::Line(l) => json!({"type": "LineString", "coordinates": coords(l.vertices())}),
        Geometry::Polygon(p) => json!({"type": "Polygon", "coordinates": polygon_coords(p)}),
        Geometry::MultiPolygon(m) => json!({
            "type": "MultiPolygon",
            "coordinates": m.parts().iter().map(polygon_coords).collect::<Vec<_>>(),
        }),
    }
}

pub fn point_feature<T: Scalar>(p: &Point<T>, properties: Map<String, Value>) -> Value {
    json!({
        "type": "Feature",
        "properties": properties,
        "geometry": {"type": "Point", "coordinates": [p.x.to_f64_lossy(), p.y.to_f64_lossy()]},
    })
}

/// Builds a FeatureCollection from `(properties, geometry)` pairs.
pub fn feature_collection<'a, T: Scalar>(
    items: impl IntoIterator<Item = (Map<String, Value>, &'a Geometry<T>)>,
) -> Value {
    let features: Vec<Value> = items
        .into_iter()
        .map(|(props, g)| json!({"type": "Feature", "properties": props, "geometry": geometry_to_geojson(g)}))
        .collect();
    json!({"type": "FeatureCollection", "features": features})
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: &str = r#"{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}"#;

    fn collection(features: &[String]) -> String {
        format!(r#"{{"type":"FeatureCollection","features":[{}]}}"#, features.join(","))
    }

    fn feature(props: &str, geom: &str) -> String {
        format!(r#"{{"type":"Feature","properties":{props},"geometry":{geom}}}"#)
    }

    #[test]
    fn parses_waterbody() {
        let text = collection(&[feature(r#"{"COMID":42,"FTYPE":"LakePond"}"#, SQUARE)]);
        let recs = parse_features::<f64>(&text, FeatureKind::Waterbody).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].comid.get(), 42);
        assert_eq!(recs[0].ftype.as_deref(), Some("LakePond"));
    }

    #[test]
    fn parses_watershed_huc() {
        let text = collection(&[feature(r#"{"HUC12":"070900020504"}"#, SQUARE)]);
        let recs = parse_features::<f64>(&text, FeatureKind::Watershed).unwrap();
        let huc = recs[0].huc12.as_ref().unwrap();
        assert_eq!(huc.as_str(), "070900020504");
        assert_eq!(huc.huc10(), "0709000205");
        assert_eq!(recs[0].comid.get(), 70900020504);
    }

    #[test]
    fn missing_comid_names_index() {
        let text = collection(&[feature(r#"{"NAME":"x"}"#, SQUARE)]);
        let err = parse_features::<f64>(&text, FeatureKind::Waterbody).unwrap_err();
        assert_eq!(err.to_string(), "missing COMID at feature index 0");
    }

    #[test]
    fn geometry_errors() {
        let open = r#"{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}"#;
        let text = collection(&[feature(r#"{"COMID":1}"#, open)]);
        assert!(matches!(
            parse_features::<f64>(&text, FeatureKind::Waterbody),
            Err(IngestError::InvalidGeometry { index: 0, .. })
        ));

        let text = collection(&[feature(r#"{"COMID":1}"#, SQUARE), feature(r#"{"COMID":2}"#, "null")]);
        assert!(matches!(
            parse_features::<f64>(&text, FeatureKind::Waterbody),
            Err(IngestError::EmptyGeometry { index: 1 })
        ));

        let nested = r#"{"type":"Polygon","coordinates":[[0,0],[1,0]]}"#;
        let text = collection(&[feature(r#"{"COMID":1}"#, nested)]);
        assert!(matches!(
            parse_features::<f64>(&text, FeatureKind::Waterbody),
            Err(IngestError::MalformedGeometry { index: 0, .. })
        ));

        // Rivers must be lines.
        let text = collection(&[feature(r#"{"COMID":1}"#, SQUARE)]);
        assert!(parse_features::<f64>(&text, FeatureKind::RiverSegment).is_err());
        assert!(matches!(
            parse_features::<f64>(r#"{"type":"Feature"}"#, FeatureKind::Waterbody),
            Err(IngestError::NotFeatureCollection)
        ));
    }

    #[test]
    fn multilinestring_parts_are_joined() {
        let g = r#"{"type":"MultiLineString","coordinates":[[[0,0],[1,0]],[[1,0],[1,1]]]}"#;
        let text = collection(&[feature(r#"{"COMID":"7"}"#, g)]);
        let recs = parse_features::<f64>(&text, FeatureKind::RiverSegment).unwrap();
        match &recs[0].geometry {
            Geometry::Line(l) => assert_eq!(l.vertices().len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wbic_and_landcover_keys() {
        let text = collection(&[feature(r#"{"WBIC":2331600}"#, SQUARE)]);
        let recs = parse_wbic_features::<f64>(&text).unwrap();
        assert_eq!(recs[0].wbic, Some(2331600));

        let text = collection(&[feature(r#"{"isAG":1}"#, SQUARE), feature(r#"{"isAG":1}"#, SQUARE)]);
        let recs = parse_features::<f64>(&text, FeatureKind::LandCover).unwrap();
        assert_eq!(recs.iter().map(|r| r.comid.get()).collect::<Vec<_>>(), vec![1, 2]);
    }

    #[test]
    fn geojson_writer_roundtrips_through_parser() {
        let text = collection(&[feature(r#"{"COMID":42}"#, SQUARE)]);
        let recs = parse_features::<f64>(&text, FeatureKind::Waterbody).unwrap();
        let mut props = Map::new();
        props.insert("COMID".into(), json!(42));
        let fc = feature_collection([(props, &recs[0].geometry)]);
        let again = parse_features::<f64>(&fc.to_string(), FeatureKind::Waterbody).unwrap();
        assert_eq!(again, recs);
    }
}
