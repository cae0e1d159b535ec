#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::{json, Value};

pub const A: u64 = 101;
pub const B: u64 = 102;
pub const C: u64 = 103;
pub const D: u64 = 104;

pub const HUC_WEST: &str = "070900020501";
pub const HUC_EAST: &str = "070900020502";
pub const HUC_NORTH: &str = "070900020503";
pub const HUC_SPRING: &str = "070900020504";

/// Fresh scratch directory under the system temp dir.
pub fn scratch(tag: &str) -> PathBuf {
    static NEXT: AtomicUsize = AtomicUsize::new(0);
    let n = NEXT.fetch_add(1, Ordering::Relaxed);
    let dir = std::env::temp_dir().join(format!("hg-service-{tag}-{}-{n}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn line(comid: u64, pts: &[(f64, f64)]) -> Value {
    json!({
        "type": "Feature",
        "properties": {"COMID": comid},
        "geometry": {"type": "LineString", "coordinates": pts.iter().map(|(x, y)| json!([x, y])).collect::<Vec<_>>()},
    })
}

fn rect(props: Value, x0: f64, y0: f64, x1: f64, y1: f64) -> Value {
    json!({
        "type": "Feature",
        "properties": props,
        "geometry": {"type": "Polygon", "coordinates": [[[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]]},
    })
}

fn collection(features: Vec<Value>) -> String {
    json!({"type": "FeatureCollection", "features": features}).to_string()
}

/// Raw inputs for two basins.
///
/// Southern basin: rivers 1 -> 2 -> 4 -> 5 along y = 0, river 1 crossing lake
/// A and river 4 crossing lakes B and C. Northern basin: 9 -> 7 -> 8 along
/// y = 50, river 8 crossing lake D, river 9 alone in its watershed.
pub fn write_inputs(dir: &Path) {
    let rivers = vec![
        line(1, &[(0.0, 0.0), (10.0, 0.0)]),
        line(2, &[(10.0, 0.0), (20.0, 0.0)]),
        line(4, &[(20.0, 0.0), (40.0, 0.0)]),
        line(5, &[(40.0, 0.0), (50.0, 0.0)]),
        line(9, &[(60.0, 50.0), (70.0, 50.0)]),
        line(7, &[(80.0, 50.0), (90.0, 50.0)]),
        line(8, &[(90.0, 50.0), (110.0, 50.0)]),
    ];
    let lakes = vec![
        rect(json!({"COMID": A}), 4.0, -1.0, 6.0, 1.0),
        rect(json!({"COMID": B}), 24.0, -1.0, 26.0, 1.0),
        rect(json!({"COMID": C}), 34.0, -1.0, 36.0, 1.0),
        rect(json!({"COMID": D}), 99.0, 49.0, 101.0, 51.0),
    ];
    let sheds = vec![
        rect(json!({"HUC12": HUC_WEST}), -5.0, -10.0, 30.0, 10.0),
        rect(json!({"HUC12": HUC_EAST}), 30.0, -10.0, 60.0, 10.0),
        rect(json!({"HUC12": HUC_NORTH}), 75.0, 40.0, 120.0, 60.0),
        rect(json!({"HUC12": HUC_SPRING}), 55.0, 40.0, 75.0, 60.0),
    ];
    let ag = vec![rect(json!({}), -5.0, -10.0, 12.5, 10.0)];
    std::fs::write(dir.join("rivers.geojson"), collection(rivers)).unwrap();
    std::fs::write(dir.join("lakes.geojson"), collection(lakes)).unwrap();
    std::fs::write(dir.join("sheds.geojson"), collection(sheds)).unwrap();
    std::fs::write(dir.join("ag.geojson"), collection(ag)).unwrap();
    std::fs::write(dir.join("flow.csv"), "FROMCOMID,TOCOMID\n1,2\n2,4\n4,5\n5,0\n9,7\n7,8\n").unwrap();
    std::fs::write(dir.join("build.toml"), "grid_step = 0.5\n").unwrap();
}

pub fn run(args: &[&str]) -> i32 {
    hydrograph_service::cli::run(std::iter::once("hydrograph").chain(args.iter().copied()))
}

/// Builds the fixture workspace and returns `(scratch, workspace)`.
pub fn workspace(tag: &str) -> (PathBuf, PathBuf) {
    let root = scratch(tag);
    write_inputs(&root);
    let ws = root.join("ws");
    let p = |name: &str| root.join(name).to_string_lossy().into_owned();
    let code = run(&[
        "build",
        "--rivers",
        &p("rivers.geojson"),
        "--waterbodies",
        &p("lakes.geojson"),
        "--watersheds",
        &p("sheds.geojson"),
        "--flow",
        &p("flow.csv"),
        "--config",
        &p("build.toml"),
        "--ag",
        &p("ag.geojson"),
        "--out",
        &ws.to_string_lossy(),
    ]);
    assert_eq!(code, 0, "build failed");
    (root, ws)
}

pub fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}
