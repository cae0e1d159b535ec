use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{ArgGroup, Args, Parser, Subcommand};
use hydrograph::aggregate::{aggregate_with_log, verify_connectivity, MergeContext};
use hydrograph::analysis::{
    load_sample_manifest, metrics_table, metrics_to_csv, parse_samples, summarize_all, tsi_chla, tsi_tp,
    ClassifyConfig, Cohort, LakeClass, LakeSamples, SummaryInputs,
};
use hydrograph::builder::{
    assign_hucs, attach_point_sources, build_network, locate_point_sources, parse_point_sources, BuildInputs,
};
use hydrograph::ingest::{
    feature_collection, parse_features, parse_flow_table, parse_huc_table, parse_kind_table, parse_merge_table,
    serialize_flow_table, serialize_huc_table, serialize_kind_table, serialize_merge_table, BuildConfig,
};
use hydrograph::{Comid, Direction, FeatureKind, HydroGraph, NodeKind};
use serde_json::{json, Map, Value};

use crate::error::ServiceError;
use crate::http::{self, AppState};
use crate::views::{self, QueryError, View};
use crate::workspace::{self, read_text, write_text, Snapshot};

#[derive(Debug, Parser)]
#[command(name = "hydrograph", version, about = "Waterbody connectivity graphs: build, aggregate, query, serve")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a workspace from flowlines, waterbodies, watersheds and a flow table.
    Build(BuildArgs),
    /// Merge river nodes within HUC12 watersheds.
    Aggregate(AggregateArgs),
    /// Check waterbody connectivity between an original and an aggregated edge list.
    Verify(VerifyArgs),
    /// Everything upstream of a node.
    Upstream(QueryArgs),
    /// Everything downstream of a node.
    Downstream(QueryArgs),
    /// Attach point sources (e.g. CAFOs) to the nearest same-HUC12 node.
    AttachSources(AttachArgs),
    /// Classify lakes as clean or polluted from TP and chlorophyll-a samples.
    Classify(ClassifyArgs),
    /// Cohort metrics for classified lakes.
    Metrics(MetricsArgs),
    /// Carlson trophic state index.
    Tsi(TsiArgs),
    /// Serve the HTTP API over a workspace.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long)]
    rivers: PathBuf,
    #[arg(long)]
    waterbodies: PathBuf,
    #[arg(long)]
    watersheds: PathBuf,
    #[arg(long)]
    flow: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Point-source CSV (`SOURCE_ID,LABEL,X,Y`; SOURCE_ID optional).
    #[arg(long)]
    sources: Option<PathBuf>,
    #[arg(long)]
    ag: Option<PathBuf>,
    #[arg(long)]
    urban: Option<PathBuf>,
    /// Workspace directory to create or overwrite.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    kinds: PathBuf,
    #[arg(long)]
    hucs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// MERGED_COMID,SURVIVOR_COMID table.
    #[arg(long)]
    map: PathBuf,
    /// Optional JSON log of every merge.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    original: PathBuf,
    #[arg(long)]
    aggregated: PathBuf,
    #[arg(long)]
    kinds: PathBuf,
    /// Merge table; a merged waterbody fails verification.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["graph", "workspace"])))]
struct QueryArgs {
    /// Edge list to query.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    kinds: Option<PathBuf>,
    #[arg(long, requires = "graph")]
    hucs: Option<PathBuf>,
    /// Workspace directory to query instead of a bare edge list.
    #[arg(long)]
    workspace: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "original", requires = "workspace")]
    view: View,
    #[arg(long)]
    node: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AttachArgs {
    #[arg(long, env = "HYDROGRAPH_WORKSPACE")]
    workspace: PathBuf,
    #[arg(long)]
    sources: PathBuf,
    /// Workspace directory to write; may be the input workspace.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["samples", "manifest"])))]
struct ClassifyArgs {
    /// Long-format samples `COMID,PARAM,VALUE`.
    #[arg(long)]
    samples: Option<PathBuf>,
    /// `COMID,FILE` index of per-lake `PARAM,VALUE` files.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    min_count: usize,
    #[arg(long, default_value_t = 15.0)]
    clean_tp_max: f64,
    #[arg(long, default_value_t = 5.0)]
    clean_chla_max: f64,
    #[arg(long, default_value_t = 60.0)]
    polluted_tp_min: f64,
    #[arg(long, default_value_t = 15.0)]
    polluted_chla_min: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long, env = "HYDROGRAPH_WORKSPACE")]
    workspace: PathBuf,
    /// Output of `classify`.
    #[arg(long)]
    classes: PathBuf,
    /// Waterbody polygons for classified lakes that are not graph nodes.
    #[arg(long)]
    lakes: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("param").required(true).args(["tp", "chla"])))]
struct TsiArgs {
    /// Total phosphorus, mg/m³.
    #[arg(long)]
    tp: Option<f64>,
    /// Chlorophyll-a, mg/m³.
    #[arg(long)]
    chla: Option<f64>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "HYDROGRAPH_WORKSPACE")]
    workspace: PathBuf,
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: std::net::IpAddr,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), ServiceError> {
    match cmd {
        Command::Build(a) => build(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Verify(a) => verify(a),
        Command::Upstream(a) => query(a, Direction::Upstream),
        Command::Downstream(a) => query(a, Direction::Downstream),
        Command::AttachSources(a) => attach(a),
        Command::Classify(a) => classify(a),
        Command::Metrics(a) => metrics(a),
        Command::Tsi(a) => tsi(a),
        Command::Serve(a) => serve(a),
    }
}

fn parsed<T>(path: &Path, f: impl FnOnce(&[u8]) -> Result<T, hydrograph::IngestError>) -> Result<T, ServiceError> {
    let text = read_text(path)?;
    f(text.as_bytes()).map_err(|e| ServiceError::input(path, e))
}

fn features(path: &Path, kind: FeatureKind) -> Result<Vec<hydrograph::FeatureRecord>, ServiceError> {
    let text = read_text(path)?;
    parse_features(&text, kind).map_err(|e| ServiceError::input(path, e))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), ServiceError> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| if text.ends_with('\n') { Ok(()) } else { stdout.write_all(b"\n") })
                .map_err(|e| ServiceError::io(Path::new("<stdout>"), e))
        }
    }
}

fn to_json(v: &impl serde::Serialize) -> Result<String, ServiceError> {
    serde_json::to_string(v).map_err(|e| ServiceError::Invalid(e.to_string()))
}

fn node_geojson(g: &HydroGraph, geoms: &BTreeMap<Comid, hydrograph::Geometry>, kind: NodeKind) -> Value {
    feature_collection(geoms.iter().filter(|(c, _)| g.kind(**c) == Some(kind)).map(|(c, geom)| {
        let mut p = Map::new();
        p.insert("COMID".into(), json!(c.get()));
        if let Some(h) = g.huc12(*c) {
            p.insert("HUC12".into(), json!(h.as_str()));
        }
        (p, geom)
    }))
}

/// Writes the graph tables of a workspace.
fn write_graph(dir: &Path, g: &HydroGraph) -> Result<(), ServiceError> {
    write_text(&dir.join(workspace::EDGES), &serialize_flow_table(&g.edge_list()))?;
    write_text(&dir.join(workspace::KINDS), &serialize_kind_table(&g.kinds()))?;
    write_text(&dir.join(workspace::HUCS), &serialize_huc_table(&g.hucs()))
}

fn build(a: BuildArgs) -> Result<(), ServiceError> {
    let (cfg, cfg_text) = match &a.config {
        Some(p) => {
            let text = read_text(p)?;
            (BuildConfig::from_toml(&text).map_err(|e| ServiceError::input(p, e))?, Some(text))
        }
        None => (BuildConfig::default(), None),
    };
    let flow = parsed(&a.flow, |b| parse_flow_table(b))?;
    let inputs = BuildInputs {
        rivers: features(&a.rivers, FeatureKind::RiverSegment)?,
        waterbodies: features(&a.waterbodies, FeatureKind::Waterbody)?,
        watersheds: features(&a.watersheds, FeatureKind::Watershed)?,
        flow,
    };
    let watersheds = inputs.watersheds.clone();
    let mut out = build_network(inputs, &cfg);

    let mut located = Vec::new();
    if let Some(p) = &a.sources {
        let rows = parsed(p, |b| parse_point_sources(b))?;
        let (found, outside) = locate_point_sources(&rows, &watersheds);
        let (g, report) = attach_point_sources(&out.graph, &found, &out.centroids);
        out.graph = g;
        out.report.point_sources_attached = report.attached.len();
        out.report.point_sources_skipped = report.skipped.len() + outside.len();
        out.report.nodes = out.graph.node_count();
        out.report.edges = out.graph.edge_count();
        located = found;
    }

    std::fs::create_dir_all(&a.out).map_err(|e| ServiceError::io(&a.out, e))?;
    write_graph(&a.out, &out.graph)?;
    for (name, kind) in [(workspace::RIVERS, NodeKind::River), (workspace::WATERBODIES, NodeKind::Waterbody)] {
        write_text(&a.out.join(name), &to_json(&node_geojson(&out.graph, &out.geometries, kind))?)?;
    }
    write_text(&a.out.join(workspace::WATERSHEDS), &read_text(&a.watersheds)?)?;
    for (src, name) in [(&a.ag, workspace::AG_COVER), (&a.urban, workspace::URBAN_COVER)] {
        if let Some(p) = src {
            features(p, FeatureKind::LandCover)?;
            write_text(&a.out.join(name), &read_text(p)?)?;
        }
    }
    if let Some(text) = cfg_text {
        write_text(&a.out.join(workspace::CONFIG), &text)?;
    }
    if a.sources.is_some() {
        write_text(&a.out.join(workspace::SOURCES), &workspace::serialize_sources(&located)?)?;
    }
    write_text(&a.out.join("report.json"), &to_json(&out.report)?)?;
    emit(None, &out.report.to_text())
}

fn aggregate(a: AggregateArgs) -> Result<(), ServiceError> {
    let edges = parsed(&a.input, |b| parse_flow_table(b))?;
    let kinds = parsed(&a.kinds, |b| parse_kind_table(b))?;
    let hucs = parsed(&a.hucs, |b| parse_huc_table(b))?;
    let ctx = MergeContext::new(edges, kinds, hucs);
    let before = ctx.nodes().len();
    let waterbodies = ctx.waterbody_count();
    let out = aggregate_with_log(ctx);
    if out.context.waterbody_count() != waterbodies {
        return Err(ServiceError::Invalid("aggregation changed the waterbody count".into()));
    }
    write_text(&a.out, &serialize_flow_table(&out.context.edges))?;
    write_text(&a.map, &serialize_merge_table(&out.context.merged_into))?;
    if let Some(p) = &a.log {
        write_text(p, &to_json(&out.merges)?)?;
    }
    emit(
        None,
        &format!(
            "nodes {before} -> {} in {} sweeps; {} waterbodies kept; {} edges",
            out.context.nodes().len(),
            out.sweeps,
            waterbodies,
            out.context.edges.len()
        ),
    )
}

fn verify(a: VerifyArgs) -> Result<(), ServiceError> {
    let original = parsed(&a.original, |b| parse_flow_table(b))?;
    let aggregated = parsed(&a.aggregated, |b| parse_flow_table(b))?;
    let kinds = parsed(&a.kinds, |b| parse_kind_table(b))?;
    if let Some(p) = &a.map {
        let merges = parsed(p, |b| parse_merge_table(b))?;
        if let Some(c) = merges.keys().find(|c| kinds.get(c) == Some(&NodeKind::Waterbody)) {
            return Err(ServiceError::Invalid(format!("waterbody {c} was merged")));
        }
    }
    // Edge lists cannot carry isolated nodes, so both sides get every waterbody.
    let lakes: Vec<Comid> = kinds.iter().filter(|(_, k)| **k == NodeKind::Waterbody).map(|(c, _)| *c).collect();
    let none = BTreeMap::new();
    let g0 = HydroGraph::from_parts(lakes.iter().copied(), &original, &kinds, &none);
    let g1 = HydroGraph::from_parts(lakes.iter().copied(), &aggregated, &kinds, &none);
    let report = verify_connectivity(&g0, &g1)?;
    emit(a.out.as_deref(), &to_json(&report)?)?;
    if report.mismatches.is_empty() {
        Ok(())
    } else {
        Err(ServiceError::Invalid(format!(
            "{} of {} waterbody pairs changed connectivity",
            report.mismatches.len(),
            report.checked_pairs
        )))
    }
}

fn query_failed(e: QueryError) -> ServiceError {
    match e {
        QueryError::Failed(inner) => inner,
        other => ServiceError::Invalid(other.to_string()),
    }
}

fn query(a: QueryArgs, direction: Direction) -> Result<(), ServiceError> {
    let snapshot = match (&a.graph, &a.workspace) {
        (Some(edges), _) => {
            let edges = parsed(edges, |b| parse_flow_table(b))?;
            let kinds = a.kinds.as_deref().map(|p| parsed(p, |b| parse_kind_table(b))).transpose()?.unwrap_or_default();
            let hucs = a.hucs.as_deref().map(|p| parsed(p, |b| parse_huc_table(b))).transpose()?.unwrap_or_default();
            Snapshot::from_graph(HydroGraph::from_parts(kinds.keys().copied(), &edges, &kinds, &hucs))
        }
        (None, Some(dir)) => Snapshot::load(dir)?,
        (None, None) => return Err(ServiceError::Invalid("pass --graph or --workspace".into())),
    };
    let node = Comid::new(a.node).map_err(|e| ServiceError::Invalid(e.to_string()))?;
    let view = if a.workspace.is_some() { a.view } else { View::Original };
    let doc = views::neighborhood(&snapshot, view, node, direction).map_err(query_failed)?;
    emit(a.out.as_deref(), &to_json(&doc)?)
}

fn attach(a: AttachArgs) -> Result<(), ServiceError> {
    let snap = Snapshot::load(&a.workspace)?;
    let rows = parsed(&a.sources, |b| parse_point_sources(b))?;
    let (mut found, outside) = locate_point_sources(&rows, &snap.watersheds);
    let (g, report) = attach_point_sources(&snap.graph, &found, &snap.centroids);
    found.retain(|s| report.attached.iter().any(|(id, _)| *id == s.source_id));
    let mut all = snap.sources.clone();
    all.extend(found);

    std::fs::create_dir_all(&a.out).map_err(|e| ServiceError::io(&a.out, e))?;
    if a.out != a.workspace {
        for name in workspace::STATIC_FILES {
            let src = a.workspace.join(name);
            if src.exists() {
                write_text(&a.out.join(name), &read_text(&src)?)?;
            }
        }
    }
    write_graph(&a.out, &g)?;
    write_text(&a.out.join(workspace::SOURCES), &workspace::serialize_sources(&all)?)?;
    let doc = json!({
        "attached": report.attached.iter().map(|(s, n)| json!({"source": s.get(), "node": n.get()})).collect::<Vec<_>>(),
        "skipped": report.skipped.iter().map(|c| c.get()).collect::<Vec<_>>(),
        "outside_watersheds": outside.iter().map(|c| c.get()).collect::<Vec<_>>(),
    });
    emit(None, &to_json(&doc)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

fn classify(a: ClassifyArgs) -> Result<(), ServiceError> {
    let samples: Vec<LakeSamples<f64>> = match (&a.samples, &a.manifest) {
        (Some(p), _) => parsed(p, |b| parse_samples(b))?,
        (None, Some(m)) => load_sample_manifest(m).map_err(|e| ServiceError::input(m, e))?,
        (None, None) => return Err(ServiceError::Invalid("pass --samples or --manifest".into())),
    };
    let cfg = ClassifyConfig {
        min_count: a.min_count,
        clean_tp_max: a.clean_tp_max,
        clean_chla_max: a.clean_chla_max,
        polluted_tp_min: a.polluted_tp_min,
        polluted_chla_min: a.polluted_chla_min,
    };
    cfg.validate()?;
    let mut out = String::from("COMID,CLASS,N_TP,N_CHLA,MEAN_TP,MEAN_CHLA,TSI_TP,TSI_CHLA\n");
    for s in &samples {
        let (tp, chla) = (s.mean_tp(), s.mean_chla());
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.comid,
            cfg.classify(s).as_str(),
            s.tp.len(),
            s.chla.len(),
            fmt_opt(tp),
            fmt_opt(chla),
            fmt_opt(tp.and_then(|v| tsi_tp(v).ok())),
            fmt_opt(chla.and_then(|v| tsi_chla(v).ok())),
        ));
    }
    emit(a.out.as_deref(), &out)
}

fn read_classes(path: &Path) -> Result<BTreeMap<Comid, Cohort>, ServiceError> {
    #[derive(serde::Deserialize)]
    struct Row {
        #[serde(rename = "COMID")]
        comid: u64,
        #[serde(rename = "CLASS")]
        class: String,
    }
    let text = read_text(path)?;
    let mut out = BTreeMap::new();
    for (i, row) in csv::Reader::from_reader(text.as_bytes()).deserialize::<Row>().enumerate() {
        let row = row.map_err(|e| ServiceError::input(path, e.into()))?;
        let comid = Comid::new(row.comid).map_err(|e| ServiceError::input(path, e))?;
        let class = match row.class.as_str() {
            "Clean" => LakeClass::Clean,
            "Polluted" => LakeClass::Polluted,
            "Neither" => LakeClass::Neither,
            "InsufficientData" => LakeClass::InsufficientData,
            other => {
                return Err(ServiceError::Invalid(format!(
                    "{}: row {}: unknown class {other:?}",
                    path.display(),
                    i + 1
                )))
            }
        };
        if let Some(c) = Cohort::from_class(class) {
            out.insert(comid, c);
        }
    }
    Ok(out)
}

fn metrics(a: MetricsArgs) -> Result<(), ServiceError> {
    let snap = Snapshot::load(&a.workspace)?;
    let cohorts = read_classes(&a.classes)?;
    let lakes: Vec<Comid> = cohorts.keys().copied().collect();
    let lake_hucs = match &a.lakes {
        Some(p) => {
            let recs: Vec<_> = features(p, FeatureKind::Waterbody)?
                .into_iter()
                .filter(|r| cohorts.contains_key(&r.comid) && !snap.graph.contains(r.comid))
                .collect();
            assign_hucs(&recs, &snap.watersheds).hucs
        }
        None => BTreeMap::new(),
    };
    let inputs = SummaryInputs {
        geometries: &snap.geometries,
        watersheds: &snap.watershed_index,
        ag_cover: &snap.ag_cover,
        urban_cover: &snap.urban_cover,
        units: snap.config.units,
        grid_step: snap.config.grid_step,
        min_samples: snap.config.min_samples,
    };
    let summaries = summarize_all(&snap.graph, &lakes, &lake_hucs, &snap.sources, &inputs)?;
    let rows = metrics_table(&cohorts, &summaries)?;
    if let Some(p) = &a.json {
        write_text(p, &to_json(&json!({"rows": rows, "summaries": summaries.values().collect::<Vec<_>>()}))?)?;
    }
    emit(a.out.as_deref(), &metrics_to_csv(&rows))
}

fn tsi(a: TsiArgs) -> Result<(), ServiceError> {
    let v = match (a.tp, a.chla) {
        (Some(tp), _) => tsi_tp(tp)?,
        (None, Some(chla)) => tsi_chla(chla)?,
        (None, None) => return Err(ServiceError::Invalid("pass --tp or --chla".into())),
    };
    emit(None, &format!("{v:.2}"))
}

fn serve(a: ServeArgs) -> Result<(), ServiceError> {
    let snap = Snapshot::load(&a.workspace)?;
    let state = Arc::new(AppState::new(snap, Some(a.workspace.clone())));
    let rt = tokio::runtime::Runtime::new().map_err(|e| ServiceError::io(Path::new("tokio runtime"), e))?;
    rt.block_on(http::serve(state, std::net::SocketAddr::new(a.host, a.port)))
}
