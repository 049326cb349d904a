//! `lpgraph`: run the toolkit's analyses on graph files or named families.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lpgraph::cheeger::{
    cheeger_at_infinity, cheeger_exhaustive_window, cheeger_family, cheeger_inequality_check_window,
    cheeger_sweep_window, CheegerResult, CheegerSeries, InequalityCheck, EXHAUSTIVE_LIMIT,
};
use lpgraph::generators::{parse_family, Family, FamilyKind, GraphFamily, MeasureChoice, Window};
use lpgraph::graph::{bipartition, combinatorial_degree, WeightedGraph};
use lpgraph::growth::{default_centers, growth_consequence_check, subexp_certificate, volume_profile, ConsequenceReport, GrowthProfile, SubexpCertificate};
use lpgraph::metric::{edge_distances, path_metric, verify_intrinsic_window, MetricChoice};
use lpgraph::operator::{bound_setup, heat_bound_check, resolvent_bound_check, BoundViolation, ResolventBoundReport, Truncation};
use lpgraph::report::{graph_from_json, graph_to_json, render_csv, render_report};
use lpgraph::spectra::{default_t_grid, spectral_report};
use lpgraph::tessellation::curvature_report;

#[derive(Parser)]
#[command(name = "lpgraph", version, about = "Spectral analysis of weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Size, degrees, geometry ratio and bipartiteness of a window.
    Info {
        #[command(flatten)]
        common: Common,
        /// Write the window graph in graph JSON format.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Intrinsic-metric certificate and jump size.
    Metric(Common),
    /// Volume growth profile, subexponential certificate and its consequences.
    Growth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        center: usize,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
    /// Spectrum, p-growth bounds, disk containment and bipartite symmetry.
    Spectra(Common),
    /// Cheeger constants: exhaustive or sweep, ball family, at infinity.
    Cheeger {
        #[command(flatten)]
        common: Common,
        /// Exclude vertices at depth below this for the constant at infinity.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Pointwise heat kernel and resolvent bounds; exit code 2 on violations.
    Heatcheck {
        #[command(flatten)]
        common: Common,
        /// Defaults to the radius.
        #[arg(long)]
        buffer: Option<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.5,1,2,5,10")]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0.5,1")]
        eps: Vec<f64>,
    },
    /// Curvature classification of a tessellation family and the matching checks.
    Curvature(Common),
    /// Write a family window as graph JSON.
    Generate {
        #[command(flatten)]
        common: Common,
        /// Add the weight of edges leaving the window to the killing term.
        #[arg(long)]
        fold_boundary: bool,
    },
}

#[derive(Args, Clone, Serialize)]
struct Common {
    /// Graph JSON file or family spec such as `tree:d=3,R=10`.
    input: String,
    /// Window radius; overrides `R=` in the spec.
    #[arg(long)]
    radius: Option<usize>,
    /// `m1`, `mn` or `given`.
    #[arg(long)]
    measure: Option<String>,
    /// `intrinsic`, `natural` or `d1`.
    #[arg(long, default_value = "intrinsic")]
    metric: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Report path; stdout when absent.
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<PathBuf>,
}

type AnyResult<T> = std::result::Result<T, Box<dyn std::error::Error>>;

struct Input {
    family: Family,
    radius: usize,
    metric: MetricChoice,
}

fn resolve(common: &Common) -> AnyResult<Input> {
    let (family, spec_radius) = if Path::new(&common.input).is_file() {
        let text = std::fs::read_to_string(&common.input)?;
        let g = graph_from_json(&text)?;
        (Family::from_graph(g, MeasureChoice::Given), None)
    } else {
        parse_family(&common.input)?
    };
    let family = match &common.measure {
        Some(m) => {
            let m = MeasureChoice::parse(m).ok_or_else(|| format!("unknown measure `{m}` (m1 | mn | given)"))?;
            Family::new(family.kind.clone(), m).with_killing(family.killing)
        }
        None => family,
    };
    let radius = match (common.radius, spec_radius) {
        (Some(r), _) | (None, Some(r)) => r,
        _ if family.is_finite() => finite_size(&family),
        _ => return Err(format!("`{}` is infinite: give a radius with R= or --radius", common.input).into()),
    };
    let metric = MetricChoice::parse(&common.metric)
        .ok_or_else(|| format!("unknown metric `{}` (intrinsic | natural | d1)", common.metric))?;
    Ok(Input { family, radius, metric })
}

/// Radius that covers a finite fixture.
fn finite_size(family: &Family) -> usize {
    match &family.kind {
        FamilyKind::Cycle { n } | FamilyKind::Path { n } | FamilyKind::Complete { n } | FamilyKind::Random { n, .. } => *n,
        FamilyKind::Graph(g) => g.vertex_count(),
        _ => 1,
    }
}

fn emit(common: &Common, text: &str) -> AnyResult<()> {
    match &common.out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_csv(common: &Common, header: &[&str], rows: &[Vec<f64>]) -> AnyResult<()> {
    if let Some(p) = &common.csv {
        std::fs::write(p, render_csv(header, rows))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct InfoReport {
    label: String,
    radius: usize,
    vertices: usize,
    edges: usize,
    has_boundary: bool,
    max_degree: usize,
    /// `max (n + c)/m` with `n` from the full family.
    bounded_geometry_ratio: f64,
    bipartite: bool,
    min_measure: f64,
    max_measure: f64,
}

fn info(common: &Common, export: Option<&Path>) -> AnyResult<u8> {
    let inp = resolve(common)?;
    let w = inp.family.materialize(inp.radius)?;
    let g = &w.graph;
    let n = w.full_normalizing_measure();
    let ratio = (0..w.len()).map(|x| (n[x] + g.killing()[x]) / g.measure()[x]).fold(0.0, f64::max);
    let report = InfoReport {
        label: w.label.clone(),
        radius: inp.radius,
        vertices: w.len(),
        edges: g.edges().len(),
        has_boundary: w.has_boundary(),
        max_degree: combinatorial_degree(g).into_iter().max().unwrap_or(0),
        bounded_geometry_ratio: ratio,
        bipartite: bipartition(g).is_some(),
        min_measure: g.measure().iter().copied().fold(f64::INFINITY, f64::min),
        max_measure: g.measure().iter().copied().fold(0.0, f64::max),
    };
    if let Some(p) = export {
        std::fs::write(p, graph_to_json(g))?;
    }
    emit(common, &render_report("info", common, &report, &[("bounded_geometry_ratio", "graph::bounded_geometry_ratio"), ("bipartite", "graph::bipartition")])?)?;
    Ok(0)
}

#[derive(Serialize)]
struct MetricReport {
    metric: MetricChoice,
    vertices: usize,
    intrinsic: bool,
    min_slack: f64,
    argmin: usize,
    jump_size: f64,
    /// Symmetry and triangle inequality of the full table (windows up to 2000 vertices).
    #[serde(skip_serializing_if = "Option::is_none")]
    axioms: Option<String>,
}

fn metric(common: &Common) -> AnyResult<u8> {
    let inp = resolve(common)?;
    let w = inp.family.materialize(inp.radius)?;
    let r = verify_intrinsic_window(&w, inp.metric)?;
    let weights = inp.metric.weights(&w.graph, &w.full_normalizing_measure());
    let jump = edge_distances(&w.graph, &weights)?.into_iter().fold(0.0, f64::max);
    let axioms = if w.len() <= 2000 {
        Some(path_metric(&w.graph, &weights)?.axiom_violation(1e-12).unwrap_or_else(|| "pass".into()))
    } else {
        None
    };
    let report = MetricReport { metric: inp.metric, vertices: w.len(), intrinsic: r.intrinsic, min_slack: r.min_slack, argmin: r.argmin, jump_size: jump, axioms };
    emit_csv(common, &["vertex", "slack"], &r.slack.iter().enumerate().map(|(x, s)| vec![x as f64, *s]).collect::<Vec<_>>())?;
    emit(common, &render_report("metric", common, &report, &[("intrinsic", "metric::verify_intrinsic_window"), ("jump_size", "metric::edge_distances")])?)?;
    Ok(0)
}

#[derive(Serialize)]
struct GrowthReport {
    profile: GrowthProfile,
    certificate: SubexpCertificate,
    consequences: ConsequenceReport,
    centers: Vec<usize>,
}

fn growth(common: &Common, center: usize, eps: f64) -> AnyResult<u8> {
    let inp = resolve(common)?;
    let f = &inp.family;
    let profile = volume_profile(f, inp.metric, center, inp.radius)?;
    let pool = f.materialize(inp.radius.div_ceil(2))?.len();
    let centers = default_centers(pool, common.seed);
    let certificate = subexp_certificate(f, inp.metric, eps, inp.radius, &centers)?;
    let consequences = growth_consequence_check(f, inp.metric, eps, inp.radius, &centers)?;
    if common.csv.is_some() {
        let mut rows = Vec::new();
        for &x in &centers {
            let p = volume_profile(f, inp.metric, x, inp.radius)?;
            for i in 0..p.radii.len() {
                rows.push(vec![x as f64, p.radii[i], p.volumes[i], p.counts[i] as f64]);
            }
        }
        emit_csv(common, &["center", "r", "volume", "count"], &rows)?;
    }
    let report = GrowthReport { profile, certificate, consequences, centers };
    let prov = [
        ("profile", "growth::volume_profile"),
        ("certificate", "growth::subexp_certificate"),
        ("consequences", "growth::growth_consequence_check"),
    ];
    emit(common, &render_report("growth", common, &report, &prov)?)?;
    Ok(0)
}

fn spectra(common: &Common) -> AnyResult<u8> {
    let inp = resolve(common)?;
    let t = Truncation::from_window(inp.family.materialize(inp.radius)?);
    let report = spectral_report(&t, &default_t_grid())?;
    emit_csv(common, &["index", "eigenvalue"], &report.eigenvalues.iter().enumerate().map(|(i, l)| vec![i as f64, *l]).collect::<Vec<_>>())?;
    let prov = [
        ("eigenvalues", "spectra::eigenvalues"),
        ("lambda_hat_1", "spectra::p_growth_bound"),
        ("lambda_hat_2", "spectra::p_growth_bound"),
        ("symmetry", "spectra::bipartite_symmetry_check"),
    ];
    emit(common, &render_report("spectra", common, &report, &prov)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct CheegerReport {
    window: CheegerResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    family: Option<CheegerSeries>,
    #[serde(skip_serializing_if = "Option::is_none")]
    at_infinity: Option<CheegerResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inequality: Option<InequalityCheck>,
}

fn cheeger(common: &Common, k: Option<usize>) -> AnyResult<u8> {
    let inp = resolve(common)?;
    let w = inp.family.materialize(inp.radius)?;
    let exhaustive = w.len() <= EXHAUSTIVE_LIMIT;
    let window = if exhaustive { cheeger_exhaustive_window(&w)? } else { cheeger_sweep_window(&w)? };
    let family = if inp.family.is_finite() { None } else { Some(cheeger_family(&inp.family, &(1..=inp.radius).collect::<Vec<_>>())?) };
    let at_infinity = k.map(|k| cheeger_at_infinity(&inp.family, k, inp.radius)).transpose()?;
    let inequality = if exhaustive && Truncation::from_window(w.clone()).is_normalized() { Some(cheeger_inequality_check_window(&w)?) } else { None };
    if let Some(s) = &family {
        emit_csv(common, &["R", "beta"], &s.radii.iter().zip(&s.values).map(|(r, b)| vec![*r as f64, *b]).collect::<Vec<_>>())?;
    }
    let report = CheegerReport { window, family, at_infinity, inequality };
    let prov = [
        ("window", if exhaustive { "cheeger::cheeger_exhaustive" } else { "cheeger::cheeger_sweep" }),
        ("family", "cheeger::cheeger_family"),
        ("at_infinity", "cheeger::cheeger_at_infinity"),
        ("inequality", "cheeger::cheeger_inequality_check"),
    ];
    emit(common, &render_report("cheeger", common, &report, &prov)?)?;
    Ok(0)
}

#[derive(Serialize)]
struct HeatReport {
    radius: usize,
    buffer: usize,
    pairs: usize,
    t_grid: Vec<f64>,
    heat_violations: usize,
    /// First violations, at most 20.
    heat_examples: Vec<BoundViolation>,
    resolvent: Vec<ResolventBoundReport>,
    pass: bool,
}

fn heatcheck(common: &Common, buffer: Option<usize>, t: &[f64], eps: &[f64]) -> AnyResult<u8> {
    let inp = resolve(common)?;
    let buffer = buffer.unwrap_or(inp.radius);
    let setup = bound_setup(&inp.family, inp.radius, buffer, inp.metric)?;
    let heat = heat_bound_check(&setup, t)?;
    let resolvent = eps.iter().map(|&e| resolvent_bound_check(&setup, e)).collect::<lpgraph::Result<Vec<_>>>()?;
    let pass = heat.is_empty() && resolvent.iter().all(|r| r.violations.is_empty());
    let k = setup.truncation.len();
    let report = HeatReport {
        radius: inp.radius,
        buffer,
        pairs: k * k,
        t_grid: t.to_vec(),
        heat_violations: heat.len(),
        heat_examples: heat.into_iter().take(20).collect(),
        resolvent,
        pass,
    };
    let prov = [("heat_violations", "operator::heat_bound_check"), ("resolvent", "operator::resolvent_bound_check")];
    emit(common, &render_report("heatcheck", common, &report, &prov)?)?;
    Ok(if pass { 0 } else { 2 })
}

fn curvature(common: &Common) -> AnyResult<u8> {
    let mut c = common.clone();
    if c.radius.is_none() && !c.input.contains("R=") {
        c.radius = Some(6);
    }
    let inp = resolve(&c)?;
    let report = curvature_report(&inp.family, inp.radius)?;
    emit(common, &render_report("curvature", &c, &report, &[("class", "tessellation::curvature_report")])?)?;
    Ok(0)
}

fn generate(common: &Common, fold_boundary: bool) -> AnyResult<u8> {
    let inp = resolve(common)?;
    let w: Window = inp.family.materialize(inp.radius)?;
    let g: WeightedGraph = if fold_boundary {
        w.graph.with_killing(w.graph.killing().iter().zip(&w.outer).map(|(c, o)| c + o).collect())?
    } else {
        w.graph
    };
    emit(common, &graph_to_json(&g))?;
    Ok(0)
}

fn run(cli: Cli) -> AnyResult<u8> {
    match cli.command {
        Command::Info { common, export } => info(&common, export.as_deref()),
        Command::Metric(common) => metric(&common),
        Command::Growth { common, center, eps } => growth(&common, center, eps),
        Command::Spectra(common) => spectra(&common),
        Command::Cheeger { common, k } => cheeger(&common, k),
        Command::Heatcheck { common, buffer, t, eps } => heatcheck(&common, buffer, &t, &eps),
        Command::Curvature(common) => curvature(&common),
        Command::Generate { common, fold_boundary } => generate(&common, fold_boundary),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
