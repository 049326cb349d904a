//! Browser bindings: each export takes a family spec and returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use lpgraph::generators::{parse_family, Family, GraphFamily};
use lpgraph::graph::bipartition;
use lpgraph::growth::volume_profile;
use lpgraph::metric::MetricChoice;
use lpgraph::operator::{assemble, bound_setup, heat_columns, log_decay_bound, Truncation};
use lpgraph::spectra::{bipartite_symmetry_check, disk_check, eigenvalues};

/// Keeps the page responsive.
pub const MAX_VERTICES: usize = 1500;

fn family(spec: &str, radius: u32) -> Result<(Family, usize), String> {
    let (f, r) = parse_family(spec).map_err(|e| e.to_string())?;
    let r = if radius > 0 { radius as usize } else { r.unwrap_or(if f.is_finite() { 10_000 } else { 4 }) };
    let size = f.materialize(r).map_err(|e| e.to_string())?.len();
    if size > MAX_VERTICES {
        return Err(format!("window has {size} vertices; the demo allows {MAX_VERTICES}"));
    }
    Ok((f, r))
}

#[derive(Serialize)]
struct Spectrum {
    label: String,
    vertices: usize,
    eigenvalues: Vec<f64>,
    bottom: f64,
    in_disk: bool,
    bipartite_symmetric: bool,
}

pub fn spectrum_json(spec: &str, radius: u32) -> Result<String, String> {
    let (f, r) = family(spec, radius)?;
    let tr = Truncation::from_window(f.materialize(r).map_err(|e| e.to_string())?);
    let l = assemble(&tr);
    let eigs = eigenvalues(&l).map_err(|e| e.to_string())?;
    let sym = bipartite_symmetry_check(&eigs, &l, bipartition(tr.graph()).as_ref());
    let out = Spectrum {
        label: f.label(),
        vertices: tr.len(),
        bottom: eigs[0],
        in_disk: l.normalized_closed && disk_check(&eigs, 1e-9),
        bipartite_symmetric: sym.pass,
        eigenvalues: eigs,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct HeatPoint {
    vertex: usize,
    d: f64,
    p: f64,
    bound: f64,
}

/// `p_t(root, y)` against the intrinsic distance, with the pointwise bound.
pub fn heat_profile_json(spec: &str, radius: u32, t: f64) -> Result<String, String> {
    let (f, r) = family(spec, radius)?;
    let setup = bound_setup(&f, r, r, MetricChoice::Intrinsic).map_err(|e| e.to_string())?;
    let root = setup.truncation.window.root;
    let col = heat_columns(&setup.laplacian, t, &[root]).map_err(|e| e.to_string())?.remove(0);
    let m = &setup.laplacian.m;
    let points: Vec<HeatPoint> = (0..col.len())
        .map(|y| {
            let d = setup.d(root, y);
            HeatPoint { vertex: y, d, p: col[y], bound: log_decay_bound(d, t) / (m[root] * m[y]).sqrt() }
        })
        .collect();
    serde_json::to_string(&points).map_err(|e| e.to_string())
}

pub fn growth_profile_json(spec: &str, radius: u32, metric: &str) -> Result<String, String> {
    let (f, r) = family(spec, radius)?;
    let metric = MetricChoice::parse(metric).ok_or_else(|| format!("unknown metric `{metric}`"))?;
    let p = volume_profile(&f, metric, 0, r).map_err(|e| e.to_string())?;
    serde_json::to_string(&p).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn spectrum(spec: &str, radius: u32) -> Result<String, JsValue> {
    spectrum_json(spec, radius).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn heat_profile(spec: &str, radius: u32, t: f64) -> Result<String, JsValue> {
    heat_profile_json(spec, radius, t).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn growth_profile(spec: &str, radius: u32, metric: &str) -> Result<String, JsValue> {
    growth_profile_json(spec, radius, metric).map_err(|e| JsValue::from_str(&e))
}
