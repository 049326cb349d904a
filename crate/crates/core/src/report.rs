//! Graph JSON format and deterministic report rendering.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::graph::{Edge, GraphData, WeightedGraph};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: usize,
    pub m: f64,
    #[serde(default)]
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub u: usize,
    pub v: usize,
    pub b: f64,
}

/// `{"vertices": [{id, m, c}], "edges": [{u, v, b}]}` with `u < v`, each edge once.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

impl GraphFile {
    pub fn from_graph(g: &WeightedGraph) -> GraphFile {
        let vertices = (0..g.vertex_count())
            .map(|id| VertexRecord { id, m: g.measure()[id], c: g.killing()[id] })
            .collect();
        let edges = g.edges().iter().map(|e| EdgeRecord { u: e.u, v: e.v, b: e.b }).collect();
        GraphFile { vertices, edges }
    }

    pub fn to_graph(&self) -> Result<WeightedGraph> {
        let n = self.vertices.len();
        let mut m = vec![0.0; n];
        let mut c = vec![0.0; n];
        let mut seen = vec![false; n];
        for (i, rec) in self.vertices.iter().enumerate() {
            if rec.id >= n {
                return Err(Error::GraphFile(format!("vertex record {i}: id {} out of range 0..{n}", rec.id)));
            }
            if std::mem::replace(&mut seen[rec.id], true) {
                return Err(Error::GraphFile(format!("vertex record {i}: duplicate id {}", rec.id)));
            }
            m[rec.id] = rec.m;
            c[rec.id] = rec.c;
        }
        let mut keys = BTreeSet::new();
        let mut edges = Vec::with_capacity(self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            if e.u >= n || e.v >= n {
                return Err(Error::GraphFile(format!("edge record {i}: endpoint out of range ({}, {})", e.u, e.v)));
            }
            if e.u == e.v {
                return Err(Error::GraphFile(format!("edge record {i}: self-loop at {}", e.u)));
            }
            if e.u > e.v {
                return Err(Error::GraphFile(format!("edge record {i}: expected u < v, got ({}, {})", e.u, e.v)));
            }
            if !keys.insert((e.u, e.v)) {
                return Err(Error::GraphFile(format!("edge record {i}: duplicate edge ({}, {})", e.u, e.v)));
            }
            edges.push(Edge { u: e.u, v: e.v, b: e.b });
        }
        WeightedGraph::new(GraphData::new(m, c, edges))
    }
}

pub fn graph_to_json(g: &WeightedGraph) -> String {
    serde_json::to_string_pretty(&GraphFile::from_graph(g)).expect("graph serializes") + "\n"
}

pub fn graph_from_json(s: &str) -> Result<WeightedGraph> {
    let file: GraphFile = serde_json::from_str(s)?;
    file.to_graph()
}

/// Rounds a float to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// Recursively rounds every float; object keys are already sorted by `serde_json`.
pub fn canonicalize(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = round12(n.as_f64().expect("f64 number"));
            serde_json::Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(canonicalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, canonicalize(v))).collect()),
        other => other,
    }
}

/// Report envelope: version, configuration, results and the origin of each result.
pub fn render_report(command: &str, config: &impl Serialize, results: &impl Serialize, provenance: &[(&str, &str)]) -> Result<String> {
    let mut root = Map::new();
    root.insert("command".into(), Value::String(command.into()));
    root.insert("version".into(), Value::String(VERSION.into()));
    root.insert("config".into(), serde_json::to_value(config)?);
    root.insert("results".into(), serde_json::to_value(results)?);
    let prov: Map<String, Value> = provenance.iter().map(|(k, v)| (k.to_string(), Value::String(v.to_string()))).collect();
    root.insert("provenance".into(), Value::Object(prov));
    Ok(serde_json::to_string_pretty(&canonicalize(Value::Object(root)))? + "\n")
}

/// Comma separated rows under a header line.
pub fn render_csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        out.push_str(&row.iter().map(|x| round12(*x).to_string()).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}
