//! Finite weighted graphs `(X, b, c, m)`.
//!
//! A [`WeightedGraph`] carries a symmetric edge weight `b > 0` on an undirected
//! edge set, a killing term `c >= 0` and a vertex measure `m > 0`. Vertices are
//! dense indices `0..n`. Construction goes through [`GraphData`], which can hold
//! arbitrary (possibly invalid) data and reports every rule it breaks.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VertexId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: VertexId,
    pub v: VertexId,
    pub b: f64,
}

/// A single broken invariant, naming the offending vertex or edge.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    MeasureNotPositive { vertex: VertexId, m: f64 },
    KillingNegative { vertex: VertexId, c: f64 },
    WeightNotPositive { u: VertexId, v: VertexId, b: f64 },
    SelfLoop { vertex: VertexId },
    DuplicateEdge { u: VertexId, v: VertexId },
    VertexOutOfRange { u: VertexId, v: VertexId },
    Isolated { vertex: VertexId },
    LengthMismatch { m: usize, c: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::MeasureNotPositive { vertex, m } => {
                write!(f, "vertex {vertex}: measure must be positive (m = {m})")
            }
            Violation::KillingNegative { vertex, c } => {
                write!(f, "vertex {vertex}: killing term must be nonnegative (c = {c})")
            }
            Violation::WeightNotPositive { u, v, b } => {
                write!(f, "edge {u}-{v}: weight must be positive (b = {b})")
            }
            Violation::SelfLoop { vertex } => write!(f, "vertex {vertex}: self-loop"),
            Violation::DuplicateEdge { u, v } => write!(f, "edge {u}-{v}: duplicate"),
            Violation::VertexOutOfRange { u, v } => {
                write!(f, "edge {u}-{v}: endpoint out of range")
            }
            Violation::Isolated { vertex } => write!(f, "vertex {vertex}: isolated"),
            Violation::LengthMismatch { m, c } => {
                write!(f, "measure has {m} entries but killing term has {c}")
            }
        }
    }
}

/// Raw, unvalidated graph data.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GraphData {
    pub m: Vec<f64>,
    pub c: Vec<f64>,
    pub edges: Vec<Edge>,
}

impl GraphData {
    pub fn new(m: Vec<f64>, c: Vec<f64>, edges: Vec<Edge>) -> Self {
        GraphData { m, c, edges }
    }

    /// Unit measure, zero killing.
    pub fn unit(vertex_count: usize, edges: Vec<Edge>) -> Self {
        GraphData { m: vec![1.0; vertex_count], c: vec![0.0; vertex_count], edges }
    }

    pub fn vertex_count(&self) -> usize {
        self.m.len()
    }

    /// Every violated invariant; empty iff the data forms a valid [`WeightedGraph`].
    pub fn validate(&self) -> Vec<Violation> {
        self.violations(true)
    }

    fn violations(&self, require_edges: bool) -> Vec<Violation> {
        let n = self.m.len();
        let mut out = Vec::new();
        if self.c.len() != n {
            out.push(Violation::LengthMismatch { m: n, c: self.c.len() });
        }
        for (x, &m) in self.m.iter().enumerate() {
            // NaN fails this comparison too
            if !(m > 0.0 && m.is_finite()) {
                out.push(Violation::MeasureNotPositive { vertex: x, m });
            }
        }
        for (x, &c) in self.c.iter().enumerate() {
            if !(c >= 0.0 && c.is_finite()) {
                out.push(Violation::KillingNegative { vertex: x, c });
            }
        }
        let mut seen = HashSet::new();
        let mut touched = vec![false; n];
        for e in &self.edges {
            if e.u >= n || e.v >= n {
                out.push(Violation::VertexOutOfRange { u: e.u, v: e.v });
                continue;
            }
            if e.u == e.v {
                out.push(Violation::SelfLoop { vertex: e.u });
                continue;
            }
            if !(e.b > 0.0 && e.b.is_finite()) {
                out.push(Violation::WeightNotPositive { u: e.u, v: e.v, b: e.b });
            }
            let key = (e.u.min(e.v), e.u.max(e.v));
            if !seen.insert(key) {
                out.push(Violation::DuplicateEdge { u: key.0, v: key.1 });
            }
            touched[e.u] = true;
            touched[e.v] = true;
        }
        if require_edges {
            for (x, t) in touched.iter().enumerate() {
                if !t {
                    out.push(Violation::Isolated { vertex: x });
                }
            }
        }
        out
    }
}

/// Validated, immutable weighted graph.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    m: Vec<f64>,
    c: Vec<f64>,
    edges: Vec<Edge>,
    // (neighbor, b, edge index), sorted by neighbor
    adj: Vec<Vec<(VertexId, f64, usize)>>,
}

impl WeightedGraph {
    pub fn new(data: GraphData) -> Result<Self> {
        let v = data.validate();
        if !v.is_empty() {
            return Err(Error::InvalidGraph(v));
        }
        Ok(Self::build(data))
    }

    /// Like [`WeightedGraph::new`] but tolerates vertices without edges. Used for
    /// windows of larger graphs, where a vertex may only have edges leaving the window.
    pub fn new_allow_isolated(data: GraphData) -> Result<Self> {
        let v = data.violations(false);
        if !v.is_empty() {
            return Err(Error::InvalidGraph(v));
        }
        Ok(Self::build(data))
    }

    fn build(data: GraphData) -> Self {
        let n = data.m.len();
        let mut edges: Vec<Edge> = data
            .edges
            .into_iter()
            .map(|e| Edge { u: e.u.min(e.v), v: e.u.max(e.v), b: e.b })
            .collect();
        edges.sort_by_key(|e| (e.u, e.v));
        let mut adj = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, e.b, i));
            adj[e.v].push((e.u, e.b, i));
        }
        for a in &mut adj {
            a.sort_by_key(|t| t.0);
        }
        WeightedGraph { m: data.m, c: data.c, edges, adj }
    }

    pub fn vertex_count(&self) -> usize {
        self.m.len()
    }

    /// Edges with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn measure(&self) -> &[f64] {
        &self.m
    }

    pub fn killing(&self) -> &[f64] {
        &self.c
    }

    /// `(neighbor, b, edge index)` triples, sorted by neighbor.
    pub fn neighbors(&self, x: VertexId) -> &[(VertexId, f64, usize)] {
        &self.adj[x]
    }

    /// `b(x, y)`, zero for non-neighbors.
    pub fn weight(&self, x: VertexId, y: VertexId) -> f64 {
        match self.adj[x].binary_search_by_key(&y, |t| t.0) {
            Ok(i) => self.adj[x][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn to_data(&self) -> GraphData {
        GraphData { m: self.m.clone(), c: self.c.clone(), edges: self.edges.clone() }
    }

    pub fn with_measure(&self, m: Vec<f64>) -> Result<Self> {
        let mut d = self.to_data();
        d.m = m;
        Self::new_allow_isolated(d)
    }

    pub fn with_killing(&self, c: Vec<f64>) -> Result<Self> {
        let mut d = self.to_data();
        d.c = c;
        Self::new_allow_isolated(d)
    }

    /// Multiply `b`, `c` and `m` by `lambda > 0`. The Laplacian is unchanged.
    pub fn scaled(&self, lambda: f64) -> Self {
        let d = GraphData {
            m: self.m.iter().map(|x| x * lambda).collect(),
            c: self.c.iter().map(|x| x * lambda).collect(),
            edges: self.edges.iter().map(|e| Edge { b: e.b * lambda, ..*e }).collect(),
        };
        Self::build(d)
    }
}

/// `n(x) = sum_y b(x, y)`.
pub fn normalizing_measure(g: &WeightedGraph) -> Vec<f64> {
    (0..g.vertex_count()).map(|x| g.neighbors(x).iter().map(|t| t.1).sum()).collect()
}

/// Number of neighbors of each vertex.
pub fn combinatorial_degree(g: &WeightedGraph) -> Vec<usize> {
    (0..g.vertex_count()).map(|x| g.neighbors(x).len()).collect()
}

/// `max_x (n(x) + c(x)) / m(x)`; twice this bounds the operator norm of the Laplacian.
pub fn bounded_geometry_ratio(g: &WeightedGraph) -> f64 {
    normalizing_measure(g)
        .iter()
        .zip(g.killing())
        .zip(g.measure())
        .map(|((n, c), m)| (n + c) / m)
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    pub part1: Vec<VertexId>,
    pub part2: Vec<VertexId>,
}

impl Bipartition {
    /// `true` iff every edge joins the two parts.
    pub fn separates(&self, g: &WeightedGraph) -> bool {
        let side = self.sides(g.vertex_count());
        g.edges().iter().all(|e| side[e.u] != side[e.v])
    }

    /// `true` for vertices of part 1.
    pub fn sides(&self, n: usize) -> Vec<bool> {
        let mut side = vec![false; n];
        for &x in &self.part1 {
            side[x] = true;
        }
        side
    }
}

/// BFS two-coloring; the lowest id of each component goes to part 1. `None` if
/// there is an odd cycle.
pub fn bipartition(g: &WeightedGraph) -> Option<Bipartition> {
    let n = g.vertex_count();
    let mut color: Vec<Option<bool>> = vec![None; n];
    let mut queue = VecDeque::new();
    for start in 0..n {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(true);
        queue.push_back(start);
        while let Some(x) = queue.pop_front() {
            let cx = color[x].unwrap();
            for &(y, _, _) in g.neighbors(x) {
                match color[y] {
                    None => {
                        color[y] = Some(!cx);
                        queue.push_back(y);
                    }
                    Some(cy) if cy == cx => return None,
                    Some(_) => {}
                }
            }
        }
    }
    let (mut part1, mut part2) = (Vec::new(), Vec::new());
    for (x, c) in color.into_iter().enumerate() {
        if c == Some(true) {
            part1.push(x);
        } else {
            part2.push(x);
        }
    }
    Some(Bipartition { part1, part2 })
}
