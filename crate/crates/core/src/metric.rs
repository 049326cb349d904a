//! Path metrics, the intrinsic-metric inequality, balls and Lipschitz checks.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::Window;
use crate::graph::{normalizing_measure, VertexId, WeightedGraph};

/// Per-edge positive weights, indexed like [`WeightedGraph::edges`].
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeighting {
    values: Vec<f64>,
}

impl EdgeWeighting {
    pub fn new(values: Vec<f64>) -> Self {
        EdgeWeighting { values }
    }

    pub fn constant(g: &WeightedGraph, w: f64) -> Self {
        EdgeWeighting { values: vec![w; g.edges().len()] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check(&self, g: &WeightedGraph) -> Result<()> {
        if self.values.len() != g.edges().len() {
            return Err(Error::WeightingShape { expected: g.edges().len(), got: self.values.len() });
        }
        for (e, &w) in g.edges().iter().zip(&self.values) {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NonPositiveWeight { u: e.u, v: e.v, weight: w });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    Path,
    Natural,
    DefaultIntrinsic,
    D1,
    User,
}

/// Which edge weighting to build a path metric from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricChoice {
    /// `((m/n)(x) ^ (m/n)(y))^{1/2}`
    Intrinsic,
    /// hop count
    Natural,
    /// `(n(x) v n(y))^{-1/2}`
    D1,
}

impl MetricChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "intrinsic" | "default" | "default-intrinsic" => Some(MetricChoice::Intrinsic),
            "natural" | "dn" => Some(MetricChoice::Natural),
            "d1" => Some(MetricChoice::D1),
            _ => None,
        }
    }

    /// Edge weights of `g`, with `n` the normalizing measure to use (for windows
    /// of larger graphs this should be the full one).
    pub fn weights(self, g: &WeightedGraph, n: &[f64]) -> EdgeWeighting {
        match self {
            MetricChoice::Intrinsic => intrinsic_weights(g, n),
            MetricChoice::Natural => EdgeWeighting::constant(g, 1.0),
            MetricChoice::D1 => EdgeWeighting::new(
                g.edges().iter().map(|e| n[e.u].max(n[e.v]).powf(-0.5)).collect(),
            ),
        }
    }

    pub fn kind(self) -> MetricKind {
        match self {
            MetricChoice::Intrinsic => MetricKind::DefaultIntrinsic,
            MetricChoice::Natural => MetricKind::Natural,
            MetricChoice::D1 => MetricKind::D1,
        }
    }
}

impl fmt::Display for MetricChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricChoice::Intrinsic => "intrinsic",
            MetricChoice::Natural => "natural",
            MetricChoice::D1 => "d1",
        })
    }
}

/// Dense distance table. Unreachable pairs hold `f64::INFINITY`.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudoMetric {
    n: usize,
    table: Vec<f64>,
    pub kind: MetricKind,
    /// `max_{x ~ y} d(x, y)`.
    pub jump_size: f64,
}

impl PseudoMetric {
    /// User-supplied table, checked for the pseudo-metric axioms.
    pub fn from_table(g: &WeightedGraph, table: Vec<Vec<f64>>) -> Result<Self> {
        let n = g.vertex_count();
        if table.len() != n || table.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition(format!("an {n}x{n} distance table")));
        }
        let flat: Vec<f64> = table.into_iter().flatten().collect();
        let mut d = PseudoMetric { n, table: flat, kind: MetricKind::User, jump_size: 0.0 };
        d.jump_size = jump_size(g, &d);
        if let Some(msg) = d.axiom_violation(1e-12) {
            return Err(Error::Precondition(format!("a pseudo metric ({msg})")));
        }
        Ok(d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, x: VertexId, y: VertexId) -> f64 {
        self.table[x * self.n + y]
    }

    pub fn row(&self, x: VertexId) -> &[f64] {
        &self.table[x * self.n..(x + 1) * self.n]
    }

    /// First broken axiom, if any. Triangles are checked exhaustively up to 200
    /// vertices and on a fixed-stride sample above.
    pub fn axiom_violation(&self, tol: f64) -> Option<String> {
        let n = self.n;
        for x in 0..n {
            if self.get(x, x) != 0.0 {
                return Some(format!("d({x},{x}) = {}", self.get(x, x)));
            }
            for y in 0..n {
                let a = self.get(x, y);
                if a < 0.0 || a.is_nan() || a != self.get(y, x) {
                    return Some(format!("d({x},{y}) not symmetric nonnegative"));
                }
            }
        }
        let stride = if n <= 200 { 1 } else { n / 97 + 1 };
        let bad = (0..n).into_par_iter().step_by(stride).find_map_any(|x| {
            for y in (0..n).step_by(stride) {
                let dxy = self.get(x, y);
                if !dxy.is_finite() {
                    continue;
                }
                for z in 0..n {
                    let bound = dxy + self.get(y, z);
                    if self.get(x, z) > bound + tol * bound.max(1.0) {
                        return Some(format!("triangle ({x},{y},{z})"));
                    }
                }
            }
            None
        });
        bad
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `src`. Stops early once every vertex with `wanted[x]` is settled,
/// or once the frontier passes `cutoff`.
pub fn dijkstra(
    g: &WeightedGraph,
    w: &[f64],
    src: VertexId,
    cutoff: f64,
    wanted: Option<&[bool]>,
) -> Vec<f64> {
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut remaining = wanted.map(|m| m.iter().filter(|&&b| b).count()).unwrap_or(usize::MAX);
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Item(0.0, src));
    while let Some(Item(d, x)) = heap.pop() {
        if done[x] {
            continue;
        }
        if d > cutoff {
            // leave unsettled vertices at infinity
            for v in dist.iter_mut().zip(&done).filter(|(_, &k)| !k) {
                *v.0 = f64::INFINITY;
            }
            break;
        }
        done[x] = true;
        if let Some(m) = wanted {
            if m[x] {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
        }
        for &(y, _, e) in g.neighbors(x) {
            let nd = d + w[e];
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(Item(nd, y));
            }
        }
    }
    dist
}

/// Single-source path distances.
pub fn distances_from(g: &WeightedGraph, w: &EdgeWeighting, src: VertexId) -> Result<Vec<f64>> {
    w.check(g)?;
    Ok(dijkstra(g, w.values(), src, f64::INFINITY, None))
}

/// All-pairs shortest paths under `w`.
pub fn path_metric(g: &WeightedGraph, w: &EdgeWeighting) -> Result<PseudoMetric> {
    w.check(g)?;
    let n = g.vertex_count();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|x| dijkstra(g, w.values(), x, f64::INFINITY, None))
        .collect();
    let mut table: Vec<f64> = rows.into_iter().flatten().collect();
    // exact symmetry: Dijkstra from either end may round differently
    for x in 0..n {
        for y in x + 1..n {
            let v = table[x * n + y].min(table[y * n + x]);
            table[x * n + y] = v;
            table[y * n + x] = v;
        }
    }
    let mut d = PseudoMetric { n, table, kind: MetricKind::Path, jump_size: 0.0 };
    d.jump_size = jump_size(g, &d);
    Ok(d)
}

/// `d(x, y)` for each edge, without the all-pairs table.
pub fn edge_distances(g: &WeightedGraph, w: &EdgeWeighting) -> Result<Vec<f64>> {
    w.check(g)?;
    let wv = w.values();
    Ok(g.edges()
        .par_iter()
        .enumerate()
        .map(|(i, e)| {
            let mut wanted = vec![false; g.vertex_count()];
            wanted[e.v] = true;
            dijkstra(g, wv, e.u, wv[i], Some(&wanted))[e.v].min(wv[i])
        })
        .collect())
}

fn jump_size(g: &WeightedGraph, d: &PseudoMetric) -> f64 {
    g.edges().iter().map(|e| d.get(e.u, e.v)).fold(0.0, f64::max)
}

/// `w(x, y) = ((m/n)(x) ^ (m/n)(y))^{1/2}` with the given `n`.
pub fn intrinsic_weights(g: &WeightedGraph, n: &[f64]) -> EdgeWeighting {
    let m = g.measure();
    EdgeWeighting::new(
        g.edges()
            .iter()
            .map(|e| (m[e.u] / n[e.u]).min(m[e.v] / n[e.v]).sqrt())
            .collect(),
    )
}

pub fn default_intrinsic_weights(g: &WeightedGraph) -> EdgeWeighting {
    intrinsic_weights(g, &normalizing_measure(g))
}

/// Hop-count metric.
pub fn natural_metric(g: &WeightedGraph) -> PseudoMetric {
    let mut d = path_metric(g, &EdgeWeighting::constant(g, 1.0)).expect("unit weights are valid");
    d.kind = MetricKind::Natural;
    d
}

pub fn default_intrinsic_metric(g: &WeightedGraph) -> PseudoMetric {
    let mut d = path_metric(g, &default_intrinsic_weights(g)).expect("intrinsic weights are positive");
    d.kind = MetricKind::DefaultIntrinsic;
    d
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntrinsicReport {
    /// `m(x) - sum_y b(x, y) d(x, y)^2`
    pub slack: Vec<f64>,
    pub min_slack: f64,
    pub argmin: VertexId,
    pub intrinsic: bool,
}

pub fn verify_intrinsic(g: &WeightedGraph, d: &PseudoMetric) -> IntrinsicReport {
    let ed: Vec<f64> = g.edges().iter().map(|e| d.get(e.u, e.v)).collect();
    verify_intrinsic_edges(g, &ed, &vec![0.0; g.vertex_count()])
}

/// Slack from per-edge distances; `extra[x]` is added to the sum at `x` (edges
/// leaving a window).
pub fn verify_intrinsic_edges(g: &WeightedGraph, edge_d: &[f64], extra: &[f64]) -> IntrinsicReport {
    let m = g.measure();
    let mut sum = extra.to_vec();
    for (e, &d) in g.edges().iter().zip(edge_d) {
        let t = e.b * d * d;
        sum[e.u] += t;
        sum[e.v] += t;
    }
    let slack: Vec<f64> = m.iter().zip(&sum).map(|(m, s)| m - s).collect();
    let (argmin, min_slack) = slack
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let intrinsic = slack.iter().zip(m).all(|(s, m)| *s >= -1e-12 * m);
    IntrinsicReport { slack, min_slack, argmin, intrinsic }
}

/// Intrinsic check of a metric choice on a family window. Edges leaving the window
/// contribute `b d^2` with `d` bounded by the edge weight seen from the inner end:
/// `1` (natural), `(m/n)^{1/2}` (intrinsic) or `n^{-1/2}` (d1), with `n` the full measure.
pub fn verify_intrinsic_window(w: &Window, metric: MetricChoice) -> Result<IntrinsicReport> {
    let n = w.full_normalizing_measure();
    let weights = metric.weights(&w.graph, &n);
    let ed = edge_distances(&w.graph, &weights)?;
    let m = w.graph.measure();
    let extra: Vec<f64> = (0..w.len())
        .map(|x| match metric {
            MetricChoice::Natural => w.outer[x],
            MetricChoice::Intrinsic => w.outer[x] * m[x] / n[x],
            MetricChoice::D1 => w.outer[x] / n[x],
        })
        .collect();
    Ok(verify_intrinsic_edges(&w.graph, &ed, &extra))
}

/// Closed ball `B_r(x)`, ascending ids.
pub fn ball(d: &PseudoMetric, x: VertexId, r: f64) -> Vec<VertexId> {
    ball_from_row(d.row(x), r)
}

pub fn ball_from_row(row: &[f64], r: f64) -> Vec<VertexId> {
    row.iter().enumerate().filter(|(_, &v)| v <= r).map(|(i, _)| i).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    pub eps: f64,
    pub jump_size: f64,
    pub edges_checked: usize,
    /// Largest `lhs / rhs` over edges for the first and second inequality.
    pub worst_ratio_first: f64,
    pub worst_ratio_second: f64,
    /// Edges where an inequality fails, `(x, y, which)`.
    pub failures: Vec<(VertexId, VertexId, u8)>,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// For `psi` with `psi(x) - psi(y) <= eps d(x, y)`, checks on every edge
///   `|1 - e^{psi(x) - psi(y)}| <= eps e^{eps s} d(x, y)` and
///   `|(e^{-psi(x)} - e^{-psi(y)})(e^{psi(x)} - e^{psi(y)})| <= 2 eps^2 e^{eps s} d(x, y)^2`.
pub fn lipschitz_verify(
    g: &WeightedGraph,
    d: &PseudoMetric,
    psi: &[f64],
    eps: f64,
) -> Result<LipschitzReport> {
    let n = g.vertex_count();
    if psi.len() != n {
        return Err(Error::Precondition(format!("psi with {n} entries")));
    }
    for x in 0..n {
        for y in 0..n {
            let dxy = d.get(x, y);
            if !dxy.is_finite() {
                continue;
            }
            let diff = psi[x] - psi[y];
            let bound = eps * dxy;
            if diff > bound + 1e-12 * bound.abs().max(1.0) {
                return Err(Error::NotLipschitz { x, y, diff, bound, eps });
            }
        }
    }
    let s = d.jump_size;
    let growth = (eps * s).exp();
    let mut rep = LipschitzReport {
        eps,
        jump_size: s,
        edges_checked: 0,
        worst_ratio_first: 0.0,
        worst_ratio_second: 0.0,
        failures: Vec::new(),
    };
    for e in g.edges() {
        let (x, y) = (e.u, e.v);
        let dxy = d.get(x, y);
        let lhs1 = (1.0 - (psi[x] - psi[y]).exp()).abs();
        let rhs1 = eps * growth * dxy;
        let lhs2 = ((-psi[x]).exp() - (-psi[y]).exp()) * (psi[x].exp() - psi[y].exp());
        let lhs2 = lhs2.abs();
        let rhs2 = 2.0 * eps * eps * growth * dxy * dxy;
        // both sides vanish together when psi(x) = psi(y)
        let tol = 1e-12;
        let ratio = |l: f64, r: f64| if r > 0.0 { l / r } else if l > tol { f64::INFINITY } else { 0.0 };
        rep.worst_ratio_first = rep.worst_ratio_first.max(ratio(lhs1, rhs1));
        rep.worst_ratio_second = rep.worst_ratio_second.max(ratio(lhs2, rhs2));
        if lhs1 > rhs1 * (1.0 + tol) + tol {
            rep.failures.push((x, y, 1));
        }
        if lhs2 > rhs2 * (1.0 + tol) + tol {
            rep.failures.push((x, y, 2));
        }
        rep.edges_checked += 1;
    }
    Ok(rep)
}
