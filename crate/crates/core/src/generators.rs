//! Radius-indexed graph families.
//!
//! A [`GraphFamily`] stands for a (conceptually infinite) rooted graph. Calling
//! [`GraphFamily::materialize`] with radius `R` yields the [`Window`] `B_R(root)`
//! in the natural graph metric together with the exact weight of every edge that
//! leaves the window. Window vertex ids are assigned in breadth-first order, so
//! the window of radius `R` is an id-prefix of the window of radius `R' > R`.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::sync::{Arc, Mutex};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{normalizing_measure, Edge, GraphData, VertexId, WeightedGraph};
use crate::tessellation::{self, Tessellation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureChoice {
    /// Measure carried by the input graph (files only; families fall back to unit).
    Given,
    /// `m = 1`.
    Unit,
    /// `m = n`, with `n` taken over the full (not windowed) edge set.
    Normalizing,
}

impl MeasureChoice {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "given" => Some(MeasureChoice::Given),
            "m1" | "unit" | "1" => Some(MeasureChoice::Unit),
            "mn" | "n" | "normalizing" => Some(MeasureChoice::Normalizing),
            _ => None,
        }
    }
}

impl fmt::Display for MeasureChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasureChoice::Given => "given",
            MeasureChoice::Unit => "m1",
            MeasureChoice::Normalizing => "mn",
        })
    }
}

/// A finite window of a family: the induced graph on `B_R(root)` plus outer data.
#[derive(Clone, Debug)]
pub struct Window {
    pub graph: WeightedGraph,
    pub root: VertexId,
    /// `sum_{y outside the window} b(x, y)`.
    pub outer: Vec<f64>,
    /// Natural-metric distance from the root in the full graph.
    pub depth: Vec<usize>,
    pub radius: usize,
    pub label: String,
}

impl Window {
    pub fn len(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `n` of the full graph: window edges plus edges leaving the window.
    pub fn full_normalizing_measure(&self) -> Vec<f64> {
        normalizing_measure(&self.graph).iter().zip(&self.outer).map(|(a, b)| a + b).collect()
    }

    pub fn has_boundary(&self) -> bool {
        self.outer.iter().any(|&w| w > 0.0)
    }

    /// Sub-window on `keep`; edges to dropped vertices move into `outer`.
    /// Vertex order is preserved.
    pub fn restrict(&self, keep: &[bool]) -> Result<Window> {
        assert_eq!(keep.len(), self.len());
        let mut new_id = vec![usize::MAX; self.len()];
        let mut next = 0;
        for (x, &k) in keep.iter().enumerate() {
            if k {
                new_id[x] = next;
                next += 1;
            }
        }
        let mut outer: Vec<f64> = Vec::with_capacity(next);
        let mut depth = Vec::with_capacity(next);
        let mut m = Vec::with_capacity(next);
        let mut c = Vec::with_capacity(next);
        for x in (0..self.len()).filter(|&x| keep[x]) {
            let dropped: f64 =
                self.graph.neighbors(x).iter().filter(|t| !keep[t.0]).map(|t| t.1).sum();
            outer.push(self.outer[x] + dropped);
            depth.push(self.depth[x]);
            m.push(self.graph.measure()[x]);
            c.push(self.graph.killing()[x]);
        }
        let edges = self
            .graph
            .edges()
            .iter()
            .filter(|e| keep[e.u] && keep[e.v])
            .map(|e| Edge { u: new_id[e.u], v: new_id[e.v], b: e.b })
            .collect();
        let graph = WeightedGraph::new_allow_isolated(GraphData::new(m, c, edges))?;
        let root = if keep[self.root] { new_id[self.root] } else { 0 };
        Ok(Window { graph, root, outer, depth, radius: self.radius, label: self.label.clone() })
    }

    /// The ball `B_r(root)` inside this window.
    pub fn ball(&self, r: usize) -> Result<Window> {
        if r > self.radius {
            return Err(Error::WindowTooSmall { have: self.radius, need: format!("radius {r}") });
        }
        let keep: Vec<bool> = self.depth.iter().map(|&d| d <= r).collect();
        let mut w = self.restrict(&keep)?;
        w.radius = r;
        Ok(w)
    }

    /// Vertices with `depth >= k`, i.e. the window minus `B_{k-1}(root)`.
    pub fn exterior(&self, k: usize) -> Result<Window> {
        let keep: Vec<bool> = self.depth.iter().map(|&d| d >= k).collect();
        if !keep.iter().any(|&b| b) {
            return Err(Error::WindowTooSmall { have: self.radius, need: format!("depth >= {k}") });
        }
        self.restrict(&keep)
    }
}

pub trait GraphFamily: Send + Sync {
    fn label(&self) -> String;
    fn materialize(&self, radius: usize) -> Result<Window>;
    /// Generation data for spherically symmetric trees, `None` otherwise.
    fn radial_profile(&self, _radius: usize) -> Option<RadialProfile> {
        None
    }
}

/// Spherically symmetric rooted tree with unit weights: a vertex at depth `k`
/// has `children[k]` children.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfile {
    pub children: Vec<usize>,
    pub measure: MeasureChoice,
    pub killing: f64,
}

impl RadialProfile {
    /// Full `n` at depth `k`.
    pub fn degree(&self, k: usize) -> usize {
        self.children[k] + usize::from(k > 0)
    }

    /// Number of vertices at depth `k`.
    pub fn layer_size(&self, k: usize) -> f64 {
        self.children[..k].iter().map(|&c| c as f64).product()
    }

    pub fn measure_at(&self, k: usize) -> f64 {
        match self.measure {
            MeasureChoice::Normalizing => self.degree(k) as f64,
            _ => 1.0,
        }
    }
}

/// Locally described rooted graph; enough to build windows by BFS.
trait LocalGraph {
    type Key: Clone + Eq + Hash;
    fn root(&self) -> Self::Key;
    /// All neighbors with weights, in a fixed deterministic order.
    fn neighbors(&self, key: &Self::Key) -> Vec<(Self::Key, f64)>;
    fn given_measure(&self, _key: &Self::Key) -> Option<(f64, f64)> {
        None
    }
}

fn bfs_window<L: LocalGraph>(
    local: &L,
    radius: usize,
    measure: MeasureChoice,
    killing: f64,
    label: String,
) -> Result<Window> {
    let mut index: HashMap<L::Key, usize> = HashMap::new();
    let mut keys = vec![local.root()];
    let mut depth = vec![0usize];
    index.insert(local.root(), 0);
    let mut head = 0;
    while head < keys.len() {
        if depth[head] < radius {
            let d = depth[head] + 1;
            for (k, _) in local.neighbors(&keys[head]) {
                if !index.contains_key(&k) {
                    index.insert(k.clone(), keys.len());
                    keys.push(k);
                    depth.push(d);
                }
            }
        }
        head += 1;
    }
    let n = keys.len();
    let mut outer = vec![0.0; n];
    let mut full_n = vec![0.0; n];
    let mut m = vec![1.0; n];
    let mut c = vec![killing; n];
    let mut edges = Vec::new();
    for (i, key) in keys.iter().enumerate() {
        for (k, b) in local.neighbors(key) {
            full_n[i] += b;
            match index.get(&k) {
                Some(&j) if i < j => edges.push(Edge { u: i, v: j, b }),
                Some(_) => {}
                None => outer[i] += b,
            }
        }
        if measure == MeasureChoice::Given {
            if let Some((gm, gc)) = local.given_measure(key) {
                m[i] = gm;
                c[i] = gc;
            }
        }
    }
    if measure == MeasureChoice::Normalizing {
        m = full_n;
    }
    let graph = WeightedGraph::new_allow_isolated(GraphData::new(m, c, edges))?;
    Ok(Window { graph, root: 0, outer, depth, radius, label })
}

struct LineLocal;

impl LineLocal {
    fn b(x: u64) -> f64 {
        // weight of the edge (x, x+1)
        if x > 0 && x % 4 == 0 {
            x as f64
        } else {
            1.0
        }
    }
}

impl LocalGraph for LineLocal {
    type Key = u64;
    fn root(&self) -> u64 {
        0
    }
    fn neighbors(&self, &x: &u64) -> Vec<(u64, f64)> {
        let mut out = Vec::with_capacity(2);
        if x > 0 {
            out.push((x - 1, Self::b(x - 1)));
        }
        out.push((x + 1, Self::b(x)));
        out
    }
}

/// Tree where the root has `root_children` children and a vertex at generation
/// `k >= 1` has `children(k)` children.
struct TreeLocal<F: Fn(usize) -> usize> {
    root_children: usize,
    children: F,
}

impl<F: Fn(usize) -> usize> LocalGraph for TreeLocal<F> {
    type Key = Vec<u32>;
    fn root(&self) -> Vec<u32> {
        Vec::new()
    }
    fn neighbors(&self, key: &Vec<u32>) -> Vec<(Vec<u32>, f64)> {
        let gen = key.len();
        let kids = if gen == 0 { self.root_children } else { (self.children)(gen) };
        let mut out = Vec::with_capacity(kids + 1);
        if gen > 0 {
            out.push((key[..gen - 1].to_vec(), 1.0));
        }
        for i in 0..kids {
            let mut k = key.clone();
            k.push(i as u32);
            out.push((k, 1.0));
        }
        out
    }
}

struct LatticeLocal {
    dim: usize,
}

impl LocalGraph for LatticeLocal {
    type Key = Vec<i64>;
    fn root(&self) -> Vec<i64> {
        vec![0; self.dim]
    }
    fn neighbors(&self, key: &Vec<i64>) -> Vec<(Vec<i64>, f64)> {
        let mut out = Vec::with_capacity(2 * self.dim);
        for i in 0..self.dim {
            for s in [1, -1] {
                let mut k = key.clone();
                k[i] += s;
                out.push((k, 1.0));
            }
        }
        out
    }
}

struct FiniteLocal<'a> {
    graph: &'a WeightedGraph,
}

impl LocalGraph for FiniteLocal<'_> {
    type Key = usize;
    fn root(&self) -> usize {
        0
    }
    fn neighbors(&self, &x: &usize) -> Vec<(usize, f64)> {
        self.graph.neighbors(x).iter().map(|t| (t.0, t.1)).collect()
    }
    fn given_measure(&self, &x: &usize) -> Option<(f64, f64)> {
        Some((self.graph.measure()[x], self.graph.killing()[x]))
    }
}

struct PatchLocal<'a> {
    patch: &'a Tessellation,
}

impl LocalGraph for PatchLocal<'_> {
    type Key = usize;
    fn root(&self) -> usize {
        0
    }
    fn neighbors(&self, &x: &usize) -> Vec<(usize, f64)> {
        self.patch.graph.neighbors(x).iter().map(|t| (t.0, t.1)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FamilyKind {
    /// Half-line with `b(x, x+1) = x` on multiples of four (unbounded geometry,
    /// subexponential growth in its adapted path metric).
    Line,
    RegularTree { degree: usize },
    /// Generation-`k` vertices have degree `k + 2`.
    RapidTree,
    Lattice { dim: usize },
    Cycle { n: usize },
    Path { n: usize },
    Complete { n: usize },
    SingleEdge,
    /// Regular `{p, q}` tessellation; `center` overrides the degree of the first face.
    Tessellation { p: usize, q: usize, center: usize },
    /// Seeded random connected graph with weights uniform in `[0.5, 1.5]`.
    Random { n: usize, extra: usize, seed: u64 },
    Graph(Arc<WeightedGraph>),
}

/// A graph family together with its measure and constant killing term.
pub struct Family {
    pub kind: FamilyKind,
    pub measure: MeasureChoice,
    pub killing: f64,
    patches: Mutex<Option<Arc<Tessellation>>>,
    finite: Option<Arc<WeightedGraph>>,
}

impl Clone for Family {
    fn clone(&self) -> Self {
        Family::new(self.kind.clone(), self.measure).with_killing(self.killing)
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Family")
            .field("kind", &self.kind)
            .field("measure", &self.measure)
            .field("killing", &self.killing)
            .finish()
    }
}

impl Family {
    pub fn new(kind: FamilyKind, measure: MeasureChoice) -> Self {
        let finite = match &kind {
            FamilyKind::Cycle { n } => Some(cycle_graph(*n)),
            FamilyKind::Path { n } => Some(path_graph(*n)),
            FamilyKind::Complete { n } => Some(complete_graph(*n)),
            FamilyKind::SingleEdge => Some(path_graph(2)),
            FamilyKind::Random { n, extra, seed } => Some(random_graph(*n, *extra, *seed)),
            FamilyKind::Graph(g) => Some(g.as_ref().clone()),
            _ => None,
        }
        .map(Arc::new);
        Family { kind, measure, killing: 0.0, patches: Mutex::new(None), finite }
    }

    pub fn with_killing(mut self, c: f64) -> Self {
        self.killing = c;
        self
    }

    pub fn line() -> Self {
        Family::new(FamilyKind::Line, MeasureChoice::Unit)
    }

    pub fn regular_tree(degree: usize, measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::RegularTree { degree }, measure)
    }

    pub fn rapid_tree(measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::RapidTree, measure)
    }

    pub fn lattice(dim: usize, measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::Lattice { dim }, measure)
    }

    pub fn cycle(n: usize, measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::Cycle { n }, measure)
    }

    pub fn path(n: usize, measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::Path { n }, measure)
    }

    pub fn complete(n: usize, measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::Complete { n }, measure)
    }

    pub fn single_edge(measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::SingleEdge, measure)
    }

    pub fn tessellation(p: usize, q: usize, measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::Tessellation { p, q, center: p }, measure)
    }

    pub fn random(n: usize, extra: usize, seed: u64, measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::Random { n, extra, seed }, measure)
    }

    pub fn from_graph(g: WeightedGraph, measure: MeasureChoice) -> Self {
        Family::new(FamilyKind::Graph(Arc::new(g)), measure)
    }

    /// `true` for finite fixtures, whose large windows have no boundary.
    pub fn is_finite(&self) -> bool {
        self.finite.is_some()
    }

    /// Patch with at least `layers` completed rings, generated once and reused.
    pub fn patch(&self, layers: usize) -> Result<Arc<Tessellation>> {
        let FamilyKind::Tessellation { p, q, center } = self.kind else {
            return Err(Error::Precondition("a tessellation family".into()));
        };
        let mut cache = self.patches.lock().expect("patch cache poisoned");
        if let Some(t) = cache.as_ref() {
            if t.layers >= layers {
                return Ok(t.clone());
            }
        }
        let t = Arc::new(tessellation::generate_with_center(p, q, center, layers)?);
        *cache = Some(t.clone());
        Ok(t)
    }

    /// Smallest patch in which every vertex within `depth` of the center is complete.
    pub fn patch_for_depth(&self, depth: usize) -> Result<Arc<Tessellation>> {
        let FamilyKind::Tessellation { p, q, center } = self.kind else {
            return Err(Error::Precondition("a tessellation family".into()));
        };
        let covers = |t: &Tessellation| {
            let d = t.depths_from(0);
            (0..d.len()).all(|x| t.complete[x] || d[x] > depth)
        };
        let mut cache = self.patches.lock().expect("patch cache poisoned");
        if let Some(t) = cache.as_ref() {
            if covers(t) {
                return Ok(t.clone());
            }
        }
        // incomplete vertices lie on the last ring, at depth >= layers
        let mut layers = cache.as_ref().map_or(1, |t| t.layers + 1);
        loop {
            let t = tessellation::generate_with_center(p, q, center, layers)?;
            if layers > depth || covers(&t) {
                let t = Arc::new(t);
                *cache = Some(t.clone());
                return Ok(t);
            }
            layers += 1;
        }
    }
}

impl GraphFamily for Family {
    fn label(&self) -> String {
        let base = match &self.kind {
            FamilyKind::Line => "line".to_string(),
            FamilyKind::RegularTree { degree } => format!("tree:d={degree}"),
            FamilyKind::RapidTree => "rbtree".to_string(),
            FamilyKind::Lattice { dim } => format!("lattice:dim={dim}"),
            FamilyKind::Cycle { n } => format!("cycle:n={n}"),
            FamilyKind::Path { n } => format!("path:n={n}"),
            FamilyKind::Complete { n } => format!("complete:n={n}"),
            FamilyKind::SingleEdge => "edge".to_string(),
            FamilyKind::Tessellation { p, q, center } if center == p => format!("tess:p={p},q={q}"),
            FamilyKind::Tessellation { p, q, center } => format!("tess:p={p},q={q},center={center}"),
            FamilyKind::Random { n, extra, seed } => format!("random:n={n},extra={extra},seed={seed}"),
            FamilyKind::Graph(_) => "file".to_string(),
        };
        let mut s = format!("{base} [{}]", self.measure);
        if self.killing != 0.0 {
            s.push_str(&format!(" c={}", self.killing));
        }
        s
    }

    fn materialize(&self, radius: usize) -> Result<Window> {
        let label = self.label();
        let c = self.killing;
        let m = match self.measure {
            MeasureChoice::Given if self.finite.is_none() => MeasureChoice::Unit,
            other => other,
        };
        match &self.kind {
            FamilyKind::Line => bfs_window(&LineLocal, radius, m, c, label),
            FamilyKind::RegularTree { degree } => {
                let d = *degree;
                let local = TreeLocal { root_children: d, children: move |_| d - 1 };
                bfs_window(&local, radius, m, c, label)
            }
            FamilyKind::RapidTree => {
                let local = TreeLocal { root_children: 2, children: |k| k + 1 };
                bfs_window(&local, radius, m, c, label)
            }
            FamilyKind::Lattice { dim } => bfs_window(&LatticeLocal { dim: *dim }, radius, m, c, label),
            FamilyKind::Tessellation { .. } => {
                let patch = self.patch_for_depth(radius + 1)?;
                let depth = patch.depths_from(0);
                if let Some(x) = (0..depth.len()).find(|&x| depth[x] <= radius && !patch.complete[x]) {
                    return Err(Error::Tessellation(format!(
                        "vertex {x} at depth {} is not complete in the generated patch",
                        depth[x]
                    )));
                }
                bfs_window(&PatchLocal { patch: &patch }, radius, m, c, label)
            }
            _ => {
                let g = self.finite.as_ref().expect("finite family");
                bfs_window(&FiniteLocal { graph: g }, radius, m, c, label)
            }
        }
    }

    fn radial_profile(&self, radius: usize) -> Option<RadialProfile> {
        let children: Vec<usize> = match self.kind {
            FamilyKind::RegularTree { degree } => {
                (0..=radius).map(|k| if k == 0 { degree } else { degree - 1 }).collect()
            }
            FamilyKind::RapidTree => (0..=radius).map(|k| if k == 0 { 2 } else { k + 1 }).collect(),
            _ => return None,
        };
        let measure = if self.measure == MeasureChoice::Normalizing {
            MeasureChoice::Normalizing
        } else {
            MeasureChoice::Unit
        };
        Some(RadialProfile { children, measure, killing: self.killing })
    }
}

fn path_graph(n: usize) -> WeightedGraph {
    assert!(n >= 2, "path needs at least two vertices");
    let edges = (0..n - 1).map(|i| Edge { u: i, v: i + 1, b: 1.0 }).collect();
    WeightedGraph::new(GraphData::unit(n, edges)).expect("path is valid")
}

fn cycle_graph(n: usize) -> WeightedGraph {
    assert!(n >= 3, "cycle needs at least three vertices");
    let edges = (0..n).map(|i| Edge { u: i, v: (i + 1) % n, b: 1.0 }).collect();
    WeightedGraph::new(GraphData::unit(n, edges)).expect("cycle is valid")
}

fn complete_graph(n: usize) -> WeightedGraph {
    assert!(n >= 2, "complete graph needs at least two vertices");
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            edges.push(Edge { u, v, b: 1.0 });
        }
    }
    WeightedGraph::new(GraphData::unit(n, edges)).expect("complete graph is valid")
}

fn random_graph(n: usize, extra: usize, seed: u64) -> WeightedGraph {
    assert!(n >= 2, "random graph needs at least two vertices");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    let mut present = std::collections::HashSet::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        present.insert((u, v));
        edges.push(Edge { u, v, b: rng.random_range(0.5..1.5) });
    }
    let max_edges = n * (n - 1) / 2;
    let target = (n - 1 + extra).min(max_edges);
    while edges.len() < target {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        let key = (u.min(v), u.max(v));
        if u != v && present.insert(key) {
            edges.push(Edge { u: key.0, v: key.1, b: rng.random_range(0.5..1.5) });
        }
    }
    WeightedGraph::new(GraphData::unit(n, edges)).expect("random graph is valid")
}

/// Parse `kind:key=val,...`, e.g. `tree:d=3,R=10`. Returns the family and the
/// radius given by key `R`, if any.
pub fn parse_family(spec: &str) -> Result<(Family, Option<usize>)> {
    let err = |pos: usize, msg: String| Error::FamilySpec { spec: spec.to_string(), pos, msg };
    let (kind, rest, rest_pos) = match spec.find(':') {
        Some(i) => (&spec[..i], &spec[i + 1..], i + 1),
        None => (spec, "", spec.len()),
    };
    let mut params: Vec<(&str, &str, usize)> = Vec::new();
    let mut pos = rest_pos;
    if !rest.is_empty() {
        for item in rest.split(',') {
            let Some(eq) = item.find('=') else {
                return Err(err(pos, format!("expected key=value, found `{item}`")));
            };
            params.push((&item[..eq], &item[eq + 1..], pos + eq + 1));
            pos += item.len() + 1;
        }
    }
    let mut measure = MeasureChoice::Unit;
    let mut killing = 0.0;
    let mut radius = None;
    let mut ints: HashMap<&str, (u64, usize)> = HashMap::new();
    for &(k, v, p) in &params {
        match k {
            "m" | "measure" => {
                measure = MeasureChoice::parse(v)
                    .ok_or_else(|| err(p, format!("unknown measure `{v}` (m1 | mn | given)")))?;
            }
            "c" => {
                killing = v.parse().map_err(|_| err(p, format!("invalid number `{v}`")))?;
                if !(killing >= 0.0) {
                    return Err(err(p, "killing term must be nonnegative".into()));
                }
            }
            "R" => radius = Some(v.parse().map_err(|_| err(p, format!("invalid radius `{v}`")))?),
            _ => {
                let x = v.parse().map_err(|_| err(p, format!("invalid integer `{v}`")))?;
                ints.insert(k, (x, p));
            }
        }
    }
    let mut take = |key: &str, default: Option<u64>, min: u64| -> Result<u64> {
        match ints.remove(key) {
            Some((x, p)) if x < min => Err(err(p, format!("`{key}` must be at least {min}"))),
            Some((x, _)) => Ok(x),
            None => default.ok_or_else(|| err(rest_pos, format!("missing parameter `{key}`"))),
        }
    };
    let kind = match kind {
        "line" | "example" => FamilyKind::Line,
        "tree" => FamilyKind::RegularTree { degree: take("d", Some(3), 3)? as usize },
        "rbtree" => FamilyKind::RapidTree,
        "lattice" | "z" => FamilyKind::Lattice { dim: take("dim", Some(1), 1)? as usize },
        "cycle" => FamilyKind::Cycle { n: take("n", None, 3)? as usize },
        "path" => FamilyKind::Path { n: take("n", None, 2)? as usize },
        "complete" => FamilyKind::Complete { n: take("n", None, 2)? as usize },
        "edge" => FamilyKind::SingleEdge,
        "tess" => {
            let p = take("p", None, 3)? as usize;
            let q = take("q", None, 3)? as usize;
            let center = take("center", Some(p as u64), 3)? as usize;
            tessellation::check_pq(p, q)?;
            FamilyKind::Tessellation { p, q, center }
        }
        "random" => FamilyKind::Random {
            n: take("n", None, 2)? as usize,
            extra: take("extra", Some(0), 0)? as usize,
            seed: take("seed", Some(0), 0)?,
        },
        other => return Err(err(0, format!("unknown family `{other}`"))),
    };
    if let Some((k, (_, p))) = ints.iter().next() {
        return Err(err(*p, format!("unknown parameter `{k}`")));
    }
    Ok((Family::new(kind, measure).with_killing(killing), radius))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{bounded_geometry_ratio, combinatorial_degree, normalizing_measure};

    #[test]
    fn line_example_weights() {
        let w = Family::line().materialize(8).unwrap();
        let n = normalizing_measure(&w.graph);
        assert_eq!(n[4], 5.0);
        assert_eq!(n[3], 2.0);
        let full = w.full_normalizing_measure();
        for x in [4usize, 8] {
            assert_eq!(full[x], x as f64 + 1.0);
        }
        assert_eq!(bounded_geometry_ratio(&w.graph), 5.0);
        // unbounded along 4N
        let r40 = bounded_geometry_ratio(&Family::line().materialize(41).unwrap().graph);
        assert!(r40 >= 41.0);
    }

    #[test]
    fn tree_ball_sizes() {
        let f = Family::regular_tree(3, MeasureChoice::Unit);
        for r in 0..8 {
            let w = f.materialize(r).unwrap();
            assert_eq!(w.len(), 3 * (1 << r) - 2);
        }
        let w = f.materialize(3).unwrap();
        assert_eq!(combinatorial_degree(&w.graph)[0], 3);
        let w4 = Family::regular_tree(4, MeasureChoice::Unit).materialize(3).unwrap();
        assert_eq!(w4.len(), 1 + 4 * (27 - 1) / 2);
    }

    #[test]
    fn lattice_balls() {
        let f = Family::lattice(2, MeasureChoice::Unit);
        for r in 0..6 {
            assert_eq!(f.materialize(r).unwrap().len(), 2 * r * r + 2 * r + 1);
        }
        let z = Family::lattice(1, MeasureChoice::Unit).materialize(2).unwrap();
        assert_eq!(z.len(), 5);
        assert_eq!(z.outer.iter().filter(|&&w| w > 0.0).count(), 2);
    }

    #[test]
    fn rapid_tree_degrees() {
        let f = Family::rapid_tree(MeasureChoice::Unit);
        let w = f.materialize(4).unwrap();
        let full = w.full_normalizing_measure();
        for x in 0..w.len() {
            assert_eq!(full[x], w.depth[x] as f64 + 2.0);
        }
        assert!(w.depth.contains(&3));
    }

    #[test]
    fn windows_are_id_prefixes() {
        let fams = [
            Family::line(),
            Family::regular_tree(3, MeasureChoice::Normalizing),
            Family::lattice(2, MeasureChoice::Unit),
            Family::rapid_tree(MeasureChoice::Unit),
            Family::cycle(9, MeasureChoice::Unit),
            Family::tessellation(7, 3, MeasureChoice::Unit),
        ];
        for f in &fams {
            let small = f.materialize(2).unwrap();
            let big = f.materialize(3).unwrap();
            let cut = big.ball(2).unwrap();
            assert_eq!(small.graph, cut.graph, "{}", f.label());
            assert_eq!(small.outer, cut.outer, "{}", f.label());
            // full degree = window degree + outer
            assert_eq!(small.full_normalizing_measure(), {
                let n = big.full_normalizing_measure();
                n[..small.len()].to_vec()
            });
        }
    }

    #[test]
    fn finite_families_saturate() {
        let f = Family::cycle(6, MeasureChoice::Normalizing);
        let w = f.materialize(10).unwrap();
        assert_eq!(w.len(), 6);
        assert!(!w.has_boundary());
        assert_eq!(w.graph.measure(), &[2.0; 6]);
    }

    #[test]
    fn parse_specs() {
        let (f, r) = parse_family("tree:d=3,R=10").unwrap();
        assert_eq!(f.kind, FamilyKind::RegularTree { degree: 3 });
        assert_eq!(r, Some(10));
        let (f, _) = parse_family("cycle:n=6,m=mn").unwrap();
        assert_eq!(f.measure, MeasureChoice::Normalizing);
        match parse_family("tree:d=3,x=1") {
            Err(Error::FamilySpec { pos, .. }) => assert_eq!(pos, 11),
            other => panic!("{other:?}"),
        }
        match parse_family("tree:d=x") {
            Err(Error::FamilySpec { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        assert!(parse_family("blob").is_err());
        assert!(parse_family("tess:p=4,q=3").is_err());
    }

    #[test]
    fn random_fixture_is_deterministic() {
        let a = Family::random(12, 6, 7, MeasureChoice::Unit).materialize(20).unwrap();
        let b = Family::random(12, 6, 7, MeasureChoice::Unit).materialize(20).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.graph.edges().len(), 17);
    }
}
