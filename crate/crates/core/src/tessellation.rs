//! Planar tessellation patches and vertex curvature.
//!
//! Patches are grown combinatorially, without coordinates. The patch is kept a
//! topological disk whose boundary is a cyclic list of vertices. One layer
//! completes every vertex currently on the boundary by attaching faces to
//! boundary edges; a new face swallows each neighboring boundary vertex it would
//! complete, so every completed vertex ends with exactly `q` faces around it.

use std::collections::{BTreeMap, VecDeque};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::{Family, FamilyKind, GraphFamily, MeasureChoice};
use crate::graph::{normalizing_measure, Edge, GraphData, VertexId, WeightedGraph};
use crate::growth::{exp_growth_rate, volume_profile_radii};
use crate::metric::{path_metric, EdgeWeighting, MetricChoice, MetricKind, PseudoMetric};
use crate::operator::{assemble, Truncation};
use crate::spectra::{bottom_eigenvalue, exterior_bottom};

const NONE: usize = usize::MAX;

pub type Curvature = Ratio<i64>;

#[derive(Clone, Debug)]
pub struct Tessellation {
    /// `b` in `{0, 1}`, `m = 1`, `c = 0`.
    pub graph: WeightedGraph,
    pub faces: Vec<Vec<VertexId>>,
    /// Faces containing a vertex that is not complete.
    pub boundary_face: Vec<bool>,
    /// Vertices whose incident faces close up into a full cycle.
    pub complete: Vec<bool>,
    pub layer: Vec<usize>,
    /// Number of completed boundary rings.
    pub layers: usize,
    vertex_faces: Vec<Vec<usize>>,
}

/// Accepts Euclidean (`1/p + 1/q = 1/2`) and hyperbolic (`< 1/2`) parameters.
pub fn check_pq(p: usize, q: usize) -> Result<()> {
    if p < 3 || q < 3 {
        return Err(Error::Tessellation(format!("face and vertex degrees must be >= 3, got ({p}, {q})")));
    }
    // 1/p + 1/q > 1/2  <=>  2(p + q) > pq
    if 2 * (p + q) > p * q {
        return Err(Error::Tessellation(format!("({p}, {q}) is spherical (finite), not supported")));
    }
    Ok(())
}

/// Regular patch with `layers` completed rings: all faces `p`-gons, all complete
/// vertices of degree `q`.
pub fn generate_pq(p: usize, q: usize, layers: usize) -> Result<Tessellation> {
    generate_with_center(p, q, p, layers)
}

/// Same as [`generate_pq`] but the central face has `center` sides.
pub fn generate_with_center(p: usize, q: usize, center: usize, layers: usize) -> Result<Tessellation> {
    check_pq(p, q)?;
    if center < 3 {
        return Err(Error::Tessellation(format!("central face degree must be >= 3, got {center}")));
    }
    let mut b = Builder::new(q, center);
    for layer in 0..layers {
        b.complete_ring(p, layer)?;
    }
    b.finish(layers)
}

struct Builder {
    q: usize,
    next: Vec<usize>,
    prev: Vec<usize>,
    adj: Vec<Vec<usize>>,
    face_count: Vec<usize>,
    complete: Vec<bool>,
    layer: Vec<usize>,
    faces: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl Builder {
    fn new(q: usize, center: usize) -> Self {
        let mut b = Builder {
            q,
            next: Vec::new(),
            prev: Vec::new(),
            adj: Vec::new(),
            face_count: Vec::new(),
            complete: Vec::new(),
            layer: Vec::new(),
            faces: Vec::new(),
            vertex_faces: Vec::new(),
        };
        for _ in 0..center {
            b.add_vertex(0);
        }
        for i in 0..center {
            let j = (i + 1) % center;
            b.next[i] = j;
            b.prev[j] = i;
            b.link(i, j);
        }
        b.add_face((0..center).collect());
        b
    }

    fn add_vertex(&mut self, layer: usize) -> usize {
        self.next.push(NONE);
        self.prev.push(NONE);
        self.adj.push(Vec::new());
        self.face_count.push(0);
        self.complete.push(false);
        self.layer.push(layer);
        self.vertex_faces.push(Vec::new());
        self.next.len() - 1
    }

    fn link(&mut self, u: usize, v: usize) {
        self.adj[u].push(v);
        self.adj[v].push(u);
    }

    fn add_face(&mut self, face: Vec<usize>) {
        let id = self.faces.len();
        for &v in &face {
            self.face_count[v] += 1;
            self.vertex_faces[v].push(id);
        }
        self.faces.push(face);
    }

    fn complete_ring(&mut self, p: usize, layer: usize) -> Result<()> {
        let start = (0..self.next.len())
            .find(|&v| self.next[v] != NONE)
            .ok_or_else(|| Error::Tessellation("patch has no boundary".into()))?;
        let mut ring = vec![start];
        let mut v = self.next[start];
        while v != start {
            ring.push(v);
            v = self.next[v];
        }
        for v in ring {
            while !self.complete[v] {
                self.attach(v, p, layer + 1)?;
            }
        }
        Ok(())
    }

    /// Attach one `p`-gon outside the boundary edge `(a, next[a])`.
    fn attach(&mut self, a: usize, p: usize, new_layer: usize) -> Result<()> {
        let q = self.q;
        let mut chain: VecDeque<usize> = VecDeque::from([a, self.next[a]]);
        while self.face_count[*chain.front().unwrap()] + 1 == q {
            let f = self.prev[*chain.front().unwrap()];
            if chain.contains(&f) || chain.len() >= p {
                return Err(Error::Tessellation("face would wrap the boundary".into()));
            }
            chain.push_front(f);
        }
        while self.face_count[*chain.back().unwrap()] + 1 == q {
            let f = self.next[*chain.back().unwrap()];
            if chain.contains(&f) || chain.len() >= p {
                return Err(Error::Tessellation("face would wrap the boundary".into()));
            }
            chain.push_back(f);
        }
        if chain.len() > p {
            return Err(Error::Tessellation(format!(
                "boundary run of {} vertices exceeds face degree {p}",
                chain.len()
            )));
        }
        let front = *chain.front().unwrap();
        let back = *chain.back().unwrap();
        let fresh = p - chain.len();
        if fresh == 0 && self.adj[front].contains(&back) {
            return Err(Error::Tessellation(format!("closing edge {front}-{back} already exists")));
        }
        // new outer path: back -> w_1 -> ... -> w_fresh -> front
        let mut path = Vec::with_capacity(fresh);
        let mut last = back;
        for _ in 0..fresh {
            let w = self.add_vertex(new_layer);
            self.link(last, w);
            path.push(w);
            last = w;
        }
        self.link(last, front);
        let mut face: Vec<usize> = chain.iter().copied().collect();
        face.extend(&path);
        // interior chain vertices leave the boundary
        for &v in chain.iter().skip(1).take(chain.len() - 2) {
            self.next[v] = NONE;
            self.prev[v] = NONE;
            self.complete[v] = true;
        }
        let mut cur = front;
        for &w in path.iter().rev() {
            self.next[cur] = w;
            self.prev[w] = cur;
            cur = w;
        }
        self.next[cur] = back;
        self.prev[back] = cur;
        self.add_face(face);
        for &v in chain.iter().skip(1).take(chain.len() - 2) {
            if self.adj[v].len() != q || self.face_count[v] != q {
                return Err(Error::Tessellation(format!("vertex {v} closed with wrong degree")));
            }
        }
        for v in [front, back] {
            if self.adj[v].len() > q {
                return Err(Error::Tessellation(format!("vertex {v} exceeds degree {q}")));
            }
        }
        Ok(())
    }

    fn finish(self, layers: usize) -> Result<Tessellation> {
        let n = self.adj.len();
        let mut edges = Vec::new();
        for (u, nb) in self.adj.iter().enumerate() {
            for &v in nb {
                if u < v {
                    edges.push(Edge { u, v, b: 1.0 });
                }
            }
        }
        let graph = WeightedGraph::new(GraphData::unit(n, edges))?;
        let boundary_face =
            self.faces.iter().map(|f| f.iter().any(|&v| !self.complete[v])).collect();
        Ok(Tessellation {
            graph,
            faces: self.faces,
            boundary_face,
            complete: self.complete,
            layer: self.layer,
            layers,
            vertex_faces: self.vertex_faces,
        })
    }
}

impl Tessellation {
    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn interior(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count()).filter(|&x| self.complete[x])
    }

    /// Faces containing `x`.
    pub fn faces_at(&self, x: VertexId) -> &[usize] {
        &self.vertex_faces[x]
    }

    /// Natural-metric distances from `root` inside the patch.
    pub fn depths_from(&self, root: VertexId) -> Vec<usize> {
        let mut d = vec![usize::MAX; self.vertex_count()];
        let mut queue = VecDeque::from([root]);
        d[root] = 0;
        while let Some(x) = queue.pop_front() {
            for &(y, _, _) in self.graph.neighbors(x) {
                if d[y] == usize::MAX {
                    d[y] = d[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        d
    }

    /// `1 - deg(x)/2 + sum_{f containing x} 1/deg(f)` with the patch's own degrees
    /// and faces. Equals the vertex curvature on complete vertices.
    pub fn patch_curvature(&self, x: VertexId) -> Curvature {
        let deg = self.graph.neighbors(x).len() as i64;
        let mut k = Curvature::from_integer(1) - Curvature::new(deg, 2);
        for &f in &self.vertex_faces[x] {
            k += Curvature::new(1, self.faces[f].len() as i64);
        }
        k
    }

    /// Checks the combinatorial invariants of a disk patch.
    pub fn check_invariants(&self) -> Result<()> {
        let err = |m: String| Err(Error::Tessellation(m));
        let mut edge_faces: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (i, f) in self.faces.iter().enumerate() {
            if f.len() < 3 {
                return err(format!("face {i} has degree {}", f.len()));
            }
            for j in 0..f.len() {
                let (u, v) = (f[j], f[(j + 1) % f.len()]);
                if self.graph.weight(u, v) == 0.0 {
                    return err(format!("face {i} uses non-edge {u}-{v}"));
                }
                *edge_faces.entry((u.min(v), u.max(v))).or_default() += 1;
            }
        }
        for e in self.graph.edges() {
            let count = edge_faces.get(&(e.u, e.v)).copied().unwrap_or(0);
            let interior = self.complete[e.u] || self.complete[e.v];
            if count > 2 || (interior && count != 2) || count == 0 {
                return err(format!("edge {}-{} lies in {count} faces", e.u, e.v));
            }
        }
        for x in self.interior() {
            // faces around x must form one cycle: walk across shared edges
            let fs = &self.vertex_faces[x];
            if fs.len() != self.graph.neighbors(x).len() {
                return err(format!("vertex {x}: {} faces but degree {}", fs.len(), self.graph.neighbors(x).len()));
            }
            let sides = |f: usize| -> (usize, usize) {
                let face = &self.faces[f];
                let i = face.iter().position(|&v| v == x).unwrap();
                (face[(i + face.len() - 1) % face.len()], face[(i + 1) % face.len()])
            };
            let mut visited = vec![false; fs.len()];
            let mut cur = 0;
            let (_, mut out) = sides(fs[0]);
            for _ in 0..fs.len() {
                visited[cur] = true;
                let Some(nxt) = (0..fs.len()).find(|&j| !visited[j] && {
                    let (a, b) = sides(fs[j]);
                    a == out || b == out
                }) else {
                    break;
                };
                let (a, b) = sides(fs[nxt]);
                out = if a == out { b } else { a };
                cur = nxt;
            }
            if visited.iter().any(|&v| !v) {
                return err(format!("faces around vertex {x} do not form a single cycle"));
            }
        }
        Ok(())
    }

    /// Serializable form.
    pub fn to_file(&self) -> TessellationFile {
        TessellationFile {
            vertices: (0..self.vertex_count())
                .map(|x| TessVertex { id: x, interior: self.complete[x], layer: self.layer[x] })
                .collect(),
            edges: self.graph.edges().iter().map(|e| [e.u, e.v]).collect(),
            faces: self.faces.clone(),
            boundary: self.boundary_face.clone(),
        }
    }

    pub fn from_file(file: &TessellationFile) -> Result<Tessellation> {
        let n = file.vertices.len();
        for (i, v) in file.vertices.iter().enumerate() {
            if v.id != i {
                return Err(Error::GraphFile(format!("tessellation vertex record {i} has id {}", v.id)));
            }
        }
        let edges = file.edges.iter().map(|&[u, v]| Edge { u, v, b: 1.0 }).collect();
        let graph = WeightedGraph::new(GraphData::unit(n, edges))?;
        let mut vertex_faces = vec![Vec::new(); n];
        for (i, f) in file.faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(Error::GraphFile(format!("face {i} references vertex {v}")));
                }
                vertex_faces[v].push(i);
            }
        }
        let complete: Vec<bool> = file.vertices.iter().map(|v| v.interior).collect();
        let boundary_face = file.faces.iter().map(|f| f.iter().any(|&v| !complete[v])).collect();
        let t = Tessellation {
            graph,
            faces: file.faces.clone(),
            boundary_face,
            complete,
            layer: file.vertices.iter().map(|v| v.layer).collect(),
            layers: file.vertices.iter().map(|v| v.layer).max().unwrap_or(0),
            vertex_faces,
        };
        t.check_invariants()?;
        Ok(t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TessVertex {
    pub id: usize,
    pub interior: bool,
    #[serde(default)]
    pub layer: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TessellationFile {
    pub vertices: Vec<TessVertex>,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<Vec<usize>>,
    pub boundary: Vec<bool>,
}

/// `kappa(x) = 1 - n(x)/2 + sum_{f containing x} 1/deg(f)` on interior vertices.
pub fn vertex_curvature(t: &Tessellation, x: VertexId) -> Result<Curvature> {
    if !t.complete[x] {
        return Err(Error::BoundaryVertex(x));
    }
    Ok(t.patch_curvature(x))
}

/// Closed form for regular `{p, q}` patches: `1 - q/2 + q/p`.
pub fn regular_curvature(p: usize, q: usize) -> Curvature {
    Curvature::from_integer(1) - Curvature::new(q as i64, 2) + Curvature::new(q as i64, p as i64)
}

pub fn to_f64(k: Curvature) -> f64 {
    *k.numer() as f64 / *k.denom() as f64
}

/// Path metric with edge weights `(n(x) v n(y))^{-1/2}`.
pub fn d1_metric(g: &WeightedGraph, n: &[f64]) -> Result<PseudoMetric> {
    let w = d1_weights(g, n);
    let mut d = path_metric(g, &w)?;
    d.kind = MetricKind::D1;
    Ok(d)
}

pub fn d1_weights(g: &WeightedGraph, n: &[f64]) -> EdgeWeighting {
    EdgeWeighting::new(g.edges().iter().map(|e| n[e.u].max(n[e.v]).powf(-0.5)).collect())
}

/// d1 metric of the patch graph itself.
pub fn patch_d1_metric(t: &Tessellation) -> Result<PseudoMetric> {
    d1_metric(&t.graph, &normalizing_measure(&t.graph))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurvatureClass {
    /// `kappa >= 0` on every interior vertex.
    Nonnegative,
    /// `kappa < 0` on every interior vertex.
    Negative,
    /// `kappa < 0` everywhere and the largest value per depth ring strictly decreasing.
    Diverging,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub class: CurvatureClass,
    pub radius: usize,
    pub interior: usize,
    pub min_kappa: String,
    pub max_kappa: String,
    /// `sum |kappa|` over interior vertices at depth `<= radius`.
    pub total_abs: f64,
    pub checks: Vec<CurvatureCheck>,
}

impl CurvatureReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Largest curvature allowed on a tessellation that is negatively curved everywhere.
pub fn higuchi_bound() -> Curvature {
    Curvature::new(-1, 1806)
}

/// Classifies the curvature on `B_radius` of the center and runs the checks
/// attached to the class: quadratic growth in both `(d_n, m = n)` and `(d_1, m = 1)`
/// for nonnegative curvature; the `-1/1806` bound, exponential growth and a
/// spectral gap for negative curvature; an exterior spectral trend when diverging.
pub fn curvature_report(family: &Family, radius: usize) -> Result<CurvatureReport> {
    let FamilyKind::Tessellation { .. } = family.kind else {
        return Err(Error::Precondition("a tessellation family".into()));
    };
    let patch = family.patch_for_depth(radius + 1)?;
    let depth = patch.depths_from(0);
    let region: Vec<VertexId> = (0..patch.vertex_count()).filter(|&x| depth[x] <= radius).collect();
    let mut kappas = Vec::with_capacity(region.len());
    for &x in &region {
        kappas.push(vertex_curvature(&patch, x).map_err(|_| {
            Error::Tessellation(format!("vertex {x} at depth {} is not complete in the generated patch", depth[x]))
        })?);
    }
    let min = *kappas.iter().min().expect("center is in the region");
    let max = *kappas.iter().max().expect("center is in the region");
    let zero = Curvature::from_integer(0);
    let mut ring_max = vec![None::<Curvature>; radius + 1];
    for (&x, &k) in region.iter().zip(&kappas) {
        let slot = &mut ring_max[depth[x]];
        *slot = Some(slot.map_or(k, |v: Curvature| v.max(k)));
    }
    let ring_max: Vec<Curvature> = ring_max.into_iter().flatten().collect();
    let class = if min >= zero {
        CurvatureClass::Nonnegative
    } else if max < zero {
        if ring_max.len() > 2 && ring_max.windows(2).all(|w| w[1] < w[0]) {
            CurvatureClass::Diverging
        } else {
            CurvatureClass::Negative
        }
    } else {
        CurvatureClass::Mixed
    };
    let variant = |m: MeasureChoice| Family::new(family.kind.clone(), m);
    let mut checks = Vec::new();
    match class {
        CurvatureClass::Nonnegative => {
            let natural: Vec<f64> = (0..=radius).map(|r| r as f64).collect();
            let p = volume_profile_radii(&variant(MeasureChoice::Normalizing), MetricChoice::Natural, 0, &natural)?;
            checks.push(exponent_check("growth exponent (d_n, m = n)", p.poly_exponent));
            let qmax = region.iter().map(|&x| patch.graph.neighbors(x).len()).max().unwrap_or(1);
            let h = (qmax as f64).powf(-0.5);
            let d1: Vec<f64> = (0..=radius).map(|k| (k as f64 + 1e-9) * h).collect();
            let p = volume_profile_radii(&variant(MeasureChoice::Unit), MetricChoice::D1, 0, &d1)?;
            checks.push(exponent_check("growth exponent (d_1, m = 1)", p.poly_exponent));
        }
        CurvatureClass::Negative | CurvatureClass::Diverging => {
            checks.push(CurvatureCheck {
                name: "sup kappa <= -1/1806".into(),
                value: to_f64(max),
                threshold: to_f64(higuchi_bound()),
                pass: max <= higuchi_bound(),
            });
            let mu = exp_growth_rate(&variant(MeasureChoice::Unit), MetricChoice::Natural, 0, radius)?;
            checks.push(CurvatureCheck { name: "exponential growth rate".into(), value: mu, threshold: 0.0, pass: mu > 0.0 });
            let tr = Truncation::from_window(variant(MeasureChoice::Normalizing).materialize(radius)?);
            let lambda0 = bottom_eigenvalue(&assemble(&tr))?;
            checks.push(CurvatureCheck { name: "bottom of spectrum".into(), value: lambda0, threshold: 0.01, pass: lambda0 > 0.01 });
            if class == CurvatureClass::Diverging {
                let norm = variant(MeasureChoice::Normalizing);
                let near = exterior_bottom(&norm, 0, radius)?;
                let far = exterior_bottom(&norm, radius / 2, radius)?;
                checks.push(CurvatureCheck { name: "exterior bottom increases".into(), value: far - near, threshold: 0.0, pass: far > near });
            }
        }
        CurvatureClass::Mixed => {}
    }
    Ok(CurvatureReport {
        class,
        radius,
        interior: region.len(),
        min_kappa: min.to_string(),
        max_kappa: max.to_string(),
        total_abs: kappas.iter().map(|&k| to_f64(k).abs()).sum(),
        checks,
    })
}

fn exponent_check(name: &str, value: f64) -> CurvatureCheck {
    CurvatureCheck { name: name.into(), value, threshold: 2.0, pass: (value - 2.0).abs() <= 0.2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::verify_intrinsic;

    fn interior_curvatures(t: &Tessellation) -> Vec<Curvature> {
        t.interior().map(|x| vertex_curvature(t, x).unwrap()).collect()
    }

    #[test]
    fn rejects_spherical() {
        assert!(generate_pq(4, 3, 1).is_err());
        assert!(generate_pq(5, 3, 1).is_err());
        assert!(generate_pq(3, 5, 1).is_err());
    }

    #[test]
    fn regular_patches_have_constant_curvature() {
        for (p, q, layers) in [(4, 4, 3), (3, 6, 3), (6, 3, 4), (7, 3, 5), (8, 3, 4), (5, 4, 4)] {
            let t = generate_pq(p, q, layers).unwrap();
            t.check_invariants().unwrap();
            let ks = interior_curvatures(&t);
            assert!(!ks.is_empty());
            assert!(ks.iter().all(|&k| k == regular_curvature(p, q)), "({p},{q})");
            for x in t.interior() {
                assert_eq!(t.graph.neighbors(x).len(), q);
            }
            assert!(t.faces.iter().all(|f| f.len() == p));
        }
    }

    #[test]
    fn curvature_values() {
        assert_eq!(regular_curvature(4, 4), Curvature::from_integer(0));
        assert_eq!(regular_curvature(6, 3), Curvature::from_integer(0));
        assert_eq!(regular_curvature(7, 3), Curvature::new(-1, 14));
    }

    #[test]
    fn boundary_vertex_has_no_curvature() {
        let t = generate_pq(4, 4, 2).unwrap();
        let b = (0..t.vertex_count()).find(|&x| !t.complete[x]).unwrap();
        assert!(matches!(vertex_curvature(&t, b), Err(Error::BoundaryVertex(_))));
    }

    #[test]
    fn gauss_bonnet_on_patches() {
        for (p, q) in [(4, 4), (6, 3), (7, 3), (5, 4)] {
            for layers in 1..5 {
                let t = generate_pq(p, q, layers).unwrap();
                let v = t.vertex_count() as i64;
                let e = t.graph.edges().len() as i64;
                let f = t.faces.len() as i64;
                assert_eq!(v - e + f, 1);
                let total: Curvature = (0..t.vertex_count()).map(|x| t.patch_curvature(x)).sum();
                assert_eq!(total, Curvature::from_integer(1));
                let interior: Curvature = interior_curvatures(&t).into_iter().sum();
                let boundary: Curvature =
                    (0..t.vertex_count()).filter(|&x| !t.complete[x]).map(|x| t.patch_curvature(x)).sum();
                assert_eq!(interior, Curvature::from_integer(1) - boundary);
            }
        }
    }

    #[test]
    fn layers_are_nested() {
        let a = generate_pq(7, 3, 3).unwrap();
        let b = generate_pq(7, 3, 4).unwrap();
        let n = a.vertex_count();
        for e in a.graph.edges() {
            assert!(b.graph.weight(e.u, e.v) > 0.0);
        }
        assert_eq!(&b.faces[..a.faces.len()], &a.faces[..]);
        assert!(b.vertex_count() > n);
    }

    #[test]
    fn depth_bounds_layer() {
        let t = generate_pq(5, 4, 4).unwrap();
        let d = t.depths_from(0);
        for x in 0..t.vertex_count() {
            assert!(d[x] >= t.layer[x]);
        }
    }

    #[test]
    fn mixed_patch() {
        let t = generate_with_center(6, 3, 7, 4).unwrap();
        t.check_invariants().unwrap();
        let ks = interior_curvatures(&t);
        assert!(ks.iter().any(|&k| k < Curvature::from_integer(0)));
        assert!(ks.iter().any(|&k| k == Curvature::from_integer(0)));
    }

    #[test]
    fn d1_is_intrinsic_with_unit_measure() {
        for (p, q) in [(4, 4), (7, 3)] {
            let t = generate_pq(p, q, 3).unwrap();
            let d = patch_d1_metric(&t).unwrap();
            assert!(d.jump_size <= 1.0);
            assert!(verify_intrinsic(&t.graph, &d).intrinsic);
        }
        let t = generate_pq(4, 4, 3).unwrap();
        let d = patch_d1_metric(&t).unwrap();
        let n = normalizing_measure(&t.graph);
        let w = d1_weights(&t.graph, &n);
        for (e, &wi) in t.graph.edges().iter().zip(w.values()) {
            if t.complete[e.u] && t.complete[e.v] {
                assert_eq!(wi, 0.5);
            }
        }
        let _ = d;
    }

    #[test]
    fn json_round_trip() {
        let t = generate_pq(6, 3, 2).unwrap();
        let file = t.to_file();
        let s = serde_json::to_string(&file).unwrap();
        let back: TessellationFile = serde_json::from_str(&s).unwrap();
        let t2 = Tessellation::from_file(&back).unwrap();
        assert_eq!(t2.to_file(), file);
    }

    #[test]
    fn curvature_reports() {
        let r = curvature_report(&Family::tessellation(4, 4, MeasureChoice::Unit), 20).unwrap();
        assert_eq!(r.class, CurvatureClass::Nonnegative);
        assert!(r.pass(), "{r:?}");
        let r = curvature_report(&Family::tessellation(7, 3, MeasureChoice::Unit), 6).unwrap();
        assert_eq!(r.class, CurvatureClass::Negative);
        assert_eq!(r.max_kappa, "-1/14");
        assert!(r.pass(), "{r:?}");
        let mixed = Family::new(FamilyKind::Tessellation { p: 6, q: 3, center: 7 }, MeasureChoice::Unit);
        let r = curvature_report(&mixed, 4).unwrap();
        assert_eq!(r.class, CurvatureClass::Mixed);
        assert!(r.checks.is_empty() && r.total_abs > 0.0);
        assert!(curvature_report(&Family::lattice(2, MeasureChoice::Unit), 3).is_err());
    }
}
