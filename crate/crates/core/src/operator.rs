//! Dirichlet truncations of the Laplacian, heat and resolvent kernels, kernel
//! norms, explicit kernel bounds and a Feynman-Kac Monte Carlo estimator.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{GraphFamily, Window};
use crate::graph::{normalizing_measure, VertexId, WeightedGraph};
use crate::linalg::{self, SparseSym, SymEigen};
use crate::metric::{dijkstra, MetricChoice};

/// Windows above this size use iterative methods instead of a full eigendecomposition.
pub const DENSE_LIMIT: usize = 3000;

/// Restriction of the Laplacian to a finite window, edges leaving the window
/// turned into killing.
#[derive(Clone, Debug)]
pub struct Truncation {
    pub window: Window,
    pub buffer: usize,
}

impl Truncation {
    pub fn from_window(window: Window) -> Self {
        Truncation { window, buffer: 0 }
    }

    /// A finite graph with no boundary.
    pub fn from_graph(g: WeightedGraph) -> Self {
        let n = g.vertex_count();
        Truncation::from_window(Window {
            graph: g,
            root: 0,
            outer: vec![0.0; n],
            depth: vec![0; n],
            radius: 0,
            label: "graph".into(),
        })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.window.graph
    }

    /// `sum_{y outside W} b(x, y)`.
    pub fn boundary_killing(&self) -> &[f64] {
        &self.window.outer
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// `m = n` (full), `c = 0`.
    pub fn is_normalized(&self) -> bool {
        let n = self.window.full_normalizing_measure();
        self.graph().killing().iter().all(|&c| c == 0.0)
            && self.graph().measure().iter().zip(&n).all(|(m, n)| (m - n).abs() <= 1e-12 * n)
    }

    /// Same window with the killing term replaced.
    pub fn with_killing(&self, c: Vec<f64>) -> Result<Truncation> {
        let mut t = self.clone();
        t.window.graph = self.graph().with_killing(c)?;
        Ok(t)
    }

    /// Same window with `m = n` and `c = 0`.
    pub fn normalized(&self) -> Result<Truncation> {
        let n = self.window.full_normalizing_measure();
        let mut t = self.clone();
        t.window.graph = self.graph().with_measure(n)?.with_killing(vec![0.0; self.len()])?;
        Ok(t)
    }
}

/// `W = B_R(root)`; the family must support radius `R + buffer`.
pub fn truncate(family: &dyn GraphFamily, radius: usize, buffer: usize) -> Result<Truncation> {
    let w = family.materialize(radius)?;
    Ok(Truncation { window: w, buffer })
}

/// The operator `A` of a truncation together with `S = M^{1/2} A M^{-1/2}`.
#[derive(Debug)]
pub struct Laplacian {
    pub graph: WeightedGraph,
    /// `c + boundary killing`.
    pub potential: Vec<f64>,
    pub m: Vec<f64>,
    sqrt_m: Vec<f64>,
    pub s: SparseSym,
    /// `m = n`, `c = 0`, no boundary.
    pub normalized_closed: bool,
    eigen: OnceLock<SymEigen>,
}

impl Clone for Laplacian {
    fn clone(&self) -> Self {
        Laplacian {
            graph: self.graph.clone(),
            potential: self.potential.clone(),
            m: self.m.clone(),
            sqrt_m: self.sqrt_m.clone(),
            s: self.s.clone(),
            normalized_closed: self.normalized_closed,
            eigen: OnceLock::new(),
        }
    }
}

pub fn assemble(t: &Truncation) -> Laplacian {
    let g = t.graph();
    let m = g.measure().to_vec();
    let sqrt_m: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    let n = normalizing_measure(g);
    let potential: Vec<f64> = g.killing().iter().zip(t.boundary_killing()).map(|(c, k)| c + k).collect();
    let diag = (0..m.len()).map(|x| (n[x] + potential[x]) / m[x]).collect();
    let rows = (0..m.len())
        .map(|x| g.neighbors(x).iter().map(|&(y, b, _)| (y, -b / (sqrt_m[x] * sqrt_m[y]))).collect())
        .collect();
    let normalized_closed = !t.window.has_boundary() && t.is_normalized();
    Laplacian {
        graph: g.clone(),
        potential,
        m,
        sqrt_m,
        s: SparseSym { diag, rows },
        normalized_closed,
        eigen: OnceLock::new(),
    }
}

impl Laplacian {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// `A f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|x| {
                let mut s = self.potential[x] * f[x];
                for &(y, b, _) in self.graph.neighbors(x) {
                    s += b * (f[x] - f[y]);
                }
                s / self.m[x]
            })
            .collect()
    }

    /// Dense action matrix `A`.
    pub fn action_matrix(&self) -> DMatrix<f64> {
        let s = self.s.to_dense();
        DMatrix::from_fn(self.len(), self.len(), |x, y| s[(x, y)] * self.sqrt_m[y] / self.sqrt_m[x])
    }

    pub fn symmetrized(&self) -> DMatrix<f64> {
        self.s.to_dense()
    }

    /// Full eigendecomposition of `S`, computed once.
    pub fn eigen(&self) -> Result<&SymEigen> {
        if self.len() > DENSE_LIMIT {
            return Err(Error::TooLarge { what: "dense eigendecomposition", size: self.len(), limit: DENSE_LIMIT });
        }
        Ok(self.eigen.get_or_init(|| linalg::sym_eigen(&self.s.to_dense())))
    }

    /// `sup |S|`, used as the Chebyshev interval.
    pub fn spectral_bound(&self) -> f64 {
        self.s.gershgorin()
    }

    /// Bottom eigenvalue of `S` with its eigenvector (dense or Lanczos).
    pub fn bottom(&self) -> Result<(f64, Vec<f64>)> {
        if self.len() <= DENSE_LIMIT {
            let e = self.eigen()?;
            return Ok((e.values[0], e.vectors.column(0).iter().copied().collect()));
        }
        // positive start vector overlaps the Perron ground state
        let start: Vec<f64> = self.sqrt_m.clone();
        let r = linalg::lanczos_bottom(&self.s, &start, 1e-10, 150, 200);
        if r.residual > 1e-8 {
            return Err(Error::Precondition(format!(
                "Lanczos convergence (residual {:.3e} after {} products)",
                r.residual, r.iterations
            )));
        }
        Ok((r.value, r.vector))
    }

    pub fn inner_m(&self, f: &[f64], g: &[f64]) -> f64 {
        f.iter().zip(g).zip(&self.m).map(|((a, b), m)| a * b * m).sum()
    }

    /// `T_t f = e^{-tL} f`.
    pub fn heat_apply(&self, t: f64, f: &[f64]) -> Result<Vec<f64>> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        let v: Vec<f64> = f.iter().zip(&self.sqrt_m).map(|(a, s)| a * s).collect();
        let w = if self.len() <= DENSE_LIMIT {
            let e = self.eigen()?;
            let coeff = e.vectors.transpose() * linalg::to_dvector(&v);
            let scaled = coeff.iter().zip(&e.values).map(|(c, l)| c * (-t * l).exp()).collect::<Vec<_>>();
            (&e.vectors * linalg::to_dvector(&scaled)).iter().copied().collect()
        } else {
            linalg::expm_times(&self.s, t, self.spectral_bound(), &v)
        };
        Ok(w.iter().zip(&self.sqrt_m).map(|(a, s)| a / s).collect())
    }

    /// Kernel of a spectral function `phi(S)`: `M^{-1/2} phi(S) M^{-1/2}`.
    fn kernel_of(&self, phi: impl Fn(f64) -> f64, tag: KernelTag) -> Result<KernelMatrix> {
        let e = self.eigen()?;
        let mut k = e.apply_fn(phi);
        let n = self.len();
        for x in 0..n {
            for y in 0..n {
                k[(x, y)] /= self.sqrt_m[x] * self.sqrt_m[y];
            }
        }
        symmetrize(&mut k);
        Ok(KernelMatrix { k, m: self.m.clone(), tag })
    }

    fn nearest_eigenvalue(&self, z: Complex64) -> Result<()> {
        let e = self.eigen()?;
        for &l in &e.values {
            let dist = (Complex64::new(l, 0.0) - z).norm();
            if dist < 1e-8 {
                return Err(Error::Singular { z: z.to_string(), eigenvalue: l, distance: dist });
            }
        }
        Ok(())
    }
}

fn symmetrize(k: &mut DMatrix<f64>) {
    let n = k.nrows();
    for x in 0..n {
        for y in x + 1..n {
            let v = 0.5 * (k[(x, y)] + k[(y, x)]);
            k[(x, y)] = v;
            k[(y, x)] = v;
        }
    }
}

/// `Q(f, g) = 1/2 sum b (f(x)-f(y)) conj(g(x)-g(y)) + sum (c + killing) f conj(g)`.
pub fn dirichlet_energy(l: &Laplacian, f: &[Complex64], g: &[Complex64]) -> Complex64 {
    let mut q = Complex64::new(0.0, 0.0);
    for e in l.graph.edges() {
        q += e.b * (f[e.u] - f[e.v]) * (g[e.u] - g[e.v]).conj();
    }
    for x in 0..l.len() {
        q += l.potential[x] * f[x] * g[x].conj();
    }
    q
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelTag {
    Heat { t: f64 },
    Resolvent { alpha: f64 },
    SquaredResolvent { re: f64, im: f64 },
    Transition,
    Identity,
    Composite,
}

/// Kernel `k` of an operator with respect to `m`: `K f(x) = sum_y k(x,y) f(y) m(y)`.
#[derive(Clone, Debug)]
pub struct KernelMatrix {
    pub k: DMatrix<f64>,
    pub m: Vec<f64>,
    pub tag: KernelTag,
}

#[derive(Clone, Debug)]
pub struct ComplexKernel {
    pub k: DMatrix<Complex64>,
    pub m: Vec<f64>,
    pub tag: KernelTag,
}

impl KernelMatrix {
    pub fn identity(m: &[f64]) -> Self {
        let n = m.len();
        KernelMatrix { k: DMatrix::from_fn(n, n, |x, y| if x == y { 1.0 / m[x] } else { 0.0 }), m: m.to_vec(), tag: KernelTag::Identity }
    }

    pub fn get(&self, x: VertexId, y: VertexId) -> f64 {
        self.k[(x, y)]
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// `(K1 K2)(x, y) = sum_z k1(x, z) k2(z, y) m(z)`.
    pub fn compose(&self, other: &KernelMatrix) -> KernelMatrix {
        let mut left = self.k.clone();
        for z in 0..self.len() {
            left.column_mut(z).scale_mut(self.m[z]);
        }
        KernelMatrix { k: left * &other.k, m: self.m.clone(), tag: KernelTag::Composite }
    }

    /// `M^{1/2} K M^{1/2}`, the matrix of the operator in an orthonormal basis.
    pub fn symmetrized(&self) -> DMatrix<f64> {
        let s: Vec<f64> = self.m.iter().map(|v| v.sqrt()).collect();
        DMatrix::from_fn(self.len(), self.len(), |x, y| self.k[(x, y)] * s[x] * s[y])
    }

    pub fn norm(&self, p: f64, q: f64) -> Result<f64> {
        let abs = self.k.map(f64::abs);
        kernel_norm_abs(&abs, &self.m, p, q, || {
            let s = self.symmetrized();
            if (&s - s.transpose()).amax() <= 1e-12 * s.amax().max(1e-300) {
                linalg::sym_eigenvalues(&s).iter().fold(0.0, |a: f64, v| a.max(v.abs()))
            } else {
                s.singular_values().max()
            }
        })
    }

    pub fn transpose_is_close(&self, tol: f64) -> bool {
        (&self.k - self.k.transpose()).amax() <= tol * self.k.amax().max(1e-300)
    }
}

impl ComplexKernel {
    pub fn norm(&self, p: f64, q: f64) -> Result<f64> {
        let abs = self.k.map(|z| z.norm());
        kernel_norm_abs(&abs, &self.m, p, q, || {
            let s: Vec<f64> = self.m.iter().map(|v| v.sqrt()).collect();
            let n = self.m.len();
            let sym = DMatrix::from_fn(n, n, |x, y| self.k[(x, y)] * s[x] * s[y]);
            sym.singular_values().max()
        })
    }
}

/// Norm formulas on the absolute kernel; `two_two` supplies the exact (2,2) norm.
fn kernel_norm_abs(abs: &DMatrix<f64>, m: &[f64], p: f64, q: f64, two_two: impl FnOnce() -> f64) -> Result<f64> {
    let inrange = |v: f64| (1.0..=f64::INFINITY).contains(&v);
    if !inrange(p) || !inrange(q) {
        return Err(Error::BadExponent { p, q });
    }
    let n = m.len();
    if p == 1.0 && q == 1.0 {
        return Ok((0..n).map(|y| (0..n).map(|x| abs[(x, y)] * m[x]).sum::<f64>()).fold(0.0, f64::max));
    }
    if p.is_infinite() && q.is_infinite() {
        return Ok((0..n).map(|x| (0..n).map(|y| abs[(x, y)] * m[y]).sum::<f64>()).fold(0.0, f64::max));
    }
    if p == 1.0 && q.is_infinite() {
        return Ok(abs.max());
    }
    if p == 2.0 && q == 2.0 {
        return Ok(two_two());
    }
    // (sum_y ||k(., y)||_q^{p*} m(y))^{1/p*}
    let col_q = |y: usize| -> f64 {
        if q.is_infinite() {
            abs.column(y).max()
        } else {
            (0..n).map(|x| abs[(x, y)].powf(q) * m[x]).sum::<f64>().powf(1.0 / q)
        }
    };
    let pstar = if p == 1.0 { f64::INFINITY } else if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    if pstar.is_infinite() {
        Ok((0..n).map(col_q).fold(0.0, f64::max))
    } else {
        Ok((0..n).map(|y| col_q(y).powf(pstar) * m[y]).sum::<f64>().powf(1.0 / pstar))
    }
}

/// `p_t(x, y) = [M^{-1/2} e^{-tS} M^{-1/2}]_{xy}`.
pub fn heat_kernel(l: &Laplacian, t: f64) -> Result<KernelMatrix> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    l.kernel_of(|v| (-t * v).exp(), KernelTag::Heat { t })
}

/// Columns `p_t(., y)` for the given `y`, without a full eigendecomposition.
pub fn heat_columns(l: &Laplacian, t: f64, cols: &[VertexId]) -> Result<Vec<Vec<f64>>> {
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let bound = l.spectral_bound();
    Ok(cols
        .par_iter()
        .map(|&y| {
            let mut e = vec![0.0; l.len()];
            e[y] = 1.0 / l.sqrt_m[y];
            let w = linalg::expm_times(&l.s, t, bound, &e);
            w.iter().zip(&l.sqrt_m).map(|(a, s)| a / s).collect()
        })
        .collect())
}

/// Kernel of `(L - alpha)^{-1}`.
pub fn resolvent_kernel(l: &Laplacian, alpha: f64) -> Result<KernelMatrix> {
    l.nearest_eigenvalue(Complex64::new(alpha, 0.0))?;
    l.kernel_of(|v| 1.0 / (v - alpha), KernelTag::Resolvent { alpha })
}

/// Kernel of `(L - z)^{-2}`.
pub fn squared_resolvent_kernel(l: &Laplacian, z: Complex64) -> Result<ComplexKernel> {
    l.nearest_eigenvalue(z)?;
    let e = l.eigen()?;
    let n = l.len();
    let coef: Vec<Complex64> = e.values.iter().map(|&v| (Complex64::new(v, 0.0) - z).powi(-2)).collect();
    let mut k = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for x in 0..n {
        for y in x..n {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += coef[j] * (e.vectors[(x, j)] * e.vectors[(y, j)]);
            }
            let v = s / (l.sqrt_m[x] * l.sqrt_m[y]);
            k[(x, y)] = v;
            k[(y, x)] = v;
        }
    }
    Ok(ComplexKernel { k, m: l.m.clone(), tag: KernelTag::SquaredResolvent { re: z.re, im: z.im } })
}

/// Least-squares fit of `log |k(x, y0)|` against `d(x, y0)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn decay_fit(values: &[f64], dist: &[f64]) -> DecayFit {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .zip(dist)
        .filter(|(v, d)| **v > 0.0 && d.is_finite())
        .map(|(v, d)| (*d, v.ln()))
        .collect();
    let (slope, intercept, r_squared) = linear_fit(&pts);
    DecayFit { slope, intercept, r_squared, points: pts.len() }
}

/// `(slope, intercept, R^2)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (0.0, pts.first().map(|p| p.1).unwrap_or(0.0), 0.0);
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

/// `P f(x) = (1/n(x)) sum_y b(x, y) f(y)` on a normalized truncation.
pub fn transition_matrix(t: &Truncation) -> Result<KernelMatrix> {
    if !t.is_normalized() {
        return Err(Error::Precondition("a truncation with m = n and c = 0".into()));
    }
    let g = t.graph();
    let m = g.measure();
    let n = g.vertex_count();
    let mut k = DMatrix::zeros(n, n);
    for e in g.edges() {
        let v = e.b / (m[e.u] * m[e.v]);
        k[(e.u, e.v)] = v;
        k[(e.v, e.u)] = v;
    }
    Ok(KernelMatrix { k, m: m.to_vec(), tag: KernelTag::Transition })
}

/// One failed pointwise bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundViolation {
    pub x: VertexId,
    pub y: VertexId,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

/// Truncation `W = B_R` with distances between its vertices taken in a window of
/// radius `R + buffer`.
#[derive(Clone, Debug)]
pub struct BoundSetup {
    pub truncation: Truncation,
    pub laplacian: Laplacian,
    /// `|W| x |W|` distances, row-major.
    pub dist: Vec<f64>,
    pub radius: usize,
    pub buffer: usize,
    pub metric: MetricChoice,
}

impl BoundSetup {
    pub fn d(&self, x: VertexId, y: VertexId) -> f64 {
        self.dist[x * self.truncation.len() + y]
    }
}

pub fn bound_setup(family: &dyn GraphFamily, radius: usize, buffer: usize, metric: MetricChoice) -> Result<BoundSetup> {
    let big = family.materialize(radius + buffer)?;
    let inner = big.ball(radius)?;
    let k = inner.len();
    // ids are BFS-ordered, so B_R occupies the prefix
    debug_assert!((0..k).all(|x| big.depth[x] <= radius));
    let w = metric.weights(&big.graph, &big.full_normalizing_measure());
    let mut wanted = vec![false; big.len()];
    wanted[..k].iter_mut().for_each(|v| *v = true);
    let rows: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|x| dijkstra(&big.graph, w.values(), x, f64::INFINITY, Some(&wanted))[..k].to_vec())
        .collect();
    let mut dist: Vec<f64> = rows.into_iter().flatten().collect();
    for x in 0..k {
        for y in x + 1..k {
            let v = dist[x * k + y].min(dist[y * k + x]);
            dist[x * k + y] = v;
            dist[y * k + x] = v;
        }
    }
    let truncation = Truncation { window: inner, buffer };
    let laplacian = assemble(&truncation);
    Ok(BoundSetup { truncation, laplacian, dist, radius, buffer, metric })
}

// Absolute slack for round-off in kernel entries, relative to (m(x) m(y))^{-1/2}.
const BOUND_TOL: f64 = 1e-12;

fn scan_bound(setup: &BoundSetup, k: &KernelMatrix, t: f64, rhs: impl Fn(f64) -> f64 + Sync) -> Vec<BoundViolation> {
    let n = setup.truncation.len();
    let m = &setup.laplacian.m;
    (0..n)
        .into_par_iter()
        .flat_map_iter(|x| {
            let rhs = &rhs;
            (0..n).filter_map(move |y| {
                let scale = (m[x] * m[y]).sqrt().recip();
                let lhs = k.get(x, y);
                let r = scale * rhs(setup.d(x, y));
                (lhs > r + BOUND_TOL * scale).then_some(BoundViolation { x, y, t, lhs, rhs: r })
            })
        })
        .collect()
}

/// `exp(-d log(d / 2et))`, with `d log d = 0` at `d = 0`.
pub fn log_decay_bound(d: f64, t: f64) -> f64 {
    if d == 0.0 {
        1.0
    } else if t == 0.0 {
        0.0
    } else {
        (-d * (d / (2.0 * std::f64::consts::E * t)).ln()).exp()
    }
}

/// `p_t <= (m m)^{-1/2} exp(-d log(d / 2et))` for every pair and grid time.
pub fn heat_bound_check(setup: &BoundSetup, t_grid: &[f64]) -> Result<Vec<BoundViolation>> {
    let mut out = Vec::new();
    for &t in t_grid {
        let k = heat_kernel(&setup.laplacian, t)?;
        out.extend(scan_bound(setup, &k, t, |d| log_decay_bound(d, t)));
    }
    Ok(out)
}

/// `p_t <= (m m)^{-1/2} exp(-beta d + 2 e^beta t)`.
pub fn heat_bound_beta_check(setup: &BoundSetup, beta: f64, t_grid: &[f64]) -> Result<Vec<BoundViolation>> {
    let mut out = Vec::new();
    for &t in t_grid {
        let k = heat_kernel(&setup.laplacian, t)?;
        let growth = 2.0 * beta.exp() * t;
        out.extend(scan_bound(setup, &k, t, |d| (-beta * d + growth).exp()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResolventBoundReport {
    pub eps: f64,
    pub alpha: f64,
    pub constant: f64,
    pub pairs: usize,
    /// Largest `lhs / rhs` over all pairs.
    pub worst_ratio: f64,
    pub violations: Vec<BoundViolation>,
}

/// With `C(eps) = 2 e^eps`, `alpha = -2 C(eps)` and `C = 1 / (|alpha| - C(eps))`,
/// checks `|g_alpha| <= C (m m)^{-1/2} e^{-eps d}`.
pub fn resolvent_bound_check(setup: &BoundSetup, eps: f64) -> Result<ResolventBoundReport> {
    let c_eps = 2.0 * eps.exp();
    let alpha = -2.0 * c_eps;
    let constant = 1.0 / (alpha.abs() - c_eps);
    let g = resolvent_kernel(&setup.laplacian, alpha)?;
    let n = setup.truncation.len();
    let m = &setup.laplacian.m;
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            let r = constant * (m[x] * m[y]).sqrt().recip() * (-eps * setup.d(x, y)).exp();
            worst = worst.max(g.get(x, y).abs() / r);
        }
    }
    let abs = KernelMatrix { k: g.k.map(f64::abs), m: g.m.clone(), tag: g.tag };
    let violations = scan_bound(setup, &abs, 0.0, |d| constant * (-eps * d).exp());
    Ok(ResolventBoundReport { eps, alpha, constant, pairs: n * n, worst_ratio: worst, violations })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// `|estimate - exact| <= k * stderr`, with a floor for zero-variance estimates.
    pub fn within(&self, exact: f64, k: f64) -> bool {
        (self.estimate - exact).abs() <= k * self.stderr + 1e-12
    }
}

const MC_CHUNK: usize = 4096;

/// Continuous-time chain on the window: holding rate `(n + killing)/m`, jumps to
/// `y` with probability `b(x, y) / n_full(x)`, and a jump across the window edge
/// kills the walker. Each path carries `exp(-int_0^t (c/m)(X_s) ds)`; the estimate
/// of `p_t(x, y)` is the mean of that weight on `{X_t = y}`, divided by `m(y)`.
///
/// Samples are split into fixed chunks, chunk `i` using stream `i` of a ChaCha8
/// generator seeded with `seed`, so results do not depend on the thread count.
pub fn feynman_kac_mc(
    t: &Truncation,
    time: f64,
    x: VertexId,
    y: VertexId,
    samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if time < 0.0 {
        return Err(Error::NegativeTime(time));
    }
    let g = t.graph();
    let m = g.measure();
    let c = g.killing();
    let outer = t.boundary_killing();
    if c.iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition("c >= 0".into()));
    }
    let total: Vec<f64> = normalizing_measure(g).iter().zip(outer).map(|(a, b)| a + b).collect();
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let w = walk(g, &total, m, c, time, x, y, &mut rng);
                s1 += w;
                s2 += w * w;
            }
            (s1, s2)
        })
        .collect();
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = if samples > 1 { ((s2 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0) } else { 0.0 };
    let scale = 1.0 / m[y];
    Ok(McEstimate { estimate: mean * scale, stderr: (var / nf).sqrt() * scale, samples, seed })
}

#[allow(clippy::too_many_arguments)]
fn walk(
    g: &WeightedGraph,
    total: &[f64],
    m: &[f64],
    c: &[f64],
    time: f64,
    start: VertexId,
    target: VertexId,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut v = start;
    let mut s = 0.0;
    let mut log_w = 0.0;
    loop {
        let rate = total[v] / m[v];
        let hold = if rate > 0.0 { -(1.0 - rng.random::<f64>()).ln() / rate } else { f64::INFINITY };
        if s + hold >= time {
            log_w -= (time - s) * c[v] / m[v];
            return if v == target { log_w.exp() } else { 0.0 };
        }
        log_w -= hold * c[v] / m[v];
        s += hold;
        let mut u = rng.random::<f64>() * total[v];
        let mut next = None;
        for &(y, b, _) in g.neighbors(v) {
            if u < b {
                next = Some(y);
                break;
            }
            u -= b;
        }
        match next {
            Some(y) => v = y,
            None => return 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{Family, MeasureChoice};
    use crate::graph::{Edge, GraphData};
    use approx::assert_relative_eq;

    fn make(edges: &[(usize, usize, f64)], m: Vec<f64>, c: Vec<f64>) -> WeightedGraph {
        let edges = edges.iter().map(|&(u, v, b)| Edge { u, v, b }).collect();
        WeightedGraph::new_allow_isolated(GraphData::new(m, c, edges)).unwrap()
    }

    fn single_edge() -> Laplacian {
        assemble(&Truncation::from_graph(make(&[(0, 1, 1.0)], vec![1.0, 1.0], vec![0.0, 0.0])))
    }

    fn p3_normalized() -> Laplacian {
        assemble(&Truncation::from_graph(make(&[(0, 1, 1.0), (1, 2, 1.0)], vec![1.0, 2.0, 1.0], vec![0.0; 3])))
    }

    #[test]
    fn truncation_examples() {
        let z = truncate(&Family::lattice(1, MeasureChoice::Unit), 2, 2).unwrap();
        assert_eq!(z.len(), 5);
        let killed: Vec<f64> = z.boundary_killing().to_vec();
        assert_eq!(killed.iter().filter(|&&k| k == 1.0).count(), 2);
        assert_eq!(killed.iter().sum::<f64>(), 2.0);
        let e = truncate(&Family::single_edge(MeasureChoice::Unit), 3, 0).unwrap();
        assert!(!e.window.has_boundary());
        let tree = truncate(&Family::regular_tree(3, MeasureChoice::Unit), 2, 2).unwrap();
        let leaves: Vec<f64> = tree.boundary_killing().iter().copied().filter(|&k| k > 0.0).collect();
        assert_eq!(leaves, vec![2.0; 6]);
    }

    #[test]
    fn assemble_examples() {
        let l = single_edge();
        assert_eq!(l.action_matrix(), DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]));
        let ev = &l.eigen().unwrap().values;
        assert_relative_eq!(ev[0], 0.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1], 2.0, epsilon = 1e-14);
        let one = assemble(&Truncation::from_graph(make(&[], vec![1.0], vec![1.0])));
        assert_eq!(one.action_matrix(), DMatrix::from_element(1, 1, 1.0));
        let p3 = p3_normalized();
        let ev = &p3.eigen().unwrap().values;
        for (a, b) in ev.iter().zip([0.0, 1.0, 2.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalized_rows_sum_to_zero() {
        let l = p3_normalized();
        assert!(l.normalized_closed);
        let a = l.action_matrix();
        for r in 0..3 {
            assert!(a.row(r).sum().abs() < 1e-15);
        }
    }

    #[test]
    fn dirichlet_energy_examples() {
        let l = single_edge();
        let one = vec![Complex64::new(1.0, 0.0); 2];
        assert_eq!(dirichlet_energy(&l, &one, &one), Complex64::new(0.0, 0.0));
        let f = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        assert_eq!(dirichlet_energy(&l, &f, &f).re, 4.0);
        let tree = truncate(&Family::regular_tree(3, MeasureChoice::Unit), 3, 3).unwrap();
        let l = assemble(&tree);
        let f: Vec<f64> = (0..l.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let fc: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let q = dirichlet_energy(&l, &fc, &fc).re;
        let af = l.apply(&f);
        assert_relative_eq!(q, l.inner_m(&af, &f), max_relative = 1e-10);
    }

    #[test]
    fn heat_kernel_examples() {
        let l = single_edge();
        let p0 = heat_kernel(&l, 0.0).unwrap();
        assert_relative_eq!(p0.get(0, 0), 1.0, epsilon = 1e-14);
        assert_relative_eq!(p0.get(0, 1), 0.0, epsilon = 1e-14);
        for t in [0.3, 1.0, 4.0] {
            let p = heat_kernel(&l, t).unwrap();
            assert_relative_eq!(p.get(0, 0), (1.0 + (-2.0 * t).exp()) / 2.0, epsilon = 1e-13);
            assert_relative_eq!(p.get(0, 1), (1.0 - (-2.0 * t).exp()) / 2.0, epsilon = 1e-13);
        }
        assert!(matches!(heat_kernel(&l, -1.0), Err(Error::NegativeTime(_))));
        let c6 = Family::cycle(6, MeasureChoice::Normalizing).materialize(10).unwrap();
        let l = assemble(&Truncation::from_window(c6));
        let p = heat_kernel(&l, 1.7).unwrap();
        for x in 0..6 {
            let s: f64 = (0..6).map(|y| p.get(x, y) * l.m[y]).sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-10);
        }
        assert_relative_eq!(p.norm(1.0, 1.0).unwrap(), 1.0, epsilon = 1e-10);
        assert_relative_eq!(p.norm(f64::INFINITY, f64::INFINITY).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn heat_columns_match_dense() {
        let tree = truncate(&Family::regular_tree(3, MeasureChoice::Normalizing), 4, 0).unwrap();
        let l = assemble(&tree);
        let k = heat_kernel(&l, 2.0).unwrap();
        let cols = heat_columns(&l, 2.0, &[0, 5, 30]).unwrap();
        for (c, &y) in cols.iter().zip(&[0, 5, 30]) {
            for x in 0..l.len() {
                assert!((c[x] - k.get(x, y)).abs() < 1e-12);
            }
        }
        let f = vec![1.0; l.len()];
        let a = l.heat_apply(2.0, &f).unwrap();
        let b = linalg::expm_times(&l.s, 2.0, l.spectral_bound(), &l.sqrt_m);
        for x in 0..l.len() {
            assert!((a[x] - b[x] / l.sqrt_m[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn resolvent_examples() {
        let one = assemble(&Truncation::from_graph(make(&[], vec![1.0], vec![1.0])));
        assert_relative_eq!(resolvent_kernel(&one, -1.0).unwrap().get(0, 0), 0.5, epsilon = 1e-15);
        let l = single_edge();
        let g = resolvent_kernel(&l, -1.0).unwrap();
        assert_relative_eq!(g.get(0, 0), 2.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(g.get(0, 1), 1.0 / 3.0, epsilon = 1e-14);
        assert!(matches!(resolvent_kernel(&l, 0.0), Err(Error::Singular { .. })));
        assert!(matches!(resolvent_kernel(&l, 2.0 + 1e-9), Err(Error::Singular { .. })));
        let g2 = squared_resolvent_kernel(&l, Complex64::new(-1.0, 0.0)).unwrap();
        let sq = g.compose(&g);
        for x in 0..2 {
            for y in 0..2 {
                assert!((g2.k[(x, y)].re - sq.get(x, y)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn resolvent_is_laplace_transform_of_heat() {
        let tree = truncate(&Family::regular_tree(3, MeasureChoice::Unit), 2, 0).unwrap();
        let l = assemble(&tree);
        let alpha = -1.0;
        let g = resolvent_kernel(&l, alpha).unwrap();
        // integrate e^{alpha t} p_t on [0, 40] with composite Simpson
        let steps = 4000;
        let h = 40.0 / steps as f64;
        let mut acc = DMatrix::zeros(l.len(), l.len());
        for i in 0..=steps {
            let t = i as f64 * h;
            let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += heat_kernel(&l, t).unwrap().k * (w * (alpha * t).exp());
        }
        acc *= h / 3.0;
        assert!((acc - &g.k).amax() < 1e-6);
    }

    #[test]
    fn kernel_norm_examples() {
        let m = vec![1.0, 2.0, 0.5];
        let id = KernelMatrix::identity(&m);
        for (p, q) in [(1.0, 1.0), (2.0, 2.0), (f64::INFINITY, f64::INFINITY), (3.0, 3.0), (1.5, 1.5)] {
            let v = id.norm(p, q).unwrap();
            if p == 1.0 || p == 2.0 || p.is_infinite() {
                assert_relative_eq!(v, 1.0, epsilon = 1e-14);
            } else {
                assert!(v >= 1.0 - 1e-14);
            }
        }
        assert!(matches!(id.norm(0.5, 1.0), Err(Error::BadExponent { .. })));
        let tree = truncate(&Family::regular_tree(3, MeasureChoice::Unit), 3, 0).unwrap();
        let p = heat_kernel(&assemble(&tree), 1.0).unwrap();
        assert!(p.norm(1.0, 1.0).unwrap() < 1.0);
    }

    #[test]
    fn transition_examples() {
        let e = Truncation::from_graph(make(&[(0, 1, 1.0)], vec![1.0, 1.0], vec![0.0, 0.0]));
        let p = transition_matrix(&e).unwrap();
        assert_eq!(p.get(0, 1), 1.0);
        assert_eq!(p.get(0, 0), 0.0);
        for q in [1.0, 2.0, f64::INFINITY] {
            assert_relative_eq!(p.norm(q, q).unwrap(), 1.0, epsilon = 1e-14);
        }
        let p3 = Truncation::from_graph(make(&[(0, 1, 1.0), (1, 2, 1.0)], vec![1.0, 2.0, 1.0], vec![0.0; 3]));
        let p = transition_matrix(&p3).unwrap();
        for q in [1.0, 2.0, f64::INFINITY] {
            assert!(p.norm(q, q).unwrap() <= 1.0 + 1e-14);
        }
        // I - P has the Laplacian spectrum
        let s = DMatrix::identity(3, 3) - p.symmetrized();
        let ev = linalg::sym_eigenvalues(&s);
        let l3 = assemble(&p3);
        let lv = &l3.eigen().unwrap().values;
        for (a, b) in ev.iter().zip(lv) {
            assert!((a - b).abs() < 1e-12);
        }
        let unit = Truncation::from_graph(make(&[(0, 1, 1.0), (1, 2, 1.0)], vec![1.0; 3], vec![0.0; 3]));
        assert!(transition_matrix(&unit).is_err());
    }

    #[test]
    fn semigroup_and_resolvent_identity() {
        let tree = truncate(&Family::regular_tree(3, MeasureChoice::Unit), 3, 0).unwrap();
        let l = assemble(&tree);
        let a = heat_kernel(&l, 0.7).unwrap();
        let b = heat_kernel(&l, 1.3).unwrap();
        let ab = heat_kernel(&l, 2.0).unwrap();
        assert!((a.compose(&b).k - &ab.k).amax() < 1e-9);
        let (al, be) = (-0.5, -2.0);
        let ga = resolvent_kernel(&l, al).unwrap();
        let gb = resolvent_kernel(&l, be).unwrap();
        let lhs = &ga.k - &gb.k;
        let rhs = ga.compose(&gb).k * (al - be);
        assert!((lhs - rhs).amax() < 1e-9);
        let lambda0 = l.eigen().unwrap().values[0];
        assert_relative_eq!(ab.norm(2.0, 2.0).unwrap(), (-2.0 * lambda0).exp(), epsilon = 1e-9);
    }

    #[test]
    fn decay_fit_on_lattice() {
        let s = bound_setup(&Family::lattice(1, MeasureChoice::Unit), 40, 40, MetricChoice::Natural).unwrap();
        for z in [Complex64::new(-1.0, 0.0), Complex64::new(0.5, 0.5)] {
            let g2 = squared_resolvent_kernel(&s.laplacian, z).unwrap();
            let vals: Vec<f64> = (0..s.truncation.len()).map(|x| g2.k[(x, 0)].norm()).collect();
            let d: Vec<f64> = (0..s.truncation.len()).map(|x| s.d(x, 0)).collect();
            let fit = decay_fit(&vals, &d);
            assert!(fit.slope < 0.0, "{z}: {fit:?}");
            if z.im == 0.0 {
                assert!(fit.r_squared > 0.9, "{fit:?}");
            }
        }
    }

    #[test]
    fn bound_checks_small() {
        let grid = [0.1, 1.0, 10.0];
        let s = bound_setup(&Family::lattice(1, MeasureChoice::Unit), 8, 8, MetricChoice::Intrinsic).unwrap();
        assert!(heat_bound_check(&s, &grid).unwrap().is_empty());
        assert!(heat_bound_beta_check(&s, 1.0, &grid).unwrap().is_empty());
        assert!(resolvent_bound_check(&s, 1.0).unwrap().violations.is_empty());
        // diagonal: bound is 1 / m(x)
        assert_eq!(log_decay_bound(0.0, 3.0), 1.0);
    }

    #[test]
    fn domain_monotonicity() {
        let f = Family::regular_tree(3, MeasureChoice::Unit);
        let small = assemble(&truncate(&f, 2, 0).unwrap());
        let big = assemble(&truncate(&f, 3, 0).unwrap());
        let ps = heat_kernel(&small, 1.5).unwrap();
        let pb = heat_kernel(&big, 1.5).unwrap();
        for x in 0..small.len() {
            for y in 0..small.len() {
                assert!(pb.get(x, y) >= ps.get(x, y) - 1e-14);
            }
        }
    }

    #[test]
    fn feynman_kac_examples() {
        let e = Truncation::from_graph(make(&[(0, 1, 1.0)], vec![1.0, 1.0], vec![0.0, 0.0]));
        let r = feynman_kac_mc(&e, 0.0, 0, 0, 100, 7).unwrap();
        assert_eq!(r.estimate, 1.0);
        let r = feynman_kac_mc(&e, 0.0, 0, 1, 100, 7).unwrap();
        assert_eq!(r.estimate, 0.0);
        let r = feynman_kac_mc(&e, 1.0, 0, 1, 20000, 7).unwrap();
        assert!(r.within((1.0 - (-2.0f64).exp()) / 2.0, 4.0), "{r:?}");
        let again = feynman_kac_mc(&e, 1.0, 0, 1, 20000, 7).unwrap();
        assert_eq!(r, again);
    }
}
