//! Spectra of truncations, exhaustion series, `l^p` spectral-bound probes and
//! the bipartite symmetry `lambda <-> 2 - lambda`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{GraphFamily, RadialProfile};
use crate::graph::{bipartition, Bipartition};
use crate::linalg;
use crate::operator::{assemble, heat_kernel, Laplacian, Truncation, DENSE_LIMIT};

/// `{2^k : k = -3..5}`.
pub fn default_t_grid() -> Vec<f64> {
    (-3..=5).map(|k| 2f64.powi(k)).collect()
}

/// Ascending spectrum of `S`.
pub fn eigenvalues(l: &Laplacian) -> Result<Vec<f64>> {
    Ok(l.eigen()?.values.clone())
}

pub fn bottom_eigenvalue(l: &Laplacian) -> Result<f64> {
    Ok(l.bottom()?.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub radius: usize,
    pub normalized_closed: bool,
    pub lambda_hat_1: PBound,
    pub lambda_hat_2: PBound,
    /// `(p, lower bound)` from interpolation.
    pub interpolated: Vec<(f64, f64)>,
    pub disk: bool,
    pub symmetry: Option<SymmetryCheck>,
}

pub fn spectral_report(t: &Truncation, grid: &[f64]) -> Result<SpectralReport> {
    let l = assemble(t);
    let eigs = eigenvalues(&l)?;
    let l1 = p_growth_bound(t, &l, 1.0, grid)?;
    let l2 = p_growth_bound(t, &l, 2.0, grid)?;
    let interpolated = [4.0 / 3.0, 1.5, 3.0, 4.0]
        .iter()
        .map(|&p| (p, interpolation_bound(l1.value, l2.value, p)))
        .collect();
    let symmetry = l.normalized_closed.then(|| bipartite_symmetry_check(&eigs, &l, bipartition(&l.graph).as_ref()));
    Ok(SpectralReport {
        disk: !l.normalized_closed || disk_check(&eigs, 1e-9),
        eigenvalues: eigs,
        radius: t.window.radius,
        normalized_closed: l.normalized_closed,
        lambda_hat_1: l1,
        lambda_hat_2: l2,
        interpolated,
        symmetry,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExhaustionSeries {
    pub radii: Vec<usize>,
    pub lambda0: Vec<f64>,
    /// `lambda_inf` from `lambda0(R) = lambda_inf + a / R^2` on the last two radii.
    pub extrapolated: Option<f64>,
    pub monotone: bool,
}

pub fn bottom_exhaustion(family: &dyn GraphFamily, radii: &[usize]) -> Result<ExhaustionSeries> {
    let lambda0: Vec<f64> = radii
        .par_iter()
        .map(|&r| {
            let t = Truncation::from_window(family.materialize(r)?);
            bottom_eigenvalue(&assemble(&t))
        })
        .collect::<Result<_>>()?;
    let monotone = lambda0.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    let extrapolated = (radii.len() >= 2).then(|| {
        let k = radii.len();
        let (r1, r2) = ((radii[k - 2] as f64).powi(2), (radii[k - 1] as f64).powi(2));
        if r1 == r2 || r1 == 0.0 {
            lambda0[k - 1]
        } else {
            (r2 * lambda0[k - 1] - r1 * lambda0[k - 2]) / (r2 - r1)
        }
    });
    Ok(ExhaustionSeries { radii: radii.to_vec(), lambda0, extrapolated, monotone })
}

/// `lambda_hat_p = max_t -(1/t) log ||T_t||_{p,p}` over the stable part of the grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PBound {
    pub p: f64,
    pub value: f64,
    /// Time at which the maximum is attained.
    pub t_star: f64,
    pub grid: Vec<f64>,
    /// Grid points used: all on closed windows, `t * max (n + c)/m <= R` otherwise.
    pub grid_used: Vec<f64>,
}

/// Times at which a walker started anywhere is unlikely to have reached the
/// window edge from the root region: `t * max((n + c)/m) <= R`.
pub fn stable_grid(t: &Truncation, grid: &[f64]) -> Vec<f64> {
    if !t.window.has_boundary() {
        return grid.to_vec();
    }
    let rate = crate::graph::bounded_geometry_ratio(&t.graph().with_killing(
        t.graph().killing().iter().zip(t.boundary_killing()).map(|(a, b)| a + b).collect(),
    ).expect("killing stays nonnegative"));
    let r = t.window.radius as f64;
    let used: Vec<f64> = grid.iter().copied().filter(|&s| s * rate <= r).collect();
    if used.is_empty() {
        // fall back to the shortest time
        grid.iter().copied().min_by(f64::total_cmp).into_iter().collect()
    } else {
        used
    }
}

/// `||T_t||_{p,p}` for `p` in `{1, 2, inf}`.
pub fn heat_norm(l: &Laplacian, t: f64, p: f64) -> Result<f64> {
    if p == 2.0 {
        if l.len() <= DENSE_LIMIT {
            return heat_kernel(l, t)?.norm(2.0, 2.0);
        }
        return Ok((-t * l.bottom()?.0).exp());
    }
    if p == 1.0 || p.is_infinite() {
        // symmetric kernel: sup_y sum_x p_t(x,y) m(x) = sup_y (T_t 1)(y)
        let ones = vec![1.0; l.len()];
        return Ok(l.heat_apply(t, &ones)?.into_iter().fold(0.0, f64::max));
    }
    Err(Error::Precondition(format!("p in {{1, 2, inf}} (got {p}); use interpolation_bound")))
}

pub fn p_growth_bound(tr: &Truncation, l: &Laplacian, p: f64, grid: &[f64]) -> Result<PBound> {
    let used = stable_grid(tr, grid);
    let mut best = (f64::NEG_INFINITY, f64::NAN);
    for &t in &used {
        let v = -heat_norm(l, t, p)?.ln() / t;
        if v > best.0 {
            best = (v, t);
        }
    }
    Ok(PBound { p, value: best.0, t_star: best.1, grid: grid.to_vec(), grid_used: used })
}

/// `(2/p - 1) l1 + (2 - 2/p) l2` on `[1, 2]`, mirrored through `p / (p - 1)`.
pub fn interpolation_bound(l1: f64, l2: f64, p: f64) -> f64 {
    let p = if p > 2.0 { if p.is_infinite() { 1.0 } else { p / (p - 1.0) } } else { p };
    (2.0 / p - 1.0) * l1 + (2.0 - 2.0 / p) * l2
}

/// All eigenvalues in `[0, 2]`.
pub fn disk_check(eigs: &[f64], tol: f64) -> bool {
    eigs.iter().all(|&l| (-tol..=2.0 + tol).contains(&l))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymmetryCheck {
    pub pass: bool,
    /// Index pairs `(i, j)` into the sorted spectrum with `lambda_i + lambda_j = 2`.
    pub pairing: Vec<(usize, usize)>,
    pub max_error: f64,
    pub reason: Option<String>,
}

pub fn bipartite_symmetry_check(eigs: &[f64], l: &Laplacian, bip: Option<&Bipartition>) -> SymmetryCheck {
    let n = eigs.len();
    let pairing: Vec<(usize, usize)> = (0..n.div_ceil(2)).map(|i| (i, n - 1 - i)).collect();
    let max_error = pairing.iter().map(|&(i, j)| (eigs[i] + eigs[j] - 2.0).abs()).fold(0.0, f64::max);
    let reason = if bip.is_none() {
        Some("not bipartite".to_string())
    } else if !l.normalized_closed {
        Some("requires m = n, c = 0 and no boundary".to_string())
    } else if max_error > 1e-9 {
        Some(format!("spectrum not symmetric about 1 (error {max_error:.3e})"))
    } else {
        None
    };
    SymmetryCheck { pass: reason.is_none(), pairing, max_error, reason }
}

/// `f` on part 1, `-f` on part 2.
pub fn flip_involution(f: &[f64], bip: &Bipartition) -> Vec<f64> {
    let mut out = f.to_vec();
    for &x in &bip.part2 {
        out[x] = -out[x];
    }
    out
}

/// `(sum |f|^p m)^{1/p}`, or `max |f|` for `p = inf`.
pub fn lp_norm(f: &[f64], m: &[f64], p: f64) -> f64 {
    if p.is_infinite() {
        f.iter().fold(0.0, |a, v| a.max(v.abs()))
    } else {
        f.iter().zip(m).map(|(v, w)| v.abs().powf(p) * w).sum::<f64>().powf(1.0 / p)
    }
}

/// `||(L - lambda) f||_p`.
pub fn residual_norm(l: &Laplacian, f: &[f64], lambda: f64, p: f64) -> f64 {
    let af = l.apply(f);
    let r: Vec<f64> = af.iter().zip(f).map(|(a, v)| a - lambda * v).collect();
    lp_norm(&r, &l.m, p)
}

/// Windows of spherically symmetric trees above this size switch to the radial reduction.
const RADIAL_SWITCH: usize = DENSE_LIMIT;

/// Bottom Dirichlet eigenvalue on `B_R \ B_{K-1}` (vertices of depth `>= K`).
pub fn exterior_bottom(family: &dyn GraphFamily, k: usize, r: usize) -> Result<f64> {
    if k > r {
        return Err(Error::WindowTooSmall { have: r, need: format!("depth >= {k}") });
    }
    if let Some(profile) = family.radial_profile(r) {
        let size: f64 = (0..=r).map(|j| profile.layer_size(j)).sum();
        if size > RADIAL_SWITCH as f64 {
            return Ok(radial_bottom(&profile, k, r));
        }
    }
    let w = family.materialize(r)?.exterior(k)?;
    bottom_eigenvalue(&assemble(&Truncation::from_window(w)))
}

/// Exact bottom eigenvalue of the annulus `k <= depth <= r` of a spherically
/// symmetric tree. The annulus is a union of isomorphic subtrees whose ground
/// states are radial, so the problem reduces to a weighted path.
pub fn radial_bottom(p: &RadialProfile, k: usize, r: usize) -> f64 {
    let len = r - k + 1;
    let mut count = vec![1.0f64; len];
    for j in 1..len {
        count[j] = count[j - 1] * p.children[k + j - 1] as f64;
    }
    let mu: Vec<f64> = (0..len).map(|j| count[j] * p.measure_at(k + j)).collect();
    let s = DMatrix::from_fn(len, len, |i, j| {
        if i == j {
            (p.degree(k + i) as f64 + p.killing) / p.measure_at(k + i)
        } else if j == i + 1 {
            -count[j] / (mu[i] * mu[j]).sqrt()
        } else if i == j + 1 {
            -count[i] / (mu[i] * mu[j]).sqrt()
        } else {
            0.0
        }
    });
    linalg::sym_eigenvalues(&s)[0]
}
