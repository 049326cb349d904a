//! Isoperimetric constants `|dW| / n(W)` on family windows. Boundaries and
//! `n` are always taken in the full family, so edges leaving the window count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{GraphFamily, Window};
use crate::graph::VertexId;
use crate::operator::{assemble, Truncation, DENSE_LIMIT};
use crate::spectra::{default_t_grid, p_growth_bound};

/// Largest window enumerated subset by subset.
pub const EXHAUSTIVE_LIMIT: usize = 22;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheegerMode {
    Exhaustive,
    Sweep,
    Family,
    Annulus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheegerResult {
    pub value: f64,
    /// Window ids, ascending. Reports list the first [`WITNESS_SHOWN`].
    #[serde(serialize_with = "witness_prefix")]
    pub witness: Vec<VertexId>,
    pub witness_size: usize,
    pub boundary: f64,
    pub volume: f64,
    pub mode: CheegerMode,
    pub radius: usize,
    /// Only vertices at depth `>= k_radius` were admissible.
    pub k_radius: usize,
}

pub const WITNESS_SHOWN: usize = 64;

fn witness_prefix<S: serde::Serializer>(w: &[VertexId], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(w.iter().take(WITNESS_SHOWN))
}

impl CheegerResult {
    fn from_mask(w: &Window, mask: &[bool], mode: CheegerMode, k_radius: usize) -> CheegerResult {
        let (boundary, volume) = boundary_measure_mask(w, mask);
        let witness: Vec<VertexId> = (0..mask.len()).filter(|&x| mask[x]).collect();
        CheegerResult {
            value: boundary / volume,
            witness_size: witness.len(),
            witness,
            boundary,
            volume,
            mode,
            radius: w.radius,
            k_radius,
        }
    }
}

/// `(|dW|, n(W))` for `W` given as a membership mask over the window.
pub fn boundary_measure_mask(w: &Window, mask: &[bool]) -> (f64, f64) {
    let (mut boundary, mut volume) = (0.0, 0.0);
    let n = w.full_normalizing_measure();
    for x in (0..w.len()).filter(|&x| mask[x]) {
        volume += n[x];
        boundary += w.outer[x];
        boundary += w.graph.neighbors(x).iter().filter(|t| !mask[t.0]).map(|t| t.1).sum::<f64>();
    }
    (boundary, volume)
}

pub fn boundary_measure(w: &Window, set: &[VertexId]) -> Result<(f64, f64)> {
    let mut mask = vec![false; w.len()];
    for &x in set {
        if x >= w.len() {
            return Err(Error::WindowTooSmall { have: w.radius, need: format!("vertex {x}") });
        }
        mask[x] = true;
    }
    Ok(boundary_measure_mask(w, &mask))
}

/// Exact minimum over all nonempty subsets of the window.
pub fn cheeger_exhaustive_window(w: &Window) -> Result<CheegerResult> {
    let size = w.len();
    if size == 0 {
        return Err(Error::EmptySample);
    }
    if size > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge { what: "exhaustive Cheeger (use sweep or family mode)".into(), size, limit: EXHAUSTIVE_LIMIT });
    }
    let n = w.full_normalizing_measure();
    let adj: Vec<Vec<(usize, f64)>> = (0..size).map(|x| w.graph.neighbors(x).iter().map(|t| (t.0, t.1)).collect()).collect();
    // high bits fix a block, low bits run through a Gray code
    let high = size.min(6);
    let low = size - high;
    let best = (0u32..1 << high)
        .into_par_iter()
        .map(|block| {
            let mut mask: u32 = block << low;
            let (mut bd, mut vol) = (0.0f64, 0.0f64);
            for x in 0..size {
                if mask >> x & 1 == 1 {
                    vol += n[x];
                    bd += n[x] - adj[x].iter().filter(|t| mask >> t.0 & 1 == 1).map(|t| t.1).sum::<f64>();
                }
            }
            let mut best = (f64::INFINITY, 0u32);
            let mut consider = |mask: u32, bd: f64, vol: f64| {
                if mask != 0 {
                    let r = bd / vol;
                    if better(r, mask, best) {
                        best = (r, mask);
                    }
                }
            };
            consider(mask, bd, vol);
            for i in 1u32..1 << low {
                let x = i.trailing_zeros() as usize;
                let inside: f64 = adj[x].iter().filter(|t| mask >> t.0 & 1 == 1).map(|t| t.1).sum();
                if mask >> x & 1 == 1 {
                    bd -= n[x] - 2.0 * inside;
                    vol -= n[x];
                } else {
                    bd += n[x] - 2.0 * inside;
                    vol += n[x];
                }
                mask ^= 1 << x;
                consider(mask, bd, vol);
            }
            best
        })
        .reduce(|| (f64::INFINITY, 0), |a, b| if better(b.0, b.1, a) { b } else { a });
    let mask: Vec<bool> = (0..size).map(|x| best.1 >> x & 1 == 1).collect();
    Ok(CheegerResult::from_mask(w, &mask, CheegerMode::Exhaustive, 0))
}

/// Strictly smaller ratio, ties (up to rounding) broken towards the smaller mask.
fn better(r: f64, mask: u32, best: (f64, u32)) -> bool {
    let tol = 1e-12 * best.0.abs().max(1e-300);
    if best.0.is_infinite() {
        return true;
    }
    r < best.0 - tol || (r <= best.0 + tol && mask < best.1)
}

pub fn cheeger_exhaustive(family: &dyn GraphFamily, radius: usize) -> Result<CheegerResult> {
    let w = family.materialize(radius)?;
    cheeger_exhaustive_window(&w)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheegerSeries {
    pub results: Vec<CheegerResult>,
    pub radii: Vec<usize>,
    pub values: Vec<f64>,
    pub nonincreasing: bool,
    /// Value at the largest radius.
    pub limit: f64,
}

/// `beta(R) = |dB_R| / n(B_R)` for each radius.
pub fn cheeger_family(family: &dyn GraphFamily, radii: &[usize]) -> Result<CheegerSeries> {
    if radii.is_empty() {
        return Err(Error::EmptySample);
    }
    let big = family.materialize(*radii.iter().max().unwrap())?;
    let results: Vec<CheegerResult> = radii
        .iter()
        .map(|&r| {
            let mask: Vec<bool> = big.depth.iter().map(|&d| d <= r).collect();
            let mut res = CheegerResult::from_mask(&big, &mask, CheegerMode::Family, 0);
            res.radius = r;
            res
        })
        .collect();
    let values: Vec<f64> = results.iter().map(|r| r.value).collect();
    let nonincreasing = values.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(CheegerSeries { radii: radii.to_vec(), limit: *values.last().unwrap(), values, nonincreasing, results })
}

/// Upper bound from prefixes of eigenvector orderings of the normalized truncation.
pub fn cheeger_sweep_window(w: &Window) -> Result<CheegerResult> {
    if w.is_empty() {
        return Err(Error::EmptySample);
    }
    let tr = Truncation::from_window(w.clone()).normalized()?;
    let l = assemble(&tr);
    let mut vectors = Vec::new();
    if l.len() <= DENSE_LIMIT {
        let e = l.eigen()?;
        for j in 0..e.values.len().min(2) {
            vectors.push(e.vectors.column(j).iter().copied().collect::<Vec<f64>>());
        }
    } else {
        vectors.push(l.bottom()?.1);
    }
    let n = w.full_normalizing_measure();
    let mut best: Option<CheegerResult> = None;
    for v in &vectors {
        let f: Vec<f64> = v.iter().zip(&l.m).map(|(a, m)| a / m.sqrt()).collect();
        let mut order: Vec<usize> = (0..w.len()).collect();
        order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
        for dir in [false, true] {
            if dir {
                order.reverse();
            }
            let mut mask = vec![false; w.len()];
            let (mut bd, mut vol) = (0.0, 0.0);
            let (mut min_r, mut min_k) = (f64::INFINITY, 0);
            for (k, &x) in order.iter().enumerate() {
                let inside: f64 = w.graph.neighbors(x).iter().filter(|t| mask[t.0]).map(|t| t.1).sum();
                bd += n[x] - 2.0 * inside;
                vol += n[x];
                mask[x] = true;
                if bd / vol < min_r {
                    min_r = bd / vol;
                    min_k = k;
                }
            }
            let mut prefix = vec![false; w.len()];
            order[..=min_k].iter().for_each(|&x| prefix[x] = true);
            let res = CheegerResult::from_mask(w, &prefix, CheegerMode::Sweep, 0);
            if best.as_ref().is_none_or(|b| res.value < b.value) {
                best = Some(res);
            }
        }
    }
    Ok(best.unwrap())
}

pub fn cheeger_sweep(family: &dyn GraphFamily, radius: usize) -> Result<CheegerResult> {
    cheeger_sweep_window(&family.materialize(radius)?)
}

/// Minimization over `W` in `B_R` avoiding `B_{k-1}`: exhaustive when at most
/// 22 vertices remain, otherwise over the annuli `{k <= depth <= R'}`.
pub fn cheeger_at_infinity(family: &dyn GraphFamily, k_radius: usize, radius: usize) -> Result<CheegerResult> {
    let w = family.materialize(radius)?;
    let ext = w.exterior(k_radius)?;
    if ext.len() <= EXHAUSTIVE_LIMIT {
        let mut r = cheeger_exhaustive_window(&ext)?;
        let ids: Vec<usize> = (0..w.len()).filter(|&x| w.depth[x] >= k_radius).collect();
        r.witness = r.witness.iter().map(|&i| ids[i]).collect();
        r.k_radius = k_radius;
        r.radius = radius;
        return Ok(r);
    }
    let mut best: Option<CheegerResult> = None;
    for outer in k_radius..=radius {
        let mask: Vec<bool> = w.depth.iter().map(|&d| d >= k_radius && d <= outer).collect();
        let res = CheegerResult::from_mask(&w, &mask, CheegerMode::Annulus, k_radius);
        if best.as_ref().is_none_or(|b| res.value < b.value) {
            best = Some(res);
        }
    }
    Ok(best.unwrap())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub lambda0: f64,
    pub alpha: f64,
    /// `alpha^2 / 2`
    pub rhs: f64,
    pub pass: bool,
}

/// `lambda_0 >= alpha^2 / 2` on a normalized window (`m = n`, `c = 0`).
pub fn cheeger_inequality_check_window(w: &Window) -> Result<InequalityCheck> {
    let tr = Truncation::from_window(w.clone());
    if !tr.is_normalized() {
        return Err(Error::Precondition("Cheeger inequality needs m = n and c = 0".into()));
    }
    let alpha = cheeger_exhaustive_window(w)?.value;
    let lambda0 = assemble(&tr).bottom()?.0;
    let rhs = alpha * alpha / 2.0;
    Ok(InequalityCheck { lambda0, alpha, rhs, pass: lambda0 >= rhs - 1e-10 })
}

pub fn cheeger_inequality_check(family: &dyn GraphFamily, radius: usize) -> Result<InequalityCheck> {
    cheeger_inequality_check_window(&family.materialize(radius)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DichotomyThresholds {
    /// `alpha_hat` below this counts as zero.
    pub zero: f64,
    /// `lambda_hat_2 - lambda_hat_1` above this counts as a strict gap.
    pub gap: f64,
}

impl Default for DichotomyThresholds {
    fn default() -> Self {
        DichotomyThresholds { zero: 0.02, gap: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub radius: usize,
    pub alpha_hat: f64,
    pub lambda_hat_1: f64,
    pub lambda_hat_2: f64,
    pub alpha_zero: bool,
    pub strict_gap: bool,
    /// `alpha_zero` exactly when there is no strict gap.
    pub consistent: bool,
    pub thresholds: DichotomyThresholds,
}

/// Joint evidence for: `lambda_1 = lambda_2` iff `alpha = 0`, using the largest radius.
pub fn alpha_dichotomy_probe(family: &dyn GraphFamily, radii: &[usize], thresholds: DichotomyThresholds) -> Result<DichotomyReport> {
    let series = cheeger_family(family, radii)?;
    let radius = *radii.iter().max().unwrap();
    let tr = Truncation::from_window(family.materialize(radius)?).normalized()?;
    let l = assemble(&tr);
    let grid = default_t_grid();
    let l1 = p_growth_bound(&tr, &l, 1.0, &grid)?.value;
    let l2 = p_growth_bound(&tr, &l, 2.0, &grid)?.value;
    let alpha_zero = series.limit < thresholds.zero;
    let strict_gap = l2 - l1 > thresholds.gap;
    Ok(DichotomyReport {
        radius,
        alpha_hat: series.limit,
        lambda_hat_1: l1,
        lambda_hat_2: l2,
        alpha_zero,
        strict_gap,
        consistent: alpha_zero != strict_gap,
        thresholds,
    })
}
