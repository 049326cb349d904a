//! Volume growth of balls, exponential and polynomial rate fits, and
//! subexponential-growth evidence.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generators::{GraphFamily, Window};
use crate::graph::VertexId;
use crate::metric::{dijkstra, MetricChoice};
use crate::operator::linear_fit;

/// Windows are never grown beyond this many vertices.
pub const WINDOW_LIMIT: usize = 3_000_000;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthProfile {
    pub center: VertexId,
    pub metric: MetricChoice,
    pub radii: Vec<f64>,
    /// `m(B_r(x))`
    pub volumes: Vec<f64>,
    /// `#B_r(x)`
    pub counts: Vec<usize>,
    /// Slope of `log m(B_r)` against `r` over the top half of the radii.
    pub rate: f64,
    /// Slope of `log m(B_r)` against `log r` over the top half of the radii.
    pub poly_exponent: f64,
    pub window_radius: usize,
}

/// Profile inside a given window; fails unless every ball is provably complete,
/// i.e. every vertex with edges leaving the window is at distance `>= max r`.
pub fn volume_profile_in(w: &Window, metric: MetricChoice, center: VertexId, radii: &[f64]) -> Result<GrowthProfile> {
    if center >= w.len() {
        return Err(Error::WindowTooSmall { have: w.radius, need: format!("vertex {center}") });
    }
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let dist = centered_distances(w, metric, center);
    if let Some(z) = (0..w.len()).find(|&z| w.outer[z] > 0.0 && dist[z] < rmax) {
        return Err(Error::WindowTooSmall {
            have: w.radius,
            need: format!("boundary vertex {z} at distance {} < {rmax}", dist[z]),
        });
    }
    Ok(profile_from_distances(w, metric, center, radii, &dist))
}

fn centered_distances(w: &Window, metric: MetricChoice, center: VertexId) -> Vec<f64> {
    let weights = metric.weights(&w.graph, &w.full_normalizing_measure());
    dijkstra(&w.graph, weights.values(), center, f64::INFINITY, None)
}

fn profile_from_distances(w: &Window, metric: MetricChoice, center: VertexId, radii: &[f64], dist: &[f64]) -> GrowthProfile {
    let m = w.graph.measure();
    let mut order: Vec<usize> = (0..w.len()).filter(|&y| dist[y].is_finite()).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
    let mut radii_sorted = radii.to_vec();
    radii_sorted.sort_by(f64::total_cmp);
    let (mut volumes, mut counts) = (Vec::new(), Vec::new());
    let (mut i, mut vol) = (0, 0.0);
    for &r in &radii_sorted {
        while i < order.len() && dist[order[i]] <= r {
            vol += m[order[i]];
            i += 1;
        }
        volumes.push(vol);
        counts.push(i);
    }
    let (rate, poly_exponent) = fit_rates(&radii_sorted, &volumes);
    GrowthProfile { center, metric, radii: radii_sorted, volumes, counts, rate, poly_exponent, window_radius: w.radius }
}

/// `(exponential rate, polynomial exponent)` over the top half of the radii.
pub fn fit_rates(radii: &[f64], volumes: &[f64]) -> (f64, f64) {
    let top = radii.last().copied().unwrap_or(0.0) / 2.0;
    let pts: Vec<(f64, f64)> = radii.iter().zip(volumes).filter(|(r, _)| **r >= top).map(|(r, v)| (*r, v.ln())).collect();
    let log_pts: Vec<(f64, f64)> = pts.iter().filter(|p| p.0 > 0.0).map(|p| (p.0.ln(), p.1)).collect();
    (linear_fit(&pts).0.max(0.0), linear_fit(&log_pts).0)
}

/// Smallest family window in which all balls `B_r(center)`, `r <= rmax`, are complete.
pub fn window_for(family: &dyn GraphFamily, metric: MetricChoice, center: VertexId, rmax: f64) -> Result<(Window, Vec<f64>)> {
    let mut radius = rmax.ceil() as usize + 1;
    loop {
        let w = family.materialize(radius)?;
        if center < w.len() {
            let dist = centered_distances(&w, metric, center);
            let ok = (0..w.len()).all(|z| w.outer[z] == 0.0 || dist[z] >= rmax);
            if ok {
                return Ok((w, dist));
            }
        }
        if w.len() >= WINDOW_LIMIT || !w.has_boundary() && center >= w.len() {
            return Err(Error::WindowTooSmall {
                have: radius,
                need: format!("balls of radius {rmax} around vertex {center} within {WINDOW_LIMIT} vertices"),
            });
        }
        radius += (radius / 2).max(1);
    }
}

/// Profile over the integer radii `0..=rmax`.
pub fn volume_profile(family: &dyn GraphFamily, metric: MetricChoice, center: VertexId, rmax: usize) -> Result<GrowthProfile> {
    let radii: Vec<f64> = (0..=rmax).map(|r| r as f64).collect();
    volume_profile_radii(family, metric, center, &radii)
}

pub fn volume_profile_radii(family: &dyn GraphFamily, metric: MetricChoice, center: VertexId, radii: &[f64]) -> Result<GrowthProfile> {
    let rmax = radii.iter().copied().fold(0.0, f64::max);
    let (w, dist) = window_for(family, metric, center, rmax)?;
    Ok(profile_from_distances(&w, metric, center, radii, &dist))
}

pub fn exp_growth_rate(family: &dyn GraphFamily, metric: MetricChoice, center: VertexId, rmax: usize) -> Result<f64> {
    Ok(volume_profile(family, metric, center, rmax)?.rate)
}

/// All ids below `size` when `size <= 500`, else 64 distinct ids drawn with `seed`.
pub fn default_centers(size: usize, seed: u64) -> Vec<VertexId> {
    if size <= 500 {
        return (0..size).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = sample(&mut rng, size, 64).into_vec();
    v.sort_unstable();
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthVerdict {
    /// The running maximum stopped increasing before the last quarter of radii.
    SubexponentialEvidence,
    FailsAtEps,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubexpCertificate {
    pub eps: f64,
    /// `C(R') = max_{x, r <= R'} m(B_r(x)) e^{-eps r} / m(x)` for `R' = 0..=R`.
    pub running: Vec<f64>,
    pub c_eps: f64,
    /// Radius at which the maximum is attained.
    pub argmax_radius: usize,
    pub verdict: GrowthVerdict,
    pub centers: usize,
}

pub fn subexp_certificate(
    family: &dyn GraphFamily,
    metric: MetricChoice,
    eps: f64,
    rmax: usize,
    centers: &[VertexId],
) -> Result<SubexpCertificate> {
    if centers.is_empty() {
        return Err(Error::EmptySample);
    }
    let profiles = profiles(family, metric, rmax, centers)?;
    let mut per_r = vec![0.0f64; rmax + 1];
    for (p, mx) in &profiles {
        for (r, v) in p.volumes.iter().enumerate() {
            per_r[r] = per_r[r].max(v * (-eps * r as f64).exp() / mx);
        }
    }
    let mut running = Vec::with_capacity(rmax + 1);
    let (mut best, mut arg) = (0.0f64, 0);
    for (r, &v) in per_r.iter().enumerate() {
        if v > best {
            best = v;
            arg = r;
        }
        running.push(best);
    }
    let verdict = if 4 * arg <= 3 * rmax { GrowthVerdict::SubexponentialEvidence } else { GrowthVerdict::FailsAtEps };
    Ok(SubexpCertificate { eps, running, c_eps: best, argmax_radius: arg, verdict, centers: centers.len() })
}

/// Profile and `m(center)` per center.
fn profiles(family: &dyn GraphFamily, metric: MetricChoice, rmax: usize, centers: &[VertexId]) -> Result<Vec<(GrowthProfile, f64)>> {
    let radii: Vec<f64> = (0..=rmax).map(|r| r as f64).collect();
    // one window large enough for the farthest center
    let far = *centers.iter().max().unwrap();
    let (w, _) = window_for(family, metric, far, rmax as f64)?;
    let mut out = Vec::with_capacity(centers.len());
    for &x in centers {
        let prof = match volume_profile_in(&w, metric, x, &radii) {
            Ok(p) => p,
            Err(_) => volume_profile(family, metric, x, rmax)?,
        };
        out.push((prof, w.graph.measure()[x]));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConsequenceReport {
    pub eps: f64,
    pub c_eps: f64,
    /// Smallest `C` with `m(x) <= C e^{eps d(x,y)} m(y)` over sampled pairs.
    pub measure_ratio_constant: f64,
    /// Smallest `C'` with `#B_r(x) <= C' e^{2 eps r}`.
    pub count_constant: f64,
    /// `C_eps` times the measure-ratio constant.
    pub count_bound: f64,
    pub count_holds: bool,
    /// Largest `sum_y e^{-eps d(x,y)}` over sampled `x`, summed over the window.
    pub exp_sum: f64,
    pub centers: usize,
}

pub fn growth_consequence_check(
    family: &dyn GraphFamily,
    metric: MetricChoice,
    eps: f64,
    rmax: usize,
    centers: &[VertexId],
) -> Result<ConsequenceReport> {
    let cert = subexp_certificate(family, metric, eps, rmax, centers)?;
    let far = *centers.iter().max().unwrap();
    let (w, _) = window_for(family, metric, far, rmax as f64)?;
    let m = w.graph.measure();
    let rows: Vec<(f64, f64, f64)> = centers
        .par_iter()
        .map(|&x| {
            let d = centered_distances(&w, metric, x);
            let mut ratio: f64 = 0.0;
            let mut sum = 0.0;
            for y in 0..w.len() {
                if d[y].is_finite() {
                    ratio = ratio.max(m[x] / m[y] * (-eps * d[y]).exp());
                    sum += (-eps * d[y]).exp();
                }
            }
            let prof = profile_from_distances(&w, metric, x, &(0..=rmax).map(|r| r as f64).collect::<Vec<_>>(), &d);
            let count = prof.counts.iter().enumerate().map(|(r, &c)| c as f64 * (-2.0 * eps * r as f64).exp()).fold(0.0, f64::max);
            (ratio, sum, count)
        })
        .collect();
    let measure_ratio_constant = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let exp_sum = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let count_constant = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let count_bound = cert.c_eps * measure_ratio_constant;
    Ok(ConsequenceReport {
        eps,
        c_eps: cert.c_eps,
        measure_ratio_constant,
        count_constant,
        count_bound,
        count_holds: count_constant <= count_bound * (1.0 + 1e-12),
        exp_sum,
        centers: centers.len(),
    })
}
