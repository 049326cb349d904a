//! Acceptance suite: one PASS/FAIL line per criterion; exits non-zero on any failure.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lpgraph::cheeger::{cheeger_at_infinity, cheeger_exhaustive_window, cheeger_family, cheeger_inequality_check_window};
use lpgraph::generators::{Family, GraphFamily, MeasureChoice, Window};
use lpgraph::graph::{bipartition, normalizing_measure, WeightedGraph};
use lpgraph::growth::{exp_growth_rate, volume_profile};
use lpgraph::metric::{verify_intrinsic_window, MetricChoice};
use lpgraph::operator::{
    assemble, bound_setup, feynman_kac_mc, heat_bound_check, heat_kernel, resolvent_bound_check, resolvent_kernel,
    BoundSetup, KernelMatrix, Truncation,
};
use lpgraph::spectra::{
    bipartite_symmetry_check, bottom_exhaustion, default_t_grid, disk_check, eigenvalues, flip_involution,
    p_growth_bound, residual_norm,
};
use lpgraph::tessellation::{generate_pq, higuchi_bound, regular_curvature, vertex_curvature, Curvature};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(err: lpgraph::Error) -> String {
    err.to_string()
}

/// Standalone finite graph with `m = n`.
fn normalized(g: &WeightedGraph) -> WeightedGraph {
    g.with_measure(normalizing_measure(g)).unwrap().with_killing(vec![0.0; g.vertex_count()]).unwrap()
}

fn whole(f: &Family) -> WeightedGraph {
    f.materialize(usize::MAX / 4).unwrap().graph
}

fn shipped_windows() -> Vec<(String, Window)> {
    use MeasureChoice::{Normalizing as Mn, Unit as M1};
    let fams: Vec<(Family, usize)> = vec![
        (Family::line(), 40),
        (Family::lattice(1, M1), 20),
        (Family::lattice(1, Mn), 20),
        (Family::lattice(2, M1), 10),
        (Family::lattice(2, Mn), 10),
        (Family::lattice(3, M1), 5),
        (Family::regular_tree(3, M1), 8),
        (Family::regular_tree(3, Mn), 8),
        (Family::regular_tree(4, M1), 6),
        (Family::rapid_tree(M1), 6),
        (Family::rapid_tree(Mn), 6),
        (Family::tessellation(4, 4, M1), 6),
        (Family::tessellation(6, 3, Mn), 6),
        (Family::tessellation(7, 3, M1), 5),
        (Family::cycle(9, M1), 9),
        (Family::path(12, Mn), 12),
        (Family::complete(6, M1), 6),
        (Family::single_edge(M1), 1),
        (Family::random(30, 20, 5, M1), 30),
        (Family::lattice(1, M1).with_killing(0.5), 10),
    ];
    fams.into_iter().map(|(f, r)| (format!("{} R={r}", f.label()), f.materialize(r).unwrap())).collect()
}

fn c1_intrinsic() -> Outcome {
    let mut checked = 0;
    for (label, w) in shipped_windows() {
        let r = verify_intrinsic_window(&w, MetricChoice::Intrinsic).map_err(e)?;
        let m = w.graph.measure();
        ensure(r.slack.iter().zip(m).all(|(s, m)| *s >= -1e-12 * m), || format!("{label}: intrinsic slack {}", r.min_slack))?;
        let nat = verify_intrinsic_window(&w, MetricChoice::Natural).map_err(e)?;
        let n = w.full_normalizing_measure();
        let m_ge_n = m.iter().zip(&n).all(|(m, n)| *m >= n - 1e-12 * m);
        ensure(nat.intrinsic == m_ge_n, || format!("{label}: natural metric intrinsic={} but m >= n is {m_ge_n}", nat.intrinsic))?;
        checked += 1;
    }
    Ok(format!("{checked} windows"))
}

struct Setups(Vec<(String, BoundSetup)>);

fn bound_setups() -> Setups {
    let fams = [
        (Family::lattice(1, MeasureChoice::Unit), 8),
        (Family::regular_tree(3, MeasureChoice::Unit), 8),
        (Family::line(), 12),
    ];
    Setups(
        fams.iter()
            .map(|(f, r)| (f.label(), bound_setup(f, *r, *r, MetricChoice::Intrinsic).expect("setup")))
            .collect(),
    )
}

fn c2_heat(setups: &Setups) -> Outcome {
    let grid = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
    let mut pairs = 0;
    for (label, s) in &setups.0 {
        let v = heat_bound_check(s, &grid).map_err(e)?;
        ensure(v.is_empty(), || format!("{label}: {} violations, first {:?}", v.len(), v[0]))?;
        pairs += s.truncation.len().pow(2) * grid.len();
    }
    Ok(format!("{pairs} (x, y, t) triples, 0 violations"))
}

fn c3_resolvent(setups: &Setups) -> Outcome {
    let mut worst: f64 = 0.0;
    for (label, s) in &setups.0 {
        for eps in [0.5, 1.0] {
            let r = resolvent_bound_check(s, eps).map_err(e)?;
            ensure((r.alpha + 4.0 * eps.exp()).abs() < 1e-12, || format!("alpha {}", r.alpha))?;
            ensure(r.violations.is_empty(), || format!("{label} eps={eps}: {} violations", r.violations.len()))?;
            worst = worst.max(r.worst_ratio);
        }
    }
    Ok(format!("0 violations, worst ratio {worst:.3}"))
}

fn symmetric(g: &WeightedGraph) -> Result<(bool, bool), String> {
    let l = assemble(&Truncation::from_graph(normalized(g)));
    let eigs = eigenvalues(&l).map_err(e)?;
    let bip = bipartition(g);
    let sym = bipartite_symmetry_check(&eigs, &l, bip.as_ref());
    // independent multiset comparison against 2 - spectrum
    let mut mirrored: Vec<f64> = eigs.iter().map(|x| 2.0 - x).collect();
    mirrored.sort_by(f64::total_cmp);
    let direct = eigs.iter().zip(&mirrored).all(|(a, b)| (a - b).abs() <= 1e-9);
    if sym.pass != direct {
        return Err(format!("checker says {} but direct comparison says {direct}", sym.pass));
    }
    Ok((sym.pass, disk_check(&eigs, 1e-9)))
}

fn c4_symmetry() -> Outcome {
    let mut count = 0;
    let mut bipartite: Vec<(String, WeightedGraph)> = Vec::new();
    for n in 2..=50 {
        bipartite.push((format!("P_{n}"), whole(&Family::path(n, MeasureChoice::Unit))));
    }
    for n in 2..=25 {
        bipartite.push((format!("C_{}", 2 * n), whole(&Family::cycle(2 * n, MeasureChoice::Unit))));
    }
    for r in [3, 10, 25] {
        bipartite.push((format!("Z window R={r}"), Family::lattice(1, MeasureChoice::Unit).materialize(r).unwrap().graph));
    }
    for r in 1..=5 {
        bipartite.push((format!("tree ball R={r}"), Family::regular_tree(3, MeasureChoice::Unit).materialize(r).unwrap().graph));
    }
    for (label, g) in &bipartite {
        let (sym, disk) = symmetric(g)?;
        ensure(sym && disk, || format!("{label}: symmetry {sym}, disk {disk}"))?;
        count += 1;
    }
    for n in 1..=25 {
        let g = whole(&Family::cycle(2 * n + 1, MeasureChoice::Unit));
        let (sym, disk) = symmetric(&g)?;
        ensure(!sym && disk, || format!("C_{}: symmetry {sym}, disk {disk}", 2 * n + 1))?;
        count += 1;
    }
    for n in 3..=8 {
        let (_, disk) = symmetric(&whole(&Family::complete(n, MeasureChoice::Unit)))?;
        ensure(disk, || format!("K_{n}: disk"))?;
        count += 1;
    }
    Ok(format!("{count} instances"))
}

fn c5_flip() -> Outcome {
    let fixtures = [
        whole(&Family::path(7, MeasureChoice::Unit)),
        whole(&Family::cycle(8, MeasureChoice::Unit)),
        Family::regular_tree(3, MeasureChoice::Unit).materialize(3).unwrap().graph,
        Family::lattice(2, MeasureChoice::Unit).materialize(3).unwrap().graph,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for g in &fixtures {
        let g = normalized(g);
        let bip = bipartition(&g).ok_or("fixture not bipartite")?;
        let l = assemble(&Truncation::from_graph(g.clone()));
        for _ in 0..100 {
            let f: Vec<f64> = (0..g.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lambda: f64 = rng.random_range(0.0..2.0);
            let p = [1.0, 1.5, 2.0, 3.0, f64::INFINITY][rng.random_range(0..5)];
            let lhs = residual_norm(&l, &flip_involution(&f, &bip), 2.0 - lambda, p);
            let rhs = residual_norm(&l, &f, lambda, p);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("max difference {worst:e}"))?;
    Ok(format!("400 triples, max difference {worst:.1e}"))
}

fn c6_exhaustion() -> Outcome {
    let tree = Family::regular_tree(3, MeasureChoice::Normalizing);
    let radii: Vec<usize> = (1..=12).collect();
    let series = bottom_exhaustion(&tree, &radii).map_err(e)?;
    ensure(series.monotone, || format!("lambda0 not nonincreasing: {:?}", series.lambda0))?;
    let oracle = 1.0 - 2.0 * 2f64.sqrt() / 3.0;
    let l12 = *series.lambda0.last().unwrap();
    ensure((l12 - oracle).abs() <= 0.02, || format!("lambda0(12) = {l12}, oracle {oracle}"))?;
    let tr = Truncation::from_window(tree.materialize(12).unwrap());
    let l = assemble(&tr);
    let grid = default_t_grid();
    let h1 = p_growth_bound(&tr, &l, 1.0, &grid).map_err(e)?.value;
    let h2 = p_growth_bound(&tr, &l, 2.0, &grid).map_err(e)?.value;
    ensure(h1 <= 0.01, || format!("tree lambda_hat_1 = {h1}"))?;
    ensure(h2 - h1 >= 0.03, || format!("tree gap {h2} - {h1}"))?;
    let z = Family::lattice(1, MeasureChoice::Normalizing);
    let tz = Truncation::from_window(z.materialize(40).unwrap());
    let lz = assemble(&tz);
    let z0 = lz.bottom().map_err(e)?.0;
    let z1 = p_growth_bound(&tz, &lz, 1.0, &grid).map_err(e)?.value;
    let z2 = p_growth_bound(&tz, &lz, 2.0, &grid).map_err(e)?.value;
    ensure(z0 <= 0.01 && z1 <= 0.01 && z2 <= 0.01, || format!("Z: {z0} {z1} {z2}"))?;
    Ok(format!("tree lambda0(12)={l12:.5} (oracle {oracle:.5}), hat1={h1:.4}, hat2={h2:.4}; Z: {z0:.5} {z1:.5} {z2:.5}"))
}

/// Brute-force Cheeger value straight from the edge list.
fn reenumerate(w: &Window) -> f64 {
    let size = w.len();
    let mut n = w.outer.clone();
    for e in w.graph.edges() {
        n[e.u] += e.b;
        n[e.v] += e.b;
    }
    let mut best = f64::INFINITY;
    for s in 1u32..1 << size {
        let inside = |x: usize| s >> x & 1 == 1;
        let mut bd: f64 = (0..size).filter(|&x| inside(x)).map(|x| w.outer[x]).sum();
        for e in w.graph.edges() {
            if inside(e.u) != inside(e.v) {
                bd += e.b;
            }
        }
        let vol: f64 = (0..size).filter(|&x| inside(x)).map(|x| n[x]).sum();
        best = best.min(bd / vol);
    }
    best
}

fn c7_cheeger() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut windows = Vec::new();
    for seed in 0..10 {
        let size = rng.random_range(10..=22);
        let g = Family::random(size, rng.random_range(0..12), seed, MeasureChoice::Unit).materialize(size).unwrap();
        // drop a few vertices so that edges leave the window
        let keep: Vec<bool> = (0..g.len()).map(|_| rng.random_bool(0.8)).collect();
        let keep: Vec<bool> = keep.iter().enumerate().map(|(i, &k)| k && i < 18).collect();
        let w = g.restrict(&keep).map_err(e)?;
        if w.len() >= 2 {
            windows.push(w);
        }
    }
    ensure(windows.len() == 10, || format!("only {} random windows", windows.len()))?;
    for (i, w) in windows.iter().enumerate() {
        let ex = cheeger_exhaustive_window(w).map_err(e)?.value;
        let brute = reenumerate(w);
        ensure((ex - brute).abs() <= 1e-12 * brute.max(1.0), || format!("window {i}: {ex} vs {brute}"))?;
    }
    let mut instances: Vec<Window> = Vec::new();
    for r in 1..=5 {
        instances.push(Family::lattice(1, MeasureChoice::Normalizing).materialize(r).unwrap());
    }
    for r in 0..=3 {
        instances.push(Family::regular_tree(3, MeasureChoice::Normalizing).materialize(r).unwrap());
    }
    instances.push(Family::lattice(2, MeasureChoice::Normalizing).materialize(2).unwrap());
    for w in &windows {
        instances.push(Truncation::from_window(w.clone()).normalized().map_err(e)?.window);
    }
    for (i, w) in instances.iter().enumerate() {
        let c = cheeger_inequality_check_window(w).map_err(e)?;
        ensure(c.pass, || format!("instance {i}: lambda0 {} < alpha^2/2 = {}", c.lambda0, c.rhs))?;
    }
    let tree = cheeger_family(&Family::regular_tree(3, MeasureChoice::Unit), &[10]).map_err(e)?.limit;
    ensure((tree - 1.0 / 3.0).abs() <= 0.01, || format!("tree ratio {tree}"))?;
    let z = cheeger_family(&Family::lattice(1, MeasureChoice::Unit), &[5, 10, 20]).map_err(e)?;
    ensure(z.nonincreasing && z.limit <= 0.025, || format!("Z ratios {:?}", z.values))?;
    Ok(format!("10 random windows, {} inequality instances, tree {tree:.5}, Z {:.5}", instances.len(), z.limit))
}

fn c8_growth() -> Outcome {
    let line = Family::line();
    let centers: Vec<usize> = (0..500).collect();
    for &x in &centers {
        let p = volume_profile(&line, MetricChoice::D1, x, 12).map_err(e)?;
        for (r, &c) in p.counts.iter().enumerate() {
            ensure(c as f64 <= 2f64.sqrt() * (8.0 * r as f64 + 6.0), || format!("x={x} r={r}: #B = {c}"))?;
        }
    }
    let mu = exp_growth_rate(&Family::regular_tree(3, MeasureChoice::Unit), MetricChoice::Natural, 0, 14).map_err(e)?;
    ensure((mu - 2f64.ln()).abs() <= 0.05, || format!("tree rate {mu}"))?;
    let z2 = volume_profile(&Family::lattice(2, MeasureChoice::Unit), MetricChoice::Natural, 0, 30).map_err(e)?;
    ensure((z2.poly_exponent - 2.0).abs() <= 0.2, || format!("Z^2 exponent {}", z2.poly_exponent))?;
    let rapid = cheeger_at_infinity(&Family::rapid_tree(MeasureChoice::Unit), 6, 8).map_err(e)?;
    ensure(rapid.value >= 0.8, || format!("rapid tree at infinity {}", rapid.value))?;
    Ok(format!(
        "line: 500 centers ok; tree rate {mu:.4}; Z^2 exponent {:.3}; rapid tree K=6 {:.5}",
        z2.poly_exponent, rapid.value
    ))
}

fn c9_curvature() -> Outcome {
    let cases = [(4, 4, 6), (3, 6, 6), (6, 3, 8), (7, 3, 6), (8, 3, 5), (5, 4, 5)];
    let mut negative = 0;
    for (p, q, layers) in cases {
        let t = generate_pq(p, q, layers).map_err(e)?;
        let want = regular_curvature(p, q);
        let ks: Vec<Curvature> = t.interior().map(|x| vertex_curvature(&t, x).unwrap()).collect();
        ensure(!ks.is_empty() && ks.iter().all(|&k| k == want), || format!("({p},{q}) curvature mismatch"))?;
        // oracle straight from the formula
        let direct = Curvature::from_integer(1) - Curvature::new(q as i64, 2) + Curvature::new(q as i64, p as i64);
        ensure(want == direct, || format!("({p},{q}) closed form"))?;
        if ks.iter().all(|k| *k < Curvature::from_integer(0)) {
            negative += 1;
            ensure(ks.iter().all(|&k| k <= higuchi_bound()), || format!("({p},{q}) above -1/1806"))?;
        }
    }
    let tess = Family::tessellation(7, 3, MeasureChoice::Unit);
    let mu = exp_growth_rate(&tess, MetricChoice::Natural, 0, 8).map_err(e)?;
    ensure(mu > 0.2, || format!("(7,3) rate {mu}"))?;
    let norm = Family::tessellation(7, 3, MeasureChoice::Normalizing);
    let l0 = assemble(&Truncation::from_window(norm.materialize(6).unwrap())).bottom().map_err(e)?.0;
    ensure(l0 > 0.01, || format!("(7,3) lambda0 {l0}"))?;
    Ok(format!("6 patches exact, {negative} negative, (7,3) rate {mu:.3}, lambda0 {l0:.4}"))
}

fn max_abs_diff(a: &KernelMatrix, b: &KernelMatrix) -> f64 {
    (&a.k - &b.k).abs().max()
}

fn c10_consistency() -> Outcome {
    use MeasureChoice::{Normalizing as Mn, Unit as M1};
    let fams: Vec<(Family, usize)> = vec![
        (Family::path(6, M1), 6),
        (Family::path(9, Mn), 9),
        (Family::cycle(7, M1), 7),
        (Family::cycle(10, Mn), 10),
        (Family::complete(5, M1), 5),
        (Family::single_edge(Mn), 1),
        (Family::lattice(1, M1), 6),
        (Family::lattice(1, Mn), 10),
        (Family::lattice(1, M1).with_killing(0.3), 6),
        (Family::lattice(2, M1), 3),
        (Family::lattice(2, Mn), 4),
        (Family::regular_tree(3, M1), 3),
        (Family::regular_tree(3, Mn), 4),
        (Family::regular_tree(4, Mn), 3),
        (Family::rapid_tree(M1), 4),
        (Family::line(), 12),
        (Family::random(15, 8, 1, M1), 15),
        (Family::random(20, 5, 2, Mn), 20),
        (Family::tessellation(7, 3, M1), 2),
        (Family::tessellation(4, 4, Mn), 3),
    ];
    let mut worst_l2: f64 = 0.0;
    let mut worst_law: f64 = 0.0;
    let mut trs = Vec::new();
    for (f, r) in &fams {
        let tr = Truncation::from_window(f.materialize(*r).unwrap());
        let l = assemble(&tr);
        let l0 = lpgraph::spectra::bottom_eigenvalue(&l).map_err(e)?;
        for t in [0.25, 1.0, 4.0] {
            let from_norm = -heat_kernel(&l, t).map_err(e)?.norm(2.0, 2.0).map_err(e)?.ln() / t;
            worst_l2 = worst_l2.max((from_norm - l0).abs());
        }
        let (s, t) = (0.3, 0.7);
        let law = max_abs_diff(&heat_kernel(&l, s + t).map_err(e)?, &heat_kernel(&l, s).map_err(e)?.compose(&heat_kernel(&l, t).map_err(e)?));
        let (a, b) = (-1.0, -2.5);
        let ra = resolvent_kernel(&l, a).map_err(e)?;
        let rb = resolvent_kernel(&l, b).map_err(e)?;
        let mut rhs = ra.compose(&rb);
        rhs.k *= a - b;
        let identity = max_abs_diff(&KernelMatrix { k: &ra.k - &rb.k, ..ra.clone() }, &rhs);
        worst_law = worst_law.max(law).max(identity);
        trs.push(tr);
    }
    ensure(worst_l2 <= 1e-8, || format!("kernel-norm vs eigensolver {worst_l2:e}"))?;
    ensure(worst_law < 1e-9, || format!("semigroup/resolvent residual {worst_law:e}"))?;
    let picks = [(0usize, 0usize, 2usize), (2, 1, 3), (8, 0, 1), (11, 0, 4), (15, 4, 6)];
    let mut mc_worst: f64 = 0.0;
    for (i, x, y) in picks {
        let tr = &trs[i];
        let exact = heat_kernel(&assemble(tr), 0.8).map_err(e)?.get(x, y);
        let est = feynman_kac_mc(tr, 0.8, x, y, 100_000, 11).map_err(e)?;
        ensure(est.within(exact, 4.0), || format!("fixture {i}: MC {} +- {} vs {exact}", est.estimate, est.stderr))?;
        mc_worst = mc_worst.max((est.estimate - exact).abs() / est.stderr.max(1e-300));
    }
    // c-domination: killing only lowers the kernel
    let base = Truncation::from_window(Family::lattice(1, M1).materialize(6).unwrap());
    let killed = base.with_killing(vec![0.4; base.len()]).map_err(e)?;
    let p0 = heat_kernel(&assemble(&base), 1.0).map_err(e)?;
    let pc = heat_kernel(&assemble(&killed), 1.0).map_err(e)?;
    ensure(pc.k.iter().zip(p0.k.iter()).all(|(a, b)| *a <= b + 1e-14), || "exact kernels violate domination".into())?;
    for (x, y) in [(0, 0), (0, 1), (1, 4)] {
        let est = feynman_kac_mc(&killed, 1.0, x, y, 100_000, 5).map_err(e)?;
        ensure(est.estimate <= p0.get(x, y) + 4.0 * est.stderr, || format!("MC domination at ({x},{y})"))?;
        ensure(est.within(pc.get(x, y), 4.0), || format!("MC with killing at ({x},{y})"))?;
    }
    Ok(format!("20 fixtures: norm gap {worst_l2:.1e}, identities {worst_law:.1e}; MC worst {mc_worst:.2} se"))
}

fn main() -> ExitCode {
    // (criterion, runtime limit in seconds)
    let mut failures = 0;
    let mut report = |id: usize, name: &str, limit: Option<f64>, run: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if secs > l => Err(format!("took {secs:.1}s, limit {l}s")),
            (o, _) => o,
        };
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.1}s]"),
            Err(why) => {
                failures += 1;
                println!("FAIL {id:>2} {name}: {why} [{secs:.1}s]");
            }
        }
    };
    report(1, "intrinsic metric certificate", Some(10.0), &mut || c1_intrinsic());
    let mut setups = None;
    report(2, "heat kernel pointwise bound", Some(60.0), &mut || {
        let s = bound_setups();
        let out = c2_heat(&s);
        setups = Some(s);
        out
    });
    report(3, "resolvent decay bound", Some(30.0), &mut || c3_resolvent(setups.as_ref().ok_or("no setups")?));
    report(4, "bipartite symmetry and disk containment", None, &mut || c4_symmetry());
    report(5, "flip identity", None, &mut || c5_flip());
    report(6, "exhaustion and p-gap", Some(120.0), &mut || c6_exhaustion());
    report(7, "Cheeger constants", None, &mut || c7_cheeger());
    report(8, "volume growth", None, &mut || c8_growth());
    report(9, "tessellation curvature", None, &mut || c9_curvature());
    report(10, "cross-pipeline consistency", None, &mut || c10_consistency());
    if failures == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} criteria failed");
        ExitCode::FAILURE
    }
}
