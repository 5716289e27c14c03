//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- 3 9`.

mod common;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use confcap::capacity::Exhaustion;
use confcap::capacity::{
    compact_capacity_bounded, max_combine, nested_domain_monotonicity_check, point_capacity_decay,
};
use confcap::ferrand::{
    classify, estimate_mu, mu_continuity_probe, triangle_check, PathContinuum, SearchConfig, Verdict,
};
use confcap::mesh::dist;
use confcap::oracle::convergence_order;
use confcap::{
    build_mesh, energy_gradient, solve_condenser, total_energy, CapacitySolver, Condenser, ConformalFactor,
    ConformalStructure, Domain, DomainSpec, NodeSet, ScalarField, SimplicialMesh, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn ball(center: &[f64], radius: f64) -> Domain {
    Domain::Ball {
        center: center.to_vec(),
        radius,
    }
}

fn annulus(dim: usize, inner: f64, outer: f64) -> Domain {
    Domain::Annulus {
        center: vec![0.0; dim],
        inner,
        outer,
    }
}

fn mesh(spec: DomainSpec) -> Result<SimplicialMesh, String> {
    build_mesh(&spec).map_err(|e| e.to_string())
}

fn near(mesh: &SimplicialMesh, center: &[f64], r: f64) -> NodeSet {
    mesh.select(|p| dist(p, center) <= r)
}

/// Inner and outer boundary nodes of an annulus mesh centered at the origin.
fn ring_plates(mesh: &SimplicialMesh, inner: f64, outer: f64) -> Condenser {
    let origin = vec![0.0; mesh.dim()];
    let b = mesh.boundary_nodes();
    let p0: NodeSet = b
        .iter()
        .filter(|&i| dist(mesh.vertex(i), &origin) <= 0.5 * (inner + outer))
        .collect();
    let p1: NodeSet = b.iter().filter(|&i| !p0.contains(i)).collect();
    Condenser::new(p0, p1).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_ring_2d() -> Outcome {
    let start = Instant::now();
    let reference = common::ring_capacity_quadrature(2, 0.25, 1.0);
    let config = SolverConfig::default();
    let mut samples = Vec::new();
    let mut at_1e4 = None;
    for h in [0.1, 0.05, 0.025, 0.0125] {
        let m = mesh(DomainSpec::new(annulus(2, 0.25, 1.0), h))?;
        let r = solve_condenser(&m, &ConformalStructure::flat(), &ring_plates(&m, 0.25, 1.0), &config)
            .map_err(|e| e.to_string())?;
        if !r.converged() {
            return Ok((false, format!("solver did not converge at h = {h}")));
        }
        if h == 0.025 {
            at_1e4 = Some((m.num_simplices(), r.value));
        }
        samples.push((h, r.value));
    }
    let (elements, value) = at_1e4.unwrap();
    let order = convergence_order(&samples, reference).map_err(|e| e.to_string())?.order;
    let secs = start.elapsed().as_secs_f64();
    let err = rel(value, reference);
    Ok((
        err <= 0.01 && order >= 0.9 && secs <= 60.0,
        format!("{elements} elements: {value:.6} vs {reference:.6} (rel err {err:.2e}); order {order:.2}; {secs:.1} s"),
    ))
}

fn c2_ring_3d() -> Outcome {
    let start = Instant::now();
    let reference = common::ring_capacity_quadrature(3, 0.25, 1.0);
    let m = mesh(DomainSpec::new(annulus(3, 0.25, 1.0), 0.1))?;
    let r = solve_condenser(
        &m,
        &ConformalStructure::flat(),
        &ring_plates(&m, 0.25, 1.0),
        &SolverConfig::default(),
    )
    .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let err = rel(r.value, reference);
    Ok((
        r.converged() && err <= 0.03 && secs <= 600.0,
        format!(
            "{} elements: {:.5} vs {reference:.5} (rel err {err:.2e}); {secs:.1} s",
            m.num_simplices(),
            r.value
        ),
    ))
}

fn c3_conformal_invariance() -> Outcome {
    let config = SolverConfig::default();
    let m2 = mesh(DomainSpec::new(annulus(2, 0.25, 1.0), 0.05))?;
    let m3 = mesh(DomainSpec::new(annulus(3, 0.25, 1.0), 0.2))?;
    let flat = ConformalStructure::flat();
    let solve = |m: &SimplicialMesh, s: &ConformalStructure| {
        solve_condenser(m, s, &ring_plates(m, 0.25, 1.0), &config).map_err(|e| e.to_string())
    };
    let base = [solve(&m2, &flat)?.value, solve(&m3, &flat)?.value];
    let mut worst: f64 = 0.0;
    for seed in 1..=10u64 {
        let s = ConformalStructure::from_factor(&ConformalFactor::RandomSmooth { seed, amplitude: 1.5 });
        let (m, b) = if seed % 2 == 1 { (&m2, base[0]) } else { (&m3, base[1]) };
        worst = worst.max(rel(solve(m, &s)?.value, b));
    }
    Ok((
        worst <= 1e-10,
        format!("10 factors, worst relative deviation {worst:.2e}"),
    ))
}

/// Two disjoint interior balls with random centers and radii.
fn random_plates(rng: &mut ChaCha8Rng, m: &SimplicialMesh, lo: f64, hi: f64) -> Condenser {
    let dim = m.dim();
    loop {
        let mut pick = || -> (Vec<f64>, f64) {
            (
                (0..dim).map(|_| rng.gen_range(lo..hi)).collect(),
                rng.gen_range(0.08..0.2),
            )
        };
        let (c0, r0) = pick();
        let (c1, r1) = pick();
        if dist(&c0, &c1) < r0 + r1 + 0.1 {
            continue;
        }
        let (p0, p1) = (near(m, &c0, r0), near(m, &c1, r1));
        if !p0.is_empty() && !p1.is_empty() {
            return Condenser::new(p0, p1).unwrap();
        }
    }
}

fn c4_symmetry() -> Outcome {
    let config = SolverConfig::default();
    let m2 = mesh(DomainSpec::new(ball(&[0.0, 0.0], 1.0), 0.05))?;
    let m3 = mesh(DomainSpec::new(
        Domain::Box {
            min: vec![0.0; 3],
            max: vec![1.0; 3],
        },
        0.1,
    ))?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let (m, structure) = if i < 14 {
            (&m2, ConformalStructure::flat())
        } else {
            (
                &m3,
                ConformalStructure::from_factor(&ConformalFactor::RandomSmooth {
                    seed: i,
                    amplitude: 0.5,
                }),
            )
        };
        let c = if i < 14 {
            random_plates(&mut rng, m, -0.6, 0.6)
        } else {
            random_plates(&mut rng, m, 0.2, 0.8)
        };
        let mut solver = CapacitySolver::new(m, &structure, &config).map_err(|e| e.to_string())?;
        let a = solver.solve(&c, None).map_err(|e| e.to_string())?.value;
        let b = solver.solve(&c.swapped(), None).map_err(|e| e.to_string())?.value;
        worst = worst.max((a - b).abs());
    }
    let bound = 2.0 * config.value_tolerance;
    Ok((
        worst <= bound,
        format!("20 condensers, worst |swap difference| {worst:.2e} (bound {bound:.0e})"),
    ))
}

fn c5_domain_monotonicity() -> Outcome {
    let config = SolverConfig::default();
    let flat = ConformalStructure::flat();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let outer_meshes = [
        mesh(DomainSpec::new(annulus(2, 0.25, 2.0), 0.08).with_shells(&[1.0]))?,
        mesh(DomainSpec::new(ball(&[0.0, 0.0], 1.0), 0.05))?,
        mesh(DomainSpec::new(
            Domain::BoxMinusBall {
                min: vec![-1.0, -1.0],
                max: vec![1.0, 1.0],
                center: vec![0.0, 0.0],
                radius: 0.3,
            },
            0.05,
        ))?,
        mesh(DomainSpec::new(
            Domain::Box {
                min: vec![0.0; 3],
                max: vec![1.0; 3],
            },
            0.125,
        ))?,
    ];
    let mut lines = Vec::new();
    let mut all = true;

    // The annulus 0.25 < |x| < 1 inside 0.25 < |x| < 2, with the inner circle
    // against a small ball.
    {
        let m = &outer_meshes[0];
        let (n, _) = m.restrict_to_ball(&[0.0, 0.0], 1.0).map_err(|e| e.to_string())?;
        let inner: NodeSet = m
            .boundary_nodes()
            .iter()
            .filter(|&i| dist(m.vertex(i), &[0.0, 0.0]) < 0.5)
            .collect();
        let c = Condenser::new(inner, near(m, &[0.6, 0.0], 0.15)).unwrap();
        let chk = nested_domain_monotonicity_check(&n, m, &flat, &c, &config).map_err(|e| e.to_string())?;
        all &= chk.holds;
        lines.push(chk.cap_outer_domain - chk.cap_inner_domain);
    }
    let mut pairs = 1;
    while pairs < 10 {
        let m = if pairs >= 7 {
            &outer_meshes[3]
        } else {
            &outer_meshes[pairs % 3]
        };
        let (lo, hi) = if m.dim() == 3 { (0.25, 0.75) } else { (-0.7, 0.7) };
        let c = random_plates(&mut rng, m, lo, hi);
        let hull: Vec<usize> = c.plate0.iter().chain(c.plate1.iter()).collect();
        let mid: Vec<f64> = (0..m.dim())
            .map(|d| hull.iter().map(|&i| m.vertex(i)[d]).sum::<f64>() / hull.len() as f64)
            .collect();
        let reach = hull.iter().map(|&i| dist(m.vertex(i), &mid)).fold(0.0, f64::max);
        let radius = reach + rng.gen_range(0.1..0.4);
        let Ok((n, _)) = m.restrict(|p| dist(p, &mid) <= radius, None) else {
            continue;
        };
        let Ok(chk) = nested_domain_monotonicity_check(&n, m, &flat, &c, &config) else {
            continue;
        };
        all &= chk.holds;
        lines.push(chk.cap_outer_domain - chk.cap_inner_domain);
        pairs += 1;
    }
    let worst = lines.iter().copied().fold(f64::INFINITY, f64::min);

    // N = M gives the same value to round-off.
    let m = &outer_meshes[1];
    let c = random_plates(&mut rng, m, -0.6, 0.6);
    let (same, _) = m.restrict(|_| true, None).map_err(|e| e.to_string())?;
    let chk = nested_domain_monotonicity_check(&same, m, &flat, &c, &config).map_err(|e| e.to_string())?;
    let eq = rel(chk.cap_inner_domain, chk.cap_outer_domain);
    Ok((
        all && eq <= 1e-12,
        format!("10 nested pairs, min Cap_M - Cap_N {worst:.3e}; N = M relative difference {eq:.1e}"),
    ))
}

fn c6_subadditivity() -> Outcome {
    let config = SolverConfig::default();
    let flat = ConformalStructure::flat();
    let m = mesh(DomainSpec::new(ball(&[0.0, 0.0], 1.0), 0.04))?;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst_ratio, mut worst_cert): (f64, f64) = (0.0, f64::NEG_INFINITY);
    let mut all = true;
    for _ in 0..20 {
        let mut compact = || loop {
            let c: Vec<f64> = (0..2).map(|_| rng.gen_range(-0.6..0.6)).collect();
            let k = if rng.gen_bool(0.5) {
                near(&m, &c, rng.gen_range(0.03..0.2))
            } else {
                let t = rng.gen_range(0.0..std::f64::consts::PI);
                let l = rng.gen_range(0.1..0.4);
                let b = [c[0] + l * t.cos(), c[1] + l * t.sin()];
                match PathContinuum::between_points(&m, &c, &b) {
                    Ok(p) => p.node_set(),
                    Err(_) => continue,
                }
            };
            if !k.is_empty() && !k.intersects(m.boundary_nodes()) {
                return k;
            }
        };
        let (k1, k2) = (compact(), compact());
        let solve = |k: &NodeSet| compact_capacity_bounded(&m, &flat, k, &config).map_err(|e| e.to_string());
        let (r1, r2, r12) = (solve(&k1)?, solve(&k2)?, solve(&k1.union(&k2))?);
        let sum = r1.value + r2.value;
        let witness = max_combine(&r1.field, &r2.field).map_err(|e| e.to_string())?;
        let e_w = total_energy(&m, &witness, &flat, 0.0).map_err(|e| e.to_string())?.total;
        // The max field is admissible for the union, so it bounds its capacity.
        let certified = r12.value <= e_w + config.value_tolerance && e_w <= 1.05 * sum;
        all &= r12.value <= 1.05 * sum && certified;
        worst_ratio = worst_ratio.max(r12.value / sum);
        worst_cert = worst_cert.max(e_w / sum);
    }
    Ok((
        all,
        format!(
            "20 pairs, max cap(K1 u K2)/(cap K1 + cap K2) {worst_ratio:.4}, max witness energy ratio {worst_cert:.4}"
        ),
    ))
}

fn c7_point_decay() -> Outcome {
    let config = SolverConfig::default();
    let radii = [0.25, 0.125, 0.0625, 0.03125];
    let mut parts = Vec::new();
    let mut all = true;
    for (dim, h) in [(2, 0.15), (3, 0.35)] {
        let m = mesh(
            DomainSpec::new(ball(&vec![0.0; dim], 1.0), h)
                .radial(Some(0.01))
                .with_shells(&radii),
        )?;
        let origin = vec![0.0; dim];
        let rep = point_capacity_decay(&m, &ConformalStructure::flat(), &origin, &radii, 1.0, &config)
            .map_err(|e| e.to_string())?;
        let target = -(dim as f64 - 1.0);
        let off = ((rep.exponent - target) / target).abs();
        let converged = rep.samples.iter().all(|s| s.converged);
        all &= rep.strictly_decreasing && off <= 0.1 && converged;
        parts.push(format!(
            "n={dim}: exponent {:.4} (target {target}), decreasing {}",
            rep.exponent, rep.strictly_decreasing
        ));
    }
    Ok((all, parts.join("; ")))
}

fn interior_vertices(m: &SimplicialMesh) -> Vec<usize> {
    (0..m.num_vertices())
        .filter(|&i| !m.boundary_nodes().contains(i))
        .collect()
}

fn c8_pseudometric() -> Outcome {
    let config = SolverConfig::default();
    let flat = ConformalStructure::flat();
    let m = mesh(DomainSpec::new(annulus(2, 0.25, 1.0), 0.07))?;
    let interior = interior_vertices(&m);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let search = SearchConfig { budget: 6, seed: 8 };
    let (mut finite, mut holds, mut sym_worst) = (true, 0, 0.0f64);
    let mut slack = f64::INFINITY;
    for t in 0..50 {
        let mut pick = || interior[rng.gen_range(0..interior.len())];
        let (x, y, z) = (pick(), pick(), pick());
        let chk = triangle_check(&m, &flat, (x, y, z), &config, &search).map_err(|e| e.to_string())?;
        for mu in [&chk.mu_xy, &chk.mu_yz, &chk.mu_xz] {
            finite &= mu.value.is_finite() && mu.value >= 0.0;
        }
        holds += chk.holds as usize;
        slack = slack.min(chk.mu_xy.value + chk.mu_yz.value - chk.mu_xz.value);
        if t < 10 {
            let back = estimate_mu(&m, &flat, y, x, &config, &search).map_err(|e| e.to_string())?;
            sym_worst = sym_worst.max((back.value - chk.mu_xy.value).abs());
        }
    }
    let sym_ok = sym_worst <= 2.0 * config.value_tolerance;
    Ok((
        finite && sym_ok && holds == 50,
        format!("finite {finite}; symmetry worst {sym_worst:.1e}; triangle holds {holds}/50 (min slack {slack:.3e})"),
    ))
}

fn c9_classification() -> Outcome {
    let config = SolverConfig::default();
    let flat = ConformalStructure::flat();
    let run = |dim: usize, excised: bool, h: f64, refine: bool| -> Result<(Verdict, f64, f64), String> {
        let stages = 7;
        let outer = 4f64.powi(stages);
        let domain = if excised {
            annulus(dim, 0.25, outer)
        } else {
            ball(&vec![0.0; dim], outer)
        };
        let radii: Vec<f64> = (1..=stages).map(|i| 4f64.powi(i)).collect();
        let mut shells = vec![1.0, 2.0];
        shells.extend(&radii[..radii.len() - 1]);
        let mut m = mesh(DomainSpec::new(domain, h).radial(None).with_shells(&shells))?;
        if refine {
            m = m.refine().map_err(|e| e.to_string())?;
        }
        let (mut a, mut b) = (vec![0.0; dim], vec![0.0; dim]);
        a[0] = 1.0;
        b[0] = 2.0;
        let probe = PathContinuum::between_points(&m, &a, &b).map_err(|e| e.to_string())?;
        let family = Exhaustion::new(m, vec![0.0; dim], radii).map_err(|e| e.to_string())?;
        let rep = classify(&family, &flat, &probe, &config).map_err(|e| e.to_string())?;
        if !rep.converged {
            return Err(format!("n={dim} excised={excised}: a stage did not converge"));
        }
        Ok((rep.verdict, rep.floor_estimate, rep.capacity_sequence[0].1))
    };
    let mut parts = Vec::new();
    let mut all = true;
    for (dim, h) in [(2, 0.2), (3, 0.35)] {
        let (v, floor, first) = run(dim, false, h, false)?;
        all &= v == Verdict::ClassIEvidence;
        parts.push(format!("R{dim}: {v:?} (limit {floor:.3} of {first:.3})"));
        let (v, floor, _) = run(dim, true, h, false)?;
        let (v_fine, floor_fine, _) = run(dim, true, h, true)?;
        let stable = floor >= 0.5 * floor_fine;
        all &= v == Verdict::ClassIIEvidence && v_fine == Verdict::ClassIIEvidence && stable;
        parts.push(format!(
            "R{dim}-ball: {v:?} (floor {floor:.3}, refined {floor_fine:.3} {v_fine:?})"
        ));
    }
    Ok((all, parts.join("; ")))
}

fn c10_diagonal_continuity() -> Outcome {
    let config = SolverConfig::default();
    let m = mesh(DomainSpec::new(ball(&[0.0, 0.0], 1.0), 0.025))?;
    let search = SearchConfig { budget: 4, seed: 10 };
    let mut parts = Vec::new();
    let mut all = true;
    for base in [[0.0, 0.0], [0.3, 0.2], [-0.2, -0.35]] {
        let z = m.nearest_vertex(&base);
        let probe = mu_continuity_probe(
            &m,
            &ConformalStructure::flat(),
            z,
            &[0.32, 0.16, 0.08],
            2,
            &config,
            &search,
        )
        .map_err(|e| e.to_string())?;
        all &= probe.strictly_decreasing;
        let sup: Vec<String> = probe.samples.iter().map(|s| format!("{:.3}", s.sup_mu)).collect();
        parts.push(format!("({}, {}): [{}]", base[0], base[1], sup.join(", ")));
    }
    Ok((all, format!("sup mu over r = 0.32, 0.16, 0.08: {}", parts.join(" "))))
}

fn c11_gradient() -> Outcome {
    let m2 = mesh(DomainSpec::new(ball(&[0.0, 0.0], 1.0), 0.2))?;
    let m3 = mesh(DomainSpec::new(
        Domain::Box {
            min: vec![0.0; 3],
            max: vec![1.0; 3],
        },
        0.34,
    ))?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..50u64 {
        let m = if i % 2 == 0 { &m2 } else { &m3 };
        let structure = if i % 3 == 0 {
            ConformalStructure::flat()
        } else {
            ConformalStructure::from_factor(&ConformalFactor::RandomSmooth {
                seed: i,
                amplitude: 1.0,
            })
        };
        let nv = m.num_vertices();
        let u: Vec<f64> = (0..nv).map(|_| rng.gen_range(0.0..1.0)).collect();
        let v: Vec<f64> = (0..nv).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let eps = 10f64.powf(rng.gen_range(-4.0..-1.0));
        let all: NodeSet = (0..nv).collect();
        let field = ScalarField::new(m, u.clone()).unwrap();
        let g = energy_gradient(m, &field, &structure, eps, &all).map_err(|e| e.to_string())?;
        let analytic: f64 = g.iter().zip(&v).map(|(a, b)| a * b).sum();
        let t = 1e-6;
        let energy = |s: f64| {
            let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + s * b).collect();
            total_energy(m, &ScalarField::new(m, w).unwrap(), &structure, eps)
                .unwrap()
                .total
        };
        let fd = (energy(t) - energy(-t)) / (2.0 * t);
        worst = worst.max(rel(fd, analytic));
    }
    Ok((worst <= 1e-5, format!("50 triples, worst relative error {worst:.2e}")))
}

fn capcli_outputs(configs: &[PathBuf], out: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    for cfg in configs {
        let kind = cfg.file_stem().unwrap().to_string_lossy().into_owned();
        let status = Command::new(env!("CARGO_BIN_EXE_capcli"))
            .arg(&kind)
            .arg("--config")
            .arg(cfg)
            .arg("--out")
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("capcli {kind} exited with {}", status.status));
        }
    }
    let mut files = BTreeMap::new();
    for entry in std::fs::read_dir(out).map_err(|e| e.to_string())? {
        let p = entry.map_err(|e| e.to_string())?.path();
        files.insert(
            p.file_name().unwrap().to_string_lossy().into_owned(),
            std::fs::read(&p).map_err(|e| e.to_string())?,
        );
    }
    Ok(files)
}

fn c12_determinism() -> Outcome {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut configs: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| format!("{}: {e}", dir.display()))?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    configs.sort();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = capcli_outputs(&configs, a.path())?;
    let second = capcli_outputs(&configs, b.path())?;
    let differing: Vec<&String> = first.keys().filter(|k| first.get(*k) != second.get(*k)).collect();
    Ok((
        !first.is_empty() && first.len() == second.len() && differing.is_empty(),
        format!(
            "{} configs, {} output files, {} differ",
            configs.len(),
            first.len(),
            differing.len()
        ),
    ))
}

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "radial condenser n=2", c1_ring_2d),
        (2, "radial condenser n=3", c2_ring_3d),
        (3, "conformal invariance", c3_conformal_invariance),
        (4, "plate symmetry", c4_symmetry),
        (5, "domain monotonicity", c5_domain_monotonicity),
        (6, "subadditivity", c6_subadditivity),
        (7, "point capacity decay", c7_point_decay),
        (8, "pseudometric axioms", c8_pseudometric),
        (9, "class dichotomy", c9_classification),
        (10, "diagonal continuity", c10_diagonal_continuity),
        (11, "gradient correctness", c11_gradient),
        (12, "determinism", c12_determinism),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let (passed, detail) = match std::panic::catch_unwind(check) {
            Ok(Ok(r)) => r,
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        failed += !passed as usize;
        println!(
            "{} criterion {id:>2} {name}: {detail} [{:.1} s]",
            if passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
