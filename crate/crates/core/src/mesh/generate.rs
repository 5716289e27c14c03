//! Structured generators for balls, annuli, boxes and box-minus-ball domains.
//!
//! Everything is built from one combinatorial object, the Kuhn (Freudenthal)
//! triangulation of an integer grid, which is conforming by construction.
//! Curved domains map concentric cube shells `|x|_inf = k` onto spheres.
//! `Grading::Radial` instead extrudes the triangulated surface of a small
//! cube through geometrically spaced spherical layers (log-polar meshes),
//! which keeps elements shape-regular over many decades of radius.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{dist, SimplicialMesh, Sphere};
use crate::error::{CapError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    Box {
        min: Vec<f64>,
        max: Vec<f64>,
    },
    BoxMinusBall {
        min: Vec<f64>,
        max: Vec<f64>,
        center: Vec<f64>,
        radius: f64,
    },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } | Domain::Annulus { center, .. } => center.len(),
            Domain::Box { min, .. } | Domain::BoxMinusBall { min, .. } => min.len(),
        }
    }

    /// Closed-domain membership with a relative slack of `1e-9`.
    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        let in_box = |min: &[f64], max: &[f64]| {
            p.iter()
                .zip(min.iter().zip(max))
                .all(|(x, (a, b))| *x >= a - 1e-9 * (b - a) && *x <= b + 1e-9 * (b - a))
        };
        match self {
            Domain::Ball { center, radius } => dist(p, center) <= radius * (1.0 + 1e-9),
            Domain::Annulus { center, inner, outer } => {
                let r = dist(p, center);
                r >= inner * (1.0 - 1e-9) && r <= outer * (1.0 + 1e-9)
            }
            Domain::Box { min, max } => in_box(min, max),
            Domain::BoxMinusBall {
                min,
                max,
                center,
                radius,
            } => in_box(min, max) && dist(p, center) >= radius * (1.0 - 1e-9),
        }
    }

    /// Exact measure of the domain, for convergence checks.
    pub fn exact_volume(&self) -> f64 {
        let ball = |n: usize, r: f64| match n {
            2 => PI * r * r,
            _ => 4.0 / 3.0 * PI * r.powi(3),
        };
        let bx = |min: &[f64], max: &[f64]| min.iter().zip(max).map(|(a, b)| b - a).product::<f64>();
        match self {
            Domain::Ball { center, radius } => ball(center.len(), *radius),
            Domain::Annulus { center, inner, outer } => ball(center.len(), *outer) - ball(center.len(), *inner),
            Domain::Box { min, max } => bx(min, max),
            Domain::BoxMinusBall { min, max, radius, .. } => bx(min, max) - ball(min.len(), *radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grading {
    /// Edge length roughly `target_edge_length` everywhere.
    #[default]
    Uniform,
    /// Edge length proportional to the distance from the center, with
    /// `target_edge_length` read as the relative size (edge / radius). Balls
    /// get a uniformly meshed core of radius `core_radius`.
    Radial { core_radius: Option<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub domain: Domain,
    pub target_edge_length: f64,
    #[serde(default)]
    pub grading: Grading,
    /// Radii at which a layer of vertices must lie exactly on the sphere
    /// (balls and annuli only).
    #[serde(default)]
    pub shell_radii: Vec<f64>,
}

impl DomainSpec {
    pub fn new(domain: Domain, target_edge_length: f64) -> Self {
        DomainSpec {
            domain,
            target_edge_length,
            grading: Grading::Uniform,
            shell_radii: Vec::new(),
        }
    }

    pub fn radial(mut self, core_radius: Option<f64>) -> Self {
        self.grading = Grading::Radial { core_radius };
        self
    }

    pub fn with_shells(mut self, radii: &[f64]) -> Self {
        self.shell_radii = radii.to_vec();
        self
    }
}

fn gen_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CapError::Generation(msg.into()))
}

/// Meshes the domain described by `spec`.
pub fn build_mesh(spec: &DomainSpec) -> Result<SimplicialMesh> {
    let h = spec.target_edge_length;
    if !(h.is_finite() && h > 0.0) {
        return gen_err("target_edge_length must be positive and finite");
    }
    let dim = spec.domain.dim();
    if dim != 2 && dim != 3 {
        return gen_err(format!("dimension must be 2 or 3, got {dim}"));
    }
    match (&spec.domain, &spec.grading) {
        (Domain::Ball { center, radius }, grading) => {
            check_center(center, dim)?;
            if !(*radius > 0.0) {
                return gen_err("ball radius must be positive");
            }
            let shells = interior_shells(&spec.shell_radii, 0.0, *radius)?;
            match grading {
                Grading::Uniform => {
                    if h >= *radius {
                        return gen_err(format!(
                            "target_edge_length {h} is not smaller than the ball radius {radius}"
                        ));
                    }
                    let rho = linear_profile(0.0, &shells, *radius, h, 0);
                    cubed_ball(dim, center, &rho, 0, vec![sphere(center, *radius)])
                }
                Grading::Radial { core_radius } => {
                    check_relative(h)?;
                    let core = core_radius.unwrap_or_else(|| shells.first().map_or(radius / 4.0, |r| r / 2.0));
                    if !(core > 0.0 && core < *radius) {
                        return gen_err("core_radius must lie in (0, radius)");
                    }
                    if shells.iter().any(|&r| r <= core) {
                        return gen_err("shell radii must exceed the core radius");
                    }
                    let layers = geometric_profile(core, &shells, *radius, h);
                    log_polar(dim, center, h, Some(core), &layers, vec![sphere(center, *radius)])
                }
            }
        }
        (Domain::Annulus { center, inner, outer }, grading) => {
            check_center(center, dim)?;
            if !(*inner > 0.0 && inner < outer) {
                return gen_err("annulus radii must satisfy 0 < inner < outer");
            }
            let shells = interior_shells(&spec.shell_radii, *inner, *outer)?;
            let bounds = vec![sphere(center, *inner), sphere(center, *outer)];
            match grading {
                Grading::Uniform => {
                    if h > outer - inner {
                        return gen_err(format!(
                            "target_edge_length {h} exceeds the annulus width {}",
                            outer - inner
                        ));
                    }
                    let k0 = ((PI * inner / (4.0 * h)).ceil() as usize).max(1);
                    let rho = linear_profile(*inner, &shells, *outer, h, k0);
                    cubed_ball(dim, center, &rho, k0, bounds)
                }
                Grading::Radial { .. } => {
                    check_relative(h)?;
                    let layers = geometric_profile(*inner, &shells, *outer, h);
                    log_polar(dim, center, h, None, &layers, bounds)
                }
            }
        }
        (Domain::Box { min, max }, Grading::Uniform) => {
            check_box(min, max, dim)?;
            let extent: Vec<f64> = min.iter().zip(max).map(|(a, b)| b - a).collect();
            let smallest = extent.iter().cloned().fold(f64::INFINITY, f64::min);
            if h > smallest {
                return gen_err(format!(
                    "target_edge_length {h} exceeds the smallest box extent {smallest}"
                ));
            }
            let counts: Vec<i64> = extent.iter().map(|e| ((e / h - 1e-9).ceil() as i64).max(1)).collect();
            let mut hi = [0i64; 3];
            hi[..dim].copy_from_slice(&counts);
            let (coords, simplices) = kuhn_grid(
                dim,
                [0; 3],
                hi,
                |_| true,
                |x| {
                    (0..dim)
                        .map(|d| min[d] + extent[d] * x[d] as f64 / counts[d] as f64)
                        .collect()
                },
            );
            SimplicialMesh::with_parts(dim, coords, simplices, BTreeMap::new(), Vec::new())
                .map_err(|e| CapError::Generation(e.to_string()))
        }
        (
            Domain::BoxMinusBall {
                min,
                max,
                center,
                radius,
            },
            Grading::Uniform,
        ) => {
            check_box(min, max, dim)?;
            check_center(center, dim)?;
            if !(*radius > 0.0) {
                return gen_err("ball radius must be positive");
            }
            let gap = (0..dim)
                .map(|d| (center[d] - min[d]).min(max[d] - center[d]))
                .fold(f64::INFINITY, f64::min)
                - radius;
            if !(gap > 0.0) {
                return gen_err("the closed ball must lie strictly inside the box");
            }
            if h > gap {
                return gen_err(format!(
                    "target_edge_length {h} exceeds the gap {gap} between ball and box"
                ));
            }
            let k0 = ((PI * radius / (4.0 * h)).ceil() as i64).max(1);
            let kk = k0 + ((gap / h - 1e-9).ceil() as i64).max(1);
            let place = |x: &[i64]| -> Vec<f64> {
                let s = x.iter().map(|v| v.abs()).max().unwrap();
                let t = (s - k0) as f64 / (kk - k0) as f64;
                let norm = x.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
                (0..dim)
                    .map(|d| {
                        let unit = x[d] as f64 / s as f64;
                        let inner = center[d] + radius * x[d] as f64 / norm;
                        let outer = min[d] + (unit + 1.0) / 2.0 * (max[d] - min[d]);
                        (1.0 - t) * inner + t * outer
                    })
                    .collect()
            };
            let mut lo = [0i64; 3];
            let mut hi = [0i64; 3];
            for d in 0..dim {
                lo[d] = -kk;
                hi[d] = kk;
            }
            let (coords, simplices) = kuhn_grid(dim, lo, hi, |c| !cell_inside(c, k0), place);
            SimplicialMesh::with_parts(dim, coords, simplices, BTreeMap::new(), vec![sphere(center, *radius)])
                .map_err(|e| CapError::Generation(e.to_string()))
        }
        (_, Grading::Radial { .. }) => gen_err("radial grading applies to balls and annuli only"),
    }
}

fn sphere(center: &[f64], radius: f64) -> Sphere {
    Sphere {
        center: center.to_vec(),
        radius,
    }
}

fn check_center(center: &[f64], dim: usize) -> Result<()> {
    if center.len() != dim || center.iter().any(|c| !c.is_finite()) {
        return gen_err("center has the wrong dimension or is not finite");
    }
    Ok(())
}

fn check_box(min: &[f64], max: &[f64], dim: usize) -> Result<()> {
    if min.len() != dim || max.len() != dim {
        return gen_err("box corners must have the same dimension");
    }
    if min.iter().zip(max).any(|(a, b)| !(b > a)) {
        return gen_err("box extents must be strictly positive");
    }
    Ok(())
}

fn check_relative(h: f64) -> Result<()> {
    if h >= 1.0 {
        return gen_err(format!(
            "radial grading reads target_edge_length as relative size; {h} must be < 1"
        ));
    }
    Ok(())
}

fn interior_shells(radii: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = radii.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup();
    if out.iter().any(|&r| !(r > lo && r < hi)) {
        return gen_err(format!("shell radii must lie strictly inside ({lo}, {hi})"));
    }
    Ok(out)
}

/// Shell radii indexed from `k0`, piecewise linear between breakpoints with
/// spacing at most `h`.
fn linear_profile(start: f64, shells: &[f64], end: f64, h: f64, k0: usize) -> Vec<f64> {
    let mut rho = vec![0.0; k0];
    rho.push(start);
    let mut a = start;
    for &b in shells.iter().chain(std::iter::once(&end)) {
        let count = (((b - a) / h - 1e-9).ceil() as usize).max(1);
        for j in 1..=count {
            rho.push(a + (b - a) * j as f64 / count as f64);
        }
        a = b;
    }
    rho
}

/// Layer radii from `start` to `end`, geometric between breakpoints with log
/// step at most `h`.
fn geometric_profile(start: f64, shells: &[f64], end: f64, h: f64) -> Vec<f64> {
    let mut rho = vec![start];
    let mut a = start;
    for &b in shells.iter().chain(std::iter::once(&end)) {
        let count = (((b / a).ln() / h - 1e-9).ceil() as usize).max(1);
        for j in 1..count {
            rho.push(a * (b / a).powf(j as f64 / count as f64));
        }
        rho.push(b);
        a = b;
    }
    rho
}

/// All integer points `x` with `lo <= x < hi`, lexicographically ordered.
fn lattice(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for d in 0..lo.len() {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<i64>| {
                (lo[d]..hi[d]).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn cell_inside(c: &[i64], k0: i64) -> bool {
    c.iter().all(|&v| v >= -k0 && v < k0)
}

fn permutations(dim: usize) -> Vec<Vec<usize>> {
    match dim {
        2 => vec![vec![0, 1], vec![1, 0]],
        _ => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
    }
}

/// Kuhn triangulation of the cells with lower corners in `[lo, hi)` that
/// pass `include_cell`. Vertices are numbered lexicographically among the
/// grid points actually used.
fn kuhn_grid(
    dim: usize,
    lo: [i64; 3],
    hi: [i64; 3],
    include_cell: impl Fn(&[i64]) -> bool,
    place: impl Fn(&[i64]) -> Vec<f64>,
) -> (Vec<f64>, Vec<usize>) {
    let perms = permutations(dim);
    let span: Vec<i64> = (0..dim).map(|d| hi[d] - lo[d] + 1).collect();
    let flat = |x: &[i64]| -> usize {
        let mut idx = 0i64;
        for d in 0..dim {
            idx = idx * span[d] + (x[d] - lo[d]);
        }
        idx as usize
    };
    let npoints: i64 = span.iter().product();
    let cells: Vec<Vec<i64>> = lattice(&lo[..dim], &hi[..dim])
        .into_iter()
        .filter(|c| include_cell(c))
        .collect();
    let mut raw: Vec<usize> = Vec::with_capacity(cells.len() * perms.len() * (dim + 1));
    for cell in &cells {
        for perm in &perms {
            let mut x = cell.clone();
            raw.push(flat(&x));
            for &axis in perm {
                x[axis] += 1;
                raw.push(flat(&x));
            }
        }
    }
    let mut id = vec![usize::MAX; npoints as usize];
    for &p in &raw {
        id[p] = 0;
    }
    let mut coords = Vec::new();
    let mut next = 0;
    for p in 0..npoints as usize {
        if id[p] == 0 {
            id[p] = next;
            next += 1;
            let mut rem = p as i64;
            let mut x = vec![0i64; dim];
            for d in (0..dim).rev() {
                x[d] = rem % span[d] + lo[d];
                rem /= span[d];
            }
            coords.extend(place(&x));
        }
    }
    let simplices = raw.iter().map(|&p| id[p]).collect();
    (coords, simplices)
}

fn unit_dir(x: &[i64]) -> Vec<f64> {
    let norm = x.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
    x.iter().map(|&v| v as f64 / norm).collect()
}

/// Cube shells `k0..=K` mapped onto spheres of radius `rho[k]`.
fn cubed_ball(dim: usize, center: &[f64], rho: &[f64], k0: usize, spheres: Vec<Sphere>) -> Result<SimplicialMesh> {
    let kk = (rho.len() - 1) as i64;
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for d in 0..dim {
        lo[d] = -kk;
        hi[d] = kk;
    }
    let place = |x: &[i64]| -> Vec<f64> {
        let s = x.iter().map(|v| v.abs()).max().unwrap();
        if s == 0 {
            return center.to_vec();
        }
        let r = rho[s as usize];
        unit_dir(x).iter().zip(center).map(|(u, c)| c + r * u).collect()
    };
    let (coords, simplices) = kuhn_grid(dim, lo, hi, |c| !cell_inside(c, k0 as i64), place);
    SimplicialMesh::with_parts(dim, coords, simplices, BTreeMap::new(), spheres)
        .map_err(|e| CapError::Generation(e.to_string()))
}

/// Log-polar mesh: optional cubed core of radius `layers[0]`, then the
/// core's surface triangulation extruded through every layer radius.
fn log_polar(
    dim: usize,
    center: &[f64],
    h: f64,
    core: Option<f64>,
    layers: &[f64],
    spheres: Vec<Sphere>,
) -> Result<SimplicialMesh> {
    let k0 = ((PI / (4.0 * h)).ceil() as i64).max(1);
    let perms = permutations(dim);

    // Kuhn simplices of the cube [-k0, k0]^n as integer points.
    let mut cube_simplices: Vec<Vec<Vec<i64>>> = Vec::new();
    for cell in lattice(&vec![-k0; dim], &vec![k0; dim]) {
        for perm in &perms {
            let mut x = cell.clone();
            let mut s = vec![x.clone()];
            for &axis in perm {
                x[axis] += 1;
                s.push(x.clone());
            }
            cube_simplices.push(s);
        }
    }

    // Surface facets: facets lying on |x|_inf = k0.
    let on_surface = |x: &Vec<i64>| x.iter().any(|v| v.abs() == k0);
    let mut facets: Vec<Vec<Vec<i64>>> = Vec::new();
    for s in &cube_simplices {
        for skip in 0..=dim {
            let f: Vec<Vec<i64>> = s
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != skip)
                .map(|(_, x)| x.clone())
                .collect();
            // A facet is on the surface when all its vertices share a face
            // coordinate equal to +-k0.
            let shared = (0..dim).any(|d| f.iter().all(|x| x[d] == k0) || f.iter().all(|x| x[d] == -k0));
            if shared {
                facets.push(f);
            }
        }
    }

    let mut point_id: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut coords: Vec<f64> = Vec::new();
    let mut simplices: Vec<usize> = Vec::new();

    // Core interior points first (lexicographic), then surface layers.
    let mut all_points: Vec<Vec<i64>> = cube_simplices.iter().flatten().cloned().collect();
    all_points.sort();
    all_points.dedup();
    if let Some(core_r) = core {
        for x in all_points.iter().filter(|x| !on_surface(x)) {
            let s = x.iter().map(|v| v.abs()).max().unwrap();
            let p: Vec<f64> = if s == 0 {
                center.to_vec()
            } else {
                let r = core_r * s as f64 / k0 as f64;
                unit_dir(x).iter().zip(center).map(|(u, c)| c + r * u).collect()
            };
            point_id.insert(x.clone(), coords.len() / dim);
            coords.extend(p);
        }
    }
    let surface: Vec<Vec<i64>> = all_points.iter().filter(|x| on_surface(x)).cloned().collect();
    let mut surface_local: HashMap<Vec<i64>, usize> = HashMap::new();
    for (j, x) in surface.iter().enumerate() {
        surface_local.insert(x.clone(), j);
    }
    let base = coords.len() / dim;
    let ns = surface.len();
    for &r in layers {
        for x in &surface {
            coords.extend(unit_dir(x).iter().zip(center).map(|(u, c)| c + r * u));
        }
    }
    let layer_id = |layer: usize, x: &Vec<i64>| base + layer * ns + surface_local[x];

    if core.is_some() {
        for s in &cube_simplices {
            for x in s {
                let id = if on_surface(x) { layer_id(0, x) } else { point_id[x] };
                simplices.push(id);
            }
        }
    }

    for layer in 0..layers.len() - 1 {
        for f in &facets {
            let bottom: Vec<usize> = f.iter().map(|x| layer_id(layer, x)).collect();
            let top: Vec<usize> = f.iter().map(|x| layer_id(layer + 1, x)).collect();
            if dim == 2 {
                simplices.extend([bottom[0], bottom[1], top[1]]);
                simplices.extend([bottom[0], top[1], top[0]]);
            } else {
                let prism = [bottom[0], bottom[1], bottom[2], top[0], top[1], top[2]];
                for tet in split_prism(prism) {
                    simplices.extend(tet);
                }
            }
        }
    }

    SimplicialMesh::with_parts(dim, coords, simplices, BTreeMap::new(), spheres)
        .map_err(|e| CapError::Generation(e.to_string()))
}

/// Splits a triangular prism (bottom 0,1,2; top 3,4,5 with vertex i+3 above
/// i) into three tetrahedra. Every quadrilateral face is cut along the
/// diagonal through its smallest global index, so neighbouring prisms agree.
fn split_prism(v: [usize; 6]) -> [[usize; 4]; 3] {
    const ROT: [[usize; 6]; 6] = [
        [0, 1, 2, 3, 4, 5],
        [1, 2, 0, 4, 5, 3],
        [2, 0, 1, 5, 3, 4],
        [3, 5, 4, 0, 2, 1],
        [4, 3, 5, 1, 0, 2],
        [5, 4, 3, 2, 1, 0],
    ];
    let m = (0..6).min_by_key(|&i| v[i]).unwrap();
    let p: Vec<usize> = ROT[m].iter().map(|&i| v[i]).collect();
    if p[1].min(p[5]) < p[2].min(p[4]) {
        [
            [p[0], p[1], p[2], p[5]],
            [p[0], p[1], p[5], p[4]],
            [p[0], p[4], p[5], p[3]],
        ]
    } else {
        [
            [p[0], p[1], p[2], p[4]],
            [p[0], p[4], p[2], p[5]],
            [p[0], p[4], p[5], p[3]],
        ]
    }
}
