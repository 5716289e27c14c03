//! Upper-bound estimates of the Ferrand pseudometric
//! `mu(x, y) = inf { Cap(C) : C continuum containing x and y }`
//! over discrete continua (connected edge paths), and the Class I / II
//! diagnostics built on exhaustions.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::capacity::{compact_capacity, min_resolvable_radius, Exhaustion};
use crate::conformal::ConformalStructure;
use crate::energy::ScalarField;
use crate::error::{arg_err, Result};
use crate::mesh::{dist, NodeSet, SimplicialMesh};
use crate::oracle::{decay_fit, pure_decay_fit, DecayFit};
use crate::solver::{CapacityResult, CapacitySolver, Condenser, SolverConfig};

/// Smallest decrease that counts as an improvement during the search.
const MIN_IMPROVEMENT: f64 = 1e-12;

/// A discrete continuum: a walk along mesh edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PathContinuum {
    nodes: Vec<usize>,
}

impl PathContinuum {
    /// Checks that `nodes` is nonempty and consecutive nodes share an edge.
    pub fn new(mesh: &SimplicialMesh, nodes: Vec<usize>) -> Result<Self> {
        if nodes.is_empty() {
            return arg_err("a path continuum needs at least one node");
        }
        if let Some(&bad) = nodes.iter().find(|&&i| i >= mesh.num_vertices()) {
            return arg_err(format!("path node {bad} is out of range"));
        }
        for w in nodes.windows(2) {
            if !mesh.are_adjacent(w[0], w[1]) {
                return arg_err(format!("path nodes {} and {} do not share an edge", w[0], w[1]));
            }
        }
        Ok(PathContinuum { nodes })
    }

    pub fn point(x: usize) -> Self {
        PathContinuum { nodes: vec![x] }
    }

    /// Shortest edge path from `from` to `to` avoiding `forbidden` nodes.
    pub fn shortest(mesh: &SimplicialMesh, from: usize, to: usize, forbidden: &NodeSet) -> Result<Self> {
        let mask = forbidden.mask(mesh.num_vertices());
        match mesh.shortest_path(from, to, &mask) {
            Some(nodes) => Ok(PathContinuum { nodes }),
            None => arg_err(format!("no edge path joins {from} and {to} off the outer plate")),
        }
    }

    /// Path through the vertices nearest to `a` and `b`.
    pub fn between_points(mesh: &SimplicialMesh, a: &[f64], b: &[f64]) -> Result<Self> {
        Self::shortest(
            mesh,
            mesh.nearest_vertex(a),
            mesh.nearest_vertex(b),
            mesh.boundary_nodes(),
        )
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn endpoint_a(&self) -> usize {
        self.nodes[0]
    }

    pub fn endpoint_b(&self) -> usize {
        *self.nodes.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_set(&self) -> NodeSet {
        self.nodes.iter().copied().collect()
    }

    pub fn reversed(&self) -> Self {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        PathContinuum { nodes }
    }

    /// Joins two walks sharing an endpoint and erases loops, which keeps a
    /// connected subset of the union with the same endpoints.
    pub fn concat(&self, next: &PathContinuum) -> Result<Self> {
        if self.endpoint_b() != next.endpoint_a() {
            return arg_err("paths do not share the junction node");
        }
        let mut out: Vec<usize> = Vec::with_capacity(self.len() + next.len());
        let mut position: HashMap<usize, usize> = HashMap::new();
        for &v in self.nodes.iter().chain(&next.nodes[1..]) {
            if let Some(&j) = position.get(&v) {
                for dropped in out.drain(j + 1..) {
                    position.remove(&dropped);
                }
            } else {
                position.insert(v, out.len());
                out.push(v);
            }
        }
        Ok(PathContinuum { nodes: out })
    }
}

/// Capacity of the condenser (`outer_plate`, path nodes).
pub fn continuum_capacity(
    mesh: &SimplicialMesh,
    structure: &ConformalStructure,
    path: &PathContinuum,
    outer_plate: &NodeSet,
    config: &SolverConfig,
) -> Result<CapacityResult> {
    let condenser = Condenser::new(outer_plate.clone(), path.node_set())?;
    CapacitySolver::new(mesh, structure, config)?.solve(&condenser, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchDiagnostics {
    pub seed: u64,
    pub budget: usize,
    pub proposals: usize,
    pub accepted: usize,
    /// Capacity after the initial path and after every accepted move.
    pub accepted_values: Vec<f64>,
    pub budget_exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEstimate {
    pub x: usize,
    pub y: usize,
    /// Upper bound on the discrete `mu(x, y)`: the capacity of `witness`.
    pub value: f64,
    pub witness: PathContinuum,
    pub capacity_result: CapacityResult,
    pub search_diagnostics: SearchDiagnostics,
}

/// Search knobs for [`estimate_mu`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Maximum number of capacity re-solves for proposed moves.
    pub budget: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { budget: 24, seed: 0 }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, a: usize, b: usize, salt: u64) -> ChaCha8Rng {
    let s = splitmix(splitmix(splitmix(seed ^ salt) ^ a as u64) ^ b as u64);
    ChaCha8Rng::seed_from_u64(s)
}

enum Move {
    Relocate,
    Delete,
    Insert,
}

/// Local search state: the outer plate and a reusable solver.
struct Search<'a, 'm> {
    mesh: &'m SimplicialMesh,
    solver: CapacitySolver<'m>,
    outer: &'a NodeSet,
    outer_mask: Vec<bool>,
}

impl<'a, 'm> Search<'a, 'm> {
    fn new(
        mesh: &'m SimplicialMesh,
        structure: &ConformalStructure,
        outer: &'a NodeSet,
        config: &SolverConfig,
    ) -> Result<Self> {
        Ok(Search {
            mesh,
            solver: CapacitySolver::new(mesh, structure, config)?,
            outer,
            outer_mask: outer.mask(mesh.num_vertices()),
        })
    }

    fn capacity(&mut self, nodes: &[usize], warm: Option<&ScalarField>) -> Result<CapacityResult> {
        let condenser = Condenser::new(self.outer.clone(), nodes.iter().copied().collect())?;
        self.solver.solve(&condenser, warm)
    }

    fn common_free_neighbors(&self, a: usize, b: usize, on_path: &[bool]) -> Vec<usize> {
        self.mesh
            .neighbors(a)
            .iter()
            .copied()
            .filter(|&w| !on_path[w] && !self.outer_mask[w] && self.mesh.are_adjacent(w, b))
            .collect()
    }

    /// A random connectivity-preserving move, or `None` when the drawn move
    /// type has no candidate.
    fn propose(&self, path: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
        let mut on_path = vec![false; self.mesh.num_vertices()];
        for &v in path {
            on_path[v] = true;
        }
        let interior = path.len().saturating_sub(2);
        let mv = match rng.gen_range(0..20) {
            0..=11 => Move::Relocate,
            12..=16 => Move::Delete,
            _ => Move::Insert,
        };
        match mv {
            Move::Relocate if interior > 0 => {
                let i = rng.gen_range(1..path.len() - 1);
                let options = self.common_free_neighbors(path[i - 1], path[i + 1], &on_path);
                let w = *options.choose(rng)?;
                let mut next = path.to_vec();
                next[i] = w;
                Some(next)
            }
            Move::Delete if interior > 0 => {
                let options: Vec<usize> = (1..path.len() - 1)
                    .filter(|&i| self.mesh.are_adjacent(path[i - 1], path[i + 1]))
                    .collect();
                let i = *options.choose(rng)?;
                let mut next = path.to_vec();
                next.remove(i);
                Some(next)
            }
            Move::Insert if path.len() > 1 => {
                let i = rng.gen_range(0..path.len() - 1);
                let options = self.common_free_neighbors(path[i], path[i + 1], &on_path);
                let w = *options.choose(rng)?;
                let mut next = path.to_vec();
                next.insert(i + 1, w);
                Some(next)
            }
            _ => None,
        }
    }

    /// Greedy stochastic descent from `start`; returns the best path found.
    fn run(
        &mut self,
        start: Vec<usize>,
        budget: usize,
        seed: u64,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Vec<usize>, CapacityResult, SearchDiagnostics)> {
        let mut best_path = start;
        let mut best = self.capacity(&best_path, None)?;
        let mut diag = SearchDiagnostics {
            seed,
            budget,
            proposals: 0,
            accepted: 0,
            accepted_values: vec![best.value],
            budget_exhausted: false,
        };
        if best_path.len() < 2 {
            return Ok((best_path, best, diag));
        }
        // Draws that find no candidate cost nothing; cap them so a rigid path ends the loop.
        let mut idle = 0;
        while diag.proposals < budget && idle < 64 {
            let Some(candidate) = self.propose(&best_path, rng) else {
                idle += 1;
                continue;
            };
            idle = 0;
            diag.proposals += 1;
            let result = self.capacity(&candidate, Some(&best.field))?;
            if result.value < best.value - MIN_IMPROVEMENT {
                best_path = candidate;
                best = result;
                diag.accepted += 1;
                diag.accepted_values.push(best.value);
            }
        }
        diag.budget_exhausted = diag.proposals >= budget;
        Ok((best_path, best, diag))
    }
}

fn check_endpoint(mesh: &SimplicialMesh, outer: &NodeSet, v: usize) -> Result<()> {
    if v >= mesh.num_vertices() {
        return arg_err(format!("vertex {v} is out of range"));
    }
    if outer.contains(v) {
        return arg_err(format!("vertex {v} lies on the outer plate"));
    }
    Ok(())
}

/// Orients a canonical (smaller index first) witness to run from `x` to `y`.
fn orient(nodes: Vec<usize>, x: usize) -> PathContinuum {
    let path = PathContinuum { nodes };
    if path.endpoint_a() == x {
        path
    } else {
        path.reversed()
    }
}

/// Upper-bound estimate of `mu(x, y)` on a bounded mesh whose boundary is
/// the 0-plate.
///
/// The search runs on the canonical pair `(min, max)` with a random stream
/// derived from `(seed, min, max)`, so swapping `x` and `y` yields the same
/// value and the reversed witness. For `x = y` the degenerate continuum
/// `{x}` is used, whose capacity is the finest resolvable point capacity.
pub fn estimate_mu(
    mesh: &SimplicialMesh,
    structure: &ConformalStructure,
    x: usize,
    y: usize,
    config: &SolverConfig,
    search: &SearchConfig,
) -> Result<MuEstimate> {
    let outer = mesh.boundary_nodes();
    check_endpoint(mesh, outer, x)?;
    check_endpoint(mesh, outer, y)?;
    let (a, b) = (x.min(y), x.max(y));
    let start = PathContinuum::shortest(mesh, a, b, outer)?.nodes;
    let mut engine = Search::new(mesh, structure, outer, config)?;
    let mut rng = stream(search.seed, a, b, 0);
    let (nodes, result, diag) = engine.run(start, search.budget, search.seed, &mut rng)?;
    Ok(MuEstimate {
        x,
        y,
        value: result.value,
        witness: orient(nodes, x),
        capacity_result: result,
        search_diagnostics: diag,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriangleCheck {
    pub mu_xy: MuEstimate,
    pub mu_yz: MuEstimate,
    /// Best of an independent search and a search seeded with the joined
    /// `x -> y -> z` witnesses.
    pub mu_xz: MuEstimate,
    pub holds: bool,
}

/// Checks `mu(x,z) <= mu(x,y) + mu(y,z) + 2 * value_tolerance`.
pub fn triangle_check(
    mesh: &SimplicialMesh,
    structure: &ConformalStructure,
    (x, y, z): (usize, usize, usize),
    config: &SolverConfig,
    search: &SearchConfig,
) -> Result<TriangleCheck> {
    let mu_xy = estimate_mu(mesh, structure, x, y, config, search)?;
    let mu_yz = estimate_mu(mesh, structure, y, z, config, search)?;
    let mut mu_xz = estimate_mu(mesh, structure, x, z, config, search)?;

    let joined = mu_xy.witness.concat(&mu_yz.witness)?;
    let outer = mesh.boundary_nodes();
    let mut engine = Search::new(mesh, structure, outer, config)?;
    let mut rng = stream(search.seed, x, z, splitmix(y as u64 + 1));
    let (nodes, result, diag) = engine.run(joined.nodes, search.budget, search.seed, &mut rng)?;
    if result.value < mu_xz.value {
        mu_xz = MuEstimate {
            x,
            y: z,
            value: result.value,
            witness: orient(nodes, x),
            capacity_result: result,
            search_diagnostics: diag,
        };
    }
    let holds = mu_xz.value <= mu_xy.value + mu_yz.value + 2.0 * config.value_tolerance;
    Ok(TriangleCheck {
        mu_xy,
        mu_yz,
        mu_xz,
        holds,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "ClassI_evidence")]
    ClassIEvidence,
    #[serde(rename = "ClassII_evidence")]
    ClassIIEvidence,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

/// Fraction of the first value the fitted limit is compared against.
pub const FLOOR_FRACTION: f64 = 0.1;
/// Largest relative change between the last two stages for a stable floor.
pub const FLOOR_STABILITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantFloorFit {
    pub value: f64,
    pub rms_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub verdict: Verdict,
    /// `(R, Cap_{Omega_R}(probe))` per exhaustion stage.
    pub capacity_sequence: Vec<(f64, f64)>,
    /// Decay towards a free limit.
    pub fit: DecayFit,
    /// Decay with the limit pinned to zero.
    pub decay_model: DecayFit,
    pub constant_floor_model: ConstantFloorFit,
    /// The fitted limit.
    pub floor_estimate: f64,
    pub strictly_decreasing: bool,
    /// `|c_last - c_prev| / c_prev`.
    pub last_relative_change: f64,
    pub converged: bool,
}

/// Capacity of `probe` (base-mesh indices) over the exhaustion and the
/// resulting Class I / II evidence.
///
/// Class I evidence needs a strictly decreasing sequence whose fitted limit
/// is at most 10% of the first value. Class II evidence needs the last two
/// values within 5% of each other and a fitted limit above that 10% mark.
pub fn classify(
    family: &Exhaustion,
    structure: &ConformalStructure,
    probe: &PathContinuum,
    config: &SolverConfig,
) -> Result<ClassificationReport> {
    if family.len() < 3 {
        return arg_err("classification needs at least 3 exhaustion stages");
    }
    PathContinuum::new(family.base(), probe.nodes.clone())?;
    let report = compact_capacity(family, structure, &probe.node_set(), config)?;
    let seq = report.samples();
    let n = family.base().dim();
    let fit = decay_fit(&seq, n)?;
    let decay_model = pure_decay_fit(&seq, n)?;
    let mean = seq.iter().map(|s| s.1).sum::<f64>() / seq.len() as f64;
    let constant_floor_model = ConstantFloorFit {
        value: mean,
        rms_residual: (seq.iter().map(|s| (s.1 - mean).powi(2)).sum::<f64>() / seq.len() as f64).sqrt(),
    };
    let first = seq[0].1;
    let last = seq[seq.len() - 1].1;
    let prev = seq[seq.len() - 2].1;
    let strictly_decreasing = seq.windows(2).all(|w| w[1].1 < w[0].1);
    let last_relative_change = if prev > 0.0 {
        (last - prev).abs() / prev
    } else {
        f64::INFINITY
    };
    let threshold = FLOOR_FRACTION * first;
    let verdict = if first > 0.0 && strictly_decreasing && fit.limit <= threshold {
        Verdict::ClassIEvidence
    } else if first > 0.0 && last_relative_change <= FLOOR_STABILITY && fit.limit > threshold {
        Verdict::ClassIIEvidence
    } else {
        Verdict::Inconclusive
    };
    Ok(ClassificationReport {
        verdict,
        capacity_sequence: seq,
        floor_estimate: fit.limit,
        fit,
        decay_model,
        constant_floor_model,
        strictly_decreasing,
        last_relative_change,
        converged: report.stages.iter().all(|s| s.result.converged()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuitySample {
    pub radius: f64,
    /// Largest estimate over the sampled pairs inside `B(z, radius)`.
    pub sup_mu: f64,
    pub pairs: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityProbe {
    pub z: usize,
    pub samples: Vec<ContinuitySample>,
    pub strictly_decreasing: bool,
}

/// Sampled sup of `mu(x, y)` over pairs in `B(z, r)` for decreasing `r`.
///
/// Each radius contributes the farthest pair of its ball and
/// `random_pairs` random pairs; every estimate is reused at all radii whose
/// ball contains the pair.
pub fn mu_continuity_probe(
    mesh: &SimplicialMesh,
    structure: &ConformalStructure,
    z: usize,
    radii: &[f64],
    random_pairs: usize,
    config: &SolverConfig,
    search: &SearchConfig,
) -> Result<ContinuityProbe> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] < w[0])) {
        return arg_err("radii must be strictly decreasing");
    }
    check_endpoint(mesh, mesh.boundary_nodes(), z)?;
    let zp = mesh.vertex(z).to_vec();
    let floor = min_resolvable_radius(mesh, &zp);
    if let Some(r) = radii.iter().find(|&&r| r < floor) {
        return arg_err(format!(
            "radius {r} is below the mesh resolution; minimum resolvable radius is {floor:.6e}"
        ));
    }
    let outer = mesh.boundary_nodes();
    let ball = |r: f64| -> Vec<usize> {
        mesh.select(|p| dist(p, &zp) <= r * (1.0 + 1e-9))
            .iter()
            .filter(|&v| !outer.contains(v))
            .collect()
    };
    let mut rng = stream(search.seed, z, z, 0x5eed);
    let mut estimates: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for &r in radii {
        let nodes = ball(r);
        if nodes.len() < 2 {
            return arg_err(format!("ball of radius {r} holds fewer than two interior vertices"));
        }
        let mut pairs = vec![farthest_pair(mesh, &nodes)];
        for _ in 0..random_pairs {
            let a = *nodes.choose(&mut rng).unwrap();
            let b = *nodes.choose(&mut rng).unwrap();
            pairs.push((a.min(b), a.max(b)));
        }
        for (a, b) in pairs {
            if let std::collections::btree_map::Entry::Vacant(e) = estimates.entry((a, b)) {
                e.insert(estimate_mu(mesh, structure, a, b, config, search)?.value);
            }
        }
    }
    let samples: Vec<ContinuitySample> = radii
        .iter()
        .map(|&r| {
            let inside = |v: usize| dist(mesh.vertex(v), &zp) <= r * (1.0 + 1e-9);
            let pairs: Vec<(usize, usize, f64)> = estimates
                .iter()
                .filter(|((a, b), _)| inside(*a) && inside(*b))
                .map(|(&(a, b), &v)| (a, b, v))
                .collect();
            let sup_mu = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
            ContinuitySample {
                radius: r,
                sup_mu,
                pairs,
            }
        })
        .collect();
    let strictly_decreasing = samples.windows(2).all(|w| w[1].sup_mu < w[0].sup_mu);
    Ok(ContinuityProbe {
        z,
        samples,
        strictly_decreasing,
    })
}

fn farthest_pair(mesh: &SimplicialMesh, nodes: &[usize]) -> (usize, usize) {
    let mut best = (f64::NEG_INFINITY, nodes[0], nodes[0]);
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            let d = dist(mesh.vertex(a), mesh.vertex(b));
            if d > best.0 {
                best = (d, a, b);
            }
        }
    }
    (best.1.min(best.2), best.1.max(best.2))
}
