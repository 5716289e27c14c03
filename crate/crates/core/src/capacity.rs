//! Compact-set capacities, exhaustions of unbounded manifolds, the max
//! combiner and the shrinking-ball and nested-domain experiments.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::conformal::ConformalStructure;
use crate::energy::ScalarField;
use crate::error::{arg_err, Result};
use crate::mesh::{dist, NodeSet, SimplicialMesh};
use crate::oracle::{decay_fit, linear_fit, DecayFit};
use crate::solver::{CapacityResult, CapacitySolver, Condenser, SolverConfig};

/// An increasing family of balls `B(center, R_i)` cut out of one base mesh.
///
/// Every stage mesh is a sub-complex of the base mesh, so the stages are
/// nested exactly at the discrete level and the zero extension of a stage
/// witness is admissible on every later stage.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    base: SimplicialMesh,
    center: Vec<f64>,
    radii: Vec<f64>,
}

/// One stage of an exhaustion: the submesh and, per submesh vertex, its
/// index in the base mesh.
#[derive(Debug, Clone)]
pub struct Stage {
    pub radius: f64,
    pub mesh: SimplicialMesh,
    pub base_index: Vec<usize>,
}

impl Stage {
    /// Maps base-mesh nodes into this stage; nodes outside the stage are an error.
    pub fn map_nodes(&self, nodes: &NodeSet) -> Result<NodeSet> {
        let lookup: HashMap<usize, usize> = self
            .base_index
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        nodes
            .iter()
            .map(|i| {
                lookup.get(&i).copied().ok_or_else(|| {
                    crate::CapError::Argument(format!(
                        "node {i} lies outside the exhaustion stage of radius {}",
                        self.radius
                    ))
                })
            })
            .collect()
    }
}

impl Exhaustion {
    pub fn new(base: SimplicialMesh, center: Vec<f64>, radii: Vec<f64>) -> Result<Self> {
        if center.len() != base.dim() {
            return arg_err("exhaustion center has the wrong dimension");
        }
        if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
            return arg_err("exhaustion radii must be positive and strictly increasing");
        }
        let reach = base.vertices().map(|p| dist(p, &center)).fold(0.0, f64::max);
        if *radii.last().unwrap() > reach * (1.0 + 1e-9) {
            return arg_err("largest exhaustion radius exceeds the base mesh");
        }
        Ok(Exhaustion { base, center, radii })
    }

    pub fn base(&self) -> &SimplicialMesh {
        &self.base
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    pub fn stage(&self, i: usize) -> Result<Stage> {
        let radius = self.radii[i];
        let (mesh, base_index) = self.base.restrict_to_ball(&self.center, radius)?;
        Ok(Stage {
            radius,
            mesh,
            base_index,
        })
    }

    /// Same radii on the uniformly refined base mesh.
    pub fn refine(&self) -> Result<Exhaustion> {
        Exhaustion::new(self.base.refine()?, self.center.clone(), self.radii.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionStageResult {
    pub radius: f64,
    pub result: CapacityResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactCapacityReport {
    pub stages: Vec<ExhaustionStageResult>,
    /// `c_{i+1} <= c_i + value_tolerance` for every consecutive pair.
    pub monotone: bool,
    /// Present when there are at least three stages with radii above 1.
    pub fit: Option<DecayFit>,
}

impl CompactCapacityReport {
    pub fn values(&self) -> Vec<f64> {
        self.stages.iter().map(|s| s.result.value).collect()
    }

    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.stages.iter().map(|s| (s.radius, s.result.value)).collect()
    }
}

/// Capacity of `k` (1 on `k`, vanishing on the stage boundary) over every
/// stage of the exhaustion. `k` is given in base-mesh indices.
pub fn compact_capacity(
    family: &Exhaustion,
    structure: &ConformalStructure,
    k: &NodeSet,
    config: &SolverConfig,
) -> Result<CompactCapacityReport> {
    let mut stages = Vec::with_capacity(family.len());
    let mut previous: Option<(Stage, ScalarField)> = None;
    for i in 0..family.len() {
        let stage = family.stage(i)?;
        let plate1 = stage.map_nodes(k)?;
        let plate0 = stage.mesh.boundary_nodes().clone();
        if plate1.intersects(&plate0) {
            return arg_err(format!(
                "compact set touches the boundary of the exhaustion stage of radius {}",
                stage.radius
            ));
        }
        let condenser = Condenser::new(plate0, plate1)?;
        let mut solver = CapacitySolver::new(&stage.mesh, structure, config)?;
        let warm = match &previous {
            Some((prev, field)) => Some(zero_extend(prev, field, &stage)?),
            None => None,
        };
        let result = solver.solve(&condenser, warm.as_ref())?;
        previous = Some((stage.clone(), result.field.clone()));
        stages.push(ExhaustionStageResult {
            radius: stage.radius,
            result,
        });
    }
    let values: Vec<f64> = stages.iter().map(|s| s.result.value).collect();
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + config.value_tolerance);
    let fit = if stages.len() >= 3 && family.radii()[0] > 1.0 {
        let samples: Vec<(f64, f64)> = stages.iter().map(|s| (s.radius, s.result.value)).collect();
        Some(decay_fit(&samples, family.base().dim())?)
    } else {
        None
    };
    Ok(CompactCapacityReport { stages, monotone, fit })
}

/// Capacity of `k` in a bounded mesh: 1 on `k`, 0 on the mesh boundary.
pub fn compact_capacity_bounded(
    mesh: &SimplicialMesh,
    structure: &ConformalStructure,
    k: &NodeSet,
    config: &SolverConfig,
) -> Result<CapacityResult> {
    let plate0 = mesh.boundary_nodes().clone();
    if k.intersects(&plate0) {
        return arg_err("compact set touches the mesh boundary");
    }
    let condenser = Condenser::new(plate0, k.clone())?;
    CapacitySolver::new(mesh, structure, config)?.solve(&condenser, None)
}

/// Extends `field` from stage `from` by zero onto the larger stage `to`.
fn zero_extend(from: &Stage, field: &ScalarField, to: &Stage) -> Result<ScalarField> {
    let mut index_in_to: HashMap<usize, usize> = HashMap::with_capacity(to.base_index.len());
    for (new, &old) in to.base_index.iter().enumerate() {
        index_in_to.insert(old, new);
    }
    let mut values = vec![0.0; to.mesh.num_vertices()];
    for (i, &old) in from.base_index.iter().enumerate() {
        if let Some(&j) = index_in_to.get(&old) {
            values[j] = field.values[i];
        }
    }
    ScalarField::new(&to.mesh, values)
}

/// Nodal maximum of two fields on the same mesh.
pub fn max_combine(f1: &ScalarField, f2: &ScalarField) -> Result<ScalarField> {
    if f1.mesh_fingerprint() != f2.mesh_fingerprint() || f1.len() != f2.len() {
        return arg_err("max_combine: fields live on different meshes");
    }
    let mut out = f1.clone();
    for (a, b) in out.values.iter_mut().zip(&f2.values) {
        *a = a.max(*b);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDecaySample {
    pub radius: f64,
    pub capacity: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointDecayReport {
    pub center: Vec<f64>,
    pub outer_radius: f64,
    pub samples: Vec<PointDecaySample>,
    pub strictly_decreasing: bool,
    /// Slope of `log capacity` against `log log(R/r)`; -(n-1) for ring decay.
    pub exponent: f64,
}

/// Smallest radius whose closed ball around `center` is resolved: the
/// longest edge at the vertex nearest to `center`.
pub fn min_resolvable_radius(mesh: &SimplicialMesh, center: &[f64]) -> f64 {
    let v = mesh.nearest_vertex(center);
    mesh.local_edge_length(v) + dist(mesh.vertex(v), center)
}

/// Capacities of the condensers `(closed ball B(center, r_i), |x - center| >= R)`.
pub fn point_capacity_decay(
    mesh: &SimplicialMesh,
    structure: &ConformalStructure,
    center: &[f64],
    radii: &[f64],
    outer_radius: f64,
    config: &SolverConfig,
) -> Result<PointDecayReport> {
    if center.len() != mesh.dim() {
        return arg_err("center has the wrong dimension");
    }
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] < w[0])) {
        return arg_err("radii must be strictly decreasing");
    }
    if !(radii[0] < outer_radius) {
        return arg_err("largest radius must be below the outer radius");
    }
    let floor = min_resolvable_radius(mesh, center);
    if let Some(r) = radii.iter().find(|&&r| r < floor) {
        return arg_err(format!(
            "radius {r} is below the mesh resolution; minimum resolvable radius is {floor:.6e}"
        ));
    }
    let plate0 = mesh.select(|p| dist(p, center) >= outer_radius * (1.0 - 1e-9));
    if plate0.is_empty() {
        return arg_err("mesh has no vertices at or beyond the outer radius");
    }
    let mut solver = CapacitySolver::new(mesh, structure, config)?;
    let mut samples = Vec::with_capacity(radii.len());
    let mut warm: Option<ScalarField> = None;
    for &r in radii {
        let plate1 = mesh.select(|p| dist(p, center) <= r * (1.0 + 1e-9));
        let result = solver.solve(&Condenser::new(plate0.clone(), plate1)?, warm.as_ref())?;
        samples.push(PointDecaySample {
            radius: r,
            capacity: result.value,
            converged: result.converged(),
        });
        warm = Some(result.field);
    }
    let strictly_decreasing = samples.windows(2).all(|w| w[1].capacity < w[0].capacity);
    let xs: Vec<f64> = samples.iter().map(|s| (outer_radius / s.radius).ln().ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.capacity.ln()).collect();
    let exponent = if samples.len() >= 2 {
        linear_fit(&xs, &ys).0
    } else {
        f64::NAN
    };
    Ok(PointDecayReport {
        center: center.to_vec(),
        outer_radius,
        samples,
        strictly_decreasing,
        exponent,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestedCheck {
    pub cap_inner_domain: f64,
    pub cap_outer_domain: f64,
    /// `cap_inner_domain <= cap_outer_domain + value_tolerance`.
    pub holds: bool,
}

/// Compares the condenser capacity on a subdomain `mesh_n` with the capacity
/// on `mesh_m`. Restricting an admissible field on M to N gives an admissible
/// field on N with no more energy, so `Cap_N <= Cap_M`.
///
/// `condenser` is given in `mesh_m` indices and both plates must lie in N.
/// The simplices of `mesh_n` must be simplices of `mesh_m`.
pub fn nested_domain_monotonicity_check(
    mesh_n: &SimplicialMesh,
    mesh_m: &SimplicialMesh,
    structure: &ConformalStructure,
    condenser: &Condenser,
    config: &SolverConfig,
) -> Result<NestedCheck> {
    let to_m = embed_vertices(mesh_n, mesh_m)?;
    let mut m_of_n: HashMap<usize, usize> = HashMap::new();
    for (n_idx, &m_idx) in to_m.iter().enumerate() {
        m_of_n.insert(m_idx, n_idx);
    }
    let map = |set: &NodeSet| -> Result<NodeSet> {
        set.iter()
            .map(|i| {
                m_of_n
                    .get(&i)
                    .copied()
                    .ok_or_else(|| crate::CapError::Argument(format!("plate node {i} is not in the inner domain")))
            })
            .collect()
    };
    let inner = Condenser::new(map(&condenser.plate0)?, map(&condenser.plate1)?)?;
    let cap_n = CapacitySolver::new(mesh_n, structure, config)?
        .solve(&inner, None)?
        .value;
    let cap_m = CapacitySolver::new(mesh_m, structure, config)?
        .solve(condenser, None)?
        .value;
    Ok(NestedCheck {
        cap_inner_domain: cap_n,
        cap_outer_domain: cap_m,
        holds: cap_n <= cap_m + config.value_tolerance,
    })
}

/// Index in `outer` of every vertex of `inner`, matched by exact
/// coordinates; fails unless every simplex of `inner` is one of `outer`.
fn embed_vertices(inner: &SimplicialMesh, outer: &SimplicialMesh) -> Result<Vec<usize>> {
    if inner.dim() != outer.dim() {
        return arg_err("meshes have different dimensions");
    }
    let key = |p: &[f64]| -> Vec<u64> { p.iter().map(|x| (x + 0.0).to_bits()).collect() };
    let lookup: HashMap<Vec<u64>, usize> = outer.vertices().enumerate().map(|(i, p)| (key(p), i)).collect();
    let map: Vec<usize> = inner
        .vertices()
        .map(|p| {
            lookup
                .get(&key(p))
                .copied()
                .ok_or_else(|| crate::CapError::Argument("meshes are not nested: vertex missing".into()))
        })
        .collect::<Result<_>>()?;
    let outer_simplices: HashSet<Vec<usize>> = outer
        .simplices()
        .map(|s| {
            let mut v = s.to_vec();
            v.sort_unstable();
            v
        })
        .collect();
    for s in inner.simplices() {
        let mut v: Vec<usize> = s.iter().map(|&i| map[i]).collect();
        v.sort_unstable();
        if !outer_simplices.contains(&v) {
            return arg_err("meshes are not nested: a simplex of the inner mesh is missing");
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Domain, DomainSpec};

    fn disk() -> SimplicialMesh {
        build_mesh(&DomainSpec::new(
            Domain::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            0.1,
        ))
        .unwrap()
    }

    #[test]
    fn max_combine_basics() {
        let mesh = disk();
        let f = ScalarField::from_fn(&mesh, |p| p[0].abs()).unwrap();
        assert_eq!(max_combine(&f, &f).unwrap(), f);
        let zero = ScalarField::constant(&mesh, 0.0);
        assert_eq!(max_combine(&f, &zero).unwrap(), f);
        let other = build_mesh(&DomainSpec::new(
            Domain::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            0.2,
        ))
        .unwrap();
        let g = ScalarField::constant(&other, 0.0);
        assert!(max_combine(&f, &g).is_err());
    }

    #[test]
    fn empty_compact_set_has_zero_capacity() {
        let mesh = build_mesh(
            &DomainSpec::new(
                Domain::Ball {
                    center: vec![0.0, 0.0],
                    radius: 16.0,
                },
                0.3,
            )
            .radial(Some(0.5))
            .with_shells(&[4.0]),
        )
        .unwrap();
        let family = Exhaustion::new(mesh, vec![0.0, 0.0], vec![4.0, 16.0]).unwrap();
        let report = compact_capacity(
            &family,
            &ConformalStructure::flat(),
            &NodeSet::new(),
            &SolverConfig::default(),
        )
        .unwrap();
        assert_eq!(report.values(), vec![0.0, 0.0]);
    }

    #[test]
    fn compact_set_on_boundary_is_rejected() {
        let mesh = disk();
        let k = NodeSet::from(vec![mesh.boundary_nodes().as_slice()[0]]);
        assert!(compact_capacity_bounded(&mesh, &ConformalStructure::flat(), &k, &SolverConfig::default()).is_err());
    }

    #[test]
    fn point_decay_rejects_unresolved_radius() {
        let mesh = disk();
        let err = point_capacity_decay(
            &mesh,
            &ConformalStructure::flat(),
            &[0.0, 0.0],
            &[0.5, 0.01],
            1.0,
            &SolverConfig::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("minimum resolvable radius"));
    }

    #[test]
    fn identical_meshes_give_equal_capacities() {
        let mesh = disk();
        let c = Condenser::new(mesh.select(|p| p[0] < -0.5), mesh.select(|p| p[0] > 0.5)).unwrap();
        let check =
            nested_domain_monotonicity_check(&mesh, &mesh, &ConformalStructure::flat(), &c, &SolverConfig::default())
                .unwrap();
        assert_eq!(check.cap_inner_domain, check.cap_outer_domain);
        assert!(check.holds);
    }

    #[test]
    fn non_nested_meshes_rejected() {
        let a = disk();
        let b = build_mesh(&DomainSpec::new(
            Domain::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            },
            0.07,
        ))
        .unwrap();
        let c = Condenser::new(NodeSet::new(), NodeSet::new()).unwrap();
        assert!(
            nested_domain_monotonicity_check(&a, &b, &ConformalStructure::flat(), &c, &SolverConfig::default())
                .is_err()
        );
    }
}
