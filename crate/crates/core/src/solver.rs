//! Discrete condenser capacity: minimize the n-energy over nodal fields that
//! equal 0 on one plate and 1 on the other.
//!
//! The exact functional is not twice differentiable at zero gradient when
//! n = 3, so the solver minimizes the eps-regularized energy for a
//! decreasing schedule of eps, warm-starting each stage from the previous
//! one, and reports the exact energy of the final field.

use serde::{Deserialize, Serialize};

use crate::conformal::ConformalStructure;
use crate::energy::{Discretization, ScalarField};
use crate::error::{arg_err, Result};
use crate::linalg::{pcg, MeshMatrix};
use crate::mesh::{NodeSet, SimplicialMesh};

/// Pair of disjoint node sets: the field is 0 on `plate0` and 1 on `plate1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condenser {
    pub plate0: NodeSet,
    pub plate1: NodeSet,
}

impl Condenser {
    pub fn new(plate0: NodeSet, plate1: NodeSet) -> Result<Self> {
        if plate0.intersects(&plate1) {
            return arg_err("condenser plates overlap");
        }
        Ok(Condenser { plate0, plate1 })
    }

    pub fn swapped(&self) -> Condenser {
        Condenser {
            plate0: self.plate1.clone(),
            plate1: self.plate0.clone(),
        }
    }

    fn validate(&self, mesh: &SimplicialMesh) -> Result<()> {
        let nv = mesh.num_vertices();
        if self.plate0.iter().chain(self.plate1.iter()).any(|i| i >= nv) {
            return arg_err("condenser plate references a vertex outside the mesh");
        }
        if self.plate0.intersects(&self.plate1) {
            return arg_err("condenser plates overlap");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DescentMethod {
    /// Damped inexact Newton with a conjugate-gradient inner solve.
    #[default]
    Newton,
    /// Gradient descent preconditioned by the Hessian diagonal.
    PreconditionedGradient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSearch {
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub epsilon_schedule: Vec<f64>,
    /// Stopping threshold on the free-node gradient norm, relative to the
    /// norm at the initial field.
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    pub line_search: LineSearch,
    pub method: DescentMethod,
    /// Absolute tolerance used when comparing capacity values.
    pub value_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon_schedule: vec![1e-1, 1e-2, 1e-3, 1e-4],
            gradient_tolerance: 1e-8,
            max_iterations: 500,
            line_search: LineSearch::default(),
            method: DescentMethod::Newton,
            value_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon_schedule.is_empty() {
            return arg_err("epsilon_schedule must not be empty");
        }
        if self.epsilon_schedule.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return arg_err("epsilon_schedule entries must be positive");
        }
        if self.epsilon_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return arg_err("epsilon_schedule must be strictly decreasing");
        }
        if !(self.gradient_tolerance > 0.0) || !(self.value_tolerance > 0.0) {
            return arg_err("tolerances must be positive");
        }
        if self.max_iterations == 0 {
            return arg_err("max_iterations must be positive");
        }
        let ls = &self.line_search;
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) || !(ls.sufficient_decrease > 0.0 && ls.sufficient_decrease < 1.0) {
            return arg_err("line search parameters must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageDiagnostics {
    pub epsilon: f64,
    pub iterations: usize,
    pub inner_iterations: usize,
    pub final_gradient_norm: f64,
    pub energy_history: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    /// Exact (eps = 0) energy of `field`.
    pub value: f64,
    pub field: ScalarField,
    pub stages: Vec<StageDiagnostics>,
    pub admissible: bool,
}

impl CapacityResult {
    pub fn converged(&self) -> bool {
        self.stages.iter().all(|s| s.converged)
    }

    pub fn iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }

    pub fn final_gradient_norm(&self) -> f64 {
        self.stages.last().map_or(0.0, |s| s.final_gradient_norm)
    }

    pub fn final_epsilon(&self) -> f64 {
        self.stages.last().map_or(0.0, |s| s.epsilon)
    }
}

/// Reusable solver state for many condensers on one mesh and structure.
pub struct CapacitySolver<'m> {
    mesh: &'m SimplicialMesh,
    disc: Discretization,
    matrix: MeshMatrix,
    config: SolverConfig,
    blocks: Vec<f64>,
}

impl<'m> CapacitySolver<'m> {
    pub fn new(mesh: &'m SimplicialMesh, structure: &ConformalStructure, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        let disc = Discretization::new(mesh, structure)?;
        let matrix = MeshMatrix::new(&disc);
        Ok(CapacitySolver {
            mesh,
            disc,
            matrix,
            config: config.clone(),
            blocks: Vec::new(),
        })
    }

    pub fn mesh(&self) -> &SimplicialMesh {
        self.mesh
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn discretization(&self) -> &Discretization {
        &self.disc
    }

    /// Exact energy of a field on this solver's mesh.
    pub fn exact_energy(&self, field: &ScalarField) -> Result<f64> {
        field.check_mesh(self.mesh)?;
        Ok(self.disc.energy(&field.values, 0.0))
    }

    /// Solves the condenser problem, optionally warm-starting from `start`.
    pub fn solve(&mut self, condenser: &Condenser, start: Option<&ScalarField>) -> Result<CapacityResult> {
        condenser.validate(self.mesh)?;
        let nv = self.mesh.num_vertices();
        if condenser.plate1.is_empty() || condenser.plate0.is_empty() {
            let c = if condenser.plate1.is_empty() { 0.0 } else { 1.0 };
            return Ok(CapacityResult {
                value: 0.0,
                field: ScalarField::constant(self.mesh, c),
                stages: Vec::new(),
                admissible: true,
            });
        }
        let mut fixed = vec![false; nv];
        for i in condenser.plate0.iter().chain(condenser.plate1.iter()) {
            fixed[i] = true;
        }
        let free: Vec<bool> = fixed.iter().map(|f| !f).collect();
        let mut u = match start {
            Some(f) => {
                f.check_mesh(self.mesh)?;
                f.values.iter().map(|v| v.clamp(0.0, 1.0)).collect()
            }
            None => self.jacobi_start(condenser),
        };
        for i in condenser.plate0.iter() {
            u[i] = 0.0;
        }
        for i in condenser.plate1.iter() {
            u[i] = 1.0;
        }

        let mut grad = vec![0.0; nv];
        self.disc.gradient_into(&u, self.config.epsilon_schedule[0], &mut grad);
        let g0 = masked_norm(&grad, &free);
        let target = self.config.gradient_tolerance * g0;

        let mut stages = Vec::with_capacity(self.config.epsilon_schedule.len());
        for &eps in &self.config.epsilon_schedule.clone() {
            stages.push(self.run_stage(eps, &free, &mut u, &mut grad, target, g0));
            for v in u.iter_mut() {
                *v = v.clamp(0.0, 1.0);
            }
        }
        let value = self.disc.energy(&u, 0.0);
        let admissible = condenser.plate0.iter().all(|i| u[i] == 0.0)
            && condenser.plate1.iter().all(|i| u[i] == 1.0)
            && u.iter().all(|v| (0.0..=1.0).contains(v));
        Ok(CapacityResult {
            value,
            field: ScalarField::new(self.mesh, u)?,
            stages,
            admissible,
        })
    }

    /// Indicator of `plate1` followed by one Jacobi averaging pass on free nodes.
    fn jacobi_start(&self, condenser: &Condenser) -> Vec<f64> {
        let nv = self.mesh.num_vertices();
        let indicator: Vec<f64> = (0..nv)
            .map(|i| if condenser.plate1.contains(i) { 1.0 } else { 0.0 })
            .collect();
        (0..nv)
            .map(|i| {
                let nb = self.mesh.neighbors(i);
                if nb.is_empty() {
                    indicator[i]
                } else {
                    nb.iter().map(|&j| indicator[j]).sum::<f64>() / nb.len() as f64
                }
            })
            .collect()
    }

    fn run_stage(
        &mut self,
        eps: f64,
        free: &[bool],
        u: &mut [f64],
        grad: &mut [f64],
        target: f64,
        g0: f64,
    ) -> StageDiagnostics {
        let nv = u.len();
        let ls = self.config.line_search.clone();
        let mut energy = self.disc.energy(u, eps);
        let mut history = vec![energy];
        let mut direction = vec![0.0; nv];
        let mut trial = vec![0.0; nv];
        let mut inner = 0;
        let mut iterations = 0;
        let mut converged = false;
        let mut step_hint: f64 = 1.0;
        let mut gnorm;
        loop {
            self.disc.gradient_into(u, eps, grad);
            gnorm = masked_norm(grad, free);
            if gnorm <= target || g0 == 0.0 {
                converged = true;
                break;
            }
            if iterations >= self.config.max_iterations {
                break;
            }
            self.disc.element_hessians(u, eps, &mut self.blocks);
            self.matrix.assemble(&self.blocks);
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            match self.config.method {
                DescentMethod::Newton => {
                    let rtol = (gnorm / g0).min(0.1);
                    let out = pcg(&self.matrix, &rhs, free, rtol, 4 * nv + 100, &mut direction);
                    inner += out.iterations;
                    log::trace!(
                        "pcg: {} iterations, relative residual {:.2e}",
                        out.iterations,
                        out.relative_residual
                    );
                }
                DescentMethod::PreconditionedGradient => {
                    let diag = self.matrix.diagonal();
                    for i in 0..nv {
                        direction[i] = if free[i] && diag[i] > 0.0 {
                            rhs[i] / diag[i]
                        } else {
                            0.0
                        };
                    }
                }
            }
            let mut slope: f64 = (0..nv).filter(|&i| free[i]).map(|i| grad[i] * direction[i]).sum();
            if !(slope < 0.0) {
                // Fall back to steepest descent.
                for i in 0..nv {
                    direction[i] = if free[i] { rhs[i] } else { 0.0 };
                }
                slope = -gnorm * gnorm;
            }
            // Newton decrement below what the energy can resolve in floating point.
            if self.config.method == DescentMethod::Newton && -slope <= 64.0 * f64::EPSILON * energy.abs() {
                converged = true;
                break;
            }
            let mut t = match self.config.method {
                DescentMethod::Newton => 1.0,
                DescentMethod::PreconditionedGradient => (step_hint * 2.0).min(1.0),
            };
            let mut accepted = false;
            let before = energy;
            for _ in 0..=ls.max_backtracks {
                for i in 0..nv {
                    trial[i] = u[i] + t * direction[i];
                }
                let e_new = self.disc.energy(&trial, eps);
                if e_new <= energy + ls.sufficient_decrease * t * slope {
                    u.copy_from_slice(&trial);
                    energy = e_new;
                    accepted = true;
                    break;
                }
                t *= ls.shrink;
            }
            iterations += 1;
            if !accepted || energy >= before {
                // No representable decrease left along the descent direction.
                // The predicted remaining decrease decides convergence.
                converged = -slope <= STALL_DECREMENT * before.abs();
                log::debug!("stage eps={eps} stalled: slope {slope:.3e}, gradient {gnorm:.3e}, converged {converged}");
                break;
            }
            step_hint = t;
            history.push(energy);
        }
        StageDiagnostics {
            epsilon: eps,
            iterations,
            inner_iterations: inner,
            final_gradient_norm: gnorm,
            energy_history: history,
            converged,
        }
    }
}

/// Relative Newton decrement accepted as converged once the line search can
/// no longer lower the energy.
const STALL_DECREMENT: f64 = 1e-10;

fn masked_norm(v: &[f64], mask: &[bool]) -> f64 {
    v.iter()
        .zip(mask)
        .filter(|(_, m)| **m)
        .map(|(x, _)| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Capacity of `condenser` on `mesh` under `structure`.
pub fn solve_condenser(
    mesh: &SimplicialMesh,
    structure: &ConformalStructure,
    condenser: &Condenser,
    config: &SolverConfig,
) -> Result<CapacityResult> {
    CapacitySolver::new(mesh, structure, config)?.solve(condenser, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Domain, DomainSpec};

    fn square() -> SimplicialMesh {
        build_mesh(&DomainSpec::new(
            Domain::Box {
                min: vec![0.0, 0.0],
                max: vec![1.0, 1.0],
            },
            0.1,
        ))
        .unwrap()
    }

    #[test]
    fn parallel_plates_in_unit_square() {
        // Linear field is the exact minimizer; energy = 1 for n = 2.
        let mesh = square();
        let c = Condenser::new(mesh.select(|p| p[0] < 1e-12), mesh.select(|p| p[0] > 1.0 - 1e-12)).unwrap();
        let r = solve_condenser(&mesh, &ConformalStructure::flat(), &c, &SolverConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-9, "value {}", r.value);
        assert!(r.admissible && r.converged());
    }

    #[test]
    fn overlapping_plates_rejected() {
        let a = NodeSet::from(vec![1, 2]);
        let b = NodeSet::from(vec![2, 3]);
        assert!(Condenser::new(a, b).is_err());
    }

    #[test]
    fn empty_plates_give_zero() {
        let mesh = square();
        let s = ConformalStructure::flat();
        let cfg = SolverConfig::default();
        let only0 = Condenser::new(mesh.boundary_nodes().clone(), NodeSet::new()).unwrap();
        let r = solve_condenser(&mesh, &s, &only0, &cfg).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.field.values.iter().all(|&v| v == 0.0));
        let only1 = Condenser::new(NodeSet::new(), mesh.boundary_nodes().clone()).unwrap();
        let r = solve_condenser(&mesh, &s, &only1, &cfg).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.field.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = SolverConfig {
            epsilon_schedule: vec![1e-2, 1e-1],
            ..SolverConfig::default()
        };
        assert!(cfg.validate().is_err());
        cfg.epsilon_schedule = vec![];
        assert!(cfg.validate().is_err());
        cfg = SolverConfig::default();
        cfg.gradient_tolerance = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn energy_history_is_monotone_within_stages() {
        let mesh = build_mesh(&DomainSpec::new(
            Domain::Annulus {
                center: vec![0.0; 3],
                inner: 0.25,
                outer: 1.0,
            },
            0.2,
        ))
        .unwrap();
        let c = Condenser::new(
            mesh.select(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt() < 0.25 + 1e-9),
            mesh.select(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt() > 1.0 - 1e-9),
        )
        .unwrap();
        let r = solve_condenser(&mesh, &ConformalStructure::flat(), &c, &SolverConfig::default()).unwrap();
        for stage in &r.stages {
            assert!(stage.energy_history.windows(2).all(|w| w[1] <= w[0]));
        }
        assert!(r.admissible);
    }
}
