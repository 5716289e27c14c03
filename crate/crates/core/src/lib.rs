//! Conformal capacities of condensers and compact sets on simplicial
//! meshes, estimates of the Ferrand pseudometric, and experiment tooling.

// Negated float comparisons such as `!(x > 0.0)` are used on purpose: they
// also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod conformal;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod ferrand;
pub mod mesh;
pub mod oracle;
pub mod solver;

mod linalg;

pub use conformal::{ConformalFactor, ConformalStructure};
pub use energy::{energy_density, energy_gradient, total_energy, EnergyBreakdown, ScalarField};
pub use error::{CapError, Result};
pub use mesh::{build_mesh, Domain, DomainSpec, Grading, NodeSet, SimplicialMesh};
pub use solver::{solve_condenser, CapacityResult, CapacitySolver, Condenser, SolverConfig};
