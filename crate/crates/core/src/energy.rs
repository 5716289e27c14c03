//! The conformally invariant n-energy of piecewise-linear fields.
//!
//! On each simplex the field gradient `G` is constant. In the local metric
//! `exp(2 phi) delta` its norm is `exp(-phi)|G|` and the volume element is
//! `exp(n phi) dx`, so the density `|grad f|_g^n dV_g` reduces to
//! `|G|^n vol` exactly at the quadrature point.
//!
//! The regularized density is `((eps_g^2 + |G|_g^2)^(n/2) - eps_g^n) vol_g`
//! with `eps_g = exp(-phi) eps`: the floor `eps` is a chart-gradient scale,
//! which keeps the regularized energy conformally invariant as well.

use serde::{Deserialize, Serialize};

use crate::conformal::ConformalStructure;
use crate::error::{arg_err, CapError, Result};
use crate::mesh::{NodeSet, SimplicialMesh};

/// Piecewise-linear nodal field on a mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarField {
    pub values: Vec<f64>,
    #[serde(skip)]
    mesh_fingerprint: u64,
    /// Always true: every field on a bounded mesh has compact support.
    pub compact_support: bool,
}

impl ScalarField {
    pub fn new(mesh: &SimplicialMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_vertices() {
            return arg_err(format!(
                "field has {} values but the mesh has {} vertices",
                values.len(),
                mesh.num_vertices()
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return arg_err(format!("field value at vertex {i} is not finite"));
        }
        Ok(ScalarField {
            values,
            mesh_fingerprint: mesh.fingerprint(),
            compact_support: true,
        })
    }

    pub fn constant(mesh: &SimplicialMesh, c: f64) -> Self {
        ScalarField {
            values: vec![c; mesh.num_vertices()],
            mesh_fingerprint: mesh.fingerprint(),
            compact_support: true,
        }
    }

    pub fn from_fn(mesh: &SimplicialMesh, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        Self::new(mesh, mesh.vertices().map(f).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mesh_fingerprint(&self) -> u64 {
        self.mesh_fingerprint
    }

    pub(crate) fn check_mesh(&self, mesh: &SimplicialMesh) -> Result<()> {
        if self.mesh_fingerprint != mesh.fingerprint() || self.values.len() != mesh.num_vertices() {
            return arg_err("field is defined on a different mesh");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub total: f64,
    pub per_simplex: Vec<f64>,
    pub regularization_epsilon: f64,
}

/// Per-simplex data needed for energy, gradient and Hessian evaluation.
#[derive(Debug, Clone)]
pub struct Discretization {
    dim: usize,
    num_vertices: usize,
    elements: Vec<usize>,
    volume: Vec<f64>,
    /// Barycentric gradients, `(dim + 1) * dim` entries per element.
    basis_grad: Vec<f64>,
    /// `exp(-phi)` at the centroid.
    grad_scale: Vec<f64>,
    /// `exp(n phi)` at the centroid.
    vol_scale: Vec<f64>,
    mesh_fingerprint: u64,
}

impl Discretization {
    pub fn new(mesh: &SimplicialMesh, structure: &ConformalStructure) -> Result<Self> {
        let dim = mesh.dim();
        let phi = structure.sample(mesh)?;
        let ne = mesh.num_simplices();
        let mut volume = Vec::with_capacity(ne);
        let mut basis_grad = Vec::with_capacity(ne * (dim + 1) * dim);
        for e in 0..ne {
            let s = mesh.simplex(e);
            let x0 = mesh.vertex(s[0]);
            // Columns of J are x_i - x_0; rows of J^{-1} are grad lambda_i.
            let mut jac = [[0.0; 3]; 3];
            for (c, &vi) in s[1..].iter().enumerate() {
                let xi = mesh.vertex(vi);
                for r in 0..dim {
                    jac[r][c] = xi[r] - x0[r];
                }
            }
            let (inv, det) = invert(dim, &jac);
            volume.push(det.abs() / if dim == 2 { 2.0 } else { 6.0 });
            let mut g0 = [0.0; 3];
            for row in inv.iter().take(dim) {
                for d in 0..dim {
                    g0[d] -= row[d];
                }
            }
            basis_grad.extend_from_slice(&g0[..dim]);
            for row in inv.iter().take(dim) {
                basis_grad.extend_from_slice(&row[..dim]);
            }
        }
        let n = dim as f64;
        Ok(Discretization {
            dim,
            num_vertices: mesh.num_vertices(),
            elements: mesh.simplices().flatten().copied().collect(),
            volume,
            basis_grad,
            grad_scale: phi.iter().map(|p| (-p).exp()).collect(),
            vol_scale: phi.iter().map(|p| (n * p).exp()).collect(),
            mesh_fingerprint: mesh.fingerprint(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_elements(&self) -> usize {
        self.volume.len()
    }

    pub(crate) fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.elements[e * k..(e + 1) * k]
    }

    fn basis(&self, e: usize) -> &[f64] {
        let w = (self.dim + 1) * self.dim;
        &self.basis_grad[e * w..(e + 1) * w]
    }

    pub(crate) fn check_field(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_vertices {
            return arg_err("field length does not match the discretization");
        }
        Ok(())
    }

    pub fn mesh_fingerprint(&self) -> u64 {
        self.mesh_fingerprint
    }

    /// Euclidean element gradient of the linear interpolant.
    fn element_gradient(&self, e: usize, values: &[f64]) -> [f64; 3] {
        let mut g = [0.0; 3];
        let b = self.basis(e);
        for (a, &v) in self.element(e).iter().enumerate() {
            let u = values[v];
            for d in 0..self.dim {
                g[d] += u * b[a * self.dim + d];
            }
        }
        g
    }

    /// Regularized density of element `e` given its Euclidean gradient.
    fn density(&self, e: usize, g: &[f64; 3], eps: f64) -> f64 {
        let down = self.grad_scale[e];
        let vol_g = self.vol_scale[e] * self.volume[e];
        let g2 = g.iter().map(|x| x * x).sum::<f64>() * down * down;
        match self.dim {
            2 => g2 * vol_g,
            _ => {
                let b = eps * down;
                let a = (b * b + g2).sqrt();
                if a == 0.0 {
                    0.0
                } else {
                    // a^3 - b^3 written without cancellation.
                    g2 * (a * a + a * b + b * b) / (a + b) * vol_g
                }
            }
        }
    }

    /// `dW/dG` as a multiple of `G`: the density gradient is `coef * G`.
    fn density_slope(&self, e: usize, g: &[f64; 3], eps: f64) -> f64 {
        let down = self.grad_scale[e];
        let vol_g = self.vol_scale[e] * self.volume[e];
        let n = self.dim as f64;
        let s = (eps * eps + g.iter().map(|x| x * x).sum::<f64>()) * down * down;
        n * s.powf((n - 2.0) / 2.0) * down * down * vol_g
    }

    pub fn energy(&self, values: &[f64], eps: f64) -> f64 {
        (0..self.num_elements())
            .map(|e| self.density(e, &self.element_gradient(e, values), eps))
            .sum()
    }

    pub fn per_element_energy(&self, values: &[f64], eps: f64) -> Vec<f64> {
        (0..self.num_elements())
            .map(|e| self.density(e, &self.element_gradient(e, values), eps))
            .collect()
    }

    fn check_gradient_defined(&self, values: &[f64], eps: f64) -> Result<()> {
        if eps == 0.0 && self.dim > 2 {
            for e in 0..self.num_elements() {
                let g = self.element_gradient(e, values);
                if g.iter().all(|&x| x == 0.0) {
                    return arg_err(format!(
                        "energy gradient is undefined at eps = 0: element {e} has zero gradient; regularize with eps > 0"
                    ));
                }
            }
        }
        Ok(())
    }

    /// Derivative of the regularized energy with respect to every nodal value.
    pub fn gradient(&self, values: &[f64], eps: f64) -> Result<Vec<f64>> {
        self.check_field(values)?;
        self.check_gradient_defined(values, eps)?;
        let mut out = vec![0.0; self.num_vertices];
        self.gradient_into(values, eps, &mut out);
        Ok(out)
    }

    pub(crate) fn gradient_into(&self, values: &[f64], eps: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|x| *x = 0.0);
        let dim = self.dim;
        for e in 0..self.num_elements() {
            let g = self.element_gradient(e, values);
            let coef = self.density_slope(e, &g, eps);
            if coef == 0.0 || !coef.is_finite() {
                continue;
            }
            let b = self.basis(e);
            for (a, &v) in self.element(e).iter().enumerate() {
                let dot: f64 = (0..dim).map(|d| g[d] * b[a * dim + d]).sum();
                out[v] += coef * dot;
            }
        }
    }

    /// Element Hessian blocks, `(dim+1)^2` entries per element, row-major.
    pub(crate) fn element_hessians(&self, values: &[f64], eps: f64, out: &mut Vec<f64>) {
        let dim = self.dim;
        let k = dim + 1;
        let n = dim as f64;
        out.clear();
        out.reserve(self.num_elements() * k * k);
        for e in 0..self.num_elements() {
            let g = self.element_gradient(e, values);
            let down = self.grad_scale[e];
            let vol_g = self.vol_scale[e] * self.volume[e];
            let s = (eps * eps + g.iter().map(|x| x * x).sum::<f64>()) * down * down;
            let w = n * down * down * vol_g;
            // W'' = w (s^{(n-2)/2} I + (n-2) s^{(n-4)/2} down^2 G G^T)
            let (iso, rank1) = if dim == 2 {
                (w, 0.0)
            } else if s > 0.0 {
                (w * s.sqrt(), w * (n - 2.0) * down * down / s.sqrt())
            } else {
                (0.0, 0.0)
            };
            let b = self.basis(e);
            for a in 0..k {
                let ba = &b[a * dim..(a + 1) * dim];
                let ga: f64 = (0..dim).map(|d| g[d] * ba[d]).sum();
                for c in 0..k {
                    let bc = &b[c * dim..(c + 1) * dim];
                    let gc: f64 = (0..dim).map(|d| g[d] * bc[d]).sum();
                    let dot: f64 = (0..dim).map(|d| ba[d] * bc[d]).sum();
                    out.push(iso * dot + rank1 * ga * gc);
                }
            }
        }
    }
}

fn invert(dim: usize, m: &[[f64; 3]; 3]) -> ([[f64; 3]; 3], f64) {
    let mut inv = [[0.0; 3]; 3];
    if dim == 2 {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        inv[0][0] = m[1][1] / det;
        inv[0][1] = -m[0][1] / det;
        inv[1][0] = -m[1][0] / det;
        inv[1][1] = m[0][0] / det;
        (inv, det)
    } else {
        let c = |r: usize, col: usize| {
            let (r1, r2) = ((r + 1) % 3, (r + 2) % 3);
            let (c1, c2) = ((col + 1) % 3, (col + 2) % 3);
            m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]
        };
        let det = m[0][0] * c(0, 0) + m[0][1] * c(0, 1) + m[0][2] * c(0, 2);
        for r in 0..3 {
            for col in 0..3 {
                inv[r][col] = c(col, r) / det;
            }
        }
        (inv, det)
    }
}

/// Exact (`eps = 0`) energy density of simplex `e`.
pub fn energy_density(
    mesh: &SimplicialMesh,
    field: &ScalarField,
    simplex: usize,
    structure: &ConformalStructure,
) -> Result<f64> {
    field.check_mesh(mesh)?;
    if simplex >= mesh.num_simplices() {
        return arg_err(format!("simplex index {simplex} out of range"));
    }
    let one = SimplicialMesh::new(
        mesh.dim(),
        mesh.simplex(simplex)
            .iter()
            .flat_map(|&v| mesh.vertex(v).to_vec())
            .collect(),
        (0..=mesh.dim()).collect(),
    )?;
    let local: Vec<f64> = mesh.simplex(simplex).iter().map(|&v| field.values[v]).collect();
    let disc = Discretization::new(&one, structure)?;
    Ok(disc.energy(&local, 0.0))
}

pub fn total_energy(
    mesh: &SimplicialMesh,
    field: &ScalarField,
    structure: &ConformalStructure,
    eps: f64,
) -> Result<EnergyBreakdown> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return arg_err(format!("epsilon must be non-negative, got {eps}"));
    }
    field.check_mesh(mesh)?;
    let disc = Discretization::new(mesh, structure)?;
    let per_simplex = disc.per_element_energy(&field.values, eps);
    Ok(EnergyBreakdown {
        total: per_simplex.iter().sum(),
        per_simplex,
        regularization_epsilon: eps,
    })
}

/// Gradient of the regularized energy restricted to `free_nodes`, in the
/// order of the node set.
pub fn energy_gradient(
    mesh: &SimplicialMesh,
    field: &ScalarField,
    structure: &ConformalStructure,
    eps: f64,
    free_nodes: &NodeSet,
) -> Result<Vec<f64>> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return arg_err(format!("epsilon must be non-negative, got {eps}"));
    }
    field.check_mesh(mesh)?;
    if free_nodes.iter().any(|i| i >= mesh.num_vertices()) {
        return Err(CapError::Argument("free node out of range".into()));
    }
    let disc = Discretization::new(mesh, structure)?;
    let full = disc.gradient(&field.values, eps)?;
    Ok(free_nodes.iter().map(|i| full[i]).collect())
}
