//! Sparse symmetric matrices on the mesh graph and a Jacobi-preconditioned
//! conjugate gradient solver.

use crate::energy::Discretization;

/// CSR matrix whose sparsity is the vertex graph plus the diagonal.
#[derive(Debug, Clone)]
pub(crate) struct MeshMatrix {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    pub(crate) vals: Vec<f64>,
    diag_slot: Vec<usize>,
    /// Position in `vals` of every local (a, c) pair of every element.
    element_slots: Vec<usize>,
}

impl MeshMatrix {
    pub(crate) fn new(disc: &Discretization) -> Self {
        let nv = disc.num_vertices();
        let k = disc.dim() + 1;
        let mut rows: Vec<Vec<usize>> = (0..nv).map(|i| vec![i]).collect();
        for e in 0..disc.num_elements() {
            let el = disc.element(e);
            for &a in el {
                rows[a].extend(el.iter().copied());
            }
        }
        let mut offsets = Vec::with_capacity(nv + 1);
        let mut cols = Vec::new();
        offsets.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            offsets.push(cols.len());
        }
        let slot = |r: usize, c: usize| -> usize {
            let row = &cols[offsets[r]..offsets[r + 1]];
            offsets[r] + row.binary_search(&c).expect("pattern contains element pairs")
        };
        let diag_slot = (0..nv).map(|i| slot(i, i)).collect();
        let mut element_slots = Vec::with_capacity(disc.num_elements() * k * k);
        for e in 0..disc.num_elements() {
            let el = disc.element(e);
            for &a in el {
                for &c in el {
                    element_slots.push(slot(a, c));
                }
            }
        }
        let nnz = cols.len();
        MeshMatrix {
            offsets,
            cols,
            vals: vec![0.0; nnz],
            diag_slot,
            element_slots,
        }
    }

    pub(crate) fn assemble(&mut self, blocks: &[f64]) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
        for (slot, v) in self.element_slots.iter().zip(blocks) {
            self.vals[*slot] += v;
        }
    }

    pub(crate) fn diagonal(&self) -> Vec<f64> {
        self.diag_slot.iter().map(|&s| self.vals[s]).collect()
    }

    /// `y = A x` restricted to rows and columns where `free` is set.
    fn masked_mul(&self, x: &[f64], free: &[bool], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            if !free[i] {
                *yi = 0.0;
                continue;
            }
            let mut acc = 0.0;
            for s in self.offsets[i]..self.offsets[i + 1] {
                acc += self.vals[s] * x[self.cols[s]];
            }
            *yi = acc;
        }
    }
}

pub(crate) struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` on the free unknowns. Entries of `x` outside the free
/// set are zero on return.
pub(crate) fn pcg(a: &MeshMatrix, b: &[f64], free: &[bool], rtol: f64, max_iter: usize, x: &mut [f64]) -> CgOutcome {
    let n = b.len();
    let diag = a.diagonal();
    let inv_diag: Vec<f64> = diag
        .iter()
        .zip(free)
        .map(|(&d, &f)| if f && d > 0.0 { 1.0 / d } else { 0.0 })
        .collect();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r: Vec<f64> = b.iter().zip(free).map(|(&bi, &f)| if f { bi } else { 0.0 }).collect();
    let b_norm = dot(&r, &r).sqrt();
    if b_norm == 0.0 {
        return CgOutcome {
            iterations: 0,
            relative_residual: 0.0,
        };
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, di)| ri * di).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut it = 0;
    let mut rel = 1.0;
    while it < max_iter {
        a.masked_mul(&p, free, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= rtol {
            break;
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgOutcome {
        iterations: it,
        relative_residual: rel,
    }
}
