use std::collections::HashSet;

use super::{dist, NodeSet, SimplicialMesh};
use crate::error::Result;

impl SimplicialMesh {
    /// Uniform edge-midpoint subdivision: 1 -> 4 triangles or 1 -> 8 tetrahedra.
    ///
    /// Existing vertices keep their indices; the vertex for edge `k` (in
    /// [`edges`](Self::edges) order) gets index `num_vertices() + k`.
    /// Midpoints of boundary edges on a recorded sphere are projected onto
    /// it. A new vertex joins a region when both endpoints of its edge do.
    pub fn refine(&self) -> Result<SimplicialMesh> {
        let dim = self.dim;
        let nv = self.num_vertices();
        let edges = self.edges();
        let mid = |a: usize, b: usize| -> usize {
            let key = [a.min(b), a.max(b)];
            nv + edges.binary_search(&key).expect("edge of a simplex")
        };

        let boundary_edges: HashSet<[usize; 2]> = self
            .boundary_facets()
            .flat_map(|f| {
                let f = f.to_vec();
                let mut out = Vec::new();
                for a in 0..f.len() {
                    for b in (a + 1)..f.len() {
                        out.push([f[a].min(f[b]), f[a].max(f[b])]);
                    }
                }
                out
            })
            .collect();

        let mut coords = self.coords.clone();
        coords.reserve(edges.len() * dim);
        for edge in edges {
            let (p, q) = (self.vertex(edge[0]), self.vertex(edge[1]));
            let m: Vec<f64> = p.iter().zip(q).map(|(a, b)| 0.5 * (a + b)).collect();
            let projected = if boundary_edges.contains(edge) {
                self.spheres
                    .iter()
                    .find(|s| {
                        let tol = 1e-9 * s.radius.max(1.0);
                        s.distance_to_surface(p) <= tol && s.distance_to_surface(q) <= tol
                    })
                    .map(|s| s.project(&m))
            } else {
                None
            };
            coords.extend(projected.unwrap_or(m));
        }

        let mut simplices = Vec::with_capacity(self.simplices.len() * if dim == 2 { 4 } else { 8 });
        for s in self.simplices() {
            if dim == 2 {
                let (a, b, c) = (s[0], s[1], s[2]);
                let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
                simplices.extend([a, ab, ca, ab, b, bc, ca, bc, c, ab, bc, ca]);
            } else {
                let m01 = mid(s[0], s[1]);
                let m02 = mid(s[0], s[2]);
                let m03 = mid(s[0], s[3]);
                let m12 = mid(s[1], s[2]);
                let m13 = mid(s[1], s[3]);
                let m23 = mid(s[2], s[3]);
                simplices.extend([s[0], m01, m02, m03]);
                simplices.extend([m01, s[1], m12, m13]);
                simplices.extend([m02, m12, s[2], m23]);
                simplices.extend([m03, m13, m23, s[3]]);
                // Inner octahedron, cut along its shortest diagonal.
                let vx = |i: usize| &coords[i * dim..(i + 1) * dim];
                let options = [
                    (m01, m23, [m02, m03, m13, m12]),
                    (m02, m13, [m01, m03, m23, m12]),
                    (m03, m12, [m01, m02, m23, m13]),
                ];
                let (a, b, ring) = options
                    .iter()
                    .min_by(|x, y| dist(vx(x.0), vx(x.1)).total_cmp(&dist(vx(y.0), vx(y.1))))
                    .copied()
                    .unwrap();
                for i in 0..4 {
                    simplices.extend([a, b, ring[i], ring[(i + 1) % 4]]);
                }
            }
        }

        let tags = self
            .region_tags
            .iter()
            .map(|(tag, set)| {
                let extra = edges
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| set.contains(e[0]) && set.contains(e[1]))
                    .map(|(k, _)| nv + k);
                (tag.clone(), set.iter().chain(extra).collect::<NodeSet>())
            })
            .collect();

        SimplicialMesh::with_parts(dim, coords, simplices, tags, self.spheres.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_triangle_becomes_four() {
        let m = SimplicialMesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0, 1, 2]).unwrap();
        let r = m.refine().unwrap();
        assert_eq!(r.num_simplices(), 4);
        assert_eq!(r.num_vertices(), 6);
        assert!((r.total_volume() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn one_tet_becomes_eight() {
        let m = SimplicialMesh::new(
            3,
            vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            vec![0, 1, 2, 3],
        )
        .unwrap();
        let r = m.refine().unwrap();
        assert_eq!(r.num_simplices(), 8);
        assert_eq!(r.num_vertices(), 10);
        assert!((r.total_volume() - 1.0 / 6.0).abs() < 1e-15);
    }
}
