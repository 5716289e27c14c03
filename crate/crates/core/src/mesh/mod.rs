//! Simplicial meshes of flat-chart domains in two and three dimensions.
//!
//! A [`SimplicialMesh`] owns its vertex coordinates, positively oriented
//! simplices, the boundary node set, and named node regions. Meshes are
//! immutable once built; every operation that changes them returns a new
//! value.

mod generate;
mod io;
mod refine;

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{arg_err, CapError, Result};

pub use generate::{build_mesh, Domain, DomainSpec, Grading};
pub use io::{read_mesh, write_mesh};

/// Sorted, duplicate-free set of vertex indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeSet(Vec<usize>);

impl NodeSet {
    pub fn new() -> Self {
        NodeSet(Vec::new())
    }

    pub fn contains(&self, node: usize) -> bool {
        self.0.binary_search(&node).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn union(&self, other: &NodeSet) -> NodeSet {
        self.iter().chain(other.iter()).collect()
    }

    pub fn intersects(&self, other: &NodeSet) -> bool {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().any(|n| large.contains(n))
    }

    pub fn is_subset(&self, other: &NodeSet) -> bool {
        self.iter().all(|n| other.contains(n))
    }

    /// Boolean membership mask over `n` vertices.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut mask = vec![false; n];
        for i in self.iter() {
            mask[i] = true;
        }
        mask
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        NodeSet(v)
    }
}

impl From<Vec<usize>> for NodeSet {
    fn from(v: Vec<usize>) -> Self {
        v.into_iter().collect()
    }
}

/// A spherical piece of the domain boundary. New boundary vertices created by
/// refinement are projected back onto it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Sphere {
    fn distance_to_surface(&self, p: &[f64]) -> f64 {
        (dist(p, &self.center) - self.radius).abs()
    }

    fn project(&self, p: &[f64]) -> Vec<f64> {
        let d = dist(p, &self.center);
        p.iter()
            .zip(&self.center)
            .map(|(x, c)| c + (x - c) * self.radius / d)
            .collect()
    }
}

/// Euclidean distance.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Signed `n!`-scaled volume of a simplex given its vertex coordinates.
pub(crate) fn signed_det(dim: usize, pts: &[&[f64]]) -> f64 {
    match dim {
        2 => {
            let (a, b, c) = (pts[0], pts[1], pts[2]);
            (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        }
        3 => {
            let a = pts[0];
            let u: Vec<[f64; 3]> = pts[1..]
                .iter()
                .map(|p| [p[0] - a[0], p[1] - a[1], p[2] - a[2]])
                .collect();
            u[0][0] * (u[1][1] * u[2][2] - u[1][2] * u[2][1]) - u[0][1] * (u[1][0] * u[2][2] - u[1][2] * u[2][0])
                + u[0][2] * (u[1][0] * u[2][1] - u[1][1] * u[2][0])
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

type FacetKey = [usize; 3];

fn facet_key(nodes: &[usize]) -> FacetKey {
    let mut key = [usize::MAX; 3];
    key[..nodes.len()].copy_from_slice(nodes);
    key[..nodes.len()].sort_unstable();
    key
}

/// A conforming simplicial mesh of a domain in R^2 or R^3.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    simplices: Vec<usize>,
    boundary_nodes: NodeSet,
    boundary_facets: Vec<FacetKey>,
    region_tags: BTreeMap<String, NodeSet>,
    spheres: Vec<Sphere>,
    edges: Vec<[usize; 2]>,
    adj_offsets: Vec<usize>,
    adj: Vec<usize>,
    fingerprint: u64,
}

impl SimplicialMesh {
    /// Builds a mesh from flat coordinate and connectivity arrays.
    ///
    /// Simplices are reoriented to positive volume. Degenerate simplices,
    /// out-of-range indices and facets shared by more than two simplices are
    /// rejected.
    pub fn new(dim: usize, coords: Vec<f64>, simplices: Vec<usize>) -> Result<Self> {
        Self::with_parts(dim, coords, simplices, BTreeMap::new(), Vec::new())
    }

    pub(crate) fn with_parts(
        dim: usize,
        coords: Vec<f64>,
        mut simplices: Vec<usize>,
        region_tags: BTreeMap<String, NodeSet>,
        spheres: Vec<Sphere>,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(CapError::InvalidMesh(format!("dimension must be 2 or 3, got {dim}")));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(CapError::InvalidMesh(
                "coordinate array length is not a multiple of the dimension".into(),
            ));
        }
        let nv = coords.len() / dim;
        let k = dim + 1;
        if !simplices.len().is_multiple_of(k) || simplices.is_empty() {
            return Err(CapError::InvalidMesh(
                "simplex array is empty or not a multiple of dim+1".into(),
            ));
        }
        if let Some(&bad) = simplices.iter().find(|&&i| i >= nv) {
            return Err(CapError::InvalidMesh(format!(
                "simplex references vertex {bad} but mesh has {nv} vertices"
            )));
        }
        for (tag, set) in &region_tags {
            if set.iter().any(|i| i >= nv) {
                return Err(CapError::InvalidMesh(format!(
                    "region '{tag}' references a vertex out of range"
                )));
            }
        }

        // Orientation and degeneracy.
        let scale = bounding_extent(dim, &coords).max(f64::MIN_POSITIVE);
        for (e, s) in simplices.chunks_mut(k).enumerate() {
            let pts: Vec<&[f64]> = s.iter().map(|&i| &coords[i * dim..(i + 1) * dim]).collect();
            let det = signed_det(dim, &pts);
            let local = pts.iter().skip(1).map(|p| dist(p, pts[0])).fold(0.0_f64, f64::max);
            if !(det.abs() > 1e-12 * local.powi(dim as i32)) || local < 1e-14 * scale {
                return Err(CapError::InvalidMesh(format!(
                    "simplex {e} is degenerate (det = {det:e})"
                )));
            }
            if det < 0.0 {
                s.swap(0, 1);
            }
        }

        // Facets and boundary.
        let mut facet_count: HashMap<FacetKey, u32> = HashMap::new();
        let mut scratch = Vec::with_capacity(dim);
        for s in simplices.chunks(k) {
            for skip in 0..k {
                scratch.clear();
                scratch.extend(s.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, &v)| v));
                *facet_count.entry(facet_key(&scratch)).or_insert(0) += 1;
            }
        }
        let mut boundary_facets = Vec::new();
        for (key, count) in &facet_count {
            if *count > 2 {
                return Err(CapError::InvalidMesh(format!(
                    "facet {:?} is shared by {count} simplices",
                    &key[..dim]
                )));
            }
            if *count == 1 {
                boundary_facets.push(*key);
            }
        }
        boundary_facets.sort_unstable();
        let boundary_nodes: NodeSet = boundary_facets.iter().flat_map(|f| f[..dim].iter().copied()).collect();

        // Edges and vertex adjacency.
        let mut edges: Vec<[usize; 2]> = Vec::with_capacity(simplices.len() / k * 6);
        for s in simplices.chunks(k) {
            for a in 0..k {
                for b in (a + 1)..k {
                    let (i, j) = (s[a].min(s[b]), s[a].max(s[b]));
                    edges.push([i, j]);
                }
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let mut degree = vec![0usize; nv];
        for &[i, j] in &edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut adj_offsets = vec![0usize; nv + 1];
        for i in 0..nv {
            adj_offsets[i + 1] = adj_offsets[i] + degree[i];
        }
        let mut fill = adj_offsets.clone();
        let mut adj = vec![0usize; adj_offsets[nv]];
        for &[i, j] in &edges {
            adj[fill[i]] = j;
            fill[i] += 1;
            adj[fill[j]] = i;
            fill[j] += 1;
        }
        for i in 0..nv {
            adj[adj_offsets[i]..adj_offsets[i + 1]].sort_unstable();
        }

        let mut hasher = DefaultHasher::new();
        dim.hash(&mut hasher);
        for c in &coords {
            c.to_bits().hash(&mut hasher);
        }
        simplices.hash(&mut hasher);
        let fingerprint = hasher.finish();

        Ok(SimplicialMesh {
            dim,
            coords,
            simplices,
            boundary_nodes,
            boundary_facets,
            region_tags,
            spheres,
            edges,
            adj_offsets,
            adj,
            fingerprint,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_vertices(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn num_simplices(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn simplex(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.simplices[e * k..(e + 1) * k]
    }

    pub fn simplices(&self) -> impl Iterator<Item = &[usize]> {
        self.simplices.chunks(self.dim + 1)
    }

    pub fn boundary_nodes(&self) -> &NodeSet {
        &self.boundary_nodes
    }

    pub(crate) fn boundary_facets(&self) -> impl Iterator<Item = &[usize]> {
        let d = self.dim;
        self.boundary_facets.iter().map(move |f| &f[..d])
    }

    pub fn region_tags(&self) -> &BTreeMap<String, NodeSet> {
        &self.region_tags
    }

    pub fn region(&self, tag: &str) -> Option<&NodeSet> {
        self.region_tags.get(tag)
    }

    pub fn spheres(&self) -> &[Sphere] {
        &self.spheres
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[self.adj_offsets[i]..self.adj_offsets[i + 1]]
    }

    pub fn are_adjacent(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Identity hash of geometry and connectivity; used to catch fields
    /// evaluated on the wrong mesh.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Euclidean volume (area for n = 2) of simplex `e`.
    pub fn simplex_volume(&self, e: usize) -> f64 {
        let pts: Vec<&[f64]> = self.simplex(e).iter().map(|&i| self.vertex(i)).collect();
        signed_det(self.dim, &pts) / factorial(self.dim)
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_simplices()).map(|e| self.simplex_volume(e)).sum()
    }

    pub fn simplex_centroid(&self, e: usize) -> Vec<f64> {
        let k = (self.dim + 1) as f64;
        let mut c = vec![0.0; self.dim];
        for &i in self.simplex(e) {
            for (cj, xj) in c.iter_mut().zip(self.vertex(i)) {
                *cj += xj;
            }
        }
        c.iter_mut().for_each(|x| *x /= k);
        c
    }

    pub fn max_edge_length(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[i, j]| dist(self.vertex(i), self.vertex(j)))
            .fold(0.0, f64::max)
    }

    /// Length of the longest edge incident to vertex `i`.
    pub fn local_edge_length(&self, i: usize) -> f64 {
        self.neighbors(i)
            .iter()
            .map(|&j| dist(self.vertex(i), self.vertex(j)))
            .fold(0.0, f64::max)
    }

    /// Index of the vertex closest to `p` (lowest index on ties).
    pub fn nearest_vertex(&self, p: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, v) in self.vertices().enumerate() {
            let d = dist(v, p);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Vertices whose coordinates satisfy `predicate`.
    pub fn select(&self, predicate: impl Fn(&[f64]) -> bool) -> NodeSet {
        self.vertices()
            .enumerate()
            .filter(|(_, p)| predicate(p))
            .map(|(i, _)| i)
            .collect()
    }

    /// Returns a copy of the mesh with `region_tags[tag]` set to the vertices
    /// satisfying `predicate`. An empty selection is legal and logged.
    pub fn mark_region(&self, tag: &str, predicate: impl Fn(&[f64]) -> bool) -> Result<Self> {
        let set = self.select(predicate);
        self.with_region(tag, set)
    }

    /// Like [`mark_region`](Self::mark_region) with an explicit node set.
    pub fn with_region(&self, tag: &str, set: NodeSet) -> Result<Self> {
        if self.region_tags.contains_key(tag) {
            return arg_err(format!("region tag '{tag}' already present"));
        }
        if set.iter().any(|i| i >= self.num_vertices()) {
            return arg_err(format!("region '{tag}' references a vertex out of range"));
        }
        if set.is_empty() {
            log::warn!("region '{tag}' is empty");
        }
        let mut out = self.clone();
        out.region_tags.insert(tag.to_string(), set);
        Ok(out)
    }

    /// Submesh made of the simplices whose vertices all satisfy `keep`.
    ///
    /// Returns the submesh and, for each of its vertices, the index of the
    /// same vertex in `self`. Region tags are restricted and renumbered.
    /// `new_boundary` records an additional curved boundary piece.
    pub fn restrict(
        &self,
        keep: impl Fn(&[f64]) -> bool,
        new_boundary: Option<Sphere>,
    ) -> Result<(SimplicialMesh, Vec<usize>)> {
        let inside: Vec<bool> = self.vertices().map(&keep).collect();
        let kept: Vec<&[usize]> = self.simplices().filter(|s| s.iter().all(|&i| inside[i])).collect();
        if kept.is_empty() {
            return arg_err("restriction keeps no simplices");
        }
        let mut new_index = vec![usize::MAX; self.num_vertices()];
        let mut old_of_new = Vec::new();
        for s in &kept {
            for &i in s.iter() {
                if new_index[i] == usize::MAX {
                    new_index[i] = usize::MAX - 1;
                }
            }
        }
        for (i, slot) in new_index.iter_mut().enumerate() {
            if *slot == usize::MAX - 1 {
                *slot = old_of_new.len();
                old_of_new.push(i);
            }
        }
        let mut coords = Vec::with_capacity(old_of_new.len() * self.dim);
        for &i in &old_of_new {
            coords.extend_from_slice(self.vertex(i));
        }
        let simplices: Vec<usize> = kept.iter().flat_map(|s| s.iter().map(|&i| new_index[i])).collect();
        let tags = self
            .region_tags
            .iter()
            .map(|(t, set)| {
                let sub: NodeSet = set
                    .iter()
                    .filter(|&i| new_index[i] < usize::MAX - 1)
                    .map(|i| new_index[i])
                    .collect();
                (t.clone(), sub)
            })
            .collect();
        let mut spheres = self.spheres.clone();
        if let Some(s) = new_boundary {
            spheres.push(s);
        }
        let mesh = SimplicialMesh::with_parts(self.dim, coords, simplices, tags, spheres)?;
        Ok((mesh, old_of_new))
    }

    /// Restriction to the closed ball `|x - center| <= radius` (with a
    /// relative slack of 1e-9 so vertices placed on the sphere are kept).
    pub fn restrict_to_ball(&self, center: &[f64], radius: f64) -> Result<(SimplicialMesh, Vec<usize>)> {
        let tol = radius * (1.0 + 1e-9);
        self.restrict(
            |p| dist(p, center) <= tol,
            Some(Sphere {
                center: center.to_vec(),
                radius,
            }),
        )
    }

    /// Connected components of the vertex-edge graph restricted to `nodes`.
    pub fn components_within(&self, nodes: &NodeSet) -> Vec<NodeSet> {
        let member = nodes.mask(self.num_vertices());
        let mut seen = vec![false; self.num_vertices()];
        let mut out = Vec::new();
        for start in nodes.iter() {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(v) = queue.pop_front() {
                comp.push(v);
                for &w in self.neighbors(v) {
                    if member[w] && !seen[w] {
                        seen[w] = true;
                        queue.push_back(w);
                    }
                }
            }
            out.push(comp.into_iter().collect());
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        let all: NodeSet = (0..self.num_vertices()).collect();
        self.components_within(&all).len() == 1
    }

    /// Breadth-first shortest edge path from `from` to `to` avoiding the
    /// `forbidden` vertices. Ties resolve to the lowest vertex indices, so
    /// the result is deterministic.
    pub fn shortest_path(&self, from: usize, to: usize, forbidden: &[bool]) -> Option<Vec<usize>> {
        let nv = self.num_vertices();
        if forbidden[from] || forbidden[to] {
            return None;
        }
        let mut parent = vec![usize::MAX; nv];
        parent[from] = from;
        let mut queue = VecDeque::from([from]);
        while let Some(v) = queue.pop_front() {
            if v == to {
                break;
            }
            for &w in self.neighbors(v) {
                if parent[w] == usize::MAX && !forbidden[w] {
                    parent[w] = v;
                    queue.push_back(w);
                }
            }
        }
        if parent[to] == usize::MAX {
            return None;
        }
        let mut path = vec![to];
        let mut v = to;
        while v != from {
            v = parent[v];
            path.push(v);
        }
        path.reverse();
        Some(path)
    }
}

fn bounding_extent(dim: usize, coords: &[f64]) -> f64 {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for p in coords.chunks(dim) {
        for d in 0..dim {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max)
}
