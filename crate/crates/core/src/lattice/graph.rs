use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::ModelSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub w: f64,
}

/// Vertex-weighted, edge-weighted undirected graph.
///
/// The induced scalar operator is `Hf(x) = (1/(2μ_x)) Σ_y w_xy (f(x) − f(y))`,
/// symmetric and nonnegative in `L²(μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    mu: Vec<f64>,
    coords: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    boundary: Vec<bool>,
    connected: bool,
}

impl WeightedGraph {
    /// Edges are unordered; each pair may appear once.
    pub fn new(mu: Vec<f64>, edges: Vec<Edge>) -> Result<Self> {
        let n = mu.len();
        Self::with_coords(mu, vec![Vec::new(); n], edges)
    }

    pub fn with_coords(mu: Vec<f64>, coords: Vec<Vec<f64>>, edges: Vec<Edge>) -> Result<Self> {
        let n = mu.len();
        if n == 0 {
            return Err(invalid("vertices", "graph needs at least one vertex"));
        }
        if coords.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: coords.len() });
        }
        if let Some(i) = mu.iter().position(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(invalid("mu", format!("vertex {i} has nonpositive measure {}", mu[i])));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut canonical = Vec::with_capacity(edges.len());
        for (k, e) in edges.iter().enumerate() {
            if e.a >= n {
                return Err(Error::VertexOutOfRange(e.a));
            }
            if e.b >= n {
                return Err(Error::VertexOutOfRange(e.b));
            }
            if e.a == e.b {
                return Err(invalid("edges", format!("self-loop at vertex {}", e.a)));
            }
            if !(e.w > 0.0 && e.w.is_finite()) {
                return Err(invalid("edges", format!("edge ({}, {}) has nonpositive weight {}", e.a, e.b, e.w)));
            }
            if adjacency[e.a].iter().any(|&(y, _)| y == e.b) {
                return Err(invalid("edges", format!("duplicate edge ({}, {})", e.a, e.b)));
            }
            adjacency[e.a].push((e.b, k));
            adjacency[e.b].push((e.a, k));
            canonical.push(*e);
        }
        let connected = is_connected(&adjacency, None);
        Ok(Self { mu, coords, edges: canonical, adjacency, boundary: vec![false; n], connected })
    }

    pub fn n_vertices(&self) -> usize {
        self.mu.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn coords(&self, v: usize) -> &[f64] {
        &self.coords[v]
    }

    /// `(neighbor, edge index)` pairs of `v`.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn edge_between(&self, x: usize, y: usize) -> Option<usize> {
        self.adjacency.get(x)?.iter().find(|&&(z, _)| z == y).map(|&(_, k)| k)
    }

    pub fn is_connected(&self) -> bool {
        self.connected
    }

    /// Connectivity of the subgraph induced on `keep`.
    pub fn is_connected_on(&self, keep: &[usize]) -> bool {
        let mut mask = vec![false; self.n_vertices()];
        for &v in keep {
            mask[v] = true;
        }
        is_connected(&self.adjacency, Some(&mask))
    }

    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.adjacency[v].iter().map(|&(_, k)| self.edges[k].w).sum()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    /// Vertices not flagged as grid boundary; the Dirichlet set `U` of a grid.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| !self.boundary[v]).collect()
    }

    /// Vertex whose embedded coordinates match `coords` (within 1e-9), or,
    /// for graphs without coordinates, the vertex whose index equals the
    /// single coordinate.
    pub fn vertex_at(&self, coords: &[f64]) -> Option<usize> {
        if self.coords.iter().all(|c| c.is_empty()) {
            if coords.len() == 1 && coords[0] >= 0.0 && coords[0].fract() == 0.0 {
                let v = coords[0] as usize;
                return (v < self.n_vertices()).then_some(v);
            }
            return None;
        }
        self.coords.iter().position(|c| c.len() == coords.len() && c.iter().zip(coords).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs())))
    }

    /// Unit path `0 − 1 − … − (n−1)` with `μ = 1`, `w = 1`.
    pub fn path(n: usize) -> Result<Self> {
        let edges = (1..n).map(|i| Edge { a: i - 1, b: i, w: 1.0 }).collect();
        Self::new(vec![1.0; n], edges)
    }

    /// Unit cycle on `n ≥ 3` vertices, edges `(i, i+1 mod n)`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(invalid("n", "a cycle needs at least 3 vertices"));
        }
        let edges = (0..n).map(|i| Edge { a: i, b: (i + 1) % n, w: 1.0 }).collect();
        Self::new(vec![1.0; n], edges)
    }

    /// Random connected graph: a random spanning tree plus extra edges with
    /// probability `p`; weights in `[0.5, 2]`, measures in `[0.5, 2]`.
    pub fn random_connected<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        let mut edges = Vec::new();
        let mut present = vec![vec![false; n]; n];
        for v in 1..n {
            let u = rng.random_range(0..v);
            edges.push(Edge { a: u, b: v, w: rng.random_range(0.5..2.0) });
            present[u][v] = true;
        }
        for a in 0..n {
            for b in (a + 1)..n {
                if !present[a][b] && rng.random::<f64>() < p {
                    edges.push(Edge { a, b, w: rng.random_range(0.5..2.0) });
                }
            }
        }
        let mu = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
        Self::new(mu, edges)
    }

    /// Disjoint union of two graphs (vertices of `other` are shifted).
    pub fn disjoint_union(&self, other: &WeightedGraph) -> Result<Self> {
        let shift = self.n_vertices();
        let mut mu = self.mu.clone();
        mu.extend_from_slice(&other.mu);
        let mut coords = self.coords.clone();
        coords.extend(other.coords.iter().cloned());
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| Edge { a: e.a + shift, b: e.b + shift, w: e.w }));
        Self::with_coords(mu, coords, edges)
    }
}

fn is_connected(adjacency: &[Vec<(usize, usize)>], mask: Option<&[bool]>) -> bool {
    let inside = |v: usize| mask.is_none_or(|m| m[v]);
    let Some(start) = (0..adjacency.len()).find(|&v| inside(v)) else {
        return true;
    };
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(v) = stack.pop() {
        for &(y, _) in &adjacency[v] {
            if inside(y) && !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    (0..adjacency.len()).all(|v| !inside(v) || seen[v])
}

/// Grid discretization of a bounded Euclidean domain or of a rectangle in
/// the hyperbolic half-space chart.
///
/// All grid points, boundary included, become vertices; boundary vertices
/// are flagged so that [`WeightedGraph::interior`] yields the Dirichlet set.
/// Euclidean: `μ_x = hᵐ`, `w_xy = h^{m−2}`. Half-space: `μ_x = hᵐ / x_mᵐ`,
/// `w_xy = h^{m−2} / x̄_m^{m−2}` with `x̄_m` the edge-midpoint height
/// (finite volumes on the chart Laplacian).
pub fn build_grid_graph(space: &ModelSpace, rectangle: Option<(&[f64], &[f64])>, h: f64) -> Result<WeightedGraph> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("spacing", "must be positive"));
    }
    let (lower, upper, hyperbolic): (Vec<f64>, Vec<f64>, bool) = match space {
        ModelSpace::Box { lower, upper } => (lower.clone(), upper.clone(), false),
        ModelSpace::Interval { length } => (vec![0.0], vec![*length], false),
        ModelSpace::Hyperbolic { dim } => {
            let (lo, hi) = rectangle.ok_or_else(|| invalid("bounds", "hyperbolic grids need a rectangle"))?;
            if lo.len() != *dim || hi.len() != *dim {
                return Err(Error::DimensionMismatch { expected: *dim, got: lo.len().min(hi.len()) });
            }
            if !(lo[dim - 1] > 0.0) {
                return Err(invalid("bounds", "half-space rectangle must have positive lower height"));
            }
            (lo.to_vec(), hi.to_vec(), true)
        }
        ModelSpace::Euclidean { dim } => {
            let (lo, hi) = rectangle.ok_or_else(|| invalid("bounds", "unbounded space: give a rectangle"))?;
            if lo.len() != *dim || hi.len() != *dim {
                return Err(Error::DimensionMismatch { expected: *dim, got: lo.len().min(hi.len()) });
            }
            (lo.to_vec(), hi.to_vec(), false)
        }
    };
    let m = lower.len();
    let mut counts = Vec::with_capacity(m);
    for i in 0..m {
        let span = upper[i] - lower[i];
        if !(span > 0.0) {
            return Err(invalid("bounds", "degenerate domain"));
        }
        let k = (span / h).round();
        if k < 2.0 || ((span / h) - k).abs() > 1e-9 * k.max(1.0) {
            return Err(invalid("spacing", format!("h = {h} must divide side {span} into at least 2 cells")));
        }
        counts.push(k as usize + 1);
    }
    let n: usize = counts.iter().product();
    let mut coords = Vec::with_capacity(n);
    let mut boundary = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    let index = |multi: &[usize]| -> usize {
        let mut idx = 0;
        for i in (0..m).rev() {
            idx = idx * counts[i] + multi[i];
        }
        idx
    };
    let mut multi = vec![0usize; m];
    for _ in 0..n {
        let x: Vec<f64> = (0..m).map(|i| lower[i] + multi[i] as f64 * h).collect();
        boundary.push((0..m).any(|i| multi[i] == 0 || multi[i] == counts[i] - 1));
        mu.push(if hyperbolic { h.powi(m as i32) / x[m - 1].powi(m as i32) } else { h.powi(m as i32) });
        coords.push(x);
        for i in 0..m {
            multi[i] += 1;
            if multi[i] < counts[i] {
                break;
            }
            multi[i] = 0;
        }
    }
    let mut edges = Vec::new();
    let mut multi = vec![0usize; m];
    for v in 0..n {
        for i in 0..m {
            if multi[i] + 1 < counts[i] {
                let mut next = multi.clone();
                next[i] += 1;
                let u = index(&next);
                let w = if hyperbolic {
                    let mid = 0.5 * (coords[v][m - 1] + coords[u][m - 1]);
                    h.powi(m as i32 - 2) / mid.powi(m as i32 - 2)
                } else {
                    h.powi(m as i32 - 2)
                };
                edges.push(Edge { a: v, b: u, w });
            }
        }
        for i in 0..m {
            multi[i] += 1;
            if multi[i] < counts[i] {
                break;
            }
            multi[i] = 0;
        }
    }
    let mut g = WeightedGraph::with_coords(mu, coords, edges)?;
    g.boundary = boundary;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(WeightedGraph::new(vec![1.0, 0.0], vec![]).is_err());
        assert!(WeightedGraph::new(vec![1.0, 1.0], vec![Edge { a: 0, b: 1, w: -1.0 }]).is_err());
        assert!(WeightedGraph::new(vec![1.0, 1.0], vec![Edge { a: 0, b: 0, w: 1.0 }]).is_err());
        assert!(WeightedGraph::new(vec![1.0, 1.0], vec![Edge { a: 0, b: 2, w: 1.0 }]).is_err());
        let dup = vec![Edge { a: 0, b: 1, w: 1.0 }, Edge { a: 1, b: 0, w: 1.0 }];
        assert!(WeightedGraph::new(vec![1.0, 1.0], dup).is_err());
    }

    #[test]
    fn connectivity_flag() {
        assert!(WeightedGraph::cycle(4).unwrap().is_connected());
        let two = WeightedGraph::path(2).unwrap();
        assert!(!two.disjoint_union(&two).unwrap().is_connected());
        let p = WeightedGraph::path(3).unwrap();
        assert!(!p.is_connected_on(&[0, 2]));
        assert!(p.is_connected_on(&[0, 1]));
    }

    #[test]
    fn interval_grid_shape() {
        let space = ModelSpace::interval(std::f64::consts::PI).unwrap();
        let g = build_grid_graph(&space, None, std::f64::consts::PI / 101.0).unwrap();
        assert_eq!(g.n_vertices(), 102);
        assert_eq!(g.interior().len(), 100);
        assert_eq!(g.n_edges(), 101);
        assert!(build_grid_graph(&space, None, 1.0).is_err());
        assert!(build_grid_graph(&space, None, -0.1).is_err());
    }

    #[test]
    fn hyperbolic_grid_weights() {
        let space = ModelSpace::hyperbolic(2).unwrap();
        let g = build_grid_graph(&space, Some((&[0.0, 1.0], &[1.0, 2.0])), 0.25).unwrap();
        assert_eq!(g.n_vertices(), 25);
        // m = 2: edge weights are h⁰ / ȳ⁰ = 1, measures h² / y²
        assert!(g.edges().iter().all(|e| (e.w - 1.0).abs() < 1e-15));
        let v = g.vertex_at(&[0.5, 1.5]).unwrap();
        assert!((g.mu()[v] - 0.0625 / 2.25).abs() < 1e-15);
        assert!(build_grid_graph(&space, Some((&[0.0, 0.0], &[1.0, 1.0])), 0.25).is_err());
    }
}
