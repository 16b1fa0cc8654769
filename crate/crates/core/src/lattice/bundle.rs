use nalgebra::DMatrix;

use super::graph::WeightedGraph;
use crate::error::{invalid, Error, Result};
use crate::linalg::{unitary_defect, CMatrix, C64};

const UNITARY_TOL: f64 = 1e-12;

/// Source of edge transports handed to [`BundleData::attach`].
pub enum GaugeField<'a> {
    Trivial,
    /// One angle per stored edge, read in the stored `a → b` orientation;
    /// the reverse orientation gets `−θ` by construction.
    U1Angles(Vec<f64>),
    /// Directed angles `(x, y, θ_xy)`; both orientations may be listed and
    /// must then be antisymmetric.
    U1DirectedAngles(Vec<(usize, usize, f64)>),
    /// `θ_xy = A((x+y)/2) · (y − x)`, the midpoint rule for `∫_x^y A`.
    U1VectorPotential(&'a dyn Fn(&[f64]) -> Vec<f64>),
    /// One unitary per stored edge in the `a → b` orientation.
    Explicit(Vec<CMatrix>),
}

/// Rank-ℓ Hermitian bundle over a graph with a unitary transport per edge.
///
/// `transports[k]` is `U_{ab}` for the stored edge `k = (a, b)`; the
/// reverse transport is its adjoint, so `U_{yx} = U_{xy}*` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleData {
    rank: usize,
    transports: Vec<CMatrix>,
}

impl BundleData {
    pub fn trivial(graph: &WeightedGraph, rank: usize) -> Result<Self> {
        Self::attach(graph, rank, GaugeField::Trivial)
    }

    pub fn attach(graph: &WeightedGraph, rank: usize, field: GaugeField<'_>) -> Result<Self> {
        if rank == 0 {
            return Err(invalid("rank", "must be at least 1"));
        }
        let ne = graph.n_edges();
        let phase = |theta: f64| CMatrix::from_element(1, 1, C64::from_polar(1.0, theta));
        let transports = match field {
            GaugeField::Trivial => vec![CMatrix::identity(rank, rank); ne],
            GaugeField::U1Angles(angles) => {
                require_rank_one(rank)?;
                if angles.len() != ne {
                    return Err(Error::DimensionMismatch { expected: ne, got: angles.len() });
                }
                check_finite(&angles)?;
                angles.into_iter().map(phase).collect()
            }
            GaugeField::U1DirectedAngles(list) => {
                require_rank_one(rank)?;
                let mut angles: Vec<Option<f64>> = vec![None; ne];
                for (x, y, theta) in list {
                    let k = graph.edge_between(x, y).ok_or(Error::NotAdjacent(x, y))?;
                    let e = graph.edges()[k];
                    let forward = if e.a == x { theta } else { -theta };
                    if let Some(prev) = angles[k] {
                        if (prev - forward).abs() > 1e-12 * (1.0 + prev.abs()) {
                            return Err(invalid("theta", format!("angles on edge ({x}, {y}) are not antisymmetric")));
                        }
                    }
                    angles[k] = Some(forward);
                }
                let angles: Vec<f64> = angles.into_iter().map(|a| a.unwrap_or(0.0)).collect();
                check_finite(&angles)?;
                angles.into_iter().map(phase).collect()
            }
            GaugeField::U1VectorPotential(a) => {
                require_rank_one(rank)?;
                let mut out = Vec::with_capacity(ne);
                for e in graph.edges() {
                    let (x, y) = (graph.coords(e.a), graph.coords(e.b));
                    if x.is_empty() || x.len() != y.len() {
                        return Err(invalid("vector_potential", "graph vertices carry no coordinates"));
                    }
                    let mid: Vec<f64> = x.iter().zip(y).map(|(p, q)| 0.5 * (p + q)).collect();
                    let av = a(&mid);
                    if av.len() != mid.len() {
                        return Err(Error::DimensionMismatch { expected: mid.len(), got: av.len() });
                    }
                    let theta: f64 = av.iter().zip(x.iter().zip(y)).map(|(ai, (p, q))| ai * (q - p)).sum();
                    check_finite(&[theta])?;
                    out.push(phase(theta));
                }
                out
            }
            GaugeField::Explicit(mats) => {
                if mats.len() != ne {
                    return Err(Error::DimensionMismatch { expected: ne, got: mats.len() });
                }
                for u in &mats {
                    if u.nrows() != rank || u.ncols() != rank {
                        return Err(Error::DimensionMismatch { expected: rank, got: u.nrows() });
                    }
                    let defect = unitary_defect(u);
                    if !(defect <= UNITARY_TOL) {
                        return Err(Error::NotUnitary { defect });
                    }
                }
                mats
            }
        };
        Ok(Self { rank, transports })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_edges(&self) -> usize {
        self.transports.len()
    }

    /// Transport of the stored edge `k` in its `a → b` orientation.
    pub fn edge_transport(&self, k: usize) -> &CMatrix {
        &self.transports[k]
    }

    /// `U_{xy}` for adjacent `x`, `y`.
    pub fn transport(&self, graph: &WeightedGraph, x: usize, y: usize) -> Result<CMatrix> {
        let k = graph.edge_between(x, y).ok_or(Error::NotAdjacent(x, y))?;
        let u = &self.transports[k];
        Ok(if graph.edges()[k].a == x { u.clone() } else { u.adjoint() })
    }

    /// Ordered product `U_{x₀x₁} U_{x₁x₂} ⋯ U_{x_{n−1}x₀}`; the cycle is
    /// closed implicitly when the last vertex differs from the first.
    pub fn holonomy(&self, graph: &WeightedGraph, cycle: &[usize]) -> Result<CMatrix> {
        if cycle.is_empty() {
            return Err(invalid("cycle", "empty vertex sequence"));
        }
        let mut seq = cycle.to_vec();
        if seq.len() > 1 && seq.last() != seq.first() {
            seq.push(seq[0]);
        }
        let mut h = CMatrix::identity(self.rank, self.rank);
        for pair in seq.windows(2) {
            h *= self.transport(graph, pair[0], pair[1])?;
        }
        Ok(h)
    }

    /// `U_{xy} ↦ g(x) U_{xy} g(y)*` for vertex unitaries `g`.
    pub fn gauge_transform(&self, graph: &WeightedGraph, g: &[CMatrix]) -> Result<Self> {
        if g.len() != graph.n_vertices() {
            return Err(Error::DimensionMismatch { expected: graph.n_vertices(), got: g.len() });
        }
        let transports = graph.edges().iter().zip(&self.transports).map(|(e, u)| &g[e.a] * u * g[e.b].adjoint()).collect();
        Ok(Self { rank: self.rank, transports })
    }

    /// U(1) angles of a rank-one bundle in stored edge orientation.
    pub fn angles(&self) -> Option<Vec<f64>> {
        (self.rank == 1).then(|| self.transports.iter().map(|u| u[(0, 0)].arg()).collect())
    }

    pub fn is_trivial(&self) -> bool {
        let id: CMatrix = DMatrix::identity(self.rank, self.rank);
        self.transports.iter().all(|u| *u == id)
    }
}

fn require_rank_one(rank: usize) -> Result<()> {
    if rank != 1 {
        return Err(invalid("rank", format!("U(1) gauge fields need rank 1, got {rank}")));
    }
    Ok(())
}

fn check_finite(angles: &[f64]) -> Result<()> {
    if angles.iter().any(|a| !a.is_finite()) {
        return Err(invalid("theta", "non-finite angle"));
    }
    Ok(())
}
