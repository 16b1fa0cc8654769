use std::sync::OnceLock;

use log::debug;

use super::bundle::BundleData;
use super::graph::WeightedGraph;
use super::potential::PotentialField;
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, CMatrix, CVector, CsrMatrix, HermitianEigen, Storage, C64, SPARSE_THRESHOLD};

/// Largest dimension for which a full eigendecomposition is attempted.
pub const EIGEN_LIMIT: usize = 4000;

/// Assembled `H = (1/2)∇†∇ + V` on sections over a (possibly Dirichlet
/// restricted) weighted graph.
///
/// Sections are indexed `(vertex, component) ↦ local·ℓ + a` over the kept
/// vertices in increasing order. `H` is self-adjoint in `L²(μ)`; internally
/// the unitarily equivalent `S = M^{1/2} H M^{−1/2}` is stored, which is
/// Hermitian in the flat inner product. All public section-valued methods
/// work with function values (the `L²(μ)` picture).
#[derive(Debug)]
pub struct SchrodingerOperator {
    graph: WeightedGraph,
    bundle: BundleData,
    potential: PotentialField,
    kept: Vec<usize>,
    position: Vec<Option<usize>>,
    sqrt_mu: Vec<f64>,
    kinetic: bool,
    matrix: Storage,
    defect: f64,
    eigen: OnceLock<HermitianEigen>,
}

impl Clone for SchrodingerOperator {
    fn clone(&self) -> Self {
        let eigen = OnceLock::new();
        if let Some(e) = self.eigen.get() {
            let _ = eigen.set(e.clone());
        }
        Self {
            graph: self.graph.clone(),
            bundle: self.bundle.clone(),
            potential: self.potential.clone(),
            kept: self.kept.clone(),
            position: self.position.clone(),
            sqrt_mu: self.sqrt_mu.clone(),
            kinetic: self.kinetic,
            matrix: self.matrix.clone(),
            defect: self.defect,
            eigen,
        }
    }
}

impl SchrodingerOperator {
    /// `mask` is the kept vertex set `U`; rows and columns of all other
    /// vertices are deleted (Dirichlet condition on the complement).
    pub fn assemble(graph: &WeightedGraph, bundle: &BundleData, potential: Option<&PotentialField>, mask: Option<&[usize]>) -> Result<Self> {
        Self::build(graph, bundle, potential, mask, true)
    }

    /// Scalar operator `H_w` with trivial rank-one bundle.
    pub fn scalar(graph: &WeightedGraph, w: Option<&[f64]>, mask: Option<&[usize]>) -> Result<Self> {
        let bundle = BundleData::trivial(graph, 1)?;
        let pot = match w {
            Some(w) => {
                if w.len() != graph.n_vertices() {
                    return Err(Error::DimensionMismatch { expected: graph.n_vertices(), got: w.len() });
                }
                Some(PotentialField::scalar(w, 1)?)
            }
            None => None,
        };
        Self::assemble(graph, &bundle, pot.as_ref(), mask)
    }

    fn build(graph: &WeightedGraph, bundle: &BundleData, potential: Option<&PotentialField>, mask: Option<&[usize]>, kinetic: bool) -> Result<Self> {
        let n = graph.n_vertices();
        let rank = bundle.rank();
        if bundle.n_edges() != graph.n_edges() {
            return Err(Error::DimensionMismatch { expected: graph.n_edges(), got: bundle.n_edges() });
        }
        let potential = match potential {
            Some(p) => {
                if p.n_vertices() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: p.n_vertices() });
                }
                if p.rank() != rank {
                    return Err(invalid("potential", format!("rank {} does not match bundle rank {rank}", p.rank())));
                }
                p.clone()
            }
            None => PotentialField::zero(n, rank),
        };
        let kept: Vec<usize> = match mask {
            Some(m) => {
                let mut k = m.to_vec();
                k.sort_unstable();
                k.dedup();
                if let Some(&bad) = k.iter().find(|&&v| v >= n) {
                    return Err(Error::VertexOutOfRange(bad));
                }
                if k.is_empty() {
                    return Err(invalid("mask", "Dirichlet set is empty"));
                }
                k
            }
            None => (0..n).collect(),
        };
        let mut position = vec![None; n];
        for (i, &v) in kept.iter().enumerate() {
            position[v] = Some(i);
        }
        let sqrt_mu: Vec<f64> = kept.iter().map(|&v| graph.mu()[v].sqrt()).collect();
        let dim = kept.len() * rank;

        let mut trip: Vec<(usize, usize, C64)> = Vec::new();
        for (i, &x) in kept.iter().enumerate() {
            let vx = potential.at(x);
            let deg = if kinetic { graph.weighted_degree(x) / (2.0 * graph.mu()[x]) } else { 0.0 };
            for a in 0..rank {
                for b in 0..rank {
                    let mut val = vx[(a, b)];
                    if a == b {
                        val += c(deg);
                    }
                    if val != c(0.0) {
                        trip.push((i * rank + a, i * rank + b, val));
                    }
                }
            }
        }
        if kinetic {
            for (k, e) in graph.edges().iter().enumerate() {
                let (Some(i), Some(j)) = (position[e.a], position[e.b]) else { continue };
                let u = bundle.edge_transport(k);
                let scale = -e.w / (2.0 * sqrt_mu[i] * sqrt_mu[j]);
                for a in 0..rank {
                    for b in 0..rank {
                        let z = u[(a, b)] * scale;
                        if z != c(0.0) {
                            trip.push((i * rank + a, j * rank + b, z));
                            trip.push((j * rank + b, i * rank + a, z.conj()));
                        }
                    }
                }
            }
        }
        let mut csr = CsrMatrix::from_triplets(dim, trip);
        let defect = csr.hermitize();
        debug!("assembled operator of dimension {dim}, Hermitian defect {defect:.3e}");
        let matrix = if dim > SPARSE_THRESHOLD { Storage::Sparse(csr) } else { Storage::Dense(csr.to_dense()) };
        Ok(Self { graph: graph.clone(), bundle: bundle.clone(), potential, kept, position, sqrt_mu, kinetic, matrix, defect, eigen: OnceLock::new() })
    }

    /// The multiplication operator `V` alone, on the same kept vertices.
    pub fn potential_only(&self) -> Result<Self> {
        Self::build(&self.graph, &self.bundle, Some(&self.potential), Some(&self.kept), false)
    }

    /// `(1/2)∇†∇` alone, on the same kept vertices.
    pub fn kinetic_only(&self) -> Result<Self> {
        Self::build(&self.graph, &self.bundle, None, Some(&self.kept), true)
    }

    /// Same graph, bundle and mask with a different potential.
    pub fn with_potential(&self, potential: &PotentialField) -> Result<Self> {
        Self::build(&self.graph, &self.bundle, Some(potential), Some(&self.kept), self.kinetic)
    }

    /// `H + c`.
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        self.with_potential(&self.potential.shifted(shift))
    }

    pub fn dim(&self) -> usize {
        self.kept.len() * self.rank()
    }

    pub fn rank(&self) -> usize {
        self.bundle.rank()
    }

    pub fn n_sites(&self) -> usize {
        self.kept.len()
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn is_restricted(&self) -> bool {
        self.kept.len() < self.graph.n_vertices()
    }

    pub fn local_index(&self, vertex: usize) -> Option<usize> {
        self.position.get(vertex).copied().flatten()
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn bundle(&self) -> &BundleData {
        &self.bundle
    }

    pub fn potential(&self) -> &PotentialField {
        &self.potential
    }

    pub fn has_kinetic_part(&self) -> bool {
        self.kinetic
    }

    /// Trivial rank-one bundle.
    pub fn is_scalar(&self) -> bool {
        self.rank() == 1 && self.bundle.is_trivial()
    }

    /// Measure of the `i`-th kept vertex.
    pub fn mu_local(&self, i: usize) -> f64 {
        self.sqrt_mu[i] * self.sqrt_mu[i]
    }

    /// Measure per section index (`μ` repeated ℓ times).
    pub fn section_measure(&self) -> Vec<f64> {
        let rank = self.rank();
        (0..self.dim()).map(|k| self.mu_local(k / rank)).collect()
    }

    /// Symmetrized matrix `S`, Hermitian in the flat inner product.
    pub fn symmetric_matrix(&self) -> &Storage {
        &self.matrix
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.defect
    }

    fn check_len(&self, f: &CVector) -> Result<()> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: f.len() });
        }
        Ok(())
    }

    /// `M^{1/2} f`.
    pub fn to_symmetric(&self, f: &CVector) -> CVector {
        let rank = self.rank();
        CVector::from_fn(f.len(), |k, _| f[k] * self.sqrt_mu[k / rank])
    }

    /// `M^{−1/2} g`.
    pub fn from_symmetric(&self, g: &CVector) -> CVector {
        let rank = self.rank();
        CVector::from_fn(g.len(), |k, _| g[k] / self.sqrt_mu[k / rank])
    }

    /// `H f`.
    pub fn apply(&self, f: &CVector) -> Result<CVector> {
        self.check_len(f)?;
        Ok(self.from_symmetric(&self.matrix.mul_vec(&self.to_symmetric(f))))
    }

    /// `⟨f, g⟩_μ = Σ μ_x ⟨f(x), g(x)⟩`.
    pub fn inner(&self, f: &CVector, g: &CVector) -> C64 {
        let rank = self.rank();
        (0..f.len()).map(|k| f[k].conj() * g[k] * self.mu_local(k / rank)).sum()
    }

    pub fn norm(&self, f: &CVector) -> f64 {
        self.inner(f, f).re.max(0.0).sqrt()
    }

    /// Discrete `Q^∇(f, f) = (1/2) Σ_edges w |f(x) − U_{xy} f(y)|²`, with
    /// `f = 0` on deleted vertices.
    pub fn kinetic_form(&self, f: &CVector) -> Result<f64> {
        self.check_len(f)?;
        if !self.kinetic {
            return Ok(0.0);
        }
        let rank = self.rank();
        let zero = CVector::zeros(rank);
        let fiber = |v: usize| -> CVector {
            match self.position[v] {
                Some(i) => f.rows(i * rank, rank).into_owned(),
                None => zero.clone(),
            }
        };
        let mut q = 0.0;
        for (k, e) in self.graph.edges().iter().enumerate() {
            if self.position[e.a].is_none() && self.position[e.b].is_none() {
                continue;
            }
            let diff = fiber(e.a) - self.bundle.edge_transport(k) * fiber(e.b);
            q += 0.5 * e.w * diff.norm_squared();
        }
        Ok(q)
    }

    /// `Q^∇_V(f, f) = Q^∇(f, f) + Σ μ_x ⟨V(x) f(x), f(x)⟩`.
    pub fn form(&self, f: &CVector) -> Result<f64> {
        let mut q = self.kinetic_form(f)?;
        let rank = self.rank();
        for (i, &x) in self.kept.iter().enumerate() {
            let fx = f.rows(i * rank, rank);
            q += self.mu_local(i) * (fx.adjoint() * self.potential.at(x) * fx)[(0, 0)].re;
        }
        Ok(q)
    }

    /// Cached eigendecomposition of `S`.
    pub fn eigen(&self) -> Result<&HermitianEigen> {
        if let Some(e) = self.eigen.get() {
            return Ok(e);
        }
        if self.dim() > EIGEN_LIMIT {
            return Err(Error::Unsupported(format!("full eigendecomposition limited to dimension {EIGEN_LIMIT}, operator has {}", self.dim())));
        }
        let e = HermitianEigen::new(&self.matrix.to_dense());
        Ok(self.eigen.get_or_init(|| e))
    }

    /// `φ(H)` in the function picture: `M^{−1/2} φ(S) M^{1/2}`.
    pub fn function_matrix(&self, phi: impl Fn(f64) -> f64) -> Result<CMatrix> {
        let mut m = self.eigen()?.function(phi);
        let rank = self.rank();
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                m[(r, col)] *= self.sqrt_mu[col / rank] / self.sqrt_mu[r / rank];
            }
        }
        Ok(m)
    }

    /// `φ(H) f` through the cached eigendecomposition.
    pub fn apply_function(&self, phi: impl Fn(f64) -> f64, f: &CVector) -> Result<CVector> {
        self.check_len(f)?;
        let g = self.eigen()?.apply_function(phi, &self.to_symmetric(f));
        Ok(self.from_symmetric(&g))
    }

    /// `e^{−tH}` in the function picture; entry `(x, y)` is `p(t, x, y) μ_y`,
    /// the transition probability of the jump chain when `V = 0`.
    pub fn heat_matrix(&self, t: f64) -> Result<CMatrix> {
        self.function_matrix(|l| (-t * l).exp())
    }

    /// Kernel blocks `p(t, x, y) = (e^{−tS})_{xy} / √(μ_x μ_y)`.
    pub fn kernel_matrix(&self, t: f64) -> Result<CMatrix> {
        let mut m = self.eigen()?.function(|l| (-t * l).exp());
        let rank = self.rank();
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                m[(r, col)] /= self.sqrt_mu[col / rank] * self.sqrt_mu[r / rank];
            }
        }
        Ok(m)
    }

    /// Dense `H` in the function picture (not Hermitian unless `μ` is constant).
    pub fn dense_function_matrix(&self) -> CMatrix {
        let mut m = self.matrix.to_dense();
        let rank = self.rank();
        for r in 0..m.nrows() {
            for col in 0..m.ncols() {
                m[(r, col)] *= self.sqrt_mu[col / rank] / self.sqrt_mu[r / rank];
            }
        }
        m
    }

    /// Section `(f(x))` of a scalar function lifted to component `a`.
    pub fn section_from_fn(&self, mut f: impl FnMut(usize, usize) -> C64) -> CVector {
        let rank = self.rank();
        CVector::from_fn(self.dim(), |k, _| f(self.kept[k / rank], k % rank))
    }

    /// Matrix Market (coordinate, complex, Hermitian, lower triangle) dump of `S`.
    pub fn write_matrix_market<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let trip: Vec<_> = self.matrix.triplets().into_iter().filter(|&(r, col, _)| r >= col).collect();
        writeln!(out, "%%MatrixMarket matrix coordinate complex hermitian")?;
        writeln!(out, "% symmetrized operator M^(1/2) H M^(-1/2)")?;
        writeln!(out, "{} {} {}", self.dim(), self.dim(), trip.len())?;
        for (r, col, v) in trip {
            writeln!(out, "{} {} {:.17e} {:.17e}", r + 1, col + 1, v.re, v.im)?;
        }
        Ok(())
    }
}
