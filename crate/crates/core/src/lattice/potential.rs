use crate::error::{invalid, Error, Result};
use crate::linalg::{c, hermitian_defect, CMatrix, HermitianEigen};

const HERMITIAN_TOL: f64 = 1e-12;

/// Per-vertex Hermitian `ℓ×ℓ` potential.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    rank: usize,
    values: Vec<CMatrix>,
}

impl PotentialField {
    pub fn zero(n_vertices: usize, rank: usize) -> Self {
        Self { rank, values: vec![CMatrix::zeros(rank, rank); n_vertices] }
    }

    /// `V(x) = w(x) I_ℓ`.
    pub fn scalar(w: &[f64], rank: usize) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite()) {
            return Err(invalid("potential", "non-finite value"));
        }
        let values = w.iter().map(|&v| CMatrix::identity(rank, rank) * c(v)).collect();
        Ok(Self { rank, values })
    }

    /// Accepts matrices Hermitian within 1e-12 and stores their exact
    /// Hermitian parts.
    pub fn from_matrices(values: Vec<CMatrix>) -> Result<Self> {
        let rank = values.first().map_or(1, |m| m.nrows());
        let mut out = Vec::with_capacity(values.len());
        for m in values {
            if m.nrows() != rank || m.ncols() != rank {
                return Err(Error::DimensionMismatch { expected: rank, got: m.nrows().max(m.ncols()) });
            }
            let defect = hermitian_defect(&m);
            if !(defect <= HERMITIAN_TOL) {
                return Err(Error::NotHermitian { defect });
            }
            out.push((&m + m.adjoint()) * c(0.5));
        }
        Ok(Self { rank, values: out })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_vertices(&self) -> usize {
        self.values.len()
    }

    pub fn at(&self, v: usize) -> &CMatrix {
        &self.values[v]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|m| m.iter().all(|z| *z == c(0.0)))
    }

    pub fn min_eigenvalues(&self) -> Vec<f64> {
        self.values.iter().map(|m| HermitianEigen::new(m).values[0]).collect()
    }

    pub fn max_eigenvalues(&self) -> Vec<f64> {
        self.values.iter().map(|m| *HermitianEigen::new(m).values.last().unwrap()).collect()
    }

    /// Spectral splitting `V = V₊ − V₋` per vertex; zero eigenvalues go to `V₊`.
    pub fn split(&self) -> (PotentialField, PotentialField) {
        let mut plus = Vec::with_capacity(self.values.len());
        let mut minus = Vec::with_capacity(self.values.len());
        for m in &self.values {
            let e = HermitianEigen::new(m);
            plus.push(e.function(|l| if l >= 0.0 { l } else { 0.0 }));
            minus.push(e.function(|l| if l < 0.0 { -l } else { 0.0 }));
        }
        (Self { rank: self.rank, values: plus }, Self { rank: self.rank, values: minus })
    }

    /// Scalar part `w(x)` when every `V(x)` is a multiple of the identity.
    pub fn as_scalar(&self) -> Option<Vec<f64>> {
        self.values
            .iter()
            .map(|m| {
                let d = m[(0, 0)].re;
                let expect = CMatrix::identity(self.rank, self.rank) * c(d);
                ((m - expect).norm() == 0.0).then_some(d)
            })
            .collect()
    }

    pub fn shifted(&self, shift: f64) -> Self {
        let id = CMatrix::identity(self.rank, self.rank);
        Self { rank: self.rank, values: self.values.iter().map(|m| m + &id * c(shift)).collect() }
    }

    /// `x ↦ g(x) V(x) g(x)*`.
    pub fn conjugated(&self, g: &[CMatrix]) -> Result<Self> {
        if g.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), got: g.len() });
        }
        let values = self.values.iter().zip(g).map(|(v, gx)| gx * v * gx.adjoint()).collect();
        Ok(Self { rank: self.rank, values })
    }

    /// Smallest eigenvalue of `V(x) − w(x) I` over all vertices; `V ≥ w` iff
    /// this is nonnegative.
    pub fn domination_margin(&self, w: &[f64]) -> Result<f64> {
        if w.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), got: w.len() });
        }
        Ok(self.min_eigenvalues().iter().zip(w).map(|(l, wx)| l - wx).fold(f64::INFINITY, f64::min))
    }
}
