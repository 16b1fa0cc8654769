//! Dense/sparse complex matrices and Hermitian spectral calculus.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn real_vector(v: &[f64]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|&x| c(x)))
}

/// Sorted eigendecomposition `A = V diag(λ) V*` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(a: &CMatrix) -> Self {
        let n = a.nrows();
        let eig = nalgebra::SymmetricEigen::new(a.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::zeros(n, n);
        for (k, &i) in order.iter().enumerate() {
            vectors.set_column(k, &eig.eigenvectors.column(i));
        }
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V diag(f(λ)) V*`.
    pub fn function(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &lambda) in self.values.iter().enumerate() {
            let s = f(lambda);
            scaled.column_mut(k).scale_mut(s);
        }
        scaled * self.vectors.adjoint()
    }

    /// `V diag(f(λ)) V* v` without forming the matrix.
    pub fn apply_function(&self, f: impl Fn(f64) -> f64, v: &CVector) -> CVector {
        let mut coeffs = self.vectors.ad_mul(v);
        for (k, &lambda) in self.values.iter().enumerate() {
            coeffs[k] *= f(lambda);
        }
        &self.vectors * coeffs
    }
}

/// Minimal compressed-sparse-row matrix for large lattice operators.
#[derive(Debug, Clone)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, cidx, v) in triplets {
            if last == Some((r, cidx)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            col_idx.push(cidx);
            values.push(v);
            row_ptr[r + 1] += 1;
            last = Some((r, cidx));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(self.n);
        for r in 0..self.n {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * v[self.col_idx[k]];
            }
            out[r] = acc;
        }
        out
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for (r, c, v) in self.iter() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.values[k])))
    }

    /// Replace `A` by `(A + A*)/2`, returning the max entrywise defect `|A − A*|`.
    pub fn hermitize(&mut self) -> f64 {
        let mut trip: Vec<(usize, usize, C64)> = Vec::with_capacity(2 * self.nnz());
        for (r, c, v) in self.iter() {
            trip.push((r, c, v * 0.5));
            trip.push((c, r, v.conj() * 0.5));
        }
        let sym = CsrMatrix::from_triplets(self.n, trip);
        let mut defect: f64 = 0.0;
        let dense_like: std::collections::HashMap<(usize, usize), C64> = self.iter().map(|(r, c, v)| ((r, c), v)).collect();
        for (&(r, c), &v) in &dense_like {
            let t = dense_like.get(&(c, r)).copied().unwrap_or(ZERO);
            defect = defect.max((v - t.conj()).norm());
        }
        *self = sym;
        defect
    }
}

/// Operator storage: dense below [`SPARSE_THRESHOLD`] rows, CSR above.
#[derive(Debug, Clone)]
pub enum Storage {
    Dense(CMatrix),
    Sparse(CsrMatrix),
}

pub const SPARSE_THRESHOLD: usize = 2000;

impl Storage {
    pub fn nrows(&self) -> usize {
        match self {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(m) => m.nrows(),
        }
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        match self {
            Storage::Dense(m) => m * v,
            Storage::Sparse(m) => m.mul_vec(v),
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(m) => m.to_dense(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Storage::Sparse(_))
    }

    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        match self {
            Storage::Dense(m) => {
                let mut out = Vec::new();
                for c in 0..m.ncols() {
                    for r in 0..m.nrows() {
                        let v = m[(r, c)];
                        if v != ZERO {
                            out.push((r, c, v));
                        }
                    }
                }
                out.sort_by_key(|a| (a.0, a.1));
                out
            }
            Storage::Sparse(m) => m.iter().collect(),
        }
    }
}

/// Max entrywise `|A − A*|`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            d = d.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    d
}

/// `‖U U* − I‖` (max entry).
pub fn unitary_defect(u: &CMatrix) -> f64 {
    let p = u * u.adjoint();
    let mut d: f64 = 0.0;
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let target = if i == j { ONE } else { ZERO };
            d = d.max((p[(i, j)] - target).norm());
        }
    }
    d
}

pub fn random_complex_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal divided out.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for z in q.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Random Hermitian matrix with i.i.d. Gaussian entries scaled by `scale`.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, scale: f64, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    (&g + g.adjoint()) * c(0.5 * scale)
}

/// Fiberwise norms `|f(x)|` of a section with `rank` components per vertex.
pub fn fiber_norms(f: &CVector, rank: usize) -> Vec<f64> {
    (0..f.len() / rank).map(|x| (0..rank).map(|a| f[x * rank + a].norm_sqr()).sum::<f64>().sqrt()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn eigen_of_complex_hermitian() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = random_hermitian(6, 1.0, &mut rng);
        let e = HermitianEigen::new(&a);
        let back = e.function(|x| x);
        assert!((back - &a).norm() < 1e-12);
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(unitary_defect(&e.vectors) < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for n in 1..5 {
            assert!(unitary_defect(&random_unitary(n, &mut rng)) < 1e-12);
        }
    }

    #[test]
    fn csr_matches_dense() {
        let trip = vec![(0, 0, c(1.0)), (0, 1, C64::new(0.0, 2.0)), (1, 0, C64::new(0.0, -2.0)), (1, 1, c(3.0)), (1, 1, c(1.0))];
        let m = CsrMatrix::from_triplets(2, trip);
        let d = m.to_dense();
        assert_eq!(d[(1, 1)], c(4.0));
        let v = CVector::from_vec(vec![c(1.0), c(2.0)]);
        assert!((m.mul_vec(&v) - &d * &v).norm() < 1e-15);
        let mut m2 = m.clone();
        assert!(m2.hermitize() < 1e-15);
    }
}
