//! Heat semigroups, resolvent powers, spectral bottoms, product formulas
//! and weighted operator norms for assembled lattice operators.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::krylov;
use crate::lattice::{SchrodingerOperator, EIGEN_LIMIT};
use crate::linalg::{c, random_complex_vector, CMatrix, CVector, HermitianEigen, C64};
use crate::quadrature::{integrate_with_breaks, QuadPolicy};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum SemigroupMethod {
    Eigen,
    Krylov { max_dim: usize, tol: f64 },
    Trotter { steps: usize },
}

/// Evaluator for `e^{−tH}` on a fixed operator.
#[derive(Debug, Clone, Copy)]
pub struct SemigroupEvaluator<'a> {
    op: &'a SchrodingerOperator,
    method: SemigroupMethod,
}

impl<'a> SemigroupEvaluator<'a> {
    pub fn new(op: &'a SchrodingerOperator, method: SemigroupMethod) -> Result<Self> {
        match method {
            SemigroupMethod::Eigen if op.dim() > EIGEN_LIMIT => {
                return Err(invalid("method", format!("eigen evaluator limited to dimension {EIGEN_LIMIT}")));
            }
            SemigroupMethod::Krylov { max_dim, tol } if max_dim == 0 || !(tol > 0.0) => {
                return Err(invalid("method", "krylov needs a positive subspace dimension and tolerance"));
            }
            SemigroupMethod::Trotter { steps: 0 } => return Err(invalid("method", "trotter needs at least one step")),
            _ => {}
        }
        Ok(Self { op, method })
    }

    pub fn eigen(op: &'a SchrodingerOperator) -> Result<Self> {
        Self::new(op, SemigroupMethod::Eigen)
    }

    pub fn method(&self) -> SemigroupMethod {
        self.method
    }

    /// `e^{−tH} f`; `t = 0` returns `f` unchanged.
    pub fn apply(&self, t: f64, f: &CVector) -> Result<CVector> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(invalid("t", "must be finite and nonnegative"));
        }
        if f.len() != self.op.dim() {
            return Err(Error::DimensionMismatch { expected: self.op.dim(), got: f.len() });
        }
        if t == 0.0 {
            return Ok(f.clone());
        }
        match self.method {
            SemigroupMethod::Eigen => self.op.apply_function(|l| (-t * l).exp(), f),
            SemigroupMethod::Krylov { max_dim, tol } => {
                let g = self.op.to_symmetric(f);
                match krylov::expmv(self.op.symmetric_matrix(), t, &g, max_dim.min(60), tol) {
                    Ok(r) => Ok(self.op.from_symmetric(&r.value)),
                    Err(e) if self.op.dim() <= EIGEN_LIMIT => {
                        warn!("krylov failed ({e}); falling back to eigendecomposition");
                        self.op.apply_function(|l| (-t * l).exp(), f)
                    }
                    Err(e) => Err(e),
                }
            }
            SemigroupMethod::Trotter { steps } => {
                let a = self.op.kinetic_only()?;
                let b = self.op.potential_only()?;
                trotter_apply(&a, &b, t, steps, f)
            }
        }
    }
}

/// Smallest eigenvalue of `H` with a certificate.
#[derive(Debug, Clone)]
pub struct SpectrumBottom {
    pub value: f64,
    /// Eigenvector in the function picture, normalized in `L²(μ)`.
    pub vector: CVector,
    /// `‖S x − λ x‖` for the symmetrized operator.
    pub residual: f64,
    pub method: &'static str,
}

pub fn spectrum_bottom(op: &SchrodingerOperator) -> Result<SpectrumBottom> {
    let (value, sym_vec, method) = if op.dim() <= EIGEN_LIMIT {
        let e = op.eigen()?;
        (e.values[0], e.vectors.column(0).into_owned(), "eigen")
    } else {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0x5eed);
        let start = random_complex_vector(op.dim(), &mut rng);
        let r = krylov::lowest_eigenpair(op.symmetric_matrix(), &start, 120, 500, 1e-9)?;
        (r.value, r.vector, "lanczos")
    };
    let residual = (op.symmetric_matrix().mul_vec(&sym_vec) - &sym_vec * c(value)).norm();
    let vector = op.from_symmetric(&sym_vec);
    let norm = op.norm(&vector);
    Ok(SpectrumBottom { value, vector: vector / c(norm), residual, method })
}

/// `(H − λ)^{−b} f` by spectral calculus and by Laplace quadrature.
#[derive(Debug, Clone)]
pub struct ResolventPower {
    pub spectral: CVector,
    pub quadrature: CVector,
    /// `‖quadrature − spectral‖_μ / ‖spectral‖_μ`.
    pub residual: f64,
}

pub fn resolvent_power(op: &SchrodingerOperator, lambda: f64, b: f64, f: &CVector) -> Result<ResolventPower> {
    if !(b > 0.0 && b.is_finite()) {
        return Err(invalid("b", "order must be positive"));
    }
    if f.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: f.len() });
    }
    let eig = op.eigen()?;
    let bottom = eig.values[0];
    if !(lambda < bottom - 1e-12) {
        return Err(Error::TooCloseToSpectrum { lambda, bottom });
    }
    let spectral = op.apply_function(|l| (l - lambda).powf(-b), f)?;

    // Coefficients of M^{1/2} f in the eigenbasis; e^{−sH} acts diagonally.
    let coeffs = eig.vectors.ad_mul(&op.to_symmetric(f));
    let gaps: Vec<f64> = eig.values.iter().map(|l| l - lambda).collect();
    let gmin = gaps[0];
    let gmax = *gaps.last().unwrap();
    let scale = coeffs.norm().max(1e-300);
    // s = e^u; the integrand is bounded by e^{bu} on the left and by
    // e^{bu − e^u gmin} on the right.
    let lower = (1e-17f64).ln() / b;
    let mut upper = (b / gmin).ln().max(0.0) + 1.0;
    while b * upper - upper.exp() * gmin > (1e-17f64).ln() {
        upper += 0.5;
    }
    let mut breaks = vec![lower];
    for g in [gmax, gmin] {
        let peak = (b / g).ln();
        if peak > lower && peak < upper {
            breaks.push(peak);
        }
    }
    breaks.push(upper);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let policy = QuadPolicy { abs_tol: 1e-13 * scale, rel_tol: 1e-11, max_intervals: 20000 };
    let integrand = |u: f64| -> CVector {
        let s = u.exp();
        CVector::from_fn(coeffs.len(), |k, _| coeffs[k] * (b * u - s * gaps[k]).exp())
    };
    let q = integrate_with_breaks(integrand, &breaks, &policy)?;
    let g = gamma(b);
    let sym = &eig.vectors * (q.value / c(g));
    let quadrature = op.from_symmetric(&sym);
    let denom = op.norm(&spectral).max(1e-300);
    let residual = op.norm(&(&quadrature - &spectral)) / denom;
    Ok(ResolventPower { spectral, quadrature, residual })
}

/// `(H − λ)^{−1} f` by a direct LU solve of the symmetrized system.
pub fn resolvent_solve(op: &SchrodingerOperator, lambda: f64, f: &CVector) -> Result<CVector> {
    if f.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: f.len() });
    }
    let mut a = op.symmetric_matrix().to_dense();
    for i in 0..a.nrows() {
        a[(i, i)] -= c(lambda);
    }
    let x = a.lu().solve(&op.to_symmetric(f)).ok_or(Error::TooCloseToSpectrum { lambda, bottom: f64::NAN })?;
    Ok(op.from_symmetric(&x))
}

fn check_pair(a: &SchrodingerOperator, b: &SchrodingerOperator, f: &CVector) -> Result<()> {
    if a.dim() != b.dim() || a.kept() != b.kept() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: b.dim() });
    }
    if f.len() != a.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), got: f.len() });
    }
    Ok(())
}

fn exp_sym(op: &SchrodingerOperator, tau: f64) -> Result<CMatrix> {
    Ok(op.eigen()?.function(|l| (-tau * l).exp()))
}

/// `(e^{−(t/n)A} e^{−(t/n)B})ⁿ f`.
pub fn trotter_apply(a: &SchrodingerOperator, b: &SchrodingerOperator, t: f64, n: usize, f: &CVector) -> Result<CVector> {
    check_pair(a, b, f)?;
    if n == 0 {
        return Err(invalid("n", "need at least one step"));
    }
    let tau = t / n as f64;
    let step = exp_sym(a, tau)? * exp_sym(b, tau)?;
    let mut g = a.to_symmetric(f);
    for _ in 0..n {
        g = &step * g;
    }
    Ok(a.from_symmetric(&g))
}

/// Symmetric splitting `(e^{−τB/2} e^{−τA} e^{−τB/2})ⁿ f`, second order;
/// an extension beyond the plain product formula.
pub fn strang_apply(a: &SchrodingerOperator, b: &SchrodingerOperator, t: f64, n: usize, f: &CVector) -> Result<CVector> {
    check_pair(a, b, f)?;
    if n == 0 {
        return Err(invalid("n", "need at least one step"));
    }
    let tau = t / n as f64;
    let half = exp_sym(b, tau / 2.0)?;
    let step = &half * exp_sym(a, tau)? * &half;
    let mut g = a.to_symmetric(f);
    for _ in 0..n {
        g = &step * g;
    }
    Ok(a.from_symmetric(&g))
}

/// `e^{−t(A+B)} f` for two operators on the same kept set.
pub fn sum_semigroup(a: &SchrodingerOperator, b: &SchrodingerOperator, t: f64, f: &CVector) -> Result<CVector> {
    check_pair(a, b, f)?;
    let sum = a.symmetric_matrix().to_dense() + b.symmetric_matrix().to_dense();
    let g = HermitianEigen::new(&sum).apply_function(|l| (-t * l).exp(), &a.to_symmetric(f));
    Ok(a.from_symmetric(&g))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrotterReport {
    pub steps: Vec<usize>,
    pub errors: Vec<f64>,
    /// `error(n) / error(2n)` for consecutive doublings.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `−log error` against `log n`.
    pub observed_order: f64,
}

/// Errors of the product formula against `e^{−t(A+B)} f` in `L²(μ)`.
pub fn trotter_convergence(a: &SchrodingerOperator, b: &SchrodingerOperator, t: f64, f: &CVector, steps: &[usize]) -> Result<TrotterReport> {
    let exact = sum_semigroup(a, b, t, f)?;
    let mut errors = Vec::with_capacity(steps.len());
    for &n in steps {
        let approx = trotter_apply(a, b, t, n, f)?;
        errors.push(a.norm(&(approx - &exact)));
    }
    let ratios = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let xs: Vec<f64> = steps.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| -e.ln()).collect();
    Ok(TrotterReport { steps: steps.to_vec(), errors, ratios, observed_order: fit_slope(&xs, &ys) })
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Exponent `q ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponent(pub f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn new(q: f64) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(invalid("q", format!("exponent {q} must lie in [1, ∞]")));
        }
        Ok(Self(q))
    }

    /// `1/q`, zero at infinity.
    pub fn reciprocal(self) -> f64 {
        if self.0.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    pub fn conjugate(self) -> Exponent {
        if self.0 == 1.0 {
            Exponent::INF
        } else if self.0.is_infinite() {
            Exponent::ONE
        } else {
            Exponent(self.0 / (self.0 - 1.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Exact,
    /// Attained by explicit test sections; the true norm is at least this.
    LowerBound,
    /// Certified majorant from fiberwise operator norms.
    UpperBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub value: f64,
    pub kind: NormKind,
}

/// `(Σ μ_x |f(x)|^q)^{1/q}` with fiberwise Euclidean norms.
pub fn weighted_lq_norm(f: &CVector, mu: &[f64], rank: usize, q: Exponent) -> f64 {
    let fib = crate::linalg::fiber_norms(f, rank);
    if q.0.is_infinite() {
        return fib.iter().cloned().fold(0.0, f64::max);
    }
    fib.iter().zip(mu).map(|(a, m)| m * a.powf(q.0)).sum::<f64>().powf(1.0 / q.0)
}

/// Operator norm `‖1_R K‖_{q1→q2}` in `L^q(μ)` for a kernel matrix `K` in
/// the function picture acting on rank-ℓ sections.
///
/// `rows` restricts the output to the listed vertices (local indices). For
/// rank one the value is exact when `q1 = 1`, `q2 = ∞` or `q1 = q2 = 2`,
/// and a randomized lower bound otherwise. For rank above one, `q1 = q2 = 2`
/// is exact and the remaining exact cases are replaced by the majorant that
/// uses operator norms of the `ℓ×ℓ` blocks.
pub fn weighted_operator_norm<R: Rng + ?Sized>(
    k: &CMatrix,
    mu: &[f64],
    rank: usize,
    rows: Option<&[usize]>,
    q1: Exponent,
    q2: Exponent,
    trials: usize,
    rng: &mut R,
) -> NormEstimate {
    let n = mu.len();
    let all: Vec<usize> = (0..n).collect();
    let rows = rows.unwrap_or(&all);
    // |K_xy| entries (blockwise operator norm for rank > 1)
    let block = |x: usize, y: usize| -> f64 {
        if rank == 1 {
            k[(x, y)].norm()
        } else {
            let b = k.view((x * rank, y * rank), (rank, rank)).into_owned();
            b.singular_values().max()
        }
    };
    let kind_exactish = if rank == 1 { NormKind::Exact } else { NormKind::UpperBound };
    if q1.0 == 2.0 && q2.0 == 2.0 {
        let mut m = CMatrix::zeros(rows.len() * rank, n * rank);
        for (i, &x) in rows.iter().enumerate() {
            for y in 0..n {
                for a in 0..rank {
                    for b in 0..rank {
                        m[(i * rank + a, y * rank + b)] = k[(x * rank + a, y * rank + b)] * (mu[x] / mu[y]).sqrt();
                    }
                }
            }
        }
        return NormEstimate { value: m.singular_values().max(), kind: NormKind::Exact };
    }
    if q1.0 == 1.0 {
        // extreme points of the unit ball of L¹(μ) are v δ_y / μ_y
        let value = (0..n)
            .map(|y| {
                let col: Vec<f64> = rows.iter().map(|&x| block(x, y)).collect();
                let mu_rows: Vec<f64> = rows.iter().map(|&x| mu[x]).collect();
                lq_of(&col, &mu_rows, q2) / mu[y]
            })
            .fold(0.0, f64::max);
        return NormEstimate { value, kind: kind_exactish };
    }
    if q2.0.is_infinite() {
        // pointwise evaluation is the pairing with y ↦ K_xy / μ_y in L^{q1'}(μ)
        let dual = q1.conjugate();
        let value = rows
            .iter()
            .map(|&x| {
                let row: Vec<f64> = (0..n).map(|y| block(x, y) / mu[y]).collect();
                lq_of(&row, mu, dual)
            })
            .fold(0.0, f64::max);
        return NormEstimate { value, kind: kind_exactish };
    }
    randomized_norm(k, mu, rank, rows, q1, q2, trials, rng)
}

fn lq_of(vals: &[f64], mu: &[f64], q: Exponent) -> f64 {
    if q.0.is_infinite() {
        return vals.iter().cloned().fold(0.0, f64::max);
    }
    vals.iter().zip(mu).map(|(v, m)| m * v.powf(q.0)).sum::<f64>().powf(1.0 / q.0)
}

fn randomized_norm<R: Rng + ?Sized>(
    k: &CMatrix,
    mu: &[f64],
    rank: usize,
    rows: &[usize],
    q1: Exponent,
    q2: Exponent,
    trials: usize,
    rng: &mut R,
) -> NormEstimate {
    let n = mu.len();
    let mu_rows: Vec<f64> = rows.iter().map(|&x| mu[x]).collect();
    let restrict = |g: &CVector| -> CVector { CVector::from_fn(rows.len() * rank, |i, _| g[rows[i / rank] * rank + i % rank]) };
    let ratio = |f: &CVector| -> f64 {
        let num = weighted_lq_norm(&restrict(&(k * f)), &mu_rows, rank, q2);
        let den = weighted_lq_norm(f, mu, rank, q1);
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    };
    let mut best = 0.0f64;
    for trial in 0..trials.max(1) {
        let mut f = random_complex_vector(n * rank, rng);
        if trial % 2 == 1 {
            // nonnegative starts reach the extremizer of positivity-preserving kernels
            f = f.map(|z| c(z.norm()));
        }
        best = best.max(ratio(&f));
        // nonlinear power iteration for the q1 → q2 norm
        for _ in 0..30 {
            let g = restrict(&(k * &f));
            let dual_g = CVector::from_fn(g.len(), |i, _| {
                let z = g[i];
                let m = mu_rows[i / rank];
                if z.norm() == 0.0 || q2.0.is_infinite() {
                    C64::new(0.0, 0.0)
                } else {
                    z / z.norm() * z.norm().powf(q2.0 - 1.0) * m
                }
            });
            let mut lifted = CVector::zeros(n * rank);
            for (i, &x) in rows.iter().enumerate() {
                for a in 0..rank {
                    lifted[x * rank + a] = dual_g[i * rank + a];
                }
            }
            let h = k.adjoint() * lifted;
            let p = q1.conjugate().0;
            let next = CVector::from_fn(h.len(), |i, _| {
                let z = h[i] / c(mu[i / rank]);
                if z.norm() == 0.0 || p.is_infinite() {
                    z
                } else {
                    z / z.norm() * z.norm().powf(p - 1.0)
                }
            });
            if next.norm() == 0.0 || !next.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                break;
            }
            let r = ratio(&next);
            f = next;
            if r <= best * (1.0 + 1e-13) {
                best = best.max(r);
                break;
            }
            best = r;
        }
    }
    NormEstimate { value: best, kind: NormKind::LowerBound }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BundleData, Edge, GaugeField, PotentialField, WeightedGraph};
    use crate::linalg::real_vector;
    use rand::SeedableRng;

    fn two_vertex() -> SchrodingerOperator {
        let g = WeightedGraph::new(vec![1.0, 1.0], vec![Edge { a: 0, b: 1, w: 1.0 }]).unwrap();
        SchrodingerOperator::scalar(&g, None, None).unwrap()
    }

    #[test]
    fn two_vertex_semigroup() {
        let op = two_vertex();
        let ev = SemigroupEvaluator::eigen(&op).unwrap();
        let f = real_vector(&[1.0, 0.0]);
        let g = ev.apply(1.0, &f).unwrap();
        let em = (-1.0f64).exp();
        assert!((g[0].re - (1.0 + em) / 2.0).abs() < 1e-15);
        assert!((g[1].re - (1.0 - em) / 2.0).abs() < 1e-15);
        assert_eq!(ev.apply(0.0, &f).unwrap(), f);
        assert!(ev.apply(-1.0, &f).is_err());
    }

    #[test]
    fn krylov_agrees_with_eigen() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let g = WeightedGraph::random_connected(40, 0.1, &mut rng).unwrap();
        let w: Vec<f64> = (0..40).map(|_| rng.random_range(-0.5..2.0)).collect();
        let op = SchrodingerOperator::scalar(&g, Some(&w), None).unwrap();
        let f = random_complex_vector(40, &mut rng);
        let exact = SemigroupEvaluator::eigen(&op).unwrap().apply(1.3, &f).unwrap();
        let kry = SemigroupEvaluator::new(&op, SemigroupMethod::Krylov { max_dim: 30, tol: 1e-12 }).unwrap();
        assert!((kry.apply(1.3, &f).unwrap() - &exact).norm() < 1e-9 * exact.norm());
    }

    #[test]
    fn scalar_shift_factors_out() {
        let op = two_vertex();
        let shifted = op.shifted(1.0).unwrap();
        let f = real_vector(&[0.3, -1.2]);
        let a = SemigroupEvaluator::eigen(&shifted).unwrap().apply(0.7, &f).unwrap();
        let b = SemigroupEvaluator::eigen(&op).unwrap().apply(0.7, &f).unwrap() * c((-0.7f64).exp());
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn bottoms() {
        let op = two_vertex();
        let sb = spectrum_bottom(&op).unwrap();
        assert!(sb.value.abs() < 1e-15);
        assert!((sb.vector[0] - sb.vector[1]).norm() < 1e-14);
        let g = WeightedGraph::cycle(4).unwrap();
        let b = BundleData::attach(&g, 1, GaugeField::U1Angles(vec![std::f64::consts::FRAC_PI_4; 4])).unwrap();
        let mag = SchrodingerOperator::assemble(&g, &b, None, None).unwrap();
        assert!((spectrum_bottom(&mag).unwrap().value - (1.0 - 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn resolvent_two_vertex() {
        let op = two_vertex();
        let f = real_vector(&[1.0, 0.0]);
        let r = resolvent_power(&op, -1.0, 1.0, &f).unwrap();
        assert!((r.spectral[0].re - 0.75).abs() < 1e-15 && (r.spectral[1].re - 0.25).abs() < 1e-15);
        assert!(r.residual < 1e-9);
        let direct = resolvent_solve(&op, -1.0, &f).unwrap();
        assert!((direct - &r.spectral).norm() < 1e-10);
        let half = resolvent_power(&op, -1.0, 0.5, &f).unwrap();
        let twice = resolvent_power(&op, -1.0, 0.5, &half.spectral).unwrap();
        assert!((twice.spectral - r.spectral).norm() < 1e-9);
        assert!(matches!(resolvent_power(&op, 0.0, 1.0, &f), Err(Error::TooCloseToSpectrum { .. })));
    }

    #[test]
    fn trotter_first_order_and_trivial_cases() {
        let op = two_vertex();
        let v = PotentialField::scalar(&[1.0, 0.0], 1).unwrap();
        let full = op.with_potential(&v).unwrap();
        let a = full.kinetic_only().unwrap();
        let b = full.potential_only().unwrap();
        let f = real_vector(&[1.0, 0.0]);
        let rep = trotter_convergence(&a, &b, 1.0, &f, &[4, 8, 16, 32, 64, 128, 256]).unwrap();
        for r in &rep.ratios[2..] {
            assert!((r - 2.0).abs() < 0.1, "{:?}", rep.ratios);
        }
        let zero = op.potential_only().unwrap();
        let same = trotter_apply(&op, &zero, 1.0, 3, &f).unwrap();
        let exact = SemigroupEvaluator::eigen(&op).unwrap().apply(1.0, &f).unwrap();
        assert!((same - exact).norm() < 1e-14);
    }

    #[test]
    fn norm_of_identity_is_one() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let mu = vec![0.5, 2.0, 1.0];
        let id = CMatrix::identity(3, 3);
        for (q1, q2) in [(1.0, 1.0), (2.0, 2.0), (f64::INFINITY, f64::INFINITY), (3.0, 3.0)] {
            let n = weighted_operator_norm(&id, &mu, 1, None, Exponent(q1), Exponent(q2), 5, &mut rng);
            assert!((n.value - 1.0).abs() < 1e-12, "{q1} {q2} {n:?}");
        }
    }
}
