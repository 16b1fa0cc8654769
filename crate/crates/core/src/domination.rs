//! Matrix-scale checks of the comparison inequalities: semigroup
//! domination, the diamagnetic bound, `L^q` bounds, positivity, and
//! domain monotonicity.
//!
//! All checks use dense eigendecompositions as the oracle, so instances
//! are capped at [`ROW_LIMIT`] rows.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;
use crate::kernels::KernelHandle;
use crate::lattice::SchrodingerOperator;
use crate::linalg::{c, fiber_norms, real_vector, CMatrix, CVector, C64};
use crate::semigroup::{weighted_operator_norm, Exponent, NormEstimate};
use crate::stochastics::run_paths;

pub const ROW_LIMIT: usize = 500;
/// Violations below this are numerical zero.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Slack allowed in the hypothesis `V ≥ w`.
pub const HYPOTHESIS_SLACK: f64 = 1e-12;

/// JSON verdict record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub check: String,
    pub instance_hash: String,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckVerdict {
    fn new(check: &str, instance_hash: String, max_violation: f64, tolerance: f64) -> Self {
        Self { check: check.into(), instance_hash, max_violation, tolerance, pass: max_violation <= tolerance }
    }
}

/// SHA-256 over the symmetrized matrices, measures and extra parameters.
pub fn instance_hash(ops: &[&SchrodingerOperator], params: &[f64]) -> String {
    let mut h = Sha256::new();
    for op in ops {
        h.update((op.rank() as u64).to_le_bytes());
        for &m in op.graph().mu() {
            h.update(m.to_bits().to_le_bytes());
        }
        for &v in op.kept() {
            h.update((v as u64).to_le_bytes());
        }
        for (i, j, z) in op.symmetric_matrix().triplets() {
            h.update((i as u64).to_le_bytes());
            h.update((j as u64).to_le_bytes());
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
    }
    for p in params {
        h.update(p.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn check_size(op: &SchrodingerOperator) -> Result<()> {
    if op.dim() > ROW_LIMIT {
        return Err(Error::Unsupported(format!("domination checks are capped at {ROW_LIMIT} rows, got {}", op.dim())));
    }
    Ok(())
}

/// Verifies that `op_w` is the scalar comparison operator of `op_v`: same
/// graph and mask, rank one, and `V(x) ≥ w(x)` at every kept vertex.
pub fn check_hypothesis(op_v: &SchrodingerOperator, op_w: &SchrodingerOperator) -> Result<f64> {
    check_size(op_v)?;
    check_size(op_w)?;
    if op_w.rank() != 1 || !op_w.bundle().is_trivial() {
        return Err(invalid("op_w", "the comparison operator must be scalar with trivial transport"));
    }
    if op_v.graph() != op_w.graph() || op_v.kept() != op_w.kept() {
        return Err(invalid("op_w", "operators must live on the same graph and mask"));
    }
    let w = op_w.potential().as_scalar().ok_or_else(|| invalid("op_w", "scalar potential expected"))?;
    let margin = op_v.potential().domination_margin(&w)?;
    if margin < -HYPOTHESIS_SLACK {
        return Err(Error::Precondition(format!("V ≥ w fails: min σ(V(x) − w(x)) = {margin:e}")));
    }
    Ok(margin)
}

fn random_section<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// `max_x |e^{−tH^∇_V} f|(x) − (e^{−tH_w}|f|)(x)` over `trials` random
/// sections and all single-site sections, without checking `V ≥ w`.
pub fn kato_simon_violation(op_v: &SchrodingerOperator, op_w: &SchrodingerOperator, t: f64, trials: usize, seed: u64) -> Result<f64> {
    let ev = op_v.function_matrix(|l| (-t * l).exp())?;
    let ew = op_w.function_matrix(|l| (-t * l).exp())?;
    let rank = op_v.rank();
    let n = op_v.n_sites();
    if op_w.n_sites() != n {
        return Err(Error::DimensionMismatch { expected: n, got: op_w.n_sites() });
    }
    let violation = |f: &CVector| -> f64 {
        let lhs = fiber_norms(&(&ev * f), rank);
        let rhs = &ew * real_vector(&fiber_norms(f, rank));
        lhs.iter().zip(rhs.iter()).map(|(a, b)| a - b.re).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut worst = f64::NEG_INFINITY;
    for x in 0..n * rank {
        let mut f = CVector::zeros(n * rank);
        f[x] = c(1.0);
        worst = worst.max(violation(&f));
    }
    let random = run_paths(trials, seed, |_, rng| violation(&random_section(n * rank, rng)));
    Ok(random.into_iter().fold(worst, f64::max))
}

/// Pointwise domination `|e^{−tH^∇_V} f| ≤ e^{−tH_w}|f|`.
pub fn check_kato_simon(op_v: &SchrodingerOperator, op_w: &SchrodingerOperator, t: f64, trials: usize, seed: u64) -> Result<CheckVerdict> {
    check_hypothesis(op_v, op_w)?;
    let v = kato_simon_violation(op_v, op_w, t, trials, seed)?;
    Ok(CheckVerdict::new("kato_simon", instance_hash(&[op_v, op_w], &[t, trials as f64, seed as f64]), v, DEFAULT_TOLERANCE))
}

/// Margin `min σ(H^∇_V) − min σ(H_w)` and its verdict (violation = −margin).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BottomComparison {
    pub bottom_v: f64,
    pub bottom_w: f64,
    pub margin: f64,
    pub verdict: CheckVerdict,
}

pub fn check_diamagnetic_bottom(op_v: &SchrodingerOperator, op_w: &SchrodingerOperator) -> Result<BottomComparison> {
    check_hypothesis(op_v, op_w)?;
    let bottom_v = op_v.eigen()?.values[0];
    let bottom_w = op_w.eigen()?.values[0];
    let margin = bottom_v - bottom_w;
    let verdict = CheckVerdict::new("diamagnetic_bottom", instance_hash(&[op_v, op_w], &[]), -margin, DEFAULT_TOLERANCE);
    Ok(BottomComparison { bottom_v, bottom_w, margin, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub min_entry: f64,
    /// `λ₁ − λ₀`.
    pub ground_gap: f64,
    pub ground_sign_definite: bool,
    pub verdict: CheckVerdict,
}

/// Strict positivity of `e^{−tH_w}` and simplicity of the ground state.
/// A disconnected kept set is reported as [`Error::Disconnected`].
pub fn check_positivity(op: &SchrodingerOperator, t: f64) -> Result<PositivityReport> {
    check_size(op)?;
    if op.rank() != 1 || !op.bundle().is_trivial() {
        return Err(invalid("op", "positivity needs a scalar operator with trivial transport"));
    }
    let e = op.function_matrix(|l| (-t * l).exp())?;
    let min_entry = e.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    if !op.graph().is_connected_on(op.kept()) {
        return Err(Error::Disconnected { min_entry });
    }
    let eig = op.eigen()?;
    let n = eig.dim();
    let scale = eig.values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let ground_gap = if n > 1 { eig.values[1] - eig.values[0] } else { f64::INFINITY };
    let v0 = eig.vectors.column(0);
    let big = v0.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    // phase of the largest entry; after removing it every entry must be positive
    let pivot = v0.iter().find(|z| z.norm() == big).copied().unwrap_or(c(1.0));
    let phase = pivot / pivot.norm();
    let ground_sign_definite = v0.iter().all(|z| {
        let r = z / phase;
        r.re > 1e-14 * big && r.im.abs() <= 1e-10 * big
    });
    let simple = ground_gap > 1e-12 * scale;
    let violation = if min_entry > 0.0 && simple && ground_sign_definite { -min_entry } else { min_entry.abs().max(1.0) };
    let verdict = CheckVerdict::new("positivity", instance_hash(&[op], &[t]), violation, 0.0);
    Ok(PositivityReport { min_entry, ground_gap, ground_sign_definite, verdict })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqBoundCheck {
    pub q1: Exponent,
    pub q2: Exponent,
    /// `C_U(t) = sup_{x ∈ U, y} p(t, x, y)`.
    pub c_u: f64,
    pub bound: f64,
    pub norm: NormEstimate,
    /// `bound − norm`.
    pub slack: f64,
    pub verdict: CheckVerdict,
}

/// `‖1_U e^{−tH}‖_{q1,q2;μ} ≤ C_U(t)^{1/q1 − 1/q2}`. `u` lists graph
/// vertices; `None` means all kept vertices.
pub fn check_lq_bounds(
    op: &SchrodingerOperator,
    t: f64,
    u: Option<&[usize]>,
    q1: Exponent,
    q2: Exponent,
    trials: usize,
    seed: u64,
) -> Result<LqBoundCheck> {
    check_size(op)?;
    if q1.0 > q2.0 {
        return Err(invalid("q", "need q1 ≤ q2"));
    }
    if op.potential().min_eigenvalues().iter().any(|l| *l < -HYPOTHESIS_SLACK) {
        return Err(Error::Precondition("the bound needs V ≥ 0".into()));
    }
    let rows: Vec<usize> = match u {
        Some(vs) => vs.iter().map(|&v| op.local_index(v).ok_or_else(|| invalid("u", format!("vertex {v} is not kept")))).collect::<Result<_>>()?,
        None => (0..op.n_sites()).collect(),
    };
    let rank = op.rank();
    let heat = op.function_matrix(|l| (-t * l).exp())?;
    let mu: Vec<f64> = (0..op.n_sites()).map(|i| op.mu_local(i)).collect();
    // p(t, x, y) = K_xy / μ_y, blockwise operator norms for bundles
    let mut c_u = 0.0f64;
    for &x in &rows {
        for y in 0..op.n_sites() {
            let b = heat.view((x * rank, y * rank), (rank, rank)).into_owned();
            let v = if rank == 1 { b[(0, 0)].norm() } else { b.singular_values().max() };
            c_u = c_u.max(v / mu[y]);
        }
    }
    let bound = c_u.powf(q1.reciprocal() - q2.reciprocal());
    let mut rng = crate::stochastics::path_rng(seed, 0);
    let norm = weighted_operator_norm(&heat, &mu, rank, Some(&rows), q1, q2, trials, &mut rng);
    let slack = bound - norm.value;
    let verdict = CheckVerdict::new("lq_bounds", instance_hash(&[op], &[t, q1.0, q2.0]), -slack, DEFAULT_TOLERANCE);
    Ok(LqBoundCheck { q1, q2, c_u, bound, norm, slack, verdict })
}

/// `max (p_U − p)` over a grid of `(t, x, y)`.
pub fn check_domain_monotonicity(k_full: &KernelHandle, k_dirichlet: &KernelHandle, grid: &[(f64, Point, Point)]) -> Result<CheckVerdict> {
    if grid.is_empty() {
        return Err(invalid("grid", "need at least one point"));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut h = Sha256::new();
    for (t, x, y) in grid {
        worst = worst.max(k_dirichlet.eval(*t, x, y)? - k_full.eval(*t, x, y)?);
        for v in std::iter::once(t).chain(&x.0).chain(&y.0) {
            h.update(v.to_bits().to_le_bytes());
        }
    }
    let tol = if k_full.operator().is_some() { 1e-12 } else { 1e-8 };
    let hash = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(CheckVerdict::new("domain_monotonicity", hash, worst, tol))
}

/// Entrywise `p_U(t, x, y) − p(t, x, y)` on the kept vertices of a masked
/// lattice operator against its unmasked counterpart.
pub fn lattice_domain_monotonicity(full: &SchrodingerOperator, masked: &SchrodingerOperator, t: f64) -> Result<CheckVerdict> {
    check_size(full)?;
    if full.graph() != masked.graph() || full.rank() != 1 || masked.rank() != 1 {
        return Err(invalid("operators", "need scalar operators on one graph"));
    }
    let kf = full.kernel_matrix(t)?;
    let km = masked.kernel_matrix(t)?;
    let mut worst = f64::NEG_INFINITY;
    for (i, &vx) in masked.kept().iter().enumerate() {
        for (j, &vy) in masked.kept().iter().enumerate() {
            let (a, b) = (full.local_index(vx).expect("full"), full.local_index(vy).expect("full"));
            worst = worst.max(km[(i, j)].re - kf[(a, b)].re);
        }
    }
    Ok(CheckVerdict::new("domain_monotonicity", instance_hash(&[full, masked], &[t]), worst, 1e-12))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsuReport {
    pub times: Vec<f64>,
    /// `max |e^{−tS} f|(x) − (e^{−tT}|f|)(x)`.
    pub pointwise: CheckVerdict,
    /// `max |⟨e^{−tS} f₁, f₂⟩| − ⟨e^{−tT}|f₁|, |f₂|⟩`.
    pub bilinear: CheckVerdict,
}

/// Pointwise and bilinear forms of semigroup domination over a time grid.
pub fn check_hsu_direction(
    op_bundle: &SchrodingerOperator,
    op_scalar: &SchrodingerOperator,
    t_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<HsuReport> {
    check_hypothesis(op_bundle, op_scalar)?;
    if t_grid.is_empty() {
        return Err(invalid("t_grid", "need at least one time"));
    }
    let rank = op_bundle.rank();
    let n = op_bundle.n_sites();
    let mu: Vec<f64> = (0..n).map(|i| op_bundle.mu_local(i)).collect();
    let mut pointwise = f64::NEG_INFINITY;
    let mut bilinear = f64::NEG_INFINITY;
    for (k, &t) in t_grid.iter().enumerate() {
        pointwise = pointwise.max(kato_simon_violation(op_bundle, op_scalar, t, trials, seed.wrapping_add(k as u64))?);
        let es: CMatrix = op_bundle.function_matrix(|l| (-t * l).exp())?;
        let et: CMatrix = op_scalar.function_matrix(|l| (-t * l).exp())?;
        let vals = run_paths(trials, seed.wrapping_add(1000 + k as u64), |_, rng| {
            let f1 = random_section(n * rank, rng);
            let f2 = random_section(n * rank, rng);
            let g = &es * &f1;
            let lhs: C64 = (0..n).map(|x| (0..rank).map(|a| g[x * rank + a] * f2[x * rank + a].conj()).sum::<C64>() * mu[x]).sum();
            let h = &et * real_vector(&fiber_norms(&f1, rank));
            let rhs: f64 = fiber_norms(&f2, rank).iter().zip(h.iter()).zip(&mu).map(|((b, a), m)| a.re * b * m).sum();
            lhs.norm() - rhs
        });
        bilinear = vals.into_iter().fold(bilinear, f64::max);
    }
    let hash = instance_hash(&[op_bundle, op_scalar], t_grid);
    Ok(HsuReport {
        times: t_grid.to_vec(),
        pointwise: CheckVerdict::new("hsu_pointwise", hash.clone(), pointwise, DEFAULT_TOLERANCE),
        bilinear: CheckVerdict::new("hsu_bilinear", hash, bilinear, DEFAULT_TOLERANCE),
    })
}
