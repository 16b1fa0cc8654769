//! Dynkin and resolvent functionals `D(w, t)`, `C_r(w)`, the class
//! verdicts built on them, Khas'minskii constants, and the lattice form bound.
//!
//! Suprema over the space are replaced by maxima over probe sets, so every
//! reported functional is a lower bound of the true supremum.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::geometry::{unit_sphere_area, ModelSpace, Point};
use crate::kernels::{dirichlet_interval_kernel, ControlPair, KernelHandle};
use crate::lattice::{SchrodingerOperator, WeightedGraph};
use crate::linalg::{real_vector, CMatrix, CVector, HermitianEigen};
use crate::quadrature::{quad, quad_breaks, QuadPolicy};
use crate::semigroup::fit_slope;

/// A potential `w`. Continuum terms are radial about a center; sums must
/// have terms of one sign so that `|Σ wᵢ| = Σ |wᵢ|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Constant {
        c: f64,
    },
    /// `c·d(y, center)^{−α}`, restricted to `d ≤ cutoff` when given.
    RadialPower {
        c: f64,
        alpha: f64,
        center: Vec<f64>,
        cutoff: Option<f64>,
    },
    /// `c·G(pole, y)` with the Green function of the space.
    Green {
        c: f64,
        pole: Vec<f64>,
    },
    /// Values on the vertices of a graph (all vertices, masked or not).
    Vertex {
        values: Vec<f64>,
    },
    Sum {
        terms: Vec<Potential>,
    },
}

impl Potential {
    pub fn coulomb(dim: usize) -> Self {
        Potential::RadialPower { c: 1.0, alpha: 1.0, center: vec![0.0; dim], cutoff: None }
    }

    /// Short identifier used in reports.
    pub fn label(&self) -> String {
        match self {
            Potential::Constant { c } => format!("constant({c})"),
            Potential::RadialPower { c, alpha, cutoff, .. } => match cutoff {
                Some(r) => format!("radial_power(c={c}, alpha={alpha}, cutoff={r})"),
                None => format!("radial_power(c={c}, alpha={alpha})"),
            },
            Potential::Green { c, .. } => format!("green(c={c})"),
            Potential::Vertex { values } => format!("vertex({} values)", values.len()),
            Potential::Sum { terms } => format!("sum[{}]", terms.iter().map(|t| t.label()).collect::<Vec<_>>().join(", ")),
        }
    }

    fn flatten(&self) -> Vec<&Potential> {
        match self {
            Potential::Sum { terms } => terms.iter().flat_map(|t| t.flatten()).collect(),
            other => vec![other],
        }
    }

    fn sign(&self) -> Option<f64> {
        let c = match self {
            Potential::Constant { c } | Potential::RadialPower { c, .. } | Potential::Green { c, .. } => *c,
            Potential::Vertex { values } => {
                if values.iter().all(|v| *v >= 0.0) {
                    1.0
                } else if values.iter().all(|v| *v <= 0.0) {
                    -1.0
                } else {
                    return None;
                }
            }
            Potential::Sum { .. } => unreachable!("flattened"),
        };
        Some(if c >= 0.0 { 1.0 } else { -1.0 })
    }

    /// Terms of `|w|`, checking that no cancellation occurs.
    fn abs_terms(&self) -> Result<Vec<&Potential>> {
        let terms = self.flatten();
        let signs: Vec<Option<f64>> = terms.iter().map(|t| t.sign()).collect();
        let consistent = match signs.first() {
            Some(Some(s)) => signs.iter().all(|x| *x == Some(*s)),
            Some(None) => signs.len() == 1,
            None => true,
        };
        if !consistent {
            return Err(Error::Unsupported("sums must have terms of one sign".into()));
        }
        Ok(terms)
    }

    /// `w(y)` on a continuum space.
    pub fn eval(&self, space: &ModelSpace, y: &Point) -> Result<f64> {
        match self {
            Potential::Constant { c } => Ok(*c),
            Potential::RadialPower { c, alpha, center, cutoff } => {
                let d = space.distance(&Point(center.clone()), y)?;
                Ok(if cutoff.is_some_and(|r| d > r) { 0.0 } else { c * d.powf(-alpha) })
            }
            Potential::Green { c, pole } => {
                let d = space.distance(&Point(pole.clone()), y)?;
                Ok(c * green_profile(space, d)?)
            }
            Potential::Vertex { .. } => Err(Error::Unsupported("vertex potentials live on graphs".into())),
            Potential::Sum { terms } => terms.iter().map(|t| t.eval(space, y)).sum(),
        }
    }

    /// `|w|` on the sites of `op` (function picture, local order).
    pub fn lattice_abs(&self, op: &SchrodingerOperator) -> Result<Vec<f64>> {
        let n = op.graph().n_vertices();
        let mut out = vec![0.0; op.n_sites()];
        for term in self.abs_terms()? {
            match term {
                Potential::Constant { c } => out.iter_mut().for_each(|o| *o += c.abs()),
                Potential::Vertex { values } => {
                    if values.len() != n {
                        return Err(Error::DimensionMismatch { expected: n, got: values.len() });
                    }
                    for (o, &v) in out.iter_mut().zip(op.kept()) {
                        *o += values[v].abs();
                    }
                }
                _ => return Err(Error::Unsupported("radial potentials need a continuum kernel".into())),
            }
        }
        Ok(out)
    }
}

/// Closed-form radial Green profile of `½Δ`.
pub fn green_profile(space: &ModelSpace, r: f64) -> Result<f64> {
    match space {
        ModelSpace::Euclidean { dim } if *dim >= 3 => {
            let m = *dim as f64;
            Ok(gamma(m / 2.0 - 1.0) * r.powf(2.0 - m) / (2.0 * PI.powf(m / 2.0)))
        }
        ModelSpace::Euclidean { .. } => Err(Error::NonIntegrable("the space is parabolic; no Green function".into())),
        ModelSpace::Hyperbolic { dim: 3 } => Ok((-r).exp() / (2.0 * PI * r.sinh())),
        ModelSpace::Hyperbolic { dim: 2 } => Ok((1.0 / (r / 2.0).tanh()).ln() / PI),
        _ => Err(Error::Unsupported("Green potential on this space".into())),
    }
}

/// Order `α` of the singularity `d^{−α}` of a radial term at its center.
fn singularity_order(space: &ModelSpace, term: &Potential) -> f64 {
    match (term, space) {
        (Potential::RadialPower { alpha, .. }, _) => alpha.max(0.0),
        (Potential::Green { .. }, ModelSpace::Euclidean { dim }) => *dim as f64 - 2.0,
        (Potential::Green { .. }, ModelSpace::Hyperbolic { dim: 3 }) => 1.0,
        _ => 0.0,
    }
}

/// Max over probes with the per-probe values; a lower bound of the sup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMax {
    pub value: f64,
    pub argmax: usize,
    pub per_probe: Vec<f64>,
}

impl ProbeMax {
    fn from_values(per_probe: Vec<f64>) -> Self {
        let (argmax, value) =
            per_probe.iter().copied().enumerate().fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
        Self { value, argmax, per_probe }
    }
}

fn eval_probes(probes: &[Point], f: impl Fn(&Point) -> Result<f64> + Sync + Send) -> Result<ProbeMax> {
    if probes.is_empty() {
        return Err(invalid("probes", "need at least one probe"));
    }
    let values: Vec<Result<f64>> = probes.par_iter().map(f).collect();
    Ok(ProbeMax::from_values(values.into_iter().collect::<Result<Vec<_>>>()?))
}

fn lattice_site(op: &SchrodingerOperator, x: &Point) -> Result<usize> {
    let v = op.graph().vertex_at(x.coords()).ok_or_else(|| Error::OutsideDomain { coords: x.0.clone() })?;
    op.local_index(v).ok_or_else(|| Error::OutsideDomain { coords: x.0.clone() })
}

/// `(1 − e^{−tλ})/λ`, continuous at `λ = 0`.
fn window(t: f64, l: f64) -> f64 {
    if (t * l).abs() < 1e-12 {
        t
    } else {
        -(-t * l).exp_m1() / l
    }
}

/// Quadrature settings for the nested integrals.
fn policy_of(k: &KernelHandle) -> QuadPolicy {
    QuadPolicy { abs_tol: 1e-13, rel_tol: 1e-10, max_intervals: k.policy.max_intervals }
}

fn as_non_integrable(e: Error) -> Error {
    match e {
        Error::QuadratureNonConvergence { value, error, .. } => {
            Error::NonIntegrable(format!("refinement diverges (value {value:.3e}, error {error:.3e})"))
        }
        Error::NonFiniteIntegrand { at } => Error::NonIntegrable(format!("integrand blows up at {at:e}")),
        other => other,
    }
}

/// Spherical mean of `r ↦ p(s, r)` over the sphere of radius `ρ` around a
/// point at distance `d` from `x`.
fn kernel_spherical_mean(k: &KernelHandle, space: &ModelSpace, s: f64, rho: f64, d: f64) -> Result<f64> {
    let m = space.dim();
    let hyper = matches!(space, ModelSpace::Hyperbolic { .. });
    if d <= 0.0 || rho <= 0.0 {
        return k.radial(s, if d <= 0.0 { rho } else { d });
    }
    if m == 1 {
        return Ok(0.5 * (k.radial(s, (rho - d).abs())? + k.radial(s, rho + d)?));
    }
    if m == 3 {
        // closed forms; (e^{−(ρ−d)²/2s} − e^{−(ρ+d)²/2s}) written with expm1
        let diff = -(-(rho - d).powi(2) / (2.0 * s)).exp() * (-2.0 * rho * d / s).exp_m1();
        let pre = (2.0 * PI * s).powf(-1.5) * s;
        return Ok(if hyper { pre * (-s / 2.0).exp() * diff / (2.0 * rho.sinh() * d.sinh()) } else { pre * diff / (2.0 * rho * d) });
    }
    let dist = |th: f64| {
        if hyper {
            let ch = rho.cosh() * d.cosh() - rho.sinh() * d.sinh() * th.cos();
            ch.max(1.0).acosh()
        } else {
            (rho * rho + d * d - 2.0 * rho * d * th.cos()).max(0.0).sqrt()
        }
    };
    let weight = |th: f64| th.sin().powi(m as i32 - 2);
    let norm = quad(weight, 0.0, PI, &QuadPolicy::default())?;
    let policy = QuadPolicy::new(1e-14, 1e-9);
    let num = quad(|th: f64| weight(th) * k.radial(s, dist(th)).unwrap_or(f64::NAN), 0.0, PI, &policy)?;
    Ok(num / norm)
}

/// `∫ p(s, x, y) |w(y)| dμ(y)` for one term of `|w|`.
fn spatial_term(k: &KernelHandle, space: &ModelSpace, term: &Potential, x: &Point, s: f64) -> Result<f64> {
    let policy = policy_of(k);
    match term {
        Potential::Constant { c } => {
            if k.is_stochastically_complete() {
                Ok(c.abs())
            } else {
                Ok(c.abs() * k.mass(s, x)?)
            }
        }
        Potential::Vertex { .. } => Err(Error::Unsupported("vertex potentials need a lattice kernel".into())),
        Potential::Sum { .. } => unreachable!("flattened"),
        Potential::RadialPower { .. } | Potential::Green { .. } => {
            let (c, center, cutoff) = match term {
                Potential::RadialPower { c, center, cutoff, .. } => (*c, center, *cutoff),
                Potential::Green { c, pole } => (*c, pole, None),
                _ => unreachable!(),
            };
            let center = Point(center.clone());
            space.check_point(&center)?;
            let m = space.dim() as f64;
            let alpha = singularity_order(space, term);
            if alpha >= m {
                return Err(Error::NonIntegrable(format!("|y|^(-{alpha}) is not locally integrable in dimension {m}")));
            }
            let profile = |rho: f64| -> Result<f64> {
                let g = match term {
                    Potential::RadialPower { alpha, .. } => rho.powf(-alpha),
                    _ => green_profile(space, rho)?,
                };
                Ok(c.abs() * g)
            };
            match space {
                ModelSpace::Interval { length } => {
                    let (xc, cc) = (x.0[0], center.0[0]);
                    let inside = |y: f64| cutoff.is_none_or(|r| (y - cc).abs() <= r);
                    // y = cc ± u^p flattens the singularity at the center
                    let p = 1.0 / (1.0 - alpha);
                    let side = |sign: f64, extent: f64| -> Result<f64> {
                        let extent = cutoff.map_or(extent, |r| r.min(extent));
                        if extent <= 0.0 {
                            return Ok(0.0);
                        }
                        let f = |u: f64| {
                            let rho = u.powf(p);
                            let y = cc + sign * rho;
                            if !inside(y) {
                                return 0.0;
                            }
                            let g = profile(rho).unwrap_or(f64::NAN);
                            p * u.powf(p - 1.0) * g * dirichlet_interval_kernel(*length, s, xc, y)
                        };
                        let mut br = vec![0.0, extent.powf(1.0 / p)];
                        let xd = sign * (xc - cc);
                        if xd > 0.0 && xd < extent {
                            br.insert(1, xd.powf(1.0 / p));
                        }
                        quad_breaks(f, &br, &policy)
                    };
                    Ok(side(1.0, length - cc)? + side(-1.0, cc)?)
                }
                ModelSpace::Box { .. } => Err(Error::Unsupported("radial potentials on boxes".into())),
                _ => {
                    let d = space.distance(&center, x)?;
                    let hyper = matches!(space, ModelSpace::Hyperbolic { .. });
                    let area = unit_sphere_area(space.dim());
                    let reach = d + (m - 1.0) * s + k.radius_multiplier * s.sqrt();
                    let top = cutoff.map_or(reach, |r| r.min(reach));
                    if top <= 0.0 {
                        return Ok(0.0);
                    }
                    // ρ = u^p turns ρ^{m−1−α} dρ into a bounded density near 0
                    let p = 1.0 / (m - alpha);
                    let f = |u: f64| {
                        let rho = u.powf(p);
                        let jac = if hyper { rho.sinh().powf(m - 1.0) } else { rho.powf(m - 1.0) };
                        let kbar = kernel_spherical_mean(k, space, s, rho, d).unwrap_or(f64::NAN);
                        let g = profile(rho).unwrap_or(f64::NAN);
                        area * p * u.powf(p - 1.0) * jac * g * kbar
                    };
                    let width = 6.0 * s.sqrt();
                    let mut br_rho = vec![0.0, top];
                    for b in [d - width, d, d + width, d + 2.0 * width] {
                        if b > 0.0 && b < top {
                            br_rho.push(b);
                        }
                    }
                    br_rho.sort_by(f64::total_cmp);
                    br_rho.dedup();
                    let br: Vec<f64> = br_rho.iter().map(|r| r.powf(1.0 / p)).collect();
                    quad_breaks(f, &br, &policy)
                }
            }
        }
    }
}

/// `∫ p(s, x, y)|w(y)| dμ(y)` on a continuum kernel.
pub fn heat_average(k: &KernelHandle, w: &Potential, x: &Point, s: f64) -> Result<f64> {
    let space = k.space().ok_or_else(|| Error::Unsupported("use the lattice functionals for matrix kernels".into()))?;
    space.check_point(x)?;
    let mut total = 0.0;
    for term in w.abs_terms()? {
        total += spatial_term(k, space, term, x, s)?;
    }
    Ok(total)
}

fn continuum_window(k: &KernelHandle, w: &Potential, x: &Point, t: f64) -> Result<f64> {
    let terms = w.abs_terms()?;
    // exact values for constants on complete spaces
    if k.is_stochastically_complete() && terms.iter().all(|t| matches!(t, Potential::Constant { .. })) {
        return Ok(terms.iter().map(|p| if let Potential::Constant { c } = p { c.abs() * t } else { 0.0 }).sum());
    }
    let space = k.space().expect("continuum kernel");
    let d_center = terms.iter().find_map(|term| match term {
        Potential::RadialPower { alpha, center, .. } if *alpha >= 2.0 => Some(space.distance(&Point(center.clone()), x)),
        _ => None,
    });
    if let Some(d) = d_center {
        if d? == 0.0 {
            return Err(Error::NonIntegrable("time integral diverges at the singular point".into()));
        }
    }
    let policy = policy_of(k);
    // s = σ² absorbs the s^{−1/2} behaviour of integrable singularities
    let f = |sigma: f64| {
        if sigma == 0.0 {
            return 0.0;
        }
        2.0 * sigma * heat_average(k, w, x, sigma * sigma).unwrap_or(f64::NAN)
    };
    let root = t.sqrt();
    quad_breaks(f, &[0.0, root * 0.1, root * 0.5, root], &policy).map_err(as_non_integrable)
}

fn continuum_laplace(k: &KernelHandle, w: &Potential, x: &Point, r: f64) -> Result<f64> {
    let terms = w.abs_terms()?;
    if k.is_stochastically_complete() && terms.iter().all(|t| matches!(t, Potential::Constant { .. })) {
        return Ok(terms.iter().map(|p| if let Potential::Constant { c } = p { c.abs() / r } else { 0.0 }).sum());
    }
    let policy = policy_of(k);
    let f = |sigma: f64| {
        if sigma == 0.0 {
            return 0.0;
        }
        let s = sigma * sigma;
        2.0 * sigma * (-r * s).exp() * heat_average(k, w, x, s).unwrap_or(f64::NAN)
    };
    let unit = (1.0 / r).sqrt();
    let br = [0.0, 0.1 * unit, unit, 2.0 * unit, 4.0 * unit, 7.0 * unit];
    quad_breaks(f, &br, &policy).map_err(as_non_integrable)
}

/// `D̂(w, t) = max_{x ∈ probes} ∫₀ᵗ ∫ p(s, x, y)|w(y)| dμ(y) ds`.
pub fn dynkin_functional(k: &KernelHandle, w: &Potential, t: f64, probes: &[Point]) -> Result<ProbeMax> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid("t", "time must be positive and finite"));
    }
    match k.operator() {
        Some(op) => {
            let aw = real_vector(&w.lattice_abs(op)?);
            let g = op.apply_function(|l| window(t, l), &aw)?;
            eval_probes(probes, |x| Ok(g[lattice_site(op, x)?].re))
        }
        None => eval_probes(probes, |x| continuum_window(k, w, x, t)),
    }
}

/// `Ĉ_r(w) = max_{x ∈ probes} ∫₀^∞ e^{−rs} ∫ p(s, x, y)|w(y)| dμ(y) ds`.
pub fn resolvent_functional(k: &KernelHandle, w: &Potential, r: f64, probes: &[Point]) -> Result<ProbeMax> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(invalid("r", "rate must be positive and finite"));
    }
    match k.operator() {
        Some(op) => {
            let aw = real_vector(&w.lattice_abs(op)?);
            let g = op.apply_function(|l| 1.0 / (l + r), &aw)?;
            eval_probes(probes, |x| Ok(g[lattice_site(op, x)?].re))
        }
        None => eval_probes(probes, |x| continuum_laplace(k, w, x, r)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KatoVerdict {
    Kato,
    ContractiveDynkin,
    DynkinOnly,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    /// Minimum fitted exponent of `D̂ ~ a t^α` near 0.
    pub alpha_min: f64,
    /// `D̂(t_min)` must fall below this.
    pub d_max: f64,
    /// Rates for the resolvent curve.
    pub r_grid: Vec<f64>,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        Self { alpha_min: 0.05, d_max: 0.1, r_grid: vec![1.0, 10.0, 100.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    #[serde(rename = "D")]
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventPoint {
    pub r: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatoReport {
    pub potential: String,
    pub probes: Vec<Vec<f64>>,
    /// Empirical `t ↦ D̂(w, t)`, a lower bound of the supremum.
    pub curve: Vec<CurvePoint>,
    pub resolvent: Vec<ResolventPoint>,
    pub verdict: KatoVerdict,
    pub tolerances: ClassifyTolerances,
    /// Fitted exponent of `D̂` over the two smallest decades.
    pub exponent: Option<f64>,
    pub diagnostics: Vec<String>,
}

/// Fills a [`KatoReport`]. `t_grid` must span two decades; failures of the
/// underlying quadrature degrade the verdict to indeterminate.
pub fn classify_potential(k: &KernelHandle, w: &Potential, probes: &[Point], t_grid: &[f64], tol: &ClassifyTolerances) -> Result<KatoReport> {
    let mut ts: Vec<f64> = t_grid.to_vec();
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    if ts.is_empty() || !(ts[0] > 0.0) || ts[ts.len() - 1] < 100.0 * ts[0] {
        return Err(invalid("t_grid", "must be positive and span at least two decades"));
    }
    let mut report = KatoReport {
        potential: w.label(),
        probes: probes.iter().map(|p| p.0.clone()).collect(),
        curve: Vec::new(),
        resolvent: Vec::new(),
        verdict: KatoVerdict::Indeterminate,
        tolerances: tol.clone(),
        exponent: None,
        diagnostics: Vec::new(),
    };
    for &t in &ts {
        match dynkin_functional(k, w, t, probes) {
            Ok(d) => report.curve.push(CurvePoint { t, d: d.value }),
            Err(e) => {
                report.diagnostics.push(format!("D(w, {t}) failed: {e}"));
                return Ok(report);
            }
        }
    }
    for &r in &tol.r_grid {
        match resolvent_functional(k, w, r, probes) {
            Ok(c) => report.resolvent.push(ResolventPoint { r, c: c.value }),
            Err(e) => report.diagnostics.push(format!("C_r(w) at r = {r} failed: {e}")),
        }
    }
    if report.curve.windows(2).any(|p| p[1].d < p[0].d * (1.0 - 1e-9) - 1e-14) {
        report.diagnostics.push("D is not monotone in t; quadrature is unreliable".into());
        return Ok(report);
    }
    let small: Vec<&CurvePoint> = report.curve.iter().filter(|p| p.t <= 100.0 * ts[0] * (1.0 + 1e-12)).collect();
    let d_min = report.curve[0].d;
    if d_min == 0.0 {
        report.exponent = Some(f64::INFINITY);
        report.verdict = KatoVerdict::Kato;
        return Ok(report);
    }
    if small.len() >= 2 && small.iter().all(|p| p.d > 0.0) {
        let xs: Vec<f64> = small.iter().map(|p| p.t.ln()).collect();
        let ys: Vec<f64> = small.iter().map(|p| p.d.ln()).collect();
        report.exponent = Some(fit_slope(&xs, &ys));
    }
    let alpha = report.exponent.unwrap_or(f64::NAN);
    report.verdict = if alpha > tol.alpha_min && d_min < tol.d_max {
        KatoVerdict::Kato
    } else if report.curve.iter().any(|p| p.d < 1.0) {
        KatoVerdict::ContractiveDynkin
    } else if report.curve.iter().all(|p| p.d.is_finite()) {
        KatoVerdict::DynkinOnly
    } else {
        KatoVerdict::Indeterminate
    };
    Ok(report)
}

/// Constants `c₁ = 1/(1 − D)`, `c₂ = (1/s) log(1/(1 − D))` of the
/// exponential-moment bound `sup_x 𝔼[e^{∫|w|} 1_{t<ζ}] ≤ c₁ e^{c₂ t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhasminskiiConstants {
    pub c1: f64,
    pub c2: f64,
}

impl KhasminskiiConstants {
    pub fn bound(&self, t: f64) -> f64 {
        self.c1 * (self.c2 * t).exp()
    }
}

pub fn khasminskii_constants(d: f64, s: f64) -> Result<KhasminskiiConstants> {
    if !(s > 0.0) {
        return Err(invalid("s", "must be positive"));
    }
    if !(d >= 0.0) {
        return Err(invalid("D", "must be nonnegative"));
    }
    if d >= 1.0 {
        return Err(Error::Precondition(format!("D(w, s) = {d} is not below 1")));
    }
    Ok(KhasminskiiConstants { c1: 1.0 / (1.0 - d), c2: -(-d).ln_1p() / s })
}

/// `c_δ = (1/s_δ) log(1/(1 − D))`, valid when `D < 1 − 1/δ`; the bound is `δ e^{t c_δ}`.
pub fn khasminskii_delta(d: f64, s_delta: f64, delta: f64) -> Result<f64> {
    if !(delta > 1.0) {
        return Err(invalid("delta", "must exceed 1"));
    }
    if !(d < 1.0 - 1.0 / delta) {
        return Err(Error::Precondition(format!("D(w, s) = {d} is not below 1 − 1/δ = {}", 1.0 - 1.0 / delta)));
    }
    Ok(khasminskii_constants(d, s_delta)?.c2)
}

/// Outcome of testing `‖√|w| f‖²_μ ≤ Ĉ_r (Q(f, f) + r‖f‖²_μ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormBoundReport {
    pub c_r: f64,
    /// Largest `lhs − rhs` over the trials, with `‖f‖_μ = 1`.
    pub max_violation: f64,
    /// Exact `sup_f ‖√|w| f‖² / ((Q + r)(f, f))`; the bound says it is `≤ Ĉ_r`.
    pub worst_ratio: f64,
    pub trials: usize,
}

/// Random-trial check of the form bound on the free operator of `graph`,
/// with `Ĉ_r` computed exactly by spectral calculus. The extremal `f` of
/// the Rayleigh quotient is always included among the trials.
pub fn form_bound_check<R: Rng + ?Sized>(graph: &WeightedGraph, w: &[f64], r: f64, trials: usize, rng: &mut R) -> Result<FormBoundReport> {
    if !(r > 0.0) {
        return Err(invalid("r", "must be positive"));
    }
    let op = SchrodingerOperator::scalar(graph, None, None)?;
    let n = op.n_sites();
    if w.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: w.len() });
    }
    let aw: Vec<f64> = w.iter().map(|v| v.abs()).collect();
    let g = op.apply_function(|l| 1.0 / (l + r), &real_vector(&aw))?;
    let c_r = g.iter().fold(0.0f64, |m, z| m.max(z.re));
    let mu = op.graph().mu().to_vec();

    let violation = |f: &CVector| -> Result<f64> {
        let norm2: f64 = f.iter().zip(&mu).map(|(z, m)| z.norm_sqr() * m).sum();
        let lhs: f64 = f.iter().zip(&mu).zip(&aw).map(|((z, m), a)| a * z.norm_sqr() * m).sum::<f64>() / norm2;
        let q = op.form(f)? / norm2;
        Ok(lhs - c_r * (q + r))
    };

    // extremal f from (S + r)^{−1/2} diag|w| (S + r)^{−1/2} in the symmetric picture
    let e = op.eigen()?;
    let inv_sqrt: CMatrix = e.function(|l| 1.0 / (l + r).sqrt());
    let mut b = inv_sqrt.clone();
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = inv_sqrt.row(i).iter().zip(inv_sqrt.column(j).iter()).enumerate().map(|(k, (a, c))| a * c * aw[k]).sum();
        }
    }
    let be = HermitianEigen::new(&b);
    let worst_ratio = be.values[n - 1];
    let top = be.vectors.column(n - 1).into_owned();
    let extremal = op.from_symmetric(&(&inv_sqrt * top));
    let mut max_violation = violation(&extremal)?;
    for _ in 0..trials {
        let f = CVector::from_iterator(n, (0..n).map(|_| crate::linalg::c(rng.sample::<f64, _>(StandardNormal))));
        max_violation = max_violation.max(violation(&f)?);
    }
    Ok(FormBoundReport { c_r, max_violation, worst_ratio, trials: trials + 1 })
}

/// Probe check of `∫ p(u, x, y)|w(y)| dμ ≤ Ξ̃(u)^{1/q′} ‖w₁‖_{q′;Ξ} + ‖w₂‖_∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqBoundReport {
    pub q_prime: f64,
    pub u: f64,
    pub weighted_norm: f64,
    pub rhs: f64,
    /// Max over probes of `∫ p(u, x, y)|w₁(y)| dμ + ‖w₂‖_∞ ∫ p(u, x, y) dμ`.
    pub lhs: f64,
    pub holds: bool,
    /// Class membership the bound implies.
    pub conclusion: String,
}

/// `‖w‖_{q;Ξ} = (∫ |w|^q Ξ dμ)^{1/q}` for a radial potential with constant `Ξ`.
pub fn weighted_norm(space: &ModelSpace, w: &Potential, q: f64, xi: f64) -> Result<f64> {
    let terms = w.abs_terms()?;
    if terms.is_empty() {
        return Ok(0.0);
    }
    if terms.len() != 1 {
        return Err(Error::Unsupported("weighted norms of sums".into()));
    }
    let m = space.dim() as f64;
    let policy = QuadPolicy::new(1e-13, 1e-10);
    match terms[0] {
        Potential::Constant { c } => Ok(if *c == 0.0 { 0.0 } else { f64::INFINITY }),
        Potential::RadialPower { c, alpha, cutoff, .. } => {
            let hyper = matches!(space, ModelSpace::Hyperbolic { .. });
            let area = unit_sphere_area(space.dim());
            let exponent = alpha * q;
            if exponent >= m {
                return Ok(f64::INFINITY);
            }
            let Some(top) = *cutoff else {
                return Ok(f64::INFINITY);
            };
            let p = 1.0 / (m - exponent);
            let f = |u: f64| {
                let rho = u.powf(p);
                let jac = if hyper { rho.sinh().powf(m - 1.0) } else { rho.powf(m - 1.0) };
                area * p * u.powf(p - 1.0) * jac * rho.powf(-exponent)
            };
            let integral = quad(f, 0.0, top.powf(1.0 / p), &policy)?;
            Ok(c.abs() * (xi * integral).powf(1.0 / q))
        }
        _ => Err(Error::Unsupported("weighted norm of this potential".into())),
    }
}

/// Evaluates the right side of the control-pair bound for `w = w₁ + w₂`
/// with `‖w₂‖_∞ ≤ w2_sup` and checks it on the probes.
pub fn weighted_lq_bound(
    k: &KernelHandle,
    w1: &Potential,
    q_prime: f64,
    pair: &ControlPair,
    w2_sup: f64,
    u: f64,
    probes: &[Point],
) -> Result<LqBoundReport> {
    let space = k.space().ok_or_else(|| Error::Unsupported("continuum kernels only".into()))?;
    let m = space.dim() as f64;
    let admissible = if space.dim() == 1 { q_prime >= 1.0 } else { q_prime > m / 2.0 };
    if !admissible || !q_prime.is_finite() {
        return Err(invalid("q_prime", format!("need q′ ≥ 1 for m = 1 and q′ > m/2 otherwise; got {q_prime} with m = {m}")));
    }
    if !(w2_sup >= 0.0) {
        return Err(invalid("w2_sup", "must be nonnegative"));
    }
    let norm = weighted_norm(space, w1, q_prime, pair.xi(&space.base_point()))?;
    if !norm.is_finite() {
        return Err(Error::Precondition(format!("‖w₁‖ in L^{q_prime}_Ξ is infinite")));
    }
    let rhs = pair.xi_tilde(u).powf(1.0 / q_prime) * norm + w2_sup;
    let lhs = eval_probes(probes, |x| {
        let mass = if k.is_stochastically_complete() { 1.0 } else { k.mass(u, x)? };
        Ok(heat_average(k, w1, x, u)? + w2_sup * mass)
    })?
    .value;
    Ok(LqBoundReport {
        q_prime,
        u,
        weighted_norm: norm,
        rhs,
        lhs,
        holds: lhs <= rhs * (1.0 + 1e-8),
        conclusion: format!("w ∈ L^{q_prime}_Ξ + L^∞ ⊂ Kato class"),
    })
}
