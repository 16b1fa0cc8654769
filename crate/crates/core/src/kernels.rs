//! Minimal heat kernels of the generator `(1/2)Δ` and derived kernel calculus.
//!
//! Supported kernels: Euclidean Gaussians, the closed forms on ℍ³ and ℍ²
//! (the latter as a one-dimensional integral), Dirichlet sine series on
//! intervals and boxes, and matrix kernels of assembled lattice operators.

use std::f64::consts::{LN_2, PI};
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::geometry::{ln_sinh, unit_sphere_area, ModelSpace, Point};
use crate::lattice::SchrodingerOperator;
use crate::quadrature::{quad, quad_breaks, QuadPolicy};

/// Sine-series terms are kept while `(kπ/L)² t/2 ≤` this value.
pub const SERIES_EXPONENT_CUTOFF: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    ClosedForm,
    /// Closed form up to a one-dimensional integral evaluated by quadrature.
    Quadrature,
    SineSeries,
    Matrix,
}

#[derive(Debug, Clone)]
enum Kind {
    Euclidean {
        dim: usize,
    },
    Hyperbolic3,
    Hyperbolic2,
    /// Product of Dirichlet interval kernels over the box sides.
    Dirichlet {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    Lattice(Arc<SchrodingerOperator>),
}

/// Evaluator for `p(t, x, y)` on a fixed space.
#[derive(Debug, Clone)]
pub struct KernelHandle {
    space: Option<ModelSpace>,
    kind: Kind,
    stochastically_complete: bool,
    pub policy: QuadPolicy,
    /// Radial integrals stop at `ϱ + (m−1)t + multiplier·√t`.
    pub radius_multiplier: f64,
}

pub fn make_kernel(space: &ModelSpace) -> Result<KernelHandle> {
    space.validate()?;
    let (kind, complete) = match space {
        ModelSpace::Euclidean { dim } => (Kind::Euclidean { dim: *dim }, true),
        ModelSpace::Hyperbolic { dim: 3 } => (Kind::Hyperbolic3, true),
        ModelSpace::Hyperbolic { dim: 2 } => (Kind::Hyperbolic2, true),
        ModelSpace::Hyperbolic { dim } => return Err(Error::Unsupported(format!("no heat kernel for ℍ^{dim}"))),
        ModelSpace::Interval { length } => (Kind::Dirichlet { lower: vec![0.0], upper: vec![*length] }, false),
        ModelSpace::Box { lower, upper } => (Kind::Dirichlet { lower: lower.clone(), upper: upper.clone() }, false),
    };
    Ok(KernelHandle { space: Some(space.clone()), kind, stochastically_complete: complete, policy: QuadPolicy::default(), radius_multiplier: 12.0 })
}

/// `(2πt)^{−m/2} e^{−r²/(2t)}`.
pub fn euclidean_kernel(dim: usize, t: f64, r: f64) -> f64 {
    (2.0 * PI * t).powf(-(dim as f64) / 2.0) * (-r * r / (2.0 * t)).exp()
}

/// `r / sinh r`, stable at both ends.
fn r_over_sinh(r: f64) -> f64 {
    if r < 1e-4 {
        1.0 - r * r / 6.0
    } else if r > 20.0 {
        2.0 * r * (-r).exp() / (1.0 - (-2.0 * r).exp())
    } else {
        r / r.sinh()
    }
}

/// ℍ³: `(2πt)^{−3/2} (r / sinh r) e^{−t/2 − r²/(2t)}`.
pub fn hyperbolic3_kernel(t: f64, r: f64) -> f64 {
    (2.0 * PI * t).powf(-1.5) * r_over_sinh(r) * (-t / 2.0 - r * r / (2.0 * t)).exp()
}

/// ℍ²: `√2 e^{−t/8} (2πt)^{−3/2} ∫_r^∞ s e^{−s²/(2t)} (cosh s − cosh r)^{−1/2} ds`.
///
/// On `[r, r+1]` the substitution `u = √(cosh s − cosh r)` turns the
/// integrand into `2 s e^{−s²/(2t)} / sinh s`, with
/// `s = 2 asinh(√(sinh²(r/2) + u²/2))`. Beyond `r+1` the integrand is
/// smooth and is integrated in `s` up to where the Gaussian factor drops
/// below `e^{−37}` relative to its value at `r`.
pub fn hyperbolic2_kernel(t: f64, r: f64, policy: &QuadPolicy) -> Result<f64> {
    let sh = (0.5 * r).sinh();
    let u_max = (2.0 * (0.5 * (2.0 * r + 1.0)).sinh() * 0.5f64.sinh()).sqrt();
    let near = |u: f64| -> f64 {
        let s = 2.0 * (sh * sh + 0.5 * u * u).sqrt().asinh();
        // shift the Gaussian by r² so that large r does not underflow
        2.0 * r_over_sinh(s) * (-(s * s - r * r) / (2.0 * t)).exp()
    };
    let far = |s: f64| -> f64 {
        let ln_gap = LN_2 + ln_sinh(0.5 * (s + r)) + ln_sinh(0.5 * (s - r));
        (s.ln() - (s * s - r * r) / (2.0 * t) - 0.5 * ln_gap).exp()
    };
    let scaled = QuadPolicy { abs_tol: policy.abs_tol * 1e-2, ..*policy };
    let a = quad(near, 0.0, u_max, &scaled)?;
    let s_max = r + 1.0 + (74.0 * t).sqrt();
    let mut breaks = vec![r + 1.0];
    let step = (2.0 * t).sqrt().max(1.0);
    let mut b = r + 1.0 + step;
    while b < s_max {
        breaks.push(b);
        b += step;
    }
    breaks.push(s_max);
    let far_val = quad_breaks(far, &breaks, &scaled)?;
    let prefactor = 2f64.sqrt() * (2.0 * PI * t).powf(-1.5) * (-t / 8.0 - r * r / (2.0 * t)).exp();
    Ok(prefactor * (a + far_val))
}

/// Dirichlet kernel of `(0, L)`.
pub fn dirichlet_interval_kernel(length: f64, t: f64, x: f64, y: f64) -> f64 {
    let mut sum = 0.0;
    let mut k = 1usize;
    loop {
        let freq = k as f64 * PI / length;
        let expo = freq * freq * t / 2.0;
        if expo > SERIES_EXPONENT_CUTOFF {
            break;
        }
        sum += (-expo).exp() * (freq * x).sin() * (freq * y).sin();
        k += 1;
    }
    2.0 / length * sum
}

/// `∫₀^L p_{(0,L)}(t, x, y) dy`, integrated term by term.
pub fn dirichlet_interval_mass(length: f64, t: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut k = 1usize;
    loop {
        let freq = k as f64 * PI / length;
        let expo = freq * freq * t / 2.0;
        if expo > SERIES_EXPONENT_CUTOFF {
            break;
        }
        let integral = (1.0 - (k as f64 * PI).cos()) / freq;
        sum += (-expo).exp() * (freq * x).sin() * integral;
        k += 1;
    }
    2.0 / length * sum
}

/// `G(x, y)` together with the parabolicity flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    /// `+∞` on parabolic spaces.
    pub value: f64,
    pub parabolic: bool,
}

impl KernelHandle {
    /// Matrix kernel `p(t, x, y) = (e^{−tS})_{xy} / √(μ_x μ_y)` of a scalar
    /// lattice operator. Points are vertex coordinates, or the vertex index
    /// as a single coordinate for graphs without embedding.
    pub fn lattice(op: SchrodingerOperator) -> Result<Self> {
        if op.rank() != 1 {
            return Err(Error::Unsupported("matrix kernels are scalar; use the operator directly for bundles".into()));
        }
        op.eigen()?;
        let complete = !op.is_restricted() && op.potential().is_zero();
        Ok(Self {
            space: None,
            kind: Kind::Lattice(Arc::new(op)),
            stochastically_complete: complete,
            policy: QuadPolicy::default(),
            radius_multiplier: 12.0,
        })
    }

    pub fn space(&self) -> Option<&ModelSpace> {
        self.space.as_ref()
    }

    pub fn operator(&self) -> Option<&SchrodingerOperator> {
        match &self.kind {
            Kind::Lattice(op) => Some(op),
            _ => None,
        }
    }

    pub fn method(&self) -> KernelMethod {
        match self.kind {
            Kind::Euclidean { .. } | Kind::Hyperbolic3 => KernelMethod::ClosedForm,
            Kind::Hyperbolic2 => KernelMethod::Quadrature,
            Kind::Dirichlet { .. } => KernelMethod::SineSeries,
            Kind::Lattice(_) => KernelMethod::Matrix,
        }
    }

    pub fn is_stochastically_complete(&self) -> bool {
        self.stochastically_complete
    }

    pub fn dim(&self) -> usize {
        match &self.space {
            Some(s) => s.dim(),
            None => 0,
        }
    }

    /// Depends on `x, y` only through the distance.
    pub fn is_radial(&self) -> bool {
        matches!(self.kind, Kind::Euclidean { .. } | Kind::Hyperbolic3 | Kind::Hyperbolic2)
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", "time must be positive and finite"));
        }
        Ok(())
    }

    fn vertex(&self, op: &SchrodingerOperator, x: &Point) -> Result<usize> {
        let v = op.graph().vertex_at(x.coords()).ok_or_else(|| Error::OutsideDomain { coords: x.0.clone() })?;
        op.local_index(v).ok_or_else(|| Error::OutsideDomain { coords: x.0.clone() })
    }

    /// Radial profile `r ↦ p(t, r)` of a radial kernel.
    pub fn radial(&self, t: f64, r: f64) -> Result<f64> {
        Self::check_time(t)?;
        match &self.kind {
            Kind::Euclidean { dim } => Ok(euclidean_kernel(*dim, t, r)),
            Kind::Hyperbolic3 => Ok(hyperbolic3_kernel(t, r)),
            Kind::Hyperbolic2 => hyperbolic2_kernel(t, r, &self.policy),
            _ => Err(Error::Unsupported("kernel is not radial".into())),
        }
    }

    /// `p(t, x, y)`.
    pub fn eval(&self, t: f64, x: &Point, y: &Point) -> Result<f64> {
        Self::check_time(t)?;
        match &self.kind {
            Kind::Lattice(op) => {
                let (i, j) = (self.vertex(op, x)?, self.vertex(op, y)?);
                Ok(lattice_entry(op, t, i, j)?)
            }
            Kind::Dirichlet { lower, upper } => {
                let space = self.space.as_ref().expect("continuum kernel");
                space.check_point(x)?;
                space.check_point(y)?;
                Ok((0..lower.len()).map(|i| dirichlet_interval_kernel(upper[i] - lower[i], t, x.0[i] - lower[i], y.0[i] - lower[i])).product())
            }
            Kind::Euclidean { dim } => {
                let space = self.space.as_ref().expect("continuum kernel");
                space.check_point(x)?;
                space.check_point(y)?;
                // squared distance directly, without a square root round trip
                let d2: f64 = x.0.iter().zip(&y.0).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok((2.0 * PI * t).powf(-(*dim as f64) / 2.0) * (-d2 / (2.0 * t)).exp())
            }
            _ => {
                let r = self.space.as_ref().expect("continuum kernel").distance(x, y)?;
                self.radial(t, r)
            }
        }
    }

    /// Truncation radius for radial integrals around a point at distance `rho`.
    fn radial_cutoff(&self, t: f64, rho: f64) -> f64 {
        let m = self.dim() as f64;
        rho + (m - 1.0) * t + self.radius_multiplier * t.sqrt()
    }

    fn radial_breaks(&self, t: f64, rho: f64) -> Vec<f64> {
        let cut = self.radial_cutoff(t, rho);
        let step = t.sqrt().max(0.25);
        let mut b = vec![0.0];
        let mut r = step;
        while r < cut {
            b.push(r);
            r += step;
        }
        b.push(cut);
        b
    }

    /// `∫ p(t, x, y) dμ(y)`.
    pub fn mass(&self, t: f64, x: &Point) -> Result<f64> {
        Self::check_time(t)?;
        match &self.kind {
            Kind::Euclidean { .. } | Kind::Hyperbolic3 | Kind::Hyperbolic2 => {
                self.space.as_ref().expect("continuum kernel").check_point(x)?;
                let m = self.dim();
                let area = unit_sphere_area(m);
                let density = |r: f64| -> f64 {
                    let jac = match self.kind {
                        Kind::Euclidean { .. } => r.powi(m as i32 - 1),
                        _ => r.sinh().powi(m as i32 - 1),
                    };
                    area * jac * self.radial(t, r).unwrap_or(f64::NAN)
                };
                quad_breaks(density, &self.radial_breaks(t, 0.0), &self.policy)
            }
            Kind::Dirichlet { lower, upper } => {
                self.space.as_ref().expect("continuum kernel").check_point(x)?;
                Ok((0..lower.len()).map(|i| dirichlet_interval_mass(upper[i] - lower[i], t, x.0[i] - lower[i])).product())
            }
            Kind::Lattice(op) => {
                let i = self.vertex(op, x)?;
                let mut s = 0.0;
                for j in 0..op.n_sites() {
                    s += lattice_entry(op, t, i, j)? * op.mu_local(j);
                }
                Ok(s)
            }
        }
    }

    /// `∫ p(t, x, z) p(s, z, y) dμ(z) − p(t+s, x, y)`.
    pub fn ck_residual(&self, s: f64, t: f64, x: &Point, y: &Point) -> Result<f64> {
        Self::check_time(s)?;
        Self::check_time(t)?;
        let target = self.eval(t + s, x, y)?;
        let integral = match &self.kind {
            Kind::Euclidean { .. } => {
                // the Gaussian factorizes over coordinates
                let mut prod = 1.0;
                for (a, b) in x.0.iter().zip(&y.0) {
                    let f = |z: f64| euclidean_kernel(1, t, (a - z).abs()) * euclidean_kernel(1, s, (z - b).abs());
                    let lo = a.min(*b) - self.radius_multiplier * (t.max(s)).sqrt();
                    let hi = a.max(*b) + self.radius_multiplier * (t.max(s)).sqrt();
                    prod *= quad_breaks(f, &[lo, a.min(*b), a.max(*b) + 1e-300, hi], &self.policy)?;
                }
                prod
            }
            Kind::Hyperbolic3 | Kind::Hyperbolic2 => {
                let rho = self.space.as_ref().expect("continuum kernel").distance(x, y)?;
                self.hyperbolic_ck_integral(s, t, rho)?
            }
            Kind::Dirichlet { lower, upper } => {
                let mut prod = 1.0;
                for i in 0..lower.len() {
                    let l = upper[i] - lower[i];
                    let (a, b) = (x.0[i] - lower[i], y.0[i] - lower[i]);
                    let f = |z: f64| dirichlet_interval_kernel(l, t, a, z) * dirichlet_interval_kernel(l, s, z, b);
                    let mut br = vec![0.0, a.min(b), a.max(b), l];
                    br.dedup();
                    prod *= quad_breaks(f, &br, &self.policy)?;
                }
                prod
            }
            Kind::Lattice(op) => {
                let (i, j) = (self.vertex(op, x)?, self.vertex(op, y)?);
                let mut acc = 0.0;
                for z in 0..op.n_sites() {
                    acc += lattice_entry(op, t, i, z)? * lattice_entry(op, s, z, j)? * op.mu_local(z);
                }
                acc
            }
        };
        Ok(integral - target)
    }

    /// Geodesic polar coordinates around `x`; `z` at distance `r`, angle
    /// `θ` to the geodesic through `y`, and
    /// `cosh d(z, y) = cosh r cosh ρ − sinh r sinh ρ cos θ`.
    fn hyperbolic_ck_integral(&self, s: f64, t: f64, rho: f64) -> Result<f64> {
        let m = self.dim();
        let policy = QuadPolicy { abs_tol: self.policy.abs_tol * 1e-2, rel_tol: self.policy.rel_tol * 1e-2, ..self.policy };
        let breaks = self.radial_breaks(t.max(s), rho);
        if rho < 1e-14 {
            let area = unit_sphere_area(m);
            let f = |r: f64| area * r.sinh().powi(m as i32 - 1) * self.radial(t, r).unwrap_or(f64::NAN) * self.radial(s, r).unwrap_or(f64::NAN);
            return quad_breaks(f, &breaks, &policy);
        }
        let dist = |r: f64, cos_theta: f64| -> f64 {
            // cosh d − 1 = cosh(r−ρ) − 1 + sinh r sinh ρ (1 − cos θ), kept in that form for accuracy
            let a = 2.0 * (0.5 * (r - rho)).sinh().powi(2) + r.sinh() * rho.sinh() * (1.0 - cos_theta);
            2.0 * (0.5 * a).sqrt().asinh()
        };
        let angular = |r: f64| -> f64 {
            let pr = self.radial(t, r).unwrap_or(f64::NAN);
            if pr == 0.0 {
                return 0.0;
            }
            let inner = match m {
                // ∫_S² over the sphere: 2π ∫_{−1}^{1} du
                3 => quad(|u: f64| self.radial(s, dist(r, u)).unwrap_or(f64::NAN), -1.0, 1.0, &policy).map(|v| 2.0 * PI * v),
                // ∫_S¹: 2 ∫_0^π dθ
                _ => quad(|th: f64| self.radial(s, dist(r, th.cos())).unwrap_or(f64::NAN), 0.0, PI, &policy).map(|v| 2.0 * v),
            };
            match inner {
                Ok(v) => r.sinh().powi(m as i32 - 1) * pr * v,
                Err(_) => f64::NAN,
            }
        };
        let mut br = breaks;
        br.push(rho);
        br.sort_by(f64::total_cmp);
        br.dedup();
        quad_breaks(angular, &br, &self.policy)
    }

    /// `G(x, y) = ∫₀^∞ p(t, x, y) dt`.
    pub fn green(&self, x: &Point, y: &Point) -> Result<GreenValue> {
        if x == y {
            return Err(invalid("points", "Green function needs x ≠ y"));
        }
        match &self.kind {
            Kind::Euclidean { dim } => {
                let space = self.space.as_ref().expect("continuum kernel");
                let r = space.distance(x, y)?;
                if *dim <= 2 {
                    return Ok(GreenValue { value: f64::INFINITY, parabolic: true });
                }
                let m = *dim as f64;
                let value = gamma(m / 2.0 - 1.0) * r.powf(2.0 - m) / (2.0 * PI.powf(m / 2.0));
                Ok(GreenValue { value, parabolic: false })
            }
            Kind::Hyperbolic3 | Kind::Hyperbolic2 => {
                let r = self.space.as_ref().expect("continuum kernel").distance(x, y)?;
                // t = e^v spreads the decay over a bounded range of v
                let f = |v: f64| {
                    let t = v.exp();
                    t * self.radial(t, r).unwrap_or(f64::NAN)
                };
                let lo = (r * r / 80.0).max(1e-300).ln();
                let hi = (2.0 * r + 200.0).ln();
                let mut br = vec![lo];
                let mut b = lo.floor() + 1.0;
                while b < hi {
                    br.push(b);
                    b += 1.0;
                }
                br.push(hi);
                let value = quad_breaks(f, &br, &self.policy)?;
                Ok(GreenValue { value, parabolic: false })
            }
            Kind::Dirichlet { lower, upper } if lower.len() == 1 => {
                let space = self.space.as_ref().expect("continuum kernel");
                space.check_point(x)?;
                space.check_point(y)?;
                let l = upper[0] - lower[0];
                let (a, b) = ((x.0[0] - lower[0]).min(y.0[0] - lower[0]), (x.0[0] - lower[0]).max(y.0[0] - lower[0]));
                Ok(GreenValue { value: 2.0 * a * (l - b) / l, parabolic: false })
            }
            Kind::Dirichlet { .. } => Err(Error::Unsupported("Green function on boxes of dimension > 1".into())),
            Kind::Lattice(op) => {
                let (i, j) = (self.vertex(op, x)?, self.vertex(op, y)?);
                let e = op.eigen()?;
                if e.values[0] <= 1e-12 * e.values.last().unwrap().abs().max(1.0) {
                    return Ok(GreenValue { value: f64::INFINITY, parabolic: true });
                }
                let mut g = 0.0;
                for k in 0..e.dim() {
                    g += (e.vectors[(i, k)] * e.vectors[(j, k)].conj()).re / e.values[k];
                }
                Ok(GreenValue { value: g / (op.mu_local(i) * op.mu_local(j)).sqrt(), parabolic: false })
            }
        }
    }

    /// Off-diagonal spot check that `sup_y p(t, x, y)` is attained at `y = x`:
    /// compares the diagonal with points displaced along each axis.
    pub fn diagonal_is_sup(&self, t: f64, x: &Point) -> Result<bool> {
        let diag = self.eval(t, x, x)?;
        let space = match &self.space {
            Some(s) => s,
            None => return Ok(true),
        };
        for axis in 0..x.dim() {
            for step in [1e-3, 0.1, 0.5, 2.0] {
                for sign in [-1.0, 1.0] {
                    let mut y = x.clone();
                    y.0[axis] += sign * step * t.sqrt();
                    if !space.contains(&y) {
                        continue;
                    }
                    if self.eval(t, x, &y)? > diag * (1.0 + 1e-12) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }
}

fn lattice_entry(op: &SchrodingerOperator, t: f64, i: usize, j: usize) -> Result<f64> {
    let e = op.eigen()?;
    let mut acc = 0.0;
    for k in 0..e.dim() {
        acc += (-t * e.values[k]).exp() * (e.vectors[(i, k)] * e.vectors[(j, k)].conj()).re;
    }
    Ok(acc / (op.mu_local(i) * op.mu_local(j)).sqrt())
}

/// CSV rows `t,x...,y...,p` with full double precision.
pub fn write_kernel_csv<W: Write>(out: &mut W, k: &KernelHandle, samples: &[(f64, Point, Point)]) -> Result<()> {
    let dim = samples.first().map_or(0, |s| s.1.dim());
    let mut header = vec!["t".to_string()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend((0..dim).map(|i| format!("y{i}")));
    header.push("p".into());
    writeln!(out, "{}", header.join(","))?;
    for (t, x, y) in samples {
        let p = k.eval(*t, x, y)?;
        let mut row = vec![format!("{t:.16e}")];
        row.extend(x.0.iter().map(|v| format!("{v:.16e}")));
        row.extend(y.0.iter().map(|v| format!("{v:.16e}")));
        row.push(format!("{p:.16e}"));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ControlVariant {
    /// `Ξ(x) = C ε₂ᵐ / min(r_Eucl(x, b), ε₁)ᵐ`, `Ξ̃(t) = ε₁ᵐ / (ε₂ᵐ t^{m/2}) + 1`.
    Canonical { b: f64, eps1: f64, eps2: f64, c: f64 },
    /// `Ξ ≡ 1`, `Ξ̃(t) = C min(t, T)^{−m/2}`; `t_cap = None` means `T = ∞`.
    Ultracontractive { c: f64, t_cap: Option<f64> },
    /// `Ξ(x) = C / μ(B(x, 1))`,
    /// `Ξ̃(t) = (e^{(m−1)√K} t^{−m/2} + 1) e^{(δ₂ − λ₀)t}`.
    LiYau { k: f64, delta1: f64, delta2: f64, c: f64, lambda0: f64 },
}

impl ControlVariant {
    pub fn constant(&self) -> f64 {
        match *self {
            ControlVariant::Canonical { c, .. } | ControlVariant::Ultracontractive { c, .. } | ControlVariant::LiYau { c, .. } => c,
        }
    }

    pub fn with_constant(self, new_c: f64) -> Self {
        match self {
            ControlVariant::Canonical { b, eps1, eps2, .. } => ControlVariant::Canonical { b, eps1, eps2, c: new_c },
            ControlVariant::Ultracontractive { t_cap, .. } => ControlVariant::Ultracontractive { c: new_c, t_cap },
            ControlVariant::LiYau { k, delta1, delta2, lambda0, .. } => ControlVariant::LiYau { k, delta1, delta2, c: new_c, lambda0 },
        }
    }
}

/// Numerical record that `∫₀^∞ Ξ̃(t)^{1/q′} e^{−At} dt < ∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityRecord {
    pub q_prime: f64,
    pub a: f64,
    /// Value of the integral over `[10⁻⁸, 10⁴]`.
    pub value: f64,
    pub finite: bool,
}

/// Factorized bound `sup_y p(t, x, y) ≤ Ξ(x) Ξ̃(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPair {
    pub dim: usize,
    pub variant: ControlVariant,
    /// `Ξ` is constant on the homogeneous spaces supported here.
    pub xi_value: f64,
    pub admissible: Vec<IntegrabilityRecord>,
}

pub fn make_control_pair(space: &ModelSpace, variant: ControlVariant) -> Result<ControlPair> {
    space.validate()?;
    let m = space.dim();
    let c = variant.constant();
    if !(c > 0.0 && c.is_finite()) {
        return Err(invalid("c", "constant must be positive and finite"));
    }
    let xi_value = match variant {
        ControlVariant::Canonical { b, eps1, eps2, c } => {
            if !(eps1 > 0.0) || !(eps2 > 1.0) {
                return Err(invalid("eps", "need ε₁ > 0 and ε₂ > 1"));
            }
            let r = space.euclidean_radius(b)?;
            c * eps2.powi(m as i32) / r.min(eps1).powi(m as i32)
        }
        ControlVariant::Ultracontractive { t_cap, .. } => {
            if let Some(t) = t_cap {
                if !(t > 0.0) {
                    return Err(invalid("t_cap", "must be positive"));
                }
            }
            1.0
        }
        ControlVariant::LiYau { k, delta1, delta2, c, .. } => {
            let mf = m as f64;
            if !(k >= 0.0) || !(delta1 * delta2 > (mf - 1.0).powi(2) * k / 8.0) {
                return Err(invalid("delta", "need δ₁δ₂ > (m−1)²K/8 and K ≥ 0"));
            }
            if !space.is_homogeneous() {
                return Err(Error::Unsupported("Li–Yau pairs need a homogeneous space".into()));
            }
            c / space.volume_ball(&space.base_point(), 1.0)?
        }
    };
    Ok(ControlPair { dim: m, variant, xi_value, admissible: Vec::new() })
}

/// Bottom of the spectrum used as `λ₀` for the supported model spaces.
pub fn spectral_bottom_of(space: &ModelSpace) -> f64 {
    match space {
        ModelSpace::Hyperbolic { dim } => ((*dim as f64) - 1.0).powi(2) / 8.0,
        _ => 0.0,
    }
}

impl ControlPair {
    pub fn xi(&self, _x: &Point) -> f64 {
        self.xi_value
    }

    pub fn xi_tilde(&self, t: f64) -> f64 {
        let m = self.dim as f64;
        match self.variant {
            ControlVariant::Canonical { eps1, eps2, .. } => eps1.powf(m) / (eps2.powf(m) * t.powf(m / 2.0)) + 1.0,
            ControlVariant::Ultracontractive { c, t_cap } => c * t.min(t_cap.unwrap_or(f64::INFINITY)).powf(-m / 2.0),
            ControlVariant::LiYau { k, delta2, lambda0, .. } => {
                (((m - 1.0) * k.sqrt()).exp() * t.powf(-m / 2.0) + 1.0) * ((delta2 - lambda0) * t).exp()
            }
        }
    }

    /// `Ξ(x)Ξ̃(t) / C`, the shape that an empirical constant multiplies.
    /// `log Ξ̃(t)` without overflow of the exponential factor.
    pub fn log_xi_tilde(&self, t: f64) -> f64 {
        let m = self.dim as f64;
        match self.variant {
            ControlVariant::LiYau { k, delta2, lambda0, .. } => (((m - 1.0) * k.sqrt()).exp() * t.powf(-m / 2.0)).ln_1p() + (delta2 - lambda0) * t,
            _ => self.xi_tilde(t).ln(),
        }
    }

    pub fn shape(&self, x: &Point, t: f64) -> f64 {
        self.xi(x) * self.xi_tilde(t) / self.variant.constant()
    }

    pub fn with_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        let old = self.variant.constant();
        out.variant = self.variant.with_constant(c);
        match self.variant {
            ControlVariant::Ultracontractive { .. } => {}
            _ => out.xi_value = self.xi_value * c / old,
        }
        out
    }

    /// Checks the integrability condition for `(q′, A)` and records it when
    /// it holds. The integral is evaluated over `[ε, T]` for shrinking `ε`
    /// and growing `T`; it is declared finite when both the head and the
    /// tail increments decay geometrically.
    pub fn declare_admissible(&mut self, q_prime: f64, a: f64) -> Result<IntegrabilityRecord> {
        if !(q_prime >= 1.0) {
            return Err(invalid("q_prime", "must be at least 1"));
        }
        let rec = self.integrability(q_prime, a)?;
        if rec.finite && !self.admissible.iter().any(|r| r.q_prime == q_prime && r.a == a) {
            self.admissible.push(rec);
        }
        Ok(rec)
    }

    pub fn integrability(&self, q_prime: f64, a: f64) -> Result<IntegrabilityRecord> {
        let policy = QuadPolicy::new(1e-13, 1e-10);
        // t = e^v
        let f = |v: f64| {
            let t = v.exp();
            let log_val = self.log_xi_tilde(t) / q_prime - a * t + v;
            if log_val < -700.0 {
                0.0
            } else {
                log_val.exp()
            }
        };
        let ln10 = std::f64::consts::LN_10;
        let piece = |lo: f64, hi: f64| -> Result<f64> {
            let n = ((hi - lo) / ln10).ceil().max(1.0) as usize;
            let br: Vec<f64> = (0..=n).map(|i| lo * ln10 + (hi - lo) * ln10 * i as f64 / n as f64).collect();
            quad_breaks(f, &br, &policy)
        };
        let core = piece(-2.0, 1.0)?;
        let heads = [piece(-4.0, -2.0)?, piece(-6.0, -4.0)?, piece(-8.0, -6.0)?];
        let tails = [piece(1.0, 2.0)?, piece(2.0, 3.0)?, piece(3.0, 4.0)?];
        let total = core + heads.iter().sum::<f64>() + tails.iter().sum::<f64>();
        // successive increments over equal log-ranges must shrink geometrically
        let decays = |inc: &[f64; 3]| inc[1] <= 0.7 * inc[0] + 1e-300 && inc[2] <= 0.7 * inc[1] + 1e-300;
        let finite = total.is_finite() && decays(&heads) && decays(&tails);
        Ok(IntegrabilityRecord { q_prime, a, value: total, finite })
    }
}

/// Result of checking `p(t, x, x) ≤ Ξ(x)Ξ̃(t)` on a probe grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCheck {
    pub grid_points: usize,
    pub grid_times: usize,
    pub max_violation: f64,
    /// Smallest constant consistent with the grid (empirical).
    pub calibrated_c: f64,
    pub diagonal_sup_verified: bool,
    pub integrability: Vec<IntegrabilityRecord>,
}

pub fn check_control_pair(k: &KernelHandle, pair: &ControlPair, points: &[Point], times: &[f64]) -> Result<ControlCheck> {
    if points.is_empty() || times.is_empty() {
        return Err(invalid("grid", "probe grid must be nonempty"));
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut calibrated: f64 = 0.0;
    let mut sup_ok = true;
    for x in points {
        for &t in times {
            let p = k.eval(t, x, x)?;
            max_violation = max_violation.max(p - pair.xi(x) * pair.xi_tilde(t));
            calibrated = calibrated.max(p / pair.shape(x, t));
        }
        sup_ok &= k.diagonal_is_sup(times[0], x)?;
    }
    Ok(ControlCheck {
        grid_points: points.len(),
        grid_times: times.len(),
        max_violation,
        calibrated_c: calibrated,
        diagonal_sup_verified: sup_ok,
        integrability: pair.admissible.clone(),
    })
}

/// Smallest constant making the pair dominate the kernel on the grid.
pub fn calibrate_constant(k: &KernelHandle, pair: &ControlPair, points: &[Point], times: &[f64]) -> Result<f64> {
    Ok(check_control_pair(k, pair, points, times)?.calibrated_c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn h3() -> KernelHandle {
        make_kernel(&ModelSpace::hyperbolic(3).unwrap()).unwrap()
    }

    #[test]
    fn euclidean_values() {
        let k = make_kernel(&ModelSpace::euclidean(1).unwrap()).unwrap();
        let o = Point::origin(1);
        assert_relative_eq!(k.eval(1.0, &o, &o).unwrap(), (2.0 * PI).powf(-0.5), max_relative = 1e-15);
        let k2 = make_kernel(&ModelSpace::euclidean(2).unwrap()).unwrap();
        let o2 = Point::origin(2);
        assert_relative_eq!(k2.eval(1.0, &o2, &o2).unwrap(), 1.0 / (2.0 * PI), max_relative = 1e-15);
        assert!(k.eval(0.0, &o, &o).is_err());
    }

    #[test]
    fn hyperbolic3_diagonal() {
        let k = h3();
        let x = Point::new(vec![0.0, 0.0, 1.0]);
        // (2π)^{−3/2} e^{−1/2}
        assert_relative_eq!(k.eval(1.0, &x, &x).unwrap(), 0.0385108368907489, max_relative = 1e-13);
    }

    #[test]
    fn hyperbolic2_matches_oracle() {
        let p = QuadPolicy::default();
        // high-precision reference values of the defining integral
        assert_relative_eq!(hyperbolic2_kernel(1.0, 1.0, &p).unwrap(), 0.075_726_752_643_569_16, max_relative = 1e-8);
        assert_relative_eq!(hyperbolic2_kernel(0.5, 2.0, &p).unwrap(), 0.004_000_753_702_540_173, max_relative = 1e-8);
        assert_relative_eq!(hyperbolic2_kernel(1.0, 0.0, &p).unwrap(), 0.13505600024041982, max_relative = 1e-8);
        assert_relative_eq!(hyperbolic2_kernel(5.0, 3.0, &p).unwrap(), 0.003356789516738093, max_relative = 1e-8);
    }

    #[test]
    fn hyperbolic2_mass_is_one() {
        let k = make_kernel(&ModelSpace::hyperbolic(2).unwrap()).unwrap();
        let x = Point::new(vec![0.0, 1.0]);
        assert!((k.mass(1.0, &x).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn dirichlet_interval_values() {
        let k = make_kernel(&ModelSpace::interval(PI).unwrap()).unwrap();
        let x = Point::new(vec![PI / 2.0]);
        assert_relative_eq!(k.eval(2.0, &x, &x).unwrap(), 0.23427789122750357, max_relative = 1e-13);
        assert_relative_eq!(k.mass(2.0, &x).unwrap(), 0.468346275450499, max_relative = 1e-12);
        assert!(k.eval(2.0, &Point::new(vec![4.0]), &x).is_err());
    }

    #[test]
    fn masses() {
        let k = make_kernel(&ModelSpace::euclidean(3).unwrap()).unwrap();
        assert!((k.mass(0.7, &Point::origin(3)).unwrap() - 1.0).abs() < 1e-9);
        let x = Point::new(vec![0.0, 0.0, 1.0]);
        for t in [0.1, 1.0, 10.0] {
            assert!((h3().mass(t, &x).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        let k = make_kernel(&ModelSpace::euclidean(1).unwrap()).unwrap();
        let r = k.ck_residual(0.5, 0.5, &Point::new(vec![0.0]), &Point::new(vec![1.0])).unwrap();
        assert!(r.abs() < 1e-8);
        let x = Point::new(vec![0.0, 0.0, 1.0]);
        assert!(h3().ck_residual(0.5, 0.5, &x, &x).unwrap().abs() < 1e-5);
        let y = Point::new(vec![0.3, 0.0, 1.4]);
        assert!(h3().ck_residual(0.5, 0.25, &x, &y).unwrap().abs() < 1e-6);
    }

    #[test]
    fn green_functions() {
        let k = make_kernel(&ModelSpace::euclidean(3).unwrap()).unwrap();
        let g = k.green(&Point::origin(3), &Point::new(vec![1.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!(g.value, 1.0 / (2.0 * PI), max_relative = 1e-14);
        let k2 = make_kernel(&ModelSpace::euclidean(2).unwrap()).unwrap();
        let g2 = k2.green(&Point::origin(2), &Point::new(vec![1.0, 0.0])).unwrap();
        assert!(g2.parabolic && g2.value.is_infinite());
        // ℍ³: e^{−r}/(2π sinh r) at r = 1
        let x = Point::new(vec![0.0, 0.0, 1.0]);
        let y = Point::new(vec![0.0, 0.0, 1f64.exp()]);
        assert_relative_eq!(h3().green(&x, &y).unwrap().value, 0.049_821_113_049_401_28, max_relative = 1e-7);
        // ℍ²: (1/π) log coth(r/2) at r = 1
        let kh2 = make_kernel(&ModelSpace::hyperbolic(2).unwrap()).unwrap();
        let g = kh2.green(&Point::new(vec![0.0, 1.0]), &Point::new(vec![0.0, 1f64.exp()])).unwrap();
        assert_relative_eq!(g.value, (1.0 / 0.5f64.tanh()).ln() / PI, max_relative = 1e-6);
        assert!(k.green(&Point::origin(3), &Point::origin(3)).is_err());
    }

    #[test]
    fn heat_equation_residual_hyperbolic3() {
        // ∂_t p = (1/2)(p'' + 2 coth r p') for the radial profile
        let h = 1e-4;
        for &t in &[0.5, 1.0, 3.0] {
            for &r in &[0.3, 1.0, 2.5] {
                let p = |t: f64, r: f64| hyperbolic3_kernel(t, r);
                let dt = (p(t + h, r) - p(t - h, r)) / (2.0 * h);
                let d1 = (p(t, r + h) - p(t, r - h)) / (2.0 * h);
                let d2 = (p(t, r + h) - 2.0 * p(t, r) + p(t, r - h)) / (h * h);
                let lap = d2 + 2.0 / r.tanh() * d1;
                assert!((dt - 0.5 * lap).abs() <= 1e-4 * dt.abs().max(p(t, r)), "t={t} r={r}");
            }
        }
    }

    #[test]
    fn control_pairs() {
        let space = ModelSpace::euclidean(2).unwrap();
        let k = make_kernel(&space).unwrap();
        let pts = vec![Point::origin(2), Point::new(vec![1.0, -2.0])];
        let times = [0.1, 1.0, 10.0];
        let exact = make_control_pair(&space, ControlVariant::Ultracontractive { c: 1.0 / (2.0 * PI), t_cap: None }).unwrap();
        let chk = check_control_pair(&k, &exact, &pts, &times).unwrap();
        assert!(chk.max_violation.abs() < 1e-15 && chk.diagonal_sup_verified);
        let broken = exact.with_constant(0.9 / (2.0 * PI));
        assert!(check_control_pair(&k, &broken, &pts, &times).unwrap().max_violation > 0.0);
        let canon = make_control_pair(&space, ControlVariant::Canonical { b: 2.0, eps1: 1.0, eps2: 2.0, c: 1.0 }).unwrap();
        assert_relative_eq!(canon.xi_value, 4.0);
        assert!(make_control_pair(&space, ControlVariant::Canonical { b: 2.0, eps1: 1.0, eps2: 0.5, c: 1.0 }).is_err());
    }

    #[test]
    fn integrability_records() {
        let space = ModelSpace::euclidean(3).unwrap();
        let mut pair = make_control_pair(&space, ControlVariant::Ultracontractive { c: 1.0, t_cap: None }).unwrap();
        assert!(pair.declare_admissible(2.0, 1.0).unwrap().finite);
        // q′ = 1 < m/2: t^{−3/2} is not integrable at 0
        assert!(!pair.declare_admissible(1.0, 1.0).unwrap().finite);
        assert_eq!(pair.admissible.len(), 1);
    }
}
