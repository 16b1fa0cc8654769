//! Adaptive Gauss-Kronrod quadrature.
//!
//! A globally adaptive G7/K15 scheme in the style of QUADPACK's `qag`: the
//! interval with the largest error estimate is bisected until the summed
//! estimate falls below `max(abs_tol, rel_tol * |value|)`. The integrand may
//! be scalar or vector valued (see [`QuadValue`]).

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Values that can be integrated: scalars and complex vectors.
pub trait QuadValue: Clone {
    fn zeros_like(&self) -> Self;
    fn add_scaled(&mut self, weight: f64, other: &Self);
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn zeros_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        *self += weight * other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl QuadValue for DVector<Complex64> {
    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }
    fn add_scaled(&mut self, weight: f64, other: &Self) {
        self.axpy(Complex64::new(weight, 0.0), other, Complex64::new(1.0, 0.0));
    }
    fn norm(&self) -> f64 {
        DVector::norm(self)
    }
    fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Tolerances and work limit for adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadPolicy {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadPolicy {
    fn default() -> Self {
        Self { abs_tol: 1e-10, rel_tol: 1e-8, max_intervals: 4000 }
    }
}

impl QuadPolicy {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
    pub evaluations: usize,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

fn gk15<T, F>(f: &F, a: f64, b: f64) -> Result<(T, f64)>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut nodes = Vec::with_capacity(15);
    for (j, &x) in XGK.iter().enumerate() {
        if j == 7 {
            nodes.push((center, WGK[7], WG[3]));
        } else {
            let wg = if j % 2 == 1 { WG[j / 2] } else { 0.0 };
            nodes.push((center - half * x, WGK[j], wg));
            nodes.push((center + half * x, WGK[j], wg));
        }
    }
    let mut values = Vec::with_capacity(15);
    for &(x, _, _) in &nodes {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteIntegrand { at: x });
        }
        values.push(v);
    }
    let mut kronrod = values[0].zeros_like();
    let mut gauss = values[0].zeros_like();
    for (v, &(_, wk, wg)) in values.iter().zip(&nodes) {
        kronrod.add_scaled(wk, v);
        if wg != 0.0 {
            gauss.add_scaled(wg, v);
        }
    }
    let mut mean = kronrod.zeros_like();
    mean.add_scaled(0.5, &kronrod);
    let mut resasc = 0.0;
    for (v, &(_, wk, _)) in values.iter().zip(&nodes) {
        let mut d = v.clone();
        d.add_scaled(-1.0, &mean);
        resasc += wk * d.norm();
    }
    resasc *= half.abs();
    let mut diff = kronrod.clone();
    diff.add_scaled(-1.0, &gauss);
    let mut value = kronrod.zeros_like();
    value.add_scaled(half, &kronrod);
    // QUADPACK rescaling of the raw |K - G| estimate
    let mut err = (half * diff.norm()).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let resabs = value.norm();
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    Ok((value, err))
}

/// Integrate `f` over `[a, b]` adaptively.
pub fn integrate<T, F>(f: F, a: f64, b: f64, policy: &QuadPolicy) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    integrate_with_breaks(f, &[a, b], policy)
}

/// Integrate over `[breaks[0], breaks[last]]`, seeding the adaptive scheme
/// with the given breakpoints (use them at kinks or near-singular points).
pub fn integrate_with_breaks<T, F>(f: F, breaks: &[f64], policy: &QuadPolicy) -> Result<QuadResult<T>>
where
    T: QuadValue,
    F: Fn(f64) -> T,
{
    if breaks.len() < 2 {
        return Err(crate::error::invalid("breaks", "need at least two points"));
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(crate::error::invalid("breaks", "must be nondecreasing"));
    }
    let mut segments: Vec<Segment<T>> = Vec::new();
    let mut evaluations = 0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gk15(&f, w[0], w[1])?;
        evaluations += 15;
        segments.push(Segment { a: w[0], b: w[1], value, error });
    }
    if segments.is_empty() {
        // zero-length interval: evaluate once to get the value's shape
        let probe = f(breaks[0]);
        return Ok(QuadResult { value: probe.zeros_like(), error: 0.0, evaluations: 1 });
    }

    loop {
        let mut total = segments[0].value.zeros_like();
        let mut total_err = 0.0;
        for s in &segments {
            total.add_scaled(1.0, &s.value);
            total_err += s.error;
        }
        let target = policy.abs_tol.max(policy.rel_tol * total.norm());
        if total_err <= target {
            return Ok(QuadResult { value: total, error: total_err, evaluations });
        }
        if segments.len() >= policy.max_intervals {
            return Err(Error::QuadratureNonConvergence { value: total.norm(), error: total_err, intervals: segments.len() });
        }
        let (worst, _) = segments.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, s)| if s.error > acc.1 { (i, s.error) } else { acc });
        let seg = segments.swap_remove(worst);
        let mid = 0.5 * (seg.a + seg.b);
        if mid <= seg.a || mid >= seg.b {
            // interval cannot be split further in floating point
            return Err(Error::QuadratureNonConvergence { value: total.norm(), error: total_err, intervals: segments.len() + 1 });
        }
        let (v1, e1) = gk15(&f, seg.a, mid)?;
        let (v2, e2) = gk15(&f, mid, seg.b)?;
        evaluations += 30;
        segments.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        segments.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
}

/// Scalar convenience wrapper returning only the value.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, policy: &QuadPolicy) -> Result<f64> {
    integrate(f, a, b, policy).map(|r| r.value)
}

/// Scalar integral with breakpoints, value only.
pub fn quad_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], policy: &QuadPolicy) -> Result<f64> {
    integrate_with_breaks(f, breaks, policy).map(|r| r.value)
}

/// Integral over `[a, ∞)` through the map `x = a + u / (1 - u)`.
pub fn quad_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, policy: &QuadPolicy) -> Result<f64> {
    let g = |u: f64| {
        let one_minus = 1.0 - u;
        let x = a + u / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else if x.is_infinite() {
            0.0
        } else {
            v
        }
    };
    quad(g, 0.0, 1.0, policy)
}
