use std::cell::RefCell;

use super::chart::ChartWalker;
use super::ctmc::JumpChain;
use super::{try_run_paths, MCEstimate, VectorEstimate};
use crate::error::{invalid, Error, Result};
use crate::geometry::{ModelSpace, Point};
use crate::lattice::{BundleData, PotentialField};
use crate::linalg::{CMatrix, CVector, HermitianEigen, C64};

/// Paths whose log-weight exceeds this abort the run.
pub const LOG_WEIGHT_LIMIT: f64 = 700.0;

/// Where paths come from.
#[derive(Debug, Clone, Copy)]
pub enum PathSource<'a> {
    Lattice(&'a JumpChain),
    Chart { space: &'a ModelSpace, step: f64 },
}

/// Starting state matching the source.
#[derive(Debug, Clone, PartialEq)]
pub enum Start {
    Vertex(usize),
    Point(Point),
}

/// A scalar function on states. `Field` on a lattice is evaluated at the
/// vertex coordinates.
#[derive(Clone, Copy)]
pub enum Observable<'a> {
    Constant(f64),
    Vertex(&'a [f64]),
    Field(&'a (dyn Fn(&[f64]) -> f64 + Sync)),
}

impl std::fmt::Debug for Observable<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observable::Constant(c) => write!(f, "Constant({c})"),
            Observable::Vertex(v) => write!(f, "Vertex({} values)", v.len()),
            Observable::Field(_) => write!(f, "Field"),
        }
    }
}

impl Observable<'_> {
    fn check_lattice(&self, chain: &JumpChain) -> Result<()> {
        if let Observable::Vertex(v) = self {
            let n = chain.graph().n_vertices();
            if v.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        Ok(())
    }

    fn at_vertex(&self, chain: &JumpChain, v: usize) -> f64 {
        match self {
            Observable::Constant(c) => *c,
            Observable::Vertex(values) => values[v],
            Observable::Field(f) => f(chain.graph().coords(v)),
        }
    }

    fn at_point(&self, x: &[f64]) -> Result<f64> {
        match self {
            Observable::Constant(c) => Ok(*c),
            Observable::Field(f) => Ok(f(x)),
            Observable::Vertex(_) => Err(invalid("observable", "per-vertex values need a lattice source")),
        }
    }
}

fn check_common(t: f64, n_paths: usize) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", "horizon must be finite and nonnegative"));
    }
    if n_paths == 0 {
        return Err(invalid("n_paths", "need at least one path"));
    }
    Ok(())
}

/// Per-path weights `1_{t<ζ} e^{−∫₀ᵗ w(X_s)ds} f(X_t)` in path order.
pub fn fk_scalar_samples(
    source: PathSource<'_>,
    w: Observable<'_>,
    f: Observable<'_>,
    t: f64,
    x0: &Start,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_common(t, n_paths)?;
    let overflow = |path: usize, integral: f64| Error::WeightOverflow { path, log_weight: -integral };
    match (source, x0) {
        (PathSource::Lattice(chain), Start::Vertex(v)) => {
            chain.check_start(*v)?;
            w.check_lattice(chain)?;
            f.check_lattice(chain)?;
            try_run_paths(n_paths, seed, |i, rng| {
                let mut integral = 0.0;
                let end = chain.walk(
                    *v,
                    t,
                    rng,
                    |x, ds| {
                        integral += w.at_vertex(chain, x) * ds;
                        if -integral > LOG_WEIGHT_LIMIT {
                            Err(overflow(i, integral))
                        } else {
                            Ok(())
                        }
                    },
                    |_| Ok(()),
                )?;
                Ok(if end.alive { (-integral).exp() * f.at_vertex(chain, end.vertex) } else { 0.0 })
            })
        }
        (PathSource::Chart { space, step }, Start::Point(p)) => {
            let walker = ChartWalker::new(space, step, t)?;
            w.at_point(&p.0)?;
            f.at_point(&p.0)?;
            try_run_paths(n_paths, seed, |i, rng| {
                let mut integral = 0.0;
                let end = walker.walk(
                    &p.0,
                    t,
                    rng,
                    |x, ds| {
                        integral += w.at_point(x)? * ds;
                        if -integral > LOG_WEIGHT_LIMIT {
                            Err(overflow(i, integral))
                        } else {
                            Ok(())
                        }
                    },
                    |_, _| (),
                )?;
                Ok(if end.alive { (-integral).exp() * f.at_point(&end.point)? } else { 0.0 })
            })
        }
        _ => Err(invalid("x0", "start must be a vertex for lattice sources and a point for chart sources")),
    }
}

/// Monte-Carlo estimate of `𝔼^{x0}[1_{t<ζ} e^{−∫₀ᵗ w(X_s)ds} f(X_t)]`.
pub fn fk_scalar(source: PathSource<'_>, w: Observable<'_>, f: Observable<'_>, t: f64, x0: &Start, n_paths: usize, seed: u64) -> Result<MCEstimate> {
    let samples = fk_scalar_samples(source, w, f, t, x0, n_paths, seed)?;
    Ok(MCEstimate::from_samples(&samples, seed))
}

/// `P^{x0}(t < ζ)`.
pub fn survival_probability(source: PathSource<'_>, x0: &Start, t: f64, n_paths: usize, seed: u64) -> Result<MCEstimate> {
    fk_scalar(source, Observable::Constant(0.0), Observable::Constant(1.0), t, x0, n_paths, seed)
}

/// `𝔼^{x0}[∫₀^{t∧ζ} w(X_s) ds]`.
pub fn occupation_functional(source: PathSource<'_>, w: Observable<'_>, t: f64, x0: &Start, n_paths: usize, seed: u64) -> Result<MCEstimate> {
    check_common(t, n_paths)?;
    let samples = match (source, x0) {
        (PathSource::Lattice(chain), Start::Vertex(v)) => {
            chain.check_start(*v)?;
            w.check_lattice(chain)?;
            try_run_paths(n_paths, seed, |_, rng| {
                let mut integral = 0.0;
                chain.walk(
                    *v,
                    t,
                    rng,
                    |x, ds| {
                        integral += w.at_vertex(chain, x) * ds;
                        Ok(())
                    },
                    |_| Ok(()),
                )?;
                Ok(integral)
            })?
        }
        (PathSource::Chart { space, step }, Start::Point(p)) => {
            let walker = ChartWalker::new(space, step, t)?;
            try_run_paths(n_paths, seed, |_, rng| {
                let mut integral = 0.0;
                walker.walk(
                    &p.0,
                    t,
                    rng,
                    |x, ds| {
                        integral += w.at_point(x)? * ds;
                        Ok(())
                    },
                    |_, _| (),
                )?;
                Ok(integral)
            })?
        }
        _ => return Err(invalid("x0", "start must be a vertex for lattice sources and a point for chart sources")),
    };
    Ok(MCEstimate::from_samples(&samples, seed))
}

/// Per-path values `1_{t<ζ} A_t f(X_t)` of the path-ordered product
/// `A ← A·e^{−ΔsV(x)}` on holding intervals and `A ← A·U_xy` on jumps.
/// `f` is a section over all graph vertices (index `vertex·ℓ + a`).
pub fn fk_covariant_samples(
    chain: &JumpChain,
    bundle: &BundleData,
    v: &PotentialField,
    f: &CVector,
    t: f64,
    x0: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Vec<C64>>> {
    check_common(t, n_paths)?;
    chain.check_start(x0)?;
    let graph = chain.graph();
    let rank = bundle.rank();
    let n = graph.n_vertices();
    if bundle.n_edges() != graph.n_edges() {
        return Err(Error::DimensionMismatch { expected: graph.n_edges(), got: bundle.n_edges() });
    }
    if v.rank() != rank || v.n_vertices() != n {
        return Err(Error::DimensionMismatch { expected: n * rank, got: v.n_vertices() * v.rank() });
    }
    if f.len() != n * rank {
        return Err(Error::DimensionMismatch { expected: n * rank, got: f.len() });
    }
    let eig: Vec<HermitianEigen> = (0..n).map(|x| HermitianEigen::new(v.at(x))).collect();
    let forward: Vec<&CMatrix> = (0..graph.n_edges()).map(|k| bundle.edge_transport(k)).collect();
    let backward: Vec<CMatrix> = forward.iter().map(|u| u.adjoint()).collect();
    try_run_paths(n_paths, seed, |i, rng| {
        // both callbacks extend the same product
        let acc = RefCell::new((CMatrix::identity(rank, rank), 0.0f64));
        let end = chain.walk(
            x0,
            t,
            rng,
            |x, ds| {
                let (a, log_scale) = &mut *acc.borrow_mut();
                *a = &*a * eig[x].function(|l| (-ds * l).exp());
                let m = a.iter().fold(0.0f64, |s, z| s.max(z.norm()));
                if m > 0.0 {
                    *a /= C64::new(m, 0.0);
                    *log_scale += m.ln();
                }
                if *log_scale > LOG_WEIGHT_LIMIT {
                    return Err(Error::WeightOverflow { path: i, log_weight: *log_scale });
                }
                Ok(())
            },
            |j| {
                let u = if graph.edges()[j.edge].a == j.from { forward[j.edge] } else { &backward[j.edge] };
                let (a, _) = &mut *acc.borrow_mut();
                *a = &*a * u;
                Ok(())
            },
        )?;
        let (a, log_scale) = acc.into_inner();
        if !end.alive {
            return Ok(vec![C64::new(0.0, 0.0); rank]);
        }
        let fx = f.rows(end.vertex * rank, rank);
        let scale = C64::new(log_scale.exp(), 0.0);
        Ok((&a * fx).iter().map(|z| z * scale).collect())
    })
}

/// Monte-Carlo estimate of `(e^{−tH^∇_V} f)(x0)` as an `ℓ`-vector.
pub fn fk_covariant(
    chain: &JumpChain,
    bundle: &BundleData,
    v: &PotentialField,
    f: &CVector,
    t: f64,
    x0: usize,
    n_paths: usize,
    seed: u64,
) -> Result<VectorEstimate> {
    let samples = fk_covariant_samples(chain, bundle, v, f, t, x0, n_paths, seed)?;
    Ok(VectorEstimate::from_samples(&samples, bundle.rank(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Edge, GaugeField, SchrodingerOperator, WeightedGraph};
    use crate::linalg::real_vector;

    fn two_vertex() -> WeightedGraph {
        WeightedGraph::new(vec![1.0, 1.0], vec![Edge { a: 0, b: 1, w: 1.0 }]).unwrap()
    }

    #[test]
    fn free_two_vertex_semigroup() {
        let g = two_vertex();
        let chain = JumpChain::new(&g, None).unwrap();
        let f = [1.0, 0.0];
        let e =
            fk_scalar(PathSource::Lattice(&chain), Observable::Constant(0.0), Observable::Vertex(&f), 1.0, &Start::Vertex(0), 100_000, 5).unwrap();
        let exact = 0.5 * (1.0 + (-1.0f64).exp());
        assert!((exact - 0.68394).abs() < 1e-5);
        assert!(e.agrees_with(exact, 3.0, 0.0), "{e:?}");
    }

    #[test]
    fn masked_survival() {
        let g = two_vertex();
        let chain = JumpChain::new(&g, Some(&[0])).unwrap();
        let e = survival_probability(PathSource::Lattice(&chain), &Start::Vertex(0), 1.0, 100_000, 6).unwrap();
        assert!(e.agrees_with((-0.5f64).exp(), 3.0, 0.0), "{e:?}");
        let full = JumpChain::new(&g, None).unwrap();
        let e = survival_probability(PathSource::Lattice(&full), &Start::Vertex(0), 1.0, 1000, 6).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn overflow_is_reported() {
        let g = two_vertex();
        let chain = JumpChain::new(&g, None).unwrap();
        let w = [-1000.0, -1000.0];
        let r = fk_scalar(PathSource::Lattice(&chain), Observable::Vertex(&w), Observable::Constant(1.0), 1.0, &Start::Vertex(0), 10, 0);
        assert!(matches!(r, Err(Error::WeightOverflow { path: 0, .. })));
    }

    #[test]
    fn covariant_flux_cycle_matches_matrix() {
        let g = WeightedGraph::cycle(4).unwrap();
        let bundle = BundleData::attach(&g, 1, GaugeField::U1Angles(vec![std::f64::consts::PI / 4.0; 4])).unwrap();
        let op = SchrodingerOperator::assemble(&g, &bundle, None, None).unwrap();
        let chain = JumpChain::new(&g, None).unwrap();
        let mut f = CVector::zeros(4);
        f[2] = C64::new(1.0, 0.0);
        let exact = op.apply_function(|l| (-l).exp(), &f).unwrap();
        let e = fk_covariant(&chain, &bundle, &PotentialField::zero(4, 1), &f, 1.0, 0, 100_000, 8).unwrap();
        assert!(e.agrees_with(&[exact[0]], 3.0, 0.0), "{e:?} vs {}", exact[0]);
    }

    #[test]
    fn covariant_trivial_bundle_reduces_to_scalar() {
        let g = WeightedGraph::path(3).unwrap();
        let chain = JumpChain::new(&g, None).unwrap();
        let w = [0.3, -0.2, 1.0];
        let fs = [1.0, 2.0, -1.0];
        let bundle = BundleData::trivial(&g, 1).unwrap();
        let v = PotentialField::scalar(&w, 1).unwrap();
        let cov = fk_covariant_samples(&chain, &bundle, &v, &real_vector(&fs), 0.8, 1, 200, 4).unwrap();
        let sc =
            fk_scalar_samples(PathSource::Lattice(&chain), Observable::Vertex(&w), Observable::Vertex(&fs), 0.8, &Start::Vertex(1), 200, 4).unwrap();
        for (a, b) in cov.iter().zip(&sc) {
            assert!((a[0].re - b).abs() < 1e-12 * (1.0 + b.abs()) && a[0].im.abs() < 1e-12);
        }
    }
}
