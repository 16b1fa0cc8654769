//! Monte-Carlo paths against exact matrix and kernel quantities.

mod common;

use std::f64::consts::PI;

use common::*;
use schrokato::geometry::{ModelSpace, Point};
use schrokato::kato::{dynkin_functional, khasminskii_constants, Potential};
use schrokato::kernels::{dirichlet_interval_mass, make_kernel, KernelHandle};
use schrokato::lattice::{SchrodingerOperator, WeightedGraph};
use schrokato::stochastics::{
    fk_scalar, occupation_functional, run_paths, sample_path_ctmc, survival_probability, JumpChain, MCEstimate, Observable, PathSource, Start,
};

/// Largest deviation of endpoint frequencies from `exact`, in binomial
/// standard errors of the exact probabilities.
fn worst_sigma(ends: &[Option<usize>], exact: &[f64]) -> f64 {
    let m = ends.len() as f64;
    exact
        .iter()
        .enumerate()
        .map(|(v, &p)| {
            let freq = ends.iter().filter(|e| **e == Some(v)).count() as f64 / m;
            (freq - p).abs() / (p * (1.0 - p) / m).sqrt()
        })
        .fold(0.0, f64::max)
}

#[test]
fn ctmc_transition_frequencies_match_heat_matrix() {
    for inst in 0..3u64 {
        let n = 7;
        let g = random_graph(n, 50 + inst);
        let chain = JumpChain::new(&g, None).unwrap();
        let op = SchrodingerOperator::scalar(&g, None, None).unwrap();
        let t = 0.8;
        let heat = op.heat_matrix(t).unwrap();
        let x0 = inst as usize;
        let ends = run_paths(40_000, 500 + inst, |_, rng| {
            let p = sample_path_ctmc(&chain, x0, t, rng).unwrap();
            p.alive.then(|| *p.states.last().unwrap())
        });
        let exact: Vec<f64> = (0..n).map(|y| heat[(x0, y)].re).collect();
        let dev = worst_sigma(&ends, &exact);
        assert!(dev <= 3.0, "instance {inst}: {dev} standard errors");
    }
}

#[test]
fn killed_chain_survival_matches_dirichlet_mass() {
    let g = WeightedGraph::path(9).unwrap();
    let mask: Vec<usize> = (1..8).collect();
    let chain = JumpChain::new(&g, Some(&mask)).unwrap();
    let op = SchrodingerOperator::scalar(&g, None, Some(&mask)).unwrap();
    let t = 1.5;
    let heat = op.heat_matrix(t).unwrap();
    let x0 = 4;
    let local = op.local_index(x0).unwrap();
    let mass: f64 = (0..op.dim()).map(|j| heat[(local, j)].re).sum();
    let e = survival_probability(PathSource::Lattice(&chain), &Start::Vertex(x0), t, 50_000, 7).unwrap();
    assert!(e.agrees_with(mass, 3.0, 0.0), "{e:?} vs {mass}");
    assert!(mass < 1.0);
}

#[test]
fn markov_property_by_restarting() {
    let n = 6;
    let g = random_graph(n, 61);
    let chain = JumpChain::new(&g, None).unwrap();
    let op = SchrodingerOperator::scalar(&g, None, None).unwrap();
    let (t1, t2) = (0.4, 0.7);
    let heat = op.heat_matrix(t1 + t2).unwrap();
    // first leg to t1, then a fresh path from the endpoint with an independent stream
    let ends = run_paths(40_000, 610, |i, rng| {
        let mid = *sample_path_ctmc(&chain, 0, t1, rng).unwrap().states.last().unwrap();
        let mut rng2 = schrokato::stochastics::path_rng(611, i as u64);
        Some(*sample_path_ctmc(&chain, mid, t2, &mut rng2).unwrap().states.last().unwrap())
    });
    let exact: Vec<f64> = (0..n).map(|y| heat[(0, y)].re).collect();
    let dev = worst_sigma(&ends, &exact);
    assert!(dev <= 3.0, "{dev} standard errors");
}

#[test]
fn khasminskii_bound_holds_empirically() {
    let n = 10;
    let g = random_graph(n, 71);
    let op = SchrodingerOperator::scalar(&g, None, None).unwrap();
    let k = KernelHandle::lattice(op).unwrap();
    let probes: Vec<Point> = (0..n).map(|v| Point(vec![v as f64])).collect();
    let w = random_w(n, 1.0, 71);
    let s = 0.5;
    let d = dynkin_functional(&k, &Potential::Vertex { values: w.clone() }, s, &probes).unwrap().value;
    assert!(d < 1.0);
    let consts = khasminskii_constants(d, s).unwrap();
    let chain = JumpChain::new(&g, None).unwrap();
    let neg: Vec<f64> = w.iter().map(|x| -x).collect();
    for t in [0.5, 1.0, 3.0] {
        for x0 in [0, n / 2, n - 1] {
            let e = fk_scalar(PathSource::Lattice(&chain), Observable::Vertex(&neg), Observable::Constant(1.0), t, &Start::Vertex(x0), 20_000, 72)
                .unwrap();
            assert!(e.value <= consts.bound(t) + 3.0 * e.standard_error, "t {t}: {} vs {}", e.value, consts.bound(t));
        }
    }
}

#[test]
fn lattice_occupation_matches_dynkin_value() {
    let n = 8;
    let g = random_graph(n, 81);
    let op = SchrodingerOperator::scalar(&g, None, None).unwrap();
    let k = KernelHandle::lattice(op).unwrap();
    let w = random_w(n, 2.0, 81);
    let chain = JumpChain::new(&g, None).unwrap();
    for (x0, t) in [(0usize, 0.3), (3, 1.0), (7, 2.0)] {
        let d = dynkin_functional(&k, &Potential::Vertex { values: w.clone() }, t, &[Point(vec![x0 as f64])]).unwrap().value;
        let e = occupation_functional(PathSource::Lattice(&chain), Observable::Vertex(&w), t, &Start::Vertex(x0), 40_000, 82).unwrap();
        assert!(e.agrees_with(d, 3.0, 0.0), "x0 {x0}: {e:?} vs {d}");
    }
}

/// `|est(h/2) − exact| ≤ 3σ + (√2 + 1)|est(h) − est(h/2)|`, the bracket of an
/// `O(√h)` bias.
fn bracketed(coarse: &MCEstimate, fine: &MCEstimate, exact: f64) -> bool {
    let sigma = (coarse.standard_error.powi(2) + fine.standard_error.powi(2)).sqrt();
    (fine.value - exact).abs() <= 3.0 * sigma + (2f64.sqrt() + 1.0) * (coarse.value - fine.value).abs()
}

#[test]
fn chart_occupation_matches_coulomb_dynkin_value() {
    let space = ModelSpace::euclidean(3).unwrap();
    let k = make_kernel(&space).unwrap();
    let x0 = Point(vec![1.0, 0.0, 0.0]);
    let t = 0.5;
    let d = dynkin_functional(&k, &Potential::coulomb(3), t, std::slice::from_ref(&x0)).unwrap().value;
    let field = |y: &[f64]| 1.0 / y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let est = |h: f64| {
        occupation_functional(PathSource::Chart { space: &space, step: h }, Observable::Field(&field), t, &Start::Point(x0.clone()), 20_000, 91)
            .unwrap()
    };
    let (coarse, fine) = (est(0.01), est(0.005));
    assert!(bracketed(&coarse, &fine, d), "{coarse:?} {fine:?} vs {d}");
}

#[test]
fn chart_survival_on_interval_is_bracketed() {
    let space = ModelSpace::interval(PI).unwrap();
    let x0 = Point(vec![PI / 2.0]);
    let t = 1.0;
    let exact = dirichlet_interval_mass(PI, t, PI / 2.0);
    let est = |h: f64| survival_probability(PathSource::Chart { space: &space, step: h }, &Start::Point(x0.clone()), t, 20_000, 101).unwrap();
    let (coarse, fine) = (est(0.01), est(0.005));
    assert!(bracketed(&coarse, &fine, exact), "{coarse:?} {fine:?} vs {exact}");
    // discrete monitoring misses excursions, so the scheme over-reports survival
    assert!(fine.value >= exact - 3.0 * fine.standard_error);
}

#[test]
fn hyperbolic_chart_paths_conserve_mass() {
    let space = ModelSpace::hyperbolic(3).unwrap();
    let e = survival_probability(PathSource::Chart { space: &space, step: 0.01 }, &Start::Point(space.base_point()), 1.0, 2_000, 5).unwrap();
    assert_eq!(e.value, 1.0);
}

#[test]
fn runs_are_reproducible() {
    let g = random_graph(6, 3);
    let chain = JumpChain::new(&g, None).unwrap();
    let w = random_w(6, 1.0, 3);
    let run =
        || fk_scalar(PathSource::Lattice(&chain), Observable::Vertex(&w), Observable::Constant(1.0), 1.0, &Start::Vertex(2), 5_000, 11).unwrap();
    assert_eq!(run(), run());
    let other = fk_scalar(PathSource::Lattice(&chain), Observable::Vertex(&w), Observable::Constant(1.0), 1.0, &Start::Vertex(2), 5_000, 12).unwrap();
    assert_ne!(run().value, other.value);
}
