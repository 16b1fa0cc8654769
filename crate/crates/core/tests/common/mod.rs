//! Instance generators shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use schrokato::lattice::{BundleData, GaugeField, PotentialField, SchrodingerOperator, WeightedGraph};
use schrokato::linalg::{c, random_hermitian, random_unitary, CMatrix, CVector, C64};
use schrokato::stochastics::path_rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    path_rng(seed, 0)
}

pub fn random_graph(n: usize, seed: u64) -> WeightedGraph {
    WeightedGraph::random_connected(n, 0.3, &mut rng(seed)).unwrap()
}

pub fn random_bundle(graph: &WeightedGraph, rank: usize, seed: u64) -> BundleData {
    let mut r = path_rng(seed, 1);
    let mats = (0..graph.n_edges()).map(|_| random_unitary(rank, &mut r)).collect();
    BundleData::attach(graph, rank, GaugeField::Explicit(mats)).unwrap()
}

/// Nonnegative vertex values in `[0, scale)`.
pub fn random_w(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut r = path_rng(seed, 2);
    (0..n).map(|_| scale * r.random::<f64>()).collect()
}

/// `V = w·I + B²` with Hermitian `B`, so `V ≥ w`.
pub fn dominating_field(w: &[f64], rank: usize, extra: f64, seed: u64) -> PotentialField {
    let mut r = path_rng(seed, 3);
    let mats = w
        .iter()
        .map(|&x| {
            let b = random_hermitian(rank, 1.0, &mut r);
            CMatrix::identity(rank, rank) * c(x) + &b * &b * c(extra)
        })
        .collect();
    PotentialField::from_matrices(mats).unwrap()
}

/// Bundle operator `H^∇_V` and scalar `H_w` on one random graph.
pub fn domination_pair(n: usize, rank: usize, seed: u64) -> (SchrodingerOperator, SchrodingerOperator) {
    let g = random_graph(n, seed);
    let b = random_bundle(&g, rank, seed);
    let w = random_w(n, 2.0, seed);
    let v = dominating_field(&w, rank, 0.3, seed);
    let op_v = SchrodingerOperator::assemble(&g, &b, Some(&v), None).unwrap();
    let op_w = SchrodingerOperator::scalar(&g, Some(&w), None).unwrap();
    (op_v, op_w)
}

pub fn random_section(len: usize, seed: u64) -> CVector {
    let mut r = path_rng(seed, 4);
    CVector::from_fn(len, |_, _| C64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5))
}

pub fn real_section(values: &[f64]) -> CVector {
    CVector::from_iterator(values.len(), values.iter().map(|v| c(*v)))
}
