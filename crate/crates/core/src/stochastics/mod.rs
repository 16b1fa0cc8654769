//! Exact jump-chain paths on graphs, Euler chart paths on model spaces,
//! and plain Monte-Carlo Feynman–Kac estimators.
//!
//! Path `i` of a run with master seed `s` draws from ChaCha8 seeded with `s`
//! on stream `i`; paths are simulated in parallel and reduced in index
//! order, so results do not depend on the number of worker threads.

mod chart;
mod ctmc;
mod fk;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{CMatrix, C64};

pub use chart::{chart_coefficients, sample_path_chart, ChartEnd, ChartWalker};
pub use ctmc::{sample_path_ctmc, Jump, JumpChain, WalkEnd};
pub use fk::{
    fk_covariant, fk_covariant_samples, fk_scalar, fk_scalar_samples, occupation_functional, survival_probability, Observable, PathSource, Start,
    LOG_WEIGHT_LIMIT,
};

/// A simulated path; `S` is a vertex index or chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample<S> {
    /// Jump times (lattice) or grid times (chart), starting at 0.
    pub times: Vec<f64>,
    pub states: Vec<S>,
    /// `t < ζ`.
    pub alive: bool,
    /// Exit time when the path was killed.
    pub zeta: Option<f64>,
    pub horizon: f64,
    /// `∫₀^{t∧ζ} w(X_s) ds` for scalar runs.
    pub accumulated_potential: Option<f64>,
    /// Ordered transport product for covariant runs.
    pub transport: Option<CMatrix>,
}

impl PathSample<usize> {
    /// Exact potential integral over the holding intervals.
    pub fn integrate_potential(&mut self, w: &[f64]) -> f64 {
        let end = self.zeta.unwrap_or(self.horizon);
        let mut acc = 0.0;
        for (k, &x) in self.states.iter().enumerate() {
            let next = self.times.get(k + 1).copied().unwrap_or(end);
            acc += w[x] * (next - self.times[k]);
        }
        self.accumulated_potential = Some(acc);
        acc
    }
}

impl PathSample<Vec<f64>> {
    /// Left-point rule on the step grid.
    pub fn integrate_potential(&mut self, w: impl Fn(&[f64]) -> f64) -> f64 {
        let end = self.zeta.unwrap_or(self.horizon);
        let mut acc = 0.0;
        for (k, x) in self.states.iter().enumerate() {
            let next = self.times.get(k + 1).copied().unwrap_or(end);
            acc += w(x) * (next - self.times[k]);
        }
        self.accumulated_potential = Some(acc);
        acc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    #[serde(rename = "stderr")]
    pub standard_error: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl MCEstimate {
    /// Mean and standard error of the samples, summed in index order.
    pub fn from_samples(samples: &[f64], seed: u64) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0) } else { 0.0 };
        Self { value: mean, standard_error: (var / n as f64).sqrt(), n_paths: n, seed }
    }

    /// `|value − target| ≤ k·stderr + slack`.
    pub fn agrees_with(&self, target: f64, k: f64, slack: f64) -> bool {
        (self.value - target).abs() <= k * self.standard_error + slack
    }
}

/// Componentwise estimate of an `ℓ`-vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorEstimate {
    pub value: Vec<C64>,
    /// Standard error of each complex component (`√(E|Z − EZ|²/n)`).
    #[serde(rename = "stderr")]
    pub standard_error: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
}

impl VectorEstimate {
    pub fn from_samples(samples: &[Vec<C64>], rank: usize, seed: u64) -> Self {
        let n = samples.len();
        let mut mean = vec![C64::new(0.0, 0.0); rank];
        for s in samples {
            for a in 0..rank {
                mean[a] += s[a];
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let mut var = vec![0.0; rank];
        for s in samples {
            for a in 0..rank {
                var[a] += (s[a] - mean[a]).norm_sqr();
            }
        }
        let standard_error = var.iter().map(|v| if n > 1 { (v / (n as f64 - 1.0) / n as f64).sqrt() } else { 0.0 }).collect();
        Self { value: mean, standard_error, n_paths: n, seed }
    }

    pub fn agrees_with(&self, target: &[C64], k: f64, slack: f64) -> bool {
        self.value.iter().zip(target).zip(&self.standard_error).all(|((v, t), s)| (v - t).norm() <= k * s + slack)
    }
}

/// RNG of path `index` under master seed `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f` on every path index in parallel; results come back in index order.
pub fn run_paths<T: Send>(n_paths: usize, seed: u64, f: impl Fn(usize, &mut ChaCha8Rng) -> T + Sync) -> Vec<T> {
    (0..n_paths).into_par_iter().map(|i| f(i, &mut path_rng(seed, i as u64))).collect()
}

/// Ordered fallible variant of [`run_paths`]; reports the lowest failing index.
pub fn try_run_paths<T: Send>(n_paths: usize, seed: u64, f: impl Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync) -> Result<Vec<T>> {
    if n_paths == 0 {
        return Err(invalid("n_paths", "need at least one path"));
    }
    run_paths(n_paths, seed, f).into_iter().collect()
}

/// CSV dump `path_id,time,state...,alive`.
pub fn write_paths_csv<W: Write, S: StateColumns>(out: &mut W, paths: &[PathSample<S>]) -> Result<()> {
    let width = paths.iter().flat_map(|p| p.states.first()).map(|s| s.columns().len()).next().unwrap_or(1);
    let mut header = vec!["path_id".to_string(), "time".to_string()];
    header.extend((0..width).map(|i| format!("state{i}")));
    header.push("alive".into());
    writeln!(out, "{}", header.join(","))?;
    for (id, p) in paths.iter().enumerate() {
        for (t, s) in p.times.iter().zip(&p.states) {
            writeln!(out, "{id},{t:.16e},{},1", s.columns().join(","))?;
        }
        // killed paths end with one cemetery row at ζ holding the last state
        if let (false, Some(z), Some(s)) = (p.alive, p.zeta, p.states.last()) {
            writeln!(out, "{id},{z:.16e},{},0", s.columns().join(","))?;
        }
    }
    Ok(())
}

pub trait StateColumns {
    fn columns(&self) -> Vec<String>;
}

impl StateColumns for usize {
    fn columns(&self) -> Vec<String> {
        vec![self.to_string()]
    }
}

impl StateColumns for Vec<f64> {
    fn columns(&self) -> Vec<String> {
        self.iter().map(|v| format!("{v:.16e}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimate_statistics() {
        let e = MCEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0], 7);
        assert_eq!(e.value, 2.5);
        assert!((e.standard_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        let json = serde_json::to_string(&e).unwrap();
        assert!(json.contains("\"stderr\""));
    }

    #[test]
    fn streams_are_independent_of_scheduling() {
        let a = run_paths(1000, 42, |_, rng| rand::Rng::random::<u64>(rng));
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| run_paths(1000, 42, |_, rng| rand::Rng::random::<u64>(rng)));
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }
}
