use rand::Rng;
use rand_distr::Exp1;

use super::PathSample;
use crate::error::{invalid, Error, Result};
use crate::lattice::WeightedGraph;

/// Jump chain generated by `−H`: rate `r_x = Σ_y w_xy / (2μ_x)`, jump law
/// `w_xy / Σ_y w_xy`. A jump to a vertex outside the kept set kills the path.
#[derive(Debug, Clone)]
pub struct JumpChain {
    graph: WeightedGraph,
    kept: Vec<bool>,
    rates: Vec<f64>,
    /// Per vertex: `(neighbor, edge index)` and cumulative weights.
    targets: Vec<Vec<(usize, usize)>>,
    cumulative: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub from: usize,
    pub to: usize,
    /// Index of the traversed edge in the graph's edge list.
    pub edge: usize,
    pub time: f64,
}

/// Outcome of one walk: whether it survived to the horizon, and its last
/// state (the state before exit for killed paths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkEnd {
    pub alive: bool,
    pub vertex: usize,
    pub zeta: Option<f64>,
}

impl JumpChain {
    pub fn new(graph: &WeightedGraph, mask: Option<&[usize]>) -> Result<Self> {
        let n = graph.n_vertices();
        let kept = match mask {
            Some(m) => {
                let mut k = vec![false; n];
                for &v in m {
                    if v >= n {
                        return Err(Error::VertexOutOfRange(v));
                    }
                    k[v] = true;
                }
                k
            }
            None => vec![true; n],
        };
        let mut rates = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        let mut cumulative = Vec::with_capacity(n);
        for v in 0..n {
            let mut acc = 0.0;
            let mut ts = Vec::new();
            let mut cs = Vec::new();
            for &(y, k) in graph.neighbors(v) {
                acc += graph.edges()[k].w;
                ts.push((y, k));
                cs.push(acc);
            }
            rates.push(acc / (2.0 * graph.mu()[v]));
            targets.push(ts);
            cumulative.push(cs);
        }
        Ok(Self { graph: graph.clone(), kept, rates, targets, cumulative })
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn rate(&self, v: usize) -> f64 {
        self.rates[v]
    }

    pub fn is_kept(&self, v: usize) -> bool {
        self.kept[v]
    }

    pub fn is_restricted(&self) -> bool {
        self.kept.iter().any(|k| !k)
    }

    pub fn check_start(&self, x0: usize) -> Result<()> {
        if x0 >= self.graph.n_vertices() {
            return Err(Error::VertexOutOfRange(x0));
        }
        if !self.kept[x0] {
            return Err(invalid("x0", format!("start vertex {x0} lies outside the kept set")));
        }
        Ok(())
    }

    fn next_vertex<R: Rng + ?Sized>(&self, x: usize, rng: &mut R) -> (usize, usize) {
        let cs = &self.cumulative[x];
        let u = rng.random::<f64>() * cs[cs.len() - 1];
        let k = cs.partition_point(|&c| c <= u).min(cs.len() - 1);
        self.targets[x][k]
    }

    /// Simulates up to `t`; `hold(x, Δs)` is called for every holding
    /// interval (the last one truncated at `t` or at the exit), and
    /// `jump` for every jump inside the kept set.
    pub fn walk<R: Rng + ?Sized>(
        &self,
        x0: usize,
        t: f64,
        rng: &mut R,
        mut hold: impl FnMut(usize, f64) -> Result<()>,
        mut jump: impl FnMut(Jump) -> Result<()>,
    ) -> Result<WalkEnd> {
        let mut x = x0;
        let mut now = 0.0;
        loop {
            let rate = self.rates[x];
            let dt = if rate > 0.0 { rng.sample::<f64, _>(Exp1) / rate } else { f64::INFINITY };
            if now + dt >= t {
                hold(x, t - now)?;
                return Ok(WalkEnd { alive: true, vertex: x, zeta: None });
            }
            hold(x, dt)?;
            now += dt;
            let (y, edge) = self.next_vertex(x, rng);
            if !self.kept[y] {
                return Ok(WalkEnd { alive: false, vertex: x, zeta: Some(now) });
            }
            jump(Jump { from: x, to: y, edge, time: now })?;
            x = y;
        }
    }
}

/// Exact-in-law path of the jump chain on `[0, t]`.
pub fn sample_path_ctmc<R: Rng + ?Sized>(chain: &JumpChain, x0: usize, t: f64, rng: &mut R) -> Result<PathSample<usize>> {
    chain.check_start(x0)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", "horizon must be finite and nonnegative"));
    }
    let mut times = vec![0.0];
    let mut states = vec![x0];
    let end = chain.walk(
        x0,
        t,
        rng,
        |_, _| Ok(()),
        |j| {
            times.push(j.time);
            states.push(j.to);
            Ok(())
        },
    )?;
    Ok(PathSample { times, states, alive: end.alive, zeta: end.zeta, horizon: t, accumulated_potential: None, transport: None })
}
