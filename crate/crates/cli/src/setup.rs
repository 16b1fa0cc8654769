//! Turns a validated config into library objects.

use std::path::Path;

use schrokato::geometry::{ModelSpace, Point};
use schrokato::kato::Potential;
use schrokato::lattice::{build_grid_graph, BundleData, GaugeField, LatticeDocument, PotentialField, SchrodingerOperator, WeightedGraph};
use schrokato::linalg::random_unitary;
use schrokato::stochastics::path_rng;
use schrokato::{Error, Result};

use crate::config::{ExperimentConfig, GaugeKind, GraphConfig, GraphPreset, PotentialConfig, PotentialKind, SpaceConfig, SpaceKind};

/// Stream index reserved for config-level randomness (graphs, gauges).
const SETUP_STREAM: u64 = u64::MAX;

pub enum Source {
    Space(ModelSpace),
    Graph(GraphSetup),
}

pub struct GraphSetup {
    pub graph: WeightedGraph,
    pub bundle: BundleData,
    pub mask: Option<Vec<usize>>,
    /// Potential stored in a lattice document, if any.
    pub file_potential: Option<PotentialField>,
}

impl GraphSetup {
    pub fn operator(&self, potential: Option<&PotentialField>) -> Result<SchrodingerOperator> {
        let p = potential.or(self.file_potential.as_ref());
        SchrodingerOperator::assemble(&self.graph, &self.bundle, p, self.mask.as_deref())
    }

    pub fn mask(&self) -> Option<&[usize]> {
        self.mask.as_deref()
    }
}

pub fn build_space(s: &SpaceConfig) -> Result<ModelSpace> {
    match s.kind {
        SpaceKind::Euclidean => ModelSpace::euclidean(s.dim.unwrap_or(0)),
        SpaceKind::Hyperbolic => ModelSpace::hyperbolic(s.dim.unwrap_or(0)),
        SpaceKind::Interval => ModelSpace::interval(s.length.unwrap_or(f64::NAN)),
        SpaceKind::Box => ModelSpace::cube(s.lower.clone().unwrap_or_default(), s.upper.clone().unwrap_or_default()),
    }
}

pub fn build_source(cfg: &ExperimentConfig, seed: u64, base_dir: &Path) -> Result<Source> {
    if let Some(s) = &cfg.space {
        return Ok(Source::Space(build_space(s)?));
    }
    let g = cfg.graph.as_ref().ok_or_else(|| Error::Precondition("no source".into()))?;
    Ok(Source::Graph(build_graph(g, seed, base_dir)?))
}

fn build_graph(g: &GraphConfig, seed: u64, base_dir: &Path) -> Result<GraphSetup> {
    if let Some(file) = &g.file {
        let path = base_dir.join(file);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        // documents written by the `lattice` command carry a config hash
        let mut value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if let Some(m) = value.as_object_mut() {
            m.remove("config_hash");
        }
        let (graph, bundle, potential) = LatticeDocument::from_json(&value.to_string())?.into_parts()?;
        let bundle = match &g.gauge {
            Some(gauge) => attach_gauge(&graph, gauge, seed)?,
            None => bundle,
        };
        let file_potential = (!potential.is_zero()).then_some(potential);
        return Ok(GraphSetup { graph, bundle, mask: g.mask.clone(), file_potential });
    }
    let n = g.n.unwrap_or(0);
    let graph = match g.preset.expect("validated") {
        GraphPreset::Path => WeightedGraph::path(n)?,
        GraphPreset::Cycle => WeightedGraph::cycle(n)?,
        GraphPreset::Random => {
            let mut rng = path_rng(g.graph_seed.unwrap_or(seed), SETUP_STREAM);
            WeightedGraph::random_connected(n, g.p.unwrap_or(0.3), &mut rng)?
        }
        GraphPreset::Grid => {
            let s = g.grid.as_ref().expect("validated");
            let space = build_space(s)?;
            let rect = match (&s.lower, &s.upper) {
                (Some(l), Some(u)) if !matches!(space, ModelSpace::Box { .. }) => Some((l.as_slice(), u.as_slice())),
                _ => None,
            };
            build_grid_graph(&space, rect, g.spacing.unwrap_or(f64::NAN))?
        }
    };
    let bundle = match &g.gauge {
        Some(gauge) => attach_gauge(&graph, gauge, seed)?,
        None => BundleData::trivial(&graph, 1)?,
    };
    Ok(GraphSetup { graph, bundle, mask: g.mask.clone(), file_potential: None })
}

fn attach_gauge(graph: &WeightedGraph, gauge: &crate::config::GaugeConfig, seed: u64) -> Result<BundleData> {
    let ne = graph.n_edges();
    match gauge.kind {
        GaugeKind::Trivial => BundleData::trivial(graph, gauge.rank.unwrap_or(1)),
        GaugeKind::Flux => {
            let flux = gauge.flux.expect("validated");
            BundleData::attach(graph, 1, GaugeField::U1Angles(vec![flux / ne as f64; ne]))
        }
        GaugeKind::Angles => BundleData::attach(graph, 1, GaugeField::U1Angles(gauge.angles.clone().expect("validated"))),
        GaugeKind::RandomUnitary => {
            let rank = gauge.rank.unwrap_or(2);
            let mut rng = path_rng(gauge.gauge_seed.unwrap_or(seed), SETUP_STREAM - 1);
            BundleData::attach(graph, rank, GaugeField::Explicit((0..ne).map(|_| random_unitary(rank, &mut rng)).collect()))
        }
    }
}

/// Coordinates of a vertex; the index itself for graphs without embedding.
pub fn vertex_point(graph: &WeightedGraph, v: usize) -> Point {
    let c = graph.coords(v);
    if c.is_empty() {
        Point(vec![v as f64])
    } else {
        Point(c.to_vec())
    }
}

/// Continuum potential; `center` defaults to the base point.
pub fn continuum_potential(p: &PotentialConfig, space: &ModelSpace) -> Result<Potential> {
    let center = p.center.clone().unwrap_or_else(|| space.base_point().0);
    let c = p.c.unwrap_or(1.0);
    Ok(match p.kind {
        PotentialKind::Constant => Potential::Constant { c },
        PotentialKind::Coulomb => Potential::RadialPower { c, alpha: 1.0, center, cutoff: p.cutoff },
        PotentialKind::RadialPower => Potential::RadialPower { c, alpha: p.alpha.expect("validated"), center, cutoff: p.cutoff },
        // c·d⁰ on the ball
        PotentialKind::Indicator => Potential::RadialPower { c, alpha: 0.0, center, cutoff: p.radius },
        PotentialKind::Green => Potential::Green { c, pole: center },
        PotentialKind::Table => return Err(Error::Unsupported("table potentials live on graphs".into())),
    })
}

/// Values on all graph vertices; distances are taken in the vertex coordinates.
pub fn vertex_values(p: &PotentialConfig, graph: &WeightedGraph) -> Result<Vec<f64>> {
    let n = graph.n_vertices();
    let c = p.c.unwrap_or(1.0);
    if p.kind == PotentialKind::Table {
        let v = p.values.clone().expect("validated");
        if v.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: v.len() });
        }
        return Ok(v.iter().map(|x| c * x).collect());
    }
    let dist = |v: usize| -> Result<f64> {
        let x = vertex_point(graph, v);
        let center = p.center.clone().unwrap_or_else(|| vec![0.0; x.dim()]);
        if center.len() != x.dim() {
            return Err(Error::DimensionMismatch { expected: x.dim(), got: center.len() });
        }
        Ok(x.0.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
    };
    (0..n)
        .map(|v| {
            let value = match p.kind {
                PotentialKind::Constant => c,
                PotentialKind::Indicator => {
                    if dist(v)? <= p.radius.expect("validated") {
                        c
                    } else {
                        0.0
                    }
                }
                PotentialKind::Coulomb | PotentialKind::RadialPower => {
                    let alpha = if p.kind == PotentialKind::Coulomb { 1.0 } else { p.alpha.expect("validated") };
                    let d = dist(v)?;
                    if p.cutoff.is_some_and(|r| d > r) {
                        0.0
                    } else if d == 0.0 && alpha > 0.0 {
                        return Err(Error::NonIntegrable(format!("potential is infinite at vertex {v}")));
                    } else {
                        c * d.powf(-alpha)
                    }
                }
                PotentialKind::Green => return Err(Error::Unsupported("Green potentials need a continuum space".into())),
                PotentialKind::Table => unreachable!("handled above"),
            };
            Ok(value)
        })
        .collect()
}

/// `w·I` on a bundle of rank `rank`.
pub fn scalar_field(values: &[f64], rank: usize) -> Result<PotentialField> {
    PotentialField::scalar(values, rank)
}
