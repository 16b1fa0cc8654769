use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::bundle::{BundleData, GaugeField};
use super::graph::{Edge, WeightedGraph};
use super::potential::PotentialField;
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, CMatrix, C64};

/// Complex matrix as rows of `[re, im]` pairs.
pub type ComplexRows = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexRecord {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coords: Vec<f64>,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub a: u64,
    pub b: u64,
    pub w: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, rename = "U", skip_serializing_if = "Option::is_none")]
    pub u: Option<ComplexRows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PotentialValue {
    Scalar(f64),
    Matrix(ComplexRows),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialRecord {
    pub id: u64,
    #[serde(rename = "V")]
    pub v: PotentialValue,
}

/// Serializable graph + bundle + potential.
///
/// Edges carry either a U(1) angle `theta` (rank one) or an explicit unitary
/// `U`, both in the `a → b` orientation; edges with neither get the identity.
/// Vertices absent from `potential` get `V = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeDocument {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub potential: Vec<PotentialRecord>,
}

fn to_rows(m: &CMatrix) -> ComplexRows {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|col| [m[(r, col)].re, m[(r, col)].im]).collect()).collect()
}

fn from_rows(rows: &ComplexRows) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(invalid("matrix", "must be square and nonempty"));
    }
    Ok(CMatrix::from_fn(n, n, |r, col| C64::new(rows[r][col][0], rows[r][col][1])))
}

impl LatticeDocument {
    pub fn from_parts(graph: &WeightedGraph, bundle: &BundleData, potential: Option<&PotentialField>) -> Self {
        let vertices = (0..graph.n_vertices()).map(|v| VertexRecord { id: v as u64, coords: graph.coords(v).to_vec(), mu: graph.mu()[v] }).collect();
        let rank_one = bundle.rank() == 1;
        let edges = graph
            .edges()
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let u = bundle.edge_transport(k);
                let (theta, u) = if bundle.is_trivial() {
                    (None, None)
                } else if rank_one {
                    (Some(u[(0, 0)].arg()), None)
                } else {
                    (None, Some(to_rows(u)))
                };
                EdgeRecord { a: e.a as u64, b: e.b as u64, w: e.w, theta, u }
            })
            .collect();
        let potential = potential
            .filter(|p| !p.is_zero())
            .map(|p| {
                let scalar = if p.rank() == 1 { p.as_scalar() } else { None };
                (0..p.n_vertices())
                    .map(|v| PotentialRecord {
                        id: v as u64,
                        v: match &scalar {
                            Some(s) => PotentialValue::Scalar(s[v]),
                            None => PotentialValue::Matrix(to_rows(p.at(v))),
                        },
                    })
                    .collect()
            })
            .unwrap_or_default();
        Self { vertices, edges, potential }
    }

    pub fn into_parts(&self) -> Result<(WeightedGraph, BundleData, PotentialField)> {
        let mut index = HashMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if index.insert(v.id, i).is_some() {
                return Err(invalid("vertices", format!("duplicate id {}", v.id)));
            }
        }
        let lookup = |id: u64| index.get(&id).copied().ok_or_else(|| invalid("edges", format!("unknown vertex id {id}")));
        let mu = self.vertices.iter().map(|v| v.mu).collect();
        let coords = self.vertices.iter().map(|v| v.coords.clone()).collect();
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            edges.push(Edge { a: lookup(e.a)?, b: lookup(e.b)?, w: e.w });
        }
        let graph = WeightedGraph::with_coords(mu, coords, edges)?;

        let explicit: Vec<Option<CMatrix>> = self.edges.iter().map(|e| e.u.as_ref().map(from_rows).transpose()).collect::<Result<_>>()?;
        let any_theta = self.edges.iter().any(|e| e.theta.is_some());
        let rank = match explicit.iter().flatten().next() {
            Some(m) => m.nrows(),
            None => self
                .potential
                .iter()
                .find_map(|p| match &p.v {
                    PotentialValue::Matrix(rows) => Some(rows.len()),
                    PotentialValue::Scalar(_) => None,
                })
                .unwrap_or(1),
        };
        if any_theta && explicit.iter().any(Option::is_some) {
            return Err(invalid("edges", "mix of theta and U transports"));
        }
        let bundle = if any_theta {
            BundleData::attach(&graph, rank, GaugeField::U1Angles(self.edges.iter().map(|e| e.theta.unwrap_or(0.0)).collect()))?
        } else if explicit.iter().any(Option::is_some) {
            let mats = explicit.into_iter().map(|m| m.unwrap_or_else(|| CMatrix::identity(rank, rank))).collect();
            BundleData::attach(&graph, rank, GaugeField::Explicit(mats))?
        } else {
            BundleData::trivial(&graph, rank)?
        };

        let mut values = vec![CMatrix::zeros(rank, rank); graph.n_vertices()];
        for p in &self.potential {
            let v = *index.get(&p.id).ok_or_else(|| invalid("potential", format!("unknown vertex id {}", p.id)))?;
            values[v] = match &p.v {
                PotentialValue::Scalar(s) => CMatrix::identity(rank, rank) * c(*s),
                PotentialValue::Matrix(rows) => {
                    let m = from_rows(rows)?;
                    if m.nrows() != rank {
                        return Err(Error::DimensionMismatch { expected: rank, got: m.nrows() });
                    }
                    m
                }
            };
        }
        let potential = PotentialField::from_matrices(values)?;
        Ok((graph, bundle, potential))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
