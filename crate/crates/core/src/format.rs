//! The JSON graph document: `{"vertices": [...], "edges": [...], "local_system": {...}}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{RawEdge, RawGraph, WeightedGraph};
use crate::linalg::C64;
use crate::twist::{validate_local_system, CMatrix, LocalSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTransfer {
    pub u: String,
    pub v: String,
    /// Rows of `[re, im]` pairs.
    pub matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawLocalSystem {
    pub dim: usize,
    pub transfers: Vec<RawTransfer>,
}

/// A whole file. Field order here is the serialised key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub vertices: Vec<String>,
    pub edges: Vec<RawEdge>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_system: Option<RawLocalSystem>,
}

fn to_matrix(rows: &[Vec<[f64; 2]>], edge: &RawTransfer) -> Result<CMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse(format!(
            "transfer {}->{} has ragged rows",
            edge.u, edge.v
        )));
    }
    Ok(CMatrix::from_fn(n, m, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
}

fn from_matrix(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

impl RawLocalSystem {
    /// Reverse transfers not listed explicitly become conjugate transposes.
    pub fn to_local_system(&self) -> Result<LocalSystem> {
        let mut s = LocalSystem::new(self.dim);
        let explicit = |u: &str, v: &str| self.transfers.iter().any(|t| t.u == u && t.v == v);
        for t in &self.transfers {
            let m = to_matrix(&t.matrix, t)?;
            if !explicit(&t.v, &t.u) {
                s.set(&t.v, &t.u, m.adjoint());
            }
            s.set(&t.u, &t.v, m);
        }
        Ok(s)
    }

    pub fn from_local_system(s: &LocalSystem) -> Self {
        Self {
            dim: s.dim(),
            transfers: s
                .transfers()
                .iter()
                .map(|((u, v), m)| RawTransfer {
                    u: u.clone(),
                    v: v.clone(),
                    matrix: from_matrix(m),
                })
                .collect(),
        }
    }
}

impl GraphDocument {
    pub fn new(g: &WeightedGraph, system: Option<&LocalSystem>) -> Self {
        let raw = g.to_raw();
        Self {
            vertices: raw.vertices,
            edges: raw.edges,
            local_system: system.map(RawLocalSystem::from_local_system),
        }
    }

    /// Validates the graph and, when present, the local system against it.
    pub fn into_parts(self) -> Result<(WeightedGraph, Option<LocalSystem>)> {
        let g = RawGraph {
            vertices: self.vertices,
            edges: self.edges,
        }
        .build()?;
        let system = match self.local_system {
            None => None,
            Some(raw) => {
                let s = raw.to_local_system()?;
                let report = validate_local_system(&g, &s);
                if !report.is_empty() {
                    return Err(Error::InvalidLocalSystem(report));
                }
                Some(s)
            }
        };
        Ok((g, system))
    }
}

pub fn parse_document(text: &str) -> Result<(WeightedGraph, Option<LocalSystem>)> {
    let doc: GraphDocument = serde_json::from_str(text)?;
    doc.into_parts()
}

/// The graph alone; a local-system block is still validated.
pub fn parse_graph(text: &str) -> Result<WeightedGraph> {
    parse_document(text).map(|(g, _)| g)
}

pub fn serialize(g: &WeightedGraph, system: Option<&LocalSystem>) -> String {
    let mut s = serde_json::to_string_pretty(&GraphDocument::new(g, system))
        .expect("graph documents always serialise");
    s.push('\n');
    s
}

pub fn read_document(path: impl AsRef<Path>) -> Result<(WeightedGraph, Option<LocalSystem>)> {
    parse_document(&std::fs::read_to_string(path)?)
}
