//! JSON instance documents.
//!
//! ```json
//! {"version": 1, "instance": {"kind": "cournot", ...}}
//! {"version": 1, "instance": {"kind": "quadratic", ..., "graph": {"type": "cycle"}}}
//! ```
//!
//! Cournot documents carry every drawn value, so reloading never depends on
//! the generator. The instance hash is the SHA-256 of the compact JSON
//! encoding, truncated to 16 hex digits.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use gnesplit_core::cournot::{CournotInstance, CournotParams};
use gnesplit_core::linalg::Matrix;
use gnesplit_core::model::QuadraticGame;
use gnesplit_core::{CommGraph, GameInstance};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub version: u32,
    pub instance: InstanceBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceBody {
    Quadratic(QuadraticDoc),
    Cournot(CournotDoc),
}

/// `F(x) = Mx + q` with optional boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadraticDoc {
    pub dims: Vec<usize>,
    pub m: usize,
    pub matrix: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub boxes: Vec<Option<BoxDoc>>,
    /// One `m × dims[i]` block per agent, row-major.
    pub coupling_blocks: Vec<Vec<Vec<f64>>>,
    pub coupling_offsets: Vec<Vec<f64>>,
    pub graph: GraphDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDoc {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum GraphDoc {
    Cycle,
    CyclePlusChords { chords: Vec<(usize, usize)> },
    Complete,
    Edges { edges: Vec<(usize, usize, f64)> },
}

impl GraphDoc {
    pub fn build(&self, n: usize) -> gnesplit_core::Result<CommGraph> {
        match self {
            GraphDoc::Cycle => CommGraph::cycle(n),
            GraphDoc::CyclePlusChords { chords } => CommGraph::cycle_with_chords(n, chords),
            GraphDoc::Complete => CommGraph::complete(n),
            GraphDoc::Edges { edges } => CommGraph::from_edges(n, edges),
        }
    }
}

/// Drawn Cournot data plus the generator settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CournotDoc {
    pub seed: Option<u64>,
    pub midpoint: bool,
    pub n_markets: usize,
    pub participation: Vec<Vec<usize>>,
    pub delta: Vec<Vec<f64>>,
    pub capacity: Vec<f64>,
    pub pi: Vec<f64>,
    pub r: Vec<Vec<f64>>,
    pub pbar: Vec<f64>,
    pub d: Vec<f64>,
    pub chords: Vec<(usize, usize)>,
}

impl CournotDoc {
    pub fn from_instance(inst: &CournotInstance, params: Option<&CournotParams>) -> Self {
        CournotDoc {
            seed: params.map(|p| p.seed),
            midpoint: params.is_some_and(|p| p.midpoint),
            n_markets: inst.n_markets,
            participation: inst.participation.clone(),
            delta: inst.delta.clone(),
            capacity: inst.capacity.clone(),
            pi: inst.pi.clone(),
            r: inst.r.clone(),
            pbar: inst.pbar.clone(),
            d: inst.d.clone(),
            chords: inst.chords.clone(),
        }
    }

    pub fn to_instance(&self) -> CournotInstance {
        CournotInstance {
            n_markets: self.n_markets,
            participation: self.participation.clone(),
            delta: self.delta.clone(),
            capacity: self.capacity.clone(),
            pi: self.pi.clone(),
            r: self.r.clone(),
            pbar: self.pbar.clone(),
            d: self.d.clone(),
            chords: self.chords.clone(),
        }
    }
}

impl QuadraticDoc {
    pub fn to_game(&self) -> anyhow::Result<GameInstance> {
        let matrix = Matrix::from_rows(&self.matrix).context("pseudo-gradient matrix")?;
        let blocks = self
            .coupling_blocks
            .iter()
            .zip(&self.dims)
            .map(|(b, &dim)| {
                if b.is_empty() {
                    Ok(Matrix::zeros(self.m, dim))
                } else {
                    Matrix::from_rows(b)
                }
            })
            .collect::<gnesplit_core::Result<Vec<_>>>()
            .context("coupling blocks")?;
        let game = QuadraticGame {
            dims: self.dims.clone(),
            m: self.m,
            matrix,
            linear: self.linear.clone(),
            boxes: self
                .boxes
                .iter()
                .map(|b| b.as_ref().map(|b| (b.lower.clone(), b.upper.clone())))
                .collect(),
            coupling_blocks: blocks,
            coupling_offsets: self.coupling_offsets.clone(),
        };
        for (i, b) in game.coupling_blocks.iter().enumerate() {
            if b.rows() != self.m || b.cols() != self.dims.get(i).copied().unwrap_or(0) {
                bail!("coupling block {i} must be {}x{}", self.m, self.dims.get(i).copied().unwrap_or(0));
            }
        }
        Ok(game.build()?)
    }
}

/// A document together with what it builds. The graph is kept as a result
/// so that `check` can report a disconnected graph instead of failing.
pub struct LoadedInstance {
    pub document: InstanceDocument,
    pub game: GameInstance,
    pub graph: gnesplit_core::Result<CommGraph>,
    pub cournot: Option<CournotInstance>,
    pub hash: String,
}

impl InstanceDocument {
    pub fn cournot(inst: &CournotInstance, params: Option<&CournotParams>) -> Self {
        InstanceDocument {
            version: DOCUMENT_VERSION,
            instance: InstanceBody::Cournot(CournotDoc::from_instance(inst, params)),
        }
    }

    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("documents always serialise");
        hex::encode(&Sha256::digest(&bytes)[..8])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialise")
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let doc: InstanceDocument = serde_json::from_str(text).context("malformed instance document")?;
        if doc.version != DOCUMENT_VERSION {
            bail!("unsupported instance document version {}", doc.version);
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn build(self) -> anyhow::Result<LoadedInstance> {
        let hash = self.hash();
        let (game, graph, cournot) = match &self.instance {
            InstanceBody::Quadratic(q) => {
                let game = q.to_game()?;
                let graph = q.graph.build(game.num_agents());
                (game, graph, None)
            }
            InstanceBody::Cournot(c) => {
                let inst = c.to_instance();
                let game = inst.game()?;
                (game, inst.graph(), Some(inst))
            }
        };
        Ok(LoadedInstance {
            document: self,
            game,
            graph,
            cournot,
            hash,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gnesplit_core::cournot::generate;

    #[test]
    fn cournot_round_trip_is_exact() {
        let params = CournotParams::with_seed(1);
        let (_, _, inst) = generate(&params).unwrap();
        let doc = InstanceDocument::cournot(&inst, Some(&params));
        let back = InstanceDocument::from_json(&doc.to_json()).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.hash(), doc.hash());
        let loaded = back.build().unwrap();
        assert_eq!(loaded.cournot.unwrap(), inst);
    }

    #[test]
    fn quadratic_documents_build() {
        let text = r#"{"version": 1, "instance": {"kind": "quadratic", "dims": [1, 1], "m": 1,
            "matrix": [[0, 1], [-1, 0]], "linear": [0, 0], "boxes": [null, null],
            "coupling_blocks": [[[0]], [[0]]], "coupling_offsets": [[0], [0]],
            "graph": {"type": "cycle"}}}"#;
        let loaded = InstanceDocument::from_json(text).unwrap().build().unwrap();
        assert_eq!(loaded.game.num_agents(), 2);
        assert!(loaded.graph.is_ok());
        assert_eq!(loaded.game.constants.eta, Some(0.0));
    }

    #[test]
    fn disconnected_graph_is_kept_as_a_finding() {
        let text = r#"{"version": 1, "instance": {"kind": "quadratic", "dims": [1, 1, 1], "m": 1,
            "matrix": [[1, 0, 0], [0, 1, 0], [0, 0, 1]], "linear": [0, 0, 0], "boxes": [null, null, null],
            "coupling_blocks": [[[1]], [[1]], [[1]]], "coupling_offsets": [[1], [1], [1]],
            "graph": {"type": "edges", "edges": [[0, 1, 1.0]]}}}"#;
        let loaded = InstanceDocument::from_json(text).unwrap().build().unwrap();
        assert!(matches!(loaded.graph, Err(gnesplit_core::Error::Disconnected { .. })));
    }

    #[test]
    fn unknown_versions_are_rejected() {
        assert!(InstanceDocument::from_json(r#"{"version": 9, "instance": {"kind": "cournot"}}"#).is_err());
    }
}
