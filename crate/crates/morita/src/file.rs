//! The `morita/v1` file format for user-supplied algebras, bimodules and maps.
//!
//! Matrices are lists of rows; an entry is a real number or a `[re, im]` pair.
//! Algebras are given by block sizes and an optional witness (coordinates in
//! the file's basis to block coordinates; the identity if omitted); action
//! tables list one matrix per basis element of the acting algebra.

use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use dicat_core::linalg::{CMatrix, C64};

use crate::algebra::Algebra;
use crate::bimodule::{Bimodule, BimoduleMap};
use crate::oracle::{MoritaOracle, ProbeSet};
use crate::MoritaError;

pub const MORITA_SCHEMA: &str = "morita/v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

pub type MatrixJson = Vec<Vec<Entry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub name: String,
    pub blocks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BimoduleJson {
    pub name: String,
    pub left: String,
    pub right: String,
    pub dim: usize,
    pub left_action: Vec<MatrixJson>,
    pub right_action: Vec<MatrixJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapJson {
    pub name: String,
    pub source: String,
    pub target: String,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoritaFile {
    pub schema: String,
    pub name: String,
    pub algebras: Vec<AlgebraJson>,
    #[serde(default)]
    pub bimodules: Vec<BimoduleJson>,
    #[serde(default)]
    pub maps: Vec<MapJson>,
    /// Add the regular bimodule of every algebra to the probes.
    #[serde(default = "yes")]
    pub regulars: bool,
}

fn yes() -> bool {
    true
}

fn json_err(m: impl Into<String>) -> MoritaError {
    MoritaError::Json(m.into())
}

pub fn matrix_from_json(m: &MatrixJson, rows: usize, cols: usize, what: &str) -> Result<CMatrix, MoritaError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(json_err(format!("{what}: expected a {rows}x{cols} matrix")));
    }
    let data = m
        .iter()
        .flatten()
        .map(|e| match *e {
            Entry::Real(x) => C64::new(x, 0.0),
            Entry::Complex([re, im]) => C64::new(re, im),
        })
        .collect();
    CMatrix::new(rows, cols, data).map_err(|e| json_err(format!("{what}: {e}")))
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    let z = m.get(i, j);
                    if z.im == 0.0 {
                        Entry::Real(z.re)
                    } else {
                        Entry::Complex([z.re, z.im])
                    }
                })
                .collect()
        })
        .collect()
}

/// Names may not contain the characters used to build derived keys.
fn check_name(n: &str, seen: &mut HashSet<String>) -> Result<(), MoritaError> {
    if n.is_empty() || n.chars().any(|c| "(),[]^|' ".contains(c)) {
        return Err(json_err(format!("invalid name {n:?}")));
    }
    if !seen.insert(n.to_string()) {
        return Err(json_err(format!("duplicate name {n}")));
    }
    Ok(())
}

/// A valid file name for a derived key: reserved characters become `_`.
fn file_name(key: &str) -> String {
    key.chars().map(|c| if "(),[]^|' ".contains(c) { '_' } else { c }).collect()
}

impl MoritaFile {
    pub fn parse(text: &str) -> Result<Self, MoritaError> {
        let f: MoritaFile = serde_json::from_str(text).map_err(|e| json_err(e.to_string()))?;
        if f.schema != MORITA_SCHEMA {
            return Err(json_err(format!("schema {:?}, expected {MORITA_SCHEMA}", f.schema)));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("files serialize")
    }

    /// Validated probe cells.
    pub fn probes(&self, tol: f64) -> Result<ProbeSet, MoritaError> {
        let mut seen = HashSet::new();
        let mut algebras = Vec::new();
        for a in &self.algebras {
            check_name(&a.name, &mut seen)?;
            let d: usize = a.blocks.iter().map(|n| n * n).sum();
            let alg = match &a.witness {
                Some(w) => Algebra::conjugated(a.name.clone(), &a.blocks, matrix_from_json(w, d, d, &a.name)?, tol)?,
                None => Algebra::new(a.name.clone(), crate::algebra::block_table(&a.blocks).0, crate::algebra::block_table(&a.blocks).1, a.blocks.clone(), CMatrix::identity(d), tol)?,
            };
            algebras.push(Arc::new(alg));
        }
        let alg = |n: &str| algebras.iter().find(|a| a.name == n).cloned().ok_or_else(|| json_err(format!("unknown algebra {n}")));
        let mut bimodules: Vec<Arc<Bimodule>> = Vec::new();
        if self.regulars {
            bimodules.extend(algebras.iter().map(|a| Arc::new(Bimodule::regular(a))));
        }
        for b in &self.bimodules {
            check_name(&b.name, &mut seen)?;
            let (l, r) = (alg(&b.left)?, alg(&b.right)?);
            if b.left_action.len() != l.dim() || b.right_action.len() != r.dim() {
                return Err(json_err(format!("{}: need {} left and {} right action matrices", b.name, l.dim(), r.dim())));
            }
            let la = b.left_action.iter().map(|m| matrix_from_json(m, b.dim, b.dim, &b.name)).collect::<Result<_, _>>()?;
            let ra = b.right_action.iter().map(|m| matrix_from_json(m, b.dim, b.dim, &b.name)).collect::<Result<_, _>>()?;
            bimodules.push(Arc::new(Bimodule::new(b.name.clone(), l, r, b.dim, la, ra, tol)?));
        }
        let bim = |n: &str| bimodules.iter().find(|m| m.key == n).cloned().ok_or_else(|| json_err(format!("unknown bimodule {n}")));
        let mut maps: Vec<Arc<BimoduleMap>> = bimodules.iter().map(|m| Arc::new(BimoduleMap::identity(m))).collect();
        for m in &self.maps {
            check_name(&m.name, &mut seen)?;
            let (s, t) = (bim(&m.source)?, bim(&m.target)?);
            let x = matrix_from_json(&m.matrix, t.dim(), s.dim(), &m.name)?;
            maps.push(Arc::new(BimoduleMap::new(m.name.clone(), s, t, x, tol)?));
        }
        Ok(ProbeSet { algebras, bimodules, maps })
    }

    pub fn build_oracle(&self, scramble: bool, seed: u64, probe_cap: usize) -> Result<MoritaOracle, MoritaError> {
        MoritaOracle::new(self.name.clone(), self.probes(1e-9)?, scramble.then_some(seed), seed, probe_cap, "file")
    }

    /// A file reproducing a probe set (regular bimodules and identity maps are
    /// implied and left out; map names have reserved characters replaced).
    pub fn from_probes(name: &str, p: &ProbeSet) -> Self {
        let algebras = p
            .algebras
            .iter()
            .map(|a| AlgebraJson {
                name: a.name.clone(),
                blocks: a.blocks.clone(),
                witness: (a.witness != CMatrix::identity(a.dim())).then(|| matrix_to_json(&a.witness)),
            })
            .collect();
        let bimodules = p
            .bimodules
            .iter()
            .filter(|m| m.key != format!("i({})", m.left_algebra.name))
            .map(|m| BimoduleJson {
                name: m.key.clone(),
                left: m.left_algebra.name.clone(),
                right: m.right_algebra.name.clone(),
                dim: m.dim(),
                left_action: m.left_action.iter().map(matrix_to_json).collect(),
                right_action: m.right_action.iter().map(matrix_to_json).collect(),
            })
            .collect();
        let maps = p
            .maps
            .iter()
            .filter(|m| !m.key.starts_with("id("))
            .map(|m| MapJson { name: file_name(&m.key), source: m.source.key.clone(), target: m.target.key.clone(), matrix: matrix_to_json(&m.matrix) })
            .collect();
        MoritaFile { schema: MORITA_SCHEMA.into(), name: name.into(), algebras, bimodules, maps, regulars: true }
    }
}
