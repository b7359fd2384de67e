//! A finite-dimensional Morita instance: semisimple algebras as 0-cells,
//! bimodules as 1-cells, intertwiners as 2-cells and the relative tensor
//! product as fusion.
//!
//! Every coherence datum is computed in the bases the quotients happen to
//! produce; in scrambled mode each of those bases is additionally changed by a
//! seeded invertible matrix, so associators and unitors are genuinely
//! nontrivial matrices.

pub mod algebra;
pub mod bimodule;
pub mod file;
pub mod fusion;
pub mod oracle;
pub mod smoke;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dicat_core::dicat::DicatData;
use dicat_core::engine::probes::fnv1a;
use dicat_core::linalg::{CMatrix, LinalgError, C64};

pub use algebra::{AlgIso, Algebra};
pub use bimodule::{hom_space, BimIso, Bimodule, BimoduleMap};
pub use file::{MoritaFile, MORITA_SCHEMA};
pub use fusion::{associator, coequalizer_dim, map_tensor, rel_tensor, rel_tensor_with, unitor_left, unitor_right, FusionResult};
pub use oracle::{Arrow, Cell, FusionCache, MoritaOracle, ProbeSet, Square};
pub use smoke::{tensor_smoke, SmokeCase, SmokeReport};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MoritaError {
    #[error("invalid algebra {0}: {1}")]
    InvalidAlgebra(String, String),
    #[error("invalid bimodule {0}: {1}")]
    InvalidBimodule(String, String),
    #[error("invalid bimodule map {0}: {1}")]
    InvalidMap(String, String),
    #[error("invalid isomorphism: {0}")]
    InvalidIso(String),
    #[error("incompatible cells: {0}")]
    Incompatible(String),
    #[error("fusion dimension {0} exceeds cap {1}")]
    DimensionCap(usize, usize),
    #[error("unknown probe preset {0} (expected small or default)")]
    UnknownPreset(String),
    #[error("json: {0}")]
    Json(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Probe tuples evaluated per axiom shape.
pub const DEFAULT_PROBE_CAP: usize = 200;

pub const PRESETS: [&str; 2] = ["small", "default"];

#[derive(Debug, Clone, PartialEq)]
pub struct MoritaConfig {
    pub preset: String,
    /// Change every quotient basis by a seeded invertible matrix.
    pub scramble: bool,
    /// Seeds the random probe cells, the automorphism probes and the scrambling.
    pub seed: u64,
    pub probe_cap: usize,
}

impl Default for MoritaConfig {
    fn default() -> Self {
        MoritaConfig { preset: "default".into(), scramble: false, seed: 0, probe_cap: DEFAULT_PROBE_CAP }
    }
}

impl MoritaConfig {
    pub fn scrambled(seed: u64) -> Self {
        MoritaConfig { scramble: true, seed, ..Default::default() }
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let noise = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let f = noise.frob_norm().max(1e-300);
    CMatrix::identity(n).add(&noise.scale(c(0.6 / f)))
}

/// A seeded `ℂ⊕ℂ`-`ℂ⊕ℂ` bimodule of dimension 2 to 4: a sum of the four
/// simple bimodules `e_i ℂ e_j` with random multiplicities, in a random basis.
pub fn random_cc_bimodule(key: &str, cc: &Arc<Algebra>, seed: u64) -> Result<Bimodule, MoritaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(key.as_bytes()));
    let dim = rng.gen_range(2..=4usize);
    let types: Vec<(usize, usize)> = (0..dim).map(|_| (rng.gen_range(0..2), rng.gen_range(0..2))).collect();
    let diag = |f: &dyn Fn(usize) -> bool| CMatrix::from_fn(dim, dim, |i, j| if i == j && f(i) { c(1.0) } else { c(0.0) });
    let l = (0..2).map(|k| diag(&|i| types[i].0 == k)).collect();
    let r = (0..2).map(|k| diag(&|i| types[i].1 == k)).collect();
    let plain = Bimodule::unchecked(key, cc.clone(), cc.clone(), dim, l, r);
    let g = well_conditioned(&mut rng, dim);
    plain.conjugated(key, &g)
}

/// Restriction of the actions of `ℂ⊕M₂` to its `M₂` block: the basis element
/// `E^0` acts by zero and `E^1_{ij}` by the given matrices.
fn through_m2(m2_actions: &[CMatrix], dim: usize) -> Vec<CMatrix> {
    let mut v = vec![CMatrix::zeros(dim, dim)];
    v.extend(m2_actions.iter().cloned());
    v
}

fn random_intertwiner(key: &str, m: &Arc<Bimodule>, n: &Arc<Bimodule>, seed: u64) -> Result<BimoduleMap, MoritaError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(key.as_bytes()));
    let basis = hom_space(m, n, oracle::RANK_TOL)?;
    let mut x = CMatrix::zeros(n.dim(), m.dim());
    for b in &basis {
        x = x.add(&b.scale(C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    }
    BimoduleMap::new(key, m.clone(), n.clone(), x, 1e-9)
}

/// The probe cells of a preset.
pub fn preset_probes(preset: &str, seed: u64) -> Result<ProbeSet, MoritaError> {
    let small = match preset {
        "small" => true,
        "default" => false,
        p => return Err(MoritaError::UnknownPreset(p.into())),
    };
    let cx = Arc::new(Algebra::complex());
    let cc = Arc::new(Algebra::complex2());
    let m2 = Arc::new(Algebra::m2());
    let cm2 = Arc::new(Algebra::cm2());
    let mut algebras = vec![cx.clone(), cc.clone(), m2.clone()];
    if !small {
        algebras.push(cm2.clone());
    }
    let b = |x: Bimodule| Arc::new(x);
    let mut bims: Vec<Arc<Bimodule>> = vec![
        b(Bimodule::regular(&cx)),
        b(Bimodule::regular(&cc)),
        b(Bimodule::regular(&m2)),
        b(Bimodule::column(&m2, &cx)),
        b(Bimodule::row(&cx, &m2)),
        b(Bimodule::character("e1", &cc, &[c(1.0), c(0.0)], &cx, &[c(1.0)])),
        b(Bimodule::character("f2", &cx, &[c(1.0)], &cc, &[c(0.0), c(1.0)])),
        b(Bimodule::scalars("c2", &cx, 2)),
        b(Bimodule::zero("z", &cx, &cx)),
    ];
    if !small {
        bims.push(b(random_cc_bimodule("r1", &cc, seed)?));
        bims.push(b(random_cc_bimodule("r2", &cc, seed)?));
        let rm2 = Bimodule::regular(&m2);
        bims.push(b(Bimodule::unchecked("u", cm2.clone(), m2.clone(), 4, through_m2(&rm2.left_action, 4), rm2.right_action.clone())));
        bims.push(b(Bimodule::unchecked("v", m2.clone(), cm2.clone(), 4, rm2.left_action.clone(), through_m2(&rm2.right_action, 4))));
        let col = Bimodule::column(&m2, &cx);
        bims.push(b(Bimodule::unchecked("col1", cm2.clone(), cx.clone(), 2, through_m2(&col.left_action, 2), col.right_action.clone())));
        let e0 = [c(1.0), c(0.0), c(0.0), c(0.0), c(0.0)];
        bims.push(b(Bimodule::character("e0", &cm2, &e0, &cm2, &e0)));
    }
    for m in &bims {
        let r = m.defect();
        if !(r <= 1e-9) {
            return Err(MoritaError::InvalidBimodule(m.key.clone(), format!("residual {r:.3e}")));
        }
    }
    let find = |k: &str| bims.iter().find(|m| m.key == k).cloned().expect("preset bimodule");
    let mut maps: Vec<Arc<BimoduleMap>> = bims.iter().map(|m| Arc::new(BimoduleMap::identity(m))).collect();
    let proj = |key: &str, m: &Arc<Bimodule>, x: CMatrix| BimoduleMap::new(key, m.clone(), m.clone(), x, 1e-9).map(Arc::new);
    let icc = find("i(CC)");
    maps.push(proj("pr(i(CC))", &icc, icc.left(&cc.block_unit(0)))?);
    let c2 = find("c2");
    maps.push(proj("pr(c2)", &c2, CMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, 0.0])?)?);
    maps.push(Arc::new(BimoduleMap::zero("0(c2,c2)", &c2, &c2)));
    if !small {
        let (r1, r2, z) = (find("r1"), find("r2"), find("z"));
        maps.push(proj("pr(r1)", &r1, r1.left(&cc.block_unit(0)))?);
        for (k, m, n) in [("rand(r1,r2)", &r1, &r2), ("rand(r2,r1)", &r2, &r1), ("rand(r1,r1)", &r1, &r1), ("rand(c2,c2)", &c2, &c2)] {
            maps.push(Arc::new(random_intertwiner(k, m, n, seed)?));
        }
        maps.push(Arc::new(BimoduleMap::zero("0(c2,z)", &c2, &z)));
        maps.push(Arc::new(BimoduleMap::zero("0(z,c2)", &z, &c2)));
        let col = find("col");
        maps.push(Arc::new(BimoduleMap::zero("0(col,col)", &col, &col)));
    }
    Ok(ProbeSet { algebras, bimodules: bims, maps })
}

/// Builds the Morita instance for a configuration.
pub fn build_oracle(config: &MoritaConfig) -> Result<MoritaOracle, MoritaError> {
    let probes = preset_probes(&config.preset, config.seed)?;
    let name = if config.scramble { "morita (scrambled)" } else { "morita" };
    MoritaOracle::new(name, probes, config.scramble.then_some(config.seed), config.seed, config.probe_cap, config.preset.clone())
}

pub fn build_instance(config: &MoritaConfig) -> Result<DicatData<MoritaOracle>, MoritaError> {
    Ok(DicatData::new(build_oracle(config)?))
}
