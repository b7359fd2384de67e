//! The Morita instance oracle: algebras, bimodules and intertwiners as the
//! three levels, relative tensor product as horizontal composition.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dicat_core::cells::Op;
use dicat_core::engine::probes::fnv1a;
use dicat_core::linalg::{residual, CMatrix, C64};
use dicat_core::oracle::{FibrationSupport, InstanceOracle, OResult, OracleError, TransportTrial};

use crate::algebra::{block_swap, inner_automorphism, AlgIso, Algebra};
use crate::bimodule::{hom_space, BimIso, Bimodule, BimoduleMap};
use crate::fusion::{associator, iso_tensor, map_tensor, rel_tensor_with, unitor_left, unitor_left_inv, unitor_right, unitor_right_inv};
use crate::MoritaError;

/// Rank tolerance for every quotient the oracle computes.
pub const RANK_TOL: f64 = 1e-9;

/// An object of one of the three levels, compared by its key.
#[derive(Debug, Clone)]
pub enum Cell {
    Alg(Arc<Algebra>),
    Bim(Arc<Bimodule>),
    Map(Arc<BimoduleMap>),
}

impl Cell {
    pub fn key(&self) -> &str {
        match self {
            Cell::Alg(a) => &a.name,
            Cell::Bim(b) => &b.key,
            Cell::Map(m) => &m.key,
        }
    }
    fn tag(&self) -> u8 {
        match self {
            Cell::Alg(_) => 0,
            Cell::Bim(_) => 1,
            Cell::Map(_) => 2,
        }
    }
    pub fn as_alg(&self) -> OResult<&Arc<Algebra>> {
        match self {
            Cell::Alg(a) => Ok(a),
            c => Err(OracleError::Undefined(format!("{} is not an algebra", c.key()))),
        }
    }
    pub fn as_bim(&self) -> OResult<&Arc<Bimodule>> {
        match self {
            Cell::Bim(b) => Ok(b),
            c => Err(OracleError::Undefined(format!("{} is not a bimodule", c.key()))),
        }
    }
    pub fn as_map(&self) -> OResult<&Arc<BimoduleMap>> {
        match self {
            Cell::Map(m) => Ok(m),
            c => Err(OracleError::Undefined(format!("{} is not a bimodule map", c.key()))),
        }
    }
}

impl PartialEq for Cell {
    fn eq(&self, o: &Self) -> bool {
        self.tag() == o.tag() && self.key() == o.key()
    }
}
impl Eq for Cell {}
impl Hash for Cell {
    fn hash<H: Hasher>(&self, h: &mut H) {
        self.tag().hash(h);
        self.key().hash(h);
    }
}

/// A morphism of intertwiners: isomorphisms of sources (`top`) and targets
/// (`bottom`) with `tgt ∘ top = bottom ∘ src`. The level is thin over pairs of
/// 1-cell isomorphisms.
#[derive(Debug, Clone, PartialEq)]
pub struct Square {
    pub src: Arc<BimoduleMap>,
    pub tgt: Arc<BimoduleMap>,
    pub top: BimIso,
    pub bottom: BimIso,
}

impl Square {
    pub fn defect(&self) -> f64 {
        let (t, b) = (&self.top, &self.bottom);
        if t.src.key != self.src.source.key || t.tgt.key != self.tgt.source.key || b.src.key != self.src.target.key || b.tgt.key != self.tgt.target.key {
            return f64::INFINITY;
        }
        let glob = residual(&t.left.matrix, &b.left.matrix)
            .and_then(|x| Ok(x.max(residual(&t.right.matrix, &b.right.matrix)?)))
            .unwrap_or(f64::INFINITY);
        let comm = residual(&self.tgt.matrix.mul(&t.matrix), &b.matrix.mul(&self.src.matrix)).unwrap_or(f64::INFINITY);
        t.defect().max(b.defect()).max(glob).max(comm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arrow {
    Alg(AlgIso),
    Bim(BimIso),
    Sq(Square),
}

impl Arrow {
    fn as_alg(&self) -> OResult<&AlgIso> {
        match self {
            Arrow::Alg(a) => Ok(a),
            _ => Err(OracleError::Undefined("expected an algebra isomorphism".into())),
        }
    }
    fn as_bim(&self) -> OResult<&BimIso> {
        match self {
            Arrow::Bim(a) => Ok(a),
            _ => Err(OracleError::Undefined("expected a bimodule isomorphism".into())),
        }
    }
    fn as_sq(&self) -> OResult<&Square> {
        match self {
            Arrow::Sq(a) => Ok(a),
            _ => Err(OracleError::Undefined("expected a morphism of intertwiners".into())),
        }
    }
}

/// Per-work-item cache of fusions, keyed by the factor keys.
#[derive(Default)]
pub struct FusionCache {
    fused: HashMap<(String, String), Arc<Bimodule>>,
}

/// The probe cells an instance is quantified over.
#[derive(Debug, Clone, Default)]
pub struct ProbeSet {
    pub algebras: Vec<Arc<Algebra>>,
    pub bimodules: Vec<Arc<Bimodule>>,
    pub maps: Vec<Arc<BimoduleMap>>,
}

#[derive(Debug, Clone)]
pub struct MoritaOracle {
    pub name: String,
    pub probes: ProbeSet,
    /// Seed of the quotient-basis scrambling, if enabled.
    pub scramble: Option<u64>,
    pub seed: u64,
    pub probe_cap: usize,
    pub preset: String,
    regulars: HashMap<String, Arc<Bimodule>>,
    alg_endos: HashMap<String, Vec<AlgIso>>,
    bim_endos: HashMap<String, Vec<BimIso>>,
}

fn num(e: MoritaError) -> OracleError {
    OracleError::Numeric(e.to_string())
}

/// Scalars used for the scalar automorphisms of 1- and 2-cells.
fn probe_scalars() -> [C64; 2] {
    [C64::from_polar(1.5, 0.3), C64::new(-0.8, 0.0)]
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// `I + N/(2‖N‖)` for a random element `N` of the span: invertible and
/// inside the span whenever the span contains the identity.
fn random_unipotentish(rng: &mut ChaCha8Rng, span: &[CMatrix], n: usize) -> Option<CMatrix> {
    if span.is_empty() || n == 0 {
        return None;
    }
    let mut x = CMatrix::zeros(n, n);
    for b in span {
        x = x.add(&b.scale(C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
    }
    let f = x.frob_norm();
    if f < 1e-12 {
        return None;
    }
    Some(CMatrix::identity(n).add(&x.scale(C64::new(0.5 / f, 0.0))))
}

impl MoritaOracle {
    /// Builds the oracle around a probe set; automorphism probes are derived
    /// from `seed`.
    pub fn new(name: impl Into<String>, probes: ProbeSet, scramble: Option<u64>, seed: u64, probe_cap: usize, preset: impl Into<String>) -> Result<Self, MoritaError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(b"morita automorphisms"));
        let mut regulars = HashMap::new();
        let mut alg_endos = HashMap::new();
        for a in &probes.algebras {
            regulars.insert(a.name.clone(), Arc::new(Bimodule::regular(a)));
            let mut v = Vec::new();
            for (b, &n) in a.blocks.iter().enumerate() {
                if n >= 2 {
                    let g = CMatrix::identity(n).add(&random_matrix(&mut rng, n, n).scale(C64::new(0.3, 0.0)));
                    v.push(inner_automorphism(a, b, &g)?);
                }
            }
            if let Some(b2) = (1..a.blocks.len()).find(|&b| a.blocks[b] == a.blocks[0]) {
                v.push(block_swap(a, 0, b2)?);
            }
            alg_endos.insert(a.name.clone(), v);
        }
        let mut bim_endos = HashMap::new();
        for m in &probes.bimodules {
            let mut v: Vec<BimIso> = Vec::new();
            if m.dim() > 0 {
                v.push(BimIso::auto(m, CMatrix::identity(m.dim()).scale(probe_scalars()[0])));
                let end = hom_space(m, m, RANK_TOL)?;
                if end.len() > 1 {
                    if let Some(u) = random_unipotentish(&mut rng, &end, m.dim()) {
                        v.push(BimIso::auto(m, u));
                    }
                }
            }
            bim_endos.insert(m.key.clone(), v);
        }
        Ok(MoritaOracle { name: name.into(), probes, scramble, seed, probe_cap, preset: preset.into(), regulars, alg_endos, bim_endos })
    }

    pub fn regular(&self, a: &Arc<Algebra>) -> Arc<Bimodule> {
        self.regulars.get(&a.name).cloned().unwrap_or_else(|| Arc::new(Bimodule::regular(a)))
    }

    /// `M ⊗_B N`, cached per work item.
    pub fn fuse(&self, ctx: &mut FusionCache, m: &Arc<Bimodule>, n: &Arc<Bimodule>) -> OResult<Arc<Bimodule>> {
        let k = (m.key.clone(), n.key.clone());
        if let Some(b) = ctx.fused.get(&k) {
            return Ok(b.clone());
        }
        let r = rel_tensor_with(m, n, RANK_TOL, self.scramble).map_err(num)?;
        ctx.fused.insert(k, r.bimodule.clone());
        Ok(r.bimodule)
    }

    /// The horizontal associator at `(m, n, p)`.
    pub fn assoc(&self, ctx: &mut FusionCache, m: &Arc<Bimodule>, n: &Arc<Bimodule>, p: &Arc<Bimodule>) -> OResult<BimIso> {
        let mn = self.fuse(ctx, m, n)?;
        let l = self.fuse(ctx, &mn, p)?;
        let np = self.fuse(ctx, n, p)?;
        let r = self.fuse(ctx, m, &np)?;
        let matrix = associator(&l, &r).map_err(num)?;
        Ok(BimIso { src: l, tgt: r, left: AlgIso::identity(&m.left_algebra), right: AlgIso::identity(&p.right_algebra), matrix })
    }

    fn map(&self, ctx: &mut FusionCache, op: Op, args: &[&Cell]) -> OResult<Arc<BimoduleMap>> {
        let v: Vec<Cell> = args.iter().map(|c| (*c).clone()).collect();
        Ok(self.apply_obj(ctx, op, &v)?.as_map()?.clone())
    }

    fn iso_m(&self, ctx: &mut FusionCache, u: &BimIso, v: &BimIso) -> OResult<BimIso> {
        let src = self.fuse(ctx, &u.src, &v.src)?;
        let tgt = self.fuse(ctx, &u.tgt, &v.tgt)?;
        iso_tensor(u, v, &src, &tgt).map_err(num)
    }

    fn iso_i(&self, a: &AlgIso) -> BimIso {
        BimIso { src: self.regular(&a.src), tgt: self.regular(&a.tgt), left: a.clone(), right: a.clone(), matrix: a.matrix.clone() }
    }

    /// The square between `src` and `tgt` with the given top and bottom, both
    /// defaulting to identities (which requires matching ends).
    fn square(&self, src: Arc<BimoduleMap>, tgt: Arc<BimoduleMap>, top: Option<BimIso>, bottom: Option<BimIso>) -> OResult<Arrow> {
        let id = |a: &Arc<Bimodule>, b: &Arc<Bimodule>| -> OResult<BimIso> {
            if a.key != b.key {
                return Err(OracleError::Undefined(format!("no identity from {} to {}", a.key, b.key)));
            }
            Ok(BimIso::identity(a))
        };
        let top = match top {
            Some(t) => t,
            None => id(&src.source, &tgt.source)?,
        };
        let bottom = match bottom {
            Some(b) => b,
            None => id(&src.target, &tgt.target)?,
        };
        Ok(Arrow::Sq(Square { src, tgt, top, bottom }))
    }

    /// Lifts for the fibration condition of `s × t` at both levels.
    pub fn transport_trials(&self) -> Vec<TransportTrial> {
        let mut out = Vec::new();
        let isos = |a: &Arc<Algebra>| -> Vec<AlgIso> {
            let mut v = vec![AlgIso::identity(a)];
            v.extend(self.alg_endos.get(&a.name).cloned().unwrap_or_default());
            v
        };
        let image_res = |u: &BimIso, a: &AlgIso, b: &AlgIso| -> f64 {
            let r = residual(&u.left.matrix, &a.matrix).unwrap_or(f64::INFINITY);
            r.max(residual(&u.right.matrix, &b.matrix).unwrap_or(f64::INFINITY))
        };
        for m in &self.probes.bimodules {
            for (i, a) in isos(&m.left_algebra).iter().enumerate() {
                for (j, b) in isos(&m.right_algebra).iter().enumerate() {
                    let label = format!("{} along ({i},{j})", m.key);
                    match m.transport(a, b, RANK_TOL) {
                        Ok((lift, u)) => {
                            let r = lift.defect().max(u.defect()).max(image_res(&u, a, b)).max(if u.tgt.key == m.key { 0.0 } else { f64::INFINITY });
                            out.push(TransportTrial { level: 1, label, residual: r, error: None });
                        }
                        Err(e) => out.push(TransportTrial { level: 1, label, residual: f64::INFINITY, error: Some(e.to_string()) }),
                    }
                }
            }
        }
        for phi in &self.probes.maps {
            let (m, n) = (&phi.source, &phi.target);
            let mut requests: Vec<(String, Result<(BimIso, BimIso), MoritaError>)> = Vec::new();
            for (i, a) in isos(&m.left_algebra).iter().enumerate() {
                for (j, b) in isos(&m.right_algebra).iter().enumerate() {
                    let r = m.transport(a, b, RANK_TOL).and_then(|(_, u)| Ok((u, n.transport(a, b, RANK_TOL)?.1)));
                    requests.push((format!("{} along ({i},{j})", phi.key), r));
                }
            }
            let em = self.bim_endos.get(&m.key).cloned().unwrap_or_default();
            let en = self.bim_endos.get(&n.key).cloned().unwrap_or_default();
            for (i, u) in em.iter().enumerate() {
                for (j, v) in en.iter().enumerate() {
                    requests.push((format!("{} along automorphisms ({i},{j})", phi.key), Ok((u.clone(), v.clone()))));
                }
            }
            for (label, req) in requests {
                let trial = req.and_then(|(u, v)| {
                    // the lift φ' = v⁻¹ φ u from u.src to v.src
                    let vinv = v.matrix.inverse()?;
                    let lift = Arc::new(BimoduleMap {
                        key: format!("{}'", phi.key),
                        source: u.src.clone(),
                        target: v.src.clone(),
                        matrix: vinv.mul(&phi.matrix).mul(&u.matrix),
                    });
                    let sq = Square { src: lift.clone(), tgt: phi.clone(), top: u.clone(), bottom: v.clone() };
                    let image = residual(&sq.top.matrix, &u.matrix)?.max(residual(&sq.bottom.matrix, &v.matrix)?);
                    Ok(lift.defect().max(sq.defect()).max(image))
                });
                out.push(match trial {
                    Ok(r) => TransportTrial { level: 2, label, residual: r, error: None },
                    Err(e) => TransportTrial { level: 2, label, residual: f64::INFINITY, error: Some(e.to_string()) },
                });
            }
        }
        out
    }
}

impl InstanceOracle for MoritaOracle {
    type Obj = Cell;
    type Mor = Arrow;
    type Ctx = FusionCache;

    fn name(&self) -> String {
        self.name.clone()
    }

    fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "name": self.name,
            "backend": "morita",
            "preset": self.preset,
            "seed": self.seed,
            "scramble": self.scramble.is_some(),
            "cells": [self.probes.algebras.len(), self.probes.bimodules.len(), self.probes.maps.len()],
        })
    }

    fn probe_objects(&self, level: u8) -> Vec<Cell> {
        match level {
            0 => self.probes.algebras.iter().cloned().map(Cell::Alg).collect(),
            1 => self.probes.bimodules.iter().cloned().map(Cell::Bim).collect(),
            _ => self.probes.maps.iter().cloned().map(Cell::Map).collect(),
        }
    }

    fn probe_cap(&self) -> usize {
        self.probe_cap
    }

    fn obj_label(&self, _level: u8, o: &Cell) -> String {
        o.key().to_string()
    }

    fn obj_boundary(&self, _level: u8, o: &Cell) -> (Cell, Cell) {
        match o {
            Cell::Bim(b) => (Cell::Alg(b.left_algebra.clone()), Cell::Alg(b.right_algebra.clone())),
            Cell::Map(m) => (Cell::Bim(m.source.clone()), Cell::Bim(m.target.clone())),
            Cell::Alg(_) => (o.clone(), o.clone()),
        }
    }

    fn mor_ends(&self, _level: u8, m: &Arrow) -> (Cell, Cell) {
        match m {
            Arrow::Alg(a) => (Cell::Alg(a.src.clone()), Cell::Alg(a.tgt.clone())),
            Arrow::Bim(u) => (Cell::Bim(u.src.clone()), Cell::Bim(u.tgt.clone())),
            Arrow::Sq(s) => (Cell::Map(s.src.clone()), Cell::Map(s.tgt.clone())),
        }
    }

    fn mor_boundary(&self, _level: u8, m: &Arrow) -> (Arrow, Arrow) {
        match m {
            Arrow::Bim(u) => (Arrow::Alg(u.left.clone()), Arrow::Alg(u.right.clone())),
            Arrow::Sq(s) => (Arrow::Bim(s.top.clone()), Arrow::Bim(s.bottom.clone())),
            Arrow::Alg(_) => (m.clone(), m.clone()),
        }
    }

    fn identity(&self, _level: u8, o: &Cell) -> Arrow {
        match o {
            Cell::Alg(a) => Arrow::Alg(AlgIso::identity(a)),
            Cell::Bim(b) => Arrow::Bim(BimIso::identity(b)),
            Cell::Map(m) => Arrow::Sq(Square { src: m.clone(), tgt: m.clone(), top: BimIso::identity(&m.source), bottom: BimIso::identity(&m.target) }),
        }
    }

    fn compose(&self, _level: u8, f: &Arrow, g: &Arrow) -> OResult<Arrow> {
        let undefined = || OracleError::Undefined("composite of non-composable morphisms".into());
        match (f, g) {
            (Arrow::Alg(a), Arrow::Alg(b)) => a.then(b).map(Arrow::Alg).ok_or_else(undefined),
            (Arrow::Bim(a), Arrow::Bim(b)) => a.then(b).map(Arrow::Bim).ok_or_else(undefined),
            (Arrow::Sq(a), Arrow::Sq(b)) => {
                if a.tgt.key != b.src.key {
                    return Err(undefined());
                }
                Ok(Arrow::Sq(Square {
                    src: a.src.clone(),
                    tgt: b.tgt.clone(),
                    top: a.top.then(&b.top).ok_or_else(undefined)?,
                    bottom: a.bottom.then(&b.bottom).ok_or_else(undefined)?,
                }))
            }
            _ => Err(undefined()),
        }
    }

    fn inverse(&self, _level: u8, f: &Arrow) -> OResult<Arrow> {
        let ni = || OracleError::NotInvertible("singular matrix".into());
        match f {
            Arrow::Alg(a) => a.inverse().map(Arrow::Alg).ok_or_else(ni),
            Arrow::Bim(u) => u.inverse().map(Arrow::Bim).ok_or_else(ni),
            Arrow::Sq(s) => Ok(Arrow::Sq(Square {
                src: s.tgt.clone(),
                tgt: s.src.clone(),
                top: s.top.inverse().ok_or_else(ni)?,
                bottom: s.bottom.inverse().ok_or_else(ni)?,
            })),
        }
    }

    fn mor_residual(&self, _level: u8, a: &Arrow, b: &Arrow) -> f64 {
        fn alg(a: &AlgIso, b: &AlgIso) -> f64 {
            if a.src.name != b.src.name || a.tgt.name != b.tgt.name {
                return f64::INFINITY;
            }
            residual(&a.matrix, &b.matrix).unwrap_or(f64::INFINITY)
        }
        fn bim(a: &BimIso, b: &BimIso) -> f64 {
            if a.src.key != b.src.key || a.tgt.key != b.tgt.key {
                return f64::INFINITY;
            }
            let r = residual(&a.matrix, &b.matrix).unwrap_or(f64::INFINITY);
            r.max(alg(&a.left, &b.left)).max(alg(&a.right, &b.right))
        }
        match (a, b) {
            (Arrow::Alg(x), Arrow::Alg(y)) => alg(x, y),
            (Arrow::Bim(x), Arrow::Bim(y)) => bim(x, y),
            (Arrow::Sq(x), Arrow::Sq(y)) => {
                if x.src.key != y.src.key || x.tgt.key != y.tgt.key {
                    return f64::INFINITY;
                }
                bim(&x.top, &y.top).max(bim(&x.bottom, &y.bottom))
            }
            _ => f64::INFINITY,
        }
    }

    fn mor_validity(&self, _level: u8, m: &Arrow) -> f64 {
        match m {
            Arrow::Alg(a) => a.defect(),
            Arrow::Bim(u) => u.defect(),
            Arrow::Sq(s) => s.defect().max(s.src.defect()).max(s.tgt.defect()),
        }
    }

    fn has_op(&self, _op: Op) -> bool {
        true
    }

    fn has_component(&self, key: &str) -> bool {
        COMPONENT_KEYS.contains(&key)
    }

    fn apply_obj(&self, ctx: &mut FusionCache, op: Op, args: &[Cell]) -> OResult<Cell> {
        let arity = |n: usize| -> OResult<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(OracleError::Undefined(format!("{} takes {n} arguments", op.name())))
            }
        };
        arity(op.arg_levels().len())?;
        let named = |key: String, source: Arc<Bimodule>, target: Arc<Bimodule>, matrix: CMatrix| Cell::Map(Arc::new(BimoduleMap { key, source, target, matrix }));
        Ok(match op {
            Op::I => Cell::Bim(self.regular(args[0].as_alg()?)),
            Op::M => Cell::Bim(self.fuse(ctx, args[0].as_bim()?, args[1].as_bim()?)?),
            Op::Iv => {
                let m = args[0].as_bim()?;
                Cell::Map(Arc::new(BimoduleMap::identity(m)))
            }
            Op::Mv => {
                let (f, g) = (args[0].as_map()?, args[1].as_map()?);
                if f.target.key != g.source.key {
                    return Err(OracleError::Undefined(format!("{} does not end where {} starts", f.key, g.key)));
                }
                named(format!("v({},{})", f.key, g.key), f.source.clone(), g.target.clone(), g.matrix.mul(&f.matrix))
            }
            Op::Wr => {
                let (f, n) = (args[0].as_map()?, args[1].as_bim()?);
                let src = self.fuse(ctx, &f.source, n)?;
                let tgt = self.fuse(ctx, &f.target, n)?;
                let m = map_tensor(format!("wr({},{})", f.key, n.key), f, &BimoduleMap::identity(n), &src, &tgt).map_err(num)?;
                Cell::Map(Arc::new(m))
            }
            Op::Wl => {
                let (n, f) = (args[0].as_bim()?, args[1].as_map()?);
                let src = self.fuse(ctx, n, &f.source)?;
                let tgt = self.fuse(ctx, n, &f.target)?;
                let m = map_tensor(format!("wl({},{})", n.key, f.key), &BimoduleMap::identity(n), f, &src, &tgt).map_err(num)?;
                Cell::Map(Arc::new(m))
            }
            Op::Il | Op::IlInv => {
                let m = args[0].as_bim()?;
                let f = self.fuse(ctx, &self.regular(&m.left_algebra), m)?;
                if op == Op::Il {
                    named(format!("il({})", m.key), f.clone(), m.clone(), unitor_left(&f).map_err(num)?)
                } else {
                    named(format!("il-({})", m.key), m.clone(), f.clone(), unitor_left_inv(&f).map_err(num)?)
                }
            }
            Op::Ir | Op::IrInv => {
                let m = args[0].as_bim()?;
                let f = self.fuse(ctx, m, &self.regular(&m.right_algebra))?;
                if op == Op::Ir {
                    named(format!("ir({})", m.key), f.clone(), m.clone(), unitor_right(&f).map_err(num)?)
                } else {
                    named(format!("ir-({})", m.key), m.clone(), f.clone(), unitor_right_inv(&f).map_err(num)?)
                }
            }
        })
    }

    fn apply_mor(&self, ctx: &mut FusionCache, op: Op, args: &[Arrow]) -> OResult<Arrow> {
        if args.len() != op.arg_levels().len() {
            return Err(OracleError::Undefined(format!("{} takes {} arguments", op.name(), op.arg_levels().len())));
        }
        let cells = |xs: &[&Cell]| -> Vec<Cell> { xs.iter().map(|c| (*c).clone()).collect() };
        Ok(match op {
            Op::I => Arrow::Bim(self.iso_i(args[0].as_alg()?)),
            Op::M => Arrow::Bim(self.iso_m(ctx, args[0].as_bim()?, args[1].as_bim()?)?),
            Op::Iv => {
                let u = args[0].as_bim()?;
                Arrow::Sq(Square { src: Arc::new(BimoduleMap::identity(&u.src)), tgt: Arc::new(BimoduleMap::identity(&u.tgt)), top: u.clone(), bottom: u.clone() })
            }
            Op::Mv => {
                let (a, b) = (args[0].as_sq()?, args[1].as_sq()?);
                let src = self.map(ctx, Op::Mv, &[&Cell::Map(a.src.clone()), &Cell::Map(b.src.clone())])?;
                let tgt = self.map(ctx, Op::Mv, &[&Cell::Map(a.tgt.clone()), &Cell::Map(b.tgt.clone())])?;
                Arrow::Sq(Square { src, tgt, top: a.top.clone(), bottom: b.bottom.clone() })
            }
            Op::Wr => {
                let (s, w) = (args[0].as_sq()?, args[1].as_bim()?);
                let src = self.apply_obj(ctx, Op::Wr, &cells(&[&Cell::Map(s.src.clone()), &Cell::Bim(w.src.clone())]))?.as_map()?.clone();
                let tgt = self.apply_obj(ctx, Op::Wr, &cells(&[&Cell::Map(s.tgt.clone()), &Cell::Bim(w.tgt.clone())]))?.as_map()?.clone();
                let top = self.iso_m(ctx, &s.top, w)?;
                let bottom = self.iso_m(ctx, &s.bottom, w)?;
                Arrow::Sq(Square { src, tgt, top, bottom })
            }
            Op::Wl => {
                let (w, s) = (args[0].as_bim()?, args[1].as_sq()?);
                let src = self.apply_obj(ctx, Op::Wl, &cells(&[&Cell::Bim(w.src.clone()), &Cell::Map(s.src.clone())]))?.as_map()?.clone();
                let tgt = self.apply_obj(ctx, Op::Wl, &cells(&[&Cell::Bim(w.tgt.clone()), &Cell::Map(s.tgt.clone())]))?.as_map()?.clone();
                let top = self.iso_m(ctx, w, &s.top)?;
                let bottom = self.iso_m(ctx, w, &s.bottom)?;
                Arrow::Sq(Square { src, tgt, top, bottom })
            }
            Op::Il | Op::Ir | Op::IlInv | Op::IrInv => {
                let u = args[0].as_bim()?;
                let src = self.map(ctx, op, &[&Cell::Bim(u.src.clone())])?;
                let tgt = self.map(ctx, op, &[&Cell::Bim(u.tgt.clone())])?;
                let fused = match op {
                    Op::Il | Op::IlInv => self.iso_m(ctx, &self.iso_i(&u.left), u)?,
                    _ => self.iso_m(ctx, u, &self.iso_i(&u.right))?,
                };
                let (top, bottom) = match op {
                    Op::Il | Op::Ir => (fused, u.clone()),
                    _ => (u.clone(), fused),
                };
                Arrow::Sq(Square { src, tgt, top, bottom })
            }
        })
    }

    fn component(&self, ctx: &mut FusionCache, key: &str, args: &[Cell]) -> OResult<Arrow> {
        let need = |n: usize| -> OResult<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(OracleError::Undefined(format!("{key} takes {n} arguments, got {}", args.len())))
            }
        };
        match key {
            "D2-1" | "D2-2" => {
                need(1)?;
                let f = args[0].as_map()?;
                let src = if key == "D2-1" {
                    let id = self.apply_obj(ctx, Op::Iv, &[Cell::Bim(f.source.clone())])?;
                    self.map(ctx, Op::Mv, &[&id, &args[0]])?
                } else {
                    let id = self.apply_obj(ctx, Op::Iv, &[Cell::Bim(f.target.clone())])?;
                    self.map(ctx, Op::Mv, &[&args[0], &id])?
                };
                self.square(src, f.clone(), None, None)
            }
            "D2-3" => {
                need(3)?;
                let ab = self.apply_obj(ctx, Op::Mv, &[args[0].clone(), args[1].clone()])?;
                let src = self.map(ctx, Op::Mv, &[&ab, &args[2]])?;
                let bc = self.apply_obj(ctx, Op::Mv, &[args[1].clone(), args[2].clone()])?;
                let tgt = self.map(ctx, Op::Mv, &[&args[0], &bc])?;
                self.square(src, tgt, None, None)
            }
            "D2-4" | "D2-5" => {
                need(2)?;
                let src = if key == "D2-4" {
                    let id = self.apply_obj(ctx, Op::Iv, &[args[0].clone()])?;
                    self.map(ctx, Op::Wr, &[&id, &args[1]])?
                } else {
                    let id = self.apply_obj(ctx, Op::Iv, &[args[1].clone()])?;
                    self.map(ctx, Op::Wl, &[&args[0], &id])?
                };
                let mn = self.apply_obj(ctx, Op::M, &[args[0].clone(), args[1].clone()])?;
                let tgt = self.map(ctx, Op::Iv, &[&mn])?;
                self.square(src, tgt, None, None)
            }
            "D2-6" => {
                need(3)?;
                let v = self.apply_obj(ctx, Op::Mv, &[args[0].clone(), args[1].clone()])?;
                let src = self.map(ctx, Op::Wr, &[&v, &args[2]])?;
                let a = self.apply_obj(ctx, Op::Wr, &[args[0].clone(), args[2].clone()])?;
                let b = self.apply_obj(ctx, Op::Wr, &[args[1].clone(), args[2].clone()])?;
                let tgt = self.map(ctx, Op::Mv, &[&a, &b])?;
                self.square(src, tgt, None, None)
            }
            "D2-7" => {
                need(3)?;
                let v = self.apply_obj(ctx, Op::Mv, &[args[1].clone(), args[2].clone()])?;
                let src = self.map(ctx, Op::Wl, &[&args[0], &v])?;
                let a = self.apply_obj(ctx, Op::Wl, &[args[0].clone(), args[1].clone()])?;
                let b = self.apply_obj(ctx, Op::Wl, &[args[0].clone(), args[2].clone()])?;
                let tgt = self.map(ctx, Op::Mv, &[&a, &b])?;
                self.square(src, tgt, None, None)
            }
            "D2-8" => {
                need(2)?;
                let (f, g) = (args[0].as_map()?, args[1].as_map()?);
                let (sf, tf) = (Cell::Bim(f.source.clone()), Cell::Bim(f.target.clone()));
                let (sg, tg) = (Cell::Bim(g.source.clone()), Cell::Bim(g.target.clone()));
                let a = self.apply_obj(ctx, Op::Wr, &[args[0].clone(), sg])?;
                let b = self.apply_obj(ctx, Op::Wl, &[tf, args[1].clone()])?;
                let src = self.map(ctx, Op::Mv, &[&a, &b])?;
                let c = self.apply_obj(ctx, Op::Wl, &[sf, args[1].clone()])?;
                let d = self.apply_obj(ctx, Op::Wr, &[args[0].clone(), tg])?;
                let tgt = self.map(ctx, Op::Mv, &[&c, &d])?;
                self.square(src, tgt, None, None)
            }
            "D2-9" => {
                need(3)?;
                let (f, n, p) = (args[0].as_map()?, args[1].as_bim()?, args[2].as_bim()?);
                let w = self.apply_obj(ctx, Op::Wr, &[args[0].clone(), args[1].clone()])?;
                let src = self.map(ctx, Op::Wr, &[&w, &args[2]])?;
                let np = self.apply_obj(ctx, Op::M, &[args[1].clone(), args[2].clone()])?;
                let tgt = self.map(ctx, Op::Wr, &[&args[0], &np])?;
                let top = self.assoc(ctx, &f.source, n, p)?;
                let bottom = self.assoc(ctx, &f.target, n, p)?;
                self.square(src, tgt, Some(top), Some(bottom))
            }
            "D2-10" => {
                need(3)?;
                let (l, f, p) = (args[0].as_bim()?, args[1].as_map()?, args[2].as_bim()?);
                let w = self.apply_obj(ctx, Op::Wl, &[args[0].clone(), args[1].clone()])?;
                let src = self.map(ctx, Op::Wr, &[&w, &args[2]])?;
                let w2 = self.apply_obj(ctx, Op::Wr, &[args[1].clone(), args[2].clone()])?;
                let tgt = self.map(ctx, Op::Wl, &[&args[0], &w2])?;
                let top = self.assoc(ctx, l, &f.source, p)?;
                let bottom = self.assoc(ctx, l, &f.target, p)?;
                self.square(src, tgt, Some(top), Some(bottom))
            }
            "D2-11" => {
                need(3)?;
                let (l, k, f) = (args[0].as_bim()?, args[1].as_bim()?, args[2].as_map()?);
                let lk = self.apply_obj(ctx, Op::M, &[args[0].clone(), args[1].clone()])?;
                let src = self.map(ctx, Op::Wl, &[&lk, &args[2]])?;
                let w = self.apply_obj(ctx, Op::Wl, &[args[1].clone(), args[2].clone()])?;
                let tgt = self.map(ctx, Op::Wl, &[&args[0], &w])?;
                let top = self.assoc(ctx, l, k, &f.source)?;
                let bottom = self.assoc(ctx, l, k, &f.target)?;
                self.square(src, tgt, Some(top), Some(bottom))
            }
            "D2-12" => {
                need(3)?;
                Ok(Arrow::Bim(self.assoc(ctx, args[0].as_bim()?, args[1].as_bim()?, args[2].as_bim()?)?))
            }
            "D2-13" | "D2-14" => {
                need(1)?;
                let f = args[0].as_map()?;
                let (sf, tf) = (Cell::Bim(f.source.clone()), Cell::Bim(f.target.clone()));
                let src = if key == "D2-13" {
                    let ia = Cell::Bim(self.regular(&f.source.left_algebra));
                    let w = self.apply_obj(ctx, Op::Wl, &[ia, args[0].clone()])?;
                    let il = self.apply_obj(ctx, Op::Il, &[tf])?;
                    self.map(ctx, Op::Mv, &[&w, &il])?
                } else {
                    let ib = Cell::Bim(self.regular(&f.source.right_algebra));
                    let w = self.apply_obj(ctx, Op::Wr, &[args[0].clone(), ib])?;
                    let ir = self.apply_obj(ctx, Op::Ir, &[tf])?;
                    self.map(ctx, Op::Mv, &[&w, &ir])?
                };
                let unit = self.apply_obj(ctx, if key == "D2-13" { Op::Il } else { Op::Ir }, &[sf])?;
                let tgt = self.map(ctx, Op::Mv, &[&unit, &args[0]])?;
                self.square(src, tgt, None, None)
            }
            "D2-15" => {
                need(1)?;
                let ia = self.apply_obj(ctx, Op::I, &[args[0].clone()])?;
                let src = self.map(ctx, Op::Il, &[&ia])?;
                let tgt = self.map(ctx, Op::Ir, &[&ia])?;
                self.square(src, tgt, None, None)
            }
            "D2-16" => {
                need(2)?;
                let (m, n) = (args[0].as_bim()?, args[1].as_bim()?);
                let il = self.apply_obj(ctx, Op::Il, &[args[0].clone()])?;
                let src = self.map(ctx, Op::Wr, &[&il, &args[1]])?;
                let mn = self.apply_obj(ctx, Op::M, &[args[0].clone(), args[1].clone()])?;
                let tgt = self.map(ctx, Op::Il, &[&mn])?;
                let top = self.assoc(ctx, &self.regular(&m.left_algebra), m, n)?;
                self.square(src, tgt, Some(top), None)
            }
            "D2-17" => {
                need(2)?;
                let (m, n) = (args[0].as_bim()?, args[1].as_bim()?);
                let ir = self.apply_obj(ctx, Op::Ir, &[args[1].clone()])?;
                let src = self.map(ctx, Op::Wl, &[&args[0], &ir])?;
                let mn = self.apply_obj(ctx, Op::M, &[args[0].clone(), args[1].clone()])?;
                let tgt = self.map(ctx, Op::Ir, &[&mn])?;
                let a = self.assoc(ctx, m, n, &self.regular(&n.right_algebra))?;
                let top = a.inverse().ok_or_else(|| OracleError::NotInvertible("associator".into()))?;
                self.square(src, tgt, Some(top), None)
            }
            "D2-18" => {
                need(2)?;
                let (m, n) = (args[0].as_bim()?, args[1].as_bim()?);
                let ir = self.apply_obj(ctx, Op::Ir, &[args[0].clone()])?;
                let src = self.map(ctx, Op::Wr, &[&ir, &args[1]])?;
                let il = self.apply_obj(ctx, Op::Il, &[args[1].clone()])?;
                let tgt = self.map(ctx, Op::Wl, &[&args[0], &il])?;
                let top = self.assoc(ctx, m, &self.regular(&m.right_algebra), n)?;
                self.square(src, tgt, Some(top), None)
            }
            "WL-1" | "WL-2" | "WR-1" | "WR-2" => {
                need(1)?;
                let m = args[0].as_bim()?;
                let (unit, inv) = if key.starts_with("WL") { (Op::Il, Op::IlInv) } else { (Op::Ir, Op::IrInv) };
                let u = self.apply_obj(ctx, unit, &[args[0].clone()])?;
                let i = self.apply_obj(ctx, inv, &[args[0].clone()])?;
                if key.ends_with('1') {
                    let src = self.map(ctx, Op::Mv, &[&u, &i])?;
                    let fused = if unit == Op::Il { self.fuse(ctx, &self.regular(&m.left_algebra), m)? } else { self.fuse(ctx, m, &self.regular(&m.right_algebra))? };
                    let tgt = self.map(ctx, Op::Iv, &[&Cell::Bim(fused)])?;
                    self.square(src, tgt, None, None)
                } else {
                    let src = self.map(ctx, Op::Mv, &[&i, &u])?;
                    let tgt = self.map(ctx, Op::Iv, &[&args[0]])?;
                    self.square(src, tgt, None, None)
                }
            }
            _ => Err(OracleError::Undefined(format!("no component {key}"))),
        }
    }

    fn endo_probes(&self, level: u8, o: &Cell) -> Vec<Arrow> {
        match (level, o) {
            (0, Cell::Alg(a)) => self.alg_endos.get(&a.name).cloned().unwrap_or_default().into_iter().map(Arrow::Alg).collect(),
            (1, Cell::Bim(m)) => match self.bim_endos.get(&m.key) {
                Some(v) => v.iter().cloned().map(Arrow::Bim).collect(),
                None if m.dim() > 0 => vec![Arrow::Bim(BimIso::auto(m, CMatrix::identity(m.dim()).scale(probe_scalars()[0])))],
                None => Vec::new(),
            },
            (2, Cell::Map(f)) => {
                if f.source.dim() == 0 && f.target.dim() == 0 {
                    return Vec::new();
                }
                probe_scalars()
                    .iter()
                    .map(|&k| {
                        Arrow::Sq(Square {
                            src: f.clone(),
                            tgt: f.clone(),
                            top: BimIso::auto(&f.source, CMatrix::identity(f.source.dim()).scale(k)),
                            bottom: BimIso::auto(&f.target, CMatrix::identity(f.target.dim()).scale(k)),
                        })
                    })
                    .collect()
            }
            _ => Vec::new(),
        }
    }

    fn scale_mor(&self, _level: u8, m: &Arrow, k: C64) -> OResult<Arrow> {
        match m {
            Arrow::Alg(_) => Err(OracleError::NotRepresentable("algebra isomorphisms cannot be rescaled".into())),
            Arrow::Bim(u) => Ok(Arrow::Bim(u.scaled(k))),
            Arrow::Sq(s) => Ok(Arrow::Sq(Square { top: s.top.scaled(k), bottom: s.bottom.scaled(k), ..s.clone() })),
        }
    }

    fn fibration_support(&self) -> FibrationSupport {
        FibrationSupport::Transport(self.transport_trials())
    }
}

/// Every transformation and witness the oracle provides.
pub const COMPONENT_KEYS: [&str; 22] = [
    "D2-1", "D2-2", "D2-3", "D2-4", "D2-5", "D2-6", "D2-7", "D2-8", "D2-9", "D2-10", "D2-11", "D2-12", "D2-13", "D2-14", "D2-15", "D2-16", "D2-17", "D2-18", "WL-1", "WL-2",
    "WR-1", "WR-2",
];
