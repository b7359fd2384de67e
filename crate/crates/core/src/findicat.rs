//! Exhaustive oracle backed by finite level categories and explicit tables,
//! with the `dicat/v1` file format.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cells::Op;
use crate::engine::expr::{DslError, GenTable};
use crate::fincat::{FinCategory, FincatBundle, FunctorData, FunctorJson, CategoryJson, FINCAT_SCHEMA};
use crate::linalg::C64;
use crate::oracle::{FibrationSupport, InstanceOracle, LevelBundle, OResult, OracleError};

pub const DICAT_SCHEMA: &str = "dicat/v1";

/// Values of one structure functor on objects and on morphisms, keyed by argument tuples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OpTable {
    pub obj: HashMap<Vec<usize>, usize>,
    pub mor: HashMap<Vec<usize>, usize>,
}

/// Morphism scalars as exponents of a primitive `order`-th root of unity.
#[derive(Debug, Clone, PartialEq)]
pub struct Phases {
    pub order: u32,
    /// One exponent per morphism of each level.
    pub levels: [Vec<u32>; 3],
}

/// A dicategory object given by finite tables.
#[derive(Debug, Clone)]
pub struct FinDicat {
    pub name: String,
    pub bundle: LevelBundle,
    pub ops: HashMap<Op, OpTable>,
    pub comps: BTreeMap<String, HashMap<Vec<usize>, usize>>,
    pub phases: Option<Phases>,
    pub probe_cap: usize,
    pub meta: serde_json::Map<String, serde_json::Value>,
}

pub const DEFAULT_FIN_PROBE_CAP: usize = 1 << 20;

impl FinDicat {
    pub fn new(name: impl Into<String>, bundle: LevelBundle) -> Self {
        FinDicat {
            name: name.into(),
            bundle,
            ops: HashMap::new(),
            comps: BTreeMap::new(),
            phases: None,
            probe_cap: DEFAULT_FIN_PROBE_CAP,
            meta: serde_json::Map::new(),
        }
    }

    pub fn cat(&self, level: u8) -> &FinCategory {
        match level {
            0 => &self.bundle.c0,
            1 => &self.bundle.c1,
            _ => &self.bundle.c2,
        }
    }

    fn st(&self, level: u8) -> (&FunctorData, &FunctorData) {
        if level == 1 {
            (&self.bundle.s1, &self.bundle.t1)
        } else {
            (&self.bundle.s2, &self.bundle.t2)
        }
    }

    /// Every level terminal, every structure functor and transformation trivial.
    pub fn trivial() -> Self {
        let t = |n: &str| Arc::new(FinCategory::terminal(n));
        let (c0, c1, c2) = (t("C0"), t("C1"), t("C2"));
        let f = |n: &str, a: &Arc<FinCategory>, b: &Arc<FinCategory>| FunctorData {
            name: n.into(),
            source: a.clone(),
            target: b.clone(),
            obj_map: vec![0],
            mor_map: vec![0],
        };
        let bundle = LevelBundle {
            s1: f("s1", &c1, &c0),
            t1: f("t1", &c1, &c0),
            s2: f("s2", &c2, &c1),
            t2: f("t2", &c2, &c1),
            c0,
            c1,
            c2,
        };
        let mut d = FinDicat::new("trivial", bundle);
        for op in Op::ALL {
            let n = op.domain().n_prims();
            let mut tb = OpTable::default();
            tb.obj.insert(vec![0; n], 0);
            tb.mor.insert(vec![0; n], 0);
            d.ops.insert(op, tb);
        }
        let table = GenTable::reference();
        for k in table.transformation_keys().into_iter().chain(table.witness_keys()) {
            let n = table.decls[&k].domain.n_prims();
            d.comps.insert(k, HashMap::from([(vec![0; n], 0)]));
        }
        d
    }

    /// Exponent of `k` as an `order`-th root of unity, if it is one.
    fn root_exponent(&self, k: C64) -> OResult<u32> {
        let p = self.phases.as_ref().ok_or_else(|| OracleError::NotRepresentable("instance has no scalars".into()))?;
        let n = p.order as f64;
        let e = (k.arg() / TAU * n).round().rem_euclid(n);
        let z = C64::from_polar(1.0, TAU * e / n);
        if (z - k).norm() > 1e-9 {
            return Err(OracleError::NotRepresentable(format!("{k} is not a {}-th root of unity", p.order)));
        }
        Ok(e as u32)
    }

    fn phase_gap(&self, level: u8, a: usize, b: usize) -> Option<f64> {
        let p = self.phases.as_ref()?;
        let (x, y) = (p.levels[level as usize][a], p.levels[level as usize][b]);
        let n = p.order as f64;
        let gap = (C64::from_polar(1.0, TAU * x as f64 / n) - C64::from_polar(1.0, TAU * y as f64 / n)).norm();
        if gap > 0.0 {
            Some(gap)
        } else {
            None
        }
    }
}

impl InstanceOracle for FinDicat {
    type Obj = usize;
    type Mor = usize;
    type Ctx = ();

    fn name(&self) -> String {
        self.name.clone()
    }

    fn metadata(&self) -> serde_json::Value {
        let mut m = self.meta.clone();
        m.insert("name".into(), self.name.clone().into());
        m.insert("backend".into(), "finite".into());
        m.insert("cells".into(), (0..3).map(|l| self.cat(l).n_objects()).collect::<Vec<_>>().into());
        serde_json::Value::Object(m)
    }

    fn probe_objects(&self, level: u8) -> Vec<usize> {
        (0..self.cat(level).n_objects()).collect()
    }

    fn probe_cap(&self) -> usize {
        self.probe_cap
    }

    fn obj_label(&self, level: u8, o: &usize) -> String {
        self.cat(level).objects()[*o].clone()
    }

    fn obj_boundary(&self, level: u8, o: &usize) -> (usize, usize) {
        if level == 0 {
            return (*o, *o);
        }
        let (s, t) = self.st(level);
        (s.obj_map[*o], t.obj_map[*o])
    }

    fn mor_ends(&self, level: u8, m: &usize) -> (usize, usize) {
        let c = self.cat(level);
        (c.src(*m), c.dst(*m))
    }

    fn mor_boundary(&self, level: u8, m: &usize) -> (usize, usize) {
        if level == 0 {
            return (*m, *m);
        }
        let (s, t) = self.st(level);
        (s.mor_map[*m], t.mor_map[*m])
    }

    fn identity(&self, level: u8, o: &usize) -> usize {
        self.cat(level).identity(*o).expect("validated categories have identities")
    }

    fn compose(&self, level: u8, f: &usize, g: &usize) -> OResult<usize> {
        let c = self.cat(level);
        c.compose(*f, *g)
            .ok_or_else(|| OracleError::Undefined(format!("{} then {} is not defined in {}", c.mor_id(*f), c.mor_id(*g), c.name)))
    }

    fn inverse(&self, level: u8, f: &usize) -> OResult<usize> {
        let c = self.cat(level);
        c.inverse(*f).ok_or_else(|| OracleError::NotInvertible(c.mor_id(*f).to_string()))
    }

    fn mor_residual(&self, level: u8, a: &usize, b: &usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let c = self.cat(level);
        if c.src(*a) == c.src(*b) && c.dst(*a) == c.dst(*b) {
            if let Some(g) = self.phase_gap(level, *a, *b) {
                return g;
            }
        }
        1.0
    }

    fn mor_validity(&self, _level: u8, _m: &usize) -> f64 {
        0.0
    }

    fn has_op(&self, op: Op) -> bool {
        self.ops.contains_key(&op)
    }

    fn has_component(&self, key: &str) -> bool {
        self.comps.contains_key(key)
    }

    fn apply_obj(&self, _ctx: &mut (), op: Op, args: &[usize]) -> OResult<usize> {
        let tb = self.ops.get(&op).ok_or_else(|| OracleError::Undefined(format!("missing structure functor {}", op.name())))?;
        tb.obj.get(args).copied().ok_or_else(|| {
            let lv = op.domain().prim_levels();
            let l: Vec<String> = args.iter().zip(lv).map(|(a, l)| self.obj_label(l, a)).collect();
            OracleError::Undefined(format!("{} undefined at [{}]", op.name(), l.join(",")))
        })
    }

    fn apply_mor(&self, _ctx: &mut (), op: Op, args: &[usize]) -> OResult<usize> {
        let tb = self.ops.get(&op).ok_or_else(|| OracleError::Undefined(format!("missing structure functor {}", op.name())))?;
        tb.mor.get(args).copied().ok_or_else(|| {
            let lv = op.domain().prim_levels();
            let l: Vec<String> = args.iter().zip(lv).map(|(a, l)| self.cat(l).mor_id(*a).to_string()).collect();
            OracleError::Undefined(format!("{} undefined on morphisms [{}]", op.name(), l.join(",")))
        })
    }

    fn component(&self, _ctx: &mut (), key: &str, args: &[usize]) -> OResult<usize> {
        let tb = self.comps.get(key).ok_or_else(|| OracleError::Undefined(format!("missing transformation {key}")))?;
        tb.get(args).copied().ok_or_else(|| OracleError::Undefined(format!("{key} has no component at {args:?}")))
    }

    fn endo_probes(&self, level: u8, o: &usize) -> Vec<usize> {
        let c = self.cat(level);
        let id = c.identity(*o);
        let over_ids = |l: u8, m: usize| -> bool {
            let mut ms = vec![m];
            for lv in (1..=l).rev() {
                ms = ms.iter().flat_map(|x| { let (a, b) = self.mor_boundary(lv, x); [a, b] }).collect();
            }
            ms.iter().all(|&x| self.cat(0).src(x) == self.cat(0).dst(x) && self.cat(0).identity(self.cat(0).src(x)) == Some(x))
        };
        c.hom(*o, *o).into_iter().filter(|&m| Some(m) != id && (level == 0 || over_ids(level, m))).collect()
    }

    fn scale_mor(&self, level: u8, m: &usize, k: C64) -> OResult<usize> {
        // the unit acts trivially even on instances without scalars
        if (k - C64::new(1.0, 0.0)).norm() <= 1e-12 {
            return Ok(*m);
        }
        let e = self.root_exponent(k)?;
        if e == 0 {
            return Ok(*m);
        }
        let p = self.phases.as_ref().expect("checked by root_exponent");
        let ph = &p.levels[level as usize];
        let want = (ph[*m] + e) % p.order;
        let c = self.cat(level);
        let (a, b) = (c.src(*m), c.dst(*m));
        let (ms, mt) = self.mor_boundary(level, m);
        c.hom(a, b)
            .into_iter()
            .filter(|&x| ph[x] == want)
            .min_by_key(|&x| {
                let (xs, xt) = self.mor_boundary(level, &x);
                ((xs != ms) as u8 + (xt != mt) as u8, x)
            })
            .ok_or_else(|| OracleError::NotRepresentable(format!("no morphism {} scaled by {k}", c.mor_id(*m))))
    }

    fn fibration_support(&self) -> FibrationSupport {
        FibrationSupport::Exhaustive(Box::new(self.bundle.clone()))
    }
}

// ---------------------------------------------------------------- json

/// One structure functor: rows are `[args..., value]` by name.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct OpJson {
    pub objects: Vec<Vec<String>>,
    pub morphisms: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasesJson {
    pub order: u32,
    /// Per level name (`C0`, `C1`, `C2`): morphism id ↦ exponent; missing ids are 0.
    pub morphisms: BTreeMap<String, BTreeMap<String, u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeclJson {
    pub src: String,
    pub tgt: String,
}

/// Schema `dicat/v1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DicatFile {
    pub schema: String,
    pub name: String,
    /// A built-in instance to load instead of `levels`/tables (for example `cocycle`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    /// Categories `C0`, `C1`, `C2` and functors `s1`, `t1`, `s2`, `t2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<FincatBundle>,
    #[serde(default)]
    pub d1: BTreeMap<String, OpJson>,
    #[serde(default)]
    pub d2: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default)]
    pub witnesses: BTreeMap<String, Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhasesJson>,
    /// Replacement source/target functor expressions for transformations.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub declarations: BTreeMap<String, DeclJson>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DicatFileError {
    #[error("json: {0}")]
    Json(String),
    #[error("schema: {0}")]
    Schema(String),
    #[error("{0}")]
    Fincat(#[from] crate::fincat::FincatError),
    #[error("{0}")]
    Dsl(#[from] DslError),
}

impl DicatFile {
    pub fn parse(text: &str) -> Result<Self, DicatFileError> {
        let f: DicatFile = serde_json::from_str(text).map_err(|e| DicatFileError::Json(e.to_string()))?;
        if f.schema != DICAT_SCHEMA {
            return Err(DicatFileError::Schema(format!("expected schema {DICAT_SCHEMA}, got {}", f.schema)));
        }
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance files serialize")
    }

    /// The reference generator table with this file's declaration overrides.
    pub fn table(&self) -> Result<GenTable, DicatFileError> {
        let mut t = GenTable::reference().clone();
        for (k, d) in &self.declarations {
            t.redeclare(k, &d.src, &d.tgt)?;
        }
        Ok(t)
    }

    /// Builds the finite instance; missing tables are left out so that
    /// structural validation can name them.
    pub fn load(&self) -> Result<FinDicat, DicatFileError> {
        let levels = self.levels.as_ref().ok_or_else(|| DicatFileError::Schema("no levels bundle and no builtin instance".into()))?;
        let lb = levels.load()?;
        let cat = |n: &str| lb.categories.get(n).cloned().ok_or_else(|| DicatFileError::Schema(format!("levels bundle lacks category {n}")));
        let fun = |n: &str| lb.functors.get(n).cloned().ok_or_else(|| DicatFileError::Schema(format!("levels bundle lacks functor {n}")));
        let bundle = LevelBundle { c0: cat("C0")?, c1: cat("C1")?, c2: cat("C2")?, s1: fun("s1")?, t1: fun("t1")?, s2: fun("s2")?, t2: fun("t2")? };
        for (f, (a, b)) in [
            (&bundle.s1, ("C1", "C0")),
            (&bundle.t1, ("C1", "C0")),
            (&bundle.s2, ("C2", "C1")),
            (&bundle.t2, ("C2", "C1")),
        ] {
            if f.source.name != a || f.target.name != b {
                return Err(DicatFileError::Schema(format!("functor {} must go from {a} to {b}", f.name)));
            }
        }
        let mut d = FinDicat::new(self.name.clone(), bundle);
        let obj_ix = |d: &FinDicat, l: u8, s: &str| {
            d.cat(l).obj_index(s).ok_or_else(|| DicatFileError::Schema(format!("unknown {} object {s}", d.cat(l).name)))
        };
        let mor_ix = |d: &FinDicat, l: u8, s: &str| {
            d.cat(l).mor_index(s).ok_or_else(|| DicatFileError::Schema(format!("unknown {} morphism {s}", d.cat(l).name)))
        };
        for (key, tb) in &self.d1 {
            let op = Op::from_key(key).ok_or_else(|| DicatFileError::Schema(format!("unknown structure functor {key}")))?;
            let lv = op.domain().prim_levels();
            let out = op.level();
            let mut t = OpTable::default();
            for (rows, mors) in [(&tb.objects, false), (&tb.morphisms, true)] {
                for row in rows {
                    if row.len() != lv.len() + 1 {
                        return Err(DicatFileError::Schema(format!("{key}: row {row:?} needs {} entries", lv.len() + 1)));
                    }
                    let ix = |l: u8, s: &str| if mors { mor_ix(&d, l, s) } else { obj_ix(&d, l, s) };
                    let args = row[..lv.len()].iter().zip(&lv).map(|(s, &l)| ix(l, s)).collect::<Result<Vec<_>, _>>()?;
                    let v = ix(out, &row[lv.len()])?;
                    if mors { t.mor.insert(args, v) } else { t.obj.insert(args, v) };
                }
            }
            d.ops.insert(op, t);
        }
        let table = self.table()?;
        for (key, rows) in self.d2.iter().chain(&self.witnesses) {
            let decl = table.decls.get(key).ok_or_else(|| DicatFileError::Schema(format!("unknown transformation {key}")))?;
            let lv = decl.domain.prim_levels();
            let out = decl.cod.as_level().unwrap_or(2);
            let mut t = HashMap::new();
            for row in rows {
                if row.len() != lv.len() + 1 {
                    return Err(DicatFileError::Schema(format!("{key}: row {row:?} needs {} entries", lv.len() + 1)));
                }
                let args = row[..lv.len()].iter().zip(&lv).map(|(s, &l)| obj_ix(&d, l, s)).collect::<Result<Vec<_>, _>>()?;
                t.insert(args, mor_ix(&d, out, &row[lv.len()])?);
            }
            d.comps.insert(key.clone(), t);
        }
        if let Some(p) = &self.phases {
            if p.order == 0 {
                return Err(DicatFileError::Schema("phase order must be positive".into()));
            }
            let mut levels: [Vec<u32>; 3] = Default::default();
            for l in 0..3u8 {
                let c = d.cat(l);
                let mut v = vec![0; c.n_morphisms()];
                if let Some(m) = p.morphisms.get(&c.name) {
                    for (id, e) in m {
                        v[mor_ix(&d, l, id)?] = e % p.order;
                    }
                }
                levels[l as usize] = v;
            }
            d.phases = Some(Phases { order: p.order, levels });
        }
        Ok(d)
    }

    /// Serializes a finite instance; table rows are sorted for stable output.
    pub fn from_instance(d: &FinDicat) -> Self {
        let b = &d.bundle;
        let levels = FincatBundle {
            schema: FINCAT_SCHEMA.into(),
            categories: [&b.c0, &b.c1, &b.c2].iter().map(|c| CategoryJson::from_category(c)).collect(),
            functors: [&b.s1, &b.t1, &b.s2, &b.t2]
                .iter()
                .zip(["s1", "t1", "s2", "t2"])
                .map(|(f, n)| FunctorJson { name: n.into(), ..FunctorJson::from_functor(f) })
                .collect(),
            transformations: Vec::new(),
        };
        let name_rows = |m: &HashMap<Vec<usize>, usize>, lv: &[u8], out: u8, mors: bool| {
            let nm = |l: u8, i: usize| if mors { d.cat(l).mor_id(i).to_string() } else { d.cat(l).objects()[i].clone() };
            let mut rows: Vec<(Vec<usize>, Vec<String>)> = m
                .iter()
                .map(|(a, v)| {
                    let mut r: Vec<String> = a.iter().zip(lv).map(|(&i, &l)| nm(l, i)).collect();
                    r.push(nm(out, *v));
                    (a.clone(), r)
                })
                .collect();
            rows.sort();
            rows.into_iter().map(|x| x.1).collect::<Vec<_>>()
        };
        let mut d1 = BTreeMap::new();
        for op in Op::ALL {
            if let Some(t) = d.ops.get(&op) {
                let lv = op.domain().prim_levels();
                d1.insert(
                    op.key().to_string(),
                    OpJson { objects: name_rows(&t.obj, &lv, op.level(), false), morphisms: name_rows(&t.mor, &lv, op.level(), true) },
                );
            }
        }
        let table = GenTable::reference();
        let (mut d2, mut witnesses) = (BTreeMap::new(), BTreeMap::new());
        for (k, m) in &d.comps {
            let Some(decl) = table.decls.get(k) else { continue };
            let lv = decl.domain.prim_levels();
            let out = d.cat(decl.cod.as_level().unwrap_or(2));
            let mut rows: Vec<(Vec<usize>, Vec<String>)> = m
                .iter()
                .map(|(a, v)| {
                    let mut r: Vec<String> = a.iter().zip(&lv).map(|(&i, &l)| d.cat(l).objects()[i].clone()).collect();
                    r.push(out.mor_id(*v).to_string());
                    (a.clone(), r)
                })
                .collect();
            rows.sort();
            let rows: Vec<Vec<String>> = rows.into_iter().map(|x| x.1).collect();
            if k.starts_with("D2-") { &mut d2 } else { &mut witnesses }.insert(k.clone(), rows);
        }
        let phases = d.phases.as_ref().map(|p| PhasesJson {
            order: p.order,
            morphisms: (0..3u8)
                .map(|l| {
                    let c = d.cat(l);
                    let m = p.levels[l as usize]
                        .iter()
                        .enumerate()
                        .filter(|(_, &e)| e != 0)
                        .map(|(i, &e)| (c.mor_id(i).to_string(), e))
                        .collect();
                    (c.name.clone(), m)
                })
                .collect(),
        });
        DicatFile {
            schema: DICAT_SCHEMA.into(),
            name: d.name.clone(),
            builtin: None,
            levels: Some(levels),
            d1,
            d2,
            witnesses,
            phases,
            declarations: BTreeMap::new(),
        }
    }
}

/// A bundle whose 1-cells are only identities over a contractible groupoid of
/// two 0-cells: `s × t` misses the cross isomorphisms, so it is not an isofibration.
pub fn discrete_over_contractible() -> FinDicat {
    let c0 = Arc::new(FinCategory::contractible("C0", &["x", "y"]));
    let c1 = Arc::new(FinCategory::discrete("C1", &["1x", "1y"]));
    let c2 = Arc::new(FinCategory::discrete("C2", &["e1x", "e1y"]));
    let f = |n: &str, a: &Arc<FinCategory>, b: &Arc<FinCategory>, obj: Vec<usize>, mor: Vec<usize>| FunctorData {
        name: n.into(),
        source: a.clone(),
        target: b.clone(),
        obj_map: obj,
        mor_map: mor,
    };
    let xx = c0.mor_index("x>x").unwrap();
    let yy = c0.mor_index("y>y").unwrap();
    let bundle = LevelBundle {
        s1: f("s1", &c1, &c0, vec![0, 1], vec![xx, yy]),
        t1: f("t1", &c1, &c0, vec![0, 1], vec![xx, yy]),
        s2: f("s2", &c2, &c1, vec![0, 1], vec![0, 1]),
        t2: f("t2", &c2, &c1, vec![0, 1], vec![0, 1]),
        c0,
        c1,
        c2,
    };
    FinDicat::new("discrete-over-contractible", bundle)
}
