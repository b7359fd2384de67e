//! An exact instance built from a finite group and a normalized 3-cochain with
//! values in roots of unity.
//!
//! There is one 0-cell. The 1-cells are the group elements, each with its
//! automorphisms `ζ^a` (`ζ` a primitive `order`-th root of unity); horizontal
//! composition is the group product and the horizontal associator at
//! `(g, h, k)` is `ω(g, h, k)`. The 2-cells are the identity cells of the
//! 1-cells. Every other transformation is an identity, lifted over the
//! associator where its declared boundary demands it. Since ω is stored as
//! exponents, every comparison is exact.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use dicat_core::cells::{Op, Shape};
use dicat_core::dicat::DicatData;
use dicat_core::engine::eval::Evaluator;
use dicat_core::engine::expr::GenTable;
use dicat_core::engine::probes::shape_probes;
use dicat_core::fincat::{FinCategory, FunctorData};
use dicat_core::findicat::{FinDicat, OpTable, Phases};
use dicat_core::oracle::LevelBundle;

pub const COCYCLE_SCHEMA: &str = "cocycle/v1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CocycleError {
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid cochain: {0}")]
    InvalidCochain(String),
    #[error("unknown preset {0}")]
    UnknownPreset(String),
    #[error("json: {0}")]
    Json(String),
    #[error("construction: {0}")]
    Build(String),
}

/// A finite group by its multiplication table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Group {
    pub elements: Vec<String>,
    /// `table[g][h]` is the index of `gh`.
    pub table: Vec<Vec<usize>>,
}

impl Group {
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn mul(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    /// Checks closure, associativity, a two-sided unit and inverses exhaustively;
    /// returns the unit.
    pub fn validate(&self) -> Result<usize, CocycleError> {
        let n = self.order();
        let bad = |m: String| Err(CocycleError::InvalidGroup(m));
        if n == 0 {
            return bad("empty group".into());
        }
        if self.table.len() != n || self.table.iter().any(|r| r.len() != n) {
            return bad(format!("table must be {n}x{n}"));
        }
        if self.table.iter().flatten().any(|&x| x >= n) {
            return bad("table entry out of range".into());
        }
        if self.elements.iter().collect::<BTreeSet<_>>().len() != n {
            return bad("duplicate element names".into());
        }
        for g in 0..n {
            for h in 0..n {
                for k in 0..n {
                    if self.mul(self.mul(g, h), k) != self.mul(g, self.mul(h, k)) {
                        let e = &self.elements;
                        return bad(format!("not associative at ({},{},{})", e[g], e[h], e[k]));
                    }
                }
            }
        }
        let Some(e) = (0..n).find(|&e| (0..n).all(|g| self.mul(e, g) == g && self.mul(g, e) == g)) else {
            return bad("no unit".into());
        };
        for g in 0..n {
            if !(0..n).any(|h| self.mul(g, h) == e && self.mul(h, g) == e) {
                return bad(format!("{} has no inverse", self.elements[g]));
            }
        }
        Ok(e)
    }

    /// The cyclic group `ℤ/m` with elements `0..m-1`.
    pub fn cyclic(m: usize) -> Group {
        Group { elements: (0..m).map(|i| i.to_string()).collect(), table: (0..m).map(|a| (0..m).map(|b| (a + b) % m).collect()).collect() }
    }

    /// `ℤ/2 × ℤ/2`, elements written `ab`.
    pub fn klein() -> Group {
        let els: Vec<(usize, usize)> = vec![(0, 0), (0, 1), (1, 0), (1, 1)];
        let ix = |p: (usize, usize)| els.iter().position(|&q| q == p).unwrap();
        Group {
            elements: els.iter().map(|(a, b)| format!("{a}{b}")).collect(),
            table: els.iter().map(|&(a, b)| els.iter().map(|&(c, d)| ix(((a + c) % 2, (b + d) % 2))).collect()).collect(),
        }
    }

    /// The symmetric group on three letters, as permutations in one-line notation.
    pub fn s3() -> Group {
        let perms: Vec<[usize; 3]> = vec![[0, 1, 2], [1, 0, 2], [0, 2, 1], [2, 1, 0], [1, 2, 0], [2, 0, 1]];
        let ix = |p: [usize; 3]| perms.iter().position(|&q| q == p).unwrap();
        // g·h is "first h, then g" on letters.
        let mul = |g: [usize; 3], h: [usize; 3]| [g[h[0]], g[h[1]], g[h[2]]];
        Group {
            elements: perms.iter().map(|p| format!("{}{}{}", p[0] + 1, p[1] + 1, p[2] + 1)).collect(),
            table: perms.iter().map(|&g| perms.iter().map(|&h| ix(mul(g, h))).collect()).collect(),
        }
    }

    /// Index of the element named `s`.
    pub fn index(&self, s: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == s)
    }
}

/// `(g, h, k)` with an exponent shift applied to ω there.
pub type Tamper = ([usize; 3], u32);

/// A group with a root-of-unity valued 3-cochain, exponents mod `order`.
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleInstance {
    pub name: String,
    pub group: Group,
    pub order: u32,
    /// `omega[(g·n + h)·n + k]`, exponents mod `order`.
    pub omega: Vec<u32>,
    pub tampered: Vec<Tamper>,
}

impl CocycleInstance {
    pub fn new(name: impl Into<String>, group: Group, order: u32, omega: impl Fn(usize, usize, usize) -> u32) -> Self {
        let n = group.order();
        let mut w = Vec::with_capacity(n * n * n);
        for g in 0..n {
            for h in 0..n {
                for k in 0..n {
                    w.push(omega(g, h, k) % order);
                }
            }
        }
        CocycleInstance { name: name.into(), group, order, omega: w, tampered: Vec::new() }
    }

    pub fn trivial(name: impl Into<String>, group: Group, order: u32) -> Self {
        Self::new(name, group, order, |_, _, _| 0)
    }

    fn ix(&self, g: usize, h: usize, k: usize) -> usize {
        let n = self.group.order();
        (g * n + h) * n + k
    }

    /// Exponent of ω(g, h, k), tampering included.
    pub fn omega(&self, g: usize, h: usize, k: usize) -> u32 {
        self.omega[self.ix(g, h, k)]
    }

    /// Shifts the exponent of ω at `(g, h, k)`; the change is recorded.
    /// Entries involving the unit cannot be tampered (ω must stay normalized).
    pub fn tamper(&mut self, at: [usize; 3], shift: u32) -> Result<(), CocycleError> {
        let n = self.group.order();
        if at.iter().any(|&x| x >= n) {
            return Err(CocycleError::InvalidCochain(format!("tamper position {at:?} out of range")));
        }
        let e = self.group.validate()?;
        if at.contains(&e) {
            return Err(CocycleError::InvalidCochain(format!("tamper position {} involves the unit", self.label(&at))));
        }
        let i = self.ix(at[0], at[1], at[2]);
        self.omega[i] = (self.omega[i] + shift) % self.order;
        self.tampered.push((at, shift % self.order));
        Ok(())
    }

    /// Group axioms, ω in range and normalized; returns the unit.
    pub fn validate(&self) -> Result<usize, CocycleError> {
        let e = self.group.validate()?;
        let n = self.group.order();
        if self.order == 0 {
            return Err(CocycleError::InvalidCochain("root order must be positive".into()));
        }
        if self.omega.len() != n * n * n {
            return Err(CocycleError::InvalidCochain(format!("ω needs {} entries, got {}", n * n * n, self.omega.len())));
        }
        if self.omega.iter().any(|&x| x >= self.order) {
            return Err(CocycleError::InvalidCochain("exponent out of range".into()));
        }
        for a in 0..n {
            for b in 0..n {
                for (g, h, k) in [(e, a, b), (a, e, b), (a, b, e)] {
                    if self.omega(g, h, k) != 0 {
                        let el = &self.group.elements;
                        return Err(CocycleError::InvalidCochain(format!("ω is not normalized at ({},{},{})", el[g], el[h], el[k])));
                    }
                }
            }
        }
        Ok(e)
    }

    pub fn label(&self, q: &[usize]) -> String {
        let parts: Vec<&str> = q.iter().map(|&i| self.group.elements[i].as_str()).collect();
        format!("[{}]", parts.join(","))
    }
}

/// Quadruples `(g, h, k, l)` where
/// `ω(h,k,l)·ω(g,hk,l)·ω(g,h,k) ≠ ω(gh,k,l)·ω(g,h,kl)`, in lexicographic order.
pub fn cocycle_condition(c: &CocycleInstance) -> Vec<[usize; 4]> {
    let n = c.group.order();
    let m = |a, b| c.group.mul(a, b);
    let mut out = Vec::new();
    for g in 0..n {
        for h in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let lhs = c.omega(h, k, l) + c.omega(g, m(h, k), l) + c.omega(g, h, k);
                    let rhs = c.omega(m(g, h), k, l) + c.omega(g, h, m(k, l));
                    if lhs % c.order != rhs % c.order {
                        out.push([g, h, k, l]);
                    }
                }
            }
        }
    }
    out
}

/// Carry cocycle on `ℤ/m` with values in `m`-th roots: `ω(a,b,c) = ζ^{p·a·⌊(b+c)/m⌋}`.
pub fn carry_cocycle(m: usize, p: u32) -> impl Fn(usize, usize, usize) -> u32 {
    move |a, b, c| (p as usize * a * ((b + c) / m)) as u32
}

/// Root order used by the presets: `m` for `ℤ/m` with `m ≥ 3`, otherwise 4.
///
/// Every normalized cochain on `ℤ/2` with values in `±1` is a cocycle, so the
/// groups of exponent 2 get fourth roots of unity: a tamper by `i` is then a
/// genuine defect.
pub fn preset_order(group: &str) -> Option<u32> {
    match group {
        "z3" | "z4" | "z5" | "z6" => group[1..].parse().ok(),
        "z2" | "z2xz2" | "s3" => Some(4),
        _ => None,
    }
}

/// Built-in presets: `z2`..`z6`, `z2xz2`, `s3`, each with ω `trivial` or `nontrivial`.
pub fn preset(group: &str, omega: &str) -> Result<CocycleInstance, CocycleError> {
    let nontrivial = match omega {
        "trivial" => false,
        "nontrivial" => true,
        o => return Err(CocycleError::UnknownPreset(format!("omega {o}"))),
    };
    let order = preset_order(group).ok_or_else(|| CocycleError::UnknownPreset(group.into()))?;
    let name = format!("cocycle {group} {omega}");
    let p = nontrivial as u32;
    let c = match group {
        "z2" | "z3" | "z4" | "z5" | "z6" => {
            let m: usize = group[1..].parse().unwrap();
            let f = carry_cocycle(m, p);
            let lift = order / m as u32;
            CocycleInstance::new(name, Group::cyclic(m), order, move |a, b, c| f(a, b, c) * lift)
        }
        "z2xz2" => {
            let bits = |i: usize| (i >> 1, i & 1);
            let z2 = carry_cocycle(2, p);
            CocycleInstance::new(name, Group::klein(), order, move |a, b, c| {
                let (a1, a2) = bits(a);
                let (b1, b2) = bits(b);
                let (c1, c2) = bits(c);
                (z2(a1, b1, c1) + z2(a2, b2, c2)) * 2
            })
        }
        _ => {
            // pulled back from ℤ/2 along the sign
            let sign = [0usize, 1, 1, 1, 0, 0];
            let z2 = carry_cocycle(2, p);
            CocycleInstance::new(name, Group::s3(), order, move |a, b, c| z2(sign[a], sign[b], sign[c]) * 2)
        }
    };
    Ok(c)
}

/// Names of the built-in group presets.
pub const GROUP_PRESETS: [&str; 7] = ["z2", "z3", "z4", "z5", "z6", "z2xz2", "s3"];

// ---------------------------------------------------------------- json

/// Schema `cocycle/v1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocycleFile {
    pub schema: String,
    pub name: String,
    pub elements: Vec<String>,
    pub table: Vec<Vec<usize>>,
    /// Root order `n`; ω takes values in the `n`-th roots of unity.
    pub order: u32,
    /// Exponents of ω in lexicographic order of `(g, h, k)`.
    pub omega: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tampered: Vec<([usize; 3], u32)>,
}

impl CocycleFile {
    pub fn parse(text: &str) -> Result<CocycleInstance, CocycleError> {
        let f: CocycleFile = serde_json::from_str(text).map_err(|e| CocycleError::Json(e.to_string()))?;
        if f.schema != COCYCLE_SCHEMA {
            return Err(CocycleError::Json(format!("expected schema {COCYCLE_SCHEMA}, got {}", f.schema)));
        }
        let c = CocycleInstance {
            name: f.name,
            group: Group { elements: f.elements, table: f.table },
            order: f.order,
            omega: f.omega,
            tampered: f.tampered,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn from_instance(c: &CocycleInstance) -> Self {
        CocycleFile {
            schema: COCYCLE_SCHEMA.into(),
            name: c.name.clone(),
            elements: c.group.elements.clone(),
            table: c.group.table.clone(),
            order: c.order,
            omega: c.omega.clone(),
            tampered: c.tampered.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cochains serialize")
    }
}

// ---------------------------------------------------------------- instance

/// Index of the 1-cell morphism `ζ^a` on `g`.
fn mor1(q: usize, g: usize, a: usize) -> usize {
    g * q + a % q
}

/// Index of the 2-cell `ζ^c : g ⇒ g`.
fn obj2(q: usize, g: usize, c: usize) -> usize {
    g * q + c % q
}

/// Index of the morphism of 2-cells out of `ζ^c` on `g` lying over `(ζ^a, ζ^b)`;
/// its target is `ζ^{c+b-a}`.
fn mor2(q: usize, g: usize, c: usize, a: usize, b: usize) -> usize {
    ((g * q + c % q) * q + a % q) * q + b % q
}

fn level1(c: &CocycleInstance) -> FinCategory {
    let (n, q) = (c.group.order(), c.order as usize);
    let objs = c.group.elements.clone();
    let mut mors = Vec::new();
    let mut comp = Vec::new();
    for g in 0..n {
        for a in 0..q {
            mors.push((format!("{}^{a}", objs[g]), g, g));
            for b in 0..q {
                comp.push((mor1(q, g, a), mor1(q, g, b), mor1(q, g, a + b)));
            }
        }
    }
    let ident = (0..n).map(|g| Some(mor1(q, g, 0))).collect();
    FinCategory::from_indexed("C1".into(), objs, mors, comp, ident)
}

fn level2(c: &CocycleInstance) -> FinCategory {
    let (n, q) = (c.group.order(), c.order as usize);
    let objs: Vec<String> = (0..n).flat_map(|g| (0..q).map(move |k| (g, k))).map(|(g, k)| format!("{}|{k}", c.group.elements[g])).collect();
    let mut mors = Vec::new();
    let mut comp = Vec::new();
    for g in 0..n {
        for k in 0..q {
            for a in 0..q {
                for b in 0..q {
                    let tgt = (k + q + b - a) % q;
                    mors.push((format!("{}|{k}:{a}:{b}", c.group.elements[g]), obj2(q, g, k), obj2(q, g, tgt)));
                    for a2 in 0..q {
                        for b2 in 0..q {
                            comp.push((mor2(q, g, k, a, b), mor2(q, g, tgt, a2, b2), mor2(q, g, k, a + a2, b + b2)));
                        }
                    }
                }
            }
        }
    }
    let ident = (0..n * q).map(|x| Some(mor2(q, x / q, x % q, 0, 0))).collect();
    FinCategory::from_indexed("C2".into(), objs, mors, comp, ident)
}

/// Decodes a level-2 morphism index into `(g, c, a, b)`.
fn split2(q: usize, m: usize) -> (usize, usize, usize, usize) {
    (m / (q * q * q), (m / (q * q)) % q, (m / q) % q, m % q)
}

fn build_err(e: impl std::fmt::Display) -> CocycleError {
    CocycleError::Build(e.to_string())
}

/// The finite oracle of `c`, with every table filled in.
pub fn build_oracle(c: &CocycleInstance) -> Result<FinDicat, CocycleError> {
    let e = c.validate()?;
    let (n, q) = (c.group.order(), c.order as usize);
    let mul = |g: usize, h: usize| c.group.mul(g, h);
    let c0 = Arc::new(FinCategory::terminal("C0"));
    let c1 = Arc::new(level1(c));
    let c2 = Arc::new(level2(c));
    let to_point = |name: &str| FunctorData {
        name: name.into(),
        source: c1.clone(),
        target: c0.clone(),
        obj_map: vec![0; c1.n_objects()],
        mor_map: vec![0; c1.n_morphisms()],
    };
    let down = |name: &str, target_side: bool| FunctorData {
        name: name.into(),
        source: c2.clone(),
        target: c1.clone(),
        obj_map: (0..n * q).map(|x| x / q).collect(),
        mor_map: (0..c2.n_morphisms())
            .map(|m| {
                let (g, _, a, b) = split2(q, m);
                mor1(q, g, if target_side { b } else { a })
            })
            .collect(),
    };
    let bundle = LevelBundle { s1: to_point("s1"), t1: to_point("t1"), s2: down("s2", false), t2: down("t2", true), c0, c1: c1.clone(), c2: c2.clone() };
    let mut d = FinDicat::new(c.name.clone(), bundle);
    let ph1: Vec<u32> = (0..c1.n_morphisms()).map(|m| (m % q) as u32).collect();
    let ph2: Vec<u32> = (0..c2.n_morphisms()).map(|m| split2(q, m).2 as u32).collect();
    d.phases = Some(Phases { order: c.order, levels: [vec![0], ph1, ph2] });
    d.meta.insert("backend".into(), "cocycle".into());
    d.meta.insert("group".into(), c.group.elements.clone().into());
    d.meta.insert("order".into(), c.order.into());
    if !c.tampered.is_empty() {
        d.meta.insert("tampered".into(), serde_json::to_value(&c.tampered).expect("tamper list serializes"));
    }

    // Structure functors: 1-cells multiply, scalars add.
    let m1: Vec<(usize, usize)> = (0..n).flat_map(|g| (0..q).map(move |a| (g, a))).collect();
    let m2: Vec<(usize, usize, usize, usize)> = (0..c2.n_morphisms()).map(|m| split2(q, m)).collect();
    for op in Op::ALL {
        let mut t = OpTable::default();
        match op {
            Op::I => {
                t.obj.insert(vec![0], e);
                t.mor.insert(vec![0], mor1(q, e, 0));
            }
            Op::M => {
                for &(g, a) in &m1 {
                    for &(h, b) in &m1 {
                        if a == 0 && b == 0 {
                            t.obj.insert(vec![g, h], mul(g, h));
                        }
                        t.mor.insert(vec![mor1(q, g, a), mor1(q, h, b)], mor1(q, mul(g, h), a + b));
                    }
                }
            }
            Op::Wr | Op::Wl => {
                for &(g, k, a, b) in &m2 {
                    for &(h, x) in &m1 {
                        let (gh, f1) = if op == Op::Wr { (mul(g, h), (obj2(q, g, k), h)) } else { (mul(h, g), (h, obj2(q, g, k))) };
                        if a == 0 && b == 0 && x == 0 {
                            let key = if op == Op::Wr { vec![f1.0, f1.1] } else { vec![f1.0, f1.1] };
                            t.obj.insert(key, obj2(q, gh, k));
                        }
                        let key = if op == Op::Wr {
                            vec![mor2(q, g, k, a, b), mor1(q, h, x)]
                        } else {
                            vec![mor1(q, h, x), mor2(q, g, k, a, b)]
                        };
                        t.mor.insert(key, mor2(q, gh, k, a + x, b + x));
                    }
                }
            }
            Op::Mv => {
                for g in 0..n {
                    for k in 0..q {
                        for k2 in 0..q {
                            t.obj.insert(vec![obj2(q, g, k), obj2(q, g, k2)], obj2(q, g, k + k2));
                        }
                    }
                }
                for &(g, k, a, b) in &m2 {
                    for k2 in 0..q {
                        for b2 in 0..q {
                            t.mor.insert(vec![mor2(q, g, k, a, b), mor2(q, g, k2, b, b2)], mor2(q, g, k + k2, a, b2));
                        }
                    }
                }
            }
            Op::Iv | Op::Il | Op::Ir | Op::IlInv | Op::IrInv => {
                for g in 0..n {
                    t.obj.insert(vec![g], obj2(q, g, 0));
                }
                for &(g, a) in &m1 {
                    t.mor.insert(vec![mor1(q, g, a)], mor2(q, g, 0, a, a));
                }
            }
        }
        d.ops.insert(op, t);
    }

    // The associator first, then every other transformation as the unique
    // morphism over its declared boundary.
    let table = GenTable::reference();
    let mut assoc = HashMap::new();
    for g in 0..n {
        for h in 0..n {
            for k in 0..n {
                assoc.insert(vec![g, h, k], mor1(q, mul(mul(g, h), k), c.omega(g, h, k) as usize));
            }
        }
    }
    d.comps.insert("D2-12".into(), assoc);
    let mut keys = table.transformation_keys();
    keys.extend(table.witness_keys());
    let mut lifted = Vec::new();
    {
        let ev = Evaluator::new(&d, table, 0.0);
        for key in keys.iter().filter(|k| *k != "D2-12") {
            let decl = &table.decls[key];
            let cod = decl.cod.as_level().unwrap_or(2);
            let mut comps = HashMap::new();
            for p in shape_probes(&d, &decl.domain, usize::MAX, 0) {
                let env = ev.obj_env(&decl.domain, &p).map_err(build_err)?;
                let src = ev.term_obj(&mut (), &decl.src[0], &env).map_err(build_err)?;
                let tgt = ev.term_obj(&mut (), &decl.tgt[0], &env).map_err(build_err)?;
                let m = if cod == 1 {
                    if src != tgt {
                        return Err(build_err(format!("{key}: source and target differ at {p:?}")));
                    }
                    mor1(q, src, 0)
                } else {
                    let sb = ev.eval(&mut (), &decl.sbound, &decl.domain, &env).map_err(build_err)?[0].1;
                    let tb = ev.eval(&mut (), &decl.tbound, &decl.domain, &env).map_err(build_err)?[0].1;
                    c2.hom(src, tgt)
                        .into_iter()
                        .find(|&m| d.bundle.s2.mor_map[m] == sb && d.bundle.t2.mor_map[m] == tb)
                        .ok_or_else(|| build_err(format!("{key}: no morphism over the declared boundary at {p:?}")))?
                };
                comps.insert(p, m);
            }
            lifted.push((key.clone(), comps));
        }
    }
    d.comps.extend(lifted);
    Ok(d)
}

/// The instance with the reference signatures.
pub fn build_cocycle_instance(c: &CocycleInstance) -> Result<DicatData<FinDicat>, CocycleError> {
    Ok(DicatData::new(build_oracle(c)?))
}

/// Probe label of a quadruple as the axiom engine prints it.
pub fn quad_labels(c: &CocycleInstance, quads: &[[usize; 4]]) -> Vec<String> {
    quads.iter().map(|q| c.label(q)).collect()
}

/// The shape of the pentagon's domain: four composable 1-cells.
pub fn pentagon_shape() -> Shape {
    Shape::new(vec![0, 0, 0, 0])
}
