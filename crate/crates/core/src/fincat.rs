//! Finite categories presented by total composition tables, with functors,
//! natural transformations, fiber products and isofibration checks.
//!
//! Composition is written diagrammatically: `compose(f, g)` is "f then g".

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FincatError {
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("unknown morphism `{0}`")]
    UnknownMorphism(String),
    #[error("duplicate id `{0}`")]
    Duplicate(String),
    #[error("missing identity for object `{0}`")]
    MissingIdentity(String),
    #[error("missing map entry for `{0}`")]
    MissingMap(String),
    #[error("endpoint mismatch: {0}")]
    Endpoint(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, FincatError>;

/// List of violations; empty means the check passed.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Violations(pub Vec<String>);

impl Violations {
    pub fn passed(&self) -> bool {
        self.0.is_empty()
    }
    fn push(&mut self, s: String) {
        self.0.push(s);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Morphism {
    pub id: String,
    pub src: String,
    pub dst: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FinCategory {
    pub name: String,
    objects: Vec<String>,
    obj_ix: HashMap<String, usize>,
    mors: Vec<(String, usize, usize)>,
    mor_ix: HashMap<String, usize>,
    /// (f, g) ↦ f then g, in insertion order
    comp_list: Vec<(usize, usize, usize)>,
    comp: HashMap<(usize, usize), usize>,
    ident: Vec<Option<usize>>,
    out: Vec<Vec<usize>>,
}

impl FinCategory {
    /// Builds a category; composition entries are `(f, g, f-then-g)`.
    pub fn new(
        name: impl Into<String>,
        objects: Vec<String>,
        morphisms: Vec<Morphism>,
        composition: Vec<(String, String, String)>,
        identities: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut obj_ix = HashMap::new();
        for (i, o) in objects.iter().enumerate() {
            if obj_ix.insert(o.clone(), i).is_some() {
                return Err(FincatError::Duplicate(o.clone()));
            }
        }
        let mut mors = Vec::with_capacity(morphisms.len());
        let mut mor_ix = HashMap::new();
        let mut out = vec![Vec::new(); objects.len()];
        for m in morphisms {
            let s = *obj_ix.get(&m.src).ok_or_else(|| FincatError::UnknownObject(m.src.clone()))?;
            let d = *obj_ix.get(&m.dst).ok_or_else(|| FincatError::UnknownObject(m.dst.clone()))?;
            if mor_ix.insert(m.id.clone(), mors.len()).is_some() {
                return Err(FincatError::Duplicate(m.id));
            }
            out[s].push(mors.len());
            mors.push((m.id, s, d));
        }
        let look = |id: &str| mor_ix.get(id).copied().ok_or_else(|| FincatError::UnknownMorphism(id.to_string()));
        let mut comp_list = Vec::with_capacity(composition.len());
        let mut comp = HashMap::with_capacity(composition.len());
        for (f, g, h) in &composition {
            let t = (look(f)?, look(g)?, look(h)?);
            if comp.insert((t.0, t.1), t.2).is_some() {
                return Err(FincatError::Duplicate(format!("composite ({f},{g})")));
            }
            comp_list.push(t);
        }
        let mut ident = vec![None; objects.len()];
        for (o, m) in identities {
            let oi = *obj_ix.get(o).ok_or_else(|| FincatError::UnknownObject(o.clone()))?;
            ident[oi] = Some(look(m)?);
        }
        Ok(FinCategory { name: name.into(), objects, obj_ix, mors, mor_ix, comp_list, comp, ident, out })
    }

    /// Builds from index-level data produced by generators; panics only on internal misuse.
    pub fn from_indexed(
        name: String,
        objects: Vec<String>,
        mors: Vec<(String, usize, usize)>,
        comp_list: Vec<(usize, usize, usize)>,
        ident: Vec<Option<usize>>,
    ) -> Self {
        let obj_ix = objects.iter().enumerate().map(|(i, o)| (o.clone(), i)).collect();
        let mor_ix = mors.iter().enumerate().map(|(i, m)| (m.0.clone(), i)).collect();
        let comp = comp_list.iter().map(|&(f, g, h)| ((f, g), h)).collect();
        let mut out = vec![Vec::new(); objects.len()];
        for (i, m) in mors.iter().enumerate() {
            out[m.1].push(i);
        }
        FinCategory { name, objects, obj_ix, mors, mor_ix, comp_list, comp, ident, out }
    }

    /// One object, identity only.
    pub fn terminal(name: impl Into<String>) -> Self {
        Self::from_indexed(
            name.into(),
            vec!["*".into()],
            vec![("1*".into(), 0, 0)],
            vec![(0, 0, 0)],
            vec![Some(0)],
        )
    }

    /// Discrete category on the given objects.
    pub fn discrete(name: impl Into<String>, objects: &[&str]) -> Self {
        let objs: Vec<String> = objects.iter().map(|s| s.to_string()).collect();
        let mors = objs.iter().enumerate().map(|(i, o)| (format!("1{o}"), i, i)).collect();
        let comp = (0..objs.len()).map(|i| (i, i, i)).collect();
        let ident = (0..objs.len()).map(Some).collect();
        Self::from_indexed(name.into(), objs, mors, comp, ident)
    }

    /// Indiscrete (contractible) groupoid: exactly one morphism between any two objects.
    pub fn contractible(name: impl Into<String>, objects: &[&str]) -> Self {
        let n = objects.len();
        let objs: Vec<String> = objects.iter().map(|s| s.to_string()).collect();
        let mid = |i: usize, j: usize| i * n + j;
        let mut mors = Vec::new();
        for i in 0..n {
            for j in 0..n {
                mors.push((format!("{}>{}", objs[i], objs[j]), i, j));
            }
        }
        let mut comp = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    comp.push((mid(i, j), mid(j, k), mid(i, k)));
                }
            }
        }
        let ident = (0..n).map(|i| Some(mid(i, i))).collect();
        Self::from_indexed(name.into(), objs, mors, comp, ident)
    }

    pub fn objects(&self) -> &[String] {
        &self.objects
    }

    pub fn n_objects(&self) -> usize {
        self.objects.len()
    }

    pub fn n_morphisms(&self) -> usize {
        self.mors.len()
    }

    pub fn morphism(&self, m: usize) -> Morphism {
        let (id, s, d) = &self.mors[m];
        Morphism { id: id.clone(), src: self.objects[*s].clone(), dst: self.objects[*d].clone() }
    }

    pub fn mor_id(&self, m: usize) -> &str {
        &self.mors[m].0
    }

    pub fn obj_index(&self, o: &str) -> Option<usize> {
        self.obj_ix.get(o).copied()
    }

    pub fn mor_index(&self, m: &str) -> Option<usize> {
        self.mor_ix.get(m).copied()
    }

    pub fn src(&self, m: usize) -> usize {
        self.mors[m].1
    }

    pub fn dst(&self, m: usize) -> usize {
        self.mors[m].2
    }

    pub fn identity(&self, o: usize) -> Option<usize> {
        self.ident[o]
    }

    pub fn out_morphisms(&self, o: usize) -> &[usize] {
        &self.out[o]
    }

    /// `f` then `g`, if the table has an entry.
    pub fn compose(&self, f: usize, g: usize) -> Option<usize> {
        self.comp.get(&(f, g)).copied()
    }

    pub fn hom(&self, x: usize, y: usize) -> Vec<usize> {
        self.out[x].iter().copied().filter(|&m| self.dst(m) == y).collect()
    }

    /// A two-sided inverse, if one exists.
    pub fn inverse(&self, f: usize) -> Option<usize> {
        let (s, d) = (self.src(f), self.dst(f));
        let (is, id) = (self.ident[s]?, self.ident[d]?);
        self.hom(d, s)
            .into_iter()
            .find(|&g| self.compose(f, g) == Some(is) && self.compose(g, f) == Some(id))
    }

    pub fn is_iso(&self, f: usize) -> bool {
        self.inverse(f).is_some()
    }

    /// Number of composable pairs.
    pub fn table_size(&self) -> usize {
        self.comp_list.len()
    }
}

/// Exhaustive check of the category axioms.
pub fn validate_category(c: &FinCategory) -> Violations {
    let mut v = Violations::default();
    let id = |m: usize| c.mor_id(m).to_string();
    for (o, name) in c.objects.iter().enumerate() {
        match c.ident[o] {
            None => v.push(format!("object {name}: no identity")),
            Some(i) if c.src(i) != o || c.dst(i) != o => {
                v.push(format!("object {name}: identity {} has wrong endpoints", id(i)))
            }
            _ => {}
        }
    }
    for f in 0..c.n_morphisms() {
        for &g in &c.out[c.dst(f)] {
            match c.compose(f, g) {
                None => v.push(format!("composite of ({},{}) missing", id(f), id(g))),
                Some(h) if c.src(h) != c.src(f) || c.dst(h) != c.dst(g) => v.push(format!(
                    "composite of ({},{}) = {} has wrong endpoints",
                    id(f),
                    id(g),
                    id(h)
                )),
                _ => {}
            }
        }
    }
    for &(f, g, _) in &c.comp_list {
        if c.dst(f) != c.src(g) {
            v.push(format!("table entry ({},{}) is not composable", id(f), id(g)));
        }
    }
    if !v.passed() {
        return v;
    }
    for f in 0..c.n_morphisms() {
        let (s, d) = (c.src(f), c.dst(f));
        if let (Some(is), Some(idd)) = (c.ident[s], c.ident[d]) {
            if c.compose(is, f) != Some(f) || c.compose(f, idd) != Some(f) {
                v.push(format!("identity law fails at {}", id(f)));
            }
        }
    }
    for f in 0..c.n_morphisms() {
        for &g in &c.out[c.dst(f)] {
            let fg = c.compose(f, g).expect("checked total");
            for &h in &c.out[c.dst(g)] {
                let gh = c.compose(g, h).expect("checked total");
                let l = c.compose(fg, h);
                let r = c.compose(f, gh);
                if l != r {
                    v.push(format!("associativity fails at ({},{},{})", id(f), id(g), id(h)));
                }
            }
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct FunctorData {
    pub name: String,
    pub source: Arc<FinCategory>,
    pub target: Arc<FinCategory>,
    pub obj_map: Vec<usize>,
    pub mor_map: Vec<usize>,
}

impl FunctorData {
    pub fn from_maps(
        name: impl Into<String>,
        source: Arc<FinCategory>,
        target: Arc<FinCategory>,
        objects: &BTreeMap<String, String>,
        morphisms: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut obj_map = Vec::with_capacity(source.n_objects());
        for o in source.objects() {
            let t = objects.get(o).ok_or_else(|| FincatError::MissingMap(o.clone()))?;
            obj_map.push(target.obj_index(t).ok_or_else(|| FincatError::UnknownObject(t.clone()))?);
        }
        let mut mor_map = Vec::with_capacity(source.n_morphisms());
        for m in 0..source.n_morphisms() {
            let mid = source.mor_id(m);
            let t = morphisms.get(mid).ok_or_else(|| FincatError::MissingMap(mid.to_string()))?;
            mor_map.push(target.mor_index(t).ok_or_else(|| FincatError::UnknownMorphism(t.clone()))?);
        }
        Ok(FunctorData { name: name.into(), source, target, obj_map, mor_map })
    }

    pub fn identity(c: Arc<FinCategory>) -> Self {
        FunctorData {
            name: format!("id_{}", c.name),
            obj_map: (0..c.n_objects()).collect(),
            mor_map: (0..c.n_morphisms()).collect(),
            source: c.clone(),
            target: c,
        }
    }

    pub fn object_maps(&self) -> (BTreeMap<String, String>, BTreeMap<String, String>) {
        let o = self
            .obj_map
            .iter()
            .enumerate()
            .map(|(i, &t)| (self.source.objects[i].clone(), self.target.objects[t].clone()))
            .collect();
        let m = self
            .mor_map
            .iter()
            .enumerate()
            .map(|(i, &t)| (self.source.mor_id(i).to_string(), self.target.mor_id(t).to_string()))
            .collect();
        (o, m)
    }
}

/// Exhaustive functor laws.
pub fn validate_functor(f: &FunctorData) -> Violations {
    let mut v = Violations::default();
    let (c, d) = (&*f.source, &*f.target);
    for m in 0..c.n_morphisms() {
        let fm = f.mor_map[m];
        if d.src(fm) != f.obj_map[c.src(m)] || d.dst(fm) != f.obj_map[c.dst(m)] {
            v.push(format!("{}: morphism {} sent to {} with wrong endpoints", f.name, c.mor_id(m), d.mor_id(fm)));
        }
    }
    for o in 0..c.n_objects() {
        if let (Some(i), Some(j)) = (c.identity(o), d.identity(f.obj_map[o])) {
            if f.mor_map[i] != j {
                v.push(format!("{}: identity of {} not preserved", f.name, c.objects[o]));
            }
        }
    }
    for &(a, b, ab) in &c.comp_list {
        if d.compose(f.mor_map[a], f.mor_map[b]) != Some(f.mor_map[ab]) {
            v.push(format!("{}: composition ({},{}) not preserved", f.name, c.mor_id(a), c.mor_id(b)));
        }
    }
    v
}

/// `f` then `g`.
pub fn compose_functors(f: &FunctorData, g: &FunctorData) -> Result<FunctorData> {
    if f.target != g.source {
        return Err(FincatError::Endpoint(format!("{} does not feed {}", f.name, g.name)));
    }
    Ok(FunctorData {
        name: format!("({};{})", f.name, g.name),
        source: f.source.clone(),
        target: g.target.clone(),
        obj_map: f.obj_map.iter().map(|&o| g.obj_map[o]).collect(),
        mor_map: f.mor_map.iter().map(|&m| g.mor_map[m]).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NatTransformData {
    pub name: String,
    pub source: FunctorData,
    pub target: FunctorData,
    /// source-category object ↦ target-category morphism
    pub components: Vec<usize>,
}

impl NatTransformData {
    pub fn identity(f: &FunctorData) -> Self {
        NatTransformData {
            name: format!("1_{}", f.name),
            source: f.clone(),
            target: f.clone(),
            components: f.obj_map.iter().map(|&o| f.target.identity(o).expect("identity")).collect(),
        }
    }

    pub fn from_map(
        name: impl Into<String>,
        source: FunctorData,
        target: FunctorData,
        components: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut comps = Vec::new();
        for o in source.source.objects() {
            let m = components.get(o).ok_or_else(|| FincatError::MissingMap(o.clone()))?;
            comps.push(source.target.mor_index(m).ok_or_else(|| FincatError::UnknownMorphism(m.clone()))?);
        }
        Ok(NatTransformData { name: name.into(), source, target, components: comps })
    }
}

/// Endpoints and naturality squares.
pub fn validate_nat(n: &NatTransformData) -> Violations {
    let mut v = Violations::default();
    let (f, g) = (&n.source, &n.target);
    if f.source != g.source || f.target != g.target {
        v.push(format!("{}: functors are not parallel", n.name));
        return v;
    }
    let (c, d) = (&*f.source, &*f.target);
    for o in 0..c.n_objects() {
        let k = n.components[o];
        if d.src(k) != f.obj_map[o] || d.dst(k) != g.obj_map[o] {
            v.push(format!("{}: component at {} has wrong endpoints", n.name, c.objects[o]));
        }
    }
    if !v.passed() {
        return v;
    }
    for m in 0..c.n_morphisms() {
        let l = d.compose(f.mor_map[m], n.components[c.dst(m)]);
        let r = d.compose(n.components[c.src(m)], g.mor_map[m]);
        if l != r || l.is_none() {
            v.push(format!("{}: naturality fails at {}", n.name, c.mor_id(m)));
        }
    }
    v
}

/// `F ∘ η`: F applied to each component.
pub fn whisker_left(f: &FunctorData, n: &NatTransformData) -> Result<NatTransformData> {
    Ok(NatTransformData {
        name: format!("{}*{}", f.name, n.name),
        source: compose_functors(&n.source, f)?,
        target: compose_functors(&n.target, f)?,
        components: n.components.iter().map(|&k| f.mor_map[k]).collect(),
    })
}

/// `η ∘ F`: η evaluated at F's objects.
pub fn whisker_right(n: &NatTransformData, f: &FunctorData) -> Result<NatTransformData> {
    Ok(NatTransformData {
        name: format!("{}*{}", n.name, f.name),
        source: compose_functors(f, &n.source)?,
        target: compose_functors(f, &n.target)?,
        components: f.obj_map.iter().map(|&o| n.components[o]).collect(),
    })
}

/// η then θ.
pub fn vcompose(n: &NatTransformData, t: &NatTransformData) -> Result<NatTransformData> {
    if n.target != t.source {
        return Err(FincatError::Endpoint(format!("{} does not end where {} starts", n.name, t.name)));
    }
    let d = &n.source.target;
    let mut comps = Vec::with_capacity(n.components.len());
    for (o, (&a, &b)) in n.components.iter().zip(&t.components).enumerate() {
        comps.push(d.compose(a, b).ok_or_else(|| FincatError::Endpoint(format!("components at object {o}")))?);
    }
    Ok(NatTransformData { name: format!("({};{})", n.name, t.name), source: n.source.clone(), target: t.target.clone(), components: comps })
}

/// Horizontal composite of η: F ⇒ G (C → D) and θ: H ⇒ K (D → E), a transformation HF ⇒ KG.
pub fn hcompose(n: &NatTransformData, t: &NatTransformData) -> Result<NatTransformData> {
    let e = &t.source.target;
    let src = compose_functors(&n.source, &t.source)?;
    let tgt = compose_functors(&n.target, &t.target)?;
    let mut comps = Vec::new();
    for o in 0..n.source.source.n_objects() {
        let a = t.components[n.source.obj_map[o]];
        let b = t.target.mor_map[n.components[o]];
        comps.push(e.compose(a, b).ok_or_else(|| FincatError::Endpoint(format!("hcompose at object {o}")))?);
    }
    Ok(NatTransformData { name: format!("({}o{})", n.name, t.name), source: src, target: tgt, components: comps })
}

/// Fiber product of `f: C → E` and `g: D → E` with its projections.
pub fn fiber_product(f: &FunctorData, g: &FunctorData) -> Result<(FinCategory, FunctorData, FunctorData)> {
    if f.target != g.target {
        return Err(FincatError::Endpoint(format!("{} and {} have different targets", f.name, g.name)));
    }
    let (c, d) = (&*f.source, &*g.source);
    let mut objs = Vec::new();
    let mut opair = Vec::new();
    let mut oix = HashMap::new();
    for x in 0..c.n_objects() {
        for y in 0..d.n_objects() {
            if f.obj_map[x] == g.obj_map[y] {
                oix.insert((x, y), objs.len());
                objs.push(format!("({},{})", c.objects[x], d.objects[y]));
                opair.push((x, y));
            }
        }
    }
    let mut mors = Vec::new();
    let mut mpair = Vec::new();
    let mut mix = HashMap::new();
    for a in 0..c.n_morphisms() {
        for b in 0..d.n_morphisms() {
            if f.mor_map[a] == g.mor_map[b] {
                let s = oix[&(c.src(a), d.src(b))];
                let t = oix[&(c.dst(a), d.dst(b))];
                mix.insert((a, b), mors.len());
                mors.push((format!("({},{})", c.mor_id(a), d.mor_id(b)), s, t));
                mpair.push((a, b));
            }
        }
    }
    let mut comp = Vec::new();
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); objs.len()];
    for (i, m) in mors.iter().enumerate() {
        out[m.1].push(i);
    }
    for (i, &(a, b)) in mpair.iter().enumerate() {
        for &j in &out[mors[i].2] {
            let (a2, b2) = mpair[j];
            let (Some(ac), Some(bc)) = (c.compose(a, a2), d.compose(b, b2)) else { continue };
            if let Some(&k) = mix.get(&(ac, bc)) {
                comp.push((i, j, k));
            }
        }
    }
    let ident = opair
        .iter()
        .map(|&(x, y)| match (c.identity(x), d.identity(y)) {
            (Some(i), Some(j)) => mix.get(&(i, j)).copied(),
            _ => None,
        })
        .collect();
    let name = format!("{}x{}", c.name, d.name);
    let fp = Arc::new(FinCategory::from_indexed(name, objs, mors, comp, ident));
    let p1 = FunctorData {
        name: "p1".into(),
        source: fp.clone(),
        target: f.source.clone(),
        obj_map: opair.iter().map(|p| p.0).collect(),
        mor_map: mpair.iter().map(|p| p.0).collect(),
    };
    let p2 = FunctorData {
        name: "p2".into(),
        source: fp.clone(),
        target: g.source.clone(),
        obj_map: opair.iter().map(|p| p.1).collect(),
        mor_map: mpair.iter().map(|p| p.1).collect(),
    };
    Ok(((*fp).clone(), p1, p2))
}

/// The pairing `⟨h, k⟩: X → C ×_E D` induced by the universal property.
pub fn fiber_pair(p1: &FunctorData, p2: &FunctorData, h: &FunctorData, k: &FunctorData) -> Result<FunctorData> {
    let fp = &p1.source;
    let mut oix = HashMap::new();
    for o in 0..fp.n_objects() {
        oix.insert((p1.obj_map[o], p2.obj_map[o]), o);
    }
    let mut mix = HashMap::new();
    for m in 0..fp.n_morphisms() {
        mix.insert((p1.mor_map[m], p2.mor_map[m]), m);
    }
    let x = &h.source;
    let mut obj_map = Vec::new();
    for o in 0..x.n_objects() {
        let key = (h.obj_map[o], k.obj_map[o]);
        obj_map.push(*oix.get(&key).ok_or_else(|| FincatError::Endpoint(format!("object {} not over a common base", x.objects[o])))?);
    }
    let mut mor_map = Vec::new();
    for m in 0..x.n_morphisms() {
        let key = (h.mor_map[m], k.mor_map[m]);
        mor_map.push(*mix.get(&key).ok_or_else(|| FincatError::Endpoint(format!("morphism {} not over a common base", x.mor_id(m))))?);
    }
    Ok(FunctorData { name: format!("<{},{}>", h.name, k.name), source: x.clone(), target: fp.clone(), obj_map, mor_map })
}

/// Binary product, as the fiber product over the terminal category.
pub fn product(c: Arc<FinCategory>, d: Arc<FinCategory>) -> Result<(FinCategory, FunctorData, FunctorData)> {
    let t = Arc::new(FinCategory::terminal("1"));
    let bang = |x: &Arc<FinCategory>| FunctorData {
        name: "!".into(),
        source: x.clone(),
        target: t.clone(),
        obj_map: vec![0; x.n_objects()],
        mor_map: vec![0; x.n_morphisms()],
    };
    fiber_product(&bang(&c), &bang(&d))
}

/// Isofibration condition: every iso `φ: x → y` downstairs lifts to an iso out
/// of every object over `x`. Lists the unliftable `(φ, x̄)` pairs.
pub fn isofibration_check(f: &FunctorData) -> Violations {
    let mut v = Violations::default();
    let (c, d) = (&*f.source, &*f.target);
    let mut fibre: Vec<Vec<usize>> = vec![Vec::new(); d.n_objects()];
    for o in 0..c.n_objects() {
        fibre[f.obj_map[o]].push(o);
    }
    let isos_up: Vec<bool> = (0..c.n_morphisms()).map(|m| c.is_iso(m)).collect();
    for phi in 0..d.n_morphisms() {
        if !d.is_iso(phi) {
            continue;
        }
        for &xb in &fibre[d.src(phi)] {
            let ok = c.out_morphisms(xb).iter().any(|&m| isos_up[m] && f.mor_map[m] == phi);
            if !ok {
                v.push(format!("no lift of {} from {}", d.mor_id(phi), c.objects[xb]));
            }
        }
    }
    v
}

// ---------------------------------------------------------------- json

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryJson {
    pub name: String,
    pub objects: Vec<String>,
    pub morphisms: Vec<Morphism>,
    /// `[f, g, f-then-g]`
    pub composition: Vec<[String; 3]>,
    pub identities: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctorJson {
    pub name: String,
    pub source: String,
    pub target: String,
    pub objects: BTreeMap<String, String>,
    pub morphisms: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformationJson {
    pub name: String,
    pub source: String,
    pub target: String,
    pub components: BTreeMap<String, String>,
}

/// Schema `fincat/v1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FincatBundle {
    pub schema: String,
    pub categories: Vec<CategoryJson>,
    #[serde(default)]
    pub functors: Vec<FunctorJson>,
    #[serde(default)]
    pub transformations: Vec<TransformationJson>,
}

pub const FINCAT_SCHEMA: &str = "fincat/v1";

impl CategoryJson {
    pub fn from_category(c: &FinCategory) -> Self {
        CategoryJson {
            name: c.name.clone(),
            objects: c.objects.clone(),
            morphisms: (0..c.n_morphisms()).map(|m| c.morphism(m)).collect(),
            composition: c
                .comp_list
                .iter()
                .map(|&(f, g, h)| [c.mor_id(f).to_string(), c.mor_id(g).to_string(), c.mor_id(h).to_string()])
                .collect(),
            identities: c
                .ident
                .iter()
                .enumerate()
                .filter_map(|(o, m)| m.map(|m| (c.objects[o].clone(), c.mor_id(m).to_string())))
                .collect(),
        }
    }

    pub fn to_category(&self) -> Result<FinCategory> {
        FinCategory::new(
            self.name.clone(),
            self.objects.clone(),
            self.morphisms.clone(),
            self.composition.iter().map(|[a, b, c]| (a.clone(), b.clone(), c.clone())).collect(),
            &self.identities,
        )
    }
}

impl FunctorJson {
    pub fn from_functor(f: &FunctorData) -> Self {
        let (objects, morphisms) = f.object_maps();
        FunctorJson { name: f.name.clone(), source: f.source.name.clone(), target: f.target.name.clone(), objects, morphisms }
    }
}

/// A parsed and resolved `fincat/v1` bundle.
#[derive(Clone, Debug, Default)]
pub struct LoadedBundle {
    pub categories: BTreeMap<String, Arc<FinCategory>>,
    pub functors: BTreeMap<String, FunctorData>,
    pub transformations: BTreeMap<String, NatTransformData>,
}

impl FincatBundle {
    pub fn parse(text: &str) -> Result<Self> {
        let b: FincatBundle = serde_json::from_str(text).map_err(|e| FincatError::Json(e.to_string()))?;
        if b.schema != FINCAT_SCHEMA {
            return Err(FincatError::Json(format!("expected schema {FINCAT_SCHEMA}, got {}", b.schema)));
        }
        Ok(b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bundle serialises")
    }

    pub fn load(&self) -> Result<LoadedBundle> {
        let mut out = LoadedBundle::default();
        for c in &self.categories {
            out.categories.insert(c.name.clone(), Arc::new(c.to_category()?));
        }
        let cat = |n: &str, out: &LoadedBundle| out.categories.get(n).cloned().ok_or_else(|| FincatError::Json(format!("unknown category {n}")));
        for f in &self.functors {
            let fd = FunctorData::from_maps(f.name.clone(), cat(&f.source, &out)?, cat(&f.target, &out)?, &f.objects, &f.morphisms)?;
            out.functors.insert(f.name.clone(), fd);
        }
        for t in &self.transformations {
            let s = out.functors.get(&t.source).cloned().ok_or_else(|| FincatError::Json(format!("unknown functor {}", t.source)))?;
            let g = out.functors.get(&t.target).cloned().ok_or_else(|| FincatError::Json(format!("unknown functor {}", t.target)))?;
            out.transformations.insert(t.name.clone(), NatTransformData::from_map(t.name.clone(), s, g, &t.components)?);
        }
        Ok(out)
    }
}

impl LoadedBundle {
    /// Runs every applicable validator.
    pub fn validate(&self) -> Violations {
        let mut v = Violations::default();
        for c in self.categories.values() {
            for e in validate_category(c).0 {
                v.push(format!("category {}: {e}", c.name));
            }
        }
        for f in self.functors.values() {
            v.0.extend(validate_functor(f).0);
        }
        for t in self.transformations.values() {
            v.0.extend(validate_nat(t).0);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminal_is_valid() {
        assert!(validate_category(&FinCategory::terminal("1")).passed());
    }

    #[test]
    fn contractible_inverse() {
        let c = FinCategory::contractible("K", &["x", "y"]);
        assert!(validate_category(&c).passed());
        let m = c.mor_index("x>y").unwrap();
        assert_eq!(c.inverse(m), c.mor_index("y>x"));
    }
}
