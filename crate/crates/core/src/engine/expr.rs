//! Diagram expressions: parsing and symbolic typing.
//!
//! An expression denotes a transformation between two functor expressions on a
//! context shape. Typing computes its *signature* — the codomain shape and the
//! source and target tuples of terms over the context's canonical variables —
//! and rejects every composite whose endpoints do not match.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use crate::cells::{Op, Shape, Term};
use crate::engine::sexpr::{read_all, Pos, Sexp, SexpKind, SyntaxError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DslError {
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("type error at {pos}: {msg}")]
    Type { pos: Pos, msg: String },
}

fn terr<T>(pos: Pos, msg: impl Into<String>) -> Result<T, DslError> {
    Err(DslError::Type { pos, msg: msg.into() })
}

/// Codomain shape plus source and target tuples over the context's variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sig {
    pub cod: Shape,
    pub src: Vec<Term>,
    pub tgt: Vec<Term>,
}

fn show(ts: &[Term]) -> String {
    if ts.len() == 1 {
        ts[0].to_string()
    } else {
        format!("[{}]", ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", "))
    }
}

impl fmt::Display for Sig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ⇒ {} in {}", show(&self.src), show(&self.tgt), self.cod)
    }
}

/// A typed diagram expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// A generator at the context's own primary cells.
    Gen(String),
    Inv(Box<Expr>),
    /// Vertical composite, first to last.
    Vc(Vec<Expr>),
    /// Post-whiskering: apply the terms `f` (over `inner`'s variables) to the value of `e`.
    Wl { f: Vec<Term>, inner: Shape, e: Box<Expr> },
    /// Pre-whiskering: evaluate `e` (typed on `inner`) at the tuple `arg`.
    Wr { e: Box<Expr>, arg: Vec<Term>, inner: Shape },
    Idn(Vec<Term>),
    Pair(Vec<Expr>),
    VPair(Vec<Expr>),
}

impl Expr {
    /// Inverse with double inverses cancelled.
    pub fn inv(e: Expr) -> Expr {
        match e {
            Expr::Inv(x) => *x,
            x => Expr::Inv(Box::new(x)),
        }
    }

    /// Generator keys referenced anywhere in the expression.
    pub fn generators(&self, out: &mut Vec<String>) {
        match self {
            Expr::Gen(k) => out.push(k.clone()),
            Expr::Inv(e) => e.generators(out),
            Expr::Wl { e, .. } | Expr::Wr { e, .. } => e.generators(out),
            Expr::Vc(v) | Expr::Pair(v) | Expr::VPair(v) => v.iter().for_each(|e| e.generators(out)),
            Expr::Idn(_) => {}
        }
    }
}

/// Declared signature of a transformation (or invertibility witness).
#[derive(Debug, Clone, PartialEq)]
pub struct GenDecl {
    pub key: String,
    pub domain: Shape,
    pub cod: Shape,
    pub src: Vec<Term>,
    pub tgt: Vec<Term>,
    /// Image of a component under source / target, as an expression one level down.
    pub sbound: Expr,
    pub tbound: Expr,
}

/// One equation between two diagram expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct AxiomDef {
    pub id: String,
    pub domain: Shape,
    pub lhs: Expr,
    pub rhs: Expr,
    pub sig: Sig,
    pub cite: String,
    pub pos: Pos,
}

/// The declared transformations and the invertibility-witness equations.
#[derive(Debug, Clone, PartialEq)]
pub struct GenTable {
    pub decls: BTreeMap<String, GenDecl>,
    pub witness_eqs: Vec<AxiomDef>,
}

const GENERATORS: &str = include_str!("../../axioms/generators.sexp");
const AXIOMS: &str = include_str!("../../axioms/dicat.axioms");

/// The bundled axiom file.
pub fn builtin_axiom_text() -> &'static str {
    AXIOMS
}

impl GenTable {
    /// The reference signatures shipped with the engine.
    pub fn reference() -> &'static GenTable {
        static T: OnceLock<GenTable> = OnceLock::new();
        T.get_or_init(|| GenTable::parse(GENERATORS).expect("bundled generator table is well-formed"))
    }

    /// Transformation keys `D2-1..D2-18` in numeric order.
    pub fn transformation_keys(&self) -> Vec<String> {
        let mut v: Vec<String> = self.decls.keys().filter(|k| k.starts_with("D2-")).cloned().collect();
        v.sort_by_key(|k| k[3..].parse::<u32>().unwrap_or(u32::MAX));
        v
    }

    pub fn witness_keys(&self) -> Vec<String> {
        self.decls.keys().filter(|k| !k.starts_with("D2-")).cloned().collect()
    }

    pub fn parse(text: &str) -> Result<GenTable, DslError> {
        let forms = read_all(text)?;
        let mut t = GenTable { decls: BTreeMap::new(), witness_eqs: Vec::new() };
        let mut bounds = Vec::new();
        for f in &forms {
            match f.head() {
                Some("decl") => {
                    let l = f.list().unwrap();
                    let key = atom_at(l, 1, f.pos)?;
                    let kw = keywords(&l[2..], f.pos)?;
                    let domain = parse_domain(kw_get(&kw, "domain", f.pos)?)?;
                    let prims = domain.prims();
                    let src = resolve_fexpr(kw_get(&kw, "src", f.pos)?, &prims)?;
                    let tgt = resolve_fexpr(kw_get(&kw, "tgt", f.pos)?, &prims)?;
                    let cod = infer_at(&src, f.pos)?;
                    let cod_t = infer_at(&tgt, f.pos)?;
                    if cod != cod_t {
                        return terr(f.pos, format!("{key}: source lives in {cod}, target in {cod_t}"));
                    }
                    let placeholder = Expr::Idn(vec![]);
                    t.decls.insert(
                        key.to_string(),
                        GenDecl { key: key.to_string(), domain, cod, src, tgt, sbound: placeholder.clone(), tbound: placeholder },
                    );
                    bounds.push((key.to_string(), kw_get(&kw, "sbound", f.pos)?.clone(), kw_get(&kw, "tbound", f.pos)?.clone()));
                }
                Some("eq") => {}
                _ => return terr(f.pos, "expected (decl ...) or (eq ...)"),
            }
        }
        for (key, sb, tb) in bounds {
            let d = t.decls[&key].clone();
            let sbound = t.type_bound(&d, &sb, true)?;
            let tbound = t.type_bound(&d, &tb, false)?;
            let dm = t.decls.get_mut(&key).unwrap();
            dm.sbound = sbound;
            dm.tbound = tbound;
        }
        for f in &forms {
            if f.head() == Some("eq") {
                let a = t.parse_eq(f)?;
                t.witness_eqs.push(a);
            }
        }
        Ok(t)
    }

    fn type_bound(&self, d: &GenDecl, s: &Sexp, source: bool) -> Result<Expr, DslError> {
        let side = |ts: &[Term]| -> Vec<Term> { ts.iter().map(|x| if source { x.s() } else { x.t() }).collect() };
        let want = Sig { cod: Shape::level(d.cod.as_level().unwrap_or(2) - 1), src: side(&d.src), tgt: side(&d.tgt) };
        let which = if source { "source" } else { "target" };
        let (e, sig) = if s.atom() == Some("ident") {
            if want.src != want.tgt {
                return terr(s.pos, format!("{}: {which} image declared as identity but {} ≠ {}", d.key, show(&want.src), show(&want.tgt)));
            }
            (Expr::Idn(want.src.clone()), want.clone())
        } else {
            self.type_expr(s, &d.domain)?
        };
        if sig != want {
            return terr(s.pos, format!("{}: {which} image has signature {sig}, expected {want}", d.key));
        }
        Ok(e)
    }

    /// Replaces a declared source/target (used for user-supplied declarations).
    pub fn redeclare(&mut self, key: &str, src: &str, tgt: &str) -> Result<(), DslError> {
        let d = self
            .decls
            .get_mut(key)
            .ok_or(DslError::Type { pos: Pos { line: 0, col: 0 }, msg: format!("unknown transformation {key}") })?;
        let prims = d.domain.prims();
        let one = |text: &str| -> Result<Vec<Term>, DslError> {
            let f = read_all(text)?;
            if f.len() != 1 {
                return terr(Pos { line: 1, col: 1 }, "expected one functor expression");
            }
            resolve_fexpr(&f[0], &prims)
        };
        d.src = one(src)?;
        d.tgt = one(tgt)?;
        d.cod = infer_at(&d.src, Pos { line: 1, col: 1 })?;
        Ok(())
    }

    /// Parses an axiom file.
    pub fn parse_axioms(&self, text: &str) -> Result<Vec<AxiomDef>, DslError> {
        let forms = read_all(text)?;
        forms.iter().map(|f| self.parse_eq(f)).collect()
    }

    fn parse_eq(&self, f: &Sexp) -> Result<AxiomDef, DslError> {
        if f.head() != Some("eq") {
            return terr(f.pos, "expected (eq <id> <expr> <expr> :domain <shape> :cite \"...\")");
        }
        let l = f.list().unwrap();
        if l.len() < 4 {
            return terr(f.pos, "eq needs an id and two expressions");
        }
        let id = atom_at(l, 1, f.pos)?.to_string();
        let kw = keywords(&l[4..], f.pos)?;
        let domain = parse_domain(kw_get(&kw, "domain", f.pos)?)?;
        let cite = match kw.get("cite") {
            Some(Sexp { kind: SexpKind::Str(s), .. }) => s.clone(),
            Some(x) => return terr(x.pos, ":cite expects a string"),
            None => String::new(),
        };
        let (lhs, ls) = self.type_expr(&l[2], &domain)?;
        let (rhs, rs) = self.type_expr(&l[3], &domain)?;
        if ls != rs {
            return terr(f.pos, format!("{id}: sides disagree: left is {ls}, right is {rs}"));
        }
        Ok(AxiomDef { id, domain, lhs, rhs, sig: ls, cite, pos: f.pos })
    }

    /// Types an expression in a context shape.
    pub fn type_expr(&self, s: &Sexp, ctx: &Shape) -> Result<(Expr, Sig), DslError> {
        let Some(l) = s.list() else { return terr(s.pos, format!("expected an expression, found {s}")) };
        let head = s.head().unwrap_or("");
        let args = &l[1..];
        match head {
            "gen" => {
                let key = atom_at(l, 1, s.pos)?;
                let d = self.decls.get(key).ok_or(DslError::Type { pos: s.pos, msg: format!("unknown generator {key}") })?;
                if &d.domain != ctx {
                    return terr(
                        s.pos,
                        format!("{key} is declared on {} but used on {ctx}; evaluate it with (wr ...)", d.domain),
                    );
                }
                Ok((Expr::Gen(key.into()), Sig { cod: d.cod.clone(), src: d.src.clone(), tgt: d.tgt.clone() }))
            }
            "inv" => {
                let [x] = args else { return terr(s.pos, "inv takes one expression") };
                let (e, sig) = self.type_expr(x, ctx)?;
                Ok((Expr::inv(e), Sig { cod: sig.cod, src: sig.tgt, tgt: sig.src }))
            }
            "vc" => {
                if args.is_empty() {
                    return terr(s.pos, "vc needs at least one expression");
                }
                let mut parts = Vec::new();
                let mut sig: Option<Sig> = None;
                for x in args {
                    let (e, g) = self.type_expr(x, ctx)?;
                    if let Some(prev) = &mut sig {
                        if prev.cod != g.cod || prev.tgt != g.src {
                            return terr(
                                x.pos,
                                format!("vertical composite mismatch: previous target {} in {}, next source {} in {}", show(&prev.tgt), prev.cod, show(&g.src), g.cod),
                            );
                        }
                        prev.tgt = g.tgt;
                    } else {
                        sig = Some(g);
                    }
                    parts.push(e);
                }
                let e = if parts.len() == 1 { parts.pop().unwrap() } else { Expr::Vc(parts) };
                Ok((e, sig.unwrap()))
            }
            "wl" => {
                let [fx, ex] = args else { return terr(s.pos, "wl takes a functor expression and an expression") };
                let (e, g) = self.type_expr(ex, ctx)?;
                let inner_prims = g.cod.prims();
                let f = resolve_fexpr(fx, &inner_prims)?;
                let cod = infer_at(&f, fx.pos)?;
                let ms = g.cod.expand(&g.src);
                let mt = g.cod.expand(&g.tgt);
                let src: Vec<Term> = f.iter().map(|x| x.subst(&ms)).collect();
                let tgt: Vec<Term> = f.iter().map(|x| x.subst(&mt)).collect();
                Ok((Expr::Wl { f, inner: g.cod, e: Box::new(e) }, Sig { cod, src, tgt }))
            }
            "wr" => {
                let [ex, fx] = args else { return terr(s.pos, "wr takes an expression and a functor expression") };
                let prims = ctx.prims();
                let arg = resolve_fexpr(fx, &prims)?;
                let inner = match self.fixed_domain(ex) {
                    Some(d) => {
                        d.check_tuple(&arg).map_err(|m| DslError::Type { pos: fx.pos, msg: format!("whiskering argument does not fit {d}: {m}") })?;
                        d
                    }
                    None => infer_at(&arg, fx.pos)?,
                };
                let (e, g) = self.type_expr(ex, &inner)?;
                let m = inner.expand(&arg);
                let src = g.src.iter().map(|x| x.subst(&m)).collect();
                let tgt = g.tgt.iter().map(|x| x.subst(&m)).collect();
                Ok((Expr::Wr { e: Box::new(e), arg, inner }, Sig { cod: g.cod, src, tgt }))
            }
            "idn" => {
                let [fx] = args else { return terr(s.pos, "idn takes one functor expression") };
                let terms = resolve_fexpr(fx, &ctx.prims())?;
                let cod = infer_at(&terms, fx.pos)?;
                Ok((Expr::Idn(terms.clone()), Sig { cod, src: terms.clone(), tgt: terms }))
            }
            "pair" | "vpair" => {
                if args.is_empty() {
                    return terr(s.pos, format!("{head} needs at least one expression"));
                }
                let mut parts = Vec::new();
                let mut sigs = Vec::new();
                for x in args {
                    let (e, g) = self.type_expr(x, ctx)?;
                    if g.cod.cols.is_empty() {
                        return terr(x.pos, format!("{head} cannot take a component valued in C0"));
                    }
                    if head == "vpair" && (g.cod.cols.len() != 1 || g.cod.cols[0] == 0) {
                        return terr(x.pos, format!("vpair needs single columns of 2-cells, found {}", g.cod));
                    }
                    parts.push(e);
                    sigs.push(g);
                }
                let cod = if head == "pair" {
                    Shape::hcat(&sigs.iter().map(|g| g.cod.clone()).collect::<Vec<_>>())
                } else {
                    Shape::new(vec![sigs.iter().map(|g| g.cod.cols[0]).sum()])
                };
                let src: Vec<Term> = sigs.iter().flat_map(|g| g.src.clone()).collect();
                let tgt: Vec<Term> = sigs.iter().flat_map(|g| g.tgt.clone()).collect();
                cod.check_tuple(&src).map_err(|m| DslError::Type { pos: s.pos, msg: format!("{head}: sources do not fit together: {m}") })?;
                cod.check_tuple(&tgt).map_err(|m| DslError::Type { pos: s.pos, msg: format!("{head}: targets do not fit together: {m}") })?;
                let e = if head == "pair" { Expr::Pair(parts) } else { Expr::VPair(parts) };
                Ok((e, Sig { cod, src, tgt }))
            }
            _ => terr(s.pos, format!("unknown expression form {s}")),
        }
    }

    /// The domain an expression is pinned to by its leading generator, if any.
    fn fixed_domain(&self, s: &Sexp) -> Option<Shape> {
        let l = s.list()?;
        match s.head()? {
            "gen" => self.decls.get(l.get(1)?.atom()?).map(|d| d.domain.clone()),
            "inv" | "vc" => self.fixed_domain(l.get(1)?),
            _ => None,
        }
    }
}

fn infer_at(ts: &[Term], pos: Pos) -> Result<Shape, DslError> {
    Shape::infer(ts).map_err(|m| DslError::Type { pos, msg: m })
}

fn atom_at(l: &[Sexp], i: usize, pos: Pos) -> Result<&str, DslError> {
    l.get(i).and_then(|x| x.atom()).ok_or(DslError::Type { pos, msg: format!("expected an identifier in position {i}") })
}

fn keywords(items: &[Sexp], pos: Pos) -> Result<BTreeMap<String, Sexp>, DslError> {
    let mut m = BTreeMap::new();
    let mut it = items.iter();
    while let Some(k) = it.next() {
        let Some(name) = k.atom().and_then(|a| a.strip_prefix(':')) else {
            return terr(k.pos, format!("expected a :keyword, found {k}"));
        };
        let v = it.next().ok_or(DslError::Type { pos, msg: format!(":{name} needs a value") })?;
        m.insert(name.to_string(), v.clone());
    }
    Ok(m)
}

fn kw_get<'a>(kw: &'a BTreeMap<String, Sexp>, k: &str, pos: Pos) -> Result<&'a Sexp, DslError> {
    kw.get(k).ok_or(DslError::Type { pos, msg: format!("missing :{k}") })
}

/// Parses `C0 | C1 | C2 | (v n) | (h col ...)`.
pub fn parse_domain(s: &Sexp) -> Result<Shape, DslError> {
    fn col(s: &Sexp) -> Result<usize, DslError> {
        match s.atom() {
            Some("C1") => Ok(0),
            Some("C2") => Ok(1),
            _ => match s.list() {
                Some([h, n]) if h.atom() == Some("v") => match n.atom().and_then(|a| a.parse::<usize>().ok()) {
                    Some(k) if k >= 1 => Ok(k),
                    _ => terr(n.pos, "(v n) needs n ≥ 1"),
                },
                _ => terr(s.pos, format!("expected C1, C2 or (v n), found {s}")),
            },
        }
    }
    if s.atom() == Some("C0") {
        return Ok(Shape::c0());
    }
    if let Some(l) = s.list() {
        if s.head() == Some("h") {
            if l.len() < 2 {
                return terr(s.pos, "(h ...) needs at least one column");
            }
            return Ok(Shape::new(l[1..].iter().map(col).collect::<Result<_, _>>()?));
        }
    }
    Ok(Shape::new(vec![col(s)?]))
}

fn d1_op(s: &Sexp) -> Result<Op, DslError> {
    let k = s.atom().unwrap_or("");
    Op::from_key(k).ok_or(DslError::Type { pos: s.pos, msg: format!("unknown structure functor {k}") })
}

/// Resolves a functor expression against an input tuple, producing checked terms.
pub fn resolve_fexpr(s: &Sexp, input: &[Term]) -> Result<Vec<Term>, DslError> {
    let out = resolve(s, input)?;
    for t in &out {
        t.check().map_err(|m| DslError::Type { pos: s.pos, msg: m })?;
    }
    Ok(out)
}

fn resolve(s: &Sexp, input: &[Term]) -> Result<Vec<Term>, DslError> {
    let side = |ts: Vec<Term>, src: bool, pos: Pos| -> Result<Vec<Term>, DslError> {
        ts.into_iter()
            .map(|t| {
                if t.level() == 0 {
                    terr(pos, format!("{t} is a 0-cell and has no {}", if src { "source" } else { "target" }))
                } else {
                    Ok(if src { t.s() } else { t.t() })
                }
            })
            .collect()
    };
    if let Some(a) = s.atom() {
        return match a {
            "id" => Ok(input.to_vec()),
            "s" => side(input.to_vec(), true, s.pos),
            "t" => side(input.to_vec(), false, s.pos),
            _ => match a.strip_prefix('x').and_then(|n| n.parse::<usize>().ok()) {
                Some(k) if k >= 1 && k <= input.len() => Ok(vec![input[k - 1].clone()]),
                Some(k) => terr(s.pos, format!("x{k} is out of range: the context has {} cells", input.len())),
                None => terr(s.pos, format!("unknown functor expression {a}")),
            },
        };
    }
    let Some(l) = s.list() else { return terr(s.pos, format!("unexpected {s}")) };
    let head = s.head().unwrap_or("");
    let args = &l[1..];
    match head {
        "d1" => {
            let Some(k) = args.first() else { return terr(s.pos, "d1 needs a functor number") };
            let op = d1_op(k)?;
            let operands: Vec<Term> = if args.len() == 1 {
                input.to_vec()
            } else {
                let mut v = Vec::new();
                for a in &args[1..] {
                    v.extend(resolve(a, input)?);
                }
                v
            };
            let t = Term::op(op, operands);
            t.check().map_err(|m| DslError::Type { pos: s.pos, msg: m })?;
            Ok(vec![t])
        }
        "s" | "t" => {
            let [x] = args else { return terr(s.pos, format!("{head} takes one argument")) };
            side(resolve(x, input)?, head == "s", s.pos)
        }
        "fp-proj" => {
            let n = args.first().and_then(|a| a.atom()).and_then(|a| a.parse::<usize>().ok());
            match n {
                Some(k) if k >= 1 && k <= input.len() => Ok(vec![input[k - 1].clone()]),
                _ => terr(s.pos, "fp-proj index out of range"),
            }
        }
        "fp-pair" => {
            let mut v = Vec::new();
            for a in args {
                v.extend(resolve(a, input)?);
            }
            Ok(v)
        }
        "of" => {
            let [f, g] = args else { return terr(s.pos, "of takes two functor expressions") };
            let inner = resolve(g, input)?;
            resolve(f, &inner)
        }
        _ => terr(s.pos, format!("unknown functor expression {s}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_table_has_all_transformations() {
        let t = GenTable::reference();
        assert_eq!(t.transformation_keys().len(), 18);
        assert_eq!(t.witness_keys(), vec!["WL-1", "WL-2", "WR-1", "WR-2"]);
        assert_eq!(t.decls["D2-12"].cod, Shape::c1());
    }

    #[test]
    fn domain_syntax() {
        let p = |s: &str| parse_domain(&read_all(s).unwrap()[0]).unwrap();
        assert_eq!(p("C0"), Shape::c0());
        assert_eq!(p("(v 3)"), Shape::new(vec![3]));
        assert_eq!(p("(h C2 C1 (v 2))"), Shape::new(vec![1, 0, 2]));
    }
}

#[cfg(test)]
mod builtin_tests {
    use super::*;

    #[test]
    fn bundled_axioms_typecheck() {
        let ax = GenTable::reference().parse_axioms(builtin_axiom_text()).unwrap();
        assert_eq!(ax.len(), 38);
    }
}
