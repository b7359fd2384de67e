//! Evaluation of typed diagram expressions against an oracle.

use std::collections::HashMap;

use crate::cells::{Shape, Term};
use crate::engine::expr::{Expr, GenTable};
use crate::oracle::{InstanceOracle, OracleError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("cells do not compose: {0}")]
    Seam(String),
    #[error("{0}")]
    Shape(String),
}

pub type EResult<T> = Result<T, EvalError>;

/// A value: one morphism per cell of the codomain shape, with its level.
pub type Val<M> = Vec<(u8, M)>;

pub struct Evaluator<'a, O: InstanceOracle> {
    pub oracle: &'a O,
    pub table: &'a GenTable,
    pub tol: f64,
}

impl<'a, O: InstanceOracle> Evaluator<'a, O> {
    pub fn new(oracle: &'a O, table: &'a GenTable, tol: f64) -> Self {
        Evaluator { oracle, table, tol }
    }

    /// Assigns objects to every canonical variable of `shape` from its primary cells.
    pub fn obj_env(&self, shape: &Shape, prims: &[O::Obj]) -> EResult<HashMap<Term, O::Obj>> {
        let o = self.oracle;
        if prims.len() != shape.n_prims() {
            return Err(EvalError::Shape(format!("{shape} needs {} cells, got {}", shape.n_prims(), prims.len())));
        }
        let mut m = HashMap::new();
        if shape.cols.is_empty() {
            m.insert(Term::Obj(0), prims[0].clone());
            return Ok(m);
        }
        let off = shape.col_offsets();
        let mut right: Option<O::Obj> = None;
        for (j, &h) in shape.cols.iter().enumerate() {
            let (a, b) = if h == 0 {
                let f = &prims[off[j]];
                m.insert(Term::Edge(j, 0), f.clone());
                o.obj_boundary(1, f)
            } else {
                let mut prev_t: Option<O::Obj> = None;
                for i in 1..=h {
                    let x = &prims[off[j] + i - 1];
                    let (s, t) = o.obj_boundary(2, x);
                    if let Some(p) = &prev_t {
                        if *p != s {
                            return Err(EvalError::Seam(format!("vertical seam {j}.{i} in {shape}")));
                        }
                    }
                    m.insert(Term::Face(j, i), x.clone());
                    m.insert(Term::Edge(j, i - 1), s);
                    m.insert(Term::Edge(j, i), t.clone());
                    prev_t = Some(t);
                }
                o.obj_boundary(1, &m[&Term::Edge(j, 0)])
            };
            if let Some(r) = &right {
                if *r != a {
                    return Err(EvalError::Seam(format!("horizontal seam at column {j} in {shape}")));
                }
            }
            m.insert(Term::Obj(j), a);
            m.insert(Term::Obj(j + 1), b.clone());
            right = Some(b);
        }
        Ok(m)
    }

    /// Same as [`obj_env`](Self::obj_env) for morphisms; seams are compared by residual.
    pub fn mor_env(&self, shape: &Shape, prims: &[O::Mor]) -> EResult<HashMap<Term, O::Mor>> {
        let o = self.oracle;
        let check = |level: u8, a: &O::Mor, b: &O::Mor, what: String| -> EResult<()> {
            let r = o.mor_residual(level, a, b);
            if r.is_finite() && r <= self.tol {
                Ok(())
            } else {
                Err(EvalError::Seam(format!("{what} (residual {r:.3e})")))
            }
        };
        let mut m = HashMap::new();
        if shape.cols.is_empty() {
            m.insert(Term::Obj(0), prims[0].clone());
            return Ok(m);
        }
        let off = shape.col_offsets();
        let mut right: Option<O::Mor> = None;
        for (j, &h) in shape.cols.iter().enumerate() {
            let (a, b) = if h == 0 {
                let f = &prims[off[j]];
                m.insert(Term::Edge(j, 0), f.clone());
                o.mor_boundary(1, f)
            } else {
                let mut prev_t: Option<O::Mor> = None;
                for i in 1..=h {
                    let x = &prims[off[j] + i - 1];
                    let (s, t) = o.mor_boundary(2, x);
                    if let Some(p) = &prev_t {
                        check(1, p, &s, format!("vertical seam {j}.{i} in {shape}"))?;
                    }
                    m.insert(Term::Face(j, i), x.clone());
                    m.insert(Term::Edge(j, i - 1), s);
                    m.insert(Term::Edge(j, i), t.clone());
                    prev_t = Some(t);
                }
                o.mor_boundary(1, &m[&Term::Edge(j, 0)])
            };
            if let Some(r) = &right {
                check(0, r, &a, format!("horizontal seam at column {j} in {shape}"))?;
            }
            m.insert(Term::Obj(j), a);
            m.insert(Term::Obj(j + 1), b.clone());
            right = Some(b);
        }
        Ok(m)
    }

    pub fn term_obj(&self, ctx: &mut O::Ctx, t: &Term, env: &HashMap<Term, O::Obj>) -> EResult<O::Obj> {
        match t {
            Term::Op(op, args) => {
                let a = args.iter().map(|x| self.term_obj(ctx, x, env)).collect::<EResult<Vec<_>>>()?;
                Ok(self.oracle.apply_obj(ctx, *op, &a)?)
            }
            v => env.get(v).cloned().ok_or_else(|| EvalError::Shape(format!("unbound cell {v}"))),
        }
    }

    pub fn term_mor(&self, ctx: &mut O::Ctx, t: &Term, env: &HashMap<Term, O::Mor>) -> EResult<O::Mor> {
        match t {
            Term::Op(op, args) => {
                let a = args.iter().map(|x| self.term_mor(ctx, x, env)).collect::<EResult<Vec<_>>>()?;
                Ok(self.oracle.apply_mor(ctx, *op, &a)?)
            }
            v => env.get(v).cloned().ok_or_else(|| EvalError::Shape(format!("unbound cell {v}"))),
        }
    }

    /// Evaluates `e`, typed on `shape`, at the objects `env`.
    pub fn eval(&self, ctx: &mut O::Ctx, e: &Expr, shape: &Shape, env: &HashMap<Term, O::Obj>) -> EResult<Val<O::Mor>> {
        let o = self.oracle;
        match e {
            Expr::Gen(k) => {
                let d = self.table.decls.get(k).ok_or_else(|| EvalError::Shape(format!("unknown generator {k}")))?;
                let args = shape.prims().iter().map(|p| env[p].clone()).collect::<Vec<_>>();
                let c = o.component(ctx, k, &args)?;
                Ok(vec![(d.cod.as_level().unwrap_or(2), c)])
            }
            Expr::Inv(x) => {
                let v = self.eval(ctx, x, shape, env)?;
                v.into_iter().map(|(l, m)| Ok((l, o.inverse(l, &m)?))).collect()
            }
            Expr::Vc(parts) => {
                let mut acc = self.eval(ctx, &parts[0], shape, env)?;
                for p in &parts[1..] {
                    let next = self.eval(ctx, p, shape, env)?;
                    if next.len() != acc.len() {
                        return Err(EvalError::Shape("vertical composite of different widths".into()));
                    }
                    for ((l, a), (_, b)) in acc.iter_mut().zip(next) {
                        *a = o.compose(*l, a, &b)?;
                    }
                }
                Ok(acc)
            }
            Expr::Wl { f, inner, e } => {
                let v = self.eval(ctx, e, shape, env)?;
                let mors: Vec<O::Mor> = v.into_iter().map(|(_, m)| m).collect();
                let menv = self.mor_env(inner, &mors)?;
                f.iter().map(|t| Ok((t.level(), self.term_mor(ctx, t, &menv)?))).collect()
            }
            Expr::Wr { e, arg, inner } => {
                let objs = arg.iter().map(|t| self.term_obj(ctx, t, env)).collect::<EResult<Vec<_>>>()?;
                let ienv = self.obj_env(inner, &objs)?;
                self.eval(ctx, e, inner, &ienv)
            }
            Expr::Idn(ts) => ts
                .iter()
                .map(|t| {
                    let x = self.term_obj(ctx, t, env)?;
                    Ok((t.level(), o.identity(t.level(), &x)))
                })
                .collect(),
            Expr::Pair(parts) | Expr::VPair(parts) => {
                let mut out = Vec::new();
                for p in parts {
                    out.extend(self.eval(ctx, p, shape, env)?);
                }
                Ok(out)
            }
        }
    }

    /// Largest residual between two values, including their endpoints.
    pub fn compare(&self, a: &Val<O::Mor>, b: &Val<O::Mor>) -> f64 {
        if a.len() != b.len() {
            return f64::INFINITY;
        }
        let mut worst = 0.0f64;
        for ((l, x), (_, y)) in a.iter().zip(b) {
            let (xd, xc) = self.oracle.mor_ends(*l, x);
            let (yd, yc) = self.oracle.mor_ends(*l, y);
            if xd != yd || xc != yc {
                return f64::INFINITY;
            }
            let r = self.oracle.mor_residual(*l, x, y);
            worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
        }
        worst
    }
}
