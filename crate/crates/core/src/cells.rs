//! Symbolic cells over generic pasting shapes.
//!
//! A shape is a horizontal row of columns. A column of height 0 is a single
//! 1-cell; a column of height `h ≥ 1` is a vertical stack of `h` 2-cells. The
//! empty shape is a single 0-cell. Terms are built from the canonical variables
//! of a shape with the structure operations, and carry enough information to
//! compute their own sources and targets.

use std::collections::HashMap;
use std::fmt;

/// The structure operations and the two lower identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    I,
    M,
    Iv,
    Mv,
    Wr,
    Wl,
    Il,
    Ir,
    IlInv,
    IrInv,
}

impl Op {
    pub const ALL: [Op; 10] = [Op::I, Op::M, Op::Iv, Op::Mv, Op::Wr, Op::Wl, Op::Il, Op::Ir, Op::IlInv, Op::IrInv];

    pub fn key(self) -> &'static str {
        match self {
            Op::I => "D1-1",
            Op::M => "D1-2",
            Op::Iv => "D1-3",
            Op::Mv => "D1-4",
            Op::Wr => "D1-5",
            Op::Wl => "D1-6",
            Op::Il => "D1-7",
            Op::Ir => "D1-8",
            Op::IlInv => "D1-7-",
            Op::IrInv => "D1-8-",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::I => "i",
            Op::M => "m",
            Op::Iv => "i_v",
            Op::Mv => "m_v",
            Op::Wr => "w_r",
            Op::Wl => "w_l",
            Op::Il => "i_l",
            Op::Ir => "i_r",
            Op::IlInv => "lower i_l",
            Op::IrInv => "lower i_r",
        }
    }

    pub fn from_key(k: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.key() == k || o.key().trim_start_matches("D1-") == k)
    }

    /// Levels of the arguments.
    pub fn arg_levels(self) -> &'static [u8] {
        match self {
            Op::I => &[0],
            Op::M => &[1, 1],
            Op::Iv | Op::Il | Op::Ir | Op::IlInv | Op::IrInv => &[1],
            Op::Mv => &[2, 2],
            Op::Wr => &[2, 1],
            Op::Wl => &[1, 2],
        }
    }

    pub fn level(self) -> u8 {
        match self {
            Op::I | Op::M => 1,
            _ => 2,
        }
    }

    /// Domain shape of the operation.
    pub fn domain(self) -> Shape {
        match self {
            Op::I => Shape::c0(),
            Op::M => Shape::new(vec![0, 0]),
            Op::Iv | Op::Il | Op::Ir | Op::IlInv | Op::IrInv => Shape::c1(),
            Op::Mv => Shape::new(vec![2]),
            Op::Wr => Shape::new(vec![1, 0]),
            Op::Wl => Shape::new(vec![0, 1]),
        }
    }
}

/// Column heights; see the module docs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Shape {
    pub cols: Vec<usize>,
}

impl Shape {
    pub fn new(cols: Vec<usize>) -> Self {
        Shape { cols }
    }
    pub fn c0() -> Self {
        Shape { cols: vec![] }
    }
    pub fn c1() -> Self {
        Shape { cols: vec![0] }
    }
    pub fn c2() -> Self {
        Shape { cols: vec![1] }
    }

    /// Single-cell shape at a level.
    pub fn level(l: u8) -> Self {
        match l {
            0 => Self::c0(),
            1 => Self::c1(),
            _ => Self::c2(),
        }
    }

    /// The level of a single-cell shape.
    pub fn as_level(&self) -> Option<u8> {
        match self.cols.as_slice() {
            [] => Some(0),
            [0] => Some(1),
            [1] => Some(2),
            _ => None,
        }
    }

    /// Primary variables, in order: the 0-cell for the empty shape, otherwise
    /// each column's 1-cell or its 2-cells top to bottom.
    pub fn prims(&self) -> Vec<Term> {
        if self.cols.is_empty() {
            return vec![Term::Obj(0)];
        }
        let mut v = Vec::new();
        for (j, &h) in self.cols.iter().enumerate() {
            if h == 0 {
                v.push(Term::Edge(j, 0));
            } else {
                v.extend((1..=h).map(|i| Term::Face(j, i)));
            }
        }
        v
    }

    pub fn prim_levels(&self) -> Vec<u8> {
        if self.cols.is_empty() {
            return vec![0];
        }
        let mut v = Vec::new();
        for &h in &self.cols {
            if h == 0 {
                v.push(1)
            } else {
                v.extend(std::iter::repeat(2).take(h))
            }
        }
        v
    }

    pub fn n_prims(&self) -> usize {
        if self.cols.is_empty() {
            1
        } else {
            self.cols.iter().map(|&h| h.max(1)).sum()
        }
    }

    /// Starting index in `prims()` of each column.
    pub fn col_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.cols.len());
        let mut k = 0;
        for &h in &self.cols {
            off.push(k);
            k += h.max(1);
        }
        off
    }

    /// Checks that a tuple of terms is a generic object of this shape.
    pub fn check_tuple(&self, tuple: &[Term]) -> Result<(), String> {
        if tuple.len() != self.n_prims() {
            return Err(format!("{} expects {} cells, got {}", self, self.n_prims(), tuple.len()));
        }
        for (t, l) in tuple.iter().zip(self.prim_levels()) {
            let tl = t.level();
            if tl != l {
                return Err(format!("cell {t} has level {tl}, shape {self} needs {l}"));
            }
        }
        if self.cols.is_empty() {
            return Ok(());
        }
        let off = self.col_offsets();
        let mut prev_t0: Option<Term> = None;
        for (j, &h) in self.cols.iter().enumerate() {
            let cells = &tuple[off[j]..off[j] + h.max(1)];
            for w in cells.windows(2) {
                let (a, b) = (w[0].t(), w[1].s());
                if a != b {
                    return Err(format!("vertical seam in {self}: {a} ≠ {b}"));
                }
            }
            let s0 = cells[0].s0();
            if let Some(p) = &prev_t0 {
                if *p != s0 {
                    return Err(format!("horizontal seam in {self}: {p} ≠ {s0}"));
                }
            }
            prev_t0 = Some(cells[0].t0());
        }
        Ok(())
    }

    /// Canonical-variable assignment induced by a tuple of this shape.
    pub fn expand(&self, tuple: &[Term]) -> HashMap<Term, Term> {
        let mut m = HashMap::new();
        if self.cols.is_empty() {
            m.insert(Term::Obj(0), tuple[0].clone());
            return m;
        }
        let off = self.col_offsets();
        for (j, &h) in self.cols.iter().enumerate() {
            if h == 0 {
                let f = &tuple[off[j]];
                m.insert(Term::Edge(j, 0), f.clone());
                m.insert(Term::Obj(j), f.s());
                m.insert(Term::Obj(j + 1), f.t());
            } else {
                for i in 1..=h {
                    let a = &tuple[off[j] + i - 1];
                    m.insert(Term::Face(j, i), a.clone());
                    m.insert(Term::Edge(j, i - 1), a.s());
                    if i == h {
                        m.insert(Term::Edge(j, i), a.t());
                    }
                }
                let a = &tuple[off[j]];
                m.insert(Term::Obj(j), a.s0());
                m.insert(Term::Obj(j + 1), a.t0());
            }
        }
        m
    }

    /// Infers a shape for a tuple, preferring vertical stacking of adjacent 2-cells.
    pub fn infer(tuple: &[Term]) -> Result<Shape, String> {
        if tuple.is_empty() {
            return Err("empty tuple".into());
        }
        if tuple.len() == 1 {
            return Ok(Shape::level(tuple[0].level()));
        }
        let mut cols: Vec<usize> = Vec::new();
        for (k, t) in tuple.iter().enumerate() {
            match t.level() {
                0 => return Err(format!("0-cell {t} cannot appear in a tuple")),
                1 => cols.push(0),
                _ => {
                    let stack = k > 0 && tuple[k - 1].level() == 2 && tuple[k - 1].t() == t.s();
                    match cols.last_mut() {
                        Some(h) if stack && *h > 0 => *h += 1,
                        _ => cols.push(1),
                    }
                }
            }
        }
        let s = Shape::new(cols);
        s.check_tuple(tuple)?;
        Ok(s)
    }

    /// Horizontal concatenation.
    pub fn hcat(parts: &[Shape]) -> Shape {
        Shape::new(parts.iter().flat_map(|p| p.cols.iter().copied()).collect())
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let col = |h: usize| match h {
            0 => "C1".to_string(),
            1 => "C2".to_string(),
            n => format!("(v {n})"),
        };
        match self.cols.as_slice() {
            [] => write!(f, "C0"),
            [0] => write!(f, "C1"),
            [1] => write!(f, "C2"),
            [h] => write!(f, "(v {h})"),
            cs => write!(f, "(h {})", cs.iter().map(|&h| col(h)).collect::<Vec<_>>().join(" ")),
        }
    }
}

/// A cell term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    /// 0-cell `j` (left boundary of column `j`).
    Obj(usize),
    /// 1-cell `i` (from the top) of column `j`.
    Edge(usize, usize),
    /// 2-cell `i` (1-based from the top) of column `j`.
    Face(usize, usize),
    Op(Op, Vec<Term>),
}

impl Term {
    pub fn op(o: Op, args: Vec<Term>) -> Term {
        Term::Op(o, args)
    }

    pub fn is_var(&self) -> bool {
        !matches!(self, Term::Op(..))
    }

    pub fn level(&self) -> u8 {
        match self {
            Term::Obj(_) => 0,
            Term::Edge(..) => 1,
            Term::Face(..) => 2,
            Term::Op(o, _) => o.level(),
        }
    }

    /// Source one level down. Panics on 0-cells.
    pub fn s(&self) -> Term {
        match self {
            Term::Obj(_) => panic!("0-cells have no source"),
            Term::Edge(j, _) => Term::Obj(*j),
            Term::Face(j, i) => Term::Edge(*j, i - 1),
            Term::Op(o, a) => match o {
                Op::I => a[0].clone(),
                Op::M => a[0].s(),
                Op::Iv => a[0].clone(),
                Op::Mv => a[0].s(),
                Op::Wr => Term::op(Op::M, vec![a[0].s(), a[1].clone()]),
                Op::Wl => Term::op(Op::M, vec![a[0].clone(), a[1].s()]),
                Op::Il => Term::op(Op::M, vec![Term::op(Op::I, vec![a[0].s()]), a[0].clone()]),
                Op::Ir => Term::op(Op::M, vec![a[0].clone(), Term::op(Op::I, vec![a[0].t()])]),
                Op::IlInv | Op::IrInv => a[0].clone(),
            },
        }
    }

    /// Target one level down. Panics on 0-cells.
    pub fn t(&self) -> Term {
        match self {
            Term::Obj(_) => panic!("0-cells have no target"),
            Term::Edge(j, _) => Term::Obj(j + 1),
            Term::Face(j, i) => Term::Edge(*j, *i),
            Term::Op(o, a) => match o {
                Op::I => a[0].clone(),
                Op::M => a[1].t(),
                Op::Iv => a[0].clone(),
                Op::Mv => a[1].t(),
                Op::Wr => Term::op(Op::M, vec![a[0].t(), a[1].clone()]),
                Op::Wl => Term::op(Op::M, vec![a[0].clone(), a[1].t()]),
                Op::Il | Op::Ir => a[0].clone(),
                Op::IlInv => Term::op(Op::M, vec![Term::op(Op::I, vec![a[0].s()]), a[0].clone()]),
                Op::IrInv => Term::op(Op::M, vec![a[0].clone(), Term::op(Op::I, vec![a[0].t()])]),
            },
        }
    }

    /// Source 0-cell.
    pub fn s0(&self) -> Term {
        match self.level() {
            0 => self.clone(),
            1 => self.s(),
            _ => self.s().s(),
        }
    }

    /// Target 0-cell.
    pub fn t0(&self) -> Term {
        match self.level() {
            0 => self.clone(),
            1 => self.t(),
            _ => self.s().t(),
        }
    }

    /// Checks argument levels and composability throughout the term.
    pub fn check(&self) -> Result<(), String> {
        let Term::Op(o, a) = self else { return Ok(()) };
        let lv = o.arg_levels();
        if a.len() != lv.len() {
            return Err(format!("{} takes {} arguments, got {}", o.name(), lv.len(), a.len()));
        }
        for (x, &l) in a.iter().zip(lv) {
            x.check()?;
            if x.level() != l {
                return Err(format!("{} expects a level-{} argument, got {x}", o.name(), l));
            }
        }
        let need = |p: Term, q: Term| {
            if p == q {
                Ok(())
            } else {
                Err(format!("{} is not composable: {p} ≠ {q}", o.name()))
            }
        };
        match o {
            Op::M => need(a[0].t(), a[1].s()),
            Op::Mv => need(a[0].t(), a[1].s()),
            Op::Wr => need(a[0].t0(), a[1].s()),
            Op::Wl => need(a[0].t(), a[1].s0()),
            _ => Ok(()),
        }
    }

    /// Replaces variables using `m`; unmapped variables are kept.
    pub fn subst(&self, m: &HashMap<Term, Term>) -> Term {
        match self {
            Term::Op(o, a) => Term::Op(*o, a.iter().map(|x| x.subst(m)).collect()),
            v => m.get(v).cloned().unwrap_or_else(|| v.clone()),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Obj(j) => write!(f, "a{j}"),
            Term::Edge(j, i) => write!(f, "f{j}.{i}"),
            Term::Face(j, i) => write!(f, "α{j}.{i}"),
            Term::Op(o, a) => {
                write!(f, "{}(", o.name())?;
                for (k, x) in a.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn globular_identities() {
        let a = Term::Face(0, 1);
        let w = Term::op(Op::Wr, vec![a.clone(), Term::Edge(1, 0)]);
        assert!(w.check().is_ok());
        assert_eq!(w.s().s(), w.t().s());
        assert_eq!(w.s().t(), Term::Obj(2));
    }

    #[test]
    fn shape_roundtrip() {
        let s = Shape::new(vec![2, 0]);
        let p = s.prims();
        assert!(s.check_tuple(&p).is_ok());
        assert_eq!(Shape::infer(&p).unwrap(), s);
        assert_eq!(s.to_string(), "(h (v 2) C1)");
    }
}
