//! Bimodules, intertwiners and the algebra isomorphisms acting on them.

use std::sync::Arc;

use dicat_core::linalg::{kernel, kron, residual, CMatrix, LinearSpace, QuotientPresentation, C64};

use crate::algebra::{AlgIso, Algebra};
use crate::MoritaError;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// How a fused bimodule was formed: the factors and the quotient presentation
/// of `left ⊗ right` it lives in.
#[derive(Debug, Clone, PartialEq)]
pub struct Fusion {
    pub left: Arc<Bimodule>,
    pub right: Arc<Bimodule>,
    pub presentation: QuotientPresentation,
}

/// An `A`-`B` bimodule on `ℂ^dim`.
///
/// `left_action[i]` is the matrix of `m ↦ e_i·m` for the basis `e_i` of `A`,
/// `right_action[j]` the matrix of `m ↦ m·f_j` for the basis `f_j` of `B`.
/// `key` identifies the bimodule: two handles with the same key carry the same
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct Bimodule {
    pub key: String,
    pub left_algebra: Arc<Algebra>,
    pub right_algebra: Arc<Algebra>,
    pub space: LinearSpace,
    pub left_action: Vec<CMatrix>,
    pub right_action: Vec<CMatrix>,
    pub fusion: Option<Arc<Fusion>>,
}

/// Matrix of the action of a general element `x = Σ x_k e_k`.
fn act(gens: &[CMatrix], x: &[C64], dim: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    for (g, &c) in gens.iter().zip(x) {
        if c != zero() {
            m = m.add(&g.scale(c));
        }
    }
    m
}

impl Bimodule {
    /// Validated bimodule from its action matrices.
    pub fn new(
        key: impl Into<String>,
        left_algebra: Arc<Algebra>,
        right_algebra: Arc<Algebra>,
        dim: usize,
        left_action: Vec<CMatrix>,
        right_action: Vec<CMatrix>,
        tol: f64,
    ) -> Result<Self, MoritaError> {
        let b = Bimodule::unchecked(key, left_algebra, right_algebra, dim, left_action, right_action);
        let r = b.defect();
        if !(r <= tol) {
            return Err(MoritaError::InvalidBimodule(b.key, format!("axioms fail with residual {r:.3e}")));
        }
        Ok(b)
    }

    pub fn unchecked(
        key: impl Into<String>,
        left_algebra: Arc<Algebra>,
        right_algebra: Arc<Algebra>,
        dim: usize,
        left_action: Vec<CMatrix>,
        right_action: Vec<CMatrix>,
    ) -> Self {
        let key = key.into();
        Bimodule { space: LinearSpace::labelled(dim, key.clone()), key, left_algebra, right_algebra, left_action, right_action, fusion: None }
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    /// `A` as an `A`-`A` bimodule.
    pub fn regular(a: &Arc<Algebra>) -> Self {
        Bimodule::unchecked(format!("i({})", a.name), a.clone(), a.clone(), a.dim(), a.left_regulars().to_vec(), a.right_regulars().to_vec())
    }

    /// The zero `A`-`B` bimodule.
    pub fn zero(key: impl Into<String>, a: &Arc<Algebra>, b: &Arc<Algebra>) -> Self {
        let l = vec![CMatrix::zeros(0, 0); a.dim()];
        let r = vec![CMatrix::zeros(0, 0); b.dim()];
        Bimodule::unchecked(key, a.clone(), b.clone(), 0, l, r)
    }

    /// `ℂ^n` with both algebras `ℂ` acting by scalars.
    pub fn scalars(key: impl Into<String>, c: &Arc<Algebra>, n: usize) -> Self {
        Bimodule::unchecked(key, c.clone(), c.clone(), n, vec![CMatrix::identity(n)], vec![CMatrix::identity(n)])
    }

    /// Column vectors `ℂ^n` as an `M_n`-`ℂ` bimodule, where `mn` is the matrix
    /// algebra in its matrix-unit basis and `c` is `ℂ`.
    pub fn column(mn: &Arc<Algebra>, c: &Arc<Algebra>) -> Self {
        let n = mn.blocks[0];
        let l = (0..n * n).map(|k| unit_matrix(n, k / n, k % n)).collect();
        Bimodule::unchecked("col", mn.clone(), c.clone(), n, l, vec![CMatrix::identity(n)])
    }

    /// Row vectors `ℂ^n` as a `ℂ`-`M_n` bimodule: `v·E_ij` has `v_i` in slot `j`.
    pub fn row(c: &Arc<Algebra>, mn: &Arc<Algebra>) -> Self {
        let n = mn.blocks[0];
        let r = (0..n * n).map(|k| unit_matrix(n, k % n, k / n)).collect();
        Bimodule::unchecked("row", c.clone(), mn.clone(), n, vec![CMatrix::identity(n)], r)
    }

    /// `ℂ` with the algebras acting through the characters `l` and `r`
    /// (coordinate vectors of the images of the basis elements).
    pub fn character(key: impl Into<String>, a: &Arc<Algebra>, l: &[C64], b: &Arc<Algebra>, r: &[C64]) -> Self {
        let one = |z: C64| CMatrix::new(1, 1, vec![z]).expect("1x1");
        Bimodule::unchecked(key, a.clone(), b.clone(), 1, l.iter().map(|&z| one(z)).collect(), r.iter().map(|&z| one(z)).collect())
    }

    /// Direct sum of two `A`-`B` bimodules.
    pub fn direct_sum(key: impl Into<String>, x: &Bimodule, y: &Bimodule) -> Result<Self, MoritaError> {
        if x.left_algebra.name != y.left_algebra.name || x.right_algebra.name != y.right_algebra.name {
            return Err(MoritaError::Incompatible(format!("{} ⊕ {}: algebras differ", x.key, y.key)));
        }
        let d = x.dim() + y.dim();
        let blk = |a: &CMatrix, b: &CMatrix| {
            CMatrix::from_fn(d, d, |i, j| match (i < x.dim(), j < x.dim()) {
                (true, true) => a.get(i, j),
                (false, false) => b.get(i - x.dim(), j - x.dim()),
                _ => zero(),
            })
        };
        let l = x.left_action.iter().zip(&y.left_action).map(|(a, b)| blk(a, b)).collect();
        let r = x.right_action.iter().zip(&y.right_action).map(|(a, b)| blk(a, b)).collect();
        Ok(Bimodule::unchecked(key, x.left_algebra.clone(), x.right_algebra.clone(), d, l, r))
    }

    /// The same bimodule in the basis `g·e_i` (actions conjugated by `g`).
    pub fn conjugated(&self, key: impl Into<String>, g: &CMatrix) -> Result<Self, MoritaError> {
        let ginv = g.inverse()?;
        let c = |m: &CMatrix| ginv.mul(m).mul(g);
        Ok(Bimodule::unchecked(
            key,
            self.left_algebra.clone(),
            self.right_algebra.clone(),
            self.dim(),
            self.left_action.iter().map(c).collect(),
            self.right_action.iter().map(c).collect(),
        ))
    }

    pub fn left(&self, x: &[C64]) -> CMatrix {
        act(&self.left_action, x, self.dim())
    }

    pub fn right(&self, x: &[C64]) -> CMatrix {
        act(&self.right_action, x, self.dim())
    }

    /// Largest residual among the action axioms, unit actions and the
    /// commutation of the two actions.
    pub fn defect(&self) -> f64 {
        let d = self.dim();
        let (a, b) = (&self.left_algebra, &self.right_algebra);
        if self.left_action.len() != a.dim() || self.right_action.len() != b.dim() {
            return f64::INFINITY;
        }
        if self.left_action.iter().chain(&self.right_action).any(|m| m.shape() != (d, d)) {
            return f64::INFINITY;
        }
        let id = CMatrix::identity(d);
        let mut worst = 0.0f64;
        let mut upd = |r: Result<f64, dicat_core::linalg::LinalgError>| worst = worst.max(r.unwrap_or(f64::INFINITY));
        upd(residual(&self.left(&a.unit), &id));
        upd(residual(&self.right(&b.unit), &id));
        let ea = |i: usize| basis(a.dim(), i);
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                let p = a.product(&ea(i), &ea(j));
                upd(residual(&self.left_action[i].mul(&self.left_action[j]), &self.left(&p)));
            }
        }
        let eb = |i: usize| basis(b.dim(), i);
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                let p = b.product(&eb(i), &eb(j));
                upd(residual(&self.right_action[j].mul(&self.right_action[i]), &self.right(&p)));
            }
        }
        for l in &self.left_action {
            for r in &self.right_action {
                upd(residual(&l.mul(r), &r.mul(l)));
            }
        }
        worst
    }

    /// Pulls the actions back along algebra isomorphisms `a: A → A'` and
    /// `b: B → B'` (this bimodule being `A'`-`B'`); the identity matrix is an
    /// isomorphism from the result to `self` covering `(a, b)`.
    pub fn transport(self: &Arc<Self>, a: &AlgIso, b: &AlgIso, tol: f64) -> Result<(Arc<Bimodule>, BimIso), MoritaError> {
        if a.tgt.name != self.left_algebra.name || b.tgt.name != self.right_algebra.name {
            return Err(MoritaError::Incompatible(format!("transport of {}: isomorphisms end at {} and {}", self.key, a.tgt.name, b.tgt.name)));
        }
        for (x, which) in [(a, "left"), (b, "right")] {
            let r = x.defect();
            if !(r <= tol) {
                return Err(MoritaError::InvalidIso(format!("{which} algebra isomorphism has residual {r:.3e}")));
            }
        }
        let l = (0..a.src.dim()).map(|i| self.left(&a.image(i))).collect();
        let r = (0..b.src.dim()).map(|i| self.right(&b.image(i))).collect();
        let key = format!("{}^[{:016x}]", self.key, iso_digest(&[a, b]));
        let m = Arc::new(Bimodule::unchecked(key, a.src.clone(), b.src.clone(), self.dim(), l, r));
        let u = BimIso { src: m.clone(), tgt: self.clone(), left: a.clone(), right: b.clone(), matrix: CMatrix::identity(self.dim()) };
        Ok((m, u))
    }

    /// Outer tensor product over ℂ: an `(A⊗A')`-`(B⊗B')` bimodule on `M ⊗ M'`.
    pub fn outer(&self, other: &Bimodule, a: &Arc<Algebra>, b: &Arc<Algebra>) -> Bimodule {
        let l = self.left_action.iter().flat_map(|x| other.left_action.iter().map(move |y| kron(x, y).expect("small"))).collect();
        let r = self.right_action.iter().flat_map(|x| other.right_action.iter().map(move |y| kron(x, y).expect("small"))).collect();
        Bimodule::unchecked(format!("({})⊠({})", self.key, other.key), a.clone(), b.clone(), self.dim() * other.dim(), l, r)
    }
}

/// Digest of the matrices of some algebra isomorphisms, used in keys.
fn iso_digest(isos: &[&AlgIso]) -> u64 {
    let mut bytes = Vec::new();
    for x in isos {
        bytes.extend_from_slice(x.src.name.as_bytes());
        for z in x.matrix.data() {
            bytes.extend_from_slice(&z.re.to_bits().to_le_bytes());
            bytes.extend_from_slice(&z.im.to_bits().to_le_bytes());
        }
    }
    dicat_core::engine::probes::fnv1a(&bytes)
}

pub(crate) fn basis(d: usize, i: usize) -> Vec<C64> {
    let mut v = vec![zero(); d];
    v[i] = C64::new(1.0, 0.0);
    v
}

fn unit_matrix(n: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    m.set(i, j, C64::new(1.0, 0.0));
    m
}

/// A linear map between bimodules over the same algebras, expected to
/// intertwine both actions.
#[derive(Debug, Clone, PartialEq)]
pub struct BimoduleMap {
    pub key: String,
    pub source: Arc<Bimodule>,
    pub target: Arc<Bimodule>,
    pub matrix: CMatrix,
}

impl BimoduleMap {
    pub fn new(key: impl Into<String>, source: Arc<Bimodule>, target: Arc<Bimodule>, matrix: CMatrix, tol: f64) -> Result<Self, MoritaError> {
        let m = BimoduleMap { key: key.into(), source, target, matrix };
        let r = m.defect();
        if !(r <= tol) {
            return Err(MoritaError::InvalidMap(m.key, format!("does not intertwine (residual {r:.3e})")));
        }
        Ok(m)
    }

    pub fn identity(m: &Arc<Bimodule>) -> Self {
        BimoduleMap { key: format!("id({})", m.key), source: m.clone(), target: m.clone(), matrix: CMatrix::identity(m.dim()) }
    }

    pub fn zero(key: impl Into<String>, m: &Arc<Bimodule>, n: &Arc<Bimodule>) -> Self {
        BimoduleMap { key: key.into(), source: m.clone(), target: n.clone(), matrix: CMatrix::zeros(n.dim(), m.dim()) }
    }

    /// Residual of the intertwining equations (infinite for mismatched types).
    pub fn defect(&self) -> f64 {
        let (m, n) = (&self.source, &self.target);
        if m.left_algebra.name != n.left_algebra.name || m.right_algebra.name != n.right_algebra.name {
            return f64::INFINITY;
        }
        if self.matrix.shape() != (n.dim(), m.dim()) {
            return f64::INFINITY;
        }
        let f = &self.matrix;
        let mut worst = 0.0f64;
        for (lm, ln) in m.left_action.iter().zip(&n.left_action).chain(m.right_action.iter().zip(&n.right_action)) {
            worst = worst.max(residual(&f.mul(lm), &ln.mul(f)).unwrap_or(f64::INFINITY));
        }
        worst
    }
}

/// Basis of the intertwiners `M → N` (as `dim N × dim M` matrices).
pub fn hom_space(m: &Bimodule, n: &Bimodule, tol: f64) -> Result<Vec<CMatrix>, MoritaError> {
    if m.left_algebra.name != n.left_algebra.name || m.right_algebra.name != n.right_algebra.name {
        return Err(MoritaError::Incompatible(format!("hom({}, {}): algebras differ", m.key, n.key)));
    }
    let (dm, dn) = (m.dim(), n.dim());
    if dm == 0 || dn == 0 {
        return Ok(Vec::new());
    }
    let im = CMatrix::identity(dm);
    let inn = CMatrix::identity(dn);
    // row-major vec: vec(X g) = (I ⊗ gᵀ) vec X, vec(h X) = (h ⊗ I) vec X
    let mut rows = Vec::new();
    for (gm, gn) in m.left_action.iter().zip(&n.left_action).chain(m.right_action.iter().zip(&n.right_action)) {
        rows.push(kron(gn, &im)?.sub(&kron(&inn, &gm.transpose())?));
    }
    let k = kernel(&CMatrix::vstack(dn * dm, &rows)?, tol);
    Ok((0..k.cols()).map(|c| CMatrix::from_fn(dn, dm, |i, j| k.get(i * dm + j, c))).collect())
}

/// An isomorphism of bimodules covering a pair of algebra isomorphisms:
/// `u(x·m·y) = left(x)·u(m)·right(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BimIso {
    pub src: Arc<Bimodule>,
    pub tgt: Arc<Bimodule>,
    pub left: AlgIso,
    pub right: AlgIso,
    pub matrix: CMatrix,
}

impl BimIso {
    pub fn identity(m: &Arc<Bimodule>) -> Self {
        BimIso {
            src: m.clone(),
            tgt: m.clone(),
            left: AlgIso::identity(&m.left_algebra),
            right: AlgIso::identity(&m.right_algebra),
            matrix: CMatrix::identity(m.dim()),
        }
    }

    /// An automorphism over the identity algebra isomorphisms.
    pub fn auto(m: &Arc<Bimodule>, matrix: CMatrix) -> Self {
        BimIso { matrix, ..BimIso::identity(m) }
    }

    /// Residual of the covering equations, invertibility and the ends of the
    /// algebra isomorphisms.
    pub fn defect(&self) -> f64 {
        let (m, n) = (&self.src, &self.tgt);
        let (a, b) = (&self.left, &self.right);
        if a.src.name != m.left_algebra.name || a.tgt.name != n.left_algebra.name || b.src.name != m.right_algebra.name || b.tgt.name != n.right_algebra.name {
            return f64::INFINITY;
        }
        if self.matrix.shape() != (n.dim(), m.dim()) || m.dim() != n.dim() {
            return f64::INFINITY;
        }
        let u = &self.matrix;
        let mut worst = a.defect().max(b.defect());
        for (i, lm) in m.left_action.iter().enumerate() {
            worst = worst.max(residual(&u.mul(lm), &n.left(&a.image(i)).mul(u)).unwrap_or(f64::INFINITY));
        }
        for (i, rm) in m.right_action.iter().enumerate() {
            worst = worst.max(residual(&u.mul(rm), &n.right(&b.image(i)).mul(u)).unwrap_or(f64::INFINITY));
        }
        if m.dim() > 0 && u.inverse().is_err() {
            worst = f64::INFINITY;
        }
        worst
    }

    pub fn then(&self, g: &BimIso) -> Option<BimIso> {
        if self.tgt.key != g.src.key {
            return None;
        }
        Some(BimIso {
            src: self.src.clone(),
            tgt: g.tgt.clone(),
            left: self.left.then(&g.left)?,
            right: self.right.then(&g.right)?,
            matrix: g.matrix.mul(&self.matrix),
        })
    }

    pub fn inverse(&self) -> Option<BimIso> {
        Some(BimIso {
            src: self.tgt.clone(),
            tgt: self.src.clone(),
            left: self.left.inverse()?,
            right: self.right.inverse()?,
            matrix: self.matrix.inverse().ok()?,
        })
    }

    pub fn scaled(&self, k: C64) -> BimIso {
        BimIso { matrix: self.matrix.scale(k), ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn algs() -> (Arc<Algebra>, Arc<Algebra>, Arc<Algebra>) {
        (Arc::new(Algebra::complex()), Arc::new(Algebra::complex2()), Arc::new(Algebra::m2()))
    }

    #[test]
    fn standard_bimodules_validate() {
        let (c, cc, m2) = algs();
        for b in [Bimodule::regular(&c), Bimodule::regular(&cc), Bimodule::regular(&m2), Bimodule::column(&m2, &c), Bimodule::row(&c, &m2)] {
            assert!(b.defect() < 1e-14, "{}", b.key);
        }
        assert_eq!(Bimodule::zero("0", &c, &cc).defect(), 0.0);
    }

    #[test]
    fn wrong_actions_are_rejected() {
        let (c, _, m2) = algs();
        let col = Bimodule::column(&m2, &c);
        let r = Bimodule::new("bad", m2.clone(), c.clone(), 2, col.left_action.iter().map(|m| m.transpose()).collect(), col.right_action.clone(), 1e-9);
        assert!(matches!(r, Err(MoritaError::InvalidBimodule(..))));
    }

    #[test]
    fn hom_of_column_is_scalars() {
        let (c, _, m2) = algs();
        let col = Bimodule::column(&m2, &c);
        assert_eq!(hom_space(&col, &col, 1e-9).unwrap().len(), 1);
        let r = Bimodule::regular(&m2);
        assert_eq!(hom_space(&r, &r, 1e-9).unwrap().len(), 1);
        let cc = Arc::new(Algebra::complex2());
        assert_eq!(hom_space(&Bimodule::regular(&cc), &Bimodule::regular(&cc), 1e-9).unwrap().len(), 2);
    }

    #[test]
    fn conjugated_bimodule_is_isomorphic() {
        let (c, _, m2) = algs();
        let col = Arc::new(Bimodule::column(&m2, &c));
        let g = CMatrix::from_real(2, 2, &[2.0, 1.0, 1.0, 1.0]).unwrap();
        let x = Arc::new(col.conjugated("col'", &g).unwrap());
        assert!(x.defect() < 1e-12);
        let u = BimoduleMap { key: "g".into(), source: x.clone(), target: col.clone(), matrix: g.clone() };
        assert!(u.defect() < 1e-12);
    }
}
