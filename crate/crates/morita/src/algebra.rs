//! Finite-dimensional semisimple algebras given by structure constants, with a
//! block-decomposition witness.

use std::sync::Arc;

use dicat_core::linalg::{kron, residual, CMatrix, LinearSpace, C64};

use crate::MoritaError;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// An associative unital algebra on `ℂ^dim`.
///
/// `mult` has shape `dim × dim²`: column `i·dim + j` holds the coordinates of
/// `e_i e_j` (the Kronecker convention of `linalg::kron`). Semisimplicity is
/// not detected but witnessed: `witness` maps coordinates in this basis to
/// coordinates in the standard basis of `⊕ M_{n_b}` (matrix units
/// `E^b_{ij}`, blocks in order, row-major inside a block) and must be an
/// algebra isomorphism.
#[derive(Debug, Clone, PartialEq)]
pub struct Algebra {
    pub name: String,
    pub space: LinearSpace,
    pub mult: CMatrix,
    pub unit: Vec<C64>,
    pub blocks: Vec<usize>,
    pub witness: CMatrix,
    lreg: Vec<CMatrix>,
    rreg: Vec<CMatrix>,
}

/// Structure constants and unit of the block algebra `⊕ M_{n_b}` in its
/// matrix-unit basis.
pub fn block_table(blocks: &[usize]) -> (CMatrix, Vec<C64>) {
    let d: usize = blocks.iter().map(|n| n * n).sum();
    let mut mult = CMatrix::zeros(d, d * d);
    let mut unit = vec![C64::new(0.0, 0.0); d];
    let mut off = 0;
    for &n in blocks {
        let idx = |i: usize, j: usize| off + i * n + j;
        for i in 0..n {
            unit[idx(i, i)] = one();
            for j in 0..n {
                for l in 0..n {
                    mult.set(idx(i, l), idx(i, j) * d + idx(j, l), one());
                }
            }
        }
        off += n * n;
    }
    (mult, unit)
}

impl Algebra {
    /// Validated algebra from a table, its unit and a semisimplicity witness.
    pub fn new(name: impl Into<String>, mult: CMatrix, unit: Vec<C64>, blocks: Vec<usize>, witness: CMatrix, tol: f64) -> Result<Self, MoritaError> {
        let name = name.into();
        let d = unit.len();
        let bad = |m: String| MoritaError::InvalidAlgebra(name.clone(), m);
        if mult.shape() != (d, d * d) {
            return Err(bad(format!("table has shape {:?}, expected {}x{}", mult.shape(), d, d * d)));
        }
        if witness.shape() != (d, d) {
            return Err(bad(format!("witness has shape {:?}, expected {d}x{d}", witness.shape())));
        }
        if blocks.iter().map(|n| n * n).sum::<usize>() != d || blocks.iter().any(|&n| n == 0) {
            return Err(bad(format!("block sizes {blocks:?} do not give dimension {d}")));
        }
        let col = |k: usize| CMatrix::from_fn(d, d, |r, j| mult.get(r, k * d + j));
        let lreg: Vec<CMatrix> = (0..d).map(col).collect();
        let rreg: Vec<CMatrix> = (0..d).map(|k| CMatrix::from_fn(d, d, |r, j| mult.get(r, j * d + k))).collect();
        let a = Algebra { name: name.clone(), space: LinearSpace::labelled(d, name.clone()), mult, unit, blocks, witness, lreg, rreg };
        let r = a.defect()?;
        if !(r <= tol) {
            return Err(bad(format!("axioms fail with residual {r:.3e}")));
        }
        Ok(a)
    }

    /// The block algebra `⊕ M_{n_b}` in its matrix-unit basis.
    pub fn blocks(name: impl Into<String>, blocks: &[usize]) -> Self {
        let (mult, unit) = block_table(blocks);
        let d = unit.len();
        Algebra::new(name, mult, unit, blocks.to_vec(), CMatrix::identity(d), 1e-12).expect("block algebras are valid")
    }

    /// The block algebra re-expressed in the basis whose coordinates map to
    /// block coordinates by `witness`.
    pub fn conjugated(name: impl Into<String>, blocks: &[usize], witness: CMatrix, tol: f64) -> Result<Self, MoritaError> {
        let name = name.into();
        let (bm, bu) = block_table(blocks);
        let winv = witness.inverse().map_err(|e| MoritaError::InvalidAlgebra(name.clone(), format!("witness: {e}")))?;
        let mult = winv.mul(&bm).mul(&kron(&witness, &witness)?);
        let unit = winv.mul(&CMatrix::column(&bu)).col_vec(0);
        Algebra::new(name, mult, unit, blocks.to_vec(), witness, tol)
    }

    pub fn complex() -> Self {
        Self::blocks("C", &[1])
    }
    pub fn complex2() -> Self {
        Self::blocks("CC", &[1, 1])
    }
    pub fn m2() -> Self {
        Self::blocks("M2", &[2])
    }
    pub fn cm2() -> Self {
        Self::blocks("CM2", &[1, 2])
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    /// Largest residual among associativity, the unit laws and the witness.
    pub fn defect(&self) -> Result<f64, MoritaError> {
        let d = self.dim();
        let id = CMatrix::identity(d);
        let u = CMatrix::column(&self.unit);
        let m = &self.mult;
        let assoc = residual(&m.mul(&kron(m, &id)?), &m.mul(&kron(&id, m)?))?;
        let lu = residual(&m.mul(&kron(&u, &id)?), &id)?;
        let ru = residual(&m.mul(&kron(&id, &u)?), &id)?;
        let (bm, bu) = block_table(&self.blocks);
        let w = &self.witness;
        let hom = residual(&w.mul(m), &bm.mul(&kron(w, w)?))?;
        let unit = residual(&w.mul(&u), &CMatrix::column(&bu))?;
        let inv = match w.inverse() {
            Ok(_) => 0.0,
            Err(_) => f64::INFINITY,
        };
        Ok([assoc, lu, ru, hom, unit, inv].into_iter().fold(0.0, f64::max))
    }

    /// Matrix of `y ↦ e_i y`.
    pub fn left_regular(&self, i: usize) -> &CMatrix {
        &self.lreg[i]
    }
    /// Matrix of `y ↦ y e_i`.
    pub fn right_regular(&self, i: usize) -> &CMatrix {
        &self.rreg[i]
    }
    pub fn left_regulars(&self) -> &[CMatrix] {
        &self.lreg
    }
    pub fn right_regulars(&self) -> &[CMatrix] {
        &self.rreg
    }

    pub fn product(&self, x: &[C64], y: &[C64]) -> Vec<C64> {
        let xy = kron(&CMatrix::column(x), &CMatrix::column(y)).expect("small");
        self.mult.mul(&xy).col_vec(0)
    }

    /// Coordinates of the unit of block `b`, a central idempotent.
    pub fn block_unit(&self, b: usize) -> Vec<C64> {
        let d = self.dim();
        let mut v = vec![C64::new(0.0, 0.0); d];
        let off: usize = self.blocks[..b].iter().map(|n| n * n).sum();
        let n = self.blocks[b];
        for i in 0..n {
            v[off + i * n + i] = one();
        }
        let winv = self.witness.inverse().expect("validated witness");
        winv.mul(&CMatrix::column(&v)).col_vec(0)
    }

    /// Tensor product over ℂ; the witness is the reshuffle onto the blocks
    /// `M_{n_b} ⊗ M_{m_c} = M_{n_b m_c}` (pairs in lexicographic order).
    pub fn tensor(&self, other: &Algebra) -> Result<Algebra, MoritaError> {
        let (d1, d2) = (self.dim(), other.dim());
        let d = d1 * d2;
        // (x⊗x')(y⊗y') = xy ⊗ x'y': reorder x⊗x'⊗y⊗y' to x⊗y⊗x'⊗y'
        let swap = swap_middle(d1, d2, d1, d2);
        let mult = kron(&self.mult, &other.mult)?.mul(&swap);
        let unit = kron(&CMatrix::column(&self.unit), &CMatrix::column(&other.unit))?.col_vec(0);
        let mut blocks = Vec::new();
        let mut perm = CMatrix::zeros(d, d);
        let mut boff = 0;
        let mut aoff = 0;
        let mut target_off = 0;
        let mut offs1 = Vec::new();
        for &n in &self.blocks {
            offs1.push(aoff);
            aoff += n * n;
        }
        let mut offs2 = Vec::new();
        for &m in &other.blocks {
            offs2.push(boff);
            boff += m * m;
        }
        for (b, &n) in self.blocks.iter().enumerate() {
            for (c, &m) in other.blocks.iter().enumerate() {
                let k = n * m;
                blocks.push(k);
                for i in 0..n {
                    for j in 0..n {
                        for p in 0..m {
                            for q in 0..m {
                                let src = (offs1[b] + i * n + j) * d2 + offs2[c] + p * m + q;
                                let row = target_off + (i * m + p) * k + (j * m + q);
                                perm.set(row, src, one());
                            }
                        }
                    }
                }
                target_off += k * k;
            }
        }
        let witness = perm.mul(&kron(&self.witness, &other.witness)?);
        Algebra::new(format!("{}⊗{}", self.name, other.name), mult, unit, blocks, witness, 1e-9)
    }
}

/// Permutation matrix of `ℂ^a ⊗ ℂ^b ⊗ ℂ^c ⊗ ℂ^d → ℂ^a ⊗ ℂ^c ⊗ ℂ^b ⊗ ℂ^d`,
/// acting on Kronecker coordinates (column = source index).
pub fn swap_middle(a: usize, b: usize, c: usize, d: usize) -> CMatrix {
    let n = a * b * c * d;
    let mut p = CMatrix::zeros(n, n);
    for i in 0..a {
        for j in 0..b {
            for k in 0..c {
                for l in 0..d {
                    let src = ((i * b + j) * c + k) * d + l;
                    let dst = ((i * c + k) * b + j) * d + l;
                    p.set(dst, src, one());
                }
            }
        }
    }
    p
}

/// A linear map between algebras, expected to be an algebra isomorphism.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgIso {
    pub src: Arc<Algebra>,
    pub tgt: Arc<Algebra>,
    pub matrix: CMatrix,
}

impl AlgIso {
    pub fn identity(a: &Arc<Algebra>) -> Self {
        AlgIso { src: a.clone(), tgt: a.clone(), matrix: CMatrix::identity(a.dim()) }
    }

    pub fn is_identity_on(&self, a: &Algebra) -> bool {
        self.src.name == a.name && self.tgt.name == a.name && self.matrix == CMatrix::identity(a.dim())
    }

    /// Residual of multiplicativity, unitality and invertibility.
    pub fn defect(&self) -> f64 {
        let (s, t) = (&self.src, &self.tgt);
        if self.matrix.shape() != (t.dim(), s.dim()) || s.dim() != t.dim() {
            return f64::INFINITY;
        }
        let Ok(kk) = kron(&self.matrix, &self.matrix) else { return f64::INFINITY };
        let hom = residual(&self.matrix.mul(&s.mult), &t.mult.mul(&kk)).unwrap_or(f64::INFINITY);
        let unit = residual(&self.matrix.mul(&CMatrix::column(&s.unit)), &CMatrix::column(&t.unit)).unwrap_or(f64::INFINITY);
        let inv = if self.matrix.inverse().is_ok() { 0.0 } else { f64::INFINITY };
        hom.max(unit).max(inv)
    }

    pub fn then(&self, g: &AlgIso) -> Option<AlgIso> {
        (self.tgt.name == g.src.name).then(|| AlgIso { src: self.src.clone(), tgt: g.tgt.clone(), matrix: g.matrix.mul(&self.matrix) })
    }

    pub fn inverse(&self) -> Option<AlgIso> {
        self.matrix.inverse().ok().map(|m| AlgIso { src: self.tgt.clone(), tgt: self.src.clone(), matrix: m })
    }

    /// Image of a basis vector.
    pub fn image(&self, i: usize) -> Vec<C64> {
        self.matrix.col_vec(i)
    }
}

/// Inner automorphism `x ↦ g x g⁻¹` of the block algebra `a` acting on its
/// block `b` by `g` (identity elsewhere). `a` must use the standard basis.
pub fn inner_automorphism(a: &Arc<Algebra>, b: usize, g: &CMatrix) -> Result<AlgIso, MoritaError> {
    let n = a.blocks[b];
    let ginv = g.inverse()?;
    let d = a.dim();
    let off: usize = a.blocks[..b].iter().map(|n| n * n).sum();
    let mut m = CMatrix::identity(d);
    // matrix of X ↦ gXg⁻¹ on row-major vec(X) is g ⊗ (g⁻¹)ᵀ
    let blk = kron(g, &ginv.transpose())?;
    for r in 0..n * n {
        for c in 0..n * n {
            m.set(off + r, off + c, blk.get(r, c));
        }
    }
    let w = a.witness.inverse()?.mul(&m).mul(&a.witness);
    Ok(AlgIso { src: a.clone(), tgt: a.clone(), matrix: w })
}

/// The automorphism exchanging two blocks of equal size.
pub fn block_swap(a: &Arc<Algebra>, b1: usize, b2: usize) -> Result<AlgIso, MoritaError> {
    if a.blocks.get(b1) != a.blocks.get(b2) || a.blocks.get(b1).is_none() {
        return Err(MoritaError::InvalidAlgebra(a.name.clone(), format!("blocks {b1} and {b2} differ")));
    }
    let d = a.dim();
    let offs: Vec<usize> = a.blocks.iter().scan(0, |s, n| { let o = *s; *s += n * n; Some(o) }).collect();
    let k = a.blocks[b1] * a.blocks[b1];
    let mut perm: Vec<usize> = (0..d).collect();
    for t in 0..k {
        perm[offs[b1] + t] = offs[b2] + t;
        perm[offs[b2] + t] = offs[b1] + t;
    }
    let m = CMatrix::from_fn(d, d, |r, c| if perm[c] == r { one() } else { C64::new(0.0, 0.0) });
    let w = a.witness.inverse()?.mul(&m).mul(&a.witness);
    Ok(AlgIso { src: a.clone(), tgt: a.clone(), matrix: w })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_algebras_validate() {
        for a in [Algebra::complex(), Algebra::complex2(), Algebra::m2(), Algebra::cm2()] {
            assert!(a.defect().unwrap() < 1e-14, "{}", a.name);
        }
        assert_eq!(Algebra::cm2().dim(), 5);
    }

    #[test]
    fn matrix_units_multiply() {
        let a = Algebra::m2();
        // E12 E21 = E11
        let e = |k: usize| { let mut v = vec![C64::new(0.0, 0.0); 4]; v[k] = one(); v };
        assert_eq!(a.product(&e(1), &e(2)), e(0));
        assert_eq!(a.product(&e(2), &e(1)), e(3));
        assert_eq!(a.product(&e(1), &e(1)), vec![C64::new(0.0, 0.0); 4]);
    }

    #[test]
    fn non_associative_table_is_rejected() {
        let (mut m, u) = block_table(&[1, 1]);
        m.set(0, 3, one());
        let err = Algebra::new("bad", m, u, vec![1, 1], CMatrix::identity(2), 1e-9).unwrap_err();
        assert!(err.to_string().contains("bad"));
    }

    #[test]
    fn tensor_of_blocks() {
        let t = Algebra::m2().tensor(&Algebra::complex2()).unwrap();
        assert_eq!(t.blocks, vec![2, 2]);
        assert_eq!(t.dim(), 8);
        assert!(t.defect().unwrap() < 1e-12);
    }

    #[test]
    fn automorphisms_are_valid() {
        let a = Arc::new(Algebra::cm2());
        let g = CMatrix::from_real(2, 2, &[1.0, 2.0, 0.0, 1.0]).unwrap();
        assert!(inner_automorphism(&a, 1, &g).unwrap().defect() < 1e-12);
        let cc = Arc::new(Algebra::complex2());
        let s = block_swap(&cc, 0, 1).unwrap();
        assert!(s.defect() < 1e-14);
        assert!(block_swap(&a, 0, 1).is_err());
    }
}
