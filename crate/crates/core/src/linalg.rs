//! Dense complex linear algebra at desk scale.
//!
//! Everything here is deterministic: kernels come from a reduced echelon form
//! with a fixed pivot rule (leftmost column, then largest magnitude, first row
//! on ties), so repeated runs produce bit-identical bases.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

/// Default relative tolerance for rank decisions and comparisons.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest row or column count `kron` will produce.
pub const KRON_DIM_CAP: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry at ({0},{1})")]
    NonFinite(usize, usize),
    #[error("ill-conditioned quotient: singular value {sigma:e} too close to cut {cut:e}")]
    IllConditioned { sigma: f64, cut: f64 },
    #[error("singular matrix (pivot {0:e})")]
    Singular(f64),
    #[error("dimension {0} exceeds cap {1}")]
    SizeCap(usize, usize),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::Shape(format!(
                "{}x{} needs {} entries, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(LinalgError::NonFinite(k / cols.max(1), k % cols.max(1)));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, vals: &[f64]) -> Result<Self> {
        Self::new(rows, cols, vals.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Column vector.
    pub fn column(v: &[C64]) -> Self {
        CMatrix { rows: v.len(), cols: 1, data: v.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.data[i * self.cols + j] = z;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn col_vec(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn select_columns(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |i, k| self.get(i, idx[k]))
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, z: C64) -> Self {
        CMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * z).collect() }
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn try_add(&self, o: &Self) -> Result<Self> {
        self.same_shape(o)?;
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn try_sub(&self, o: &Self) -> Result<Self> {
        self.same_shape(o)?;
        Ok(CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect(),
        })
    }

    fn same_shape(&self, o: &Self) -> Result<()> {
        if self.shape() != o.shape() {
            return Err(LinalgError::Shape(format!("{:?} vs {:?}", self.shape(), o.shape())));
        }
        Ok(())
    }

    /// Matrix product `self · o`.
    pub fn try_mul(&self, o: &Self) -> Result<Self> {
        if self.cols != o.rows {
            return Err(LinalgError::Shape(format!(
                "product {:?}·{:?}",
                self.shape(),
                o.shape()
            )));
        }
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &o.data[k * o.cols..(k + 1) * o.cols];
                let dst = &mut out.data[i * o.cols..(i + 1) * o.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Panicking product for internally shape-checked code paths.
    pub fn mul(&self, o: &Self) -> Self {
        self.try_mul(o).expect("matrix product shape")
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.try_sub(o).expect("matrix difference shape")
    }

    pub fn add(&self, o: &Self) -> Self {
        self.try_add(o).expect("matrix sum shape")
    }

    /// Horizontal concatenation; all blocks must share the row count.
    pub fn hstack(rows: usize, blocks: &[CMatrix]) -> Result<Self> {
        let cols: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(rows, cols);
        let mut off = 0;
        for b in blocks {
            if b.rows != rows {
                return Err(LinalgError::Shape(format!("hstack rows {} vs {}", b.rows, rows)));
            }
            for i in 0..rows {
                for j in 0..b.cols {
                    out.set(i, off + j, b.get(i, j));
                }
            }
            off += b.cols;
        }
        Ok(out)
    }

    /// Vertical concatenation; all blocks must share the column count.
    pub fn vstack(cols: usize, blocks: &[CMatrix]) -> Result<Self> {
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            if b.cols != cols {
                return Err(LinalgError::Shape(format!("vstack cols {} vs {}", b.cols, cols)));
            }
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Ok(CMatrix { rows, cols, data })
    }

    /// Gauss–Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        if !self.is_square() {
            return Err(LinalgError::Shape(format!("inverse of {:?}", self.shape())));
        }
        self.solve(&Self::identity(self.rows))
    }

    /// Solves `self · X = rhs` for square `self`.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.rows;
        if !self.is_square() || rhs.rows != n {
            return Err(LinalgError::Shape(format!("solve {:?} \\ {:?}", self.shape(), rhs.shape())));
        }
        let m = rhs.cols;
        let mut a = self.clone();
        let mut b = rhs.clone();
        let scale = self.max_abs().max(1.0);
        for c in 0..n {
            let mut p = c;
            let mut best = a.get(c, c).norm();
            for r in c + 1..n {
                let v = a.get(r, c).norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= 1e-14 * scale {
                return Err(LinalgError::Singular(best));
            }
            if p != c {
                a.swap_rows(p, c);
                b.swap_rows(p, c);
            }
            let inv = C64::new(1.0, 0.0) / a.get(c, c);
            for j in 0..n {
                let v = a.get(c, j) * inv;
                a.set(c, j, v);
            }
            for j in 0..m {
                let v = b.get(c, j) * inv;
                b.set(c, j, v);
            }
            for r in 0..n {
                if r == c {
                    continue;
                }
                let f = a.get(r, c);
                if f.re == 0.0 && f.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let v = a.get(r, j) - f * a.get(c, j);
                    a.set(r, j, v);
                }
                for j in 0..m {
                    let v = b.get(r, j) - f * b.get(c, j);
                    b.set(r, j, v);
                }
            }
        }
        Ok(b)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Singular values in decreasing order.
    pub fn singular_values(&self) -> Vec<f64> {
        if self.rows == 0 || self.cols == 0 {
            return Vec::new();
        }
        let m = DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        s
    }

    /// Numerical rank under the relative cut `tol · max(1, σ_max)`.
    pub fn rank(&self, tol: f64) -> usize {
        let s = self.singular_values();
        let cut = tol * s.first().copied().unwrap_or(0.0).max(1.0);
        s.iter().filter(|&&x| x > cut).count()
    }
}

/// A based finite-dimensional space.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearSpace {
    pub dim: usize,
    pub label: Option<String>,
}

impl LinearSpace {
    pub fn new(dim: usize) -> Self {
        LinearSpace { dim, label: None }
    }

    pub fn labelled(dim: usize, label: impl Into<String>) -> Self {
        LinearSpace { dim, label: Some(label.into()) }
    }
}

/// Explicit basis for `ℂ^ambient / span(relations)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientPresentation {
    pub ambient_dim: usize,
    pub relation_span: CMatrix,
    /// quotient_dim × ambient_dim
    pub projection: CMatrix,
    /// ambient_dim × quotient_dim
    pub section: CMatrix,
}

impl QuotientPresentation {
    pub fn dim(&self) -> usize {
        self.projection.rows()
    }

    /// Re-bases the quotient by an invertible `x`: projection ↦ x·P, section ↦ S·x⁻¹.
    pub fn rebased(&self, x: &CMatrix) -> Result<Self> {
        let xinv = x.inverse()?;
        Ok(QuotientPresentation {
            ambient_dim: self.ambient_dim,
            relation_span: self.relation_span.clone(),
            projection: x.try_mul(&self.projection)?,
            section: self.section.try_mul(&xinv)?,
        })
    }
}

/// Basis (as columns) of `{v : m·v ≈ 0}` from the reduced echelon form.
///
/// Entries below `tol · max(1, max|m_ij|)` are treated as zero pivots. Basis
/// vectors are normalised to unit length.
pub fn kernel(m: &CMatrix, tol: f64) -> CMatrix {
    let (r, c) = m.shape();
    let (a, pivots) = rref(m, tol);
    let mut is_pivot = vec![usize::MAX; c];
    for (row, &pc) in pivots.iter().enumerate() {
        is_pivot[pc] = row;
    }
    let free: Vec<usize> = (0..c).filter(|&j| is_pivot[j] == usize::MAX).collect();
    let mut out = CMatrix::zeros(c, free.len());
    for (k, &f) in free.iter().enumerate() {
        let mut v = vec![C64::new(0.0, 0.0); c];
        v[f] = C64::new(1.0, 0.0);
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -a.get(row, f);
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for (i, z) in v.iter().enumerate() {
            out.set(i, k, z / n);
        }
    }
    let _ = r;
    out
}

/// Reduced row echelon form and pivot columns.
pub fn rref(m: &CMatrix, tol: f64) -> (CMatrix, Vec<usize>) {
    let (r, c) = m.shape();
    let mut a = m.clone();
    let thr = tol * m.max_abs().max(1.0);
    let mut pivots = Vec::new();
    let mut pr = 0;
    for col in 0..c {
        if pr == r {
            break;
        }
        let mut best = thr;
        let mut p = usize::MAX;
        for i in pr..r {
            let v = a.get(i, col).norm();
            if v > best {
                best = v;
                p = i;
            }
        }
        if p == usize::MAX {
            for i in pr..r {
                a.set(i, col, C64::new(0.0, 0.0));
            }
            continue;
        }
        a.swap_rows(p, pr);
        let inv = C64::new(1.0, 0.0) / a.get(pr, col);
        for j in col..c {
            let v = a.get(pr, j) * inv;
            a.set(pr, j, v);
        }
        for i in 0..r {
            if i == pr {
                continue;
            }
            let f = a.get(i, col);
            if f.re == 0.0 && f.im == 0.0 {
                continue;
            }
            for j in col..c {
                let v = a.get(i, j) - f * a.get(pr, j);
                a.set(i, j, v);
            }
        }
        pivots.push(col);
        pr += 1;
    }
    (a, pivots)
}

/// Width of the exclusion band around the rank cut, as a factor either side.
const ILL_BAND: f64 = 100.0;

/// Quotient of `ℂ^ambient_dim` by the column span of `relations`.
///
/// The projection's rows are an orthonormal basis of the orthogonal
/// complement of the relation span (left singular vectors below the rank
/// cut), so the section is the adjoint of the projection. The singular value
/// decomposition is deterministic for identical input.
pub fn quotient(ambient_dim: usize, relations: &CMatrix, tol: f64) -> Result<QuotientPresentation> {
    if relations.rows() != ambient_dim {
        return Err(LinalgError::Shape(format!(
            "relations have {} rows, ambient is {}",
            relations.rows(),
            ambient_dim
        )));
    }
    let n = ambient_dim;
    if n == 0 {
        return Ok(QuotientPresentation {
            ambient_dim,
            relation_span: relations.clone(),
            projection: CMatrix::zeros(0, 0),
            section: CMatrix::zeros(0, 0),
        });
    }
    // pad with zero columns so the left singular vectors span all of ℂ^n
    let k = relations.cols().max(n);
    let mut padded = DMatrix::<C64>::zeros(n, k);
    for i in 0..n {
        for j in 0..relations.cols() {
            padded[(i, j)] = relations.get(i, j);
        }
    }
    let svd = padded.svd(true, false);
    let u = svd.u.as_ref().expect("requested U");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let cut = tol * smax.max(1.0);
    for &s in &sv {
        if s > cut / ILL_BAND && s < cut * ILL_BAND {
            return Err(LinalgError::IllConditioned { sigma: s, cut });
        }
    }
    let mut null: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= cut).collect();
    // ascending singular value, then index: a fixed order for the basis
    null.sort_by(|&a, &b| sv[a].partial_cmp(&sv[b]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    if null.len() == n {
        // no relations: keep the ambient basis
        return Ok(QuotientPresentation {
            ambient_dim,
            relation_span: relations.clone(),
            projection: CMatrix::identity(n),
            section: CMatrix::identity(n),
        });
    }
    let mut projection = CMatrix::from_fn(null.len(), n, |r, c| u[(c, null[r])].conj());
    // phase convention: the first entry of largest modulus is real positive
    for r in 0..projection.rows() {
        let row: Vec<C64> = (0..n).map(|c| projection.get(r, c)).collect();
        let big = row.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if let Some(z) = row.iter().find(|z| z.norm() >= big * (1.0 - 1e-12)) {
            let ph = z.conj() / z.norm();
            for (c, x) in row.iter().enumerate() {
                projection.set(r, c, x * ph);
            }
        }
    }
    let section = projection.adjoint();
    Ok(QuotientPresentation {
        ambient_dim,
        relation_span: relations.clone(),
        projection,
        section,
    })
}

/// Kronecker product; entry `(i·rows_b + k, j·cols_b + l) = a_ij · b_kl`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    kron_capped(a, b, KRON_DIM_CAP)
}

pub fn kron_capped(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.rows() * b.rows();
    let cols = a.cols() * b.cols();
    if rows > cap || cols > cap {
        return Err(LinalgError::SizeCap(rows.max(cols), cap));
    }
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            let x = a.get(i, j);
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for k in 0..b.rows() {
                for l in 0..b.cols() {
                    out.set(i * b.rows() + k, j * b.cols() + l, x * b.get(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Relative Frobenius residual `‖a − b‖ / max(1, ‖a‖)`.
pub fn residual(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    let d = a.try_sub(b)?;
    Ok(d.frob_norm() / a.frob_norm().max(1.0))
}

/// `(‖a − b‖ ≤ tol · max(1, ‖a‖), relative residual)`.
pub fn approx_eq(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<(bool, f64)> {
    let r = residual(a, b)?;
    Ok((r <= tol, r))
}

/// Basis of the commutant `{X : Xg = gX for all g}` of `generators` on `ℂ^n`.
pub fn commutant(generators: &[CMatrix], n: usize, tol: f64) -> Result<Vec<CMatrix>> {
    let id = CMatrix::identity(n);
    let mut blocks = Vec::with_capacity(generators.len());
    for g in generators {
        if g.shape() != (n, n) {
            return Err(LinalgError::Shape(format!("generator {:?} on dim {}", g.shape(), n)));
        }
        // row-major vec: vec(Xg) = (I ⊗ gᵀ) vec X, vec(gX) = (g ⊗ I) vec X
        blocks.push(kron(&id, &g.transpose())?.sub(&kron(g, &id)?));
    }
    let stacked = CMatrix::vstack(n * n, &blocks)?;
    let k = kernel(&stacked, tol);
    Ok((0..k.cols())
        .map(|c| CMatrix::from_fn(n, n, |i, j| k.get(i * n + j, c)))
        .collect())
}

/// Flattens matrices into the columns of one matrix (row-major vec).
pub fn as_columns(ms: &[CMatrix], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows * cols, ms.len(), |r, k| ms[k].data[r])
}

/// Whether two families of same-shape matrices span the same subspace.
pub fn span_eq(a: &[CMatrix], b: &[CMatrix], rows: usize, cols: usize, tol: f64) -> bool {
    let ma = as_columns(a, rows, cols);
    let mb = as_columns(b, rows, cols);
    let ra = ma.rank(tol);
    let rb = mb.rank(tol);
    let both = CMatrix::hstack(rows * cols, &[ma, mb]).expect("span_eq shapes");
    ra == rb && both.rank(tol) == ra
}
