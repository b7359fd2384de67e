//! Relative tensor products and the canonical maps between them.
//!
//! The fusion `M ⊗_B N` is the quotient of `M ⊗ N` (Kronecker coordinates,
//! index `i·dim N + j`) by the span of `(x·b)⊗y − x⊗(b·y)`. Maps out of or
//! between fusions are computed as `projection · (ambient map) · section`,
//! which is independent of the chosen section because every ambient map used
//! preserves the relation span.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dicat_core::engine::probes::fnv1a;
use dicat_core::linalg::{kron, quotient, CMatrix, QuotientPresentation, C64};

use crate::bimodule::{BimIso, Bimodule, BimoduleMap, Fusion};
use crate::MoritaError;

/// Largest ambient dimension a fusion may have.
pub const FUSION_DIM_CAP: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct FusionResult {
    pub bimodule: Arc<Bimodule>,
    pub presentation: QuotientPresentation,
}

/// Spanning set of the balancing relations, as the columns of one matrix.
pub fn relations(m: &Bimodule, n: &Bimodule) -> Result<CMatrix, MoritaError> {
    let (dm, dn) = (m.dim(), n.dim());
    let im = CMatrix::identity(dm);
    let inn = CMatrix::identity(dn);
    let blocks: Vec<CMatrix> = m
        .right_action
        .iter()
        .zip(&n.left_action)
        .map(|(r, l)| Ok(kron(r, &inn)?.sub(&kron(&im, l)?)))
        .collect::<Result<_, MoritaError>>()?;
    Ok(CMatrix::hstack(dm * dn, &blocks)?)
}

/// A seeded, well-conditioned invertible matrix (`cond ≤ 3`), `None` for the
/// empty space.
pub fn scramble_matrix(n: usize, seed: u64, key: &str) -> Option<CMatrix> {
    if n == 0 {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a(key.as_bytes()));
    let noise = CMatrix::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let f = noise.frob_norm().max(1e-300);
    let phases: Vec<C64> = (0..n).map(|_| C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    let base = CMatrix::identity(n).add(&noise.scale(C64::new(0.5 / f, 0.0)));
    Some(CMatrix::from_fn(n, n, |i, j| phases[i] * base.get(i, j)))
}

/// `M ⊗_B N` with its presentation. With `scramble = Some(seed)` the quotient
/// basis is changed by a seeded invertible matrix derived from the key.
pub fn rel_tensor_with(m: &Arc<Bimodule>, n: &Arc<Bimodule>, tol: f64, scramble: Option<u64>) -> Result<FusionResult, MoritaError> {
    if m.right_algebra.name != n.left_algebra.name {
        return Err(MoritaError::Incompatible(format!(
            "{} is a right {}-module but {} is a left {}-module",
            m.key, m.right_algebra.name, n.key, n.left_algebra.name
        )));
    }
    let amb = m.dim() * n.dim();
    if amb > FUSION_DIM_CAP {
        return Err(MoritaError::DimensionCap(amb, FUSION_DIM_CAP));
    }
    let key = format!("m({},{})", m.key, n.key);
    let rel = relations(m, n)?;
    let mut pres = quotient(amb, &rel, tol)?;
    if let Some(seed) = scramble {
        if let Some(x) = scramble_matrix(pres.dim(), seed, &key) {
            pres = pres.rebased(&x)?;
        }
    }
    let (p, s) = (&pres.projection, &pres.section);
    let im = CMatrix::identity(m.dim());
    let inn = CMatrix::identity(n.dim());
    let l = m.left_action.iter().map(|a| Ok(p.mul(&kron(a, &inn)?).mul(s))).collect::<Result<Vec<_>, MoritaError>>()?;
    let r = n.right_action.iter().map(|c| Ok(p.mul(&kron(&im, c)?).mul(s))).collect::<Result<Vec<_>, MoritaError>>()?;
    let mut b = Bimodule::unchecked(key, m.left_algebra.clone(), n.right_algebra.clone(), pres.dim(), l, r);
    b.fusion = Some(Arc::new(Fusion { left: m.clone(), right: n.clone(), presentation: pres.clone() }));
    Ok(FusionResult { bimodule: Arc::new(b), presentation: pres })
}

pub fn rel_tensor(m: &Arc<Bimodule>, n: &Arc<Bimodule>, tol: f64) -> Result<FusionResult, MoritaError> {
    rel_tensor_with(m, n, tol, None)
}

/// Rank of the balancing relations computed independently of `quotient`: by
/// Gaussian elimination on the relation vectors, one at a time.
pub fn coequalizer_dim(m: &Bimodule, n: &Bimodule, tol: f64) -> Result<usize, MoritaError> {
    let amb = m.dim() * n.dim();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    let rel = relations(m, n)?;
    let scale = rel.max_abs().max(1.0);
    for c in 0..rel.cols() {
        let mut v = rel.col_vec(c);
        for (b, &p) in basis.iter().zip(&pivots) {
            let f = v[p];
            if f != C64::new(0.0, 0.0) {
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= f * y;
                }
            }
        }
        let Some((p, &piv)) = v.iter().enumerate().max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap()) else { continue };
        if piv.norm() <= tol * scale {
            continue;
        }
        let inv = C64::new(1.0, 0.0) / piv;
        let v: Vec<C64> = v.iter().map(|x| x * inv).collect();
        for (b, _) in basis.iter_mut().zip(&pivots) {
            let f = b[p];
            if f != C64::new(0.0, 0.0) {
                for (x, y) in b.iter_mut().zip(&v) {
                    *x -= f * y;
                }
            }
        }
        basis.push(v);
        pivots.push(p);
    }
    Ok(amb - basis.len())
}

fn fusion_of<'a>(b: &'a Bimodule) -> Result<&'a Fusion, MoritaError> {
    b.fusion.as_deref().ok_or_else(|| MoritaError::Incompatible(format!("{} is not a fusion", b.key)))
}

fn check_factors(f: &Fusion, m: &Bimodule, n: &Bimodule, what: &str) -> Result<(), MoritaError> {
    if f.left.key != m.key || f.right.key != n.key {
        return Err(MoritaError::Incompatible(format!("{what}: fusion of {} and {} does not match {} and {}", f.left.key, f.right.key, m.key, n.key)));
    }
    Ok(())
}

/// The matrix `P_tgt · (f ⊗ g) · S_src` between two fusions, where `src`
/// fuses the domains of `f`, `g` and `tgt` their codomains.
pub fn fused_matrix(f: &CMatrix, g: &CMatrix, src: &Bimodule, tgt: &Bimodule) -> Result<CMatrix, MoritaError> {
    let fs = fusion_of(src)?;
    let ft = fusion_of(tgt)?;
    Ok(ft.presentation.projection.mul(&kron(f, g)?).mul(&fs.presentation.section))
}

/// `φ ⊗ ψ` on the fusions `src = M ⊗_B N` and `tgt = M' ⊗_B N'`.
pub fn map_tensor(key: impl Into<String>, phi: &BimoduleMap, psi: &BimoduleMap, src: &Arc<Bimodule>, tgt: &Arc<Bimodule>) -> Result<BimoduleMap, MoritaError> {
    check_factors(fusion_of(src)?, &phi.source, &psi.source, "map_tensor source")?;
    check_factors(fusion_of(tgt)?, &phi.target, &psi.target, "map_tensor target")?;
    let matrix = fused_matrix(&phi.matrix, &psi.matrix, src, tgt)?;
    Ok(BimoduleMap { key: key.into(), source: src.clone(), target: tgt.clone(), matrix })
}

/// `u ⊗ v` for isomorphisms covering `(a, b)` and `(b, c)`.
pub fn iso_tensor(u: &BimIso, v: &BimIso, src: &Arc<Bimodule>, tgt: &Arc<Bimodule>) -> Result<BimIso, MoritaError> {
    check_factors(fusion_of(src)?, &u.src, &v.src, "iso tensor source")?;
    check_factors(fusion_of(tgt)?, &u.tgt, &v.tgt, "iso tensor target")?;
    let matrix = fused_matrix(&u.matrix, &v.matrix, src, tgt)?;
    Ok(BimIso { src: src.clone(), tgt: tgt.clone(), left: u.left.clone(), right: v.right.clone(), matrix })
}

/// Matrix of the canonical `(M ⊗ N) ⊗ P → M ⊗ (N ⊗ P)` given the four
/// fusions `mn = M⊗N`, `l = mn⊗P`, `np = N⊗P`, `r = M⊗np`.
pub fn associator(l: &Bimodule, r: &Bimodule) -> Result<CMatrix, MoritaError> {
    let fl = fusion_of(l)?;
    let fr = fusion_of(r)?;
    let fmn = fusion_of(&fl.left)?;
    let fnp = fusion_of(&fr.right)?;
    let (m, n, p) = (&fmn.left, &fmn.right, &fl.right);
    check_factors(fr, m, &fr.right, "associator")?;
    check_factors(fnp, n, p, "associator")?;
    let lift = kron(&fmn.presentation.section, &CMatrix::identity(p.dim()))?;
    let push = kron(&CMatrix::identity(m.dim()), &fnp.presentation.projection)?;
    Ok(fr.presentation.projection.mul(&push).mul(&lift).mul(&fl.presentation.section))
}

/// `A ⊗_A M → M`, `x ⊗ m ↦ x·m`, on the fusion `f = i(A) ⊗ M`.
pub fn unitor_left(f: &Bimodule) -> Result<CMatrix, MoritaError> {
    let fu = fusion_of(f)?;
    let m = &fu.right;
    let act = CMatrix::hstack(m.dim(), &m.left_action)?;
    // column i·dim M + j of `act` is e_i·m_j
    Ok(act.mul(&fu.presentation.section))
}

/// `M ⊗_B B → M`, `m ⊗ y ↦ m·y`, on the fusion `f = M ⊗ i(B)`.
pub fn unitor_right(f: &Bimodule) -> Result<CMatrix, MoritaError> {
    let fu = fusion_of(f)?;
    let m = &fu.left;
    let db = fu.right.dim();
    let act = CMatrix::from_fn(m.dim(), m.dim() * db, |r, c| m.right_action[c % db].get(r, c / db));
    Ok(act.mul(&fu.presentation.section))
}

/// `M → A ⊗_A M`, `m ↦ [1 ⊗ m]`.
pub fn unitor_left_inv(f: &Bimodule) -> Result<CMatrix, MoritaError> {
    let fu = fusion_of(f)?;
    let a = &fu.left.left_algebra;
    let embed = kron(&CMatrix::column(&a.unit), &CMatrix::identity(fu.right.dim()))?;
    Ok(fu.presentation.projection.mul(&embed))
}

/// `M → M ⊗_B B`, `m ↦ [m ⊗ 1]`.
pub fn unitor_right_inv(f: &Bimodule) -> Result<CMatrix, MoritaError> {
    let fu = fusion_of(f)?;
    let b = &fu.right.right_algebra;
    let embed = kron(&CMatrix::identity(fu.left.dim()), &CMatrix::column(&b.unit))?;
    Ok(fu.presentation.projection.mul(&embed))
}

/// Largest residual of the induced actions on a fusion (well-definedness on
/// the quotient): `P·(ambient action)·S·P` must equal `P·(ambient action)`.
pub fn fusion_defect(f: &Bimodule) -> Result<f64, MoritaError> {
    let fu = fusion_of(f)?;
    let (p, s) = (&fu.presentation.projection, &fu.presentation.section);
    let (m, n) = (&fu.left, &fu.right);
    let im = CMatrix::identity(m.dim());
    let inn = CMatrix::identity(n.dim());
    let mut worst = dicat_core::linalg::residual(&p.mul(s), &CMatrix::identity(p.rows()))?;
    for a in &m.left_action {
        let x = p.mul(&kron(a, &inn)?);
        worst = worst.max(dicat_core::linalg::residual(&x.mul(s).mul(p), &x)?);
    }
    for c in &n.right_action {
        let x = p.mul(&kron(&im, c)?);
        worst = worst.max(dicat_core::linalg::residual(&x.mul(s).mul(p), &x)?);
    }
    Ok(worst)
}
