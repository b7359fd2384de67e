//! Monoidal sanity: the outer tensor product over ℂ commutes with fusion up
//! to the canonical reshuffle.

use std::sync::Arc;

use serde::Serialize;

use dicat_core::linalg::{kron, residual};

use crate::algebra::swap_middle;
use crate::bimodule::Bimodule;
use crate::fusion::rel_tensor;
use crate::MoritaError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmokeCase {
    pub label: String,
    pub lhs_dim: usize,
    pub rhs_dim: usize,
    /// Intertwining and invertibility residual of the reshuffle on the fusions;
    /// infinite when the dimensions differ.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmokeReport {
    pub cases: Vec<SmokeCase>,
    pub pass: bool,
    pub max_residual: f64,
}

/// One case: `(M ⊠ M') ⊗ (N ⊠ N')` against `(M ⊗ N) ⊠ (M' ⊗ N')`, where the
/// reshuffle `x⊗x'⊗y⊗y' ↦ x⊗y⊗x'⊗y'` is pushed to the quotients.
fn smoke_case(x: &(Arc<Bimodule>, Arc<Bimodule>), y: &(Arc<Bimodule>, Arc<Bimodule>), tol: f64) -> Result<SmokeCase, MoritaError> {
    let (m, n) = x;
    let (m2, n2) = y;
    let label = format!("({}⊗{})⊠({}⊗{})", m.key, n.key, m2.key, n2.key);
    let a = Arc::new(m.left_algebra.tensor(&m2.left_algebra)?);
    let b = Arc::new(m.right_algebra.tensor(&m2.right_algebra)?);
    let cc = Arc::new(n.right_algebra.tensor(&n2.right_algebra)?);
    let outer_m = Arc::new(m.outer(m2, &a, &b));
    let outer_n = Arc::new(n.outer(n2, &b, &cc));
    let lhs = rel_tensor(&outer_m, &outer_n, tol)?;
    let f1 = rel_tensor(m, n, tol)?;
    let f2 = rel_tensor(m2, n2, tol)?;
    let rhs = f1.bimodule.outer(&f2.bimodule, &a, &cc);
    let (ld, rd) = (lhs.bimodule.dim(), rhs.dim());
    if ld != rd {
        return Ok(SmokeCase { label, lhs_dim: ld, rhs_dim: rd, residual: f64::INFINITY });
    }
    let sigma = swap_middle(m.dim(), m2.dim(), n.dim(), n2.dim());
    let push = kron(&f1.presentation.projection, &f2.presentation.projection)?;
    let r = push.mul(&sigma).mul(&lhs.presentation.section);
    let mut worst = 0.0f64;
    let l = &lhs.bimodule;
    for (p, q) in l.left_action.iter().zip(&rhs.left_action).chain(l.right_action.iter().zip(&rhs.right_action)) {
        worst = worst.max(residual(&r.mul(p), &q.mul(&r))?);
    }
    if ld > 0 && r.inverse().is_err() {
        worst = f64::INFINITY;
    }
    Ok(SmokeCase { label, lhs_dim: ld, rhs_dim: rd, residual: worst })
}

/// Runs every pair of a composable pair from `left` with one from `right`.
pub fn tensor_smoke(left: &[(Arc<Bimodule>, Arc<Bimodule>)], right: &[(Arc<Bimodule>, Arc<Bimodule>)], tol: f64) -> Result<SmokeReport, MoritaError> {
    let mut cases = Vec::new();
    for x in left {
        for y in right {
            cases.push(smoke_case(x, y, tol)?);
        }
    }
    let max_residual = cases.iter().map(|c| c.residual).fold(0.0, f64::max);
    let pass = cases.iter().all(|c| c.residual <= tol.max(1e-9));
    Ok(SmokeReport { cases, pass, max_residual })
}
