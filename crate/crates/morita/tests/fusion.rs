use std::sync::Arc;

use dicat_core::linalg::{residual, CMatrix, C64};
use dicat_morita::fusion::{fusion_defect, rel_tensor_with, unitor_left_inv, unitor_right_inv};
use dicat_morita::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

struct Algs {
    c: Arc<Algebra>,
    cc: Arc<Algebra>,
    m2: Arc<Algebra>,
}

fn algs() -> Algs {
    Algs { c: Arc::new(Algebra::complex()), cc: Arc::new(Algebra::complex2()), m2: Arc::new(Algebra::m2()) }
}

fn dim(m: &Arc<Bimodule>, n: &Arc<Bimodule>) -> usize {
    rel_tensor(m, n, 1e-9).unwrap().bimodule.dim()
}

/// Multiplicity of the simple `e_i ℂ e_j` in a ℂ⊕ℂ bimodule: the trace of the
/// idempotent `e_i · − · e_j`.
fn multiplicities(m: &Bimodule) -> [[usize; 2]; 2] {
    let cc = &m.left_algebra;
    let mut out = [[0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let p = m.left(&cc.block_unit(i)).mul(&m.right(&cc.block_unit(j)));
            let tr: C64 = (0..m.dim()).map(|k| p.get(k, k)).sum();
            out[i][j] = tr.re.round() as usize;
        }
    }
    out
}

#[test]
fn classical_morita_pair() {
    let a = algs();
    let col = Arc::new(Bimodule::column(&a.m2, &a.c));
    let row = Arc::new(Bimodule::row(&a.c, &a.m2));
    assert_eq!(dim(&col, &row), 4);
    assert_eq!(dim(&row, &col), 1);
    assert_eq!(coequalizer_dim(&col, &row, 1e-9).unwrap(), 4);
    assert_eq!(coequalizer_dim(&row, &col, 1e-9).unwrap(), 1);
    // col ⊗ row is the regular M₂-bimodule up to isomorphism: same size of hom
    let cr = rel_tensor(&col, &row, 1e-9).unwrap().bimodule;
    let reg = Bimodule::regular(&a.m2);
    assert_eq!(hom_space(&cr, &reg, 1e-9).unwrap().len(), 1);
}

#[test]
fn characters_through_different_coordinates_fuse_to_zero() {
    let a = algs();
    let m = Arc::new(Bimodule::character("p", &a.c, &[c(1.0)], &a.cc, &[c(1.0), c(0.0)]));
    let n = Arc::new(Bimodule::character("q", &a.cc, &[c(0.0), c(1.0)], &a.c, &[c(1.0)]));
    assert_eq!(dim(&m, &n), 0);
    assert_eq!(coequalizer_dim(&m, &n, 1e-9).unwrap(), 0);
    let n1 = Arc::new(Bimodule::character("q1", &a.cc, &[c(1.0), c(0.0)], &a.c, &[c(1.0)]));
    assert_eq!(dim(&m, &n1), 1);
}

#[test]
fn regular_over_itself() {
    let a = algs();
    for alg in [&a.c, &a.cc, &a.m2, &Arc::new(Algebra::cm2())] {
        let r = Arc::new(Bimodule::regular(alg));
        assert_eq!(dim(&r, &r), alg.dim(), "{}", alg.name);
    }
    let cc = Arc::new(Bimodule::regular(&a.cc));
    assert_eq!(dim(&cc, &cc), 2);
}

#[test]
fn dimension_oracle_on_seeded_cases() {
    let a = algs();
    let mut cases = 0;
    for seed in 0..12u64 {
        let m = Arc::new(random_cc_bimodule("m", &a.cc, seed).unwrap());
        let n = Arc::new(random_cc_bimodule("n", &a.cc, seed + 100).unwrap());
        assert!(m.dim() <= 4 && n.dim() <= 4);
        let (mm, nn) = (multiplicities(&m), multiplicities(&n));
        let expect: usize = (0..2).flat_map(|i| (0..2).flat_map(move |j| (0..2).map(move |k| (i, j, k)))).map(|(i, j, k)| mm[i][j] * nn[j][k]).sum();
        assert_eq!(dim(&m, &n), expect, "seed {seed}");
        assert_eq!(coequalizer_dim(&m, &n, 1e-9).unwrap(), expect, "seed {seed}");
        cases += 1;
    }
    // mixed cases against the independent elimination
    let col = Arc::new(Bimodule::column(&a.m2, &a.c));
    let row = Arc::new(Bimodule::row(&a.c, &a.m2));
    let rm2 = Arc::new(Bimodule::regular(&a.m2));
    let rc = Arc::new(Bimodule::regular(&a.c));
    let c2 = Arc::new(Bimodule::scalars("c2", &a.c, 2));
    let z = Arc::new(Bimodule::zero("z", &a.c, &a.c));
    let pairs = [
        (&rm2, &col, 2),
        (&row, &rm2, 2),
        (&col, &c2, 4),
        (&c2, &row, 4),
        (&c2, &c2, 4),
        (&z, &c2, 0),
        (&c2, &z, 0),
        (&rc, &row, 2),
        (&col, &rc, 2),
        (&rm2, &rm2, 4),
    ];
    for (m, n, want) in pairs {
        assert_eq!(dim(m, n), want, "{} ⊗ {}", m.key, n.key);
        assert_eq!(coequalizer_dim(m, n, 1e-9).unwrap(), want, "{} ⊗ {}", m.key, n.key);
        cases += 1;
    }
    assert!(cases >= 20);
}

#[test]
fn mismatched_algebras_are_rejected() {
    let a = algs();
    let col = Arc::new(Bimodule::column(&a.m2, &a.c));
    assert!(matches!(rel_tensor(&col, &col, 1e-9), Err(MoritaError::Incompatible(_))));
}

#[test]
fn induced_actions_are_well_defined() {
    let a = algs();
    let col = Arc::new(Bimodule::column(&a.m2, &a.c));
    let row = Arc::new(Bimodule::row(&a.c, &a.m2));
    for scramble in [None, Some(4)] {
        let f = rel_tensor_with(&col, &row, 1e-9, scramble).unwrap();
        assert!(fusion_defect(&f.bimodule).unwrap() < 1e-12);
        assert!(f.bimodule.defect() < 1e-12);
    }
}

#[test]
fn map_tensor_identities_zero_and_interchange() {
    let a = algs();
    let m = Arc::new(random_cc_bimodule("m", &a.cc, 3).unwrap());
    let n = Arc::new(random_cc_bimodule("n", &a.cc, 4).unwrap());
    let mn = rel_tensor(&m, &n, 1e-9).unwrap().bimodule;
    let idm = BimoduleMap::identity(&m);
    let idn = BimoduleMap::identity(&n);
    let t = map_tensor("t", &idm, &idn, &mn, &mn).unwrap();
    assert!(residual(&t.matrix, &CMatrix::identity(mn.dim())).unwrap() < 1e-12);
    let zero = BimoduleMap::zero("0", &m, &m);
    let t0 = map_tensor("t0", &zero, &idn, &mn, &mn).unwrap();
    assert!(t0.matrix.max_abs() < 1e-12);
    // φ, ψ: projections onto isotypic pieces
    let phi = BimoduleMap::new("φ", m.clone(), m.clone(), m.left(&a.cc.block_unit(0)), 1e-9).unwrap();
    let psi = BimoduleMap::new("ψ", n.clone(), n.clone(), n.right(&a.cc.block_unit(1)), 1e-9).unwrap();
    let both = map_tensor("b", &phi, &psi, &mn, &mn).unwrap();
    let first = map_tensor("f", &phi, &idn, &mn, &mn).unwrap();
    let second = map_tensor("s", &idm, &psi, &mn, &mn).unwrap();
    assert!(residual(&both.matrix, &second.matrix.mul(&first.matrix)).unwrap() < 1e-12);
    assert!(residual(&both.matrix, &first.matrix.mul(&second.matrix)).unwrap() < 1e-12);
    assert!(both.defect() < 1e-12);
}

#[test]
fn associator_on_regular_and_pentagon() {
    let a = algs();
    let o = build_oracle(&MoritaConfig::default()).unwrap();
    let mut ctx = FusionCache::default();
    let r = Arc::new(Bimodule::regular(&a.cc));
    let as_ = o.assoc(&mut ctx, &r, &r, &r).unwrap();
    assert!(as_.defect() < 1e-12);
    let col = Arc::new(Bimodule::column(&a.m2, &a.c));
    let row = Arc::new(Bimodule::row(&a.c, &a.m2));
    // pentagon on (col, row, col, row)
    let (w, x, y, z) = (&col, &row, &col, &row);
    let f = |ctx: &mut FusionCache, p: &Arc<Bimodule>, q: &Arc<Bimodule>| o.fuse(ctx, p, q).unwrap();
    let wx = f(&mut ctx, w, x);
    let xy = f(&mut ctx, x, y);
    let yz = f(&mut ctx, y, z);
    let a1 = o.assoc(&mut ctx, &wx, y, z).unwrap();
    let a2 = o.assoc(&mut ctx, w, x, &yz).unwrap();
    let a3 = o.assoc(&mut ctx, w, x, y).unwrap();
    let wxy_z = f(&mut ctx, &a3.tgt, z);
    let a3z = dicat_morita::fusion::fused_matrix(&a3.matrix, &CMatrix::identity(z.dim()), &f(&mut ctx, &a3.src, z), &wxy_z).unwrap();
    let a4 = o.assoc(&mut ctx, w, &xy, z).unwrap();
    let xyz = f(&mut ctx, &xy, z);
    let x_yz = f(&mut ctx, x, &yz);
    let a5 = o.assoc(&mut ctx, x, y, z).unwrap();
    let w_xyz = f(&mut ctx, w, &xyz);
    let w_x_yz = f(&mut ctx, w, &x_yz);
    let wa5 = dicat_morita::fusion::fused_matrix(&CMatrix::identity(w.dim()), &a5.matrix, &w_xyz, &w_x_yz).unwrap();
    let lhs = a2.matrix.mul(&a1.matrix);
    let rhs = wa5.mul(&a4.matrix).mul(&a3z);
    assert!(residual(&lhs, &rhs).unwrap() < 1e-9);
    assert_eq!(lhs.rows(), 4);
}

#[test]
fn associator_is_nontrivial_when_scrambled() {
    let a = algs();
    let o = build_oracle(&MoritaConfig::scrambled(2)).unwrap();
    let mut ctx = FusionCache::default();
    let r = Arc::new(Bimodule::regular(&a.m2));
    let x = o.assoc(&mut ctx, &r, &r, &r).unwrap();
    assert!(x.defect() < 1e-9);
    assert!(residual(&x.matrix, &CMatrix::identity(4)).unwrap() > 1e-3);
}

#[test]
fn unitors_are_inverse_isomorphisms() {
    let a = algs();
    let probes = [
        Arc::new(Bimodule::regular(&a.m2)),
        Arc::new(Bimodule::column(&a.m2, &a.c)),
        Arc::new(random_cc_bimodule("m", &a.cc, 9).unwrap()),
        Arc::new(Bimodule::zero("z", &a.c, &a.c)),
    ];
    for m in &probes {
        for scramble in [None, Some(1)] {
            let ia = Arc::new(Bimodule::regular(&m.left_algebra));
            let ib = Arc::new(Bimodule::regular(&m.right_algebra));
            let fl = rel_tensor_with(&ia, m, 1e-9, scramble).unwrap().bimodule;
            let fr = rel_tensor_with(m, &ib, 1e-9, scramble).unwrap().bimodule;
            assert_eq!(fl.dim(), m.dim());
            assert_eq!(fr.dim(), m.dim());
            let (l, li) = (unitor_left(&fl).unwrap(), unitor_left_inv(&fl).unwrap());
            let (r, ri) = (unitor_right(&fr).unwrap(), unitor_right_inv(&fr).unwrap());
            let id = CMatrix::identity(m.dim());
            assert!(residual(&l.mul(&li), &id).unwrap() < 1e-12, "{}", m.key);
            assert!(residual(&li.mul(&l), &id).unwrap() < 1e-12, "{}", m.key);
            assert!(residual(&r.mul(&ri), &id).unwrap() < 1e-12, "{}", m.key);
            let ul = BimoduleMap { key: "l".into(), source: fl.clone(), target: m.clone(), matrix: l };
            assert!(ul.defect() < 1e-12);
            if m.dim() == 0 {
                assert_eq!(ul.matrix.shape(), (0, 0));
            }
        }
    }
}

#[test]
fn zero_bimodule_fuses_to_zero() {
    let a = algs();
    let z = Arc::new(Bimodule::zero("z", &a.c, &a.m2));
    let col = Arc::new(Bimodule::column(&a.m2, &a.c));
    assert_eq!(dim(&z, &col), 0);
    let reg = Arc::new(Bimodule::regular(&a.m2));
    assert_eq!(dim(&z, &reg), 0);
}

#[test]
fn tensor_smoke_cases() {
    let a = algs();
    let col = Arc::new(Bimodule::column(&a.m2, &a.c));
    let row = Arc::new(Bimodule::row(&a.c, &a.m2));
    let rc = Arc::new(Bimodule::regular(&a.c));
    let rcc = Arc::new(Bimodule::regular(&a.cc));
    let z = Arc::new(Bimodule::zero("z", &a.c, &a.c));
    let left = vec![(col.clone(), row.clone()), (row.clone(), col.clone())];
    let right = vec![(rc.clone(), rc.clone()), (rcc.clone(), rcc.clone()), (z.clone(), rc.clone())];
    let rep = tensor_smoke(&left, &right, 1e-9).unwrap();
    assert!(rep.pass, "{:?}", rep.cases);
    assert_eq!(rep.cases.len(), 6);
    // (A⊗ℂ) cases are permutations: exact
    assert_eq!(rep.cases[0].residual, 0.0);
    assert_eq!(rep.cases[0].lhs_dim, 4);
    assert_eq!(rep.cases[1].lhs_dim, 8);
    assert_eq!(rep.cases[2].lhs_dim, 0);
}
