use std::sync::Arc;

use dicat_core::linalg::{commutant, span_eq, CMatrix, C64};
use dicat_core::oracle::{FibrationSupport, InstanceOracle};
use dicat_morita::algebra::{block_swap, inner_automorphism};
use dicat_morita::*;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[test]
fn transport_along_identities_is_the_identity() {
    let m2 = Arc::new(Algebra::m2());
    let cx = Arc::new(Algebra::complex());
    let col = Arc::new(Bimodule::column(&m2, &cx));
    let (t, u) = col.transport(&AlgIso::identity(&m2), &AlgIso::identity(&cx), 1e-9).unwrap();
    assert_eq!(t.left_action, col.left_action);
    assert_eq!(t.right_action, col.right_action);
    assert!(u.defect() < 1e-12);
    assert_eq!(u.matrix, CMatrix::identity(2));
}

#[test]
fn swap_exchanges_isotypic_components() {
    let cc = Arc::new(Algebra::complex2());
    let cx = Arc::new(Algebra::complex());
    let e1 = Arc::new(Bimodule::character("e1", &cc, &[c(1.0), c(0.0)], &cx, &[c(1.0)]));
    let e2 = Arc::new(Bimodule::character("e2", &cc, &[c(0.0), c(1.0)], &cx, &[c(1.0)]));
    let s = block_swap(&cc, 0, 1).unwrap();
    assert!(s.defect() < 1e-12);
    let (t, u) = e1.transport(&s, &AlgIso::identity(&cx), 1e-9).unwrap();
    assert!(u.defect() < 1e-12);
    assert_eq!(hom_space(&t, &e2, 1e-9).unwrap().len(), 1);
    assert_eq!(hom_space(&t, &e1, 1e-9).unwrap().len(), 0);
    // transporting twice along the swap returns the original actions
    let (tt, v) = t.transport(&s, &AlgIso::identity(&cx), 1e-9).unwrap();
    assert_eq!(tt.left_action, e1.left_action);
    let both = v.then(&u).unwrap();
    assert!(both.defect() < 1e-12);
    assert!(s.then(&s).unwrap().is_identity_on(&cc));
}

#[test]
fn transport_rejects_mismatched_isomorphisms() {
    let cc = Arc::new(Algebra::complex2());
    let cx = Arc::new(Algebra::complex());
    let e1 = Arc::new(Bimodule::character("e1", &cc, &[c(1.0), c(0.0)], &cx, &[c(1.0)]));
    let bad = AlgIso::identity(&cx);
    assert!(matches!(e1.transport(&bad, &bad, 1e-9), Err(MoritaError::Incompatible(_))));
    let skew = AlgIso { matrix: CMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap(), ..AlgIso::identity(&cc) };
    assert!(matches!(e1.transport(&skew, &bad, 1e-9), Err(MoritaError::InvalidIso(_))));
}

#[test]
fn inner_automorphisms_fix_bimodules_up_to_iso() {
    let m2 = Arc::new(Algebra::m2());
    let cx = Arc::new(Algebra::complex());
    let g = CMatrix::from_real(2, 2, &[2.0, 1.0, 0.0, 1.0]).unwrap();
    let a = inner_automorphism(&m2, 0, &g).unwrap();
    assert!(a.defect() < 1e-12);
    let col = Arc::new(Bimodule::column(&m2, &cx));
    let (t, _) = col.transport(&a, &AlgIso::identity(&cx), 1e-9).unwrap();
    // x ↦ g x g⁻¹ is inner, so the transported column module is isomorphic to the column module
    let h = hom_space(&t, &col, 1e-9).unwrap();
    assert_eq!(h.len(), 1);
    assert!(h[0].inverse().is_ok());
}

#[test]
fn centralizers_of_regular_actions() {
    for alg in [Algebra::complex(), Algebra::complex2(), Algebra::m2(), Algebra::cm2()] {
        let d = alg.dim();
        let left = commutant(alg.left_regulars(), d, 1e-9).unwrap();
        // the commutant of left multiplication is right multiplication, and back
        assert!(span_eq(&left, alg.right_regulars(), d, d, 1e-9), "{}", alg.name);
        let right = commutant(alg.right_regulars(), d, 1e-9).unwrap();
        assert!(span_eq(&right, alg.left_regulars(), d, d, 1e-9), "{}", alg.name);
        assert_eq!(left.len(), d);
    }
    // the column module: End is the scalars
    let m2 = Arc::new(Algebra::m2());
    let cx = Arc::new(Algebra::complex());
    let col = Bimodule::column(&m2, &cx);
    assert_eq!(commutant(&col.left_action, 2, 1e-9).unwrap().len(), 1);
    assert_eq!(hom_space(&col, &col, 1e-9).unwrap().len(), 1);
}

#[test]
fn oracle_exposes_transport_trials_at_both_levels() {
    let o = build_oracle(&MoritaConfig { preset: "small".into(), probe_cap: 40, ..Default::default() }).unwrap();
    let FibrationSupport::Transport(trials) = o.fibration_support() else { panic!("expected transport") };
    assert!(trials.iter().any(|t| t.level == 1));
    assert!(trials.iter().any(|t| t.level == 2));
    assert!(trials.iter().all(|t| t.error.is_none() && t.residual < 1e-9), "{:?}", trials.iter().find(|t| t.residual >= 1e-9));
}

#[test]
fn labels_and_metadata() {
    let o = build_oracle(&MoritaConfig::scrambled(3)).unwrap();
    assert_eq!(o.name(), "morita (scrambled)");
    let meta = o.metadata();
    assert_eq!(meta["name"], "morita (scrambled)");
    let objs = o.probe_objects(1);
    assert!(objs.iter().any(|x| o.obj_label(1, x) == "col"));
}
