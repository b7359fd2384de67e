use std::sync::Arc;

use proptest::prelude::*;

use dicat_core::linalg::{residual, CMatrix, C64};
use dicat_morita::fusion::{fusion_defect, rel_tensor_with};
use dicat_morita::*;

fn cc() -> Arc<Algebra> {
    Arc::new(Algebra::complex2())
}

fn multiplicities(m: &Bimodule) -> [[usize; 2]; 2] {
    let a = &m.left_algebra;
    let mut out = [[0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            let p = m.left(&a.block_unit(i)).mul(&m.right(&a.block_unit(j)));
            let tr: C64 = (0..m.dim()).map(|k| p.get(k, k)).sum();
            *x = tr.re.round() as usize;
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fusion_dimension_is_the_multiplicity_product(s1 in any::<u64>(), s2 in any::<u64>(), scramble in proptest::option::of(any::<u64>())) {
        let a = cc();
        let m = Arc::new(random_cc_bimodule("m", &a, s1).unwrap());
        let n = Arc::new(random_cc_bimodule("n", &a, s2).unwrap());
        let (x, y) = (multiplicities(&m), multiplicities(&n));
        let mut want = 0;
        for i in 0..2 { for j in 0..2 { for k in 0..2 { want += x[i][j] * y[j][k]; } } }
        let f = rel_tensor_with(&m, &n, 1e-9, scramble).unwrap();
        prop_assert_eq!(f.bimodule.dim(), want);
        prop_assert_eq!(coequalizer_dim(&m, &n, 1e-9).unwrap(), want);
        prop_assert!(fusion_defect(&f.bimodule).unwrap() < 1e-9);
    }

    #[test]
    fn hom_dimension_is_the_multiplicity_pairing(s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = cc();
        let m = random_cc_bimodule("m", &a, s1).unwrap();
        let n = random_cc_bimodule("n", &a, s2).unwrap();
        let (x, y) = (multiplicities(&m), multiplicities(&n));
        let want: usize = (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| x[i][j] * y[i][j]).sum();
        prop_assert_eq!(hom_space(&m, &n, 1e-9).unwrap().len(), want);
    }

    #[test]
    fn associators_are_isomorphisms(s in any::<u64>(), scramble in proptest::option::of(1u64..1000)) {
        let a = cc();
        let cfg = MoritaConfig { scramble: scramble.is_some(), seed: scramble.unwrap_or(0), ..Default::default() };
        let o = build_oracle(&cfg).unwrap();
        let mut ctx = FusionCache::default();
        let m = Arc::new(random_cc_bimodule("p", &a, s).unwrap());
        let n = Arc::new(random_cc_bimodule("q", &a, s.wrapping_add(1)).unwrap());
        let p = Arc::new(random_cc_bimodule("r", &a, s.wrapping_add(2)).unwrap());
        let x = o.assoc(&mut ctx, &m, &n, &p).unwrap();
        prop_assert!(x.defect() < 1e-9);
        let back = x.inverse().unwrap().then(&x).unwrap();
        prop_assert!(residual(&back.matrix, &CMatrix::identity(x.src.dim())).unwrap() < 1e-9);
    }

    #[test]
    fn transport_round_trips(s in any::<u64>()) {
        let a = cc();
        let m = Arc::new(random_cc_bimodule("m", &a, s).unwrap());
        let sw = dicat_morita::algebra::block_swap(&a, 0, 1).unwrap();
        let (t, u) = m.transport(&sw, &sw, 1e-9).unwrap();
        prop_assert!(u.defect() < 1e-9);
        let (tt, _) = t.transport(&sw, &sw, 1e-9).unwrap();
        for (p, q) in tt.left_action.iter().zip(&m.left_action) {
            prop_assert!(residual(p, q).unwrap() < 1e-12);
        }
        let swapped = multiplicities(&t);
        let orig = multiplicities(&m);
        prop_assert_eq!(swapped[0][0], orig[1][1]);
        prop_assert_eq!(swapped[0][1], orig[1][0]);
    }
}
