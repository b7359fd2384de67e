use dicat_cocycle::*;
use dicat_core::engine::expr::{builtin_axiom_text, GenTable};
use dicat_core::engine::suite::check_axiom_on;
use proptest::prelude::*;

fn random_cochain(group: &str, entries: Vec<u32>) -> CocycleInstance {
    let base = preset(group, "trivial").unwrap();
    let n = base.group.order();
    let e = base.group.validate().unwrap();
    let q = base.order;
    CocycleInstance::new("random", base.group.clone(), q, move |g, h, k| {
        let v = entries[((g * n + h) * n + k) % entries.len()];
        if g == e || h == e || k == e || n == 1 {
            0
        } else {
            v
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The pentagon failures reported by the engine are exactly the quadruples
    /// where δω ≠ 1.
    #[test]
    fn engine_matches_coboundary_oracle(gi in 0usize..GROUP_PRESETS.len(), entries in proptest::collection::vec(0u32..6, 1..40)) {
        let c = random_cochain(GROUP_PRESETS[gi], entries);
        c.validate().unwrap();
        let d = build_cocycle_instance(&c).unwrap();
        let ax = GenTable::reference().parse_axioms(builtin_axiom_text()).unwrap();
        let pent = ax.iter().find(|a| a.id == "D3-17").unwrap();
        let out = check_axiom_on(&d, pent, 1e-12, 0);
        let engine: Vec<String> = out.failing.iter().map(|p| p.probe.clone()).collect();
        prop_assert_eq!(engine, quad_labels(&c, &cocycle_condition(&c)));
        prop_assert_eq!(out.row.probes, c.group.order().pow(4));
    }

    /// Residuals are exactly zero or a root-of-unity gap.
    #[test]
    fn residuals_are_exact(gi in 0usize..GROUP_PRESETS.len(), entries in proptest::collection::vec(0u32..6, 1..40)) {
        let c = random_cochain(GROUP_PRESETS[gi], entries);
        let d = build_cocycle_instance(&c).unwrap();
        let ax = GenTable::reference().parse_axioms(builtin_axiom_text()).unwrap();
        let pent = ax.iter().find(|a| a.id == "D3-17").unwrap();
        let out = check_axiom_on(&d, pent, 1e-12, 0);
        let gaps: Vec<f64> = (0..c.order).map(|k| (2.0 * (std::f64::consts::PI * k as f64 / c.order as f64).sin()).abs()).collect();
        for p in out.failing.iter().chain(out.worst.iter()) {
            prop_assert!(gaps.iter().any(|g| (g - p.residual).abs() < 1e-12), "{}", p.residual);
        }
    }

    #[test]
    fn json_roundtrip(gi in 0usize..GROUP_PRESETS.len(), entries in proptest::collection::vec(0u32..6, 1..40)) {
        let c = random_cochain(GROUP_PRESETS[gi], entries);
        let text = CocycleFile::from_instance(&c).to_json();
        let back = CocycleFile::parse(&text).unwrap();
        prop_assert_eq!(back, c);
    }
}

#[test]
fn nonassociative_table_is_rejected() {
    let mut g = Group::cyclic(3);
    g.table[1][1] = 0;
    let err = g.validate().unwrap_err();
    assert!(matches!(err, CocycleError::InvalidGroup(_)), "{err}");
}

#[test]
fn unnormalized_cochain_is_rejected() {
    let c = CocycleInstance::new("bad", Group::cyclic(2), 2, |g, _, _| (g == 0) as u32);
    assert!(matches!(c.validate(), Err(CocycleError::InvalidCochain(_))));
    let mut t = preset("z3", "trivial").unwrap();
    assert!(t.tamper([0, 1, 1], 1).is_err());
}

#[test]
fn preset_groups_have_expected_orders() {
    let orders: Vec<usize> = GROUP_PRESETS.iter().map(|g| preset(g, "trivial").unwrap().group.order()).collect();
    assert_eq!(orders, vec![2, 3, 4, 5, 6, 4, 6]);
    // S3 is not abelian
    let s3 = Group::s3();
    assert!((0..6).any(|g| (0..6).any(|h| s3.mul(g, h) != s3.mul(h, g))));
}

#[test]
fn wrong_schema_is_rejected() {
    let text = CocycleFile::from_instance(&preset("z2", "trivial").unwrap()).to_json().replace("cocycle/v1", "cocycle/v0");
    assert!(matches!(CocycleFile::parse(&text), Err(CocycleError::Json(_))));
}
