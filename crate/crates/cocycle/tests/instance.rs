use std::time::Instant;

use dicat_cocycle::*;
use dicat_core::dicat::{check_fibrations, validate_structure};
use dicat_core::engine::expr::{builtin_axiom_text, AxiomDef, GenTable};
use dicat_core::engine::suite::{check_axiom_on, run_suite, SuiteOptions};
use dicat_core::oracle::InstanceOracle;

fn axioms() -> Vec<AxiomDef> {
    GenTable::reference().parse_axioms(builtin_axiom_text()).unwrap()
}

fn pentagon() -> AxiomDef {
    axioms().into_iter().find(|a| a.id == "D3-17").unwrap()
}

#[test]
fn z2_trivial_and_nontrivial_pass_exactly() {
    let ax = axioms();
    for om in ["trivial", "nontrivial"] {
        let c = preset("z2", om).unwrap();
        let d = build_cocycle_instance(&c).unwrap();
        let r = run_suite(&d, &ax, SuiteOptions::new(1e-12, 0));
        assert!(r.pass, "{om}: {:?}", r.failing_ids());
        assert_eq!(r.summary.max_residual, 0.0);
        assert_eq!(r.axiom("D3-17").unwrap().probes, 16);
    }
}

#[test]
fn associator_component_is_omega() {
    let c = preset("z4", "nontrivial").unwrap();
    let d = build_oracle(&c).unwrap();
    let q = c.order as usize;
    for g in 0..4 {
        for h in 0..4 {
            for k in 0..4 {
                let m = d.component(&mut (), "D2-12", &[g, h, k]).unwrap();
                let ghk = (g + h + k) % 4;
                assert_eq!(m, ghk * q + c.omega(g, h, k) as usize);
            }
        }
    }
    // ω(1,2,3) = ζ^{1·⌊5/4⌋} = ζ
    assert_eq!(c.omega(1, 2, 3), 1);
    assert_eq!(c.omega(3, 1, 2), 0);
}

#[test]
fn sign_tamper_on_z2_is_still_a_cocycle() {
    // ω(1,1,1) is the only free normalized entry on ℤ/2; δω(1,1,1,1) = ω(1,1,1)².
    let mut c = preset("z2", "trivial").unwrap();
    c.tamper([1, 1, 1], 2).unwrap();
    assert!(cocycle_condition(&c).is_empty());
    let d = build_cocycle_instance(&c).unwrap();
    assert!(check_axiom_on(&d, &pentagon(), 1e-12, 0).passed());
}

#[test]
fn quarter_tamper_on_z2_fails_at_the_full_quadruple() {
    let mut c = preset("z2", "trivial").unwrap();
    c.tamper([1, 1, 1], 1).unwrap();
    // worked by hand: only (1,1,1,1) sees ω(1,1,1) an unequal number of times
    assert_eq!(cocycle_condition(&c), vec![[1, 1, 1, 1]]);
    let d = build_cocycle_instance(&c).unwrap();
    let out = check_axiom_on(&d, &pentagon(), 1e-12, 0);
    let got: Vec<&str> = out.failing.iter().map(|p| p.probe.as_str()).collect();
    assert_eq!(got, vec!["[1,1,1,1]"]);
    // i² against 1
    assert!((out.row.max_residual - 2.0).abs() < 1e-12);
}

#[test]
fn tampered_suite_names_the_pentagon() {
    let mut c = preset("z3", "nontrivial").unwrap();
    c.tamper([1, 1, 1], 1).unwrap();
    let oracle = quad_labels(&c, &cocycle_condition(&c));
    assert!(!oracle.is_empty());
    let d = build_cocycle_instance(&c).unwrap();
    let r = run_suite(&d, &axioms(), SuiteOptions::new(1e-12, 0));
    assert!(!r.pass);
    assert!(r.structure.passed());
    let row = r.axiom("D3-17").unwrap();
    assert_eq!(row.failures, oracle.len());
}

#[test]
fn every_preset_passes_quickly() {
    let ax = axioms();
    let start = Instant::now();
    for g in GROUP_PRESETS {
        for om in ["trivial", "nontrivial"] {
            let c = preset(g, om).unwrap();
            assert!(cocycle_condition(&c).is_empty(), "{g} {om}");
            let d = build_cocycle_instance(&c).unwrap();
            let r = run_suite(&d, &ax, SuiteOptions::new(1e-12, 7));
            assert!(r.pass, "{g} {om}: {:?}", r.failing_ids());
            assert_eq!(r.summary.max_residual, 0.0);
        }
    }
    assert!(start.elapsed().as_secs_f64() < 10.0 * 2.0, "took {:?}", start.elapsed());
}

#[test]
fn level_bundle_is_an_isofibration() {
    let d = build_cocycle_instance(&preset("s3", "nontrivial").unwrap()).unwrap();
    let f = check_fibrations(&d, 1e-12);
    assert_eq!(f.status, "pass", "{:?}", f.failures);
    assert_eq!(f.method, "exhaustive");
    assert!(validate_structure(&d, 1e-12, 0).passed());
}
