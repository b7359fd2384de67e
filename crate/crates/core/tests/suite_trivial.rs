use dicat_core::dicat::{check_fibrations, validate_structure, DicatData};
use dicat_core::engine::expr::{builtin_axiom_text, GenTable};
use dicat_core::engine::suite::{run_suite, SuiteOptions};
use dicat_core::findicat::FinDicat;

#[test]
fn trivial_instance_passes_everything() {
    let d = DicatData::new(FinDicat::trivial());
    let s = validate_structure(&d, 1e-12, 0);
    assert!(s.passed(), "{:?}", s.failing_ids());
    assert!(check_fibrations(&d, 1e-12).passed());
    let axioms = GenTable::reference().parse_axioms(builtin_axiom_text()).unwrap();
    let r = run_suite(&d, &axioms, SuiteOptions::new(1e-12, 0));
    assert!(r.pass, "{}", r.to_json());
    assert_eq!(r.axioms.len(), 38);
    assert!(r.axioms.iter().all(|a| a.probes == 1));
}
