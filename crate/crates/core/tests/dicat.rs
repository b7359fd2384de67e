use dicat_core::cells::Op;
use dicat_core::dicat::{check_fibrations, missing_entries, DicatData};
use dicat_core::engine::expr::{builtin_axiom_text, AxiomDef, GenTable};
use dicat_core::engine::mutate::{mutate_and_check, mutation_targets, MutationError, MutationSpec, ProbeSelect};
use dicat_core::engine::suite::{render_text, run_suite, SuiteOptions};
use dicat_core::findicat::{discrete_over_contractible, DicatFile, DicatFileError, FinDicat};
use dicat_core::linalg::C64;

fn axioms() -> Vec<AxiomDef> {
    GenTable::reference().parse_axioms(builtin_axiom_text()).unwrap()
}

#[test]
fn a_file_without_a_structure_functor_names_it() {
    let mut f = DicatFile::from_instance(&FinDicat::trivial());
    assert!(f.d1.remove(Op::Il.key()).is_some());
    let d = DicatData::with_table(f.load().unwrap(), f.table().unwrap());
    let missing = missing_entries(&d);
    assert_eq!(missing, vec!["missing structure functor i_l (D1-7)".to_string()]);
    let r = run_suite(&d, &axioms(), SuiteOptions::new(1e-12, 0));
    assert!(!r.pass);
    assert!(r.summary.axioms_skipped);
    assert!(r.failing_ids()[0].contains("missing structure functor i_l"));
    assert!(render_text(&r).contains("FAIL  missing structure functor i_l"));
    let mut f = DicatFile::from_instance(&FinDicat::trivial());
    f.d2.remove("D2-14");
    let d = DicatData::with_table(f.load().unwrap(), f.table().unwrap());
    assert_eq!(missing_entries(&d), vec!["missing transformation D2-14".to_string()]);
}

#[test]
fn dicat_files_roundtrip() {
    let f = DicatFile::from_instance(&FinDicat::trivial());
    let text = f.to_json();
    let back = DicatFile::parse(&text).unwrap();
    assert_eq!(back, f);
    assert_eq!(back.to_json(), text);
    assert_eq!(DicatFile::from_instance(&back.load().unwrap()), f);
    let d = DicatData::with_table(back.load().unwrap(), back.table().unwrap());
    assert!(run_suite(&d, &axioms(), SuiteOptions::new(1e-12, 0)).pass);
}

#[test]
fn malformed_dicat_files_are_rejected() {
    let text = DicatFile::from_instance(&FinDicat::trivial()).to_json();
    assert!(matches!(DicatFile::parse(&text.replace("dicat/v1", "dicat/v9")), Err(DicatFileError::Schema(_))));
    assert!(matches!(DicatFile::parse("[1, 2"), Err(DicatFileError::Json(_))));
    let mut f = DicatFile::parse(&text).unwrap();
    f.d1.insert("D1-99".into(), Default::default());
    assert!(matches!(f.load(), Err(DicatFileError::Schema(m)) if m.contains("unknown structure functor D1-99")));
    let mut f = DicatFile::parse(&text).unwrap();
    f.d2.get_mut("D2-1").unwrap()[0].push("extra".into());
    assert!(matches!(f.load(), Err(DicatFileError::Schema(m)) if m.contains("needs")));
    let mut f = DicatFile::parse(&text).unwrap();
    f.d2.get_mut("D2-1").unwrap()[0][0] = "nowhere".into();
    assert!(matches!(f.load(), Err(DicatFileError::Schema(m)) if m.contains("unknown C2 object nowhere")), "{:?}", f.load().err());
    let mut f = DicatFile::parse(&text).unwrap();
    f.levels = None;
    assert!(f.load().is_err());
}

#[test]
fn discrete_one_cells_over_a_contractible_base_are_not_a_fibration() {
    let d = DicatData::new(discrete_over_contractible());
    let fib = check_fibrations(&d, 1e-12);
    assert_eq!(fib.status, "fail");
    assert_eq!(fib.method, "exhaustive");
    assert!(fib.failures.iter().any(|m| m.starts_with("level 1: no lift")), "{:?}", fib.failures);
    assert!(check_fibrations(&DicatData::new(FinDicat::trivial()), 1e-12).passed());
}

#[test]
fn mutations_of_the_trivial_instance() {
    let d = DicatData::new(FinDicat::trivial());
    let ax = axioms();
    let opts = SuiteOptions::new(1e-12, 0);
    // the trivial instance has no scalars, so only the unit rescaling is representable
    let unit = MutationSpec { target: "D2-3".into(), scale: C64::new(1.0, 0.0), select: ProbeSelect::All };
    let m = mutate_and_check(&d, &ax, &unit, opts).unwrap();
    assert!(!m.detected, "{:?}", m.new_failures);
    assert!(m.report.pass);
    let neg = MutationSpec { scale: C64::new(-1.0, 0.0), select: ProbeSelect::Index(0), ..unit.clone() };
    let e = mutate_and_check(&d, &ax, &neg, opts).unwrap_err();
    assert!(matches!(&e, MutationError::NotRepresentable(t, m) if t == "D2-3" && m.contains("no scalars")), "{e}");
    // the unit changes no component, so there is nothing to pick from
    let seeded = MutationSpec { select: ProbeSelect::Seeded, ..unit.clone() };
    assert!(matches!(mutate_and_check(&d, &ax, &seeded, opts), Err(MutationError::NoEffect(_))));
    assert!(matches!(
        mutate_and_check(&d, &ax, &MutationSpec { target: "D2-99".into(), ..unit.clone() }, opts),
        Err(MutationError::UnknownTarget(_))
    ));
    assert!(matches!(
        mutate_and_check(&d, &ax, &MutationSpec { select: ProbeSelect::Index(5), ..unit }, opts),
        Err(MutationError::BadIndex(5, 1))
    ));
    assert_eq!(mutation_targets().len(), 18);
}

#[test]
fn reports_are_deterministic() {
    let d = DicatData::new(FinDicat::trivial());
    let ax = axioms();
    let a = run_suite(&d, &ax, SuiteOptions::new(1e-12, 7)).to_json();
    let b = run_suite(&d, &ax, SuiteOptions::new(1e-12, 7)).to_json();
    assert_eq!(a, b);
    let r = run_suite(&d, &ax[..3], SuiteOptions::new(1e-12, 7));
    assert_eq!(r.axioms.len(), 3);
    assert!(r.pass);
}
