//! Acceptance criteria, one verdict line each.

use std::collections::BTreeSet;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;

use dicat_cocycle::{build_cocycle_instance, preset, CocycleInstance, GROUP_PRESETS};
use dicat_core::dicat::{check_fibrations, isofibration_levels, DicatData};
use dicat_core::engine::expr::{builtin_axiom_text, AxiomDef, GenTable};
use dicat_core::engine::mutate::{mutate_and_check, MutationSpec, ProbeSelect};
use dicat_core::engine::suite::{check_axiom_on, run_suite, SuiteOptions};
use dicat_core::fincat::{fiber_pair, fiber_product, product, FinCategory, FunctorData};
use dicat_core::findicat::{discrete_over_contractible, FinDicat};
use dicat_core::linalg::{commutant, residual, span_eq, CMatrix};
use dicat_core::oracle::{FibrationSupport, InstanceOracle, LevelBundle};
use dicat_morita::*;

type Verdict = Result<String, String>;

fn axioms() -> Vec<AxiomDef> {
    GenTable::reference().parse_axioms(builtin_axiom_text()).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn criterion_1() -> Verdict {
    let t = Instant::now();
    let d = build_instance(&MoritaConfig::default()).map_err(|e| e.to_string())?;
    let r = run_suite(&d, &axioms(), SuiteOptions::new(1e-9, 0));
    let secs = t.elapsed().as_secs_f64();
    ensure(r.pass, || format!("failing: {:?}", r.failing_ids()))?;
    ensure(r.axioms.len() == 38, || format!("{} axioms", r.axioms.len()))?;
    ensure(r.summary.max_residual < 1e-9, || format!("max residual {:e}", r.summary.max_residual))?;
    ensure(secs < 60.0, || format!("{secs:.1} s"))?;
    Ok(format!(
        "Morita default: {} structure checks, fibrations {}, {} axioms over {} probes, max residual {:.1e}, {secs:.1} s",
        r.summary.structure_checks, r.fibrations.status, r.axioms.len(), r.summary.probes, r.summary.max_residual
    ))
}

fn criterion_2() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 1..=5 {
        let d = build_instance(&MoritaConfig::scrambled(seed)).map_err(|e| e.to_string())?;
        let r = run_suite(&d, &axioms(), SuiteOptions::new(1e-8, seed));
        ensure(r.pass, || format!("seed {seed}: {:?}", r.failing_ids()))?;
        ensure(r.summary.max_residual < 1e-8, || format!("seed {seed}: max residual {:e}", r.summary.max_residual))?;
        worst = worst.max(r.summary.max_residual);
    }
    // the scrambled associator on the regular M₂ bimodule is a genuinely nontrivial matrix
    let o = build_oracle(&MoritaConfig::scrambled(1)).map_err(|e| e.to_string())?;
    let r = Arc::new(Bimodule::regular(&Arc::new(Algebra::m2())));
    let x = o.assoc(&mut FusionCache::default(), &r, &r, &r).map_err(|e| e.to_string())?;
    let off = residual(&x.matrix, &CMatrix::identity(x.src.dim())).map_err(|e| e.to_string())?;
    ensure(off > 1e-3 && x.defect() < 1e-8, || format!("scrambled associator off identity by {off:e}, defect {:e}", x.defect()))?;
    Ok(format!("5 scrambled seeds pass, worst max residual {worst:.1e}; scrambled associator differs from identity by {off:.2}"))
}

/// δω ≠ 1 by direct evaluation, as probe labels.
fn coboundary_failures(c: &CocycleInstance) -> BTreeSet<String> {
    let n = c.group.order();
    let m = |a: usize, b: usize| c.group.table[a][b];
    let mut out = BTreeSet::new();
    for g in 0..n {
        for h in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let lhs = c.omega(h, k, l) + c.omega(g, m(h, k), l) + c.omega(g, h, k);
                    let rhs = c.omega(m(g, h), k, l) + c.omega(g, h, m(k, l));
                    if lhs % c.order != rhs % c.order {
                        out.insert(c.label(&[g, h, k, l]));
                    }
                }
            }
        }
    }
    out
}

fn criterion_3() -> Verdict {
    let ax = axioms();
    for om in ["trivial", "nontrivial"] {
        let d = build_cocycle_instance(&preset("z2", om).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let r = run_suite(&d, &ax, SuiteOptions::new(1e-12, 0));
        ensure(r.pass && r.summary.max_residual == 0.0, || format!("z2 {om}: {:?}, residual {:e}", r.failing_ids(), r.summary.max_residual))?;
    }
    let pentagon = ax.iter().find(|a| a.id == "D3-17").ok_or("no pentagon axiom")?;
    let mut tampered = 0;
    for (g, at) in [("z2", [1, 1, 1]), ("z3", [1, 1, 1]), ("z3", [1, 2, 1]), ("z4", [2, 3, 1]), ("s3", [1, 3, 4])] {
        let mut c = preset(g, "nontrivial").map_err(|e| e.to_string())?;
        c.tamper(at, 1).map_err(|e| e.to_string())?;
        let want = coboundary_failures(&c);
        let d = build_cocycle_instance(&c).map_err(|e| e.to_string())?;
        let got: BTreeSet<String> = check_axiom_on(&d, pentagon, 1e-12, 0).failing.into_iter().map(|p| p.probe).collect();
        ensure(!want.is_empty() && got == want, || format!("{g} tampered at {at:?}: engine {got:?}, brute force {want:?}"))?;
        tampered += want.len();
    }
    let t = Instant::now();
    for g in GROUP_PRESETS {
        for om in ["trivial", "nontrivial"] {
            let d = build_cocycle_instance(&preset(g, om).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let r = run_suite(&d, &ax, SuiteOptions::new(1e-12, 0));
            ensure(r.pass && r.summary.max_residual == 0.0, || format!("{g} {om}: {:?}", r.failing_ids()))?;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("groups of order ≤ 6 took {secs:.1} s"))?;
    Ok(format!(
        "ℤ/2 trivial and nontrivial exact; 5 tampered cochains match δω brute force ({tampered} quadruples); {} presets in {secs:.1} s",
        GROUP_PRESETS.len() * 2
    ))
}

fn run_mutations<O: InstanceOracle>(d: &DicatData<O>, scales: [Complex64; 2]) -> Result<(usize, usize), String> {
    let ax = axioms();
    let mut targets = BTreeSet::new();
    let mut n = 0;
    for (i, t) in GenTable::reference().transformation_keys().into_iter().enumerate() {
        let spec = MutationSpec { target: t.clone(), scale: scales[i % 2], select: ProbeSelect::Seeded };
        let m = mutate_and_check(d, &ax, &spec, SuiteOptions::new(1e-9, i as u64)).map_err(|e| format!("{t}: {e}"))?;
        ensure(m.baseline_failures.is_empty(), || format!("{t}: baseline fails {:?}", m.baseline_failures))?;
        ensure(m.detected, || format!("{t} × {} at {} undetected", spec.scale, m.probe))?;
        targets.insert(t);
        n += 1;
    }
    Ok((n, targets.len()))
}

fn criterion_4() -> Verdict {
    let i = Complex64::new(0.0, 1.0);
    let d = build_cocycle_instance(&preset("z2", "nontrivial").map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let (cn, ct) = run_mutations(&d, [i, -i])?;
    let d = build_instance(&MoritaConfig { preset: "small".into(), ..Default::default() }).map_err(|e| e.to_string())?;
    let (mn, mt) = run_mutations(&d, [i, Complex64::new(1.5, 0.0)])?;
    ensure(cn >= 10 && ct >= 5 && mn >= 10 && mt >= 5, || "too few mutations".into())?;
    Ok(format!("cocycle: {cn} seeded mutations over {ct} targets detected; Morita: {mn} over {mt} detected"))
}

fn criterion_5() -> Verdict {
    let (c, cc, m2) = (Arc::new(Algebra::complex()), Arc::new(Algebra::complex2()), Arc::new(Algebra::m2()));
    let col = Arc::new(Bimodule::column(&m2, &c));
    let row = Arc::new(Bimodule::row(&c, &m2));
    let dim = |x: &Arc<Bimodule>, y: &Arc<Bimodule>| rel_tensor(x, y, 1e-9).map(|f| f.bimodule.dim()).map_err(|e| e.to_string());
    let (cr, rc) = (dim(&col, &row)?, dim(&row, &col)?);
    ensure(cr == 4 && rc == 1, || format!("col⊗row = {cr}, row⊗col = {rc}"))?;
    let mut cases = 2;
    for s in 0..24u64 {
        let x = Arc::new(random_cc_bimodule("x", &cc, s).map_err(|e| e.to_string())?);
        let y = Arc::new(random_cc_bimodule("y", &cc, s + 1000).map_err(|e| e.to_string())?);
        ensure(x.dim() <= 4 && y.dim() <= 4, || "probe bimodule too large".into())?;
        let (got, want) = (dim(&x, &y)?, coequalizer_dim(&x, &y, 1e-9).map_err(|e| e.to_string())?);
        ensure(got == want, || format!("seed {s}: rel_tensor {got}, coequalizer {want}"))?;
        cases += 1;
    }
    Ok(format!("{cases} cases agree with the coequalizer rank, col⊗_ℂ row = 4, row⊗_M₂ col = 1"))
}

fn criterion_6() -> Verdict {
    let mut names = Vec::new();
    for a in [Algebra::complex(), Algebra::complex2(), Algebra::m2(), Algebra::cm2()] {
        let d = a.dim();
        let com = commutant(a.left_regulars(), d, 1e-9).map_err(|e| e.to_string())?;
        ensure(span_eq(&com, a.right_regulars(), d, d, 1e-9), || format!("{}: commutant of the left action", a.name))?;
        let back = commutant(a.right_regulars(), d, 1e-9).map_err(|e| e.to_string())?;
        ensure(span_eq(&back, a.left_regulars(), d, d, 1e-9), || format!("{}: commutant of the right action", a.name))?;
        names.push(a.name.clone());
    }
    Ok(format!("left and right regular actions are mutual commutants for {}", names.join(", ")))
}

/// Failing `(object, isomorphism)` lift problems of `p`, by exhaustive search
/// with inverses found from the composition table.
fn brute_force_lifts(p: &FunctorData) -> usize {
    let iso = |c: &FinCategory, f: usize| {
        (0..c.n_morphisms()).any(|g| {
            c.compose(f, g) == c.identity(c.src(f)) && c.compose(g, f) == c.identity(c.dst(f)) && c.identity(c.src(f)).is_some()
        })
    };
    let (e, b) = (&*p.source, &*p.target);
    let mut fails = 0;
    for phi in (0..b.n_morphisms()).filter(|&f| iso(b, f)) {
        for x in (0..e.n_objects()).filter(|&x| p.obj_map[x] == b.src(phi)) {
            if !(0..e.n_morphisms()).any(|m| e.src(m) == x && p.mor_map[m] == phi && iso(e, m)) {
                fails += 1;
            }
        }
    }
    fails
}

fn exhaustive_levels(bundle: &LevelBundle) -> Result<[usize; 2], String> {
    let (_, p1, p2) = product(bundle.c0.clone(), bundle.c0.clone()).map_err(|e| e.to_string())?;
    let st1 = fiber_pair(&p1, &p2, &bundle.s1, &bundle.t1).map_err(|e| e.to_string())?;
    let (_, q1, q2) = fiber_product(&st1, &st1).map_err(|e| e.to_string())?;
    let st2 = fiber_pair(&q1, &q2, &bundle.s2, &bundle.t2).map_err(|e| e.to_string())?;
    Ok([brute_force_lifts(&st1), brute_force_lifts(&st2)])
}

fn criterion_7() -> Verdict {
    let mut cases: Vec<(String, FinDicat)> = vec![("trivial".into(), FinDicat::trivial()), ("discrete over contractible".into(), discrete_over_contractible())];
    for (g, om) in [("z2", "nontrivial"), ("z3", "trivial"), ("s3", "nontrivial")] {
        let c = preset(g, om).map_err(|e| e.to_string())?;
        cases.push((format!("cocycle {g}"), dicat_cocycle::build_oracle(&c).map_err(|e| e.to_string())?));
    }
    let mut verdicts = Vec::new();
    for (name, o) in cases {
        let FibrationSupport::Exhaustive(b) = o.fibration_support() else { return Err(format!("{name}: not exhaustive")) };
        let brute = exhaustive_levels(&b)?;
        let engine = isofibration_levels(&b)?;
        let counts: Vec<usize> = engine.iter().map(|(_, v)| v.len()).collect();
        ensure(counts == brute, || format!("{name}: engine {counts:?}, brute force {brute:?}"))?;
        let rep = check_fibrations(&DicatData::new(o), 1e-12);
        let brute_pass = brute == [0, 0];
        ensure(rep.passed() == brute_pass, || format!("{name}: verdict {} but brute force {brute:?}", rep.status))?;
        verdicts.push(format!("{name} {}", if brute_pass { "pass" } else { "fail" }));
    }
    let o = build_oracle(&MoritaConfig::default()).map_err(|e| e.to_string())?;
    let FibrationSupport::Transport(trials) = o.fibration_support() else { return Err("Morita: no transport trials".into()) };
    ensure(trials.iter().any(|t| t.level == 1) && trials.iter().any(|t| t.level == 2), || "Morita: a level has no trials".into())?;
    if let Some(t) = trials.iter().find(|t| t.error.is_some() || !(t.residual < 1e-9)) {
        return Err(format!("Morita transport {} at level {}: {:?} residual {:e}", t.label, t.level, t.error, t.residual));
    }
    Ok(format!("exhaustive verdicts match lift search ({}); {} Morita transport lifts valid", verdicts.join(", "), trials.len()))
}

fn criterion_8() -> Verdict {
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_dicat"))
            .args(["check", "--instance", "morita", "--format", "json"])
            .env("DICAT_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(0), || format!("DICAT_THREADS={threads}: exit {:?}", out.status.code()))?;
        Ok(out.stdout)
    };
    let (a, b) = (run("1")?, run("8")?);
    ensure(!a.is_empty() && a == b, || "reports differ".into())?;
    Ok(format!("DICAT_THREADS=1 and =8 give byte-identical {}-byte JSON reports", a.len()))
}

fn main() -> ExitCode {
    let criteria: [(u8, fn() -> Verdict); 8] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        match f() {
            Ok(m) => println!("criterion {n}: PASS  {m}"),
            Err(m) => {
                failed += 1;
                println!("criterion {n}: FAIL  {m}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
