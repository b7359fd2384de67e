//! The dicategory-object container and its structural validation.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::cells::{Op, Shape, Term};
use crate::engine::eval::{EvalError, Evaluator, Val};
use crate::engine::expr::{AxiomDef, GenDecl, GenTable};
use crate::engine::probes::{shape_endos, shape_probes};
use crate::fincat::{fiber_pair, fiber_product, isofibration_check, product, validate_category, validate_functor};
use crate::oracle::{FibrationSupport, InstanceOracle, LevelBundle};

/// An instance together with the declared signatures of its transformations.
pub struct DicatData<O: InstanceOracle> {
    pub oracle: O,
    pub table: GenTable,
}

impl<O: InstanceOracle> DicatData<O> {
    pub fn new(oracle: O) -> Self {
        DicatData { oracle, table: GenTable::reference().clone() }
    }

    pub fn with_table(oracle: O, table: GenTable) -> Self {
        DicatData { oracle, table }
    }

    pub fn evaluator(&self, tol: f64) -> Evaluator<'_, O> {
        Evaluator::new(&self.oracle, &self.table, tol)
    }
}

/// Aggregated outcome of one check over its probes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub id: String,
    pub probes: usize,
    pub failures: usize,
    pub errors: usize,
    pub max_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRow {
    pub fn new(id: impl Into<String>) -> Self {
        CheckRow { id: id.into(), probes: 0, failures: 0, errors: 0, max_residual: 0.0, detail: None }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.errors == 0
    }

    /// Folds one probe's outcome into the row; returns whether it failed.
    pub fn record(&mut self, label: &str, acc: ProbeAcc, tol: f64) -> bool {
        self.probes += 1;
        if acc.worst.is_finite() {
            self.max_residual = self.max_residual.max(acc.worst);
        }
        let failed = acc.err.is_some() || !(acc.worst <= tol);
        if acc.err.is_some() {
            self.errors += 1;
        }
        if failed {
            self.failures += 1;
            if self.detail.is_none() {
                let what = acc.err.or(acc.what).unwrap_or_default();
                self.detail = Some(format!("at {label}: {what}"));
            }
        }
        failed
    }
}

/// Worst residual and first error seen while checking one probe.
#[derive(Debug, Clone, Default)]
pub struct ProbeAcc {
    pub worst: f64,
    pub what: Option<String>,
    pub err: Option<String>,
}

impl ProbeAcc {
    pub fn residual(&mut self, r: f64, what: impl FnOnce() -> String) {
        let r = if r.is_nan() { f64::INFINITY } else { r };
        if r > self.worst || (self.what.is_none() && r > 0.0) {
            if r > self.worst {
                self.what = Some(what());
            }
            self.worst = self.worst.max(r);
        }
    }
    pub fn mismatch(&mut self, what: impl Into<String>) {
        if self.err.is_none() {
            self.err = Some(what.into());
        }
    }
    pub fn result<T>(&mut self, r: Result<T, EvalError>, what: &str) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.mismatch(format!("{what}: {e}"));
                None
            }
        }
    }
}

pub fn probe_label<O: InstanceOracle>(o: &O, shape: &Shape, p: &[O::Obj]) -> String {
    let levels = shape.prim_levels();
    let parts: Vec<String> = p.iter().zip(levels).map(|(x, l)| o.obj_label(l, x)).collect();
    format!("[{}]", parts.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub missing: Vec<String>,
    pub rows: Vec<CheckRow>,
}

impl StructureReport {
    pub fn passed(&self) -> bool {
        self.missing.is_empty() && self.rows.iter().all(|r| r.passed())
    }
    pub fn failing_ids(&self) -> Vec<String> {
        self.rows.iter().filter(|r| !r.passed()).map(|r| r.id.clone()).collect()
    }
}

/// Table entries the oracle lacks, reported before any other check.
pub fn missing_entries<O: InstanceOracle>(d: &DicatData<O>) -> Vec<String> {
    let mut v = Vec::new();
    for op in Op::ALL {
        if !d.oracle.has_op(op) {
            v.push(format!("missing structure functor {} ({})", op.name(), op.key()));
        }
    }
    for k in d.table.transformation_keys().iter().chain(d.table.witness_keys().iter()) {
        if !d.oracle.has_component(k) {
            v.push(format!("missing transformation {k}"));
        }
    }
    v
}

enum Item<'a> {
    Levels,
    Op(Op),
    Gen(&'a GenDecl),
    Eq(&'a AxiomDef),
}

const ENDOS_PER_COLUMN: usize = 2;

/// Structural validation: source/target compatibility and functoriality of the
/// structure functors, declared endpoints, isomorphy, boundaries and naturality
/// of every transformation, and the invertibility witnesses.
pub fn validate_structure<O: InstanceOracle>(d: &DicatData<O>, tol: f64, seed: u64) -> StructureReport {
    let missing = missing_entries(d);
    if !missing.is_empty() {
        return StructureReport { missing, rows: Vec::new() };
    }
    let mut items = vec![Item::Levels];
    items.extend(Op::ALL.into_iter().map(Item::Op));
    let mut keys = d.table.transformation_keys();
    keys.extend(d.table.witness_keys());
    items.extend(keys.iter().map(|k| Item::Gen(&d.table.decls[k])));
    items.extend(d.table.witness_eqs.iter().map(Item::Eq));
    let rows = items
        .par_iter()
        .map(|it| match it {
            Item::Levels => check_levels(d, tol),
            Item::Op(op) => check_op(d, *op, tol, seed),
            Item::Gen(g) => check_gen(d, g, tol, seed),
            Item::Eq(a) => crate::engine::suite::check_axiom_on(d, a, tol, seed).row,
        })
        .collect();
    StructureReport { missing, rows }
}

fn check_levels<O: InstanceOracle>(d: &DicatData<O>, tol: f64) -> CheckRow {
    let o = &d.oracle;
    let mut row = CheckRow::new("levels");
    if let FibrationSupport::Exhaustive(b) = o.fibration_support() {
        for (name, v) in [
            ("C0", validate_category(&b.c0)),
            ("C1", validate_category(&b.c1)),
            ("C2", validate_category(&b.c2)),
            ("s: C1 -> C0", validate_functor(&b.s1)),
            ("t: C1 -> C0", validate_functor(&b.t1)),
            ("s: C2 -> C1", validate_functor(&b.s2)),
            ("t: C2 -> C1", validate_functor(&b.t2)),
        ] {
            let mut acc = ProbeAcc::default();
            if let Some(first) = v.0.first() {
                acc.mismatch(format!("{} violations, first: {first}", v.0.len()));
            }
            row.record(name, acc, tol);
        }
    }
    for x in o.probe_objects(2) {
        let mut acc = ProbeAcc::default();
        let (s, t) = o.obj_boundary(2, &x);
        let (ss, ts) = o.obj_boundary(1, &s);
        let (st, tt) = o.obj_boundary(1, &t);
        if ss != st || ts != tt {
            acc.mismatch("source and target 1-cells are not parallel");
        }
        row.record(&o.obj_label(2, &x), acc, tol);
    }
    row
}

fn compose_tuple<O: InstanceOracle>(o: &O, levels: &[u8], a: &[O::Mor], b: &[O::Mor]) -> Result<Vec<O::Mor>, EvalError> {
    levels
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&l, (x, y))| o.compose(l, x, y).map_err(EvalError::from))
        .collect()
}

fn check_op<O: InstanceOracle>(d: &DicatData<O>, op: Op, tol: f64, seed: u64) -> CheckRow {
    let o = &d.oracle;
    let ev = d.evaluator(tol);
    let shape = op.domain();
    let term = Term::op(op, shape.prims());
    let level = op.level();
    let levels = shape.prim_levels();
    let mut row = CheckRow::new(op.key());
    let mut ctx = O::Ctx::default();
    for p in shape_probes(o, &shape, o.probe_cap(), seed) {
        let label = probe_label(o, &shape, &p);
        let mut acc = ProbeAcc::default();
        'probe: {
            let Some(env) = acc.result(ev.obj_env(&shape, &p), "probe") else { break 'probe };
            let Some(r) = acc.result(ev.term_obj(&mut ctx, &term, &env), "object") else { break 'probe };
            let (s, t) = o.obj_boundary(level, &r);
            let Some(es) = acc.result(ev.term_obj(&mut ctx, &term.s(), &env), "source") else { break 'probe };
            let Some(et) = acc.result(ev.term_obj(&mut ctx, &term.t(), &env), "target") else { break 'probe };
            if s != es || t != et {
                acc.mismatch(format!("{} is not compatible with source and target", op.name()));
                break 'probe;
            }
            let ids: Vec<O::Mor> = p.iter().zip(&levels).map(|(x, &l)| o.identity(l, x)).collect();
            let mut tuples = vec![ids];
            tuples.extend(shape_endos(o, &shape, &p, ENDOS_PER_COLUMN));
            let mut images = Vec::new();
            for (k, e) in tuples.iter().enumerate() {
                let Some(menv) = acc.result(ev.mor_env(&shape, e), "morphism probe") else { break 'probe };
                let Some(m) = acc.result(ev.term_mor(&mut ctx, &term, &menv), "morphism") else { break 'probe };
                let (a, b) = o.mor_ends(level, &m);
                if a != r || b != r {
                    acc.mismatch("image of an automorphism has the wrong endpoints");
                    break 'probe;
                }
                acc.residual(o.mor_validity(level, &m), || "image is not a valid morphism".into());
                let (ms, mt) = o.mor_boundary(level, &m);
                let Some(xs) = acc.result(ev.term_mor(&mut ctx, &term.s(), &menv), "source image") else { break 'probe };
                let Some(xt) = acc.result(ev.term_mor(&mut ctx, &term.t(), &menv), "target image") else { break 'probe };
                acc.residual(o.mor_residual(level - 1, &ms, &xs), || "source of the image disagrees".into());
                acc.residual(o.mor_residual(level - 1, &mt, &xt), || "target of the image disagrees".into());
                if k == 0 {
                    acc.residual(o.mor_residual(level, &m, &o.identity(level, &r)), || "identities are not preserved".into());
                }
                images.push(m);
            }
            for i in 1..tuples.len() {
                for j in 1..tuples.len() {
                    let Some(c) = acc.result(compose_tuple(o, &levels, &tuples[i], &tuples[j]), "composite probe") else { break 'probe };
                    let Some(menv) = acc.result(ev.mor_env(&shape, &c), "composite probe") else { break 'probe };
                    let Some(fc) = acc.result(ev.term_mor(&mut ctx, &term, &menv), "composite image") else { break 'probe };
                    let Some(cf) = acc.result(o.compose(level, &images[i], &images[j]).map_err(EvalError::from), "image composite") else { break 'probe };
                    acc.residual(o.mor_residual(level, &fc, &cf), || "composition is not preserved".into());
                }
            }
        }
        row.record(&label, acc, tol);
    }
    row
}

fn check_gen<O: InstanceOracle>(d: &DicatData<O>, g: &GenDecl, tol: f64, seed: u64) -> CheckRow {
    let o = &d.oracle;
    let ev = d.evaluator(tol);
    let mut row = CheckRow::new(g.key.clone());
    if let Some(r) = GenTable::reference().decls.get(&g.key) {
        if r.domain != g.domain || r.src != g.src || r.tgt != g.tgt {
            let mut acc = ProbeAcc::default();
            acc.mismatch(format!("declared endpoints of {} differ from the reference signature", g.key));
            row.record("declaration", acc, tol);
        }
    }
    let shape = &g.domain;
    let level = g.cod.as_level().unwrap_or(2);
    let levels = shape.prim_levels();
    let mut ctx = O::Ctx::default();
    for p in shape_probes(o, shape, o.probe_cap(), seed) {
        let label = probe_label(o, shape, &p);
        let mut acc = ProbeAcc::default();
        'probe: {
            let Some(env) = acc.result(ev.obj_env(shape, &p), "probe") else { break 'probe };
            let Some(src) = acc.result(ev.term_obj(&mut ctx, &g.src[0], &env), "declared source") else { break 'probe };
            let Some(tgt) = acc.result(ev.term_obj(&mut ctx, &g.tgt[0], &env), "declared target") else { break 'probe };
            let Some(c) = acc.result(o.component(&mut ctx, &g.key, &p).map_err(EvalError::from), "component") else { break 'probe };
            let (a, b) = o.mor_ends(level, &c);
            if a != src || b != tgt {
                acc.mismatch(format!("component of {} does not have the declared endpoints", g.key));
                break 'probe;
            }
            acc.residual(o.mor_validity(level, &c), || "component is not a valid morphism".into());
            match o.inverse(level, &c) {
                Ok(inv) => {
                    if let (Ok(x), Ok(y)) = (o.compose(level, &c, &inv), o.compose(level, &inv, &c)) {
                        acc.residual(o.mor_residual(level, &x, &o.identity(level, &src)), || "component is not an isomorphism".into());
                        acc.residual(o.mor_residual(level, &y, &o.identity(level, &tgt)), || "component is not an isomorphism".into());
                    } else {
                        acc.mismatch("inverse does not compose");
                    }
                }
                Err(e) => acc.mismatch(format!("component is not invertible: {e}")),
            }
            let (cs, ct) = o.mor_boundary(level, &c);
            for (want, got, what) in [(&g.sbound, cs, "source"), (&g.tbound, ct, "target")] {
                let Some(v) = acc.result(ev.eval(&mut ctx, want, shape, &env), "declared boundary") else { break 'probe };
                let r = ev.compare(&v, &vec![(level - 1, got)]);
                acc.residual(r, || format!("{what} image of the component differs from its declaration"));
            }
            for e in shape_endos(o, shape, &p, ENDOS_PER_COLUMN) {
                let Some(menv) = acc.result(ev.mor_env(shape, &e), "automorphism probe") else { break 'probe };
                let Some(fe) = acc.result(ev.term_mor(&mut ctx, &g.src[0], &menv), "source functor") else { break 'probe };
                let Some(ge) = acc.result(ev.term_mor(&mut ctx, &g.tgt[0], &menv), "target functor") else { break 'probe };
                let lhs = o.compose(level, &fe, &c);
                let rhs = o.compose(level, &c, &ge);
                match (lhs, rhs) {
                    (Ok(x), Ok(y)) => acc.residual(o.mor_residual(level, &x, &y), || "naturality square does not commute".into()),
                    _ => acc.mismatch("naturality square does not compose"),
                }
            }
            let _ = &levels;
        }
        row.record(&label, acc, tol);
    }
    row
}

/// Evaluates an expression at a probe; convenience for tests and tools.
pub fn eval_at<O: InstanceOracle>(d: &DicatData<O>, e: &crate::engine::expr::Expr, shape: &Shape, probe: &[O::Obj], tol: f64) -> Result<Val<O::Mor>, EvalError> {
    let ev = d.evaluator(tol);
    let mut ctx = O::Ctx::default();
    let env = ev.obj_env(shape, probe)?;
    ev.eval(&mut ctx, e, shape, &env)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FibrationReport {
    /// `pass`, `fail` or `unverifiable`.
    pub status: String,
    /// `exhaustive`, `transport` or `none`.
    pub method: String,
    pub checked: usize,
    pub max_residual: f64,
    pub failures: Vec<String>,
}

impl FibrationReport {
    pub fn passed(&self) -> bool {
        self.status == "pass"
    }
}

/// Failing lift pairs reported per level, at most this many.
const FIB_FAILURE_CAP: usize = 64;

/// The isofibration condition for `s × t` on both levels of a finite bundle.
pub fn isofibration_levels(b: &LevelBundle) -> Result<Vec<(u8, Vec<String>)>, String> {
    let e = |x: crate::fincat::FincatError| x.to_string();
    let (c00, p1, p2) = product(b.c0.clone(), b.c0.clone()).map_err(e)?;
    let _ = c00;
    let st1 = fiber_pair(&p1, &p2, &b.s1, &b.t1).map_err(e)?;
    let (_, q1, q2) = fiber_product(&st1, &st1).map_err(e)?;
    let st2 = fiber_pair(&q1, &q2, &b.s2, &b.t2).map_err(e)?;
    Ok(vec![(1, isofibration_check(&st1).0), (2, isofibration_check(&st2).0)])
}

/// Fibration condition on `s × t` at both levels.
pub fn check_fibrations<O: InstanceOracle>(d: &DicatData<O>, tol: f64) -> FibrationReport {
    match d.oracle.fibration_support() {
        FibrationSupport::Exhaustive(b) => {
            let mut failures = Vec::new();
            let mut checked = 0;
            match isofibration_levels(&b) {
                Ok(levels) => {
                    for (l, v) in levels {
                        checked += 1;
                        failures.extend(v.into_iter().take(FIB_FAILURE_CAP).map(|m| format!("level {l}: {m}")));
                    }
                }
                Err(m) => failures.push(m),
            }
            let status = if failures.is_empty() { "pass" } else { "fail" };
            FibrationReport { status: status.into(), method: "exhaustive".into(), checked, max_residual: 0.0, failures }
        }
        FibrationSupport::Transport(trials) => {
            let mut failures = Vec::new();
            let mut worst = 0.0f64;
            for t in &trials {
                if t.residual.is_finite() {
                    worst = worst.max(t.residual);
                }
                if let Some(e) = &t.error {
                    failures.push(format!("level {}: {}: {e}", t.level, t.label));
                } else if !(t.residual <= tol) {
                    failures.push(format!("level {}: {}: residual {:.3e}", t.level, t.label, t.residual));
                }
            }
            let status = if failures.is_empty() && !trials.is_empty() { "pass" } else { "fail" };
            FibrationReport { status: status.into(), method: "transport".into(), checked: trials.len(), max_residual: worst, failures }
        }
        FibrationSupport::Unverifiable => FibrationReport {
            status: "unverifiable".into(),
            method: "none".into(),
            checked: 0,
            max_residual: 0.0,
            failures: vec!["backend provides neither enumeration nor transport".into()],
        },
    }
}

/// Shared handle type used by backends that hand out categories.
pub type CatHandle = Arc<crate::fincat::FinCategory>;
