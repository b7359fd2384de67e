//! Axiom checking and the full suite report.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::dicat::{check_fibrations, probe_label, validate_structure, CheckRow, DicatData, FibrationReport, ProbeAcc, StructureReport};
use crate::engine::expr::AxiomDef;
use crate::engine::probes::shape_probes;
use crate::oracle::InstanceOracle;

pub const REPORT_SCHEMA: &str = "report/v1";

/// Failing probes listed per axiom row in reports.
pub const FAILING_PROBE_CAP: usize = 32;

fn finite_or_null<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        s.serialize_f64(*x)
    } else {
        s.serialize_none()
    }
}

/// Outcome at one probe of an axiom.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeResult {
    pub probe: String,
    /// `null` when the two sides have different endpoints or evaluation failed.
    #[serde(serialize_with = "finite_or_null")]
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Full outcome of one axiom (every probe that failed is kept).
#[derive(Debug, Clone)]
pub struct AxiomOutcome {
    pub row: CheckRow,
    pub cite: String,
    pub worst: Option<ProbeResult>,
    pub failing: Vec<ProbeResult>,
}

impl AxiomOutcome {
    pub fn passed(&self) -> bool {
        self.row.passed()
    }
}

/// Evaluates both sides of `a` at every probe of its domain and compares them.
pub fn check_axiom_on<O: InstanceOracle>(d: &DicatData<O>, a: &AxiomDef, tol: f64, seed: u64) -> AxiomOutcome {
    let o = &d.oracle;
    let ev = d.evaluator(tol);
    let probes = shape_probes(o, &a.domain, o.probe_cap(), seed);
    let results: Vec<(String, ProbeAcc)> = probes
        .par_iter()
        .map_init(O::Ctx::default, |ctx, p| {
            let label = probe_label(o, &a.domain, p);
            let mut acc = ProbeAcc::default();
            'probe: {
                let Some(env) = acc.result(ev.obj_env(&a.domain, p), "probe") else { break 'probe };
                let Some(l) = acc.result(ev.eval(ctx, &a.lhs, &a.domain, &env), "left side") else { break 'probe };
                let Some(r) = acc.result(ev.eval(ctx, &a.rhs, &a.domain, &env), "right side") else { break 'probe };
                let res = ev.compare(&l, &r);
                acc.residual(res, || if res.is_infinite() { "sides have different endpoints".into() } else { "sides differ".into() });
            }
            (label, acc)
        })
        .collect();
    let mut row = CheckRow::new(a.id.clone());
    let mut worst: Option<ProbeResult> = None;
    let mut failing = Vec::new();
    for (label, acc) in results {
        let pr = ProbeResult { probe: label.clone(), residual: if acc.err.is_some() { f64::INFINITY } else { acc.worst }, error: acc.err.clone() };
        if worst.as_ref().map_or(true, |w| pr.residual > w.residual) {
            worst = Some(pr.clone());
        }
        if row.record(&label, acc, tol) {
            failing.push(pr);
        }
    }
    AxiomOutcome { row, cite: a.cite.clone(), worst, failing }
}

/// Row of the axiom section of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomRow {
    pub id: String,
    pub probes: usize,
    pub failures: usize,
    pub errors: usize,
    #[serde(serialize_with = "finite_or_null")]
    pub max_residual: f64,
    pub cite: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst: Option<ProbeResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failing_probes: Vec<ProbeResult>,
}

impl AxiomRow {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.errors == 0
    }
}

impl From<&AxiomOutcome> for AxiomRow {
    fn from(x: &AxiomOutcome) -> Self {
        AxiomRow {
            id: x.row.id.clone(),
            probes: x.row.probes,
            failures: x.row.failures,
            errors: x.row.errors,
            max_residual: x.row.max_residual,
            cite: x.cite.clone(),
            worst: x.worst.clone(),
            failing_probes: x.failing.iter().take(FAILING_PROBE_CAP).cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub structure_checks: usize,
    pub structure_failures: usize,
    pub fibrations: String,
    pub axioms: usize,
    pub axioms_passed: usize,
    pub axioms_failed: usize,
    pub axioms_skipped: bool,
    pub probes: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub schema: &'static str,
    pub instance: serde_json::Value,
    pub seed: u64,
    pub tol: f64,
    pub pass: bool,
    pub summary: Summary,
    pub structure: StructureReport,
    pub fibrations: FibrationReport,
    pub axioms: Vec<AxiomRow>,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Ids of every failing structural check, then every failing axiom.
    pub fn failing_ids(&self) -> Vec<String> {
        let mut v: Vec<String> = self.structure.missing.clone();
        v.extend(self.structure.failing_ids());
        if !self.fibrations.passed() {
            v.push("fibrations".into());
        }
        v.extend(self.axioms.iter().filter(|a| !a.passed()).map(|a| a.id.clone()));
        v
    }

    pub fn axiom(&self, id: &str) -> Option<&AxiomRow> {
        self.axioms.iter().find(|a| a.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub tol: f64,
    pub seed: u64,
    /// Evaluate axioms even when structural validation fails (diagnostics only;
    /// the report still fails).
    pub force_axioms: bool,
}

impl SuiteOptions {
    pub fn new(tol: f64, seed: u64) -> Self {
        SuiteOptions { tol, seed, force_axioms: false }
    }
}

/// Structural validation, fibration checks, then every axiom in `axioms`.
pub fn run_suite<O: InstanceOracle>(d: &DicatData<O>, axioms: &[AxiomDef], opts: SuiteOptions) -> CheckReport {
    let structure = validate_structure(d, opts.tol, opts.seed);
    let fibrations = check_fibrations(d, opts.tol);
    let skip = !structure.passed() && !opts.force_axioms;
    let outcomes: Vec<AxiomOutcome> = if skip {
        Vec::new()
    } else {
        axioms.par_iter().map(|a| check_axiom_on(d, a, opts.tol, opts.seed)).collect()
    };
    let axioms: Vec<AxiomRow> = outcomes.iter().map(AxiomRow::from).collect();
    let passed = axioms.iter().filter(|a| a.passed()).count();
    let max_residual = axioms
        .iter()
        .map(|a| a.max_residual)
        .chain(structure.rows.iter().map(|r| r.max_residual))
        .filter(|x| x.is_finite())
        .fold(0.0, f64::max);
    let summary = Summary {
        structure_checks: structure.rows.len(),
        structure_failures: structure.rows.iter().filter(|r| !r.passed()).count() + structure.missing.len(),
        fibrations: fibrations.status.clone(),
        axioms: axioms.len(),
        axioms_passed: passed,
        axioms_failed: axioms.len() - passed,
        axioms_skipped: skip,
        probes: axioms.iter().map(|a| a.probes).sum(),
        max_residual,
    };
    let pass = structure.passed() && fibrations.passed() && !skip && passed == axioms.len();
    CheckReport {
        schema: REPORT_SCHEMA,
        instance: d.oracle.metadata(),
        seed: opts.seed,
        tol: opts.tol,
        pass,
        summary,
        structure,
        fibrations,
        axioms,
    }
}

/// Human-readable report: one line per check, each axiom with its citation.
pub fn render_text(r: &CheckReport) -> String {
    let mut s = String::new();
    let name = r.instance.get("name").and_then(|v| v.as_str()).unwrap_or("instance");
    s += &format!("instance {name}, seed {}, tol {:e}\n", r.seed, r.tol);
    for m in &r.structure.missing {
        s += &format!("FAIL  {m}\n");
    }
    for row in &r.structure.rows {
        let v = if row.passed() { "ok  " } else { "FAIL" };
        s += &format!("{v}  structure {:<6} probes {:>5}  max residual {:.2e}", row.id, row.probes, row.max_residual);
        if let Some(d) = &row.detail {
            s += &format!("  {d}");
        }
        s += "\n";
    }
    s += &format!(
        "{}  fibrations ({}, {} checked)\n",
        match r.fibrations.status.as_str() {
            "pass" => "ok  ",
            "fail" => "FAIL",
            _ => "??  ",
        },
        r.fibrations.method,
        r.fibrations.checked
    );
    for f in r.fibrations.failures.iter().take(8) {
        s += &format!("      {f}\n");
    }
    if r.summary.axioms_skipped {
        s += "axioms skipped: structural validation failed\n";
    }
    for a in &r.axioms {
        let v = if a.passed() { "ok  " } else { "FAIL" };
        let res = if a.max_residual.is_finite() { format!("{:.2e}", a.max_residual) } else { "inf".into() };
        s += &format!("{v}  {:<7} probes {:>5}  failures {:>5}  max residual {res}  \"{}\"\n", a.id, a.probes, a.failures, a.cite);
        for p in a.failing_probes.iter().take(8) {
            let res = if p.residual.is_finite() { format!("{:.2e}", p.residual) } else { "inf".into() };
            s += &format!("      at {} residual {res}{}\n", p.probe, p.error.as_ref().map(|e| format!(" ({e})")).unwrap_or_default());
        }
    }
    s += &format!(
        "{}: {}/{} axioms passed, {} structural failures, max residual {:.2e}\n",
        if r.pass { "PASS" } else { "FAIL" },
        r.summary.axioms_passed,
        r.summary.axioms,
        r.summary.structure_failures,
        r.summary.max_residual
    );
    s
}
