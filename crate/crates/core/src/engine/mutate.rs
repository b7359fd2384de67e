//! Negative controls: rescale components of one transformation and rerun the suite.

use rand::Rng;
use serde::Serialize;

use crate::cells::Op;
use crate::dicat::{probe_label, DicatData};
use crate::engine::expr::{AxiomDef, GenTable};
use crate::engine::probes::{item_rng, shape_probes};
use crate::engine::suite::{run_suite, CheckReport, SuiteOptions};
use crate::linalg::C64;
use crate::oracle::{FibrationSupport, InstanceOracle, OResult, OracleError};

/// Which components of the target are rescaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSelect {
    /// Every component.
    All,
    /// The component at the n-th probe of the target's domain.
    Index(usize),
    /// One probe drawn from the seed.
    Seeded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MutationSpec {
    pub target: String,
    pub scale: C64,
    pub select: ProbeSelect,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MutationError {
    #[error("unknown mutation target {0}")]
    UnknownTarget(String),
    #[error("the target {0} has no probes")]
    NoProbes(String),
    #[error("probe index {0} out of range ({1} probes)")]
    BadIndex(usize, usize),
    #[error("cannot rescale {0}: {1}")]
    NotRepresentable(String, String),
    #[error("rescaling {0} changes none of its components")]
    NoEffect(String),
}

/// An oracle whose components of one transformation are rescaled at the
/// selected probes.
pub struct Mutated<'a, O: InstanceOracle> {
    pub inner: &'a O,
    pub target: String,
    pub level: u8,
    pub scale: C64,
    /// `None` rescales every component.
    pub at: Option<Vec<O::Obj>>,
}

impl<O: InstanceOracle> InstanceOracle for Mutated<'_, O> {
    type Obj = O::Obj;
    type Mor = O::Mor;
    type Ctx = O::Ctx;

    fn name(&self) -> String {
        format!("{} (mutated {})", self.inner.name(), self.target)
    }
    fn metadata(&self) -> serde_json::Value {
        let mut m = self.inner.metadata();
        if let Some(obj) = m.as_object_mut() {
            obj.insert("mutated".into(), serde_json::Value::String(self.target.clone()));
        }
        m
    }
    fn probe_objects(&self, level: u8) -> Vec<Self::Obj> {
        self.inner.probe_objects(level)
    }
    fn probe_cap(&self) -> usize {
        self.inner.probe_cap()
    }
    fn obj_label(&self, level: u8, o: &Self::Obj) -> String {
        self.inner.obj_label(level, o)
    }
    fn obj_boundary(&self, level: u8, o: &Self::Obj) -> (Self::Obj, Self::Obj) {
        self.inner.obj_boundary(level, o)
    }
    fn mor_ends(&self, level: u8, m: &Self::Mor) -> (Self::Obj, Self::Obj) {
        self.inner.mor_ends(level, m)
    }
    fn mor_boundary(&self, level: u8, m: &Self::Mor) -> (Self::Mor, Self::Mor) {
        self.inner.mor_boundary(level, m)
    }
    fn identity(&self, level: u8, o: &Self::Obj) -> Self::Mor {
        self.inner.identity(level, o)
    }
    fn compose(&self, level: u8, f: &Self::Mor, g: &Self::Mor) -> OResult<Self::Mor> {
        self.inner.compose(level, f, g)
    }
    fn inverse(&self, level: u8, f: &Self::Mor) -> OResult<Self::Mor> {
        self.inner.inverse(level, f)
    }
    fn mor_residual(&self, level: u8, a: &Self::Mor, b: &Self::Mor) -> f64 {
        self.inner.mor_residual(level, a, b)
    }
    fn mor_validity(&self, level: u8, m: &Self::Mor) -> f64 {
        self.inner.mor_validity(level, m)
    }
    fn has_op(&self, op: Op) -> bool {
        self.inner.has_op(op)
    }
    fn has_component(&self, key: &str) -> bool {
        self.inner.has_component(key)
    }
    fn apply_obj(&self, ctx: &mut Self::Ctx, op: Op, args: &[Self::Obj]) -> OResult<Self::Obj> {
        self.inner.apply_obj(ctx, op, args)
    }
    fn apply_mor(&self, ctx: &mut Self::Ctx, op: Op, args: &[Self::Mor]) -> OResult<Self::Mor> {
        self.inner.apply_mor(ctx, op, args)
    }
    fn component(&self, ctx: &mut Self::Ctx, key: &str, args: &[Self::Obj]) -> OResult<Self::Mor> {
        let c = self.inner.component(ctx, key, args)?;
        if key == self.target && self.at.as_ref().map_or(true, |p| p.as_slice() == args) {
            self.inner.scale_mor(self.level, &c, self.scale)
        } else {
            Ok(c)
        }
    }
    fn endo_probes(&self, level: u8, o: &Self::Obj) -> Vec<Self::Mor> {
        self.inner.endo_probes(level, o)
    }
    fn scale_mor(&self, level: u8, m: &Self::Mor, k: C64) -> OResult<Self::Mor> {
        self.inner.scale_mor(level, m, k)
    }
    fn fibration_support(&self) -> FibrationSupport {
        self.inner.fibration_support()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MutationReport {
    pub schema: &'static str,
    pub target: String,
    /// Scale factor as `[re, im]`.
    pub scale: [f64; 2],
    /// Label of the rescaled probe, or `"all"`.
    pub probe: String,
    pub baseline_failures: Vec<String>,
    pub failures: Vec<String>,
    pub new_failures: Vec<String>,
    pub detected: bool,
    pub report: CheckReport,
}

pub const MUTATION_SCHEMA: &str = "mutation/v1";

/// Rescales components of `spec.target`, reruns the whole suite (axioms are
/// evaluated even if structural validation fails) and reports which checks
/// fail that did not fail before.
pub fn mutate_and_check<O: InstanceOracle>(
    d: &DicatData<O>,
    axioms: &[AxiomDef],
    spec: &MutationSpec,
    opts: SuiteOptions,
) -> Result<MutationReport, MutationError> {
    let decl = d.table.decls.get(&spec.target).ok_or_else(|| MutationError::UnknownTarget(spec.target.clone()))?;
    if !d.table.transformation_keys().contains(&spec.target) && !d.table.witness_keys().contains(&spec.target) {
        return Err(MutationError::UnknownTarget(spec.target.clone()));
    }
    let level = decl.cod.as_level().unwrap_or(2);
    let probes = shape_probes(&d.oracle, &decl.domain, d.oracle.probe_cap(), opts.seed);
    if probes.is_empty() {
        return Err(MutationError::NoProbes(spec.target.clone()));
    }
    // every component must be rescalable, and the probes where rescaling
    // changes something are the candidates for a seeded pick
    let mut ctx = O::Ctx::default();
    let mut effective = Vec::new();
    for (i, p) in probes.iter().enumerate() {
        let label = || probe_label(&d.oracle, &decl.domain, p);
        let not_rep = |e: OracleError| MutationError::NotRepresentable(spec.target.clone(), format!("at {}: {e}", label()));
        let c = d.oracle.component(&mut ctx, &spec.target, p).map_err(not_rep)?;
        let k = d.oracle.scale_mor(level, &c, spec.scale).map_err(not_rep)?;
        if d.oracle.mor_residual(level, &c, &k) > opts.tol {
            effective.push(i);
        }
    }
    let (at, probe) = match spec.select {
        ProbeSelect::All => (None, "all".to_string()),
        sel => {
            let i = match sel {
                ProbeSelect::Index(i) if i >= probes.len() => return Err(MutationError::BadIndex(i, probes.len())),
                ProbeSelect::Index(i) => i,
                _ if effective.is_empty() => return Err(MutationError::NoEffect(spec.target.clone())),
                _ => effective[item_rng(opts.seed, &format!("mutate {}", spec.target)).gen_range(0..effective.len())],
            };
            let label = probe_label(&d.oracle, &decl.domain, &probes[i]);
            (Some(probes[i].clone()), label)
        }
    };
    let base = run_suite(d, axioms, SuiteOptions { force_axioms: true, ..opts });
    let m = Mutated { inner: &d.oracle, target: spec.target.clone(), level, scale: spec.scale, at };
    let md = DicatData::with_table(m, d.table.clone());
    let report = run_suite(&md, axioms, SuiteOptions { force_axioms: true, ..opts });
    let baseline_failures = base.failing_ids();
    let failures = report.failing_ids();
    let new_failures: Vec<String> = failures.iter().filter(|f| !baseline_failures.contains(f)).cloned().collect();
    let detected = !new_failures.is_empty();
    Ok(MutationReport {
        schema: MUTATION_SCHEMA,
        target: spec.target.clone(),
        scale: [spec.scale.re, spec.scale.im],
        probe,
        baseline_failures,
        failures,
        new_failures,
        detected,
        report,
    })
}

/// Convenience for the reference generator table's keys.
pub fn mutation_targets() -> Vec<String> {
    GenTable::reference().transformation_keys()
}
