//! The instance-oracle interface consumed by structural validation and the
//! axiom engine.
//!
//! Objects and morphisms live in one of three levels (0, 1, 2). Objects are
//! compared by identity (`Eq`); morphisms are compared by a residual so that
//! numeric backends can report how close two composites are.

use std::fmt::Debug;
use std::hash::Hash;
use std::sync::Arc;

use crate::cells::Op;
use crate::fincat::{FinCategory, FunctorData};
use crate::linalg::C64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("{0}")]
    Undefined(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("not representable: {0}")]
    NotRepresentable(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type OResult<T> = Result<T, OracleError>;

/// The finite level categories and the source/target functors between them.
#[derive(Debug, Clone)]
pub struct LevelBundle {
    pub c0: Arc<FinCategory>,
    pub c1: Arc<FinCategory>,
    pub c2: Arc<FinCategory>,
    /// Source and target of 1-cells, `C1 → C0`.
    pub s1: FunctorData,
    pub t1: FunctorData,
    /// Source and target of 2-cells, `C2 → C1`.
    pub s2: FunctorData,
    pub t2: FunctorData,
}

/// One transport (cleavage) trial: a lift was constructed and its image compared
/// with the requested isomorphism.
#[derive(Debug, Clone)]
pub struct TransportTrial {
    pub level: u8,
    pub label: String,
    /// Residual of (lift is a valid isomorphism) and (image equals the request).
    pub residual: f64,
    pub error: Option<String>,
}

/// How an oracle supports the fibration condition on `s × t`.
#[derive(Debug, Clone)]
pub enum FibrationSupport {
    Exhaustive(Box<LevelBundle>),
    Transport(Vec<TransportTrial>),
    Unverifiable,
}

pub trait InstanceOracle: Send + Sync {
    type Obj: Clone + Eq + Hash + Debug + Send + Sync;
    type Mor: Clone + Debug + Send + Sync;
    /// Per-work-item scratch space (caches); never shared between threads.
    type Ctx: Default;

    fn name(&self) -> String;
    fn metadata(&self) -> serde_json::Value;

    /// Objects the checks are quantified over, per level.
    fn probe_objects(&self, level: u8) -> Vec<Self::Obj>;
    /// Maximum number of probe tuples per shape.
    fn probe_cap(&self) -> usize;
    fn obj_label(&self, level: u8, o: &Self::Obj) -> String;

    /// Source and target (one level down) of a level-1 or level-2 object.
    fn obj_boundary(&self, level: u8, o: &Self::Obj) -> (Self::Obj, Self::Obj);
    /// Domain and codomain of a morphism.
    fn mor_ends(&self, level: u8, m: &Self::Mor) -> (Self::Obj, Self::Obj);
    /// Image of a level-1 or level-2 morphism under source and target.
    fn mor_boundary(&self, level: u8, m: &Self::Mor) -> (Self::Mor, Self::Mor);

    fn identity(&self, level: u8, o: &Self::Obj) -> Self::Mor;
    /// Diagrammatic composite: `f` then `g`.
    fn compose(&self, level: u8, f: &Self::Mor, g: &Self::Mor) -> OResult<Self::Mor>;
    fn inverse(&self, level: u8, f: &Self::Mor) -> OResult<Self::Mor>;
    /// Zero iff equal; exact backends return 0 or a positive gap.
    fn mor_residual(&self, level: u8, a: &Self::Mor, b: &Self::Mor) -> f64;
    /// Zero iff `m` is a valid morphism between its ends.
    fn mor_validity(&self, level: u8, m: &Self::Mor) -> f64;

    fn has_op(&self, op: Op) -> bool;
    fn has_component(&self, key: &str) -> bool;
    fn apply_obj(&self, ctx: &mut Self::Ctx, op: Op, args: &[Self::Obj]) -> OResult<Self::Obj>;
    fn apply_mor(&self, ctx: &mut Self::Ctx, op: Op, args: &[Self::Mor]) -> OResult<Self::Mor>;
    /// Component of a transformation or witness at a tuple of primary objects.
    fn component(&self, ctx: &mut Self::Ctx, key: &str, args: &[Self::Obj]) -> OResult<Self::Mor>;

    /// Automorphisms of `o` used for naturality and functoriality checks. For
    /// levels 1 and 2 they must lie over identities at level 0.
    fn endo_probes(&self, level: u8, o: &Self::Obj) -> Vec<Self::Mor>;
    /// Multiplies a morphism by a scalar (used to plant defects).
    fn scale_mor(&self, level: u8, m: &Self::Mor, k: C64) -> OResult<Self::Mor>;

    fn fibration_support(&self) -> FibrationSupport;
}
