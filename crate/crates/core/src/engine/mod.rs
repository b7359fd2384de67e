pub mod eval;
pub mod expr;
pub mod mutate;
pub mod probes;
pub mod sexpr;
pub mod suite;
