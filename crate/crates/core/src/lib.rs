//! Core data model and verification engine for dicategory objects.

pub mod cells;
pub mod dicat;
pub mod engine;
pub mod fincat;
pub mod findicat;
pub mod linalg;
pub mod oracle;
