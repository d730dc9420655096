//! Material geometric structures in three dimensions: material groups,
//! Spencer analysis of their Lie algebras, and local integrability tests
//! for the corresponding geometric structures.

// index loops mirror the tensor formulas
#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod field_engine;
pub mod gconnection;
pub mod integrability;
pub mod lie_catalog;
pub mod spencer;
pub mod structures;
pub mod tensor_core;
