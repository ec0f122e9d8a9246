//! Certified integer feasibility for parametric linear inequality systems.

pub mod dsl;
pub mod exact;
pub mod positivity;
pub mod polyhedron;
pub mod elimination;
pub mod bn;
pub mod pipeline;
