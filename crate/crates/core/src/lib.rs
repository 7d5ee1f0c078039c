//! Numerical laboratory for mean curvature flow of closed curves and surfaces.

pub mod geometry;
pub mod shapes;
pub mod flow;
pub mod spacetime;
pub mod diagnostics;
pub mod ineqlab;
pub mod rescale;
pub mod experiment;
