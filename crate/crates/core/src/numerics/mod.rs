//! Self-contained numerical kernels shared by the analysis modules.

pub mod gauss_kronrod;
pub mod hermite;
pub mod lattice;
pub mod ode;
pub mod rational;
pub mod regression;
pub mod stencil;
