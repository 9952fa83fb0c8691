#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod counterexample;
pub mod error;
pub mod growth;
pub mod lower_order;
pub mod manifold;
pub mod numerics;
pub mod presets;
pub mod quadrature;
pub mod radial;
pub mod radial_ode;

pub use error::{Error, Result};
