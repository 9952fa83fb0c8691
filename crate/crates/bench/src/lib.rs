//! Shared fixtures for the criterion benches.

use liouville_core::counterexample::{build_glued, GlueOptions, GluedSolution};
use liouville_core::presets::ExamplePreset;

pub fn presets() -> [ExamplePreset; 3] {
    [ExamplePreset::example51(), ExamplePreset::example52(), ExamplePreset::example53()]
}

pub fn glued(preset: &ExamplePreset) -> GluedSolution {
    build_glued(preset.manifold(), preset.potential(), preset.sigma, &GlueOptions::for_preset(preset)).expect("presets glue")
}
