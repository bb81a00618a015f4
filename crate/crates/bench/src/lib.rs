//! Benchmark fixtures shared by the criterion targets.

use isogroup_core::{FluidState, RunConfig};

/// The reference isolated-mass-group initial state at `n_cells` resolution.
pub fn reference_state(n_cells: usize) -> FluidState {
    RunConfig::default()
        .with_cells(n_cells)
        .initial_state()
        .expect("reference configuration is valid")
}
