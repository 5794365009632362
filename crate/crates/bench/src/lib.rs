//! Fixtures shared by the kernel benchmarks.

use nsk_core::{FarField, FluidParams, Formulation, Grid1D, State};

/// Mollified dam break `2 -> 1` on `[-1, 1]` with `n` cells at `epsilon`.
pub fn dam_break(n: usize, epsilon: f64) -> (State, FarField, FluidParams, Grid1D) {
    let p = FluidParams::kinetic(2.0, epsilon).expect("valid parameters");
    let far = FarField::new(2.0, 0.0, 1.0, 0.0, 0.25).expect("valid far field");
    let grid = Grid1D::new(-1.0, 1.0, n).expect("valid grid");
    let state = far
        .mollified_state(&grid, &p, 4.0 * grid.h(), Formulation::EffectiveV)
        .expect("positive density");
    (state, far, p, grid)
}
