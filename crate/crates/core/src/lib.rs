//! Radial solver and functional-inequality toolkit for the mass-capped
//! reaction-diffusion equation `u_t = Δu + u^α (M₀ − ∫u)` on `ℝⁿ`, `n ≥ 3`.

pub mod analysis;
pub mod error;
pub mod evolution;
pub mod field;
pub mod gns;
pub mod grid;
pub mod inequalities;

pub use error::{Error, Result};
pub use evolution::{
    Checkpoint, Evolver, Outcome, ReactionMode, RunRecord, SolverConfig,
};
pub use field::{make_initial, Field, InitialProfile};
pub use grid::RadialGrid;
