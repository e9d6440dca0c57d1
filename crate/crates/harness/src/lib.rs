//! Scenario runner for the radial nonlocal reaction-diffusion solver:
//! config ingestion, presets, execution with analyses, persistence and
//! parameter sweeps.

pub mod error;
pub mod execute;
pub mod manifest;
pub mod output;
pub mod presets;
pub mod scenario;
pub mod sweep;

pub use error::{HarnessError, Result};
pub use execute::{execute, ExecOptions, Status};
pub use manifest::RunManifest;
pub use scenario::{load_scenario, Scenario};
pub use sweep::{sweep, Axis};
