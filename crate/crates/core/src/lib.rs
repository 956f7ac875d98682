//! Numerical core for a viscous Cahn-Hilliard system with a singular
//! (logarithmic) potential and a nonnegative chemical potential:
//!
//! ```text
//! (eps + 2 rho) d_t mu + mu d_t rho - lap mu = 0
//! delta d_t rho - lap rho + f'(rho)          = mu
//! ```
//!
//! with zero-flux boundary conditions on a rectangle. Time stepping follows a
//! delayed splitting: the `rho` equation is solved implicitly against a
//! time-shifted `mu`, then a linear, positivity-preserving `mu` step closes
//! the update.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, configuration and
//! the command-line driver live in the `nschsim` crate.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod grid;
pub mod invariants;
pub mod linalg;
pub mod oracle;
pub mod potential;
pub mod steady;
pub mod stepper;

mod math;

pub use grid::{Field, Grid, GridError};
pub use invariants::{DeGiorgiReport, DiagnosticsRecord};
pub use potential::{PotentialError, PotentialEval, PotentialSpec};
pub use steady::{OmegaProbeReport, OmegaThresholds, SteadyState};
pub use stepper::{DelayBuffer, SolverConfig, State, StepError, Trajectory};
