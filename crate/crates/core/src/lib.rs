//! Explicit symplectic integrators of arbitrary even order for nonseparable
//! Hamiltonians.
//!
//! The original system `H(Q, P)` is doubled into `(q, p, x, y)` with the
//! extended Hamiltonian `H(q, y) + H(x, p) + ω (‖q − x‖² + ‖p − y‖²)/2`. Each
//! of the three terms has an explicit exact flow, and symmetric compositions
//! of those flows give explicit symplectic methods of any even order. Both
//! copies approximate the solution of the original system started from
//! `(Q0, P0, Q0, P0)`.
//!
//! ```
//! use bindsym::{integrate, IntegratorConfig, models::ProductHamiltonian};
//!
//! let cfg = IntegratorConfig::new(0.01, 20.0, 4, 100).unwrap();
//! let traj = integrate(&[-3.0], &[0.0], &cfg, &ProductHamiltonian, 10).unwrap();
//! assert_eq!(traj.len(), 11);
//! ```

pub mod analysis;
pub mod checks;
mod error;
pub mod experiments;
pub mod integrator;
pub mod models;
pub mod oracles;
pub mod par;
pub mod scheme;
pub mod state;

pub use error::{Error, Result};
pub use integrator::{
    extended_energy, extended_vector_field, flow_a, flow_b, flow_c, integrate, step, step_dissipative,
    ForceModel, Integrator, IntegratorConfig, LinearDamping, NoForce, Workspace, DEFAULT_ESCAPE_BOUND,
};
pub use models::{Hamiltonian, ModelKind};
pub use par::Execution;
pub use scheme::{build_scheme, build_scheme_with, triple_jump_gamma, CompositionScheme, GammaVariant, Stage, StageKind};
pub use state::{ExtendedState, PhaseTrajectory, Projection, Trajectory};
