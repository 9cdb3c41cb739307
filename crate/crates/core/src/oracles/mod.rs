//! Ground truth: the elliptic closed form of the product system and certified
//! reference integrations for everything else.

pub mod elliptic;
pub mod exact;
pub mod reference;

pub use elliptic::{elliptic_k, jacobi, jacobi_cn, JacobiTriple};
pub use exact::{exact_solution, half_period, half_period_quadrature, EllipticParams};
pub use reference::{
    first_event_time, reference_dissipative, reference_flow, rk4_integrate, rk4_step, Certificate,
    ReferenceOptions, ReferenceRun, Rk4,
};
