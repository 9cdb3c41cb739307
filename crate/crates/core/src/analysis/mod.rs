//! Error metrics, conservation diagnostics, Poincaré sections, ergodic
//! averages and the averaged-matrix check.

pub mod averaged;
pub mod ergodic;
pub mod metrics;
pub mod poincare;

pub use averaged::{averaged_matrix, averaged_matrix_quadrature, canonical_j, fundamental_orthogonality_defect};
pub use ergodic::{ergodic_averages, ErgodicAverages};
pub use metrics::{
    drift, energy_drift, energy_series, linear_fit, loglog_slope, orbit_error_scalings, polar_errors,
    scaled_running_max_errors, unwrapped_angles, EnergyDrift, LinearFit, PolarErrorSeries,
};
pub use poincare::{
    chaos_statistic, poincare_section, scatter_dimension, section_of_trajectory, solve_surface_momentum,
    ChaosStatistic, IcGrid, PoincareConfig, PoincareSection, SectionClass, SectionPoint, Surface,
    CHAOTIC_THRESHOLD, REGULAR_THRESHOLD,
};
