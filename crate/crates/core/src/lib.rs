//! Estimation-theory toolkit for optical tilt sensing.
//!
//! A reflecting object tilted by `theta` deflects a Gaussian beam by `2 theta`.
//! This crate models the outcome statistics of four ways of reading that tilt
//! out (camera, quadrant detector, Sagnac polarization, Sagnac position +
//! polarization), computes their Fisher information both in closed form and
//! with a finite-difference oracle, compares them with the quantum Fisher
//! bounds, and checks Cramér–Rao saturation by Monte Carlo maximum likelihood.

pub mod beam;
pub mod error;
pub mod estimate;
pub mod fisher;
pub mod model;
pub mod quad;
pub mod schemes;

pub use beam::{BeamParams, PlaneGeometry};
pub use error::{Error, Result};
pub use estimate::{
    cr_interval, mle, run_saturation, sample_outcomes, trial_rng, MleEstimate, SaturationConfig, SaturationReport,
    Trial,
};
pub use fisher::{
    analytic_fisher, cramer_rao_bound, default_step, fisher_conditioned, fisher_conditioned_small_angle, fisher_joint,
    fisher_position, fisher_quadrant, fisher_quadrant_split, fisher_report, fisher_sagnac_polarization,
    fisher_total_decomposition, numeric_fisher_oracle, qfi_beam_deflection, qfi_bound, qfi_mach_zehnder, qfi_sagnac,
    Decomposition, FisherReport, OracleEstimate,
};
pub use model::{
    Channel, ConditionedPolarizationModel, MixtureComponent, OutcomeSample, OutcomeSpace, ProbabilityModel, SchemeModel,
};
pub use schemes::{
    ab_coefficients, conditioned_polarization_probabilities, quadrant_probabilities, quadrant_probabilities_split,
    sagnac_joint_density, sagnac_polarization_probabilities, small_angle_warnings, Outcome, PolarizationState,
    QuadrantSplit, RegimeWarning, Scheme, Sign,
};
