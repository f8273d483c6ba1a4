//! Shared operating points for the benchmarks.

use tiltsense::{BeamParams, PolarizationState, QuadrantSplit, Scheme};

pub const WAVELENGTH: f64 = 633e-9;
pub const W0: f64 = 1e-3;
pub const XI: f64 = 1e-3;
pub const THETA: f64 = 1e-6;

pub fn beam() -> BeamParams {
    BeamParams::from_wavelength(WAVELENGTH, W0, XI).expect("valid beam")
}

/// One instance of every scheme, placed at five Rayleigh ranges.
pub fn schemes() -> Vec<Scheme> {
    let z = 5.0 * beam().rayleigh_range();
    let pol = PolarizationState::diagonal();
    vec![
        Scheme::DirectPosition { z },
        Scheme::Quadrant {
            z,
            split: QuadrantSplit::BeamAxis,
        },
        Scheme::SagnacPolarization { z, pol },
        Scheme::SagnacPositionPolarization { z, pol },
    ]
}
