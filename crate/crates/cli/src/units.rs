//! Physical quantities written as strings with an explicit unit suffix,
//! such as `"633nm"`, `"2.5 urad"` or `"5z_R"`. Bare numbers are rejected.

use std::f64::consts::PI;
use std::fmt;

/// Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Length,
    Angle,
    Energy,
    Wavenumber,
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dimension::Length => "length",
            Dimension::Angle => "angle",
            Dimension::Energy => "energy",
            Dimension::Wavenumber => "wavenumber",
        })
    }
}

enum Scale {
    /// Multiply by `10^n`. Negative powers divide, so `"10urad"` is exactly `1e-5`.
    Pow10(i32),
    Factor(f64),
    RayleighRange,
}

const UNITS: &[(&str, Dimension, Scale)] = &[
    ("z_R", Dimension::Length, Scale::RayleighRange),
    ("km", Dimension::Length, Scale::Pow10(3)),
    ("m", Dimension::Length, Scale::Pow10(0)),
    ("cm", Dimension::Length, Scale::Pow10(-2)),
    ("mm", Dimension::Length, Scale::Pow10(-3)),
    ("um", Dimension::Length, Scale::Pow10(-6)),
    ("µm", Dimension::Length, Scale::Pow10(-6)),
    ("μm", Dimension::Length, Scale::Pow10(-6)),
    ("nm", Dimension::Length, Scale::Pow10(-9)),
    ("rad", Dimension::Angle, Scale::Pow10(0)),
    ("mrad", Dimension::Angle, Scale::Pow10(-3)),
    ("urad", Dimension::Angle, Scale::Pow10(-6)),
    ("µrad", Dimension::Angle, Scale::Pow10(-6)),
    ("μrad", Dimension::Angle, Scale::Pow10(-6)),
    ("nrad", Dimension::Angle, Scale::Pow10(-9)),
    ("deg", Dimension::Angle, Scale::Factor(PI / 180.0)),
    ("J", Dimension::Energy, Scale::Pow10(0)),
    ("mJ", Dimension::Energy, Scale::Pow10(-3)),
    ("uJ", Dimension::Energy, Scale::Pow10(-6)),
    ("µJ", Dimension::Energy, Scale::Pow10(-6)),
    ("μJ", Dimension::Energy, Scale::Pow10(-6)),
    ("nJ", Dimension::Energy, Scale::Pow10(-9)),
    ("pJ", Dimension::Energy, Scale::Pow10(-12)),
    ("fJ", Dimension::Energy, Scale::Pow10(-15)),
    ("/m", Dimension::Wavenumber, Scale::Pow10(0)),
    ("rad/m", Dimension::Wavenumber, Scale::Pow10(0)),
    ("/mm", Dimension::Wavenumber, Scale::Pow10(3)),
    ("rad/mm", Dimension::Wavenumber, Scale::Pow10(3)),
    ("/um", Dimension::Wavenumber, Scale::Pow10(6)),
    ("rad/um", Dimension::Wavenumber, Scale::Pow10(6)),
];

/// Parses `text` as a quantity of dimension `dim` and returns it in SI units.
/// `rayleigh_range` resolves the `z_R` unit and is `None` while the beam
/// itself is being read.
pub fn parse_quantity(text: &str, dim: Dimension, rayleigh_range: Option<f64>) -> Result<f64, String> {
    let s = text.trim();
    let (unit, number) = UNITS
        .iter()
        .filter(|(suffix, _, _)| s.ends_with(suffix))
        .max_by_key(|(suffix, _, _)| suffix.len())
        .map(|(suffix, d, scale)| ((suffix, *d, scale), s[..s.len() - suffix.len()].trim_end()))
        .ok_or_else(|| {
            format!(
                "`{s}` has no recognised unit (expected a {dim} such as {})",
                example(dim)
            )
        })?;
    let (suffix, found, scale) = unit;
    if found != dim {
        return Err(format!("`{s}` is a {found}, expected a {dim} such as {}", example(dim)));
    }
    let value: f64 = number
        .parse()
        .map_err(|_| format!("`{s}`: `{number}` is not a number"))?;
    if !value.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    match scale {
        Scale::Pow10(n) if *n < 0 => Ok(value / 10f64.powi(-n)),
        Scale::Pow10(n) => Ok(value * 10f64.powi(*n)),
        Scale::Factor(f) => Ok(value * f),
        Scale::RayleighRange => rayleigh_range
            .map(|zr| value * zr)
            .ok_or_else(|| format!("`{s}`: unit `{suffix}` is not available here, the beam is not yet defined")),
    }
}

fn example(dim: Dimension) -> &'static str {
    match dim {
        Dimension::Length => "\"1mm\" or \"5z_R\"",
        Dimension::Angle => "\"1urad\"",
        Dimension::Energy => "\"1nJ\"",
        Dimension::Wavenumber => "\"9.9e6/m\"",
    }
}

/// Number of photons in a pulse of energy `energy` at `wavelength`, rounded
/// to the nearest integer.
pub fn photon_count(energy: f64, wavelength: f64) -> f64 {
    (energy * wavelength / (PLANCK * SPEED_OF_LIGHT)).round()
}
