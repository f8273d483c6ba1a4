//! Gaussian beam geometry in one transverse dimension.
//!
//! The reflecting object sits at `z = 0`, which is also the waist plane. All
//! quantities are SI: metres, radians, rad/m.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian beam with wavenumber `k`, waist `w0` and transverse offset `xi`
/// of the beam centre on the object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    k: f64,
    w0: f64,
    xi: f64,
}

impl BeamParams {
    pub fn new(k: f64, w0: f64, xi: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid("k", format!("wavenumber must be positive, got {k}")));
        }
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(Error::invalid("w0", format!("beam waist must be positive, got {w0}")));
        }
        if !xi.is_finite() {
            return Err(Error::invalid("xi", "displacement must be finite"));
        }
        Ok(Self { k, w0, xi })
    }

    pub fn from_wavelength(wavelength: f64, w0: f64, xi: f64) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::invalid(
                "wavelength",
                format!("must be positive, got {wavelength}"),
            ));
        }
        Self::new(2.0 * PI / wavelength, w0, xi)
    }

    /// Back-solves the waist from a Rayleigh range: `w0 = sqrt(2 z_R / k)`.
    pub fn from_rayleigh_range(wavelength: f64, rayleigh_range: f64, xi: f64) -> Result<Self> {
        if !(rayleigh_range.is_finite() && rayleigh_range > 0.0) {
            return Err(Error::invalid(
                "rayleigh_range",
                format!("must be positive, got {rayleigh_range}"),
            ));
        }
        let k = 2.0 * PI / wavelength;
        Self::from_wavelength(wavelength, (2.0 * rayleigh_range / k).sqrt(), xi)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }

    pub fn with_xi(self, xi: f64) -> Result<Self> {
        Self::new(self.k, self.w0, xi)
    }

    pub fn with_w0(self, w0: f64) -> Result<Self> {
        Self::new(self.k, w0, self.xi)
    }

    /// `z_R = k w0² / 2`.
    pub fn rayleigh_range(&self) -> f64 {
        0.5 * self.k * self.w0 * self.w0
    }

    /// Transverse variance of the intensity at the object, `w0² / 4`.
    pub fn object_variance(&self) -> f64 {
        0.25 * self.w0 * self.w0
    }

    /// Beam width `w(z) = w0 sqrt(1 + z²/z_R²)`.
    pub fn width(&self, z: f64) -> f64 {
        self.w0 * self.width_ratio_sq(z).sqrt()
    }

    /// `w²(z) / w0² = 1 + z²/z_R²`.
    pub fn width_ratio_sq(&self, z: f64) -> f64 {
        let s = z / self.rayleigh_range();
        1.0 + s * s
    }

    /// Wavefront radius of curvature `z (1 + z_R²/z²)`; `+inf` at the waist.
    pub fn curvature_radius(&self, z: f64) -> f64 {
        if z == 0.0 {
            return f64::INFINITY;
        }
        let zr = self.rayleigh_range();
        z * (1.0 + zr * zr / (z * z))
    }

    /// Gouy phase `arctan(z / z_R)`.
    pub fn gouy(&self, z: f64) -> f64 {
        (z / self.rayleigh_range()).atan()
    }

    pub fn at(&self, z: f64) -> PlaneGeometry {
        PlaneGeometry {
            z,
            width: self.width(z),
            curvature_radius: self.curvature_radius(z),
            gouy: self.gouy(z),
        }
    }

    /// Photon detection density at transverse position `x` in the plane `z`
    /// after a tilt `theta` (deflection `2 theta`).
    pub fn intensity_profile(&self, theta: f64, z: f64, x: f64) -> f64 {
        let w = self.width(z);
        let u = x - self.xi - 2.0 * theta * z;
        gaussian_density(u, w)
    }

    /// Complex amplitude of the untilted beam at `(x, z)`.
    ///
    /// The curvature phase is referenced to the beam centre, `-k (x-xi)² / 2R`,
    /// and the 1D factor carries half the Gouy phase so that the product of the
    /// x and y factors accumulates `gouy(z)`.
    pub fn field_amplitude(&self, z: f64, x: f64) -> Complex64 {
        let w = self.width(z);
        let u = x - self.xi;
        let magnitude = (2.0 / (PI * w * w)).powf(0.25) * (-(u * u) / (w * w)).exp();
        let r = self.curvature_radius(z);
        let curvature = if r.is_infinite() {
            0.0
        } else {
            -self.k * u * u / (2.0 * r)
        };
        Complex64::from_polar(magnitude, curvature + 0.5 * self.gouy(z))
    }
}

/// Beam-derived quantities in one detector plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneGeometry {
    pub z: f64,
    pub width: f64,
    /// Infinite at the waist plane.
    pub curvature_radius: f64,
    pub gouy: f64,
}

/// Normalised `sqrt(2/(pi w²)) exp(-2 u²/w²)`: a Gaussian with standard deviation `w/2`.
pub(crate) fn gaussian_density(u: f64, w: f64) -> f64 {
    (2.0 / (PI * w * w)).sqrt() * (-2.0 * u * u / (w * w)).exp()
}
