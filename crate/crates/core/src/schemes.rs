//! Outcome probabilities of the four tilt-sensing measurement schemes.
//!
//! Every closed form here is written so that near-vanishing probabilities
//! (the dark port of the Sagnac interferometer at small tilt) are computed
//! without subtracting nearly equal numbers.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::beam::{gaussian_density, BeamParams};
use crate::error::{Error, Result};

/// Beyond this `|b theta|` the ratio `cos(a theta)/cosh(b theta)` is taken as zero.
pub const COSH_CUTOFF: f64 = 700.0;

/// Threshold on `B theta²` and `(4 k xi theta)²` past which first-order
/// small-angle results are flagged.
pub const SMALL_ANGLE_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// Polarization qubit `alpha |H> + beta |V>` entering the interferometer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationState {
    alpha: Complex64,
    beta: Complex64,
}

impl PolarizationState {
    /// Normalisation must hold to 1e-12.
    pub fn new(alpha: Complex64, beta: Complex64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(
                "polarization",
                format!("|alpha|^2 + |beta|^2 = {norm}, expected 1"),
            ));
        }
        Ok(Self { alpha, beta })
    }

    /// Bloch-sphere point: `alpha = cos(vartheta/2)`, `beta = e^{i phi} sin(vartheta/2)`.
    pub fn from_bloch(vartheta: f64, phi: f64) -> Result<Self> {
        if !(vartheta.is_finite() && phi.is_finite()) {
            return Err(Error::invalid("polarization", "Bloch angles must be finite"));
        }
        let (s, c) = (0.5 * vartheta).sin_cos();
        Ok(Self {
            alpha: Complex64::new(c, 0.0),
            beta: Complex64::from_polar(s, phi),
        })
    }

    /// `|+> = (|H> + |V>)/sqrt 2`, the state that maximises the polarization Fisher information.
    pub fn diagonal() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            alpha: Complex64::new(a, 0.0),
            beta: Complex64::new(a, 0.0),
        }
    }

    pub fn horizontal() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    pub fn vertical() -> Self {
        Self {
            alpha: Complex64::new(0.0, 0.0),
            beta: Complex64::new(1.0, 0.0),
        }
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn beta(&self) -> Complex64 {
        self.beta
    }

    /// `d = |alpha* beta|`.
    pub fn d(&self) -> f64 {
        self.alpha.norm() * self.beta.norm()
    }

    /// Relative phase `phi` with `d e^{i phi} = alpha* beta`.
    pub fn phase(&self) -> f64 {
        (self.alpha.conj() * self.beta).arg()
    }

    /// `<sigma_z> = |alpha|² - |beta|²`.
    pub fn sigma_z_mean(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }

    /// Polar Bloch angle `vartheta`, with `sin(vartheta) = 2d`.
    pub fn bloch_polar(&self) -> f64 {
        2.0 * self.beta.norm().atan2(self.alpha.norm())
    }

    /// `1 - 2d = (|alpha| - |beta|)²`, exact for normalised states.
    pub(crate) fn contrast_deficit(&self) -> f64 {
        let r = self.alpha.norm() - self.beta.norm();
        r * r
    }
}

/// Where the split line of the quadrant (sign) detector sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadrantSplit {
    /// Aligned with the undeflected beam centre `x = xi`.
    #[default]
    BeamAxis,
    /// At the optical axis `x = 0`.
    Origin,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scheme {
    DirectPosition {
        z: f64,
    },
    Quadrant {
        z: f64,
        #[serde(default)]
        split: QuadrantSplit,
    },
    SagnacPolarization {
        z: f64,
        pol: PolarizationState,
    },
    SagnacPositionPolarization {
        z: f64,
        pol: PolarizationState,
    },
}

impl Scheme {
    pub fn z(&self) -> f64 {
        match *self {
            Scheme::DirectPosition { z }
            | Scheme::Quadrant { z, .. }
            | Scheme::SagnacPolarization { z, .. }
            | Scheme::SagnacPositionPolarization { z, .. } => z,
        }
    }

    pub fn with_z(self, z: f64) -> Self {
        match self {
            Scheme::DirectPosition { .. } => Scheme::DirectPosition { z },
            Scheme::Quadrant { split, .. } => Scheme::Quadrant { z, split },
            Scheme::SagnacPolarization { pol, .. } => Scheme::SagnacPolarization { z, pol },
            Scheme::SagnacPositionPolarization { pol, .. } => Scheme::SagnacPositionPolarization { z, pol },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scheme::DirectPosition { .. } => "position",
            Scheme::Quadrant { .. } => "quadrant",
            Scheme::SagnacPolarization { .. } => "sagnac-polarization",
            Scheme::SagnacPositionPolarization { .. } => "sagnac-joint",
        }
    }

    pub fn polarization(&self) -> Option<PolarizationState> {
        match *self {
            Scheme::SagnacPolarization { pol, .. } | Scheme::SagnacPositionPolarization { pol, .. } => Some(pol),
            _ => None,
        }
    }

    pub fn is_interferometric(&self) -> bool {
        self.polarization().is_some()
    }

    pub fn validate(&self) -> Result<()> {
        let z = self.z();
        if !(z.is_finite() && z >= 0.0) {
            return Err(Error::invalid(
                "z",
                format!("detector plane must satisfy z >= 0, got {z}"),
            ));
        }
        Ok(())
    }
}

/// A single detection event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Outcome {
    ContinuousPosition { x: f64 },
    Sign { s: Sign },
    Polarization { p: Sign },
    PositionPolarization { x: f64, p: Sign },
}

impl Outcome {
    pub fn position(&self) -> Option<f64> {
        match *self {
            Outcome::ContinuousPosition { x } | Outcome::PositionPolarization { x, .. } => Some(x),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RegimeWarning {
    /// `B theta² >= 0.01` with `B = 2 k² w0²`.
    GaussianDecay { b_theta_sq: f64 },
    /// `(4 k xi theta)² >= 0.01`.
    DisplacementPhase { phase_sq: f64 },
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RegimeWarning::GaussianDecay { b_theta_sq } => {
                write!(f, "B*theta^2={b_theta_sq:e} outside small-angle regime")
            }
            RegimeWarning::DisplacementPhase { phase_sq } => {
                write!(f, "(4k*xi*theta)^2={phase_sq:e} outside small-angle regime")
            }
        }
    }
}

/// `B = 2 k² w0²`, the decay constant of the interference visibility.
pub fn visibility_decay(beam: &BeamParams) -> f64 {
    2.0 * beam.k() * beam.k() * beam.w0() * beam.w0()
}

/// Flags tilts where the first-order saturation results stop holding.
pub fn small_angle_warnings(beam: &BeamParams, theta: f64) -> Vec<RegimeWarning> {
    let mut out = Vec::new();
    let b_theta_sq = visibility_decay(beam) * theta * theta;
    if b_theta_sq >= SMALL_ANGLE_LIMIT {
        out.push(RegimeWarning::GaussianDecay { b_theta_sq });
    }
    let phase = 4.0 * beam.k() * beam.xi() * theta;
    if phase * phase >= SMALL_ANGLE_LIMIT {
        out.push(RegimeWarning::DisplacementPhase {
            phase_sq: phase * phase,
        });
    }
    out
}

/// Sign-detector probabilities `(P+, P-)` with the split aligned to the beam axis.
pub fn quadrant_probabilities(beam: &BeamParams, theta: f64, z: f64) -> (f64, f64) {
    quadrant_probabilities_split(beam, theta, z, QuadrantSplit::BeamAxis)
}

pub fn quadrant_probabilities_split(beam: &BeamParams, theta: f64, z: f64, split: QuadrantSplit) -> (f64, f64) {
    let t = quadrant_argument(beam, theta, z, split);
    (0.5 * erfc(-t), 0.5 * erfc(t))
}

/// `sqrt 2 (mu - s) / w(z)`; reduces to `2 sqrt2 theta z / w(z)` for the beam-axis split.
pub(crate) fn quadrant_argument(beam: &BeamParams, theta: f64, z: f64, split: QuadrantSplit) -> f64 {
    let offset = match split {
        QuadrantSplit::BeamAxis => 2.0 * theta * z,
        QuadrantSplit::Origin => beam.xi() + 2.0 * theta * z,
    };
    std::f64::consts::SQRT_2 * offset / beam.width(z)
}

/// Joint densities `(p+(x), p-(x))` of detecting a photon at `x` in polarization `|±>`
/// behind the Sagnac interferometer.
pub fn sagnac_joint_density(beam: &BeamParams, pol: &PolarizationState, theta: f64, z: f64, x: f64) -> (f64, f64) {
    let w = beam.width(z);
    let u = x - beam.xi();
    let shift = 2.0 * theta * z;
    // H is deflected towards -x, V towards +x.
    let gh = gaussian_density(u + shift, w).sqrt();
    let gv = gaussian_density(u - shift, w).sqrt();
    let (a, b) = (pol.alpha().norm(), pol.beta().norm());
    let w0_sq = beam.w0() * beam.w0();
    let k = beam.k();
    let phase = 4.0 * k * theta * w0_sq / (w * w) * u + 4.0 * k * theta * beam.xi() - pol.phase();
    let (s, c) = (0.5 * phase).sin_cos();
    let diff = a * gh - b * gv;
    let cross = a * b * gh * gv;
    (
        0.5 * diff * diff + 2.0 * cross * c * c,
        0.5 * diff * diff + 2.0 * cross * s * s,
    )
}

/// Polarization-only probabilities `(P+, P-)`; independent of the detector plane.
pub fn sagnac_polarization_probabilities(beam: &BeamParams, pol: &PolarizationState, theta: f64) -> (f64, f64) {
    let psi = 4.0 * beam.k() * theta * beam.xi() - pol.phase();
    let decay = visibility_decay(beam) * theta * theta;
    let dark = |angle: f64| {
        let s = (0.5 * angle).sin();
        0.5 * (pol.contrast_deficit() + 2.0 * pol.d() * (2.0 * s * s - angle.cos() * (-decay).exp_m1()))
    };
    (dark(psi + std::f64::consts::PI), dark(psi))
}

/// Polarization probabilities conditioned on detection at `x`, for `|+>` input.
pub fn conditioned_polarization_probabilities(beam: &BeamParams, theta: f64, z: f64, x: f64) -> (f64, f64) {
    let w_sq = beam.width(z).powi(2);
    let u = x - beam.xi();
    let k = beam.k();
    let phase = 4.0 * k * theta * beam.w0() * beam.w0() / w_sq * u + 4.0 * k * theta * beam.xi();
    let hyper = 8.0 * theta * z * u / w_sq;
    if hyper.abs() > COSH_CUTOFF {
        return (0.5, 0.5);
    }
    let sh = (0.5 * hyper).sinh();
    let sn = (0.5 * phase).sin();
    let minus = (sh * sh + sn * sn) / hyper.cosh();
    (1.0 - minus, minus)
}

/// Coefficients with `P̄± = ½ (1 ± cos(a theta) / cosh(b theta))`:
/// `a = 4k (z_R² x + z² xi)/(z² + z_R²)`, `b = 4k z z_R (x - xi)/(z² + z_R²)`.
pub fn ab_coefficients(beam: &BeamParams, z: f64, x: f64) -> (f64, f64) {
    let zr = beam.rayleigh_range();
    let denom = z * z + zr * zr;
    let k4 = 4.0 * beam.k();
    (
        k4 * (zr * zr * x + z * z * beam.xi()) / denom,
        k4 * z * zr * (x - beam.xi()) / denom,
    )
}
