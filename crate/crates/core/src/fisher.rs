//! Fisher information of each scheme, quantum Fisher bounds, and a
//! scheme-agnostic finite-difference oracle.
//!
//! The closed forms are evaluated in cancellation-free arrangements so they
//! stay accurate down to the `theta -> 0` limits where the interferometric
//! schemes saturate their bounds.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::beam::{gaussian_density, BeamParams};
use crate::error::{Error, Result};
use crate::model::{OutcomeSpace, ProbabilityModel, SchemeModel, WINDOW_WIDTHS};
use crate::quad::{integrate, QuadOptions};
use crate::schemes::{
    quadrant_argument, sagnac_joint_density, small_angle_warnings, visibility_decay, PolarizationState, QuadrantSplit,
    RegimeWarning, Scheme,
};

/// Below this `|theta|` closed forms switch to their series limits.
pub const SERIES_THRESHOLD: f64 = 1e-12;

/// Discrete outcomes with smaller probability are skipped by the oracle.
pub const DISCRETE_FLOOR: f64 = 1e-300;

/// Below this density the oracle differentiates `ln P` instead of `P`.
pub const DENSITY_FLOOR: f64 = 1e-30;

/// The oracle fails when more than this much probability mass is unaccounted for.
pub const MAX_EXCLUDED_MASS: f64 = 1e-6;

const QUAD_REL_TOL: f64 = 1e-11;

// ---------------------------------------------------------------------------
// Quantum Fisher information
// ---------------------------------------------------------------------------

/// QFI of direct beam deflection, `16 k² <Δx²>` with `<Δx²> = w0²/4`.
pub fn qfi_beam_deflection(beam: &BeamParams) -> f64 {
    16.0 * beam.k() * beam.k() * beam.object_variance()
}

/// Sagnac QFI `16 k² [w0²/4 + (1 - <σz>²) xi²]` for a product polarization state.
pub fn qfi_sagnac(beam: &BeamParams, pol: &PolarizationState) -> f64 {
    let sz = pol.sigma_z_mean();
    let xi = beam.xi();
    16.0 * beam.k() * beam.k() * (beam.object_variance() + (1.0 - sz * sz) * xi * xi)
}

/// Mach-Zehnder QFI `8 k² (1 - <σz>) [w0²/4 + (1 + <σz>) xi²/2]`; only the V arm
/// reaches the object.
pub fn qfi_mach_zehnder(beam: &BeamParams, pol: &PolarizationState) -> f64 {
    let sz = pol.sigma_z_mean();
    let xi = beam.xi();
    8.0 * beam.k() * beam.k() * (1.0 - sz) * (beam.object_variance() + 0.5 * (1.0 + sz) * xi * xi)
}

// ---------------------------------------------------------------------------
// Classical Fisher information, closed forms
// ---------------------------------------------------------------------------

/// Camera (high-resolution position) measurement in the plane `z`.
pub fn fisher_position(beam: &BeamParams, z: f64) -> f64 {
    let zr = beam.rayleigh_range();
    qfi_beam_deflection(beam) * z * z / (z * z + zr * zr)
}

/// Sign detector split at the undeflected beam centre.
pub fn fisher_quadrant(beam: &BeamParams, theta: f64, z: f64) -> f64 {
    fisher_quadrant_split(beam, theta, z, QuadrantSplit::BeamAxis)
}

pub fn fisher_quadrant_split(beam: &BeamParams, theta: f64, z: f64, split: QuadrantSplit) -> f64 {
    if z == 0.0 {
        return 0.0;
    }
    let t = quadrant_argument(beam, theta, z, split);
    let w = beam.width(z);
    // 1 - erf² = erfc(t) erfc(-t)
    let denom = erfc(t) * erfc(-t);
    if denom == 0.0 {
        return 0.0;
    }
    32.0 * z * z * (-2.0 * t * t).exp() / (std::f64::consts::PI * w * w * denom)
}

/// Fisher information of the polarization-only (Stokes) measurement behind the Sagnac.
///
/// `16 d² [B θ cos ψ + 2kξ sin ψ]² / (e^{2Bθ²} - 4d² cos² ψ)` with `ψ = 4kξθ - φ`.
/// The denominator is evaluated as `expm1(2Bθ²) + <σz>² + 4d² sin² ψ`.
pub fn fisher_sagnac_polarization(beam: &BeamParams, pol: &PolarizationState, theta: f64) -> f64 {
    let k = beam.k();
    let xi = beam.xi();
    let b = visibility_decay(beam);
    let d = pol.d();
    let phi = pol.phase();
    let sz = pol.sigma_z_mean();

    if theta.abs() < SERIES_THRESHOLD {
        // First order in theta around sin ψ ≈ -sin φ + 4kξθ cos φ.
        let (sp, cp) = phi.sin_cos();
        let bracket = -2.0 * k * xi * sp + theta * cp * (b + 8.0 * k * k * xi * xi);
        let s = sp - 4.0 * k * xi * theta * cp;
        let denom = 2.0 * b * theta * theta + sz * sz + 4.0 * d * d * s * s;
        if denom == 0.0 {
            // Fully contrasted input with φ ∈ {0, π}: both numerator and
            // denominator vanish as θ².
            let g = b + 8.0 * k * k * xi * xi;
            return 16.0 * d * d * g * g * cp * cp / (2.0 * b + 64.0 * d * d * k * k * xi * xi * cp * cp);
        }
        return 16.0 * d * d * bracket * bracket / denom;
    }

    let psi = 4.0 * k * xi * theta - phi;
    let (s, c) = psi.sin_cos();
    let num = b * theta * c + 2.0 * k * xi * s;
    let denom = (2.0 * b * theta * theta).exp_m1() + sz * sz + 4.0 * d * d * s * s;
    16.0 * d * d * num * num / denom
}

/// Small-angle approximation `16 k² (z_R² x² + z² xi²)/(z² + z_R²)` of the
/// position-conditioned polarization Fisher information.
pub fn fisher_conditioned_small_angle(beam: &BeamParams, z: f64, x: f64) -> f64 {
    let zr = beam.rayleigh_range();
    let xi = beam.xi();
    16.0 * beam.k() * beam.k() * (zr * zr * x * x + z * z * xi * xi) / (z * z + zr * zr)
}

/// Exact Fisher information of a polarization measurement at the point `x`
/// for `|+>` input, from `P̄± = ½(1 ± cos(aθ)/cosh(bθ))`.
pub fn fisher_conditioned(beam: &BeamParams, z: f64, x: f64, theta: f64) -> f64 {
    let w_sq = beam.width(z).powi(2);
    let u = x - beam.xi();
    let k = beam.k();
    let a = 4.0 * k * (beam.w0() * beam.w0() / w_sq * u + beam.xi());
    let b = 8.0 * z * u / w_sq;
    if theta.abs() < SERIES_THRESHOLD {
        return a * a + b * b;
    }
    let (sa, ca) = (a * theta).sin_cos();
    let bt = b * theta;
    // F̄ = [a sin cosh + b cos sinh]² / (cosh² (sinh² + sin²)), divided through by cosh⁴.
    let sech = 1.0 / bt.cosh();
    let tanh = bt.tanh();
    let num = sech * (a * sa + b * ca * tanh);
    let denom = tanh * tanh + sa * sa * sech * sech;
    if denom == 0.0 {
        return 0.0;
    }
    num * num / denom
}

/// `|+>`-input position marginal `P(x) = P+(x) + P-(x)` and its log-derivative in θ.
fn position_marginal(beam: &BeamParams, theta: f64, z: f64, x: f64) -> (f64, f64) {
    let w = beam.width(z);
    let u = x - beam.xi();
    let shift = 2.0 * theta * z;
    let p = 0.5 * (gaussian_density(u + shift, w) + gaussian_density(u - shift, w));
    let w_sq = w * w;
    let s = 8.0 * theta * z * u / w_sq;
    let dlog = -16.0 * theta * z * z / w_sq + 8.0 * z * u / w_sq * s.tanh();
    (p, dlog)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `∫ dx P(x) F̄(x)`: position-conditioned polarization information.
    pub avg_conditioned: f64,
    /// `∫ dx (dP/dθ)² / P`: information in the position distribution alone.
    pub position_part: f64,
    pub total: f64,
    /// Summed quadrature error estimates.
    pub quadrature_error: f64,
}

/// Splits the joint position+polarization Fisher information (`|+>` input)
/// into its conditioned-polarization and position parts.
pub fn fisher_total_decomposition(beam: &BeamParams, z: f64, theta: f64) -> Result<Decomposition> {
    let (lo, hi) = joint_window(beam, z, theta);
    let opts = QuadOptions::with_rel_tol(QUAD_REL_TOL);
    let avg = integrate(
        |x| {
            let (p, _) = position_marginal(beam, theta, z, x);
            p * fisher_conditioned(beam, z, x, theta)
        },
        lo,
        hi,
        &opts,
    )?;
    let opts_pos = QuadOptions {
        abs_tol: 1e-16 * avg.value,
        ..opts
    };
    let pos = integrate(
        |x| {
            let (p, dlog) = position_marginal(beam, theta, z, x);
            p * dlog * dlog
        },
        lo,
        hi,
        &opts_pos,
    )?;
    Ok(Decomposition {
        avg_conditioned: avg.value,
        position_part: pos.value,
        total: avg.value + pos.value,
        quadrature_error: avg.error + pos.error,
    })
}

/// Fisher information of the joint (x, ±) measurement for an arbitrary
/// polarization input, by quadrature of the analytic θ-derivative of the joint
/// densities.
pub fn fisher_joint(beam: &BeamParams, pol: &PolarizationState, z: f64, theta: f64) -> Result<f64> {
    let w = beam.width(z);
    let w_sq = w * w;
    let k = beam.k();
    let xi = beam.xi();
    let (a2, b2) = (pol.alpha().norm_sqr(), pol.beta().norm_sqr());
    let amp = (2.0 / (std::f64::consts::PI * w_sq)).sqrt();
    let series = theta.abs() < SERIES_THRESHOLD;
    let h = 1e-9;

    let integrand = |x: f64| {
        let u = x - xi;
        let shift = 2.0 * theta * z;
        let hh = 0.5 * a2 * gaussian_density(u + shift, w);
        let vv = 0.5 * b2 * gaussian_density(u - shift, w);
        let dh = hh * (-8.0 * z * (u + shift) / w_sq);
        let dv = vv * (8.0 * z * (u - shift) / w_sq);
        let phase = 4.0 * k * theta * beam.w0() * beam.w0() / w_sq * u + 4.0 * k * theta * xi - pol.phase();
        let dphase = 4.0 * k * (beam.w0() * beam.w0() * u / w_sq + xi);
        let env = amp * pol.d() * (-2.0 * (u * u + shift * shift) / w_sq).exp();
        let dc = env * (-16.0 * theta * z * z / w_sq * phase.cos() - dphase * phase.sin());
        let (pp, pm) = sagnac_joint_density(beam, pol, theta, z, x);
        let mut acc = 0.0;
        for (p, dp, sign) in [(pp, dh + dv + dc, 1.0), (pm, dh + dv - dc, -1.0)] {
            if p > 0.0 {
                acc += dp * dp / p;
            } else if series {
                // Dark channel at θ = 0: P ≈ ½ P'' θ², so (P')²/P → 2P'' = 4 P(h)/h².
                let (qp, qm) = sagnac_joint_density(beam, pol, h, z, x);
                let q = if sign > 0.0 { qp } else { qm };
                acc += 4.0 * q / (h * h);
            }
        }
        acc
    };
    let (lo, hi) = joint_window(beam, z, theta);
    Ok(integrate(integrand, lo, hi, &QuadOptions::with_rel_tol(QUAD_REL_TOL))?.value)
}

fn joint_window(beam: &BeamParams, z: f64, theta: f64) -> (f64, f64) {
    let half = WINDOW_WIDTHS * beam.width(z) + 2.0 * theta.abs() * z;
    (beam.xi() - half, beam.xi() + half)
}

pub fn cramer_rao_bound(fisher: f64, nu: u64) -> f64 {
    1.0 / (nu as f64 * fisher).sqrt()
}

// ---------------------------------------------------------------------------
// Numerical oracle
// ---------------------------------------------------------------------------

/// Default finite-difference step, `max(1e-9 rad, 1e-6 |θ|)`.
pub fn default_step(theta: f64) -> f64 {
    (1e-6 * theta.abs()).max(1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    /// Central-difference estimate with the requested step.
    pub fisher: f64,
    /// Estimate from derivatives Richardson-extrapolated over steps `h` and `2h`.
    pub richardson: f64,
    /// `|fisher - richardson| / richardson`.
    pub richardson_delta: f64,
    pub excluded_mass: f64,
    pub step: f64,
}

/// Fisher information of any [`ProbabilityModel`] from central differences of
/// its outcome probabilities, summed over discrete outcomes or integrated over
/// continuous ones.
pub fn numeric_fisher_oracle<M: ProbabilityModel + ?Sized>(model: &M, theta: f64, step: f64) -> Result<OracleEstimate> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid("step", format!("must be positive, got {step}")));
    }
    let h = step;
    let (fisher, richardson, excluded) = match model.outcome_space(theta) {
        OutcomeSpace::Discrete(outcomes) => {
            let mut f1 = 0.0;
            let mut fr = 0.0;
            let mut excluded = 0.0;
            for o in &outcomes {
                let p0 = model.probability(theta, o);
                if p0 < DISCRETE_FLOOR {
                    excluded += p0.max(0.0);
                    continue;
                }
                let (d1, d2) = derivatives(|t| model.probability(t, o), theta, h);
                let dr = (4.0 * d1 - d2) / 3.0;
                f1 += d1 * d1 / p0;
                fr += dr * dr / p0;
            }
            (f1, fr, excluded)
        }
        OutcomeSpace::Continuous { channels, window } => {
            let opts = QuadOptions::with_rel_tol(QUAD_REL_TOL);
            let term = |x: f64, richardson: bool| -> f64 {
                channels
                    .iter()
                    .map(|ch| {
                        let o = ch.at(x);
                        let p0 = model.probability(theta, &o);
                        if p0 >= DENSITY_FLOOR {
                            let (d1, d2) = derivatives(|t| model.probability(t, &o), theta, h);
                            let d = if richardson { (4.0 * d1 - d2) / 3.0 } else { d1 };
                            d * d / p0
                        } else if p0 > 0.0 {
                            let (d1, d2) = derivatives(|t| model.probability(t, &o).ln(), theta, h);
                            let d = if richardson { (4.0 * d1 - d2) / 3.0 } else { d1 };
                            if d.is_finite() {
                                p0 * d * d
                            } else {
                                0.0
                            }
                        } else {
                            0.0
                        }
                    })
                    .sum()
            };
            let f1 = integrate(|x| term(x, false), window.0, window.1, &opts)?;
            let fr = integrate(|x| term(x, true), window.0, window.1, &opts)?;
            let mass = integrate(
                |x| channels.iter().map(|ch| model.probability(theta, &ch.at(x))).sum(),
                window.0,
                window.1,
                &QuadOptions::default(),
            )?;
            (f1.value, fr.value, (1.0 - mass.value).max(0.0))
        }
    };
    if excluded > MAX_EXCLUDED_MASS {
        return Err(Error::ExcludedMass {
            mass: excluded,
            limit: MAX_EXCLUDED_MASS,
        });
    }
    let delta = if richardson > 0.0 {
        (fisher - richardson).abs() / richardson
    } else {
        (fisher - richardson).abs()
    };
    Ok(OracleEstimate {
        fisher,
        richardson,
        richardson_delta: delta,
        excluded_mass: excluded,
        step: h,
    })
}

/// Central differences with steps `h` and `2h`.
fn derivatives<F: Fn(f64) -> f64>(f: F, theta: f64, h: f64) -> (f64, f64) {
    let d1 = (f(theta + h) - f(theta - h)) / (2.0 * h);
    let d2 = (f(theta + 2.0 * h) - f(theta - 2.0 * h)) / (4.0 * h);
    (d1, d2)
}

// ---------------------------------------------------------------------------
// Per-scheme reports
// ---------------------------------------------------------------------------

/// Closed-form Fisher information of a scheme.
pub fn analytic_fisher(scheme: &Scheme, beam: &BeamParams, theta: f64) -> Result<f64> {
    scheme.validate()?;
    Ok(match *scheme {
        Scheme::DirectPosition { z } => fisher_position(beam, z),
        Scheme::Quadrant { z, split } => fisher_quadrant_split(beam, theta, z, split),
        Scheme::SagnacPolarization { pol, .. } => fisher_sagnac_polarization(beam, &pol, theta),
        Scheme::SagnacPositionPolarization { z, pol } => {
            if is_diagonal(&pol) {
                fisher_total_decomposition(beam, z, theta)?.total
            } else {
                fisher_joint(beam, &pol, z, theta)?
            }
        }
    })
}

fn is_diagonal(pol: &PolarizationState) -> bool {
    pol.sigma_z_mean().abs() < 1e-12 && pol.phase().abs() < 1e-12
}

/// The quantum bound the scheme is measured against.
pub fn qfi_bound(scheme: &Scheme, beam: &BeamParams) -> f64 {
    match scheme {
        Scheme::DirectPosition { .. } | Scheme::Quadrant { .. } => qfi_beam_deflection(beam),
        Scheme::SagnacPolarization { pol, .. } | Scheme::SagnacPositionPolarization { pol, .. } => {
            qfi_sagnac(beam, pol)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherReport {
    pub scheme: String,
    pub theta: f64,
    pub z: f64,
    pub analytic: f64,
    pub numeric: f64,
    pub qfi: f64,
    /// `analytic / qfi`.
    pub ratio: f64,
    pub nu: u64,
    /// `1 / sqrt(nu * analytic)`.
    pub cr_bound: f64,
    pub richardson_delta: f64,
    pub excluded_mass: f64,
    pub warnings: Vec<RegimeWarning>,
}

impl FisherReport {
    pub fn respects_bound(&self) -> bool {
        self.analytic >= 0.0 && self.analytic <= self.qfi * (1.0 + 1e-6)
    }

    pub fn oracle_relative_error(&self) -> f64 {
        (self.analytic - self.numeric).abs() / self.analytic.max(f64::MIN_POSITIVE)
    }
}

pub fn fisher_report(scheme: &Scheme, beam: &BeamParams, theta: f64, nu: u64) -> Result<FisherReport> {
    let model = SchemeModel::new(*scheme, *beam)?;
    let analytic = analytic_fisher(scheme, beam, theta)?;
    let oracle = numeric_fisher_oracle(&model, theta, default_step(theta))?;
    let qfi = qfi_bound(scheme, beam);
    let warnings = if scheme.is_interferometric() {
        small_angle_warnings(beam, theta)
    } else {
        Vec::new()
    };
    Ok(FisherReport {
        scheme: scheme.name().to_string(),
        theta,
        z: scheme.z(),
        analytic,
        numeric: oracle.fisher,
        qfi,
        ratio: if qfi > 0.0 { analytic / qfi } else { 0.0 },
        nu,
        cr_bound: cramer_rao_bound(analytic, nu),
        richardson_delta: oracle.richardson_delta,
        excluded_mass: oracle.excluded_mass,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConditionedPolarizationModel;
    use crate::schemes::{Outcome, Sign};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn beam(xi: f64) -> BeamParams {
        BeamParams::from_wavelength(633e-9, 1e-3, xi).unwrap()
    }

    fn k633() -> f64 {
        2.0 * std::f64::consts::PI / 633e-9
    }

    struct Bernoulli;

    impl ProbabilityModel for Bernoulli {
        fn name(&self) -> &'static str {
            "bernoulli"
        }
        fn outcome_space(&self, _theta: f64) -> OutcomeSpace {
            OutcomeSpace::Discrete(vec![Outcome::Sign { s: Sign::Plus }, Outcome::Sign { s: Sign::Minus }])
        }
        fn probability(&self, theta: f64, o: &Outcome) -> f64 {
            match o {
                Outcome::Sign { s: Sign::Plus } => 0.5 * (1.0 + theta),
                _ => 0.5 * (1.0 - theta),
            }
        }
    }

    #[test]
    fn oracle_bernoulli() {
        let r = numeric_fisher_oracle(&Bernoulli, 0.1, 1e-6).unwrap();
        assert_relative_eq!(r.fisher, 0.25 * (1.0 / 0.55 + 1.0 / 0.45), max_relative = 1e-9);
        assert_relative_eq!(r.fisher, 1.0 / 0.99, max_relative = 1e-9);
        assert!(r.richardson_delta < 1e-8);
        assert!(numeric_fisher_oracle(&Bernoulli, 0.1, 0.0).is_err());
    }

    #[test]
    fn qfi_deflection_values() {
        let b = beam(0.0);
        let k = k633();
        assert_relative_eq!(qfi_beam_deflection(&b), 16.0 * k * k * 2.5e-7, max_relative = 1e-14);
        let b2 = b.with_w0(2e-3).unwrap();
        assert_relative_eq!(
            qfi_beam_deflection(&b2),
            4.0 * qfi_beam_deflection(&b),
            max_relative = 1e-14
        );
        let tiny = b.with_w0(1e-12).unwrap();
        assert!(qfi_beam_deflection(&tiny) < 1e-8 * qfi_beam_deflection(&b));
    }

    #[test]
    fn qfi_interferometers_limits() {
        let b = beam(1e-3);
        let qbd = qfi_beam_deflection(&b);
        let h = PolarizationState::horizontal();
        let v = PolarizationState::vertical();
        let plus = PolarizationState::diagonal();
        let k = k633();
        assert_relative_eq!(qfi_sagnac(&b, &h), qbd, max_relative = 1e-14);
        assert_relative_eq!(qfi_sagnac(&b, &v), qbd, max_relative = 1e-14);
        assert_relative_eq!(qfi_sagnac(&beam(0.0), &plus), qbd, max_relative = 1e-14);
        assert_relative_eq!(qfi_sagnac(&b, &plus), 16.0 * k * k * 1.25e-6, max_relative = 1e-14);
        assert_relative_eq!(qfi_sagnac(&b, &plus), 5.0 * qbd, max_relative = 1e-14);
        assert_relative_eq!(qfi_mach_zehnder(&b, &v), qbd, max_relative = 1e-14);
        assert_eq!(qfi_mach_zehnder(&b, &h), 0.0);
        assert_relative_eq!(
            qfi_mach_zehnder(&b, &plus),
            8.0 * k * k * (2.5e-7 + 0.5e-6),
            max_relative = 1e-12
        );
    }

    #[test]
    fn position_fisher_limits() {
        let b = beam(0.7e-3);
        let zr = b.rayleigh_range();
        let q = qfi_beam_deflection(&b);
        assert_eq!(fisher_position(&b, 0.0), 0.0);
        assert_relative_eq!(fisher_position(&b, zr), 0.5 * q, max_relative = 1e-14);
        assert!(fisher_position(&b, 1e4 * zr) / q > 1.0 - 1e-6);
    }

    #[test]
    fn quadrant_limits() {
        let b = beam(0.0);
        let zr = b.rayleigh_range();
        assert_eq!(fisher_quadrant(&b, 0.0, 0.0), 0.0);
        let far = fisher_quadrant(&b, 0.0, 1e5 * zr) / qfi_beam_deflection(&b);
        assert_relative_eq!(far, 2.0 / std::f64::consts::PI, max_relative = 1e-9);
        let z = 3.0;
        let w = b.width(z);
        assert_relative_eq!(
            fisher_quadrant(&b, 0.0, z),
            32.0 * z * z / (std::f64::consts::PI * w * w),
            max_relative = 1e-14
        );
        // Far in the tail the information vanishes rather than producing NaN.
        let f = fisher_quadrant(&b, 1.0, 1e3);
        assert!(f.is_finite() && f >= 0.0);
    }

    #[test]
    fn sagnac_polarization_small_angle_limit() {
        let k = k633();
        let plus = PolarizationState::diagonal();
        for &xi in &[0.0, 0.5e-3, 1e-3, 2e-3] {
            let b = beam(xi);
            let expected = 16.0 * k * k * (0.25e-6 + xi * xi);
            assert_relative_eq!(
                fisher_sagnac_polarization(&b, &plus, 0.0),
                expected,
                max_relative = 1e-12
            );
            // Continuity into the exact branch.
            assert_relative_eq!(
                fisher_sagnac_polarization(&b, &plus, 1e-11),
                expected,
                max_relative = 1e-6
            );
        }
        let h = PolarizationState::horizontal();
        assert_eq!(fisher_sagnac_polarization(&beam(1e-3), &h, 1e-6), 0.0);
        assert_eq!(fisher_sagnac_polarization(&beam(1e-3), &h, 0.0), 0.0);
    }

    #[test]
    fn sagnac_polarization_series_nondegenerate() {
        // θ = 0 with φ ≠ 0 is not a 0/0 point; the series agrees with the exact form.
        let b = beam(1e-3);
        let pol = PolarizationState::from_bloch(1.2, 0.4).unwrap();
        let series = fisher_sagnac_polarization(&b, &pol, 0.0);
        let exact = fisher_sagnac_polarization(&b, &pol, 2e-12);
        assert_relative_eq!(series, exact, max_relative = 1e-6);
    }

    #[test]
    fn sagnac_polarization_denominator_resolved_by_oracle() {
        // d ≠ ½ distinguishes 4d² from 4d in the denominator.
        let b = beam(1e-3);
        let pol = PolarizationState::from_bloch(0.9, 0.3).unwrap();
        let theta = 2e-6;
        let m = SchemeModel::new(Scheme::SagnacPolarization { z: 0.0, pol }, b).unwrap();
        let oracle = numeric_fisher_oracle(&m, theta, default_step(theta)).unwrap().fisher;
        let analytic = fisher_sagnac_polarization(&b, &pol, theta);
        assert_relative_eq!(analytic, oracle, max_relative = 1e-6);

        let d = pol.d();
        let psi = 4.0 * b.k() * b.xi() * theta - pol.phase();
        let bb = visibility_decay(&b);
        let num = 16.0 * d * d * (bb * theta * psi.cos() + 2.0 * b.k() * b.xi() * psi.sin()).powi(2);
        let printed = num / ((2.0 * bb * theta * theta).exp() - 4.0 * d * psi.cos().powi(2));
        assert!((printed - oracle).abs() / oracle > 1e-2);
    }

    #[test]
    fn conditioned_fisher_reference_points() {
        let k = k633();
        let b = beam(1e-3);
        let zr = b.rayleigh_range();
        for &z in &[0.0, 0.3 * zr, zr, 8.0 * zr] {
            assert_relative_eq!(
                fisher_conditioned(&b, z, b.xi(), 0.0),
                16.0 * k * k * 1e-6,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                fisher_conditioned(&b, z, b.xi(), 1e-6),
                16.0 * k * k * 1e-6,
                max_relative = 1e-10
            );
        }
        assert_relative_eq!(
            fisher_conditioned(&b, 1e4 * zr, 0.0, 0.0),
            16.0 * k * k * 1e-6,
            max_relative = 1e-7
        );
        assert_eq!(fisher_conditioned(&beam(0.0), 0.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn small_angle_display_equals_a2_plus_b2() {
        let b = beam(0.8e-3);
        for &z in &[0.0, 1.0, 10.0, 200.0] {
            for &x in &[-2e-3, 0.0, 0.5e-3, 3e-3] {
                let (a, bc) = crate::schemes::ab_coefficients(&b, z, x);
                let display = fisher_conditioned_small_angle(&b, z, x);
                assert_relative_eq!(a * a + bc * bc, display, max_relative = 1e-12);
                assert_relative_eq!(fisher_conditioned(&b, z, x, 0.0), display, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn conditioned_matches_oracle() {
        let b = beam(1e-3);
        for &(z, x, theta) in &[(5.0, 0.5e-3, 2e-6), (1.0, -1e-3, 1e-6), (20.0, 3e-3, 5e-7)] {
            let m = ConditionedPolarizationModel { beam: b, z, x };
            let o = numeric_fisher_oracle(&m, theta, default_step(theta)).unwrap();
            assert_relative_eq!(fisher_conditioned(&b, z, x, theta), o.fisher, max_relative = 1e-6);
        }
    }

    #[test]
    fn decomposition_small_angle() {
        let k = k633();
        for &xi in &[0.0, 1e-3] {
            let b = beam(xi);
            let d = fisher_total_decomposition(&b, 5.0 * b.rayleigh_range(), 1e-9).unwrap();
            let expected = 16.0 * k * k * (0.25e-6 + xi * xi);
            assert_relative_eq!(d.avg_conditioned, expected, max_relative = 1e-8);
            assert!(d.position_part < 1e-6 * d.total);
        }
    }

    #[test]
    fn joint_general_matches_decomposition_for_diagonal_input() {
        let b = beam(1e-3);
        let z = 5.0 * b.rayleigh_range();
        let plus = PolarizationState::diagonal();
        for &theta in &[1e-6, 3e-7] {
            let dec = fisher_total_decomposition(&b, z, theta).unwrap();
            let joint = fisher_joint(&b, &plus, z, theta).unwrap();
            assert_relative_eq!(dec.total, joint, max_relative = 1e-7);
        }
        let at_zero = fisher_joint(&b, &plus, z, 0.0).unwrap();
        assert_relative_eq!(at_zero, qfi_sagnac(&b, &plus), max_relative = 1e-6);
    }

    #[test]
    fn report_fields() {
        let b = beam(1e-3);
        let s = Scheme::Quadrant {
            z: 10.0,
            split: QuadrantSplit::BeamAxis,
        };
        let r = fisher_report(&s, &b, 1e-6, 10_000).unwrap();
        assert!(r.respects_bound());
        assert!(r.oracle_relative_error() < 1e-6);
        assert_relative_eq!(r.cr_bound, 1.0 / (1e4 * r.analytic).sqrt(), max_relative = 1e-14);
        assert!(r.warnings.is_empty());
    }

    proptest! {
        #[test]
        fn even_in_theta(theta in 1e-9f64..2e-5, z in 0.0f64..30.0, x in -3e-3f64..3e-3, xi in -2e-3f64..2e-3) {
            let b = beam(xi);
            let plus = PolarizationState::diagonal();
            let pairs = [
                (fisher_quadrant(&b, theta, z), fisher_quadrant(&b, -theta, z)),
                (fisher_sagnac_polarization(&b, &plus, theta), fisher_sagnac_polarization(&b, &plus, -theta)),
                (fisher_conditioned(&b, z, x, theta), fisher_conditioned(&b, z, x, -theta)),
            ];
            for (p, n) in pairs {
                prop_assert!((p - n).abs() <= 1e-12 * p.abs().max(1e-300));
            }
        }

        #[test]
        fn measurements_respect_their_bounds(
            theta in -1e-5f64..1e-5,
            z in 0.0f64..50.0,
            xi in -2e-3f64..2e-3,
            vartheta in 0.0f64..std::f64::consts::PI,
            phi in -3.2f64..3.2,
        ) {
            let b = beam(xi);
            let pol = PolarizationState::from_bloch(vartheta, phi).unwrap();
            let q = qfi_beam_deflection(&b);
            prop_assert!(fisher_position(&b, z) <= q * (1.0 + 1e-12));
            prop_assert!(fisher_quadrant(&b, theta, z) <= q * (1.0 + 1e-12));
            let qs = qfi_sagnac(&b, &pol);
            prop_assert!(fisher_sagnac_polarization(&b, &pol, theta) <= qs * (1.0 + 1e-6));
        }

        #[test]
        fn sagnac_dominates_mach_zehnder(
            w0 in 1e-5f64..1e-2,
            xi in -1e-2f64..1e-2,
            vartheta in 0.0f64..std::f64::consts::PI,
        ) {
            let b = BeamParams::from_wavelength(633e-9, w0, xi).unwrap();
            let pol = PolarizationState::from_bloch(vartheta, 0.0).unwrap();
            prop_assert!(qfi_sagnac(&b, &pol) >= qfi_mach_zehnder(&b, &pol));
        }
    }
}
