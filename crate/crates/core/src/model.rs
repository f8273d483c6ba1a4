//! Schemes bound to a beam, exposing outcome probabilities as functions of the tilt.

use serde::{Deserialize, Serialize};

use crate::beam::BeamParams;
use crate::error::Result;
use crate::schemes::{
    conditioned_polarization_probabilities, quadrant_probabilities_split, sagnac_joint_density,
    sagnac_polarization_probabilities, Outcome, Scheme, Sign,
};

/// Half-width of the integration window in local beam widths.
pub const WINDOW_WIDTHS: f64 = 10.0;

/// One continuous density channel of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    Position,
    PositionPolarization(Sign),
}

impl Channel {
    pub fn at(self, x: f64) -> Outcome {
        match self {
            Channel::Position => Outcome::ContinuousPosition { x },
            Channel::PositionPolarization(p) => Outcome::PositionPolarization { x, p },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutcomeSpace {
    /// Finite outcome set; probabilities are masses.
    Discrete(Vec<Outcome>),
    /// Densities over `x`, one per channel, effectively supported on `window`.
    Continuous { channels: Vec<Channel>, window: (f64, f64) },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

/// Outcomes from `nu` detections: discrete outcomes tallied, positions kept as-is.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSample {
    pub counts: Vec<(Outcome, u64)>,
    pub points: Vec<Outcome>,
}

impl OutcomeSample {
    pub fn len(&self) -> u64 {
        self.counts.iter().map(|(_, c)| c).sum::<u64>() + self.points.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, outcome: &Outcome) -> u64 {
        self.counts
            .iter()
            .filter(|(o, _)| o == outcome)
            .map(|(_, c)| c)
            .sum::<u64>()
            + self.points.iter().filter(|o| *o == outcome).count() as u64
    }
}

/// Outcome statistics of a measurement as a function of the tilt `theta`.
pub trait ProbabilityModel: Sync {
    fn name(&self) -> &'static str;

    fn outcome_space(&self, theta: f64) -> OutcomeSpace;

    /// Probability mass (discrete outcomes) or density (outcomes carrying `x`).
    fn probability(&self, theta: f64, outcome: &Outcome) -> f64;

    /// The `x` marginal as a Gaussian mixture, when it has that form.
    fn position_mixture(&self, _theta: f64) -> Option<Vec<MixtureComponent>> {
        None
    }

    fn log_likelihood(&self, theta: f64, sample: &OutcomeSample) -> f64 {
        default_log_likelihood(self, theta, sample)
    }
}

/// A [`Scheme`] bound to a beam.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeModel {
    pub scheme: Scheme,
    pub beam: BeamParams,
}

impl SchemeModel {
    pub fn new(scheme: Scheme, beam: BeamParams) -> Result<Self> {
        scheme.validate()?;
        Ok(Self { scheme, beam })
    }

    fn window(&self, theta: f64) -> (f64, f64) {
        let z = self.scheme.z();
        let half = WINDOW_WIDTHS * self.beam.width(z) + 2.0 * theta.abs() * z;
        (self.beam.xi() - half, self.beam.xi() + half)
    }
}

impl ProbabilityModel for SchemeModel {
    fn name(&self) -> &'static str {
        self.scheme.name()
    }

    fn outcome_space(&self, theta: f64) -> OutcomeSpace {
        match self.scheme {
            Scheme::DirectPosition { .. } => OutcomeSpace::Continuous {
                channels: vec![Channel::Position],
                window: self.window(theta),
            },
            Scheme::Quadrant { .. } => {
                OutcomeSpace::Discrete(Sign::BOTH.iter().map(|&s| Outcome::Sign { s }).collect())
            }
            Scheme::SagnacPolarization { .. } => {
                OutcomeSpace::Discrete(Sign::BOTH.iter().map(|&p| Outcome::Polarization { p }).collect())
            }
            Scheme::SagnacPositionPolarization { .. } => OutcomeSpace::Continuous {
                channels: Sign::BOTH.iter().map(|&p| Channel::PositionPolarization(p)).collect(),
                window: self.window(theta),
            },
        }
    }

    fn probability(&self, theta: f64, outcome: &Outcome) -> f64 {
        let beam = &self.beam;
        match (self.scheme, *outcome) {
            (Scheme::DirectPosition { z }, Outcome::ContinuousPosition { x }) => beam.intensity_profile(theta, z, x),
            (Scheme::Quadrant { z, split }, Outcome::Sign { s }) => {
                let (p, m) = quadrant_probabilities_split(beam, theta, z, split);
                pick(s, p, m)
            }
            (Scheme::SagnacPolarization { pol, .. }, Outcome::Polarization { p }) => {
                let (pp, pm) = sagnac_polarization_probabilities(beam, &pol, theta);
                pick(p, pp, pm)
            }
            (Scheme::SagnacPositionPolarization { z, pol }, Outcome::PositionPolarization { x, p }) => {
                let (pp, pm) = sagnac_joint_density(beam, &pol, theta, z, x);
                pick(p, pp, pm)
            }
            _ => 0.0,
        }
    }

    fn position_mixture(&self, theta: f64) -> Option<Vec<MixtureComponent>> {
        let z = self.scheme.z();
        let sd = 0.5 * self.beam.width(z);
        let xi = self.beam.xi();
        match self.scheme {
            Scheme::DirectPosition { .. } => Some(vec![MixtureComponent {
                weight: 1.0,
                mean: xi + 2.0 * theta * z,
                sd,
            }]),
            Scheme::SagnacPositionPolarization { pol, .. } => Some(vec![
                MixtureComponent {
                    weight: pol.alpha().norm_sqr(),
                    mean: xi - 2.0 * theta * z,
                    sd,
                },
                MixtureComponent {
                    weight: pol.beta().norm_sqr(),
                    mean: xi + 2.0 * theta * z,
                    sd,
                },
            ]),
            _ => None,
        }
    }

    fn log_likelihood(&self, theta: f64, sample: &OutcomeSample) -> f64 {
        let Scheme::DirectPosition { z } = self.scheme else {
            return default_log_likelihood(self, theta, sample);
        };
        // Gaussian log-density without exp/ln round trips.
        let w = self.beam.width(z);
        let mean = self.beam.xi() + 2.0 * theta * z;
        let log_norm = 0.5 * (2.0 / (std::f64::consts::PI * w * w)).ln();
        let scale = 2.0 / (w * w);
        sample
            .points
            .iter()
            .filter_map(Outcome::position)
            .map(|x| log_norm - scale * (x - mean) * (x - mean))
            .sum()
    }
}

fn default_log_likelihood<M: ProbabilityModel + ?Sized>(model: &M, theta: f64, sample: &OutcomeSample) -> f64 {
    let discrete: f64 = sample
        .counts
        .iter()
        .filter(|(_, c)| *c > 0)
        .map(|(o, c)| *c as f64 * model.probability(theta, o).ln())
        .sum();
    discrete
        + sample
            .points
            .iter()
            .map(|o| model.probability(theta, o).ln())
            .sum::<f64>()
}

fn pick(s: Sign, plus: f64, minus: f64) -> f64 {
    match s {
        Sign::Plus => plus,
        Sign::Minus => minus,
    }
}

/// Polarization measurement at a fixed detection point `x`, `|+>` input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionedPolarizationModel {
    pub beam: BeamParams,
    pub z: f64,
    pub x: f64,
}

impl ProbabilityModel for ConditionedPolarizationModel {
    fn name(&self) -> &'static str {
        "conditioned-polarization"
    }

    fn outcome_space(&self, _theta: f64) -> OutcomeSpace {
        OutcomeSpace::Discrete(Sign::BOTH.iter().map(|&p| Outcome::Polarization { p }).collect())
    }

    fn probability(&self, theta: f64, outcome: &Outcome) -> f64 {
        match *outcome {
            Outcome::Polarization { p } => {
                let (pp, pm) = conditioned_polarization_probabilities(&self.beam, theta, self.z, self.x);
                pick(p, pp, pm)
            }
            _ => 0.0,
        }
    }
}
