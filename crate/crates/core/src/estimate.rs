//! Monte Carlo photon sampling and maximum-likelihood estimation of the tilt.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OutcomeSample, OutcomeSpace, ProbabilityModel};

/// Points in the coarse likelihood grid.
pub const MLE_GRID_POINTS: usize = 201;

/// Golden-section termination width (rad).
pub const MLE_TOLERANCE: f64 = 1e-12;

/// Minimum acceptance rate of the rejection sampler.
pub const MIN_REJECTION_EFFICIENCY: f64 = 0.01;

/// Independent generator for one trial. ChaCha is counter-based: the stream
/// id selects a disjoint keystream, so trial `i` draws the same numbers no
/// matter which thread runs it or in which order.
pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(master_seed);
    rng.set_stream(trial);
    rng
}

/// Draws `nu` independent detection events at tilt `theta`.
pub fn sample_outcomes<M, R>(model: &M, theta: f64, nu: u64, rng: &mut R) -> Result<OutcomeSample>
where
    M: ProbabilityModel + ?Sized,
    R: Rng + ?Sized,
{
    match model.outcome_space(theta) {
        OutcomeSpace::Discrete(outcomes) => {
            let probs: Vec<f64> = outcomes.iter().map(|o| model.probability(theta, o)).collect();
            let total: f64 = probs.iter().sum();
            if !(total.is_finite() && total > 0.0) || probs.iter().any(|p| *p < 0.0) {
                return Err(Error::invalid(
                    "theta",
                    format!("model `{}` has no valid probabilities", model.name()),
                ));
            }
            let mut counts = vec![0u64; outcomes.len()];
            for _ in 0..nu {
                counts[inverse_cdf(&probs, total, rng.random::<f64>())] += 1;
            }
            Ok(OutcomeSample {
                counts: outcomes.into_iter().zip(counts).collect(),
                points: Vec::new(),
            })
        }
        OutcomeSpace::Continuous { channels, window } => {
            let mut points = Vec::with_capacity(nu as usize);
            let marginal = |x: f64| -> f64 { channels.iter().map(|c| model.probability(theta, &c.at(x))).sum() };
            let positions = match model.position_mixture(theta) {
                Some(mix) => {
                    let weights: Vec<f64> = mix.iter().map(|c| c.weight).collect();
                    let total: f64 = weights.iter().sum();
                    (0..nu)
                        .map(|_| {
                            let c = &mix[inverse_cdf(&weights, total, rng.random::<f64>())];
                            let n: f64 = rng.sample(StandardNormal);
                            c.mean + c.sd * n
                        })
                        .collect::<Vec<_>>()
                }
                None => rejection_sample(&marginal, window, nu, rng)?,
            };
            for x in positions {
                let outcome = if channels.len() == 1 {
                    channels[0].at(x)
                } else {
                    let probs: Vec<f64> = channels.iter().map(|c| model.probability(theta, &c.at(x))).collect();
                    let total: f64 = probs.iter().sum();
                    channels[inverse_cdf(&probs, total, rng.random::<f64>())].at(x)
                };
                points.push(outcome);
            }
            Ok(OutcomeSample {
                counts: Vec::new(),
                points,
            })
        }
    }
}

fn inverse_cdf(probs: &[f64], total: f64, u: f64) -> usize {
    let target = u * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    // Rounding can leave target == total; take the last outcome with mass.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Rejection sampling against a Gaussian envelope spanning the window.
fn rejection_sample<F, R>(density: &F, window: (f64, f64), nu: u64, rng: &mut R) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64,
    R: Rng + ?Sized,
{
    let centre = 0.5 * (window.0 + window.1);
    let sd = (window.1 - window.0) / 6.0;
    let envelope = |x: f64| {
        let t = (x - centre) / sd;
        (-0.5 * t * t).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
    };
    let grid = 4001;
    let bound = (0..grid)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / (grid - 1) as f64)
        .map(|x| density(x) / envelope(x))
        .fold(0.0f64, f64::max)
        * 1.05;
    if !(bound.is_finite() && bound > 0.0) {
        return Err(Error::RejectionEfficiency { efficiency: 0.0 });
    }
    let mut out = Vec::with_capacity(nu as usize);
    let mut attempts: u64 = 0;
    while (out.len() as u64) < nu {
        attempts += 1;
        let x = centre + sd * rng.sample::<f64, _>(StandardNormal);
        if x >= window.0 && x <= window.1 && rng.random::<f64>() * bound * envelope(x) < density(x) {
            out.push(x);
        }
        if attempts >= 1000 {
            let efficiency = out.len() as f64 / attempts as f64;
            if efficiency < MIN_REJECTION_EFFICIENCY {
                return Err(Error::RejectionEfficiency { efficiency });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleEstimate {
    pub theta_hat: f64,
    pub log_likelihood: f64,
    /// False when the coarse maximum sits on the edge of the search interval.
    pub interior: bool,
}

/// Maximises the log-likelihood on `interval`: a 201-point grid, then golden
/// section around the best grid point down to 1e-12 rad.
pub fn mle<M: ProbabilityModel + ?Sized>(
    model: &M,
    sample: &OutcomeSample,
    interval: (f64, f64),
) -> Result<MleEstimate> {
    let (lo, hi) = interval;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::invalid(
            "search_interval",
            format!("[{lo}, {hi}] is not a proper interval"),
        ));
    }
    let ll = |t: f64| model.log_likelihood(t, sample);
    let step = (hi - lo) / (MLE_GRID_POINTS - 1) as f64;
    let node = |i: usize| {
        if i == MLE_GRID_POINTS - 1 {
            hi
        } else {
            lo + step * i as f64
        }
    };

    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..MLE_GRID_POINTS {
        let v = ll(node(i));
        if v > best.1 {
            best = (i, v);
        }
    }
    let (i, v) = best;
    if i == 0 || i == MLE_GRID_POINTS - 1 || !v.is_finite() {
        return Ok(MleEstimate {
            theta_hat: node(i),
            log_likelihood: v,
            interior: false,
        });
    }

    let (theta_hat, log_likelihood) = golden_section_max(ll, node(i - 1), node(i + 1), MLE_TOLERANCE);
    let (theta_hat, log_likelihood) = if log_likelihood >= v {
        (theta_hat, log_likelihood)
    } else {
        (node(i), v)
    };
    Ok(MleEstimate {
        theta_hat,
        log_likelihood,
        interior: true,
    })
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationConfig {
    pub theta_true: f64,
    /// Detected photons per trial.
    pub nu: u64,
    pub trials: usize,
    pub seed: u64,
    pub interval: (f64, f64),
}

impl SaturationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nu == 0 {
            return Err(Error::invalid("nu", "at least one detection per trial is required"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "at least one trial is required"));
        }
        let (lo, hi) = self.interval;
        if !(lo < hi && lo <= self.theta_true && self.theta_true <= hi) {
            return Err(Error::invalid(
                "search_interval",
                format!("[{lo:e}, {hi:e}] must bracket theta_true = {:e}", self.theta_true),
            ));
        }
        Ok(())
    }
}

/// Search interval `theta_true ± half_width / sqrt(nu F)`, optionally clipped below.
pub fn cr_interval(theta_true: f64, fisher: f64, nu: u64, half_width: f64, floor: Option<f64>) -> (f64, f64) {
    let sd = 1.0 / (nu as f64 * fisher).sqrt();
    let lo = theta_true - half_width * sd;
    (floor.map_or(lo, |f| lo.max(f)), theta_true + half_width * sd)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: u64,
    pub theta_true: f64,
    pub nu: u64,
    pub seed: u64,
    pub theta_hat: f64,
    pub interior: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationReport {
    pub trials: usize,
    pub interior_trials: usize,
    /// Trials whose MLE landed on the interval boundary.
    pub excluded_trials: usize,
    pub mean_estimate: f64,
    /// Unbiased sample variance of interior estimates.
    pub empirical_variance: f64,
    /// `1 / (nu F)`.
    pub cr_variance: f64,
    pub ratio: f64,
    pub fisher: f64,
}

impl SaturationReport {
    pub fn excluded_fraction(&self) -> f64 {
        self.excluded_trials as f64 / self.trials as f64
    }

    /// One-sided check that the estimator does not beat the bound beyond
    /// `3 sqrt(2/trials)` relative slack.
    pub fn respects_cramer_rao(&self) -> bool {
        self.empirical_variance >= (1.0 - 3.0 * (2.0 / self.interior_trials as f64).sqrt()) * self.cr_variance
    }
}

pub fn run_trial<M: ProbabilityModel + ?Sized>(model: &M, cfg: &SaturationConfig, index: u64) -> Result<Trial> {
    let mut rng = trial_rng(cfg.seed, index);
    let sample = sample_outcomes(model, cfg.theta_true, cfg.nu, &mut rng)?;
    let est = mle(model, &sample, cfg.interval)?;
    Ok(Trial {
        index,
        theta_true: cfg.theta_true,
        nu: cfg.nu,
        seed: cfg.seed,
        theta_hat: est.theta_hat,
        interior: est.interior,
    })
}

/// Runs `cfg.trials` independent sample-and-estimate trials in parallel and
/// compares the spread of the estimates with the Cramér–Rao variance `1/(nu F)`.
pub fn run_saturation<M: ProbabilityModel + ?Sized>(
    model: &M,
    fisher: f64,
    cfg: &SaturationConfig,
) -> Result<(SaturationReport, Vec<Trial>)> {
    cfg.validate()?;
    let trials = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(model, cfg, i))
        .collect::<Result<Vec<_>>>()?;
    Ok((summarize(&trials, fisher, cfg.nu), trials))
}

pub fn summarize(trials: &[Trial], fisher: f64, nu: u64) -> SaturationReport {
    let interior: Vec<f64> = trials.iter().filter(|t| t.interior).map(|t| t.theta_hat).collect();
    let n = interior.len();
    let mean = interior.iter().sum::<f64>() / n as f64;
    let variance = if n > 1 {
        interior.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        f64::NAN
    };
    let cr_variance = 1.0 / (nu as f64 * fisher);
    SaturationReport {
        trials: trials.len(),
        interior_trials: n,
        excluded_trials: trials.len() - n,
        mean_estimate: mean,
        empirical_variance: variance,
        cr_variance,
        ratio: variance / cr_variance,
        fisher,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::BeamParams;
    use crate::model::{Channel, SchemeModel};
    use crate::schemes::{Outcome, PolarizationState, QuadrantSplit, Scheme, Sign};

    fn beam() -> BeamParams {
        BeamParams::from_wavelength(633e-9, 1e-3, 1e-3).unwrap()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| trial_rng(7, 3).random()).collect();
        let mut r1 = trial_rng(7, 3);
        let mut r2 = trial_rng(7, 4);
        let x: u64 = r1.random();
        let y: u64 = r2.random();
        assert_eq!(a[0], x);
        assert_ne!(x, y);
    }

    #[test]
    fn quadrant_sampling_is_fair_at_zero_tilt() {
        let m = SchemeModel::new(
            Scheme::Quadrant {
                z: 5.0,
                split: QuadrantSplit::BeamAxis,
            },
            beam(),
        )
        .unwrap();
        let nu = 1_000_000u64;
        let s = sample_outcomes(&m, 0.0, nu, &mut trial_rng(11, 0)).unwrap();
        let plus = s.count(&Outcome::Sign { s: Sign::Plus }) as f64;
        let sigma = (nu as f64 * 0.25).sqrt();
        assert!((plus - 0.5 * nu as f64).abs() < 5.0 * sigma);
        assert_eq!(s.len(), nu);
    }

    #[test]
    fn bright_port_only_at_zero_tilt() {
        let m = SchemeModel::new(
            Scheme::SagnacPolarization {
                z: 0.0,
                pol: PolarizationState::diagonal(),
            },
            beam(),
        )
        .unwrap();
        let s = sample_outcomes(&m, 0.0, 10_000, &mut trial_rng(1, 0)).unwrap();
        assert_eq!(s.count(&Outcome::Polarization { p: Sign::Plus }), 10_000);
    }

    #[test]
    fn single_outcome_mle_hits_boundary() {
        let m = SchemeModel::new(
            Scheme::Quadrant {
                z: 5.0,
                split: QuadrantSplit::BeamAxis,
            },
            beam(),
        )
        .unwrap();
        let sample = OutcomeSample {
            counts: vec![(Outcome::Sign { s: Sign::Plus }, 1)],
            points: vec![],
        };
        let est = mle(&m, &sample, (-1e-5, 2e-5)).unwrap();
        assert!(!est.interior);
        assert_eq!(est.theta_hat, 2e-5);
    }

    #[test]
    fn mle_recovers_binomial_inverse() {
        // 3000 of 10000 on the + side: MLE solves P+(θ) = 0.3 exactly.
        let b = beam();
        let m = SchemeModel::new(
            Scheme::Quadrant {
                z: 5.0,
                split: QuadrantSplit::BeamAxis,
            },
            b,
        )
        .unwrap();
        let sample = OutcomeSample {
            counts: vec![
                (Outcome::Sign { s: Sign::Plus }, 3000),
                (Outcome::Sign { s: Sign::Minus }, 7000),
            ],
            points: vec![],
        };
        let est = mle(&m, &sample, (-1e-4, 1e-4)).unwrap();
        assert!(est.interior);
        let (p, _) = crate::schemes::quadrant_probabilities(&b, est.theta_hat, 5.0);
        assert!((p - 0.3).abs() < 1e-9);
    }

    #[test]
    fn mle_is_deterministic() {
        let m = SchemeModel::new(Scheme::DirectPosition { z: 20.0 }, beam()).unwrap();
        let s = sample_outcomes(&m, 1e-6, 500, &mut trial_rng(5, 9)).unwrap();
        let a = mle(&m, &s, (-2e-5, 2e-5)).unwrap();
        let b = mle(&m, &s, (-2e-5, 2e-5)).unwrap();
        assert_eq!(a, b);
        // Gaussian MLE is the sample mean shift.
        let mean = s.points.iter().filter_map(Outcome::position).sum::<f64>() / 500.0;
        let direct = (mean - 1e-3) / 40.0;
        assert!((a.theta_hat - direct).abs() < 1e-11);
    }

    #[test]
    fn invalid_intervals_rejected() {
        let m = SchemeModel::new(Scheme::DirectPosition { z: 1.0 }, beam()).unwrap();
        assert!(mle(&m, &OutcomeSample::default(), (1.0, 1.0)).is_err());
        let cfg = SaturationConfig {
            theta_true: 1e-6,
            nu: 10,
            trials: 3,
            seed: 0,
            interval: (2e-6, 3e-6),
        };
        assert!(cfg.validate().is_err());
    }

    struct Triangle;

    impl ProbabilityModel for Triangle {
        fn name(&self) -> &'static str {
            "triangle"
        }
        fn outcome_space(&self, _theta: f64) -> OutcomeSpace {
            OutcomeSpace::Continuous {
                channels: vec![Channel::Position],
                window: (-1.0, 1.0),
            }
        }
        fn probability(&self, _theta: f64, o: &Outcome) -> f64 {
            let x = o.position().unwrap();
            (1.0 - x.abs()).max(0.0)
        }
    }

    struct Spike;

    impl ProbabilityModel for Spike {
        fn name(&self) -> &'static str {
            "spike"
        }
        fn outcome_space(&self, _theta: f64) -> OutcomeSpace {
            OutcomeSpace::Continuous {
                channels: vec![Channel::Position],
                window: (-1.0, 1.0),
            }
        }
        fn probability(&self, _theta: f64, o: &Outcome) -> f64 {
            let x = o.position().unwrap();
            let s = 1e-4;
            (-(x * x) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
        }
    }

    #[test]
    fn rejection_sampler_reproduces_non_mixture_density() {
        let s = sample_outcomes(&Triangle, 0.0, 20_000, &mut trial_rng(3, 0)).unwrap();
        let xs: Vec<f64> = s.points.iter().filter_map(Outcome::position).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
        // Triangle on [-1, 1]: variance 1/6.
        assert!(mean.abs() < 0.02);
        assert!((var - 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn rejection_sampler_aborts_when_inefficient() {
        let err = sample_outcomes(&Spike, 0.0, 1000, &mut trial_rng(3, 0)).unwrap_err();
        assert!(matches!(err, Error::RejectionEfficiency { .. }));
    }

    #[test]
    fn reports_are_bit_reproducible() {
        let b = beam();
        let m = SchemeModel::new(Scheme::DirectPosition { z: 10.0 }, b).unwrap();
        let f = crate::fisher::fisher_position(&b, 10.0);
        let cfg = SaturationConfig {
            theta_true: 1e-6,
            nu: 200,
            trials: 16,
            seed: 99,
            interval: cr_interval(1e-6, f, 200, 8.0, None),
        };
        let (r1, t1) = run_saturation(&m, f, &cfg).unwrap();
        let (r2, t2) = run_saturation(&m, f, &cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(t1, t2);
    }
}
