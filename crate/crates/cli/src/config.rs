//! Scenario files. A scenario is a TOML document with a `[beam]` table,
//! optional default `[grid]`, `[montecarlo]` and `[output]` tables and any
//! number of `[[run]]` blocks, each naming exactly one detection scheme.
//!
//! ```toml
//! [beam]
//! wavelength = "633nm"
//! w0 = "1mm"
//! xi = ["0mm", "1mm"]
//!
//! [grid]
//! z = { start = "0z_R", stop = "10z_R", count = 21 }
//! theta = ["0urad"]
//!
//! [[run]]
//! scheme = "quadrant"
//! ```

use std::ops::Range;
use std::path::PathBuf;

use serde::Deserialize;
use tiltsense::{BeamParams, PolarizationState, QuadrantSplit, Scheme};
use toml::Spanned;

use crate::error::{CliError, Result};
use crate::units::{parse_quantity, photon_count, Dimension};

const MAX_GRID_POINTS: usize = 1_000_000;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    beam: RawBeam,
    #[serde(default)]
    grid: RawGrids,
    #[serde(default)]
    run: Vec<RawRun>,
    montecarlo: Option<RawMonteCarlo>,
    #[serde(default)]
    output: RawOutput,
    #[serde(default)]
    figure: RawFigure,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBeam {
    wavelength: Option<Spanned<String>>,
    k: Option<Spanned<String>>,
    w0: Option<Spanned<String>>,
    rayleigh_range: Option<Spanned<String>>,
    xi: Option<Spanned<toml::Value>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    theta: Option<Spanned<toml::Value>>,
    z: Option<Spanned<toml::Value>>,
    x: Option<Spanned<toml::Value>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    name: Option<String>,
    scheme: Spanned<String>,
    split: Option<Spanned<String>>,
    polarization: Option<RawPolarization>,
    theta: Option<Spanned<toml::Value>>,
    z: Option<Spanned<toml::Value>>,
    x: Option<Spanned<toml::Value>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolarization {
    vartheta: Spanned<String>,
    phi: Spanned<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMonteCarlo {
    nu: Option<Spanned<u64>>,
    energy: Option<Spanned<String>>,
    trials: Spanned<usize>,
    seed: Option<u64>,
    search_half_width: Option<Spanned<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFigure {
    points: Option<Spanned<usize>>,
    theta: Option<Spanned<String>>,
}

/// Which detection scheme a run uses, before it is placed at a distance `z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    Position,
    Quadrant(QuadrantSplit),
    SagnacPolarization(PolarizationState),
    SagnacJoint(PolarizationState),
}

impl SchemeKind {
    pub fn at(self, z: f64) -> Scheme {
        match self {
            SchemeKind::Position => Scheme::DirectPosition { z },
            SchemeKind::Quadrant(split) => Scheme::Quadrant { z, split },
            SchemeKind::SagnacPolarization(pol) => Scheme::SagnacPolarization { z, pol },
            SchemeKind::SagnacJoint(pol) => Scheme::SagnacPositionPolarization { z, pol },
        }
    }

    pub fn name(self) -> &'static str {
        self.at(0.0).name()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub name: String,
    pub scheme: SchemeKind,
    pub theta: Vec<f64>,
    pub z: Vec<f64>,
    /// Detection positions for density tables; `None` means a default window.
    pub x: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloSpec {
    pub nu: u64,
    pub trials: usize,
    pub seed: u64,
    pub search_half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigureSpec {
    pub points: usize,
    /// Tilt at which the decomposition columns of the figure-4 integrals are evaluated.
    pub theta: f64,
}

impl Default for FigureSpec {
    fn default() -> Self {
        Self {
            points: 401,
            theta: 1e-9,
        }
    }
}

/// A validated scenario, every quantity in SI units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// The beam with `xi = 0`; displaced copies come from `xi`.
    pub beam: BeamParams,
    pub xi: Vec<f64>,
    pub runs: Vec<RunSpec>,
    pub montecarlo: Option<MonteCarloSpec>,
    pub output_dir: Option<PathBuf>,
    pub figure: FigureSpec,
    /// The document as written, echoed into metadata sidecars.
    pub source: String,
}

impl ScenarioConfig {
    pub fn beam_at(&self, xi: f64) -> BeamParams {
        self.beam
            .with_xi(xi)
            .expect("xi values are validated when the scenario is parsed")
    }
}

/// Maps byte spans back to `line:column` positions in the source.
struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn position(&self, span: &Range<usize>) -> String {
        let before = &self.text[..span.start.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        format!("line {line}, column {column}")
    }

    fn error(&self, field: &str, span: &Range<usize>, message: impl std::fmt::Display) -> CliError {
        CliError::Config(format!("{field} ({}): {message}", self.position(span)))
    }

    fn quantity(&self, field: &str, raw: &Spanned<String>, dim: Dimension, zr: Option<f64>) -> Result<f64> {
        parse_quantity(raw.get_ref(), dim, zr).map_err(|e| self.error(field, &raw.span(), e))
    }

    fn grid(&self, field: &str, raw: &Spanned<toml::Value>, dim: Dimension, zr: Option<f64>) -> Result<Vec<f64>> {
        let span = raw.span();
        let err = |m: String| self.error(field, &span, m);
        let parse = |v: &toml::Value| -> Result<f64> {
            match v {
                toml::Value::String(s) => parse_quantity(s, dim, zr).map_err(err),
                other => Err(err(format!(
                    "expected a quantity string with a unit, found {}",
                    other.type_str()
                ))),
            }
        };
        let values = match raw.get_ref() {
            toml::Value::String(_) => vec![parse(raw.get_ref())?],
            toml::Value::Array(items) => items.iter().map(parse).collect::<Result<Vec<_>>>()?,
            toml::Value::Table(t) => {
                let allowed = ["start", "stop", "count"];
                if let Some(extra) = t.keys().find(|k| !allowed.contains(&k.as_str())) {
                    return Err(err(format!(
                        "unknown key `{extra}` in range (expected start, stop, count)"
                    )));
                }
                let get = |key: &str| t.get(key).ok_or_else(|| err(format!("range is missing `{key}`")));
                let start = parse(get("start")?)?;
                let stop = parse(get("stop")?)?;
                let count = get("count")?
                    .as_integer()
                    .filter(|&c| c >= 1 && c as usize <= MAX_GRID_POINTS)
                    .ok_or_else(|| err(format!("`count` must be an integer in 1..={MAX_GRID_POINTS}")))?
                    as usize;
                if count == 1 {
                    if start != stop {
                        return Err(err("a range with count = 1 needs start = stop".into()));
                    }
                    vec![start]
                } else {
                    let step = (stop - start) / (count - 1) as f64;
                    (0..count)
                        .map(|i| if i == count - 1 { stop } else { start + step * i as f64 })
                        .collect()
                }
            }
            other => {
                return Err(err(format!(
                    "expected a quantity, a list of quantities or a {{ start, stop, count }} range, found {}",
                    other.type_str()
                )))
            }
        };
        if values.is_empty() {
            return Err(err("grid is empty".into()));
        }
        if let Some(w) = values.windows(2).find(|w| w[1] <= w[0]) {
            return Err(err(format!(
                "grid must be strictly increasing ({:e} is followed by {:e})",
                w[0], w[1]
            )));
        }
        Ok(values)
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let src = Source { text };
        let b = &raw.beam;

        let k = match (&b.wavelength, &b.k) {
            (Some(l), None) => {
                let lambda = src.quantity("beam.wavelength", l, Dimension::Length, None)?;
                if lambda <= 0.0 {
                    return Err(src.error("beam.wavelength", &l.span(), "must be positive"));
                }
                2.0 * std::f64::consts::PI / lambda
            }
            (None, Some(k)) => {
                let v = src.quantity("beam.k", k, Dimension::Wavenumber, None)?;
                if v <= 0.0 {
                    return Err(src.error("beam.k", &k.span(), "must be positive"));
                }
                v
            }
            _ => return Err(CliError::Config("beam: give exactly one of `wavelength` or `k`".into())),
        };
        let w0 = match (&b.w0, &b.rayleigh_range) {
            (Some(w), None) => src.quantity("beam.w0", w, Dimension::Length, None)?,
            (None, Some(zr)) => {
                let zr_v = src.quantity("beam.rayleigh_range", zr, Dimension::Length, None)?;
                if zr_v <= 0.0 {
                    return Err(src.error("beam.rayleigh_range", &zr.span(), "must be positive"));
                }
                (2.0 * zr_v / k).sqrt()
            }
            _ => {
                return Err(CliError::Config(
                    "beam: give exactly one of `w0` or `rayleigh_range`".into(),
                ))
            }
        };
        let beam = BeamParams::new(k, w0, 0.0).map_err(|e| CliError::Config(format!("beam: {e}")))?;
        let zr = Some(beam.rayleigh_range());

        let xi = match &b.xi {
            Some(v) => src.grid("beam.xi", v, Dimension::Length, zr)?,
            None => vec![0.0],
        };

        let pick = |run: &Option<Spanned<toml::Value>>, default: &Option<Spanned<toml::Value>>| {
            run.as_ref().or(default.as_ref()).cloned()
        };
        let mut runs = Vec::with_capacity(raw.run.len());
        for (i, r) in raw.run.iter().enumerate() {
            let field = |f: &str| format!("run[{i}].{f}");
            let pol = match &r.polarization {
                Some(p) => {
                    let vt = src.quantity(&field("polarization.vartheta"), &p.vartheta, Dimension::Angle, None)?;
                    let phi = src.quantity(&field("polarization.phi"), &p.phi, Dimension::Angle, None)?;
                    PolarizationState::from_bloch(vt, phi)
                        .map_err(|e| src.error(&field("polarization"), &p.vartheta.span(), e))?
                }
                None => PolarizationState::diagonal(),
            };
            let scheme = match r.scheme.get_ref().as_str() {
                "position" => SchemeKind::Position,
                "quadrant" => SchemeKind::Quadrant(match &r.split {
                    None => QuadrantSplit::BeamAxis,
                    Some(s) => match s.get_ref().as_str() {
                        "beam-axis" => QuadrantSplit::BeamAxis,
                        "origin" => QuadrantSplit::Origin,
                        other => {
                            return Err(src.error(
                                &field("split"),
                                &s.span(),
                                format!("unknown split `{other}` (expected beam-axis or origin)"),
                            ))
                        }
                    },
                }),
                "sagnac-polarization" => SchemeKind::SagnacPolarization(pol),
                "sagnac-joint" => SchemeKind::SagnacJoint(pol),
                other => return Err(src.error(
                    &field("scheme"),
                    &r.scheme.span(),
                    format!(
                        "unknown scheme `{other}` (expected position, quadrant, sagnac-polarization or sagnac-joint)"
                    ),
                )),
            };
            if let (Some(split), false) = (&r.split, matches!(scheme, SchemeKind::Quadrant(_))) {
                return Err(src.error(&field("split"), &split.span(), "only quadrant runs take a split"));
            }
            if r.polarization.is_some()
                && !matches!(scheme, SchemeKind::SagnacPolarization(_) | SchemeKind::SagnacJoint(_))
            {
                return Err(src.error(
                    &field("polarization"),
                    &r.scheme.span(),
                    "only Sagnac runs take a polarization",
                ));
            }
            let theta = pick(&r.theta, &raw.grid.theta).ok_or_else(|| {
                CliError::Config(format!("{}: no theta grid in the run or in [grid]", field("theta")))
            })?;
            let z = pick(&r.z, &raw.grid.z)
                .ok_or_else(|| CliError::Config(format!("{}: no z grid in the run or in [grid]", field("z"))))?;
            let z = src.grid(&field("z"), &z, Dimension::Length, zr)?;
            if let Some(bad) = z.iter().find(|z| **z < 0.0) {
                return Err(CliError::Config(format!(
                    "{}: distances must be non-negative, found {bad:e}",
                    field("z")
                )));
            }
            runs.push(RunSpec {
                name: r.name.clone().unwrap_or_else(|| format!("{}-{i}", scheme.name())),
                scheme,
                theta: src.grid(&field("theta"), &theta, Dimension::Angle, zr)?,
                z,
                x: pick(&r.x, &raw.grid.x)
                    .map(|x| src.grid(&field("x"), &x, Dimension::Length, zr))
                    .transpose()?,
            });
        }
        let mut names: Vec<&str> = runs.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::Config(format!("run name `{}` is used twice", w[0])));
        }

        let montecarlo = match &raw.montecarlo {
            None => None,
            Some(m) => {
                let nu = match (&m.nu, &m.energy) {
                    (Some(nu), None) if *nu.get_ref() == 0 => {
                        return Err(src.error("montecarlo.nu", &nu.span(), "must be at least 1"))
                    }
                    (Some(nu), None) => *nu.get_ref(),
                    (None, Some(e)) => {
                        let energy = src.quantity("montecarlo.energy", e, Dimension::Energy, None)?;
                        let n = photon_count(energy, beam.wavelength());
                        if !(n >= 1.0 && n <= u64::MAX as f64) {
                            return Err(src.error(
                                "montecarlo.energy",
                                &e.span(),
                                format!("corresponds to {n:e} photons, need at least one"),
                            ));
                        }
                        n as u64
                    }
                    _ => {
                        return Err(CliError::Config(
                            "montecarlo: give exactly one of `nu` or `energy`".into(),
                        ))
                    }
                };
                if *m.trials.get_ref() == 0 {
                    return Err(src.error("montecarlo.trials", &m.trials.span(), "must be at least 1"));
                }
                let search_half_width = match &m.search_half_width {
                    Some(h) if !(*h.get_ref() > 0.0 && h.get_ref().is_finite()) => {
                        return Err(src.error("montecarlo.search_half_width", &h.span(), "must be positive"))
                    }
                    Some(h) => *h.get_ref(),
                    None => 8.0,
                };
                Some(MonteCarloSpec {
                    nu,
                    trials: *m.trials.get_ref(),
                    seed: m.seed.unwrap_or(0),
                    search_half_width,
                })
            }
        };

        let mut figure = FigureSpec::default();
        if let Some(p) = &raw.figure.points {
            if *p.get_ref() < 2 || *p.get_ref() > MAX_GRID_POINTS {
                return Err(src.error("figure.points", &p.span(), format!("must be in 2..={MAX_GRID_POINTS}")));
            }
            figure.points = *p.get_ref();
        }
        if let Some(t) = &raw.figure.theta {
            figure.theta = src.quantity("figure.theta", t, Dimension::Angle, None)?;
        }

        Ok(Self {
            beam,
            xi,
            runs,
            montecarlo,
            output_dir: raw.output.dir,
            figure,
            source: text.to_string(),
        })
    }

    /// Default beam for the figure commands: `z_R = 1 m` at 633 nm.
    pub fn figure_default() -> Self {
        Self {
            beam: BeamParams::from_rayleigh_range(633e-9, 1.0, 0.0).expect("valid default beam"),
            xi: vec![0.0],
            runs: Vec::new(),
            montecarlo: None,
            output_dir: None,
            figure: FigureSpec::default(),
            source: String::new(),
        }
    }
}
