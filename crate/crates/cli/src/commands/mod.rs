//! Subcommand implementations. Each returns its tables and figures in memory;
//! writing them to disk is left to the caller.

mod figures;
mod fisher;
mod montecarlo;
mod sweep;

pub use figures::{figure3, figure4};
pub use fisher::fisher;
pub use montecarlo::{montecarlo, CHECK_MIN_NU, CHECK_MIN_TRIALS, RATIO_RANGE};
pub use sweep::sweep;

use rayon::prelude::*;
use tiltsense::{BeamParams, Scheme};

use crate::config::{RunSpec, ScenarioConfig};
use crate::error::{CliError, Result};
use crate::output::Table;
use crate::svg::Figure;

#[derive(Debug, Clone, Default)]
pub struct CommandOutput {
    pub tables: Vec<Table>,
    pub figures: Vec<(String, Figure)>,
    /// Set when the outputs were produced but a check on them failed.
    pub failure: Option<String>,
}

impl CommandOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// One evaluation point of a run: the run, the beam offset and the plane.
#[derive(Debug, Clone, Copy)]
pub(crate) struct GridPoint<'a> {
    pub run: &'a RunSpec,
    pub beam: BeamParams,
    pub scheme: Scheme,
    pub theta: f64,
}

impl GridPoint<'_> {
    pub fn describe(&self) -> String {
        format!(
            "run `{}` (xi = {:e} m, z = {:e} m, theta = {:e} rad)",
            self.run.name,
            self.beam.xi(),
            self.scheme.z(),
            self.theta
        )
    }
}

/// Every point of every run in output order: run, then xi, then z, then theta.
pub(crate) fn grid_points(cfg: &ScenarioConfig) -> Result<Vec<GridPoint<'_>>> {
    if cfg.runs.is_empty() {
        return Err(CliError::Config("the scenario has no [[run]] blocks".into()));
    }
    let mut points = Vec::new();
    for run in &cfg.runs {
        for &xi in &cfg.xi {
            let beam = cfg.beam_at(xi);
            for &z in &run.z {
                for &theta in &run.theta {
                    points.push(GridPoint {
                        run,
                        beam,
                        scheme: run.scheme.at(z),
                        theta,
                    });
                }
            }
        }
    }
    Ok(points)
}

/// Evaluates `f` on every point in parallel, keeping grid order.
pub(crate) fn evaluate<'a, T, F>(points: &[GridPoint<'a>], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&GridPoint<'a>) -> Result<T> + Sync + Send,
{
    points.par_iter().map(f).collect()
}

/// `value` in millimetres with trailing zeros removed, for labels.
pub(crate) fn mm_label(value: f64) -> String {
    let s = format!("{:.4}", value * 1e3);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    format!("{} mm", if s == "-0" { "0" } else { s })
}

/// `count` evenly spaced values from `lo` to `hi` inclusive.
pub(crate) fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| if i == count - 1 { hi } else { lo + step * i as f64 })
        .collect()
}
