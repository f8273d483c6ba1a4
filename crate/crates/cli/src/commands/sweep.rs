use tiltsense::{Outcome, OutcomeSpace, ProbabilityModel, SchemeModel};

use super::{evaluate, grid_points, linspace, CommandOutput};
use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::{Cell, Table};

pub const HEADER: &[&str] = &[
    "run",
    "scheme",
    "xi_m",
    "z_m",
    "theta_rad",
    "outcome",
    "x_m",
    "kind",
    "value",
];

/// Detection positions used when a run gives no `x` grid: the beam centre
/// plus or minus four widths, 201 points.
const DEFAULT_X_POINTS: usize = 201;
const DEFAULT_X_WIDTHS: f64 = 4.0;

fn outcome_label(o: &Outcome) -> String {
    match o {
        Outcome::ContinuousPosition { .. } => "position".into(),
        Outcome::Sign { s } => format!("side{}", s.symbol()),
        Outcome::Polarization { p } => format!("pol{}", p.symbol()),
        Outcome::PositionPolarization { p, .. } => format!("position&pol{}", p.symbol()),
    }
}

/// Outcome probabilities (discrete schemes) or densities per channel on an
/// `x` grid (position-resolving schemes) at every grid point.
pub fn sweep(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let points = grid_points(cfg)?;
    let blocks = evaluate(&points, |p| {
        let model = SchemeModel::new(p.scheme, p.beam).map_err(|e| CliError::at(p.describe(), e))?;
        let lead = || -> Vec<Cell> {
            vec![
                p.run.name.as_str().into(),
                p.scheme.name().into(),
                p.beam.xi().into(),
                p.scheme.z().into(),
                p.theta.into(),
            ]
        };
        let mut rows = Vec::new();
        match model.outcome_space(p.theta) {
            OutcomeSpace::Discrete(outcomes) => {
                for o in &outcomes {
                    let mut row = lead();
                    row.extend([
                        outcome_label(o).into(),
                        Cell::Empty,
                        "probability".into(),
                        model.probability(p.theta, o).into(),
                    ]);
                    rows.push(row);
                }
            }
            OutcomeSpace::Continuous { channels, .. } => {
                let z = p.scheme.z();
                let xs = p.run.x.clone().unwrap_or_else(|| {
                    let half = DEFAULT_X_WIDTHS * p.beam.width(z) + 2.0 * p.theta.abs() * z;
                    linspace(p.beam.xi() - half, p.beam.xi() + half, DEFAULT_X_POINTS)
                });
                for c in &channels {
                    for &x in &xs {
                        let o = c.at(x);
                        let mut row = lead();
                        row.extend([
                            outcome_label(&o).into(),
                            x.into(),
                            "density_per_m".into(),
                            model.probability(p.theta, &o).into(),
                        ]);
                        rows.push(row);
                    }
                }
            }
        }
        Ok(rows)
    })?;
    let mut table = Table::new("sweep", HEADER);
    blocks.into_iter().flatten().for_each(|r| table.push(r));
    Ok(CommandOutput {
        tables: vec![table],
        ..Default::default()
    })
}
