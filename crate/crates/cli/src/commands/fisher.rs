use tiltsense::fisher_report;

use super::{evaluate, grid_points, CommandOutput};
use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::Table;

pub const HEADER: &[&str] = &[
    "run",
    "scheme",
    "xi_m",
    "z_m",
    "theta_rad",
    "analytic_fisher",
    "oracle_fisher",
    "qfi",
    "ratio_to_qfi",
    "oracle_rel_error",
    "richardson_delta",
    "excluded_mass",
    "nu",
    "cr_bound_rad",
    "warnings",
];

/// Closed-form and numerically differentiated Fisher information, with the
/// quantum bound, at every grid point.
pub fn fisher(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let nu = cfg.montecarlo.map_or(1, |m| m.nu);
    let points = grid_points(cfg)?;
    let rows = evaluate(&points, |p| {
        let r = fisher_report(&p.scheme, &p.beam, p.theta, nu).map_err(|e| CliError::at(p.describe(), e))?;
        let warnings: Vec<String> = r.warnings.iter().map(|w| w.to_string()).collect();
        Ok(vec![
            p.run.name.as_str().into(),
            r.scheme.clone().into(),
            p.beam.xi().into(),
            r.z.into(),
            r.theta.into(),
            r.analytic.into(),
            r.numeric.into(),
            r.qfi.into(),
            r.ratio.into(),
            r.oracle_relative_error().into(),
            r.richardson_delta.into(),
            r.excluded_mass.into(),
            r.nu.into(),
            r.cr_bound.into(),
            warnings.join("; ").into(),
        ])
    })?;
    let mut table = Table::new("fisher", HEADER);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(CommandOutput {
        tables: vec![table],
        ..Default::default()
    })
}
