use rayon::prelude::*;
use tiltsense::quad::{integrate, QuadOptions};
use tiltsense::{fisher_conditioned_small_angle, fisher_total_decomposition, BeamParams};

use super::{linspace, mm_label, CommandOutput};
use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::output::Table;
use crate::svg::{Curve, Figure, Panel};

/// Beam offsets shown in both figures.
pub const FIGURE_XI: [f64; 2] = [0.0, 1e-3];
/// Detection positions of the distance sweep.
pub const FIGURE3_X: [f64; 3] = [0.0, 1e-3, 1.5e-3];
const FIGURE3_X_SPAN: f64 = 3e-3;
const FAR_PLANE: f64 = 5.0;
const Z_SPAN: f64 = 10.0;
const FIGURE4_WIDTHS: f64 = 4.0;
const INTEGRAL_WIDTHS: f64 = 14.0;

pub const FIGURE3A_HEADER: &[&str] = &["xi_m", "z_m", "x_m", "fbar_over_k2_m2"];
pub const FIGURE3B_HEADER: &[&str] = &["xi_m", "x_m", "z_m", "z_over_zr", "fbar_over_k2_m2"];
pub const FIGURE4_HEADER: &[&str] = &["xi_m", "z_m", "x_m", "probability_per_m", "weighted_fbar_over_k2_per_m"];
pub const FIGURE4_INTEGRALS_HEADER: &[&str] = &[
    "xi_m",
    "z_m",
    "probability_integral",
    "weighted_integral_over_k2_m2",
    "expected_over_k2_m2",
    "relative_error",
    "theta_rad",
    "avg_conditioned_over_k2_m2",
    "position_part_over_k2_m2",
    "total_over_k2_m2",
    "position_fraction",
];

fn fbar_over_k2(beam: &BeamParams, z: f64, x: f64) -> f64 {
    fisher_conditioned_small_angle(beam, z, x) / (beam.k() * beam.k())
}

fn with_xi(beam: &BeamParams, xi: f64) -> BeamParams {
    beam.with_xi(xi).expect("figure offsets are finite")
}

/// Post-selected polarization information per photon, `F̄/k²`, across the
/// detector at `z = 5 z_R` and along the axis at three detection positions.
pub fn figure3(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let zr = cfg.beam.rayleigh_range();
    let n = cfg.figure.points;
    let far = FAR_PLANE * zr;

    let mut a = Table::new("figure3a", FIGURE3A_HEADER);
    let mut panel_a = Panel {
        title: format!("(a) z = {FAR_PLANE} z_R"),
        x_label: "x (mm)".into(),
        y_label: "F̄/k² (mm²)".into(),
        curves: Vec::new(),
    };
    let xs = linspace(-FIGURE3_X_SPAN, FIGURE3_X_SPAN, n);
    for xi in FIGURE_XI {
        let beam = with_xi(&cfg.beam, xi);
        let ys: Vec<f64> = xs.iter().map(|&x| fbar_over_k2(&beam, far, x)).collect();
        for (&x, &y) in xs.iter().zip(&ys) {
            a.push(vec![xi.into(), far.into(), x.into(), y.into()]);
        }
        panel_a.curves.push(Curve {
            label: format!("ξ = {}", mm_label(xi)),
            points: xs.iter().zip(&ys).map(|(x, y)| (x * 1e3, y * 1e6)).collect(),
        });
    }

    let mut b = Table::new("figure3b", FIGURE3B_HEADER);
    let xi = FIGURE_XI[1];
    let beam = with_xi(&cfg.beam, xi);
    let mut panel_b = Panel {
        title: format!("(b) ξ = {}", mm_label(xi)),
        x_label: "z / z_R".into(),
        y_label: "F̄/k² (mm²)".into(),
        curves: Vec::new(),
    };
    let zs = linspace(0.0, Z_SPAN * zr, n);
    for x in FIGURE3_X {
        let ys: Vec<f64> = zs.iter().map(|&z| fbar_over_k2(&beam, z, x)).collect();
        for (&z, &y) in zs.iter().zip(&ys) {
            b.push(vec![xi.into(), x.into(), z.into(), (z / zr).into(), y.into()]);
        }
        panel_b.curves.push(Curve {
            label: format!("x = {}", mm_label(x)),
            points: zs.iter().zip(&ys).map(|(z, y)| (z / zr, y * 1e6)).collect(),
        });
    }

    let figure = Figure {
        title: "Post-selected polarization Fisher information per photon".into(),
        columns: 2,
        panels: vec![panel_a, panel_b],
    };
    Ok(CommandOutput {
        tables: vec![a, b],
        figures: vec![("figure3".into(), figure)],
        failure: None,
    })
}

/// Detection probability `P(x)` and the information it carries, `P F̄/k²`,
/// in the object plane and at `z = 5 z_R`, with the integrals over `x`.
pub fn figure4(cfg: &ScenarioConfig) -> Result<CommandOutput> {
    let zr = cfg.beam.rayleigh_range();
    let n = cfg.figure.points;
    let theta = cfg.figure.theta;
    let planes = [0.0, FAR_PLANE * zr];

    let mut curves = Table::new("figure4", FIGURE4_HEADER);
    let mut integrals = Table::new("figure4_integrals", FIGURE4_INTEGRALS_HEADER);
    let mut weighted_panels = Vec::new();
    let mut probability_panels = Vec::new();

    for xi in FIGURE_XI {
        let beam = with_xi(&cfg.beam, xi);
        let mut weighted = Panel {
            title: format!("P F̄/k², ξ = {}", mm_label(xi)),
            x_label: "x (mm)".into(),
            y_label: "P F̄/k² (mm)".into(),
            curves: Vec::new(),
        };
        let mut probability = Panel {
            title: format!("P, ξ = {}", mm_label(xi)),
            x_label: "x (mm)".into(),
            y_label: "P (1/mm)".into(),
            curves: Vec::new(),
        };
        let rows = planes
            .par_iter()
            .map(|&z| integral_row(&beam, z, theta))
            .collect::<Result<Vec<_>>>()?;
        for (&z, row) in planes.iter().zip(rows) {
            integrals.push(row);
            let half = FIGURE4_WIDTHS * beam.width(z);
            let xs = linspace(xi - half, xi + half, n);
            let p: Vec<f64> = xs.iter().map(|&x| beam.intensity_profile(0.0, z, x)).collect();
            let pf: Vec<f64> = xs
                .iter()
                .zip(&p)
                .map(|(&x, &p)| p * fbar_over_k2(&beam, z, x))
                .collect();
            for i in 0..xs.len() {
                curves.push(vec![xi.into(), z.into(), xs[i].into(), p[i].into(), pf[i].into()]);
            }
            let label = format!("z = {} z_R", z / zr);
            weighted.curves.push(Curve {
                label: label.clone(),
                points: xs.iter().zip(&pf).map(|(x, y)| (x * 1e3, y * 1e3)).collect(),
            });
            probability.curves.push(Curve {
                label,
                points: xs.iter().zip(&p).map(|(x, y)| (x * 1e3, y * 1e-3)).collect(),
            });
        }
        weighted_panels.push(weighted);
        probability_panels.push(probability);
    }

    let figure = Figure {
        title: "Detection probability and post-selected information".into(),
        columns: 2,
        panels: weighted_panels.into_iter().chain(probability_panels).collect(),
    };
    Ok(CommandOutput {
        tables: vec![curves, integrals],
        figures: vec![("figure4".into(), figure)],
        failure: None,
    })
}

fn integral_row(beam: &BeamParams, z: f64, theta: f64) -> Result<Vec<crate::output::Cell>> {
    let context = || format!("figure 4 integrals (xi = {:e} m, z = {z:e} m)", beam.xi());
    let half = INTEGRAL_WIDTHS * beam.width(z);
    let (lo, hi) = (beam.xi() - half, beam.xi() + half);
    let opts = QuadOptions::default();
    let prob = integrate(|x| beam.intensity_profile(0.0, z, x), lo, hi, &opts)
        .map_err(|e| CliError::at(context(), e))?
        .value;
    let weighted = integrate(
        |x| beam.intensity_profile(0.0, z, x) * fbar_over_k2(beam, z, x),
        lo,
        hi,
        &opts,
    )
    .map_err(|e| CliError::at(context(), e))?
    .value;
    let expected = 16.0 * (beam.w0() * beam.w0() / 4.0 + beam.xi() * beam.xi());
    let dec = fisher_total_decomposition(beam, z, theta).map_err(|e| CliError::at(context(), e))?;
    let k2 = beam.k() * beam.k();
    Ok(vec![
        beam.xi().into(),
        z.into(),
        prob.into(),
        weighted.into(),
        expected.into(),
        ((weighted - expected) / expected).into(),
        theta.into(),
        (dec.avg_conditioned / k2).into(),
        (dec.position_part / k2).into(),
        (dec.total / k2).into(),
        (dec.position_part / dec.total).into(),
    ])
}
