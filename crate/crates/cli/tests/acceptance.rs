//! Acceptance checks. Each criterion prints one line with its verdict and
//! the numbers behind it; the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::panic;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use tempfile::TempDir;
use tiltsense::quad::{integrate, QuadOptions};
use tiltsense::*;
use tiltsense_cli::commands;
use tiltsense_cli::config::ScenarioConfig;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

const WAVELENGTH: f64 = 633e-9;
const W0: f64 = 1e-3;
/// Fixed before any saturation run was made at these operating points.
const SEED: u64 = 0x5a67_1ac0;

fn beam(xi: f64) -> BeamParams {
    BeamParams::from_wavelength(WAVELENGTH, W0, xi).unwrap()
}

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Points of the Halton sequence in bases 2, 3 and 5, mapped into the unit cube.
fn halton(i: usize) -> [f64; 3] {
    let radical = |mut n: usize, base: usize| {
        let (mut f, mut r) = (1.0, 0.0);
        while n > 0 {
            f /= base as f64;
            r += f * (n % base) as f64;
            n /= base;
        }
        r
    };
    [radical(i, 2), radical(i, 3), radical(i, 5)]
}

fn quadrant_to_qfi() -> Verdict {
    let b = beam(0.0);
    let zr = b.rayleigh_range();
    let ratios: Vec<f64> = [1.0, 10.0, 100.0]
        .iter()
        .map(|m| fisher_quadrant(&b, 0.0, m * zr) / qfi_beam_deflection(&b))
        .collect();
    let gap = (ratios[2] - 2.0 / PI).abs();
    ensure(
        gap < 1e-4 && ratios.windows(2).all(|w| w[1] > w[0]),
        format!(
            "ratio at 1, 10, 100 z_R = {:.6}, {:.6}, {:.8}; |ratio - 2/pi| = {gap:.2e} (limit 1e-4)",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn position_saturation() -> Verdict {
    let b = beam(0.5e-3);
    let zr = b.rayleigh_range();
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let z = zr * (i as f64 / 2.0);
        let ratio = fisher_position(&b, z) / qfi_beam_deflection(&b);
        worst = worst.max((ratio - z * z / (z * z + zr * zr)).abs());
    }
    let far = fisher_position(&b, 100.0 * zr) / qfi_beam_deflection(&b);
    ensure(
        worst < 1e-12 && far > 0.9999,
        format!("max |ratio - z^2/(z^2+z_R^2)| = {worst:.2e} (limit 1e-12); ratio at 100 z_R = {far:.6}"),
    )
}

fn polarization_saturation() -> Verdict {
    let pol = PolarizationState::diagonal();
    let mut worst: f64 = 0.0;
    for xi in [0.0, 0.5e-3, 1e-3, 2e-3] {
        let b = beam(xi);
        let k = b.k();
        let expected = 16.0 * k * k * (W0 * W0 / 4.0 + xi * xi);
        for theta in [0.0, 1e-13, 1e-11] {
            let f = fisher_sagnac_polarization(&b, &pol, theta);
            worst = worst.max((f / expected - 1.0).abs());
        }
    }
    ensure(
        worst < 1e-8,
        format!("max relative deviation from 16k^2(w0^2/4 + xi^2) = {worst:.2e} (limit 1e-8)"),
    )
}

fn marginalization() -> Verdict {
    let pol = PolarizationState::diagonal();
    let opts = QuadOptions::default();
    let (mut worst_norm, mut worst_marg): (f64, f64) = (0.0, 0.0);
    for theta in [0.0, 0.5e-6, 1e-6, 2e-6, 5e-6] {
        for xi in [0.0, 0.25e-3, 0.5e-3, 1e-3, 2e-3] {
            let b = beam(xi);
            let zr = b.rayleigh_range();
            let (pp, pm) = sagnac_polarization_probabilities(&b, &pol, theta);
            for m in [0.1, 0.5, 1.0, 5.0, 10.0] {
                let z = m * zr;
                let half = 12.0 * b.width(z) + 2.0 * theta * z;
                let (lo, hi) = (xi - half, xi + half);
                let ip = integrate(|x| sagnac_joint_density(&b, &pol, theta, z, x).0, lo, hi, &opts)
                    .unwrap()
                    .value;
                let im = integrate(|x| sagnac_joint_density(&b, &pol, theta, z, x).1, lo, hi, &opts)
                    .unwrap()
                    .value;
                worst_norm = worst_norm.max((ip + im - 1.0).abs());
                worst_marg = worst_marg.max((ip - pp).abs()).max((im - pm).abs());
            }
        }
    }
    ensure(
        worst_norm < 1e-9 && worst_marg < 1e-9,
        format!("125 points: max |norm - 1| = {worst_norm:.2e}, max |marginal - P| = {worst_marg:.2e} (limit 1e-9)"),
    )
}

fn decomposition() -> Verdict {
    let theta = 1e-9;
    let mut worst_total: f64 = 0.0;
    let mut worst_fraction: f64 = 0.0;
    let mut worst_integral: f64 = 0.0;
    for xi in [0.0, 0.5e-3, 1e-3] {
        let b = beam(xi);
        let k = b.k();
        let zr = b.rayleigh_range();
        let expected = 16.0 * k * k * (W0 * W0 / 4.0 + xi * xi);
        for m in [0.5, 1.0, 5.0] {
            let z = m * zr;
            let d = fisher_total_decomposition(&b, z, theta).unwrap();
            worst_total = worst_total.max((d.total / expected - 1.0).abs());
            worst_fraction = worst_fraction.max(d.position_part / d.total);
            let half = 14.0 * b.width(z);
            let weighted = integrate(
                |x| b.intensity_profile(0.0, z, x) * fisher_conditioned_small_angle(&b, z, x),
                xi - half,
                xi + half,
                &QuadOptions::default(),
            )
            .unwrap()
            .value;
            worst_integral = worst_integral.max((weighted / expected - 1.0).abs());
        }
    }
    ensure(
        worst_total < 1e-5 && worst_integral < 1e-5 && worst_fraction < 1e-6,
        format!(
            "theta = 1e-9: max |total/expected - 1| = {worst_total:.2e}, max |int P Fbar / expected - 1| = {worst_integral:.2e} (limit 1e-5); max position share = {worst_fraction:.2e} (limit 1e-6)"
        ),
    )
}

fn critical_point() -> Verdict {
    let xi = 1e-3;
    let b = beam(xi);
    let k = b.k();
    let zr = b.rayleigh_range();
    let zs: Vec<f64> = (0..=1000).map(|i| 10.0 * zr * i as f64 / 1000.0).collect();
    let at_xi: Vec<f64> = zs.iter().map(|&z| fisher_conditioned_small_angle(&b, z, xi)).collect();
    let (lo, hi) = at_xi
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, c), &v| (a.min(v), c.max(v)));
    let spread = (hi - lo) / lo;
    let at_zero: Vec<f64> = zs.iter().map(|&z| fisher_conditioned_small_angle(&b, z, 0.0)).collect();
    let monotone = at_zero.windows(2).all(|w| w[1] >= w[0]);
    let far = fisher_conditioned_small_angle(&b, 100.0 * zr, 0.0) / (16.0 * k * k * xi * xi);
    ensure(
        spread < 1e-9 && monotone && (far - 1.0).abs() < 1e-4,
        format!(
            "Fbar(x = xi) spread over [0, 10 z_R] = {spread:.2e} (limit 1e-9); Fbar(x = 0) monotone = {monotone}; Fbar(0)/(16k^2 xi^2) at 100 z_R = {far:.6}"
        ),
    )
}

/// The polarization-only Fisher information with the cos² term weighted by
/// `weight`, as an independent transcription of the printed expression.
fn printed_polarization_fisher(b: &BeamParams, pol: &PolarizationState, theta: f64, weight: f64) -> f64 {
    let k = b.k();
    let bb = 2.0 * k * k * b.w0() * b.w0();
    let psi = 4.0 * k * b.xi() * theta - pol.phase();
    let num = bb * theta * psi.cos() + 2.0 * k * b.xi() * psi.sin();
    16.0 * pol.d() * pol.d() * num * num / ((2.0 * bb * theta * theta).exp() - weight * psi.cos().powi(2))
}

fn oracle_equivalence() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut check = |analytic: f64, model: &dyn ProbabilityModel, theta: f64| {
        let o = numeric_fisher_oracle(model, theta, default_step(theta)).unwrap();
        worst = worst.max((o.fisher - analytic).abs() / analytic);
        checked += 1;
        o.fisher
    };
    let thetas = [0.5e-6, 1e-6, 2e-6, 5e-6];
    for xi in [0.0, 1e-3] {
        let b = beam(xi);
        let zr = b.rayleigh_range();
        for m in [0.5, 1.0, 5.0, 10.0] {
            let z = m * zr;
            let position = SchemeModel::new(Scheme::DirectPosition { z }, b).unwrap();
            let quadrant = SchemeModel::new(
                Scheme::Quadrant {
                    z,
                    split: QuadrantSplit::BeamAxis,
                },
                b,
            )
            .unwrap();
            for theta in thetas {
                check(fisher_position(&b, z), &position, theta);
                check(fisher_quadrant(&b, theta, z), &quadrant, theta);
                for x in [-1e-3, 0.5e-3, 1.5e-3] {
                    let cond = ConditionedPolarizationModel { beam: b, z, x };
                    check(fisher_conditioned(&b, z, x, theta), &cond, theta);
                }
            }
        }
    }

    // The printed denominator weights cos² by 4d; the oracle decides between
    // that and 4d² on states where the two differ.
    let mut gap_4d2: f64 = 0.0;
    let mut gap_4d: f64 = 0.0;
    for &(vt, phi) in &[(PI / 2.0, 0.0), (1.1, 0.4), (2.2, -1.0)] {
        let pol = PolarizationState::from_bloch(vt, phi).unwrap();
        for xi in [0.0, 1e-3] {
            let b = beam(xi);
            let model = SchemeModel::new(Scheme::SagnacPolarization { z: 0.0, pol }, b).unwrap();
            for theta in thetas {
                let numeric = check(fisher_sagnac_polarization(&b, &pol, theta), &model, theta);
                let d = pol.d();
                let literal_sq = printed_polarization_fisher(&b, &pol, theta, 4.0 * d * d);
                let literal = printed_polarization_fisher(&b, &pol, theta, 4.0 * d);
                gap_4d2 = gap_4d2.max((literal_sq - numeric).abs() / numeric);
                gap_4d = gap_4d.max((literal - numeric).abs() / numeric);
            }
        }
    }
    ensure(
        worst < 1e-4 && gap_4d2 < 1e-4 && gap_4d > 1e-2,
        format!(
            "{checked} points, max relative error = {worst:.2e} (limit 1e-4); printed form with 4d^2: {gap_4d2:.2e}, with 4d: {gap_4d:.2e}, so 4d^2 is the consistent denominator"
        ),
    )
}

fn qfi_ordering() -> Verdict {
    let mut violations = 0;
    for i in 1..=2000 {
        let [u, v, w] = halton(i);
        let w0 = 0.1e-3 + 2.0 * u * 1e-3;
        let xi = -3e-3 + 6e-3 * v;
        let sz = -1.0 + 2.0 * w;
        let b = BeamParams::from_wavelength(WAVELENGTH, w0, xi).unwrap();
        let pol = PolarizationState::from_bloch(sz.acos(), 0.3).unwrap();
        if qfi_sagnac(&b, &pol) < qfi_mach_zehnder(&b, &pol) * (1.0 - 1e-12) {
            violations += 1;
        }
    }
    let pol = PolarizationState::diagonal();
    let mut crossover_ok = true;
    for w0 in [0.2e-3, 1e-3, 3e-3] {
        let boundary = w0 / 2f64.sqrt();
        for f in [0.5, 0.9, 0.999, 1.001, 1.1, 2.0] {
            let b = BeamParams::from_wavelength(WAVELENGTH, w0, f * boundary).unwrap();
            let mz_wins = qfi_mach_zehnder(&b, &pol) > qfi_beam_deflection(&b);
            crossover_ok &= mz_wins == (f > 1.0);
        }
    }
    ensure(
        violations == 0 && crossover_ok,
        format!("2000 Halton points, sagnac < MZ on {violations}; MZ > deflection exactly when xi^2 > w0^2/2 on both sides: {crossover_ok}"),
    )
}

fn monte_carlo() -> Verdict {
    let text = format!(
        r#"
[beam]
wavelength = "633nm"
w0 = "1mm"
xi = "1mm"

[grid]
theta = "1urad"

[[run]]
name = "position"
scheme = "position"
z = "10z_R"

[[run]]
name = "quadrant"
scheme = "quadrant"
z = "10z_R"

[[run]]
name = "sagnac"
scheme = "sagnac-polarization"
z = "0m"

[montecarlo]
nu = 10000
trials = 200
seed = {SEED}
"#
    );
    let cfg = ScenarioConfig::parse(&text).unwrap();
    let out = commands::montecarlo(&cfg, None).unwrap();
    let t = out.table("montecarlo").unwrap();
    let (run, ratio, excluded, check) = (
        t.column("run").unwrap(),
        t.column("ratio").unwrap(),
        t.column("excluded_trials").unwrap(),
        t.column("check").unwrap(),
    );
    let mut parts = Vec::new();
    let mut ok = out.failure.is_none();
    for row in &t.rows {
        let cell = |i: usize| match &row[i] {
            tiltsense_cli::output::Cell::Num(v) => format!("{v:.4}"),
            tiltsense_cli::output::Cell::Int(v) => v.to_string(),
            tiltsense_cli::output::Cell::Text(s) => s.clone(),
            tiltsense_cli::output::Cell::Empty => String::new(),
        };
        let r: f64 = cell(ratio).parse().unwrap();
        ok &= (0.85..=1.25).contains(&r) && cell(check) == "pass";
        parts.push(format!("{} {} ({} excluded)", cell(run), cell(ratio), cell(excluded)));
    }
    ensure(
        ok && t.rows.len() == 3,
        format!(
            "variance / CR variance, 200 trials, nu = 1e4, seed {SEED}: {} (range [0.85, 1.25])",
            parts.join(", ")
        ),
    )
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|s| s.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

/// `y` coordinates of the polyline labelled `label` in an SVG document.
fn polyline_ys(svg: &str, label: &str) -> Vec<Vec<f64>> {
    let tag = format!(r#"data-label="{label}""#);
    svg.lines()
        .filter(|l| l.starts_with("<polyline") && l.contains(&tag))
        .map(|l| {
            let pts = l.split("points=\"").nth(1).unwrap().trim_end_matches("\"/>");
            pts.split(' ')
                .map(|p| p.split(',').nth(1).unwrap().parse().unwrap())
                .collect()
        })
        .collect()
}

fn figures() -> Verdict {
    let tmp = TempDir::new().unwrap();
    for cmd in ["figure3", "figure4"] {
        let o = Command::new(env!("CARGO_BIN_EXE_tiltsense"))
            .args([cmd, "--out", tmp.path().to_str().unwrap()])
            .output()
            .unwrap();
        if !o.status.success() {
            return Err(format!("`{cmd}` failed: {}", String::from_utf8_lossy(&o.stderr)));
        }
    }
    let b0 = BeamParams::from_rayleigh_range(WAVELENGTH, 1.0, 0.0).unwrap();
    let k2 = b0.k() * b0.k();
    let mut problems = Vec::new();

    // Panel (b): pointwise values, the flat x = xi curve and curve ordering.
    let (h, rows) = read_table(&tmp.path().join("figure3b.csv"));
    let [xi_c, x_c, z_c, f_c] =
        ["xi_m", "x_m", "z_m", "fbar_over_k2_m2"].map(|n| h.iter().position(|c| c == n).unwrap());
    let mut pointwise: f64 = 0.0;
    let curve = |x: f64| -> Vec<f64> { rows.iter().filter(|r| r[x_c] == x).map(|r| r[f_c]).collect() };
    for r in &rows {
        let b = b0.with_xi(r[xi_c]).unwrap();
        let direct = fisher_conditioned_small_angle(&b, r[z_c], r[x_c]) / k2;
        pointwise = pointwise.max((r[f_c] - direct).abs() / direct.max(1e-300));
    }
    let (c0, c1, c15) = (curve(0.0), curve(1e-3), curve(1.5e-3));
    let spread = (c1.iter().cloned().fold(0.0, f64::max) - c1.iter().cloned().fold(f64::INFINITY, f64::min)) / c1[0];
    if spread >= 1e-9 {
        problems.push(format!("x = xi curve spread {spread:.2e}"));
    }
    if !c0.windows(2).all(|w| w[1] >= w[0]) {
        problems.push("x = 0 curve is not monotone".into());
    }
    if !(0..c0.len()).all(|i| c0[i] <= c1[i] && c1[i] <= c15[i]) {
        problems.push("panel (b) curves cross".into());
    }
    if pointwise > 1e-12 {
        problems.push(format!("figure3b differs from the closed form by {pointwise:.2e}"));
    }

    // Panel (a): the displaced beam carries more information everywhere and
    // the centred beam has none on axis.
    let (h, rows) = read_table(&tmp.path().join("figure3a.csv"));
    let [xi_c, x_c, f_c] = ["xi_m", "x_m", "fbar_over_k2_m2"].map(|n| h.iter().position(|c| c == n).unwrap());
    let a0: Vec<&Vec<f64>> = rows.iter().filter(|r| r[xi_c] == 0.0).collect();
    let a1: Vec<&Vec<f64>> = rows.iter().filter(|r| r[xi_c] == 1e-3).collect();
    if !a0.iter().zip(&a1).all(|(p, q)| p[f_c] <= q[f_c]) || a0.iter().any(|r| r[x_c] == 0.0 && r[f_c] != 0.0) {
        problems.push("panel (a) ordering or zero at x = 0 violated".into());
    }

    // Figure 4: integrals and the off-centre maxima of the centred beam at z = 0.
    let (h, rows) = read_table(&tmp.path().join("figure4_integrals.csv"));
    let integral_rows = rows.len();
    let col = |n: &str| h.iter().position(|c| c == n).unwrap();
    for r in &rows {
        if (r[col("probability_integral")] - 1.0).abs() > 1e-9
            || r[col("relative_error")].abs() > 1e-5
            || r[col("position_fraction")] > 1e-6
        {
            problems.push(format!("figure4 integrals row {r:?}"));
        }
    }
    let (h, rows) = read_table(&tmp.path().join("figure4.csv"));
    let [xi_c, z_c, x_c, w_c] =
        ["xi_m", "z_m", "x_m", "weighted_fbar_over_k2_per_m"].map(|n| h.iter().position(|c| c == n).unwrap());
    let near: Vec<&Vec<f64>> = rows.iter().filter(|r| r[xi_c] == 0.0 && r[z_c] == 0.0).collect();
    let (imax, _) = near
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, r)| if r[w_c] > acc.1 { (i, r[w_c]) } else { acc });
    let centre = near.len() / 2;
    let symmetric =
        (0..near.len()).all(|i| (near[i][w_c] - near[near.len() - 1 - i][w_c]).abs() <= 1e-12 * near[imax][w_c]);
    if near[centre][x_c] != 0.0 || near[centre][w_c] != 0.0 || near[imax][x_c].abs() < 0.25 * b0.w0() || !symmetric {
        problems.push("figure 4 centred near-field curve is not zero on axis with symmetric off-centre maxima".into());
    }

    // SVG: labelled axes, one polyline per curve, and a flat x = xi curve.
    let svg3 = std::fs::read_to_string(tmp.path().join("figure3.svg")).unwrap();
    let svg4 = std::fs::read_to_string(tmp.path().join("figure4.svg")).unwrap();
    let flat = polyline_ys(&svg3, "x = 1 mm");
    if svg3.matches("<polyline").count() != 5 || svg4.matches("<polyline").count() != 8 {
        problems.push("unexpected number of curves in the SVG output".into());
    }
    if !svg3.contains("z / z_R") || !svg3.contains("x (mm)") || !svg4.contains("P (1/mm)") {
        problems.push("missing axis labels".into());
    }
    if flat.len() != 1 || flat[0].iter().any(|y| (y - flat[0][0]).abs() > 0.01) {
        problems.push("x = xi polyline is not flat".into());
    }

    let detail = format!(
        "figure3b vs closed form {pointwise:.1e}, x = xi spread {spread:.1e}, {integral_rows} figure-4 integral rows, 5 + 8 SVG curves"
    );
    if problems.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("quadrant-to-QFI ratio", quadrant_to_qfi),
        ("position saturation", position_saturation),
        ("polarization saturation", polarization_saturation),
        ("marginalization consistency", marginalization),
        ("decomposition identity", decomposition),
        ("critical-point flatness", critical_point),
        ("oracle equivalence", oracle_equivalence),
        ("QFI ordering and MZ crossover", qfi_ordering),
        ("Monte Carlo Cramer-Rao saturation", monte_carlo),
        ("figure reproduction", figures),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS criterion {:>2} {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
