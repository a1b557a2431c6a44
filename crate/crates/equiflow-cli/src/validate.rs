//! `validate`: built-in sanity suite with one measured/expected row per
//! check. Overrides hit the internal check configs, so a deliberate fault
//! (e.g. `--override flow.cfl=5.0`) makes the circle check fail.

use crate::{overrides, EXIT_VALIDATION};
use anyhow::Result;
use equiflow::observables::enclosed_area;
use equiflow::{
    estimate_singular_time, evolve, full_line, gaussian_density, whitney, FlowParams, FlowState,
    PlanarPoint,
};
use serde_json::{json, Value};
use std::f64::consts::PI;

struct CheckRow {
    name: &'static str,
    measured: String,
    expected: String,
    tolerance: String,
    pass: bool,
}

const CHECK_NAMES: [&str; 4] = [
    "circle_extinction",
    "symmetry_exactness",
    "density_calibration",
    "area_rate_bracket",
];

pub fn run(list: bool, ov: &[String]) -> Result<u8> {
    if list {
        for name in CHECK_NAMES {
            println!("{name}");
        }
        return Ok(0);
    }
    let mut doc = json!({ "flow": {} });
    overrides::apply(&mut doc, ov)?;
    let flow_value = doc.get("flow").cloned().unwrap_or(Value::Null);

    let rows = vec![
        circle_extinction(&flow_value),
        symmetry_exactness(&flow_value),
        density_calibration(),
        area_rate_bracket(&flow_value),
    ];

    let mut all_pass = true;
    println!(
        "{:<22} {:<28} {:<26} {:<12} status",
        "check", "measured", "expected", "tolerance"
    );
    for r in &rows {
        all_pass &= r.pass;
        println!(
            "{:<22} {:<28} {:<26} {:<12} {}",
            r.name,
            r.measured,
            r.expected,
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(if all_pass { 0 } else { EXIT_VALIDATION })
}

fn flow_params(flow_value: &Value) -> FlowParams {
    serde_json::from_value(flow_value.clone()).unwrap_or_default()
}

fn fail_row(name: &'static str, detail: String, expected: &str, tol: &str) -> CheckRow {
    CheckRow {
        name,
        measured: detail,
        expected: expected.to_string(),
        tolerance: tol.to_string(),
        pass: false,
    }
}

/// Shrinking unit circle (n = 2): extinction at t = 1/4 and radii matching
/// sqrt(1 - 4t).
fn circle_extinction(flow_value: &Value) -> CheckRow {
    let name = "circle_extinction";
    let expected = "t_est = 0.25, sup dr <= 1e-3";
    let mut params = flow_params(flow_value);
    params.stop.min_area_fraction = 1e-3;
    let curve = match equiflow::circle(1.0, 256) {
        Ok(c) => c,
        Err(e) => return fail_row(name, format!("generator: {e}"), expected, "1%"),
    };
    let traj = match evolve(FlowState::new(curve), &params, 20) {
        Ok(t) => t,
        Err(e) => return fail_row(name, format!("evolve: {e}"), expected, "1%"),
    };
    let times = traj.observables.times();
    let areas = traj.observables.areas();
    let est = match estimate_singular_time(&times, &areas) {
        Ok(e) => e,
        Err(e) => return fail_row(name, format!("estimate: {e}"), expected, "1%"),
    };
    let mut sup_dr = 0.0f64;
    for s in &traj.snapshots {
        if s.time > 0.24 {
            continue;
        }
        let r_exact = (1.0 - 4.0 * s.time).sqrt();
        for p in s.curve.nodes() {
            sup_dr = sup_dr.max((p.norm() - r_exact).abs());
        }
    }
    let t_err = (est.t_est - 0.25).abs();
    CheckRow {
        name,
        measured: format!("t_est={:.6}, sup dr={:.2e}", est.t_est, sup_dr),
        expected: expected.to_string(),
        tolerance: "1% / 1e-3".to_string(),
        pass: t_err <= 0.25 * 0.01 && sup_dr <= 1e-3,
    }
}

/// Short figure-eight run: the antipodal identities hold bitwise after
/// every step.
fn symmetry_exactness(flow_value: &Value) -> CheckRow {
    let name = "symmetry_exactness";
    let expected = "max |g_i + g_{N-i}| = 0 (bitwise)";
    let mut params = flow_params(flow_value);
    params.stop.t_max = f64::INFINITY;
    params.stop.min_area_fraction = 0.7;
    let curve = match whitney(128) {
        Ok(c) => c,
        Err(e) => return fail_row(name, format!("generator: {e}"), expected, "exact"),
    };
    let traj = match evolve(FlowState::new(curve), &params, 5) {
        Ok(t) => t,
        Err(e) => return fail_row(name, format!("evolve: {e}"), expected, "exact"),
    };
    let mut worst = 0.0f64;
    for s in &traj.snapshots {
        let n = s.curve.n_nodes();
        for i in 1..n / 2 {
            worst = worst.max((s.curve.node(i) + s.curve.node(n - i)).norm());
        }
        worst = worst.max(s.curve.node(0).norm());
        worst = worst.max(s.curve.node(n / 2).norm());
    }
    CheckRow {
        name,
        measured: format!("max asymmetry = {worst:e}"),
        expected: expected.to_string(),
        tolerance: "exact".to_string(),
        pass: worst == 0.0,
    }
}

/// Gaussian density of a full line through the origin scores 1 for every
/// dimension and kernel width.
fn density_calibration() -> CheckRow {
    let name = "density_calibration";
    let expected = "density(line) = 1";
    let mut worst = 0.0f64;
    for n in [2u32, 3, 4] {
        for tau in [0.05f64, 0.2, 0.8] {
            let extent = 12.0 * tau.sqrt();
            let line = match full_line(0.37, extent, 2048) {
                Ok(c) => c,
                Err(e) => return fail_row(name, format!("generator: {e}"), expected, "1e-3"),
            };
            match gaussian_density(&line, n, PlanarPoint::ZERO, tau) {
                Ok(d) => worst = worst.max((d - 1.0).abs()),
                Err(e) => return fail_row(name, format!("density: {e}"), expected, "1e-3"),
            }
        }
    }
    CheckRow {
        name,
        measured: format!("max |density - 1| = {worst:.2e}"),
        expected: expected.to_string(),
        tolerance: "1e-3".to_string(),
        pass: worst <= 1e-3,
    }
}

/// Short Whitney run: recorded area slopes stay inside the variation
/// bracket [-3 pi, -pi] with 0.15 pi slack.
fn area_rate_bracket(flow_value: &Value) -> CheckRow {
    let name = "area_rate_bracket";
    let expected = "slopes in [-3.15 pi, -0.85 pi]";
    let mut params = flow_params(flow_value);
    params.stop.t_max = f64::INFINITY;
    params.stop.min_area_fraction = 0.4;
    let curve = match whitney(256) {
        Ok(c) => c,
        Err(e) => return fail_row(name, format!("generator: {e}"), expected, "0.15 pi"),
    };
    let traj = match evolve(FlowState::new(curve), &params, 25) {
        Ok(t) => t,
        Err(e) => return fail_row(name, format!("evolve: {e}"), expected, "0.15 pi"),
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let snaps = &traj.snapshots;
    for w in snaps.windows(2) {
        let a0 = enclosed_area(&w[0].curve).unwrap_or(f64::NAN);
        let a1 = enclosed_area(&w[1].curve).unwrap_or(f64::NAN);
        let slope = (a1 - a0) / (w[1].time - w[0].time);
        lo = lo.min(slope);
        hi = hi.max(slope);
    }
    let pass = snaps.len() >= 3 && lo >= (-3.0 - 0.15) * PI && hi <= (-1.0 + 0.15) * PI;
    CheckRow {
        name,
        measured: format!("slopes/pi in [{:.3}, {:.3}]", lo / PI, hi / PI),
        expected: expected.to_string(),
        tolerance: "0.15 pi".to_string(),
        pass,
    }
}
