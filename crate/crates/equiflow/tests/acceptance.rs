//! Acceptance suite: one test per quantitative claim the laboratory is
//! expected to reproduce, each printing a PASS/FAIL line with the measured
//! values (run with `--nocapture` to see them on success).

use equiflow::*;
use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

const WHITNEY_N: usize = 512;

struct Run {
    trajectory: Trajectory,
    estimate: SingularTimeEstimate,
    initial_area: f64,
    initial_diameter: f64,
}

fn evolve_run(curve: DiscreteCurve, params: &FlowParams, stride: u32) -> Run {
    let initial_area = enclosed_area(&curve).unwrap();
    let initial_diameter = curve.diameter();
    let trajectory = evolve(FlowState::new(curve), params, stride).unwrap();
    let times = trajectory.observables.times();
    let areas = trajectory.observables.areas();
    let estimate = estimate_singular_time(&times, &areas).unwrap();
    Run {
        trajectory,
        estimate,
        initial_area,
        initial_diameter,
    }
}

/// Main collapse run shared by criteria 2, 3, 4, 6 and 7.
fn whitney_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut params = FlowParams::default();
        params.stop.min_area_fraction = 1e-4;
        params.stop.t_max = f64::INFINITY;
        evolve_run(whitney(WHITNEY_N).unwrap(), &params, 10)
    })
}

/// Deep thin-lobe collapse for the tangent-flow analysis (criterion 5): the
/// narrow cone makes the rescaled line pair numerically reachable.
fn thin_cone_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let alpha = 0.03 * PI;
        let lobe_area = 0.5 * (alpha / 2.0).tan();
        let mut params = FlowParams::default();
        params.stop.min_area_fraction = 3e-6;
        params.stop.t_max = f64::INFINITY;
        evolve_run(cone_eight(alpha, lobe_area, 512).unwrap(), &params, 25)
    })
}

/// Large-area cone-eight inside the wide barrier cone (criterion 10).
fn large_cone_run() -> &'static Run {
    static RUN: OnceLock<Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut params = FlowParams::default();
        params.stop.min_area_fraction = 2e-3;
        params.stop.t_max = f64::INFINITY;
        evolve_run(cone_eight(0.75 * PI, 12.0, 512).unwrap(), &params, 50)
    })
}

fn max_curvature(curve: &DiscreteCurve) -> f64 {
    compute_frames(curve)
        .unwrap()
        .iter()
        .map(|f| f.curvature.norm())
        .fold(0.0, f64::max)
}

#[test]
fn criterion_01_circle_oracle() {
    let started = Instant::now();
    let mut params = FlowParams::default();
    params.stop.min_area_fraction = 1e-3;

    let run_circle = |n_nodes: usize| -> (f64, f64) {
        let run = evolve_run(circle(1.0, n_nodes).unwrap(), &params, 20);
        let mut sup_dr = 0.0f64;
        for s in &run.trajectory.snapshots {
            if s.time > 0.24 {
                continue;
            }
            let r_exact = (1.0 - 4.0 * s.time).sqrt();
            for p in s.curve.nodes() {
                sup_dr = sup_dr.max((p.norm() - r_exact).abs());
            }
        }
        ((run.estimate.t_est - 0.25).abs(), sup_dr)
    };

    let (err_256, sup_dr) = run_circle(256);
    let elapsed = started.elapsed().as_secs_f64();
    let (err_512, _) = run_circle(512);
    let ratio = err_256 / err_512.max(f64::MIN_POSITIVE);

    let pass = err_256 <= 0.25 * 0.01 && sup_dr <= 1e-3 && elapsed <= 30.0 && ratio >= 3.5;
    println!(
        "[criterion 1] circle oracle: {} (t_err={err_256:.2e}, sup dr={sup_dr:.2e}, \
         wall={elapsed:.1}s, refinement ratio={ratio:.1})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(err_256 <= 0.25 * 0.01, "extinction time error {err_256:e}");
    assert!(sup_dr <= 1e-3, "sup radius error {sup_dr:e}");
    assert!(elapsed <= 30.0, "runtime {elapsed}s");
    // the scheme is spatially exact on circles, so the time integrator's
    // fourth-order-in-N error dominates and the ratio lands near 16; the
    // gate is that halving the resolution cuts the error at least 3.5x
    assert!(ratio >= 3.5, "refinement ratio {ratio}");
}

#[test]
fn criterion_02_whitney_collapse() {
    let run = whitney_run();
    let final_state = run.trajectory.snapshots.last().unwrap();
    let final_area = enclosed_area(&final_state.curve).unwrap();
    let max_r = final_state.curve.max_radius();

    let mut bracket_ok = true;
    let mut worst_margin = f64::INFINITY;
    for (t, a) in run
        .trajectory
        .observables
        .times()
        .iter()
        .zip(run.trajectory.observables.areas())
    {
        let lo = t + a / (3.0 * PI);
        let hi = t + a / PI;
        bracket_ok &= lo <= run.estimate.t_est && run.estimate.t_est <= hi;
        worst_margin = worst_margin
            .min(run.estimate.t_est - lo)
            .min(hi - run.estimate.t_est);
    }

    let pass = run.trajectory.termination == Termination::AreaCollapse
        && max_r <= 0.05 * run.initial_diameter
        && final_area <= 1e-3 * run.initial_area
        && bracket_ok;
    println!(
        "[criterion 2] whitney collapse: {} (termination={:?}, max|g|={max_r:.4}, \
         area ratio={:.1e}, bracket margin={worst_margin:.2e}, t_est={:.6})",
        if pass { "PASS" } else { "FAIL" },
        run.trajectory.termination,
        final_area / run.initial_area,
        run.estimate.t_est
    );
    assert_eq!(run.trajectory.termination, Termination::AreaCollapse);
    assert!(max_r <= 0.05 * run.initial_diameter, "final extent {max_r}");
    assert!(final_area <= 1e-3 * run.initial_area);
    assert!(bracket_ok, "singular-time bracket violated (margin {worst_margin:e})");
}

#[test]
fn criterion_03_area_rate_bracket() {
    let run = whitney_run();
    let rows = &run.trajectory.observables.rows;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for w in rows.windows(2) {
        let slope = (w[1].area - w[0].area) / (w[1].time - w[0].time);
        lo = lo.min(slope);
        hi = hi.max(slope);
    }
    let pass = lo >= (-3.0 - 0.15) * PI && hi <= (-1.0 + 0.15) * PI;
    println!(
        "[criterion 3] area-rate bracket: {} (slopes/pi in [{:.4}, {:.4}], \
         required [-3.15, -0.85])",
        if pass { "PASS" } else { "FAIL" },
        lo / PI,
        hi / PI
    );
    assert!(pass, "slopes/pi in [{}, {}]", lo / PI, hi / PI);
}

#[test]
fn criterion_04_huisken_monotonicity() {
    let run = whitney_run();
    let t_est = run.estimate.t_est;
    let mut gauss_prev: Option<f64> = None;
    let mut theta_prev: Option<f64> = None;
    let mut worst_gauss = f64::NEG_INFINITY;
    let mut worst_theta = f64::NEG_INFINITY;
    let mut measured = 0usize;
    for s in &run.trajectory.snapshots {
        let tau = t_est - s.time;
        let h = s.curve.mean_spacing();
        if tau < 4.0 * h * h {
            continue; // kernel width below quadrature resolution
        }
        let g = gaussian_density(&s.curve, 2, PlanarPoint::ZERO, tau).unwrap();
        let t2 = theta_squared_density(&s.curve, 2, tau).unwrap();
        if let Some(prev) = gauss_prev {
            worst_gauss = worst_gauss.max(g - prev);
        }
        if let Some(prev) = theta_prev {
            worst_theta = worst_theta.max(t2 - prev);
        }
        gauss_prev = Some(g);
        theta_prev = Some(t2);
        measured += 1;
    }
    let pass = worst_gauss <= 1e-3 && worst_theta <= 1e-3 && measured > 100;
    println!(
        "[criterion 4] density monotonicity: {} (max gaussian increase={worst_gauss:.2e}, \
         max theta^2 increase={worst_theta:.2e}, snapshots={measured}, final density={:.4})",
        if pass { "PASS" } else { "FAIL" },
        gauss_prev.unwrap()
    );
    assert!(measured > 100, "only {measured} usable snapshots");
    assert!(worst_gauss <= 1e-3, "gaussian density increased by {worst_gauss:e}");
    assert!(worst_theta <= 1e-3, "theta^2 density increased by {worst_theta:e}");
}

#[test]
fn criterion_05_multiplicity_two() {
    let run = thin_cone_run();
    let areas = run.trajectory.observables.areas();
    let a0 = run.initial_area;

    // final three rescalings of a geometric area schedule
    let mut picks = Vec::new();
    for target in [1e-3, 3e-5, 3e-6] {
        if let Some(i) = areas.iter().position(|a| a / a0 <= target) {
            picks.push(i);
        }
    }
    picks.dedup();
    assert_eq!(picks.len(), 3, "run too shallow for three rescalings");

    let mut entries = Vec::new();
    for &i in &picks {
        let lambda = 1.0 / areas[i].sqrt();
        let entry = analyze_rescaled(
            &run.trajectory.snapshots[i],
            run.estimate.t_est,
            lambda,
            2,
            0.2,
            1.0,
        )
        .unwrap();
        entries.push(entry);
    }

    let mut pass = true;
    for e in &entries {
        pass &= e.interline_angle_deg <= 5.0;
        pass &= (1.8..=2.2).contains(&e.multiplicity);
    }
    for w in entries.windows(2) {
        pass &= w[1].sup_k < w[0].sup_k * 1.001;
        pass &= w[1].sup_gamma_perp < w[0].sup_gamma_perp * 1.001;
    }
    println!(
        "[criterion 5] multiplicity two: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    for (e, &i) in entries.iter().zip(&picks) {
        println!(
            "    A/A0={:.1e} lambda={:.1}: interline={:.3} deg, residual={:.2e}, \
             sup|k|={:.3e}, sup|g_perp|={:.3e}, multiplicity={:.4}",
            areas[i] / a0,
            e.lambda,
            e.interline_angle_deg,
            e.residual,
            e.sup_k,
            e.sup_gamma_perp,
            e.multiplicity
        );
    }
    for e in &entries {
        assert!(
            e.interline_angle_deg <= 5.0,
            "interline angle {} deg",
            e.interline_angle_deg
        );
        assert!(
            (1.8..=2.2).contains(&e.multiplicity),
            "multiplicity {}",
            e.multiplicity
        );
    }
    for w in entries.windows(2) {
        assert!(
            w[1].sup_k < w[0].sup_k * 1.001,
            "annulus sup|k| not decreasing: {} -> {}",
            w[0].sup_k,
            w[1].sup_k
        );
        assert!(
            w[1].sup_gamma_perp < w[0].sup_gamma_perp * 1.001,
            "annulus sup|g_perp| not decreasing: {} -> {}",
            w[0].sup_gamma_perp,
            w[1].sup_gamma_perp
        );
    }
}

#[test]
fn criterion_06_hypothesis_preservation() {
    let run = whitney_run();
    let snaps = &run.trajectory.snapshots;
    let r_max0 = snaps[0].curve.max_radius();

    // circle-intersection counts non-increasing on a fixed 16-radius grid
    let mut count_violations = 0usize;
    for j in 1..=16 {
        let radius = r_max0 * j as f64 / 16.0;
        let mut prev = usize::MAX;
        for s in snaps {
            let c = circle_intersections(&s.curve, radius);
            if c > prev {
                count_violations += 1;
                break;
            }
            prev = c;
        }
    }

    // cone width non-increasing within tolerance
    let mut worst_cone_increase = f64::NEG_INFINITY;
    let mut prev = f64::INFINITY;
    for s in snaps {
        let w = cone_width(&s.curve);
        worst_cone_increase = worst_cone_increase.max(w - prev);
        prev = w;
    }

    // exactly one self-intersection, at the origin, at every snapshot
    let mut crossing_failures = 0usize;
    for s in snaps {
        let pts = self_intersections(&s.curve);
        let tol = 1e-9 * s.curve.diameter();
        if pts.len() != 1 || pts[0].norm() > tol {
            crossing_failures += 1;
        }
    }

    let pass = count_violations == 0 && worst_cone_increase <= 0.02 && crossing_failures == 0;
    println!(
        "[criterion 6] hypothesis preservation: {} (count violations={count_violations}, \
         max cone-width increase={worst_cone_increase:.2e}, crossing failures={crossing_failures} \
         over {} snapshots)",
        if pass { "PASS" } else { "FAIL" },
        snaps.len()
    );
    assert_eq!(count_violations, 0);
    assert!(worst_cone_increase <= 0.02);
    assert_eq!(crossing_failures, 0);
}

#[test]
fn criterion_07_angle_maximum_principle() {
    let run = whitney_run();
    let params = FlowParams::default();
    let rows = &run.trajectory.observables.rows;

    let mut worst_max_increase = f64::NEG_INFINITY;
    let mut worst_min_decrease = f64::NEG_INFINITY;
    for w in rows.windows(2) {
        worst_max_increase = worst_max_increase.max(w[1].theta_max - w[0].theta_max);
        worst_min_decrease = worst_min_decrease.max(w[0].theta_min - w[1].theta_min);
    }

    // residual between material pairs: consecutive records in the same
    // resampling window, after the first resample has settled the data
    let resample = params.resample_every as u64;
    let mut worst_residual = 0.0f64;
    let mut pairs = 0usize;
    for w in run.trajectory.snapshots.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if a.step_count < resample || a.step_count / resample != b.step_count / resample {
            continue;
        }
        let blend = params.blend_radius(&a.curve);
        let tau = (run.estimate.t_est - a.time).max(0.0);
        let exclude = (3.0 * blend).max(1.5 * tau.sqrt());
        match angle_heat_residual(a, b, 2, params.blend_radius_factor, exclude) {
            Ok(r) => {
                worst_residual = worst_residual.max(r);
                pairs += 1;
            }
            Err(Error::EmptyWindow(_)) => continue,
            Err(e) => panic!("residual failed: {e}"),
        }
    }

    let pass = worst_max_increase <= 1e-3 && worst_min_decrease <= 1e-3 && worst_residual <= 0.1;
    println!(
        "[criterion 7] angle maximum principle: {} (max theta increase={worst_max_increase:.2e}, \
         min theta decrease={worst_min_decrease:.2e}, heat residual max={worst_residual:.4} \
         over {pairs} pairs, theta range [{:.4}, {:.4}] -> [{:.4}, {:.4}])",
        if pass { "PASS" } else { "FAIL" },
        rows[0].theta_min,
        rows[0].theta_max,
        rows.last().unwrap().theta_min,
        rows.last().unwrap().theta_max
    );
    assert!(worst_max_increase <= 1e-3, "theta max increased by {worst_max_increase:e}");
    assert!(worst_min_decrease <= 1e-3, "theta min decreased by {worst_min_decrease:e}");
    assert!(pairs >= 100, "only {pairs} residual pairs");
    assert!(worst_residual <= 0.1, "heat residual {worst_residual}");
}

#[test]
fn criterion_08_density_calibration() {
    let mut worst_single = 0.0f64;
    for n in [2u32, 3, 4] {
        for tau in [0.05f64, 0.2, 0.8] {
            let line = full_line(0.37, 12.0 * tau.sqrt(), 2048).unwrap();
            let d = gaussian_density(&line, n, PlanarPoint::ZERO, tau).unwrap();
            worst_single = worst_single.max((d - 1.0).abs());
        }
    }
    let mut worst_double = 0.0f64;
    for tau in [0.05f64, 0.2, 0.8] {
        let line = doubled_line(0.37, 12.0 * tau.sqrt(), 2048).unwrap();
        let d = gaussian_density(&line, 2, PlanarPoint::ZERO, tau).unwrap();
        worst_double = worst_double.max((d - 2.0).abs());
    }
    let pass = worst_single <= 1e-3 && worst_double <= 2e-3;
    println!(
        "[criterion 8] density calibration: {} (|single - 1| <= {worst_single:.2e}, \
         |double - 2| <= {worst_double:.2e})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst_single <= 1e-3);
    assert!(worst_double <= 2e-3);
}

#[test]
fn criterion_09_avoidance() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let params = FlowParams::default();
    let exclusion = 0.05; // origin ball left out of the distance metric
    let n_nodes = 256;

    let min_pair_distance = |a: &DiscreteCurve, b: &DiscreteCurve| -> Option<f64> {
        let mut best = f64::INFINITY;
        let mut found = false;
        for p in a.nodes().iter().filter(|p| p.norm() >= exclusion) {
            for q in b.nodes().iter().filter(|q| q.norm() >= exclusion) {
                best = best.min((*p - *q).norm());
                found = true;
            }
        }
        found.then_some(best)
    };

    let mut worst_ratio = f64::INFINITY;
    for trial in 0..20 {
        let alpha: f64 = rng.gen_range(0.30 * PI..0.42 * PI);
        let scale: f64 = rng.gen_range(0.45..0.65);
        let lambda = (alpha / 2.0).tan();
        let inner_area = scale * scale * 0.5 * lambda;
        let inner0 = cone_eight(alpha, inner_area, n_nodes).unwrap();
        let outer0 = whitney(n_nodes).unwrap();
        let d0 = min_pair_distance(&inner0, &outer0).unwrap();
        assert!(d0 > 0.0, "trial {trial}: degenerate nesting");

        let inner_area0 = enclosed_area(&inner0).unwrap();
        let mut inner = FlowState::new(inner0);
        let mut outer = FlowState::new(outer0);
        let mut trial_min = f64::INFINITY;
        let mut steps = 0u64;
        loop {
            let dmin = inner
                .curve
                .min_segment_length()
                .min(outer.curve.min_segment_length());
            let dt = params.cfl * dmin * dmin;
            inner = step_with_dt(&inner, &params, dt).unwrap();
            outer = step_with_dt(&outer, &params, dt).unwrap();
            steps += 1;
            if steps % params.resample_every as u64 == 0 {
                inner.curve = resample_arclength(&inner.curve, n_nodes).unwrap();
                outer.curve = resample_arclength(&outer.curve, n_nodes).unwrap();
            }
            if steps % 25 == 0 {
                let inner_area = enclosed_area(&inner.curve).unwrap();
                if inner_area < 1e-3 * inner_area0
                    || inner.curve.max_radius() < 2.0 * exclusion
                {
                    break; // inner curve is at extinction scale
                }
                if let Some(d) = min_pair_distance(&inner.curve, &outer.curve) {
                    trial_min = trial_min.min(d);
                }
            }
        }
        let ratio = trial_min / d0;
        worst_ratio = worst_ratio.min(ratio);
        assert!(
            ratio >= 0.1,
            "trial {trial} (alpha={alpha:.3}, scale={scale:.2}): d/d0 = {ratio:.3}"
        );
    }
    println!(
        "[criterion 9] avoidance: PASS (20 nestings, worst d/d0 = {worst_ratio:.3}, \
         required >= 0.1)"
    );
}

#[test]
fn criterion_10_type2_dilation() {
    let run = large_cone_run();
    let mut norms = Vec::new();
    for k in [4u32, 8, 16] {
        let r = type2_rescale(&run.trajectory, k, run.estimate.t_est).unwrap();
        norms.push((k, r.lambda, r.lambda_z_norm));
    }
    let increasing = norms.windows(2).all(|w| w[1].2 > w[0].2);
    println!(
        "[criterion 10a] type-II dilation: {} (|lambda z| = {:.3} -> {:.3} -> {:.3} \
         over k = 4, 8, 16; t_est={:.3})",
        if increasing { "PASS" } else { "FAIL" },
        norms[0].2,
        norms[1].2,
        norms[2].2,
        run.estimate.t_est
    );
    assert!(
        increasing,
        "|lambda z| not increasing: {:?}",
        norms.iter().map(|n| n.2).collect::<Vec<_>>()
    );
}

/// At the Type-II picking point the rescaled velocity splits into a
/// curvature part and a recentred singular part; the singular fraction at
/// the center node shrinks as the picking horizon tightens (the limit flow
/// sees curvature alone).
#[test]
fn invariant_type2_singular_fraction_decreases() {
    let run = large_cone_run();
    let mut fractions = Vec::new();
    for k in [4u32, 8, 16] {
        let r = type2_rescale(&run.trajectory, k, run.estimate.t_est).unwrap();
        let snap = run
            .trajectory
            .snapshots
            .iter()
            .find(|s| s.time == r.pick_time)
            .unwrap();
        let frames = compute_frames(&snap.curve).unwrap();
        let i = snap
            .curve
            .nodes()
            .iter()
            .position(|p| (*p - r.center).norm() == 0.0)
            .unwrap();
        let g = snap.curve.node(i);
        let f = &frames[i];
        let singular = (g.dot(f.normal) / g.norm_sq()).abs(); // n = 2: (n-1) = 1
        let fraction = singular / f.curvature.norm();
        fractions.push(fraction);
    }
    let decreasing = fractions.windows(2).all(|w| w[1] < w[0]);
    println!(
        "[invariant] type-II singular fraction: {} ({:.4} -> {:.4} -> {:.4})",
        if decreasing { "PASS" } else { "FAIL" },
        fractions[0],
        fractions[1],
        fractions[2]
    );
    assert!(decreasing, "fractions {fractions:?}");
}

/// The curvature-time growth clause. The flow keeps the curve embedded with
/// its only crossing at the origin, so no interior structure can blow up
/// while the area is still a quarter of its initial value; the measured
/// growth factor of `max|k| (t_est - t)` stays near 1 instead of reaching
/// 10. The assertion states the criterion as specified and the printed
/// diagnostics document the measured gap.
#[test]
fn criterion_10_curvature_time_growth() {
    let run = large_cone_run();
    let t_est = run.estimate.t_est;
    let a0 = run.initial_area;
    let mut q_values = Vec::new();
    for s in &run.trajectory.snapshots {
        let area = enclosed_area(&s.curve).unwrap();
        if area < 0.25 * a0 {
            break;
        }
        q_values.push(max_curvature(&s.curve) * (t_est - s.time));
    }
    assert!(q_values.len() > 10, "window too short");
    let mut best_growth = 0.0f64;
    let mut running_min = f64::INFINITY;
    for &q in &q_values {
        running_min = running_min.min(q);
        best_growth = best_growth.max(q / running_min);
    }
    let pass = best_growth >= 10.0;
    println!(
        "[criterion 10b] curvature-time growth: {} (best growth of max|k|(t_est - t) \
         within the area >= 25% window: {best_growth:.2}x, required >= 10x; \
         q first={:.3}, last={:.3}, snapshots={})",
        if pass { "PASS" } else { "FAIL" },
        q_values[0],
        q_values.last().unwrap(),
        q_values.len()
    );
    assert!(
        best_growth >= 10.0,
        "max|k| (t_est - t) grew only {best_growth:.2}x within the area >= 25% window"
    );
}
