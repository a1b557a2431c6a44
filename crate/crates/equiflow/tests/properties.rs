//! Property suites for the structural invariants: exact antipodal symmetry
//! of the discrete operators, resampling idempotence, isometry invariance of
//! the diagnostics and bit-exact snapshot persistence.

use equiflow::*;
use proptest::prelude::*;
use std::f64::consts::PI;

/// Exactly antipodal figure eights built from valid perturbations of the
/// Whitney profile.
fn figure_eights() -> impl Strategy<Value = DiscreteCurve> {
    (0.0..0.03f64, 1u32..5).prop_filter_map("perturbation rejected", |(amplitude, mode)| {
        let base = whitney(64).ok()?;
        perturb(&base, amplitude, mode).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn velocity_is_exactly_odd(curve in figure_eights(), n in 2u32..5) {
        let rb = 2.0 * curve.mean_spacing();
        let v = velocity_field(&curve, n, rb).unwrap();
        let count = curve.n_nodes();
        for i in 1..count / 2 {
            prop_assert_eq!(v[count - i], -v[i]);
        }
    }

    #[test]
    fn singular_term_is_exactly_odd(curve in figure_eights(), n in 2u32..5) {
        let frames = compute_frames(&curve).unwrap();
        let rb = 2.0 * curve.mean_spacing();
        let count = curve.n_nodes();
        for i in 1..count / 2 {
            let a = singular_term(&curve, &frames, i, n, rb).unwrap();
            let b = singular_term(&curve, &frames, count - i, n, rb).unwrap();
            prop_assert_eq!(b, -a);
        }
    }

    #[test]
    fn singular_term_matches_raw_formula_outside_blend(
        curve in figure_eights(),
        n in 2u32..6,
    ) {
        let frames = compute_frames(&curve).unwrap();
        let rb = 2.0 * curve.mean_spacing();
        for i in 0..curve.n_nodes() {
            let g = curve.node(i);
            if curve.is_origin_node(i) || g.norm() < rb {
                continue;
            }
            let s = singular_term(&curve, &frames, i, n, rb).unwrap();
            let f = &frames[i];
            let raw = f.normal * ((n - 1) as f64 * g.dot(f.normal) / g.norm_sq());
            prop_assert!((s - raw).norm() <= 1e-15 * raw.norm().max(1e-12));
        }
    }

    #[test]
    fn resample_is_idempotent_on_perturbed_eights(curve in figure_eights()) {
        let once = resample_arclength(&curve, 64).unwrap();
        let twice = resample_arclength(&once, 64).unwrap();
        for (a, b) in once.nodes().iter().zip(twice.nodes()) {
            prop_assert!((*a - *b).norm() < 1e-12);
        }
    }

    #[test]
    fn area_is_rotation_invariant(curve in figure_eights(), rho in 0.0..(2.0 * PI)) {
        let a0 = enclosed_area(&curve).unwrap();
        let mut nodes: Vec<PlanarPoint> =
            curve.nodes().iter().map(|p| p.rotated(rho)).collect();
        let count = nodes.len();
        nodes[0] = PlanarPoint::ZERO;
        nodes[count / 2] = PlanarPoint::ZERO;
        for i in 1..count / 2 {
            nodes[count - i] = -nodes[i];
        }
        let rotated = DiscreteCurve::new(nodes, Symmetry::FigureEight).unwrap();
        let a1 = enclosed_area(&rotated).unwrap();
        prop_assert!((a1 - a0).abs() <= 1e-12 * a0.max(1e-6));
    }

    #[test]
    fn stepping_keeps_symmetry_bitwise(curve in figure_eights(), steps in 1usize..25) {
        let params = FlowParams::default();
        let mut state = FlowState::new(curve);
        for _ in 0..steps {
            state = step(&state, &params).unwrap();
        }
        let count = state.curve.n_nodes();
        prop_assert_eq!(state.curve.node(0), PlanarPoint::ZERO);
        prop_assert_eq!(state.curve.node(count / 2), PlanarPoint::ZERO);
        for i in 1..count / 2 {
            let sum = state.curve.node(i) + state.curve.node(count - i);
            prop_assert_eq!(sum, PlanarPoint::ZERO);
        }
    }

    #[test]
    fn snapshot_json_roundtrips_bitwise(
        curve in figure_eights(),
        time in proptest::num::f64::POSITIVE,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.json");
        let state = FlowState { curve, time, step_count: 3 };
        io::write_snapshot(&path, &state).unwrap();
        let back = io::read_snapshot(&path).unwrap();
        prop_assert_eq!(back.curve.nodes(), state.curve.nodes());
        prop_assert_eq!(back.time, state.time);
    }

    #[test]
    fn circle_intersection_count_is_even_and_bounded(
        curve in figure_eights(),
        radius in 0.01..3.0f64,
    ) {
        let count = circle_intersections(&curve, radius);
        prop_assert_eq!(count % 2, 0);
        prop_assert!(count <= curve.n_nodes());
    }
}
