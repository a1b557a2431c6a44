//! Scalar and profile diagnostics along the flow: enclosed area, Lagrangian
//! angle, Gaussian densities, circle-intersection counts, cone width and the
//! angle heat-equation residual.

use crate::error::{Error, Result};
use crate::flow::{estimate_singular_time, velocity_field, FlowState};
use crate::geometry::{compute_frames, DiscreteCurve, PlanarPoint, Symmetry};
use std::f64::consts::PI;

/// One row of the per-snapshot diagnostics, in the frozen CSV column order.
#[derive(Debug, Clone, Copy)]
pub struct ObservableRow {
    pub time: f64,
    pub area: f64,
    pub area_rate: f64,
    pub max_curvature: f64,
    pub min_seg_len: f64,
    pub gaussian_density: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    pub cone_width: f64,
}

pub const OBSERVABLE_COLUMNS: [&str; 9] = [
    "time",
    "area",
    "area_rate",
    "max_curvature",
    "min_seg_len",
    "gaussian_density",
    "theta_min",
    "theta_max",
    "cone_width",
];

/// Time-indexed diagnostic rows with strictly increasing times.
#[derive(Debug, Clone, Default)]
pub struct ObservableSeries {
    pub rows: Vec<ObservableRow>,
}

impl ObservableSeries {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.time).collect()
    }

    pub fn areas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.area).collect()
    }
}

/// Enclosed area of a closed antipodal curve.
///
/// For a figure eight this is the area of one lobe (the fundamental domain of
/// the antipodal action; the mirrored lobe is congruent). The two lobes are
/// traversed with opposite winding, so their shoelace sums are averaged with
/// absolute values rather than added signed.
pub fn enclosed_area(curve: &DiscreteCurve) -> Result<f64> {
    let n = curve.n_nodes();
    let nodes = curve.nodes();
    match curve.symmetry() {
        Symmetry::OpenClamped => Err(Error::OpenCurve {
            op: "enclosed_area",
            symmetry: curve.symmetry(),
        }),
        Symmetry::AntipodalClosed => {
            let mut sum = 0.0;
            for i in 0..n {
                sum += nodes[i].cross(nodes[(i + 1) % n]);
            }
            Ok(0.5 * sum.abs())
        }
        Symmetry::FigureEight => {
            let mut lobe_a = 0.0;
            for i in 0..n / 2 {
                lobe_a += nodes[i].cross(nodes[i + 1]);
            }
            let mut lobe_b = 0.0;
            for i in n / 2..n {
                lobe_b += nodes[i].cross(nodes[(i + 1) % n]);
            }
            Ok(0.25 * (lobe_a.abs() + lobe_b.abs()))
        }
    }
}

/// Per-node Lagrangian angle values, unwrapped to a continuous branch along
/// each connected component. Origin nodes are excluded (`arg 0` undefined).
#[derive(Debug, Clone)]
pub struct AngleProfile {
    /// Angle per node; origin nodes carry 0.0 and are marked excluded.
    pub values: Vec<f64>,
    pub included: Vec<bool>,
}

impl AngleProfile {
    pub fn min(&self) -> f64 {
        self.iter_included()
            .fold(f64::INFINITY, |m, (_, v)| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.iter_included()
            .fold(f64::NEG_INFINITY, |m, (_, v)| m.max(v))
    }

    pub fn iter_included(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.included[*i])
            .map(|(i, v)| (i, *v))
    }
}

/// Lagrangian angle `theta_i = arg(tangent_i) + (n-1) arg(nodes_i)`.
///
/// Each component is unwrapped to jumps below pi and shifted by a multiple of
/// 2 pi so the value at its node of maximal radius lies in (-pi, pi]. The
/// anchor makes profiles comparable across snapshots.
pub fn lagrangian_angle(curve: &DiscreteCurve, n: u32) -> Result<AngleProfile> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    let frames = compute_frames(curve)?;
    let count = curve.n_nodes();
    let mut values = vec![0.0; count];
    let mut included = vec![false; count];
    for component in curve.components() {
        let idx: Vec<usize> = component.collect();
        if idx.is_empty() {
            continue;
        }
        let mut raw = Vec::with_capacity(idx.len());
        for &i in &idx {
            let g = curve.node(i);
            if g.norm_sq() == 0.0 {
                return Err(Error::SymmetryBroken {
                    node: i,
                    detail: "node at the origin outside the pinned set has no angle".into(),
                });
            }
            raw.push(frames[i].tangent.arg() + (n - 1) as f64 * g.arg());
        }
        // unwrap sequentially
        let mut unwrapped = raw.clone();
        for j in 1..unwrapped.len() {
            let mut d = unwrapped[j] - unwrapped[j - 1];
            while d > PI {
                unwrapped[j] -= 2.0 * PI;
                d = unwrapped[j] - unwrapped[j - 1];
            }
            while d <= -PI {
                unwrapped[j] += 2.0 * PI;
                d = unwrapped[j] - unwrapped[j - 1];
            }
        }
        // anchor at the component's node of maximal radius; ties (e.g. exact
        // circles) break to the lowest index so the anchor is stable in time
        let r_max = idx
            .iter()
            .map(|&i| curve.node(i).norm())
            .fold(0.0f64, f64::max);
        let anchor = idx
            .iter()
            .position(|&i| curve.node(i).norm() >= r_max * (1.0 - 1e-12))
            .unwrap();
        let shift = 2.0 * PI * ((unwrapped[anchor] + PI) / (2.0 * PI)).ceil() - 2.0 * PI;
        for (j, &i) in idx.iter().enumerate() {
            values[i] = unwrapped[j] - shift;
            included[i] = true;
        }
    }
    Ok(AngleProfile { values, included })
}

/// Area of the unit sphere `S^{n-1}` in `R^n`, via exact half-integer gamma.
fn unit_sphere_area(n: u32) -> f64 {
    fn gamma_half(k: u32) -> f64 {
        // Gamma(k/2)
        match k {
            1 => PI.sqrt(),
            2 => 1.0,
            _ => (k as f64 / 2.0 - 1.0) * gamma_half(k - 2),
        }
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

fn density_weighted_sum<F: Fn(usize) -> f64>(
    curve: &DiscreteCurve,
    n: u32,
    center: PlanarPoint,
    tau: f64,
    extra: F,
) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    let frames = compute_frames(curve)?;
    let mut sum = 0.0;
    for (i, f) in frames.iter().enumerate() {
        let g = curve.node(i);
        let d2 = (g - center).norm_sq();
        let r = g.norm();
        sum += (-d2 / (4.0 * tau)).exp() * r.powi(n as i32 - 1) * f.arc_weight * extra(i);
    }
    // omega_{n-1} = area of S^{n-1} in R^n, the sphere swept by the profile
    let prefactor = 0.5 * unit_sphere_area(n) * (4.0 * PI * tau).powf(-(n as f64) / 2.0);
    Ok(prefactor * sum)
}

/// Gaussian density of the equivariant lift against the backward heat kernel
/// of width `tau`, centered at `center`. Calibrated so a full line through
/// the origin scores exactly 1 (the 1/2 compensates the double cover).
pub fn gaussian_density(
    curve: &DiscreteCurve,
    n: u32,
    center: PlanarPoint,
    tau: f64,
) -> Result<f64> {
    density_weighted_sum(curve, n, center, tau, |_| 1.0)
}

/// Gaussian density weighted by the squared Lagrangian angle, with the
/// anchored branch convention of [`lagrangian_angle`].
pub fn theta_squared_density(curve: &DiscreteCurve, n: u32, tau: f64) -> Result<f64> {
    let profile = lagrangian_angle(curve, n)?;
    // origin nodes carry weight |g|^{n-1} = 0, so their excluded angle never
    // contributes
    density_weighted_sum(curve, n, PlanarPoint::ZERO, tau, |i| {
        profile.values[i] * profile.values[i]
    })
}

/// Number of transversal sign changes of `|g_i| - R` along the polyline.
/// Nodes exactly on the circle are skipped, which resolves tangential
/// grazings by the sign-change rule.
pub fn circle_intersections(curve: &DiscreteCurve, radius: f64) -> usize {
    if !(radius > 0.0) {
        return 0;
    }
    let mut total = 0usize;
    let cyclic = curve.symmetry().is_closed();
    let n = curve.n_nodes();
    let ranges: Vec<(usize, usize)> = if cyclic {
        vec![(0, n)]
    } else {
        vec![(0, n / 2), (n / 2, n)]
    };
    for (lo, hi) in ranges {
        let signs: Vec<f64> = (lo..hi)
            .map(|i| curve.node(i).norm() - radius)
            .filter(|d| *d != 0.0)
            .map(|d| d.signum())
            .collect();
        if signs.len() < 2 {
            continue;
        }
        let pairs = if cyclic { signs.len() } else { signs.len() - 1 };
        for j in 0..pairs {
            if signs[j] * signs[(j + 1) % signs.len()] < 0.0 {
                total += 1;
            }
        }
    }
    total
}

/// Width of the minimal arc in the projective circle `R / pi Z` containing
/// the node directions; the smallest double-cone opening containing the
/// curve. Origin nodes are skipped.
pub fn cone_width(curve: &DiscreteCurve) -> f64 {
    let mut angles: Vec<f64> = curve
        .nodes()
        .iter()
        .filter(|p| p.norm_sq() > 0.0)
        .map(|p| p.arg().rem_euclid(PI))
        .collect();
    if angles.len() < 2 {
        return 0.0;
    }
    angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut max_gap = angles[0] + PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    (PI - max_gap).max(0.0)
}

/// First and second arc-length derivatives of an unwrapped angle profile.
/// Stencils stay inside one connected component: the unwrapped branch is not
/// cyclically continuous, so reaching across a component boundary (or the
/// unwrap seam of a closed loop) would difference across a 2 pi n jump.
fn theta_derivatives(
    curve: &DiscreteCurve,
    theta: &[f64],
) -> (Vec<f64>, Vec<f64>, Vec<bool>) {
    let n = curve.n_nodes();
    let nodes = curve.nodes();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    let mut valid = vec![false; n];
    for component in curve.components() {
        let (lo, hi) = (component.start, component.end);
        for i in lo + 1..hi.saturating_sub(1) {
            let (p, q) = (i - 1, i + 1);
            let dp = (nodes[i] - nodes[p]).norm();
            let dn = (nodes[q] - nodes[i]).norm();
            d1[i] = (theta[q] - theta[p]) / (dp + dn);
            d2[i] = 2.0 * ((theta[q] - theta[i]) / dn - (theta[i] - theta[p]) / dp) / (dp + dn);
            valid[i] = true;
        }
    }
    (d1, d2, valid)
}

/// Relative defect of the reduced angle evolution
/// `d theta/dt = theta_ss + (n-1) <g,T>/|g|^2 theta_s`
/// between two recorded states with matched node counts.
///
/// Node indices mark equal arc fractions rather than material points, so the
/// time quotient is corrected by the marker drift (arc-position change plus
/// the integrated stretch rate). Nodes with radius below `exclude_radius` at
/// either time are excluded, along with their stencil neighbors.
pub fn angle_heat_residual(
    prev: &FlowState,
    next: &FlowState,
    n: u32,
    blend_radius_factor: f64,
    exclude_radius: f64,
) -> Result<f64> {
    let c1 = &prev.curve;
    let c2 = &next.curve;
    if c1.n_nodes() != c2.n_nodes() {
        return Err(Error::MismatchedNodes {
            a: c1.n_nodes(),
            b: c2.n_nodes(),
        });
    }
    let dt = next.time - prev.time;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(
            "snapshots must be strictly ordered in time".into(),
        ));
    }
    let count = c1.n_nodes();
    let th1 = lagrangian_angle(c1, n)?;
    let mut th2 = lagrangian_angle(c2, n)?;
    // align branches: the anchored shift may differ by a 2 pi multiple
    // between snapshots, which is pure branch choice, not evolution
    for component in c1.components() {
        let rep = component
            .clone()
            .find(|&i| th1.included[i] && th2.included[i]);
        if let Some(i) = rep {
            let offset = 2.0 * PI * ((th2.values[i] - th1.values[i]) / (2.0 * PI)).round();
            if offset != 0.0 {
                for j in component {
                    th2.values[j] -= offset;
                }
            }
        }
    }
    let fr1 = compute_frames(c1)?;
    let fr2 = compute_frames(c2)?;
    let v1 = velocity_field(c1, n, blend_radius_factor * c1.mean_spacing())?;
    let v2 = velocity_field(c2, n, blend_radius_factor * c2.mean_spacing())?;

    // arc position of each node measured from node 0 along the polyline
    let arc_positions = |c: &DiscreteCurve| -> Vec<f64> {
        let mut s = vec![0.0; count];
        for i in 1..count {
            let step = match c.prev_index(i) {
                Some(p) if p == i - 1 => (c.node(i) - c.node(i - 1)).norm(),
                _ => 0.0,
            };
            s[i] = s[i - 1] + step;
        }
        s
    };
    let s1 = arc_positions(c1);
    let s2 = arc_positions(c2);

    // integrated stretch rate, interval-averaged: material arc positions
    // drift by -Q(s)
    let mut q = vec![0.0; count];
    let mut acc1 = 0.0;
    let mut acc2 = 0.0;
    for i in 1..count {
        acc1 += v1[i - 1].dot(fr1[i - 1].curvature) * fr1[i - 1].arc_weight;
        acc2 += v2[i - 1].dot(fr2[i - 1].curvature) * fr2[i - 1].arc_weight;
        q[i] = 0.5 * (acc1 + acc2);
    }

    let (th1_s, th1_ss, valid1) = theta_derivatives(c1, &th1.values);
    let (th2_s, th2_ss, valid2) = theta_derivatives(c2, &th2.values);

    let coef = (n - 1) as f64;
    let spatial = |c: &DiscreteCurve, fr: &[crate::geometry::NodeFrame], ts: &[f64], tss: &[f64], i: usize| {
        let g = c.node(i);
        tss[i] + coef * g.dot(fr[i].tangent) / g.norm_sq() * ts[i]
    };

    let mut include = vec![false; count];
    for i in 0..count {
        include[i] = th1.included[i]
            && th2.included[i]
            && valid1[i]
            && valid2[i]
            && c1.node(i).norm() >= exclude_radius
            && c2.node(i).norm() >= exclude_radius;
    }
    // erode by one node so stencils never touch excluded data
    let eroded: Vec<bool> = (0..count)
        .map(|i| {
            include[i]
                && c1.prev_index(i).map(|p| include[p]).unwrap_or(false)
                && c1.next_index(i).map(|p| include[p]).unwrap_or(false)
        })
        .collect();
    let selected: Vec<usize> = (0..count).filter(|&i| eroded[i]).collect();
    if selected.len() < 8 {
        return Err(Error::EmptyWindow(format!(
            "only {} nodes outside the origin window",
            selected.len()
        )));
    }

    let mut num = 0.0;
    let mut den = 0.0;
    let mut advection_norm = 0.0;
    for &i in &selected {
        let w = fr1[i].arc_weight;
        let s_dot = (s2[i] - s1[i]) / dt;
        let theta_s = 0.5 * (th1_s[i] + th2_s[i]);
        let drift = (s_dot + q[i]) * theta_s;
        let dth = (th2.values[i] - th1.values[i]) / dt - drift;
        let sp = 0.5
            * (spatial(c1, &fr1, &th1_s, &th1_ss, i) + spatial(c2, &fr2, &th2_s, &th2_ss, i));
        num += w * (dth - sp) * (dth - sp);
        den += w * dth * dth;
        let scale = s_dot.abs().max(q[i].abs()) * theta_s;
        advection_norm += w * scale * scale;
    }
    let num = num.sqrt();
    // the drift correction subtracts two large advection terms, so defects
    // below a small fraction of their size are not resolvable; the absolute
    // floor guards fully static profiles
    let den = den
        .sqrt()
        .max(0.02 * advection_norm.sqrt())
        .max(1e-7 / dt);
    Ok(num / den)
}

/// Builds the full diagnostic series for a recorded trajectory. The Gaussian
/// density column uses `tau = t_est - t` from the run's own area series when
/// a singular-time estimate is available, falling back to a fixed width
/// otherwise; widths below the quadrature resolution are floored.
pub fn compute_observable_series(snapshots: &[FlowState], n: u32) -> Result<ObservableSeries> {
    const FALLBACK_TAU: f64 = 0.25;
    let closed = snapshots
        .first()
        .map(|s| s.curve.symmetry().is_closed())
        .unwrap_or(false);
    let mut areas = Vec::with_capacity(snapshots.len());
    for s in snapshots {
        areas.push(if closed { enclosed_area(&s.curve)? } else { 0.0 });
    }
    let times: Vec<f64> = snapshots.iter().map(|s| s.time).collect();
    let t_est = if closed {
        estimate_singular_time(&times, &areas).ok().map(|e| e.t_est)
    } else {
        None
    };

    let mut rows = Vec::with_capacity(snapshots.len());
    for (i, s) in snapshots.iter().enumerate() {
        let frames = compute_frames(&s.curve)?;
        let max_curvature = frames
            .iter()
            .map(|f| f.curvature.norm())
            .fold(0.0, f64::max);
        let h_mean = s.curve.mean_spacing();
        let tau = match t_est {
            Some(t) if t - s.time > 4.0 * h_mean * h_mean => t - s.time,
            Some(_) => 4.0 * h_mean * h_mean,
            None => FALLBACK_TAU,
        };
        let profile = lagrangian_angle(&s.curve, n)?;
        let area_rate = if i > 0 {
            (areas[i] - areas[i - 1]) / (s.time - snapshots[i - 1].time)
        } else {
            0.0
        };
        rows.push(ObservableRow {
            time: s.time,
            area: areas[i],
            area_rate,
            max_curvature,
            min_seg_len: s.curve.min_segment_length(),
            gaussian_density: gaussian_density(&s.curve, n, PlanarPoint::ZERO, tau)?,
            theta_min: profile.min(),
            theta_max: profile.max(),
            cone_width: cone_width(&s.curve),
        });
    }
    Ok(ObservableSeries { rows })
}
