//! Tangent-flow analysis near the collapse: central parabolic rescaling,
//! annulus regularity measurements, through-origin line-pair fitting,
//! density-based multiplicity and the Hamilton point-picking dilation.

use crate::error::{Error, Result};
use crate::flow::{FlowState, Trajectory};
use crate::geometry::{compute_frames, DiscreteCurve, PlanarPoint, Symmetry};
use crate::observables::gaussian_density;
use serde::Serialize;
use std::f64::consts::PI;

/// Default Gaussian widths for the multiplicity estimate, dimensionless after
/// an area-normalized rescale.
pub const MULTIPLICITY_TAU_GRID: [f64; 4] = [0.05, 0.1, 0.2, 0.4];

/// A snapshot scaled about the origin by `lambda`, carrying its parabolic
/// time `s = lambda^2 (t - t_est)`.
#[derive(Debug, Clone)]
pub struct RescaledSnapshot {
    pub curve: DiscreteCurve,
    pub lambda: f64,
    pub source_time: f64,
    pub rescaled_time: f64,
}

/// Scales a snapshot about the origin. Symmetry is preserved since the
/// scaling is centered.
pub fn central_rescale(state: &FlowState, t_est: f64, lambda: f64) -> Result<RescaledSnapshot> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(state.time < t_est) {
        return Err(Error::InvalidParameter(format!(
            "snapshot time {} must precede the singular-time estimate {}",
            state.time, t_est
        )));
    }
    let nodes: Vec<PlanarPoint> = state.curve.nodes().iter().map(|p| *p * lambda).collect();
    let curve = state.curve.with_nodes(nodes)?;
    Ok(RescaledSnapshot {
        curve,
        lambda,
        source_time: state.time,
        rescaled_time: lambda * lambda * (state.time - t_est),
    })
}

/// Suprema of discrete curvature and of the normal position component over
/// the annulus nodes.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AnnulusSuprema {
    pub sup_curvature: f64,
    pub sup_normal_position: f64,
    pub node_count: usize,
}

/// Measures `sup |k|` and `sup |<g, nu>|` over nodes with radius in
/// `[r_in, r_out]`. Returns `None` when fewer than 4 nodes fall inside
/// (an empty annulus is a distinguished outcome, not zero).
pub fn annulus_regularity(
    curve: &DiscreteCurve,
    r_in: f64,
    r_out: f64,
) -> Result<Option<AnnulusSuprema>> {
    if !(0.0 < r_in && r_in < r_out) {
        return Err(Error::InvalidParameter(format!(
            "annulus requires 0 < r_in < r_out, got [{r_in}, {r_out}]"
        )));
    }
    let frames = compute_frames(curve)?;
    let mut sup_k = 0.0f64;
    let mut sup_gp = 0.0f64;
    let mut count = 0usize;
    for (i, f) in frames.iter().enumerate() {
        let g = curve.node(i);
        let r = g.norm();
        if r < r_in || r > r_out {
            continue;
        }
        count += 1;
        sup_k = sup_k.max(f.curvature.norm());
        sup_gp = sup_gp.max(g.dot(f.normal).abs());
    }
    if count < 4 {
        return Ok(None);
    }
    Ok(Some(AnnulusSuprema {
        sup_curvature: sup_k,
        sup_normal_position: sup_gp,
        node_count: count,
    }))
}

/// Two lines through the origin fitted to the annulus content.
#[derive(Debug, Clone)]
pub struct LinePairFit {
    /// Directions in [0, pi).
    pub direction_1: f64,
    pub direction_2: f64,
    /// Pooled RMS normal distance divided by the annulus outer radius.
    pub residual: f64,
    /// Branch label per node; only annulus nodes are labeled.
    pub branch_assignment: Vec<Option<u8>>,
}

impl LinePairFit {
    /// Angle between the two fitted lines, in [0, pi/2].
    pub fn interline_angle(&self) -> f64 {
        let d = (self.direction_1 - self.direction_2).abs();
        d.min(PI - d)
    }
}

/// Weighted total-least-squares line through the origin: direction of the
/// leading eigenvector of the second-moment matrix, plus the perpendicular
/// scatter (smallest eigenvalue over total weight).
fn tls_line_through_origin(points: &[(PlanarPoint, f64)]) -> (f64, f64, f64) {
    let mut xx = 0.0;
    let mut xy = 0.0;
    let mut yy = 0.0;
    let mut wsum = 0.0;
    for (p, w) in points {
        xx += w * p.x * p.x;
        xy += w * p.x * p.y;
        yy += w * p.y * p.y;
        wsum += w;
    }
    let tr = xx + yy;
    let det = xx * yy - xy * xy;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l_max = 0.5 * (tr + disc);
    let l_min = 0.5 * (tr - disc);
    // eigenvector for l_max, picking the better-conditioned expression
    let v = if (l_max - xx).abs() > (l_max - yy).abs() {
        PlanarPoint::new(xy, l_max - xx)
    } else {
        PlanarPoint::new(l_max - yy, xy)
    };
    let dir = if v.norm_sq() == 0.0 {
        if xx >= yy {
            0.0
        } else {
            PI / 2.0
        }
    } else {
        v.arg().rem_euclid(PI)
    };
    (dir, l_min.max(0.0), wsum)
}

/// Splits the annulus content into the two strands passing through the
/// origin (index quarters around the pinned nodes) and fits each with a
/// total-least-squares line through the origin.
///
/// Curves without a figure-eight strand structure are fitted with a single
/// line, reported twice.
pub fn line_pair_fit(curve: &DiscreteCurve, r_in: f64, r_out: f64) -> Result<LinePairFit> {
    if !(0.0 < r_in && r_in < r_out) {
        return Err(Error::InvalidParameter(format!(
            "annulus requires 0 < r_in < r_out, got [{r_in}, {r_out}]"
        )));
    }
    let frames = compute_frames(curve)?;
    let n = curve.n_nodes();
    let strand_of = |i: usize| -> u8 {
        match curve.symmetry() {
            // strand A passes through origin node 0, strand B through node N/2
            Symmetry::FigureEight => u8::from(!(i < n / 4 || i >= 3 * n / 4)),
            _ => 0,
        }
    };
    let mut branch_assignment = vec![None; n];
    let mut strands: [Vec<(PlanarPoint, f64)>; 2] = [Vec::new(), Vec::new()];
    for i in 0..n {
        let g = curve.node(i);
        let r = g.norm();
        if r < r_in || r > r_out {
            continue;
        }
        let b = strand_of(i);
        branch_assignment[i] = Some(b);
        strands[b as usize].push((g, frames[i].arc_weight));
    }
    let fits: Vec<(f64, f64, f64)> = strands
        .iter()
        .filter(|s| s.len() >= 2)
        .map(|s| tls_line_through_origin(s))
        .collect();
    if fits.is_empty() {
        return Err(Error::EmptyWindow(format!(
            "no annulus nodes in [{r_in}, {r_out}]"
        )));
    }
    let (d1, d2, residual) = if fits.len() == 2 {
        let pooled =
            ((fits[0].1 * 1.0 + fits[1].1 * 1.0) / (fits[0].2 + fits[1].2)).sqrt() / r_out;
        (fits[0].0, fits[1].0, pooled)
    } else {
        let pooled = (fits[0].1 / fits[0].2).sqrt() / r_out;
        (fits[0].0, fits[0].0, pooled)
    };
    Ok(LinePairFit {
        direction_1: d1,
        direction_2: d2,
        residual,
        branch_assignment,
    })
}

/// Median Gaussian density at the origin over a grid of widths; a k-fold
/// line scores k.
pub fn multiplicity_estimate(curve: &DiscreteCurve, n: u32, tau_grid: &[f64]) -> Result<f64> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidParameter("tau grid must be non-empty".into()));
    }
    if tau_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("tau grid must be positive".into()));
    }
    let mut vals = Vec::with_capacity(tau_grid.len());
    for &tau in tau_grid {
        vals.push(gaussian_density(curve, n, PlanarPoint::ZERO, tau)?);
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = vals.len();
    Ok(if m % 2 == 1 {
        vals[m / 2]
    } else {
        0.5 * (vals[m / 2 - 1] + vals[m / 2])
    })
}

/// Result of the Hamilton point-picking dilation.
#[derive(Debug, Clone)]
pub struct Type2Rescale {
    /// Recentered, rescaled node positions `lambda (g - z)`.
    pub nodes: Vec<PlanarPoint>,
    /// Curvature magnitude at the picked point.
    pub lambda: f64,
    /// Picked spacetime point.
    pub center: PlanarPoint,
    pub pick_time: f64,
    /// `lambda^2 (t_k - t_est)`.
    pub rescaled_time: f64,
    /// `|lambda z|`; divergence of this quantity separates the picked point
    /// from a central dilation.
    pub lambda_z_norm: f64,
}

/// Point-picking dilation: over recorded states with `t <= t_est - 1/k`,
/// maximizes `|k_vec|^2 (t_est - 1/k - t)` over nodes and times, then
/// recenters at the picked node and rescales by its curvature.
pub fn type2_rescale(trajectory: &Trajectory, k: u32, t_est: f64) -> Result<Type2Rescale> {
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    let horizon = t_est - 1.0 / k as f64;
    let mut best: Option<(f64, usize, usize)> = None; // (value, snapshot, node)
    for (si, snap) in trajectory.snapshots.iter().enumerate() {
        if snap.time > horizon {
            continue;
        }
        let frames = compute_frames(&snap.curve)?;
        for (ni, f) in frames.iter().enumerate() {
            let val = f.curvature.norm_sq() * (horizon - snap.time);
            if best.map(|(v, _, _)| val > v).unwrap_or(true) {
                best = Some((val, si, ni));
            }
        }
    }
    let (_value, si, ni) = best.ok_or_else(|| {
        Error::EmptyWindow(format!(
            "no recorded snapshots at or before t_est - 1/k = {horizon}"
        ))
    })?;
    let snap = &trajectory.snapshots[si];
    let frames = compute_frames(&snap.curve)?;
    let lambda = frames[ni].curvature.norm();
    // straight data carries only roundoff-level curvature: no picking point
    if lambda * snap.curve.diameter() <= 1e-8 {
        return Err(Error::EmptyWindow(
            "curvature vanishes on the admissible window; no Type-II picking point".into(),
        ));
    }
    let center = snap.curve.node(ni);
    let nodes: Vec<PlanarPoint> = snap
        .curve
        .nodes()
        .iter()
        .map(|p| (*p - center) * lambda)
        .collect();
    Ok(Type2Rescale {
        nodes,
        lambda,
        center,
        pick_time: snap.time,
        rescaled_time: lambda * lambda * (snap.time - t_est),
        lambda_z_norm: lambda * center.norm(),
    })
}

/// One row of a rescale report.
#[derive(Debug, Clone, Serialize)]
pub struct RescaleEntry {
    pub lambda: f64,
    pub s: f64,
    pub source_time: f64,
    pub interline_angle_deg: f64,
    pub residual: f64,
    pub multiplicity: f64,
    pub sup_k: f64,
    pub sup_gamma_perp: f64,
    /// Zero for central rescalings; populated by Type-II entries.
    pub lambda_z_norm: f64,
}

/// Runs the central-rescale analysis pipeline on one snapshot.
pub fn analyze_rescaled(
    state: &FlowState,
    t_est: f64,
    lambda: f64,
    n: u32,
    r_in: f64,
    r_out: f64,
) -> Result<RescaleEntry> {
    let rescaled = central_rescale(state, t_est, lambda)?;
    let fit = line_pair_fit(&rescaled.curve, r_in, r_out)?;
    let sups = annulus_regularity(&rescaled.curve, r_in, r_out)?.ok_or_else(|| {
        Error::EmptyWindow(format!("annulus [{r_in}, {r_out}] nearly empty after rescale"))
    })?;
    let multiplicity = multiplicity_estimate(&rescaled.curve, n, &MULTIPLICITY_TAU_GRID)?;
    Ok(RescaleEntry {
        lambda,
        s: rescaled.rescaled_time,
        source_time: state.time,
        interline_angle_deg: fit.interline_angle().to_degrees(),
        residual: fit.residual,
        multiplicity,
        sup_k: sups.sup_curvature,
        sup_gamma_perp: sups.sup_normal_position,
        lambda_z_norm: 0.0,
    })
}
