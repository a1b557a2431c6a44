//! Time integration of the equivariant flow
//! `dg/dt = k - (n-1) g_perp / |g|^2` with adaptive explicit stepping,
//! periodic arc-length resampling, singularity stopping and trajectory
//! recording.

use crate::error::{Error, Result};
use crate::geometry::{
    compute_frames, enforce_antipodal, resample_arclength, singular_term_at, DiscreteCurve,
    PlanarPoint, Symmetry,
};
use crate::observables::{compute_observable_series, enclosed_area, ObservableSeries};
use serde::{Deserialize, Serialize};

/// Smallest admissible time step; anything below counts as a step failure.
pub const DT_FLOOR: f64 = 1e-16;

/// Runaway guard for `evolve`; generous enough for every shipped scenario.
const MAX_STEPS: u64 = 50_000_000;

fn default_n() -> u32 {
    2
}
fn default_cfl() -> f64 {
    0.2
}
fn default_resample_every() -> u32 {
    20
}
fn default_blend_factor() -> f64 {
    2.0
}

/// Stepping and regularization controls for the flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowParams {
    /// Ambient Lagrangian dimension entering the singular term.
    #[serde(default = "default_n")]
    pub n: u32,
    /// Time step factor: `dt = cfl * (min segment length)^2`.
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Arc-length resampling cadence in steps.
    #[serde(default = "default_resample_every")]
    pub resample_every: u32,
    /// Blend radius as a multiple of the mean node spacing.
    #[serde(default = "default_blend_factor")]
    pub blend_radius_factor: f64,
    #[serde(default)]
    pub stop: StopCriteria,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            n: default_n(),
            cfl: default_cfl(),
            resample_every: default_resample_every(),
            blend_radius_factor: default_blend_factor(),
            stop: StopCriteria::default(),
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be >= 2, got {}", self.n)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "cfl must lie in (0, 1], got {}",
                self.cfl
            )));
        }
        if self.resample_every < 1 {
            return Err(Error::InvalidParameter("resample_every must be >= 1".into()));
        }
        if !(self.blend_radius_factor > 0.0) {
            return Err(Error::InvalidParameter(
                "blend_radius_factor must be positive".into(),
            ));
        }
        self.stop.validate()
    }

    /// Blend radius for the current curve.
    pub fn blend_radius(&self, curve: &DiscreteCurve) -> f64 {
        self.blend_radius_factor * curve.mean_spacing()
    }
}

/// Singular-time detection controls.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct StopCriteria {
    /// Stop when `max |k| * diameter` exceeds this cap.
    pub max_curvature_cap: f64,
    /// Stop when the enclosed area falls below this fraction of the initial.
    pub min_area_fraction: f64,
    /// Stop when the diameter falls below this value.
    pub max_diameter_collapse: f64,
    /// Stop when this time is reached.
    pub t_max: f64,
}

impl Default for StopCriteria {
    fn default() -> Self {
        Self {
            max_curvature_cap: 1e3,
            min_area_fraction: 1e-3,
            max_diameter_collapse: 1e-9,
            t_max: 10.0,
        }
    }
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_curvature_cap", self.max_curvature_cap),
            ("min_area_fraction", self.min_area_fraction),
            ("max_diameter_collapse", self.max_diameter_collapse),
            ("t_max", self.t_max),
        ] {
            if !(v > 0.0) && !(name == "t_max" && v == 0.0) {
                return Err(Error::InvalidParameter(format!("stop.{name} must be positive")));
            }
        }
        if self.min_area_fraction >= 1.0 {
            return Err(Error::InvalidParameter(
                "stop.min_area_fraction must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Curve plus current time; the state variable of the flow.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub curve: DiscreteCurve,
    pub time: f64,
    pub step_count: u64,
}

impl FlowState {
    pub fn new(curve: DiscreteCurve) -> Self {
        Self {
            curve,
            time: 0.0,
            step_count: 0,
        }
    }
}

/// Why a trajectory ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    ReachedTMax,
    CurvatureBlowup,
    AreaCollapse,
    DiameterCollapse,
    StepFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::ReachedTMax => "reached_t_max",
            Termination::CurvatureBlowup => "curvature_blowup",
            Termination::AreaCollapse => "area_collapse",
            Termination::DiameterCollapse => "diameter_collapse",
            Termination::StepFailure => "step_failure",
        }
    }
}

/// Time-ordered snapshots with per-snapshot observables.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<FlowState>,
    pub observables: ObservableSeries,
    pub termination: Termination,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }
}

/// Velocity of every node: `v = k - (n-1) g_perp / |g|^2`, regularized near
/// the origin. Pinned origin nodes and clamped arc ends move with velocity
/// zero (curvature at a pinned origin node vanishes by odd symmetry, so the
/// zero is exact, not an extra constraint).
pub fn velocity_field(
    curve: &DiscreteCurve,
    n: u32,
    blend_radius: f64,
) -> Result<Vec<PlanarPoint>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    if !(blend_radius > 0.0) {
        return Err(Error::InvalidParameter("blend radius must be positive".into()));
    }
    let frames = compute_frames(curve)?;
    let count = curve.n_nodes();
    let mut v = Vec::with_capacity(count);
    for i in 0..count {
        if curve.is_clamped_node(i) {
            v.push(PlanarPoint::ZERO);
            continue;
        }
        let is_origin = curve.is_origin_node(i);
        let pos = curve.node(i);
        if !is_origin && pos.norm_sq() == 0.0 {
            return Err(Error::SymmetryBroken {
                node: i,
                detail: "node at the origin is not flagged as an origin node".into(),
            });
        }
        let s = singular_term_at(pos, &frames[i], is_origin, n, blend_radius);
        let vi = frames[i].curvature - s;
        v.push(if is_origin { PlanarPoint::ZERO } else { vi });
    }
    Ok(v)
}

/// One explicit midpoint step with a caller-chosen `dt`. Used directly by
/// coupled experiments that evolve several curves in lockstep; [`step`]
/// wraps it with the adaptive step size and the resampling cadence.
pub fn step_with_dt(state: &FlowState, params: &FlowParams, dt: f64) -> Result<FlowState> {
    if dt < DT_FLOOR {
        return Err(Error::StepFailure {
            time: state.time,
            detail: format!("time step underflow: dt = {dt:e}"),
        });
    }
    let curve = &state.curve;
    let rb = params.blend_radius(curve);
    let v1 = velocity_field(curve, params.n, rb)?;
    let mid_nodes: Vec<PlanarPoint> = curve
        .nodes()
        .iter()
        .zip(&v1)
        .map(|(p, v)| *p + *v * (0.5 * dt))
        .collect();
    let mid = curve.with_nodes(mid_nodes).map_err(|e| Error::StepFailure {
        time: state.time,
        detail: format!("midpoint stage left the admissible set: {e}"),
    })?;
    let rb_mid = params.blend_radius(&mid);
    let v2 = velocity_field(&mid, params.n, rb_mid)?;
    let new_nodes: Vec<PlanarPoint> = curve
        .nodes()
        .iter()
        .zip(&v2)
        .map(|(p, v)| *p + *v * dt)
        .collect();
    for (i, p) in new_nodes.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::StepFailure {
                time: state.time,
                detail: format!("node {i} left finite range"),
            });
        }
    }
    let stepped = curve.with_nodes(new_nodes).map_err(|e| Error::StepFailure {
        time: state.time,
        detail: format!("step left the admissible set: {e}"),
    })?;
    let enforced = match stepped.symmetry() {
        Symmetry::OpenClamped => stepped,
        _ => enforce_antipodal(&stepped)?,
    };
    Ok(FlowState {
        curve: enforced,
        time: state.time + dt,
        step_count: state.step_count + 1,
    })
}

/// One explicit midpoint step with `dt = cfl * (min segment length)^2`.
/// Antipodal symmetry is re-enforced after the step and the curve is
/// resampled to uniform arc length every `resample_every` steps.
pub fn step(state: &FlowState, params: &FlowParams) -> Result<FlowState> {
    let dmin = state.curve.min_segment_length();
    let dt = params.cfl * dmin * dmin;
    let mut next = step_with_dt(state, params, dt)?;
    if next.step_count % params.resample_every as u64 == 0 {
        next.curve = resample_arclength(&next.curve, next.curve.n_nodes())?;
    }
    Ok(next)
}

/// Area used by the stop rule; zero for open curves (area stopping and the
/// collapse diagnostics only apply to closed curves).
fn stop_area(curve: &DiscreteCurve) -> f64 {
    if curve.symmetry().is_closed() {
        enclosed_area(curve).unwrap_or(0.0)
    } else {
        0.0
    }
}

fn max_curvature(curve: &DiscreteCurve) -> Result<f64> {
    let frames = compute_frames(curve)?;
    Ok(frames
        .iter()
        .map(|f| f.curvature.norm())
        .fold(0.0, f64::max))
}

/// Runs the flow until a stop criterion fires, recording every
/// `record_stride`-th state (plus the initial and final ones).
///
/// On a step failure the last good snapshot is kept and the trajectory is
/// returned with `Termination::StepFailure` instead of an error.
pub fn evolve(state: FlowState, params: &FlowParams, record_stride: u32) -> Result<Trajectory> {
    params.validate()?;
    if record_stride == 0 {
        return Err(Error::InvalidParameter("record_stride must be >= 1".into()));
    }
    let initial_area = stop_area(&state.curve);
    let mut snapshots = vec![state.clone()];
    let mut current = state;
    let termination;
    loop {
        if current.time >= params.stop.t_max {
            termination = Termination::ReachedTMax;
            break;
        }
        if current.step_count >= MAX_STEPS {
            termination = Termination::StepFailure;
            break;
        }
        match step(&current, params) {
            Ok(next) => current = next,
            Err(Error::StepFailure { .. }) => {
                termination = Termination::StepFailure;
                break;
            }
            Err(e) => return Err(e),
        }
        let mut record = current.step_count % record_stride as u64 == 0;
        let area = stop_area(&current.curve);
        let diameter = current.curve.diameter();
        if current.curve.symmetry().is_closed() && area < params.stop.min_area_fraction * initial_area
        {
            termination = Termination::AreaCollapse;
            record = true;
        } else if max_curvature(&current.curve)? * diameter > params.stop.max_curvature_cap {
            termination = Termination::CurvatureBlowup;
            record = true;
        } else if diameter < params.stop.max_diameter_collapse {
            termination = Termination::DiameterCollapse;
            record = true;
        } else {
            if record {
                snapshots.push(current.clone());
            }
            continue;
        }
        if record {
            snapshots.push(current.clone());
        }
        break;
    }
    if snapshots.last().map(|s| s.step_count) != Some(current.step_count) {
        snapshots.push(current.clone());
    }
    let observables = compute_observable_series(&snapshots, params.n)?;
    Ok(Trajectory {
        snapshots,
        observables,
        termination,
    })
}

/// Singular-time estimate from an area series.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SingularTimeEstimate {
    /// `t_last + A(t_last) / (3 pi)`.
    pub t_lo: f64,
    /// `t_last + A(t_last) / pi`.
    pub t_hi: f64,
    /// Linear extrapolation of the final 10% of the series to zero area.
    pub t_est: f64,
    /// Whether `t_lo <= t_est <= t_hi` held.
    pub bracket_ok: bool,
}

/// Estimates the singular time from a positive, overall-decreasing area
/// series: the bracket comes from the area-variation bounds and `t_est` from
/// extrapolating the final 10% of the samples to zero.
pub fn estimate_singular_time(times: &[f64], areas: &[f64]) -> Result<SingularTimeEstimate> {
    if times.len() != areas.len() {
        return Err(Error::MismatchedNodes {
            a: times.len(),
            b: areas.len(),
        });
    }
    if times.len() < 3 {
        return Err(Error::EmptyWindow(format!(
            "need at least 3 area samples, got {}",
            times.len()
        )));
    }
    if areas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
        return Err(Error::InvalidParameter(
            "area series must be positive and finite".into(),
        ));
    }
    if areas[areas.len() - 1] >= areas[0] {
        return Err(Error::NonDecreasingArea);
    }
    let m = ((times.len() as f64 * 0.1).ceil() as usize).max(2);
    let tail_t = &times[times.len() - m..];
    let tail_a = &areas[areas.len() - m..];
    let (slope, intercept) = least_squares_line(tail_t, tail_a);
    if !(slope < 0.0) {
        return Err(Error::NonDecreasingArea);
    }
    let t_est = -intercept / slope;
    let t_last = times[times.len() - 1];
    let a_last = areas[areas.len() - 1];
    let t_lo = t_last + a_last / (3.0 * std::f64::consts::PI);
    let t_hi = t_last + a_last / std::f64::consts::PI;
    let slack = 1e-12 * t_est.abs().max(1.0);
    Ok(SingularTimeEstimate {
        t_lo,
        t_hi,
        t_est,
        bracket_ok: t_lo - slack <= t_est && t_est <= t_hi + slack,
    })
}

fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return (0.0, sy / n);
    }
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}
