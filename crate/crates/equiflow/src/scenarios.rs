//! Initial-data generators and the declarative experiment configuration.

use crate::error::{Error, Result};
use crate::flow::FlowParams;
use crate::geometry::{
    compute_frames, resample_arclength, self_intersections, DiscreteCurve, PlanarPoint, Symmetry,
};
use crate::observables::{enclosed_area, OBSERVABLE_COLUMNS};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::PathBuf;

/// Whitney figure-eight profile `(sin u, sin u cos u) / (1 + cos^2 u)`.
fn whitney_point(u: f64) -> PlanarPoint {
    let s = u.sin();
    let c = u.cos();
    let den = 1.0 + c * c;
    PlanarPoint::new(s / den, s * c / den)
}

/// Whitney figure eight sampled at uniform parameter, mirrored exactly, then
/// resampled to uniform arc length per lobe. Nodes 0 and N/2 sit at the
/// origin (parameters 0 and pi).
pub fn whitney(n_nodes: usize) -> Result<DiscreteCurve> {
    if n_nodes < 64 || n_nodes % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "whitney needs an even node count >= 64, got {n_nodes}"
        )));
    }
    let half = n_nodes / 2;
    let mut nodes = vec![PlanarPoint::ZERO; n_nodes];
    for (i, node) in nodes.iter_mut().enumerate().take(half + 1).skip(1) {
        *node = whitney_point(PI * i as f64 / half as f64);
    }
    nodes[0] = PlanarPoint::ZERO;
    nodes[half] = PlanarPoint::ZERO;
    for i in 1..half {
        nodes[n_nodes - i] = -nodes[i];
    }
    let curve = DiscreteCurve::new(nodes, Symmetry::FigureEight)?;
    resample_arclength(&curve, n_nodes)
}

/// Origin-centered circle with exactly mirrored halves.
pub fn circle(radius: f64, n_nodes: usize) -> Result<DiscreteCurve> {
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "circle radius must be positive, got {radius}"
        )));
    }
    if n_nodes < 16 || n_nodes % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "circle needs an even node count >= 16, got {n_nodes}"
        )));
    }
    let half = n_nodes / 2;
    let mut nodes = vec![PlanarPoint::ZERO; n_nodes];
    for (i, node) in nodes.iter_mut().enumerate().take(half) {
        let u = 2.0 * PI * i as f64 / n_nodes as f64;
        *node = PlanarPoint::new(radius * u.cos(), radius * u.sin());
    }
    for i in 0..half {
        nodes[i + half] = -nodes[i];
    }
    DiscreteCurve::new(nodes, Symmetry::AntipodalClosed)
}

/// Barrier curve `sin(pi u / alpha)^(-alpha/pi) (cos u, sin u)` sampled on
/// `[u_margin, alpha - u_margin]`, together with its antipodal copy. The four
/// arc endpoints are clamped boundary data.
pub fn barrier_alpha(alpha: f64, n_nodes: usize, u_margin: f64) -> Result<DiscreteCurve> {
    if !(alpha > 0.0 && alpha <= PI) {
        return Err(Error::InvalidParameter(format!(
            "barrier alpha must lie in (0, pi], got {alpha}"
        )));
    }
    if !(u_margin > 0.0 && u_margin < alpha / 2.0) {
        return Err(Error::InvalidParameter(format!(
            "barrier u_margin must lie in (0, alpha/2), got {u_margin}"
        )));
    }
    if n_nodes < 16 || n_nodes % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "barrier needs an even node count >= 16, got {n_nodes}"
        )));
    }
    let half = n_nodes / 2;
    let mut nodes = Vec::with_capacity(n_nodes);
    for i in 0..half {
        let u = u_margin + (alpha - 2.0 * u_margin) * i as f64 / (half - 1) as f64;
        let r = (PI * u / alpha).sin().powf(-alpha / PI);
        nodes.push(PlanarPoint::new(r * u.cos(), r * u.sin()));
    }
    for i in 0..half {
        nodes.push(-nodes[i]);
    }
    DiscreteCurve::new(nodes, Symmetry::OpenClamped)
}

/// Figure eight squeezed to fit a cone of opening `alpha` and scaled to the
/// requested enclosed (lobe) area: `mu (x0(u), lambda y0(u))` with
/// `lambda = tan(alpha/2)` clamped to (0, 1].
///
/// The shoelace area scales exactly quadratically, so `mu` comes from the
/// closed-form ratio rather than a root search; the result is still checked
/// against the target.
pub fn cone_eight(alpha: f64, area_target: f64, n_nodes: usize) -> Result<DiscreteCurve> {
    if !(alpha > 0.0 && alpha < PI) {
        return Err(Error::InvalidParameter(format!(
            "cone_eight alpha must lie in (0, pi), got {alpha}"
        )));
    }
    if !(area_target > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cone_eight area target must be positive, got {area_target}"
        )));
    }
    let lambda = (alpha / 2.0).tan().min(1.0);
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "cone_eight squeeze factor degenerate for alpha = {alpha}"
        )));
    }
    let base = whitney(n_nodes)?;
    let squeezed: Vec<PlanarPoint> = base
        .nodes()
        .iter()
        .map(|p| PlanarPoint::new(p.x, lambda * p.y))
        .collect();
    // resample first, scale last: scaling is area-exact, so the target is hit
    // to rounding precision
    let squeezed = resample_arclength(
        &DiscreteCurve::new(squeezed, Symmetry::FigureEight)?,
        n_nodes,
    )?;
    let area = enclosed_area(&squeezed)?;
    let mu = (area_target / area).sqrt();
    let scaled: Vec<PlanarPoint> = squeezed.nodes().iter().map(|p| *p * mu).collect();
    let curve = DiscreteCurve::new(scaled, Symmetry::FigureEight)?;
    let achieved = enclosed_area(&curve)?;
    if (achieved - area_target).abs() > 1e-6 * area_target {
        return Err(Error::RejectedCurve(format!(
            "cone_eight area {achieved} missed target {area_target}"
        )));
    }
    Ok(curve)
}

/// Adds a sinusoidal normal perturbation of the given mode to a figure
/// eight, mirrored antipodally with the origin nodes pinned. Rejects results
/// that acquire extra self-intersections.
pub fn perturb(curve: &DiscreteCurve, amplitude: f64, mode: u32) -> Result<DiscreteCurve> {
    if curve.symmetry() != Symmetry::FigureEight {
        return Err(Error::InvalidParameter(
            "perturb applies to figure-eight curves".into(),
        ));
    }
    if !(amplitude >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "perturb amplitude must be >= 0, got {amplitude}"
        )));
    }
    if mode < 1 {
        return Err(Error::InvalidParameter("perturb mode must be >= 1".into()));
    }
    let n = curve.n_nodes();
    let frames = compute_frames(curve)?;
    let mut nodes = curve.nodes().to_vec();
    for i in 1..n / 2 {
        let bump = amplitude * (mode as f64 * 2.0 * PI * i as f64 / n as f64).sin();
        nodes[i] = nodes[i] + frames[i].normal * bump;
    }
    nodes[0] = PlanarPoint::ZERO;
    nodes[n / 2] = PlanarPoint::ZERO;
    for i in 1..n / 2 {
        nodes[n - i] = -nodes[i];
    }
    let out = DiscreteCurve::new(nodes, Symmetry::FigureEight)?;
    let crossings = self_intersections(&out);
    let tol = 1e-9 * out.diameter();
    let extra: Vec<_> = crossings.iter().filter(|p| p.norm() > tol).collect();
    if crossings.len() != 1 || !extra.is_empty() {
        return Err(Error::RejectedCurve(format!(
            "perturbation created {} self-intersections ({} away from the origin)",
            crossings.len(),
            extra.len()
        )));
    }
    Ok(out)
}

/// A full line through the origin: one outward ray plus its antipodal copy,
/// leaving a sub-spacing gap at the origin. Used for density calibration.
pub fn full_line(angle: f64, extent: f64, n_nodes: usize) -> Result<DiscreteCurve> {
    if !(extent > 0.0) {
        return Err(Error::InvalidParameter("line extent must be positive".into()));
    }
    if n_nodes < 16 || n_nodes % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "line needs an even node count >= 16, got {n_nodes}"
        )));
    }
    let half = n_nodes / 2;
    let dir = PlanarPoint::new(angle.cos(), angle.sin());
    let inner = extent / half as f64;
    let mut nodes = Vec::with_capacity(n_nodes);
    for j in 0..half {
        let r = inner + (extent - inner) * j as f64 / (half - 1) as f64;
        nodes.push(dir * r);
    }
    for j in 0..half {
        nodes.push(-nodes[j]);
    }
    DiscreteCurve::new(nodes, Symmetry::OpenClamped)
}

/// A full line covered twice (each ray traversed out and back); the doubled
/// configuration for density calibration.
pub fn doubled_line(angle: f64, extent: f64, n_nodes: usize) -> Result<DiscreteCurve> {
    if n_nodes < 32 || n_nodes % 4 != 0 {
        return Err(Error::InvalidParameter(format!(
            "doubled line needs a node count divisible by 4, >= 32, got {n_nodes}"
        )));
    }
    let half = n_nodes / 2;
    let q = half / 2;
    let dir = PlanarPoint::new(angle.cos(), angle.sin());
    let inner = 2.0 * extent / half as f64;
    let step = (extent - inner) / (q - 1) as f64;
    let mut nodes = Vec::with_capacity(n_nodes);
    for k in 0..q {
        nodes.push(dir * (inner + step * k as f64));
    }
    for k in 0..q {
        // return pass offset by half a step so consecutive nodes stay distinct
        nodes.push(dir * (extent - (k as f64 + 0.5) * step));
    }
    for j in 0..half {
        nodes.push(-nodes[j]);
    }
    DiscreteCurve::new(nodes, Symmetry::OpenClamped)
}

#[doc(hidden)]
pub fn doubled_line_for_tests(angle: f64, extent: f64, n_nodes: usize) -> DiscreteCurve {
    doubled_line(angle, extent, n_nodes).unwrap()
}

fn default_record_stride() -> u32 {
    50
}

/// Initial-data description inside a scenario config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Whitney {
        n_nodes: usize,
    },
    Circle {
        radius: f64,
        n_nodes: usize,
    },
    Barrier {
        alpha: f64,
        n_nodes: usize,
        u_margin: f64,
    },
    ConeEight {
        alpha: f64,
        area_target: f64,
        n_nodes: usize,
    },
}

/// Optional normal-mode perturbation applied after generation. A missing
/// mode is drawn uniformly from 1..=8 using the run seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerturbSpec {
    pub amplitude: f64,
    #[serde(default)]
    pub mode: Option<u32>,
}

/// Declarative experiment description ingested from a JSON config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub perturb: Option<PerturbSpec>,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default = "default_record_stride")]
    pub record_stride: u32,
    #[serde(default)]
    pub observables: Option<Vec<String>>,
    pub out_dir: PathBuf,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

impl ScenarioSpec {
    /// Validates ranges, reporting JSON-pointer style paths.
    pub fn validate(&self) -> Result<()> {
        let fail = |path: &str, msg: String| -> Result<()> {
            Err(Error::InvalidParameter(format!("{path}: {msg}")))
        };
        match &self.generator {
            GeneratorSpec::Whitney { n_nodes } => {
                if *n_nodes < 64 || n_nodes % 2 != 0 {
                    return fail(
                        "/generator/n_nodes",
                        format!("needs an even count >= 64, got {n_nodes}"),
                    );
                }
            }
            GeneratorSpec::Circle { radius, n_nodes } => {
                if !(*radius > 0.0) {
                    return fail("/generator/radius", format!("must be positive, got {radius}"));
                }
                if *n_nodes < 16 || n_nodes % 2 != 0 {
                    return fail(
                        "/generator/n_nodes",
                        format!("needs an even count >= 16, got {n_nodes}"),
                    );
                }
            }
            GeneratorSpec::Barrier {
                alpha,
                n_nodes,
                u_margin,
            } => {
                if !(*alpha > 0.0 && *alpha <= PI) {
                    return fail("/generator/alpha", format!("must lie in (0, pi], got {alpha}"));
                }
                if !(*u_margin > 0.0 && *u_margin < alpha / 2.0) {
                    return fail(
                        "/generator/u_margin",
                        format!("must lie in (0, alpha/2), got {u_margin}"),
                    );
                }
                if *n_nodes < 16 || n_nodes % 2 != 0 {
                    return fail(
                        "/generator/n_nodes",
                        format!("needs an even count >= 16, got {n_nodes}"),
                    );
                }
            }
            GeneratorSpec::ConeEight {
                alpha,
                area_target,
                n_nodes,
            } => {
                if !(*alpha > 0.0 && *alpha < PI) {
                    return fail("/generator/alpha", format!("must lie in (0, pi), got {alpha}"));
                }
                if !(*area_target > 0.0) {
                    return fail(
                        "/generator/area_target",
                        format!("must be positive, got {area_target}"),
                    );
                }
                if *n_nodes < 64 || n_nodes % 2 != 0 {
                    return fail(
                        "/generator/n_nodes",
                        format!("needs an even count >= 64, got {n_nodes}"),
                    );
                }
            }
        }
        if let Some(p) = &self.perturb {
            if !(p.amplitude >= 0.0) {
                return fail(
                    "/perturb/amplitude",
                    format!("must be >= 0, got {}", p.amplitude),
                );
            }
            if let Some(m) = p.mode {
                if m < 1 {
                    return fail("/perturb/mode", "must be >= 1".into());
                }
            }
        }
        self.flow
            .validate()
            .map_err(|e| Error::InvalidParameter(format!("/flow: {e}")))?;
        if self.record_stride < 1 {
            return fail("/record_stride", "must be >= 1".into());
        }
        if let Some(names) = &self.observables {
            for name in names {
                if !OBSERVABLE_COLUMNS.contains(&name.as_str()) {
                    return fail(
                        "/observables",
                        format!(
                            "unknown observable {name:?}; known: {}",
                            OBSERVABLE_COLUMNS.join(", ")
                        ),
                    );
                }
            }
        }
        Ok(())
    }

    /// Builds the initial curve, applying any configured perturbation. The
    /// seed only feeds perturbation-mode randomness.
    pub fn build_curve(&self, seed: u64) -> Result<DiscreteCurve> {
        self.validate()?;
        let base = match &self.generator {
            GeneratorSpec::Whitney { n_nodes } => whitney(*n_nodes)?,
            GeneratorSpec::Circle { radius, n_nodes } => circle(*radius, *n_nodes)?,
            GeneratorSpec::Barrier {
                alpha,
                n_nodes,
                u_margin,
            } => barrier_alpha(*alpha, *n_nodes, *u_margin)?,
            GeneratorSpec::ConeEight {
                alpha,
                area_target,
                n_nodes,
            } => cone_eight(*alpha, *area_target, *n_nodes)?,
        };
        match &self.perturb {
            None => Ok(base),
            Some(p) => {
                let mode = match p.mode {
                    Some(m) => m,
                    None => {
                        let mut s = seed;
                        1 + (splitmix64(&mut s) % 8) as u32
                    }
                };
                perturb(&base, p.amplitude, mode)
            }
        }
    }
}
