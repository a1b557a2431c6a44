//! Discrete antipodal-invariant planar curves and pointwise differential
//! geometry: frames, the regularized singular term, arc-length resampling,
//! symmetry enforcement and the self-intersection scan.

use crate::error::{Error, Result};

/// Relative segment-length floor: segments shorter than this fraction of the
/// curve diameter are treated as degenerate.
pub const DEGENERATE_SPACING_FRACTION: f64 = 1e-14;

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPoint {
    pub x: f64,
    pub y: f64,
}

impl PlanarPoint {
    pub const ZERO: PlanarPoint = PlanarPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: PlanarPoint) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: PlanarPoint) -> f64 {
        self.x * o.y - self.y * o.x
    }

    /// Rotation by +90 degrees.
    pub fn perp(self) -> PlanarPoint {
        PlanarPoint::new(-self.y, self.x)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Polar angle in (-pi, pi].
    pub fn arg(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn rotated(self, angle: f64) -> PlanarPoint {
        let (s, c) = angle.sin_cos();
        PlanarPoint::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Add for PlanarPoint {
    type Output = PlanarPoint;
    fn add(self, o: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for PlanarPoint {
    type Output = PlanarPoint;
    fn sub(self, o: PlanarPoint) -> PlanarPoint {
        PlanarPoint::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Neg for PlanarPoint {
    type Output = PlanarPoint;
    fn neg(self) -> PlanarPoint {
        PlanarPoint::new(-self.x, -self.y)
    }
}

impl std::ops::Mul<f64> for PlanarPoint {
    type Output = PlanarPoint;
    fn mul(self, s: f64) -> PlanarPoint {
        PlanarPoint::new(self.x * s, self.y * s)
    }
}

/// Structural symmetry class of a [`DiscreteCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Symmetry {
    /// Antipodal figure eight: `nodes[N-i] = -nodes[i]`, nodes 0 and N/2
    /// pinned exactly at the origin.
    FigureEight,
    /// Closed curve with `nodes[i+N/2] = -nodes[i]` (origin-centered loops).
    AntipodalClosed,
    /// Two open arcs occupying index ranges `[0, N/2)` and `[N/2, N)`, with
    /// all four arc-end nodes held as fixed boundary data. No symmetry is
    /// validated; generators that want an antipodal pair mirror the second
    /// arc themselves.
    OpenClamped,
}

impl Symmetry {
    pub fn as_str(self) -> &'static str {
        match self {
            Symmetry::FigureEight => "figure_eight",
            Symmetry::AntipodalClosed => "antipodal_closed",
            Symmetry::OpenClamped => "open_clamped",
        }
    }

    pub fn parse(s: &str) -> Option<Symmetry> {
        match s {
            "figure_eight" => Some(Symmetry::FigureEight),
            "antipodal_closed" => Some(Symmetry::AntipodalClosed),
            "open_clamped" => Some(Symmetry::OpenClamped),
            _ => None,
        }
    }

    pub fn is_closed(self) -> bool {
        !matches!(self, Symmetry::OpenClamped)
    }
}

/// Periodic (or clamped-arc) polyline with an antipodal symmetry contract.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteCurve {
    nodes: Vec<PlanarPoint>,
    symmetry: Symmetry,
}

impl DiscreteCurve {
    /// Validates and wraps a node array. Symmetry identities are required to
    /// hold exactly (bitwise negation), which the generators and the flow
    /// maintain by construction.
    pub fn new(nodes: Vec<PlanarPoint>, symmetry: Symmetry) -> Result<Self> {
        let n = nodes.len();
        if n < 16 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "curve needs an even node count >= 16, got {n}"
            )));
        }
        for (i, p) in nodes.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite coordinates at node {i}"
                )));
            }
        }
        let curve = Self { nodes, symmetry };
        curve.check_symmetry()?;
        curve.check_spacing()?;
        Ok(curve)
    }

    fn check_symmetry(&self) -> Result<()> {
        let n = self.nodes.len();
        match self.symmetry {
            Symmetry::FigureEight => {
                for i in [0, n / 2] {
                    if self.nodes[i] != PlanarPoint::ZERO {
                        return Err(Error::SymmetryBroken {
                            node: i,
                            detail: "origin node not pinned at (0,0)".into(),
                        });
                    }
                }
                for i in 1..n / 2 {
                    if self.nodes[n - i] != -self.nodes[i] {
                        return Err(Error::SymmetryBroken {
                            node: i,
                            detail: "nodes[N-i] != -nodes[i]".into(),
                        });
                    }
                }
            }
            Symmetry::AntipodalClosed => {
                for i in 0..n / 2 {
                    if self.nodes[i + n / 2] != -self.nodes[i] {
                        return Err(Error::SymmetryBroken {
                            node: i,
                            detail: "nodes[i+N/2] != -nodes[i]".into(),
                        });
                    }
                }
            }
            Symmetry::OpenClamped => {}
        }
        Ok(())
    }

    fn check_spacing(&self) -> Result<()> {
        let limit = DEGENERATE_SPACING_FRACTION * self.diameter();
        for (i, j) in self.segments() {
            let d = (self.nodes[j] - self.nodes[i]).norm();
            if d <= limit {
                return Err(Error::DegenerateSpacing {
                    node: i,
                    length: d,
                    limit,
                });
            }
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    pub fn nodes(&self) -> &[PlanarPoint] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> PlanarPoint {
        self.nodes[i]
    }

    /// Index pair pinned at the origin, present only for figure eights.
    pub fn origin_indices(&self) -> Option<(usize, usize)> {
        match self.symmetry {
            Symmetry::FigureEight => Some((0, self.nodes.len() / 2)),
            _ => None,
        }
    }

    pub fn is_origin_node(&self, i: usize) -> bool {
        self.origin_indices()
            .map(|(a, b)| i == a || i == b)
            .unwrap_or(false)
    }

    /// Nodes held fixed by the flow (arc endpoints of open curves).
    pub fn is_clamped_node(&self, i: usize) -> bool {
        match self.symmetry {
            Symmetry::OpenClamped => {
                let n = self.nodes.len();
                i == 0 || i == n / 2 - 1 || i == n / 2 || i == n - 1
            }
            _ => false,
        }
    }

    /// Previous node along the polyline, `None` at an arc start.
    pub fn prev_index(&self, i: usize) -> Option<usize> {
        let n = self.nodes.len();
        match self.symmetry {
            Symmetry::OpenClamped => {
                if i == 0 || i == n / 2 {
                    None
                } else {
                    Some(i - 1)
                }
            }
            _ => Some((i + n - 1) % n),
        }
    }

    /// Next node along the polyline, `None` at an arc end.
    pub fn next_index(&self, i: usize) -> Option<usize> {
        let n = self.nodes.len();
        match self.symmetry {
            Symmetry::OpenClamped => {
                if i == n / 2 - 1 || i == n - 1 {
                    None
                } else {
                    Some(i + 1)
                }
            }
            _ => Some((i + 1) % n),
        }
    }

    /// All polyline segments as index pairs `(i, next(i))`.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        (0..self.nodes.len())
            .filter_map(|i| self.next_index(i).map(|j| (i, j)))
            .collect()
    }

    /// Index ranges of the connected components: two lobes for a figure
    /// eight, the full loop for a closed curve, two arcs for an open pair.
    pub fn components(&self) -> Vec<std::ops::Range<usize>> {
        let n = self.nodes.len();
        match self.symmetry {
            Symmetry::FigureEight => vec![1..n / 2, n / 2 + 1..n],
            Symmetry::AntipodalClosed => Vec::from([0..n]),
            Symmetry::OpenClamped => vec![0..n / 2, n / 2..n],
        }
    }

    pub fn arc_length(&self) -> f64 {
        self.segments()
            .iter()
            .map(|&(i, j)| (self.nodes[j] - self.nodes[i]).norm())
            .sum()
    }

    pub fn min_segment_length(&self) -> f64 {
        self.segments()
            .iter()
            .map(|&(i, j)| (self.nodes[j] - self.nodes[i]).norm())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_spacing(&self) -> f64 {
        let segs = self.segments();
        self.arc_length() / segs.len() as f64
    }

    pub fn max_radius(&self) -> f64 {
        self.nodes.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Maximal node distance. Antipodal curves realize it as twice the
    /// maximal radius; open arc pairs produced by the generators do too.
    pub fn diameter(&self) -> f64 {
        2.0 * self.max_radius()
    }

    pub(crate) fn with_nodes(&self, nodes: Vec<PlanarPoint>) -> Result<DiscreteCurve> {
        DiscreteCurve::new(nodes, self.symmetry)
    }
}

/// Per-node tangent frame, curvature vector and quadrature weight.
#[derive(Debug, Clone, Copy)]
pub struct NodeFrame {
    /// Unit tangent (centered chord direction).
    pub tangent: PlanarPoint,
    /// Unit normal, tangent rotated by +90 degrees.
    pub normal: PlanarPoint,
    /// Curvature vector: normal projection of the arc-weighted second
    /// difference. The projection keeps it orthogonal to the tangent on
    /// nonuniform spacing as well.
    pub curvature: PlanarPoint,
    /// Half-sum of the adjacent segment lengths.
    pub arc_weight: f64,
}

/// Computes tangents, normals, curvature vectors and arc weights for every
/// node. Arc ends of open curves get one-sided tangents and zero curvature.
pub fn compute_frames(curve: &DiscreteCurve) -> Result<Vec<NodeFrame>> {
    let n = curve.n_nodes();
    let nodes = curve.nodes();
    let limit = DEGENERATE_SPACING_FRACTION * curve.diameter();
    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let frame = match (curve.prev_index(i), curve.next_index(i)) {
            (Some(p), Some(q)) => {
                let dp = (nodes[i] - nodes[p]).norm();
                let dn = (nodes[q] - nodes[i]).norm();
                if dp <= limit || dn <= limit {
                    return Err(Error::DegenerateSpacing {
                        node: i,
                        length: dp.min(dn),
                        limit,
                    });
                }
                let chord = nodes[q] - nodes[p];
                let clen = chord.norm();
                if clen <= limit {
                    return Err(Error::DegenerateSpacing {
                        node: i,
                        length: clen,
                        limit,
                    });
                }
                let tangent = chord * (1.0 / clen);
                let normal = tangent.perp();
                let fwd = (nodes[q] - nodes[i]) * (1.0 / dn);
                let bwd = (nodes[i] - nodes[p]) * (1.0 / dp);
                let k_raw = (fwd - bwd) * (2.0 / (dp + dn));
                let curvature = normal * k_raw.dot(normal);
                NodeFrame {
                    tangent,
                    normal,
                    curvature,
                    arc_weight: 0.5 * (dp + dn),
                }
            }
            (None, Some(q)) => one_sided_frame(nodes[i], nodes[q], i, limit, false)?,
            (Some(p), None) => one_sided_frame(nodes[p], nodes[i], i, limit, true)?,
            (None, None) => unreachable!("isolated node"),
        };
        frames.push(frame);
    }
    Ok(frames)
}

fn one_sided_frame(
    a: PlanarPoint,
    b: PlanarPoint,
    node: usize,
    limit: f64,
    _at_end: bool,
) -> Result<NodeFrame> {
    let d = (b - a).norm();
    if d <= limit {
        return Err(Error::DegenerateSpacing {
            node,
            length: d,
            limit,
        });
    }
    let tangent = (b - a) * (1.0 / d);
    Ok(NodeFrame {
        tangent,
        normal: tangent.perp(),
        curvature: PlanarPoint::ZERO,
        arc_weight: 0.5 * d,
    })
}

/// Kernel of the singular velocity term at a single node.
///
/// Returns `(n-1) <g,nu> nu / |g|^2`, except that an origin node takes the
/// limit value `(n-1)/2 k` and positions inside the blend radius take the
/// linear blend between the two, weighted by `|g| / blend_radius`.
pub fn singular_term_at(
    position: PlanarPoint,
    frame: &NodeFrame,
    is_origin: bool,
    n: u32,
    blend_radius: f64,
) -> PlanarPoint {
    let coef = (n - 1) as f64;
    let half_limit = frame.curvature * (0.5 * coef);
    if is_origin {
        return half_limit;
    }
    let r = position.norm();
    let raw = frame.normal * (coef * position.dot(frame.normal) / position.norm_sq());
    if r >= blend_radius {
        raw
    } else {
        let w = r / blend_radius;
        raw * w + half_limit * (1.0 - w)
    }
}

/// Regularized singular term `(n-1) g_perp / |g|^2` at node `node_index`.
pub fn singular_term(
    curve: &DiscreteCurve,
    frames: &[NodeFrame],
    node_index: usize,
    n: u32,
    blend_radius: f64,
) -> Result<PlanarPoint> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    if !(blend_radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "blend radius must be positive, got {blend_radius}"
        )));
    }
    let is_origin = curve.is_origin_node(node_index);
    let pos = curve.node(node_index);
    if !is_origin && pos.norm_sq() == 0.0 {
        return Err(Error::SymmetryBroken {
            node: node_index,
            detail: "node at the origin is not flagged as an origin node".into(),
        });
    }
    Ok(singular_term_at(
        pos,
        &frames[node_index],
        is_origin,
        n,
        blend_radius,
    ))
}

/// Equal arc-length positions along an open polyline, endpoints included.
fn polyline_equal_arc(points: &[PlanarPoint], count_out: usize) -> Vec<PlanarPoint> {
    debug_assert!(points.len() >= 2 && count_out >= 2);
    let mut cum = Vec::with_capacity(points.len());
    cum.push(0.0);
    for w in points.windows(2) {
        let d = (w[1] - w[0]).norm();
        cum.push(cum.last().unwrap() + d);
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(count_out);
    out.push(points[0]);
    let mut seg = 0usize;
    for j in 1..count_out - 1 {
        let target = total * j as f64 / (count_out - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        out.push(points[seg] + (points[seg + 1] - points[seg]) * t);
    }
    out.push(*points.last().unwrap());
    out
}

const RESAMPLE_TOL: f64 = 1e-13;
const RESAMPLE_MAX_PASSES: usize = 64;

fn segment_spread(points: &[PlanarPoint]) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    for w in points.windows(2) {
        let d = (w[1] - w[0]).norm();
        min = min.min(d);
        max = max.max(d);
    }
    if max == 0.0 {
        0.0
    } else {
        (max - min) / max
    }
}

/// Iterates equal-arc placement to its fixed point, an open polyline with
/// equal segment lengths. A single pass equalizes positions along the input
/// polygon but not the chords between them; iterating makes the operation
/// idempotent. Already-uniform input is returned unchanged.
fn equalize_open(points: &[PlanarPoint], count_out: usize) -> Vec<PlanarPoint> {
    let mut current = if points.len() == count_out {
        points.to_vec()
    } else {
        polyline_equal_arc(points, count_out)
    };
    for _ in 0..RESAMPLE_MAX_PASSES {
        if segment_spread(&current) < RESAMPLE_TOL {
            break;
        }
        current = polyline_equal_arc(&current, count_out);
    }
    current
}

/// Redistributes nodes to equal arc-length spacing by piecewise-linear
/// interpolation. Figure-eight origin pins stay exactly at the origin and the
/// second half is mirrored so the symmetry holds bitwise. Open arcs keep
/// their clamped endpoints and are resampled independently.
pub fn resample_arclength(curve: &DiscreteCurve, n_out: usize) -> Result<DiscreteCurve> {
    if n_out < 16 || n_out % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "resample target must be an even count >= 16, got {n_out}"
        )));
    }
    let n = curve.n_nodes();
    let nodes = curve.nodes();
    let half_out = n_out / 2;
    let new_nodes = match curve.symmetry() {
        Symmetry::FigureEight => {
            let lobe = &nodes[0..=n / 2];
            let mut res = equalize_open(lobe, half_out + 1);
            res[0] = PlanarPoint::ZERO;
            res[half_out] = PlanarPoint::ZERO;
            let mut out = vec![PlanarPoint::ZERO; n_out];
            out[..=half_out].copy_from_slice(&res);
            for i in 1..half_out {
                out[n_out - i] = -out[i];
            }
            out
        }
        Symmetry::AntipodalClosed => {
            let mut half: Vec<PlanarPoint> = nodes[0..=n / 2].to_vec();
            half[n / 2] = -nodes[0];
            let res = equalize_open(&half, half_out + 1);
            let mut out = vec![PlanarPoint::ZERO; n_out];
            out[..half_out].copy_from_slice(&res[..half_out]);
            for i in 0..half_out {
                out[i + half_out] = -out[i];
            }
            out
        }
        Symmetry::OpenClamped => {
            let mut out = Vec::with_capacity(n_out);
            out.extend(equalize_open(&nodes[0..n / 2], half_out));
            out.extend(equalize_open(&nodes[n / 2..n], half_out));
            out
        }
    };
    DiscreteCurve::new(new_nodes, curve.symmetry())
}

/// Replaces each antipodal pair by its antisymmetrized average and pins the
/// origin nodes, making the symmetry identities hold bitwise. Idempotent.
pub fn enforce_antipodal(curve: &DiscreteCurve) -> Result<DiscreteCurve> {
    let n = curve.n_nodes();
    let mut nodes = curve.nodes().to_vec();
    match curve.symmetry() {
        Symmetry::FigureEight => {
            nodes[0] = PlanarPoint::ZERO;
            nodes[n / 2] = PlanarPoint::ZERO;
            for i in 1..n / 2 {
                let a = (nodes[i] - nodes[n - i]) * 0.5;
                nodes[i] = a;
                nodes[n - i] = -a;
            }
        }
        Symmetry::AntipodalClosed => {
            for i in 0..n / 2 {
                let a = (nodes[i] - nodes[i + n / 2]) * 0.5;
                nodes[i] = a;
                nodes[i + n / 2] = -a;
            }
        }
        Symmetry::OpenClamped => {
            return Err(Error::InvalidParameter(
                "enforce_antipodal applies to figure-eight and antipodal-closed curves".into(),
            ))
        }
    }
    curve.with_nodes(nodes)
}

/// Self-intersection points of the polyline, deduplicated. Adjacent segments
/// (sharing a node index) are skipped; endpoint touches at shared positions,
/// such as the pinned origin crossing, count once.
pub fn self_intersections(curve: &DiscreteCurve) -> Vec<PlanarPoint> {
    let nodes = curve.nodes();
    let segs = curve.segments();
    let tol = 1e-9 * curve.diameter().max(1e-300);
    let mut points: Vec<PlanarPoint> = Vec::new();
    for a in 0..segs.len() {
        let (i0, i1) = segs[a];
        for &(j0, j1) in &segs[a + 1..] {
            if i0 == j0 || i0 == j1 || i1 == j0 || i1 == j1 {
                continue;
            }
            let p = nodes[i0];
            let r = nodes[i1] - nodes[i0];
            let q = nodes[j0];
            let s = nodes[j1] - nodes[j0];
            let denom = r.cross(s);
            if denom == 0.0 {
                continue;
            }
            let qp = q - p;
            let t = qp.cross(s) / denom;
            let u = qp.cross(r) / denom;
            let eps = 1e-12;
            if t >= -eps && t <= 1.0 + eps && u >= -eps && u <= 1.0 + eps {
                let hit = p + r * t;
                if !points.iter().any(|c| (*c - hit).norm() < tol) {
                    points.push(hit);
                }
            }
        }
    }
    points
}
