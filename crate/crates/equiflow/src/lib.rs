//! Numerical laboratory for the equivariant flow of antipodal-invariant
//! planar curves,
//!
//! ```text
//!     dg/dt = k - (n-1) g_perp / |g|^2,
//! ```
//!
//! the reduction of Lagrangian mean curvature flow for equivariant
//! submanifolds of C^n to a planar profile curve. The crate provides the
//! discrete curve representation and its differential geometry
//! ([`geometry`]), explicit time integration with singularity stopping
//! ([`flow`]), the diagnostic functionals used to monitor a run
//! ([`observables`]), tangent-flow rescaling analysis near the collapse
//! ([`rescale`]), initial-data generators ([`scenarios`]) and the on-disk
//! formats ([`io`]).
//!
//! All computations are deterministic: identical inputs produce bit-identical
//! trajectories and diagnostic files. Curves are immutable values, safe to
//! share across threads; the flow owns one `FlowState` at a time and emits
//! immutable snapshots.

// validations use `!(x > 0.0)` so NaN parameters are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops keep the parallel node/frame arrays legible
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod observables;
pub mod rescale;
pub mod scenarios;

pub use error::{Error, Result};
pub use flow::{
    estimate_singular_time, evolve, step, step_with_dt, velocity_field, FlowParams, FlowState,
    SingularTimeEstimate, StopCriteria, Termination, Trajectory,
};
pub use geometry::{
    compute_frames, enforce_antipodal, resample_arclength, self_intersections, singular_term,
    DiscreteCurve, NodeFrame, PlanarPoint, Symmetry,
};
pub use observables::{
    angle_heat_residual, circle_intersections, cone_width, enclosed_area, gaussian_density,
    lagrangian_angle, theta_squared_density, AngleProfile, ObservableRow, ObservableSeries,
};
pub use rescale::{
    analyze_rescaled, annulus_regularity, central_rescale, line_pair_fit, multiplicity_estimate,
    type2_rescale, AnnulusSuprema, LinePairFit, RescaleEntry, RescaledSnapshot, Type2Rescale,
};
pub use scenarios::{
    barrier_alpha, circle, cone_eight, doubled_line, full_line, perturb, whitney, GeneratorSpec,
    PerturbSpec, ScenarioSpec,
};
