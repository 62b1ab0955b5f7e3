//! Adapted-frame kinematics of timelike flows on pseudo-Riemannian metrics
//! given as coordinate expressions: Born rigidity, isometry criteria and
//! numerical checks of the frame identities.

pub mod error;
pub mod expr;
pub mod frame;
pub mod geometry;
pub mod identities;
pub mod jet;
pub mod kinematics;
mod linalg;
pub mod models;
pub mod report;
pub mod sampling;
pub mod scene_file;

pub use error::{Error, ExprError, Result};
pub use expr::{eval_jet2, finite_difference_oracle, parse_expression, Expr, Params};
pub use frame::{adapt_frame, base_curvature, covariant_d_derivatives, DSample, FrameSample, PointGeometry};
pub use geometry::{
    christoffel, constant_curvature_residual, killing_verdict, lie_derivative_metric, riemann, sample_metric,
    DomainBox, Scene,
};
pub use identities::{IdentityResult, Suite};
pub use jet::{Jet1, Jet2, Scalar};
pub use kinematics::{
    decompose_m, herglotz_noether_report, isometry_via_criteria, rigidity_verdict, rotational_predicate,
    timelike_domain_check, Conclusion, KinematicInvariants, TheoremReport, Tolerances, Verdict,
};
pub use models::{build_model, list_models, ModelDescriptor, ModelSpec};
pub use report::{emit_report, parse_report, run_analysis, Format, Report};
pub use sampling::{PlanKind, SamplePlan};
pub use scene_file::{load_scene, parse_scene};

