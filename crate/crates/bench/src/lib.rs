//! Fixtures shared by the pipeline benchmarks.

use rigidflow_core::{build_model, ModelSpec, PlanKind, SamplePlan, Scene};

/// A catalog scene with a rotating flow.
pub fn rotating_scene(metric: &str, dim: usize, omega: f64) -> Scene {
    build_model(&ModelSpec::new(metric, dim).flow("rotating").flow_param("omega", omega)).expect("catalog scene")
}

/// `count` seeded points in the scene's recommended domain.
pub fn sample_points(scene: &Scene, count: usize) -> Vec<Vec<f64>> {
    SamplePlan::new(PlanKind::Random(count), scene.domain.clone().expect("model domain"), 42)
        .points()
        .expect("points")
}
