//! Built-in metrics and flows.
//!
//! Metrics use coordinates `t, x1, …, x{n-1}`; `fermi_rigid` replaces the
//! metric and names the time coordinate `tau`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Params;
use crate::geometry::{DomainBox, Scene};

const MARGIN: f64 = 0.95;
const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Metric,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDescriptor {
    pub name: String,
    pub default: f64,
    pub min: f64,
    pub max: f64,
}

/// Verdicts the pipeline is expected to reproduce for a metric × flow pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectedVerdicts {
    pub rigid: bool,
    pub rotational: bool,
    pub killing: bool,
    /// Constant curvature, `None` when the metric has none.
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub name: String,
    pub kind: ModelKind,
    pub min_dim: usize,
    pub max_dim: usize,
    pub params: Vec<ParamDescriptor>,
    /// Metrics a flow can be combined with; empty means all.
    pub metrics: Vec<String>,
    pub summary: String,
    /// For metrics: curvature; for flows: kinematic expectations (`kappa` unset).
    pub expected: Option<ExpectedVerdicts>,
}

fn param(name: &str, default: f64, min: f64, max: f64) -> ParamDescriptor {
    ParamDescriptor {
        name: name.into(),
        default,
        min,
        max,
    }
}

const METRICS: [&str; 5] = ["minkowski", "constant_curvature", "de_sitter", "anti_de_sitter", "einstein_static"];
const FLOWS: [&str; 5] = ["static", "rotating", "milne", "fermi_rigid", "perturbed_rotating"];

fn descriptor(name: &str) -> Option<ModelDescriptor> {
    let metric = |min_dim, params, summary: &str, kappa| ModelDescriptor {
        name: name.into(),
        kind: ModelKind::Metric,
        min_dim,
        max_dim: MAX_DIM,
        params,
        metrics: vec![],
        summary: summary.into(),
        expected: Some(ExpectedVerdicts {
            rigid: true,
            rotational: false,
            killing: true,
            kappa,
        }),
    };
    let flow = |min_dim, params, metrics: &[&str], summary: &str, rigid, rotational, killing| ModelDescriptor {
        name: name.into(),
        kind: ModelKind::Flow,
        min_dim,
        max_dim: MAX_DIM,
        params,
        metrics: metrics.iter().map(|s| s.to_string()).collect(),
        summary: summary.into(),
        expected: Some(ExpectedVerdicts {
            rigid,
            rotational,
            killing,
            kappa: None,
        }),
    };
    let rot_params = || {
        vec![
            param("omega", 0.5, -10.0, 10.0),
            param("plane_a", 1.0, 1.0, (MAX_DIM - 1) as f64),
            param("plane_b", 2.0, 1.0, (MAX_DIM - 1) as f64),
        ]
    };
    Some(match name {
        "minkowski" => metric(2, vec![], "g = diag(-1, 1, ..., 1)", Some(0.0)),
        "constant_curvature" => metric(
            3,
            vec![param("kappa", 1.0, -10.0, 10.0)],
            "static chart g00 = -(1 - kappa rho^2), gij = dij + kappa xi xj / (1 - kappa rho^2)",
            None,
        ),
        "de_sitter" => metric(3, vec![], "constant_curvature with kappa = 1", Some(1.0)),
        "anti_de_sitter" => metric(3, vec![], "constant_curvature with kappa = -1", Some(-1.0)),
        "einstein_static" => metric(3, vec![], "g = -dt^2 + 4 dij / (1 + rho^2)^2", None),
        "static" => flow(2, vec![], &[], "V = d_t", true, false, true),
        "rotating" => flow(3, rot_params(), &[], "V = d_t + omega (x_a d_b - x_b d_a)", true, true, true),
        "milne" => flow(2, vec![], &["minkowski"], "V = t d_t + x1 d_x1", false, false, false),
        "fermi_rigid" => flow(
            2,
            vec![param("a0", 0.3, -10.0, 10.0), param("a1", 0.1, -10.0, 10.0)],
            &["minkowski"],
            "metric -(1 + (a0 + a1 sin tau) x1)^2 dtau^2 + dij, V = d_tau",
            true,
            false,
            false,
        ),
        "perturbed_rotating" => {
            let mut p = rot_params();
            p.push(param("epsilon", 0.1, -10.0, 10.0));
            flow(3, p, &[], "rotating plus epsilon x_a^2 d_b", false, true, false)
        }
        _ => return None,
    })
}

/// The full catalog, metrics first.
pub fn list_models() -> Vec<ModelDescriptor> {
    METRICS.iter().chain(FLOWS.iter()).filter_map(|n| descriptor(n)).collect()
}

/// Expected verdicts for a metric × flow pair.
pub fn expected_verdicts(spec: &ModelSpec) -> Result<ExpectedVerdicts> {
    let m = descriptor(&spec.metric).ok_or_else(|| Error::UnknownModel(spec.metric.clone()))?;
    let f = descriptor(&spec.flow).ok_or_else(|| Error::UnknownModel(spec.flow.clone()))?;
    let kappa = match spec.metric.as_str() {
        "constant_curvature" => Some(spec.param_or(&m, "kappa")),
        _ => m.expected.and_then(|e| e.kappa),
    };
    let fe = f.expected.unwrap_or(ExpectedVerdicts {
        rigid: false,
        rotational: false,
        killing: false,
        kappa: None,
    });
    let omega = if f.params.iter().any(|p| p.name == "omega") {
        spec.param_or(&f, "omega")
    } else {
        0.0
    };
    let (kappa, killing) = if spec.flow == "fermi_rigid" {
        (Some(0.0), spec.param_or(&f, "a1") == 0.0)
    } else {
        (kappa, fe.killing)
    };
    Ok(ExpectedVerdicts {
        rigid: fe.rigid,
        rotational: fe.rotational && omega != 0.0,
        killing,
        kappa,
    })
}

/// A metric name, a flow name and their parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub metric: String,
    pub dim: usize,
    pub params: Params,
    pub flow: String,
    pub flow_params: Params,
}

impl ModelSpec {
    pub fn new(metric: impl Into<String>, dim: usize) -> ModelSpec {
        ModelSpec {
            metric: metric.into(),
            dim,
            params: Params::new(),
            flow: "static".into(),
            flow_params: Params::new(),
        }
    }

    pub fn param(mut self, name: &str, value: f64) -> ModelSpec {
        self.params.insert(name.into(), value);
        self
    }

    pub fn flow(mut self, name: impl Into<String>) -> ModelSpec {
        self.flow = name.into();
        self
    }

    pub fn flow_param(mut self, name: &str, value: f64) -> ModelSpec {
        self.flow_params.insert(name.into(), value);
        self
    }

    fn param_or(&self, d: &ModelDescriptor, name: &str) -> f64 {
        let given = match d.kind {
            ModelKind::Metric => self.params.get(name),
            ModelKind::Flow => self.flow_params.get(name),
        };
        given
            .copied()
            .or_else(|| d.params.iter().find(|p| p.name == name).map(|p| p.default))
            .unwrap_or(0.0)
    }
}

fn validate(d: &ModelDescriptor, given: &Params, dim: usize) -> Result<Params> {
    if dim < d.min_dim || dim > d.max_dim {
        return Err(Error::ParamOutOfRange {
            name: "dim".into(),
            value: dim as f64,
            reason: format!("`{}` needs dimension in {}..={}", d.name, d.min_dim, d.max_dim),
        });
    }
    for k in given.keys() {
        if !d.params.iter().any(|p| &p.name == k) {
            return Err(Error::ParamOutOfRange {
                name: k.clone(),
                value: given[k],
                reason: format!("`{}` has no parameter `{k}`", d.name),
            });
        }
    }
    let mut out = Params::new();
    for p in &d.params {
        let v = given.get(&p.name).copied().unwrap_or(p.default);
        if !(v >= p.min && v <= p.max) {
            return Err(Error::ParamOutOfRange {
                name: p.name.clone(),
                value: v,
                reason: format!("valid range is [{}, {}]", p.min, p.max),
            });
        }
        out.insert(p.name.clone(), v);
    }
    Ok(out)
}

fn rho2(n: usize) -> String {
    let terms: Vec<String> = (1..n).map(|i| format!("x{i}^2")).collect();
    format!("({})", terms.join(" + "))
}

/// Upper-triangle rows of a diagonal metric.
fn diagonal(n: usize, g00: &str, gii: &str) -> Vec<Vec<String>> {
    (0..n)
        .map(|m| {
            (m..n)
                .map(|nu| match (m, nu) {
                    (0, 0) => g00.to_string(),
                    (a, b) if a == b => gii.to_string(),
                    _ => "0".to_string(),
                })
                .collect()
        })
        .collect()
}

fn plane(params: &Params, n: usize) -> Result<(usize, usize)> {
    let get = |name: &str| -> Result<usize> {
        let v = params[name];
        if v.fract() != 0.0 || v < 1.0 || v > (n - 1) as f64 {
            return Err(Error::ParamOutOfRange {
                name: name.into(),
                value: v,
                reason: format!("must be a spatial coordinate index in 1..={}", n - 1),
            });
        }
        Ok(v as usize)
    };
    let (a, b) = (get("plane_a")?, get("plane_b")?);
    if a == b {
        return Err(Error::ParamOutOfRange {
            name: "plane_b".into(),
            value: b as f64,
            reason: "rotation plane needs two distinct axes".into(),
        });
    }
    Ok((a, b))
}

/// Builds the scene with its recommended sample domain.
pub fn build_model(spec: &ModelSpec) -> Result<Scene> {
    let n = spec.dim;
    let md = descriptor(&spec.metric)
        .filter(|d| d.kind == ModelKind::Metric)
        .ok_or_else(|| Error::UnknownModel(spec.metric.clone()))?;
    let fd = descriptor(&spec.flow)
        .filter(|d| d.kind == ModelKind::Flow)
        .ok_or_else(|| Error::UnknownModel(spec.flow.clone()))?;
    if !fd.metrics.is_empty() && !fd.metrics.contains(&spec.metric) {
        return Err(Error::ParamOutOfRange {
            name: "flow".into(),
            value: f64::NAN,
            reason: format!("`{}` is only defined on {}", fd.name, fd.metrics.join(", ")),
        });
    }
    let mut params = validate(&md, &spec.params, n)?;
    let fparams = validate(&fd, &spec.flow_params, n)?;

    let time = if spec.flow == "fermi_rigid" { "tau" } else { "t" };
    let coords: Vec<String> = std::iter::once(time.to_string())
        .chain((1..n).map(|i| format!("x{i}")))
        .collect();

    let (metric, kappa) = match spec.metric.as_str() {
        "minkowski" => (diagonal(n, "-1", "1"), Some(0.0)),
        "constant_curvature" | "de_sitter" | "anti_de_sitter" => {
            let k = match spec.metric.as_str() {
                "de_sitter" => 1.0,
                "anti_de_sitter" => -1.0,
                _ => params["kappa"],
            };
            params.insert("kappa".into(), k);
            let r2 = rho2(n);
            let lapse = format!("(1 - kappa*{r2})");
            let rows = (0..n)
                .map(|m| {
                    (m..n)
                        .map(|nu| match (m, nu) {
                            (0, 0) => format!("-{lapse}"),
                            (0, _) => "0".to_string(),
                            (a, b) if a == b => format!("1 + kappa*x{a}^2/{lapse}"),
                            (a, b) => format!("kappa*x{a}*x{b}/{lapse}"),
                        })
                        .collect()
                })
                .collect();
            (rows, Some(k))
        }
        "einstein_static" => (diagonal(n, "-1", &format!("4/(1 + {})^2", rho2(n))), None),
        other => return Err(Error::UnknownModel(other.into())),
    };

    let mut flow: Vec<String> = std::iter::once("1".to_string())
        .chain((1..n).map(|_| "0".to_string()))
        .collect();
    let mut metric = metric;
    let mut kappa = kappa;
    match spec.flow.as_str() {
        "static" => {}
        "rotating" | "perturbed_rotating" => {
            let (a, b) = plane(&fparams, n)?;
            params.insert("omega".into(), fparams["omega"]);
            flow[a] = format!("-omega*x{b}");
            flow[b] = format!("omega*x{a}");
            if spec.flow == "perturbed_rotating" {
                params.insert("epsilon".into(), fparams["epsilon"]);
                flow[b] = format!("omega*x{a} + epsilon*x{a}^2");
            }
        }
        "milne" => {
            flow[0] = "t".into();
            flow[1] = "x1".into();
        }
        "fermi_rigid" => {
            params.insert("a0".into(), fparams["a0"]);
            params.insert("a1".into(), fparams["a1"]);
            metric[0][0] = "-(1 + (a0 + a1*sin(tau))*x1)^2".into();
            kappa = Some(0.0);
        }
        other => return Err(Error::UnknownModel(other.into())),
    }

    let domain = recommended_domain(spec, n, kappa, &fparams);
    let name = format!("{}+{}", spec.metric, spec.flow);
    Scene::new(name, coords, &metric, &flow, params, kappa, Some(domain))
}

/// Box of half-width `h` in space, `t ∈ [-1, 1]`, shrunk by a 5% margin
/// inside the timelike and chart-validity regions.
fn recommended_domain(spec: &ModelSpec, n: usize, kappa: Option<f64>, fparams: &Params) -> DomainBox {
    let omega = fparams.get("omega").copied().unwrap_or(0.0).abs();
    let eps = fparams.get("epsilon").copied().unwrap_or(0.0).abs();
    let s = (n - 1) as f64;
    // Euclidean speed per unit half-width of the spatial flow part at a box corner
    let speed = omega * 2f64.sqrt() + eps;
    let h = match spec.flow.as_str() {
        "milne" => {
            let mut min = vec![-0.5; n];
            let mut max = vec![0.5; n];
            min[0] = 1.5;
            max[0] = 2.0;
            return DomainBox { min, max };
        }
        "fermi_rigid" => {
            let a = fparams["a0"].abs() + fparams["a1"].abs();
            if a > 0.0 {
                (MARGIN / a).min(1.0)
            } else {
                1.0
            }
        }
        _ => match spec.metric.as_str() {
            "einstein_static" => {
                // 4 r^2/(1+rho^2)^2 <= min(4 r^2, 1)
                if omega + eps < MARGIN {
                    1.0
                } else {
                    MARGIN / (2.0 * speed)
                }
            }
            _ => {
                let k = kappa.unwrap_or(0.0).max(0.0);
                let denom = (k * s + speed * speed).sqrt();
                if denom > 0.0 {
                    (MARGIN / denom).min(1.0)
                } else {
                    1.0
                }
            }
        },
    };
    let mut min = vec![-h; n];
    let mut max = vec![h; n];
    min[0] = -1.0;
    max[0] = 1.0;
    DomainBox { min, max }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_sizes() {
        let all = list_models();
        assert!(all.iter().filter(|d| d.kind == ModelKind::Metric).count() >= 5);
        assert!(all.iter().filter(|d| d.kind == ModelKind::Flow).count() >= 5);
    }

    #[test]
    fn unknown_and_invalid() {
        assert!(matches!(build_model(&ModelSpec::new("schwarzschild", 4)), Err(Error::UnknownModel(_))));
        assert!(matches!(
            build_model(&ModelSpec::new("de_sitter", 4).flow("milne")),
            Err(Error::ParamOutOfRange { .. })
        ));
        assert!(matches!(
            build_model(&ModelSpec::new("minkowski", 4).flow("rotating").flow_param("plane_b", 1.0)),
            Err(Error::ParamOutOfRange { .. })
        ));
        assert!(matches!(
            build_model(&ModelSpec::new("minkowski", 4).param("kappa", 1.0)),
            Err(Error::ParamOutOfRange { .. })
        ));
        assert!(matches!(build_model(&ModelSpec::new("minkowski", 1)), Err(Error::ParamOutOfRange { .. })));
    }

    #[test]
    fn domains() {
        let s = build_model(&ModelSpec::new("de_sitter", 5).flow("rotating").flow_param("omega", 0.5)).unwrap();
        let d = s.domain.unwrap();
        let h = d.max[1];
        assert!((h - 0.95 / 4.5f64.sqrt()).abs() < 1e-15);
        let s = build_model(&ModelSpec::new("minkowski", 4).flow("rotating").flow_param("omega", 0.5)).unwrap();
        assert_eq!(s.domain.unwrap().max[1], 1.0);
    }
}
