//! Coordinate-level pseudo-Riemannian machinery: metric samples, the
//! Levi-Civita connection, the Riemann tensor, the Lie derivative of the
//! metric along the flow and the constant-curvature residual.
//!
//! Index conventions: `dg[[a, m, n]] = ∂_a g_{mn}`,
//! `ddg[[a, b, m, n]] = ∂_a ∂_b g_{mn}`, `gamma[[m, n, r]] = Γ^m_{nr}`,
//! `dgamma[[a, m, n, r]] = ∂_a Γ^m_{nr}` and `R[[m, n, r, s]] = R^m_{nrs}`
//! with `R(∂_r, ∂_s)∂_n = R^m_{nrs} ∂_m`.

use ndarray::{Array2, Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{parse_expression, Expr, Params};
use crate::jet::{sym_index, Jet1, Jet2, Scalar};
use crate::kinematics::Verdict;
use crate::linalg::Lu;

/// `|det g|` at or below this is treated as degenerate.
pub const EPS_NONDEGENERATE: f64 = 1e-10;
/// `g(V,V)` must be below `-EPS_TIMELIKE`.
pub const EPS_TIMELIKE: f64 = 1e-10;

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl DomainBox {
    pub fn dim(&self) -> usize {
        self.min.len()
    }
}

/// A metric, a flow and their parameter bindings, all as coordinate expressions.
#[derive(Debug, Clone)]
pub struct Scene {
    pub name: String,
    pub coords: Vec<String>,
    /// Upper triangle, packed with [`sym_index`]; `(m, n)` and `(n, m)` share one entry.
    metric: Vec<Expr>,
    metric_text: Vec<String>,
    pub flow: Vec<Expr>,
    flow_text: Vec<String>,
    pub params: Params,
    /// Declared constant curvature, when the scene claims one.
    pub kappa: Option<f64>,
    pub domain: Option<DomainBox>,
}

impl Scene {
    /// Parses a scene from expression texts. `metric_upper[m]` lists the
    /// components `g_{m m}, g_{m m+1}, …, g_{m n-1}`.
    pub fn new(
        name: impl Into<String>,
        coords: Vec<String>,
        metric_upper: &[Vec<String>],
        flow: &[String],
        params: Params,
        kappa: Option<f64>,
        domain: Option<DomainBox>,
    ) -> Result<Scene> {
        let n = coords.len();
        if n < 2 {
            return Err(Error::schema("dimension", "need at least two coordinates"));
        }
        for (i, c) in coords.iter().enumerate() {
            if coords[..i].contains(c) {
                return Err(Error::schema("coordinates", format!("duplicate coordinate `{c}`")));
            }
            if params.contains_key(c) {
                return Err(Error::schema("parameters", format!("`{c}` is also a coordinate")));
            }
        }
        if metric_upper.len() != n {
            return Err(Error::schema("metric", format!("expected {n} rows, found {}", metric_upper.len())));
        }
        if flow.len() != n {
            return Err(Error::schema("flow", format!("expected {n} components, found {}", flow.len())));
        }
        if let Some(d) = &domain {
            if d.min.len() != n || d.max.len() != n {
                return Err(Error::schema("domain", format!("bounds must have {n} entries")));
            }
            if d.min.iter().zip(&d.max).any(|(a, b)| !(a <= b)) {
                return Err(Error::schema("domain", "min must not exceed max"));
            }
        }
        let param_names: Vec<String> = params.keys().cloned().collect();
        let mut metric = vec![Expr::Number(0.0); n * (n + 1) / 2];
        let mut metric_text = vec![String::new(); n * (n + 1) / 2];
        for (m, row) in metric_upper.iter().enumerate() {
            if row.len() != n - m {
                return Err(Error::schema(
                    format!("metric[{m}]"),
                    format!("expected {} upper-triangle entries, found {}", n - m, row.len()),
                ));
            }
            for (k, text) in row.iter().enumerate() {
                let nu = m + k;
                let e = parse_expression(text, &coords, &param_names)
                    .map_err(|source| Error::Component { mu: m, nu, source })?;
                metric[sym_index(m, nu)] = e;
                metric_text[sym_index(m, nu)] = text.clone();
            }
        }
        let flow_exprs = flow
            .iter()
            .enumerate()
            .map(|(m, text)| {
                parse_expression(text, &coords, &param_names).map_err(|source| Error::Component { mu: m, nu: m, source })
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::Component { mu, source, .. } => Error::schema(format!("flow[{mu}]"), source.to_string()),
                other => other,
            })?;
        Ok(Scene {
            name: name.into(),
            coords,
            metric,
            metric_text,
            flow: flow_exprs,
            flow_text: flow.to_vec(),
            params,
            kappa,
            domain,
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn metric_expr(&self, m: usize, n: usize) -> &Expr {
        &self.metric[sym_index(m, n)]
    }

    pub fn metric_text(&self, m: usize, n: usize) -> &str {
        &self.metric_text[sym_index(m, n)]
    }

    pub fn flow_text(&self, m: usize) -> &str {
        &self.flow_text[m]
    }

    /// Seeds coordinate jets at `point`.
    pub fn seed<S: Scalar>(&self, point: &[f64]) -> Vec<S> {
        let n = point.len();
        point.iter().enumerate().map(|(i, &x)| S::seed(x, i, n)).collect()
    }

    /// Metric components over any scalar type.
    pub fn metric_at<S: Scalar>(&self, vars: &[S]) -> Result<Array2<S>> {
        let n = self.dim();
        let mut g = Array2::from_elem((n, n), S::zero());
        for m in 0..n {
            for nu in m..n {
                let e = self.metric_expr(m, nu);
                let v = if e.is_zero_literal() {
                    S::zero()
                } else {
                    e.eval(vars, &self.params)
                        .map_err(|source| Error::Component { mu: m, nu, source })?
                };
                g[[nu, m]] = v.clone();
                g[[m, nu]] = v;
            }
        }
        Ok(g)
    }

    /// Flow components `V^m` over any scalar type.
    pub fn flow_at<S: Scalar>(&self, vars: &[S]) -> Result<Vec<S>> {
        self.flow
            .iter()
            .map(|e| {
                if e.is_zero_literal() {
                    Ok(S::zero())
                } else {
                    e.eval(vars, &self.params).map_err(Error::from)
                }
            })
            .collect()
    }

    /// `g(V,V)` at `point`.
    pub fn flow_norm2(&self, point: &[f64]) -> Result<f64> {
        let g: Array2<f64> = self.metric_at(point)?;
        let v: Vec<f64> = self.flow_at(point)?;
        Ok(quadratic_form(&g, &v))
    }
}

pub(crate) fn quadratic_form<S: Scalar>(g: &Array2<S>, v: &[S]) -> S {
    bilinear(g, v, v)
}

pub(crate) fn bilinear<S: Scalar>(g: &Array2<S>, u: &[S], v: &[S]) -> S {
    let n = u.len();
    let mut acc = S::zero();
    for a in 0..n {
        for b in 0..n {
            acc = acc + g[[a, b]].clone() * u[a].clone() * v[b].clone();
        }
    }
    acc
}

/// Metric with first and second derivatives at a point.
#[derive(Debug, Clone)]
pub struct MetricSample {
    pub point: Vec<f64>,
    pub g: Array2<f64>,
    pub g_inv: Array2<f64>,
    pub dg: Array3<f64>,
    pub ddg: Array4<f64>,
}

impl MetricSample {
    pub fn dim(&self) -> usize {
        self.point.len()
    }
}

pub(crate) fn metric_sample_from_jets(point: &[f64], jets: &Array2<Jet2>) -> Result<MetricSample> {
    let n = point.len();
    let g = jets.map(|j| j.v);
    let lu = Lu::new(&g);
    let det = lu.det();
    if !(det.abs() > EPS_NONDEGENERATE) {
        return Err(Error::DegenerateMetric { det });
    }
    let g_inv = lu.inverse();
    let mut dg = Array3::zeros((n, n, n));
    let mut ddg = Array4::zeros((n, n, n, n));
    for m in 0..n {
        for nu in 0..n {
            let j = &jets[[m, nu]];
            for a in 0..n {
                dg[[a, m, nu]] = j.d(a);
                for b in 0..n {
                    ddg[[a, b, m, nu]] = j.dd(a, b);
                }
            }
        }
    }
    Ok(MetricSample {
        point: point.to_vec(),
        g,
        g_inv,
        dg,
        ddg,
    })
}

pub fn sample_metric(scene: &Scene, point: &[f64]) -> Result<MetricSample> {
    let jets: Array2<Jet2> = scene.metric_at(&scene.seed::<Jet2>(point))?;
    metric_sample_from_jets(point, &jets)
}

/// Levi-Civita connection and its first derivatives at a point.
#[derive(Debug, Clone)]
pub struct ConnectionSample {
    pub gamma: Array3<f64>,
    pub dgamma: Array4<f64>,
}

impl ConnectionSample {
    /// `Γ^m_{nr}` as first-order jets for use in lifted pipelines.
    pub fn gamma_jets(&self) -> Array3<Jet1> {
        let n = self.gamma.dim().0;
        Array3::from_shape_fn((n, n, n), |(m, nu, r)| {
            Jet1::new(self.gamma[[m, nu, r]], (0..n).map(|a| self.dgamma[[a, m, nu, r]]).collect())
        })
    }
}

pub fn christoffel(ms: &MetricSample) -> ConnectionSample {
    let n = ms.dim();
    // first kind: Γ_{s n r} = ½(∂_n g_{sr} + ∂_r g_{sn} − ∂_s g_{nr})
    let first = Array3::from_shape_fn((n, n, n), |(s, nu, r)| {
        0.5 * (ms.dg[[nu, s, r]] + ms.dg[[r, s, nu]] - ms.dg[[s, nu, r]])
    });
    let dfirst = Array4::from_shape_fn((n, n, n, n), |(a, s, nu, r)| {
        0.5 * (ms.ddg[[a, nu, s, r]] + ms.ddg[[a, r, s, nu]] - ms.ddg[[a, s, nu, r]])
    });
    // ∂_a g^{ms} = −g^{mp} ∂_a g_{pq} g^{qs}
    let mut dginv = Array3::zeros((n, n, n));
    for a in 0..n {
        for m in 0..n {
            for s in 0..n {
                let mut acc = 0.0;
                for p in 0..n {
                    for q in 0..n {
                        acc -= ms.g_inv[[m, p]] * ms.dg[[a, p, q]] * ms.g_inv[[q, s]];
                    }
                }
                dginv[[a, m, s]] = acc;
            }
        }
    }
    let mut gamma = Array3::zeros((n, n, n));
    let mut dgamma = Array4::zeros((n, n, n, n));
    for m in 0..n {
        for nu in 0..n {
            for r in 0..n {
                gamma[[m, nu, r]] = (0..n).map(|s| ms.g_inv[[m, s]] * first[[s, nu, r]]).sum();
                for a in 0..n {
                    dgamma[[a, m, nu, r]] = (0..n)
                        .map(|s| dginv[[a, m, s]] * first[[s, nu, r]] + ms.g_inv[[m, s]] * dfirst[[a, s, nu, r]])
                        .sum();
                }
            }
        }
    }
    ConnectionSample { gamma, dgamma }
}

/// Coordinate components `R^m_{nrs}`.
#[derive(Debug, Clone)]
pub struct RiemannSample {
    pub r: Array4<f64>,
}

impl RiemannSample {
    /// `R_{mnrs} = g_{ml} R^l_{nrs}`.
    pub fn lowered(&self, ms: &MetricSample) -> Array4<f64> {
        let n = ms.dim();
        Array4::from_shape_fn((n, n, n, n), |(m, nu, r, s)| {
            (0..n).map(|l| ms.g[[m, l]] * self.r[[l, nu, r, s]]).sum()
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.r.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

pub fn riemann(cs: &ConnectionSample) -> RiemannSample {
    let n = cs.gamma.dim().0;
    let g = &cs.gamma;
    let dg = &cs.dgamma;
    let r = Array4::from_shape_fn((n, n, n, n), |(m, nu, r, s)| {
        if r == s {
            return 0.0;
        }
        let mut v = dg[[r, m, nu, s]] - dg[[s, m, nu, r]];
        for l in 0..n {
            v += g[[m, l, r]] * g[[l, nu, s]] - g[[m, l, s]] * g[[l, nu, r]];
        }
        v
    });
    RiemannSample { r }
}

/// `g_{mr} g_{ns} − g_{ms} g_{nr}`.
fn metric_wedge(g: &Array2<f64>, m: usize, nu: usize, r: usize, s: usize) -> f64 {
    g[[m, r]] * g[[nu, s]] - g[[m, s]] * g[[nu, r]]
}

/// Max-abs residual of `R_{mnrs} = κ (g_{mr} g_{ns} − g_{ms} g_{nr})`,
/// relative to `1 + max |R_{mnrs}|`.
pub fn constant_curvature_residual(rs: &RiemannSample, ms: &MetricSample, kappa: f64) -> f64 {
    let low = rs.lowered(ms);
    let n = ms.dim();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for ((m, nu, r, s), v) in low.indexed_iter() {
        scale = scale.max(v.abs());
        worst = worst.max((v - kappa * metric_wedge(&ms.g, m, nu, r, s)).abs());
    }
    let _ = n;
    worst / (1.0 + scale)
}

/// Least-squares `κ` fitting `R_{mnrs} ≈ κ (g∧g)_{mnrs}` at one point.
pub fn fit_kappa(rs: &RiemannSample, ms: &MetricSample) -> f64 {
    let low = rs.lowered(ms);
    let (mut num, mut den) = (0.0, 0.0);
    for ((m, nu, r, s), v) in low.indexed_iter() {
        let w = metric_wedge(&ms.g, m, nu, r, s);
        num += v * w;
        den += w * w;
    }
    num / den
}

/// `(L_V g)_{mn}` with the scale used to make it relative.
#[derive(Debug, Clone)]
pub struct LieDerivative {
    pub matrix: Array2<f64>,
    /// `1 + max` magnitude of the three contributing terms.
    pub scale: f64,
}

impl LieDerivative {
    pub fn relative_max(&self) -> (f64, (usize, usize)) {
        let mut best = (0.0, (0, 0));
        for ((m, nu), v) in self.matrix.indexed_iter() {
            let r = v.abs() / self.scale;
            if r > best.0 {
                best = (r, (m, nu));
            }
        }
        best
    }
}

/// `(L_V g)_{mn} = V^r ∂_r g_{mn} + g_{rn} ∂_m V^r + g_{mr} ∂_n V^r`.
pub fn lie_derivative_metric(scene: &Scene, point: &[f64]) -> Result<LieDerivative> {
    let vars = scene.seed::<Jet1>(point);
    let g: Array2<Jet1> = scene.metric_at(&vars)?;
    let v: Vec<Jet1> = scene.flow_at(&vars)?;
    let n = scene.dim();
    let mut matrix = Array2::zeros((n, n));
    let mut scale: f64 = 0.0;
    for m in 0..n {
        for nu in 0..n {
            let transport: f64 = (0..n).map(|r| v[r].v * g[[m, nu]].d(r)).sum();
            let left: f64 = (0..n).map(|r| g[[r, nu]].v * v[r].d(m)).sum();
            let right: f64 = (0..n).map(|r| g[[m, r]].v * v[r].d(nu)).sum();
            scale = scale.max(transport.abs()).max(left.abs()).max(right.abs());
            matrix[[m, nu]] = transport + left + right;
        }
    }
    Ok(LieDerivative {
        matrix,
        scale: 1.0 + scale,
    })
}

/// Direct Killing test: passes iff the relative max of `L_V g` over all
/// points is below `tol`.
pub fn killing_verdict(scene: &Scene, points: &[Vec<f64>], tol: f64) -> Result<Verdict> {
    let mut verdict = Verdict::new("killing-direct", tol);
    for p in points {
        let lie = lie_derivative_metric(scene, p)?;
        let (r, (m, nu)) = lie.relative_max();
        verdict.observe(r, p, Some(vec![m, nu]));
    }
    Ok(verdict.finish())
}
