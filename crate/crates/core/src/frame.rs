//! Flow-adapted orthonormal frames, their connection coefficients, the
//! D-covariant derivatives of `K` and `M`, and the curvature of the base.
//!
//! Frame indices run over `0..n` with `0` along the flow; the spatial blocks
//! `K`, `M`, `A`, `B` use `0..n-1` for frame indices `1..n`.
//! `gamma_hat[[m, nu, r]] = ω^m(∇_{I_r} I_nu)`.

use ndarray::{Array1, Array2, Array3, Array4};

use crate::error::{Error, Result};
use crate::geometry::{
    bilinear, christoffel, metric_sample_from_jets, quadratic_form, riemann, ConnectionSample, MetricSample,
    RiemannSample, sample_metric, Scene, EPS_TIMELIKE,
};
use crate::jet::{Differentiable, Jet1, Jet2, Scalar};

/// Gram–Schmidt candidates with `g(w,w)` below this are skipped.
pub const EPS_GS: f64 = 1e-10;
/// Accepted candidates closer than this to the skip threshold make the frame branch unstable.
const EPS_GS_MARGIN: f64 = 1e-7;

/// `η_{mm}`.
pub fn eta(m: usize) -> f64 {
    if m == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Order in which coordinate basis vectors are offered to Gram–Schmidt.
pub fn candidate_order(n: usize) -> Vec<usize> {
    (1..n).chain(std::iter::once(0)).collect()
}

/// Orthonormal frame over any scalar type.
#[derive(Debug, Clone)]
pub struct OrthonormalFrame<S> {
    pub lambda: S,
    /// `frame[m][a] = I_m^a`.
    pub frame: Vec<Vec<S>>,
    /// `coframe[m][a] = ω^m_a`.
    pub coframe: Vec<Vec<S>>,
    /// Coordinate candidate behind each spatial frame vector.
    pub sources: Vec<usize>,
}

/// Builds `I_0 = V/λ` and completes it by signature-aware Gram–Schmidt.
///
/// With `check_branch`, a skipped candidate whose squared norm has nonzero
/// derivatives, or an accepted one barely above the threshold, raises
/// [`Error::SkipSetUnstable`].
pub fn orthonormal_frame<S: Scalar>(g: &Array2<S>, v: &[S], check_branch: bool) -> Result<OrthonormalFrame<S>> {
    let n = v.len();
    let norm2 = quadratic_form(g, v);
    if !(norm2.value() < -EPS_TIMELIKE) {
        return Err(Error::TimelikeViolation { norm2: norm2.value() });
    }
    let lambda = (-norm2).sqrt();
    let i0: Vec<S> = v.iter().map(|c| c.clone() / lambda.clone()).collect();
    let mut frame = vec![i0];
    let mut sources = Vec::with_capacity(n - 1);
    for c in candidate_order(n) {
        if frame.len() == n {
            break;
        }
        let mut w: Vec<S> = (0..n).map(|a| S::constant(if a == c { 1.0 } else { 0.0 })).collect();
        for (m, im) in frame.iter().enumerate() {
            let p = bilinear(g, &w, im).scale(eta(m));
            for a in 0..n {
                w[a] = w[a].clone() - p.clone() * im[a].clone();
            }
        }
        let q = quadratic_form(g, &w);
        if q.value() < EPS_GS {
            if check_branch && q.derivative_magnitude() >= EPS_GS {
                return Err(Error::SkipSetUnstable { candidate: c });
            }
            continue;
        }
        if check_branch && q.value() < EPS_GS_MARGIN {
            return Err(Error::SkipSetUnstable { candidate: c });
        }
        let norm = q.sqrt();
        frame.push(w.into_iter().map(|x| x / norm.clone()).collect());
        sources.push(c);
    }
    if frame.len() < n {
        return Err(Error::FrameDegenerate);
    }
    let coframe = (0..n)
        .map(|m| {
            (0..n)
                .map(|a| {
                    let mut acc = S::zero();
                    for b in 0..n {
                        acc = acc + g[[a, b]].clone() * frame[m][b].clone();
                    }
                    acc.scale(eta(m))
                })
                .collect()
        })
        .collect();
    Ok(OrthonormalFrame {
        lambda,
        frame,
        coframe,
        sources,
    })
}

/// Frame data one jet order below the metric, together with `Γ̂`.
#[derive(Debug, Clone)]
pub struct FrameField<L> {
    pub lambda: L,
    pub frame: Vec<Vec<L>>,
    pub coframe: Vec<Vec<L>>,
    pub gamma_hat: Array3<L>,
    pub sources: Vec<usize>,
}

/// Runs the frame on `S` jets and forms
/// `Γ̂^m_{nr} = ω^m_a I_r^b (∂_b I_n^a + Γ^a_{bc} I_n^c)` one order lower.
pub fn frame_field<S: Differentiable>(
    g: &Array2<S>,
    v: &[S],
    gamma: &Array3<S::Lower>,
    check_branch: bool,
) -> Result<FrameField<S::Lower>> {
    let n = v.len();
    let of = orthonormal_frame(g, v, check_branch)?;
    let frame: Vec<Vec<S::Lower>> = of.frame.iter().map(|row| row.iter().map(|x| x.lower()).collect()).collect();
    let coframe: Vec<Vec<S::Lower>> = of.coframe.iter().map(|row| row.iter().map(|x| x.lower()).collect()).collect();
    // nabla[nu][a][b] = ∇_b I_nu^a
    let mut nabla = vec![vec![vec![S::Lower::zero(); n]; n]; n];
    for nu in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut acc = of.frame[nu][a].partial(b);
                for c in 0..n {
                    acc = acc + gamma[[a, b, c]].clone() * frame[nu][c].clone();
                }
                nabla[nu][a][b] = acc;
            }
        }
    }
    // t[nu][r][a] = (∇_{I_r} I_nu)^a
    let mut t = vec![vec![vec![S::Lower::zero(); n]; n]; n];
    for nu in 0..n {
        for r in 0..n {
            for a in 0..n {
                let mut acc = S::Lower::zero();
                for b in 0..n {
                    acc = acc + frame[r][b].clone() * nabla[nu][a][b].clone();
                }
                t[nu][r][a] = acc;
            }
        }
    }
    let gamma_hat = Array3::from_shape_fn((n, n, n), |(m, nu, r)| {
        let mut acc = S::Lower::zero();
        for a in 0..n {
            acc = acc + coframe[m][a].clone() * t[nu][r][a].clone();
        }
        acc
    });
    Ok(FrameField {
        lambda: of.lambda.lower(),
        frame,
        coframe,
        gamma_hat,
        sources: of.sources,
    })
}

/// Adapted frame and connection split at one point.
#[derive(Debug, Clone)]
pub struct FrameSample {
    pub point: Vec<f64>,
    pub lambda: f64,
    /// Column `m` holds the coordinate components of `I_m`.
    pub frame: Array2<f64>,
    /// Row `m` holds the components of `ω^m`.
    pub coframe: Array2<f64>,
    pub gamma_hat: Array3<f64>,
    /// `K_i = Γ̂^i_{00}`.
    pub k: Array1<f64>,
    /// `M_ij = Γ̂^i_{0j}`.
    pub m: Array2<f64>,
    /// `A^i_{jk} = Γ̂^i_{jk}`.
    pub a: Array3<f64>,
    /// `B^i_j = Γ̂^i_{j0}`.
    pub b: Array2<f64>,
}

impl FrameSample {
    fn from_values(point: &[f64], lambda: f64, frame: &[Vec<f64>], coframe: &[Vec<f64>], gh: Array3<f64>) -> Self {
        let n = point.len();
        let s = n - 1;
        FrameSample {
            point: point.to_vec(),
            lambda,
            frame: Array2::from_shape_fn((n, n), |(a, m)| frame[m][a]),
            coframe: Array2::from_shape_fn((n, n), |(m, a)| coframe[m][a]),
            k: Array1::from_shape_fn(s, |i| gh[[i + 1, 0, 0]]),
            m: Array2::from_shape_fn((s, s), |(i, j)| gh[[i + 1, 0, j + 1]]),
            a: Array3::from_shape_fn((s, s, s), |(i, j, k)| gh[[i + 1, j + 1, k + 1]]),
            b: Array2::from_shape_fn((s, s), |(i, j)| gh[[i + 1, j + 1, 0]]),
            gamma_hat: gh,
        }
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }
}

/// Frame sample from first-order jets of metric and flow.
pub fn adapt_frame(scene: &Scene, point: &[f64]) -> Result<FrameSample> {
    let vars = scene.seed::<Jet1>(point);
    let g: Array2<Jet1> = scene.metric_at(&vars)?;
    let v: Vec<Jet1> = scene.flow_at(&vars)?;
    let cs = christoffel(&sample_metric(scene, point)?);
    let ff = frame_field(&g, &v, &cs.gamma, true)?;
    Ok(FrameSample::from_values(point, ff.lambda, &ff.frame, &ff.coframe, ff.gamma_hat))
}

/// D-covariant derivatives of `K` and `M`.
#[derive(Debug, Clone)]
pub struct DSample {
    /// `K_{i;j}`.
    pub k_cd: Array2<f64>,
    /// `\dot K_i`.
    pub k_dot: Array1<f64>,
    /// `M_{ij;k}`.
    pub m_cd: Array3<f64>,
    /// `\dot M_{ij}`.
    pub m_dot: Array2<f64>,
}

/// Forms the D-derivatives from frame directional derivatives
/// `dk[[i, mu]] = I_mu(K_i)` and `dm[[i, j, mu]] = I_mu(M_ij)`.
pub fn d_derivatives(fs: &FrameSample, dk: &Array2<f64>, dm: &Array3<f64>) -> DSample {
    let s = fs.dim() - 1;
    let (k, m, a, b) = (&fs.k, &fs.m, &fs.a, &fs.b);
    // ω̃^l_i(I_0) = B^l_i − M^l_i
    let c = Array2::from_shape_fn((s, s), |(l, i)| b[[l, i]] - m[[l, i]]);
    let k_cd = Array2::from_shape_fn((s, s), |(i, j)| {
        dk[[i, j + 1]] - (0..s).map(|l| k[l] * a[[l, i, j]]).sum::<f64>()
    });
    let k_dot = Array1::from_shape_fn(s, |i| dk[[i, 0]] - (0..s).map(|l| k[l] * c[[l, i]]).sum::<f64>());
    let m_cd = Array3::from_shape_fn((s, s, s), |(i, j, kk)| {
        dm[[i, j, kk + 1]]
            - (0..s)
                .map(|l| m[[l, j]] * a[[l, i, kk]] + m[[i, l]] * a[[l, j, kk]])
                .sum::<f64>()
    });
    let m_dot = Array2::from_shape_fn((s, s), |(i, j)| {
        dm[[i, j, 0]] - (0..s).map(|l| m[[l, j]] * c[[l, i]] + m[[i, l]] * c[[l, j]]).sum::<f64>()
    });
    DSample {
        k_cd,
        k_dot,
        m_cd,
        m_dot,
    }
}

/// Frame components `R̃^i_{jkl}` of the base curvature.
#[derive(Debug, Clone)]
pub struct BaseCurvatureSample {
    pub r_tilde: Array4<f64>,
}

/// Everything the verdicts and identities need at one point, computed once.
#[derive(Debug, Clone)]
pub struct PointGeometry {
    pub metric: MetricSample,
    pub connection: ConnectionSample,
    pub riemann: RiemannSample,
    pub frame: FrameSample,
    /// `R_{mnrs}` in the frame, first index lowered with `η`.
    pub frame_riemann: Array4<f64>,
    /// `dcoframe[[a, m, b]] = ∂_a ω^m_b`.
    pub dcoframe: Array3<f64>,
    /// `I_m(λ)`.
    pub dlambda: Array1<f64>,
    /// `I_mu(K_i)`.
    pub dk: Array2<f64>,
    /// `I_mu(M_ij)`.
    pub dm: Array3<f64>,
    pub d: DSample,
    pub base: BaseCurvatureSample,
    pub sources: Vec<usize>,
}

impl PointGeometry {
    pub fn analyze(scene: &Scene, point: &[f64]) -> Result<PointGeometry> {
        let n = scene.dim();
        let s = n - 1;
        let vars = scene.seed::<Jet2>(point);
        let g: Array2<Jet2> = scene.metric_at(&vars)?;
        let v: Vec<Jet2> = scene.flow_at(&vars)?;
        let metric = metric_sample_from_jets(point, &g)?;
        let connection = christoffel(&metric);
        let riemann_s = riemann(&connection);
        let ff = frame_field(&g, &v, &connection.gamma_jets(), true)?;

        let val = |x: &Jet1| x.v;
        let frame_v: Vec<Vec<f64>> = ff.frame.iter().map(|r| r.iter().map(val).collect()).collect();
        let coframe_v: Vec<Vec<f64>> = ff.coframe.iter().map(|r| r.iter().map(val).collect()).collect();
        let gh_v = ff.gamma_hat.map(val);
        let frame = FrameSample::from_values(point, ff.lambda.v, &frame_v, &coframe_v, gh_v);

        // I_m(f) = I_m^a ∂_a f
        let dir = |f: &Jet1, m: usize| -> f64 { (0..n).map(|a| frame_v[m][a] * f.d(a)).sum() };
        let dlambda = Array1::from_shape_fn(n, |m| dir(&ff.lambda, m));
        let dk = Array2::from_shape_fn((s, n), |(i, mu)| dir(&ff.gamma_hat[[i + 1, 0, 0]], mu));
        let dm = Array3::from_shape_fn((s, s, n), |(i, j, mu)| dir(&ff.gamma_hat[[i + 1, 0, j + 1]], mu));
        let d = d_derivatives(&frame, &dk, &dm);
        let dcoframe = Array3::from_shape_fn((n, n, n), |(a, m, b)| ff.coframe[m][b].d(a));

        // ω̃^i_{ja} = A^i_{jk} ω^k_a + (B^i_j − M^i_j) ω^0_a as a jet field
        let gh = &ff.gamma_hat;
        let mut wt = vec![vec![vec![Jet1::zero(); n]; s]; s];
        for i in 0..s {
            for j in 0..s {
                let c = gh[[i + 1, j + 1, 0]].clone() - gh[[i + 1, 0, j + 1]].clone();
                for a in 0..n {
                    let mut acc = c.clone() * ff.coframe[0][a].clone();
                    for k in 0..s {
                        acc = acc + gh[[i + 1, j + 1, k + 1]].clone() * ff.coframe[k + 1][a].clone();
                    }
                    wt[i][j][a] = acc;
                }
            }
        }
        let a_blk = &frame.a;
        let mut r_tilde = Array4::zeros((s, s, s, s));
        for i in 0..s {
            for j in 0..s {
                let w = &wt[i][j];
                // curl[a][b] = ∂_a ω̃_b − ∂_b ω̃_a
                let curl = Array2::from_shape_fn((n, n), |(a, b)| w[b].d(a) - w[a].d(b));
                for k in 0..s {
                    for l in 0..s {
                        if k == l {
                            continue;
                        }
                        let mut dw = 0.0;
                        for a in 0..n {
                            for b in 0..n {
                                dw += frame_v[k + 1][a] * frame_v[l + 1][b] * curl[[a, b]];
                            }
                        }
                        let quad: f64 = (0..s)
                            .map(|m| a_blk[[i, m, k]] * a_blk[[m, j, l]] - a_blk[[i, m, l]] * a_blk[[m, j, k]])
                            .sum();
                        r_tilde[[i, j, k, l]] = dw + quad;
                    }
                }
            }
        }

        let frame_riemann = project_riemann(&riemann_s, &frame);
        Ok(PointGeometry {
            metric,
            connection,
            riemann: riemann_s,
            frame,
            frame_riemann,
            dcoframe,
            dlambda,
            dk,
            dm,
            d,
            base: BaseCurvatureSample { r_tilde },
            sources: ff.sources,
        })
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }
}

/// `R_{mnrs} = η_m ω^m_a R^a_{bcd} I_n^b I_r^c I_s^d`.
pub fn project_riemann(rs: &RiemannSample, fs: &FrameSample) -> Array4<f64> {
    let n = fs.dim();
    let e = &fs.frame;
    let w = &fs.coframe;
    let mut t1 = Array4::<f64>::zeros((n, n, n, n));
    for ((a, b, c, d), &r) in rs.r.indexed_iter() {
        if r == 0.0 {
            continue;
        }
        for sg in 0..n {
            t1[[a, b, c, sg]] += r * e[[d, sg]];
        }
    }
    let mut t2 = Array4::<f64>::zeros((n, n, n, n));
    for ((a, b, c, sg), &v) in t1.indexed_iter() {
        if v == 0.0 {
            continue;
        }
        for rh in 0..n {
            t2[[a, b, rh, sg]] += v * e[[c, rh]];
        }
    }
    let mut t3 = Array4::<f64>::zeros((n, n, n, n));
    for ((a, b, rh, sg), &v) in t2.indexed_iter() {
        if v == 0.0 {
            continue;
        }
        for nu in 0..n {
            t3[[a, nu, rh, sg]] += v * e[[b, nu]];
        }
    }
    let mut out = Array4::<f64>::zeros((n, n, n, n));
    for ((a, nu, rh, sg), &v) in t3.indexed_iter() {
        if v == 0.0 {
            continue;
        }
        for m in 0..n {
            out[[m, nu, rh, sg]] += eta(m) * w[[m, a]] * v;
        }
    }
    out
}

/// D-derivatives at a point.
pub fn covariant_d_derivatives(scene: &Scene, point: &[f64]) -> Result<DSample> {
    Ok(PointGeometry::analyze(scene, point)?.d)
}

/// Base curvature at a point.
pub fn base_curvature(scene: &Scene, point: &[f64]) -> Result<BaseCurvatureSample> {
    Ok(PointGeometry::analyze(scene, point)?.base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_model, ModelSpec};
    use approx::assert_abs_diff_eq;

    fn rotating(omega: f64) -> Scene {
        build_model(&ModelSpec::new("minkowski", 4).flow("rotating").flow_param("omega", omega)).unwrap()
    }

    #[test]
    fn static_flow_gives_identity_frame() {
        let scene = build_model(&ModelSpec::new("minkowski", 4)).unwrap();
        let fs = adapt_frame(&scene, &[0.2, -0.4, 0.1, 0.3]).unwrap();
        assert_eq!(fs.lambda, 1.0);
        assert!(fs.gamma_hat.iter().all(|v: &f64| *v == 0.0));
        assert!(fs.gamma_hat.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn circular_worldline_closed_forms() {
        let fs = adapt_frame(&rotating(0.5), &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(fs.lambda, 0.75f64.sqrt(), epsilon = 1e-15);
        let k = fs.k.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert_abs_diff_eq!(k, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn rotating_flow_fails_at_light_cylinder() {
        let err = adapt_frame(&rotating(0.5), &[0.0, 2.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::TimelikeViolation { .. }));
    }

    #[test]
    fn frame_invariants_hold() {
        for scene in [
            rotating(0.5),
            build_model(&ModelSpec::new("de_sitter", 4).flow("rotating").flow_param("omega", 0.3)).unwrap(),
            build_model(&ModelSpec::new("einstein_static", 4).flow("rotating").flow_param("omega", 0.5)).unwrap(),
        ] {
            let p = [0.3, 0.2, -0.35, 0.25];
            let fs = adapt_frame(&scene, &p).unwrap();
            let g: Array2<f64> = scene.metric_at(&p).unwrap();
            let gram = fs.frame.t().dot(&g).dot(&fs.frame);
            for m in 0..4 {
                for nu in 0..4 {
                    let want = if m == nu { eta(m) } else { 0.0 };
                    assert!((gram[[m, nu]] - want).abs() < 1e-12);
                    assert!((fs.coframe.dot(&fs.frame)[[m, nu]] - if m == nu { 1.0 } else { 0.0 }).abs() < 1e-12);
                }
            }
            let gh = &fs.gamma_hat;
            for r in 0..4 {
                for i in 1..4 {
                    assert!((gh[[0, i, r]] - gh[[i, 0, r]]).abs() < 1e-10);
                    for j in 1..4 {
                        assert!((gh[[i, j, r]] + gh[[j, i, r]]).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn axis_is_not_a_branch_point() {
        let g = PointGeometry::analyze(&rotating(0.5), &[0.0, 0.0, 0.0, 0.4]).unwrap();
        assert_eq!(g.sources, vec![1, 2, 3]);
    }

    #[test]
    fn lifted_and_plain_frames_agree() {
        let scene = rotating(0.5);
        let p = [0.1, 0.6, -0.3, 0.2];
        let fs = adapt_frame(&scene, &p).unwrap();
        let pg = PointGeometry::analyze(&scene, &p).unwrap();
        for (a, b) in fs.gamma_hat.iter().zip(pg.frame.gamma_hat.iter()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
