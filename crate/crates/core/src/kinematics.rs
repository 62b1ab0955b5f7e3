//! Kinematic decomposition of `M`, rigidity and isometry verdicts, and the
//! end-to-end check that rotational rigid flows on constant-curvature
//! scenes are isometric.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::PointGeometry;
use crate::geometry::{constant_curvature_residual, fit_kappa, killing_verdict, Scene, EPS_TIMELIKE};

/// Default verdict tolerance.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Default vorticity threshold for the rotational predicate.
pub const DEFAULT_TOL_ROT: f64 = 1e-4;

/// Outcome of a max-reduction over sample points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub criterion: String,
    pub pass: bool,
    pub worst_residual: f64,
    pub worst_point: Vec<f64>,
    /// Index tuple of the worst entry, when meaningful.
    pub worst_component: Option<Vec<usize>>,
    pub tolerance: f64,
    pub points: usize,
}

impl Verdict {
    pub fn new(criterion: impl Into<String>, tolerance: f64) -> Verdict {
        Verdict {
            criterion: criterion.into(),
            pass: false,
            worst_residual: 0.0,
            worst_point: Vec::new(),
            worst_component: None,
            tolerance,
            points: 0,
        }
    }

    pub fn observe(&mut self, residual: f64, point: &[f64], component: Option<Vec<usize>>) {
        if self.points == 0 || residual > self.worst_residual || residual.is_nan() {
            self.worst_residual = residual;
            self.worst_point = point.to_vec();
            self.worst_component = component;
        }
        self.points += 1;
    }

    /// Sets `pass`; a verdict over no points fails.
    pub fn finish(mut self) -> Verdict {
        self.pass = self.points > 0 && self.worst_residual < self.tolerance;
        self
    }
}

/// `M = vorticity + shear + expansion·1/(n−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub vorticity: Array2<f64>,
    pub shear: Array2<f64>,
    pub expansion: f64,
}

pub fn decompose_m(m: &Array2<f64>) -> Decomposition {
    let s = m.nrows();
    let expansion = m.diag().sum();
    let vorticity = Array2::from_shape_fn((s, s), |(i, j)| 0.5 * (m[[i, j]] - m[[j, i]]));
    let shear = Array2::from_shape_fn((s, s), |(i, j)| {
        0.5 * (m[[i, j]] + m[[j, i]]) - if i == j { expansion / s as f64 } else { 0.0 }
    });
    Decomposition {
        vorticity,
        shear,
        expansion,
    }
}

/// `max |M_(ij)|` with its index pair.
pub fn symmetric_part_max(m: &Array2<f64>) -> (f64, (usize, usize)) {
    max_entry(m, |i, j| 0.5 * (m[[i, j]] + m[[j, i]]))
}

/// `max |M_[ij]|` with its index pair.
pub fn antisymmetric_part_max(m: &Array2<f64>) -> (f64, (usize, usize)) {
    max_entry(m, |i, j| 0.5 * (m[[i, j]] - m[[j, i]]))
}

fn max_entry(m: &Array2<f64>, f: impl Fn(usize, usize) -> f64) -> (f64, (usize, usize)) {
    let s = m.nrows();
    let mut best = (0.0, (0, 0));
    for i in 0..s {
        for j in 0..s {
            let v = f(i, j).abs();
            if v > best.0 {
                best = (v, (i, j));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicInvariants {
    pub lambda: f64,
    pub acceleration: Vec<f64>,
    pub vorticity: Vec<Vec<f64>>,
    pub shear: Vec<Vec<f64>>,
    pub expansion: f64,
    /// `sqrt(½ ω_ij ω_ij)`.
    pub vorticity_magnitude: f64,
    pub acceleration_magnitude: f64,
    /// `\dot K_i`.
    pub k_dot: Vec<f64>,
    /// `I_0(K_i)`.
    pub k_flow_derivative: Vec<f64>,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl KinematicInvariants {
    pub fn from_geometry(pg: &PointGeometry) -> KinematicInvariants {
        let fs = &pg.frame;
        let dec = decompose_m(&fs.m);
        let vort2: f64 = dec.vorticity.iter().map(|x| x * x).sum();
        KinematicInvariants {
            lambda: fs.lambda,
            acceleration: fs.k.to_vec(),
            acceleration_magnitude: fs.k.dot(&fs.k).sqrt(),
            vorticity_magnitude: (0.5 * vort2).sqrt(),
            vorticity: rows(&dec.vorticity),
            shear: rows(&dec.shear),
            expansion: dec.expansion,
            k_dot: pg.d.k_dot.to_vec(),
            k_flow_derivative: pg.dk.column(0).to_vec(),
        }
    }
}

fn point_of(pg: &PointGeometry) -> &[f64] {
    &pg.frame.point
}

/// Born rigidity: `max |M_(ij)| < tol`.
pub fn rigidity_from(geoms: &[PointGeometry], tol: f64) -> Verdict {
    let mut v = Verdict::new("born-rigidity", tol);
    for pg in geoms {
        let (r, (i, j)) = symmetric_part_max(&pg.frame.m);
        v.observe(r, point_of(pg), Some(vec![i, j]));
    }
    v.finish()
}

pub fn rigidity_verdict(scene: &Scene, points: &[Vec<f64>], tol: f64) -> Result<Verdict> {
    Ok(rigidity_from(&analyze_all(scene, points)?, tol))
}

pub fn is_rotational(pg: &PointGeometry, tol_rot: f64) -> bool {
    antisymmetric_part_max(&pg.frame.m).0 > tol_rot
}

pub fn rotational_predicate(scene: &Scene, point: &[f64], tol_rot: f64) -> Result<bool> {
    Ok(is_rotational(&PointGeometry::analyze(scene, point)?, tol_rot))
}

fn max_abs1(a: &Array1<f64>) -> (f64, usize) {
    a.iter()
        .enumerate()
        .fold((0.0, 0), |best, (i, v)| if v.abs() > best.0 { (v.abs(), i) } else { best })
}

fn max_abs2(a: &Array2<f64>) -> (f64, (usize, usize)) {
    a.indexed_iter()
        .fold((0.0, (0, 0)), |best, (ij, v)| if v.abs() > best.0 { (v.abs(), ij) } else { best })
}

/// Both isometry criteria for a rigid flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsometryVerdicts {
    /// `K_[i;j] = 0` and `\dot K_i = 0`.
    pub curl: Verdict,
    /// `\dot M_ij = 0` and `\dot K_i = 0`.
    pub rotation: Verdict,
}

/// Isometry criteria without the rigidity precondition.
pub fn isometry_criteria_from(geoms: &[PointGeometry], tol: f64) -> IsometryVerdicts {
    let mut curl = Verdict::new("rigid-isometry-curl", tol);
    let mut rotation = Verdict::new("rigid-isometry-rotation", tol);
    for pg in geoms {
        let d = &pg.d;
        let kcurl = Array2::from_shape_fn(d.k_cd.dim(), |(i, j)| 0.5 * (d.k_cd[[i, j]] - d.k_cd[[j, i]]));
        let (c, (ci, cj)) = max_abs2(&kcurl);
        let (kd, ki) = max_abs1(&d.k_dot);
        let (md, (mi, mj)) = max_abs2(&d.m_dot);
        let p = point_of(pg);
        if c >= kd {
            curl.observe(c, p, Some(vec![ci, cj]));
        } else {
            curl.observe(kd, p, Some(vec![ki]));
        }
        if md >= kd {
            rotation.observe(md, p, Some(vec![mi, mj]));
        } else {
            rotation.observe(kd, p, Some(vec![ki]));
        }
    }
    IsometryVerdicts {
        curl: curl.finish(),
        rotation: rotation.finish(),
    }
}

pub fn isometry_via_criteria(scene: &Scene, points: &[Vec<f64>], tol: f64) -> Result<IsometryVerdicts> {
    let geoms = analyze_all(scene, points)?;
    let rigid = rigidity_from(&geoms, tol);
    if !rigid.pass {
        return Err(Error::PreconditionViolated {
            criterion: rigid.criterion.clone(),
            verdict: Box::new(rigid),
        });
    }
    Ok(isometry_criteria_from(&geoms, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimelikeEntry {
    pub point: Vec<f64>,
    /// `g(V,V)`, absent when the metric or flow cannot be evaluated.
    pub norm2: Option<f64>,
    pub timelike: bool,
}

/// Sign of `g(V,V)` at each point; never fails.
pub fn timelike_domain_check(scene: &Scene, points: &[Vec<f64>]) -> Vec<TimelikeEntry> {
    points
        .iter()
        .map(|p| {
            let norm2 = scene.flow_norm2(p).ok();
            TimelikeEntry {
                point: p.clone(),
                norm2,
                timelike: norm2.is_some_and(|v| v < -EPS_TIMELIKE),
            }
        })
        .collect()
}

/// Full per-point geometry; fails on the first point that fails.
pub fn analyze_all(scene: &Scene, points: &[Vec<f64>]) -> Result<Vec<PointGeometry>> {
    if points.is_empty() {
        return Err(Error::schema("points", "sample set is empty"));
    }
    points.iter().map(|p| PointGeometry::analyze(scene, p)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub tol: f64,
    pub tol_rot: f64,
    /// Threshold for scale-relative identity residuals.
    pub identity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tol: DEFAULT_TOL,
            tol_rot: DEFAULT_TOL_ROT,
            identity: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conclusion {
    TheoremInstantiated,
    HypothesisUnmet,
    CounterexampleCandidate,
}

impl Conclusion {
    pub fn label(self) -> &'static str {
        match self {
            Conclusion::TheoremInstantiated => "theorem-instantiated",
            Conclusion::HypothesisUnmet => "hypothesis-unmet",
            Conclusion::CounterexampleCandidate => "counterexample-candidate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointVerdicts {
    pub point: Vec<f64>,
    pub rigid: Verdict,
    pub rotational: bool,
    pub m_dot_zero: Verdict,
    pub k_dot_zero: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub homogeneity: Verdict,
    /// Declared or fitted curvature used by the homogeneity test.
    pub kappa: f64,
    pub kappa_declared: bool,
    pub rigidity: Verdict,
    pub rotational: bool,
    pub m_dot_zero: Verdict,
    pub k_dot_zero: Verdict,
    pub killing_direct: Verdict,
    pub per_point: Vec<PointVerdicts>,
    pub conclusion: Conclusion,
}

/// Constant-curvature test; fits `κ` when the scene does not declare one.
pub fn homogeneity_from(scene: &Scene, geoms: &[PointGeometry], tol: f64) -> (Verdict, f64) {
    let kappa = scene.kappa.unwrap_or_else(|| {
        let fits: Vec<f64> = geoms.iter().map(|pg| fit_kappa(&pg.riemann, &pg.metric)).collect();
        fits.iter().sum::<f64>() / fits.len().max(1) as f64
    });
    let mut v = Verdict::new("homogeneity", tol);
    for pg in geoms {
        v.observe(constant_curvature_residual(&pg.riemann, &pg.metric, kappa), point_of(pg), None);
    }
    (v.finish(), kappa)
}

fn single(criterion: &str, tol: f64, r: f64, p: &[f64], c: Vec<usize>) -> Verdict {
    let mut v = Verdict::new(criterion, tol);
    v.observe(r, p, Some(c));
    v.finish()
}

/// Runs every hypothesis of the theorem and the direct Killing test.
pub fn theorem_report_from(scene: &Scene, geoms: &[PointGeometry], tols: &Tolerances) -> Result<TheoremReport> {
    let (homogeneity, kappa) = homogeneity_from(scene, geoms, tols.tol);
    let rigidity = rigidity_from(geoms, tols.tol);
    let mut m_dot_zero = Verdict::new("m-dot-zero", tols.tol);
    let mut k_dot_zero = Verdict::new("k-dot-zero", tols.tol);
    let mut per_point = Vec::with_capacity(geoms.len());
    let mut rotational = !geoms.is_empty();
    for pg in geoms {
        let p = point_of(pg);
        let (rr, (ri, rj)) = symmetric_part_max(&pg.frame.m);
        let (md, (mi, mj)) = max_abs2(&pg.d.m_dot);
        let (kd, ki) = max_abs1(&pg.d.k_dot);
        m_dot_zero.observe(md, p, Some(vec![mi, mj]));
        k_dot_zero.observe(kd, p, Some(vec![ki]));
        let rot = is_rotational(pg, tols.tol_rot);
        rotational &= rot;
        per_point.push(PointVerdicts {
            point: p.to_vec(),
            rigid: single("born-rigidity", tols.tol, rr, p, vec![ri, rj]),
            rotational: rot,
            m_dot_zero: single("m-dot-zero", tols.tol, md, p, vec![mi, mj]),
            k_dot_zero: single("k-dot-zero", tols.tol, kd, p, vec![ki]),
        });
    }
    let points: Vec<Vec<f64>> = geoms.iter().map(|pg| point_of(pg).to_vec()).collect();
    let killing_direct = killing_verdict(scene, &points, tols.tol)?;
    let conclusion = if !(homogeneity.pass && rigidity.pass && rotational) {
        Conclusion::HypothesisUnmet
    } else if killing_direct.pass {
        Conclusion::TheoremInstantiated
    } else {
        Conclusion::CounterexampleCandidate
    };
    Ok(TheoremReport {
        homogeneity,
        kappa,
        kappa_declared: scene.kappa.is_some(),
        rigidity,
        rotational,
        m_dot_zero: m_dot_zero.finish(),
        k_dot_zero: k_dot_zero.finish(),
        killing_direct,
        per_point,
        conclusion,
    })
}

/// Theorem check over explicit points; non-timelike points are dropped.
pub fn herglotz_noether_report(scene: &Scene, points: &[Vec<f64>], tols: &Tolerances) -> Result<TheoremReport> {
    let mut geoms = Vec::new();
    for p in points {
        match PointGeometry::analyze(scene, p) {
            Ok(pg) => geoms.push(pg),
            Err(e) if e.is_pointwise() => continue,
            Err(e) => return Err(e),
        }
    }
    if geoms.is_empty() {
        return Err(Error::schema("points", "no valid sample points"));
    }
    theorem_report_from(scene, &geoms, tols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn decomposition_of_simple_matrices() {
        let z = decompose_m(&Array2::zeros((3, 3)));
        assert!(z.vorticity.iter().chain(z.shear.iter()).all(|v| *v == 0.0) && z.expansion == 0.0);
        let rot = array![[0.0, 1.0, 0.0], [-1.0, 0.0, 2.0], [0.0, -2.0, 0.0]];
        let d = decompose_m(&rot);
        assert_eq!(d.vorticity, rot);
        assert!(d.shear.iter().all(|v| *v == 0.0) && d.expansion == 0.0);
        let d = decompose_m(&Array2::eye(3));
        assert_eq!(d.expansion, 3.0);
        assert!(d.shear.iter().chain(d.vorticity.iter()).all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn verdict_is_a_max_reduction() {
        let mut v = Verdict::new("x", 1.0);
        v.observe(0.5, &[1.0], None);
        v.observe(0.9, &[2.0], None);
        v.observe(0.1, &[3.0], None);
        let v = v.finish();
        assert!(v.pass && v.worst_residual == 0.9 && v.worst_point == vec![2.0]);
        assert!(!Verdict::new("empty", 1.0).finish().pass);
    }
}
