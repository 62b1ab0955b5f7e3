//! Residual checks of the frame identities at one point.
//!
//! Each check writes an identity as `0 = Σ terms` per index component and
//! reports `|Σ terms| / (1 + max |term|)` at the worst component, together
//! with the signed terms there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::PointGeometry;
use crate::geometry::{constant_curvature_residual, fit_kappa, Scene};

/// Weight of the antisymmetrization `X_[jk] = w (X_jk − X_kj)`.
pub const ANTISYMMETRIZATION_WEIGHT: f64 = 1.0;
/// Riemann magnitude below which a point counts as flat.
pub const FLAT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub name: String,
    pub residual: f64,
    pub point: Vec<f64>,
    /// Index tuple of the worst component.
    pub component: Vec<usize>,
    /// Signed terms at the worst component; their sum is the unscaled residual.
    pub terms: Vec<Term>,
}

impl IdentityResult {
    pub fn signed_sum(&self) -> f64 {
        self.terms.iter().map(|t| t.value).sum()
    }
}

struct Worst {
    result: IdentityResult,
    seen: bool,
}

impl Worst {
    fn new(name: &str, pg: &PointGeometry) -> Worst {
        Worst {
            result: IdentityResult {
                name: name.into(),
                residual: 0.0,
                point: pg.frame.point.clone(),
                component: Vec::new(),
                terms: Vec::new(),
            },
            seen: false,
        }
    }

    fn push(&mut self, component: &[usize], terms: &[(&str, f64)]) {
        let sum: f64 = terms.iter().map(|t| t.1).sum();
        let scale = 1.0 + terms.iter().fold(0.0f64, |m, t| m.max(t.1.abs()));
        let r = sum.abs() / scale;
        if !self.seen || r > self.result.residual || r.is_nan() {
            self.seen = true;
            self.result.residual = r;
            self.result.component = component.to_vec();
            self.result.terms = terms
                .iter()
                .map(|(l, v)| Term {
                    label: l.to_string(),
                    value: *v,
                })
                .collect();
        }
    }

    fn done(self) -> IdentityResult {
        self.result
    }
}

/// `dω^m = ω^n ∧ ω^m_n` on every coordinate plane.
pub fn first_structure(pg: &PointGeometry) -> IdentityResult {
    let n = pg.dim();
    let gh = &pg.frame.gamma_hat;
    let w = &pg.frame.coframe;
    // conn[[m, nu, a]] = ω^m_{nu a} = Γ̂^m_{nu r} ω^r_a
    let conn = ndarray::Array3::from_shape_fn((n, n, n), |(m, nu, a)| {
        (0..n).map(|r| gh[[m, nu, r]] * w[[r, a]]).sum::<f64>()
    });
    let mut worst = Worst::new("first_structure", pg);
    for m in 0..n {
        for a in 0..n {
            for b in a + 1..n {
                let wedge: f64 = (0..n).map(|nu| w[[nu, a]] * conn[[m, nu, b]] - w[[nu, b]] * conn[[m, nu, a]]).sum();
                worst.push(
                    &[m, a, b],
                    &[
                        ("d_a omega^m_b", pg.dcoframe[[a, m, b]]),
                        ("-d_b omega^m_a", -pg.dcoframe[[b, m, a]]),
                        ("-(omega^n ^ omega^m_n)_ab", -wedge),
                    ],
                );
            }
        }
    }
    worst.done()
}

/// `K_[i;j] + \dot M_[ij] = 0`.
pub fn acceleration_curl(pg: &PointGeometry) -> IdentityResult {
    let d = &pg.d;
    let s = pg.dim() - 1;
    let w = ANTISYMMETRIZATION_WEIGHT;
    let mut worst = Worst::new("acceleration_curl", pg);
    for i in 0..s {
        for j in i + 1..s {
            worst.push(
                &[i, j],
                &[
                    ("w K_i;j", w * d.k_cd[[i, j]]),
                    ("-w K_j;i", -w * d.k_cd[[j, i]]),
                    ("w Mdot_ij", w * d.m_dot[[i, j]]),
                    ("-w Mdot_ji", -w * d.m_dot[[j, i]]),
                ],
            );
        }
    }
    worst.done()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BianchiMode {
    Flat,
    General,
}

/// Flat mode: `0 = −K_i;j − \dot M_ij + K_j K_i + M_ki M_kj + M_kj M_ki`.
/// General mode: `0 = K_i;j − \dot M_ij + K_i K_j + M_ki M_kj − R_0i0j`.
pub fn frame_bianchi(pg: &PointGeometry, mode: BianchiMode) -> Result<IdentityResult> {
    if mode == BianchiMode::Flat && pg.riemann.max_abs() > FLAT_TOL {
        return Err(Error::ModeUnavailable(format!(
            "flat mode needs a flat scene, max |R| = {:e}",
            pg.riemann.max_abs()
        )));
    }
    let s = pg.dim() - 1;
    let (k, m, d) = (&pg.frame.k, &pg.frame.m, &pg.d);
    let mut worst = Worst::new(
        match mode {
            BianchiMode::Flat => "frame_bianchi_flat",
            BianchiMode::General => "frame_bianchi_general",
        },
        pg,
    );
    for i in 0..s {
        for j in 0..s {
            let mm: f64 = (0..s).map(|l| m[[l, i]] * m[[l, j]]).sum();
            match mode {
                BianchiMode::Flat => worst.push(
                    &[i, j],
                    &[
                        ("-K_i;j", -d.k_cd[[i, j]]),
                        ("-Mdot_ij", -d.m_dot[[i, j]]),
                        ("K_j K_i", k[j] * k[i]),
                        ("M_ki M_kj", mm),
                        ("M_kj M_ki", mm),
                    ],
                ),
                BianchiMode::General => worst.push(
                    &[i, j],
                    &[
                        ("K_i;j", d.k_cd[[i, j]]),
                        ("-Mdot_ij", -d.m_dot[[i, j]]),
                        ("K_i K_j", k[i] * k[j]),
                        ("M_ki M_kj", mm),
                        ("-R_0i0j", -pg.frame_riemann[[0, i + 1, 0, j + 1]]),
                    ],
                ),
            }
        }
    }
    Ok(worst.done())
}

/// `R_ijkl = R̃_ijkl + M_ik M_jl − M_il M_jk − 2 M_ij M_lk`, the sign fixed
/// by `R̃ − R = −M_ik M_jl + M_il M_jk + 2 M_ij M_lk`.
pub fn base_curvature_relation(pg: &PointGeometry) -> IdentityResult {
    let s = pg.dim() - 1;
    let m = &pg.frame.m;
    let rt = &pg.base.r_tilde;
    let mut worst = Worst::new("base_curvature_relation", pg);
    for i in 0..s {
        for j in 0..s {
            for k in 0..s {
                for l in 0..s {
                    worst.push(
                        &[i, j, k, l],
                        &[
                            ("Rtilde_ijkl", rt[[i, j, k, l]]),
                            ("M_ik M_jl", m[[i, k]] * m[[j, l]]),
                            ("-M_il M_jk", -m[[i, l]] * m[[j, k]]),
                            ("-2 M_ij M_lk", -2.0 * m[[i, j]] * m[[l, k]]),
                            ("-R_ijkl", -pg.frame_riemann[[i + 1, j + 1, k + 1, l + 1]]),
                        ],
                    );
                }
            }
        }
    }
    worst.done()
}

fn require_homogeneous(homogeneous: bool, what: &str) -> Result<()> {
    if homogeneous {
        Ok(())
    } else {
        Err(Error::HypothesisUnmet(format!("{what} needs a constant-curvature scene")))
    }
}

/// `(R̃ − R)_ijji = 3 (M_ij)^2` for `i ≠ j`.
pub fn sectional_trace(pg: &PointGeometry, homogeneous: bool) -> Result<IdentityResult> {
    require_homogeneous(homogeneous, "sectional_trace")?;
    let s = pg.dim() - 1;
    let m = &pg.frame.m;
    let rt = &pg.base.r_tilde;
    let r = &pg.frame_riemann;
    let mut worst = Worst::new("sectional_trace", pg);
    for i in 0..s {
        for j in 0..s {
            if i == j {
                continue;
            }
            worst.push(
                &[i, j],
                &[
                    ("Rtilde_ijji", rt[[i, j, j, i]]),
                    ("-R_ijji", -r[[i + 1, j + 1, j + 1, i + 1]]),
                    ("-3 M_ij^2", -3.0 * m[[i, j]] * m[[i, j]]),
                ],
            );
        }
    }
    Ok(worst.done())
}

/// `0 = M_i[j;k] − 2 K_i M_kj` on constant-curvature scenes, where `R_0ijk = 0`.
pub fn mixed_curvature(pg: &PointGeometry, homogeneous: bool) -> Result<IdentityResult> {
    require_homogeneous(homogeneous, "mixed_curvature")?;
    let s = pg.dim() - 1;
    let (k, m, d) = (&pg.frame.k, &pg.frame.m, &pg.d);
    let w = ANTISYMMETRIZATION_WEIGHT;
    let mut worst = Worst::new("mixed_curvature", pg);
    for i in 0..s {
        for j in 0..s {
            for kk in 0..s {
                worst.push(
                    &[i, j, kk],
                    &[
                        ("w M_ij;k", w * d.m_cd[[i, j, kk]]),
                        ("-w M_ik;j", -w * d.m_cd[[i, kk, j]]),
                        ("-2 K_i M_kj", -2.0 * k[i] * m[[kk, j]]),
                    ],
                );
            }
        }
    }
    Ok(worst.done())
}

/// `R_0ijk = M_ij;k − M_ik;j + K_i (M_kj − M_jk)` on any scene.
pub fn mixed_curvature_general(pg: &PointGeometry) -> IdentityResult {
    let s = pg.dim() - 1;
    let (k, m, d) = (&pg.frame.k, &pg.frame.m, &pg.d);
    let mut worst = Worst::new("mixed_curvature_general", pg);
    for i in 0..s {
        for j in 0..s {
            for kk in 0..s {
                worst.push(
                    &[i, j, kk],
                    &[
                        ("M_ij;k", d.m_cd[[i, j, kk]]),
                        ("-M_ik;j", -d.m_cd[[i, kk, j]]),
                        ("K_i M_kj", k[i] * m[[kk, j]]),
                        ("-K_i M_jk", -k[i] * m[[j, kk]]),
                        ("-R_0ijk", -pg.frame_riemann[[0, i + 1, j + 1, kk + 1]]),
                    ],
                );
            }
        }
    }
    worst.done()
}

/// `I_0(λ) = 0` and `I_i(λ) = λ K_i`.
pub fn lambda_relation(pg: &PointGeometry) -> IdentityResult {
    let s = pg.dim() - 1;
    let fs = &pg.frame;
    let mut worst = Worst::new("lambda_relation", pg);
    worst.push(&[0], &[("I_0 lambda", pg.dlambda[0])]);
    for i in 0..s {
        worst.push(&[i + 1], &[("I_i lambda", pg.dlambda[i + 1]), ("-lambda K_i", -fs.lambda * fs.k[i])]);
    }
    worst.done()
}

/// Constant-curvature test at a single point, with the scene's `κ` or a fit.
pub fn homogeneous_at(scene: &Scene, pg: &PointGeometry, tol: f64) -> bool {
    let kappa = scene.kappa.unwrap_or_else(|| fit_kappa(&pg.riemann, &pg.metric));
    constant_curvature_residual(&pg.riemann, &pg.metric, kappa) < tol
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    All,
    Structural,
    Curvature,
    Derivatives,
}

impl Suite {
    pub fn parse(text: &str) -> Option<Suite> {
        match text {
            "all" => Some(Suite::All),
            "structural" => Some(Suite::Structural),
            "curvature" => Some(Suite::Curvature),
            "derivatives" => Some(Suite::Derivatives),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Structural => "structural",
            Suite::Curvature => "curvature",
            Suite::Derivatives => "derivatives",
        }
    }

    /// Check names in run order.
    pub fn checks(self) -> &'static [&'static str] {
        const STRUCTURAL: &[&str] = &["first_structure", "lambda_relation"];
        const DERIVATIVES: &[&str] = &[
            "acceleration_curl",
            "frame_bianchi_flat",
            "frame_bianchi_general",
            "mixed_curvature",
            "mixed_curvature_general",
        ];
        const CURVATURE: &[&str] = &["base_curvature_relation", "sectional_trace"];
        const ALL: &[&str] = &[
            "first_structure",
            "lambda_relation",
            "acceleration_curl",
            "frame_bianchi_flat",
            "frame_bianchi_general",
            "mixed_curvature",
            "mixed_curvature_general",
            "base_curvature_relation",
            "sectional_trace",
        ];
        match self {
            Suite::All => ALL,
            Suite::Structural => STRUCTURAL,
            Suite::Derivatives => DERIVATIVES,
            Suite::Curvature => CURVATURE,
        }
    }
}

/// Scene property under which a check is asserted; otherwise it is reported only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assertion {
    Always,
    RigidFlow,
    KillingFlow,
    /// Printed form that fails on rotating or accelerated flows; reported only.
    Reported,
}

pub fn assertion_for(name: &str) -> Assertion {
    match name {
        "lambda_relation" => Assertion::KillingFlow,
        "acceleration_curl" | "base_curvature_relation" | "sectional_trace" => Assertion::RigidFlow,
        "frame_bianchi_flat" | "mixed_curvature" => Assertion::Reported,
        _ => Assertion::Always,
    }
}

/// The identity each named check evaluates, as written in reports.
pub fn adopted_form(name: &str) -> &'static str {
    match name {
        "first_structure" => "d omega^m = omega^n ^ omega^m_n",
        "lambda_relation" => "I_0(lambda) = 0, I_i(lambda) = lambda K_i",
        "acceleration_curl" => "K_[i;j] + Mdot_[ij] = 0, X_[ij] = X_ij - X_ji",
        "frame_bianchi_flat" => "0 = -K_i;j - Mdot_ij + K_j K_i + M_ki M_kj + M_kj M_ki (flat points)",
        "frame_bianchi_general" => "0 = K_i;j - Mdot_ij + K_i K_j + M_ki M_kj - R_0i0j",
        "mixed_curvature" => "0 = M_ij;k - M_ik;j - 2 K_i M_kj (constant curvature)",
        "mixed_curvature_general" => "R_0ijk = M_ij;k - M_ik;j + K_i (M_kj - M_jk)",
        "base_curvature_relation" => "R_ijkl = Rtilde_ijkl + M_ik M_jl - M_il M_jk - 2 M_ij M_lk",
        "sectional_trace" => "(Rtilde - R)_ijji = 3 M_ij^2, i != j (constant curvature)",
        _ => "",
    }
}

/// Outcome of one named check at one point.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckOutcome {
    Done(IdentityResult),
    /// Hypothesis or mode not available at this point.
    Skipped(String),
}

pub fn run_check(name: &str, pg: &PointGeometry, homogeneous: bool) -> CheckOutcome {
    let res = match name {
        "first_structure" => Ok(first_structure(pg)),
        "lambda_relation" => Ok(lambda_relation(pg)),
        "acceleration_curl" => Ok(acceleration_curl(pg)),
        "frame_bianchi_flat" => frame_bianchi(pg, BianchiMode::Flat),
        "frame_bianchi_general" => frame_bianchi(pg, BianchiMode::General),
        "mixed_curvature" => mixed_curvature(pg, homogeneous),
        "mixed_curvature_general" => Ok(mixed_curvature_general(pg)),
        "base_curvature_relation" => Ok(base_curvature_relation(pg)),
        "sectional_trace" => sectional_trace(pg, homogeneous),
        other => Err(Error::ModeUnavailable(format!("unknown check `{other}`"))),
    };
    match res {
        Ok(r) => CheckOutcome::Done(r),
        Err(e) => CheckOutcome::Skipped(e.to_string()),
    }
}

fn at(scene: &Scene, point: &[f64]) -> Result<PointGeometry> {
    PointGeometry::analyze(scene, point)
}

pub fn check_first_structure(scene: &Scene, point: &[f64]) -> Result<IdentityResult> {
    Ok(first_structure(&at(scene, point)?))
}

pub fn check_acceleration_curl(scene: &Scene, point: &[f64]) -> Result<IdentityResult> {
    Ok(acceleration_curl(&at(scene, point)?))
}

pub fn check_frame_bianchi(scene: &Scene, point: &[f64], mode: BianchiMode) -> Result<IdentityResult> {
    frame_bianchi(&at(scene, point)?, mode)
}

pub fn check_base_curvature_relation(scene: &Scene, point: &[f64]) -> Result<IdentityResult> {
    Ok(base_curvature_relation(&at(scene, point)?))
}

pub fn check_sectional_trace(scene: &Scene, point: &[f64], tol: f64) -> Result<IdentityResult> {
    let pg = at(scene, point)?;
    sectional_trace(&pg, homogeneous_at(scene, &pg, tol))
}

pub fn check_mixed_curvature(scene: &Scene, point: &[f64], tol: f64) -> Result<IdentityResult> {
    let pg = at(scene, point)?;
    mixed_curvature(&pg, homogeneous_at(scene, &pg, tol))
}

pub fn check_mixed_curvature_general(scene: &Scene, point: &[f64]) -> Result<IdentityResult> {
    Ok(mixed_curvature_general(&at(scene, point)?))
}

pub fn check_lambda_relation(scene: &Scene, point: &[f64]) -> Result<IdentityResult> {
    Ok(lambda_relation(&at(scene, point)?))
}
