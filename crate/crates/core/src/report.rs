//! Orchestration of a sampled analysis and its text and JSON renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Params;
use crate::frame::{PointGeometry, EPS_GS};
use crate::geometry::{killing_verdict, DomainBox, Scene};
use crate::identities::{
    adopted_form, assertion_for, homogeneous_at, run_check, Assertion, CheckOutcome, IdentityResult, Suite,
    ANTISYMMETRIZATION_WEIGHT,
};
use crate::kinematics::{
    isometry_criteria_from, rigidity_from, theorem_report_from, timelike_domain_check, Conclusion,
    KinematicInvariants, TheoremReport, Tolerances, Verdict,
};
use crate::sampling::{SamplePlan, RNG_ALGORITHM};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDigest {
    pub name: String,
    pub dimension: usize,
    pub coordinates: Vec<String>,
    /// Upper triangle, row by row from the diagonal.
    pub metric: Vec<Vec<String>>,
    pub flow: Vec<String>,
    pub parameters: Params,
    pub kappa: Option<f64>,
}

impl SceneDigest {
    pub fn of(scene: &Scene) -> SceneDigest {
        let n = scene.dim();
        SceneDigest {
            name: scene.name.clone(),
            dimension: n,
            coordinates: scene.coords.clone(),
            metric: (0..n)
                .map(|m| (m..n).map(|nu| scene.metric_text(m, nu).to_string()).collect())
                .collect(),
            flow: (0..n).map(|m| scene.flow_text(m).to_string()).collect(),
            parameters: scene.params.clone(),
            kappa: scene.kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convention {
    pub name: String,
    pub value: String,
}

/// Conventions every number in a report depends on.
pub fn conventions() -> Vec<Convention> {
    let items = [
        ("signature", "eta = diag(-1, +1, ..., +1); I_0 = V / lambda, lambda = sqrt(-g(V,V))".to_string()),
        (
            "gram-schmidt",
            format!("candidates d_1, ..., d_(n-1), then d_0; a candidate is skipped when its squared norm is below {EPS_GS:e}"),
        ),
        (
            "riemann",
            "R^m_nrs = d_r Gamma^m_ns - d_s Gamma^m_nr + Gamma^m_rl Gamma^l_ns - Gamma^m_sl Gamma^l_nr".into(),
        ),
        ("curvature-forms", "Omega^a_b = 1/2 R^a_bcd omega^c ^ omega^d, R_abcd = eta_aa R^a_bcd".into()),
        ("connection", "Gamma-hat^m_nr = omega^m(nabla_(I_r) I_n); K_i = Gamma-hat^i_00, M_ij = Gamma-hat^i_0j".into()),
        ("base-connection", "omega-tilde^i_j = omega^i_j - M^i_j omega^0; D built from (omega^0, omega^i) and (0, omega-tilde^i_j)".into()),
        (
            "antisymmetrization",
            format!("identities: X_[ij] = {ANTISYMMETRIZATION_WEIGHT} (X_ij - X_ji); verdicts: 1/2 (X_ij - X_ji)"),
        ),
        ("identity-residual", "|sum of terms| / (1 + max |term|) at the worst component".into()),
        ("verdict-residual", "absolute maximum over points and components".into()),
        ("k-dot", "D_0 K_i; I_0(K_i) is reported separately".into()),
        ("rng", RNG_ALGORITHM.into()),
    ];
    items
        .into_iter()
        .map(|(name, value)| Convention {
            name: name.into(),
            value,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDigest {
    pub kind: String,
    pub seed: u64,
    pub domain: DomainBox,
    pub rng: String,
}

/// A sample point that did not enter the verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedPoint {
    pub index: usize,
    pub point: Vec<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEntry {
    pub index: usize,
    pub point: Vec<f64>,
    pub invariants: KinematicInvariants,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityRow {
    pub name: String,
    pub form: String,
    pub assertion: Assertion,
    /// Whether the scene meets `assertion`.
    pub asserted: bool,
    pub pass: bool,
    pub evaluated: usize,
    pub skipped: usize,
    pub skip_reason: Option<String>,
    pub worst: Option<IdentityResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scene: SceneDigest,
    pub conventions: Vec<Convention>,
    pub plan: PlanDigest,
    pub tolerances: Tolerances,
    pub excluded: Vec<ExcludedPoint>,
    pub points: Vec<PointEntry>,
    pub verdicts: Vec<Verdict>,
    /// False when Born rigidity fails, so the isometry criteria do not apply.
    pub isometry_criteria_apply: bool,
    pub rotational: bool,
    pub identities: Vec<IdentityRow>,
    pub theorem: TheoremReport,
}

impl Report {
    pub fn verdict(&self, criterion: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.criterion == criterion)
    }

    pub fn identity(&self, name: &str) -> Option<&IdentityRow> {
        self.identities.iter().find(|r| r.name == name)
    }

    /// Asserted identities that failed, plus a theorem conclusion contradicting the implication.
    pub fn asserted_failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .identities
            .iter()
            .filter(|r| r.asserted && r.evaluated > 0 && !r.pass)
            .map(|r| r.name.clone())
            .collect();
        if self.theorem.conclusion == Conclusion::CounterexampleCandidate {
            out.push(Conclusion::CounterexampleCandidate.label().into());
        }
        out
    }
}

/// Samples `plan`, drops points where the flow is not timelike or the frame
/// fails, and evaluates verdicts, identities and the theorem on the rest.
pub fn run_analysis(scene: &Scene, plan: &SamplePlan, tols: &Tolerances, suite: Option<Suite>) -> Result<Report> {
    if plan.domain.dim() != scene.dim() {
        return Err(Error::schema(
            "domain",
            format!("plan has {} coordinates, scene has {}", plan.domain.dim(), scene.dim()),
        ));
    }
    let points = plan.points()?;
    let mut excluded = Vec::new();
    let mut geoms = Vec::new();
    let mut indices = Vec::new();
    let mut first_error = None;
    for (index, entry) in timelike_domain_check(scene, &points).into_iter().enumerate() {
        let outcome = if entry.timelike {
            PointGeometry::analyze(scene, &entry.point)
        } else {
            match entry.norm2 {
                Some(norm2) => Err(Error::TimelikeViolation { norm2 }),
                None => scene.flow_norm2(&entry.point).and(Err(Error::TimelikeViolation { norm2: f64::NAN })),
            }
        };
        match outcome {
            Ok(pg) => {
                geoms.push(pg);
                indices.push(index);
            }
            Err(e) if e.is_pointwise() => {
                excluded.push(ExcludedPoint {
                    index,
                    point: entry.point,
                    reason: e.to_string(),
                });
                first_error.get_or_insert(e);
            }
            Err(e) => return Err(e),
        }
    }
    if geoms.is_empty() {
        return Err(first_error.unwrap_or_else(|| Error::schema("points", "sample plan is empty")));
    }

    let theorem = theorem_report_from(scene, &geoms, tols)?;
    let rigidity = rigidity_from(&geoms, tols.tol);
    let isometry = isometry_criteria_from(&geoms, tols.tol);
    let valid: Vec<Vec<f64>> = geoms.iter().map(|pg| pg.frame.point.clone()).collect();
    let killing = killing_verdict(scene, &valid, tols.tol)?;
    let isometry_criteria_apply = rigidity.pass;
    let verdicts = vec![
        rigidity.clone(),
        isometry.curl,
        isometry.rotation,
        killing.clone(),
        theorem.homogeneity.clone(),
        theorem.m_dot_zero.clone(),
        theorem.k_dot_zero.clone(),
    ];

    let identities = match suite {
        Some(suite) => identity_rows(scene, &geoms, suite, tols, rigidity.pass, killing.pass),
        None => Vec::new(),
    };

    let points = geoms
        .iter()
        .zip(&indices)
        .map(|(pg, &index)| PointEntry {
            index,
            point: pg.frame.point.clone(),
            invariants: KinematicInvariants::from_geometry(pg),
        })
        .collect();

    Ok(Report {
        scene: SceneDigest::of(scene),
        conventions: conventions(),
        plan: PlanDigest {
            kind: plan.kind.label(),
            seed: plan.seed,
            domain: plan.domain.clone(),
            rng: RNG_ALGORITHM.into(),
        },
        tolerances: *tols,
        excluded,
        points,
        verdicts,
        isometry_criteria_apply,
        rotational: theorem.rotational,
        identities,
        theorem,
    })
}

fn identity_rows(
    scene: &Scene,
    geoms: &[PointGeometry],
    suite: Suite,
    tols: &Tolerances,
    rigid: bool,
    killing: bool,
) -> Vec<IdentityRow> {
    let homogeneous: Vec<bool> = geoms.iter().map(|pg| homogeneous_at(scene, pg, tols.tol)).collect();
    suite
        .checks()
        .iter()
        .map(|name| {
            let assertion = assertion_for(name);
            let mut row = IdentityRow {
                name: name.to_string(),
                form: adopted_form(name).into(),
                assertion,
                asserted: match assertion {
                    Assertion::Always => true,
                    Assertion::RigidFlow => rigid,
                    Assertion::KillingFlow => killing,
                    Assertion::Reported => false,
                },
                pass: true,
                evaluated: 0,
                skipped: 0,
                skip_reason: None,
                worst: None,
            };
            for (pg, &hom) in geoms.iter().zip(&homogeneous) {
                match run_check(name, pg, hom) {
                    CheckOutcome::Done(r) => {
                        row.evaluated += 1;
                        let worse = match &row.worst {
                            None => true,
                            Some(w) => r.residual > w.residual || r.residual.is_nan(),
                        };
                        if worse {
                            row.worst = Some(r);
                        }
                    }
                    CheckOutcome::Skipped(reason) => {
                        row.skipped += 1;
                        row.skip_reason.get_or_insert(reason);
                    }
                }
            }
            row.pass = row.worst.as_ref().is_none_or(|w| w.residual < tols.identity);
            row
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
}

impl Format {
    pub fn parse(text: &str) -> Option<Format> {
        match text {
            "text" => Some(Format::Text),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

/// Renders `report`; identical reports give identical bytes.
pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Text => text_report(report),
    }
}

pub fn parse_report(json: &str) -> Result<Report> {
    serde_json::from_str(json).map_err(|e| Error::schema("report", e.to_string()))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn nums(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", parts.join(", "))
}

fn pass_fail(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn text_report(r: &Report) -> String {
    let mut s = String::new();
    let sc = &r.scene;
    let _ = writeln!(s, "scene {} dimension {}", sc.name, sc.dimension);
    let _ = writeln!(s, "coordinates {}", sc.coordinates.join(" "));
    for (m, row) in sc.metric.iter().enumerate() {
        for (k, text) in row.iter().enumerate() {
            let _ = writeln!(s, "metric[{m}][{}] = {text}", m + k);
        }
    }
    for (m, text) in sc.flow.iter().enumerate() {
        let _ = writeln!(s, "flow[{m}] = {text}");
    }
    for (k, v) in &sc.parameters {
        let _ = writeln!(s, "parameter {k} = {}", num(*v));
    }
    if let Some(k) = sc.kappa {
        let _ = writeln!(s, "kappa {}", num(k));
    }
    for c in &r.conventions {
        let _ = writeln!(s, "convention {}: {}", c.name, c.value);
    }
    let _ = writeln!(
        s,
        "plan {} seed {} domain min {} max {}",
        r.plan.kind,
        r.plan.seed,
        nums(&r.plan.domain.min),
        nums(&r.plan.domain.max)
    );
    let t = &r.tolerances;
    let _ = writeln!(
        s,
        "tolerances tol {} tol_rot {} identity {}",
        num(t.tol),
        num(t.tol_rot),
        num(t.identity)
    );
    let _ = writeln!(s, "points analyzed {} excluded {}", r.points.len(), r.excluded.len());
    for e in &r.excluded {
        let _ = writeln!(s, "excluded #{} {} {}", e.index, nums(&e.point), e.reason);
    }
    for p in &r.points {
        let k = &p.invariants;
        let _ = writeln!(
            s,
            "point #{} {} lambda {} |K| {} |omega| {} expansion {}",
            p.index,
            nums(&p.point),
            num(k.lambda),
            num(k.acceleration_magnitude),
            num(k.vorticity_magnitude),
            num(k.expansion)
        );
    }
    for v in &r.verdicts {
        let note = if !r.isometry_criteria_apply && v.criterion.starts_with("rigid-isometry") {
            " (born-rigidity failed; criterion does not apply)"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "verdict {} {} worst {} tol {} points {} at {}{note}",
            v.criterion,
            pass_fail(v.pass),
            num(v.worst_residual),
            num(v.tolerance),
            v.points,
            nums(&v.worst_point)
        );
    }
    let _ = writeln!(s, "rotational {}", r.rotational);
    for row in &r.identities {
        let status = if row.evaluated == 0 {
            "SKIP"
        } else if !row.asserted {
            "INFO"
        } else {
            pass_fail(row.pass)
        };
        let worst = row.worst.as_ref().map_or("-".to_string(), |w| num(w.residual));
        let _ = write!(
            s,
            "identity {} {status} worst {worst} evaluated {} skipped {} asserted-when {}",
            row.name,
            row.evaluated,
            row.skipped,
            serde_json::to_value(row.assertion).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        );
        let _ = writeln!(s, " form {}", row.form);
        if let Some(w) = &row.worst {
            let terms: Vec<String> = w.terms.iter().map(|t| format!("{} = {}", t.label, num(t.value))).collect();
            let _ = writeln!(
                s,
                "  at {} component {:?}: {}",
                nums(&w.point),
                w.component,
                terms.join("; ")
            );
        }
        if let Some(reason) = &row.skip_reason {
            let _ = writeln!(s, "  skipped: {reason}");
        }
    }
    let th = &r.theorem;
    let _ = writeln!(
        s,
        "theorem kappa {} ({}) conclusion {}",
        num(th.kappa),
        if th.kappa_declared { "declared" } else { "fitted" },
        th.conclusion.label()
    );
    s
}
