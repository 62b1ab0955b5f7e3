use std::process::Command;

use ndarray::{Array2, Array3};
use rigidflow_core::frame::{adapt_frame, d_derivatives, DSample, FrameSample};
use rigidflow_core::identities::{
    acceleration_curl, base_curvature_relation, first_structure, frame_bianchi, homogeneous_at, mixed_curvature,
    mixed_curvature_general, sectional_trace, BianchiMode,
};
use rigidflow_core::kinematics::{
    herglotz_noether_report, isometry_via_criteria, rigidity_verdict, rotational_predicate,
    timelike_domain_check, Conclusion, KinematicInvariants, Tolerances,
};
use rigidflow_core::models::expected_verdicts;
use rigidflow_core::{
    build_model, christoffel, covariant_d_derivatives, killing_verdict, riemann, sample_metric, DomainBox, ModelSpec, PlanKind,
    PointGeometry, SamplePlan, Scene,
};

const IDENTITY_TOL: f64 = 1e-7;
const VERDICT_TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
    /// Failure matching a documented, unattainable clause.
    known_red: bool,
}

impl Outcome {
    fn check(pass: bool, detail: impl Into<String>) -> Outcome {
        Outcome {
            pass,
            detail: detail.into(),
            known_red: false,
        }
    }
}

fn model(metric: &str, dim: usize, kappa: Option<f64>, flow: &str, omega: Option<f64>) -> ModelSpec {
    let mut spec = ModelSpec::new(metric, dim).flow(flow);
    if let Some(k) = kappa {
        spec = spec.param("kappa", k);
    }
    if let Some(w) = omega {
        spec = spec.flow_param("omega", w);
    }
    spec
}

fn sample(scene: &Scene, count: usize, seed: u64) -> Vec<Vec<f64>> {
    SamplePlan::new(PlanKind::Random(count), scene.domain.clone().expect("model domain"), seed)
        .points()
        .expect("points")
}

fn flows() -> Vec<(&'static str, Option<f64>)> {
    vec![("static", None), ("rotating", Some(0.3)), ("rotating", Some(0.5))]
}

fn label(spec: &ModelSpec) -> String {
    let mut s = format!("{}({})", spec.metric, spec.dim);
    for (k, v) in &spec.params {
        s += &format!(" {k}={v}");
    }
    s += &format!(" {}", spec.flow);
    for (k, v) in &spec.flow_params {
        s += &format!(" {k}={v}");
    }
    s
}

#[derive(Default)]
struct Worst {
    residual: f64,
    at: String,
}

impl Worst {
    fn observe(&mut self, r: f64, at: &str) {
        if r > self.residual || r.is_nan() {
            self.residual = r;
            self.at = at.into();
        }
    }
}

fn identity_suite() -> Outcome {
    let mut scenes = Vec::new();
    for dim in [3, 4, 5, 6] {
        scenes.push(("minkowski", dim, None, true));
    }
    for kappa in [1.0, -1.0] {
        for dim in [4, 5] {
            scenes.push(("constant_curvature", dim, Some(kappa), true));
        }
    }
    scenes.push(("einstein_static", 4, None, false));

    let names = [
        "first_structure",
        "acceleration_curl",
        "base_curvature_relation",
        "sectional_trace",
        "mixed_curvature",
        "frame_bianchi_flat",
        "frame_bianchi_general",
        "mixed_curvature_general",
    ];
    let mut worst: Vec<Worst> = names.iter().map(|_| Worst::default()).collect();
    let mut evaluated = 0usize;
    let mut errors = Vec::new();
    for (metric, dim, kappa, constant) in scenes {
        for (flow, omega) in flows() {
            let spec = model(metric, dim, kappa, flow, omega);
            let scene = build_model(&spec).expect("catalog scene");
            let at = label(&spec);
            for p in sample(&scene, 50, 1000 + dim as u64) {
                let pg = match PointGeometry::analyze(&scene, &p) {
                    Ok(pg) => pg,
                    Err(e) => {
                        errors.push(format!("{at}: {e}"));
                        continue;
                    }
                };
                evaluated += 1;
                let hom = homogeneous_at(&scene, &pg, VERDICT_TOL);
                if hom != constant {
                    errors.push(format!("{at}: homogeneity test gave {hom}"));
                }
                worst[0].observe(first_structure(&pg).residual, &at);
                worst[1].observe(acceleration_curl(&pg).residual, &at);
                worst[2].observe(base_curvature_relation(&pg).residual, &at);
                if constant {
                    worst[3].observe(sectional_trace(&pg, hom).map(|r| r.residual).unwrap_or(f64::NAN), &at);
                    worst[4].observe(mixed_curvature(&pg, hom).map(|r| r.residual).unwrap_or(f64::NAN), &at);
                }
                if metric == "minkowski" {
                    let r = frame_bianchi(&pg, BianchiMode::Flat).map(|r| r.residual).unwrap_or(f64::NAN);
                    worst[5].observe(r, &at);
                }
                worst[6].observe(frame_bianchi(&pg, BianchiMode::General).unwrap().residual, &at);
                worst[7].observe(mixed_curvature_general(&pg).residual, &at);
            }
        }
    }
    let failing: Vec<&str> = names
        .iter()
        .zip(&worst)
        .filter(|(_, w)| !(w.residual < IDENTITY_TOL))
        .map(|(n, _)| *n)
        .collect();
    let mut detail = format!("{evaluated} points;");
    for (n, w) in names.iter().zip(&worst) {
        detail += &format!(" {n} {:.1e}", w.residual);
        if !(w.residual < IDENTITY_TOL) {
            detail += &format!(" [{}]", w.at);
        }
        detail += ";";
    }
    if !errors.is_empty() {
        detail += &format!(" errors: {}", errors.join(" | "));
    }
    let known = ["frame_bianchi_flat", "mixed_curvature"];
    let known_red = errors.is_empty() && !failing.is_empty() && failing.iter().all(|n| known.contains(n));
    if known_red {
        detail += " printed forms of the frame Bianchi and mixed curvature identities do not hold on \
                   rotating flows; their general forms hold on every point";
    }
    Outcome {
        pass: failing.is_empty() && errors.is_empty(),
        detail,
        known_red,
    }
}

fn corpus() -> Vec<ModelSpec> {
    let mut out = Vec::new();
    let metrics: [(&str, Option<f64>); 6] = [
        ("minkowski", None),
        ("constant_curvature", Some(1.0)),
        ("constant_curvature", Some(-1.0)),
        ("de_sitter", None),
        ("anti_de_sitter", None),
        ("einstein_static", None),
    ];
    for dim in [3, 4, 5] {
        for (metric, kappa) in metrics {
            for (flow, omega) in flows() {
                out.push(model(metric, dim, kappa, flow, omega));
            }
            out.push(model(metric, dim, kappa, "perturbed_rotating", Some(0.5)));
        }
        out.push(model("minkowski", dim, None, "milne", None));
        out.push(model("minkowski", dim, None, "fermi_rigid", None));
    }
    out
}

fn theorem_instantiation() -> Outcome {
    let tols = Tolerances::default();
    let mut bad = Vec::new();
    let (mut instantiated, mut runs) = (0, 0);
    for spec in corpus() {
        let scene = build_model(&spec).expect("catalog scene");
        let at = label(&spec);
        let report = match herglotz_noether_report(&scene, &sample(&scene, 20, 7), &tols) {
            Ok(r) => r,
            Err(e) => {
                bad.push(format!("{at}: {e}"));
                continue;
            }
        };
        runs += 1;
        let expected = expected_verdicts(&spec).expect("expected verdicts");
        let theorem_case = expected.kappa.is_some() && spec.flow == "rotating";
        if report.conclusion == Conclusion::CounterexampleCandidate {
            bad.push(format!("{at}: counterexample-candidate"));
        }
        if theorem_case {
            if report.conclusion == Conclusion::TheoremInstantiated {
                instantiated += 1;
            } else {
                bad.push(format!("{at}: {}", report.conclusion.label()));
            }
        }
    }
    Outcome::check(
        bad.is_empty(),
        format!("{runs} scenes, {instantiated} theorem-instantiated, no counterexample-candidate {}", bad.join(" | ")),
    )
}

fn killing_flows_are_rigid() -> Outcome {
    let mut bad = Vec::new();
    let mut count = 0;
    let mut worst = 0.0f64;
    for spec in corpus().into_iter().chain([ModelSpec::new("minkowski", 2)]) {
        if !expected_verdicts(&spec).expect("expected").killing {
            continue;
        }
        let scene = build_model(&spec).expect("catalog scene");
        let pts = sample(&scene, 20, 11);
        let killing = killing_verdict(&scene, &pts, VERDICT_TOL).expect("killing");
        let rigid = rigidity_verdict(&scene, &pts, VERDICT_TOL).expect("rigidity");
        count += 1;
        worst = worst.max(rigid.worst_residual);
        if !killing.pass || !rigid.pass {
            bad.push(format!("{} killing {} rigid {}", label(&spec), killing.pass, rigid.pass));
        }
    }
    Outcome::check(
        bad.is_empty(),
        format!("{count} Killing flows, worst rigidity residual {worst:.1e} {}", bad.join(" | ")),
    )
}

fn fermi_rigid_necessity() -> Outcome {
    let spec = ModelSpec::new("minkowski", 4)
        .flow("fermi_rigid")
        .flow_param("a0", 0.3)
        .flow_param("a1", 0.1);
    let scene = build_model(&spec).expect("fermi scene");
    let pts = sample(&scene, 30, 5);
    let rigid = rigidity_verdict(&scene, &pts, VERDICT_TOL).unwrap();
    let rotational = pts.iter().any(|p| rotational_predicate(&scene, p, 1e-4).unwrap());
    let killing = killing_verdict(&scene, &pts, VERDICT_TOL).unwrap();
    let iso = isometry_via_criteria(&scene, &pts, VERDICT_TOL).unwrap();
    let max_k_dot = pts
        .iter()
        .map(|p| covariant_d_derivatives(&scene, p).unwrap().k_dot.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .fold(0.0f64, f64::max);
    let via_k_dot = |v: &rigidflow_core::Verdict| {
        !v.pass && v.worst_component.as_ref().is_some_and(|c| c.len() == 1) && v.worst_residual == max_k_dot
    };
    let flat = pts
        .iter()
        .map(|p| riemann(&christoffel(&sample_metric(&scene, p).unwrap())).max_abs())
        .fold(0.0f64, f64::max);
    let pass = rigid.pass && !rotational && !killing.pass && via_k_dot(&iso.curl) && via_k_dot(&iso.rotation) && flat < 1e-9;
    Outcome::check(
        pass,
        format!(
            "rigid {} ({:.1e}), rotational {rotational}, killing {} ({:.2e}), curl criterion {} and rotation criterion {} \
             via max |Kdot| {max_k_dot:.3e}, max |R| {flat:.1e}",
            rigid.pass, rigid.worst_residual, killing.pass, killing.worst_residual, iso.curl.pass, iso.rotation.pass
        ),
    )
}

fn rigidity_criterion() -> Outcome {
    let milne = build_model(&ModelSpec::new("minkowski", 4).flow("milne")).unwrap();
    let pts = sample(&milne, 30, 3);
    let rigid = rigidity_verdict(&milne, &pts, VERDICT_TOL).unwrap();
    let mut expansion_err = 0.0f64;
    let mut residual_err = 0.0f64;
    let mut tau_range = (f64::INFINITY, 0.0f64);
    for p in &pts {
        let tau = (p[0] * p[0] - p[1] * p[1]).sqrt();
        tau_range = (tau_range.0.min(tau), tau_range.1.max(tau));
        let pg = PointGeometry::analyze(&milne, p).unwrap();
        let inv = KinematicInvariants::from_geometry(&pg);
        expansion_err = expansion_err.max((inv.expansion - 1.0 / tau).abs());
        let single = rigidity_verdict(&milne, std::slice::from_ref(p), VERDICT_TOL).unwrap();
        residual_err = residual_err.max((single.worst_residual - 1.0 / tau).abs());
    }
    let perturbed = build_model(
        &ModelSpec::new("minkowski", 4)
            .flow("perturbed_rotating")
            .flow_param("omega", 0.5)
            .flow_param("epsilon", 0.1),
    )
    .unwrap();
    let ppts = sample(&perturbed, 30, 3);
    let prigid = rigidity_verdict(&perturbed, &ppts, VERDICT_TOL).unwrap();
    let shear = ppts
        .iter()
        .map(|p| {
            let inv = KinematicInvariants::from_geometry(&PointGeometry::analyze(&perturbed, p).unwrap());
            inv.shear.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0f64, f64::max);
    let in_range = tau_range.0 >= 1.0 && tau_range.1 <= 2.0;
    let pass = !rigid.pass && expansion_err < 1e-6 && residual_err < 1e-6 && in_range && !prigid.pass && shear > 1e-3;
    Outcome::check(
        pass,
        format!(
            "milne rigid {} with |expansion - 1/tau| {expansion_err:.1e}, |residual - 1/tau| {residual_err:.1e}, \
             tau in [{:.3}, {:.3}]; perturbed_rotating rigid {} with max |shear| {shear:.3e}",
            rigid.pass, tau_range.0, tau_range.1, prigid.pass
        ),
    )
}

fn finite_difference_d(scene: &Scene, fs: &FrameSample, h: f64) -> DSample {
    let n = fs.dim();
    let s = n - 1;
    let mut dk = Array2::zeros((s, n));
    let mut dm = Array3::zeros((s, s, n));
    for mu in 0..n {
        let shifted = |sign: f64| -> FrameSample {
            let q: Vec<f64> = (0..n).map(|a| fs.point[a] + sign * h * fs.frame[[a, mu]]).collect();
            adapt_frame(scene, &q).unwrap()
        };
        let (plus, minus) = (shifted(1.0), shifted(-1.0));
        for i in 0..s {
            dk[[i, mu]] = (plus.k[i] - minus.k[i]) / (2.0 * h);
            for j in 0..s {
                dm[[i, j, mu]] = (plus.m[[i, j]] - minus.m[[i, j]]) / (2.0 * h);
            }
        }
    }
    d_derivatives(fs, &dk, &dm)
}

fn relative_error<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    let (mut diff, mut scale) = (0.0f64, 1.0f64);
    for (x, y) in a.zip(b) {
        diff = diff.max((x - y).abs());
        scale = scale.max(y.abs());
    }
    diff / scale
}

fn derivative_oracle() -> Outcome {
    let scene = build_model(&ModelSpec::new("minkowski", 4).flow("rotating").flow_param("omega", 0.5)).unwrap();
    let mut worst = 0.0f64;
    for p in sample(&scene, 20, 17) {
        let jet = covariant_d_derivatives(&scene, &p).unwrap();
        let fd = finite_difference_d(&scene, &adapt_frame(&scene, &p).unwrap(), 1e-4);
        worst = worst
            .max(relative_error(jet.k_cd.iter(), fd.k_cd.iter()))
            .max(relative_error(jet.k_dot.iter(), fd.k_dot.iter()))
            .max(relative_error(jet.m_cd.iter(), fd.m_cd.iter()))
            .max(relative_error(jet.m_dot.iter(), fd.m_dot.iter()));
    }
    Outcome::check(worst < 1e-4, format!("20 points, worst relative deviation {worst:.2e}"))
}

fn circular_closed_forms() -> Outcome {
    let scene = build_model(&ModelSpec::new("minkowski", 4).flow("rotating").flow_param("omega", 0.5)).unwrap();
    let p = [0.0, 1.0, 0.0, 0.0];
    let inv = KinematicInvariants::from_geometry(&PointGeometry::analyze(&scene, &p).unwrap());
    // Oracle: a = u·∂u by central differences of u = V / sqrt(-g(V,V)).
    let h = 1e-4;
    let u = |q: &[f64]| -> Vec<f64> {
        let (x, y) = (q[1], q[2]);
        let v = [1.0, -0.5 * y, 0.5 * x, 0.0];
        let lam = (v[0] * v[0] - v[1] * v[1] - v[2] * v[2] - v[3] * v[3]).sqrt();
        v.iter().map(|c| c / lam).collect()
    };
    let u0 = u(&p);
    let lam_oracle = 1.0 / u0[0];
    let mut accel = [0.0; 4];
    for nu in 0..4 {
        let mut qp = p.to_vec();
        let mut qm = p.to_vec();
        qp[nu] += h;
        qm[nu] -= h;
        let (up, um) = (u(&qp), u(&qm));
        for mu in 0..4 {
            accel[mu] += u0[nu] * (up[mu] - um[mu]) / (2.0 * h);
        }
    }
    let a_oracle = (-accel[0] * accel[0] + accel[1..].iter().map(|a| a * a).sum::<f64>()).sqrt();
    let checks = [
        (inv.lambda, 0.86602540, lam_oracle),
        (inv.acceleration_magnitude, 1.0 / 3.0, a_oracle),
        (inv.vorticity_magnitude, 2.0 / 3.0, 2.0 / 3.0),
    ];
    let pass = checks
        .iter()
        .all(|(got, want, oracle)| (got - want).abs() < 1e-7 && (want - oracle).abs() < 1e-6);
    Outcome::check(
        pass,
        format!(
            "lambda {:.10} (oracle {lam_oracle:.10}), |K| {:.10} (oracle {a_oracle:.10}), |omega| {:.10}",
            inv.lambda, inv.acceleration_magnitude, inv.vorticity_magnitude
        ),
    )
}

fn timelike_boundary() -> Outcome {
    let mut mismatches = 0;
    let mut flagged = 0;
    let mut total = 0;
    for dim in [3, 4, 5] {
        for omega in [0.3, 0.5] {
            let scene =
                build_model(&ModelSpec::new("minkowski", dim).flow("rotating").flow_param("omega", omega)).unwrap();
            let mut min = vec![-3.0; dim];
            let mut max = vec![3.0; dim];
            min[0] = -1.0;
            max[0] = 1.0;
            let pts = SamplePlan::new(PlanKind::Random(300), DomainBox { min, max }, 23).points().unwrap();
            for entry in timelike_domain_check(&scene, &pts) {
                let rho2 = entry.point[1] * entry.point[1] + entry.point[2] * entry.point[2];
                let outside = omega * omega * rho2 >= 1.0;
                total += 1;
                flagged += usize::from(!entry.timelike);
                mismatches += usize::from(outside == entry.timelike);
            }
        }
    }
    Outcome::check(
        mismatches == 0 && flagged > 0 && flagged < total,
        format!("{total} points, {flagged} flagged, {mismatches} disagree with omega^2 rho^2 >= 1"),
    )
}

fn determinism() -> Outcome {
    let run = |format: &str| {
        Command::new(env!("CARGO_BIN_EXE_rigidflow"))
            .args([
                "analyze", "--model", "minkowski", "--dim", "4", "--flow", "rotating", "--flow-param", "omega=0.5",
                "--points", "random:40", "--seed", "42", "--tol", "1e-6", "--format", format,
            ])
            .output()
            .expect("run rigidflow")
    };
    let mut same = true;
    let mut sizes = Vec::new();
    for format in ["text", "json"] {
        let (a, b) = (run(format), run(format));
        same &= a.status.success() && b.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout;
        sizes.push(format!("{format} {} bytes", a.stdout.len()));
    }
    Outcome::check(same, format!("two runs byte-identical: {}", sizes.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("identity suite", identity_suite),
        ("theorem instantiation", theorem_instantiation),
        ("Killing flows are rigid", killing_flows_are_rigid),
        ("rotation is necessary", fermi_rigid_necessity),
        ("rigidity criterion", rigidity_criterion),
        ("derivative oracle", derivative_oracle),
        ("circular closed forms", circular_closed_forms),
        ("timelike boundary", timelike_boundary),
        ("determinism", determinism),
    ];
    let mut unexpected = Vec::new();
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = f();
        let status = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {} {name}: {status} {}", k + 1, outcome.detail);
        if !outcome.pass && !outcome.known_red {
            unexpected.push(k + 1);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: criteria {unexpected:?}");
        std::process::exit(1);
    }
}
