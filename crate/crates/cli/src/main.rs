use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rigidflow_core::identities::Suite;
use rigidflow_core::kinematics::Conclusion;
use rigidflow_core::{
    build_model, emit_report, list_models, load_scene, run_analysis, Error, ExprError, Format, ModelSpec, PlanKind,
    Report, SamplePlan, Scene, Tolerances,
};

#[derive(Parser)]
#[command(name = "rigidflow", version, about = "Rigidity and isometry verdicts for timelike flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Kinematics, verdicts, the identity suite and the theorem check.
    Analyze(Common),
    /// The identity suite only.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "all", value_parser = ["all", "structural", "curvature", "derivatives"])]
        suite: String,
    },
    /// Rigidity, rotation, homogeneity and the direct Killing test.
    Theorem(Common),
    /// The built-in metrics and flows.
    Models {
        #[arg(long, default_value = "text", value_parser = ["text", "json"])]
        format: String,
    },
}

#[derive(Args)]
struct Common {
    /// JSON scene document.
    #[arg(long, conflicts_with = "model", required_unless_present = "model")]
    scene: Option<PathBuf>,
    /// Built-in metric.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Metric parameter `name=value`; repeatable.
    #[arg(long = "param", value_name = "K=V")]
    params: Vec<String>,
    /// Built-in flow.
    #[arg(long, default_value = "static")]
    flow: String,
    /// Flow parameter `name=value`; repeatable.
    #[arg(long = "flow-param", value_name = "K=V")]
    flow_params: Vec<String>,
    /// `random:N` or `grid:R`.
    #[arg(long, default_value = "random:100")]
    points: String,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Verdict tolerance.
    #[arg(long, default_value_t = rigidflow_core::kinematics::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value = "text", value_parser = ["text", "json"])]
    format: String,
}

fn key_value(text: &str, field: &str) -> Result<(String, f64), Error> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| Error::schema(field, format!("expected name=value, found `{text}`")))?;
    let value: f64 = v
        .trim()
        .parse()
        .map_err(|_| Error::schema(field, format!("`{v}` is not a number")))?;
    Ok((k.trim().to_string(), value))
}

impl Common {
    fn scene(&self) -> Result<Scene, Error> {
        if let Some(path) = &self.scene {
            return load_scene(path);
        }
        let model = self.model.as_deref().ok_or_else(|| Error::schema("model", "need --scene or --model"))?;
        let mut spec = ModelSpec::new(model, self.dim).flow(self.flow.clone());
        for p in &self.params {
            let (k, v) = key_value(p, "param")?;
            spec = spec.param(&k, v);
        }
        for p in &self.flow_params {
            let (k, v) = key_value(p, "flow-param")?;
            spec = spec.flow_param(&k, v);
        }
        build_model(&spec)
    }

    fn run(&self, suite: Option<Suite>) -> Result<Report, Error> {
        let scene = self.scene()?;
        let domain = scene
            .domain
            .clone()
            .ok_or_else(|| Error::schema("domain", "the scene declares no sample domain"))?;
        let plan = SamplePlan::new(PlanKind::parse(&self.points)?, domain, self.seed);
        let tols = Tolerances {
            tol: self.tol,
            ..Tolerances::default()
        };
        run_analysis(&scene, &plan, &tols, suite)
    }

    fn format(&self) -> Format {
        Format::parse(&self.format).unwrap_or(Format::Text)
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Schema { .. } | Error::UnknownModel(_) | Error::ParamOutOfRange { .. } | Error::Io(_) => 2,
        Error::Expr(ExprError::Syntax { .. } | ExprError::UnknownSymbol(_)) => 2,
        Error::Component {
            source: ExprError::Syntax { .. } | ExprError::UnknownSymbol(_),
            ..
        } => 2,
        _ => 3,
    }
}

fn print_models(format: Format) {
    let models = list_models();
    match format {
        Format::Json => println!("{}", serde_json_pretty(&models)),
        Format::Text => {
            for m in &models {
                let kind = format!("{:?}", m.kind).to_lowercase();
                let mut params: Vec<String> = m
                    .params
                    .iter()
                    .map(|p| format!("{}={} [{}, {}]", p.name, p.default, p.min, p.max))
                    .collect();
                if params.is_empty() {
                    params.push("-".into());
                }
                let dims = format!("dim {}..{}", m.min_dim, m.max_dim);
                let metrics = if m.metrics.is_empty() {
                    String::new()
                } else {
                    format!(" metrics {}", m.metrics.join(","))
                };
                println!("{kind} {} {dims} params {}{metrics}: {}", m.name, params.join(" "), m.summary);
            }
        }
    }
}

fn serde_json_pretty<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("catalog serializes")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, suite, theorem_only) = match &cli.command {
        Command::Models { format } => {
            print_models(Format::parse(format).unwrap_or(Format::Text));
            return ExitCode::SUCCESS;
        }
        Command::Analyze(c) => (c, Some(Suite::All), false),
        Command::Verify { common, suite } => (common, Suite::parse(suite), false),
        Command::Theorem(c) => (c, None, true),
    };
    let report = match common.run(suite) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code_for(&e));
        }
    };
    print!("{}", emit_report(&report, common.format()));
    let failed = if theorem_only {
        report.theorem.conclusion == Conclusion::CounterexampleCandidate
    } else {
        !report.asserted_failures().is_empty()
    };
    if failed {
        eprintln!("asserted checks failed: {}", report.asserted_failures().join(", "));
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}
