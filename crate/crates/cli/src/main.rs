use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use bernreach::geometry::LinearSystemSet;
use bernreach::model_io::{self, ProblemSpec};
use bernreach::reachability::{compute_flowpipe, Flowpipe};
use bernreach::sampling::{validate_flowpipe, validate_synthesis};
use bernreach::stl::{parse_formula, Formula};
use bernreach::synthesis::Synthesizer;
use bernreach::Error;

/// Bernstein-coefficient flowpipes and STL parameter synthesis.
#[derive(Parser)]
#[command(name = "bernreach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a flowpipe for the model's initial set and parameters.
    Reach(ReachArgs),
    /// Refine the model's parameter set so that the specification holds.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Model file.
    model: PathBuf,
    /// Output JSON path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulate N sampled runs and report containment or satisfaction.
    #[arg(long, value_name = "N")]
    validate: Option<usize>,
    /// Print only errors.
    #[arg(long)]
    quiet: bool,
    /// Dump per-step offsets to stderr.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct ReachArgs {
    #[command(flatten)]
    common: Common,
    /// Number of steps; overrides `option steps`.
    #[arg(long)]
    steps: Option<usize>,
    /// Write a 2D projection CSV and plotting script for two variables.
    #[arg(long, value_name = "VAR,VAR")]
    project: Option<String>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    common: Common,
    /// Specification; overrides `spec` in the model file.
    #[arg(long)]
    spec: Option<String>,
}

/// Bernstein grids above this size get a warning in the report.
const GRID_WARN: f64 = 1e5;

enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Input(e.to_string())
        }
    }
}

struct Report {
    lines: Vec<(String, String)>,
    warnings: Vec<String>,
}

impl Report {
    fn new(mode: &str) -> Self {
        Report {
            lines: vec![("mode".into(), mode.into())],
            warnings: Vec::new(),
        }
    }

    fn add(&mut self, key: &str, value: impl ToString) {
        self.lines.push((key.into(), value.to_string()));
    }

    fn time(&mut self, phase: &str, start: Instant) {
        self.add(&format!("time {phase}"), format!("{:.3} s", start.elapsed().as_secs_f64()));
    }

    fn print(&self) {
        let width = self.lines.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.lines {
            println!("{k:<width$}  {v}");
        }
        for w in &self.warnings {
            println!("warning: {w}");
        }
    }
}

fn load(path: &Path, report: &mut Report) -> Result<ProblemSpec, Failure> {
    let start = Instant::now();
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let spec = model_io::parse_model_file(&text)
        .map_err(|e| Failure::Input(format!("{}:{e}", path.display())))?;
    report.time("parse", start);
    report.add("model", &spec.model.name);
    report.add(
        "dimensions",
        format!(
            "{} variables, {} parameters",
            spec.model.dim(),
            spec.model.num_params()
        ),
    );
    let worst = spec
        .model
        .dynamics
        .iter()
        .map(|f| (f.total_degree() as f64 + 1.0).powi(spec.model.dim() as i32))
        .fold(0.0, f64::max);
    if worst > GRID_WARN {
        report.warnings.push(format!(
            "Bernstein grids of up to {worst:.0} coefficients per bound; steps will be slow"
        ));
    }
    Ok(spec)
}

fn default_out(model: &Path, suffix: &str) -> PathBuf {
    let stem = model.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    PathBuf::from(format!("{stem}.{suffix}.json"))
}

fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    out.with_file_name(format!("{stem}.{suffix}"))
}

fn dump_offsets(fp: &Flowpipe) {
    for (k, b) in fp.steps().iter().enumerate() {
        eprintln!("step {k}: upper {:?} lower {:?}", b.upper(), b.lower());
    }
}

fn reach(args: ReachArgs) -> Result<Report, Failure> {
    let c = &args.common;
    let mut report = Report::new("reach");
    let spec = load(&c.model, &mut report)?;
    let steps = args.steps.or(spec.options.steps).ok_or_else(|| {
        Failure::Input("number of steps missing: use --steps or `option steps`".into())
    })?;
    let axes = match &args.project {
        Some(s) => {
            let parts: Vec<&str> = s.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(Failure::Input(format!(
                    "--project expects two comma-separated variables, got `{s}`"
                )));
            }
            Some((parts[0].to_string(), parts[1].to_string()))
        }
        None => spec.options.project.clone(),
    };
    let axes = axes
        .map(|(a, b)| {
            let idx = |v: &str| {
                spec.var_index(v)
                    .ok_or_else(|| Failure::Input(format!("unknown projection variable `{v}`")))
            };
            Ok::<_, Failure>((idx(&a)?, idx(&b)?, a, b))
        })
        .transpose()?;

    let start = Instant::now();
    let fp = compute_flowpipe(&spec.model, &spec.initial, &spec.params, steps)?;
    report.time("reach", start);
    report.add("steps", steps);
    report.add("directions", spec.initial.num_directions());
    report.add("templates", spec.initial.templates().len());
    if c.trace {
        dump_offsets(&fp);
    }

    let start = Instant::now();
    let out = c.out.clone().unwrap_or_else(|| default_out(&c.model, "flowpipe"));
    model_io::write_flowpipe(&fp, &spec.model.state_vars, &out)?;
    if let Some((a, b, na, nb)) = &axes {
        let csv = sibling(&out, "proj.csv");
        let script = sibling(&out, "plot.py");
        model_io::write_projection(&fp, *a, *b, spec.options.fan, &csv)?;
        let csv_name = csv.file_name().and_then(|s| s.to_str()).unwrap_or("proj.csv");
        fs::write(&script, model_io::plot_script(csv_name, na, nb))
            .map_err(|e| Failure::Input(format!("{}: {e}", script.display())))?;
        report.add("projection", csv.display());
        report.add("plot script", script.display());
    }
    report.time("write", start);
    report.add("output", out.display());

    if let Some(n) = c.validate {
        let start = Instant::now();
        let v = validate_flowpipe(&spec.model, &spec.initial, &spec.params, &fp, n, 1e-7)?;
        report.time("validate", start);
        report.add(
            "containment",
            format!(
                "{}/{} trajectories ({:.3}%)",
                v.contained,
                v.trajectories,
                100.0 * v.rate()
            ),
        );
        if v.contained < v.trajectories {
            report.warnings.push(format!(
                "sampled trajectories left the flowpipe (worst violation {:e})",
                v.worst_violation
            ));
        }
    }
    Ok(report)
}

fn synth(args: SynthArgs) -> Result<Report, Failure> {
    let c = &args.common;
    let mut report = Report::new("synth");
    let spec = load(&c.model, &mut report)?;
    let phi: Formula = match &args.spec {
        Some(text) => parse_formula(text, &spec.model.state_vars)
            .map_err(|e| Failure::Input(format!("--spec:{e}")))?,
        None => spec.spec.clone().ok_or_else(|| {
            Failure::Input("no specification: use --spec or a `spec` section".into())
        })?,
    };
    report.add("formula", phi.to_text(&spec.model.state_vars));

    let start = Instant::now();
    let mut synthesizer = Synthesizer::new(&spec.model);
    let result: LinearSystemSet = synthesizer.run(&spec.initial, &spec.params, &phi)?;
    report.time("synth", start);
    let stats = synthesizer.stats().clone();
    report.add(
        "refinements",
        format!("{} ({} empty)", stats.refinements, stats.empty_refinements),
    );
    report.add("reach steps", stats.reach_steps);
    report.add("max members", stats.max_members);
    report.add("members", result.len());

    let start = Instant::now();
    let out = c.out.clone().unwrap_or_else(|| default_out(&c.model, "params"));
    model_io::write_param_sets(&result, &out)?;
    report.time("write", start);
    report.add("output", out.display());
    if c.trace {
        for (k, m) in result.members().iter().enumerate() {
            eprintln!("member {k}: A {:?} b {:?}", m.directions(), m.offsets());
        }
    }

    if let Some(n) = c.validate {
        let start = Instant::now();
        let v = validate_synthesis(&spec.model, &spec.initial, &result, &phi, n, 20)?;
        report.time("validate", start);
        let rate = if v.checked == 0 {
            "nothing to sample".to_string()
        } else {
            format!("{:.3}%", 100.0 * v.rate())
        };
        report.add("satisfaction", format!("{}/{} runs ({rate})", v.satisfied, v.checked));
    }
    report.add("result", if result.is_empty() { "EMPTY" } else { "NONEMPTY" });
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (quiet, trace) = match &cli.command {
        Command::Reach(a) => (a.common.quiet, a.common.trace),
        Command::Synth(a) => (a.common.quiet, a.common.trace),
    };
    let default_level = if trace { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level))
        .init();

    let outcome = match cli.command {
        Command::Reach(a) => reach(a),
        Command::Synth(a) => synth(a),
    };
    match outcome {
        Ok(report) => {
            if !quiet {
                report.print();
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
