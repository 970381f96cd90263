use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use polycbf::error::{Error, Result};
use polycbf::field::{sample_field, write_field_csv, Grid};
use polycbf::geometry::{Dimension, Vec3};
use polycbf::plot::{render_svg, PlotOptions};
use polycbf::scenarios::{self, Scenario, BUILTIN_NAMES};
use polycbf::sim::{run, Integrator, SimResult, Termination};
use polycbf::verify::{self, AuditReport};

const EXIT_VALIDATION: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;
const EXIT_RUNTIME: u8 = 4;

/// Smooth control barrier functions for polytope agents in polytope
/// environments.
#[derive(Parser)]
#[command(name = "polycbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the bundled scenarios.
    List,
    /// Print or save a scenario as JSON.
    Export {
        scenario: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the closed-loop simulation.
    Simulate(SimulateArgs),
    /// Sample psi and h on a regular grid.
    Field(FieldArgs),
    /// Run verification audits and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long, allow_hyphen_values = true)]
    kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    buffer: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha_gain: Option<f64>,
    /// Freeze moving walls at their reference pose.
    #[arg(long = "static")]
    freeze: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Builtin name, JSON file, or name in $POLYCBF_SCENARIO_DIR.
    scenario: String,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    /// Comma-separated start position.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
    /// Comma-separated goal position.
    #[arg(long, allow_hyphen_values = true)]
    goal: Option<String>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
    #[arg(long)]
    record_stride: Option<usize>,
    /// Run the primary and every alternative start.
    #[arg(long, conflicts_with = "start")]
    all_starts: bool,
    /// Trajectory CSV; with --all-starts an index is appended to the stem.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Rk4,
    Euler,
}

#[derive(Args)]
struct FieldArgs {
    scenario: String,
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, allow_hyphen_values = true)]
    lower: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    upper: Option<String>,
    #[arg(long, default_value_t = 100)]
    resolution: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    t: f64,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also render the environment at time t.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Gradients,
    Qp,
    Hull,
    Underapprox,
    Sandwich,
    Convergence,
    All,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(value_enum, default_value_t = Suite::All)]
    suite: Suite,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sample count; each suite has its own default.
    #[arg(long)]
    n: Option<usize>,
    /// Restrict per-scenario suites to one scenario.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let report = json!({ "error": "usage", "message": e.to_string().trim_end() });
            eprintln!("{report}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let outcome = match cli.command {
        Command::List => {
            for name in BUILTIN_NAMES {
                println!("{name}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { scenario, out } => cmd_export(&scenario, out.as_deref()),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Field(args) => cmd_field(&args),
        Command::Verify(args) => cmd_verify(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            let report = json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_RUNTIME })
        }
    }
}

fn parse_point(text: &str, dim: Dimension, name: &str) -> Result<Vec3> {
    let coords = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<f64>, _>>()
        .map_err(|e| Error::InvalidParameter {
            name: name.into(),
            reason: format!("'{text}': {e}"),
        })?;
    dim.embed(&coords, name)
}

fn load_scenario(reference: &str, overrides: &Overrides) -> Result<Scenario> {
    let mut s = scenarios::resolve(reference)?;
    if overrides.freeze {
        s = s.without_motion();
    }
    if let Some(k) = overrides.kappa {
        s.cbf.kappa = k;
    }
    if let Some(b) = overrides.buffer {
        s.cbf.buffer = b;
    }
    if let Some(g) = overrides.alpha_gain {
        s.cbf.alpha_gain = g;
    }
    s.cbf.validate()?;
    Ok(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn indexed_path(path: &Path, index: usize) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{index}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{index}"),
    };
    path.with_file_name(name)
}

fn cmd_export(reference: &str, out: Option<&Path>) -> Result<ExitCode> {
    let s = scenarios::resolve(reference)?;
    match out {
        Some(path) => scenarios::save(&s, path)?,
        None => print!("{}", s.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}

fn summary(s: &Scenario, start: &Vec3, r: &SimResult) -> Value {
    let dim = s.dimension();
    json!({
        "scenario": s.name,
        "start": dim.project(start),
        "goal": dim.project(&s.controller.goal),
        "termination": r.termination.as_str(),
        "error": match &r.termination {
            Termination::Error(msg) => Some(msg.clone()),
            _ => None,
        },
        "reached_goal_at": r.reached_goal_at,
        "min_h": r.min_h,
        "final_position": r.final_position().map(|p| dim.project(p)),
        "final_time": r.times.last(),
        "constraint_active_samples": r.constraint_active.iter().filter(|a| **a).count(),
        "samples": r.len(),
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode> {
    let mut s = load_scenario(&args.scenario, &args.overrides)?;
    let dim = s.dimension();
    let mut config = s.default_sim;
    if let Some(dt) = args.dt {
        config.dt = dt;
    }
    if let Some(t_end) = args.t_end {
        config.t_end = t_end;
    }
    if let Some(stride) = args.record_stride {
        config.record_stride = stride;
    }
    if let Some(integrator) = args.integrator {
        config.integrator = match integrator {
            IntegratorArg::Rk4 => Integrator::Rk4,
            IntegratorArg::Euler => Integrator::Euler,
        };
    }
    if let Some(goal) = &args.goal {
        s.controller.goal = parse_point(goal, dim, "--goal")?;
    }
    if let Some(start) = &args.start {
        config.x0 = parse_point(start, dim, "--start")?;
    }
    config.validate()?;

    let starts = if args.all_starts { s.starts() } else { vec![config.x0] };
    let mut results = Vec::with_capacity(starts.len());
    let mut summaries = Vec::with_capacity(starts.len());
    for start in &starts {
        let cfg = polycbf::SimConfig { x0: *start, ..config };
        let r = run(&s, &cfg)?;
        summaries.push(summary(&s, start, &r));
        results.push(r);
    }

    if let Some(out) = &args.out {
        for (k, r) in results.iter().enumerate() {
            let path = if args.all_starts { indexed_path(out, k) } else { out.clone() };
            write_file(&path, |w| r.write_csv(w))?;
        }
    }
    if let Some(svg) = &args.svg {
        let text = render_svg(&s, &results, &PlotOptions::default());
        write_file(svg, |w| w.write_all(text.as_bytes()))?;
    }

    let report = if args.all_starts {
        Value::Array(summaries)
    } else {
        summaries.pop().unwrap_or(Value::Null)
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("summary serializes"));

    let failed = results.iter().find_map(|r| match &r.termination {
        Termination::Error(msg) => Some(msg.clone()),
        _ => None,
    });
    if let Some(msg) = failed {
        eprintln!("{}", json!({ "error": "simulation", "message": msg }));
        return Ok(ExitCode::from(EXIT_RUNTIME));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_field(args: &FieldArgs) -> Result<ExitCode> {
    let s = load_scenario(&args.scenario, &args.overrides)?;
    let dim = s.dimension();
    let (mut lower, mut upper) = s.bounding_box();
    if let Some(text) = &args.lower {
        lower = parse_point(text, dim, "--lower")?;
    }
    if let Some(text) = &args.upper {
        upper = parse_point(text, dim, "--upper")?;
    }
    let grid = Grid::new(dim, lower, upper, args.resolution)?;
    let samples = sample_field(&s, &grid, args.t);
    match &args.out {
        Some(path) => write_file(path, |w| write_field_csv(dim, &samples, w))?,
        None => {
            let stdout = io::stdout();
            write_field_csv(dim, &samples, stdout.lock()).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
    }
    if let Some(svg) = &args.svg {
        let opts = PlotOptions {
            t: args.t,
            ..PlotOptions::default()
        };
        let text = render_svg(&s, &[], &opts);
        write_file(svg, |w| w.write_all(text.as_bytes()))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn verify_scenarios(args: &VerifyArgs) -> Result<Vec<Scenario>> {
    match &args.scenario {
        Some(reference) => Ok(vec![scenarios::resolve(reference)?]),
        None => BUILTIN_NAMES.iter().map(|n| scenarios::builtin(n)).collect(),
    }
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let suites: &[Suite] = match args.suite {
        Suite::All => &[
            Suite::Sandwich,
            Suite::Qp,
            Suite::Gradients,
            Suite::Hull,
            Suite::Underapprox,
            Suite::Convergence,
        ],
        ref one => std::slice::from_ref(one),
    };
    let seed = args.seed;
    let mut reports: Vec<AuditReport> = Vec::new();
    for suite in suites {
        match suite {
            Suite::Sandwich => reports.push(verify::sandwich_audit(args.n.unwrap_or(100_000), seed)?),
            Suite::Qp => {
                let n = args.n.unwrap_or(100_000);
                reports.push(verify::filter_kkt_audit(n, seed, Dimension::Planar)?);
                reports.push(verify::filter_kkt_audit(n, seed.wrapping_add(1), Dimension::Spatial)?);
                reports.push(verify::filter_bruteforce_audit(n.min(1000), seed, 201)?);
            }
            Suite::Gradients => {
                for s in verify_scenarios(args)? {
                    reports.push(verify::gradient_audit(&s, args.n.unwrap_or(1000), seed));
                }
            }
            Suite::Hull => {
                for s in verify_scenarios(args)? {
                    reports.push(verify::hull_containment_audit(&s, args.n.unwrap_or(10_000), seed));
                }
            }
            Suite::Underapprox => {
                for s in verify_scenarios(args)? {
                    let res = args.n.unwrap_or(match s.dimension() {
                        Dimension::Planar => 200,
                        Dimension::Spatial => 50,
                    });
                    reports.push(verify::provable_buffer_audit(&s, res)?);
                }
            }
            Suite::Convergence => {
                let s = match &args.scenario {
                    Some(reference) => scenarios::resolve(reference)?,
                    None => scenarios::builtin("l-shape")?,
                };
                reports.push(verify::convergence_audit(&s, args.n.unwrap_or(200))?);
            }
            Suite::All => unreachable!(),
        }
    }
    let text = serde_json::to_string_pretty(&reports).expect("reports serialize") + "\n";
    match &args.out {
        Some(path) => write_file(path, |w| w.write_all(text.as_bytes()))?,
        None => print!("{text}"),
    }
    if reports.iter().all(|r| r.passed) {
        Ok(ExitCode::SUCCESS)
    } else {
        for r in reports.iter().filter(|r| !r.passed) {
            eprintln!("{}", json!({ "error": "audit_failed", "audit": r.name, "worst_case": r.worst_case }));
        }
        Ok(ExitCode::from(EXIT_VERIFY_FAILED))
    }
}
