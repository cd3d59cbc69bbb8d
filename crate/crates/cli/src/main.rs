//! Command line front end: each subcommand is a thin shell over one library
//! operation, emitting JSON to stdout and plot-ready CSV artifacts.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use tinet_core::cost::{finite_spectrum, thermo_spectrum};
use tinet_core::model::validate_spec;
use tinet_core::oracle::{
    build_finite, cost_from_covariance, finite_covariance, shift_commutation_defect,
};
use tinet_core::schema::{config_from_str, controller_to_value, spec_from_str};
use tinet_core::spectral::write_grid_csv;
use tinet_core::stability::{margin_curve, stability_sweep, SweepSettings, Verdict};
use tinet_core::synthesis::{descend, grad_check, Termination};
use tinet_core::{Error, NetworkSpec};

use output::{error_value, fmt_float, print_value, write_atomic};

#[derive(Parser)]
#[command(name = "tinet", version, about = "Coherent ring network design toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutDir {
    /// Directory for CSV/JSON artifacts and the run manifest.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Score the structural admissibility of a network description.
    Validate {
        path: PathBuf,
        #[command(flatten)]
        out: OutDir,
    },
    /// Sweep the drift symbol spectrum around the circle.
    Stability {
        path: PathBuf,
        /// Starting grid size; must be a power of two.
        #[arg(long)]
        grid: Option<usize>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Evaluate the performance cost of a ring or of the size limit.
    #[command(group(ArgGroup::new("mode").required(true).args(["n", "thermo"])))]
    Cost {
        path: PathBuf,
        /// Ring size for an exact finite evaluation.
        #[arg(long = "N")]
        n: Option<usize>,
        /// Evaluate the thermodynamic limit instead of a finite ring.
        #[arg(long)]
        thermo: bool,
        /// Starting quadrature grid for the limit evaluation.
        #[arg(long)]
        quad: Option<usize>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Compare analytic gradients against central finite differences.
    Gradcheck {
        path: PathBuf,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-5)]
        h: f64,
        #[command(flatten)]
        out: OutDir,
    },
    /// Run the stabilizing gradient descent on the controller parameters.
    Synthesize {
        spec_path: PathBuf,
        config_path: PathBuf,
        /// Overrides the seed recorded in the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        out: OutDir,
    },
    /// Solve one assembled ring end to end and cross-check the spectral route.
    Oracle {
        path: PathBuf,
        /// Ring size.
        #[arg(long = "N")]
        n: usize,
        #[command(flatten)]
        out: OutDir,
    },
}

struct Artifact {
    name: &'static str,
    bytes: Vec<u8>,
}

struct Outcome {
    stdout: Value,
    artifacts: Vec<Artifact>,
    exit: u8,
}

impl Outcome {
    fn ok(stdout: Value) -> Self {
        Self {
            stdout,
            artifacts: Vec::new(),
            exit: 0,
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let started = Instant::now();
    let (name, input, parameters, out_dir) = describe(&cli.command);
    let result = dispatch(&cli.command);
    let outcome = match result {
        Ok(outcome) => outcome,
        Err(e) => Outcome {
            stdout: json!({ "error": error_value(&e) }),
            artifacts: Vec::new(),
            exit: exit_code(&e),
        },
    };

    if let Some(dir) = out_dir {
        if let Err(e) = emit_artifacts(
            &dir,
            &outcome,
            &name,
            &input,
            parameters,
            started.elapsed().as_secs_f64(),
        ) {
            eprintln!("cannot write artifacts to {}: {e}", dir.display());
            return ExitCode::from(2);
        }
    }
    // Tolerate a closed pipe: downstream tools may stop reading early.
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{}", print_value(&outcome.stdout));
    ExitCode::from(outcome.exit)
}

/// Applies the TINET_THREADS cap before any parallel region starts.
fn configure_threads() {
    if let Ok(raw) = std::env::var("TINET_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("ignoring TINET_THREADS={raw:?}: expected a positive integer"),
        }
    }
}

/// Manifest ingredients: command name, primary input, flag map, out dir.
fn describe(cmd: &Command) -> (String, PathBuf, Map<String, Value>, Option<PathBuf>) {
    let mut p = Map::new();
    match cmd {
        Command::Validate { path, out } => {
            ("validate".into(), path.clone(), p, out.out.clone())
        }
        Command::Stability { path, grid, out } => {
            if let Some(g) = grid {
                p.insert("grid".into(), json!(g));
            }
            ("stability".into(), path.clone(), p, out.out.clone())
        }
        Command::Cost {
            path,
            n,
            thermo,
            quad,
            out,
        } => {
            if let Some(n) = n {
                p.insert("N".into(), json!(n));
            }
            if *thermo {
                p.insert("thermo".into(), json!(true));
            }
            if let Some(q) = quad {
                p.insert("quad".into(), json!(q));
            }
            ("cost".into(), path.clone(), p, out.out.clone())
        }
        Command::Gradcheck { path, h, out } => {
            p.insert("h".into(), json!(h));
            ("gradcheck".into(), path.clone(), p, out.out.clone())
        }
        Command::Synthesize {
            spec_path,
            config_path,
            seed,
            out,
        } => {
            p.insert("config".into(), json!(config_path.display().to_string()));
            if let Some(s) = seed {
                p.insert("seed".into(), json!(s));
            }
            ("synthesize".into(), spec_path.clone(), p, out.out.clone())
        }
        Command::Oracle { path, n, out } => {
            p.insert("N".into(), json!(n));
            ("oracle".into(), path.clone(), p, out.out.clone())
        }
    }
}

fn dispatch(cmd: &Command) -> Result<Outcome, Error> {
    match cmd {
        Command::Validate { path, .. } => cmd_validate(path),
        Command::Stability { path, grid, .. } => cmd_stability(path, *grid),
        Command::Cost {
            path,
            n,
            thermo,
            quad,
            ..
        } => cmd_cost(path, *n, *thermo, *quad),
        Command::Gradcheck { path, h, .. } => cmd_gradcheck(path, *h),
        Command::Synthesize {
            spec_path,
            config_path,
            seed,
            ..
        } => cmd_synthesize(spec_path, config_path, *seed),
        Command::Oracle { path, n, .. } => cmd_oracle(path, *n),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidSpec(_) | Error::Config(_) => 2,
        _ => 1,
    }
}

fn load_spec(path: &Path) -> Result<NetworkSpec, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidSpec(format!("cannot read {}: {e}", path.display())))?;
    spec_from_str(&text)
}

fn cmd_validate(path: &Path) -> Result<Outcome, Error> {
    let spec = load_spec(path)?;
    let report = validate_spec(&spec);
    let violations: Vec<Value> = report
        .violations
        .iter()
        .map(|v| {
            json!({
                "subject": v.subject,
                "invariant": v.invariant,
                "magnitude": v.magnitude,
            })
        })
        .collect();
    Ok(Outcome {
        stdout: json!({ "clean": report.is_clean(), "violations": violations }),
        artifacts: Vec::new(),
        exit: if report.is_clean() { 0 } else { 1 },
    })
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Stabilizing => "stabilizing",
        Verdict::NotStabilizing => "notStabilizing",
        Verdict::Inconclusive => "inconclusive",
    }
}

fn cmd_stability(path: &Path, grid: Option<usize>) -> Result<Outcome, Error> {
    let spec = load_spec(path)?;
    let mut settings = SweepSettings::default();
    if let Some(g) = grid {
        settings.initial_grid = g;
    }
    let report = stability_sweep(&spec, &settings)?;
    let curve = margin_curve(&spec, report.grid)?;
    let rows: Vec<_> = curve.into_iter().map(|(z, m)| (z, vec![m])).collect();
    let mut csv = Vec::new();
    write_grid_csv(&mut csv, &["margin"], &rows)
        .map_err(|e| Error::Config(format!("cannot render margin curve: {e}")))?;
    Ok(Outcome {
        stdout: json!({
            "margin": report.margin,
            "worstZ": { "re": report.worst_z.re, "im": report.worst_z.im },
            "grid": report.grid,
            "refined": report.refined,
            "verdict": verdict_name(report.verdict),
        }),
        artifacts: vec![Artifact {
            name: "margin.csv",
            bytes: csv,
        }],
        exit: if report.verdict == Verdict::Stabilizing {
            0
        } else {
            1
        },
    })
}

fn cmd_cost(
    path: &Path,
    n: Option<usize>,
    thermo: bool,
    quad: Option<usize>,
) -> Result<Outcome, Error> {
    let spec = load_spec(path)?;
    let (report, curve, head) = if thermo {
        let (report, curve) = thermo_spectrum(&spec, quad.unwrap_or(256))?;
        (report, curve, json!({ "kind": "thermodynamic" }))
    } else {
        let n = n.expect("clap enforces the mode group");
        let (report, curve) = finite_spectrum(&spec, n)?;
        (report, curve, json!({ "kind": "finiteRing", "N": n }))
    };
    let rows: Vec<_> = curve.into_iter().map(|(z, v)| (z, vec![v])).collect();
    let mut csv = Vec::new();
    write_grid_csv(&mut csv, &["integrand"], &rows)
        .map_err(|e| Error::Config(format!("cannot render spectrum: {e}")))?;
    let mut stdout = head.as_object().cloned().unwrap_or_default();
    stdout.insert("value".into(), json!(report.value));
    stdout.insert("grid".into(), json!(report.grid));
    stdout.insert("imagResidue".into(), json!(report.imag_residue));
    Ok(Outcome {
        stdout: Value::Object(stdout),
        artifacts: vec![Artifact {
            name: "spectrum.csv",
            bytes: csv,
        }],
        exit: 0,
    })
}

fn cmd_gradcheck(path: &Path, h: f64) -> Result<Outcome, Error> {
    let spec = load_spec(path)?;
    let report = grad_check(&spec, h)?;
    let blocks: Vec<Value> = report
        .blocks
        .iter()
        .map(|b| {
            json!({
                "name": b.name,
                "analyticNorm": b.analytic_norm,
                "fdNorm": b.fd_norm,
                "relError": b.rel_error,
            })
        })
        .collect();
    Ok(Outcome::ok(json!({
        "h": report.h,
        "maxRelError": report.max_rel_error,
        "blocks": blocks,
    })))
}

fn termination_name(t: Termination) -> &'static str {
    match t {
        Termination::Converged => "converged",
        Termination::MaxIterations => "maxIterations",
        Termination::Stalled => "stalled",
    }
}

fn cmd_synthesize(
    spec_path: &Path,
    config_path: &Path,
    seed: Option<u64>,
) -> Result<Outcome, Error> {
    let spec = load_spec(spec_path)?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::InvalidSpec(format!("cannot read {}: {e}", config_path.display())))?;
    let mut cfg = config_from_str(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let (controller, trace) = descend(&spec, &cfg)?;

    let mut csv = String::from("iteration,cost,gradNorm,step,margin\n");
    for r in &trace.records {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration,
            fmt_float(r.cost),
            fmt_float(r.grad_norm),
            fmt_float(r.step),
            fmt_float(r.margin),
        ));
    }
    let controller_value = controller_to_value(&controller);
    let controller_bytes = format!("{}\n", print_value(&controller_value)).into_bytes();

    let last = trace.records.last().expect("descent always records the start");
    Ok(Outcome {
        stdout: json!({
            "termination": termination_name(trace.termination),
            "iterations": trace.records.len() - 1,
            "initialGradNorm": trace.initial_grad_norm,
            "threshold": trace.threshold,
            "finalCost": last.cost,
            "finalGradNorm": last.grad_norm,
            "residuals": {
                "energy": trace.final_residuals.energy,
                "coupling": trace.final_residuals.coupling,
            },
            "seed": trace.seed,
            "controller": controller_value,
        }),
        artifacts: vec![
            Artifact {
                name: "controller.json",
                bytes: controller_bytes,
            },
            Artifact {
                name: "trace.csv",
                bytes: csv.into_bytes(),
            },
        ],
        exit: if trace.termination == Termination::Converged {
            0
        } else {
            1
        },
    })
}

fn cmd_oracle(path: &Path, n: usize) -> Result<Outcome, Error> {
    let spec = load_spec(path)?;
    let net = build_finite(&spec, n)?;
    let cov = finite_covariance(&net)?;
    let value = cost_from_covariance(&net, &cov.x);
    let spectral = tinet_core::cost::finite_cost(&spec, n)?.value;
    let gap = (value - spectral).abs() / spectral.abs().max(f64::MIN_POSITIVE);
    Ok(Outcome::ok(json!({
        "N": n,
        "value": value,
        "covarianceResidual": cov.residual,
        "hermitianDefect": cov.hermitian_defect,
        "shiftDefect": shift_commutation_defect(&net),
        "spectralValue": spectral,
        "routeGap": gap,
    })))
}

fn emit_artifacts(
    dir: &Path,
    outcome: &Outcome,
    command: &str,
    input: &Path,
    parameters: Map<String, Value>,
    wall_time: f64,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for artifact in &outcome.artifacts {
        let path = dir.join(artifact.name);
        write_atomic(&path, &artifact.bytes)?;
        paths.push(path.display().to_string());
    }
    let manifest = json!({
        "inputPath": input.display().to_string(),
        "command": command,
        "parameters": Value::Object(parameters),
        "outputPaths": paths,
        "toolVersion": env!("CARGO_PKG_VERSION"),
        "wallTime": wall_time,
    });
    write_atomic(
        &dir.join("manifest.json"),
        format!("{}\n", print_value(&manifest)).as_bytes(),
    )
}
