//! Command-line front end: certificate synthesis, verification and
//! synchronization runs.
//!
//! Exit codes: 0 on success, 1 when a certificate fails verification, a
//! problem is infeasible or a run cannot complete, 2 on usage errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};

use chaosync::experiments::{
    build_preset, run_scenario, Controller, PresetOptions, RunMetrics, ScenarioName,
    DEFAULT_STRIDE, DEFAULT_T_END,
};
use chaosync::integrate::DEFAULT_DT;
use chaosync::lmi::{DEFAULT_DELTA, DEFAULT_EPS};
use chaosync::{solve_feasibility, Alpha, CertificateFile, DistributionMatrix, Error, LmiProblem};
use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "chaosync",
    version,
    about = "Global synchronization of switched unified chaotic systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the vertex LMIs and write a gain certificate.
    Synthesize(SynthesizeArgs),
    /// Re-check a certificate at the polytope vertices and on an α grid.
    Verify(VerifyArgs),
    /// Simulate a master/slave pair under a scenario preset.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
struct SynthesizeArgs {
    #[arg(long, default_value_t = 0.0)]
    alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_max: f64,
    /// Input distribution matrix: `ones` (3×1 column) or `identity` (3×3).
    #[arg(long, default_value = "ones", value_parser = parse_distribution)]
    b: DistributionMatrix,
    /// Lower bound on the eigenvalues of Y.
    #[arg(long, default_value_t = DEFAULT_EPS)]
    eps: f64,
    /// Required slack below zero for every vertex LMI.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    cert: PathBuf,
    /// Number of evenly spaced α values checked besides the vertices.
    #[arg(long, default_value_t = 101)]
    grid: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// step, sine, chirp, random, random-ic, onoff or none.
    #[arg(long, value_parser = parse_scenario)]
    scenario: ScenarioName,
    #[arg(long)]
    cert: PathBuf,
    #[arg(long, default_value_t = DEFAULT_DT)]
    dt: f64,
    #[arg(long, default_value_t = DEFAULT_T_END)]
    t_end: f64,
    #[arg(long, default_value_t = 0, conflicts_with = "seeds")]
    seed: u64,
    /// Run every seed in `A..B` (end exclusive), each into its own files.
    #[arg(long, value_parser = parse_seed_range)]
    seeds: Option<Range<u64>>,
    /// Write every N-th integration step.
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    stride: usize,
    /// Hold time of the sampled α presets.
    #[arg(long)]
    ts: Option<f64>,
    /// Keep the controller switched off for the whole run.
    #[arg(long)]
    no_control: bool,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    metrics: Option<PathBuf>,
}

fn parse_distribution(s: &str) -> Result<DistributionMatrix, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scenario(s: &str) -> Result<ScenarioName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_seed_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: u64 = a
        .trim()
        .parse()
        .map_err(|e| format!("bad start {a:?}: {e}"))?;
    let b: u64 = b
        .trim()
        .parse()
        .map_err(|e| format!("bad end {b:?}: {e}"))?;
    if a >= b {
        return Err(format!("seed range {a}..{b} is empty"));
    }
    Ok(a..b)
}

/// Why a command did not succeed.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(msg) => Failure::Usage(msg),
            other => Failure::Failed(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Reports go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Synthesize(a) => synthesize(&a, out),
        Command::Verify(a) => verify(&a, out),
        Command::Simulate(a) => simulate(&a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Failed(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_FAILURE
        }
    }
}

/// [`run`] wired to the process's standard streams.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

fn report(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Outcome {
    out.write_fmt(text)
        .map_err(|e| Failure::Failed(format!("cannot write report: {e}")))
}

fn synthesize(args: &SynthesizeArgs, out: &mut dyn Write) -> Outcome {
    let problem = LmiProblem::for_alpha_range(
        Alpha::new(args.alpha_min)?,
        Alpha::new(args.alpha_max)?,
        args.b,
        args.eps,
        args.delta,
    )?;
    let cert = match solve_feasibility(&problem) {
        Ok(c) => c,
        Err(Error::Infeasible { best_margin }) => {
            return Err(Failure::Failed(format!(
                "no certificate found (best vertex margin {best_margin:.6e})"
            )))
        }
        Err(e) => return Err(e.into()),
    };
    let file = CertificateFile::from_certificate(&cert)?;
    file.write(&args.out)?;

    let worst = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report(
        out,
        format_args!(
            "wrote {}\nK = {:?}\neig(P) = {:?}\nworst LMI margin {:.6e}\nworst BMI margin {:.6e}\n",
            args.out.display(),
            file.k,
            file.p_eigenvalues,
            worst(&file.lmi_margins),
            worst(&file.bmi_margins),
        ),
    )
}

fn verify(args: &VerifyArgs, out: &mut dyn Write) -> Outcome {
    let file = CertificateFile::read(&args.cert)?;
    let check = file.verify(args.grid)?;
    let v = &check.vertices;
    let failing = v.bmi_margins.iter().filter(|m| **m >= 0.0).count();
    report(
        out,
        format_args!(
            "eig(P) = {:?}\nworst vertex margin {:.6e} ({failing} of {} vertices failing)\n",
            v.p_eigenvalues,
            v.worst_margin(),
            v.bmi_margins.len(),
        ),
    )?;
    if !check.grid.is_empty() {
        report(
            out,
            format_args!(
                "worst margin on {}-point alpha grid {:.6e}\n",
                check.grid.len(),
                check.worst_grid_margin()
            ),
        )?;
    }
    if check.passed() {
        report(out, format_args!("certificate verified\n"))
    } else if v.p_min_eig() <= 0.0 {
        Err(Failure::Failed("P is not positive definite".into()))
    } else {
        Err(Failure::Failed("certificate does not verify".into()))
    }
}

fn load_controller(path: &Path) -> Result<Controller, Failure> {
    let file = CertificateFile::read(path)?;
    Controller::from_file(&file).map_err(|e| match e {
        Error::InvalidInput(msg) => Failure::Failed(msg),
        other => other.into(),
    })
}

/// `run.csv` with seed 7 becomes `run-seed7.csv`.
fn seeded_path(path: &Path, seed: u64) -> PathBuf {
    let stem = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let name = match path.extension() {
        Some(ext) => format!("{stem}-seed{seed}.{}", ext.to_string_lossy()),
        None => format!("{stem}-seed{seed}"),
    };
    path.with_file_name(name)
}

fn simulate_one(
    args: &SimulateArgs,
    controller: &Controller,
    seed: u64,
    out_path: &Path,
    metrics_path: Option<&Path>,
) -> Result<RunMetrics, Failure> {
    let opts = PresetOptions {
        seed,
        sample_time: args.ts,
        dt: args.dt,
        t_end: args.t_end,
        stride: args.stride,
    };
    let mut scenario = build_preset(args.scenario, &opts)?;
    if args.no_control {
        scenario = scenario.without_control();
    }
    let run = run_scenario(&scenario, controller)?;

    let io_err = |p: &Path, e: std::io::Error| Failure::Failed(format!("{}: {e}", p.display()));
    let mut w = BufWriter::new(File::create(out_path).map_err(|e| io_err(out_path, e))?);
    run.write_csv(&mut w)?;
    w.flush().map_err(|e| io_err(out_path, e))?;
    if let Some(mp) = metrics_path {
        let mut text = run.metrics.to_json()?;
        text.push('\n');
        std::fs::write(mp, text).map_err(|e| io_err(mp, e))?;
    }
    Ok(run.metrics)
}

fn describe(metrics: &RunMetrics) -> String {
    let sync = metrics
        .time_to_sync
        .map_or_else(|| "never".to_string(), |t| format!("{t:.3} s"));
    let mut s = format!(
        "time to sync {sync}, final error {:.3e}, {} Lyapunov violations",
        metrics.final_error, metrics.lyapunov_violations
    );
    if let Some(t) = metrics.divergence_time {
        s.push_str(&format!(", diverged at t = {t:.3}"));
    }
    s
}

fn simulate(args: &SimulateArgs, out: &mut dyn Write) -> Outcome {
    let controller = load_controller(&args.cert)?;
    let Some(seeds) = args.seeds.clone() else {
        let metrics = simulate_one(
            args,
            &controller,
            args.seed,
            &args.out,
            args.metrics.as_deref(),
        )?;
        report(
            out,
            format_args!("wrote {}: {}\n", args.out.display(), describe(&metrics)),
        )?;
        return diverged_failure(&[(args.seed, metrics)]);
    };

    let results: Vec<(u64, Result<RunMetrics, Failure>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = seeds
            .map(|seed| {
                let controller = &controller;
                scope.spawn(move || {
                    let out_path = seeded_path(&args.out, seed);
                    let metrics_path = args.metrics.as_deref().map(|p| seeded_path(p, seed));
                    let r =
                        simulate_one(args, controller, seed, &out_path, metrics_path.as_deref());
                    (seed, r)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });

    let mut finished = Vec::with_capacity(results.len());
    for (seed, r) in results {
        let metrics = r?;
        let path = seeded_path(&args.out, seed);
        report(
            out,
            format_args!("wrote {}: {}\n", path.display(), describe(&metrics)),
        )?;
        finished.push((seed, metrics));
    }
    diverged_failure(&finished)
}

fn diverged_failure(runs: &[(u64, RunMetrics)]) -> Outcome {
    let diverged: Vec<String> = runs
        .iter()
        .filter(|(_, m)| m.diverged)
        .map(|(s, _)| s.to_string())
        .collect();
    if diverged.is_empty() {
        Ok(())
    } else {
        Err(Failure::Failed(format!(
            "run diverged (seed {})",
            diverged.join(", ")
        )))
    }
}
