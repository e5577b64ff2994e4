//! Command-line front end for the cubature-adversary toolkit.
//!
//! Every run prints a single JSON envelope `{schema, subcommand, config,
//! result}` to standard output (or a CSV table for the tabular
//! subcommands) and embeds its fully resolved configuration, so a report
//! is reproducible from its own bytes. Identical arguments and seed give
//! byte-identical output for any thread count.
//!
//! Exit codes: 0 success, 1 input error, 2 a `verify` check failed.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cubature_adversary::bounds::{find_formula, BoundParams, BoundReport};
use cubature_adversary::estimate::{attack, AttackConfig, AttackReport};
use cubature_adversary::geometry::{
    ball_volume_ln, ball_volume_upper_bound_ln, slice_ratio, unit_ball_volume_ln, PointSet,
};
use cubature_adversary::rules::{load_points, save_points, RuleSpec};
use cubature_adversary::verify::{find_suite, CheckOutcome, SuiteConfig};

const SCHEMA_VERSION: u32 = 1;

const EXIT_OK: i32 = 0;
const EXIT_INPUT_ERROR: i32 = 1;
const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Parser)]
#[command(
    name = "cubature-adversary",
    version,
    about = "Worst-case integration-error lower bounds against cubature node sets"
)]
struct Cli {
    /// Output format; csv is available for bound, verify and volume.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one closed-form bound by formula name.
    Bound(BoundArgs),
    /// Run the full adversarial pipeline against a node set.
    Attack(AttackArgs),
    /// Statistically verify the smoothing construction's properties.
    Verify(VerifyArgs),
    /// Generate a node set and write it to a points file.
    Gen(GenArgs),
    /// Ball-volume diagnostics for one (d, delta).
    Volume(VolumeArgs),
}

#[derive(Args, Serialize)]
struct BoundArgs {
    /// One of: thm2, thm3, corollary, sukharev, certificate.
    #[arg(long)]
    formula: String,
    #[arg(long)]
    d: Option<u32>,
    /// Smoothing order.
    #[arg(long, default_value_t = 1)]
    r: u32,
    /// Vanishing radius scale.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Error level in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Dimension exponent in (0, 1/2).
    #[arg(long)]
    p: Option<f64>,
    /// Point count.
    #[arg(long)]
    n: Option<u64>,
    /// Report only the log value; `value` is emitted as null.
    #[arg(long)]
    log_space: bool,
}

#[derive(Args, Serialize)]
struct AttackArgs {
    /// Node-set generator, midpoint:m or random:n.
    #[arg(long, conflicts_with = "points")]
    rule: Option<String>,
    /// Points file to load instead of generating nodes.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Dimension; required with --rule, checked against --points.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long, default_value_t = 1)]
    r: u32,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Uniform draws for the neighborhood-measure estimate.
    #[arg(long, default_value_t = 100_000)]
    samples_measure: u64,
    /// Outer uniform draws for the integral estimate.
    #[arg(long, default_value_t = 100_000)]
    samples_integral: u64,
    /// Ball draws per smoothed function evaluation.
    #[arg(long, default_value_t = 1_000)]
    inner_samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct VerifyArgs {
    /// One of: conv, class, tilde.
    #[arg(long)]
    suite: String,
    #[arg(long, default_value_t = 2)]
    d: u32,
    #[arg(long, default_value_t = 1)]
    r: u32,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Dimension exponent for the tilde suite.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling effort knob; larger is slower and sharper.
    #[arg(long, default_value_t = 100)]
    budget: u64,
}

#[derive(Args, Serialize)]
struct GenArgs {
    /// Node-set generator, midpoint:m or random:n.
    #[arg(long)]
    rule: String,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination points file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct VolumeArgs {
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
}

#[derive(Serialize)]
struct Envelope<C: Serialize, R: Serialize> {
    schema: u32,
    subcommand: &'static str,
    config: C,
    result: R,
}

#[derive(Serialize)]
struct GenReport {
    out: String,
    d: usize,
    n: u64,
}

#[derive(Serialize)]
struct VolumeReport {
    d: u32,
    delta: f64,
    /// Radius of the smoothing-scale ball, delta sqrt d.
    ball_radius: f64,
    unit_ball_volume_ln: f64,
    unit_ball_volume: Option<f64>,
    /// Volume of the radius delta sqrt d ball.
    ball_volume_ln: f64,
    ball_volume: Option<f64>,
    /// Closed-form upper bound (delta sqrt(2 pi e))^d on that volume.
    volume_bound_ln: f64,
    volume_bound: Option<f64>,
    slice_ratio: f64,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap reserves exit code 2 for usage errors; this tool keeps 2
            // for failed verify checks, so usage errors are remapped to 1.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT_ERROR,
            };
            let _ = err.print();
            return code;
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return EXIT_INPUT_ERROR;
    }
    match dispatch(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INPUT_ERROR
        }
    }
}

/// Applies the optional CUBATURE_ADVERSARY_THREADS cap before any
/// parallel work starts. The cap changes speed only, never results.
fn configure_threads() -> Result<(), String> {
    let raw = match std::env::var("CUBATURE_ADVERSARY_THREADS") {
        Ok(raw) => raw,
        Err(std::env::VarError::NotPresent) => return Ok(()),
        Err(err) => return Err(format!("CUBATURE_ADVERSARY_THREADS: {err}")),
    };
    let threads: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("CUBATURE_ADVERSARY_THREADS must be a positive integer, got {raw:?}"))?;
    if threads == 0 {
        return Err("CUBATURE_ADVERSARY_THREADS must be a positive integer, got 0".into());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|err| format!("failed to configure the thread pool: {err}"))
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Bound(args) => run_bound(args, cli.format),
        Command::Attack(args) => run_attack(args, cli.format),
        Command::Verify(args) => run_verify(args, cli.format),
        Command::Gen(args) => run_gen(args, cli.format),
        Command::Volume(args) => run_volume(args, cli.format),
    }
}

fn emit<C: Serialize, R: Serialize>(
    subcommand: &'static str,
    config: C,
    result: R,
) -> Result<(), String> {
    let envelope = Envelope {
        schema: SCHEMA_VERSION,
        subcommand,
        config,
        result,
    };
    let text = serde_json::to_string_pretty(&envelope).map_err(|err| err.to_string())?;
    println!("{text}");
    Ok(())
}

fn reject_csv(subcommand: &str, format: Format) -> Result<(), String> {
    if format == Format::Csv {
        return Err(format!(
            "--format csv is not available for subcommand {subcommand}"
        ));
    }
    Ok(())
}

fn opt_cell<T: std::fmt::Display>(value: Option<T>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn run_bound(args: BoundArgs, format: Format) -> Result<i32, String> {
    let formula = find_formula(&args.formula).map_err(|err| err.to_string())?;
    let params = BoundParams {
        d: args.d,
        r: Some(args.r),
        delta: Some(args.delta),
        eps: Some(args.eps),
        p: args.p,
        n: args.n,
    };
    let mut report: BoundReport = formula.evaluate(&params).map_err(|err| err.to_string())?;
    if args.log_space {
        report.value = None;
    }
    match format {
        Format::Json => emit("bound", &args, &report)?,
        Format::Csv => {
            println!("formula,d,r,delta,eps,p,n,log_value,value");
            println!(
                "{},{},{},{},{},{},{},{},{}",
                args.formula,
                opt_cell(args.d),
                args.r,
                args.delta,
                args.eps,
                opt_cell(args.p),
                opt_cell(args.n),
                report.log_value,
                opt_cell(report.value)
            );
        }
    }
    Ok(EXIT_OK)
}

/// Resolved node set plus the echo fields describing where it came from.
fn resolve_nodes(
    rule: &Option<String>,
    points: &Option<PathBuf>,
    d: Option<usize>,
    seed: u64,
) -> Result<PointSet, String> {
    if let Some(path) = points {
        let set = load_points(path).map_err(|err| err.to_string())?;
        if let Some(d) = d {
            if d != set.dim() {
                return Err(format!(
                    "--points {} has d = {}, but --d = {d} was given",
                    path.display(),
                    set.dim()
                ));
            }
        }
        return Ok(set);
    }
    let Some(rule) = rule else {
        return Err("one of --rule or --points is required".into());
    };
    let Some(d) = d else {
        return Err("--d is required with --rule".into());
    };
    RuleSpec::parse(rule)
        .and_then(|spec| spec.build(d, seed))
        .map_err(|err| err.to_string())
}

#[derive(Serialize)]
struct AttackEcho {
    rule: Option<String>,
    points: Option<String>,
    d: usize,
    n: u64,
    r: u32,
    delta: f64,
    samples_measure: u64,
    samples_integral: u64,
    inner_samples: u64,
    seed: u64,
}

fn run_attack(args: AttackArgs, format: Format) -> Result<i32, String> {
    reject_csv("attack", format)?;
    let nodes = resolve_nodes(&args.rule, &args.points, args.d, args.seed)?;
    let cfg = AttackConfig {
        measure_samples: args.samples_measure,
        integral_samples: args.samples_integral,
        samples_per_eval: args.inner_samples,
        seed: args.seed,
    };
    let report: AttackReport =
        attack(&nodes, args.r, args.delta, &cfg).map_err(|err| err.to_string())?;
    let echo = AttackEcho {
        rule: args.rule,
        points: args.points.map(|p| p.display().to_string()),
        d: nodes.dim(),
        n: nodes.len() as u64,
        r: args.r,
        delta: args.delta,
        samples_measure: args.samples_measure,
        samples_integral: args.samples_integral,
        inner_samples: args.inner_samples,
        seed: args.seed,
    };
    emit("attack", &echo, &report)?;
    Ok(EXIT_OK)
}

fn run_verify(args: VerifyArgs, format: Format) -> Result<i32, String> {
    let suite = find_suite(&args.suite).map_err(|err| err.to_string())?;
    let cfg = SuiteConfig {
        d: args.d,
        r: args.r,
        delta: args.delta,
        p: args.p,
        seed: args.seed,
        budget: args.budget,
    };
    let outcomes: Vec<CheckOutcome> = suite.run(&cfg).map_err(|err| err.to_string())?;
    match format {
        Format::Json => emit("verify", &args, &outcomes)?,
        Format::Csv => {
            println!("property_id,condition,passed,observed,bound,tolerance,trials,seed");
            for o in &outcomes {
                println!(
                    "{},{},{},{},{},{},{},{}",
                    o.property_id.as_str(),
                    o.condition,
                    o.passed,
                    o.observed,
                    o.bound,
                    o.tolerance,
                    o.trials,
                    o.seed
                );
            }
        }
    }
    if outcomes.iter().any(|o| !o.passed) {
        return Ok(EXIT_CHECK_FAILED);
    }
    Ok(EXIT_OK)
}

fn run_gen(args: GenArgs, format: Format) -> Result<i32, String> {
    reject_csv("gen", format)?;
    let set = RuleSpec::parse(&args.rule)
        .and_then(|spec| spec.build(args.d, args.seed))
        .map_err(|err| err.to_string())?;
    save_points(&args.out, &set).map_err(|err| err.to_string())?;
    let report = GenReport {
        out: args.out.display().to_string(),
        d: set.dim(),
        n: set.len() as u64,
    };
    emit("gen", &args, &report)?;
    Ok(EXIT_OK)
}

fn exp_in_range(log_value: f64) -> Option<f64> {
    (log_value <= f64::MAX.ln()).then(|| log_value.exp())
}

fn run_volume(args: VolumeArgs, format: Format) -> Result<i32, String> {
    let radius = args.delta * f64::from(args.d).sqrt();
    let unit_ln = unit_ball_volume_ln(args.d).map_err(|err| err.to_string())?;
    let ball_ln = ball_volume_ln(args.d, radius).map_err(|err| err.to_string())?;
    let bound_ln = ball_volume_upper_bound_ln(args.d, args.delta).map_err(|err| err.to_string())?;
    let report = VolumeReport {
        d: args.d,
        delta: args.delta,
        ball_radius: radius,
        unit_ball_volume_ln: unit_ln,
        unit_ball_volume: exp_in_range(unit_ln),
        ball_volume_ln: ball_ln,
        ball_volume: exp_in_range(ball_ln),
        volume_bound_ln: bound_ln,
        volume_bound: exp_in_range(bound_ln),
        slice_ratio: slice_ratio(args.d).map_err(|err| err.to_string())?,
    };
    match format {
        Format::Json => emit("volume", &args, &report)?,
        Format::Csv => {
            println!(
                "d,delta,ball_radius,unit_ball_volume_ln,unit_ball_volume,ball_volume_ln,ball_volume,volume_bound_ln,volume_bound,slice_ratio"
            );
            println!(
                "{},{},{},{},{},{},{},{},{},{}",
                report.d,
                report.delta,
                report.ball_radius,
                report.unit_ball_volume_ln,
                opt_cell(report.unit_ball_volume),
                report.ball_volume_ln,
                opt_cell(report.ball_volume),
                report.volume_bound_ln,
                opt_cell(report.volume_bound),
                report.slice_ratio
            );
        }
    }
    Ok(EXIT_OK)
}
