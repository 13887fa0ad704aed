//! Command-line surface. Exit codes: 0 success, 1 validation error,
//! 2 diverged run (except `counterexample`, where the drift law is the
//! pass criterion).

use crate::engine::{self, GridAxis};
use crate::error::{invalid, Result, SimError};
use crate::io::config::{parse_problem_kind, FullConfig};
use crate::io::{config, csv, svg, table};
use crate::metrics;
use crate::optim::{Algorithm, EtaMode};
use crate::problems::Problem;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "fafed",
    about = "Deterministic cross-silo federated optimization simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one run and write its results CSV.
    Run(RunOpts),
    /// Run a hyperparameter grid and report the best configuration.
    Grid(GridOpts),
    /// Check the recorded invariants of an audited run file.
    Verify(VerifyOpts),
    /// Reproduce the naive-adaptive drift table on the divergence example.
    Counterexample(CounterOpts),
    /// Render a static SVG chart from results CSVs.
    Plot(PlotOpts),
    /// Inspect problem instances.
    Problem(ProblemCmd),
}

/// Flags shared by run-like subcommands. Precedence: flags over config
/// file over built-in defaults.
#[derive(Args, Clone, Default)]
struct CommonOpts {
    /// Config file with [problem], [algorithm], [run] sections.
    #[arg(long)]
    config: Option<PathBuf>,
    /// fafed | naive-adaptive | fedavg | fedadam
    #[arg(long)]
    algo: Option<String>,
    /// counterexample | quadratic | logistic
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    dim: Option<u64>,
    #[arg(long)]
    center_spread: Option<f64>,
    #[arg(long)]
    curvature_lo: Option<f64>,
    #[arg(long)]
    curvature_hi: Option<f64>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    samples_per_client: Option<u64>,
    #[arg(long)]
    label_skew: Option<f64>,
    /// Seed for problem generation (defaults to the run seed).
    #[arg(long)]
    problem_seed: Option<u64>,
    #[arg(long)]
    q: Option<u64>,
    #[arg(long)]
    b: Option<u64>,
    #[arg(long)]
    init_batch: Option<u64>,
    #[arg(long)]
    t: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    /// decaying | constant
    #[arg(long)]
    eta_mode: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    rho_hbar: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
    #[arg(long)]
    adam_beta1: Option<f64>,
    #[arg(long)]
    adam_beta2: Option<f64>,
    #[arg(long)]
    adam_tau: Option<f64>,
    #[arg(long)]
    adam_eta_global: Option<f64>,
    /// Also write per-step audit scalars next to the CSV.
    #[arg(long)]
    audit: bool,
    /// 1 = serial (default); 0 or > 1 = thread pool.
    #[arg(long)]
    workers: Option<u64>,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunOpts {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct GridOpts {
    #[command(flatten)]
    common: CommonOpts,
    /// Grid axis as name=v1,v2,... (repeatable).
    #[arg(long = "vary")]
    vary: Vec<String>,
    /// Gradient-norm target for the comparison table.
    #[arg(long, default_value_t = 1e-2)]
    threshold: f64,
}

#[derive(Args)]
struct VerifyOpts {
    /// Audit file produced by `run --audit`.
    audit_file: PathBuf,
}

#[derive(Args)]
struct CounterOpts {
    /// Steps of the drift table.
    #[arg(long, default_value_t = 50)]
    t: u64,
}

#[derive(Args)]
struct PlotOpts {
    /// Input CSVs, one polyline each; legend uses file stems.
    csvs: Vec<PathBuf>,
    #[arg(long, default_value = "loss")]
    column: String,
    /// t | comms | samples
    #[arg(long, default_value = "t")]
    x_axis: String,
    #[arg(long)]
    log_y: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ProblemCmd {
    #[command(subcommand)]
    action: ProblemAction,
}

#[derive(Subcommand)]
enum ProblemAction {
    /// Print problem metadata as key=value lines.
    Describe(DescribeOpts),
}

#[derive(Args)]
struct DescribeOpts {
    #[command(flatten)]
    common: CommonOpts,
}

fn assemble(common: &CommonOpts) -> Result<(FullConfig, Option<PathBuf>)> {
    let mut full = match &common.config {
        Some(path) => config::load_config(path)?,
        None => FullConfig::default(),
    };
    let p = &mut full.problem;
    if let Some(kind) = &common.problem {
        p.kind = parse_problem_kind(kind)?;
    }
    if let Some(n) = common.n {
        p.n_clients = n as usize;
    }
    if let Some(d) = common.dim {
        p.dim = d as usize;
    }
    if let Some(v) = common.center_spread {
        p.center_spread = v;
    }
    if let Some(v) = common.curvature_lo {
        p.curvature_lo = v;
    }
    if let Some(v) = common.curvature_hi {
        p.curvature_hi = v;
    }
    if let Some(v) = common.noise_sigma {
        p.noise_sigma = v;
    }
    if let Some(v) = common.samples_per_client {
        p.samples_per_client = v as usize;
    }
    if let Some(v) = common.label_skew {
        p.label_skew = v;
    }

    let r = &mut full.run;
    if let Some(a) = &common.algo {
        r.algorithm = Algorithm::parse(a)?;
    }
    if let Some(v) = common.t {
        r.total_steps = v;
    }
    if let Some(v) = common.seed {
        r.seed = v;
    }
    p.seed = common.problem_seed.or(common.seed).unwrap_or(p.seed);
    if let Some(v) = common.record_every {
        r.record_every = v;
    }
    if let Some(m) = &common.eta_mode {
        r.hp.eta_mode = match m.as_str() {
            "decaying" => EtaMode::DecayingEq5,
            "constant" => EtaMode::Constant,
            other => return invalid(format!("eta_mode: '{other}'")),
        };
    }
    if let Some(v) = common.q {
        if v < 1 {
            return invalid("q must be >= 1");
        }
        r.hp.q = v;
    }
    if let Some(v) = common.b {
        r.hp.batch = v as usize;
    }
    if let Some(v) = common.init_batch {
        r.hp.init_batch = v as usize;
    }
    if let Some(v) = common.eta {
        r.hp.eta = v;
    }
    if let Some(v) = common.rho_hbar {
        r.hp.rho_hbar = v;
    }
    if let Some(v) = common.rho {
        r.hp.rho = v;
    }
    if let Some(v) = common.beta {
        r.hp.beta = v;
    }
    if let Some(v) = common.c {
        r.hp.c = v;
    }
    if let Some(v) = common.w {
        r.hp.w = v;
    }
    if let Some(v) = common.x0 {
        r.x0 = Some(v);
    }
    if let Some(v) = common.adam_beta1 {
        r.hp.adam_beta1 = v;
    }
    if let Some(v) = common.adam_beta2 {
        r.hp.adam_beta2 = v;
    }
    if let Some(v) = common.adam_tau {
        r.hp.adam_tau = v;
    }
    if let Some(v) = common.adam_eta_global {
        r.hp.adam_eta_global = v;
    }
    if common.audit {
        r.audit = true;
    }
    if let Some(v) = common.workers {
        r.workers = v as usize;
    }
    let out = common
        .out
        .clone()
        .or_else(|| full.out.as_ref().map(PathBuf::from));
    Ok((full, out))
}

fn build_problem(full: &FullConfig) -> Result<Problem> {
    full.problem.build()
}

fn cmd_run(opts: &RunOpts) -> Result<i32> {
    let (full, out) = assemble(&opts.common)?;
    let problem = build_problem(&full)?;
    let record = engine::run_experiment(&problem, &full.run)?;
    let out = out.unwrap_or_else(|| PathBuf::from("run.csv"));
    csv::save(&record, &out)?;
    if let Some(audit) = &record.audit {
        let mut audit_path = out.clone();
        audit_path.set_extension("audit.json");
        audit.save(&audit_path)?;
        eprintln!("audit written to {}", audit_path.display());
    }
    eprintln!(
        "{} on {}: {} rows -> {} ({} ms)",
        full.run.algorithm.name(),
        problem.kind.name(),
        record.rows.len(),
        out.display(),
        record.elapsed_ms
    );
    if let Some(step) = record.diverged_at {
        eprintln!("run diverged at step {step}");
        return Ok(2);
    }
    Ok(0)
}

fn parse_axes(vary: &[String]) -> Result<Vec<GridAxis>> {
    if vary.is_empty() {
        return invalid("grid requires at least one --vary name=v1,v2,...");
    }
    let mut axes = Vec::new();
    for spec in vary {
        let Some((name, values)) = spec.split_once('=') else {
            return invalid(format!("bad --vary '{spec}', expected name=v1,v2"));
        };
        let values: Result<Vec<f64>> = values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| SimError::InvalidArgument(format!("bad grid value '{v}'")))
            })
            .collect();
        axes.push(GridAxis {
            name: name.trim().to_string(),
            values: values?,
        });
    }
    Ok(axes)
}

fn assignment_label(assignment: &[(String, f64)]) -> String {
    assignment
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_grid(opts: &GridOpts) -> Result<i32> {
    let (full, out) = assemble(&opts.common)?;
    let problem = build_problem(&full)?;
    let axes = parse_axes(&opts.vary)?;
    let outcome = engine::grid_search(&problem, &full.run, &axes)?;

    println!(
        "{:<32} {:>14} {:>14} {:>12} {:>8}",
        "assignment", "final_loss", "final_grad", "samples", "comms"
    );
    for row in &outcome.table {
        println!(
            "{:<32} {:>14.6e} {:>14.6e} {:>12} {:>8}{}",
            assignment_label(&row.assignment),
            row.final_loss,
            row.final_grad_norm,
            row.samples,
            row.comms,
            if row.diverged { "  DIVERGED" } else { "" }
        );
    }
    println!("best: {}", assignment_label(&outcome.best_assignment));

    let labeled: Vec<(String, Vec<engine::RecordRow>)> = outcome
        .table
        .iter()
        .zip(&outcome.records)
        .map(|(row, rec)| (assignment_label(&row.assignment), rec.rows.clone()))
        .collect();
    println!();
    print!("{}", table::compare_runs(&labeled, opts.threshold)?);

    if let Some(out) = out {
        csv::save(outcome.best(), &out)?;
        eprintln!("best run written to {}", out.display());
    }
    Ok(0)
}

fn cmd_verify(opts: &VerifyOpts) -> Result<i32> {
    let audit = crate::audit::AuditLog::load(&opts.audit_file)?;
    let results = metrics::verify_run(&audit);
    let mut all_ok = true;
    for r in &results {
        println!(
            "{} {} — {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        all_ok &= r.pass;
    }
    Ok(if all_ok { 0 } else { 1 })
}

/// The canned divergence reproduction: eta 0.1, beta 0.5, v0 = 0, x0 = 10,
/// per-step aggregation. Drives the naive-adaptive kernel directly and
/// prints observed vs predicted average drift eta / (3 sqrt(1 - beta^t)).
fn cmd_counterexample(opts: &CounterOpts) -> Result<i32> {
    use crate::optim::{naive_adaptive_local, ClientState, HyperParams, ServerState};
    use crate::rng::{RngStream, PURPOSE_BATCH};
    use crate::vecmath::mean_centered;

    let problem = crate::problems::make_counterexample();
    let eta = 0.1;
    let beta = 0.5;
    let hp = HyperParams {
        eta_mode: EtaMode::Constant,
        eta,
        beta,
        q: 1,
        batch: 1,
        ..HyperParams::default()
    };
    let mut clients: Vec<ClientState> = (0..3)
        .map(|i| ClientState::fresh(vec![10.0], RngStream::new(1, i, PURPOSE_BATCH)))
        .collect();
    let mut server = ServerState::fresh(vec![10.0]);
    let mut x_bar = 10.0_f64;

    println!(
        "{:>4} {:>22} {:>22} {:>22} {:>12}",
        "t", "x_bar", "predicted_drift", "observed_drift", "abs_diff"
    );
    let mut worst: f64 = 0.0;
    let mut finite = true;
    for t in 1..=opts.t.max(1) {
        server.t = t;
        clients = clients
            .iter()
            .enumerate()
            .map(|(i, c)| naive_adaptive_local(c, &server, &problem, &hp, i).map(|(c, _)| c))
            .collect::<Result<_>>()?;
        let views: Vec<&[f64]> = clients.iter().map(|c| c.x.as_slice()).collect();
        let mean = mean_centered(&views);
        for c in &mut clients {
            c.x = mean.clone();
        }
        let observed = mean[0] - x_bar;
        let predicted = eta / (3.0 * (1.0 - beta.powi(t as i32)).sqrt());
        let diff = (observed - predicted).abs();
        worst = worst.max(diff);
        finite &= mean[0].is_finite();
        println!(
            "{t:>4} {:>22.15} {predicted:>22.15} {observed:>22.15} {diff:>12.3e}",
            mean[0]
        );
        x_bar = mean[0];
    }
    let pass = worst <= 1e-9 && finite;
    println!(
        "{}: worst |observed - predicted| = {worst:.3e} (tolerance 1e-9)",
        if pass { "PASS" } else { "FAIL" }
    );
    Ok(if pass { 0 } else { 1 })
}

fn cmd_plot(opts: &PlotOpts) -> Result<i32> {
    if opts.csvs.is_empty() {
        return invalid("plot requires at least one CSV");
    }
    let mut series = Vec::new();
    for p in &opts.csvs {
        series.push((table::stem_of(p), csv::load(p)?));
    }
    let x_axis = svg::XAxis::parse(&opts.x_axis)?;
    let body = svg::emit_plot(&series, &opts.column, x_axis, opts.log_y)?;
    std::fs::write(&opts.out, body)?;
    eprintln!("chart written to {}", opts.out.display());
    Ok(0)
}

fn cmd_problem(cmd: &ProblemCmd) -> Result<i32> {
    match &cmd.action {
        ProblemAction::Describe(opts) => {
            let (full, _) = assemble(&opts.common)?;
            let problem = build_problem(&full)?;
            for (k, v) in problem.describe() {
                println!("{k}={v}");
            }
            Ok(0)
        }
    }
}

/// Entry point used by main; returns the process exit code.
pub fn cli_run() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(o) => cmd_run(o),
        Command::Grid(o) => cmd_grid(o),
        Command::Verify(o) => cmd_verify(o),
        Command::Counterexample(o) => cmd_counterexample(o),
        Command::Plot(o) => cmd_plot(o),
        Command::Problem(o) => cmd_problem(o),
    };
    match result {
        Ok(code) => code,
        Err(SimError::Diverged { step }) => {
            eprintln!("error: run diverged at step {step}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
