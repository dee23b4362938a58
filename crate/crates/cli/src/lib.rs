//! The `curvebif` command line: subcommands, output files and the `verify`
//! meta-command.
//!
//! Exit codes: 0 on success, 1 on usage, configuration or solver errors,
//! 2 when `verify` finds a failing criterion.

pub mod acceptance;
pub mod config;
pub mod plot;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use curvebif::asymp::{default_eta, default_ladder, profile_laws, small_branch_scaling, MemberKind};
use curvebif::contin::{
    dedup_branches, diagram, seed_from_lambda0, seed_small_at, seed_zero_line, trace_many, Branch, Orientation, Origin,
    TraceOptions,
};
use curvebif::eigen::{bif_direction, principal_neumann};
use curvebif::io::to_json;
use curvebif::model::{curvature_residual, neumann_balance};
use curvebif::shoot::{find_regular, RegularSolution};
use curvebif::singular::{classify, solve_singular, SingularOutcome, SingularSolution, VerdictTag};
use curvebif::varmin::{multi_start, starts};
use curvebif::{Problem, SolutionMesh};

use config::{Knobs, Seed};

/// Distance below which two traced branches count as the same curve.
const DEDUP_TOL: f64 = 1e-3;

#[derive(Parser, Debug)]
#[command(name = "curvebif", version, about = "Positive solutions of a 1-D prescribed-curvature Neumann problem")]
struct Cli {
    /// JSON file with default values for any option below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Principal Neumann eigenvalue of the weight.
    Eig,
    /// Regular solutions at fixed lambda by shooting.
    Solve,
    /// Trace one branch of the bifurcation diagram.
    Branch,
    /// Regular/singular verdict from the criterion integrals.
    Classify,
    /// Construct the solution with a jump at the node.
    Singular,
    /// Minimize the discrete energy functional from several starts.
    Minimize,
    /// Asymptotic laws along a lambda ladder.
    Rates,
    /// All seeds traced and merged into one diagram.
    Diagram,
    /// Run the acceptance suite.
    Verify,
}

/// Parses `args` and runs the subcommand, writing to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock())
}

/// As [`run`], with standard output redirected to `out`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

/// Runs `args` and returns standard output, or the error exit code.
pub fn run_capture<I, T>(args: I) -> std::result::Result<String, String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut buf = Vec::new();
    match run_with(args, &mut buf) {
        0 => String::from_utf8(buf).map_err(|e| e.to_string()),
        code => Err(format!("exit code {code}")),
    }
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let file = match &cli.config {
        Some(p) => Knobs::from_file(p)?,
        None => Knobs::default(),
    };
    let knobs = cli.knobs.over(file);
    knobs.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = knobs.worker_threads() {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("cannot start worker threads")?;
    if let Command::Verify = cli.command {
        return verify(&pool, out);
    }
    // Solvers run on the pool; output is written afterwards, in one piece.
    let mut buf = Vec::new();
    let code = pool.install(|| dispatch(cli.command, &knobs, &mut buf))?;
    out.write_all(&buf).context("cannot write output")?;
    Ok(code)
}

fn dispatch(cmd: Command, k: &Knobs, out: &mut Vec<u8>) -> Result<i32> {
    let pb = k.problem()?;
    match cmd {
        Command::Eig => eig(&pb, k, out),
        Command::Solve => solve(&pb, k, out),
        Command::Branch => branches(&pb, k, &[k.seed.unwrap_or(Seed::Lambda0)], out),
        Command::Diagram => branches(&pb, k, &[Seed::Lambda0, Seed::Origin, Seed::LargeLambda], out),
        Command::Classify => classify_cmd(&pb, k, out),
        Command::Singular => singular(&pb, k, out),
        Command::Minimize => minimize(&pb, k, out),
        Command::Rates => rates(&pb, k, out),
        Command::Verify => unreachable!("handled before dispatch"),
    }
}

/// Writes `text` to `path`, or to `out` when no path is given.
fn emit(text: &str, path: Option<&Path>, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => out.write_all(text.as_bytes()).context("cannot write output"),
    }
}

fn emit_json<S: Serialize>(value: &S, k: &Knobs, out: &mut dyn Write) -> Result<i32> {
    emit(&to_json(value)?, k.out.as_deref(), out)?;
    Ok(0)
}

fn mesh_rows(mesh: &SolutionMesh) -> Vec<[f64; 3]> {
    (0..mesh.len()).map(|i| [mesh.x[i], mesh.u[i], mesh.theta[i].tan()]).collect()
}

#[derive(Serialize)]
struct SolutionJson {
    lambda: f64,
    kind: &'static str,
    s0: f64,
    sup_norm: f64,
    /// L1 curvature residual; for singular solutions the sum over both pieces.
    residual: f64,
    /// `int a f(u)`.
    balance: f64,
    jump: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    regular: Option<RegularDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    singular: Option<SingularDiagnostics>,
    mesh: Vec<[f64; 3]>,
}

#[derive(Serialize)]
struct RegularDiagnostics {
    theta1: f64,
    deriv_norm: f64,
    min_cos: f64,
    near_singular: bool,
    dead_core: bool,
}

#[derive(Serialize)]
struct SingularDiagnostics {
    u_left_z: f64,
    u_right_z: f64,
    u1: f64,
    flux_left: f64,
    flux_right: f64,
    residual_left: f64,
    residual_right: f64,
}

impl SolutionJson {
    fn regular(s: &RegularSolution<f64>) -> Self {
        SolutionJson {
            lambda: s.lambda,
            kind: "regular",
            s0: s.s0,
            sup_norm: s.sup_norm,
            residual: s.residual,
            balance: s.balance,
            jump: 0.0,
            regular: Some(RegularDiagnostics {
                theta1: s.theta1,
                deriv_norm: s.deriv_norm,
                min_cos: s.min_cos,
                near_singular: s.near_singular(),
                dead_core: s.dead_core,
            }),
            singular: None,
            mesh: mesh_rows(&s.mesh),
        }
    }

    fn singular(pb: &Problem, s: &SingularSolution<f64>) -> Self {
        let mesh = s.mesh();
        SolutionJson {
            lambda: s.lambda,
            kind: "singular",
            s0: s.s0,
            sup_norm: mesh.sup_norm(),
            residual: s.residual_left + s.residual_right,
            balance: neumann_balance(pb, &mesh),
            jump: s.jump,
            regular: None,
            singular: Some(SingularDiagnostics {
                u_left_z: s.u_left_z,
                u_right_z: s.u_right_z,
                u1: s.u1,
                flux_left: s.flux_left,
                flux_right: s.flux_right,
                residual_left: s.residual_left,
                residual_right: s.residual_right,
            }),
            mesh: mesh_rows(&mesh),
        }
    }
}

fn eig(pb: &Problem, k: &Knobs, out: &mut dyn Write) -> Result<i32> {
    #[derive(Serialize)]
    struct Eig {
        lambda0: f64,
        residual: f64,
        mesh_size: usize,
        /// `|lambda0 int a phi^2 - int phi'^2| / int phi'^2`.
        identity_defect: f64,
        moments: curvebif::eigen::Moments<f64>,
        lambda1: Option<f64>,
        lambda2: Option<f64>,
    }
    let pair = principal_neumann(&pb.weight)?;
    let m = pair.moments;
    let dir = bif_direction(&pb.f, &pair).ok();
    emit_json(
        &Eig {
            lambda0: pair.eigenvalue,
            residual: pair.residual,
            mesh_size: pair.mesh_size(),
            identity_defect: ((pair.eigenvalue * m.a_phi2 - m.dphi2) / m.dphi2).abs(),
            moments: m,
            lambda1: dir.map(|d| d.lambda1),
            lambda2: dir.and_then(|d| d.lambda2),
        },
        k,
        out,
    )
}

fn solve(pb: &Problem, k: &Knobs, out: &mut dyn Write) -> Result<i32> {
    #[derive(Serialize)]
    struct Solve {
        lambda: f64,
        s_range: [f64; 2],
        solutions: Vec<SolutionJson>,
    }
    let (lo, hi) = (k.s_min.unwrap_or(1e-6), k.s_max.unwrap_or(1e3));
    let sols = find_regular(pb, lo, hi, k.scan.unwrap_or(64))?;
    emit_json(&Solve { lambda: pb.lambda, s_range: [lo, hi], solutions: sols.iter().map(SolutionJson::regular).collect() }, k, out)
}

fn trace_options(k: &Knobs, seed: Seed) -> TraceOptions<f64> {
    let d = TraceOptions::<f64>::default();
    TraceOptions {
        h0: k.h0.unwrap_or(d.h0),
        h_max: k.h_max.unwrap_or(d.h_max),
        max_points: k.max_points.unwrap_or(d.max_points),
        lambda_max: k.lambda_max.unwrap_or(d.lambda_max),
        s_min: k.s_min.unwrap_or(d.s_min),
        s_max: k.s_max.unwrap_or(match seed {
            Seed::Origin => 100.0,
            _ => d.s_max,
        }),
        orientation: match seed {
            Seed::LargeLambda => Orientation::ShrinkLambda,
            _ => Orientation::GrowS0,
        },
        ..d
    }
}

fn seed_point(pb: &Problem, k: &Knobs, seed: Seed) -> Result<((f64, f64), Origin)> {
    Ok(match seed {
        Seed::Lambda0 => (seed_from_lambda0(pb, k.eps.unwrap_or(1e-3))?, Origin::FromLambda0),
        Seed::Origin => (seed_zero_line(k.s0.unwrap_or(0.01)), Origin::FromZeroLine),
        Seed::LargeLambda => (seed_small_at(pb, k.lambda.unwrap_or(100.0))?, Origin::FromLargeLambdaSmall),
    })
}

/// Traces every seed; the diagram CSV goes to `--out` (stdout otherwise),
/// the SVG to `--svg`, and a JSON summary to stdout when `--out` is given.
fn branches(pb: &Problem, k: &Knobs, seeds: &[Seed], out: &mut dyn Write) -> Result<i32> {
    #[derive(Serialize)]
    struct Summary<'a> {
        branches: Vec<BranchSummary<'a>>,
        dropped_duplicates: usize,
        failed_seeds: Vec<String>,
    }
    #[derive(Serialize)]
    struct BranchSummary<'a> {
        origin: Origin,
        points: usize,
        folds: &'a [usize],
        near_singular: usize,
        terminated_by: &'a curvebif::contin::StopReason<f64>,
        first: Option<[f64; 2]>,
        last: Option<[f64; 2]>,
    }
    let mut jobs = Vec::new();
    let mut failed = Vec::new();
    for &seed in seeds {
        match seed_point(pb, k, seed) {
            Ok((start, origin)) => jobs.push((start, origin, trace_options(k, seed))),
            Err(e) => failed.push(format!("{seed:?}: {e}")),
        }
    }
    let mut traced: Vec<Branch<f64>> = Vec::new();
    for (r, job) in trace_many(pb, &jobs).into_iter().zip(&jobs) {
        match r {
            Ok(b) => traced.push(b),
            Err(e) => failed.push(format!("{:?}: {e}", job.1)),
        }
    }
    if traced.is_empty() {
        return Err(anyhow!("no branch could be traced: {}", failed.join("; ")));
    }
    let total = traced.len();
    let kept = dedup_branches(traced, DEDUP_TOL);
    let d = diagram(&kept);
    emit(&d.to_csv(), k.out.as_deref(), out)?;
    if let Some(svg) = &k.svg {
        std::fs::write(svg, d.to_svg()).with_context(|| format!("cannot write {}", svg.display()))?;
    }
    if k.out.is_some() {
        let ends = |p: Option<&curvebif::contin::BranchPoint<f64>>| p.map(|p| [p.lambda, p.s0]);
        let summary = Summary {
            branches: kept
                .iter()
                .map(|b| BranchSummary {
                    origin: b.origin,
                    points: b.points.len(),
                    folds: &b.folds,
                    near_singular: b.near_singular_count(),
                    terminated_by: &b.terminated_by,
                    first: ends(b.points.first()),
                    last: ends(b.points.last()),
                })
                .collect(),
            dropped_duplicates: total - kept.len(),
            failed_seeds: failed,
        };
        out.write_all(to_json(&summary)?.as_bytes())?;
    }
    Ok(0)
}

fn classify_cmd(pb: &Problem, k: &Knobs, out: &mut dyn Write) -> Result<i32> {
    #[derive(Serialize)]
    struct Classified {
        lambda: f64,
        /// Whether a singular construction supplied the trace.
        traced: bool,
        #[serde(flatten)]
        verdict: curvebif::singular::RegularityVerdict<f64>,
    }
    let mut verdict = classify(pb, None)?;
    let mut traced = false;
    if verdict.tag == VerdictTag::Inconclusive && pb.weight.has_node_jump() {
        if let SingularOutcome::Found(s) = solve_singular(pb)? {
            verdict = classify(pb, Some(&s.mesh()))?;
            traced = true;
        }
    }
    emit_json(&Classified { lambda: pb.lambda, traced, verdict }, k, out)
}

fn singular(pb: &Problem, k: &Knobs, out: &mut dyn Write) -> Result<i32> {
    #[derive(Serialize)]
    #[serde(tag = "outcome", rename_all = "snake_case")]
    enum Singular {
        Found(SolutionJson),
        Absent { lambda: f64, reason: curvebif::singular::AbsentReason },
    }
    let res = match solve_singular(pb)? {
        SingularOutcome::Found(s) => Singular::Found(SolutionJson::singular(pb, &s)),
        SingularOutcome::Absent { reason } => Singular::Absent { lambda: pb.lambda, reason },
    };
    emit_json(&res, k, out)
}

fn minimize(pb: &Problem, k: &Knobs, out: &mut dyn Write) -> Result<i32> {
    #[derive(Serialize)]
    struct Minimized {
        lambda: f64,
        n: usize,
        value: f64,
        grad_norm: f64,
        converged: bool,
        iterations: usize,
        /// Spread of the final values over all starts.
        value_spread: f64,
        values: Vec<f64>,
        sup_norm: f64,
        /// Curvature residual of the minimizer read as a graph.
        residual: f64,
        balance: f64,
        max_step: [f64; 2],
        mesh: Vec<[f64; 3]>,
    }
    let n = k.n.unwrap_or(128);
    let inits = starts(pb, n, k.starts.unwrap_or(6), k.s_min.unwrap_or(1e-2), k.s_max.unwrap_or(10.0))?;
    let ms = multi_start(pb, &inits, k.max_iter.unwrap_or(50_000), k.tol.unwrap_or(1e-7))?;
    let best = ms.best();
    let mesh = best.u.to_mesh();
    let (i, step) = best.u.max_step();
    emit_json(
        &Minimized {
            lambda: pb.lambda,
            n,
            value: best.value,
            grad_norm: best.grad_norm,
            converged: best.converged,
            iterations: best.iterations,
            value_spread: ms.value_spread(),
            values: ms.runs.iter().map(|r| r.value).collect(),
            sup_norm: best.u.sup_norm(),
            residual: curvature_residual(pb, &mesh).unwrap_or(f64::NAN),
            balance: neumann_balance(pb, &mesh),
            max_step: [best.u.x(i), step],
            mesh: mesh_rows(&mesh),
        },
        k,
        out,
    )
}

fn rates(pb: &Problem, k: &Knobs, out: &mut dyn Write) -> Result<i32> {
    let ladder = k.ladder.clone().unwrap_or_else(default_ladder);
    if k.small == Some(true) {
        let s = small_branch_scaling(pb, &ladder)?;
        if let Some(svg) = &k.svg {
            let text = plot::loglog(
                "small-branch scaling",
                "lambda",
                &[plot::Series { label: "sup norm", x: &s.fit.lambda_ladder, y: &s.fit.values, dashed: false }],
            );
            std::fs::write(svg, text).with_context(|| format!("cannot write {}", svg.display()))?;
        }
        #[derive(Serialize)]
        struct Small<'a> {
            #[serde(flatten)]
            report: &'a curvebif::asymp::SmallScaling<f64>,
            limit_error: f64,
            check: curvebif::asymp::Check,
        }
        let check = s.fit.check(s.expected, 0.15);
        return emit_json(&Small { report: &s, limit_error: s.limit_error(), check }, k, out);
    }
    let eta = k.eta.unwrap_or_else(|| default_eta(pb));
    let (rates, flat) = profile_laws(pb, &ladder, eta)?;
    if let Some(svg) = &k.svg {
        let dashed = rates.kinds.contains(&MemberKind::Singular);
        let text = plot::loglog(
            "profile laws",
            "lambda",
            &[
                plot::Series { label: "u left of node", x: &rates.left.lambda_ladder, y: &rates.left.values, dashed },
                plot::Series { label: "u right of node", x: &rates.right.lambda_ladder, y: &rates.right.values, dashed },
                plot::Series { label: "max |u'| off node", x: &flat.lambda_ladder, y: &flat.max_slope, dashed },
            ],
        );
        std::fs::write(svg, text).with_context(|| format!("cannot write {}", svg.display()))?;
    }
    #[derive(Serialize)]
    struct Laws<'a> {
        rates: &'a curvebif::asymp::RateReport<f64>,
        flatness: &'a curvebif::asymp::FlatnessReport<f64>,
        checks: LawChecks,
    }
    #[derive(Serialize)]
    struct LawChecks {
        left_slope: curvebif::asymp::Check,
        right_slope: curvebif::asymp::Check,
        left_bound: bool,
        right_bound: bool,
        flat: bool,
        node_converges: bool,
        plateau_flat: bool,
    }
    let q = pb.f.q();
    let checks = LawChecks {
        left_slope: rates.left.check(1.0 / q, 0.15),
        right_slope: rates.right.check(-1.0, 0.15),
        left_bound: rates.left_bound_holds(),
        right_bound: rates.right_bound_holds(),
        flat: flat.flat(),
        node_converges: flat.node_converges(),
        plateau_flat: flat.plateau_flat(),
    };
    emit_json(&Laws { rates: &rates, flatness: &flat, checks }, k, out)
}

fn verify(pool: &rayon::ThreadPool, out: &mut dyn Write) -> Result<i32> {
    let mut all_pass = true;
    for c in acceptance::all() {
        let o = pool.install(c);
        all_pass &= o.passed();
        writeln!(out, "{}", o.line())?;
        out.flush()?;
    }
    writeln!(out, "{}", if all_pass { "verify: all criteria pass" } else { "verify: FAILED" })?;
    Ok(if all_pass { 0 } else { 2 })
}
