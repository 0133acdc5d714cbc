//! Command-line runner: solve a problem file, sweep tolerances, or certify a
//! candidate point.
//!
//! Exit codes: 0 certified, 1 ran but not certified, 2 usage or I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use conic_sosp::certify::{
    check_fosp, check_sosp_dense, CertificateReport, Tolerances, DENSE_LIMIT,
};
use conic_sosp::{
    load_problem, solve, sweep, ConicProblem, CounterSnapshot, RngSeed, SolveStatus, SolverParams,
};
use nalgebra::DVector;

#[derive(Parser)]
#[command(
    name = "conic-sosp",
    version,
    about = "Newton-CG barrier solver for nonconvex conic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem and write its trace.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Trace output file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write the final point as a JSON array.
        #[arg(long)]
        x_out: Option<PathBuf>,
        /// Write the final multiplier as a JSON array.
        #[arg(long)]
        lambda_out: Option<PathBuf>,
    },
    /// Solve once per tolerance and fit the iteration growth rate.
    Sweep {
        problem: PathBuf,
        /// Comma-separated tolerances.
        #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
        eps: Vec<f64>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Check first- (and optionally second-) order conditions at a point.
    Certify {
        problem: PathBuf,
        /// JSON array with the point.
        point: PathBuf,
        /// JSON array with the multiplier.
        lambda: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        eps: f64,
        /// Also run the dense second-order test with tolerance √ε.
        #[arg(long)]
        sosp: bool,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Step-size cap; defaults to max(√ε, 0.5).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    zeta: f64,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, default_value_t = 0.2)]
    eta: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Stop at the first approximate first-order point.
    #[arg(long)]
    fosp_only: bool,
}

impl SolverArgs {
    fn params(&self, eps: f64) -> Result<SolverParams> {
        let mut p = SolverParams::new(eps);
        if let Some(b) = self.beta {
            p.beta = b;
        }
        p.zeta = self.zeta;
        p.theta = self.theta;
        p.eta = self.eta;
        p.delta = self.delta;
        p.seed = RngSeed(self.seed);
        p.max_outer_iters = self.max_iters;
        p.fosp_only = self.fosp_only;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load(path: &Path) -> Result<ConicProblem> {
    load_problem(path).with_context(|| format!("loading problem {}", path.display()))
}

fn start_point(problem: &ConicProblem) -> Result<DVector<f64>> {
    match problem.x0() {
        Some(x) => Ok(x.clone()),
        None => bail!("problem `{}` has no x0", problem.name()),
    }
}

fn read_vector(path: &Path) -> Result<DVector<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Vec<f64> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(DVector::from_vec(v))
}

fn write_vector(path: &Path, v: &DVector<f64>) -> Result<()> {
    let text = serde_json::to_string(v.as_slice())?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn counters_line(c: &CounterSnapshot) -> String {
    format!(
        "cholesky={} hess_vec={} tri_solve={} mat_t_mat={} grad_eval={} fun_eval={}",
        c.cholesky, c.hess_vec, c.tri_solve, c.mat_t_mat, c.grad_eval, c.fun_eval
    )
}

/// Independent certificate at the solver output; the dense second-order
/// test runs when the problem is small enough.
fn certificate(
    problem: &ConicProblem,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
    eps: f64,
) -> Result<CertificateReport> {
    let tol = Tolerances::default();
    let rep = if problem.n() <= DENSE_LIMIT {
        check_sosp_dense(problem, x, lambda, eps, eps.sqrt(), &tol)?
    } else {
        check_fosp(problem, x, lambda, eps, &tol)?
    };
    Ok(rep)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.6e}"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    problem: &Path,
    solver: &SolverArgs,
    eps: f64,
    out: Option<&Path>,
    format: Format,
    x_out: Option<&Path>,
    lambda_out: Option<&Path>,
) -> Result<bool> {
    let params = solver.params(eps)?;
    let problem = load(problem)?;
    let x0 = start_point(&problem)?;
    let res = solve(&problem, &x0, &params)?;
    let rep = certificate(&problem, &res.x_final, &res.lambda_final, eps)?;
    let mut trace = res.trace.clone();
    trace.certificate = Some(rep.clone());
    if let Some(path) = out {
        let text = match format {
            Format::Csv => trace.to_csv(),
            Format::Json => trace.to_json(),
        };
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = x_out {
        write_vector(path, &res.x_final)?;
    }
    if let Some(path) = lambda_out {
        write_vector(path, &res.lambda_final)?;
    }
    println!(
        "status={:?} iterations={} f={:.6e} fosp_residual={:.6e} sosp_min_eig={} probability={} {}",
        res.status,
        res.iterations,
        problem.objective().value(&res.x_final),
        rep.fosp_residual,
        fmt_opt(rep.sosp_min_eig),
        fmt_opt(res.probability_bound),
        counters_line(&trace.counters)
    );
    let second_order_ok = res.status != SolveStatus::SospCertified || rep.sosp_ok != Some(false);
    Ok(res.status.is_certified() && rep.fosp_ok && second_order_ok)
}

fn cmd_sweep(problem: &Path, eps_list: &[f64], solver: &SolverArgs) -> Result<bool> {
    if eps_list.is_empty() {
        bail!("empty tolerance list");
    }
    // validate every tolerance before spending time on solves
    for &e in eps_list {
        solver.params(e)?;
    }
    let problem = load(problem)?;
    let x0 = start_point(&problem)?;
    let report = sweep(&problem, &x0, eps_list, |e| {
        solver.params(e).expect("validated above")
    })?;
    println!("eps,iterations,status,cholesky,hess_vec,tri_solve,mat_t_mat,grad_eval,fun_eval");
    for r in &report.rows {
        let c = &r.counters;
        println!(
            "{:e},{},{:?},{},{},{},{},{},{}",
            r.eps,
            r.iterations,
            r.status,
            c.cholesky,
            c.hess_vec,
            c.tri_solve,
            c.mat_t_mat,
            c.grad_eval,
            c.fun_eval
        );
    }
    match report.slope {
        Some(s) => println!("slope={s:.4}"),
        None => println!("slope=n/a"),
    }
    Ok(report.rows.iter().all(|r| r.status.is_certified()))
}

fn cmd_certify(problem: &Path, point: &Path, lambda: &Path, eps: f64, sosp: bool) -> Result<bool> {
    let problem = load(problem)?;
    let x = read_vector(point)?;
    let lam = read_vector(lambda)?;
    let tol = Tolerances::default();
    let rep = if sosp {
        check_sosp_dense(&problem, &x, &lam, eps, eps.sqrt(), &tol)?
    } else {
        check_fosp(&problem, &x, &lam, eps, &tol)?
    };
    println!("{}", serde_json::to_string_pretty(&rep)?);
    Ok(rep.fosp_ok && (!sosp || rep.sosp_ok == Some(true)))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve {
            problem,
            solver,
            eps,
            out,
            format,
            x_out,
            lambda_out,
        } => cmd_solve(
            &problem,
            &solver,
            eps,
            out.as_deref(),
            format,
            x_out.as_deref(),
            lambda_out.as_deref(),
        ),
        Command::Sweep {
            problem,
            eps,
            solver,
        } => cmd_sweep(&problem, &eps, &solver),
        Command::Certify {
            problem,
            point,
            lambda,
            eps,
            sosp,
        } => cmd_certify(&problem, &point, &lambda, eps, sosp),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
