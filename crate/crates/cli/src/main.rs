//! `warpcore`: verification suites, deformation of stored systems, wedge
//! geometry reports, Fock-model tables and quadrature convergence tables.
//!
//! Exit codes: 0 pass, 1 check failure, 2 usage or input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use warpcore::fock::{build_fock_with_cap, scattering_table, upper_pairs, wedge_residual_table, DEFAULT_CAP, DEFAULT_THETAS};
use warpcore::io::{matrix_to_json, parse_system};
use warpcore::linalg::{self, CMat};
use warpcore::minkowski::{check_admissible, span_deformation_directions, standard_q, BilinearForm, FormKind};
use warpcore::models::{parse_tensor_preset, regression_systems};
use warpcore::quadrature::{MollifierSpec, QuadratureGrid, QuadratureResult};
use warpcore::rieffel::{product_exact, product_quadrature};
use warpcore::suite::{block_q, run_suite, SuiteConfig};
use warpcore::warp::{warp_exact, warp_quadrature, Ordering};

#[derive(Parser)]
#[command(name = "warpcore", version, about = "Warped convolutions and Rieffel deformations on finite-dimensional systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity and modular suites on seeded model families.
    Verify(VerifyArgs),
    /// Deform the operator stored in a system file.
    Deform(DeformArgs),
    /// Admissibility and span reports for the standard Q.
    Wedge(WedgeArgs),
    /// Exchange-phase and wedge-commutator tables for the truncated Fock model.
    Fock(FockArgs),
    /// Convergence table of the quadrature oracle on a regression system.
    Quadrature(QuadratureArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    Lorentz,
    Euclidean,
}

impl From<FormArg> for FormKind {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Lorentz => FormKind::Lorentz,
            FormArg::Euclidean => FormKind::Euclidean,
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "lorentz")]
    form: FormArg,
    /// Spacetime dimensions, cycled over the trials.
    #[arg(long, value_delimiter = ',', default_value = "2,4")]
    n: Vec<usize>,
    /// Largest Hilbert-space dimension of the random systems.
    #[arg(long, default_value_t = 12)]
    dim: usize,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    modular_trials: usize,
    /// Overrides every tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Comma-separated check families.
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Modular model preset, e.g. `tensor:d=4,beta=1.0`.
    #[arg(long)]
    model: Option<String>,
    /// Report path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DeformArgs {
    /// System file (JSON) holding `operator` and optionally `operator_b`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    #[arg(long)]
    eta: Option<f64>,
    /// Add a quadrature cross-check block.
    #[arg(long)]
    quadrature: bool,
    #[arg(long, value_enum, default_value = "left")]
    ordering: OrderingArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderingArg {
    Left,
    Right,
}

#[derive(Args)]
struct WedgeArgs {
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FockArgs {
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
    /// Rapidity grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thetas: Option<Vec<f64>>,
    /// Total particle-number cutoff N.
    #[arg(long, default_value_t = 2)]
    cutoff: usize,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    cap: usize,
    /// Grid sizes for the wedge-commutator table.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    grid_sizes: Vec<usize>,
    /// Directory for `scattering.csv` and `wedge_residuals.csv`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct QuadratureArgs {
    /// Regression system, 1-based.
    #[arg(long, default_value_t = 1)]
    system: usize,
    #[arg(long, default_value_t = 1.0)]
    zeta: f64,
    /// Width of the Gaussian mollifier.
    #[arg(long, default_value_t = 4.0)]
    width: f64,
    /// CSV path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure kinds mapped onto exit codes.
enum Failure {
    Usage(String),
    Check(String),
}

impl From<warpcore::Error> for Failure {
    fn from(e: warpcore::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(format!("csv: {e}"))
    }
}

type Outcome = std::result::Result<(), Failure>;

fn emit(out: Option<&Path>, text: &str) -> Outcome {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

fn cmd_verify(a: VerifyArgs) -> Outcome {
    let tensor = a.model.as_deref().map(parse_tensor_preset).transpose()?;
    let config = SuiteConfig {
        form: a.form.into(),
        n_values: a.n,
        dim_max: a.dim,
        zeta: a.zeta,
        eta: a.eta,
        seed: a.seed,
        trials: a.trials,
        tol: a.tol,
        only: a.only,
        modular_trials: a.modular_trials,
        tensor,
        ..SuiteConfig::default()
    };
    let report = run_suite(&config)?;
    emit(a.out.as_deref(), &pretty(&report))?;
    for f in &report.families {
        if f.checks > 0 {
            eprintln!(
                "{:<14} {:>5} checks  {:>3} failed  {:>3} skipped  max {:.2e}  tol {:.0e}",
                f.family, f.checks, f.failures, f.skipped, f.max_residual, f.tolerance
            );
        }
    }
    if report.pass {
        Ok(())
    } else {
        let n = report.records.iter().filter(|r| !r.pass).count();
        Err(Failure::Check(format!("{n} checks failed")))
    }
}

fn quadrature_block(res: &QuadratureResult, exact: &CMat, moll: &MollifierSpec) -> Value {
    json!({
        "mollifier": moll,
        "value": matrix_to_json(&res.value),
        "error_estimate": res.error_estimate,
        "converged": res.converged,
        "table": res.table,
        "difference_from_exact": linalg::op_norm(&(&res.value - exact)),
    })
}

fn cmd_deform(a: DeformArgs) -> Outcome {
    let text = fs::read_to_string(&a.input).map_err(|e| Failure::Usage(format!("{}: {e}", a.input.display())))?;
    let loaded = parse_system(&text)?;
    let sys = &loaded.system;
    let op = loaded.operator.ok_or_else(|| Failure::Usage("input has no `operator`".into()))?;
    let q = block_q(sys.form(), a.zeta, a.eta)?;
    let warped = warp_exact(sys, &op, &q)?;
    let mut out = json!({
        "q": q.to_json(),
        "operator": matrix_to_json(&op),
        "result": matrix_to_json(&warped),
    });
    if let Some(b) = &loaded.operator_b {
        out["product"] = matrix_to_json(&product_exact(sys, &op, b, &q)?);
    }
    if a.quadrature {
        let moll = MollifierSpec::default();
        let grid = QuadratureGrid::default();
        let ordering = match a.ordering {
            OrderingArg::Left => Ordering::Left,
            OrderingArg::Right => Ordering::Right,
        };
        let res = warp_quadrature(sys, &op, &q, &moll, &grid, ordering)?;
        out["quadrature"] = quadrature_block(&res, &warped, &moll);
        if let Some(b) = &loaded.operator_b {
            let exact = product_exact(sys, &op, b, &q)?;
            let res = product_quadrature(sys, &op, b, &q, &moll, &grid)?;
            out["product_quadrature"] = quadrature_block(&res, &exact, &moll);
        }
    }
    emit(a.out.as_deref(), &pretty(&out))
}

fn cmd_wedge(a: WedgeArgs) -> Outcome {
    if a.n < 2 {
        return Err(Failure::Usage(format!("n = {} must be at least 2", a.n)));
    }
    if a.eta.is_some() && a.n != 4 {
        return Err(Failure::Usage(format!("--eta is only valid with n = 4 (got n = {})", a.n)));
    }
    let q = standard_q(&BilinearForm::lorentz(a.n), a.zeta, a.eta)?;
    let adm = check_admissible(&q, a.samples, a.seed)?;
    let span = if a.n >= 3 && !q.is_zero() {
        serde_json::to_value(span_deformation_directions(&q, 0.1, 40, a.seed)?).expect("serialisable")
    } else {
        json!({ "skipped": "span statement needs n ≥ 3 and Q ≠ 0" })
    };
    let pass = adm.all_pass();
    let out = json!({ "q": q.to_json(), "admissibility": adm, "span": span, "pass": pass });
    emit(a.out.as_deref(), &pretty(&out))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Check("standard Q is not admissible".into()))
    }
}

fn cmd_fock(a: FockArgs) -> Outcome {
    let thetas = a.thetas.unwrap_or_else(|| DEFAULT_THETAS.to_vec());
    let model = build_fock_with_cap(a.mass, &thetas, a.cutoff, a.cap)?;
    let form = BilinearForm::lorentz(2);
    let q = standard_q(&form, a.zeta, None)?;
    let rows = scattering_table(&model, &q, &upper_pairs(model.modes()))?;
    fs::create_dir_all(&a.out)?;
    let mut w = csv::Writer::from_path(a.out.join("scattering.csv"))?;
    w.write_record(["theta1", "theta2", "pQq", "phase_re", "phase_im", "modulus_defect"])?;
    for r in &rows {
        w.serialize((r.theta1, r.theta2, r.pqq, r.phase_re, r.phase_im, r.modulus_defect))?;
    }
    w.flush()?;
    let span = thetas.iter().fold(0.0f64, |m, t| m.max(t.abs())).max(0.5);
    let table = wedge_residual_table(a.mass, span, a.cutoff.max(1), &q, &a.grid_sizes)?;
    let mut w = csv::Writer::from_path(a.out.join("wedge_residuals.csv"))?;
    w.write_record(["modes", "dim", "hypothesis", "conclusion"])?;
    for r in &table {
        w.serialize((r.modes, r.dim, r.hypothesis, r.conclusion))?;
    }
    w.flush()?;
    let worst = rows.iter().map(|r| r.modulus_defect.abs()).fold(0.0, f64::max);
    eprintln!("{} scattering rows, max |phase|−1 {worst:.2e}; {} wedge rows", rows.len(), table.len());
    if worst <= 1e-12 {
        Ok(())
    } else {
        Err(Failure::Check(format!("exchange phase off the unit circle by {worst:.2e}")))
    }
}

fn cmd_quadrature(a: QuadratureArgs) -> Outcome {
    let systems = regression_systems();
    if a.system == 0 || a.system > systems.len() {
        return Err(Failure::Usage(format!("--system must lie in 1..={}", systems.len())));
    }
    let r = &systems[a.system - 1];
    let sys = &r.system;
    let q = standard_q(sys.form(), a.zeta, None)?;
    let grid = QuadratureGrid::default();
    let mollifiers = [MollifierSpec::gaussian(a.width)?, MollifierSpec::product_gaussian(a.width, a.width + 1.0)?];
    let exact_product = product_exact(sys, &r.a, &r.b, &q)?;
    let exact_warp = warp_exact(sys, &r.a, &q)?;

    let mut buf = Vec::new();
    let mut failures = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["system", "mollifier", "operation", "eps", "value_norm", "increment", "exact_error", "error_estimate"])?;
        let mut finals: Vec<(String, CMat, f64)> = Vec::new();
        for m in &mollifiers {
            let runs = [
                ("product", product_quadrature(sys, &r.a, &r.b, &q, m, &grid)?, &exact_product),
                ("warp-left", warp_quadrature(sys, &r.a, &q, m, &grid, Ordering::Left)?, &exact_warp),
                ("warp-right", warp_quadrature(sys, &r.a, &q, m, &grid, Ordering::Right)?, &exact_warp),
            ];
            for (op, res, exact) in runs {
                let err = linalg::op_norm(&(&res.value - exact));
                for row in &res.table {
                    let exact_col = if row.eps == 0.0 { format!("{err:e}") } else { String::new() };
                    w.write_record([
                        r.name.clone(),
                        m.mollifier.name().to_string(),
                        op.to_string(),
                        format!("{}", row.eps),
                        format!("{:e}", row.value_norm),
                        if row.increment.is_finite() { format!("{:e}", row.increment) } else { String::new() },
                        exact_col,
                        format!("{:e}", res.error_estimate),
                    ])?;
                }
                if !res.converged {
                    failures.push(format!("{} {op}: increments not decreasing", m.mollifier.name()));
                }
                if err > res.error_estimate {
                    failures.push(format!("{} {op}: exact difference {err:.2e} above estimate", m.mollifier.name()));
                }
                if op == "product" {
                    finals.push((m.mollifier.name().to_string(), res.value.clone(), res.error_estimate));
                }
            }
        }
        let diff = linalg::op_norm(&(&finals[0].1 - &finals[1].1));
        if diff > finals[0].2 + finals[1].2 {
            failures.push(format!("mollifiers disagree by {diff:.2e}"));
        }
        w.flush()?;
    }
    emit(a.out.as_deref(), &String::from_utf8(buf).expect("csv is utf-8"))?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failures.join("; ")))
    }
}

fn configure_threads() -> Outcome {
    if let Ok(v) = std::env::var("WARPCORE_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| Failure::Usage(format!("WARPCORE_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Failure::Usage("WARPCORE_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::Deform(a) => cmd_deform(a),
        Command::Wedge(a) => cmd_wedge(a),
        Command::Fock(a) => cmd_fock(a),
        Command::Quadrature(a) => cmd_quadrature(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
