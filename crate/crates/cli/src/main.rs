use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dre::bench::{
    gamma_sweep, run_experiment, sweep_table, write_trace_csv, Experiment, ExperimentSpec,
    GammaRule, ProblemFamily, SolverKind,
};
use dre::check::{run_checks, CheckOptions, Level};
use dre::problems::{gen_box_qp, gen_sparse_ls};
use dre::{Error, LambdaRule, Status};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Parser)]
#[command(name = "dre", version, about = "Douglas-Rachford splitting experiments and invariant checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver on one instance; write the trace CSV and a summary.
    Bench {
        #[command(flatten)]
        spec: SpecArgs,
        /// Trace CSV path; the summary goes next to it as `<stem>.summary.txt`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the same instance for several step sizes (always including gamma*).
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        /// Comma-separated fractions of 1/L_f, each in (0, 1).
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        fractions: Vec<f64>,
        /// Output directory for the traces and `sweep.txt`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suites.
    Check {
        #[arg(long, value_enum, default_value = "fast")]
        level: CheckLevel,
        /// Deliberately break a component to confirm the suites notice.
        #[arg(long, value_enum, hide = true)]
        inject: Option<Fault>,
    },
    /// Write a generated instance as plain-text matrices.
    Export {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Boxqp,
    L1ls,
    Scalar,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Drs,
    Fdrs,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckLevel {
    Fast,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    GradientSign,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, value_enum, default_value = "boxqp")]
    problem: ProblemArg,
    /// Dimension (default 500 for boxqp, 1000 for l1ls).
    #[arg(long)]
    n: Option<usize>,
    /// Rows of A for l1ls.
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e3)]
    cond: f64,
    #[arg(long, default_value_t = 1.0)]
    box_width: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 10)]
    nnz: usize,
    #[arg(long, value_enum, default_value = "drs")]
    solver: SolverArg,
    /// `star` or a fraction of 1/L_f in (0, 1).
    #[arg(long, default_value = "star", value_parser = parse_gamma)]
    gamma: GammaRule,
    /// `theorem` or an explicit relaxation in (0, 2).
    #[arg(long, default_value = "theorem", value_parser = parse_lambda)]
    lambda: LambdaRule,
    #[arg(long, default_value_t = 20_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
}

fn parse_gamma(s: &str) -> Result<GammaRule, String> {
    if s == "star" {
        return Ok(GammaRule::Star);
    }
    match s.parse::<f64>() {
        Ok(f) if f > 0.0 && f < 1.0 => Ok(GammaRule::Fraction(f)),
        _ => Err(format!("expected `star` or a fraction in (0, 1), got `{s}`")),
    }
}

fn parse_lambda(s: &str) -> Result<LambdaRule, String> {
    if s == "theorem" {
        return Ok(LambdaRule::Theorem);
    }
    match s.parse::<f64>() {
        Ok(l) if l > 0.0 && l < 2.0 => Ok(LambdaRule::Constant(l)),
        _ => Err(format!("expected `theorem` or a value in (0, 2), got `{s}`")),
    }
}

impl SpecArgs {
    fn family(&self) -> ProblemFamily {
        match self.problem {
            ProblemArg::Scalar => ProblemFamily::Scalar,
            ProblemArg::Boxqp => ProblemFamily::BoxQp {
                n: self.n.unwrap_or(500),
                seed: self.seed,
                cond: self.cond,
                box_width: self.box_width,
            },
            ProblemArg::L1ls => ProblemFamily::SparseLs {
                m: self.m,
                n: self.n.unwrap_or(1000),
                seed: self.seed,
                rho: self.rho,
                nnz: self.nnz,
            },
        }
    }

    fn spec(&self) -> ExperimentSpec {
        let solver = match self.solver {
            SolverArg::Drs => SolverKind::Drs,
            SolverArg::Fdrs => SolverKind::Fdrs,
        };
        ExperimentSpec {
            gamma: self.gamma,
            lambda: self.lambda,
            max_iter: self.max_iter,
            tol: self.tol,
            ..ExperimentSpec::new(self.family(), solver)
        }
    }
}

/// Failure with its exit code and a message for stderr.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
            _ => EXIT_INVALID,
        };
        Failure(code, e.to_string())
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure(EXIT_INVALID, format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(path, e))
}

fn summary_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or("trace".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.summary.txt"))
}

fn exit_for(exp: &Experiment) -> u8 {
    match exp.summary.status {
        Status::Converged => 0,
        Status::MaxIter => EXIT_NO_CONVERGENCE,
    }
}

fn cmd_bench(spec: &ExperimentSpec, out: &Path) -> Result<u8, Failure> {
    // Fail on an unwritable destination before spending time solving.
    let file = File::create(out).map_err(|e| io_failure(out, e))?;
    let exp = run_experiment(spec)?;
    let mut w = BufWriter::new(file);
    exp.write_csv(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| io_failure(out, e))?;
    let text = exp.summary.to_text();
    write_file(&summary_path(out), |w| w.write_all(text.as_bytes()))?;
    print!("{text}");
    Ok(exit_for(&exp))
}

fn cmd_sweep(spec: &ExperimentSpec, fractions: &[f64], out: &Path) -> Result<u8, Failure> {
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let rows = gamma_sweep(spec, fractions)?;
    for row in &rows {
        let path = out.join(format!("trace_gamma_{}.csv", row.label));
        write_file(&path, |w| write_trace_csv(w, &row.experiment.rows))?;
    }
    let table = sweep_table(&rows);
    write_file(&out.join("sweep.txt"), |w| w.write_all(table.as_bytes()))?;
    print!("{table}");
    Ok(rows.iter().map(|r| exit_for(&r.experiment)).max().unwrap_or(0))
}

fn cmd_check(level: CheckLevel, inject: Option<Fault>) -> Result<u8, Failure> {
    let mut opts = CheckOptions::new(match level {
        CheckLevel::Fast => Level::Fast,
        CheckLevel::Full => Level::Full,
    });
    if let Some(Fault::GradientSign) = inject {
        opts.gradient = |p, g, x| p.dre_gradient(g, x).map(|v| -v);
    }
    let reports = run_checks(&opts)?;
    let mut failed = Vec::new();
    for r in &reports {
        println!("{r}");
        if !r.passed() {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        println!("all {} suites passed", reports.len());
        Ok(0)
    } else {
        eprintln!("violated invariants: {}", failed.join(", "));
        Ok(EXIT_CHECK_FAILED)
    }
}

fn cmd_export(args: &SpecArgs, out: &Path) -> Result<u8, Failure> {
    fs::create_dir_all(out).map_err(|e| io_failure(out, e))?;
    let written = match args.family() {
        ProblemFamily::BoxQp {
            n,
            seed,
            cond,
            box_width,
        } => gen_box_qp(n, seed, cond, box_width)?.write_dir(out),
        ProblemFamily::SparseLs {
            m,
            n,
            seed,
            rho,
            nnz,
        } => gen_sparse_ls(m, n, seed, rho, nnz)?.write_dir(out),
        ProblemFamily::Scalar => {
            return Err(Failure(EXIT_INVALID, "the scalar problem has nothing to export".into()))
        }
    };
    written.map_err(|e| io_failure(out, e))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INVALID } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Bench { spec, out } => cmd_bench(&spec.spec(), out),
        Command::Sweep {
            spec,
            fractions,
            out,
        } => cmd_sweep(&spec.spec(), fractions, out),
        Command::Check { level, inject } => cmd_check(*level, *inject),
        Command::Export { spec, out } => cmd_export(spec, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
