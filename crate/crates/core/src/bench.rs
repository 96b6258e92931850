//! Benchmark runs: build an instance, solve it to high accuracy for `F*` and
//! the envelope minimizer, then run DRS or fast DRS while recording the
//! relative suboptimality `|F(z^k) - F*| / (1 + |F*|)` next to the rate
//! bound that applies to the run.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::time::Instant;

use crate::envelope::{CompositeProblem, EnvelopeConstants};
use crate::error::{Error, Result};
use crate::functions::{ConvexQuadratic, ProxFunction};
use crate::numerics::{DenseMatrix, Vector};
use crate::problems::{gen_box_qp, gen_sparse_ls, reference_solve, ReferenceSolution};
use crate::solvers::{
    bound_fast, bound_fast_strongly_convex, bound_linear_iterates, bound_sublinear,
    optimal_gamma, run_drs_observed, run_fast_drs_observed, theorem_stepsize, BetaSchedule,
    LambdaRule, SolverConfig, Status,
};

pub const CSV_HEADER: &str = "k,obj_y,obj_z,dre,znorm,rel_subopt,bound,elapsed_s";

/// Decades `1e-1 ..= 1e-9` tracked in the summary.
pub const DECADES: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProblemFamily {
    /// `f = x^2/2`, `g` = indicator of `[1, 2]`; solution `x* = 1`.
    Scalar,
    BoxQp {
        n: usize,
        seed: u64,
        cond: f64,
        box_width: f64,
    },
    SparseLs {
        m: usize,
        n: usize,
        seed: u64,
        rho: f64,
        nnz: usize,
    },
}

impl ProblemFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemFamily::Scalar => "scalar",
            ProblemFamily::BoxQp { .. } => "boxqp",
            ProblemFamily::SparseLs { .. } => "l1ls",
        }
    }

    pub fn build(&self) -> Result<CompositeProblem> {
        match *self {
            ProblemFamily::Scalar => {
                let f = ConvexQuadratic::new(DenseMatrix::identity(1, 1), Vector::zeros(1))?;
                let g = ProxFunction::boxed(Vector::from_element(1, 1.0), Vector::from_element(1, 2.0))?;
                CompositeProblem::new(f, g)
            }
            ProblemFamily::BoxQp {
                n,
                seed,
                cond,
                box_width,
            } => gen_box_qp(n, seed, cond, box_width)?.to_problem(),
            ProblemFamily::SparseLs {
                m,
                n,
                seed,
                rho,
                nnz,
            } => gen_sparse_ls(m, n, seed, rho, nnz)?.to_problem(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Drs,
    Fdrs,
}

impl SolverKind {
    pub fn name(&self) -> &'static str {
        match self {
            SolverKind::Drs => "drs",
            SolverKind::Fdrs => "fdrs",
        }
    }
}

/// Momentum for the fast variant. `Auto` picks the strongly convex constant
/// when `mu_f > 0` and the `(k-1)/(k+2)` schedule otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentumChoice {
    Auto,
    Convex,
    StronglyConvex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    /// `(sqrt(2) - 1) / L_f`
    Star,
    /// `fraction / L_f` with `fraction` in `(0, 1)`.
    Fraction(f64),
}

impl GammaRule {
    pub fn resolve(&self, l_f: f64) -> Result<f64> {
        match *self {
            GammaRule::Star => optimal_gamma(l_f),
            GammaRule::Fraction(f) if f > 0.0 && f < 1.0 => {
                if !(l_f > 0.0) {
                    return Err(Error::NonpositiveLipschitz(l_f));
                }
                Ok(f / l_f)
            }
            GammaRule::Fraction(f) => Err(Error::InvalidConfig(format!(
                "gamma fraction must lie in (0, 1), got {f}"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            GammaRule::Star => "star".to_string(),
            GammaRule::Fraction(f) => format!("{f}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentSpec {
    pub family: ProblemFamily,
    pub solver: SolverKind,
    pub momentum: MomentumChoice,
    pub gamma: GammaRule,
    pub lambda: LambdaRule,
    pub max_iter: usize,
    pub tol: f64,
}

impl ExperimentSpec {
    pub fn new(family: ProblemFamily, solver: SolverKind) -> Self {
        Self {
            family,
            solver,
            momentum: MomentumChoice::Auto,
            gamma: GammaRule::Star,
            lambda: LambdaRule::Theorem,
            max_iter: 20_000,
            tol: 1e-12,
        }
    }
}

/// Which rate bound the `bound` column holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `F(z^k) - F* <= |x0 - x~|^2 / (2 gamma lambda max(k - 1, 1))`
    Sublinear,
    /// `|y^k - x*|^2 <= (d_max/d_min) (1 - 2 lambda mu_h L_h/(mu_h + L_h))^k |x0 - x~|^2`
    LinearIterates,
    /// `F(z^k) - F* <= 2 |x0 - x~|^2 / (gamma lambda (k + 2)^2)`
    Fast,
    /// `F(z^k) - F* <= (L_h/d_min) (1 - sqrt(mu_h/L_h))^k |x0 - x~|^2`
    FastStronglyConvex,
}

impl BoundKind {
    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::Sublinear => "sublinear",
            BoundKind::LinearIterates => "linear-iterates",
            BoundKind::Fast => "fast",
            BoundKind::FastStronglyConvex => "fast-strongly-convex",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub obj_y: f64,
    pub obj_z: f64,
    pub dre: f64,
    pub znorm: f64,
    pub rel_subopt: f64,
    /// NaN when no bound applies to the run.
    pub bound: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub problem: &'static str,
    pub solver: &'static str,
    pub gamma: f64,
    pub lambda: f64,
    pub beta: BetaSchedule,
    pub f_star: f64,
    pub reference_residual: f64,
    pub status: Status,
    pub iterations: usize,
    /// First iteration with `rel_subopt <= 10^-(d+1)`, for `d = 0..9`.
    pub decades: [Option<usize>; DECADES],
    pub final_residual: f64,
    pub bound_kind: Option<BoundKind>,
    pub bound_violations: usize,
    /// Largest `measured / (bound + rounding allowance)` over the run.
    pub bound_worst_ratio: f64,
    pub wall_time_s: f64,
}

impl RunSummary {
    pub fn iterations_to(&self, decade: usize) -> Option<usize> {
        self.decades.get(decade.checked_sub(1)?).copied().flatten()
    }

    /// `key: value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let status = match self.status {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
        };
        let beta = match self.beta {
            BetaSchedule::None => "none",
            BetaSchedule::Convex => "convex",
            BetaSchedule::StronglyConvex => "strongly_convex",
        };
        let _ = writeln!(s, "problem: {}", self.problem);
        let _ = writeln!(s, "solver: {}", self.solver);
        let _ = writeln!(s, "gamma: {:e}", self.gamma);
        let _ = writeln!(s, "lambda: {:e}", self.lambda);
        let _ = writeln!(s, "beta: {beta}");
        let _ = writeln!(s, "f_star: {:e}", self.f_star);
        let _ = writeln!(s, "reference_residual: {:e}", self.reference_residual);
        let _ = writeln!(s, "status: {status}");
        let _ = writeln!(s, "iterations: {}", self.iterations);
        for (d, hit) in self.decades.iter().enumerate() {
            match hit {
                Some(k) => {
                    let _ = writeln!(s, "iters_to_1e-{}: {k}", d + 1);
                }
                None => {
                    let _ = writeln!(s, "iters_to_1e-{}: none", d + 1);
                }
            }
        }
        let _ = writeln!(s, "final_residual: {:e}", self.final_residual);
        let _ = writeln!(
            s,
            "bound: {}",
            self.bound_kind.map_or("none", |b| b.name())
        );
        let _ = writeln!(s, "bound_violations: {}", self.bound_violations);
        let _ = writeln!(s, "wall_time_s: {:.3}", self.wall_time_s);
        s
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub rows: Vec<TraceRow>,
    pub summary: RunSummary,
}

impl Experiment {
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_trace_csv(w, &self.rows)
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{v:e}")
    }
}

/// Writes the trace with `{:e}` shortest round-trip formatting, which is
/// locale-independent and parses back to the identical `f64`.
pub fn write_trace_csv<W: Write>(mut w: W, rows: &[TraceRow]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.k,
            fmt_num(r.obj_y),
            fmt_num(r.obj_z),
            fmt_num(r.dre),
            fmt_num(r.znorm),
            fmt_num(r.rel_subopt),
            fmt_num(r.bound),
            fmt_num(r.elapsed_s)
        )?;
    }
    Ok(())
}

/// Picks the bound matching the solver, stepsize and curvature of a run.
fn applicable_bound(
    solver: SolverKind,
    beta: BetaSchedule,
    lambda: f64,
    theorem_lambda: Option<f64>,
    constants: Option<&EnvelopeConstants>,
) -> Option<BoundKind> {
    let c = constants?;
    let at_theorem_step = theorem_lambda == Some(lambda);
    match solver {
        SolverKind::Drs if c.mu_h > 0.0 && lambda > 0.0 && lambda <= 2.0 / (c.l_h + c.mu_h) => {
            Some(BoundKind::LinearIterates)
        }
        SolverKind::Drs => at_theorem_step.then_some(BoundKind::Sublinear),
        SolverKind::Fdrs => match beta {
            BetaSchedule::Convex => at_theorem_step.then_some(BoundKind::Fast),
            BetaSchedule::StronglyConvex => {
                at_theorem_step.then_some(BoundKind::FastStronglyConvex)
            }
            BetaSchedule::None => None,
        },
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Experiment> {
    let prob = spec.family.build()?;
    run_on_problem(spec, &prob)
}

/// Runs `spec` on an already built instance (the family in `spec` only
/// labels the output).
pub fn run_on_problem(spec: &ExperimentSpec, prob: &CompositeProblem) -> Result<Experiment> {
    let start = Instant::now();
    let gamma = spec.gamma.resolve(prob.l_f())?;
    let beta = match (spec.solver, spec.momentum) {
        (SolverKind::Drs, _) => BetaSchedule::None,
        (SolverKind::Fdrs, MomentumChoice::Convex) => BetaSchedule::Convex,
        (SolverKind::Fdrs, MomentumChoice::StronglyConvex) => BetaSchedule::StronglyConvex,
        (SolverKind::Fdrs, MomentumChoice::Auto) if prob.mu_f() > 0.0 => {
            BetaSchedule::StronglyConvex
        }
        (SolverKind::Fdrs, MomentumChoice::Auto) => BetaSchedule::Convex,
    };
    let config = SolverConfig::new(gamma)
        .with_lambda(spec.lambda)
        .with_beta(beta)
        .with_max_iter(spec.max_iter)
        .with_tol(spec.tol);
    let lambda = config.resolve_lambda(prob)?;

    let reference = reference_solve(prob, gamma)?;
    let constants = prob.envelope_constants(gamma).ok();
    let theorem_lambda = theorem_stepsize(gamma, prob.l_f()).ok();
    let bound_kind = applicable_bound(spec.solver, beta, lambda, theorem_lambda, constants.as_ref());

    let x0 = Vector::zeros(prob.dim());
    let dist0 = (&x0 - &reference.x_tilde).norm();
    let mut tracker = BoundTracker::new(&reference, bound_kind, constants, gamma, lambda, dist0);

    let observe = |s: &crate::solvers::StepView<'_>| tracker.observe(s);
    let trace = match spec.solver {
        SolverKind::Drs => run_drs_observed(prob, &config, &x0, observe)?,
        SolverKind::Fdrs => run_fast_drs_observed(prob, &config, &x0, observe)?,
    };

    let f_star = reference.f_star;
    let mut decades = [None; DECADES];
    let rows: Vec<TraceRow> = trace
        .records
        .iter()
        .zip(&tracker.bounds)
        .map(|(r, &bound)| {
            let rel_subopt = (r.obj_z - f_star).abs() / (1.0 + f_star.abs());
            for (d, slot) in decades.iter_mut().enumerate() {
                if slot.is_none() && rel_subopt <= 10f64.powi(-(d as i32 + 1)) {
                    *slot = Some(r.k);
                }
            }
            TraceRow {
                k: r.k,
                obj_y: r.obj_y,
                obj_z: r.obj_z,
                dre: r.dre.unwrap_or(f64::NAN),
                znorm: r.znorm,
                rel_subopt,
                bound,
                elapsed_s: r.elapsed_s,
            }
        })
        .collect();
    // Every deeper decade is reached no earlier than a shallower one.
    for d in 1..DECADES {
        if let (Some(prev), Some(cur)) = (decades[d - 1], decades[d]) {
            decades[d] = Some(cur.max(prev));
        }
    }

    let final_residual = trace.last().znorm / (1.0 + trace.state.x.norm());
    let summary = RunSummary {
        problem: spec.family.name(),
        solver: spec.solver.name(),
        gamma,
        lambda,
        beta,
        f_star,
        reference_residual: reference.residual,
        status: trace.status,
        iterations: trace.iterations(),
        decades,
        final_residual,
        bound_kind,
        bound_violations: tracker.violations,
        bound_worst_ratio: tracker.worst,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(Experiment { rows, summary })
}

struct BoundTracker<'a> {
    reference: &'a ReferenceSolution,
    kind: Option<BoundKind>,
    constants: Option<EnvelopeConstants>,
    gamma: f64,
    lambda: f64,
    dist0: f64,
    bounds: Vec<f64>,
    violations: usize,
    worst: f64,
}

impl<'a> BoundTracker<'a> {
    fn new(
        reference: &'a ReferenceSolution,
        kind: Option<BoundKind>,
        constants: Option<EnvelopeConstants>,
        gamma: f64,
        lambda: f64,
        dist0: f64,
    ) -> Self {
        Self {
            reference,
            kind,
            constants,
            gamma,
            lambda,
            dist0,
            bounds: Vec::new(),
            violations: 0,
            worst: 0.0,
        }
    }

    /// Rounding allowance: objective gaps cannot be resolved below a few ulps
    /// of `F*`, distances not below the reference solve accuracy.
    fn slack(&self, kind: Option<BoundKind>) -> f64 {
        match kind {
            Some(BoundKind::LinearIterates) => {
                let r = crate::problems::REFERENCE_TOL * (1.0 + self.reference.x_star.norm());
                r * r
            }
            _ => 16.0 * f64::EPSILON * (1.0 + self.reference.f_star.abs()),
        }
    }

    fn observe(&mut self, s: &crate::solvers::StepView<'_>) {
        let k = s.k;
        let gap = s.values.obj_g - self.reference.f_star;
        let (bound, measured) = match (self.kind, self.constants.as_ref()) {
            (Some(BoundKind::Sublinear), _) => (
                bound_sublinear(k.saturating_sub(1).max(1), self.gamma, self.lambda, self.dist0),
                gap,
            ),
            (Some(BoundKind::Fast), _) => (bound_fast(k, self.gamma, self.lambda, self.dist0), gap),
            (Some(BoundKind::LinearIterates), Some(c)) => (
                bound_linear_iterates(k, c, self.lambda, self.dist0).unwrap_or(f64::NAN),
                (&s.split.p - &self.reference.x_star).norm_squared(),
            ),
            (Some(BoundKind::FastStronglyConvex), Some(c)) => (
                bound_fast_strongly_convex(k, c, self.dist0).unwrap_or(f64::NAN),
                gap,
            ),
            _ => (f64::NAN, f64::NAN),
        };
        let allowed = bound + self.slack(self.kind);
        if measured > allowed {
            self.violations += 1;
        }
        if measured.is_finite() && allowed > 0.0 {
            self.worst = self.worst.max(measured / allowed);
        }
        self.bounds.push(bound);
    }
}

/// One row of a gamma sweep: the run summary for one gamma.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub label: String,
    pub experiment: Experiment,
}

/// Runs `base` once per fraction of `1/L_f` plus once at `gamma*`, in
/// parallel over a shared instance. Rows come back sorted by gamma.
pub fn gamma_sweep(base: &ExperimentSpec, fractions: &[f64]) -> Result<Vec<SweepRow>> {
    use rayon::prelude::*;

    if let Some(&bad) = fractions.iter().find(|&&f| !(f > 0.0 && f < 1.0)) {
        return Err(Error::InvalidConfig(format!(
            "gamma fraction must lie in (0, 1), got {bad}"
        )));
    }
    let prob = base.family.build()?;
    let mut rules = vec![GammaRule::Star];
    rules.extend(fractions.iter().map(|&f| GammaRule::Fraction(f)));

    let mut rows = rules
        .par_iter()
        .map(|rule| {
            let spec = ExperimentSpec {
                gamma: *rule,
                ..*base
            };
            Ok(SweepRow {
                label: rule.label(),
                experiment: run_on_problem(&spec, &prob)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        a.experiment
            .summary
            .gamma
            .total_cmp(&b.experiment.summary.gamma)
    });
    Ok(rows)
}

/// Fixed-width comparison table of iterations to each suboptimality decade.
pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = write!(s, "{:<10} {:>14} {:>10}", "gamma_rule", "gamma", "iters");
    for d in 1..=DECADES {
        let _ = write!(s, " {:>8}", format!("1e-{d}"));
    }
    s.push('\n');
    for row in rows {
        let sum = &row.experiment.summary;
        let _ = write!(s, "{:<10} {:>14.8e} {:>10}", row.label, sum.gamma, sum.iterations);
        for hit in sum.decades {
            let cell = hit.map_or("-".to_string(), |k| k.to_string());
            let _ = write!(s, " {cell:>8}");
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_smoke_run() {
        let spec = ExperimentSpec::new(ProblemFamily::Scalar, SolverKind::Drs);
        let exp = run_experiment(&spec).unwrap();
        assert_eq!(exp.summary.status, Status::Converged);
        assert!(exp.summary.iterations < 200);
        assert_eq!(exp.summary.bound_violations, 0);
        assert!((exp.summary.f_star - 0.5).abs() < 1e-12);
        assert!(exp.rows.iter().all(|r| !r.bound.is_nan()));
    }

    #[test]
    fn gamma_rule_resolution() {
        assert!((GammaRule::Fraction(0.5).resolve(2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(GammaRule::Fraction(1.0).resolve(2.0).is_err());
        assert!(GammaRule::Fraction(0.0).resolve(2.0).is_err());
        assert!(GammaRule::Star.resolve(0.0).is_err());
    }

    #[test]
    fn csv_formatting() {
        let rows = [TraceRow {
            k: 3,
            obj_y: f64::INFINITY,
            obj_z: 0.1,
            dre: f64::NAN,
            znorm: 1e-300,
            rel_subopt: 2.5,
            bound: 1.0 / 3.0,
            elapsed_s: 0.0,
        }];
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[0], "3");
        assert_eq!(fields[1], "inf");
        assert_eq!(fields[3], "nan");
        assert_eq!(fields[6].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fields[4].parse::<f64>().unwrap(), 1e-300);
    }

    #[test]
    fn sweep_is_sorted_and_includes_star() {
        let base = ExperimentSpec::new(ProblemFamily::Scalar, SolverKind::Drs);
        let rows = gamma_sweep(&base, &[0.8, 0.2, 0.6]).unwrap();
        let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
        assert_eq!(labels, ["0.2", "star", "0.6", "0.8"]);
        assert_eq!(gamma_sweep(&base, &[]).unwrap().len(), 1);
        assert!(gamma_sweep(&base, &[1.5]).is_err());
        let table = sweep_table(&rows);
        assert_eq!(table.lines().count(), 5);
    }
}
