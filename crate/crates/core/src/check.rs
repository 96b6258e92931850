//! Invariant suites over seeded instances. Each suite counts the checks it
//! made and how many failed; `worst` is the largest ratio of a measured
//! quantity to what it was allowed, so a passing suite has `worst <= 1`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::bench::{run_on_problem, ExperimentSpec, MomentumChoice, ProblemFamily, SolverKind};
use crate::envelope::CompositeProblem;
use crate::error::Result;
use crate::numerics::Vector;
use crate::problems::{gen_box_qp, gen_sparse_ls, reference_solve, ReferenceSolution};
use crate::solvers::{optimal_gamma, rate_constant, run_drs, scaled_gradient_check, SolverConfig};

/// Gradient under test; the default is [`CompositeProblem::dre_gradient`].
pub type GradientFn = fn(&CompositeProblem, f64, &Vector) -> Result<Vector>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub level: Level,
    pub gradient: GradientFn,
}

impl CheckOptions {
    pub fn new(level: Level) -> Self {
        Self {
            level,
            gradient: |p, g, x| p.dre_gradient(g, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub checks: usize,
    pub violations: usize,
    pub worst: f64,
    /// Description of the first violation, if any.
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            checks: 0,
            violations: 0,
            worst: 0.0,
            first_failure: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.checks > 0
    }

    /// Records `measured <= allowed`; NaN counts as a violation.
    fn record(&mut self, measured: f64, allowed: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        let ok = measured <= allowed;
        if allowed > 0.0 && measured.is_finite() {
            self.worst = self.worst.max(measured / allowed);
        } else if !ok {
            self.worst = f64::INFINITY;
        }
        if !ok {
            self.violations += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(format!("{}: {measured:e} > {allowed:e}", what()));
            }
        }
    }

    fn merge(&mut self, other: SuiteReport) {
        self.checks += other.checks;
        self.violations += other.violations;
        self.worst = self.worst.max(other.worst);
        if self.first_failure.is_none() {
            self.first_failure = other.first_failure;
        }
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<18} checks={:<7} violations={:<4} worst={:.3e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.checks,
            self.violations,
            self.worst
        )?;
        if let Some(why) = &self.first_failure {
            write!(f, "  first: {why}")?;
        }
        Ok(())
    }
}

/// A seeded instance with its reference solution at `gamma*`.
pub struct Instance {
    pub label: String,
    pub problem: CompositeProblem,
    pub reference: ReferenceSolution,
    /// Known optimal value for planted instances.
    pub planted: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Sizes {
    box_n: usize,
    box_seeds: u64,
    ls_m: usize,
    ls_n: usize,
    ls_seeds: u64,
    points: usize,
    grad_points: usize,
    bound_seeds: u64,
    bound_n: usize,
    large: bool,
}

impl Sizes {
    fn for_level(level: Level) -> Self {
        match level {
            Level::Fast => Sizes {
                box_n: 20,
                box_seeds: 3,
                ls_m: 10,
                ls_n: 40,
                ls_seeds: 3,
                points: 100,
                grad_points: 10,
                bound_seeds: 3,
                bound_n: 20,
                large: false,
            },
            Level::Full => Sizes {
                box_n: 50,
                box_seeds: 10,
                ls_m: 20,
                ls_n: 100,
                ls_seeds: 10,
                points: 500,
                grad_points: 50,
                bound_seeds: 10,
                bound_n: 50,
                large: true,
            },
        }
    }
}

pub const CHECK_COND: f64 = 100.0;
pub const CHECK_BOX_WIDTH: f64 = 1.0;
pub const CHECK_RHO: f64 = 0.5;
pub const CHECK_NNZ: usize = 5;

pub fn box_qp_instance(n: usize, seed: u64, cond: f64) -> Result<Instance> {
    let problem = gen_box_qp(n, seed, cond, CHECK_BOX_WIDTH)?.to_problem()?;
    let reference = reference_solve(&problem, optimal_gamma(problem.l_f())?)?;
    Ok(Instance {
        label: format!("boxqp(n={n},seed={seed})"),
        problem,
        reference,
        planted: None,
    })
}

pub fn sparse_ls_instance(m: usize, n: usize, seed: u64) -> Result<Instance> {
    let inst = gen_sparse_ls(m, n, seed, CHECK_RHO, CHECK_NNZ.min(m))?;
    let problem = inst.to_problem()?;
    let reference = reference_solve(&problem, optimal_gamma(problem.l_f())?)?;
    Ok(Instance {
        label: format!("l1ls(m={m},n={n},seed={seed})"),
        problem,
        reference,
        planted: Some(inst.planted_objective()),
    })
}

/// Random test point around the solution, spread a few box widths out.
pub fn random_point(rng: &mut ChaCha20Rng, center: &Vector, scale: f64) -> Vector {
    Vector::from_fn(center.len(), |i, _| {
        center[i] + scale * rng.sample::<f64, _>(StandardNormal)
    })
}

fn point_scale(inst: &Instance) -> f64 {
    3.0 * (1.0 + inst.reference.x_tilde.amax())
}

/// Gammas exercised by the pointwise suites, as fractions of `1/L_f`.
pub const GAMMA_FRACTIONS: [f64; 3] = [0.3, std::f64::consts::SQRT_2 - 1.0, 0.9];

fn rng_for(suite: u64, inst: usize) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(0x5eed_0000 + suite);
    r.set_stream(inst as u64);
    r
}

/// Both sandwich residuals nonnegative up to `1e-8 (1 + |DRE|)`.
pub fn suite_prop1(instances: &[Instance], points: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("prop1");
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = rng_for(1, i);
        let scale = point_scale(inst);
        for &frac in &GAMMA_FRACTIONS {
            let gamma = frac / inst.problem.l_f();
            for _ in 0..points {
                let x = random_point(&mut rng, &inst.reference.x_tilde, scale);
                let (r1, r2) = inst.problem.prop1_residuals(gamma, &x)?;
                let dre = inst.problem.dre_value(gamma, &x)?;
                let tol = 1e-8 * (1.0 + dre.abs());
                rep.record(-r1, tol, || format!("{} upper sandwich", inst.label));
                rep.record(-r2, tol, || format!("{} lower sandwich", inst.label));
            }
        }
    }
    Ok(rep)
}

/// Central differences with step `1e-6 (1 + |x|_inf)`.
pub fn finite_difference_gradient(
    prob: &CompositeProblem,
    gamma: f64,
    x: &Vector,
) -> Result<Vector> {
    let h = 1e-6 * (1.0 + x.amax());
    let mut g = Vector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = prob.dre_value(gamma, &xp)?;
        xp[i] = xi - h;
        let fm = prob.dre_value(gamma, &xp)?;
        xp[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

/// Gradient against central differences, relative error `<= 1e-5`.
pub fn suite_gradient(
    instances: &[Instance],
    points: usize,
    gradient: GradientFn,
) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("gradient-fd");
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = rng_for(2, i);
        let scale = point_scale(inst);
        let gamma = optimal_gamma(inst.problem.l_f())?;
        for _ in 0..points {
            let x = random_point(&mut rng, &inst.reference.x_tilde, scale);
            let g = gradient(&inst.problem, gamma, &x)?;
            let fd = finite_difference_gradient(&inst.problem, gamma, &x)?;
            let err = (&g - &fd).norm() / g.norm().max(fd.norm()).max(1.0);
            rep.record(err, 1e-5, || format!("{} gradient", inst.label));
        }
    }
    Ok(rep)
}

/// A DRS step equals the scaled gradient step to `1e-10 (1 + |x|)`.
pub fn suite_scaled_gradient(instances: &[Instance], points: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("scaled-gradient");
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = rng_for(3, i);
        let scale = point_scale(inst);
        for &frac in &GAMMA_FRACTIONS {
            let gamma = frac / inst.problem.l_f();
            for _ in 0..points {
                let x = random_point(&mut rng, &inst.reference.x_tilde, scale);
                let lambda = rng.gen_range(0.0..=2.0);
                let d = scaled_gradient_check(&inst.problem, gamma, lambda, &x)?;
                rep.record(d, 1e-10 * (1.0 + x.norm()), || {
                    format!("{} lambda={lambda}", inst.label)
                });
            }
        }
    }
    Ok(rep)
}

/// The envelope equals `F*` at its minimizer and is bounded below by it.
pub fn suite_envelope_minimum(instances: &[Instance], points: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("envelope-minimum");
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = rng_for(4, i);
        let scale = point_scale(inst);
        let r = &inst.reference;
        let at_min = inst.problem.dre_value(r.gamma, &r.x_tilde)?;
        rep.record((at_min - r.f_star).abs(), 1e-8 * (1.0 + r.f_star.abs()), || {
            format!("{} DRE(x~) vs F*", inst.label)
        });
        for _ in 0..points {
            let x = random_point(&mut rng, &r.x_tilde, scale);
            let v = inst.problem.dre_value(r.gamma, &x)?;
            rep.record(at_min - v, 1e-8, || format!("{} DRE below minimum", inst.label));
        }
    }
    Ok(rep)
}

/// The envelope formulas and the forward-backward link agree to `1e-9`.
pub fn suite_envelope_forms(instances: &[Instance], points: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("envelope-forms");
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = rng_for(5, i);
        let scale = point_scale(inst);
        let gamma = optimal_gamma(inst.problem.l_f())?;
        for _ in 0..points {
            let x = random_point(&mut rng, &inst.reference.x_tilde, scale);
            let p = &inst.problem;
            let v = p.dre_value(gamma, &x)?;
            let tol = 1e-9 * (1.0 + v.abs());
            let others = [
                ("reflected", p.dre_value_reflected(gamma, &x)?),
                ("moreau", p.dre_value_moreau(gamma, &x)?),
                ("fbe", p.fbe_value(gamma, &p.p_map(gamma, &x)?)?),
            ];
            for (name, w) in others {
                rep.record((v - w).abs(), tol, || format!("{} {name} form", inst.label));
            }
        }
    }
    Ok(rep)
}

/// `Z` and both proximal maps are nonexpansive, slack `1e-10`.
pub fn suite_nonexpansive(instances: &[Instance], pairs: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("nonexpansive");
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = rng_for(6, i);
        let scale = point_scale(inst);
        let p = &inst.problem;
        for &frac in &GAMMA_FRACTIONS {
            let gamma = frac / p.l_f();
            for _ in 0..pairs {
                let a = random_point(&mut rng, &inst.reference.x_tilde, scale);
                // Half the pairs are close together, where kinks matter most.
                let spread = if rng.gen::<bool>() { scale } else { 1e-3 * scale };
                let b = random_point(&mut rng, &a, spread);
                let d = (&a - &b).norm();
                let dz = (p.z_map(gamma, &a)? - p.z_map(gamma, &b)?).norm();
                rep.record(dz, d + 1e-10, || format!("{} Z map", inst.label));
                let df = (p.smooth().prox(gamma, &a)? - p.smooth().prox(gamma, &b)?).norm();
                rep.record(df, d + 1e-10, || format!("{} prox f", inst.label));
                let dg = (p.nonsmooth().prox(gamma, &a)? - p.nonsmooth().prox(gamma, &b)?).norm();
                rep.record(dg, d + 1e-10, || format!("{} prox g", inst.label));
            }
        }
    }
    Ok(rep)
}

/// Rayleigh quotients of `Q` and of `Q (I + gamma Q)^{-1}` lie inside the
/// curvature intervals the constants are built from.
pub fn suite_curvature(instances: &[Instance], directions: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("curvature");
    for (i, inst) in instances.iter().enumerate() {
        let mut rng = rng_for(7, i);
        let p = &inst.problem;
        let (mu, l) = (p.mu_f(), p.l_f());
        let gamma = optimal_gamma(l)?;
        for _ in 0..directions {
            let d = random_point(&mut rng, &Vector::zeros(p.dim()), 1.0).normalize();
            let rq = d.dot(&p.smooth().hess_apply(&d)?);
            rep.record(mu - rq, 1e-8, || format!("{} below mu_f", inst.label));
            rep.record(rq - l, 1e-8, || format!("{} above L_f", inst.label));
            // Q (I + gamma Q)^{-1}, symmetric since both factors commute.
            let md = p.smooth().resolvent_apply(gamma, &d)?;
            let moreau_rq = d.dot(&p.smooth().hess_apply(&md)?);
            rep.record(mu / (1.0 + gamma * mu) - moreau_rq, 1e-9, || {
                format!("{} Moreau curvature low", inst.label)
            });
            rep.record(moreau_rq - l / (1.0 + gamma * l), 1e-9, || {
                format!("{} Moreau curvature high", inst.label)
            });
        }
    }
    Ok(rep)
}

/// Runs the solver on each instance and counts rate-bound violations.
/// Plain DRS also checks that the envelope never increases (slack `1e-10`).
pub fn suite_rate_bounds(
    name: &'static str,
    specs: &[(ExperimentSpec, &CompositeProblem)],
) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new(name);
    for (run, (spec, prob)) in specs.iter().enumerate() {
        let exp = run_on_problem(spec, prob)?;
        let s = &exp.summary;
        rep.checks += exp.rows.len();
        rep.violations += s.bound_violations;
        rep.worst = rep.worst.max(s.bound_worst_ratio);
        if s.bound_violations > 0 && rep.first_failure.is_none() {
            rep.first_failure = Some(format!(
                "run {run} ({}): {} violations of the {} bound",
                s.solver,
                s.bound_violations,
                s.bound_kind.map_or("missing", |b| b.name())
            ));
        }
        if s.bound_kind.is_none() {
            rep.record(1.0, 0.0, || format!("run {run} ({}): no applicable bound", s.solver));
        }
    }
    Ok(rep)
}

pub fn suite_descent(instances: &[Instance], max_iter: usize) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("dre-descent");
    for inst in instances {
        let gamma = optimal_gamma(inst.problem.l_f())?;
        let cfg = SolverConfig::new(gamma).with_max_iter(max_iter).with_tol(1e-12);
        let trace = run_drs(&inst.problem, &cfg, &Vector::zeros(inst.problem.dim()))?;
        for w in trace.records.windows(2) {
            let (a, b) = (w[0].dre.unwrap_or(f64::NAN), w[1].dre.unwrap_or(f64::NAN));
            rep.record(b - a, 1e-10, || format!("{} step {}", inst.label, w[1].k));
        }
    }
    Ok(rep)
}

/// Reference optimum matches the planted certificate to `1e-8 (1 + |F*|)`.
pub fn suite_planted(instances: &[Instance]) -> SuiteReport {
    let mut rep = SuiteReport::new("planted-optimum");
    for inst in instances {
        if let Some(planted) = inst.planted {
            let f = inst.reference.f_star;
            rep.record((f - planted).abs(), 1e-8 * (1.0 + f.abs()), || inst.label.clone());
        }
    }
    rep
}

/// `gamma*` minimizes the sublinear rate constant over a 1000-point grid.
pub fn suite_gamma_star(l_values: &[f64]) -> Result<SuiteReport> {
    let mut rep = SuiteReport::new("gamma-star");
    for &l in l_values {
        let limit = 1.0 / l;
        let grid: Vec<f64> = (1..=1000).map(|i| limit * i as f64 / 1001.0).collect();
        let best = grid
            .iter()
            .copied()
            .min_by(|a, b| rate_constant(*a, l).total_cmp(&rate_constant(*b, l)))
            .unwrap_or(f64::NAN);
        let step = limit / 1001.0;
        rep.record((best - optimal_gamma(l)?).abs(), step, || format!("L_f = {l}"));
        rep.record(rate_constant(optimal_gamma(l)?, l) - rate_constant(best, l), 1e-12 * rate_constant(best, l), || {
            format!("L_f = {l}: grid beats gamma*")
        });
    }
    Ok(rep)
}

pub fn run_checks(opts: &CheckOptions) -> Result<Vec<SuiteReport>> {
    let z = Sizes::for_level(opts.level);
    let mut boxes = Vec::new();
    for seed in 1..=z.box_seeds {
        boxes.push(box_qp_instance(z.box_n, seed, CHECK_COND)?);
    }
    let mut lss = Vec::new();
    for seed in 1..=z.ls_seeds {
        lss.push(sparse_ls_instance(z.ls_m, z.ls_n, seed)?);
    }
    let all: Vec<Instance> = boxes.into_iter().chain(lss).collect();

    let mut reports = vec![
        suite_prop1(&all, z.points)?,
        suite_gradient(&all, z.grad_points, opts.gradient)?,
        suite_scaled_gradient(&all, z.points / 5)?,
        suite_envelope_minimum(&all, z.points)?,
        suite_envelope_forms(&all, z.points / 5)?,
        suite_nonexpansive(&all, z.points)?,
        suite_curvature(&all, 100)?,
        suite_planted(&all),
        suite_gamma_star(&[0.5, 1.0, 3.7, 250.0])?,
    ];

    // Rate bounds: convex bounds on box-QPs, linear bounds on well conditioned ones.
    let mut convex = Vec::new();
    let mut strong = Vec::new();
    for seed in 1..=z.bound_seeds {
        convex.push(box_qp_instance(z.bound_n, seed, CHECK_COND)?.problem);
        strong.push(box_qp_instance(z.bound_n, seed, 10.0)?.problem);
    }
    let mut large = Vec::new();
    if z.large {
        large.push(box_qp_instance(500, 1, 1e3)?.problem);
        large.push(sparse_ls_instance(100, 1000, 1)?.problem);
    }
    let fam = ProblemFamily::Scalar; // label only; instances are passed in
    let spec = |solver, momentum, max_iter| ExperimentSpec {
        momentum,
        max_iter,
        ..ExperimentSpec::new(fam, solver)
    };
    let mut runs = Vec::new();
    for p in convex.iter().chain(&large) {
        runs.push((spec(SolverKind::Drs, MomentumChoice::Auto, 20_000), p));
        runs.push((spec(SolverKind::Fdrs, MomentumChoice::Convex, 20_000), p));
    }
    let mut strong_runs = Vec::new();
    for p in &strong {
        strong_runs.push((spec(SolverKind::Drs, MomentumChoice::Auto, 2000), p));
        strong_runs.push((spec(SolverKind::Fdrs, MomentumChoice::StronglyConvex, 2000), p));
    }
    let mut bounds = suite_rate_bounds("rate-bounds", &runs)?;
    bounds.merge(suite_rate_bounds("rate-bounds", &strong_runs)?);
    reports.push(bounds);

    let descent_instances: Vec<Instance> = all.into_iter().take(z.bound_seeds as usize).collect();
    reports.push(suite_descent(&descent_instances, 20_000)?);
    Ok(reports)
}
