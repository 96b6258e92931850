//! Douglas-Rachford splitting and its accelerated variant, parameter rules
//! derived from the envelope constants, and the matching rate bounds.
//!
//! One DRS step at `x` is
//!
//! ```text
//! y  = prox_{gamma f}(x)
//! z  = prox_{gamma g}(2y - x)
//! x+ = x + lambda (z - y)
//! ```
//!
//! which is exactly `x+ = x - lambda D grad DRE(x)` for the constant metric
//! `D = gamma (2 (I + gamma Q)^{-1} - I)^{-1}`. The fast variant applies the
//! same step at an extrapolated point `u` and sets
//! `u+ = x+ + beta_k (x+ - x)`.

use std::time::Instant;

use crate::envelope::{CompositeProblem, EnvelopeConstants, PointValues, Splitting};
use crate::error::{Error, Result};
use crate::functions::check_gamma;
use crate::numerics::{check_len, Vector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRule {
    /// `(1 - gamma L_f) / (1 + gamma L_f)`, i.e. step `1/L_h` on the
    /// preconditioned envelope.
    Theorem,
    Constant(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaSchedule {
    /// Plain DRS.
    None,
    /// `beta_0 = 0`, `beta_k = (k - 1) / (k + 2)`.
    Convex,
    /// Constant `(1 - sqrt(mu_h/L_h)) / (1 + sqrt(mu_h/L_h))`.
    StronglyConvex,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub gamma: f64,
    pub lambda: LambdaRule,
    pub beta: BetaSchedule,
    pub max_iter: usize,
    /// Stop once `|Z(x^k)| / (1 + |x^k|) <= tol`.
    pub tol: f64,
    pub record_dre: bool,
}

impl SolverConfig {
    pub fn new(gamma: f64) -> Self {
        Self {
            gamma,
            lambda: LambdaRule::Theorem,
            beta: BetaSchedule::None,
            max_iter: 10_000,
            tol: 1e-10,
            record_dre: true,
        }
    }

    pub fn with_lambda(mut self, lambda: LambdaRule) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_beta(mut self, beta: BetaSchedule) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_record_dre(mut self, record: bool) -> Self {
        self.record_dre = record;
        self
    }

    /// Validates the configuration against `prob` and returns the stepsize.
    pub fn resolve_lambda(&self, prob: &CompositeProblem) -> Result<f64> {
        check_gamma(self.gamma)?;
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("max_iter must be at least 1".into()));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidConfig(format!("tol must be positive, got {}", self.tol)));
        }
        match self.lambda {
            LambdaRule::Theorem => theorem_stepsize(self.gamma, prob.l_f()),
            LambdaRule::Constant(l) if l > 0.0 && l < 2.0 => Ok(l),
            LambdaRule::Constant(l) => Err(Error::InvalidConfig(format!(
                "constant lambda must lie in (0, 2), got {l}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
}

/// Values recorded at `x^k` (for the fast variant, at the non-extrapolated
/// sequence): `y^k = P(x^k)`, `z^k = G(x^k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub obj_y: f64,
    pub obj_z: f64,
    pub dre: Option<f64>,
    pub znorm: f64,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub x: Vector,
    /// Extrapolated point, only for the fast variant.
    pub u: Option<Vector>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub records: Vec<IterationRecord>,
    pub status: Status,
    pub state: IterateState,
    pub lambda: f64,
}

impl IterationTrace {
    pub fn iterations(&self) -> usize {
        self.state.k
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a trace always holds the initial record")
    }
}

/// What an observer sees at each recorded iterate.
#[derive(Debug)]
pub struct StepView<'a> {
    pub k: usize,
    pub x: &'a Vector,
    pub split: &'a Splitting,
    pub values: &'a PointValues,
}

/// One DRS step; returns `(y, z, x_next)`.
pub fn drs_step(
    prob: &CompositeProblem,
    gamma: f64,
    lambda: f64,
    x: &Vector,
) -> Result<(Vector, Vector, Vector)> {
    if !(0.0..=2.0).contains(&lambda) {
        return Err(Error::LambdaOutOfRange {
            lambda,
            low: 0.0,
            high: 2.0,
        });
    }
    let s = prob.split(gamma, x)?;
    let x_next = x - &s.z * lambda;
    Ok((s.p, s.g, x_next))
}

pub fn run_drs(prob: &CompositeProblem, config: &SolverConfig, x0: &Vector) -> Result<IterationTrace> {
    run_drs_observed(prob, config, x0, |_| {})
}

pub fn run_drs_observed(
    prob: &CompositeProblem,
    config: &SolverConfig,
    x0: &Vector,
    observer: impl FnMut(&StepView<'_>),
) -> Result<IterationTrace> {
    let lambda = config.resolve_lambda(prob)?;
    iterate(prob, config, lambda, x0, |_| 0.0, false, observer)
}

pub fn run_fast_drs(
    prob: &CompositeProblem,
    config: &SolverConfig,
    x0: &Vector,
) -> Result<IterationTrace> {
    run_fast_drs_observed(prob, config, x0, |_| {})
}

pub fn run_fast_drs_observed(
    prob: &CompositeProblem,
    config: &SolverConfig,
    x0: &Vector,
    observer: impl FnMut(&StepView<'_>),
) -> Result<IterationTrace> {
    let lambda = config.resolve_lambda(prob)?;
    match config.beta {
        BetaSchedule::None => Err(Error::InvalidConfig(
            "the fast variant needs a momentum schedule".into(),
        )),
        BetaSchedule::Convex => iterate(prob, config, lambda, x0, convex_beta, true, observer),
        BetaSchedule::StronglyConvex => {
            if prob.mu_f() <= 0.0 {
                return Err(Error::StronglyConvexRequired);
            }
            let beta = strongly_convex_beta(&prob.envelope_constants(config.gamma)?)?;
            iterate(prob, config, lambda, x0, move |_| beta, true, observer)
        }
    }
}

/// Fast DRS with an arbitrary momentum sequence.
pub fn run_with_momentum(
    prob: &CompositeProblem,
    config: &SolverConfig,
    x0: &Vector,
    beta: impl Fn(usize) -> f64,
    observer: impl FnMut(&StepView<'_>),
) -> Result<IterationTrace> {
    let lambda = config.resolve_lambda(prob)?;
    iterate(prob, config, lambda, x0, beta, true, observer)
}

/// Shared driver. `P` is affine for quadratic `f`, so `P(u)` of the
/// extrapolated point is the same combination of `P(x+)` and `P(x)`; each
/// iteration costs one factored solve whether or not momentum is used.
fn iterate(
    prob: &CompositeProblem,
    config: &SolverConfig,
    lambda: f64,
    x0: &Vector,
    beta: impl Fn(usize) -> f64,
    accelerated: bool,
    mut observer: impl FnMut(&StepView<'_>),
) -> Result<IterationTrace> {
    check_len(x0, prob.dim())?;
    let gamma = config.gamma;
    let start = Instant::now();
    let mut records = Vec::new();

    let mut x = x0.clone();
    let mut px = prob.p_map(gamma, &x)?;
    // None while u coincides with x
    let mut extrapolated: Option<(Vector, Vector)> = None;
    let mut k = 0;

    let status = loop {
        let sx = prob.split_from_p(gamma, &x, px.clone())?;
        let values = prob.point_values(gamma, &x, &sx)?;
        let znorm = sx.z.norm();
        records.push(IterationRecord {
            k,
            obj_y: values.obj_p,
            obj_z: values.obj_g,
            dre: config.record_dre.then_some(values.dre),
            znorm,
            elapsed_s: start.elapsed().as_secs_f64(),
        });
        observer(&StepView {
            k,
            x: &x,
            split: &sx,
            values: &values,
        });
        if znorm / (1.0 + x.norm()) <= config.tol {
            break Status::Converged;
        }
        if k == config.max_iter {
            break Status::MaxIter;
        }

        let x_next = match &extrapolated {
            None => &x - &sx.z * lambda,
            Some((u, pu)) => {
                let su = prob.split_from_p(gamma, u, pu.clone())?;
                u - &su.z * lambda
            }
        };
        let px_next = prob.p_map(gamma, &x_next)?;
        let b = beta(k);
        extrapolated = if b == 0.0 {
            None
        } else {
            let u = &x_next + (&x_next - &x) * b;
            let pu = &px_next + (&px_next - &px) * b;
            Some((u, pu))
        };
        x = x_next;
        px = px_next;
        k += 1;
    };

    let u = if accelerated {
        Some(extrapolated.map_or_else(|| x.clone(), |(u, _)| u))
    } else {
        None
    };
    Ok(IterationTrace {
        records,
        status,
        state: IterateState { x, u, k },
        lambda,
    })
}

/// `beta_0 = 0`, `beta_k = (k - 1)/(k + 2)`.
pub fn convex_beta(k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        (k as f64 - 1.0) / (k as f64 + 2.0)
    }
}

pub fn strongly_convex_beta(c: &EnvelopeConstants) -> Result<f64> {
    if !(c.mu_h > 0.0) {
        return Err(Error::StronglyConvexRequired);
    }
    let r = (c.mu_h / c.l_h).sqrt();
    Ok((1.0 - r) / (1.0 + r))
}

/// `(1 - gamma L_f) / (1 + gamma L_f)`.
pub fn theorem_stepsize(gamma: f64, l_f: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if gamma * l_f >= 1.0 {
        return Err(Error::GammaTooLarge {
            gamma,
            limit: 1.0 / l_f,
        });
    }
    Ok((1.0 - gamma * l_f) / (1.0 + gamma * l_f))
}

/// `(sqrt(2) - 1) / L_f`, the minimizer of [`rate_constant`].
pub fn optimal_gamma(l_f: f64) -> Result<f64> {
    if !(l_f > 0.0 && l_f.is_finite()) {
        return Err(Error::NonpositiveLipschitz(l_f));
    }
    Ok((std::f64::consts::SQRT_2 - 1.0) / l_f)
}

/// `(1 + gamma L_f) / (gamma (1 - gamma L_f))`, equal to `1/(gamma lambda)`
/// at the theorem stepsize.
pub fn rate_constant(gamma: f64, l_f: f64) -> f64 {
    (1.0 + gamma * l_f) / (gamma * (1.0 - gamma * l_f))
}

/// `dist0^2 / (2 gamma lambda k)`; infinite for `k = 0`.
pub fn bound_sublinear(k: usize, gamma: f64, lambda: f64, dist0: f64) -> f64 {
    if dist0 == 0.0 {
        return 0.0;
    }
    dist0 * dist0 / (2.0 * gamma * lambda * k as f64)
}

/// `2 dist0^2 / (gamma lambda (k + 2)^2)`.
pub fn bound_fast(k: usize, gamma: f64, lambda: f64, dist0: f64) -> f64 {
    let kk = k as f64 + 2.0;
    2.0 * dist0 * dist0 / (gamma * lambda * kk * kk)
}

/// Iterate bound for strongly convex `f`:
/// `(d_max/d_min) (1 - 2 lambda mu_h L_h / (mu_h + L_h))^k dist0^2`.
pub fn bound_linear_iterates(
    k: usize,
    c: &EnvelopeConstants,
    lambda: f64,
    dist0: f64,
) -> Result<f64> {
    if !(c.mu_h > 0.0) {
        return Err(Error::StronglyConvexRequired);
    }
    let high = 2.0 / (c.l_h + c.mu_h);
    if !(lambda > 0.0 && lambda <= high) {
        return Err(Error::LambdaOutOfRange {
            lambda,
            low: 0.0,
            high,
        });
    }
    let factor = linear_iterate_factor(c, lambda);
    Ok(c.d_max / c.d_min * factor.powi(k as i32) * dist0 * dist0)
}

pub fn linear_iterate_factor(c: &EnvelopeConstants, lambda: f64) -> f64 {
    (1.0 - 2.0 * lambda * c.mu_h * c.l_h / (c.mu_h + c.l_h)).max(0.0)
}

/// Objective bound for the fast variant on strongly convex `f`:
/// `(L_h / d_min) (1 - sqrt(mu_h/L_h))^k dist0^2`.
pub fn bound_fast_strongly_convex(k: usize, c: &EnvelopeConstants, dist0: f64) -> Result<f64> {
    if !(c.mu_h > 0.0) {
        return Err(Error::StronglyConvexRequired);
    }
    let factor = (1.0 - (c.mu_h / c.l_h).sqrt()).max(0.0);
    Ok(c.l_h / c.d_min * factor.powi(k as i32) * dist0 * dist0)
}

/// Distance between a DRS step and the scaled gradient step
/// `x - lambda D grad DRE(x)`. `D` is applied as
/// `gamma (I - gamma Q)^{-1} (I + gamma Q)`, the inverse of
/// `(2 (I + gamma Q)^{-1} - I) / gamma`.
pub fn scaled_gradient_check(
    prob: &CompositeProblem,
    gamma: f64,
    lambda: f64,
    x: &Vector,
) -> Result<f64> {
    prob.envelope_constants(gamma)?;
    let (_, _, x_next) = drs_step(prob, gamma, lambda, x)?;
    let grad = prob.dre_gradient(gamma, x)?;
    let lifted = &grad + prob.smooth().hess_apply(&grad)? * gamma;
    let scaled = prob.smooth().reflected_inverse_apply(gamma, &lifted)? * gamma;
    Ok((x_next - (x - scaled * lambda)).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{ConvexQuadratic, ProxFunction};
    use crate::numerics::DenseMatrix;
    use std::f64::consts::SQRT_2;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn scalar_box() -> CompositeProblem {
        let f = ConvexQuadratic::new(DenseMatrix::identity(1, 1), v(&[0.0])).unwrap();
        CompositeProblem::new(f, ProxFunction::boxed(v(&[1.0]), v(&[2.0])).unwrap()).unwrap()
    }

    fn scalar_free() -> CompositeProblem {
        let f = ConvexQuadratic::new(DenseMatrix::identity(1, 1), v(&[0.0])).unwrap();
        CompositeProblem::new(f, ProxFunction::zero(1)).unwrap()
    }

    #[test]
    fn step_hand_values() {
        let prob = scalar_box();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-14;
        let (y, z, x) = drs_step(&prob, 1.0, 1.0, &v(&[4.0])).unwrap();
        assert!(close(y[0], 2.0) && close(z[0], 1.0) && close(x[0], 3.0));

        let (y, z, x) = drs_step(&prob, 1.0, 1.0, &v(&[2.0])).unwrap();
        assert!(close(y[0], 1.0) && close(z[0], 1.0) && close(x[0], 2.0));

        let (_, _, x) = drs_step(&prob, 1.0, 0.0, &v(&[4.0])).unwrap();
        assert_eq!(x[0], 4.0);

        assert!(matches!(
            drs_step(&prob, 1.0, 2.5, &v(&[4.0])),
            Err(Error::LambdaOutOfRange { .. })
        ));
    }

    #[test]
    fn scalar_run_converges() {
        let prob = scalar_box();
        let cfg = SolverConfig::new(0.4).with_tol(1e-14).with_max_iter(1000);
        let trace = run_drs(&prob, &cfg, &v(&[4.0])).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert!(trace.last().znorm <= 1e-12);
        let y = prob.p_map(cfg.gamma, &trace.state.x).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12);
        assert!(trace.state.u.is_none());
    }

    #[test]
    fn infinite_tolerance_stops_immediately() {
        let prob = scalar_box();
        let cfg = SolverConfig::new(0.4).with_tol(f64::INFINITY);
        let trace = run_drs(&prob, &cfg, &v(&[4.0])).unwrap();
        assert_eq!(trace.status, Status::Converged);
        assert_eq!(trace.iterations(), 0);
        assert_eq!(trace.records.len(), 1);
    }

    #[test]
    fn max_iter_bounds_record_count() {
        let prob = scalar_box();
        let cfg = SolverConfig::new(0.4).with_tol(1e-300).with_max_iter(5);
        let trace = run_drs(&prob, &cfg, &v(&[40.0])).unwrap();
        assert_eq!(trace.status, Status::MaxIter);
        assert_eq!(trace.records.len(), 6);
    }

    #[test]
    fn config_validation() {
        let prob = scalar_box();
        let x0 = v(&[1.0]);
        assert!(matches!(
            run_drs(&prob, &SolverConfig::new(0.4).with_max_iter(0), &x0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            run_drs(&prob, &SolverConfig::new(0.4).with_lambda(LambdaRule::Constant(2.0)), &x0),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            run_drs(&prob, &SolverConfig::new(1.5), &x0),
            Err(Error::GammaTooLarge { .. })
        ));
        // explicit lambda lifts the gamma < 1/L_f requirement
        let cfg = SolverConfig::new(1.5).with_lambda(LambdaRule::Constant(1.0)).with_tol(1e-12);
        assert_eq!(run_drs(&prob, &cfg, &x0).unwrap().status, Status::Converged);
        assert!(matches!(
            run_fast_drs(&prob, &SolverConfig::new(0.4), &x0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn strongly_convex_schedule_needs_mu() {
        let f = ConvexQuadratic::new(DenseMatrix::zeros(1, 1), v(&[1.0])).unwrap();
        let prob = CompositeProblem::new(f, ProxFunction::boxed(v(&[-1.0]), v(&[1.0])).unwrap())
            .unwrap();
        let cfg = SolverConfig::new(0.5).with_beta(BetaSchedule::StronglyConvex);
        assert_eq!(
            run_fast_drs(&prob, &cfg, &v(&[0.0])).unwrap_err(),
            Error::StronglyConvexRequired
        );
    }

    #[test]
    fn zero_momentum_matches_plain_drs() {
        let prob = scalar_box();
        let cfg = SolverConfig::new(0.3).with_tol(1e-13);
        let plain = run_drs(&prob, &cfg, &v(&[7.0])).unwrap();
        let fast = run_with_momentum(&prob, &cfg, &v(&[7.0]), |_| 0.0, |_| {}).unwrap();
        assert_eq!(plain.records.len(), fast.records.len());
        for (a, b) in plain.records.iter().zip(&fast.records) {
            assert!((a.obj_z - b.obj_z).abs() <= 1e-12);
            assert!((a.znorm - b.znorm).abs() <= 1e-12);
        }
        assert!((&plain.state.x - &fast.state.x).amax() <= 1e-12);
    }

    #[test]
    fn convex_schedule_values() {
        assert_eq!(convex_beta(0), 0.0);
        assert_eq!(convex_beta(1), 0.0);
        assert_eq!(convex_beta(3), 2.0 / 5.0);
    }

    #[test]
    fn stepsize_values() {
        let l = theorem_stepsize(1e-12, 1.0).unwrap();
        assert!(l > 1.0 - 1e-11 && l < 1.0);
        let g = optimal_gamma(1.0).unwrap();
        assert!((theorem_stepsize(g, 1.0).unwrap() - (SQRT_2 - 1.0)).abs() < 1e-15);
        assert!((theorem_stepsize(0.5, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(matches!(theorem_stepsize(1.0, 1.0), Err(Error::GammaTooLarge { .. })));
    }

    #[test]
    fn optimal_gamma_values() {
        assert!((optimal_gamma(1.0).unwrap() - 0.414_213_562_373_095_1).abs() < 1e-15);
        assert!((optimal_gamma(2.0).unwrap() - 0.207_106_781_186_547_5).abs() < 1e-15);
        assert!(optimal_gamma(3.0).unwrap() < 1.0 / 3.0);
        assert!(matches!(optimal_gamma(0.0), Err(Error::NonpositiveLipschitz(_))));
    }

    #[test]
    fn sublinear_and_fast_bounds() {
        assert_eq!(bound_sublinear(10, 0.4, 0.5, 0.0), 0.0);
        assert_eq!(bound_fast(10, 0.4, 0.5, 0.0), 0.0);
        let b = bound_sublinear(10, 0.4, 0.5, 2.0);
        assert!((bound_sublinear(20, 0.4, 0.5, 2.0) - b / 2.0).abs() < 1e-15);
        let g = SQRT_2 - 1.0;
        let expected = 1.0 / (2.0 * g * g * 100.0);
        assert!((bound_sublinear(100, g, g, 1.0) - expected).abs() < 1e-13);
        let b = bound_fast(10, 0.4, 0.5, 2.0);
        assert!((bound_fast(22, 0.4, 0.5, 2.0) - b / 4.0).abs() < 1e-15);
        // 2 * 4 / (0.2 * 144)
        assert!((b - 8.0 / 28.8).abs() < 1e-15);
    }

    #[test]
    fn linear_bounds() {
        let c = EnvelopeConstants::new(0.2, 0.5, 2.0).unwrap();
        let lam = 1.0 / c.l_h;
        assert!(
            (bound_linear_iterates(0, &c, lam, 3.0).unwrap() - c.d_max / c.d_min * 9.0).abs()
                < 1e-12
        );
        let f = linear_iterate_factor(&c, lam);
        assert!(f > 0.0 && f < 1.0);
        assert!(bound_linear_iterates(5, &c, lam, 3.0).unwrap() < bound_linear_iterates(4, &c, lam, 3.0).unwrap());
        assert!(matches!(
            bound_linear_iterates(1, &c, 3.0 / (c.l_h + c.mu_h), 1.0),
            Err(Error::LambdaOutOfRange { .. })
        ));
        assert_eq!(bound_fast_strongly_convex(3, &c, 0.0).unwrap(), 0.0);

        let flat = EnvelopeConstants::new(0.2, 0.0, 2.0).unwrap();
        assert_eq!(bound_linear_iterates(1, &flat, 0.1, 1.0), Err(Error::StronglyConvexRequired));
        assert_eq!(bound_fast_strongly_convex(1, &flat, 1.0), Err(Error::StronglyConvexRequired));
    }

    #[test]
    fn isotropic_limit_collapses_linear_factor() {
        let mut c = EnvelopeConstants::new(0.2, 1.0, 1.0).unwrap();
        c.mu_h = c.l_h;
        assert_eq!(linear_iterate_factor(&c, 1.0 / c.l_h), 0.0);
        assert_eq!(bound_fast_strongly_convex(2, &c, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn scaled_gradient_scalar() {
        let prob = scalar_free();
        assert!(scaled_gradient_check(&prob, 0.5, 1.0, &v(&[3.0])).unwrap() < 1e-14);
        assert!(scaled_gradient_check(&scalar_box(), 0.5, 0.7, &v(&[3.0])).unwrap() < 1e-14);
        // x = 1.5 is the fixed point for gamma = 0.5
        assert!(scaled_gradient_check(&scalar_box(), 0.5, 1.0, &v(&[1.5])).unwrap() < 1e-15);
        assert!(matches!(
            scaled_gradient_check(&prob, 1.0, 1.0, &v(&[3.0])),
            Err(Error::GammaTooLarge { .. })
        ));
    }
}
