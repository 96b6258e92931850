//! The Douglas-Rachford envelope of `F = f + g` for a convex quadratic `f`.
//!
//! With `P(x) = prox_{gamma f}(x)`, `G(x) = prox_{gamma g}(2P(x) - x)` and
//! `Z(x) = P(x) - G(x)`, the envelope is
//!
//! ```text
//! DRE(x) = f(P) + g(G) + |G - P|^2 / (2 gamma) + (G - P)'(x - P) / gamma
//! ```
//!
//! and its gradient is `(2 (I + gamma Q)^{-1} - I) Z(x) / gamma`. For
//! `gamma < 1/L_f` the envelope is convex and its minimizers map onto the
//! minimizers of `F` through `P`.

use crate::error::{Error, Result};
use crate::functions::{check_gamma, moreau_value, ProxFunction, SmoothTerm};
use crate::numerics::{check_len, Vector};

/// `f + g` together with the extreme eigenvalues of the Hessian of `f`.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    f: SmoothTerm,
    g: ProxFunction,
    mu_f: f64,
    l_f: f64,
}

/// The three maps evaluated at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    /// `P(x)`
    pub p: Vector,
    /// `G(x)`
    pub g: Vector,
    /// `Z(x) = P(x) - G(x)`
    pub z: Vector,
}

/// Objective pieces at the two points produced by one splitting evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointValues {
    /// `F(P(x))`, infinite when `P(x)` leaves the domain of `g`.
    pub obj_p: f64,
    /// `F(G(x))`
    pub obj_g: f64,
    /// `DRE(x)`
    pub dre: f64,
}

impl CompositeProblem {
    pub fn new(f: impl Into<SmoothTerm>, g: ProxFunction) -> Result<Self> {
        let f = f.into();
        if f.dim() != g.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                found: g.dim(),
            });
        }
        let (mu_f, l_f) = f.curvature();
        Ok(Self { f, g, mu_f, l_f })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn smooth(&self) -> &SmoothTerm {
        &self.f
    }

    pub fn nonsmooth(&self) -> &ProxFunction {
        &self.g
    }

    pub fn mu_f(&self) -> f64 {
        self.mu_f
    }

    pub fn l_f(&self) -> f64 {
        self.l_f
    }

    /// `1/L_f`, the supremum of admissible gamma for the rate theory.
    pub fn gamma_limit(&self) -> f64 {
        if self.l_f > 0.0 {
            1.0 / self.l_f
        } else {
            f64::INFINITY
        }
    }

    /// `F(x) = f(x) + g(x)`.
    pub fn objective(&self, x: &Vector) -> Result<f64> {
        let gx = self.g.value(x)?;
        if gx.is_infinite() {
            check_len(x, self.dim())?;
            return Ok(f64::INFINITY);
        }
        Ok(self.f.value(x)? + gx)
    }

    pub fn p_map(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        self.f.prox(gamma, x)
    }

    pub fn g_map(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        Ok(self.split(gamma, x)?.g)
    }

    pub fn z_map(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        Ok(self.split(gamma, x)?.z)
    }

    pub fn split(&self, gamma: f64, x: &Vector) -> Result<Splitting> {
        let p = self.p_map(gamma, x)?;
        self.split_from_p(gamma, x, p)
    }

    /// Completes a splitting when `P(x)` is already known.
    pub fn split_from_p(&self, gamma: f64, x: &Vector, p: Vector) -> Result<Splitting> {
        let reflected = &p * 2.0 - x;
        let g = self.g.prox(gamma, &reflected)?;
        let z = &p - &g;
        Ok(Splitting { p, g, z })
    }

    /// Objective values and the envelope at `x`, reusing a splitting of `x`.
    pub fn point_values(&self, gamma: f64, x: &Vector, s: &Splitting) -> Result<PointValues> {
        let f_p = self.f.value(&s.p)?;
        let f_g = self.f.value(&s.g)?;
        let g_p = self.g.value(&s.p)?;
        let g_g = self.g.value(&s.g)?;
        let obj_p = if g_p.is_infinite() { f64::INFINITY } else { f_p + g_p };
        let dre = dre_from_parts(gamma, x, s, f_p, g_g);
        Ok(PointValues {
            obj_p,
            obj_g: f_g + g_g,
            dre,
        })
    }

    /// The envelope in the form `f(P) + g(G) + |G-P|^2/(2 gamma) + (G-P)'(x-P)/gamma`.
    /// Defined for every `gamma > 0`.
    pub fn dre_value(&self, gamma: f64, x: &Vector) -> Result<f64> {
        let s = self.split(gamma, x)?;
        let f_p = self.f.value(&s.p)?;
        let g_g = self.g.value(&s.g)?;
        Ok(dre_from_parts(gamma, x, &s, f_p, g_g))
    }

    /// The envelope as `f(P) - (gamma/2)|grad f(P)|^2 + g^gamma(2P - x)`.
    pub fn dre_value_reflected(&self, gamma: f64, x: &Vector) -> Result<f64> {
        let p = self.p_map(gamma, x)?;
        let grad = self.f.gradient(&p)?;
        let reflected = &p * 2.0 - x;
        Ok(self.f.value(&p)? - 0.5 * gamma * grad.norm_squared()
            + moreau_value(&self.g, gamma, &reflected)?)
    }

    /// The envelope through Moreau envelopes only:
    /// `f^gamma(x) - gamma |grad f^gamma(x)|^2 + g^gamma(x - 2 gamma grad f^gamma(x))`.
    pub fn dre_value_moreau(&self, gamma: f64, x: &Vector) -> Result<f64> {
        let p = self.p_map(gamma, x)?;
        let grad_env = (x - &p) / gamma;
        let f_env = self.f.value(&p)? + (&p - x).norm_squared() / (2.0 * gamma);
        let shifted = x - &grad_env * (2.0 * gamma);
        Ok(f_env - gamma * grad_env.norm_squared() + moreau_value(&self.g, gamma, &shifted)?)
    }

    /// `(2 (I + gamma Q)^{-1} - I) Z(x) / gamma`, one factored solve.
    pub fn dre_gradient(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        let s = self.split(gamma, x)?;
        self.dre_gradient_from_split(gamma, &s)
    }

    pub fn dre_gradient_from_split(&self, gamma: f64, s: &Splitting) -> Result<Vector> {
        let jz = self.f.resolvent_apply(gamma, &s.z)?;
        Ok((jz * 2.0 - &s.z) / gamma)
    }

    /// The forward-backward envelope
    /// `min_z f(x) + grad f(x)'(z - x) + g(z) + |z - x|^2/(2 gamma)`,
    /// whose minimizer is `prox_{gamma g}(x - gamma grad f(x))`.
    pub fn fbe_value(&self, gamma: f64, x: &Vector) -> Result<f64> {
        check_gamma(gamma)?;
        let grad = self.f.gradient(x)?;
        let z = self.g.prox(gamma, &(x - &grad * gamma))?;
        let d = &z - x;
        Ok(self.f.value(x)? + grad.dot(&d) + self.g.value(&z)? + d.norm_squared() / (2.0 * gamma))
    }

    /// Slack in the two sandwich inequalities
    /// `DRE <= F(P) - |Z|^2/(2 gamma)` and
    /// `DRE >= F(G) + (1 - gamma L_f)|Z|^2/(2 gamma)`,
    /// returned as `(upper - DRE, DRE - lower)`. Both are nonnegative for
    /// every `gamma > 0`; the first is `+inf` when `P(x)` is infeasible.
    pub fn prop1_residuals(&self, gamma: f64, x: &Vector) -> Result<(f64, f64)> {
        let s = self.split(gamma, x)?;
        let v = self.point_values(gamma, x, &s)?;
        let zz = s.z.norm_squared() / (2.0 * gamma);
        let r1 = if v.obj_p.is_infinite() {
            f64::INFINITY
        } else {
            v.obj_p - zz - v.dre
        };
        let r2 = v.dre - v.obj_g - (1.0 - gamma * self.l_f) * zz;
        Ok((r1, r2))
    }

    pub fn envelope_constants(&self, gamma: f64) -> Result<EnvelopeConstants> {
        EnvelopeConstants::new(gamma, self.mu_f, self.l_f)
    }
}

fn dre_from_parts(gamma: f64, x: &Vector, s: &Splitting, f_p: f64, g_g: f64) -> f64 {
    let diff = -&s.z; // G - P
    let to_x = x - &s.p;
    f_p + g_g + diff.norm_squared() / (2.0 * gamma) + diff.dot(&to_x) / gamma
}

/// `psi(lambda) = (1 - gamma lambda) lambda / (1 + gamma lambda)^2`, the
/// curvature of the smooth part of the envelope along an eigenvector of `Q`
/// with eigenvalue `lambda`.
pub fn envelope_curvature(gamma: f64, lambda: f64) -> f64 {
    (1.0 - gamma * lambda) * lambda / (1.0 + gamma * lambda).powi(2)
}

/// Smoothness and convexity constants of the envelope and of its
/// preconditioned form, valid for `0 < gamma < 1/L_f`.
///
/// `d_min`/`d_max` are the extreme eigenvalues of the constant scaling
/// matrix `D = gamma (2 (I + gamma Q)^{-1} - I)^{-1}` that turns a DRS step
/// into a gradient step on the envelope; `l_h`/`mu_h` are the constants of
/// the envelope in the variable `D^{-1/2} x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeConstants {
    pub gamma: f64,
    pub mu_f: f64,
    pub l_f: f64,
    pub l_dre: f64,
    pub mu_dre: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub l_h: f64,
    pub mu_h: f64,
}

impl EnvelopeConstants {
    pub fn new(gamma: f64, mu_f: f64, l_f: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let limit = if l_f > 0.0 { 1.0 / l_f } else { f64::INFINITY };
        if gamma * l_f >= 1.0 {
            return Err(Error::GammaTooLarge { gamma, limit });
        }
        let gm = gamma * mu_f;
        let gl = gamma * l_f;
        let l_dre = (1.0 - gm) / (1.0 + gm) / gamma;
        // psi is concave on [mu_f, L_f], so its minimum sits at an endpoint.
        let mu_dre = envelope_curvature(gamma, mu_f).min(envelope_curvature(gamma, l_f));
        let d_min = gamma * (1.0 + gm) / (1.0 - gm);
        let d_max = gamma * (1.0 + gl) / (1.0 - gl);
        let l_h = (1.0 + gl) / (1.0 - gl);
        let mu_h = d_min * mu_dre;
        Ok(Self {
            gamma,
            mu_f,
            l_f,
            l_dre,
            mu_dre,
            d_min,
            d_max,
            l_h,
            mu_h,
        })
    }
}
