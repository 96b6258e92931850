//! Convex function objects with a value and a proximal mapping, and the
//! Moreau-envelope calculus built on top of them.
//!
//! The smooth summand is always a convex quadratic, either given explicitly
//! ([`ConvexQuadratic`]) or as a least-squares term ([`LeastSquaresQuadratic`]).
//! The nonsmooth summand is one of the [`ProxFunction`] variants.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::numerics::{
    check_len, check_symmetric, extreme_eigenvalues, factor_spd, symmetrize, DenseMatrix,
    SpdFactorization, Vector,
};

/// Anything with a computable value and proximal mapping.
pub trait ProxOperator {
    fn dim(&self) -> usize;

    /// Function value, `+inf` outside the domain.
    fn value(&self, x: &Vector) -> Result<f64>;

    /// `argmin_z h(z) + |z - x|^2 / (2 gamma)`.
    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector>;
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::NonpositiveGamma(gamma))
    }
}

/// Moreau envelope `h(p) + |p - x|^2 / (2 gamma)` with `p = prox_{gamma h}(x)`.
pub fn moreau_value<H: ProxOperator + ?Sized>(h: &H, gamma: f64, x: &Vector) -> Result<f64> {
    let p = h.prox(gamma, x)?;
    let hp = h.value(&p)?;
    Ok(hp + (&p - x).norm_squared() / (2.0 * gamma))
}

/// Gradient of the Moreau envelope, `(x - prox_{gamma h}(x)) / gamma`.
pub fn moreau_gradient<H: ProxOperator + ?Sized>(h: &H, gamma: f64, x: &Vector) -> Result<Vector> {
    let p = h.prox(gamma, x)?;
    Ok((x - p) / gamma)
}

// ---------------------------------------------------------------------------
// Factorization memo
// ---------------------------------------------------------------------------

/// Which shifted system a cached factor belongs to: `I + gamma*H` or
/// `I - gamma*H` (the latter only exists for `gamma < 1/L`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Shift {
    Plus,
    Minus,
}

impl Shift {
    fn sign(self) -> f64 {
        match self {
            Shift::Plus => 1.0,
            Shift::Minus => -1.0,
        }
    }
}

/// Factorizations memoized by the exact bit pattern of gamma. Concurrent
/// lookups share the read lock; two threads racing on a miss may both
/// factor, and the second insert simply replaces an identical entry.
#[derive(Debug, Default)]
struct FactorCache {
    entries: RwLock<HashMap<(u64, Shift), Arc<SpdFactorization>>>,
}

impl FactorCache {
    fn get_or_insert(
        &self,
        gamma: f64,
        shift: Shift,
        build: impl FnOnce() -> Result<SpdFactorization>,
    ) -> Result<Arc<SpdFactorization>> {
        let key = (gamma.to_bits(), shift);
        if let Some(f) = self.entries.read().expect("factor cache poisoned").get(&key) {
            return Ok(Arc::clone(f));
        }
        let f = Arc::new(build()?);
        self.entries
            .write()
            .expect("factor cache poisoned")
            .insert(key, Arc::clone(&f));
        Ok(f)
    }

    fn len(&self) -> usize {
        self.entries.read().expect("factor cache poisoned").len()
    }
}

fn shifted_identity(h: &DenseMatrix, scale: f64) -> DenseMatrix {
    let mut m = h * scale;
    for i in 0..m.nrows() {
        m[(i, i)] += 1.0;
    }
    m
}

fn factor_shifted(h: &DenseMatrix, gamma: f64, shift: Shift, limit: f64) -> Result<SpdFactorization> {
    factor_spd(&shifted_identity(h, shift.sign() * gamma)).map_err(|e| match (shift, e) {
        (Shift::Minus, Error::NotPositiveDefinite { .. }) => Error::GammaTooLarge { gamma, limit },
        (_, e) => e,
    })
}

fn inverse_limit(l: f64) -> f64 {
    if l > 0.0 {
        1.0 / l
    } else {
        f64::INFINITY
    }
}

// ---------------------------------------------------------------------------
// ConvexQuadratic
// ---------------------------------------------------------------------------

/// `f(x) = x'Qx/2 + q'x` with `Q` symmetric positive semidefinite.
#[derive(Debug)]
pub struct ConvexQuadratic {
    q_mat: DenseMatrix,
    q_vec: Vector,
    mu: f64,
    lipschitz: f64,
    cache: FactorCache,
}

impl Clone for ConvexQuadratic {
    fn clone(&self) -> Self {
        Self {
            q_mat: self.q_mat.clone(),
            q_vec: self.q_vec.clone(),
            mu: self.mu,
            lipschitz: self.lipschitz,
            cache: FactorCache::default(),
        }
    }
}

impl ConvexQuadratic {
    pub fn new(q_mat: DenseMatrix, q_vec: Vector) -> Result<Self> {
        check_symmetric(&q_mat)?;
        check_len(&q_vec, q_mat.nrows())?;
        if q_vec.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let q_mat = symmetrize(&q_mat);
        let (mu, lipschitz) = extreme_eigenvalues(&q_mat)?;
        Ok(Self {
            q_mat,
            q_vec,
            mu,
            lipschitz,
            cache: FactorCache::default(),
        })
    }

    pub fn hessian(&self) -> &DenseMatrix {
        &self.q_mat
    }

    pub fn linear(&self) -> &Vector {
        &self.q_vec
    }

    /// `(mu_f, L_f)`, the extreme eigenvalues of `Q`.
    pub fn curvature(&self) -> (f64, f64) {
        (self.mu, self.lipschitz)
    }

    pub fn dim(&self) -> usize {
        self.q_vec.len()
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_len(x, self.dim())?;
        Ok(0.5 * x.dot(&(&self.q_mat * x)) + self.q_vec.dot(x))
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        check_len(x, self.dim())?;
        Ok(&self.q_mat * x + &self.q_vec)
    }

    pub fn hess_apply(&self, v: &Vector) -> Result<Vector> {
        check_len(v, self.dim())?;
        Ok(&self.q_mat * v)
    }

    /// `(I + gamma Q)^{-1} v`, the Jacobian of the prox applied to `v`.
    pub fn resolvent_apply(&self, gamma: f64, v: &Vector) -> Result<Vector> {
        self.shifted_solve(gamma, Shift::Plus, v)
    }

    /// `(I - gamma Q)^{-1} v`; fails with `GammaTooLarge` unless `gamma < 1/L_f`.
    pub fn reflected_inverse_apply(&self, gamma: f64, v: &Vector) -> Result<Vector> {
        self.shifted_solve(gamma, Shift::Minus, v)
    }

    /// `(I + gamma Q)^{-1}(x - gamma q)`.
    pub fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_len(x, self.dim())?;
        self.shifted_solve(gamma, Shift::Plus, &(x - &self.q_vec * gamma))
    }

    fn shifted_solve(&self, gamma: f64, shift: Shift, v: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_len(v, self.dim())?;
        let f = self.cache.get_or_insert(gamma, shift, || {
            factor_shifted(&self.q_mat, gamma, shift, inverse_limit(self.lipschitz))
        })?;
        let mut out = v.clone();
        f.solve_in_place(&mut out)?;
        Ok(out)
    }

    /// Number of memoized factorizations.
    pub fn cached_factorizations(&self) -> usize {
        self.cache.len()
    }
}

impl ProxOperator for ConvexQuadratic {
    fn dim(&self) -> usize {
        ConvexQuadratic::dim(self)
    }
    fn value(&self, x: &Vector) -> Result<f64> {
        ConvexQuadratic::value(self, x)
    }
    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        ConvexQuadratic::prox(self, gamma, x)
    }
}

// ---------------------------------------------------------------------------
// LeastSquaresQuadratic
// ---------------------------------------------------------------------------

/// `f(x) = |Ax - b|^2 / 2`, equivalent to the quadratic with `Q = A'A` and
/// `q = -A'b`.
///
/// When `A` is wide (`m < n`) the shifted systems `I +- gamma A'A` are
/// inverted through the `m x m` matrix `I +- gamma AA'` by the
/// Sherman-Morrison-Woodbury identity; otherwise the `n x n` system is
/// factored directly.
#[derive(Debug)]
pub struct LeastSquaresQuadratic {
    a: DenseMatrix,
    b: Vector,
    atb: Vector,
    gram: DenseMatrix,
    wide: bool,
    mu: f64,
    lipschitz: f64,
    cache: FactorCache,
}

impl Clone for LeastSquaresQuadratic {
    fn clone(&self) -> Self {
        Self {
            a: self.a.clone(),
            b: self.b.clone(),
            atb: self.atb.clone(),
            gram: self.gram.clone(),
            wide: self.wide,
            mu: self.mu,
            lipschitz: self.lipschitz,
            cache: FactorCache::default(),
        }
    }
}

impl LeastSquaresQuadratic {
    pub fn new(a: DenseMatrix, b: Vector) -> Result<Self> {
        check_len(&b, a.nrows())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let wide = a.nrows() < a.ncols();
        let gram = if wide {
            &a * a.transpose()
        } else {
            a.transpose() * &a
        };
        let gram = symmetrize(&gram);
        let (mu_gram, lipschitz) = extreme_eigenvalues(&gram)?;
        // A'A has n - m zero eigenvalues when A is wide.
        let mu = if wide { 0.0 } else { mu_gram };
        let atb = a.transpose() * &b;
        Ok(Self {
            a,
            b,
            atb,
            gram,
            wide,
            mu,
            lipschitz,
            cache: FactorCache::default(),
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    pub fn curvature(&self) -> (f64, f64) {
        (self.mu, self.lipschitz)
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    /// The same function written as `x'Qx/2 + q'x` (dropping the constant
    /// `|b|^2/2`, so values differ from [`Self::value`] by that constant).
    pub fn to_convex_quadratic(&self) -> Result<ConvexQuadratic> {
        ConvexQuadratic::new(self.a.transpose() * &self.a, -&self.atb)
    }

    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_len(x, self.dim())?;
        Ok(0.5 * (&self.a * x - &self.b).norm_squared())
    }

    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        check_len(x, self.dim())?;
        Ok(self.a.tr_mul(&(&self.a * x - &self.b)))
    }

    pub fn hess_apply(&self, v: &Vector) -> Result<Vector> {
        check_len(v, self.dim())?;
        Ok(self.a.tr_mul(&(&self.a * v)))
    }

    /// `(I + gamma A'A)^{-1} v`.
    pub fn resolvent_apply(&self, gamma: f64, v: &Vector) -> Result<Vector> {
        self.shifted_solve(gamma, Shift::Plus, v)
    }

    /// `(I - gamma A'A)^{-1} v`; requires `gamma < 1/L_f`.
    pub fn reflected_inverse_apply(&self, gamma: f64, v: &Vector) -> Result<Vector> {
        self.shifted_solve(gamma, Shift::Minus, v)
    }

    /// `(A'A + I/gamma)^{-1}(A'b + x/gamma)`.
    pub fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_len(x, self.dim())?;
        // Multiplying through by gamma: (I + gamma A'A)^{-1}(x + gamma A'b).
        self.shifted_solve(gamma, Shift::Plus, &(x + &self.atb * gamma))
    }

    fn shifted_solve(&self, gamma: f64, shift: Shift, v: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_len(v, self.dim())?;
        let f = self.cache.get_or_insert(gamma, shift, || {
            factor_shifted(&self.gram, gamma, shift, inverse_limit(self.lipschitz))
        })?;
        if !self.wide {
            let mut out = v.clone();
            f.solve_in_place(&mut out)?;
            return Ok(out);
        }
        // (I + s g A'A)^{-1} v = v - s g A' (I + s g AA')^{-1} A v
        let mut t = &self.a * v;
        f.solve_in_place(&mut t)?;
        Ok(v - self.a.tr_mul(&t) * (shift.sign() * gamma))
    }

    pub fn cached_factorizations(&self) -> usize {
        self.cache.len()
    }
}

impl ProxOperator for LeastSquaresQuadratic {
    fn dim(&self) -> usize {
        LeastSquaresQuadratic::dim(self)
    }
    fn value(&self, x: &Vector) -> Result<f64> {
        LeastSquaresQuadratic::value(self, x)
    }
    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        LeastSquaresQuadratic::prox(self, gamma, x)
    }
}

// ---------------------------------------------------------------------------
// SmoothTerm
// ---------------------------------------------------------------------------

/// The smooth summand of a composite problem.
#[derive(Debug, Clone)]
pub enum SmoothTerm {
    Quadratic(ConvexQuadratic),
    LeastSquares(LeastSquaresQuadratic),
}

macro_rules! delegate {
    ($self:ident, $f:ident => $body:expr) => {
        match $self {
            SmoothTerm::Quadratic($f) => $body,
            SmoothTerm::LeastSquares($f) => $body,
        }
    };
}

impl SmoothTerm {
    pub fn dim(&self) -> usize {
        delegate!(self, f => f.dim())
    }
    pub fn curvature(&self) -> (f64, f64) {
        delegate!(self, f => f.curvature())
    }
    pub fn value(&self, x: &Vector) -> Result<f64> {
        delegate!(self, f => f.value(x))
    }
    pub fn gradient(&self, x: &Vector) -> Result<Vector> {
        delegate!(self, f => f.gradient(x))
    }
    pub fn hess_apply(&self, v: &Vector) -> Result<Vector> {
        delegate!(self, f => f.hess_apply(v))
    }
    pub fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        delegate!(self, f => f.prox(gamma, x))
    }
    pub fn resolvent_apply(&self, gamma: f64, v: &Vector) -> Result<Vector> {
        delegate!(self, f => f.resolvent_apply(gamma, v))
    }
    pub fn reflected_inverse_apply(&self, gamma: f64, v: &Vector) -> Result<Vector> {
        delegate!(self, f => f.reflected_inverse_apply(gamma, v))
    }
}

impl From<ConvexQuadratic> for SmoothTerm {
    fn from(f: ConvexQuadratic) -> Self {
        SmoothTerm::Quadratic(f)
    }
}

impl From<LeastSquaresQuadratic> for SmoothTerm {
    fn from(f: LeastSquaresQuadratic) -> Self {
        SmoothTerm::LeastSquares(f)
    }
}

impl ProxOperator for SmoothTerm {
    fn dim(&self) -> usize {
        SmoothTerm::dim(self)
    }
    fn value(&self, x: &Vector) -> Result<f64> {
        SmoothTerm::value(self, x)
    }
    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        SmoothTerm::prox(self, gamma, x)
    }
}

// ---------------------------------------------------------------------------
// ProxFunction
// ---------------------------------------------------------------------------

/// The nonsmooth summand.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxFunction {
    /// Indicator of the box `[lower, upper]`.
    BoxIndicator { lower: Vector, upper: Vector },
    /// `rho * |x|_1`.
    L1Norm { rho: f64, dim: usize },
    Zero { dim: usize },
}

impl ProxFunction {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self> {
        check_len(&upper, lower.len())?;
        if lower.iter().chain(upper.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if lower.iter().zip(upper.iter()).any(|(l, u)| l > u) {
            return Err(Error::BadParameters("box requires lower <= upper".into()));
        }
        Ok(ProxFunction::BoxIndicator { lower, upper })
    }

    pub fn l1(rho: f64, dim: usize) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::BadParameters(format!("rho must be positive, got {rho}")));
        }
        Ok(ProxFunction::L1Norm { rho, dim })
    }

    pub fn zero(dim: usize) -> Self {
        ProxFunction::Zero { dim }
    }

    pub fn dim(&self) -> usize {
        match self {
            ProxFunction::BoxIndicator { lower, .. } => lower.len(),
            ProxFunction::L1Norm { dim, .. } | ProxFunction::Zero { dim } => *dim,
        }
    }

    /// Clamp for the box (independent of gamma), soft-threshold at
    /// `gamma * rho` for the l1 norm, identity for zero.
    pub fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_len(x, self.dim())?;
        Ok(match self {
            ProxFunction::BoxIndicator { lower, upper } => {
                Vector::from_fn(x.len(), |i, _| x[i].max(lower[i]).min(upper[i]))
            }
            ProxFunction::L1Norm { rho, .. } => {
                let t = gamma * rho;
                x.map(|v| v.signum() * (v.abs() - t).max(0.0))
            }
            ProxFunction::Zero { .. } => x.clone(),
        })
    }

    /// Box membership is tested with slack `1e-9 * (1 + |u - l|_inf)`.
    pub fn value(&self, x: &Vector) -> Result<f64> {
        check_len(x, self.dim())?;
        Ok(match self {
            ProxFunction::BoxIndicator { lower, upper } => {
                let tol = 1e-9 * (1.0 + (upper - lower).amax());
                let inside = x
                    .iter()
                    .zip(lower.iter().zip(upper.iter()))
                    .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ProxFunction::L1Norm { rho, .. } => rho * x.lp_norm(1),
            ProxFunction::Zero { .. } => 0.0,
        })
    }
}

impl ProxOperator for ProxFunction {
    fn dim(&self) -> usize {
        ProxFunction::dim(self)
    }
    fn value(&self, x: &Vector) -> Result<f64> {
        ProxFunction::value(self, x)
    }
    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        ProxFunction::prox(self, gamma, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn half_norm(n: usize) -> ConvexQuadratic {
        ConvexQuadratic::new(DenseMatrix::identity(n, n), Vector::zeros(n)).unwrap()
    }

    #[test]
    fn quadratic_values() {
        assert_eq!(half_norm(2).value(&v(&[3.0, 4.0])).unwrap(), 12.5);
        let lin = ConvexQuadratic::new(DenseMatrix::zeros(2, 2), v(&[1.0, 1.0])).unwrap();
        assert_eq!(lin.value(&v(&[2.0, 3.0])).unwrap(), 5.0);
        assert!(matches!(
            lin.value(&v(&[1.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn quadratic_prox_closed_forms() {
        let p = half_norm(2).prox(1.0, &v(&[2.0, 4.0])).unwrap();
        assert!((p - v(&[1.0, 2.0])).amax() < 1e-15);

        let q = v(&[1.5, -2.0, 0.25]);
        let lin = ConvexQuadratic::new(DenseMatrix::zeros(3, 3), q.clone()).unwrap();
        let x = v(&[0.1, 0.2, 0.3]);
        let p = lin.prox(0.3, &x).unwrap();
        assert!((p - (&x - &q * 0.3)).amax() < 1e-15);
    }

    #[test]
    fn prox_rejects_bad_gamma() {
        assert!(matches!(
            half_norm(1).prox(0.0, &v(&[1.0])),
            Err(Error::NonpositiveGamma(_))
        ));
        assert!(matches!(
            ProxFunction::zero(1).prox(-1.0, &v(&[1.0])),
            Err(Error::NonpositiveGamma(_))
        ));
    }

    #[test]
    fn factorizations_are_memoized_per_gamma() {
        let f = half_norm(3);
        let x = v(&[1.0, 2.0, 3.0]);
        f.prox(0.5, &x).unwrap();
        f.prox(0.5, &x).unwrap();
        f.resolvent_apply(0.5, &x).unwrap();
        assert_eq!(f.cached_factorizations(), 1);
        f.prox(0.25, &x).unwrap();
        f.reflected_inverse_apply(0.25, &x).unwrap();
        assert_eq!(f.cached_factorizations(), 3);
    }

    #[test]
    fn reflected_inverse_requires_small_gamma() {
        let f = ConvexQuadratic::new(
            DenseMatrix::from_diagonal(&v(&[1.0, 4.0])),
            Vector::zeros(2),
        )
        .unwrap();
        let w = f.reflected_inverse_apply(0.2, &v(&[1.0, 1.0])).unwrap();
        assert!((w - v(&[1.0 / 0.8, 1.0 / 0.2])).amax() < 1e-12);
        assert!(matches!(
            f.reflected_inverse_apply(0.3, &v(&[1.0, 1.0])),
            Err(Error::GammaTooLarge { .. })
        ));
    }

    #[test]
    fn least_squares_trivial_cases() {
        let ls = LeastSquaresQuadratic::new(DenseMatrix::identity(1, 1), v(&[0.0])).unwrap();
        assert!((ls.prox(1.0, &v(&[2.0])).unwrap()[0] - 1.0).abs() < 1e-15);

        let ls = LeastSquaresQuadratic::new(DenseMatrix::zeros(2, 3), v(&[1.0, 2.0])).unwrap();
        let x = v(&[0.5, -1.0, 3.0]);
        assert!((ls.prox(0.7, &x).unwrap() - &x).amax() < 1e-15);
        assert_eq!(ls.curvature(), (0.0, 0.0));
    }

    #[test]
    fn box_prox_and_value() {
        let g = ProxFunction::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert_eq!(g.prox(0.7, &v(&[3.0, -2.0])).unwrap(), v(&[1.0, 0.0]));
        assert_eq!(g.value(&v(&[0.5, 1.0])).unwrap(), 0.0);
        assert_eq!(g.value(&v(&[2.0, 0.0])).unwrap(), f64::INFINITY);
        assert_eq!(g.value(&v(&[1.0 + 1e-12, 0.0])).unwrap(), 0.0);
        assert!(ProxFunction::boxed(v(&[1.0]), v(&[0.0])).is_err());
    }

    #[test]
    fn l1_prox_and_value() {
        let g = ProxFunction::l1(1.0, 3).unwrap();
        let p = g.prox(0.5, &v(&[2.0, -0.3, 0.0])).unwrap();
        assert_eq!(p, v(&[1.5, 0.0, 0.0]));
        let g = ProxFunction::l1(2.0, 2).unwrap();
        assert_eq!(g.value(&v(&[1.0, -3.0])).unwrap(), 8.0);
        assert!(ProxFunction::l1(0.0, 2).is_err());
    }

    #[test]
    fn zero_function() {
        let g = ProxFunction::zero(2);
        let x = v(&[4.0, -1.0]);
        assert_eq!(g.prox(2.0, &x).unwrap(), x);
        assert_eq!(g.value(&x).unwrap(), 0.0);
        assert_eq!(moreau_value(&g, 0.3, &x).unwrap(), 0.0);
        assert_eq!(moreau_gradient(&g, 0.3, &x).unwrap(), Vector::zeros(2));
    }

    #[test]
    fn moreau_of_half_norm_and_box() {
        let h = half_norm(1);
        assert!((moreau_value(&h, 1.0, &v(&[2.0])).unwrap() - 1.0).abs() < 1e-15);
        let x = v(&[3.0]);
        assert!((moreau_gradient(&h, 1.0, &x).unwrap()[0] - 1.5).abs() < 1e-15);

        let b = ProxFunction::boxed(v(&[0.0]), v(&[1.0])).unwrap();
        assert!((moreau_value(&b, 1.0, &v(&[2.0])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn smooth_term_dispatch() {
        let f: SmoothTerm = half_norm(2).into();
        assert_eq!(f.dim(), 2);
        assert_eq!(f.curvature(), (1.0, 1.0));
        assert_eq!(f.gradient(&v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));
    }
}
