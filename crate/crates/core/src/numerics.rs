//! Dense linear algebra used by the smooth terms: Cholesky factorization of
//! symmetric positive-definite systems and extreme eigenvalues of symmetric
//! positive semidefinite matrices.
//!
//! Matrices and vectors are plain `nalgebra` dense types. The factorization is
//! hand-rolled so that the pivot that fails can be reported and so that the
//! triangular solves stay allocation-light inside solver loops.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Relative tolerance for the symmetry test applied before factoring.
pub const SYMMETRY_TOL: f64 = 1e-12;

const EIGEN_MAX_ITER: usize = 100_000;

/// Largest absolute asymmetry `|M_ij - M_ji|` of a square matrix.
pub fn asymmetry(m: &DenseMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Checks that `m` is square, finite and symmetric to [`SYMMETRY_TOL`]
/// relative to its largest entry.
pub fn check_symmetric(m: &DenseMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = m.amax();
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// `(M + M') / 2`.
pub fn symmetrize(m: &DenseMatrix) -> DenseMatrix {
    (m + m.transpose()) * 0.5
}

pub(crate) fn check_len(v: &Vector, expected: usize) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `M = L L'`, stored row-major.
#[derive(Debug, Clone)]
pub struct SpdFactorization {
    n: usize,
    lower: Vec<f64>,
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// The factor `L` as a dense matrix.
    pub fn lower(&self) -> DenseMatrix {
        DenseMatrix::from_fn(self.n, self.n, |i, j| {
            if j <= i {
                self.lower[i * self.n + j]
            } else {
                0.0
            }
        })
    }

    /// `L L'`, the matrix that was factored (after symmetrization).
    pub fn reconstruct(&self) -> DenseMatrix {
        let l = self.lower();
        &l * l.transpose()
    }

    /// Solves `M v = b` in place.
    pub fn solve_in_place(&self, b: &mut Vector) -> Result<()> {
        check_len(b, self.n)?;
        let n = self.n;
        let l = &self.lower;
        let x = b.as_mut_slice();
        // L y = b
        for i in 0..n {
            let row = &l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(a, b)| a * b).sum();
            x[i] = (x[i] - s) / l[i * n + i];
        }
        // L' v = y, sweeping rows of L from the bottom
        for i in (0..n).rev() {
            x[i] /= l[i * n + i];
            let xi = x[i];
            let row = &l[i * n..i * n + i];
            for (xj, a) in x[..i].iter_mut().zip(row) {
                *xj -= a * xi;
            }
        }
        Ok(())
    }
}

/// Cholesky factorization of a symmetric positive-definite matrix. The input
/// is symmetrized as `(M + M')/2` once it passes the symmetry check.
pub fn factor_spd(m: &DenseMatrix) -> Result<SpdFactorization> {
    check_symmetric(m)?;
    let n = m.nrows();
    let mut lower = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let a = 0.5 * (m[(i, j)] + m[(j, i)]);
            let s: f64 = (0..j).map(|k| lower[i * n + k] * lower[j * n + k]).sum();
            if i == j {
                let d = a - s;
                if !(d > 0.0) {
                    return Err(Error::NotPositiveDefinite { pivot: i });
                }
                lower[i * n + i] = d.sqrt();
            } else {
                lower[i * n + j] = (a - s) / lower[j * n + j];
            }
        }
    }
    Ok(SpdFactorization { n, lower })
}

pub fn solve_with(f: &SpdFactorization, b: &Vector) -> Result<Vector> {
    let mut v = b.clone();
    f.solve_in_place(&mut v)?;
    Ok(v)
}

/// Smallest and largest eigenvalue of a symmetric positive semidefinite
/// matrix. Round-off negatives down to `-1e-10 * max(1, L)` are clamped to
/// zero; anything more negative is rejected.
pub fn extreme_eigenvalues(q: &DenseMatrix) -> Result<(f64, f64)> {
    check_symmetric(q)?;
    if q.nrows() == 0 {
        return Ok((0.0, 0.0));
    }
    let eig = SymmetricEigen::try_new(symmetrize(q), f64::EPSILON, EIGEN_MAX_ITER).ok_or(
        Error::NoConvergence {
            iterations: EIGEN_MAX_ITER,
        },
    )?;
    let values = eig.eigenvalues;
    let mut mu = values.min();
    let big = values.max();
    if mu < 0.0 {
        if mu >= -1e-10 * big.max(1.0) {
            mu = 0.0;
        } else {
            return Err(Error::NotPositiveSemidefinite { min_eigenvalue: mu });
        }
    }
    Ok((mu, big.max(mu)))
}
