//! Seeded instance generators for the two benchmark families and a
//! high-accuracy reference solve.
//!
//! Randomness comes from ChaCha20 seeded with the instance seed; every
//! component of an instance (spectrum, rotation, linear term, support, ...)
//! draws from its own ChaCha stream, so changing how one component is drawn
//! never perturbs the others. Instances are bit-reproducible for a given
//! seed on a given platform.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::envelope::CompositeProblem;
use crate::error::{Error, Result};
use crate::functions::{ConvexQuadratic, LeastSquaresQuadratic, ProxFunction};
use crate::numerics::{symmetrize, DenseMatrix, Vector};
use crate::solvers::{run_fast_drs, BetaSchedule, SolverConfig, Status};

/// Relative fixed-point residual the reference solve must reach.
pub const REFERENCE_TOL: f64 = 1e-13;
pub const REFERENCE_MAX_ITER: usize = 1_000_000;

/// Norm of the dual vector `w` in the planted construction; support columns
/// satisfy `a_j'w = sign(x_j)` and need `|w| > 1` to stay unit-norm.
const DUAL_NORM: f64 = 1.5;
/// Off-support correlations are kept below this, giving strict
/// complementarity and hence a unique planted optimum.
const OFF_SUPPORT_MAX: f64 = 0.9;
const MAX_COLUMN_DRAWS: usize = 10_000;

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
enum Stream {
    Spectrum = 1,
    Rotation,
    Linear,
    Support,
    Signs,
    Magnitudes,
    Columns,
    Dual,
}

fn rng(seed: u64, stream: Stream) -> ChaCha20Rng {
    let mut r = ChaCha20Rng::seed_from_u64(seed);
    r.set_stream(stream as u64);
    r
}

fn normal_vector(r: &mut ChaCha20Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| r.sample(StandardNormal))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxQpInstance {
    pub q_mat: DenseMatrix,
    pub q_vec: Vector,
    pub lower: Vector,
    pub upper: Vector,
    pub seed: u64,
    pub cond: f64,
}

impl BoxQpInstance {
    pub fn dim(&self) -> usize {
        self.q_vec.len()
    }

    pub fn to_problem(&self) -> Result<CompositeProblem> {
        let f = ConvexQuadratic::new(self.q_mat.clone(), self.q_vec.clone())?;
        let g = ProxFunction::boxed(self.lower.clone(), self.upper.clone())?;
        CompositeProblem::new(f, g)
    }

    /// Writes `Q.txt`, `q.txt`, `l.txt`, `u.txt` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_matrix_file(&dir.join("Q.txt"), &self.q_mat)?;
        write_vector_file(&dir.join("q.txt"), &self.q_vec)?;
        write_vector_file(&dir.join("l.txt"), &self.lower)?;
        write_vector_file(&dir.join("u.txt"), &self.upper)
    }
}

/// Box-constrained QP: `Q = V diag(e) V'` with `V` a random orthogonal
/// matrix and `e` log-uniform in `[1/cond, 1]` (both endpoints attained when
/// `n >= 2`, so `L_f = 1` and `mu_f = 1/cond`), `q` standard normal and the
/// box `[-box_width, box_width]^n`.
pub fn gen_box_qp(n: usize, seed: u64, cond: f64, box_width: f64) -> Result<BoxQpInstance> {
    if n == 0 {
        return Err(Error::BadParameters("n must be at least 1".into()));
    }
    if !(cond >= 1.0 && cond.is_finite()) {
        return Err(Error::BadParameters(format!("cond must be >= 1, got {cond}")));
    }
    if !(box_width > 0.0 && box_width.is_finite()) {
        return Err(Error::BadParameters(format!(
            "box_width must be positive, got {box_width}"
        )));
    }
    let log_min = -cond.ln();
    let mut spectrum_rng = rng(seed, Stream::Spectrum);
    let spectrum = Vector::from_fn(n, |i, _| match i {
        0 => 1.0,
        i if i == n - 1 => 1.0 / cond,
        _ => (log_min * spectrum_rng.gen::<f64>()).exp(),
    });

    let mut rot_rng = rng(seed, Stream::Rotation);
    let gauss = DenseMatrix::from_fn(n, n, |_, _| rot_rng.sample(StandardNormal));
    let v = gauss.qr().q();
    let scaled = &v * DenseMatrix::from_diagonal(&spectrum);
    let q_mat = symmetrize(&(scaled * v.transpose()));

    let q_vec = normal_vector(&mut rng(seed, Stream::Linear), n);
    Ok(BoxQpInstance {
        q_mat,
        q_vec,
        lower: Vector::from_element(n, -box_width),
        upper: Vector::from_element(n, box_width),
        seed,
        cond,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseLsInstance {
    pub a: DenseMatrix,
    pub b: Vector,
    pub rho: f64,
    pub x_plant: Vector,
    pub seed: u64,
    /// `max_j |a_j'(b - A x_plant)/rho - sign(x_j)|` over the support.
    pub certificate_residual: f64,
}

impl SparseLsInstance {
    pub fn to_problem(&self) -> Result<CompositeProblem> {
        let f = LeastSquaresQuadratic::new(self.a.clone(), self.b.clone())?;
        let g = ProxFunction::l1(self.rho, self.a.ncols())?;
        CompositeProblem::new(f, g)
    }

    /// `|A x_plant - b|^2/2 + rho |x_plant|_1`.
    pub fn planted_objective(&self) -> f64 {
        0.5 * (&self.a * &self.x_plant - &self.b).norm_squared() + self.rho * self.x_plant.lp_norm(1)
    }

    pub fn write_dir(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        write_matrix_file(&dir.join("A.txt"), &self.a)?;
        write_vector_file(&dir.join("b.txt"), &self.b)?;
        write_vector_file(&dir.join("x_plant.txt"), &self.x_plant)?;
        fs::write(dir.join("rho.txt"), format!("1 1\n{:e}\n", self.rho))
    }
}

/// l1-regularized least squares with a planted optimum.
///
/// Draws a dual vector `w` with `|w| = 1.5`, a support of size `nnz` with
/// random signs and magnitudes in `[1, 2]`, and unit columns such that
/// `a_j'w = sign(x_j)` on the support and `|a_j'w| <= 0.9` off it. Then
/// `b = A x_plant + rho w` makes `A'(A x_plant - b) + rho s = 0` with
/// `s = A'w` a subgradient of `|.|_1` at `x_plant`.
pub fn gen_sparse_ls(m: usize, n: usize, seed: u64, rho: f64, nnz: usize) -> Result<SparseLsInstance> {
    if !(1 <= nnz && nnz <= m && m < n) {
        return Err(Error::BadParameters(format!(
            "need 1 <= nnz <= m < n, got nnz={nnz}, m={m}, n={n}"
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::BadParameters(format!("rho must be positive, got {rho}")));
    }

    let mut dual_rng = rng(seed, Stream::Dual);
    let w_dir = normal_vector(&mut dual_rng, m).normalize();
    let w = &w_dir * DUAL_NORM;

    let support = sample(&mut rng(seed, Stream::Support), n, nnz).into_vec();
    let mut sign_rng = rng(seed, Stream::Signs);
    let mut mag_rng = rng(seed, Stream::Magnitudes);
    let mut x_plant = Vector::zeros(n);
    for &j in &support {
        let s = if sign_rng.gen::<bool>() { 1.0 } else { -1.0 };
        x_plant[j] = s * (1.0 + mag_rng.gen::<f64>());
    }

    let mut col_rng = rng(seed, Stream::Columns);
    let along = 1.0 / DUAL_NORM;
    let across = (1.0 - along * along).sqrt();
    let mut a = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let col = if x_plant[j] != 0.0 {
            let g = normal_vector(&mut col_rng, m);
            let perp = &g - &w_dir * g.dot(&w_dir);
            let norm = perp.norm();
            if norm == 0.0 {
                return Err(Error::CertificateFailed);
            }
            &w_dir * (x_plant[j].signum() * along) + perp * (across / norm)
        } else {
            let mut draws = 0;
            loop {
                let g = normal_vector(&mut col_rng, m);
                let norm = g.norm();
                if norm > 0.0 {
                    let c = g / norm;
                    if c.dot(&w).abs() <= OFF_SUPPORT_MAX {
                        break c;
                    }
                }
                draws += 1;
                if draws == MAX_COLUMN_DRAWS {
                    return Err(Error::CertificateFailed);
                }
            }
        };
        a.set_column(j, &col);
    }
    let b = &a * &x_plant + &w * rho;

    let s = a.tr_mul(&(&b - &a * &x_plant)) / rho;
    let mut certificate_residual = 0.0_f64;
    for j in 0..n {
        if x_plant[j] != 0.0 {
            certificate_residual = certificate_residual.max((s[j] - x_plant[j].signum()).abs());
        } else if s[j].abs() > 1.0 {
            return Err(Error::CertificateFailed);
        }
    }
    if certificate_residual > 1e-10 {
        return Err(Error::CertificateFailed);
    }

    Ok(SparseLsInstance {
        a,
        b,
        rho,
        x_plant,
        seed,
        certificate_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vector,
    /// Minimizer of the envelope, `x_star = P(x_tilde)`.
    pub x_tilde: Vector,
    pub f_star: f64,
    /// Final `|Z(x_tilde)| / (1 + |x_tilde|)`.
    pub residual: f64,
    pub iterations: usize,
    pub gamma: f64,
}

/// Solves to a relative fixed-point residual of [`REFERENCE_TOL`] with the
/// fast variant (strongly convex momentum when `mu_f > 0`), starting at 0.
pub fn reference_solve(prob: &CompositeProblem, gamma: f64) -> Result<ReferenceSolution> {
    prob.envelope_constants(gamma)?;
    let beta = if prob.mu_f() > 0.0 {
        BetaSchedule::StronglyConvex
    } else {
        BetaSchedule::Convex
    };
    let cfg = SolverConfig::new(gamma)
        .with_beta(beta)
        .with_tol(REFERENCE_TOL)
        .with_max_iter(REFERENCE_MAX_ITER)
        .with_record_dre(false);
    let trace = run_fast_drs(prob, &cfg, &Vector::zeros(prob.dim()))?;
    if trace.status != Status::Converged {
        return Err(Error::NoConvergence {
            iterations: trace.iterations(),
        });
    }
    let x_tilde = trace.state.x;
    let s = prob.split(gamma, &x_tilde)?;
    let f_star = prob.objective(&s.g)?;
    Ok(ReferenceSolution {
        residual: s.z.norm() / (1.0 + x_tilde.norm()),
        x_star: s.p,
        x_tilde,
        f_star,
        iterations: trace.state.k,
        gamma,
    })
}

// ---------------------------------------------------------------------------
// Plain-text matrix format: a "rows cols" header line, then one line per row
// of whitespace-separated decimal floats in shortest round-trip form.
// ---------------------------------------------------------------------------

pub fn write_matrix<W: Write>(mut w: W, m: &DenseMatrix) -> io::Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("header needs two integers, got {header:?}")));
    };
    let mut entries = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if i >= rows {
            return Err(Error::Parse(format!("more than {rows} rows")));
        }
        let before = entries.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::Parse(format!("bad number {tok:?} on row {i}")))?;
            entries.push(v);
        }
        if entries.len() - before != cols {
            return Err(Error::Parse(format!("row {i} has {} entries, expected {cols}", entries.len() - before)));
        }
    }
    if entries.len() != rows * cols {
        return Err(Error::Parse(format!("expected {rows} rows")));
    }
    Ok(DenseMatrix::from_row_slice(rows, cols, &entries))
}

fn write_matrix_file(path: &Path, m: &DenseMatrix) -> io::Result<()> {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m)?;
    fs::write(path, buf)
}

fn write_vector_file(path: &Path, v: &Vector) -> io::Result<()> {
    write_matrix_file(path, &DenseMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}
