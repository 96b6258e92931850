//! Independent oracles: deliberately naive implementations that share no
//! code with the library paths they check.
#![allow(dead_code, clippy::needless_range_loop)]

use dre::{DenseMatrix, Vector};

/// Gaussian elimination with partial pivoting on a copy of `a`.
pub fn gauss_solve(a: &DenseMatrix, b: &Vector) -> Vector {
    let n = a.nrows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| a[(i, j)]).chain([b[i]]).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        m.swap(col, piv);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            for k in col..=n {
                m[row][k] -= factor * m[col][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = m[i][n];
        for j in i + 1..n {
            s -= m[i][j] * x[j];
        }
        x[i] = s / m[i][i];
    }
    Vector::from_vec(x)
}

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, sorted.
pub fn jacobi_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += m[(i, j)] * m[(i, j)];
                }
            }
        }
        if off.sqrt() <= 1e-14 * m.norm() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * m[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Exact box-QP minimizer by enumerating all `3^n` faces
/// (each coordinate at its lower bound, upper bound or free).
pub fn box_qp_by_enumeration(
    q: &DenseMatrix,
    c: &Vector,
    lower: &Vector,
    upper: &Vector,
) -> (Vector, f64) {
    let n = q.nrows();
    assert!(n <= 10, "enumeration is exponential");
    let objective = |x: &Vector| 0.5 * x.dot(&(q * x)) + c.dot(x);
    let mut best: Option<(Vector, f64)> = None;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut x = Vector::from_fn(n, |i, _| match state[i] {
            0 => lower[i],
            1 => upper[i],
            _ => 0.0,
        });
        if !free.is_empty() {
            let k = free.len();
            let qff = DenseMatrix::from_fn(k, k, |a, b| q[(free[a], free[b])]);
            let rhs = Vector::from_fn(k, |a, _| {
                let i = free[a];
                let fixed: f64 = (0..n).filter(|j| state[*j] != 2).map(|j| q[(i, j)] * x[j]).sum();
                -(c[i] + fixed)
            });
            let xf = gauss_solve(&qff, &rhs);
            for (a, &i) in free.iter().enumerate() {
                x[i] = xf[a];
            }
        }
        let feasible = (0..n).all(|i| x[i] >= lower[i] - 1e-12 && x[i] <= upper[i] + 1e-12);
        if feasible {
            let v = objective(&x);
            if best.as_ref().is_none_or(|(_, b)| v < *b) {
                best = Some((x, v));
            }
        }
    }
    best.expect("every vertex of the box is feasible")
}

/// Central-difference gradient of a scalar function.
pub fn central_difference(f: impl Fn(&Vector) -> f64, x: &Vector) -> Vector {
    let h = 1e-6 * (1.0 + x.amax());
    Vector::from_fn(x.len(), |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Explicit `min_z h(z) + |z - x|^2/(2 gamma)` for separable `h` by
/// golden-section search per coordinate on `[x_i - w, x_i + w]`.
pub fn separable_prox_search(h: impl Fn(usize, f64) -> f64, gamma: f64, x: &Vector, w: f64) -> Vector {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    Vector::from_fn(x.len(), |i, _| {
        let obj = |z: f64| h(i, z) + (z - x[i]).powi(2) / (2.0 * gamma);
        let (mut a, mut b) = (x[i] - w, x[i] + w);
        for _ in 0..200 {
            let c = b - phi * (b - a);
            let d = a + phi * (b - a);
            if obj(c) < obj(d) {
                b = d;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    })
}
