//! Independent numerical oracles shared by the integration tests.
//!
//! Nothing here calls into the library's solvers: integrators, exponentials
//! and linear solves are written out directly so that they can cross-check
//! the closed forms.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Uniform random walk on `n` states, reflecting at both ends, with the chain
/// rewards of the left/right MDP averaged under the uniform policy.
pub fn uniform_walk(n: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut p = DMatrix::zeros(n, n);
    for x in 0..n {
        p[(x, x.saturating_sub(1))] += 0.5;
        p[(x, (x + 1).min(n - 1))] += 0.5;
    }
    let mut r = DVector::zeros(n);
    r[0] += 0.5 * 2.0;
    r[n - 1] += 0.5 * 1.0;
    (p, r)
}

/// Classic fourth-order Runge-Kutta with a fixed step, returning the state at `t_end`.
pub fn rk4<F>(f: F, y0: &DMatrix<f64>, t_end: f64, h: f64) -> DMatrix<f64>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let steps = (t_end / h).round() as usize;
    let h = t_end / steps as f64;
    let mut y = y0.clone();
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&(&y + &k1 * (h / 2.0)));
        let k3 = f(&(&y + &k2 * (h / 2.0)));
        let k4 = f(&(&y + &k3 * h));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    y
}

/// RK4 sampled at `t = 0, dt, 2dt, ...` up to `t_end`.
pub fn rk4_path<F>(f: F, y0: &DMatrix<f64>, t_end: f64, dt: f64, h: f64) -> Vec<DMatrix<f64>>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let n = (t_end / dt).round() as usize;
    let mut out = vec![y0.clone()];
    for _ in 0..n {
        let next = rk4(&f, out.last().unwrap(), dt, h);
        out.push(next);
    }
    out
}

/// `e^{tA}` by a 24-term Taylor series with scaling and squaring.
pub fn expm_taylor(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let scaled = a * t;
    let norm = scaled.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let squarings = norm.log2().ceil().max(0.0) as u32 + 1;
    let b = scaled / 2f64.powi(squarings as i32);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..=24 {
        term = &term * &b / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
            .unwrap();
        a.swap_rows(col, pivot);
        x.swap_rows(col, pivot);
        for row in col + 1..n {
            let f = a[(row, col)] / a[(col, col)];
            if f != 0.0 {
                for c in col..n {
                    a[(row, c)] -= f * a[(col, c)];
                }
                for c in 0..x.ncols() {
                    x[(row, c)] -= f * x[(col, c)];
                }
            }
        }
    }
    for col in (0..n).rev() {
        for c in 0..x.ncols() {
            let mut s = x[(col, c)];
            for k in col + 1..n {
                s -= a[(col, k)] * x[(k, c)];
            }
            x[(col, c)] = s / a[(col, col)];
        }
    }
    x
}

/// `(I - γP)^{-1}`.
pub fn resolvent(p: &DMatrix<f64>, gamma: f64) -> DMatrix<f64> {
    let n = p.nrows();
    solve(&(DMatrix::identity(n, n) - p * gamma), &DMatrix::identity(n, n))
}

/// Orthonormal basis of the columns by twice-repeated modified Gram-Schmidt.
pub fn gram_schmidt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut q = m.clone();
    for _ in 0..2 {
        for j in 0..q.ncols() {
            for i in 0..j {
                let proj = q.column(i).dot(&q.column(j));
                let qi = q.column(i).clone_owned();
                q.column_mut(j).axpy(-proj, &qi, 1.0);
            }
            let norm = q.column(j).norm();
            q.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    q
}

pub fn random_orthonormal(rng: &mut impl Rng, n: usize, k: usize) -> DMatrix<f64> {
    gram_schmidt(&gaussian(rng, n, k))
}

/// Power of a square matrix by repeated multiplication.
pub fn mat_pow(a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

pub fn sup_norm(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}
