//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use asymlyap::matops::{from_rows, Matrix, Vector};
use asymlyap::{DesignProblem, LtiSystem, QuadraticCost};

pub fn unstable_two_input() -> DesignProblem {
    DesignProblem::new(
        LtiSystem::new(
            from_rows(&[&[1.0, 2.0], &[0.0, 2.0]]),
            from_rows(&[&[4.0, 2.0], &[0.0, 2.0]]),
        )
        .unwrap(),
        QuadraticCost::new(Matrix::identity(2, 2) * 10.0, Matrix::identity(2, 2) * 0.05).unwrap(),
        Vector::from_column_slice(&[0.1, -0.2]),
    )
    .unwrap()
}

pub fn stable_pair() -> DesignProblem {
    let i = Matrix::identity(2, 2);
    DesignProblem::new(
        LtiSystem::new(-&i, i.clone()).unwrap(),
        QuadraticCost::new(i.clone(), i).unwrap(),
        Vector::from_column_slice(&[1.0, 0.0]),
    )
    .unwrap()
}

/// Componentwise solution of `F^T Z + Z F + C = 0` for diagonal `F`.
pub fn diagonal_lyapunov_oracle(diag: &[f64], c: &Matrix) -> Matrix {
    let n = diag.len();
    Matrix::from_fn(n, n, |i, j| -c[(i, j)] / (diag[i] + diag[j]))
}

/// `exp(F t)` by scaling and squaring with a Taylor kernel.
pub fn expm(f: &Matrix, t: f64) -> Matrix {
    let m = f * t;
    let norm = m.norm();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = &m / 2f64.powi(squarings as i32);
    let n = f.nrows();
    let mut term = Matrix::identity(n, n);
    let mut sum = Matrix::identity(n, n);
    for k in 1..20 {
        term = &term * &scaled / k as f64;
        sum += &term;
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `integral_0^inf exp(F^T t) C exp(F t) dt` by adaptive Simpson quadrature
/// on doubling intervals, truncated once the integrand norm drops below
/// `1e-12` (relative to the start).
pub fn quadrature_lyapunov_oracle(f: &Matrix, c: &Matrix) -> Matrix {
    let integrand = |t: f64| {
        let e = expm(f, t);
        e.transpose() * c * &e
    };
    let scale = integrand(0.0).norm().max(1e-300);
    let mut total = Matrix::zeros(f.nrows(), f.ncols());
    let mut a = 0.0;
    let mut width = 0.05;
    loop {
        let b = a + width;
        total += adaptive_simpson(&integrand, a, b, 1e-13 * scale, 30);
        if integrand(b).norm() < 1e-12 * scale && b > 1.0 {
            break;
        }
        a = b;
        width *= 1.5;
        if a > 1e4 {
            break;
        }
    }
    total
}

fn simpson(fa: &Matrix, fm: &Matrix, fb: &Matrix, a: f64, b: f64) -> Matrix {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

fn adaptive_simpson(f: &impl Fn(f64) -> Matrix, a: f64, b: f64, tol: f64, depth: u32) -> Matrix {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(&fa, &fm, &fb, a, b);
    refine(f, a, b, &fa, &fm, &fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> Matrix,
    a: f64,
    b: f64,
    fa: &Matrix,
    fm: &Matrix,
    fb: &Matrix,
    whole: Matrix,
    tol: f64,
    depth: u32,
) -> Matrix {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(fa, &flm, fm, a, m);
    let right = simpson(fm, &frm, fb, m, b);
    let delta = &left + &right - &whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, &flm, fm, left, tol / 2.0, depth - 1)
        + refine(f, m, b, fm, &frm, fb, right, tol / 2.0, depth - 1)
}
