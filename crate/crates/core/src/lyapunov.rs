//! Matrix-equation solvers.
//!
//! * `solve_lyapunov`: `F^T Z + Z F + C = 0` by Bartels-Stewart on the real
//!   Schur form of `F`.
//! * `solve_p_hat`: the bound matrix equation `A P + P^T A + W = 0` for a
//!   symmetric Hurwitz `A`; the symmetric solution is returned.
//! * `solve_care`: stabilizing solution of the continuous algebraic Riccati
//!   equation by Newton-Kleinman iteration.

use crate::matops::{self, MatError, Matrix, Vector};
use crate::system::{LtiSystem, QuadraticCost};
use nalgebra::Schur;
use thiserror::Error;

/// Relative residual target `1e-9 * (1 + ||C||_F)`.
pub const LYAP_TOL_FACTOR: f64 = 1e-9;

/// Relative CARE residual target `1e-9 * (1 + ||Q||_F)`.
pub const CARE_TOL_FACTOR: f64 = 1e-9;

const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },
    #[error("right-hand side is not symmetric (residual {0:.3e})")]
    NotSymmetricRhs(f64),
    #[error("closed-loop matrix is not symmetric (residual {0:.3e})")]
    NotSymmetric(f64),
    #[error("weight is not positive definite")]
    NotPositiveDefinite,
    #[error("no stabilizing initial gain available: {0}")]
    NoStabilizingSeed(String),
    #[error("Riccati iteration did not reach tolerance (residual {residual:.3e} after {iterations} steps)")]
    IterationLimit { iterations: usize, residual: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    Matrix(#[from] MatError),
}

pub fn lyap_tol(c: &Matrix) -> f64 {
    LYAP_TOL_FACTOR * (1.0 + matops::frobenius(c))
}

/// `||F^T Z + Z F + C||_F`.
pub fn lyapunov_residual(f: &Matrix, z: &Matrix, c: &Matrix) -> f64 {
    (f.transpose() * z + z * f + c).norm()
}

/// Solves `F^T Z + Z F + C = 0` for Hurwitz `F` and symmetric `C`.
///
/// The result is symmetric, and positive semidefinite whenever `C` is.
pub fn solve_lyapunov(f: &Matrix, c: &Matrix) -> Result<Matrix, LyapunovError> {
    matops::ensure_square(f)?;
    matops::ensure_finite(f)?;
    matops::ensure_finite(c)?;
    if c.shape() != f.shape() {
        return Err(LyapunovError::DimensionMismatch(format!(
            "F is {}x{}, C is {}x{}",
            f.nrows(),
            f.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let asym = matops::symmetry_residual(c);
    if asym > matops::sym_tol(c) {
        return Err(LyapunovError::NotSymmetricRhs(asym));
    }
    let hurwitz = matops::is_hurwitz(f)?;
    if !hurwitz.hurwitz {
        return Err(LyapunovError::NotHurwitz {
            abscissa: hurwitz.abscissa,
        });
    }

    let solver = SchurLyapunov::new(f)?;
    let c = matops::symmetric_part(c);
    let mut z = solver.solve(&c)?;
    // iterative refinement against rounding in ill-conditioned cases
    let tol = lyap_tol(&c);
    for _ in 0..REFINEMENT_STEPS {
        let residual = f.transpose() * &z + &z * f + &c;
        if residual.norm() <= 0.1 * tol {
            break;
        }
        let correction = solver.solve(&matops::symmetric_part(&residual))?;
        z += correction;
        z = matops::symmetric_part(&z);
    }
    Ok(z)
}

/// Real Schur factorization `F = U T U^T` reused across right-hand sides.
struct SchurLyapunov {
    u: Matrix,
    t: Matrix,
    blocks: Vec<(usize, usize)>,
}

impl SchurLyapunov {
    fn new(f: &Matrix) -> Result<Self, LyapunovError> {
        let n = f.nrows();
        let schur = Schur::try_new(f.clone(), f64::EPSILON, 200 * n.max(1))
            .ok_or(MatError::IterationLimit)?;
        let (u, t) = schur.unpack();
        let mut blocks = Vec::new();
        let mut i = 0;
        while i < n {
            if i + 1 < n && t[(i + 1, i)] != 0.0 {
                blocks.push((i, 2));
                i += 2;
            } else {
                blocks.push((i, 1));
                i += 1;
            }
        }
        Ok(Self { u, t, blocks })
    }

    /// Solves `F^T Z + Z F + C = 0` without any checks.
    fn solve(&self, c: &Matrix) -> Result<Matrix, LyapunovError> {
        let n = c.nrows();
        let ct = self.u.transpose() * c * &self.u;
        let t = &self.t;
        let mut z = Matrix::zeros(n, n);
        for &(ri, p) in &self.blocks {
            for &(cj, q) in &self.blocks {
                let mut rhs = -ct.view((ri, cj), (p, q)).into_owned();
                // (T^T Z)_{ij}: rows above block i in column block i of T
                for &(rl, s) in self.blocks.iter().take_while(|b| b.0 < ri) {
                    rhs -= t.view((rl, ri), (s, p)).transpose() * z.view((rl, cj), (s, q));
                }
                // (Z T)_{ij}: columns left of block j in row block j of T
                for &(rl, s) in self.blocks.iter().take_while(|b| b.0 < cj) {
                    rhs -= z.view((ri, rl), (p, s)) * t.view((rl, cj), (s, q));
                }
                let tii = t.view((ri, ri), (p, p)).transpose();
                let tjj = t.view((cj, cj), (q, q));
                let block = solve_small_sylvester(&tii.into_owned(), &tjj.into_owned(), &rhs)?;
                z.view_mut((ri, cj), (p, q)).copy_from(&block);
            }
        }
        let z = &self.u * z * self.u.transpose();
        Ok(matops::symmetric_part(&z))
    }
}

/// Solves `A X + X B = R` for blocks of order at most two via the Kronecker form.
fn solve_small_sylvester(a: &Matrix, b: &Matrix, r: &Matrix) -> Result<Matrix, LyapunovError> {
    let (p, q) = (a.nrows(), b.nrows());
    let mut k = Matrix::zeros(p * q, p * q);
    // column-major vec: vec(A X) = (I_q kron A) vec X, vec(X B) = (B^T kron I_p) vec X
    for col in 0..q {
        for i in 0..p {
            for j in 0..p {
                k[(col * p + i, col * p + j)] += a[(i, j)];
            }
        }
    }
    for bc in 0..q {
        for br in 0..q {
            for i in 0..p {
                k[(bc * p + i, br * p + i)] += b[(br, bc)];
            }
        }
    }
    let rhs = Matrix::from_column_slice(p * q, 1, r.as_slice());
    let x = matops::solve_linear(&k, &rhs)?;
    Ok(Matrix::from_column_slice(p, q, x.as_slice()))
}

/// Symmetric solution of `A_cl P + P^T A_cl + W = 0`.
///
/// `A_cl` must be symmetric (within the relative symmetry tolerance) and
/// Hurwitz, `W` positive definite. For symmetric `A_cl` this coincides with
/// the Lyapunov equation `A_cl^T P + P A_cl + W = 0`, which has a unique
/// symmetric solution.
pub fn solve_p_hat(a_cl: &Matrix, w: &Matrix) -> Result<Matrix, LyapunovError> {
    matops::ensure_square(a_cl)?;
    let asym = matops::symmetry_residual(a_cl);
    if asym > matops::sym_tol(a_cl) {
        return Err(LyapunovError::NotSymmetric(asym));
    }
    if matops::symmetry_residual(w) > matops::sym_tol(w) || !matops::is_positive_definite(w) {
        return Err(LyapunovError::NotPositiveDefinite);
    }
    solve_lyapunov(a_cl, w)
}

/// `||A P + P^T A + W||_F`.
pub fn p_hat_residual(a_cl: &Matrix, p_hat: &Matrix, w: &Matrix) -> f64 {
    (a_cl * p_hat + p_hat.transpose() * a_cl + w).norm()
}

/// Acceptance threshold for [`p_hat_residual`].
///
/// The solve is exact for `A^T`; a closed loop that is symmetric only to
/// rounding adds `||A - A^T|| ||P||` on top of the usual tolerance.
pub fn p_hat_tol(a_cl: &Matrix, p_hat: &Matrix, w: &Matrix) -> f64 {
    lyap_tol(w) + (a_cl - a_cl.transpose()).norm() * p_hat.norm()
}

/// Stabilizing solution of `A^T P + P A + Q - P B R^-1 B^T P = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CareSolution {
    pub p_star: Matrix,
    pub k_star: Matrix,
    /// Final Frobenius residual of the Riccati equation.
    pub residual: f64,
    /// Residual after each Newton step.
    pub residual_history: Vec<f64>,
}

impl CareSolution {
    /// Optimal cost `x0^T P* x0`.
    pub fn j_star_of(&self, x0: &Vector) -> f64 {
        matops::quadratic_form(&self.p_star, x0)
    }
}

pub fn care_tol(cost: &QuadraticCost) -> f64 {
    CARE_TOL_FACTOR * (1.0 + matops::frobenius(cost.q()))
}

pub fn care_residual(sys: &LtiSystem, cost: &QuadraticCost, p: &Matrix) -> f64 {
    let a = sys.a();
    let s = cost.input_weight(sys);
    (a.transpose() * p + p * a + cost.q() - p * s * p).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CareOptions {
    pub max_iter: usize,
}

impl Default for CareOptions {
    fn default() -> Self {
        Self { max_iter: 100 }
    }
}

pub fn solve_care(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    k0: Option<&Matrix>,
) -> Result<CareSolution, LyapunovError> {
    solve_care_with(sys, cost, k0, CareOptions::default())
}

/// Newton-Kleinman iteration: each step solves
/// `(A - B K)^T P + P (A - B K) + Q + K^T R K = 0` and sets `K = R^-1 B^T P`.
///
/// Without a seed gain, a Hurwitz `A` starts from `K = 0`; otherwise a
/// stabilizing gain is obtained from the stabilization LMI.
pub fn solve_care_with(
    sys: &LtiSystem,
    cost: &QuadraticCost,
    k0: Option<&Matrix>,
    opts: CareOptions,
) -> Result<CareSolution, LyapunovError> {
    cost.check_against(sys)
        .map_err(|e| LyapunovError::DimensionMismatch(e.to_string()))?;
    let (a, b) = (sys.a(), sys.b());
    let mut k = match k0 {
        Some(k) => {
            if k.shape() != (sys.m(), sys.n()) {
                return Err(LyapunovError::DimensionMismatch(format!(
                    "seed gain must be {}x{}",
                    sys.m(),
                    sys.n()
                )));
            }
            k.clone()
        }
        None => seed_gain(sys, cost)?,
    };
    let seed_check = matops::is_hurwitz(&(a - b * &k))?;
    if !seed_check.hurwitz {
        return Err(LyapunovError::NoStabilizingSeed(format!(
            "seed closed loop has spectral abscissa {:.6e}",
            seed_check.abscissa
        )));
    }

    let tol = care_tol(cost);
    let mut history = Vec::new();
    let mut best: Option<(f64, Matrix)> = None;
    for iteration in 0..opts.max_iter {
        let a_k = a - b * &k;
        let c = cost.q() + k.transpose() * cost.r() * &k;
        let p = solve_lyapunov(&a_k, &matops::symmetric_part(&c))?;
        k = cost.r_inv() * b.transpose() * &p;
        let residual = care_residual(sys, cost, &p);
        log::debug!("newton-kleinman step {iteration}: residual {residual:.3e}");
        history.push(residual);
        let improved = best.as_ref().is_none_or(|(r, _)| residual < *r);
        if improved {
            best = Some((residual, p));
        }
        if residual <= tol {
            break;
        }
        // stagnation at rounding level
        if !improved && iteration > 2 {
            break;
        }
    }
    let (residual, p) = best.expect("at least one Newton step");
    if residual > tol {
        return Err(LyapunovError::IterationLimit {
            iterations: history.len(),
            residual,
        });
    }
    let k_star = cost.r_inv() * b.transpose() * &p;
    Ok(CareSolution {
        p_star: p,
        k_star,
        residual,
        residual_history: history,
    })
}

fn seed_gain(sys: &LtiSystem, cost: &QuadraticCost) -> Result<Matrix, LyapunovError> {
    if matops::is_hurwitz(sys.a())?.hurwitz {
        return Ok(Matrix::zeros(sys.m(), sys.n()));
    }
    crate::design::stabilizing_gain(sys, cost, &crate::design::DesignOptions::default())
        .map_err(|e| LyapunovError::NoStabilizingSeed(e.to_string()))
}
